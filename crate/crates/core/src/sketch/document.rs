use std::ops::Range;

/// How the `character` half of a position is counted.
///
/// LSP defaults to UTF-16 code units; `Scalar` counts Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositionEncoding {
    #[default]
    Utf16,
    Scalar,
}

impl PositionEncoding {
    fn width(self, c: char) -> u32 {
        match self {
            PositionEncoding::Utf16 => c.len_utf16() as u32,
            PositionEncoding::Scalar => 1,
        }
    }
}

/// A sketch source file with a line index. Immutable; edits produce a new
/// document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchDocument {
    uri: String,
    text: String,
    line_starts: Vec<usize>,
    encoding: PositionEncoding,
}

impl SketchDocument {
    pub fn new(uri: impl Into<String>, text: impl Into<String>) -> Self {
        Self::with_encoding(uri, text, PositionEncoding::default())
    }

    pub fn with_encoding(
        uri: impl Into<String>,
        text: impl Into<String>,
        encoding: PositionEncoding,
    ) -> Self {
        let text = text.into();
        let line_starts = index_lines(&text);
        Self {
            uri: uri.into(),
            text,
            line_starts,
            encoding,
        }
    }

    pub fn uri(&self) -> &str {
        &self.uri
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn encoding(&self) -> PositionEncoding {
        self.encoding
    }

    /// Byte offsets at which each line starts. Always begins with 0.
    pub fn line_starts(&self) -> &[usize] {
        &self.line_starts
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }

    /// 0-based (line, character) of a byte offset that lies on a char boundary.
    pub fn position_of(&self, offset: usize) -> (u32, u32) {
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let start = self.line_starts[line];
        let character = self.text[start..offset]
            .chars()
            .map(|c| self.encoding.width(c))
            .sum();
        (line as u32, character)
    }

    /// Byte offset of a (line, character) position, if it addresses the start
    /// of a character on that line (or the line end).
    pub fn offset_of(&self, line: u32, character: u32) -> Option<usize> {
        let line = line as usize;
        let start = *self.line_starts.get(line)?;
        let end = self
            .line_starts
            .get(line + 1)
            .copied()
            .unwrap_or(self.text.len());
        let mut column = 0u32;
        for (i, c) in self.text[start..end].char_indices() {
            if column == character {
                return Some(start + i);
            }
            if column > character {
                return None;
            }
            column += self.encoding.width(c);
        }
        (column == character).then_some(end)
    }

    /// Returns a new document with `range` replaced by `replacement`.
    pub fn replace_range(&self, range: Range<usize>, replacement: &str) -> SketchDocument {
        let mut text = String::with_capacity(self.text.len() + replacement.len());
        text.push_str(&self.text[..range.start]);
        text.push_str(replacement);
        text.push_str(&self.text[range.end..]);
        SketchDocument::with_encoding(self.uri.clone(), text, self.encoding)
    }
}

fn index_lines(text: &str) -> Vec<usize> {
    std::iter::once(0)
        .chain(text.match_indices('\n').map(|(i, _)| i + 1))
        .collect()
}
