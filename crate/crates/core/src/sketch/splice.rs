use std::ops::Range;

use thiserror::Error;

use super::document::SketchDocument;
use super::scan::{lex, LexemeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Statement,
    Sketch,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpliceError {
    #[error("{0:?} contains no theorem declaration")]
    NoTheoremFound(Source),
    #[error("{0:?} contains {1} theorem declarations, expected one")]
    MultipleTheorems(Source, usize),
    #[error("{0:?} theorem header has no top-level `:=`")]
    UndelimitedHeader(Source),
}

/// Byte span of the single theorem header in `text`: from the `theorem`
/// keyword through the first `:=` outside any bracket.
pub fn header_span(text: &str, source: Source) -> Result<Range<usize>, SpliceError> {
    let lexemes = lex(text);
    let keywords: Vec<usize> = lexemes
        .iter()
        .enumerate()
        .filter(|(_, l)| l.kind == LexemeKind::Word && &text[l.span.clone()] == "theorem")
        .map(|(i, _)| i)
        .collect();
    let start_idx = match keywords.as_slice() {
        [] => return Err(SpliceError::NoTheoremFound(source)),
        [one] => *one,
        many => return Err(SpliceError::MultipleTheorems(source, many.len())),
    };

    let mut depth = 0i32;
    let rest = &lexemes[start_idx..];
    for (k, lexeme) in rest.iter().enumerate() {
        let LexemeKind::Symbol(c) = lexeme.kind else {
            continue;
        };
        match c {
            '(' | '[' | '{' | '⟨' | '⦃' => depth += 1,
            ')' | ']' | '}' | '⟩' | '⦄' => depth -= 1,
            ':' if depth == 0 => {
                if let Some(next) = rest.get(k + 1) {
                    if next.kind == LexemeKind::Symbol('=') && next.span.start == lexeme.span.end {
                        return Ok(rest[0].span.start..next.span.end);
                    }
                }
            }
            _ => {}
        }
    }
    Err(SpliceError::UndelimitedHeader(source))
}

/// Replaces the sketch's theorem header with the one from `formal_statement`,
/// byte for byte. Everything outside the header is preserved.
pub fn splice_header(
    formal_statement: &str,
    sketch: &SketchDocument,
) -> Result<SketchDocument, SpliceError> {
    let original = header_span(formal_statement, Source::Statement)?;
    let target = header_span(sketch.text(), Source::Sketch)?;
    Ok(sketch.replace_range(target, &formal_statement[original]))
}
