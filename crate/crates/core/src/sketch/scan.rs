//! A small Lean-aware lexer: just enough to tell code from comments and
//! literals, split identifiers, and keep bracket structure visible.
//!
//! Recognised non-code regions: `--` line comments, nested `/- … -/` block
//! comments (including doc comments), `"…"` strings with backslash escapes,
//! and `'c'` / `'\n'` character literals. Raw string literals are not
//! recognised.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LexemeKind {
    Word,
    Symbol(char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Lexeme {
    pub kind: LexemeKind,
    pub span: Range<usize>,
}

/// Characters that continue an identifier. Non-ASCII alphanumerics cover
/// Lean's letter-like identifiers and subscripts (`h₁`, `α`).
pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || (!c.is_ascii() && c.is_alphanumeric())
}

/// Splits `text` into code lexemes, dropping whitespace, comments and
/// literals.
pub(crate) fn lex(text: &str) -> Vec<Lexeme> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut prev: Option<char> = None;

    while let Some((i, c)) = chars.next() {
        let next = bytes.get(i + 1).copied();
        match c {
            '-' if next == Some(b'-') => {
                // line comment: runs to (not including) the newline
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                prev = Some(' ');
            }
            '/' if next == Some(b'-') => {
                chars.next();
                let mut depth = 1usize;
                while depth > 0 {
                    let Some((j, c)) = chars.next() else { break };
                    let after = bytes.get(j + 1).copied();
                    if c == '/' && after == Some(b'-') {
                        chars.next();
                        depth += 1;
                    } else if c == '-' && after == Some(b'/') {
                        chars.next();
                        depth -= 1;
                    }
                }
                prev = Some(' ');
            }
            '"' => {
                while let Some((_, c)) = chars.next() {
                    match c {
                        '\\' => {
                            chars.next();
                        }
                        '"' => break,
                        _ => {}
                    }
                }
                prev = Some('"');
            }
            '\'' if !prev.is_some_and(is_ident_char) && char_literal_len(&text[i..]).is_some() => {
                // skip the remaining characters of the literal
                let end = i + char_literal_len(&text[i..]).unwrap_or(1);
                while chars.peek().is_some_and(|&(j, _)| j < end) {
                    chars.next();
                }
                prev = Some('\'');
            }
            c if is_ident_char(c) => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, d)) = chars.peek() {
                    if !is_ident_char(d) {
                        break;
                    }
                    end = j + d.len_utf8();
                    chars.next();
                }
                out.push(Lexeme {
                    kind: LexemeKind::Word,
                    span: i..end,
                });
                prev = text[..end].chars().next_back();
            }
            c if c.is_whitespace() => prev = Some(c),
            c => {
                out.push(Lexeme {
                    kind: LexemeKind::Symbol(c),
                    span: i..i + c.len_utf8(),
                });
                prev = Some(c);
            }
        }
    }
    out
}

/// Byte length of a character literal starting at `s` (which begins with
/// `'`), or `None` when the quote is not a literal opener.
pub(crate) fn char_literal_len(s: &str) -> Option<usize> {
    let mut it = s.char_indices().skip(1);
    let (_, first) = it.next()?;
    if first == '\\' {
        // escape: \n, \t, \\, \', \x41, \u{1F600}
        let (_, escaped) = it.next()?;
        if escaped == '\n' {
            return None;
        }
        for (j, c) in it.take(9) {
            if c == '\'' {
                return Some(j + 1);
            }
            if c == '\n' {
                return None;
            }
        }
        None
    } else if first == '\n' || first == '\'' {
        None
    } else {
        let (j, c) = it.next()?;
        (c == '\'').then_some(j + 1)
    }
}
