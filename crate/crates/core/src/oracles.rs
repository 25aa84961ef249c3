//! Brute-force reference implementations used to cross-check the scanner
//! and the schedulers. Written independently of the code they check and
//! kept deliberately naive.

use rand::Rng;

/// Byte offsets of every `sorry` in code position, found by a
/// character-by-character state machine that shares nothing with the lexer.
pub fn sorry_offsets(text: &str) -> Vec<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Code,
        Line,
        Block(u32),
        Str,
        StrEscape,
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut code = vec![false; chars.len()];
    let mut state = State::Code;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        let n = chars.get(i + 1).map(|p| p.1);
        match state {
            State::Code => {
                if c == '-' && n == Some('-') {
                    state = State::Line;
                    i += 2;
                    continue;
                }
                if c == '/' && n == Some('-') {
                    state = State::Block(1);
                    i += 2;
                    continue;
                }
                if c == '"' {
                    state = State::Str;
                    i += 1;
                    continue;
                }
                if c == '\'' && (i == 0 || !word_char(chars[i - 1].1)) {
                    if let Some(len) = char_literal(&chars[i..]) {
                        i += len;
                        continue;
                    }
                }
                code[i] = true;
            }
            State::Line => {
                if c == '\n' {
                    state = State::Code;
                    code[i] = true;
                }
            }
            State::Block(d) => {
                if c == '/' && n == Some('-') {
                    state = State::Block(d + 1);
                    i += 2;
                    continue;
                }
                if c == '-' && n == Some('/') {
                    state = if d == 1 { State::Code } else { State::Block(d - 1) };
                    i += 2;
                    continue;
                }
            }
            State::Str => {
                if c == '\\' {
                    state = State::StrEscape;
                } else if c == '"' {
                    state = State::Code;
                }
            }
            State::StrEscape => state = State::Str,
        }
        i += 1;
    }

    let target: Vec<char> = "sorry".chars().collect();
    let mut found = Vec::new();
    for start in 0..chars.len() {
        if start + 5 > chars.len() {
            break;
        }
        let window = &chars[start..start + 5];
        if window.iter().map(|p| p.1).ne(target.iter().copied()) {
            continue;
        }
        if !(start..start + 5).all(|k| code[k]) {
            continue;
        }
        // the char before must be a code boundary, or a non-code region end
        let left_ok = start == 0 || !code[start - 1] || !word_char(chars[start - 1].1);
        let right_ok = start + 5 == chars.len() || !code[start + 5] || !word_char(chars[start + 5].1);
        if left_ok && right_ok {
            found.push(chars[start].0);
        }
    }
    found
}

fn word_char(c: char) -> bool {
    matches!(c, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_' | '\'') || (c as u32 > 127 && c.is_alphanumeric())
}

/// `'x'` or `'\…'` closed within ten chars on the same line.
fn char_literal(rest: &[(usize, char)]) -> Option<usize> {
    let first = rest.get(1)?.1;
    if first == '\\' {
        let escaped = rest.get(2)?.1;
        if escaped == '\n' {
            return None;
        }
        for k in 3..12 {
            match rest.get(k)?.1 {
                '\'' => return Some(k + 1),
                '\n' => return None,
                _ => {}
            }
        }
        None
    } else if first == '\n' || first == '\'' {
        None
    } else {
        (rest.get(2)?.1 == '\'').then_some(3)
    }
}

const PIECES: &[&str] = &[
    "sorry", "sorry", "sorry", " ", " ", "\n", "-- ", "--", "/-", "-/", "/- ", " -/", "\"", "\\\"", "\\", "'", "'a'",
    "'\\n'", "h'", "sorryAx", "x_sorry", "sorry₁", "h₁", "α", "𝔽", "(", ")", ":=", "by", "theorem", "_", "-", "/", "é",
    "'\"'", "\\'",
];

/// Up to 40 fragments chosen to collide with every lexer edge case.
pub fn random_sketch_text<R: Rng + ?Sized>(rng: &mut R) -> String {
    let n = rng.random_range(0..40);
    (0..n).map(|_| PIECES[rng.random_range(0..PIECES.len())]).collect()
}

/// List scheduling by hand: each job goes to the worker that frees up
/// first, lowest index on ties.
pub fn list_schedule_makespan(durations: &[f64], workers: usize) -> f64 {
    let mut free = vec![0.0f64; workers];
    for d in durations {
        let (i, _) = free
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &t)| if t < best.1 { (i, t) } else { best });
        free[i] += d;
    }
    free.into_iter().fold(0.0, f64::max)
}

/// Each branch is a separate timeline that starts with the batch and ends
/// after its scaled CPU time; the reply goes out one latency after the
/// last branch event drains the outstanding count.
pub fn batch_finish_from_events(start: f64, cpus: &[f64], latency: f64, factor: f64) -> f64 {
    let mut events: Vec<(f64, i32)> = cpus.iter().map(|_| (start, 1)).collect();
    events.extend(cpus.iter().map(|c| (start + factor * c, -1)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut outstanding = 0;
    let mut drained_at = start;
    for (t, delta) in events {
        outstanding += delta;
        if outstanding == 0 {
            drained_at = t;
        }
    }
    drained_at + latency
}
