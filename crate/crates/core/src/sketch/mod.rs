//! Sketch sources: locating `sorry` holes, restoring the original theorem
//! header, and writing per-tactic variants.

mod document;
mod scan;
mod splice;

use thiserror::Error;

pub use document::{PositionEncoding, SketchDocument};
pub use scan::is_ident_char;
pub use splice::{header_span, splice_header, Source, SpliceError};

use scan::{lex, LexemeKind};

const SORRY: &str = "sorry";

/// A `sorry` token in code position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SorrySite {
    pub line: u32,
    pub character: u32,
    pub hole_index: usize,
    /// Byte offset of the token in the document it was found in.
    pub offset: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("no sorry token at {line}:{character}")]
pub struct StaleSite {
    pub line: u32,
    pub character: u32,
}

/// All `sorry` holes in document order, skipping comments, string and char
/// literals, and identifiers that merely contain the word.
pub fn find_sorry_positions(doc: &SketchDocument) -> Vec<SorrySite> {
    let text = doc.text();
    lex(text)
        .into_iter()
        .filter(|l| l.kind == LexemeKind::Word && &text[l.span.clone()] == SORRY)
        .enumerate()
        .map(|(hole_index, l)| {
            let (line, character) = doc.position_of(l.span.start);
            SorrySite {
                line,
                character,
                hole_index,
                offset: l.span.start,
            }
        })
        .collect()
}

/// Replaces the hole at `site` with `tactic`. The site is re-resolved from its
/// (line, character) so a site taken from an older revision is rejected
/// unless a hole still sits at that exact position.
pub fn substitute_tactic(
    doc: &SketchDocument,
    site: &SorrySite,
    tactic: &str,
) -> Result<SketchDocument, StaleSite> {
    let stale = StaleSite {
        line: site.line,
        character: site.character,
    };
    let offset = doc.offset_of(site.line, site.character).ok_or_else(|| stale.clone())?;
    let is_hole = find_sorry_positions(doc).iter().any(|s| s.offset == offset);
    if !is_hole {
        return Err(stale);
    }
    Ok(doc.replace_range(offset..offset + SORRY.len(), tactic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{random_sketch_text, sorry_offsets};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sites(text: &str) -> Vec<(u32, u32)> {
        find_sorry_positions(&SketchDocument::new("u", text))
            .iter()
            .map(|s| (s.line, s.character))
            .collect()
    }

    #[test]
    fn single_hole() {
        assert_eq!(sites("theorem t : 1 = 1 := by sorry"), vec![(0, 24)]);
    }

    #[test]
    fn comment_excluded() {
        assert_eq!(sites("-- sorry\nexample := by sorry"), vec![(1, 14)]);
    }

    #[test]
    fn no_holes() {
        assert!(sites("theorem t : True := trivial").is_empty());
        assert!(sites("").is_empty());
    }

    #[test]
    fn identifier_substrings_are_not_holes() {
        assert!(sites("exact sorryAx _ sorry_lemma my_sorry sorry' h.sorry₁").is_empty());
        assert_eq!(sites("(sorry)"), vec![(0, 1)]);
        assert_eq!(sites("⟨sorry, sorry⟩"), vec![(0, 1), (0, 8)]);
    }

    #[test]
    fn columns_count_utf16_units() {
        // 𝔽 takes two UTF-16 units
        assert_eq!(sites("have : 𝔽 := sorry"), vec![(0, 13)]);
        let doc = SketchDocument::with_encoding("u", "have : 𝔽 := sorry", PositionEncoding::Scalar);
        assert_eq!(find_sorry_positions(&doc)[0].character, 12);
    }

    const TWO_HOLES: &str = "theorem t : A ∧ B := by\n  constructor\n  · sorry\n  · sorry\n";

    #[test]
    fn substitution_is_local() {
        let doc = SketchDocument::new("u", TWO_HOLES);
        let holes = find_sorry_positions(&doc);
        let edited = substitute_tactic(&doc, &holes[0], "norm_num").unwrap();
        let after = find_sorry_positions(&edited);
        assert_eq!(after.len(), 1);
        assert_eq!((after[0].line, after[0].character), (holes[1].line, holes[1].character));
        assert!(edited.text().contains("· norm_num\n"));
    }

    #[test]
    fn stale_site_is_rejected() {
        let doc = SketchDocument::new("u", TWO_HOLES);
        let holes = find_sorry_positions(&doc);
        let edited = substitute_tactic(&doc, &holes[0], "omega").unwrap();
        assert_eq!(
            substitute_tactic(&edited, &holes[0], "simp"),
            Err(StaleSite { line: 2, character: 4 })
        );
        let past_end = SorrySite {
            line: 40,
            character: 0,
            hole_index: 0,
            offset: 0,
        };
        assert!(substitute_tactic(&doc, &past_end, "simp").is_err());
    }

    #[test]
    fn substitution_counts() {
        let text = "theorem t : P := by\n  have a := by sorry\n  have b := by sorry\n  exact (sorry)\n";
        let mut doc = SketchDocument::new("u", text);
        let total = find_sorry_positions(&doc).len();
        assert_eq!(total, 3);
        for k in 0..total {
            assert_eq!(find_sorry_positions(&doc).len(), total - k);
            let first = find_sorry_positions(&doc)[0];
            doc = substitute_tactic(&doc, &first, "omega").unwrap();
        }
        assert!(find_sorry_positions(&doc).is_empty());
    }

    #[test]
    fn splice_keeps_holes_after_header() {
        let statement = "theorem t (h₁ : 0 < 1) : True :=";
        let sketch = SketchDocument::new("u", "theorem t (h1 : 0 < 1) : True := by\n  sorry\n");
        let spliced = splice_header(statement, &sketch).unwrap();
        let before = &sketch.text()[header_span(sketch.text(), Source::Sketch).unwrap().end..];
        let after = &spliced.text()[header_span(spliced.text(), Source::Sketch).unwrap().end..];
        assert_eq!(before, after);
        assert_eq!(find_sorry_positions(&spliced).len(), 1);
    }

    #[test]
    fn agrees_with_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x50_22_7e);
        for case in 0..1000 {
            let text = random_sketch_text(&mut rng);
            let doc = SketchDocument::new("u", text.as_str());
            let got: Vec<usize> = find_sorry_positions(&doc).iter().map(|s| s.offset).collect();
            assert_eq!(got, sorry_offsets(&text), "case {case}: {text:?}");
        }
    }

    #[test]
    fn oracle_agrees_on_handwritten_examples() {
        for text in [
            "-- sorry\nexample := by sorry",
            "/- /- sorry -/ sorry -/ sorry",
            "\"sorry\" sorry",
            "'s' sorry 'sorry'",
            "h'sorry sorry'",
        ] {
            let got: Vec<usize> = find_sorry_positions(&SketchDocument::new("u", text))
                .iter()
                .map(|s| s.offset)
                .collect();
            assert_eq!(got, sorry_offsets(text), "{text:?}");
        }
    }
}
