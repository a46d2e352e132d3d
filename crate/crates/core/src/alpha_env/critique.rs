use std::fmt;

use serde::{Deserialize, Serialize};

/// The six critique templates, in policy-head order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CritiqueKind {
    Reorder,
    Replace,
    Add,
    Repeat,
    Remove,
    Nothing,
}

impl CritiqueKind {
    pub const ALL: [CritiqueKind; 6] = [
        CritiqueKind::Reorder,
        CritiqueKind::Replace,
        CritiqueKind::Add,
        CritiqueKind::Repeat,
        CritiqueKind::Remove,
        CritiqueKind::Nothing,
    ];

    /// The five kinds that corrupt a list.
    pub const CORRUPTING: [CritiqueKind; 5] = [
        CritiqueKind::Reorder,
        CritiqueKind::Replace,
        CritiqueKind::Add,
        CritiqueKind::Repeat,
        CritiqueKind::Remove,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn has_slot_a(self) -> bool {
        self != CritiqueKind::Nothing
    }

    pub fn has_slot_b(self) -> bool {
        self == CritiqueKind::Replace
    }

    /// Tie-break order used by the gold oracle.
    pub(crate) fn oracle_rank(self) -> u8 {
        match self {
            CritiqueKind::Remove => 0,
            CritiqueKind::Add => 1,
            CritiqueKind::Repeat => 2,
            CritiqueKind::Replace => 3,
            CritiqueKind::Reorder => 4,
            CritiqueKind::Nothing => 5,
        }
    }
}

impl fmt::Display for CritiqueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CritiqueKind::Reorder => "REORDER",
            CritiqueKind::Replace => "REPLACE",
            CritiqueKind::Add => "ADD",
            CritiqueKind::Repeat => "REPEAT",
            CritiqueKind::Remove => "REMOVE",
            CritiqueKind::Nothing => "NOTHING",
        };
        f.write_str(s)
    }
}

/// A structured critique. Slot arity is carried by the variant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Critique {
    /// The word is placed in an incorrect position.
    Reorder(String),
    /// `original` was replaced with `imposter`.
    Replace { original: String, imposter: String },
    /// The word is not in the original list.
    Add(String),
    /// The word is repeated.
    Repeat(String),
    /// The word is missing.
    Remove(String),
    Nothing,
}

impl Critique {
    pub fn kind(&self) -> CritiqueKind {
        match self {
            Critique::Reorder(_) => CritiqueKind::Reorder,
            Critique::Replace { .. } => CritiqueKind::Replace,
            Critique::Add(_) => CritiqueKind::Add,
            Critique::Repeat(_) => CritiqueKind::Repeat,
            Critique::Remove(_) => CritiqueKind::Remove,
            Critique::Nothing => CritiqueKind::Nothing,
        }
    }

    pub fn slot_a(&self) -> Option<&str> {
        match self {
            Critique::Reorder(a)
            | Critique::Add(a)
            | Critique::Repeat(a)
            | Critique::Remove(a)
            | Critique::Replace { original: a, .. } => Some(a),
            Critique::Nothing => None,
        }
    }

    pub fn slot_b(&self) -> Option<&str> {
        match self {
            Critique::Replace { imposter, .. } => Some(imposter),
            _ => None,
        }
    }

    /// Builds a critique from a kind and slot words; `None` on arity mismatch.
    pub fn from_parts(kind: CritiqueKind, a: Option<&str>, b: Option<&str>) -> Option<Self> {
        let own = |s: &str| s.to_owned();
        Some(match (kind, a, b) {
            (CritiqueKind::Nothing, None, None) => Critique::Nothing,
            (CritiqueKind::Reorder, Some(a), None) => Critique::Reorder(own(a)),
            (CritiqueKind::Add, Some(a), None) => Critique::Add(own(a)),
            (CritiqueKind::Repeat, Some(a), None) => Critique::Repeat(own(a)),
            (CritiqueKind::Remove, Some(a), None) => Critique::Remove(own(a)),
            (CritiqueKind::Replace, Some(a), Some(b)) => Critique::Replace {
                original: own(a),
                imposter: own(b),
            },
            _ => return None,
        })
    }
}

impl fmt::Display for Critique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_critique(self))
    }
}

pub fn render_critique(critique: &Critique) -> String {
    match critique {
        Critique::Reorder(a) => format!("The word {a} is placed in an incorrect position."),
        Critique::Replace { original, imposter } => {
            format!("The word {original} is replaced with {imposter}")
        }
        Critique::Remove(a) => format!("The word {a} is missing"),
        Critique::Repeat(a) => format!("The word {a} is repeated"),
        Critique::Add(a) => format!("The word {a} is not in the original list"),
        Critique::Nothing => "The list is correctly sorted.".to_owned(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("text does not match any critique template: {0:?}")]
pub struct ParseError(pub String);

fn single_word(s: &str) -> Option<&str> {
    (!s.is_empty() && !s.contains(char::is_whitespace)).then_some(s)
}

/// Case-insensitive inverse of [`render_critique`]; a trailing period is optional.
pub fn parse_critique(text: &str) -> Result<Critique, ParseError> {
    let fail = || ParseError(text.to_owned());
    let lowered = text.trim().to_lowercase();
    let body = lowered.strip_suffix('.').unwrap_or(&lowered).trim_end();
    if body == "the list is correctly sorted" {
        return Ok(Critique::Nothing);
    }
    let rest = body.strip_prefix("the word ").ok_or_else(fail)?;
    let (word, tail) = rest.split_once(' ').ok_or_else(fail)?;
    let word = single_word(word).ok_or_else(fail)?;
    let critique = match tail {
        "is placed in an incorrect position" => Critique::Reorder(word.to_owned()),
        "is missing" => Critique::Remove(word.to_owned()),
        "is repeated" => Critique::Repeat(word.to_owned()),
        "is not in the original list" => Critique::Add(word.to_owned()),
        _ => {
            let imposter = tail.strip_prefix("is replaced with ").ok_or_else(fail)?;
            let imposter = single_word(imposter).ok_or_else(fail)?;
            Critique::Replace {
                original: word.to_owned(),
                imposter: imposter.to_owned(),
            }
        }
    };
    Ok(critique)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_templates() {
        assert_eq!(
            render_critique(&Critique::Repeat("house".into())),
            "The word house is repeated"
        );
        assert_eq!(
            render_critique(&Critique::Nothing),
            "The list is correctly sorted."
        );
        assert_eq!(
            render_critique(&Critique::Add("hair".into())),
            "The word hair is not in the original list"
        );
        assert_eq!(
            render_critique(&Critique::Reorder("greek".into())),
            "The word greek is placed in an incorrect position."
        );
        assert_eq!(
            render_critique(&Critique::Replace {
                original: "mug".into(),
                imposter: "mud".into()
            }),
            "The word mug is replaced with mud"
        );
        assert_eq!(
            render_critique(&Critique::Remove("house".into())),
            "The word house is missing"
        );
    }

    #[test]
    fn parses_templates() {
        assert_eq!(
            parse_critique("The word house is missing").unwrap(),
            Critique::Remove("house".into())
        );
        assert_eq!(
            parse_critique("the list is correctly sorted").unwrap(),
            Critique::Nothing
        );
        assert_eq!(
            parse_critique("The word mug is replaced with mud.").unwrap(),
            Critique::Replace {
                original: "mug".into(),
                imposter: "mud".into()
            }
        );
        assert!(parse_critique("fix it please").is_err());
        assert!(parse_critique("The word  is missing").is_err());
        assert!(parse_critique("Improve the answer.").is_err());
    }

    #[test]
    fn kind_index_round_trips() {
        for k in CritiqueKind::ALL {
            assert_eq!(CritiqueKind::from_index(k.index()), Some(k));
        }
        assert_eq!(CritiqueKind::from_index(6), None);
    }

    fn arb_critique() -> impl Strategy<Value = Critique> {
        let w = "[a-z]{1,10}";
        prop_oneof![
            Just(Critique::Nothing),
            w.prop_map(Critique::Reorder),
            w.prop_map(Critique::Add),
            w.prop_map(Critique::Repeat),
            w.prop_map(Critique::Remove),
            (w, w).prop_map(|(original, imposter)| Critique::Replace { original, imposter }),
        ]
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(c in arb_critique()) {
            prop_assert_eq!(parse_critique(&render_critique(&c)).unwrap(), c);
        }
    }
}
