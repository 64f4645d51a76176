//! Label modes shared by every backend, and the conversion of word-level
//! sentences into token/label sequences for each mode.

use std::fmt;
use std::str::FromStr;

use crate::corpus::{to_syllable_repr, CombinedTag, Corpus, PosTag, SegTag, WordSentence};
use crate::error::{Error, Result};

/// What a backend's tokens and labels are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelMode {
    /// Underscore-rendered words labeled with POS tags.
    WordPos,
    /// Syllables labeled with combined tags (`B-N`, `I-N`, ...).
    SyllableCombined,
    /// Syllables labeled `B` or `I`.
    SyllableSeg,
}

impl LabelMode {
    pub const ALL: [LabelMode; 3] = [
        LabelMode::WordPos,
        LabelMode::SyllableCombined,
        LabelMode::SyllableSeg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelMode::WordPos => "word-pos",
            LabelMode::SyllableCombined => "syllable-combined",
            LabelMode::SyllableSeg => "syllable-seg",
        }
    }

    /// Checks that `label` is a well-formed label for this mode.
    pub fn validate(self, label: &str) -> Result<()> {
        match self {
            LabelMode::WordPos => PosTag::new(label).map(drop),
            LabelMode::SyllableCombined => label.parse::<CombinedTag>().map(drop),
            LabelMode::SyllableSeg => label.parse::<SegTag>().map(drop),
        }
    }
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LabelMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidValue {
                kind: "label mode",
                value: s.to_string(),
                reason: "expected word-pos, syllable-combined or syllable-seg",
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSequence {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

impl LabeledSequence {
    pub fn from_sentence(sentence: &WordSentence, mode: LabelMode) -> Self {
        match mode {
            LabelMode::WordPos => Self {
                tokens: sentence.words().map(|w| w.render()).collect(),
                labels: sentence.tags().map(|t| t.to_string()).collect(),
            },
            LabelMode::SyllableCombined => {
                let (tokens, labels) = to_syllable_repr(sentence)
                    .items()
                    .iter()
                    .map(|(s, t)| (s.to_string(), t.to_string()))
                    .unzip();
                Self { tokens, labels }
            }
            LabelMode::SyllableSeg => {
                let (tokens, labels) = to_syllable_repr(sentence)
                    .items()
                    .iter()
                    .map(|(s, t)| (s.to_string(), t.seg.to_string()))
                    .unzip();
                Self { tokens, labels }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn labeled_corpus(corpus: &Corpus, mode: LabelMode) -> Vec<LabeledSequence> {
    corpus
        .sentences
        .iter()
        .map(|s| LabeledSequence::from_sentence(s, mode))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    #[test]
    fn modes_of_one_sentence() {
        let c = parse_corpus("thuế_thu_nhập/N cá_nhân/N").unwrap();
        let s = &c.sentences[0];
        let w = LabeledSequence::from_sentence(s, LabelMode::WordPos);
        assert_eq!(w.tokens, ["thuế_thu_nhập", "cá_nhân"]);
        assert_eq!(w.labels, ["N", "N"]);
        let j = LabeledSequence::from_sentence(s, LabelMode::SyllableCombined);
        assert_eq!(j.tokens, ["thuế", "thu", "nhập", "cá", "nhân"]);
        assert_eq!(j.labels, ["B-N", "I-N", "I-N", "B-N", "I-N"]);
        let g = LabeledSequence::from_sentence(s, LabelMode::SyllableSeg);
        assert_eq!(g.labels, ["B", "I", "I", "B", "I"]);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in LabelMode::ALL {
            assert_eq!(m.as_str().parse::<LabelMode>().unwrap(), m);
        }
        assert!("joint".parse::<LabelMode>().is_err());
        assert!(LabelMode::SyllableSeg.validate("B").is_ok());
        assert!(LabelMode::SyllableSeg.validate("B-N").is_err());
        assert!(LabelMode::SyllableCombined.validate("I-Nc").is_ok());
        assert!(LabelMode::WordPos.validate("B-N").is_err());
    }
}
