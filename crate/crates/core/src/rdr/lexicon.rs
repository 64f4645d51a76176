use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::{LabelMode, LabeledSequence};

pub const LEXICON_MAGIC: &str = "segtag-lexicon";
pub const LEXICON_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexEntry {
    pub best: String,
    pub counts: BTreeMap<String, u32>,
}

/// Most frequent training label of every token, plus a corpus-wide default
/// for unseen tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    mode: LabelMode,
    entries: HashMap<String, LexEntry>,
    default: String,
}

/// Highest count wins; equal counts go to the lexicographically smallest label.
fn argmax(counts: &BTreeMap<String, u32>) -> &str {
    let mut best: Option<(&str, u32)> = None;
    for (label, &n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((label, n));
        }
    }
    best.map(|(l, _)| l).expect("non-empty counts")
}

impl Lexicon {
    fn from_counts(
        mode: LabelMode,
        counts: HashMap<String, BTreeMap<String, u32>>,
        default: String,
    ) -> Self {
        let entries = counts
            .into_iter()
            .map(|(token, counts)| {
                let best = argmax(&counts).to_string();
                (token, LexEntry { best, counts })
            })
            .collect();
        Self {
            mode,
            entries,
            default,
        }
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn default_label(&self) -> &str {
        &self.default
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, token: &str) -> Option<&LexEntry> {
        self.entries.get(token)
    }

    pub fn label_of(&self, token: &str) -> &str {
        self.entries.get(token).map_or(&self.default, |e| &e.best)
    }

    pub(crate) fn write_body(&self, out: &mut String) {
        let _ = writeln!(out, "default {}", self.default);
        let _ = writeln!(out, "entries {}", self.entries.len());
        let mut tokens: Vec<&String> = self.entries.keys().collect();
        tokens.sort();
        for token in tokens {
            out.push_str(token);
            out.push('\t');
            for (k, (label, n)) in self.entries[token].counts.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{label}:{n}");
            }
            out.push('\n');
        }
    }

    pub(crate) fn read_body<'a>(
        mode: LabelMode,
        lines: &mut impl Iterator<Item = &'a str>,
    ) -> Result<Self> {
        let mut next = || {
            lines
                .next()
                .ok_or_else(|| Error::CorruptModel("unexpected end of lexicon".into()))
        };
        let check = |label: &str| {
            mode.validate(label)
                .map_err(|e| Error::CorruptModel(e.to_string()))
        };
        let default = next()?
            .strip_prefix("default ")
            .ok_or_else(|| Error::CorruptModel("missing default label".into()))?
            .to_string();
        check(&default)?;
        let n: usize = next()?
            .strip_prefix("entries ")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::CorruptModel("missing entry count".into()))?;
        let mut counts = HashMap::with_capacity(n);
        for _ in 0..n {
            let line = next()?;
            let (token, cells) = line
                .split_once('\t')
                .ok_or_else(|| Error::CorruptModel(format!("bad lexicon line {line:?}")))?;
            let mut table = BTreeMap::new();
            for cell in cells.split(' ') {
                let (label, n) = cell
                    .rsplit_once(':')
                    .and_then(|(l, n)| Some((l, n.parse::<u32>().ok()?)))
                    .ok_or_else(|| Error::CorruptModel(format!("bad count {cell:?}")))?;
                check(label)?;
                table.insert(label.to_string(), n);
            }
            if table.is_empty() || table.values().all(|&n| n == 0) {
                return Err(Error::CorruptModel(format!("no counts for {token:?}")));
            }
            counts.insert(token.to_string(), table);
        }
        Ok(Self::from_counts(mode, counts, default))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{LEXICON_MAGIC}\nversion {LEXICON_VERSION}\nmode {}\n", self.mode);
        self.write_body(&mut out);
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mode = super::read_header(&mut lines, LEXICON_MAGIC, LEXICON_VERSION)?;
        let lex = Self::read_body(mode, &mut lines)?;
        if lines.next() != Some("end") {
            return Err(Error::CorruptModel("missing end marker".into()));
        }
        Ok(lex)
    }
}

/// Counts labels per token over the training data.
pub fn build_lexicon(train: &[LabeledSequence], mode: LabelMode) -> Result<Lexicon> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut counts: HashMap<String, BTreeMap<String, u32>> = HashMap::new();
    let mut global: BTreeMap<String, u32> = BTreeMap::new();
    for s in train {
        for (token, label) in s.tokens.iter().zip(&s.labels) {
            mode.validate(label)?;
            *counts
                .entry(token.clone())
                .or_default()
                .entry(label.clone())
                .or_default() += 1;
            *global.entry(label.clone()).or_default() += 1;
        }
    }
    if global.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let default = argmax(&global).to_string();
    Ok(Lexicon::from_counts(mode, counts, default))
}

/// Position-independent lookup of every token.
pub fn lexicon_tag<S: AsRef<str>>(lexicon: &Lexicon, tokens: &[S]) -> Vec<String> {
    tokens
        .iter()
        .map(|t| lexicon.label_of(t.as_ref()).to_string())
        .collect()
}

pub fn save_lexicon(lexicon: &Lexicon, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, lexicon.to_text()).map_err(|e| Error::file(path, e))
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Lexicon::from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(pairs: &[(&str, &str)]) -> LabeledSequence {
        LabeledSequence {
            tokens: pairs.iter().map(|p| p.0.to_string()).collect(),
            labels: pairs.iter().map(|p| p.1.to_string()).collect(),
        }
    }

    #[test]
    fn majority_label_and_tie_break() {
        let data = vec![
            seq(&[("thuế", "N"), ("thuế", "N"), ("x", "X")]),
            seq(&[("thuế", "N"), ("thuế", "V"), ("x", "A")]),
            seq(&[("x", "X"), ("x", "A"), ("y", "N")]),
        ];
        let lex = build_lexicon(&data, LabelMode::WordPos).unwrap();
        assert_eq!(lex.label_of("thuế"), "N");
        assert_eq!(lex.entry("thuế").unwrap().counts["V"], 1);
        assert_eq!(lex.label_of("x"), "A");
        // N: 4, X: 2, A: 2, V: 1
        assert_eq!(lex.default_label(), "N");
        assert_eq!(lex.label_of("unseen"), "N");
        assert_eq!(lexicon_tag(&lex, &["x", "zzz", "thuế"]), ["A", "N", "N"]);
    }

    #[test]
    fn text_round_trip() {
        let data = vec![seq(&[("a:b", "N"), ("c", "V"), ("c", "N")])];
        let lex = build_lexicon(&data, LabelMode::WordPos).unwrap();
        let text = lex.to_text();
        let back = Lexicon::from_text(&text).unwrap();
        assert_eq!(back, lex);
        assert_eq!(back.to_text(), text);
        assert!(matches!(
            Lexicon::from_text(&text[..text.len() - 5]),
            Err(Error::CorruptModel(_))
        ));
        let v2 = text.replacen("version 1", "version 2", 1);
        assert!(matches!(Lexicon::from_text(&v2), Err(Error::VersionMismatch { .. })));
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(
            build_lexicon(&[], LabelMode::WordPos),
            Err(Error::EmptyTrainingSet)
        ));
    }
}
