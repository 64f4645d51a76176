//! Word-level and syllable-level annotated text.
//!
//! A word-level corpus has one sentence per line, tokens `word/TAG` separated
//! by spaces, and `_` joining the syllables of a multi-syllable word:
//!
//! ```text
//! Cuộc/Nc điều_tra/V dường_như/X không/R tiến_triển/V ./CH
//! ```
//!
//! The syllable-level form assigns every syllable a combined tag, `B-<pos>`
//! for the first syllable of a word and `I-<pos>` for the rest:
//!
//! ```text
//! Cuộc/B-Nc điều/B-V tra/I-V dường/B-X như/I-X không/B-R tiến/B-V triển/I-V ./B-CH
//! ```

use std::fmt;
use std::str::FromStr;

use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// One white-space delimited orthographic unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable(String);

impl Syllable {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(invalid("syllable", text, "empty"));
        }
        if text.chars().any(|c| c.is_whitespace()) {
            return Err(invalid("syllable", text, "contains white space"));
        }
        if text.contains('_') {
            return Err(invalid("syllable", text, "contains '_'"));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A word: one or more syllables, rendered joined by `_`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    syllables: Vec<Syllable>,
}

impl Word {
    pub fn new(syllables: Vec<Syllable>) -> Result<Self> {
        if syllables.is_empty() {
            return Err(invalid("word", String::new(), "no syllables"));
        }
        Ok(Self { syllables })
    }

    /// Parses the underscore-joined form, e.g. `điều_tra`.
    pub fn parse(rendered: &str) -> Result<Self> {
        let syllables = rendered
            .split('_')
            .map(Syllable::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(syllables)
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.syllables.iter().enumerate() {
            if i > 0 {
                out.push('_');
            }
            out.push_str(s.as_str());
        }
        out
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A part-of-speech label such as `N`, `Nc` or `CH`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PosTag(String);

impl PosTag {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(invalid("POS tag", label, "empty"));
        }
        if label.contains('_') {
            return Err(invalid("POS tag", label, "contains '_'"));
        }
        if !label.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(invalid("POS tag", label, "must match [A-Za-z0-9]+"));
        }
        Ok(Self(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Word-boundary tag of a syllable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SegTag {
    /// First syllable of a word.
    B,
    /// Any later syllable of a word.
    I,
}

impl SegTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SegTag::B => "B",
            SegTag::I => "I",
        }
    }
}

impl FromStr for SegTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" => Ok(SegTag::B),
            "I" => Ok(SegTag::I),
            _ => Err(invalid("segmentation tag", s.to_string(), "expected B or I")),
        }
    }
}

impl fmt::Display for SegTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Segmentation and POS tag of one syllable, rendered `B-Nc`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CombinedTag {
    pub seg: SegTag,
    pub pos: PosTag,
}

impl CombinedTag {
    pub fn new(seg: SegTag, pos: PosTag) -> Self {
        Self { seg, pos }
    }
}

impl FromStr for CombinedTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (seg, pos) = s
            .split_once('-')
            .ok_or_else(|| invalid("combined tag", s.to_string(), "expected <B|I>-<pos>"))?;
        Ok(Self {
            seg: seg.parse()?,
            pos: PosTag::new(pos)?,
        })
    }
}

impl fmt::Display for CombinedTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.seg, self.pos)
    }
}

/// A sentence of POS-tagged words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordSentence {
    items: Vec<(Word, PosTag)>,
}

impl WordSentence {
    pub fn new(items: Vec<(Word, PosTag)>) -> Result<Self> {
        if items.is_empty() {
            return Err(invalid("sentence", String::new(), "no words"));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(Word, PosTag)] {
        &self.items
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.items.iter().map(|(w, _)| w)
    }

    pub fn tags(&self) -> impl Iterator<Item = &PosTag> {
        self.items.iter().map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn syllable_count(&self) -> usize {
        self.words().map(Word::len).sum()
    }
}

impl fmt::Display for WordSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (word, tag)) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{word}/{tag}")?;
        }
        Ok(())
    }
}

/// A sentence of syllables carrying combined tags.
///
/// Construction only requires a non-empty sequence; model output may be
/// ill-formed until it goes through [`crate::strategies::repair_tag_sequence`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SyllableSentence {
    items: Vec<(Syllable, CombinedTag)>,
}

impl SyllableSentence {
    pub fn new(items: Vec<(Syllable, CombinedTag)>) -> Result<Self> {
        if items.is_empty() {
            return Err(invalid("sentence", String::new(), "no syllables"));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(Syllable, CombinedTag)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of the first violation of the B/I invariants, if any.
    pub fn first_violation(&self) -> Option<usize> {
        first_violation(self.items.iter().map(|(_, t)| t))
    }
}

impl fmt::Display for SyllableSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (syl, tag)) in self.items.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{syl}/{tag}")?;
        }
        Ok(())
    }
}

pub(crate) fn first_violation<'a>(tags: impl Iterator<Item = &'a CombinedTag>) -> Option<usize> {
    let mut prev: Option<&PosTag> = None;
    for (i, tag) in tags.enumerate() {
        if tag.seg == SegTag::I && prev != Some(&tag.pos) {
            return Some(i);
        }
        prev = Some(&tag.pos);
    }
    None
}

/// An ordered collection of word-level sentences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<WordSentence>,
}

impl Corpus {
    pub fn new(sentences: Vec<WordSentence>) -> Self {
        Self { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.sentences.iter().map(WordSentence::len).sum()
    }

    pub fn syllable_count(&self) -> usize {
        self.sentences.iter().map(WordSentence::syllable_count).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

fn invalid(kind: &'static str, value: String, reason: &'static str) -> Error {
    Error::InvalidValue {
        kind,
        value,
        reason,
    }
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split([' ', '\t']).filter(|t| !t.is_empty())
}

fn split_token(line: usize, token: usize, raw: &str) -> Result<(&str, &str)> {
    let malformed = |reason: &str| Error::MalformedToken {
        line,
        token,
        reason: format!("{reason} in {raw:?}"),
    };
    let (word, tag) = raw
        .rsplit_once('/')
        .ok_or_else(|| malformed("no tag separator '/'"))?;
    if word.is_empty() {
        return Err(malformed("empty word part"));
    }
    if tag.is_empty() {
        return Err(malformed("empty tag part"));
    }
    if tag.contains('_') {
        return Err(malformed("tag contains '_'"));
    }
    Ok((word, tag))
}

fn parse_lines<T>(
    text: &str,
    mut parse_token: impl FnMut(&str, &str) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    let text: String = text.nfc().collect();
    let mut sentences = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let mut items = Vec::new();
        for (tok_no, raw) in tokens(line).enumerate() {
            let tok_no = tok_no + 1;
            let (left, right) = split_token(line_no, tok_no, raw)?;
            let item = parse_token(left, right).map_err(|e| Error::MalformedToken {
                line: line_no,
                token: tok_no,
                reason: e.to_string(),
            })?;
            items.push(item);
        }
        if !items.is_empty() {
            sentences.push(items);
        }
    }
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(sentences)
}

/// Parses a word-level corpus document.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let sentences = parse_lines(text, |word, tag| Ok((Word::parse(word)?, PosTag::new(tag)?)))?;
    Ok(Corpus::new(
        sentences
            .into_iter()
            .map(WordSentence::new)
            .collect::<Result<_>>()?,
    ))
}

/// Renders a corpus with single-space token separation and a trailing newline.
pub fn render_corpus(corpus: &Corpus) -> Result<String> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut out = String::new();
    for sentence in &corpus.sentences {
        out.push_str(&sentence.to_string());
        out.push('\n');
    }
    Ok(out)
}

/// Parses a syllable-level document (`syllable/B-TAG` tokens).
///
/// Sentences are not checked for B/I well-formedness here.
pub fn parse_syllable_corpus(text: &str) -> Result<Vec<SyllableSentence>> {
    let sentences = parse_lines(text, |syl, tag| Ok((Syllable::new(syl)?, tag.parse()?)))?;
    sentences.into_iter().map(SyllableSentence::new).collect()
}

pub fn render_syllable_corpus(sentences: &[SyllableSentence]) -> Result<String> {
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut out = String::new();
    for sentence in sentences {
        out.push_str(&sentence.to_string());
        out.push('\n');
    }
    Ok(out)
}

/// Parses unsegmented text: one sentence per line, syllables separated by
/// white space. Blank lines yield `None` so callers can keep line alignment.
pub fn parse_raw(text: &str) -> Result<Vec<Option<Vec<Syllable>>>> {
    let text: String = text.nfc().collect();
    text.lines()
        .enumerate()
        .map(|(line_no, line)| {
            let syllables = tokens(line)
                .enumerate()
                .map(|(tok_no, raw)| {
                    Syllable::new(raw).map_err(|e| Error::MalformedToken {
                        line: line_no + 1,
                        token: tok_no + 1,
                        reason: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((!syllables.is_empty()).then_some(syllables))
        })
        .collect()
}

pub fn to_syllable_repr(sentence: &WordSentence) -> SyllableSentence {
    let mut items = Vec::with_capacity(sentence.syllable_count());
    for (word, pos) in sentence.items() {
        for (k, syl) in word.syllables().iter().enumerate() {
            let seg = if k == 0 { SegTag::B } else { SegTag::I };
            items.push((syl.clone(), CombinedTag::new(seg, pos.clone())));
        }
    }
    SyllableSentence { items }
}

/// Collapses `B-x I-x ... I-x` runs back into words; rejects ill-formed input.
pub fn from_syllable_repr(sentence: &SyllableSentence) -> Result<WordSentence> {
    if let Some(pos) = sentence.first_violation() {
        return Err(Error::IllFormedTags(pos));
    }
    let mut items: Vec<(Word, PosTag)> = Vec::new();
    let mut current: Vec<Syllable> = Vec::new();
    let mut current_pos: Option<&PosTag> = None;
    for (syl, tag) in sentence.items() {
        if tag.seg == SegTag::B {
            if let Some(pos) = current_pos.take() {
                items.push((Word::new(std::mem::take(&mut current))?, pos.clone()));
            }
            current_pos = Some(&tag.pos);
        }
        current.push(syl.clone());
    }
    if let Some(pos) = current_pos {
        items.push((Word::new(current)?, pos.clone()));
    }
    WordSentence::new(items)
}

/// Takes the first `n_train` sentences for training and the remaining
/// `n_dev` for development.
pub fn split_dataset(corpus: &Corpus, n_train: usize, n_dev: usize) -> Result<DatasetSplit> {
    if n_train + n_dev != corpus.len() {
        return Err(Error::SplitMismatch {
            n_train,
            n_dev,
            total: corpus.len(),
        });
    }
    if n_train == 0 || n_dev == 0 {
        return Err(Error::InvalidConfig(format!(
            "train and dev sizes must both be at least 1 (got {n_train} and {n_dev})"
        )));
    }
    let (train, dev) = corpus.sentences.split_at(n_train);
    Ok(DatasetSplit {
        train: Corpus::new(train.to_vec()),
        dev: Corpus::new(dev.to_vec()),
        test: Corpus::default(),
    })
}

/// All syllables of the sentence in order, with word boundaries and tags dropped.
pub fn strip_segmentation(sentence: &WordSentence) -> Vec<Syllable> {
    sentence
        .words()
        .flat_map(|w| w.syllables().iter().cloned())
        .collect()
}
