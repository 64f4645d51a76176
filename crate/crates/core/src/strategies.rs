//! End-to-end tagging of unsegmented syllable input.
//!
//! The pipeline strategy segments with a B/I model and then tags the
//! underscore-joined words with a word-level model. The joint strategy
//! predicts one combined `B-x`/`I-x` tag per syllable and reads the words
//! off those tags.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::corpus::{from_syllable_repr, CombinedTag, PosTag, SegTag, Syllable, SyllableSentence, Word, WordSentence};
use crate::error::{Error, Result};
use crate::eval::sequence_score;
use crate::labels::{LabelMode, LabeledSequence};
use crate::rdr::{
    apply_rdr, build_lexicon, learn_rdr, lexicon_tag, Lexicon, RdrTree, DEFAULT_MIN_GAIN,
    LEXICON_MAGIC, TREE_MAGIC,
};
use crate::tagger::{
    train_averaged_perceptron, viterbi_decode, Constraint, EpochRecord, TrainConfig, TrainReport,
    WeightModel, MODEL_MAGIC,
};

/// Anything that maps a token sequence to one label per token.
pub trait Labeler: Sync {
    fn mode(&self) -> LabelMode;
    fn label(&self, tokens: &[String]) -> Result<Vec<String>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendKind {
    Feature,
    Rdr,
    Lexicon,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [BackendKind::Feature, BackendKind::Rdr, BackendKind::Lexicon];

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Feature => "feature",
            BackendKind::Rdr => "rdr",
            BackendKind::Lexicon => "lexicon",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidValue {
                kind: "backend",
                value: s.to_string(),
                reason: "expected feature, rdr or lexicon",
            })
    }
}

/// A trained model of any kind, in one label mode.
#[derive(Clone, Debug)]
pub enum Backend {
    Feature {
        model: WeightModel,
        constraint: Option<Constraint>,
    },
    Rdr(RdrTree),
    Lexicon(Lexicon),
}

impl Backend {
    /// Wraps a feature model with the hard constraint of its label mode.
    pub fn feature(model: WeightModel) -> Result<Self> {
        let constraint = Constraint::for_mode(model.inventory(), model.mode())?;
        Ok(Backend::Feature { model, constraint })
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Feature { .. } => BackendKind::Feature,
            Backend::Rdr(_) => BackendKind::Rdr,
            Backend::Lexicon(_) => BackendKind::Lexicon,
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Backend::Feature { model, .. } => model.to_text(),
            Backend::Rdr(tree) => tree.to_text(),
            Backend::Lexicon(lex) => lex.to_text(),
        }
    }

    /// Parses any model file, recognizing the kind from its first line.
    pub fn from_text(text: &str) -> Result<Self> {
        match text.lines().next() {
            Some(MODEL_MAGIC) => Self::feature(WeightModel::from_text(text)?),
            Some(TREE_MAGIC) => Ok(Backend::Rdr(RdrTree::from_text(text)?)),
            Some(LEXICON_MAGIC) => Ok(Backend::Lexicon(Lexicon::from_text(text)?)),
            _ => Err(Error::CorruptModel("unrecognized model header".into())),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_text(&text)
    }
}

impl Labeler for Backend {
    fn mode(&self) -> LabelMode {
        match self {
            Backend::Feature { model, .. } => model.mode(),
            Backend::Rdr(tree) => tree.mode(),
            Backend::Lexicon(lex) => lex.mode(),
        }
    }

    fn label(&self, tokens: &[String]) -> Result<Vec<String>> {
        match self {
            Backend::Feature { model, constraint } => viterbi_decode(model, tokens, constraint.as_ref()),
            Backend::Rdr(tree) => Ok(apply_rdr(tree, tokens)),
            Backend::Lexicon(lex) => Ok(lexicon_tag(lex, tokens)),
        }
    }
}

/// Training settings for every backend kind.
#[derive(Clone, Debug, PartialEq)]
pub struct BackendConfig {
    pub perceptron: TrainConfig,
    pub min_gain: u32,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            perceptron: TrainConfig::default(),
            min_gain: DEFAULT_MIN_GAIN,
        }
    }
}

fn labels_of(labeler: &Backend, data: &[LabeledSequence]) -> Result<Vec<Vec<String>>> {
    data.iter().map(|s| labeler.label(&s.tokens)).collect()
}

/// Trains a backend of the given kind in the given label mode. Rule and
/// lexicon backends report a single pseudo-epoch.
pub fn train_backend(
    kind: BackendKind,
    mode: LabelMode,
    train: &[LabeledSequence],
    dev: Option<&[LabeledSequence]>,
    config: &BackendConfig,
) -> Result<(Backend, TrainReport)> {
    let backend = match kind {
        BackendKind::Feature => {
            let (model, report) = train_averaged_perceptron(train, dev, mode, &config.perceptron)?;
            return Ok((Backend::feature(model)?, report));
        }
        BackendKind::Rdr => Backend::Rdr(learn_rdr(train, build_lexicon(train, mode)?, config.min_gain)?),
        BackendKind::Lexicon => Backend::Lexicon(build_lexicon(train, mode)?),
    };
    let predicted = labels_of(&backend, train)?;
    let correct: usize = train
        .iter()
        .zip(&predicted)
        .map(|(g, p)| g.labels.iter().zip(p).filter(|(a, b)| a == b).count())
        .sum();
    let total: usize = train.iter().map(LabeledSequence::len).sum();
    let dev_score = match dev {
        Some(dev) => Some(sequence_score(mode, dev, &labels_of(&backend, dev)?)?),
        None => None,
    };
    let report = TrainReport {
        epochs: vec![EpochRecord {
            epoch: 1,
            train_accuracy: correct as f64 / total.max(1) as f64,
            dev_score,
        }],
        best_epoch: 1,
        stopped_early: false,
    };
    Ok((backend, report))
}

/// Errors unless the labeler works in the `expected` mode.
pub fn require_mode(labeler: &(impl Labeler + ?Sized), expected: LabelMode) -> Result<()> {
    let found = labeler.mode();
    if found != expected {
        return Err(Error::ModeMismatch { expected, found });
    }
    Ok(())
}

fn label_checked(labeler: &(impl Labeler + ?Sized), tokens: &[String]) -> Result<Vec<String>> {
    let labels = labeler.label(tokens)?;
    if labels.len() != tokens.len() {
        return Err(Error::InvalidConfig(format!(
            "labeler returned {} labels for {} tokens",
            labels.len(),
            tokens.len()
        )));
    }
    Ok(labels)
}

/// Makes a combined tag sequence convertible to words: an initial `I` and
/// any `I-x` not continuing a word tagged `x` become `B-x`.
pub fn repair_tag_sequence(tags: &[CombinedTag]) -> Vec<CombinedTag> {
    let mut out: Vec<CombinedTag> = Vec::with_capacity(tags.len());
    for tag in tags {
        let continues = out.last().is_some_and(|prev| prev.pos == tag.pos);
        let seg = if tag.seg == SegTag::I && !continues {
            SegTag::B
        } else {
            tag.seg
        };
        out.push(CombinedTag::new(seg, tag.pos.clone()));
    }
    out
}

fn syllable_tokens(syllables: &[Syllable]) -> Result<Vec<String>> {
    if syllables.is_empty() {
        return Err(Error::InvalidConfig("cannot tag an empty sentence".into()));
    }
    Ok(syllables.iter().map(|s| s.to_string()).collect())
}

/// Groups syllables into words by B/I tags; the first syllable always
/// starts a word.
pub fn segment(syllables: &[Syllable], segmenter: &(impl Labeler + ?Sized)) -> Result<Vec<Word>> {
    require_mode(segmenter, LabelMode::SyllableSeg)?;
    let tokens = syllable_tokens(syllables)?;
    let marks = label_checked(segmenter, &tokens)?;
    let mut words: Vec<Vec<Syllable>> = Vec::new();
    for (syl, mark) in syllables.iter().zip(&marks) {
        match (mark.parse::<SegTag>()?, words.last_mut()) {
            (SegTag::I, Some(word)) => word.push(syl.clone()),
            _ => words.push(vec![syl.clone()]),
        }
    }
    words.into_iter().map(Word::new).collect()
}

/// A tagged sentence with wall time per stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyOutput {
    pub sentence: WordSentence,
    pub timings: Vec<(&'static str, Duration)>,
}

/// Segments, then tags the underscore-joined words as atomic tokens.
pub fn pipeline_tag(
    syllables: &[Syllable],
    segmenter: &(impl Labeler + ?Sized),
    tagger: &(impl Labeler + ?Sized),
) -> Result<StrategyOutput> {
    require_mode(tagger, LabelMode::WordPos)?;
    let start = Instant::now();
    let words = segment(syllables, segmenter)?;
    let segmented = start.elapsed();
    let start = Instant::now();
    let tokens: Vec<String> = words.iter().map(Word::render).collect();
    let tags = label_checked(tagger, &tokens)?;
    let items = words
        .into_iter()
        .zip(tags)
        .map(|(w, t)| Ok((w, PosTag::new(t)?)))
        .collect::<Result<Vec<_>>>()?;
    let sentence = WordSentence::new(items)?;
    Ok(StrategyOutput {
        sentence,
        timings: vec![("segment", segmented), ("tag", start.elapsed())],
    })
}

/// Predicts combined tags per syllable, repairs them if needed and reads off
/// the words.
pub fn joint_tag(syllables: &[Syllable], model: &(impl Labeler + ?Sized)) -> Result<StrategyOutput> {
    require_mode(model, LabelMode::SyllableCombined)?;
    let start = Instant::now();
    let tokens = syllable_tokens(syllables)?;
    let labels = label_checked(model, &tokens)?;
    let tags = labels
        .iter()
        .map(|l| l.parse::<CombinedTag>())
        .collect::<Result<Vec<_>>>()?;
    let decoded = start.elapsed();
    let start = Instant::now();
    let repaired = repair_tag_sequence(&tags);
    let items = syllables.iter().cloned().zip(repaired).collect();
    let sentence = from_syllable_repr(&SyllableSentence::new(items)?)?;
    Ok(StrategyOutput {
        sentence,
        timings: vec![("decode", decoded), ("convert", start.elapsed())],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Pipeline,
    Joint,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 2] = [StrategyKind::Pipeline, StrategyKind::Joint];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Pipeline => "pipeline",
            StrategyKind::Joint => "joint",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidValue {
                kind: "strategy",
                value: s.to_string(),
                reason: "expected pipeline or joint",
            })
    }
}

/// A strategy bound to its models.
#[derive(Clone, Copy)]
pub enum Strategy<'a> {
    Pipeline {
        segmenter: &'a dyn Labeler,
        tagger: &'a dyn Labeler,
    },
    Joint(&'a dyn Labeler),
}

impl Strategy<'_> {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Pipeline { .. } => StrategyKind::Pipeline,
            Strategy::Joint(_) => StrategyKind::Joint,
        }
    }

    /// Fails early if the models do not fit the strategy.
    pub fn check(&self) -> Result<()> {
        match self {
            Strategy::Pipeline { segmenter, tagger } => {
                require_mode(*segmenter, LabelMode::SyllableSeg)?;
                require_mode(*tagger, LabelMode::WordPos)
            }
            Strategy::Joint(model) => require_mode(*model, LabelMode::SyllableCombined),
        }
    }

    pub fn tag(&self, syllables: &[Syllable]) -> Result<StrategyOutput> {
        match self {
            Strategy::Pipeline { segmenter, tagger } => pipeline_tag(syllables, *segmenter, *tagger),
            Strategy::Joint(model) => joint_tag(syllables, *model),
        }
    }

    /// Tags every sentence, on `threads` worker threads when more than one.
    /// Output order and content do not depend on the thread count.
    pub fn tag_all(&self, inputs: &[Vec<Syllable>], threads: usize) -> Result<Vec<WordSentence>> {
        self.check()?;
        let run = |s: &Vec<Syllable>| self.tag(s).map(|o| o.sentence);
        parallel_map(inputs, threads, run)
    }
}

/// Order-preserving map, parallel when `threads > 1`.
pub fn parallel_map<T: Sync, U: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> Result<U> + Sync + Send,
) -> Result<Vec<U>> {
    if threads <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}
