//! Command-line front end. Exit codes: 0 success, 1 internal failure, 2
//! user or input error.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use sha2::{Digest, Sha256};

use crate::corpus::{parse_corpus, parse_raw, render_corpus, strip_segmentation, Corpus, Syllable};
use crate::error::{Error, Result};
use crate::eval::{bench_speed, compare_report, evaluate, System};
use crate::labels::{labeled_corpus, LabelMode};
use crate::strategies::{train_backend, Backend, BackendConfig, BackendKind, Strategy, StrategyKind};
use crate::synthetic::generate_synthetic_corpus;
use crate::tagger::{TrainConfig, TrainReport};

const JOINT_FILE: &str = "joint.model";
const SEGMENTER_FILE: &str = "segmenter.model";
const TAGGER_FILE: &str = "tagger.model";
const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "segtag", version, about = "Vietnamese word segmentation and POS tagging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train models for one strategy and backend into a model directory.
    Train(TrainArgs),
    /// Tag raw syllable text (one sentence per line).
    Tag(TagArgs),
    /// Score predicted word-level output against gold.
    Eval(EvalArgs),
    /// Measure end-to-end tagging speed in words per second.
    Bench(BenchArgs),
    /// Train and evaluate pipeline and joint systems for several backends.
    Compare(CompareArgs),
    /// Write a synthetic word-level corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainingOptions {
    /// pipeline or joint
    #[arg(long, default_value = "joint")]
    pub strategy: StrategyKind,
    /// feature, rdr or lexicon
    #[arg(long, default_value = "feature")]
    pub backend: BackendKind,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long = "min-gain", default_value_t = 2)]
    pub min_gain: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sentences used for training, taken from the start of the input.
    #[arg(long = "n-train")]
    pub n_train: Option<usize>,
    /// Sentences used for development, following the training sentences.
    #[arg(long = "n-dev")]
    pub n_dev: Option<usize>,
}

impl TrainingOptions {
    fn backend_config(&self) -> BackendConfig {
        BackendConfig {
            perceptron: TrainConfig {
                max_epochs: self.epochs,
                patience: self.patience,
                seed: self.seed,
                ..TrainConfig::default()
            },
            min_gain: self.min_gain,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Word-level training corpus ("word/TAG", syllables joined by "_").
    #[arg(long)]
    pub input: PathBuf,
    /// Model directory to create or overwrite.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub options: TrainingOptions,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    /// Raw text: one sentence per line, syllables separated by spaces.
    #[arg(long)]
    pub input: PathBuf,
    /// Model directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "joint")]
    pub strategy: StrategyKind,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Report file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Word-level corpus; only its syllables are fed to the taggers.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "joint")]
    pub strategy: StrategyKind,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Word-level corpus split into train, dev and (unless --test) test.
    #[arg(long)]
    pub input: PathBuf,
    /// Separate word-level test corpus.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Directory for report.txt, report.kv, timing.kv and the manifest.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Restrict to one strategy.
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
    /// Restrict to one backend.
    #[arg(long)]
    pub backend: Option<BackendKind>,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long = "min-gain", default_value_t = 2)]
    pub min_gain: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "n-train")]
    pub n_train: Option<usize>,
    #[arg(long = "n-dev")]
    pub n_dev: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub sentences: usize,
}

/// Exit status for an error: 1 for internal failures, 2 for everything the
/// user can fix.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io(_) | Error::NoFeasiblePath => 1,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Tag(a) => cmd_tag(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::file(
            path,
            io::Error::new(io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::file(
            path,
            io::Error::new(io::ErrorKind::NotFound, "no such directory"),
        ))
    }
}

/// The directory a new output file will land in must exist.
fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => require_dir(p),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::file(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => write(path, text),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let corpus = parse_corpus(&read(path)?)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Line-oriented `key=value` record of a run.
struct Manifest {
    text: String,
}

impl Manifest {
    fn new(command: &str) -> Self {
        let mut m = Self {
            text: "segtag-manifest 1\n".to_string(),
        };
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}={value}");
    }

    fn input(&mut self, key: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
        self.set(key, path.display());
        self.set(&format!("{key}.sha256"), sha256_hex(&bytes));
        Ok(())
    }

    fn trace(&mut self, prefix: &str, report: &TrainReport) {
        self.set(&format!("{prefix}.epochs_run"), report.epochs_run());
        self.set(&format!("{prefix}.best_epoch"), report.best_epoch);
        self.set(&format!("{prefix}.stopped_early"), report.stopped_early);
        for e in &report.epochs {
            self.set(
                &format!("{prefix}.epoch.{}.train_accuracy", e.epoch),
                format!("{:.6}", e.train_accuracy),
            );
            let dev = e.dev_score.map_or_else(|| "n/a".to_string(), |d| format!("{d:.6}"));
            self.set(&format!("{prefix}.epoch.{}.dev_score", e.epoch), dev);
        }
    }

    fn options(&mut self, o: &TrainingOptions) {
        self.set("strategy", o.strategy);
        self.set("backend", o.backend);
        self.set("epochs", o.epochs);
        self.set("patience", o.patience);
        self.set("min_gain", o.min_gain);
        self.set("seed", o.seed);
    }
}

/// First `n_train` sentences train, the next `n_dev` are held out for
/// early stopping. Without sizes, the last tenth (at least one sentence)
/// is the dev set when there are two or more sentences.
fn train_dev(corpus: &Corpus, n_train: Option<usize>, n_dev: Option<usize>) -> Result<(Corpus, Corpus)> {
    let total = corpus.len();
    let (n_train, n_dev) = match (n_train, n_dev) {
        (Some(t), Some(d)) => (t, d),
        (Some(t), None) => (t, total.saturating_sub(t)),
        (None, Some(d)) => (total.saturating_sub(d), d),
        (None, None) if total < 2 => (total, 0),
        (None, None) => {
            let d = (total / 10).max(1);
            (total - d, d)
        }
    };
    if n_train + n_dev != total {
        return Err(Error::SplitMismatch { n_train, n_dev, total });
    }
    if n_train == 0 {
        return Err(Error::InvalidConfig("no training sentences".into()));
    }
    let (train, dev) = corpus.sentences.split_at(n_train);
    Ok((Corpus::new(train.to_vec()), Corpus::new(dev.to_vec())))
}

fn train_one(
    kind: BackendKind,
    mode: LabelMode,
    train: &Corpus,
    dev: &Corpus,
    config: &BackendConfig,
) -> Result<(Backend, TrainReport)> {
    let train_seqs = labeled_corpus(train, mode);
    let dev_seqs = labeled_corpus(dev, mode);
    let dev = (!dev_seqs.is_empty()).then_some(dev_seqs.as_slice());
    info!("training {kind} backend in {mode} mode on {} sentences", train.len());
    train_backend(kind, mode, &train_seqs, dev, config)
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    require_file(&a.input)?;
    let corpus = read_corpus(&a.input)?;
    let (train, dev) = train_dev(&corpus, a.options.n_train, a.options.n_dev)?;
    fs::create_dir_all(&a.output).map_err(|e| Error::file(&a.output, e))?;
    let config = a.options.backend_config();

    let mut manifest = Manifest::new("train");
    manifest.input("input", &a.input)?;
    manifest.options(&a.options);
    manifest.set("n_train", train.len());
    manifest.set("n_dev", dev.len());
    match a.options.strategy {
        StrategyKind::Joint => {
            let (model, report) = train_one(a.options.backend, LabelMode::SyllableCombined, &train, &dev, &config)?;
            model.save(a.output.join(JOINT_FILE))?;
            manifest.set("model", JOINT_FILE);
            manifest.trace("joint", &report);
        }
        StrategyKind::Pipeline => {
            let (seg, seg_report) = train_one(BackendKind::Feature, LabelMode::SyllableSeg, &train, &dev, &config)?;
            let (tagger, report) = train_one(a.options.backend, LabelMode::WordPos, &train, &dev, &config)?;
            seg.save(a.output.join(SEGMENTER_FILE))?;
            tagger.save(a.output.join(TAGGER_FILE))?;
            manifest.set("segmenter", SEGMENTER_FILE);
            manifest.set("tagger", TAGGER_FILE);
            manifest.trace("segmenter", &seg_report);
            manifest.trace("tagger", &report);
        }
    }
    write(&a.output.join(MANIFEST_FILE), &manifest.text)
}

/// Models of a strategy, loaded from a model directory.
// one value per process; boxing would buy nothing
#[allow(clippy::large_enum_variant)]
enum Loaded {
    Pipeline { segmenter: Backend, tagger: Backend },
    Joint(Backend),
}

impl Loaded {
    fn load(dir: &Path, strategy: StrategyKind) -> Result<Self> {
        require_dir(dir)?;
        let need = |name: &str| {
            let path = dir.join(name);
            if path.is_file() {
                Ok(path)
            } else {
                Err(Error::InvalidConfig(format!(
                    "{} has no {name}; it was not trained for the {strategy} strategy",
                    dir.display()
                )))
            }
        };
        let loaded = match strategy {
            StrategyKind::Joint => Loaded::Joint(Backend::load(need(JOINT_FILE)?)?),
            StrategyKind::Pipeline => Loaded::Pipeline {
                segmenter: Backend::load(need(SEGMENTER_FILE)?)?,
                tagger: Backend::load(need(TAGGER_FILE)?)?,
            },
        };
        loaded.strategy().check()?;
        Ok(loaded)
    }

    fn strategy(&self) -> Strategy<'_> {
        match self {
            Loaded::Pipeline { segmenter, tagger } => Strategy::Pipeline { segmenter, tagger },
            Loaded::Joint(model) => Strategy::Joint(model),
        }
    }
}

fn write_side_manifest(output: Option<&Path>, manifest: &Manifest) -> Result<()> {
    if let Some(out) = output {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest");
        write(Path::new(&name), &manifest.text)?;
    }
    Ok(())
}

fn model_digests(manifest: &mut Manifest, dir: &Path, strategy: StrategyKind) -> Result<()> {
    let files: &[&str] = match strategy {
        StrategyKind::Joint => &[JOINT_FILE],
        StrategyKind::Pipeline => &[SEGMENTER_FILE, TAGGER_FILE],
    };
    for f in files {
        manifest.input(&format!("model.{f}"), &dir.join(f))?;
    }
    Ok(())
}

fn cmd_tag(a: &TagArgs) -> Result<()> {
    require_file(&a.input)?;
    if let Some(out) = &a.output {
        require_parent(out)?;
    }
    let models = Loaded::load(&a.model, a.strategy)?;
    let lines = parse_raw(&read(&a.input)?)?;
    let inputs: Vec<Vec<Syllable>> = lines.iter().flatten().cloned().collect();
    let tagged = models.strategy().tag_all(&inputs, a.threads)?;
    let mut tagged = tagged.into_iter();
    let mut out = String::new();
    for line in &lines {
        if line.is_some() {
            let _ = write!(out, "{}", tagged.next().expect("one output per sentence"));
        }
        out.push('\n');
    }
    emit(a.output.as_deref(), &out)?;

    let mut manifest = Manifest::new("tag");
    manifest.input("input", &a.input)?;
    manifest.set("strategy", a.strategy);
    manifest.set("threads", a.threads);
    model_digests(&mut manifest, &a.model, a.strategy)?;
    write_side_manifest(a.output.as_deref(), &manifest)
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    require_file(&a.gold)?;
    require_file(&a.pred)?;
    if let Some(out) = &a.output {
        require_parent(out)?;
    }
    let gold = parse_corpus(&read(&a.gold)?)?;
    let pred = parse_corpus(&read(&a.pred)?)?;
    let report = evaluate(&gold, &pred)?;
    emit(a.output.as_deref(), &report.render())?;

    let mut manifest = Manifest::new("eval");
    manifest.input("gold", &a.gold)?;
    manifest.input("pred", &a.pred)?;
    write_side_manifest(a.output.as_deref(), &manifest)
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    require_file(&a.input)?;
    if let Some(out) = &a.output {
        require_parent(out)?;
    }
    let corpus = read_corpus(&a.input)?;
    let models = Loaded::load(&a.model, a.strategy)?;
    let strategy = models.strategy();
    let inputs: Vec<Vec<Syllable>> = corpus.sentences.iter().map(strip_segmentation).collect();
    // timing starts only after every model is in memory
    let mut report = bench_speed(
        |_| Ok(strategy.tag_all(&inputs, a.threads)?.iter().map(|s| s.len()).sum()),
        &corpus,
        a.repetitions,
    )?;
    report.threads = a.threads.max(1);
    emit(a.output.as_deref(), &report.render())?;

    let mut manifest = Manifest::new("bench");
    manifest.input("input", &a.input)?;
    manifest.set("strategy", a.strategy);
    manifest.set("repetitions", a.repetitions);
    manifest.set("threads", a.threads);
    model_digests(&mut manifest, &a.model, a.strategy)?;
    write_side_manifest(a.output.as_deref(), &manifest)
}

/// Train, dev and test portions for `compare`.
fn compare_split(corpus: &Corpus, test: Option<Corpus>, a: &CompareArgs) -> Result<(Corpus, Corpus, Corpus)> {
    if let Some(test) = test {
        let (train, dev) = train_dev(corpus, a.n_train, a.n_dev)?;
        return Ok((train, dev, test));
    }
    let total = corpus.len();
    let (n_train, n_dev) = match (a.n_train, a.n_dev) {
        (Some(t), Some(d)) => (t, d),
        (t, d) => {
            let d = d.unwrap_or((total / 10).max(1));
            let t = t.unwrap_or(total.saturating_sub(2 * d));
            (t, d)
        }
    };
    if n_train == 0 || n_train + n_dev >= total {
        return Err(Error::InvalidConfig(format!(
            "cannot hold out a test set: {total} sentences, {n_train} train, {n_dev} dev"
        )));
    }
    let s = &corpus.sentences;
    Ok((
        Corpus::new(s[..n_train].to_vec()),
        Corpus::new(s[n_train..n_train + n_dev].to_vec()),
        Corpus::new(s[n_train + n_dev..].to_vec()),
    ))
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    require_file(&a.input)?;
    if let Some(t) = &a.test {
        require_file(t)?;
    }
    let corpus = read_corpus(&a.input)?;
    let test = a.test.as_deref().map(read_corpus).transpose()?;
    let (train, dev, test) = compare_split(&corpus, test, a)?;
    if let Some(out) = &a.output {
        fs::create_dir_all(out).map_err(|e| Error::file(out, e))?;
    }
    let config = BackendConfig {
        perceptron: TrainConfig {
            max_epochs: a.epochs,
            patience: a.patience,
            seed: a.seed,
            ..TrainConfig::default()
        },
        min_gain: a.min_gain,
    };
    let strategies: Vec<StrategyKind> = match a.strategy {
        Some(s) => vec![s],
        None => StrategyKind::ALL.to_vec(),
    };
    let backends: Vec<BackendKind> = match a.backend {
        Some(b) => vec![b],
        None => BackendKind::ALL.to_vec(),
    };

    let mut manifest = Manifest::new("compare");
    manifest.input("input", &a.input)?;
    if let Some(t) = &a.test {
        manifest.input("test", t)?;
    }
    manifest.set("epochs", a.epochs);
    manifest.set("patience", a.patience);
    manifest.set("min_gain", a.min_gain);
    manifest.set("seed", a.seed);
    manifest.set("n_train", train.len());
    manifest.set("n_dev", dev.len());
    manifest.set("n_test", test.len());
    manifest.set("repetitions", a.repetitions);
    manifest.set("threads", a.threads);

    let segmenter = if strategies.contains(&StrategyKind::Pipeline) {
        let (seg, report) = train_one(BackendKind::Feature, LabelMode::SyllableSeg, &train, &dev, &config)?;
        manifest.trace("segmenter", &report);
        Some(seg)
    } else {
        None
    };
    let mut trained = Vec::new();
    for &b in &backends {
        let (tagger, report) = train_one(b, LabelMode::WordPos, &train, &dev, &config)?;
        manifest.trace(&format!("{b}.tagger"), &report);
        let joint = if strategies.contains(&StrategyKind::Joint) {
            let (joint, report) = train_one(b, LabelMode::SyllableCombined, &train, &dev, &config)?;
            manifest.trace(&format!("{b}.joint"), &report);
            Some(joint)
        } else {
            None
        };
        trained.push((b, tagger, joint));
    }

    let mut systems = Vec::new();
    for &s in &strategies {
        for (b, tagger, joint) in &trained {
            let strategy = match s {
                StrategyKind::Pipeline => Strategy::Pipeline {
                    segmenter: segmenter.as_ref().expect("segmenter trained"),
                    tagger,
                },
                StrategyKind::Joint => Strategy::Joint(joint.as_ref().expect("joint model trained")),
            };
            systems.push(System {
                name: format!("{s}-{b}"),
                backend: *b,
                strategy,
                word_tagger: Some(tagger),
            });
        }
    }
    let table = compare_report(&systems, &test, a.repetitions, a.threads)?;
    let text = table.render_text();
    emit(None, &text)?;
    if let Some(out) = &a.output {
        write(&out.join("report.txt"), &text)?;
        write(&out.join("report.kv"), &table.render_machine())?;
        write(&out.join("timing.kv"), &table.render_timing())?;
        write(&out.join(MANIFEST_FILE), &manifest.text)?;
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    require_parent(&a.output)?;
    if a.sentences == 0 {
        return Err(Error::InvalidConfig("--sentences must be at least 1".into()));
    }
    let corpus = generate_synthetic_corpus(a.seed, a.sentences);
    write(&a.output, &render_corpus(&corpus)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn default_dev_split() {
        let c = generate_synthetic_corpus(3, 25);
        let (t, d) = train_dev(&c, None, None).unwrap();
        assert_eq!((t.len(), d.len()), (23, 2));
        assert!(matches!(train_dev(&c, Some(10), Some(10)), Err(Error::SplitMismatch { .. })));
        let one = generate_synthetic_corpus(3, 1);
        let (t, d) = train_dev(&one, None, None).unwrap();
        assert_eq!((t.len(), d.len()), (1, 0));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::EmptyCorpus), 2);
        assert_eq!(exit_code(&Error::NoFeasiblePath), 1);
    }
}
