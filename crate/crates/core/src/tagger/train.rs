use std::collections::{BTreeMap, HashMap};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::decode::{decode_indices, Constraint};
use super::features::{default_templates, extract_features, validate_templates, FeatureTemplate};
use super::model::{TableView, TagInventory, WeightModel, WeightSource, WeightTable};
use crate::error::{Error, Result};
use crate::eval::sequence_score;
use crate::labels::{LabelMode, LabeledSequence};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Contiguous non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub templates: Vec<FeatureTemplate>,
    /// Fixed label order; derived from the training data when `None`.
    pub inventory: Option<Vec<String>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            patience: 5,
            seed: 1,
            shuffle: true,
            templates: default_templates(),
            inventory: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Fraction of training tokens labeled correctly before each update.
    pub train_accuracy: f64,
    pub dev_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.epochs.len()
    }
}

#[derive(Clone, Debug)]
struct Cell {
    tag: u32,
    weight: f64,
    total: f64,
    stamp: u64,
}

/// Structured perceptron state with lazily accumulated weight sums for
/// averaging.
#[derive(Clone, Debug)]
pub struct PerceptronTrainer {
    mode: LabelMode,
    inventory: TagInventory,
    templates: Vec<FeatureTemplate>,
    constraint: Option<Constraint>,
    features: HashMap<String, u32>,
    rows: Vec<Vec<Cell>>,
    instances: u64,
}

impl WeightSource for PerceptronTrainer {
    fn add_row(&self, feature: &str, scores: &mut [f64]) {
        if let Some(&f) = self.features.get(feature) {
            for c in &self.rows[f as usize] {
                scores[c.tag as usize] += c.weight;
            }
        }
    }
}

impl PerceptronTrainer {
    pub fn new(mode: LabelMode, inventory: TagInventory, templates: Vec<FeatureTemplate>) -> Result<Self> {
        validate_templates(&templates)?;
        for l in inventory.labels() {
            mode.validate(l)?;
        }
        let constraint = Constraint::for_mode(&inventory, mode)?;
        Ok(Self {
            mode,
            inventory,
            templates,
            constraint,
            features: HashMap::new(),
            rows: Vec::new(),
            instances: 0,
        })
    }

    pub fn inventory(&self) -> &TagInventory {
        &self.inventory
    }

    /// Decodes with the current (non-averaged) weights.
    pub fn decode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<usize>> {
        decode_indices(self, &self.inventory, &self.templates, tokens, self.constraint.as_ref())
    }

    /// Score of a complete label path under the current weights.
    pub fn score<S: AsRef<str>>(&self, tokens: &[S], labels: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut row = vec![0.0; self.inventory.len()];
        for (i, &y) in labels.iter().enumerate() {
            let prev = (i > 0).then(|| self.inventory.label(labels[i - 1]));
            for f in extract_features(&self.templates, tokens, i, prev) {
                row.iter_mut().for_each(|r| *r = 0.0);
                self.add_row(&f, &mut row);
                total += row[y];
            }
        }
        total
    }

    fn accumulate<S: AsRef<str>>(
        &self,
        tokens: &[S],
        labels: &[usize],
        sign: f64,
        delta: &mut BTreeMap<(String, u32), f64>,
    ) {
        for (i, &y) in labels.iter().enumerate() {
            let prev = (i > 0).then(|| self.inventory.label(labels[i - 1]));
            for f in extract_features(&self.templates, tokens, i, prev) {
                *delta.entry((f, y as u32)).or_default() += sign;
            }
        }
    }

    /// One training step: decode, then move weights by Φ(gold) − Φ(predicted).
    /// Returns the number of mislabeled positions before the update.
    pub fn train_sentence<S: AsRef<str>>(&mut self, tokens: &[S], gold: &[usize]) -> Result<usize> {
        self.instances += 1;
        let pred = self.decode(tokens)?;
        let mistakes = pred.iter().zip(gold).filter(|(p, g)| p != g).count();
        if mistakes == 0 {
            return Ok(0);
        }
        // positions whose (previous, current) label pair agrees contribute
        // identical features to both sides
        let mut delta = BTreeMap::new();
        self.accumulate(tokens, gold, 1.0, &mut delta);
        self.accumulate(tokens, &pred, -1.0, &mut delta);
        for ((feature, tag), d) in delta {
            if d != 0.0 {
                self.bump(feature, tag, d);
            }
        }
        Ok(mistakes)
    }

    fn bump(&mut self, feature: String, tag: u32, delta: f64) {
        let next_id = self.rows.len() as u32;
        let f = *self.features.entry(feature).or_insert(next_id);
        if f == next_id {
            self.rows.push(Vec::new());
        }
        let now = self.instances;
        let row = &mut self.rows[f as usize];
        let cell = match row.iter_mut().position(|c| c.tag == tag) {
            Some(k) => &mut row[k],
            None => {
                row.push(Cell {
                    tag,
                    weight: 0.0,
                    total: 0.0,
                    stamp: now,
                });
                row.last_mut().unwrap()
            }
        };
        cell.total += (now - cell.stamp) as f64 * cell.weight;
        cell.stamp = now;
        cell.weight += delta;
    }

    fn averaged_table(&self) -> WeightTable {
        let now = self.instances.max(1);
        let mut table = WeightTable {
            offsets: Vec::with_capacity(self.rows.len() + 1),
            entries: Vec::new(),
        };
        table.offsets.push(0);
        for row in &self.rows {
            let mut cells: Vec<(u32, f64)> = row
                .iter()
                .map(|c| {
                    // the current weight has been in force since step `stamp`
                    let total = c.total + (now + 1 - c.stamp) as f64 * c.weight;
                    (c.tag, total / now as f64)
                })
                .filter(|&(_, w)| w != 0.0)
                .collect();
            cells.sort_by_key(|&(t, _)| t);
            table.entries.extend(cells);
            table.offsets.push(table.entries.len());
        }
        table
    }

    fn model_from_table(&self, table: &WeightTable, metadata: Vec<(String, String)>) -> WeightModel {
        let mut rows: Vec<(String, Vec<(u32, f64)>)> = self
            .features
            .iter()
            .filter(|(_, &f)| (f as usize) < table.rows())
            .map(|(name, &f)| (name.clone(), table.row(f as usize).to_vec()))
            .filter(|(_, r)| !r.is_empty())
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        WeightModel::from_sorted_rows(
            self.mode,
            self.inventory.clone(),
            self.templates.clone(),
            rows,
            metadata,
        )
    }

    /// The model with weights averaged over every step so far.
    pub fn averaged(&self) -> WeightModel {
        self.model_from_table(&self.averaged_table(), Vec::new())
    }
}

fn check_sequences(data: &[LabeledSequence]) -> Result<()> {
    for (i, s) in data.iter().enumerate() {
        if s.tokens.is_empty() || s.tokens.len() != s.labels.len() {
            return Err(Error::SentenceMismatch {
                index: i + 1,
                reason: format!(
                    "{} tokens and {} labels",
                    s.tokens.len(),
                    s.labels.len()
                ),
            });
        }
    }
    Ok(())
}

/// Trains an averaged structured perceptron with early stopping.
///
/// After every epoch the averaged weights are scored on `dev` (token
/// accuracy for word-pos, tagged-span F1 for syllable-combined, span F1 for
/// syllable-seg); without a dev set the epoch's online training accuracy is
/// used instead. Training stops after `patience` contiguous epochs without a
/// strict improvement, and the averaged model of the best epoch is returned.
pub fn train_averaged_perceptron(
    train: &[LabeledSequence],
    dev: Option<&[LabeledSequence]>,
    mode: LabelMode,
    config: &TrainConfig,
) -> Result<(WeightModel, TrainReport)> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if config.max_epochs == 0 || config.patience == 0 {
        return Err(Error::InvalidConfig(
            "max epochs and patience must both be at least 1".into(),
        ));
    }
    check_sequences(train)?;
    if let Some(dev) = dev {
        check_sequences(dev)?;
    }
    for label in train.iter().flat_map(|s| &s.labels) {
        mode.validate(label)?;
    }
    let inventory = match &config.inventory {
        Some(labels) => TagInventory::new(labels.clone())?,
        None => TagInventory::from_sequences(train.iter().flat_map(|s| &s.labels))?,
    };
    let gold: Vec<Vec<usize>> = train
        .iter()
        .map(|s| {
            s.labels
                .iter()
                .map(|l| inventory.index_of(l).ok_or_else(|| Error::UnknownLabel(l.clone())))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut trainer = PerceptronTrainer::new(mode, inventory, config.templates.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let n_tokens: usize = train.iter().map(LabeledSequence::len).sum();

    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, WeightTable)> = None;
    let mut stale = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut mistakes = 0;
        for &k in &order {
            mistakes += trainer.train_sentence(&train[k].tokens, &gold[k])?;
        }
        let train_accuracy = 1.0 - mistakes as f64 / n_tokens as f64;
        let table = trainer.averaged_table();
        let dev_score = match dev {
            Some(dev) => {
                let view = TableView {
                    features: &trainer.features,
                    table: &table,
                };
                let pred = dev
                    .iter()
                    .map(|s| {
                        decode_indices(
                            &view,
                            &trainer.inventory,
                            &trainer.templates,
                            &s.tokens,
                            trainer.constraint.as_ref(),
                        )
                        .map(|p| {
                            p.into_iter()
                                .map(|i| trainer.inventory.label(i).to_string())
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(sequence_score(mode, dev, &pred)?)
            }
            None => None,
        };
        let score = dev_score.unwrap_or(train_accuracy);
        debug!("epoch {epoch}: train accuracy {train_accuracy:.6}, dev {dev_score:?}");
        epochs.push(EpochRecord {
            epoch,
            train_accuracy,
            dev_score,
        });
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, epoch, table));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }

    let (best_score, best_epoch, table) = best.expect("at least one epoch");
    info!(
        "perceptron ({mode}): {} epochs, best epoch {best_epoch} score {best_score:.6}",
        epochs.len()
    );
    let metadata = vec![
        ("max_epochs".to_string(), config.max_epochs.to_string()),
        ("patience".to_string(), config.patience.to_string()),
        ("seed".to_string(), config.seed.to_string()),
        ("shuffle".to_string(), config.shuffle.to_string()),
        ("epochs_run".to_string(), epochs.len().to_string()),
        ("best_epoch".to_string(), best_epoch.to_string()),
    ];
    let model = trainer.model_from_table(&table, metadata);
    Ok((
        model,
        TrainReport {
            epochs,
            best_epoch,
            stopped_early,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(tokens: &[&str], labels: &[&str]) -> LabeledSequence {
        LabeledSequence {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn separable_single_sentence_in_one_epoch() {
        let data = vec![seq(&["a"], &["X"])];
        let (model, report) =
            train_averaged_perceptron(&data, None, LabelMode::WordPos, &TrainConfig::default()).unwrap();
        assert_eq!(report.epochs[0].train_accuracy, 1.0);
        let out = crate::tagger::viterbi_decode(&model, &["a"], None).unwrap();
        assert_eq!(out, ["X"]);
    }

    #[test]
    fn two_labels_learned_after_first_epoch() {
        let data = vec![seq(&["a", "b"], &["X", "Y"]), seq(&["b", "a"], &["Y", "X"])];
        let (model, _) =
            train_averaged_perceptron(&data, None, LabelMode::WordPos, &TrainConfig::default()).unwrap();
        for s in &data {
            assert_eq!(crate::tagger::viterbi_decode(&model, &s.tokens, None).unwrap(), s.labels);
        }
    }

    #[test]
    fn flat_dev_score_stops_after_patience() {
        let data = vec![seq(&["a", "b"], &["X", "Y"])];
        let config = TrainConfig {
            patience: 5,
            ..TrainConfig::default()
        };
        // no model can produce a label it never saw, so the score never moves
        let dev = vec![seq(&["a", "b"], &["Q", "Q"])];
        let (_, report) =
            train_averaged_perceptron(&data, Some(&dev), LabelMode::WordPos, &config).unwrap();
        assert_eq!(report.epochs_run(), 6, "{:?}", report.epochs);
        assert_eq!(report.best_epoch, 1);
        assert!(report.stopped_early);
        assert!(report.epochs.iter().all(|e| e.dev_score == Some(0.0)));
    }

    #[test]
    fn errors() {
        let cfg = TrainConfig::default();
        assert!(matches!(
            train_averaged_perceptron(&[], None, LabelMode::WordPos, &cfg),
            Err(Error::EmptyTrainingSet)
        ));
        let fixed = TrainConfig {
            inventory: Some(vec!["X".into()]),
            ..TrainConfig::default()
        };
        let data = vec![seq(&["a"], &["Y"])];
        match train_averaged_perceptron(&data, None, LabelMode::WordPos, &fixed) {
            Err(Error::UnknownLabel(l)) => assert_eq!(l, "Y"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = vec![seq(&["a"], &["B-N"])];
        assert!(train_averaged_perceptron(&bad, None, LabelMode::WordPos, &cfg).is_err());
        let zero = TrainConfig {
            patience: 0,
            ..TrainConfig::default()
        };
        assert!(train_averaged_perceptron(&data, None, LabelMode::WordPos, &zero).is_err());
    }

    #[test]
    fn update_increases_margin() {
        let inv = TagInventory::new(vec!["X".into(), "Y".into()]).unwrap();
        let mut t = PerceptronTrainer::new(LabelMode::WordPos, inv, default_templates()).unwrap();
        let toks = ["a", "b", "a"];
        let gold = [1, 0, 1];
        let pred = t.decode(&toks).unwrap();
        let before = t.score(&toks, &gold) - t.score(&toks, &pred);
        t.train_sentence(&toks, &gold).unwrap();
        let after = t.score(&toks, &gold) - t.score(&toks, &pred);
        assert!(after > before);
    }
}
