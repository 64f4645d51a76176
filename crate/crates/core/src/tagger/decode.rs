use super::features::{push_static, push_transition, FeatureTemplate, BOS};
use super::model::{TagInventory, WeightModel, WeightSource};
use crate::corpus::{CombinedTag, SegTag};
use crate::error::{Error, Result};
use crate::labels::LabelMode;

/// Hard restrictions on which labels may start a sentence and which label
/// pairs may be adjacent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    n: usize,
    start: Vec<bool>,
    allowed: Vec<bool>,
}

impl Constraint {
    /// `allowed[prev * n + cur]`.
    pub fn new(start: Vec<bool>, allowed: Vec<bool>) -> Result<Self> {
        let n = start.len();
        if allowed.len() != n * n {
            return Err(Error::InvalidConfig(format!(
                "transition table has {} cells, expected {}",
                allowed.len(),
                n * n
            )));
        }
        Ok(Self { n, start, allowed })
    }

    pub fn can_start(&self, tag: usize) -> bool {
        self.start[tag]
    }

    pub fn allows(&self, prev: usize, cur: usize) -> bool {
        self.allowed[prev * self.n + cur]
    }

    /// `I-x` only at a non-initial position right after `B-x` or `I-x`.
    pub fn combined(inventory: &TagInventory) -> Result<Self> {
        let tags = inventory
            .labels()
            .iter()
            .map(|l| l.parse::<CombinedTag>())
            .collect::<Result<Vec<_>>>()?;
        let start = tags.iter().map(|t| t.seg == SegTag::B).collect();
        let mut allowed = Vec::with_capacity(tags.len() * tags.len());
        for prev in &tags {
            for cur in &tags {
                allowed.push(cur.seg == SegTag::B || cur.pos == prev.pos);
            }
        }
        Self::new(start, allowed)
    }

    /// Only the first label is restricted, to `B`.
    pub fn first_is_b(inventory: &TagInventory) -> Result<Self> {
        let start = inventory
            .labels()
            .iter()
            .map(|l| l.parse::<SegTag>().map(|s| s == SegTag::B))
            .collect::<Result<Vec<_>>>()?;
        let n = start.len();
        Self::new(start, vec![true; n * n])
    }

    /// The constraint implied by a label mode, if any.
    pub fn for_mode(inventory: &TagInventory, mode: LabelMode) -> Result<Option<Self>> {
        match mode {
            LabelMode::WordPos => Ok(None),
            LabelMode::SyllableCombined => Self::combined(inventory).map(Some),
            LabelMode::SyllableSeg => Self::first_is_b(inventory).map(Some),
        }
    }
}

pub(crate) fn decode_indices<S: AsRef<str>, W: WeightSource>(
    weights: &W,
    inventory: &TagInventory,
    templates: &[FeatureTemplate],
    tokens: &[S],
    constraint: Option<&Constraint>,
) -> Result<Vec<usize>> {
    let n = tokens.len();
    let t = inventory.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if constraint.is_some_and(|c| c.n != t) {
        return Err(Error::InvalidConfig(
            "constraint size does not match the tag inventory".into(),
        ));
    }
    let (dynamic, fixed): (Vec<&FeatureTemplate>, Vec<&FeatureTemplate>) =
        templates.iter().partition(|tpl| tpl.is_transition());

    let mut buf = String::new();
    let mut emit = vec![0.0; t];
    let mut trans = vec![0.0; t];
    let mut prev_delta = vec![f64::NEG_INFINITY; t];
    let mut delta = vec![f64::NEG_INFINITY; t];
    let mut back = vec![0usize; n * t];

    for i in 0..n {
        emit.iter_mut().for_each(|e| *e = 0.0);
        for tpl in &fixed {
            if push_static(tpl, tokens, i, &mut buf) {
                weights.add_row(&buf, &mut emit);
            }
        }
        delta.iter_mut().for_each(|d| *d = f64::NEG_INFINITY);
        if i == 0 {
            trans.iter_mut().for_each(|e| *e = 0.0);
            for tpl in &dynamic {
                push_transition(tpl, tokens, i, BOS, &mut buf);
                weights.add_row(&buf, &mut trans);
            }
            for cur in 0..t {
                if constraint.is_none_or(|c| c.can_start(cur)) {
                    delta[cur] = trans[cur] + emit[cur];
                }
            }
        } else {
            for (prev, &from) in prev_delta.iter().enumerate() {
                if from == f64::NEG_INFINITY {
                    continue;
                }
                trans.iter_mut().for_each(|e| *e = 0.0);
                for tpl in &dynamic {
                    push_transition(tpl, tokens, i, inventory.label(prev), &mut buf);
                    weights.add_row(&buf, &mut trans);
                }
                for cur in 0..t {
                    if constraint.is_some_and(|c| !c.allows(prev, cur)) {
                        continue;
                    }
                    let score = from + trans[cur];
                    // strict comparison keeps the lowest prev on ties
                    if score > delta[cur] {
                        delta[cur] = score;
                        back[i * t + cur] = prev;
                    }
                }
            }
            for cur in 0..t {
                delta[cur] += emit[cur];
            }
        }
        if delta.iter().all(|&d| d == f64::NEG_INFINITY) {
            return Err(Error::NoFeasiblePath);
        }
        std::mem::swap(&mut delta, &mut prev_delta);
    }

    let mut best = 0;
    for cur in 1..t {
        if prev_delta[cur] > prev_delta[best] {
            best = cur;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = best;
    for i in (1..n).rev() {
        path[i - 1] = back[i * t + path[i]];
    }
    Ok(path)
}

/// Highest-scoring label sequence under first-order tag dependence.
///
/// Ties go to the lower inventory index at every backpointer decision and
/// for the final label.
pub fn viterbi_decode<S: AsRef<str>>(
    model: &WeightModel,
    tokens: &[S],
    constraint: Option<&Constraint>,
) -> Result<Vec<String>> {
    if tokens.is_empty() {
        return Err(Error::InvalidConfig("cannot decode an empty sequence".into()));
    }
    let path = decode_indices(
        &model.view(),
        &model.inventory,
        &model.templates,
        tokens,
        constraint,
    )?;
    Ok(path
        .into_iter()
        .map(|i| model.inventory.label(i).to_string())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::features::{default_templates, FeatureTemplate};

    fn inventory(labels: &[&str]) -> TagInventory {
        TagInventory::new(labels.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn zero_model_picks_first_label() {
        let m = WeightModel::from_weights(
            LabelMode::WordPos,
            inventory(&["X", "Y"]),
            default_templates(),
            Vec::new(),
        )
        .unwrap();
        let out = viterbi_decode(&m, &["a", "b", "c"], None).unwrap();
        assert_eq!(out, ["X", "X", "X"]);
    }

    #[test]
    fn combined_constraint_forbids_initial_inside() {
        let inv = inventory(&["I-N", "B-N", "I-V", "B-V"]);
        // "a" prefers I-N and "b" prefers I-V over B-V
        let m = WeightModel::from_weights(
            LabelMode::SyllableCombined,
            inv.clone(),
            vec![FeatureTemplate::token(0), FeatureTemplate::previous_tag()],
            vec![
                ("w0=a".to_string(), 0, 10.0),
                ("w0=b".to_string(), 2, 10.0),
                ("w0=b".to_string(), 3, 5.0),
            ],
        )
        .unwrap();
        let c = Constraint::combined(&inv).unwrap();
        let out = viterbi_decode(&m, &["a", "a", "b"], Some(&c)).unwrap();
        assert_eq!(out, ["B-N", "I-N", "B-V"]);
        let free = viterbi_decode(&m, &["a", "a", "b"], None).unwrap();
        assert_eq!(free, ["I-N", "I-N", "I-V"]);
    }

    #[test]
    fn transition_weights_matter() {
        let m = WeightModel::from_weights(
            LabelMode::WordPos,
            inventory(&["N", "V"]),
            vec![FeatureTemplate::token(0), FeatureTemplate::previous_tag()],
            vec![
                ("w0=a".to_string(), 0, 1.0),
                ("w0=b".to_string(), 0, 1.0),
                ("w0=b".to_string(), 1, 0.5),
                ("t-1=N".to_string(), 1, 1.0),
            ],
        )
        .unwrap();
        assert_eq!(viterbi_decode(&m, &["a", "b"], None).unwrap(), ["N", "V"]);
        assert_eq!(viterbi_decode(&m, &["b"], None).unwrap(), ["N"]);
    }

    #[test]
    fn infeasible_constraint() {
        let inv = inventory(&["I"]);
        let m = WeightModel::from_weights(LabelMode::SyllableSeg, inv.clone(), default_templates(), vec![])
            .unwrap();
        let c = Constraint::first_is_b(&inv).unwrap();
        assert!(matches!(viterbi_decode(&m, &["a"], Some(&c)), Err(Error::NoFeasiblePath)));
    }
}
