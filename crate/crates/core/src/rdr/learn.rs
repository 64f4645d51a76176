use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use log::debug;

use super::lexicon::{lexicon_tag, Lexicon};
use super::tree::{suffix, Atom, RdrTree, RuleCondition, Window};
use crate::error::{Error, Result};
use crate::labels::LabeledSequence;
use crate::tagger::{BOS, EOS};

pub const DEFAULT_MIN_GAIN: u32 = 2;

#[derive(Clone, Copy)]
enum Part {
    W(i8),
    T(i8),
    S(u8),
}

use Part::{S, T, W};

/// Condition shapes tried for every error instance.
const TEMPLATES: &[&[Part]] = &[
    &[W(0)],
    &[W(-1)],
    &[W(1)],
    &[W(-2)],
    &[W(2)],
    &[W(-1), W(0)],
    &[W(0), W(1)],
    &[W(-2), W(-1)],
    &[W(1), W(2)],
    &[W(-1), W(1)],
    &[T(0)],
    &[T(-1)],
    &[T(1)],
    &[T(-2)],
    &[T(2)],
    &[T(-1), T(1)],
    &[T(-2), T(-1)],
    &[T(1), T(2)],
    &[W(0), T(-1)],
    &[W(0), T(1)],
    &[W(0), T(-2)],
    &[W(0), T(2)],
    &[W(0), T(-1), T(1)],
    &[W(-1), T(0)],
    &[W(1), T(0)],
    &[T(-1), T(0)],
    &[T(0), T(1)],
    &[S(1)],
    &[S(2)],
    &[S(3)],
    &[S(2), T(-1)],
    &[S(2), T(0)],
];

fn instantiate(w: &Window, parts: &[Part]) -> Option<RuleCondition> {
    let mut atoms = Vec::with_capacity(parts.len());
    for p in parts {
        atoms.push(match *p {
            W(offset) => Atom::Token {
                offset,
                value: w.token(offset).to_string(),
            },
            T(offset) => Atom::Label {
                offset,
                value: w.label(offset).to_string(),
            },
            S(len) => Atom::Suffix {
                len,
                value: suffix(w.token(0), len)?.to_string(),
            },
        });
    }
    RuleCondition::new(atoms).ok()
}

/// Per-sentence tagging state under the current tree.
struct State<'a> {
    tokens: &'a [String],
    gold: &'a [String],
    initial: Vec<String>,
    labels: Vec<String>,
    fired: Vec<usize>,
}

impl State<'_> {
    fn correct(&self) -> usize {
        self.labels.iter().zip(self.gold).filter(|(p, g)| p == g).count()
    }

    fn window(&self, i: usize) -> Window<'_> {
        Window::new(self.tokens, &self.labels, &self.initial, i)
    }
}

#[derive(Default)]
struct Counts {
    fixed: u32,
    introduced: u32,
}

struct Candidate {
    condition: RuleCondition,
    conclusion: String,
    fixed: u32,
    gain: i64,
    key: String,
}

fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.gain
        .cmp(&a.gain)
        .then(b.fixed.cmp(&a.fixed))
        .then_with(|| a.key.cmp(&b.key))
}

/// Candidate rules for every node, estimated against the current state.
fn collect_candidates(states: &[State], min_gain: u32) -> BTreeMap<usize, Vec<Candidate>> {
    let mut table: HashMap<(usize, RuleCondition), BTreeMap<String, Counts>> = HashMap::new();
    for s in states {
        for i in 0..s.tokens.len() {
            if s.labels[i] == s.gold[i] {
                continue;
            }
            let w = s.window(i);
            for parts in TEMPLATES {
                if let Some(cond) = instantiate(&w, parts) {
                    table
                        .entry((s.fired[i], cond))
                        .or_default()
                        .entry(s.gold[i].clone())
                        .or_default()
                        .fixed += 1;
                }
            }
        }
    }
    table.retain(|_, by_label| by_label.values().any(|c| c.fixed >= min_gain));
    // A candidate flips every currently correct instance it matches unless
    // its conclusion equals that instance's gold label.
    for s in states {
        for i in 0..s.tokens.len() {
            if s.labels[i] != s.gold[i] {
                continue;
            }
            let w = s.window(i);
            for parts in TEMPLATES {
                let Some(cond) = instantiate(&w, parts) else {
                    continue;
                };
                if let Some(by_label) = table.get_mut(&(s.fired[i], cond)) {
                    for (label, c) in by_label.iter_mut() {
                        if *label != s.gold[i] {
                            c.introduced += 1;
                        }
                    }
                }
            }
        }
    }
    let mut out: BTreeMap<usize, Vec<Candidate>> = BTreeMap::new();
    for ((node, condition), by_label) in table {
        for (conclusion, c) in by_label {
            let gain = c.fixed as i64 - c.introduced as i64;
            if gain < min_gain as i64 {
                continue;
            }
            let key = format!("{condition} : {conclusion}");
            out.entry(node).or_default().push(Candidate {
                condition: condition.clone(),
                conclusion,
                fixed: c.fixed,
                gain,
                key,
            });
        }
    }
    for list in out.values_mut() {
        list.sort_by(rank);
    }
    out
}

/// Positions of every token and token suffix, for finding where a rule
/// could fire without scanning the whole corpus.
struct Index<'a> {
    tokens: HashMap<&'a str, Vec<(u32, u32)>>,
    suffixes: HashMap<(u8, &'a str), Vec<(u32, u32)>>,
}

impl<'a> Index<'a> {
    fn build(train: &'a [LabeledSequence]) -> Self {
        let mut index = Index {
            tokens: HashMap::new(),
            suffixes: HashMap::new(),
        };
        for (k, s) in train.iter().enumerate() {
            for (i, t) in s.tokens.iter().enumerate() {
                let at = (k as u32, i as u32);
                index.tokens.entry(t.as_str()).or_default().push(at);
                for len in 1..=3 {
                    if let Some(suf) = suffix(t, len) {
                        index.suffixes.entry((len, suf)).or_default().push(at);
                    }
                }
            }
        }
        index
    }

    /// Positions where `cond` can possibly hold, or `None` if every position
    /// must be checked.
    fn candidates(&self, cond: &RuleCondition) -> Option<Vec<(u32, u32)>> {
        for atom in cond.atoms() {
            match atom {
                Atom::Token { offset, value } if value != BOS && value != EOS => {
                    let occ = self.tokens.get(value.as_str()).map_or(&[][..], Vec::as_slice);
                    return Some(
                        occ.iter()
                            .filter_map(|&(s, j)| {
                                let i = j as i64 - *offset as i64;
                                (i >= 0).then_some((s, i as u32))
                            })
                            .collect(),
                    );
                }
                Atom::Suffix { len, value } => {
                    let occ = self.suffixes.get(&(*len, value.as_str()));
                    return Some(occ.cloned().unwrap_or_default());
                }
                _ => {}
            }
        }
        None
    }
}

/// Exact effect of the newest rule (an exception of `parent`) on the
/// training set.
struct Trial {
    fixed: u32,
    gain: i64,
    changed: Vec<(usize, Vec<String>, Vec<usize>)>,
}

fn trial(tree: &RdrTree, states: &[State], index: &Index, parent: usize) -> Trial {
    let rule = tree.nodes().last().and_then(|n| n.condition.as_ref()).expect("rule");
    let fires = |s: &State, i: usize| s.fired[i] == parent && rule.matches(&s.window(i));
    let mut hit: Vec<usize> = match index.candidates(rule) {
        Some(positions) => positions
            .into_iter()
            .filter(|&(k, i)| {
                let s = &states[k as usize];
                (i as usize) < s.tokens.len() && fires(s, i as usize)
            })
            .map(|(k, _)| k as usize)
            .collect(),
        None => states
            .iter()
            .enumerate()
            .filter(|(_, s)| (0..s.tokens.len()).any(|i| fires(s, i)))
            .map(|(k, _)| k)
            .collect(),
    };
    hit.sort_unstable();
    hit.dedup();
    let mut result = Trial {
        fixed: 0,
        gain: 0,
        changed: Vec::with_capacity(hit.len()),
    };
    for k in hit {
        let s = &states[k];
        let (labels, _, fired) = tree.apply_traced(s.tokens);
        for ((new, old), gold) in labels.iter().zip(&s.labels).zip(s.gold) {
            match (new == gold, old == gold) {
                (true, false) => {
                    result.fixed += 1;
                    result.gain += 1;
                }
                (false, true) => result.gain -= 1,
                _ => {}
            }
        }
        result.changed.push((k, labels, fired));
    }
    result
}

/// Heap entry: ordered by gain, then fixed count, then smallest rule string.
#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    gain: i64,
    fixed: u32,
    key: Reverse<String>,
    /// Number of accepted rules when the gain was measured exactly.
    measured: Option<usize>,
    cand: usize,
}

/// Grows an exception tree over the lexicon by greedy error-driven rule
/// selection.
///
/// Each round tags the training data with the current tree and proposes
/// conditions from the context of every misclassified position. Then, for
/// each node in creation order, rules are added as that node's exceptions
/// while the best candidate's net gain, measured exactly on the training
/// set with the rule in place, is at least `min_gain`. Candidates wait in a
/// priority queue under their last known gain and are re-measured when they
/// reach the top, so each accepted rule is the best remaining one as long as
/// adding rules never raises another candidate's gain. Learning stops after
/// a round that adds nothing.
pub fn learn_rdr(train: &[LabeledSequence], lexicon: Lexicon, min_gain: u32) -> Result<RdrTree> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if min_gain == 0 {
        return Err(Error::InvalidConfig("min_gain must be at least 1".into()));
    }
    for s in train {
        if s.tokens.len() != s.labels.len() {
            return Err(Error::InvalidConfig("token and label counts differ".into()));
        }
        for l in &s.labels {
            lexicon.mode().validate(l)?;
        }
    }
    let index = Index::build(train);
    let mut tree = RdrTree::new(lexicon);
    let mut states: Vec<State> = train
        .iter()
        .map(|s| {
            let initial = lexicon_tag(tree.lexicon(), &s.tokens);
            State {
                tokens: &s.tokens,
                gold: &s.labels,
                labels: initial.clone(),
                initial,
                fired: vec![0; s.tokens.len()],
            }
        })
        .collect();
    let total: usize = states.iter().map(|s| s.tokens.len()).sum();
    let mut correct: i64 = states.iter().map(State::correct).sum::<usize>() as i64;
    debug!("lexicon: {correct}/{total} correct");

    let mut round = 0;
    loop {
        round += 1;
        let candidates = collect_candidates(&states, min_gain);
        let mut added = 0;
        for (node, list) in candidates {
            let mut list: Vec<Option<Candidate>> = list.into_iter().map(Some).collect();
            let mut heap: BinaryHeap<Entry> = list
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let c = c.as_ref().expect("fresh candidate");
                    Entry {
                        gain: c.gain,
                        fixed: c.fixed,
                        key: Reverse(c.key.clone()),
                        measured: None,
                        cand: k,
                    }
                })
                .collect();
            while let Some(top) = heap.pop() {
                if top.gain < min_gain as i64 {
                    break;
                }
                let cand = list[top.cand].as_ref().expect("candidate still pending");
                tree.push_rule(node, cand.condition.clone(), cand.conclusion.clone());
                let result = trial(&tree, &states, &index, node);
                if top.measured == Some(added) {
                    for (k, labels, fired) in result.changed {
                        states[k].labels = labels;
                        states[k].fired = fired;
                    }
                    correct += result.gain;
                    added += 1;
                    list[top.cand] = None;
                    continue;
                }
                tree.pop_rule();
                heap.push(Entry {
                    gain: result.gain,
                    fixed: result.fixed,
                    measured: Some(added),
                    ..top
                });
            }
        }
        debug!("round {round}: {added} rules, {correct}/{total} correct");
        if added == 0 {
            break;
        }
    }
    tree.metadata = vec![
        ("min_gain".into(), min_gain.to_string()),
        ("rounds".into(), round.to_string()),
    ];
    Ok(tree)
}
