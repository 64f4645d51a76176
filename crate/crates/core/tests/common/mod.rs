//! Random corpus builders and brute-force oracles shared by the integration
//! suites.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use segtag::corpus::{Corpus, PosTag, Syllable, Word, WordSentence};
use segtag::tagger::{extract_features, Constraint, WeightModel};

pub const SYLLABLES: &[&str] = &[
    "thuế", "thu", "nhập", "cá", "nhân", "học", "sinh", "Hà", "Nội", "a", "b", "2024", ",", ".",
    "người", "việt",
];
pub const TAGS: &[&str] = &["N", "Np", "Nc", "V", "A", "E", "CH", "M"];

pub fn syllable(rng: &mut impl Rng) -> Syllable {
    Syllable::new(*SYLLABLES.choose(rng).unwrap()).unwrap()
}

pub fn tag(rng: &mut impl Rng) -> PosTag {
    PosTag::new(*TAGS.choose(rng).unwrap()).unwrap()
}

/// Sentence of 1..=max_words words with 1..=3 syllables each.
pub fn random_sentence(rng: &mut impl Rng, max_words: usize) -> WordSentence {
    let n = rng.random_range(1..=max_words);
    let items = (0..n)
        .map(|_| {
            let len = rng.random_range(1..=3);
            let word = Word::new((0..len).map(|_| syllable(rng)).collect()).unwrap();
            (word, tag(rng))
        })
        .collect();
    WordSentence::new(items).unwrap()
}

/// Splits `syllables` at random boundaries and tags every word.
pub fn random_segmentation(rng: &mut impl Rng, syllables: &[Syllable]) -> WordSentence {
    let mut items = Vec::new();
    let mut current = vec![syllables[0].clone()];
    for s in &syllables[1..] {
        if rng.random_bool(0.5) {
            items.push((Word::new(std::mem::take(&mut current)).unwrap(), tag(rng)));
        }
        current.push(s.clone());
    }
    items.push((Word::new(current).unwrap(), tag(rng)));
    WordSentence::new(items).unwrap()
}

/// Same words as `sentence`, each tag kept with probability `keep`.
pub fn retag(rng: &mut impl Rng, sentence: &WordSentence, keep: f64) -> WordSentence {
    let items = sentence
        .items()
        .iter()
        .map(|(w, t)| {
            let t = if rng.random_bool(keep) { t.clone() } else { tag(rng) };
            (w.clone(), t)
        })
        .collect();
    WordSentence::new(items).unwrap()
}

pub fn random_corpus(rng: &mut impl Rng, n: usize, max_words: usize) -> Corpus {
    Corpus::new((0..n).map(|_| random_sentence(rng, max_words)).collect())
}

/// Words as `(start, end, tag)` syllable intervals, built by walking the
/// sentence independently of the library's span code.
pub fn span_set(sentence: &WordSentence) -> BTreeSet<(usize, usize, String)> {
    let mut out = BTreeSet::new();
    let mut at = 0;
    for (w, t) in sentence.items() {
        out.insert((at, at + w.syllables().len(), t.to_string()));
        at += w.syllables().len();
    }
    out
}

/// `(word-boundary matches, word+tag matches, predicted, gold)` by set
/// intersection.
pub fn span_oracle(gold: &WordSentence, pred: &WordSentence) -> (usize, usize, usize, usize) {
    let g = span_set(gold);
    let p = span_set(pred);
    let bounds = |s: &BTreeSet<(usize, usize, String)>| -> BTreeSet<(usize, usize)> {
        s.iter().map(|(a, b, _)| (*a, *b)).collect()
    };
    let seg = bounds(&g).intersection(&bounds(&p)).count();
    let tagged = g.intersection(&p).count();
    (seg, tagged, p.len(), g.len())
}

/// Score of a full label path, summing every active feature weight.
pub fn path_score(model: &WeightModel, tokens: &[String], path: &[usize]) -> f64 {
    let labels = model.inventory().labels();
    let mut total = 0.0;
    for i in 0..tokens.len() {
        let prev = (i > 0).then(|| labels[path[i - 1]].as_str());
        for f in extract_features(model.templates(), tokens, i, prev) {
            total += model.weight(&f, path[i]);
        }
    }
    total
}

fn feasible(constraint: Option<&Constraint>, path: &[usize]) -> bool {
    let Some(c) = constraint else { return true };
    c.can_start(path[0]) && path.windows(2).all(|w| c.allows(w[0], w[1]))
}

/// Exhaustive argmax. Among equal scores the path that is smallest when
/// read from the last position backwards wins, which is what choosing the
/// lowest index at every backpointer produces.
pub fn brute_force_decode(
    model: &WeightModel,
    tokens: &[String],
    constraint: Option<&Constraint>,
) -> Option<Vec<usize>> {
    let t = model.inventory().len();
    let n = tokens.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut path = vec![0; n];
    for code in 0..t.pow(n as u32) {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = c % t;
            c /= t;
        }
        if !feasible(constraint, &path) {
            continue;
        }
        let score = path_score(model, tokens, &path);
        let better = match &best {
            None => true,
            Some((s, p)) => score > *s || (score == *s && path.iter().rev().lt(p.iter().rev())),
        };
        if better {
            best = Some((score, path.clone()));
        }
    }
    best.map(|(_, p)| p)
}
