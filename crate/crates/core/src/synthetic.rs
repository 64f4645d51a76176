//! Seeded generator of small Vietnamese-like tagged corpora for tests and
//! demonstrations.
//!
//! The vocabulary and grammar are fixed; the seed only drives sentence
//! sampling, so corpora from different seeds share word forms and tags.

use std::collections::{BTreeSet, HashSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, PosTag, Syllable, Word, WordSentence};

const VOCABULARY_SEED: u64 = 0x5e67_a901;

const ONSETS: &[&str] = &[
    "", "b", "c", "ch", "d", "đ", "g", "gi", "h", "k", "kh", "l", "m", "n", "ng", "nh", "ph",
    "qu", "r", "s", "t", "th", "tr", "v", "x",
];

const VOWELS: &[&str] = &[
    "a", "á", "à", "ả", "ã", "ạ", "ă", "ắ", "ằ", "ặ", "â", "ấ", "ầ", "ậ", "e", "é", "è", "ẹ",
    "ê", "ế", "ề", "ệ", "i", "í", "ì", "ị", "o", "ó", "ò", "ọ", "ô", "ố", "ồ", "ộ", "ơ", "ớ",
    "ờ", "ợ", "u", "ú", "ù", "ụ", "ư", "ứ", "ừ", "ự", "y", "ý",
];

const CODAS: &[&str] = &["", "", "n", "ng", "m", "t", "c", "nh", "i", "o", "u"];

/// Word types per tag: (tag, number of types, max syllables per word).
const CLASSES: &[(&str, usize, usize)] = &[
    ("N", 140, 3),
    ("Np", 20, 2),
    ("Nc", 8, 1),
    ("V", 90, 2),
    ("A", 45, 2),
    ("R", 12, 1),
    ("E", 10, 1),
    ("P", 10, 1),
    ("M", 10, 1),
    ("L", 5, 1),
    ("C", 6, 1),
];

/// Verb forms that are also nouns, and adjective forms that are also verbs.
const NOUN_VERBS: usize = 30;
const ADJ_VERBS: usize = 12;

struct Vocabulary {
    words: Vec<(&'static str, Vec<Word>)>,
}

impl Vocabulary {
    fn build() -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(VOCABULARY_SEED);
        let mut syllables = BTreeSet::new();
        while syllables.len() < 320 {
            let s = format!(
                "{}{}{}",
                ONSETS.choose(&mut rng).unwrap(),
                VOWELS.choose(&mut rng).unwrap(),
                CODAS.choose(&mut rng).unwrap()
            );
            syllables.insert(s);
        }
        let pool: Vec<Syllable> = syllables
            .into_iter()
            .map(|s| Syllable::new(s).expect("generated syllable"))
            .collect();

        let mut seen = HashSet::new();
        let mut words: Vec<(&'static str, Vec<Word>)> = Vec::new();
        for &(tag, count, max_len) in CLASSES {
            let mut forms = Vec::with_capacity(count);
            while forms.len() < count {
                let len = rng.random_range(1..=max_len);
                let syl: Vec<Syllable> = (0..len).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
                let word = Word::new(syl).expect("non-empty word");
                if seen.insert(word.render()) {
                    forms.push(word);
                }
            }
            words.push((tag, forms));
        }
        let mut vocab = Self { words };
        // Ambiguous types: the first noun forms double as verbs, the first
        // adjective forms double as verbs.
        let nouns: Vec<Word> = vocab.forms("N")[..NOUN_VERBS].to_vec();
        let adjs: Vec<Word> = vocab.forms("A")[..ADJ_VERBS].to_vec();
        let verbs = vocab.forms_mut("V");
        verbs.extend(nouns);
        verbs.extend(adjs);
        vocab
    }

    fn forms(&self, tag: &str) -> &[Word] {
        &self.words.iter().find(|(t, _)| *t == tag).expect("known tag").1
    }

    fn forms_mut(&mut self, tag: &str) -> &mut Vec<Word> {
        &mut self.words.iter_mut().find(|(t, _)| *t == tag).expect("known tag").1
    }
}

struct Generator<'a> {
    vocab: &'a Vocabulary,
    rng: ChaCha8Rng,
    out: Vec<(Word, PosTag)>,
}

impl Generator<'_> {
    fn emit(&mut self, tag: &str) {
        let forms = self.vocab.forms(tag);
        // skewed towards the front so frequencies vary
        let u: f64 = self.rng.random();
        let word = forms[((u * u) * forms.len() as f64) as usize].clone();
        self.out.push((word, PosTag::new(tag).expect("valid tag")));
    }

    fn punct(&mut self, text: &str) {
        let word = Word::new(vec![Syllable::new(text).expect("punctuation")]).expect("word");
        self.out.push((word, PosTag::new("CH").expect("valid tag")));
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn noun_phrase(&mut self) {
        let r: f64 = self.rng.random();
        if r < 0.2 {
            self.emit("P");
        } else if r < 0.3 {
            self.emit("Np");
        } else {
            if self.chance(0.25) {
                self.emit("M");
            } else if self.chance(0.2) {
                self.emit("L");
            }
            if self.chance(0.35) {
                self.emit("Nc");
            }
            self.emit("N");
            if self.chance(0.3) {
                self.emit("A");
            }
        }
    }

    fn verb_phrase(&mut self) {
        if self.chance(0.35) {
            self.emit("R");
        }
        if self.chance(0.2) {
            self.emit("A");
            return;
        }
        self.emit("V");
        if self.chance(0.7) {
            self.noun_phrase();
        }
        if self.chance(0.3) {
            self.emit("E");
            self.noun_phrase();
        }
    }

    fn sentence(&mut self) -> WordSentence {
        self.out.clear();
        self.noun_phrase();
        self.verb_phrase();
        if self.chance(0.3) {
            if self.chance(0.5) {
                self.punct(",");
            }
            self.emit("C");
            self.noun_phrase();
            self.verb_phrase();
        }
        let end = [".", ".", ".", "?", "!"];
        let mark = *end.choose(&mut self.rng).unwrap();
        self.punct(mark);
        WordSentence::new(std::mem::take(&mut self.out)).expect("non-empty sentence")
    }
}

/// `n` sentences sampled from the fixed grammar with the given seed.
pub fn generate_synthetic_corpus(seed: u64, n: usize) -> Corpus {
    let vocab = Vocabulary::build();
    let mut g = Generator {
        vocab: &vocab,
        rng: ChaCha8Rng::seed_from_u64(seed),
        out: Vec::new(),
    };
    Corpus::new((0..n).map(|_| g.sentence()).collect())
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use unicode_normalization::UnicodeNormalization;

    use super::*;
    use crate::corpus::{parse_corpus, render_corpus};

    #[test]
    fn deterministic_and_parseable() {
        let a = generate_synthetic_corpus(1, 200);
        assert_eq!(a, generate_synthetic_corpus(1, 200));
        assert_ne!(a, generate_synthetic_corpus(2, 200));
        let text = render_corpus(&a).unwrap();
        assert_eq!(text, text.nfc().collect::<String>());
        assert_eq!(parse_corpus(&text).unwrap(), a);
    }

    #[test]
    fn rich_enough() {
        let c = generate_synthetic_corpus(1, 1000);
        let mut tags_of: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut syllables = BTreeSet::new();
        let mut lengths = BTreeSet::new();
        for s in &c.sentences {
            for (w, t) in s.items() {
                tags_of.entry(w.render()).or_default().insert(t.to_string());
                lengths.insert(w.len());
                syllables.extend(w.syllables().iter().map(|x| x.to_string()));
            }
        }
        let tags: BTreeSet<&String> = tags_of.values().flatten().collect();
        assert!(tags.len() >= 8, "{tags:?}");
        assert!(syllables.len() >= 200, "{}", syllables.len());
        assert_eq!(lengths, BTreeSet::from([1, 2, 3]));
        let ambiguous = tags_of.values().filter(|t| t.len() > 1).count();
        assert!(ambiguous * 10 >= tags_of.len(), "{ambiguous} of {}", tags_of.len());
    }
}
