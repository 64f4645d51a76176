use crate::corpus::{CombinedTag, Corpus, PosTag, SegTag, WordSentence};
use crate::error::{Error, Result};
use crate::labels::{LabelMode, LabeledSequence};
use crate::strategies::repair_tag_sequence;

/// A word as a half-open syllable interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaggedSpan {
    pub start: usize,
    pub end: usize,
    pub tag: Option<PosTag>,
}

/// Which span attributes must match for a word to count as correct.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Boundaries only.
    WSeg,
    /// Boundaries and tag.
    PTag,
}

/// Counts with derived precision, recall and F1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// With nothing predicted and nothing in gold every score is 1; with
    /// only one side empty every score involving it is 0.
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        if predicted == 0 && gold == 0 {
            return Self {
                correct,
                predicted,
                gold,
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        Self {
            correct,
            predicted,
            gold,
            precision: ratio(correct, predicted),
            recall: ratio(correct, gold),
            // harmonic mean of p and r, written so that p = r gives exactly p
            f1: ratio(2 * correct, predicted + gold),
        }
    }
}

/// Syllable spans of the words of a sentence, in order.
pub fn word_spans(sentence: &WordSentence) -> Vec<TaggedSpan> {
    let mut start = 0;
    sentence
        .items()
        .iter()
        .map(|(word, tag)| {
            let span = TaggedSpan {
                start,
                end: start + word.len(),
                tag: Some(tag.clone()),
            };
            start = span.end;
            span
        })
        .collect()
}

/// Number of spans present in both partitions (matching tags too in PTag
/// mode). Both inputs must be sorted partitions of the same range.
pub(crate) fn count_matches(gold: &[TaggedSpan], pred: &[TaggedSpan], mode: EvalMode) -> usize {
    let (mut g, mut p, mut n) = (0, 0, 0);
    while g < gold.len() && p < pred.len() {
        let (a, b) = (&gold[g], &pred[p]);
        if a.start == b.start && a.end == b.end {
            if mode == EvalMode::WSeg || a.tag == b.tag {
                n += 1;
            }
            g += 1;
            p += 1;
        } else if a.end <= b.end {
            g += 1;
        } else {
            p += 1;
        }
    }
    n
}

fn check_aligned(gold: &Corpus, pred: &Corpus) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::SentenceMismatch {
            index: gold.len().min(pred.len()) + 1,
            reason: format!(
                "gold has {} sentences, prediction has {}",
                gold.len(),
                pred.len()
            ),
        });
    }
    for (i, (g, p)) in gold.sentences.iter().zip(&pred.sentences).enumerate() {
        let same = g.syllable_count() == p.syllable_count()
            && g
                .words()
                .flat_map(|w| w.syllables())
                .eq(p.words().flat_map(|w| w.syllables()));
        if !same {
            return Err(Error::SentenceMismatch {
                index: i + 1,
                reason: "syllable sequences differ".into(),
            });
        }
    }
    Ok(())
}

/// Per-sentence `(wseg correct, ptag correct, predicted words, gold words)`.
fn sentence_counts(gold: &WordSentence, pred: &WordSentence) -> (usize, usize, usize, usize) {
    let g = word_spans(gold);
    let p = word_spans(pred);
    (
        count_matches(&g, &p, EvalMode::WSeg),
        count_matches(&g, &p, EvalMode::PTag),
        p.len(),
        g.len(),
    )
}

/// Micro-averaged span F1 over the corpus.
pub fn f1_joint(gold: &Corpus, pred: &Corpus, mode: EvalMode) -> Result<Prf> {
    check_aligned(gold, pred)?;
    let (mut correct, mut predicted, mut total) = (0, 0, 0);
    for (g, p) in gold.sentences.iter().zip(&pred.sentences) {
        let (ws, pt, np, ng) = sentence_counts(g, p);
        correct += if mode == EvalMode::WSeg { ws } else { pt };
        predicted += np;
        total += ng;
    }
    Ok(Prf::from_counts(correct, predicted, total))
}

fn same_segmentation(gold: &WordSentence, pred: &WordSentence) -> bool {
    gold.len() == pred.len() && gold.words().eq(pred.words())
}

/// Fraction of correctly tagged words; the segmentation must match gold.
pub fn tagging_accuracy(gold: &Corpus, pred: &Corpus) -> Result<f64> {
    check_aligned(gold, pred)?;
    let (mut correct, mut total) = (0, 0);
    for (i, (g, p)) in gold.sentences.iter().zip(&pred.sentences).enumerate() {
        if !same_segmentation(g, p) {
            return Err(Error::SentenceMismatch {
                index: i + 1,
                reason: "segmentation differs from gold".into(),
            });
        }
        correct += g.tags().zip(p.tags()).filter(|(a, b)| a == b).count();
        total += g.len();
    }
    Ok(if total == 0 { 1.0 } else { correct as f64 / total as f64 })
}

/// Scores of one prediction against gold.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub wseg: Prf,
    pub ptag: Prf,
    /// Tagging accuracy, present when the prediction keeps gold segmentation.
    pub accuracy: Option<f64>,
    pub sentences: usize,
    pub gold_words: usize,
    pub predicted_words: usize,
    pub syllables: usize,
}

pub fn evaluate(gold: &Corpus, pred: &Corpus) -> Result<EvalReport> {
    check_aligned(gold, pred)?;
    let mut sums = (0, 0, 0, 0);
    let mut same_seg = true;
    for (g, p) in gold.sentences.iter().zip(&pred.sentences) {
        let (ws, pt, np, ng) = sentence_counts(g, p);
        sums = (sums.0 + ws, sums.1 + pt, sums.2 + np, sums.3 + ng);
        same_seg &= same_segmentation(g, p);
    }
    Ok(EvalReport {
        wseg: Prf::from_counts(sums.0, sums.2, sums.3),
        ptag: Prf::from_counts(sums.1, sums.2, sums.3),
        accuracy: if same_seg {
            Some(tagging_accuracy(gold, pred)?)
        } else {
            None
        },
        sentences: gold.len(),
        gold_words: sums.3,
        predicted_words: sums.2,
        syllables: gold.syllable_count(),
    })
}

impl EvalReport {
    /// `key=value` lines; scores as percentages with two decimals.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        line("sentences", self.sentences.to_string());
        line("syllables", self.syllables.to_string());
        line("gold_words", self.gold_words.to_string());
        line("predicted_words", self.predicted_words.to_string());
        for (name, prf) in [("wseg", &self.wseg), ("ptag", &self.ptag)] {
            line(&format!("{name}.correct"), prf.correct.to_string());
            line(&format!("{name}.precision"), format!("{:.2}", 100.0 * prf.precision));
            line(&format!("{name}.recall"), format!("{:.2}", 100.0 * prf.recall));
            line(&format!("{name}.f1"), format!("{:.2}", 100.0 * prf.f1));
        }
        line(
            "accuracy",
            self.accuracy
                .map_or_else(|| "n/a".to_string(), |a| format!("{:.2}", 100.0 * a)),
        );
        out
    }
}

/// Spans from B/I segmentation marks, each with an optional tag. A leading
/// `I` opens a word like `B`.
fn bi_spans(marks: impl Iterator<Item = (SegTag, Option<PosTag>)>) -> Vec<TaggedSpan> {
    let mut spans: Vec<TaggedSpan> = Vec::new();
    for (i, (seg, tag)) in marks.enumerate() {
        match spans.last_mut() {
            Some(last) if seg == SegTag::I => last.end = i + 1,
            _ => spans.push(TaggedSpan {
                start: i,
                end: i + 1,
                tag,
            }),
        }
    }
    spans
}

/// Development score of predicted label sequences in the given mode:
/// token accuracy for word-pos, PTag F1 for syllable-combined (after
/// repair) and WSeg F1 for syllable-seg.
pub fn sequence_score(mode: LabelMode, gold: &[LabeledSequence], pred: &[Vec<String>]) -> Result<f64> {
    if gold.len() != pred.len() {
        return Err(Error::SentenceMismatch {
            index: gold.len().min(pred.len()) + 1,
            reason: "different numbers of sequences".into(),
        });
    }
    let (mut correct, mut predicted, mut total) = (0, 0, 0);
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.labels.len() != p.len() {
            return Err(Error::SentenceMismatch {
                index: i + 1,
                reason: format!("{} gold labels, {} predicted", g.labels.len(), p.len()),
            });
        }
        match mode {
            LabelMode::WordPos => {
                correct += g.labels.iter().zip(p).filter(|(a, b)| a == b).count();
                predicted += p.len();
                total += p.len();
            }
            LabelMode::SyllableCombined => {
                let parse = |labels: &[String]| {
                    labels
                        .iter()
                        .map(|l| l.parse::<CombinedTag>())
                        .collect::<Result<Vec<_>>>()
                };
                let gs = bi_spans(parse(&g.labels)?.into_iter().map(|t| (t.seg, Some(t.pos))));
                let ps = bi_spans(
                    repair_tag_sequence(&parse(p)?)
                        .into_iter()
                        .map(|t| (t.seg, Some(t.pos))),
                );
                correct += count_matches(&gs, &ps, EvalMode::PTag);
                predicted += ps.len();
                total += gs.len();
            }
            LabelMode::SyllableSeg => {
                let parse = |labels: &[String]| {
                    labels
                        .iter()
                        .map(|l| l.parse::<SegTag>().map(|s| (s, None)))
                        .collect::<Result<Vec<_>>>()
                };
                let gs = bi_spans(parse(&g.labels)?.into_iter());
                let ps = bi_spans(parse(p)?.into_iter());
                correct += count_matches(&gs, &ps, EvalMode::WSeg);
                predicted += ps.len();
                total += gs.len();
            }
        }
    }
    let prf = Prf::from_counts(correct, predicted, total);
    Ok(match mode {
        LabelMode::WordPos => prf.recall,
        _ => prf.f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    fn corpus(text: &str) -> Corpus {
        parse_corpus(text).unwrap()
    }

    #[test]
    fn spans_of_example_phrase() {
        let c = corpus("thuế_thu_nhập/N cá_nhân/N\n");
        let spans = word_spans(&c.sentences[0]);
        let tuples: Vec<_> = spans
            .iter()
            .map(|s| (s.start, s.end, s.tag.as_ref().unwrap().as_str()))
            .collect();
        assert_eq!(tuples, [(0, 3, "N"), (3, 5, "N")]);
    }

    #[test]
    fn hand_examples() {
        let gold = corpus("a_b/N c/V\n");
        let crossed = corpus("a/N b_c/V\n");
        assert_eq!(f1_joint(&gold, &crossed, EvalMode::WSeg).unwrap().f1, 0.0);
        assert_eq!(f1_joint(&gold, &crossed, EvalMode::PTag).unwrap().f1, 0.0);

        let retagged = corpus("a_b/V c/V\n");
        assert_eq!(f1_joint(&gold, &retagged, EvalMode::WSeg).unwrap().f1, 1.0);
        let ptag = f1_joint(&gold, &retagged, EvalMode::PTag).unwrap();
        assert_eq!((ptag.correct, ptag.precision, ptag.recall, ptag.f1), (1, 0.5, 0.5, 0.5));
        assert_eq!(tagging_accuracy(&gold, &retagged).unwrap(), 0.5);

        let same = f1_joint(&gold, &gold, EvalMode::PTag).unwrap();
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn zero_conventions() {
        assert_eq!(Prf::from_counts(0, 0, 0).f1, 1.0);
        assert_eq!(Prf::from_counts(0, 0, 3).f1, 0.0);
        assert_eq!(Prf::from_counts(0, 2, 0).f1, 0.0);
    }

    #[test]
    fn mismatches_name_the_sentence() {
        let gold = corpus("a/N\nb/N\n");
        let pred = corpus("a/N\nc/N\n");
        match f1_joint(&gold, &pred, EvalMode::WSeg) {
            Err(Error::SentenceMismatch { index, .. }) => assert_eq!(index, 2),
            other => panic!("{other:?}"),
        }
        let short = corpus("a/N\n");
        assert!(matches!(
            f1_joint(&gold, &short, EvalMode::WSeg),
            Err(Error::SentenceMismatch { index: 2, .. })
        ));
        let gold = corpus("a_b/N\n");
        let pred = corpus("a/N b/N\n");
        assert!(matches!(
            tagging_accuracy(&gold, &pred),
            Err(Error::SentenceMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn report_accuracy_only_under_gold_segmentation() {
        let gold = corpus("a_b/N c/V\n");
        assert_eq!(evaluate(&gold, &corpus("a_b/V c/V\n")).unwrap().accuracy, Some(0.5));
        assert_eq!(evaluate(&gold, &corpus("a/N b_c/V\n")).unwrap().accuracy, None);
    }

    #[test]
    fn sequence_scores() {
        let seq = |labels: &[&str]| LabeledSequence {
            tokens: labels.iter().map(|_| "x".to_string()).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        };
        let own = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let gold = [seq(&["B-N", "I-N", "B-V"])];
        // repaired to B-N B-V B-V: 1 correct, 3 predicted, 2 gold
        let score = sequence_score(LabelMode::SyllableCombined, &gold, &[own(&["B-N", "I-V", "B-V"])]).unwrap();
        assert!((score - 0.4).abs() < 1e-12);
        let gold = [seq(&["B", "I", "B"])];
        let score = sequence_score(LabelMode::SyllableSeg, &gold, &[own(&["I", "I", "B"])]).unwrap();
        assert_eq!(score, 1.0);
        let gold = [seq(&["N", "V"])];
        assert_eq!(sequence_score(LabelMode::WordPos, &gold, &[own(&["N", "N"])]).unwrap(), 0.5);
    }
}
