use std::fmt::Write as _;

use super::bench::{bench_speed, BenchReport};
use super::metrics::{evaluate, tagging_accuracy, EvalReport, Prf};
use crate::corpus::{strip_segmentation, Corpus, PosTag, Syllable, Word, WordSentence};
use crate::error::Result;
use crate::labels::LabelMode;
use crate::strategies::{parallel_map, require_mode, BackendKind, Labeler, Strategy, StrategyKind};

/// One row of a comparison: a strategy with its models.
pub struct System<'a> {
    pub name: String,
    pub backend: BackendKind,
    pub strategy: Strategy<'a>,
    /// Word-level tagger of the same backend, scored on gold segmentation.
    pub word_tagger: Option<&'a dyn Labeler>,
}

#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub name: String,
    pub strategy: StrategyKind,
    pub backend: BackendKind,
    pub eval: EvalReport,
    pub gold_seg_accuracy: Option<f64>,
    pub gold_seg_speed: Option<BenchReport>,
    pub speed: BenchReport,
}

/// Scores of several systems on one test corpus, pipeline rows first.
#[derive(Clone, Debug)]
pub struct ComparisonTable {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
    pub rows: Vec<ComparisonRow>,
}

fn tag_gold_words(tagger: &dyn Labeler, gold: &Corpus, threads: usize) -> Result<Vec<WordSentence>> {
    parallel_map(&gold.sentences, threads, |s| {
        let words: Vec<&Word> = s.words().collect();
        let tokens: Vec<String> = words.iter().map(|w| w.render()).collect();
        let tags = tagger.label(&tokens)?;
        let items = words
            .into_iter()
            .cloned()
            .zip(tags)
            .map(|(w, t)| Ok((w, PosTag::new(t)?)))
            .collect::<Result<Vec<_>>>()?;
        WordSentence::new(items)
    })
}

fn word_total(sentences: &[WordSentence]) -> usize {
    sentences.iter().map(WordSentence::len).sum()
}

/// Runs every system end to end on the unsegmented test sentences, scores
/// the output, and times both end-to-end tagging and, where a word tagger is
/// given, tagging under gold segmentation.
pub fn compare_report(
    systems: &[System],
    test: &Corpus,
    repetitions: usize,
    threads: usize,
) -> Result<ComparisonTable> {
    let threads = threads.max(1);
    let inputs: Vec<Vec<Syllable>> = test.sentences.iter().map(strip_segmentation).collect();
    let mut rows = Vec::with_capacity(systems.len());
    for system in systems {
        let pred = Corpus::new(system.strategy.tag_all(&inputs, threads)?);
        let eval = evaluate(test, &pred)?;
        let mut speed = bench_speed(
            |_| Ok(word_total(&system.strategy.tag_all(&inputs, threads)?)),
            test,
            repetitions,
        )?;
        speed.threads = threads;
        let (gold_seg_accuracy, gold_seg_speed) = match system.word_tagger {
            Some(tagger) => {
                require_mode(tagger, LabelMode::WordPos)?;
                let tagged = Corpus::new(tag_gold_words(tagger, test, threads)?);
                let accuracy = tagging_accuracy(test, &tagged)?;
                let mut bench = bench_speed(
                    |c| Ok(word_total(&tag_gold_words(tagger, c, threads)?)),
                    test,
                    repetitions,
                )?;
                bench.threads = threads;
                (Some(accuracy), Some(bench))
            }
            None => (None, None),
        };
        rows.push(ComparisonRow {
            name: system.name.clone(),
            strategy: system.strategy.kind(),
            backend: system.backend,
            eval,
            gold_seg_accuracy,
            gold_seg_speed,
            speed,
        });
    }
    // stable: keeps the given order inside each group
    rows.sort_by_key(|r| r.strategy);
    Ok(ComparisonTable {
        sentences: test.len(),
        words: test.word_count(),
        syllables: test.syllable_count(),
        rows,
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

impl ComparisonTable {
    /// Aligned plain-text table including timing columns.
    pub fn render_text(&self) -> String {
        let header = [
            "strategy",
            "backend",
            "system",
            "WSeg",
            "PTag",
            "acc(gold seg)",
            "words/s(gold seg)",
            "words/s(end-to-end)",
        ];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        let mut group_starts = Vec::new();
        for (k, r) in self.rows.iter().enumerate() {
            if k > 0 && self.rows[k - 1].strategy != r.strategy {
                group_starts.push(cells.len());
            }
            cells.push(vec![
                r.strategy.to_string(),
                r.backend.to_string(),
                r.name.clone(),
                pct(r.eval.wseg.f1),
                pct(r.eval.ptag.f1),
                r.gold_seg_accuracy.map_or_else(|| "-".into(), pct),
                r.gold_seg_speed
                    .as_ref()
                    .map_or_else(|| "-".into(), |b| format!("{:.0}", b.words_per_second)),
                format!("{:.0}", r.speed.words_per_second),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!(
            "test: {} sentences, {} words, {} syllables\n",
            self.sentences, self.words, self.syllables
        );
        for (k, row) in cells.iter().enumerate() {
            if group_starts.contains(&k) {
                out.push('\n');
            }
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                let pad = widths[c] - cell.chars().count();
                if c < 3 {
                    let _ = write!(line, "{cell}{}  ", " ".repeat(pad));
                } else {
                    let _ = write!(line, "{}{cell}  ", " ".repeat(pad));
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    /// `key=value` lines with scores and counts only; identical inputs and
    /// models give identical bytes.
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "test.sentences={}", self.sentences);
        let _ = writeln!(out, "test.words={}", self.words);
        let _ = writeln!(out, "test.syllables={}", self.syllables);
        let _ = writeln!(out, "systems={}", self.rows.len());
        for (k, r) in self.rows.iter().enumerate() {
            let p = format!("system.{}", k + 1);
            let _ = writeln!(out, "{p}.name={}", r.name);
            let _ = writeln!(out, "{p}.strategy={}", r.strategy);
            let _ = writeln!(out, "{p}.backend={}", r.backend);
            for (m, prf) in [("wseg", &r.eval.wseg), ("ptag", &r.eval.ptag)] {
                write_prf(&mut out, &format!("{p}.{m}"), prf);
            }
            let acc = r
                .gold_seg_accuracy
                .map_or_else(|| "n/a".to_string(), |a| format!("{a:.6}"));
            let _ = writeln!(out, "{p}.gold_seg_accuracy={acc}");
        }
        out
    }

    /// Timing figures, kept apart from the deterministic report.
    pub fn render_timing(&self) -> String {
        let mut out = String::new();
        for (k, r) in self.rows.iter().enumerate() {
            let p = format!("system.{}", k + 1);
            let _ = writeln!(out, "{p}.name={}", r.name);
            let _ = writeln!(out, "{p}.end_to_end.words_per_second={:.1}", r.speed.words_per_second);
            let _ = writeln!(out, "{p}.end_to_end.median_seconds={:.6}", r.speed.seconds);
            if let Some(b) = &r.gold_seg_speed {
                let _ = writeln!(out, "{p}.gold_seg.words_per_second={:.1}", b.words_per_second);
                let _ = writeln!(out, "{p}.gold_seg.median_seconds={:.6}", b.seconds);
            }
            let _ = writeln!(out, "{p}.repetitions={}", r.speed.repetitions);
            let _ = writeln!(out, "{p}.threads={}", r.speed.threads);
        }
        out
    }
}

fn write_prf(out: &mut String, prefix: &str, prf: &Prf) {
    let _ = writeln!(out, "{prefix}.correct={}", prf.correct);
    let _ = writeln!(out, "{prefix}.predicted={}", prf.predicted);
    let _ = writeln!(out, "{prefix}.gold={}", prf.gold);
    let _ = writeln!(out, "{prefix}.precision={:.6}", prf.precision);
    let _ = writeln!(out, "{prefix}.recall={:.6}", prf.recall);
    let _ = writeln!(out, "{prefix}.f1={:.6}", prf.f1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus, to_syllable_repr};
    use crate::Error;

    /// Looks up gold labels by token sequence.
    struct Oracle(LabelMode, Vec<(Vec<String>, Vec<String>)>);

    impl Labeler for Oracle {
        fn mode(&self) -> LabelMode {
            self.0
        }
        fn label(&self, tokens: &[String]) -> Result<Vec<String>> {
            self.1
                .iter()
                .find(|(t, _)| t == tokens)
                .map(|(_, l)| l.clone())
                .ok_or_else(|| Error::InvalidConfig("unknown sentence".into()))
        }
    }

    fn oracles(gold: &Corpus) -> (Oracle, Oracle, Oracle) {
        let mut joint = Vec::new();
        let mut seg = Vec::new();
        let mut words = Vec::new();
        for s in &gold.sentences {
            let (t, l): (Vec<String>, Vec<String>) = to_syllable_repr(s)
                .items()
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .unzip();
            seg.push((t.clone(), l.iter().map(|x| x[..1].to_string()).collect()));
            joint.push((t, l));
            words.push((
                s.words().map(|w| w.render()).collect(),
                s.tags().map(|t| t.to_string()).collect(),
            ));
        }
        (
            Oracle(LabelMode::SyllableCombined, joint),
            Oracle(LabelMode::SyllableSeg, seg),
            Oracle(LabelMode::WordPos, words),
        )
    }

    #[test]
    fn oracle_rows_are_perfect_and_grouped() {
        let gold = parse_corpus("a_b/N c/V\nd/N e_f/A\n").unwrap();
        let (joint, seg, words) = oracles(&gold);
        let systems = [
            System {
                name: "joint-oracle".into(),
                backend: BackendKind::Lexicon,
                strategy: Strategy::Joint(&joint),
                word_tagger: None,
            },
            System {
                name: "pipeline-oracle".into(),
                backend: BackendKind::Lexicon,
                strategy: Strategy::Pipeline {
                    segmenter: &seg,
                    tagger: &words,
                },
                word_tagger: Some(&words),
            },
        ];
        let table = compare_report(&systems, &gold, 1, 1).unwrap();
        assert_eq!(table.rows[0].strategy, StrategyKind::Pipeline);
        assert_eq!(table.rows[1].strategy, StrategyKind::Joint);
        for r in &table.rows {
            assert_eq!((r.eval.wseg.f1, r.eval.ptag.f1), (1.0, 1.0));
        }
        assert_eq!(table.rows[0].gold_seg_accuracy, Some(1.0));
        let text = table.render_text();
        assert!(text.contains("100.00"));
        let machine = table.render_machine();
        assert!(machine.contains("system.1.name=pipeline-oracle\n"));
        assert!(machine.contains("system.2.ptag.f1=1.000000\n"));
        assert!(machine.contains("system.2.gold_seg_accuracy=n/a\n"));
        assert!(!machine.contains("seconds"));
    }
}
