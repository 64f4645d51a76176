use std::time::{Duration, Instant};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Throughput of the median timed run. Model loading is never inside the
/// timed region.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub words: usize,
    pub seconds: f64,
    pub words_per_second: f64,
    pub repetitions: usize,
    pub threads: usize,
    pub runs: Vec<Duration>,
}

/// Middle element after sorting; the lower middle for an even count.
pub fn median(durations: &[Duration]) -> Option<Duration> {
    let mut sorted = durations.to_vec();
    sorted.sort();
    (!sorted.is_empty()).then(|| sorted[(sorted.len() - 1) / 2])
}

impl BenchReport {
    pub fn from_durations(words: usize, runs: Vec<Duration>, threads: usize) -> Result<Self> {
        let mid = median(&runs).ok_or_else(|| Error::InvalidConfig("no timed runs".into()))?;
        if mid.is_zero() {
            return Err(Error::TimerResolution);
        }
        let seconds = mid.as_secs_f64();
        Ok(Self {
            words,
            seconds,
            words_per_second: words as f64 / seconds,
            repetitions: runs.len(),
            threads,
            runs,
        })
    }

    pub fn render(&self) -> String {
        let runs: Vec<String> = self.runs.iter().map(|d| format!("{:.6}", d.as_secs_f64())).collect();
        format!(
            "words={}\nrepetitions={}\nthreads={}\nrun_seconds={}\nmedian_seconds={:.6}\nwords_per_second={:.1}\nmodel_loading=excluded\n",
            self.words,
            self.repetitions,
            self.threads,
            runs.join(","),
            self.seconds,
            self.words_per_second
        )
    }
}

/// Times `repetitions` full passes of `tagger` over `corpus`. The tagger
/// returns the number of words it tagged; the last pass's count is reported.
pub fn bench_speed(
    mut tagger: impl FnMut(&Corpus) -> Result<usize>,
    corpus: &Corpus,
    repetitions: usize,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut runs = Vec::with_capacity(repetitions);
    let mut words = 0;
    for _ in 0..repetitions {
        let start = Instant::now();
        words = tagger(corpus)?;
        runs.push(start.elapsed());
    }
    BenchReport::from_durations(words, runs, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus;

    fn ms(n: u64) -> Duration {
        Duration::from_millis(n)
    }

    #[test]
    fn arithmetic() {
        let r = BenchReport::from_durations(1000, vec![ms(10)], 1).unwrap();
        assert!((r.words_per_second - 100_000.0).abs() < 1e-6);
    }

    #[test]
    fn median_of_three() {
        let r = BenchReport::from_durations(10, vec![ms(12), ms(10), ms(11)], 1).unwrap();
        assert_eq!(r.seconds, 0.011);
        assert_eq!(median(&[ms(4), ms(1), ms(3), ms(2)]), Some(ms(2)));
    }

    #[test]
    fn zero_duration() {
        assert!(matches!(
            BenchReport::from_durations(10, vec![Duration::ZERO], 1),
            Err(Error::TimerResolution)
        ));
    }

    #[test]
    fn positive_throughput() {
        let c = parse_corpus("a/N b/V\n").unwrap();
        let r = bench_speed(
            |c| {
                std::thread::sleep(ms(1));
                Ok(c.word_count())
            },
            &c,
            3,
        )
        .unwrap();
        assert_eq!(r.words, 2);
        assert!(r.words_per_second > 0.0);
        assert_eq!(r.runs.len(), 3);
    }
}
