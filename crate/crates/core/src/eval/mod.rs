//! Joint segmentation and tagging metrics, throughput measurement and
//! system comparison tables.

mod bench;
mod metrics;
mod report;

pub use bench::{bench_speed, median, BenchReport};
pub use metrics::{
    evaluate, f1_joint, sequence_score, tagging_accuracy, word_spans, EvalMode, EvalReport, Prf,
    TaggedSpan,
};
pub use report::{compare_report, ComparisonRow, ComparisonTable, System};
