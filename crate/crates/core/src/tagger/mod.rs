//! Linear-chain sequence tagger trained as an averaged structured perceptron
//! and decoded with Viterbi.
//!
//! The same tagger runs in all three label modes: POS tags over words,
//! combined `B-x`/`I-x` tags over syllables, and `B`/`I` segmentation tags
//! over syllables. In the syllable modes decoding is hard-constrained so the
//! output always converts back into words.
//!
//! # Model file
//!
//! UTF-8 text, `\n` line endings:
//!
//! ```text
//! segtag-feature-model
//! version 1
//! mode <word-pos|syllable-combined|syllable-seg>
//! meta <key>=<value>            (zero or more)
//! tags <n>
//! <label>                       (n lines, inventory order)
//! templates <m>
//! <id> <kind> <offsets>         (m lines, offsets comma-separated)
//! features <k>
//! <feature>\t<tag>:<weight> ... (k lines, sorted by feature)
//! end
//! ```
//!
//! Weights are averaged weights printed in shortest round-trip decimal form.

mod decode;
mod features;
mod model;
mod train;

pub use decode::{viterbi_decode, Constraint};
pub use features::{
    default_templates, extract_features, shape, validate_templates, FeatureTemplate, TemplateKind,
    BOS, EOS,
};
pub use model::{load_model, save_model, TagInventory, WeightModel, MODEL_MAGIC, MODEL_VERSION};
pub use train::{
    train_averaged_perceptron, EpochRecord, PerceptronTrainer, TrainConfig, TrainReport,
};
