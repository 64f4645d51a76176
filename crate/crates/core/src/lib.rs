//! Vietnamese word segmentation and POS tagging from unsegmented syllable
//! text, with a pipeline strategy (segment, then tag words) and a joint
//! strategy (one combined `B-x`/`I-x` tag per syllable).

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod labels;
pub mod rdr;
pub mod strategies;
pub mod synthetic;
pub mod tagger;

pub use error::{Error, Result};
