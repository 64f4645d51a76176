//! Ripple-down-rule tagger: a most-frequent-label lexicon refined by a tree
//! of exception rules.
//!
//! # Tree file
//!
//! ```text
//! segtag-rdr-tree
//! version 1
//! mode <label mode>
//! meta <key>=<value>            (zero or more)
//! rules <n>
//! true : lexicon
//! <tabs><condition> : <label>   (n lines, depth-first)
//! lexicon
//! default <label>
//! entries <k>
//! <token>\t<label>:<count> ...  (k lines, sorted by token)
//! end
//! ```
//!
//! A rule indented one tab deeper than the line above it is that rule's
//! first exception; a rule at the same depth as an earlier one is its
//! if-not sibling. Conditions are atoms joined by ` & `:
//! `w<o>=<token>` and `t<o>=<label>` with `o` in `-2..=+2`, and `s<k>=<suffix>`
//! for the last `k` (1 to 3) characters of the current token. A standalone
//! lexicon file is the same header with the magic `segtag-lexicon`, followed
//! directly by the `default`/`entries` block and `end`.

mod learn;
mod lexicon;
mod tree;

pub use learn::{learn_rdr, DEFAULT_MIN_GAIN};
pub use lexicon::{
    build_lexicon, lexicon_tag, load_lexicon, save_lexicon, LexEntry, Lexicon, LEXICON_MAGIC,
    LEXICON_VERSION,
};
pub use tree::{
    apply_rdr, load_tree, save_tree, Atom, RdrNode, RdrTree, RuleCondition, TREE_MAGIC,
    TREE_VERSION,
};

use crate::error::{Error, Result};
use crate::labels::LabelMode;

/// Checks magic and version lines and reads the label mode.
pub(crate) fn read_header<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    magic: &str,
    version: u32,
) -> Result<LabelMode> {
    if lines.next() != Some(magic) {
        return Err(Error::CorruptModel(format!("expected {magic:?} header")));
    }
    let found = lines
        .next()
        .and_then(|l| l.strip_prefix("version "))
        .ok_or_else(|| Error::CorruptModel("missing version line".into()))?;
    if found != version.to_string() {
        return Err(Error::VersionMismatch {
            found: found.to_string(),
            expected: version,
        });
    }
    lines
        .next()
        .and_then(|l| l.strip_prefix("mode "))
        .ok_or_else(|| Error::CorruptModel("missing mode line".into()))?
        .parse()
        .map_err(|e: Error| Error::CorruptModel(e.to_string()))
}
