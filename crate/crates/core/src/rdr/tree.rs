use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::lexicon::{lexicon_tag, Lexicon};
use crate::error::{Error, Result};
use crate::labels::LabelMode;
use crate::tagger::{BOS, EOS};

pub const TREE_MAGIC: &str = "segtag-rdr-tree";
pub const TREE_VERSION: u32 = 1;

/// One test of a rule condition, relative to the current position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// Token at the offset equals the value.
    Token { offset: i8, value: String },
    /// Context label at the offset equals the value. Offsets left of the
    /// current position see final labels; the rest see lexicon labels.
    Label { offset: i8, value: String },
    /// The current token ends with the value, which has `len` characters.
    Suffix { len: u8, value: String },
}

fn offset_name(offset: i8) -> String {
    if offset > 0 {
        format!("+{offset}")
    } else {
        offset.to_string()
    }
}

fn at<S: AsRef<str>>(items: &[S], j: isize) -> &str {
    if j < 0 {
        BOS
    } else if j as usize >= items.len() {
        EOS
    } else {
        items[j as usize].as_ref()
    }
}

/// The ±2 neighbourhood of one position as seen by rule conditions.
pub(crate) struct Window<'a> {
    pub tokens: [&'a str; 5],
    pub labels: [&'a str; 5],
}

impl<'a> Window<'a> {
    /// Labels left of `i` come from `done`, the rest from `pending`.
    pub fn new<S: AsRef<str>, L: AsRef<str>>(tokens: &'a [S], done: &'a [L], pending: &'a [L], i: usize) -> Self {
        let mut w = Window {
            tokens: [BOS; 5],
            labels: [BOS; 5],
        };
        for k in 0..5 {
            let j = i as isize + k as isize - 2;
            w.tokens[k] = at(tokens, j);
            w.labels[k] = if j >= 0 && (j as usize) < i {
                done[j as usize].as_ref()
            } else {
                at(pending, j)
            };
        }
        w
    }

    pub fn token(&self, offset: i8) -> &'a str {
        self.tokens[(offset + 2) as usize]
    }

    pub fn label(&self, offset: i8) -> &'a str {
        self.labels[(offset + 2) as usize]
    }
}

/// Last `len` characters of `token`, if it has that many.
pub(crate) fn suffix(token: &str, len: u8) -> Option<&str> {
    let n = token.chars().count();
    if n < len as usize {
        return None;
    }
    let start = token
        .char_indices()
        .nth(n - len as usize)
        .map_or(0, |(s, _)| s);
    Some(&token[start..])
}

impl Atom {
    pub(crate) fn matches(&self, w: &Window) -> bool {
        match self {
            Atom::Token { offset, value } => w.token(*offset) == value,
            Atom::Label { offset, value } => w.label(*offset) == value,
            Atom::Suffix { len, value } => suffix(w.token(0), *len) == Some(value),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Token { offset, value } => write!(f, "w{}={value}", offset_name(*offset)),
            Atom::Label { offset, value } => write!(f, "t{}={value}", offset_name(*offset)),
            Atom::Suffix { len, value } => write!(f, "s{len}={value}"),
        }
    }
}

impl FromStr for Atom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason| Error::InvalidValue {
            kind: "rule atom",
            value: s.to_string(),
            reason,
        };
        let (key, value) = s.split_once('=').ok_or_else(|| bad("missing '='"))?;
        if value.is_empty() {
            return Err(bad("empty value"));
        }
        let value = value.to_string();
        let (kind, arg) = key.split_at(key.chars().next().map_or(0, char::len_utf8));
        match kind {
            "w" | "t" => {
                let offset: i8 = arg.parse().map_err(|_| bad("bad offset"))?;
                if !(-2..=2).contains(&offset) {
                    return Err(bad("offset outside [-2, 2]"));
                }
                Ok(if kind == "w" {
                    Atom::Token { offset, value }
                } else {
                    Atom::Label { offset, value }
                })
            }
            "s" => {
                let len: u8 = arg.parse().map_err(|_| bad("bad suffix length"))?;
                if !(1..=3).contains(&len) || value.chars().count() != len as usize {
                    return Err(bad("suffix length must be 1-3 and match the value"));
                }
                Ok(Atom::Suffix { len, value })
            }
            _ => Err(bad("unknown atom kind")),
        }
    }
}

/// A conjunction of at least one atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RuleCondition {
    atoms: Vec<Atom>,
}

impl RuleCondition {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidValue {
                kind: "rule condition",
                value: String::new(),
                reason: "needs at least one atom",
            });
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub(crate) fn matches(&self, w: &Window) -> bool {
        self.atoms.iter().all(|a| a.matches(w))
    }
}

impl fmt::Display for RuleCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.atoms.iter().enumerate() {
            if k > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromStr for RuleCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s.split(" & ").map(str::parse).collect::<Result<_>>()?)
    }
}

/// A rule node. The root has no condition (always true) and no conclusion
/// (keeps the lexicon label).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RdrNode {
    pub condition: Option<RuleCondition>,
    pub conclusion: Option<String>,
    pub except_child: Option<usize>,
    pub if_not_child: Option<usize>,
}

/// Single-classification ripple-down rule tree over a lexicon tagger.
///
/// Nodes live in an arena; node 0 is the root and every child index is
/// larger than its parent's, so evaluation always terminates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RdrTree {
    pub(crate) lexicon: Lexicon,
    pub(crate) nodes: Vec<RdrNode>,
    pub(crate) metadata: Vec<(String, String)>,
}

impl RdrTree {
    /// A tree holding only the default rule.
    pub fn new(lexicon: Lexicon) -> Self {
        Self {
            lexicon,
            nodes: vec![RdrNode {
                condition: None,
                conclusion: None,
                except_child: None,
                if_not_child: None,
            }],
            metadata: Vec::new(),
        }
    }

    pub fn mode(&self) -> LabelMode {
        self.lexicon.mode()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn nodes(&self) -> &[RdrNode] {
        &self.nodes
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// Number of exception rules (excluding the default rule).
    pub fn rule_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Appends a rule as the last exception of `parent` and returns its id.
    pub(crate) fn push_rule(&mut self, parent: usize, condition: RuleCondition, conclusion: String) -> usize {
        let id = self.nodes.len();
        self.nodes.push(RdrNode {
            condition: Some(condition),
            conclusion: Some(conclusion),
            except_child: None,
            if_not_child: None,
        });
        match self.nodes[parent].except_child {
            None => self.nodes[parent].except_child = Some(id),
            Some(mut k) => {
                while let Some(next) = self.nodes[k].if_not_child {
                    k = next;
                }
                self.nodes[k].if_not_child = Some(id);
            }
        }
        id
    }

    /// Removes the most recently pushed rule, which must be a leaf.
    pub(crate) fn pop_rule(&mut self) {
        let id = self.nodes.len() - 1;
        assert!(id > 0, "cannot remove the default rule");
        for n in &mut self.nodes {
            if n.except_child == Some(id) {
                n.except_child = None;
            }
            if n.if_not_child == Some(id) {
                n.if_not_child = None;
            }
        }
        self.nodes.pop();
    }

    /// Node whose conclusion applies at position `i`: the last node on the
    /// evaluation path whose condition held.
    pub(crate) fn fired(&self, w: &Window) -> usize {
        let mut fired = 0;
        let mut cur = self.nodes[0].except_child;
        while let Some(id) = cur {
            let node = &self.nodes[id];
            let holds = node
                .condition
                .as_ref()
                .is_some_and(|c| c.matches(w));
            if holds {
                fired = id;
                cur = node.except_child;
            } else {
                cur = node.if_not_child;
            }
        }
        fired
    }

    /// Tags in one left-to-right pass, returning labels and the node that
    /// fired at each position.
    pub(crate) fn apply_traced<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<String>, Vec<String>, Vec<usize>) {
        let initial = lexicon_tag(&self.lexicon, tokens);
        let mut labels = initial.clone();
        let mut fired = Vec::with_capacity(tokens.len());
        for i in 0..tokens.len() {
            let id = self.fired(&Window::new(tokens, &labels, &labels, i));
            if let Some(c) = &self.nodes[id].conclusion {
                labels[i] = c.clone();
            }
            fired.push(id);
        }
        (labels, initial, fired)
    }

    fn write_node(&self, id: usize, depth: usize, out: &mut String) {
        let node = &self.nodes[id];
        for _ in 0..depth {
            out.push('\t');
        }
        match (&node.condition, &node.conclusion) {
            (Some(c), Some(l)) => {
                let _ = writeln!(out, "{c} : {l}");
            }
            _ => out.push_str("true : lexicon\n"),
        }
        if let Some(child) = node.except_child {
            self.write_node(child, depth + 1, out);
        }
        if let Some(sibling) = node.if_not_child {
            self.write_node(sibling, depth, out);
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{TREE_MAGIC}\nversion {TREE_VERSION}\nmode {}\n", self.mode());
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "meta {k}={v}");
        }
        let _ = writeln!(out, "rules {}", self.rule_count());
        self.write_node(0, 0, &mut out);
        out.push_str("lexicon\n");
        self.lexicon.write_body(&mut out);
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mode = super::read_header(&mut lines, TREE_MAGIC, TREE_VERSION)?;
        let corrupt = Error::CorruptModel;
        let mut metadata = Vec::new();
        let mut cur = need(lines.next())?;
        while let Some(kv) = cur.strip_prefix("meta ") {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| corrupt(format!("bad metadata line {cur:?}")))?;
            metadata.push((k.to_string(), v.to_string()));
            cur = need(lines.next())?;
        }
        let n_rules: usize = cur
            .strip_prefix("rules ")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| corrupt(format!("expected rule count, found {cur:?}")))?;
        if need(lines.next())? != "true : lexicon" {
            return Err(corrupt("missing default rule".into()));
        }

        let mut nodes = vec![RdrNode {
            condition: None,
            conclusion: None,
            except_child: None,
            if_not_child: None,
        }];
        // stack[d] = most recent node at depth d
        let mut stack: Vec<usize> = vec![0];
        for _ in 0..n_rules {
            let l = need(lines.next())?;
            let depth = l.len() - l.trim_start_matches('\t').len();
            let body = &l[depth..];
            if depth == 0 || depth > stack.len() {
                return Err(corrupt(format!("bad indentation in {l:?}")));
            }
            let (cond, label) = body
                .rsplit_once(" : ")
                .ok_or_else(|| corrupt(format!("bad rule line {l:?}")))?;
            let condition: RuleCondition = cond.parse().map_err(|e: Error| corrupt(e.to_string()))?;
            mode.validate(label).map_err(|e| corrupt(e.to_string()))?;
            let id = nodes.len();
            nodes.push(RdrNode {
                condition: Some(condition),
                conclusion: Some(label.to_string()),
                except_child: None,
                if_not_child: None,
            });
            if stack.len() > depth {
                let sibling = stack[depth];
                nodes[sibling].if_not_child = Some(id);
                stack.truncate(depth);
            } else {
                let parent = stack[depth - 1];
                nodes[parent].except_child = Some(id);
            }
            stack.push(id);
        }
        if need(lines.next())? != "lexicon" {
            return Err(corrupt("rule count does not match the rule listing".into()));
        }
        let lexicon = Lexicon::read_body(mode, &mut lines)?;
        if lines.next() != Some("end") {
            return Err(corrupt("missing end marker".into()));
        }
        Ok(Self {
            lexicon,
            nodes,
            metadata,
        })
    }
}

fn need(line: Option<&str>) -> Result<&str> {
    line.ok_or_else(|| Error::CorruptModel("unexpected end of tree".into()))
}

/// Tags `tokens`: lexicon labels first, then each position in order takes the
/// conclusion of the last rule that fires on the tree walk.
pub fn apply_rdr<S: AsRef<str>>(tree: &RdrTree, tokens: &[S]) -> Vec<String> {
    tree.apply_traced(tokens).0
}

pub fn save_tree(tree: &RdrTree, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tree.to_text()).map_err(|e| Error::file(path, e))
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<RdrTree> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    RdrTree::from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabeledSequence;
    use crate::rdr::build_lexicon;

    fn lexicon() -> Lexicon {
        let data = vec![LabeledSequence {
            tokens: vec!["không".into(), "ăn".into(), "cơm".into()],
            labels: vec!["R".into(), "V".into(), "N".into()],
        }];
        build_lexicon(&data, LabelMode::WordPos).unwrap()
    }

    #[test]
    fn atoms_round_trip() {
        for s in ["w-1=không", "w+2=<EOS>", "t0=V", "s2=ơm", "w0==", "w0=a:b"] {
            assert_eq!(s.parse::<Atom>().unwrap().to_string(), s);
        }
        for s in ["w3=a", "x0=a", "s2=abc", "w0=", "t-1"] {
            assert!(s.parse::<Atom>().is_err(), "{s}");
        }
    }

    #[test]
    fn default_tree_equals_lexicon() {
        let tree = RdrTree::new(lexicon());
        let toks = ["không", "ăn", "xyz"];
        assert_eq!(apply_rdr(&tree, &toks), lexicon_tag(tree.lexicon(), &toks));
    }

    #[test]
    fn exception_and_sibling_order() {
        let mut tree = RdrTree::new(lexicon());
        let r1 = tree.push_rule(0, "w-1=không".parse().unwrap(), "A".into());
        tree.push_rule(r1, "w0=cơm".parse().unwrap(), "N".into());
        tree.push_rule(0, "t0=N".parse().unwrap(), "X".into());
        assert_eq!(apply_rdr(&tree, &["không", "ăn"]), ["R", "A"]);
        // exception of r1 restores N; sibling rule t0=N is not reached
        assert_eq!(apply_rdr(&tree, &["không", "cơm"]), ["R", "N"]);
        assert_eq!(apply_rdr(&tree, &["cơm"]), ["X"]);
    }

    #[test]
    fn earlier_corrections_are_visible_to_later_positions() {
        let mut tree = RdrTree::new(lexicon());
        tree.push_rule(0, "w0=ăn".parse().unwrap(), "A".into());
        tree.push_rule(0, "t-1=A".parse().unwrap(), "Z".into());
        assert_eq!(apply_rdr(&tree, &["ăn", "cơm"]), ["A", "Z"]);
    }

    #[test]
    fn text_round_trip() {
        let mut tree = RdrTree::new(lexicon());
        let r1 = tree.push_rule(0, "w-1=không & t0=V".parse().unwrap(), "R".into());
        let r2 = tree.push_rule(r1, "w+1=<EOS>".parse().unwrap(), "V".into());
        tree.push_rule(r2, "s1=n".parse().unwrap(), "A".into());
        tree.push_rule(r1, "w0=cơm".parse().unwrap(), "N".into());
        tree.push_rule(0, "t-1=R".parse().unwrap(), "V".into());
        tree.metadata.push(("min_gain".into(), "2".into()));
        let text = tree.to_text();
        assert!(text.contains("\n\tw-1=không & t0=V : R\n\t\tw+1=<EOS> : V\n\t\t\ts1=n : A\n\t\tw0=cơm : N\n\tt-1=R : V\n"));
        let back = RdrTree::from_text(&text).unwrap();
        assert_eq!(back, tree);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn corrupt_and_version() {
        let mut tree = RdrTree::new(lexicon());
        tree.push_rule(0, "w0=ăn".parse().unwrap(), "A".into());
        let text = tree.to_text();
        for cut in [5, text.len() / 2, text.len() - 3] {
            assert!(matches!(RdrTree::from_text(&text[..cut]), Err(Error::CorruptModel(_))), "{cut}");
        }
        let v9 = text.replacen("version 1", "version 9", 1);
        assert!(matches!(RdrTree::from_text(&v9), Err(Error::VersionMismatch { .. })));
        let bad = text.replacen("rules 1", "rules 2", 1);
        assert!(RdrTree::from_text(&bad).is_err());
    }
}
