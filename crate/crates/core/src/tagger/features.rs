use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Placeholder token/label before the start of a sentence.
pub const BOS: &str = "<BOS>";
/// Placeholder token after the end of a sentence.
pub const EOS: &str = "<EOS>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TemplateKind {
    Token,
    TokenBigram,
    Prefix(u8),
    Suffix(u8),
    Shape,
    PreviousTag,
    PreviousTagToken,
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateKind::Token => f.write_str("token"),
            TemplateKind::TokenBigram => f.write_str("token-bigram"),
            TemplateKind::Prefix(k) => write!(f, "prefix:{k}"),
            TemplateKind::Suffix(k) => write!(f, "suffix:{k}"),
            TemplateKind::Shape => f.write_str("shape"),
            TemplateKind::PreviousTag => f.write_str("previous-tag"),
            TemplateKind::PreviousTagToken => f.write_str("previous-tag+token"),
        }
    }
}

impl FromStr for TemplateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidValue {
            kind: "template kind",
            value: s.to_string(),
            reason: "unknown kind",
        };
        Ok(match s {
            "token" => TemplateKind::Token,
            "token-bigram" => TemplateKind::TokenBigram,
            "shape" => TemplateKind::Shape,
            "previous-tag" => TemplateKind::PreviousTag,
            "previous-tag+token" => TemplateKind::PreviousTagToken,
            _ => {
                let (name, k) = s.split_once(':').ok_or_else(bad)?;
                let k: u8 = k.parse().map_err(|_| bad())?;
                match name {
                    "prefix" => TemplateKind::Prefix(k),
                    "suffix" => TemplateKind::Suffix(k),
                    _ => return Err(bad()),
                }
            }
        })
    }
}

/// One feature template. Emitted features are `"<id>=<value>"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureTemplate {
    pub id: String,
    pub offsets: Vec<i8>,
    pub kind: TemplateKind,
}

fn offset_name(offset: i8) -> String {
    if offset > 0 {
        format!("+{offset}")
    } else {
        offset.to_string()
    }
}

impl FeatureTemplate {
    pub fn token(offset: i8) -> Self {
        Self {
            id: format!("w{}", offset_name(offset)),
            offsets: vec![offset],
            kind: TemplateKind::Token,
        }
    }

    pub fn token_bigram(a: i8, b: i8) -> Self {
        Self {
            id: format!("w{}w{}", offset_name(a), offset_name(b)),
            offsets: vec![a, b],
            kind: TemplateKind::TokenBigram,
        }
    }

    pub fn prefix(k: u8) -> Self {
        Self {
            id: format!("p{k}"),
            offsets: vec![0],
            kind: TemplateKind::Prefix(k),
        }
    }

    pub fn suffix(k: u8) -> Self {
        Self {
            id: format!("s{k}"),
            offsets: vec![0],
            kind: TemplateKind::Suffix(k),
        }
    }

    pub fn shape() -> Self {
        Self {
            id: "shape".to_string(),
            offsets: vec![0],
            kind: TemplateKind::Shape,
        }
    }

    pub fn previous_tag() -> Self {
        Self {
            id: "t-1".to_string(),
            offsets: vec![-1],
            kind: TemplateKind::PreviousTag,
        }
    }

    pub fn previous_tag_token() -> Self {
        Self {
            id: "t-1w0".to_string(),
            offsets: vec![-1, 0],
            kind: TemplateKind::PreviousTagToken,
        }
    }

    /// Whether the feature value depends on the previous label.
    pub fn is_transition(&self) -> bool {
        matches!(
            self.kind,
            TemplateKind::PreviousTag | TemplateKind::PreviousTagToken
        )
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason| Error::InvalidValue {
            kind: "feature template",
            value: self.id.clone(),
            reason,
        };
        if self.id.is_empty() || self.id.contains(|c: char| c.is_whitespace() || c == '=') {
            return Err(bad("id must be non-empty without white space or '='"));
        }
        if self.offsets.iter().any(|o| !(-2..=2).contains(o)) {
            return Err(bad("offsets must lie in [-2, 2]"));
        }
        let arity = match self.kind {
            TemplateKind::TokenBigram | TemplateKind::PreviousTagToken => 2,
            _ => 1,
        };
        if self.offsets.len() != arity {
            return Err(bad("wrong number of offsets for kind"));
        }
        match self.kind {
            TemplateKind::Prefix(k) | TemplateKind::Suffix(k) if !(1..=3).contains(&k) => {
                Err(bad("prefix/suffix length must be 1, 2 or 3"))
            }
            TemplateKind::Prefix(_) | TemplateKind::Suffix(_) | TemplateKind::Shape
                if self.offsets[0] != 0 =>
            {
                Err(bad("prefix, suffix and shape apply to offset 0"))
            }
            TemplateKind::PreviousTag if self.offsets[0] != -1 => {
                Err(bad("previous-tag uses offset -1"))
            }
            TemplateKind::PreviousTagToken if self.offsets[0] != -1 => {
                Err(bad("previous-tag+token uses offset -1 for the tag"))
            }
            _ => Ok(()),
        }
    }
}

/// Token window −2..+2, bigrams (−1,0) and (0,+1), prefixes and suffixes of
/// length 1–3, shape, previous tag and previous tag with the current token.
pub fn default_templates() -> Vec<FeatureTemplate> {
    let mut t: Vec<FeatureTemplate> = (-2..=2).map(FeatureTemplate::token).collect();
    t.push(FeatureTemplate::token_bigram(-1, 0));
    t.push(FeatureTemplate::token_bigram(0, 1));
    t.extend((1..=3).map(FeatureTemplate::prefix));
    t.extend((1..=3).map(FeatureTemplate::suffix));
    t.push(FeatureTemplate::shape());
    t.push(FeatureTemplate::previous_tag());
    t.push(FeatureTemplate::previous_tag_token());
    t
}

pub fn validate_templates(templates: &[FeatureTemplate]) -> Result<()> {
    let mut seen = HashSet::new();
    for t in templates {
        t.validate()?;
        if !seen.insert(t.id.as_str()) {
            return Err(Error::InvalidValue {
                kind: "feature template",
                value: t.id.clone(),
                reason: "duplicate template id",
            });
        }
    }
    Ok(())
}

pub(crate) fn token_at<S: AsRef<str>>(tokens: &[S], i: usize, offset: i8) -> &str {
    let j = i as isize + offset as isize;
    if j < 0 {
        BOS
    } else if j as usize >= tokens.len() {
        EOS
    } else {
        tokens[j as usize].as_ref()
    }
}

/// Character-class shape: `X` upper, `x` lower, `d` digit, `_` kept, `p`
/// anything else; runs of the same class collapse.
pub fn shape(token: &str) -> String {
    let mut out = String::new();
    for c in token.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else if c == '_' {
            '_'
        } else {
            'p'
        };
        if !out.ends_with(class) {
            out.push(class);
        }
    }
    out
}

/// Appends the feature for one template that does not look at labels.
/// Prefix/suffix templates emit nothing when the token is shorter than `k`.
pub(crate) fn push_static<S: AsRef<str>>(
    template: &FeatureTemplate,
    tokens: &[S],
    i: usize,
    out: &mut String,
) -> bool {
    out.clear();
    out.push_str(&template.id);
    out.push('=');
    match template.kind {
        TemplateKind::Token => out.push_str(token_at(tokens, i, template.offsets[0])),
        TemplateKind::TokenBigram => {
            out.push_str(token_at(tokens, i, template.offsets[0]));
            out.push('|');
            out.push_str(token_at(tokens, i, template.offsets[1]));
        }
        TemplateKind::Prefix(k) => {
            let tok = tokens[i].as_ref();
            match tok.char_indices().nth(k as usize) {
                Some((end, _)) => out.push_str(&tok[..end]),
                None if tok.chars().count() == k as usize => out.push_str(tok),
                None => return false,
            }
        }
        TemplateKind::Suffix(k) => {
            let tok = tokens[i].as_ref();
            let n = tok.chars().count();
            if n < k as usize {
                return false;
            }
            let start = tok.char_indices().nth(n - k as usize).map_or(0, |(s, _)| s);
            out.push_str(&tok[start..]);
        }
        TemplateKind::Shape => out.push_str(&shape(tokens[i].as_ref())),
        TemplateKind::PreviousTag | TemplateKind::PreviousTagToken => {
            unreachable!("transition template")
        }
    }
    true
}

/// Writes the feature for a transition template given the previous label.
pub(crate) fn push_transition<S: AsRef<str>>(
    template: &FeatureTemplate,
    tokens: &[S],
    i: usize,
    prev: &str,
    out: &mut String,
) {
    out.clear();
    out.push_str(&template.id);
    out.push('=');
    out.push_str(prev);
    if template.kind == TemplateKind::PreviousTagToken {
        out.push('|');
        out.push_str(token_at(tokens, i, template.offsets[1]));
    }
}

/// All features of position `i`, with `prev_tag = None` meaning the sentence
/// boundary.
pub fn extract_features<S: AsRef<str>>(
    templates: &[FeatureTemplate],
    tokens: &[S],
    i: usize,
    prev_tag: Option<&str>,
) -> Vec<String> {
    assert!(i < tokens.len(), "position {i} out of range");
    let prev = prev_tag.unwrap_or(BOS);
    let mut out = Vec::with_capacity(templates.len());
    let mut buf = String::new();
    for t in templates {
        if t.is_transition() {
            push_transition(t, tokens, i, prev, &mut buf);
        } else if !push_static(t, tokens, i, &mut buf) {
            continue;
        }
        out.push(buf.clone());
    }
    out
}
