use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::features::{validate_templates, FeatureTemplate};
use crate::error::{Error, Result};
use crate::labels::LabelMode;

pub const MODEL_MAGIC: &str = "segtag-feature-model";
pub const MODEL_VERSION: u32 = 1;

/// Ordered label set; the order is the decoder's tie-break order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagInventory {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl TagInventory {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidConfig("tag inventory is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate label {l:?} in inventory")));
            }
        }
        Ok(Self { labels, index })
    }

    /// Labels in order of first occurrence.
    pub fn from_sequences<'a>(labels: impl IntoIterator<Item = &'a String>) -> Result<Self> {
        let mut seen = Vec::new();
        let mut index = HashMap::new();
        for l in labels {
            if !index.contains_key(l) {
                index.insert(l.clone(), seen.len());
                seen.push(l.clone());
            }
        }
        Self::new(seen)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// Anything that can add the per-tag weights of one feature into a score row.
pub(crate) trait WeightSource {
    fn add_row(&self, feature: &str, scores: &mut [f64]);
}

/// Compressed sparse rows: `entries[offsets[f]..offsets[f + 1]]` holds the
/// nonzero `(tag, weight)` pairs of feature `f`, sorted by tag.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct WeightTable {
    pub offsets: Vec<usize>,
    pub entries: Vec<(u32, f64)>,
}

impl WeightTable {
    pub fn row(&self, f: usize) -> &[(u32, f64)] {
        &self.entries[self.offsets[f]..self.offsets[f + 1]]
    }

    pub fn rows(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }
}

pub(crate) struct TableView<'a> {
    pub features: &'a HashMap<String, u32>,
    pub table: &'a WeightTable,
}

impl WeightSource for TableView<'_> {
    fn add_row(&self, feature: &str, scores: &mut [f64]) {
        if let Some(&f) = self.features.get(feature) {
            if (f as usize) < self.table.rows() {
                for &(tag, w) in self.table.row(f as usize) {
                    scores[tag as usize] += w;
                }
            }
        }
    }
}

/// A trained linear-chain tagger: averaged feature weights plus everything
/// needed to decode.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightModel {
    pub(crate) mode: LabelMode,
    pub(crate) inventory: TagInventory,
    pub(crate) templates: Vec<FeatureTemplate>,
    pub(crate) features: HashMap<String, u32>,
    pub(crate) table: WeightTable,
    pub(crate) metadata: Vec<(String, String)>,
}

impl WeightModel {
    /// Builds a model from explicit `(feature, tag index, weight)` triples.
    /// Repeated triples accumulate; zero weights are dropped.
    pub fn from_weights(
        mode: LabelMode,
        inventory: TagInventory,
        templates: Vec<FeatureTemplate>,
        weights: impl IntoIterator<Item = (String, usize, f64)>,
    ) -> Result<Self> {
        validate_templates(&templates)?;
        for l in inventory.labels() {
            mode.validate(l)?;
        }
        let mut rows: HashMap<String, HashMap<u32, f64>> = HashMap::new();
        for (feature, tag, w) in weights {
            if tag >= inventory.len() {
                return Err(Error::InvalidConfig(format!(
                    "tag index {tag} outside inventory of {}",
                    inventory.len()
                )));
            }
            *rows.entry(feature).or_default().entry(tag as u32).or_default() += w;
        }
        let mut sorted: Vec<(String, Vec<(u32, f64)>)> = rows
            .into_iter()
            .map(|(f, r)| {
                let mut r: Vec<(u32, f64)> = r.into_iter().filter(|&(_, w)| w != 0.0).collect();
                r.sort_by_key(|&(t, _)| t);
                (f, r)
            })
            .filter(|(_, r)| !r.is_empty())
            .collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self::from_sorted_rows(mode, inventory, templates, sorted, Vec::new()))
    }

    pub(crate) fn from_sorted_rows(
        mode: LabelMode,
        inventory: TagInventory,
        templates: Vec<FeatureTemplate>,
        rows: Vec<(String, Vec<(u32, f64)>)>,
        metadata: Vec<(String, String)>,
    ) -> Self {
        let mut features = HashMap::with_capacity(rows.len());
        let mut table = WeightTable {
            offsets: Vec::with_capacity(rows.len() + 1),
            entries: Vec::new(),
        };
        table.offsets.push(0);
        for (i, (f, r)) in rows.into_iter().enumerate() {
            features.insert(f, i as u32);
            table.entries.extend(r);
            table.offsets.push(table.entries.len());
        }
        Self {
            mode,
            inventory,
            templates,
            features,
            table,
            metadata,
        }
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn inventory(&self) -> &TagInventory {
        &self.inventory
    }

    pub fn templates(&self) -> &[FeatureTemplate] {
        &self.templates
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// Number of features with at least one nonzero weight.
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    /// Weight of `feature` for tag index `tag`; absent features score 0.
    pub fn weight(&self, feature: &str, tag: usize) -> f64 {
        let mut scores = vec![0.0; self.inventory.len()];
        self.view().add_row(feature, &mut scores);
        scores[tag]
    }

    pub(crate) fn view(&self) -> TableView<'_> {
        TableView {
            features: &self.features,
            table: &self.table,
        }
    }

    fn sorted_features(&self) -> Vec<(&str, u32)> {
        let mut f: Vec<(&str, u32)> = self.features.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        f.sort_unstable();
        f
    }

    /// Serializes to the versioned line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_MAGIC}");
        let _ = writeln!(out, "version {MODEL_VERSION}");
        let _ = writeln!(out, "mode {}", self.mode);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "meta {k}={v}");
        }
        let _ = writeln!(out, "tags {}", self.inventory.len());
        for l in self.inventory.labels() {
            let _ = writeln!(out, "{l}");
        }
        let _ = writeln!(out, "templates {}", self.templates.len());
        for t in &self.templates {
            let offsets: Vec<String> = t.offsets.iter().map(i8::to_string).collect();
            let _ = writeln!(out, "{} {} {}", t.id, t.kind, offsets.join(","));
        }
        let features = self.sorted_features();
        let _ = writeln!(out, "features {}", features.len());
        for (name, f) in features {
            out.push_str(name);
            out.push('\t');
            for (k, &(tag, w)) in self.table.row(f as usize).iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{tag}:{w}");
            }
            out.push('\n');
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::CorruptModel(format!("unexpected end of file, expected {what}")))
        };
        if next("header")? != MODEL_MAGIC {
            return Err(Error::CorruptModel("bad header".into()));
        }
        let version = next("version")?
            .strip_prefix("version ")
            .ok_or_else(|| Error::CorruptModel("missing version".into()))?;
        if version != MODEL_VERSION.to_string() {
            return Err(Error::VersionMismatch {
                found: version.to_string(),
                expected: MODEL_VERSION,
            });
        }
        let mode: LabelMode = field(next("mode")?, "mode")?
            .parse()
            .map_err(|e: Error| Error::CorruptModel(e.to_string()))?;

        let mut metadata = Vec::new();
        let mut line = next("tags")?;
        while let Some(kv) = line.strip_prefix("meta ") {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::CorruptModel(format!("bad metadata line {line:?}")))?;
            metadata.push((k.to_string(), v.to_string()));
            line = next("tags")?;
        }

        let n_tags = count(field(line, "tags")?)?;
        let labels = (0..n_tags)
            .map(|_| next("label").map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        for l in &labels {
            mode.validate(l).map_err(|e| Error::CorruptModel(e.to_string()))?;
        }
        let inventory = TagInventory::new(labels).map_err(|e| Error::CorruptModel(e.to_string()))?;

        let n_templates = count(field(next("templates")?, "templates")?)?;
        let mut templates = Vec::with_capacity(n_templates);
        for _ in 0..n_templates {
            let l = next("template")?;
            let parts: Vec<&str> = l.split(' ').collect();
            if parts.len() != 3 {
                return Err(Error::CorruptModel(format!("bad template line {l:?}")));
            }
            let offsets = parts[2]
                .split(',')
                .map(|o| o.parse::<i8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::CorruptModel(format!("bad template offsets {l:?}")))?;
            templates.push(FeatureTemplate {
                id: parts[0].to_string(),
                kind: parts[1].parse().map_err(|e: Error| Error::CorruptModel(e.to_string()))?,
                offsets,
            });
        }
        validate_templates(&templates).map_err(|e| Error::CorruptModel(e.to_string()))?;

        let n_features = count(field(next("features")?, "features")?)?;
        let mut rows = Vec::with_capacity(n_features);
        for _ in 0..n_features {
            let l = next("feature")?;
            let (name, cells) = l
                .split_once('\t')
                .ok_or_else(|| Error::CorruptModel(format!("bad feature line {l:?}")))?;
            let mut row = Vec::new();
            for cell in cells.split(' ') {
                let parsed = cell
                    .split_once(':')
                    .and_then(|(t, w)| Some((t.parse::<u32>().ok()?, w.parse::<f64>().ok()?)));
                match parsed {
                    Some((t, w)) if (t as usize) < n_tags && w.is_finite() => row.push((t, w)),
                    _ => return Err(Error::CorruptModel(format!("bad weight {cell:?}"))),
                }
            }
            rows.push((name.to_string(), row));
        }
        if next("end")? != "end" {
            return Err(Error::CorruptModel("missing end marker".into()));
        }
        Ok(Self::from_sorted_rows(mode, inventory, templates, rows, metadata))
    }
}

fn field<'a>(line: &'a str, name: &str) -> Result<&'a str> {
    line.strip_prefix(name)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::CorruptModel(format!("expected {name:?} line, found {line:?}")))
}

fn count(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::CorruptModel(format!("bad count {s:?}")))
}

pub fn save_model(model: &WeightModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_text()).map_err(|e| Error::file(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<WeightModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    WeightModel::from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::features::default_templates;

    fn small() -> WeightModel {
        let inv = TagInventory::new(vec!["N".into(), "V".into()]).unwrap();
        WeightModel::from_weights(
            LabelMode::WordPos,
            inv,
            default_templates(),
            vec![
                ("w0=ăn".to_string(), 1, 2.5),
                ("w0=ăn".to_string(), 0, -0.125),
                ("t-1=N".to_string(), 1, 1e-7),
                ("w0=x".to_string(), 0, 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let m = small();
        assert_eq!(m.feature_count(), 2);
        assert_eq!(m.weight("w0=ăn", 1), 2.5);
        assert_eq!(m.weight("absent", 0), 0.0);
        let text = m.to_text();
        let back = WeightModel::from_text(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = small().to_text();
        for cut in [10, text.len() / 2, text.len() - 4] {
            let err = WeightModel::from_text(&text[..cut]).unwrap_err();
            assert!(matches!(err, Error::CorruptModel(_)), "{cut}: {err}");
            assert!(err.to_string().starts_with("corrupt model file"));
        }
        assert!(matches!(WeightModel::from_text("junk"), Err(Error::CorruptModel(_))));
    }

    #[test]
    fn future_version_is_rejected() {
        let text = small().to_text().replacen("version 1", "version 2", 1);
        match WeightModel::from_text(&text) {
            Err(Error::VersionMismatch { found, expected }) => {
                assert_eq!(found, "2");
                assert_eq!(expected, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inventory_from_first_occurrence() {
        let labels: Vec<String> = ["V", "N", "V", "A"].iter().map(|s| s.to_string()).collect();
        let inv = TagInventory::from_sequences(&labels).unwrap();
        assert_eq!(inv.labels(), ["V", "N", "A"]);
        assert_eq!(inv.index_of("A"), Some(2));
        assert!(TagInventory::new(vec![]).is_err());
        assert!(TagInventory::new(vec!["N".into(), "N".into()]).is_err());
    }
}
