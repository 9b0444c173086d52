//! `path,label` CSV listing images relative to the manifest's directory.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{AtPath, CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    /// Directory the entry paths are relative to.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> CliResult<Self> {
        let m = Self {
            root: root.into(),
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let file = File::open(path).at(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_reader(file, root).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_reader(reader: impl Read, root: impl Into<PathBuf>) -> CliResult<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| CliError::Validation(format!("manifest header: {e}")))?;
        if headers != vec!["path", "label"] {
            return Err(CliError::Validation(format!("manifest header must be `path,label`, found {headers:?}")));
        }
        let mut entries = Vec::new();
        for row in rdr.deserialize() {
            entries.push(row.map_err(|e| CliError::Validation(format!("manifest row: {e}")))?);
        }
        Self::new(root, entries)
    }

    pub fn validate(&self) -> CliResult<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.path.is_empty() || e.label.is_empty() {
                return Err(CliError::Validation(format!("empty path or label in entry {e:?}")));
            }
            if !seen.insert(&e.path) {
                return Err(CliError::Validation(format!("duplicate path {:?}", e.path)));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["path", "label"]).map_err(|e| CliError::Validation(e.to_string()))?;
        for e in &self.entries {
            w.serialize(e).map_err(|e| CliError::Validation(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = self.to_csv()?;
        File::create(path).and_then(|mut f| f.write_all(text.as_bytes())).at(path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    /// Distinct labels in order of first appearance.
    pub fn class_labels(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.entries.iter().filter(|e| seen.insert(&e.label)).map(|e| e.label.clone()).collect()
    }

    /// Index of every entry's label within `labels`.
    pub fn label_indices(&self, labels: &[String]) -> CliResult<Vec<usize>> {
        self.entries
            .iter()
            .map(|e| {
                labels.iter().position(|l| *l == e.label).ok_or_else(|| {
                    CliError::Validation(format!("label {:?} of {:?} is not one of the model classes {labels:?}", e.label, e.path))
                })
            })
            .collect()
    }
}
