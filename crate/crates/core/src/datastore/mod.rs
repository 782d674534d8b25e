//! On-disk datasets.
//!
//! ```text
//! root/index.json
//! root/splits/<name>.json
//! root/cases/<id>/manifest.json
//! root/cases/<id>/<field>.wfg
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place, so
//! readers never observe a partial write.

mod blob;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doe::{CaseSpec, SplitManifest};
use crate::space::{Interval, ParameterSpace, PARAMETER_NAMES};

pub use blob::{checksum, FieldBlob, MAGIC};
pub use table::{
    coefficients_to_csv, export_results, import_coefficients_csv, read_coefficients, CoefficientRow, ExportFormat,
};

pub const INDEX_FILE: &str = "index.json";
pub const MANIFEST_FILE: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatastoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: invalid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: checksum mismatch (expected {expected}, found {actual})", path.display())]
    Checksum {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("{}: unknown format version {found:?}", path.display())]
    Version { path: PathBuf, found: String },
    #[error("{}: missing blob", path.display())]
    MissingBlob { path: PathBuf },
    #[error("{}: {detail}", path.display())]
    Malformed { path: PathBuf, detail: String },
    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: line {line}, column `{column}`: `{value}` is not a finite number", path.display())]
    Cell {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("unknown split `{0}`")]
    UnknownSplit(String),
    #[error("invalid name `{0}`: use letters, digits, `-`, `_` or `.`")]
    InvalidName(String),
    #[error("case `{id}`: {detail}")]
    InvalidRecord { id: String, detail: String },
}

impl DatastoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Whether the error stems from bad input rather than the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Self::Io { .. })
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatastoreError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| DatastoreError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| DatastoreError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| DatastoreError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| DatastoreError::io(path, e))?;
    tmp.persist(path).map_err(|e| DatastoreError::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DatastoreError> {
    let mut text = serde_json::to_vec_pretty(value).expect("datastore types serialize");
    text.push(b'\n');
    write_atomic(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, DatastoreError> {
    let bytes = std::fs::read(path).map_err(|e| DatastoreError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| DatastoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Case ids and split names become file names, so they are restricted.
pub fn validate_name(name: &str) -> Result<(), DatastoreError> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && name.len() <= 200
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(DatastoreError::InvalidName(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    #[serde(rename = "C_D")]
    pub c_d: f64,
    #[serde(rename = "C_l")]
    pub c_l: f64,
}

impl Coefficients {
    pub fn eps(&self) -> Option<f64> {
        crate::aero::lift_to_drag(self.c_d, self.c_l)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseProvenance {
    /// Tool and version that wrote the case.
    pub generator: String,
    /// Surrogate or solver that produced the fields and coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl Default for CaseProvenance {
    fn default() -> Self {
        Self {
            generator: format!("wingforge {}", env!("CARGO_PKG_VERSION")),
            source: None,
        }
    }
}

/// Where a field blob lives and what it must hash to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlobRef {
    pub name: String,
    /// Path relative to the case directory.
    pub file: String,
    pub count: u64,
    pub components: u32,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub version: u32,
    pub case: CaseSpec,
    #[serde(default)]
    pub fields: Vec<BlobRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Coefficients>,
    pub provenance: CaseProvenance,
}

impl CaseRecord {
    pub fn new(case: CaseSpec) -> Self {
        Self {
            version: FORMAT_VERSION,
            case,
            fields: Vec::new(),
            coefficients: None,
            provenance: CaseProvenance::default(),
        }
    }

    pub fn with_coefficients(mut self, c_d: f64, c_l: f64) -> Self {
        self.coefficients = Some(Coefficients { c_d, c_l });
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.provenance.source = Some(source.into());
        self
    }

    fn validate(&self) -> Result<(), DatastoreError> {
        validate_name(&self.case.id)?;
        let invalid = |detail: String| DatastoreError::InvalidRecord {
            id: self.case.id.clone(),
            detail,
        };
        if let Some(c) = self.coefficients {
            if !(c.c_d.is_finite() && c.c_l.is_finite()) {
                return Err(invalid("coefficients must be finite".into()));
            }
        }
        if self.case.vector().0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Per-case entry of the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub id: String,
    /// Parameters in the order of [`PARAMETER_NAMES`].
    pub phi: [f64; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Coefficients>,
    #[serde(default)]
    pub fields: Vec<String>,
}

impl CaseSummary {
    fn of(record: &CaseRecord) -> Self {
        Self {
            id: record.case.id.clone(),
            phi: record.case.vector().0,
            coefficients: record.coefficients,
            fields: record.fields.iter().map(|f| f.name.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub version: u32,
    pub space: ParameterSpace,
    /// Sorted by id.
    pub cases: Vec<CaseSummary>,
    /// Names of files under `splits/`, sorted.
    #[serde(default)]
    pub splits: Vec<String>,
}

/// Interval predicates per parameter; a case matches when every constrained
/// parameter lies in its closed interval. An interval with `lo > hi` is
/// empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub intervals: [Option<Interval>; 6],
}

impl Query {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn from_space(space: &ParameterSpace) -> Self {
        Self {
            intervals: space.intervals().map(Some),
        }
    }

    /// Constrains the parameter called `name` (see [`PARAMETER_NAMES`]).
    pub fn with(mut self, name: &str, lo: f64, hi: f64) -> Result<Self, String> {
        let i = PARAMETER_NAMES
            .iter()
            .position(|p| *p == name)
            .ok_or_else(|| format!("unknown parameter `{name}`"))?;
        self.intervals[i] = Some(Interval::new(lo, hi));
        Ok(self)
    }

    pub fn matches(&self, phi: &[f64; 6]) -> bool {
        self.intervals
            .iter()
            .zip(phi)
            .all(|(iv, v)| iv.is_none_or(|iv| iv.contains(*v)))
    }
}

/// A dataset rooted at a directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    index: DatasetIndex,
}

impl Dataset {
    /// Opens the dataset at `root`, creating an empty one when no index
    /// exists yet.
    pub fn create(root: impl Into<PathBuf>, space: ParameterSpace) -> Result<Self, DatastoreError> {
        let root = root.into();
        if root.join(INDEX_FILE).exists() {
            return Self::open(root);
        }
        std::fs::create_dir_all(root.join("cases")).map_err(|e| DatastoreError::io(&root, e))?;
        let ds = Self {
            root,
            index: DatasetIndex {
                version: FORMAT_VERSION,
                space,
                cases: Vec::new(),
                splits: Vec::new(),
            },
        };
        ds.save_index()?;
        Ok(ds)
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, DatastoreError> {
        let root = root.into();
        let path = root.join(INDEX_FILE);
        let index: DatasetIndex = read_json(&path)?;
        if index.version != FORMAT_VERSION {
            return Err(DatastoreError::Version {
                path,
                found: index.version.to_string(),
            });
        }
        Ok(Self { root, index })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index(&self) -> &DatasetIndex {
        &self.index
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.index.space
    }

    pub fn len(&self) -> usize {
        self.index.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.cases.is_empty()
    }

    fn case_dir(&self, id: &str) -> PathBuf {
        self.root.join("cases").join(id)
    }

    fn save_index(&self) -> Result<(), DatastoreError> {
        write_json(&self.root.join(INDEX_FILE), &self.index)
    }

    /// SHA-256 of the index file as stored on disk.
    pub fn checksum(&self) -> Result<String, DatastoreError> {
        let path = self.root.join(INDEX_FILE);
        let bytes = std::fs::read(&path).map_err(|e| DatastoreError::io(&path, e))?;
        Ok(checksum(&bytes))
    }

    /// Writes (or replaces) a case with its field blobs and updates the
    /// index. Returns the stored record.
    pub fn write_case(&mut self, record: CaseRecord, fields: &[FieldBlob]) -> Result<CaseRecord, DatastoreError> {
        let stored = self.write_case_files(record, fields)?;
        self.upsert(CaseSummary::of(&stored));
        self.save_index()?;
        Ok(stored)
    }

    /// Writes many cases and saves the index once.
    pub fn write_cases(&mut self, records: Vec<(CaseRecord, Vec<FieldBlob>)>) -> Result<(), DatastoreError> {
        for (record, _) in &records {
            record.validate()?;
        }
        for (record, fields) in records {
            let stored = self.write_case_files(record, &fields)?;
            self.upsert(CaseSummary::of(&stored));
        }
        self.save_index()
    }

    fn upsert(&mut self, summary: CaseSummary) {
        match self.index.cases.binary_search_by(|c| c.id.as_str().cmp(&summary.id)) {
            Ok(i) => self.index.cases[i] = summary,
            Err(i) => self.index.cases.insert(i, summary),
        }
    }

    fn write_case_files(&self, mut record: CaseRecord, fields: &[FieldBlob]) -> Result<CaseRecord, DatastoreError> {
        record.version = FORMAT_VERSION;
        record.validate()?;
        let dir = self.case_dir(&record.case.id);
        std::fs::create_dir_all(&dir).map_err(|e| DatastoreError::io(&dir, e))?;
        record.fields.clear();
        for blob in fields {
            validate_name(&blob.name)?;
            if record.fields.iter().any(|f| f.name == blob.name) {
                return Err(DatastoreError::InvalidRecord {
                    id: record.case.id.clone(),
                    detail: format!("field `{}` given twice", blob.name),
                });
            }
            let bytes = blob.to_bytes();
            let file = format!("{}.wfg", blob.name);
            write_atomic(&dir.join(&file), &bytes)?;
            record.fields.push(BlobRef {
                name: blob.name.clone(),
                file,
                count: blob.count(),
                components: blob.components,
                sha256: checksum(&bytes),
            });
        }
        write_json(&dir.join(MANIFEST_FILE), &record)?;
        Ok(record)
    }

    pub fn read_manifest(&self, id: &str) -> Result<CaseRecord, DatastoreError> {
        validate_name(id)?;
        let path = self.case_dir(id).join(MANIFEST_FILE);
        if !path.exists() {
            return Err(DatastoreError::UnknownCase(id.to_string()));
        }
        let record: CaseRecord = read_json(&path)?;
        if record.version != FORMAT_VERSION {
            return Err(DatastoreError::Version {
                path,
                found: record.version.to_string(),
            });
        }
        Ok(record)
    }

    /// Reads a case and all of its blobs, verifying every checksum.
    pub fn read_case(&self, id: &str) -> Result<(CaseRecord, Vec<FieldBlob>), DatastoreError> {
        let record = self.read_manifest(id)?;
        let dir = self.case_dir(id);
        let mut blobs = Vec::with_capacity(record.fields.len());
        for r in &record.fields {
            let path = dir.join(&r.file);
            let bytes = match std::fs::read(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(DatastoreError::MissingBlob { path }),
                Err(e) => return Err(DatastoreError::io(&path, e)),
            };
            let blob = FieldBlob::from_bytes(&bytes, &path, Some(&r.sha256))?;
            if blob.name != r.name || blob.count() != r.count || blob.components != r.components {
                return Err(DatastoreError::Malformed {
                    path,
                    detail: "blob header disagrees with the manifest".into(),
                });
            }
            blobs.push(blob);
        }
        Ok((record, blobs))
    }

    /// Ids of cases whose parameters satisfy `query`, sorted.
    pub fn query(&self, query: &Query) -> Vec<String> {
        self.index
            .cases
            .iter()
            .filter(|c| query.matches(&c.phi))
            .map(|c| c.id.clone())
            .collect()
    }

    /// Case specs of every indexed case, sorted by id.
    pub fn cases(&self) -> Vec<CaseSpec> {
        self.index
            .cases
            .iter()
            .map(|c| CaseSpec::from_vector(c.id.clone(), &crate::space::DesignVector(c.phi)))
            .collect()
    }

    /// Cases that carry coefficients, as a table.
    pub fn coefficient_rows(&self) -> Vec<CoefficientRow> {
        self.index
            .cases
            .iter()
            .filter_map(|c| {
                c.coefficients.map(|k| CoefficientRow {
                    id: c.id.clone(),
                    c_d: k.c_d,
                    c_l: k.c_l,
                    alpha: Some(c.phi[5]),
                    lambda: Some(c.phi[3]),
                })
            })
            .collect()
    }

    /// Attaches coefficients to existing cases.
    pub fn set_coefficients(&mut self, rows: &[CoefficientRow]) -> Result<(), DatastoreError> {
        for row in rows {
            let mut record = self.read_manifest(&row.id)?;
            record.coefficients = Some(Coefficients {
                c_d: row.c_d,
                c_l: row.c_l,
            });
            record.validate()?;
            write_json(&self.case_dir(&row.id).join(MANIFEST_FILE), &record)?;
            let i = self
                .index
                .cases
                .binary_search_by(|c| c.id.as_str().cmp(&row.id))
                .map_err(|_| DatastoreError::UnknownCase(row.id.clone()))?;
            self.index.cases[i].coefficients = record.coefficients;
        }
        self.save_index()
    }

    pub fn write_split(&mut self, name: &str, manifest: &SplitManifest) -> Result<PathBuf, DatastoreError> {
        validate_name(name)?;
        let path = self.root.join("splits").join(format!("{name}.json"));
        write_json(&path, manifest)?;
        if let Err(i) = self.index.splits.binary_search_by(|s| s.as_str().cmp(name)) {
            self.index.splits.insert(i, name.to_string());
        }
        self.save_index()?;
        Ok(path)
    }

    pub fn read_split(&self, name: &str) -> Result<SplitManifest, DatastoreError> {
        validate_name(name)?;
        let path = self.root.join("splits").join(format!("{name}.json"));
        if !path.exists() {
            return Err(DatastoreError::UnknownSplit(name.to_string()));
        }
        read_json(&path)
    }

    /// Recomputes the index from the case manifests and split files on disk.
    pub fn rebuild_index(&self) -> Result<DatasetIndex, DatastoreError> {
        let mut cases = Vec::new();
        let dir = self.root.join("cases");
        if dir.exists() {
            for entry in std::fs::read_dir(&dir).map_err(|e| DatastoreError::io(&dir, e))? {
                let entry = entry.map_err(|e| DatastoreError::io(&dir, e))?;
                let manifest = entry.path().join(MANIFEST_FILE);
                if manifest.is_file() {
                    let record: CaseRecord = read_json(&manifest)?;
                    for f in &record.fields {
                        let blob = entry.path().join(&f.file);
                        if !blob.is_file() {
                            return Err(DatastoreError::MissingBlob { path: blob });
                        }
                    }
                    cases.push(CaseSummary::of(&record));
                }
            }
        }
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let mut splits = Vec::new();
        let sdir = self.root.join("splits");
        if sdir.exists() {
            for entry in std::fs::read_dir(&sdir).map_err(|e| DatastoreError::io(&sdir, e))? {
                let path = entry.map_err(|e| DatastoreError::io(&sdir, e))?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        splits.push(stem.to_string());
                    }
                }
            }
        }
        splits.sort();
        Ok(DatasetIndex {
            version: FORMAT_VERSION,
            space: self.index.space,
            cases,
            splits,
        })
    }

    /// Replaces the stored index with one rebuilt from disk.
    pub fn reindex(&mut self) -> Result<(), DatastoreError> {
        self.index = self.rebuild_index()?;
        self.save_index()
    }
}
