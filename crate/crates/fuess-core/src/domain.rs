//! Core value types: variable catalogs, samples, datasets, context/test
//! splits, and missing-value masking.
//!
//! Everything here is an immutable value after construction and freely
//! shareable between threads. Numbers are `f64` throughout and render with
//! the shortest round-trip decimal representation.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from dataset ingestion, splitting, and masking.
#[derive(Debug, Error)]
pub enum DomainError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("malformed CSV at data row {row}: {reason}")]
    MalformedCsv { row: usize, reason: String },
    #[error("primary variable {0:?} is not a CSV header")]
    UnknownPrimaryVariable(String),
    #[error("missing label at data row {row}")]
    MissingLabel { row: usize },
    #[error("malformed metadata sidecar: {0}")]
    MalformedSidecar(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("missing ratio {0} outside [0, 1]")]
    RatioOutOfRange(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Name, free-text description, and unit of one process variable.
///
/// The unit may be `"/"` for dimensionless quantities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub unit: String,
}

impl VariableSpec {
    pub fn named(name: &str) -> Self {
        VariableSpec {
            name: name.to_string(),
            description: String::new(),
            unit: String::new(),
        }
    }

    pub fn new(name: &str, description: &str, unit: &str) -> Self {
        VariableSpec {
            name: name.to_string(),
            description: description.to_string(),
            unit: unit.to_string(),
        }
    }
}

/// One observation: named auxiliary-variable values (each possibly missing)
/// plus an optional primary-variable label.
///
/// Variable order is stable and identical across all samples of one dataset.
/// A missing value is `None` and renders as `"N/A"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Ordered (variable name, value) pairs; `None` marks a missing value.
    pub values: Vec<(String, Option<f64>)>,
    /// Primary-variable label, when known.
    pub label: Option<f64>,
}

impl Sample {
    pub fn new(values: Vec<(String, Option<f64>)>, label: Option<f64>) -> Self {
        Sample { values, label }
    }

    /// Number of auxiliary variables carried by this sample.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value for `name`, if the variable is present and non-missing.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| *v)
    }

    pub fn variable_names(&self) -> impl Iterator<Item = &str> {
        self.values.iter().map(|(n, _)| n.as_str())
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|(_, v)| v.is_none()).count()
    }

    /// Restriction to the given variables, preserving this sample's own
    /// variable order. Unknown names are ignored.
    pub fn project(&self, keep: &[String]) -> Sample {
        let keep: HashSet<&str> = keep.iter().map(String::as_str).collect();
        Sample {
            values: self
                .values
                .iter()
                .filter(|(n, _)| keep.contains(n.as_str()))
                .cloned()
                .collect(),
            label: self.label,
        }
    }
}

/// Task-specific configuration the operator supplies: process, facility,
/// primary variable, and the auxiliary-variable count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub industrial_process: String,
    pub facility: String,
    pub primary_variable_name: String,
    pub feature_count: usize,
}

/// A labeled dataset: auxiliary-variable catalog, primary variable, samples,
/// and task configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub catalog: Vec<VariableSpec>,
    pub primary_variable: VariableSpec,
    pub samples: Vec<Sample>,
    pub task_config: TaskConfig,
}

impl Dataset {
    pub fn variable_names(&self) -> Vec<String> {
        self.catalog.iter().map(|v| v.name.clone()).collect()
    }

    /// Feature matrix (rows = samples) and label vector, with missing values
    /// as NaN. Convenience for the evaluation bench.
    pub fn to_matrix(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let rows = self
            .samples
            .iter()
            .map(|s| s.values.iter().map(|(_, v)| v.unwrap_or(f64::NAN)).collect())
            .collect();
        let labels = self.samples.iter().map(|s| s.label.unwrap_or(f64::NAN)).collect();
        (rows, labels)
    }
}

/// Paired context/test sample sets replaying the few-shot contextualization
/// protocol: a fixed pool is cut into disjoint contexts, and test samples are
/// drawn without replacement from the rest of the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSplit {
    pub contexts: Vec<ContextPair>,
    pub seed: u64,
}

/// One context of demonstrations with its dedicated test samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextPair {
    pub context_samples: Vec<Sample>,
    pub test_samples: Vec<Sample>,
}

/// Round half up: `round_half_up(3.5) == 4`. Used for selection counts and
/// masked-entry counts quoted as percentages.
pub fn round_half_up(x: f64) -> usize {
    debug_assert!(x >= 0.0);
    x.round() as usize
}

/// Formats a value the way samples render in prompts: shortest round-trip
/// decimals, `"N/A"` when missing.
pub fn render_value(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "N/A".to_string(),
    }
}

struct SidecarEntry {
    description: String,
    unit: String,
}

fn read_sidecar(path: &Path) -> Result<Vec<(String, SidecarEntry)>, DomainError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DomainError::FileNotFound(path.display().to_string()),
        _ => DomainError::Io(e),
    })?;
    let specs: Vec<VariableSpec> = serde_json::from_str(&text)
        .map_err(|e| DomainError::MalformedSidecar(e.to_string()))?;
    Ok(specs
        .into_iter()
        .map(|v| {
            (
                v.name,
                SidecarEntry {
                    description: v.description,
                    unit: v.unit,
                },
            )
        })
        .collect())
}

/// Loads a dataset from a headered CSV file.
///
/// Empty cells and the literal token `"N/A"` parse as missing. The primary
/// variable must be one of the headers and present (non-missing) in every
/// row. Descriptions and units come from an optional JSON sidecar (an array
/// of `{name, description, unit}` objects); variables absent from the
/// sidecar keep empty description and unit.
pub fn load_dataset(
    path: impl AsRef<Path>,
    primary_variable: &str,
    sidecar: Option<&Path>,
) -> Result<Dataset, DomainError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DomainError::FileNotFound(path.display().to_string()),
        _ => DomainError::Io(e),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DomainError::MalformedCsv { row: 0, reason: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.iter().any(String::is_empty) {
        return Err(DomainError::MalformedCsv { row: 0, reason: "empty header name".into() });
    }
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(DomainError::MalformedCsv {
                row: 0,
                reason: format!("duplicate variable name {h:?}"),
            });
        }
    }
    let primary_idx = headers
        .iter()
        .position(|h| h == primary_variable)
        .ok_or_else(|| DomainError::UnknownPrimaryVariable(primary_variable.to_string()))?;

    let meta = match sidecar {
        Some(p) => read_sidecar(p)?,
        None => Vec::new(),
    };
    let lookup = |name: &str| -> VariableSpec {
        match meta.iter().find(|(n, _)| n == name) {
            Some((_, e)) => VariableSpec::new(name, &e.description, &e.unit),
            None => VariableSpec::named(name),
        }
    };

    let catalog: Vec<VariableSpec> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != primary_idx)
        .map(|(_, h)| lookup(h))
        .collect();
    let primary_spec = lookup(&headers[primary_idx]);

    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record =
            record.map_err(|e| DomainError::MalformedCsv { row, reason: e.to_string() })?;
        if record.len() != headers.len() {
            return Err(DomainError::MalformedCsv {
                row,
                reason: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut values = Vec::with_capacity(headers.len() - 1);
        let mut label = None;
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let value = if cell.is_empty() || cell == "N/A" {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| DomainError::MalformedCsv {
                    row,
                    reason: format!("cannot parse {cell:?} in column {:?}", headers[j]),
                })?)
            };
            if j == primary_idx {
                label = value;
            } else {
                values.push((headers[j].clone(), value));
            }
        }
        if label.is_none() {
            return Err(DomainError::MissingLabel { row });
        }
        samples.push(Sample::new(values, label));
    }

    let feature_count = catalog.len();
    Ok(Dataset {
        catalog,
        primary_variable: primary_spec,
        samples,
        task_config: TaskConfig {
            industrial_process: String::new(),
            facility: String::new(),
            primary_variable_name: primary_variable.to_string(),
            feature_count,
        },
    })
}

/// Writes a dataset back to CSV: auxiliary columns in catalog order, primary
/// column last, shortest round-trip decimals, `"N/A"` for missing values.
pub fn write_dataset_csv(dataset: &Dataset, writer: impl std::io::Write) -> Result<(), DomainError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.catalog.iter().map(|v| v.name.as_str()).collect();
    header.push(&dataset.primary_variable.name);
    wtr.write_record(&header)?;
    for sample in &dataset.samples {
        let mut record: Vec<String> =
            sample.values.iter().map(|(_, v)| render_value(*v)).collect();
        record.push(render_value(sample.label));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Draws a sample pool and cuts it into disjoint contexts with dedicated
/// disjoint test sets.
///
/// `pool_size` samples are drawn without replacement and chunked into
/// `n_contexts` contexts of `context_size` each; `tests_per_context` test
/// samples per context are then drawn without replacement from the samples
/// left outside the pool, so no test sample appears twice anywhere in the
/// split. Deterministic for a fixed seed. The defaults replaying the
/// few-shot protocol are 200/10/20/20.
pub fn split_contexts(
    dataset: &Dataset,
    pool_size: usize,
    n_contexts: usize,
    context_size: usize,
    tests_per_context: usize,
    seed: u64,
) -> Result<ContextSplit, DomainError> {
    let n = dataset.samples.len();
    if pool_size > n {
        return Err(DomainError::InsufficientSamples(format!(
            "pool_size {pool_size} exceeds sample count {n}"
        )));
    }
    let ctx_total = n_contexts * context_size;
    if ctx_total > pool_size {
        return Err(DomainError::InsufficientSamples(format!(
            "{n_contexts} contexts x {context_size} samples exceed pool_size {pool_size}"
        )));
    }
    let test_total = n_contexts * tests_per_context;
    if test_total > n - pool_size {
        return Err(DomainError::InsufficientSamples(format!(
            "{test_total} test samples requested but only {} remain outside the pool",
            n - pool_size
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let (pool, rest) = indices.split_at(pool_size);

    let contexts = (0..n_contexts)
        .map(|i| ContextPair {
            context_samples: pool[i * context_size..(i + 1) * context_size]
                .iter()
                .map(|&j| dataset.samples[j].clone())
                .collect(),
            test_samples: rest[i * tests_per_context..(i + 1) * tests_per_context]
                .iter()
                .map(|&j| dataset.samples[j].clone())
                .collect(),
        })
        .collect();

    Ok(ContextSplit { contexts, seed })
}

/// Sets exactly `round_half_up(ratio * m)` auxiliary entries of the sample to
/// missing, chosen uniformly at random by `seed`. The label is untouched and
/// ratio 0 is the identity. Positions are chosen among all `m` entries, so
/// entries that were already missing may be chosen again.
pub fn apply_missing_mask(sample: &Sample, ratio: f64, seed: u64) -> Result<Sample, DomainError> {
    if !(0.0..=1.0).contains(&ratio) || !ratio.is_finite() {
        return Err(DomainError::RatioOutOfRange(ratio));
    }
    let m = sample.len();
    let count = round_half_up(ratio * m as f64);
    if count == 0 {
        return Ok(sample.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, m, count);
    let mut masked = sample.clone();
    for idx in chosen.iter() {
        masked.values[idx].1 = None;
    }
    Ok(masked)
}

impl fmt::Display for VariableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.unit.is_empty() {
            write!(f, " [{}]", self.unit)?;
        }
        Ok(())
    }
}
