use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::{open_lines, write_atomic};

/// A dense feature matrix keyed by image id, in file order. The dimension is
/// whatever the file declares; nothing assumes a particular CNN layer width.
///
/// The same format carries raw image features and concept-score vectors, so
/// the evaluation harness consumes either interchangeably.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
    labels: Option<HashMap<String, String>>,
}

impl FeatureMatrix {
    pub fn new(dim: usize) -> Self {
        FeatureMatrix {
            dim,
            ids: Vec::new(),
            rows: Vec::new(),
            index: HashMap::new(),
            labels: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|i| self.rows[*i].as_slice())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Rows in insertion (file) order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .zip(self.rows.iter())
            .map(|(id, row)| (id.as_str(), row.as_slice()))
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.labels.as_ref()?.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> Option<&HashMap<String, String>> {
        self.labels.as_ref()
    }

    pub fn push(&mut self, id: String, row: Vec<f64>) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "row {id:?} has dimension {}, matrix has {}",
                row.len(),
                self.dim
            )));
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "row {id:?} contains a non-finite component"
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::InvalidInput(format!("duplicate image id {id:?}")));
        }
        self.index.insert(id.clone(), self.rows.len());
        self.ids.push(id);
        self.rows.push(row);
        Ok(())
    }

    pub fn set_labels(&mut self, labels: HashMap<String, String>) -> Result<()> {
        for id in labels.keys() {
            if !self.contains(id) {
                return Err(Error::Resolution(format!(
                    "label references unknown image id {id:?}"
                )));
            }
        }
        self.labels = Some(labels);
        Ok(())
    }
}

/// Loads a feature matrix: line 1 is "<rows> <dim>", each following line is
/// "<image_id> <v1> ... <vd>".
pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let mut lines = open_lines(path)?;
    let header = lines
        .next()
        .ok_or_else(|| Error::malformed(path, 1, "empty file, expected \"<rows> <dim>\" header"))?
        .map_err(|e| Error::io(path, e))?;
    let mut parts = header.split_whitespace();
    let declared: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::malformed(path, 1, "header must start with row count"))?;
    let dim: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::malformed(path, 1, "header must declare dimension"))?;
    if dim == 0 {
        return Err(Error::malformed(path, 1, "dimension must be positive"));
    }

    let mut matrix = FeatureMatrix::new(dim);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let id = toks.next().expect("non-empty line").to_string();
        let values: Vec<&str> = toks.collect();
        if values.len() != dim {
            return Err(Error::malformed(
                path,
                line_no,
                format!("row has {} components, header declares {dim}", values.len()),
            ));
        }
        let mut row = Vec::with_capacity(dim);
        for tok in values {
            row.push(super::parse_f64(path, line_no, tok)?);
        }
        matrix
            .push(id, row)
            .map_err(|e| Error::malformed(path, line_no, e.to_string()))?;
    }
    if matrix.len() != declared {
        return Err(Error::InvalidInput(format!(
            "{}: header declares {declared} rows, file has {}",
            path.display(),
            matrix.len()
        )));
    }
    Ok(matrix)
}

/// Writes a feature matrix in the same format `load_features` reads.
/// Row order is insertion order; floats print in shortest round-trip form,
/// so save(load(f)) is byte-identical for well-formed files.
pub fn save_features(matrix: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", matrix.len(), matrix.dim());
    for (id, row) in matrix.iter() {
        out.push_str(id);
        for v in row {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

/// Loads a companion label file: "<image_id>\t<class>" per line. Labels are
/// attached to a matrix separately so the same features can be evaluated
/// under different label sets.
pub fn load_labels(path: &Path) -> Result<HashMap<String, String>> {
    let mut labels = HashMap::new();
    for (idx, line) in open_lines(path)?.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, class) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(path, line_no, "expected \"<image_id>\\t<class>\""))?;
        let class = class.trim();
        if class.is_empty() {
            return Err(Error::malformed(path, line_no, "empty class"));
        }
        if labels.insert(id.to_string(), class.to_string()).is_some() {
            return Err(Error::malformed(
                path,
                line_no,
                format!("duplicate label for image id {id:?}"),
            ));
        }
    }
    Ok(labels)
}
