use std::path::Path;

use nalgebra::DMatrix;
use qmi_core::textfmt::Value;
use qmi_core::{Document, PartitionedSym64, QmiError, SymMatrix64};

use crate::commands::Failure;

pub fn load(path: &Path) -> Result<Document, Failure> {
    if !path.exists() {
        return Err(Failure::Usage(format!("no such file: {}", path.display())));
    }
    Document::read_file(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// The matrix stored under `key`, or the only matrix in the file.
pub fn matrix(doc: &Document, key: &str, path: &Path) -> Result<DMatrix<f64>, Failure> {
    if doc.contains(key) {
        return doc.matrix(key).map_err(Failure::from);
    }
    let mats: Vec<&str> = doc.keys().filter(|k| matches!(doc.get(k), Some(Value::Matrix(_)))).collect();
    match mats.as_slice() {
        [only] => doc.matrix(only).map_err(Failure::from),
        [] => Err(Failure::Usage(format!("{}: no matrix found (expected `{key}`)", path.display()))),
        _ => Err(Failure::Usage(format!("{}: several matrices and none named `{key}`", path.display()))),
    }
}

/// Resolves the split of a square matrix of order `dim`.
pub fn split(dim: usize, q: Option<usize>, r: Option<usize>, doc: &Document) -> Result<(usize, usize), Failure> {
    let q = q.or_else(|| doc.usize("q").ok());
    let r = r.or_else(|| doc.usize("r").ok());
    let (q, r) = match (q, r) {
        (Some(q), Some(r)) => (q, r),
        (Some(q), None) if q <= dim => (q, dim - q),
        (None, Some(r)) if r <= dim => (dim - r, r),
        (None, None) => return Err(Failure::Usage("block sizes unknown: pass --q or --r".into())),
        _ => return Err(Failure::Usage(format!("split does not fit a matrix of order {dim}"))),
    };
    if q + r != dim || q == 0 || r == 0 {
        return Err(Failure::Usage(format!("split ({q}, {r}) does not fit a matrix of order {dim}")));
    }
    Ok((q, r))
}

pub fn partitioned(path: &Path, key: &str, q: Option<usize>, r: Option<usize>) -> Result<PartitionedSym64, Failure> {
    let doc = load(path)?;
    let m = matrix(&doc, key, path)?;
    if m.nrows() != m.ncols() {
        return Err(Failure::Usage(format!("{}: `{key}` is not square", path.display())));
    }
    let (q, r) = split(m.nrows(), q, r, &doc)?;
    Ok(PartitionedSym64::new(SymMatrix64::new(m)?, q, r)?)
}

impl From<QmiError> for Failure {
    fn from(e: QmiError) -> Self {
        Failure::Lib(e)
    }
}
