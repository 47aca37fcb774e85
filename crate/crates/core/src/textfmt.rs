//! Line-oriented text format for named matrices, numbers and labels.
//!
//! ```text
//! # comment
//! q: 1
//! r: 1
//! status: feasible
//! Pi: matrix 2 2
//!   1.0000000000000000e0 0.0000000000000000e0
//!   0.0000000000000000e0 -1.0000000000000000e0
//! ```
//!
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` bit for bit. Reports produced by the command-line tool use the same
//! format, so any report can be read back as input.

use std::fmt::{self, Write as _};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{QmiError, Result};
use crate::scalar::{lit, to_f64, Real};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    Matrix(DMatrix<f64>),
}

/// Ordered collection of named entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    entries: Vec<(String, Value)>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

pub(crate) fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    fn insert(&mut self, key: &str, v: Value) {
        assert!(valid_key(key), "invalid key `{key}`");
        if let Some(slot) = self.entries.iter_mut().find(|(k, _)| k == key) {
            slot.1 = v;
        } else {
            self.entries.push((key.to_string(), v));
        }
    }

    pub fn set_matrix<T: Real>(&mut self, key: &str, m: &DMatrix<T>) -> &mut Self {
        self.insert(key, Value::Matrix(m.map(to_f64)));
        self
    }

    pub fn set_number<T: Real>(&mut self, key: &str, x: T) -> &mut Self {
        self.insert(key, Value::Number(to_f64(x)));
        self
    }

    pub fn set_int(&mut self, key: &str, x: i64) -> &mut Self {
        self.insert(key, Value::Number(x as f64));
        self
    }

    pub fn set_text(&mut self, key: &str, s: &str) -> &mut Self {
        self.insert(key, Value::Text(s.to_string()));
        self
    }

    pub fn set_bool(&mut self, key: &str, b: bool) -> &mut Self {
        self.set_text(key, if b { "true" } else { "false" })
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn matrix<T: Real>(&self, key: &str) -> Result<DMatrix<T>> {
        match self.get(key) {
            Some(Value::Matrix(m)) => Ok(m.map(lit::<T>)),
            Some(Value::Number(x)) => Ok(DMatrix::from_element(1, 1, lit(*x))),
            Some(Value::Text(_)) => Err(QmiError::InvalidParameter(format!("`{key}` is not a matrix"))),
            None => Err(QmiError::Missing(key.to_string())),
        }
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Some(Value::Number(x)) => Ok(*x),
            Some(Value::Matrix(m)) if m.shape() == (1, 1) => Ok(m[(0, 0)]),
            Some(_) => Err(QmiError::InvalidParameter(format!("`{key}` is not a number"))),
            None => Err(QmiError::Missing(key.to_string())),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let x = self.number(key)?;
        if x >= 0.0 && x.fract() == 0.0 {
            Ok(x as usize)
        } else {
            Err(QmiError::InvalidParameter(format!("`{key}` is not a non-negative integer")))
        }
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        match self.get(key) {
            Some(Value::Text(s)) => Ok(s),
            Some(_) => Err(QmiError::InvalidParameter(format!("`{key}` is not text"))),
            None => Err(QmiError::Missing(key.to_string())),
        }
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.text(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(QmiError::InvalidParameter(format!("`{key}` = `{other}` is not a boolean"))),
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        let mut doc = Document::new();
        let mut lines = src.lines().enumerate().peekable();
        while let Some((idx, raw)) = lines.next() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| QmiError::Parse { line: idx + 1, msg };
            let (key, rest) = line.split_once(':').ok_or_else(|| err("expected `key: value`".into()))?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(err(format!("invalid key `{key}`")));
            }
            if doc.contains(key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            let rest = rest.trim();
            // `matrix <rows> <cols>` opens a matrix; any other text is a label.
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let header = match toks.as_slice() {
                ["matrix", r, c] => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            let value = if let Some((rows, cols)) = header {
                let mut data = Vec::with_capacity(rows * cols);
                if cols > 0 {
                    for i in 0..rows {
                        let (ridx, rline) = loop {
                            match lines.next() {
                                Some((j, l)) if l.trim().is_empty() || l.trim().starts_with('#') => {
                                    let _ = j;
                                }
                                Some((j, l)) => break (j, l),
                                None => return Err(err(format!("`{key}`: expected {rows} rows, found {i}"))),
                            }
                        };
                        let row: Vec<f64> = rline
                            .split_whitespace()
                            .map(|t| {
                                t.parse::<f64>().map_err(|_| QmiError::Parse {
                                    line: ridx + 1,
                                    msg: format!("bad number `{t}`"),
                                })
                            })
                            .collect::<Result<_>>()?;
                        if row.len() != cols {
                            return Err(QmiError::Parse {
                                line: ridx + 1,
                                msg: format!("`{key}`: expected {cols} entries, found {}", row.len()),
                            });
                        }
                        data.extend(row);
                    }
                }
                Value::Matrix(DMatrix::from_row_slice(rows, cols, &data))
            } else if let Ok(x) = rest.parse::<f64>() {
                Value::Number(x)
            } else {
                Value::Text(rest.to_string())
            };
            doc.entries.push((key.to_string(), value));
        }
        Ok(doc)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| QmiError::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&src)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())
            .map_err(|e| QmiError::InvalidParameter(format!("cannot write {}: {e}", path.display())))
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (k, v) in &self.entries {
            match v {
                Value::Number(x) if x.fract() == 0.0 && x.abs() < 1e15 && !(*x == 0.0 && x.is_sign_negative()) => writeln!(out, "{k}: {}", *x as i64)?,
                Value::Number(x) => writeln!(out, "{k}: {}", fmt_num(*x))?,
                Value::Text(s) => writeln!(out, "{k}: {s}")?,
                Value::Matrix(m) => {
                    writeln!(out, "{k}: matrix {} {}", m.nrows(), m.ncols())?;
                    if m.ncols() > 0 {
                        for i in 0..m.nrows() {
                            let row: Vec<String> = m.row(i).iter().map(|&x| fmt_num(x)).collect();
                            writeln!(out, "  {}", row.join(" "))?;
                        }
                    }
                }
            }
        }
        f.write_str(&out)
    }
}
