//! Complete discrete data and the count tables derived from it.

mod key;
mod table;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

pub use key::{Key64, KeyLayout, PackedKey};
pub use table::{build_ct, CondFreqTable, ContingencyTable};
pub(crate) use table::{parent_arity_product, GroupScratch};

use crate::error::{Error, Result};
use crate::MAX_VARS;

/// An `N x n` matrix of value indices; column `i` takes values in `[0, arity_i)`.
#[derive(Clone, Debug)]
pub struct Dataset {
    layout: Arc<KeyLayout>,
    cells: Vec<u32>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.arities() == other.arities() && self.cells == other.cells
    }
}

impl Dataset {
    /// Builds a dataset from row-major `cells` and explicit arities.
    pub fn new(arities: Vec<u32>, cells: Vec<u32>) -> Result<Self> {
        let n = arities.len();
        if n == 0 {
            return Err(Error::Data("no variables".into()));
        }
        if n > MAX_VARS {
            return Err(Error::TooManyVariables(n));
        }
        if let Some(v) = arities.iter().position(|&a| a == 0) {
            return Err(Error::Data(format!("variable {v} has arity 0")));
        }
        if cells.is_empty() || !cells.len().is_multiple_of(n) {
            return Err(Error::Data(format!(
                "{} cells do not form whole rows of {n} values",
                cells.len()
            )));
        }
        if cells.len() / n > u32::MAX as usize {
            return Err(Error::Data("too many rows".into()));
        }
        for (i, row) in cells.chunks_exact(n).enumerate() {
            if let Some(v) = (0..n).find(|&v| row[v] >= arities[v]) {
                return Err(Error::Data(format!(
                    "row {}: value {} of variable {v} is outside arity {}",
                    i + 1,
                    row[v],
                    arities[v]
                )));
            }
        }
        Ok(Dataset {
            layout: Arc::new(KeyLayout::new(&arities)),
            cells,
        })
    }

    /// Builds a dataset inferring each arity as the column maximum plus one.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Data("no data rows".into()));
        };
        let n = first.as_ref().len();
        let mut cells = Vec::with_capacity(n * rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::Data(format!(
                    "row {} has {} values, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            cells.extend_from_slice(row);
        }
        let arities = infer_arities(n, &cells)?;
        Dataset::new(arities, cells)
    }

    /// Parses the text format: one row per line, values separated by commas
    /// or whitespace, blank lines and lines starting with `#` ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut cells = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let before = cells.len();
            if line.contains(',') {
                for tok in line.split(',') {
                    cells.push(parse_value(tok.trim(), lineno + 1)?);
                }
            } else {
                for tok in line.split_whitespace() {
                    cells.push(parse_value(tok, lineno + 1)?);
                }
            }
            let width = cells.len() - before;
            match n {
                None => {
                    if width > MAX_VARS {
                        return Err(Error::TooManyVariables(width));
                    }
                    n = Some(width);
                }
                Some(n) if n != width => {
                    return Err(Error::Data(format!(
                        "line {}: {width} values, expected {n}",
                        lineno + 1
                    )));
                }
                Some(_) => {}
            }
        }
        let Some(n) = n else {
            return Err(Error::Data("no data rows".into()));
        };
        let arities = infer_arities(n, &cells)?;
        Dataset::new(arities, cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::parse(&text)
    }

    /// Replaces the inferred arities; every value must still fit.
    pub fn with_arities(self, arities: Vec<u32>) -> Result<Self> {
        if arities.len() != self.n() {
            return Err(Error::Data(format!(
                "{} arities given for {} variables",
                arities.len(),
                self.n()
            )));
        }
        Dataset::new(arities, self.cells)
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    /// Number of data vectors.
    pub fn len(&self) -> usize {
        self.cells.len() / self.n()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn arities(&self) -> &[u32] {
        self.layout.arities()
    }

    pub fn layout(&self) -> &Arc<KeyLayout> {
        &self.layout
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let n = self.n();
        &self.cells[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u32> {
        self.cells.chunks_exact(self.n())
    }

    pub fn value(&self, row: usize, var: usize) -> u32 {
        self.cells[row * self.n() + var]
    }

    /// Column `perm[i]` of `self` becomes column `i` of the result.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of 0..{n}"
            )));
        }
        let arities = perm.iter().map(|&p| self.arities()[p]).collect();
        let cells = self
            .rows()
            .flat_map(|row| perm.iter().map(move |&p| row[p]))
            .collect();
        Dataset::new(arities, cells)
    }

    /// Writes rows in the text format, preceded by `#`-prefixed header lines.
    pub fn write_text<W: Write>(&self, mut out: W, header: &[String]) -> std::io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut buf = String::new();
        for row in self.rows() {
            buf.clear();
            for (i, value) in row.iter().enumerate() {
                if i > 0 {
                    buf.push(' ');
                }
                buf.push_str(&value.to_string());
            }
            writeln!(out, "{buf}")?;
        }
        Ok(())
    }
}

fn parse_value(tok: &str, line: usize) -> Result<u32> {
    if tok.is_empty() {
        return Err(Error::Data(format!("line {line}: missing value")));
    }
    tok.parse::<u32>().map_err(|_| {
        Error::Data(format!(
            "line {line}: '{tok}' is not a non-negative integer"
        ))
    })
}

fn infer_arities(n: usize, cells: &[u32]) -> Result<Vec<u32>> {
    let mut max = vec![0u32; n];
    for row in cells.chunks_exact(n) {
        for (m, &x) in max.iter_mut().zip(row) {
            *m = (*m).max(x);
        }
    }
    max.into_iter()
        .enumerate()
        .map(|(v, m)| {
            m.checked_add(1)
                .ok_or_else(|| Error::Data(format!("variable {v} value out of range")))
        })
        .collect()
}
