//! Distinct-value extraction and the mapping back to the original index space.
//!
//! Every quantizer in this crate works on the sorted distinct values of its
//! input. [`SortedDistinctVector`] keeps those values together with an index
//! map so the quantized distinct values can be scattered back onto the
//! original positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending distinct values of a vector plus the index map back to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortedDistinctVector {
    values: Vec<f64>,
    index_map: Vec<usize>,
}

impl SortedDistinctVector {
    /// Strictly ascending distinct values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// For every original position, the index of its value in [`Self::values`].
    pub fn index_map(&self) -> &[usize] {
        &self.index_map
    }

    pub fn original_len(&self) -> usize {
        self.index_map.len()
    }

    /// Number of distinct values (`m`).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// How many original positions map onto each distinct value.
    pub fn multiplicities(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.values.len()];
        for &i in &self.index_map {
            counts[i] += 1.0;
        }
        counts
    }

    /// Collapses a full-length vector onto the distinct index space by taking,
    /// for each distinct value, the entry at its first original position.
    pub fn gather(&self, full: &[f64]) -> Result<Vec<f64>> {
        check_len(self.original_len(), full.len())?;
        let mut out = vec![f64::NAN; self.values.len()];
        let mut seen = vec![false; self.values.len()];
        for (p, &i) in self.index_map.iter().enumerate() {
            if !seen[i] {
                seen[i] = true;
                out[i] = full[p];
            }
        }
        Ok(out)
    }
}

/// Deduplicates `w` into ascending distinct values.
///
/// Equality is exact: `0.1 + 0.2` and `0.3` are two different values.
pub fn extract_distinct(w: &[f64]) -> Result<SortedDistinctVector> {
    if w.is_empty() {
        return Err(Error::EmptyVector);
    }
    if let Some(p) = w.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(p));
    }

    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]));

    let mut values = Vec::new();
    let mut index_map = vec![0; w.len()];
    for &p in &order {
        // -0.0 and 0.0 compare equal and are treated as one value.
        if values.last() != Some(&w[p]) {
            values.push(w[p]);
        }
        index_map[p] = values.len() - 1;
    }

    Ok(SortedDistinctVector { values, index_map })
}

/// Writes `q[index_map[p]]` to every original position `p`.
pub fn scatter_to_original(d: &SortedDistinctVector, q: &[f64]) -> Result<Vec<f64>> {
    check_len(d.len(), q.len())?;
    Ok(d.index_map.iter().map(|&i| q[i]).collect())
}

/// Shape of a flattened row-major matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixShape {
    pub rows: usize,
    pub cols: usize,
}

/// Row-major flattening of a rectangular matrix.
pub fn flatten_matrix(rows: &[Vec<f64>]) -> Result<(Vec<f64>, MatrixShape)> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * cols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::RaggedMatrix {
                row: r,
                expected: cols,
                got: row.len(),
            });
        }
        flat.extend_from_slice(row);
    }
    Ok((
        flat,
        MatrixShape {
            rows: rows.len(),
            cols,
        },
    ))
}

pub fn restore_matrix(flat: &[f64], shape: MatrixShape) -> Result<Vec<Vec<f64>>> {
    check_len(shape.rows * shape.cols, flat.len())?;
    if shape.cols == 0 {
        return Ok(vec![Vec::new(); shape.rows]);
    }
    Ok(flat.chunks(shape.cols).map(<[f64]>::to_vec).collect())
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}
