//! Sparse-access oracle P_A = (position, value) over an explicit COO list.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, CMat, C64, HERMITIAN_TOL};

/// COO document: `{"dim": N, "entries": [[i, j, re, im], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseMatrixJson {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct SparseMatrixOracle {
    dim: usize,
    sparsity: usize,
    /// Declared column positions per row, padded with the row index.
    positions: Vec<Vec<usize>>,
    values: BTreeMap<(usize, usize), C64>,
}

impl SparseMatrixOracle {
    /// Builds the oracle from (i, j, value) triples. Duplicate triples add up.
    /// Entries must describe a Hermitian matrix.
    pub fn from_triples(dim: usize, triples: &[(usize, usize, C64)]) -> Result<Self> {
        check_dim(dim)?;
        let mut values: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for &(i, j, v) in triples {
            if i >= dim || j >= dim {
                return Err(Error::invalid(format!("entry ({i}, {j}) outside dimension {dim}")));
            }
            *values.entry((i, j)).or_default() += v;
        }
        values.retain(|_, v| v.norm() > 0.0);
        let mut worst = 0.0f64;
        for (&(i, j), &v) in &values {
            let w = values.get(&(j, i)).copied().unwrap_or_default();
            worst = worst.max((v - w.conj()).norm());
        }
        let scale = values.values().map(|v| v.norm()).fold(1.0, f64::max);
        if worst > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { max_asymmetry: worst });
        }
        let mut positions = vec![Vec::new(); dim];
        for &(i, j) in values.keys() {
            positions[i].push(j);
        }
        let sparsity = positions.iter().map(|p| p.len()).max().unwrap_or(0).max(1);
        for (i, row) in positions.iter_mut().enumerate() {
            while row.len() < sparsity {
                row.push(i);
            }
        }
        Ok(Self {
            dim,
            sparsity,
            positions,
            values,
        })
    }

    pub fn from_dense(m: &CMat) -> Result<Self> {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triples(m.nrows(), &t)
    }

    pub fn from_json(j: &SparseMatrixJson) -> Result<Self> {
        let t: Vec<_> = j
            .entries
            .iter()
            .map(|&(r, c, re, im)| (r, c, C64::new(re, im)))
            .collect();
        Self::from_triples(j.dim, &t)
    }

    pub fn to_json(&self) -> SparseMatrixJson {
        SparseMatrixJson {
            dim: self.dim,
            entries: self.values.iter().map(|(&(i, j), v)| (i, j, v.re, v.im)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// Column of the ν-th declared entry of row i.
    pub fn position(&self, i: usize, nu: usize) -> usize {
        self.positions[i][nu]
    }

    pub fn value(&self, i: usize, j: usize) -> C64 {
        self.values.get(&(i, j)).copied().unwrap_or_default()
    }

    /// Distinct declared columns of row i.
    pub fn row_support(&self, i: usize) -> Vec<usize> {
        let mut s = self.positions[i].clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (&(i, j), &v) in &self.values {
            m[(i, j)] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, real};

    #[test]
    fn pads_rows_with_self_position() {
        let o =
            SparseMatrixOracle::from_triples(3, &[(0, 0, real(1.0)), (0, 1, c64(0.1, 0.2)), (1, 0, c64(0.1, -0.2))])
                .unwrap();
        assert_eq!(o.sparsity(), 2);
        assert_eq!(o.position(2, 0), 2);
        assert_eq!(o.position(2, 1), 2);
        assert_eq!(o.value(2, 2), C64::default());
        assert_eq!(o.row_support(1), vec![0, 1]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let r = SparseMatrixOracle::from_triples(2, &[(0, 1, real(0.5))]);
        assert!(matches!(r, Err(Error::NotHermitian { .. })));
    }
}
