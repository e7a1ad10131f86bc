use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{vec_norm, CVec, MatrixJson, C64, ONE};

const NORM_TOL: f64 = 1e-12;

/// Complex amplitude vector with its cached ℓ2 norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: CVec,
    norm: f64,
}

impl StateVector {
    pub fn new(amplitudes: CVec) -> Self {
        let norm = vec_norm(&amplitudes);
        Self { amplitudes, norm }
    }

    /// Rescales to unit norm; a zero vector is rejected.
    pub fn normalized(amplitudes: CVec) -> Result<Self> {
        let n = vec_norm(&amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(n),
            norm: 1.0,
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVec::zeros(dim);
        v[index] = ONE;
        Self::new(v)
    }

    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self::new(CVec::from_element(dim, C64::new(a, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVec {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm - 1.0).abs() <= NORM_TOL
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr() / (self.norm * self.norm)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_vector(&self.amplitudes)
    }

    pub fn from_json(j: &MatrixJson) -> Result<Self> {
        Ok(Self::new(j.to_vector()?))
    }
}

/// √(1 − |⟨ψ|φ⟩|²) for normalized states, evaluated as the norm of the
/// component of φ orthogonal to ψ to avoid cancellation near 0.
pub fn trace_distance(psi: &StateVector, phi: &StateVector) -> f64 {
    assert_eq!(psi.dim(), phi.dim(), "trace_distance: dimension mismatch");
    let a = psi.amplitudes.unscale(psi.norm);
    let b = phi.amplitudes.unscale(phi.norm);
    let ov = a.dotc(&b);
    let mut perp = b;
    perp.axpy(-ov, &a, ONE);
    vec_norm(&perp).clamp(0.0, 1.0)
}

/// Sparse vector document `{"positions": [...], "re": [...], "im": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SparseVectorJson {
    pub positions: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Sparse complex vector with explicit support.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, C64)>,
}

impl SparseVector {
    pub fn from_dense(v: &CVec) -> Self {
        let entries = v
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() > 0.0)
            .map(|(i, z)| (i, *z))
            .collect();
        Self { dim: v.len(), entries }
    }

    pub fn to_dense(&self) -> CVec {
        let mut v = CVec::zeros(self.dim);
        for &(i, z) in &self.entries {
            v[i] += z;
        }
        v
    }

    pub fn sparsity(&self) -> usize {
        self.entries.len()
    }

    pub fn to_json(&self) -> SparseVectorJson {
        SparseVectorJson {
            positions: self.entries.iter().map(|e| e.0).collect(),
            re: self.entries.iter().map(|e| e.1.re).collect(),
            im: self.entries.iter().map(|e| e.1.im).collect(),
        }
    }

    pub fn from_json(j: &SparseVectorJson, dim: usize) -> Result<Self> {
        if j.re.len() != j.positions.len() || j.im.len() != j.positions.len() {
            return Err(Error::invalid("sparse vector: positions/re/im lengths differ"));
        }
        let mut entries = Vec::with_capacity(j.positions.len());
        for (k, &p) in j.positions.iter().enumerate() {
            if p >= dim {
                return Err(Error::invalid(format!("sparse vector: position {p} >= dim {dim}")));
            }
            entries.push((p, C64::new(j.re[k], j.im[k])));
        }
        Ok(Self { dim, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn distance_identities() {
        let a = StateVector::basis(2, 0);
        let b = StateVector::basis(2, 1);
        assert_eq!(trace_distance(&a, &a), 0.0);
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-15);
        let c = StateVector::new(CVec::from_vec(vec![c64(0.6, 0.0), c64(0.0, 0.8)]));
        assert!((trace_distance(&a, &c) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn global_phase_invisible() {
        let a = StateVector::uniform(4);
        let b = StateVector::new(a.amplitudes().map(|z| z * c64(0.0, 1.0)));
        assert!(trace_distance(&a, &b) < 1e-15);
    }
}
