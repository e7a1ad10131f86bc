//! Dense complex linear algebra: Hermitian spectra, spectral functions,
//! unitary completion and the JSON matrix format.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const DENSE_CAP: usize = 4096;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if n > DENSE_CAP {
        return Err(Error::TooLarge(n));
    }
    Ok(())
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns (relative Frobenius asymmetry, max entrywise asymmetry).
pub fn hermitian_asymmetry(m: &CMat) -> (f64, f64) {
    let n = m.nrows();
    let mut fro = 0.0;
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            fro += d * d;
            max = max.max(d);
        }
    }
    (fro.sqrt() / frobenius(m).max(1.0), max)
}

pub fn is_hermitian(m: &CMat) -> bool {
    m.is_square() && hermitian_asymmetry(m).0 <= HERMITIAN_TOL
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// V diag(f(λ)) V†.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply_fn(|x| x)
    }

    /// Coefficients of `v` in the eigenbasis, V† v.
    pub fn to_eigenbasis(&self, v: &CVec) -> CVec {
        self.vectors.ad_mul(v)
    }

    pub fn from_eigenbasis(&self, c: &CVec) -> CVec {
        &self.vectors * c
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.vectors.ad_mul(&self.vectors);
        max_abs_diff(&g, &CMat::identity(self.dim(), self.dim()))
    }
}

pub fn eigendecompose(m: &CMat) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    check_dim(m.nrows())?;
    let (rel, max) = hermitian_asymmetry(m);
    if rel > HERMITIAN_TOL {
        return Err(Error::NotHermitian { max_asymmetry: max });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    // nalgebra's complex Hermitian solver stalls near 1e-8 on some inputs
    let eig = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::NumericalCheck(format!("eigendecomposition failed: {e:?}")))?;
    let n = m.nrows();
    let (u, d) = (eig.U(), eig.S());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].re.total_cmp(&d[b].re));
    let values = order.iter().map(|&k| d[k].re).collect();
    let vectors = CMat::from_fn(n, n, |i, k| u[(i, order[k])]);
    Ok(Spectrum { values, vectors })
}

/// Hermitian matrix with its cached spectrum and the promise parameters
/// κ (condition bound) and η (scaling in B = I − ηA).
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    entries: CMat,
    spectrum: Spectrum,
    pub kappa_bound: Option<f64>,
    pub eta: Option<f64>,
}

impl HermitianOperator {
    pub fn new(entries: CMat) -> Result<Self> {
        let spectrum = eigendecompose(&entries)?;
        Ok(Self {
            entries,
            spectrum,
            kappa_bound: None,
            eta: None,
        })
    }

    pub fn from_spectrum(spectrum: Spectrum) -> Self {
        Self {
            entries: spectrum.reconstruct(),
            spectrum,
            kappa_bound: None,
            eta: None,
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let entries = CMat::from_fn(n, n, |i, j| if i == j { real(d[i]) } else { ZERO });
        Self::new(entries).expect("diagonal matrices are Hermitian")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; n])
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa_bound = Some(kappa);
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.max()
    }

    pub fn op_norm(&self) -> f64 {
        self.spectrum.spectral_radius()
    }

    /// Ratio of extreme singular values.
    pub fn condition_number(&self) -> f64 {
        let s: Vec<f64> = self.spectrum.values.iter().map(|x| x.abs()).collect();
        let max = s.iter().cloned().fold(0.0, f64::max);
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn is_positive_definite(&self) -> bool {
        self.lambda_min() > 0.0
    }

    /// Checks spectrum ⊆ [lo, hi] up to `tol`.
    pub fn check_spectrum_in(&self, lo: f64, hi: f64, tol: f64) -> Result<()> {
        for &l in &self.spectrum.values {
            if l < lo - tol || l > hi + tol {
                return Err(Error::SpectrumPromise { eigenvalue: l, lo, hi });
            }
        }
        Ok(())
    }

    pub fn reconstruction_error(&self) -> f64 {
        max_abs_diff(&self.spectrum.reconstruct(), &self.entries)
    }

    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMat {
        self.spectrum.apply_fn(f)
    }
}

/// ‖U†U − I‖ in Frobenius norm.
pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    let g = u.ad_mul(u);
    frobenius(&(g - CMat::identity(n, n)))
}

/// Extends orthonormal columns to a full unitary by modified Gram–Schmidt
/// over the standard basis vectors e_0, e_1, ...
pub fn complete_to_unitary(cols: &CMat) -> CMat {
    let d = cols.nrows();
    let mut basis: Vec<CVec> = (0..cols.ncols()).map(|k| cols.column(k).into_owned()).collect();
    let mut e = 0;
    while basis.len() < d {
        assert!(e < d, "standard basis exhausted before completion");
        let mut v = CVec::zeros(d);
        v[e] = ONE;
        e += 1;
        // two passes of MGS keep the residual at machine precision
        for _ in 0..2 {
            for q in &basis {
                let p = q.dotc(&v);
                v.axpy(-p, q, ONE);
            }
        }
        let nv = vec_norm(&v);
        if nv > 1e-6 {
            v.unscale_mut(nv);
            basis.push(v);
        }
    }
    let mut u = CMat::zeros(d, d);
    for (k, q) in basis.iter().enumerate() {
        u.set_column(k, q);
    }
    u
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_faer(m)
        .singular_values()
        .expect("SVD converges on finite input")
        .into_iter()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD M = U diag(σ) V†, σ descending, with columns whose σ is at
/// most `cutoff`·σ_max dropped.
pub fn thin_svd(m: &CMat, cutoff: f64) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = to_faer(m)
        .thin_svd()
        .map_err(|e| Error::NumericalCheck(format!("SVD failed: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = s.dim();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    let smax = order.first().map_or(0.0, |&i| s[i].re);
    order.retain(|&i| s[i].re > cutoff * smax);
    let sigma = order.iter().map(|&i| s[i].re).collect();
    let uu = CMat::from_fn(m.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vv = CMat::from_fn(m.ncols(), order.len(), |r, c| v[(r, order[c])]);
    Ok((uu, sigma, vv))
}

/// Matrix or vector document `{"dim": N, "re": [...], "im": [...]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let n = m.nrows();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..m.ncols() {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { dim: n, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.dim;
        check_dim(n)?;
        if self.re.len() != n * n || self.im.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: self.re.len().min(self.im.len()),
            });
        }
        Ok(CMat::from_fn(n, n, |i, j| c64(self.re[i * n + j], self.im[i * n + j])))
    }

    pub fn from_vector(v: &CVec) -> Self {
        Self {
            dim: v.len(),
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_vector(&self) -> Result<CVec> {
        if self.re.len() != self.dim || self.im.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.re.len().min(self.im.len()),
            });
        }
        Ok(CVec::from_fn(self.dim, |i, _| c64(self.re[i], self.im[i])))
    }
}
