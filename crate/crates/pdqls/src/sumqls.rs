//! Cholesky-block preconditioning of a sum of local PD terms and the
//! contract-level pseudo-inversion solve.
//!
//! With h_j = l_j l_j† the rectangular L = (L_1 | ⋯ | L_J) satisfies
//! LL† = A, and L^g = (1/J)(L_1^{-1}; ⋯; L_J^{-1}) is a right inverse of L.
//! The solution is (L†)^+ L^g b = A^{-1} b.

use std::collections::BTreeMap;

use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::Serialize;

use crate::blockenc::SumHamiltonianSpec;
use crate::error::{Error, Result};
use crate::json::fmt_f64;
use crate::linalg::{max_abs_diff, thin_svd, vec_norm, CMat, CVec, C64, ONE, ZERO};
use crate::state::{trace_distance, SparseVector, StateVector};

pub const PD_TOL: f64 = 1e-12;
pub const CHOLESKY_TOL: f64 = 1e-10;
pub const RANK_CUTOFF: f64 = 1e-12;
pub const GAMMA_SAFETY: f64 = 0.99;
pub const PROJECTOR_TOL: f64 = 1e-8;
pub const PSEUDO_TOL: f64 = 1e-8;

/// l_j (lower-triangular, positive diagonal) and its inverse.
#[derive(Clone, Debug)]
pub struct TermFactor {
    pub l: CMat,
    pub l_inv: CMat,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// max |l l† − h|.
    pub residual: f64,
}

pub fn cholesky_blocks(spec: &SumHamiltonianSpec) -> Result<Vec<TermFactor>> {
    (0..spec.num_terms())
        .into_par_iter()
        .map(|j| {
            let h = &spec.terms()[j].matrix;
            let s = spec.term_spectrum(j);
            if s.min() <= PD_TOL {
                return Err(Error::NotPositiveDefinite {
                    term: j,
                    lambda_min: s.min(),
                });
            }
            let chol = Cholesky::new(h.clone()).ok_or(Error::NotPositiveDefinite {
                term: j,
                lambda_min: s.min(),
            })?;
            let l = chol.l();
            let d = l.nrows();
            // the inverse of a lower-triangular factor is lower-triangular
            let l_inv = l
                .solve_lower_triangular(&CMat::identity(d, d))
                .ok_or(Error::NotPositiveDefinite {
                    term: j,
                    lambda_min: s.min(),
                })?;
            let residual = max_abs_diff(&(&l * l.adjoint()), h);
            if residual > CHOLESKY_TOL {
                return Err(Error::NumericalCheck(format!(
                    "term {j}: Cholesky residual {residual:.3e} exceeds {CHOLESKY_TOL:.0e}"
                )));
            }
            Ok(TermFactor {
                l,
                l_inv,
                lambda_min: s.min(),
                lambda_max: s.max(),
                residual,
            })
        })
        .collect()
}

/// Index arithmetic for a register subset of a mixed-radix space.
struct Layout<'a> {
    dims: &'a [usize],
    strides: Vec<usize>,
}

impl<'a> Layout<'a> {
    fn new(dims: &'a [usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for q in (0..dims.len().saturating_sub(1)).rev() {
            strides[q] = strides[q + 1] * dims[q + 1];
        }
        Self { dims, strides }
    }

    /// (local index on `regs`, r with those digits cleared).
    fn split(&self, r: usize, regs: &[usize]) -> (usize, usize) {
        let mut li = 0;
        let mut base = r;
        for &q in regs {
            let digit = (r / self.strides[q]) % self.dims[q];
            li = li * self.dims[q] + digit;
            base -= digit * self.strides[q];
        }
        (li, base)
    }

    fn join(&self, mut li: usize, base: usize, regs: &[usize]) -> usize {
        let mut r = base;
        for &q in regs.iter().rev() {
            r += (li % self.dims[q]) * self.strides[q];
            li /= self.dims[q];
        }
        r
    }
}

/// (local ⊗ I)·v for a sparse v, accumulated into `out` with `offset`.
fn apply_local_sparse(
    layout: &Layout,
    local: &CMat,
    regs: &[usize],
    v: &SparseVector,
    offset: usize,
    out: &mut BTreeMap<usize, C64>,
) {
    for &(r, z) in &v.entries {
        let (li, base) = layout.split(r, regs);
        for lk in 0..local.nrows() {
            let c = local[(lk, li)];
            if c != ZERO {
                *out.entry(offset + layout.join(lk, base, regs)).or_insert(ZERO) += c * z;
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationResiduals {
    pub cholesky_max: f64,
    /// max |LL† − A|.
    pub ll_dagger: f64,
    /// max |L L^g − I|.
    pub l_lg: f64,
}

#[derive(Clone, Debug)]
pub struct FactorizationArtifacts {
    pub dims: Vec<usize>,
    pub regs: Vec<Vec<usize>>,
    pub factors: Vec<TermFactor>,
    pub n: usize,
    pub local_dim: usize,
    pub b: SparseVector,
    pub b_prime: SparseVector,
    /// Σ_j ‖L_j^{-1} b‖² = Σ_j ⟨b|H_j^{-1}|b⟩ for the normalized b.
    pub numerator: f64,
    pub kappa_a: f64,
    pub residuals: FactorizationResiduals,
}

impl FactorizationArtifacts {
    pub fn num_terms(&self) -> usize {
        self.factors.len()
    }

    pub fn d_b_prime(&self) -> usize {
        self.b_prime.sparsity()
    }

    fn embed(&self, local: &CMat, j: usize) -> CMat {
        crate::blockenc::embed_registers(&self.dims, local, &self.regs[j])
    }

    /// L = (L_1 | ⋯ | L_J), N × JN.
    pub fn l_matrix(&self) -> CMat {
        let (n, jj) = (self.n, self.num_terms());
        let mut l = CMat::zeros(n, jj * n);
        for j in 0..jj {
            l.view_mut((0, j * n), (n, n))
                .copy_from(&self.embed(&self.factors[j].l, j));
        }
        l
    }

    /// L^g = (1/J)(L_1^{-1}; ⋯; L_J^{-1}), JN × N.
    pub fn lg_matrix(&self) -> CMat {
        let (n, jj) = (self.n, self.num_terms());
        let mut g = CMat::zeros(jj * n, n);
        for j in 0..jj {
            let block = self.embed(&self.factors[j].l_inv, j).unscale(jj as f64);
            g.view_mut((j * n, 0), (n, n)).copy_from(&block);
        }
        g
    }
}

/// Builds L, L^g and b′ = L^g b / ‖L^g b‖ from a Sum-QLS instance. The
/// identities LL† = A and LL^g = I are checked on the assembled matrices.
pub fn build_factorization(spec: &SumHamiltonianSpec, b: &SparseVector) -> Result<FactorizationArtifacts> {
    let n = spec.dim();
    if b.dim != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim,
        });
    }
    let nb = vec_norm(&b.to_dense());
    if !(nb > 0.0) {
        return Err(Error::invalid("b must be non-zero"));
    }
    let b = SparseVector {
        dim: n,
        entries: b.entries.iter().map(|&(i, z)| (i, z / nb)).collect(),
    };
    let factors = cholesky_blocks(spec)?;
    let jj = factors.len();
    let dims = spec.dims().to_vec();
    let regs: Vec<Vec<usize>> = spec.terms().iter().map(|t| t.qubits.clone()).collect();
    let layout = Layout::new(&dims);

    let mut acc = BTreeMap::new();
    let mut numerator = 0.0;
    for (j, f) in factors.iter().enumerate() {
        let mut block = BTreeMap::new();
        apply_local_sparse(&layout, &f.l_inv, &regs[j], &b, j * n, &mut block);
        numerator += block.values().map(|z| z.norm_sqr()).sum::<f64>();
        acc.extend(block);
    }
    let scale = numerator.sqrt();
    let b_prime = SparseVector {
        dim: jj * n,
        entries: acc
            .into_iter()
            .filter(|(_, z)| *z != ZERO)
            .map(|(i, z)| (i, z / scale))
            .collect(),
    };
    let local_dim = spec.terms().iter().map(|t| t.matrix.nrows()).max().unwrap_or(1);
    if b_prime.sparsity() > b.sparsity() * jj * local_dim {
        return Err(Error::NumericalCheck(format!(
            "b' has {} non-zeros, more than d_b J 2^s = {}",
            b_prime.sparsity(),
            b.sparsity() * jj * local_dim
        )));
    }
    let kappa_a = factors.iter().map(|f| f.lambda_max).sum::<f64>() / factors.iter().map(|f| f.lambda_min).sum::<f64>();
    let cholesky_max = factors.iter().map(|f| f.residual).fold(0.0, f64::max);
    let mut art = FactorizationArtifacts {
        dims,
        regs,
        factors,
        n,
        local_dim,
        b,
        b_prime,
        numerator,
        kappa_a,
        residuals: FactorizationResiduals {
            cholesky_max,
            ll_dagger: 0.0,
            l_lg: 0.0,
        },
    };
    let l = art.l_matrix();
    art.residuals.ll_dagger = max_abs_diff(&(&l * l.adjoint()), &spec.assemble());
    art.residuals.l_lg = max_abs_diff(&(&l * art.lg_matrix()), &CMat::identity(n, n));
    Ok(art)
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaDiagnostics {
    /// ⟨b|A^{-1}|b⟩.
    pub denominator: f64,
    pub numerator: f64,
    /// ‖Π_L b′‖^{-1} from the closed form.
    pub formula_inv_norm: f64,
    /// ‖L†A^{-1}L b′‖^{-1} from the projector.
    pub projector_inv_norm: f64,
}

/// γ = 0.99 ‖Π_L b′‖² with ‖Π_L b′‖^{-1} = (1/J)√(Σ_j⟨b|H_j^{-1}|b⟩ / ⟨b|A^{-1}|b⟩),
/// cross-checked against Π_L = L†A^{-1}L.
pub fn gamma_overlap(art: &FactorizationArtifacts, a: &CMat) -> Result<(f64, GammaDiagnostics)> {
    let chol = Cholesky::new(a.clone()).ok_or_else(|| Error::NumericalCheck("A is not positive definite".into()))?;
    let b = art.b.to_dense();
    let ainv_b = chol.solve(&b);
    let denominator = b.dotc(&ainv_b).re;
    let jj = art.num_terms() as f64;
    let formula_inv_norm = (art.numerator / denominator).sqrt() / jj;

    let l = art.l_matrix();
    let bp = art.b_prime.to_dense();
    let proj = l.adjoint() * chol.solve(&(&l * &bp));
    let projector_inv_norm = 1.0 / vec_norm(&proj);
    let agreement = (formula_inv_norm - projector_inv_norm).abs() / projector_inv_norm;
    if agreement > PROJECTOR_TOL {
        return Err(Error::NumericalCheck(format!(
            "gamma formula {formula_inv_norm} and projector {projector_inv_norm} disagree ({agreement:.3e})"
        )));
    }
    let gamma = GAMMA_SAFETY / (formula_inv_norm * formula_inv_norm);
    Ok((
        gamma,
        GammaDiagnostics {
            denominator,
            numerator: art.numerator,
            formula_inv_norm,
            projector_inv_norm,
        },
    ))
}

/// Predicted query counts of the pseudo-inversion step.
#[derive(Clone, Debug, Serialize)]
pub struct PseudoCost {
    pub alpha: f64,
    pub kappa_tilde: f64,
    pub gamma: f64,
    pub eps: f64,
    /// (α/√γ) κ̃ log³κ̃ log²(1/ε).
    pub q_ul: f64,
    /// (1/√γ) κ̃ log κ̃.
    pub q_uv: f64,
    /// Smallest non-zero over largest singular value of L, inverted.
    pub kappa_eff_l: f64,
    pub rank: usize,
}

/// x = lower block of 𝓛⁺(b′, 0) for 𝓛 = [[0, L†], [L, 0]]. That block is
/// (L†)^+ b′, computed from the thin SVD of L† with singular values below
/// 1e-12·ς_max dropped. Logarithms are base 2.
pub fn pseudo_solve(art: &FactorizationArtifacts, gamma: f64, eps: f64) -> Result<(StateVector, PseudoCost)> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let l_dag = art.l_matrix().adjoint();
    let (u, sigma, v) = thin_svd(&l_dag, RANK_CUTOFF)?;
    if sigma.len() < art.n {
        return Err(Error::NumericalCheck(format!(
            "L has rank {} < N = {}, the Hermitian extension is degenerate",
            sigma.len(),
            art.n
        )));
    }
    let (smax, smin) = (sigma[0], sigma[sigma.len() - 1]);
    let bp = art.b_prime.to_dense();
    let mut x = CVec::zeros(art.n);
    for (k, &sg) in sigma.iter().enumerate() {
        let c = u.column(k).dotc(&bp) / sg;
        x.axpy(c, &v.column(k), ONE);
    }
    let x = StateVector::normalized(x)?;
    let alpha = (art.num_terms() * art.local_dim) as f64;
    let kt = art.kappa_a.sqrt();
    let root_g = gamma.sqrt();
    let cost = PseudoCost {
        alpha,
        kappa_tilde: kt,
        gamma,
        eps,
        q_ul: alpha / root_g * kt * kt.log2().powi(3) * (1.0 / eps).log2().powi(2),
        q_uv: kt * kt.log2() / root_g,
        kappa_eff_l: smax / smin,
        rank: sigma.len(),
    };
    Ok((x, cost))
}

#[derive(Clone, Debug, Serialize)]
pub struct SumQlsReport {
    /// log₂ N.
    pub n: f64,
    #[serde(rename = "J")]
    pub j: usize,
    /// log₂ of the largest local dimension.
    pub s: f64,
    pub d_b: usize,
    pub kappa_a: f64,
    pub kappa_true: f64,
    pub gamma: f64,
    pub d_bprime: usize,
    pub q_ul: f64,
    pub q_uv: f64,
    pub gate_estimate: f64,
    pub trace_error: f64,
    pub cost: PseudoCost,
    pub gamma_diagnostics: GammaDiagnostics,
    pub residuals: FactorizationResiduals,
}

impl SumQlsReport {
    pub const CSV_HEADER: [&'static str; 11] = [
        "n",
        "J",
        "s",
        "d_b",
        "kappa_A",
        "gamma",
        "d_bprime",
        "QUL",
        "QUv",
        "gate_estimate",
        "trace_error",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            fmt_f64(self.n),
            self.j.to_string(),
            fmt_f64(self.s),
            self.d_b.to_string(),
            fmt_f64(self.kappa_a),
            fmt_f64(self.gamma),
            self.d_bprime.to_string(),
            fmt_f64(self.q_ul),
            fmt_f64(self.q_uv),
            fmt_f64(self.gate_estimate),
            fmt_f64(self.trace_error),
        ]
    }
}

/// (n J 2^{2s}) Q[U_𝓛] + (n d_b J 2^s) Q[U_v].
pub fn gate_estimate(n: f64, j: usize, local_dim: usize, d_b: usize, q_ul: f64, q_uv: f64) -> f64 {
    let (j, ld, db) = (j as f64, local_dim as f64, d_b as f64);
    n * j * ld * ld * q_ul + n * db * j * ld * q_uv
}

pub fn sumqls_solve(spec: &SumHamiltonianSpec, b: &SparseVector, eps: f64) -> Result<(StateVector, SumQlsReport)> {
    let art = build_factorization(spec, b)?;
    let a = spec.assemble();
    let (gamma, diag) = gamma_overlap(&art, &a)?;
    let (x, cost) = pseudo_solve(&art, gamma, eps)?;

    let chol = Cholesky::new(a.clone()).ok_or_else(|| Error::NumericalCheck("A is not positive definite".into()))?;
    let direct = StateVector::normalized(chol.solve(&art.b.to_dense()))?;
    let trace_error = trace_distance(&x, &direct);
    if trace_error > PSEUDO_TOL {
        return Err(Error::NumericalCheck(format!(
            "pseudo-inverse output is {trace_error:.3e} from A^-1 b"
        )));
    }
    let sv = crate::linalg::singular_values(&a);
    let kappa_true = sv[0] / sv[sv.len() - 1];
    let n = (spec.dim() as f64).log2();
    let report = SumQlsReport {
        n,
        j: art.num_terms(),
        s: spec.locality(),
        d_b: art.b.sparsity(),
        kappa_a: art.kappa_a,
        kappa_true,
        gamma,
        d_bprime: art.d_b_prime(),
        q_ul: cost.q_ul,
        q_uv: cost.q_uv,
        gate_estimate: gate_estimate(
            n,
            art.num_terms(),
            art.local_dim,
            art.b.sparsity(),
            cost.q_ul,
            cost.q_uv,
        ),
        trace_error,
        cost,
        gamma_diagnostics: diag,
        residuals: art.residuals.clone(),
    };
    Ok((x, report))
}
