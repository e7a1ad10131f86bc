//! Variable-stopping-time solver with variable-time amplitude amplification.
//!
//! Stage j (j = 1..m) splits the still-running branch with the window W_j(B)
//! onto clock C_j, then writes P_j(B) into the flag on that clock. All
//! operators are functions of B, so the state is kept per eigenvalue of B as
//! real multipliers of the coefficients β_λ = ⟨λ|b⟩.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{Oracle, QueryLedger};
use crate::linalg::{CVec, HermitianOperator};
use crate::poly::{build_window, least_degree, ErrorTarget, InverseApproximant, WindowPolynomial};
use crate::solver::{direct_solution, promised_kappa};
use crate::state::{trace_distance, StateVector};

pub const THETA_SKIP: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Stage {
    pub j: usize,
    pub delta: f64,
    /// None for the last stage, where W_m ≡ 1.
    pub window: Option<WindowPolynomial>,
    pub approximant: InverseApproximant,
    pub deg_p: usize,
    pub deg_w: usize,
    /// Σ_{i≤j} (deg P_i + deg W_i).
    pub t: usize,
}

impl Stage {
    pub fn w(&self, x: f64) -> f64 {
        match &self.window {
            Some(w) => w.eval(x).clamp(-1.0, 1.0),
            None => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VttSchedule {
    pub kappa: f64,
    pub eta: f64,
    pub eps: f64,
    pub eps_tilde: f64,
    pub m: usize,
    /// Shared normalization 2·max_j max_{[−1,1]} |P_j|.
    pub k_norm: f64,
    pub stages: Vec<Stage>,
}

impl VttSchedule {
    pub fn deltas(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.delta).collect()
    }

    pub fn t_max(&self) -> usize {
        self.stages.last().map_or(0, |s| s.t)
    }

    pub fn t_min(&self) -> usize {
        self.stages.first().map_or(0, |s| s.t)
    }

    /// P_j(x)/K.
    pub fn p(&self, stage: usize, x: f64) -> f64 {
        self.stages[stage].approximant.eval(x) / self.k_norm
    }
}

/// m = ⌈log₂κ⌉ + 1.
pub fn stage_count(kappa: f64) -> usize {
    kappa.log2().ceil().max(0.0) as usize + 1
}

/// ε̃ = ε/(4κ√(log₂κ + 1)).
pub fn eps_tilde(kappa: f64, eps: f64) -> f64 {
    eps / (4.0 * kappa * (kappa.log2() + 1.0).sqrt())
}

pub fn build_schedule(kappa: f64, eta: f64, eps: f64) -> Result<VttSchedule> {
    if !(kappa > 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("kappa must exceed 1, got {kappa}")));
    }
    if !(eta > 0.0 && eta <= 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!(
            "need eta in (0, 1] and eps in (0, 1), got {eta}, {eps}"
        )));
    }
    let m = stage_count(kappa);
    let et = eps_tilde(kappa, eps);
    let mut stages = Vec::with_capacity(m);
    let mut t = 0;
    for j in 1..=m {
        let delta = eta * 0.5f64.powi(j as i32);
        // accurate on [−1, 1 − δ_j]: the approximant for κ_j = 1/δ_j
        let approximant = least_degree(1.0 / delta, ErrorTarget::Absolute(et))?;
        let window = if j < m {
            Some(build_window(et.min(0.5), delta.min(0.5))?)
        } else {
            None
        };
        let deg_p = approximant.degree();
        let deg_w = window.as_ref().map_or(0, |w| w.degree);
        t += deg_p + deg_w;
        stages.push(Stage {
            j,
            delta,
            window,
            approximant,
            deg_p,
            deg_w,
            t,
        });
    }
    let k_norm = stages.iter().map(|s| s.approximant.k_norm).fold(0.0, f64::max);
    Ok(VttSchedule {
        kappa,
        eta,
        eps,
        eps_tilde: et,
        m,
        k_norm,
        stages,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Amplification {
    /// Least k_j with π/(8θ_j) − 1/2 ≤ k_j, capped at the AutoMax value so a
    /// stage never rotates past π/2 when no integer fits both bounds.
    Auto,
    /// Largest k_j with k_j ≤ π/(4θ_j) − 1/2.
    AutoMax,
    Fixed(Vec<u64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageReport {
    pub j: usize,
    pub delta: f64,
    pub deg_p: usize,
    pub deg_w: usize,
    pub theta: f64,
    pub k: u64,
    /// Stopping probability of the unamplified algorithm.
    pub p_stop: f64,
    pub t: usize,
    pub skipped: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VtaaReport {
    pub n: usize,
    pub kappa: f64,
    pub eta: f64,
    pub eps: f64,
    pub eps_tilde: f64,
    pub m: usize,
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub stages: Vec<StageReport>,
    /// Flag-1 probability of the unamplified algorithm (𝒩).
    pub p_succ: f64,
    /// Flag-1 probability after amplification.
    pub p_succ_amplified: f64,
    /// Flag-1 probability that lands on clock zero after uncomputing.
    pub p_clock_zero: f64,
    pub t_avg: f64,
    pub t_max: usize,
    pub t_min: usize,
    pub gamma: f64,
    pub trace_error: f64,
    /// Trace distance of the flag-1 branch (before uncomputing) to
    /// Σ_j |1_j⟩ M_{j−1} W_j |A^{-1}b⟩.
    pub branch_error: f64,
    pub queries: QueryLedger,
    pub uncompute_queries: u64,
    pub diagnostics: Vec<String>,
}

/// Per-eigenvalue branch multipliers: `flag0[j][i]`, `flag1[j][i]` and the
/// still-running branch `running[i]`.
#[derive(Clone, Debug)]
pub struct BranchState {
    pub flag0: Vec<Vec<f64>>,
    pub flag1: Vec<Vec<f64>>,
    pub running: Vec<f64>,
}

impl BranchState {
    fn new(n: usize, m: usize) -> Self {
        Self {
            flag0: vec![vec![0.0; n]; m],
            flag1: vec![vec![0.0; n]; m],
            running: vec![1.0; n],
        }
    }

    /// Σ_i w_i (running² + Σ_j flag0² + flag1²).
    pub fn total_norm_sqr(&self, weights: &[f64]) -> f64 {
        let mut s = weighted(&self.running, weights);
        for j in 0..self.flag0.len() {
            s += weighted(&self.flag0[j], weights) + weighted(&self.flag1[j], weights);
        }
        s
    }

    pub fn flag1_norm_sqr(&self, weights: &[f64]) -> f64 {
        self.flag1.iter().map(|f| weighted(f, weights)).sum()
    }
}

fn weighted(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * a * b).sum()
}

/// Unamplified multipliers M_{j−1}(λ)W_j(λ), one row per stage.
pub fn stop_multipliers(schedule: &VttSchedule, lambdas: &[f64]) -> Vec<Vec<f64>> {
    let mut m_prev = vec![1.0; lambdas.len()];
    let mut out = Vec::with_capacity(schedule.m);
    for s in &schedule.stages {
        let row: Vec<f64> = lambdas.iter().zip(&m_prev).map(|(&l, &m)| m * s.w(l)).collect();
        for (mp, &l) in m_prev.iter_mut().zip(lambdas) {
            let w = s.w(l);
            *mp *= (1.0 - w * w).max(0.0).sqrt();
        }
        out.push(row);
    }
    out
}

/// Clock-zero component of B† applied to Σ_j |1_j⟩ φ_j: Σ_j M_{j−1}W_j φ_j.
pub fn uncompute_clock(schedule: &VttSchedule, lambdas: &[f64], branches: &[Vec<f64>]) -> Vec<f64> {
    let mw = stop_multipliers(schedule, lambdas);
    (0..lambdas.len())
        .map(|i| mw.iter().zip(branches).map(|(r, b)| r[i] * b[i]).sum())
        .collect()
}

fn choose_k(theta: f64, mode: &Amplification, stage: usize) -> u64 {
    use std::f64::consts::PI;
    match mode {
        Amplification::Auto => {
            let lo = (PI / (8.0 * theta) - 0.5).ceil().max(0.0);
            let hi = (PI / (4.0 * theta) - 0.5).floor().max(0.0);
            lo.min(hi) as u64
        }
        Amplification::AutoMax => (PI / (4.0 * theta) - 0.5).floor().max(0.0) as u64,
        Amplification::Fixed(ks) => ks.get(stage).copied().unwrap_or(0),
    }
}

/// Runs the staged evolution, optionally amplified, and returns the branch
/// multipliers together with the per-stage (θ_j, k_j, skipped) triples.
pub fn evolve(
    schedule: &VttSchedule,
    lambdas: &[f64],
    weights: &[f64],
    mode: &Amplification,
) -> (BranchState, Vec<(f64, u64, bool)>) {
    let n = lambdas.len();
    let mut st = BranchState::new(n, schedule.m);
    let mut per_stage = Vec::with_capacity(schedule.m);
    for (jdx, s) in schedule.stages.iter().enumerate() {
        for i in 0..n {
            let w = s.w(lambdas[i]);
            let p = schedule.p(jdx, lambdas[i]);
            let u = st.running[i];
            st.flag0[jdx][i] = u * w * (1.0 - p * p).max(0.0).sqrt();
            st.flag1[jdx][i] = u * w * p;
            st.running[i] = u * (1.0 - w * w).max(0.0).sqrt();
        }
        let mg = weighted(&st.running, weights) + (0..=jdx).map(|k| weighted(&st.flag1[k], weights)).sum::<f64>();
        let theta = mg.sqrt().min(1.0).asin();
        if theta < THETA_SKIP {
            per_stage.push((theta, 0, true));
            continue;
        }
        let k = choose_k(theta, mode, jdx);
        if k > 0 {
            let phi = (2 * k + 1) as f64 * theta;
            let s_mg = phi.sin() / theta.sin();
            let s_bad = if theta.cos() > 0.0 {
                phi.cos() / theta.cos()
            } else {
                0.0
            };
            for v in st.running.iter_mut() {
                *v *= s_mg;
            }
            for k in 0..=jdx {
                for v in st.flag1[k].iter_mut() {
                    *v *= s_mg;
                }
                for v in st.flag0[k].iter_mut() {
                    *v *= s_bad;
                }
            }
        }
        per_stage.push((theta, k, false));
    }
    (st, per_stage)
}

/// Γ = √κ ‖A^{-1/2}b‖ / ‖A^{-1}b‖.
pub fn gamma_factor(a: &HermitianOperator, b: &StateVector) -> Result<f64> {
    let kappa = promised_kappa(a)?;
    let s = a.spectrum();
    let c = s.to_eigenbasis(b.amplitudes());
    let (mut half, mut full) = (0.0, 0.0);
    for (k, &l) in s.values.iter().enumerate() {
        let w = c[k].norm_sqr();
        half += w / l;
        full += w / (l * l);
    }
    Ok(kappa.sqrt() * half.sqrt() / full.sqrt())
}

pub fn simulate_vst(
    a: &HermitianOperator,
    b: &StateVector,
    schedule: &VttSchedule,
    mode: &Amplification,
) -> Result<(StateVector, VtaaReport)> {
    let kappa = promised_kappa(a)?;
    if kappa > schedule.kappa * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "schedule built for kappa = {} cannot serve kappa = {kappa}",
            schedule.kappa
        )));
    }
    if !b.is_normalized() {
        return Err(Error::invalid("b must be normalized"));
    }
    let eta = schedule.eta;
    let spec = a.spectrum();
    let beta = spec.to_eigenbasis(b.amplitudes());
    let weights: Vec<f64> = beta.iter().map(|z| z.norm_sqr()).collect();
    let lambdas: Vec<f64> = spec.values.iter().map(|l| 1.0 - eta * l).collect();

    let mut diagnostics = Vec::new();
    let (unamp, _) = evolve(schedule, &lambdas, &weights, &Amplification::Fixed(vec![]));
    let (st, per_stage) = evolve(schedule, &lambdas, &weights, mode);
    let total = st.total_norm_sqr(&weights);
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::NumericalCheck(format!("branch norm drifted to {total}")));
    }

    let mw = stop_multipliers(schedule, &lambdas);
    let mut stages = Vec::with_capacity(schedule.m);
    let mut t_avg2 = 0.0;
    let mut q_b_big = 0u64;
    let mut q_b_small = 1u64;
    for (jdx, s) in schedule.stages.iter().enumerate() {
        let (theta, k, skipped) = per_stage[jdx];
        if skipped {
            diagnostics.push(format!(
                "stage {}: theta = {theta:.3e}, no maybe-good mass, skipped",
                s.j
            ));
        }
        let p_stop = weighted(&mw[jdx], &weights);
        t_avg2 += p_stop * (s.t as f64).powi(2);
        q_b_big = (2 * k + 1) * (q_b_big + (s.deg_p + s.deg_w) as u64);
        q_b_small *= 2 * k + 1;
        stages.push(StageReport {
            j: s.j,
            delta: s.delta,
            deg_p: s.deg_p,
            deg_w: s.deg_w,
            theta,
            k,
            p_stop,
            t: s.t,
            skipped,
        });
    }
    let uncompute: u64 = schedule.stages.iter().map(|s| s.deg_w as u64).sum();
    let mut queries = QueryLedger::new();
    queries.add(Oracle::UB, q_b_big + uncompute);
    queries.add(Oracle::Ub, q_b_small);

    // B† on the flag-1 branch, clock-zero component
    let out = uncompute_clock(schedule, &lambdas, &st.flag1);
    let p_clock_zero = weighted(&out, &weights);
    let coeffs = CVec::from_iterator(beta.len(), out.iter().zip(beta.iter()).map(|(&o, &bz)| bz * o));
    let x = StateVector::normalized(spec.from_eigenbasis(&coeffs))?;
    let direct = direct_solution(a, b);
    let trace_error = trace_distance(&x, &StateVector::normalized(direct)?);

    // flag-1 branch against Σ_j |1_j⟩ M_{j−1}W_j |A^{-1}b⟩, both normalized
    let inv: Vec<f64> = spec.values.iter().map(|l| 1.0 / l).collect();
    let (mut dot, mut n1, mut n2) = (0.0, 0.0, 0.0);
    for jdx in 0..schedule.m {
        for i in 0..lambdas.len() {
            let ideal = mw[jdx][i] * inv[i];
            let got = st.flag1[jdx][i];
            dot += weights[i] * ideal * got;
            n1 += weights[i] * got * got;
            n2 += weights[i] * ideal * ideal;
        }
    }
    let cos = if n1 > 0.0 && n2 > 0.0 {
        dot / (n1 * n2).sqrt()
    } else {
        0.0
    };
    let branch_error = (1.0 - cos * cos).max(0.0).sqrt();

    let report = VtaaReport {
        n: a.dim(),
        kappa,
        eta,
        eps: schedule.eps,
        eps_tilde: schedule.eps_tilde,
        m: schedule.m,
        k_norm: schedule.k_norm,
        stages,
        p_succ: unamp.flag1_norm_sqr(&weights),
        p_succ_amplified: st.flag1_norm_sqr(&weights),
        p_clock_zero,
        t_avg: t_avg2.sqrt(),
        t_max: schedule.t_max(),
        t_min: schedule.t_min(),
        gamma: gamma_factor(a, b)?,
        trace_error,
        branch_error,
        queries,
        uncompute_queries: uncompute,
        diagnostics,
    };
    Ok((x, report))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostReport {
    pub measured_qub_big: u64,
    pub measured_qub_small: u64,
    /// t_max√m + (t_avg/√p_succ)√(m log(t_max/t_min)).
    pub bound: f64,
    pub ratio: f64,
    pub constant: f64,
    pub within: bool,
    /// Σ_j θ_j^{-1} log(1/p_fail) for finding the k_j by phase estimation.
    pub preprocessing: f64,
}

pub const COST_CONSTANT: f64 = 50.0;
pub const PREPROCESSING_FAIL: f64 = 0.01;

pub fn vtaa_cost_report(schedule: &VttSchedule, report: &VtaaReport) -> CostReport {
    let m = schedule.m as f64;
    let t_max = report.t_max as f64;
    let t_min = (report.t_min as f64).max(1.0);
    let log_ratio = (t_max / t_min).ln().max(1.0);
    let bound = t_max * m.sqrt() + report.t_avg / report.p_succ.sqrt() * (m * log_ratio).sqrt();
    let measured = report.queries.get(Oracle::UB);
    let ratio = measured as f64 / bound;
    let preprocessing = report
        .stages
        .iter()
        .filter(|s| !s.skipped)
        .map(|s| (1.0 / PREPROCESSING_FAIL).ln() / s.theta)
        .sum();
    CostReport {
        measured_qub_big: measured,
        measured_qub_small: report.queries.get(Oracle::Ub),
        bound,
        ratio,
        constant: COST_CONSTANT,
        within: ratio <= COST_CONSTANT,
        preprocessing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_counts() {
        assert_eq!(stage_count(2.0), 2);
        assert_eq!(stage_count(9.0), 5);
        let s = build_schedule(2.0, 1.0, 0.1).unwrap();
        assert_eq!(s.deltas(), vec![0.5, 0.25]);
        assert!(s.stages.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn identity_matrix_returns_b() {
        let a = HermitianOperator::identity(3).with_kappa(2.0);
        let b = StateVector::uniform(3);
        let s = build_schedule(2.0, 1.0, 0.1).unwrap();
        let (x, r) = simulate_vst(&a, &b, &s, &Amplification::Auto).unwrap();
        assert!(trace_distance(&x, &b) < 1e-12);
        assert!(r.trace_error < 1e-12);
    }

    #[test]
    fn telescoping_uncompute() {
        let s = build_schedule(8.0, 1.0, 0.1).unwrap();
        let lambdas: Vec<f64> = (0..50).map(|i| 1.0 - (1.0 / 8.0 + i as f64 * 0.0175)).collect();
        let mw = stop_multipliers(&s, &lambdas);
        let out = uncompute_clock(&s, &lambdas, &mw);
        for v in out {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_endpoints() {
        let a = HermitianOperator::from_real_diagonal(&[0.25, 0.5, 1.0]);
        let lo = gamma_factor(&a, &StateVector::basis(3, 0)).unwrap();
        let hi = gamma_factor(&a, &StateVector::basis(3, 2)).unwrap();
        assert!((lo - 1.0).abs() < 1e-12);
        assert!((hi - 2.0).abs() < 1e-12);
    }
}
