//! PD-QLS solving by an encoded polynomial inverse followed by
//! post-selection or amplitude amplification.

use serde::{Deserialize, Serialize};

use crate::blockenc::{inverse_encoding, InverseEncoding};
use crate::encoding::{apply_postselected, dilate_unitary, BlockEncoding};
use crate::error::{Error, Result};
use crate::ledger::{Oracle, QueryLedger};
use crate::linalg::{CMat, CVec, HermitianOperator};
use crate::poly::ErrorTarget;
use crate::state::{trace_distance, StateVector};

const SPECTRUM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Postselect,
    Amplify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Worst,
    Average,
    Best,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Worst => "worst",
            Regime::Average => "average",
            Regime::Best => "best",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub kappa: f64,
    pub eta: f64,
    pub eps: f64,
    pub ell: usize,
    #[serde(rename = "K")]
    pub k_norm: f64,
    /// Probability of the |0^a⟩ branch for one application.
    pub p_succ: f64,
    /// ‖A^{-1}b‖²/(η²K²) evaluated from the exact inverse.
    pub p_succ_predicted: f64,
    pub aa_rounds: u64,
    /// sin((2k+1)θ) with sin θ = √p_succ.
    pub success_amplitude: f64,
    pub expected_repetitions: f64,
    pub queries: QueryLedger,
    pub trace_error: f64,
    pub encoding_error: f64,
    pub regime: Regime,
    /// ‖A^{-1}|b⟩‖.
    pub statistic: f64,
}

impl SolveReport {
    pub const CSV_HEADER: [&'static str; 13] = [
        "N",
        "kappa",
        "eta",
        "eps",
        "ell",
        "K",
        "p_succ",
        "k",
        "QUb",
        "QUB",
        "trace_error",
        "regime",
        "statistic",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        use crate::json::fmt_f64;
        vec![
            self.n.to_string(),
            fmt_f64(self.kappa),
            fmt_f64(self.eta),
            fmt_f64(self.eps),
            self.ell.to_string(),
            fmt_f64(self.k_norm),
            fmt_f64(self.p_succ),
            self.aa_rounds.to_string(),
            self.queries.get(Oracle::Ub).to_string(),
            self.queries.get(Oracle::UB).to_string(),
            fmt_f64(self.trace_error),
            self.regime.as_str().to_string(),
            fmt_f64(self.statistic),
        ]
    }
}

/// A^{-1} b computed in the eigenbasis of A.
pub fn direct_solution(a: &HermitianOperator, b: &StateVector) -> CVec {
    let s = a.spectrum();
    let mut c = s.to_eigenbasis(b.amplitudes());
    for (k, &lam) in s.values.iter().enumerate() {
        c[k] /= lam;
    }
    s.from_eigenbasis(&c)
}

/// Labels by ‖A^{-1}|b⟩‖: worst if ≤ 2, best if ≥ κ/2, average otherwise.
pub fn regime_classify(a: &HermitianOperator, b: &StateVector) -> (Regime, f64) {
    let stat = crate::linalg::vec_norm(&direct_solution(a, b));
    let kappa = a.kappa_bound.unwrap_or_else(|| a.condition_number());
    let regime = if stat <= 2.0 {
        Regime::Worst
    } else if stat >= kappa / 2.0 {
        Regime::Best
    } else {
        Regime::Average
    };
    (regime, stat)
}

/// κ for the spectral promise [1/κ, 1]: the declared bound, or 1/λ_min.
pub fn promised_kappa(a: &HermitianOperator) -> Result<f64> {
    let kappa = match a.kappa_bound {
        Some(k) => k,
        None => 1.0 / a.lambda_min(),
    };
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!(
            "condition bound must be finite and >= 1, got {kappa}"
        )));
    }
    a.check_spectrum_in(1.0 / kappa, 1.0, SPECTRUM_TOL)?;
    Ok(kappa)
}

/// Normalized encoding of B = I − ηA as a one-ancilla dilation.
pub fn encode_b(a: &HermitianOperator, eta: f64) -> Result<BlockEncoding> {
    let n = a.dim();
    let s = a.spectrum();
    // eigenvalues 1 − ηλ are ascending when λ is read backwards
    let spectrum = crate::linalg::Spectrum {
        values: s.values.iter().rev().map(|l| 1.0 - eta * l).collect(),
        vectors: CMat::from_fn(n, n, |i, k| s.vectors[(i, n - 1 - k)]),
    };
    dilate_unitary(&HermitianOperator::from_spectrum(spectrum))
}

pub fn solve_postselect(
    a: &HermitianOperator,
    b: &StateVector,
    eta: f64,
    eps: f64,
    mode: Mode,
) -> Result<(StateVector, SolveReport)> {
    let kappa = promised_kappa(a)?;
    let e_b = encode_b(a, eta)?;
    solve_with_encoding(a, b, &e_b, kappa, eta, eps, mode)
}

/// Solves with a caller-supplied encoding of B = I − ηA. Half of ε bounds
/// the error of ηP(B) against A^{-1}; the trace error then stays below ε.
pub fn solve_with_encoding(
    a: &HermitianOperator,
    b: &StateVector,
    e_b: &BlockEncoding,
    kappa: f64,
    eta: f64,
    eps: f64,
    mode: Mode,
) -> Result<(StateVector, SolveReport)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !b.is_normalized() {
        return Err(Error::invalid("b must be normalized"));
    }
    let mut build = QueryLedger::new();
    let inv: InverseEncoding = inverse_encoding(e_b, kappa, eta, ErrorTarget::Absolute(eps / (2.0 * eta)), &mut build)?;
    let mut one = QueryLedger::new();
    let (x, p_succ) = apply_postselected(&inv.encoding, b, &mut one)?;
    one.add(Oracle::Ub, 1);

    let direct = direct_solution(a, b);
    let stat = crate::linalg::vec_norm(&direct);
    let k_norm = inv.k_norm();
    let p_pred = stat * stat / (eta * eta * k_norm * k_norm);
    let theta = p_succ.sqrt().min(1.0).asin();
    let (rounds, amp, queries) = match mode {
        Mode::Postselect => (0, p_succ.sqrt(), one.clone()),
        Mode::Amplify => {
            let k = aa_rounds(theta);
            let amp = ((2 * k + 1) as f64 * theta).sin();
            (k, amp, one.times(2 * k + 1))
        }
    };
    let trace_error = trace_distance(&x, &StateVector::normalized(direct)?);
    let (regime, _) = regime_classify(&a.clone().with_kappa(kappa), b);
    let report = SolveReport {
        n: a.dim(),
        kappa,
        eta,
        eps,
        ell: inv.approximant.ell,
        k_norm,
        p_succ,
        p_succ_predicted: p_pred,
        aa_rounds: rounds,
        success_amplitude: amp,
        expected_repetitions: 1.0 / p_succ,
        queries,
        trace_error,
        encoding_error: inv.encoding.eps(),
        regime,
        statistic: stat,
    };
    Ok((x, report))
}

/// k = round(π/(4θ) − 1/2), never negative.
pub fn aa_rounds(theta: f64) -> u64 {
    if theta <= 0.0 {
        return 0;
    }
    (std::f64::consts::PI / (4.0 * theta) - 0.5).round().max(0.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = HermitianOperator::identity(4);
        let b = StateVector::normalized(CVec::from_vec(vec![
            crate::linalg::real(0.5),
            crate::linalg::c64(0.0, 0.5),
            crate::linalg::real(-0.5),
            crate::linalg::real(0.5),
        ]))
        .unwrap();
        let (x, r) = solve_postselect(&a, &b, 1.0, 1e-3, Mode::Postselect).unwrap();
        assert!(trace_distance(&x, &b) < 1e-10);
        // P(0) = 1 up to the approximation error eps/2
        assert!((r.p_succ * r.k_norm * r.k_norm - 1.0).abs() <= 1e-3 + 1e-12);
        assert_eq!(r.regime, Regime::Worst);
    }

    #[test]
    fn amplify_counts() {
        let a = HermitianOperator::from_real_diagonal(&[1.0 / 8.0, 0.5, 1.0]);
        let b = StateVector::uniform(3);
        let (_, r) = solve_postselect(&a, &b, 1.0, 1e-3, Mode::Amplify).unwrap();
        let k = r.aa_rounds;
        assert_eq!(r.queries.get(Oracle::UB), (2 * k + 1) * (2 * r.ell as u64 - 1));
        assert_eq!(r.queries.get(Oracle::Ub), 2 * k + 1);
        assert!(r.success_amplitude.powi(2) >= 0.4);
    }

    #[test]
    fn rejects_broken_promise() {
        let a = HermitianOperator::from_real_diagonal(&[0.01, 1.0]).with_kappa(10.0);
        assert!(matches!(
            solve_postselect(&a, &StateVector::uniform(2), 1.0, 0.01, Mode::Postselect),
            Err(Error::SpectrumPromise { .. })
        ));
    }
}
