//! Polynomial transformation of a normalized block-encoding, simulated at
//! the matrix level: the polynomial is applied to the encoded block in its
//! eigenbasis and dilated back to a unitary. Queries to U_B are charged at
//! one per unit of degree.

use crate::encoding::{dilation_core, extract_block, BlockEncoding};
use crate::error::{Error, Result};
use crate::ledger::{Oracle, QueryLedger};
use crate::linalg::{eigendecompose, HermitianOperator, Spectrum};
use crate::poly::chebyshev::{clenshaw_eval, linspace};
use crate::poly::{least_degree, series_degree, ErrorTarget, InverseApproximant};

pub const BOUND_GRID: usize = 10_000;
const BOUND_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

pub fn parity(coeffs: &[f64]) -> Parity {
    let odd_zero = coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0);
    let even_zero = coeffs.iter().step_by(2).all(|&c| c == 0.0);
    match (odd_zero, even_zero) {
        (true, _) => Parity::Even,
        (false, true) => Parity::Odd,
        _ => Parity::Mixed,
    }
}

/// |p| ≤ 1/2 on [−1, 1], or |p| ≤ 1 when p has definite parity.
pub fn check_qsp_bound(coeffs: &[f64]) -> Result<()> {
    let bound = if parity(coeffs) == Parity::Mixed { 0.5 } else { 1.0 };
    for x in linspace(-1.0, 1.0, BOUND_GRID) {
        let v = clenshaw_eval(coeffs, x);
        if v.abs() > bound + BOUND_TOL {
            return Err(Error::PolynomialBound { x, value: v, bound });
        }
    }
    Ok(())
}

fn block_spectrum(e_b: &BlockEncoding) -> Result<Spectrum> {
    if (e_b.alpha() - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { alpha: e_b.alpha() });
    }
    eigendecompose(&extract_block(e_b))
}

/// Returns an encoding of p(B) with one more active ancilla and
/// b + 2 ancillas in total, error 4ℓ√ε_B, and per-application cost of
/// ℓ uses of U_B. `ledger` is charged the same ℓ.
pub fn qsp_apply(e_b: &BlockEncoding, coeffs: &[f64], ledger: &mut QueryLedger) -> Result<BlockEncoding> {
    let spectrum = block_spectrum(e_b)?;
    check_qsp_bound(coeffs)?;
    qsp_from_spectrum(e_b, &spectrum, coeffs, ledger)
}

fn qsp_from_spectrum(
    e_b: &BlockEncoding,
    spectrum: &Spectrum,
    coeffs: &[f64],
    ledger: &mut QueryLedger,
) -> Result<BlockEncoding> {
    let ell = series_degree(coeffs) as u64;
    let f = |x: f64| clenshaw_eval(coeffs, x.clamp(-1.0, 1.0));
    let block = spectrum.apply_fn(f);
    let core = dilation_core(block, spectrum, f);
    let mut cost = e_b.cost().times(ell);
    cost.add(Oracle::UB, ell);
    ledger.absorb(&cost);
    let eps = 4.0 * ell as f64 * e_b.eps().sqrt();
    let enc = BlockEncoding::new(core, 1, 1.0, eps, e_b.target_dim(), cost)?;
    Ok(enc.with_idle_ancillas(e_b.ancillas() + 1))
}

#[derive(Clone, Debug)]
pub struct InverseEncoding {
    pub encoding: BlockEncoding,
    pub approximant: InverseApproximant,
    /// κ/η: the approximant's domain is [−1, 1 − η/κ].
    pub kappa_eff: f64,
    pub eta: f64,
    /// Grid sup error of P against 1/(1 − x) on that domain.
    pub approx_error: f64,
}

impl InverseEncoding {
    /// ηK, the normalization of the encoded A^{-1}.
    pub fn normalization(&self) -> f64 {
        self.encoding.alpha()
    }

    pub fn k_norm(&self) -> f64 {
        self.approximant.k_norm
    }
}

/// Encodes A^{-1}/(ηK) from an encoding of B = I − ηA whose spectrum lies in
/// [−1, 1 − η/κ]. The degree is the least one meeting `target`.
pub fn inverse_encoding(
    e_b: &BlockEncoding,
    kappa: f64,
    eta: f64,
    target: ErrorTarget,
    ledger: &mut QueryLedger,
) -> Result<InverseEncoding> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !(kappa >= 1.0) {
        return Err(Error::invalid(format!("kappa must be at least 1, got {kappa}")));
    }
    let spectrum = block_spectrum(e_b)?;
    let hi = 1.0 - eta / kappa;
    let h = HermitianOperator::from_spectrum(spectrum.clone());
    h.check_spectrum_in(-1.0, hi, 1e-10)?;
    // κ = 1 leaves no room for the shifted Chebyshev construction; any κ′ > 1
    // gives a valid (looser) approximant since the domain only grows
    let kappa_eff = (kappa / eta).max(1.0 + 1e-9);
    let approximant = least_degree(kappa_eff, target)?;
    let coeffs = approximant.normalized_coeffs();
    check_qsp_bound(&coeffs)?;
    let k = approximant.k_norm;
    let alpha = eta * k;
    if alpha < 1.0 {
        return Err(Error::NumericalCheck(format!("normalization eta*K = {alpha} below 1")));
    }
    let q = qsp_from_spectrum(e_b, &spectrum, &coeffs, ledger)?;
    let approx_error = approximant.approx_error_sup();
    let eps = eta * approx_error + alpha * q.eps();
    let enc = BlockEncoding::new(
        q.core().clone(),
        q.active_ancillas(),
        alpha,
        eps,
        q.target_dim(),
        q.cost().clone(),
    )?
    .with_idle_ancillas(q.ancillas() - q.active_ancillas());
    Ok(InverseEncoding {
        encoding: enc,
        approximant,
        kappa_eff,
        eta,
        approx_error,
    })
}
