//! Polynomial approximants of 1/(1 − x) built from shifted Chebyshev
//! polynomials, accurate on [−1, 1 − 1/κ] with a double root at x = 1.

use serde_json::json;

use super::chebyshev::{chebyshev_t, clenshaw_eval, interpolate, linspace, sup_abs};
use super::PolynomialJson;
use crate::error::{Error, Result};

pub const ERROR_GRID: usize = 10_000;

/// T̂_{ℓ,κ}(x) = T_ℓ(y(x)) / T_ℓ(1 + δ) with y(x) = (x + 1/(2κ))/(1 − 1/(2κ))
/// and δ = 1/(κ − 1/2), so that y(1) = 1 + δ and y(1 − 1/κ) = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftedChebyshev {
    pub ell: usize,
    pub kappa: f64,
    pub delta: f64,
}

impl ShiftedChebyshev {
    pub fn new(ell: usize, kappa: f64) -> Result<Self> {
        if !(kappa > 1.0) || !kappa.is_finite() {
            return Err(Error::invalid(format!("kappa must exceed 1, got {kappa}")));
        }
        if ell == 0 {
            return Err(Error::invalid("ell must be at least 1"));
        }
        Ok(Self {
            ell,
            kappa,
            delta: 1.0 / (kappa - 0.5),
        })
    }

    /// Written as 1 + δ + (x − 1)/(1 − h) so that y(1) = 1 + δ exactly.
    pub fn y(&self, x: f64) -> f64 {
        let h = 1.0 / (2.0 * self.kappa);
        1.0 + self.delta + (x - 1.0) / (1.0 - h)
    }

    /// T_ℓ(1 + δ), may overflow to +inf for very large ℓ√δ.
    pub fn denominator(&self) -> f64 {
        chebyshev_t(self.ell, 1.0 + self.delta)
    }

    /// Evaluates T̂. The quotient is formed in log space when both
    /// arguments lie beyond 1, which keeps it finite for large ℓ.
    pub fn eval(&self, x: f64) -> f64 {
        let l = self.ell as f64;
        let b = (1.0 + self.delta).acosh();
        let y = self.y(x);
        // cosh(ℓb) = e^{ℓb}(1 + e^{−2ℓb})/2
        let tail_b = (-2.0 * l * b).exp();
        if y.abs() <= 1.0 {
            let t = chebyshev_t(self.ell, y);
            t * 2.0 * (-l * b).exp() / (1.0 + tail_b)
        } else {
            let a = y.abs().acosh();
            let tail_a = (-2.0 * l * a).exp();
            let mag = (l * (a - b)).exp() * (1.0 + tail_a) / (1.0 + tail_b);
            if y < 0.0 && self.ell % 2 == 1 {
                -mag
            } else {
                mag
            }
        }
    }

    /// max |T̂| over the uniform grid of [−1, 1 − 1/κ].
    pub fn sup_on_domain(&self, grid: usize) -> f64 {
        linspace(-1.0, 1.0 - 1.0 / self.kappa, grid)
            .into_iter()
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }
}

/// P_{2ℓ−1,κ}(x) = [1 − T̂_{ℓ,κ}(x)]² / (1 − x) in the Chebyshev-T basis,
/// with K = 2 max_{[−1,1]} |P|.
#[derive(Clone, Debug)]
pub struct InverseApproximant {
    pub ell: usize,
    pub kappa: f64,
    pub coeffs: Vec<f64>,
    pub k_norm: f64,
}

pub fn build_inverse_approximant(ell: usize, kappa: f64) -> Result<InverseApproximant> {
    let t = ShiftedChebyshev::new(ell, kappa)?;
    let n = 2 * ell;
    // interior nodes only, so 1 − x never vanishes
    let mut coeffs = interpolate(
        |x| {
            let d = 1.0 - t.eval(x);
            d * d / (1.0 - x)
        },
        n,
    );
    // P(1) = Σ c_k; remove the rounding residue so the double root is exact
    let s: f64 = coeffs.iter().sum();
    coeffs[0] -= s;
    let degree = n - 1;
    let (_, m) = sup_abs(&coeffs, (50 * degree).max(2000));
    Ok(InverseApproximant {
        ell,
        kappa,
        coeffs,
        k_norm: 2.0 * m,
    })
}

impl InverseApproximant {
    pub fn degree(&self) -> usize {
        2 * self.ell - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw_eval(&self.coeffs, x)
    }

    /// P(x)/K, bounded by 1/2 in magnitude on [−1, 1].
    pub fn normalized(&self, x: f64) -> f64 {
        self.eval(x) / self.k_norm
    }

    pub fn normalized_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c / self.k_norm).collect()
    }

    pub fn shifted(&self) -> ShiftedChebyshev {
        ShiftedChebyshev::new(self.ell, self.kappa).expect("validated at construction")
    }

    /// max |P(x) − 1/(1−x)| over a 10^4-point grid of [−1, 1 − 1/κ].
    pub fn approx_error_sup(&self) -> f64 {
        linspace(-1.0, 1.0 - 1.0 / self.kappa, ERROR_GRID)
            .into_iter()
            .map(|x| (self.eval(x) - 1.0 / (1.0 - x)).abs())
            .fold(0.0, f64::max)
    }

    /// κ(2ε/(3κ) + ε²/(9κ²)) with ε = 3κ·max|T̂|, the error bound implied by
    /// the measured size of T̂ on the domain.
    pub fn error_bound_from_t(&self) -> f64 {
        let m = self.shifted().sup_on_domain(ERROR_GRID);
        let eps = 3.0 * self.kappa * m;
        let k = self.kappa;
        k * (2.0 * eps / (3.0 * k) + eps * eps / (9.0 * k * k))
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            basis: "chebyshev-T".into(),
            coeffs: self.coeffs.clone(),
            meta: json!({"ell": self.ell, "kappa": self.kappa, "K": self.k_norm}),
        }
    }
}

/// How an approximation error is measured when searching for a degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorTarget {
    /// sup |P − 1/(1−x)| ≤ eps.
    Absolute(f64),
    /// sup |P − 1/(1−x)| ≤ eps·K, i.e. error eps on the normalized block P/K.
    BlockNormalized(f64),
}

impl ErrorTarget {
    fn accepts(&self, p: &InverseApproximant) -> bool {
        let err = p.approx_error_sup();
        match *self {
            ErrorTarget::Absolute(e) => err <= e,
            ErrorTarget::BlockNormalized(e) => err <= e * p.k_norm,
        }
    }

    pub fn eps(&self) -> f64 {
        match *self {
            ErrorTarget::Absolute(e) | ErrorTarget::BlockNormalized(e) => e,
        }
    }
}

pub const MAX_ELL: usize = 1 << 16;

/// Least ℓ whose approximant meets `target` on the grid certificate.
/// Doubling brackets the answer, bisection narrows it.
pub fn least_degree(kappa: f64, target: ErrorTarget) -> Result<InverseApproximant> {
    if !(target.eps() > 0.0) {
        return Err(Error::invalid("error target must be positive"));
    }
    let mut hi = 1;
    let mut hi_p = build_inverse_approximant(hi, kappa)?;
    while !target.accepts(&hi_p) {
        hi *= 2;
        if hi > MAX_ELL {
            return Err(Error::NumericalCheck(format!(
                "no approximant with ell <= {MAX_ELL} meets {target:?} at kappa = {kappa}"
            )));
        }
        hi_p = build_inverse_approximant(hi, kappa)?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let p = build_inverse_approximant(mid, kappa)?;
        if target.accepts(&p) {
            hi = mid;
            hi_p = p;
        } else {
            lo = mid;
        }
    }
    Ok(hi_p)
}

/// ℓ = ⌈13.1 + 9.27 √(κ − 1/2)⌉, the degree at which K ≤ 6.05κ is claimed.
pub fn normalization_degree(kappa: f64) -> usize {
    (13.1 + 9.27 * (kappa - 0.5).sqrt()).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_one_at_one() {
        let t = ShiftedChebyshev::new(7, 12.0).unwrap();
        assert!((t.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((t.delta - 1.0 / 11.5).abs() < 1e-15);
    }

    #[test]
    fn double_root_at_one() {
        for &(l, k) in &[(6, 15.0), (10, 9.0), (40, 2.0), (25, 100.0)] {
            let p = build_inverse_approximant(l, k).unwrap();
            assert!(p.eval(1.0).abs() < 1e-10, "P(1) = {}", p.eval(1.0));
            assert_eq!(p.coeffs.len(), 2 * l);
        }
    }

    #[test]
    fn bounded_by_half_after_normalization() {
        let p = build_inverse_approximant(12, 20.0).unwrap();
        for x in linspace(-1.0, 1.0, 20_000) {
            assert!(p.normalized(x).abs() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn error_examples() {
        assert!(build_inverse_approximant(1, 100.0).unwrap().approx_error_sup() > 1.0);
        assert!(build_inverse_approximant(40, 2.0).unwrap().approx_error_sup() < 1e-8);
    }

    #[test]
    fn shifted_bound_kappa9() {
        let t = ShiftedChebyshev::new(10, 9.0).unwrap();
        let bound = 2.0 * (-(10.0) * (1.0f64 / 8.5).sqrt()).exp();
        assert!(t.sup_on_domain(ERROR_GRID) <= bound);
    }

    #[test]
    fn large_degree_stays_finite() {
        let t = ShiftedChebyshev::new(5000, 3.0).unwrap();
        assert!(t.eval(0.0).is_finite());
        assert!((t.eval(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_degree_meets_target() {
        let p = least_degree(9.0, ErrorTarget::Absolute(0.1)).unwrap();
        assert!(p.approx_error_sup() <= 0.1);
        let q = build_inverse_approximant(p.ell - 1, 9.0).unwrap();
        assert!(q.approx_error_sup() > 0.1);
    }
}
