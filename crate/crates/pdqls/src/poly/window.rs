//! Even windowing polynomials: close to 1 on [0, 1 − 2δ], close to 0 on
//! [1 − δ, 1], bounded by 1 everywhere on [−1, 1].

use serde_json::json;

use super::chebyshev::{clenshaw_eval, linspace, quadrature};
use super::PolynomialJson;
use crate::error::{Error, Result};

pub const BAND_GRID: usize = 10_000;
pub const MAX_WINDOW_DEGREE: usize = 100_000;

/// Standard normal CDF through erfc, accurate in the far left tail.
pub fn phi(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Smallest z with Φ(−z) ≤ p, by bisection.
fn normal_tail_point(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(-mid) <= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Φ((x + 1 − 1.5δ)/σ) · Φ((−x + 1 − 1.5δ)/σ).
pub fn smooth_window(x: f64, sigma: f64, delta: f64) -> f64 {
    let c = 1.0 - 1.5 * delta;
    phi((x + c) / sigma) * phi((-x + c) / sigma)
}

#[derive(Clone, Debug)]
pub struct WindowPolynomial {
    pub eps: f64,
    pub delta: f64,
    pub sigma: f64,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl WindowPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        clenshaw_eval(&self.coeffs, x)
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            basis: "chebyshev-T".into(),
            coeffs: self.coeffs.clone(),
            meta: json!({"eps": self.eps, "delta": self.delta, "sigma": self.sigma, "degree": self.degree}),
        }
    }

    pub fn check_bands(&self) -> std::result::Result<(), String> {
        check_bands(&self.coeffs, self.eps, self.delta)
    }
}

/// Grid check of the three band constraints.
pub fn check_bands(coeffs: &[f64], eps: f64, delta: f64) -> std::result::Result<(), String> {
    for x in linspace(-1.0, 1.0, BAND_GRID) {
        let w = clenshaw_eval(coeffs, x);
        if w.abs() > 1.0 + 1e-12 {
            return Err(format!("|W({x})| = {} > 1", w.abs()));
        }
        if (0.0..=1.0 - 2.0 * delta).contains(&x) && !(w >= 1.0 - eps && w <= 1.0 + 1e-12) {
            return Err(format!("W({x}) = {w} outside [1 - eps, 1]"));
        }
        if x >= 1.0 - delta && w.abs() > eps {
            return Err(format!("|W({x})| = {} > eps", w.abs()));
        }
    }
    Ok(())
}

/// Even truncated Chebyshev series of the smooth window, divided by its
/// maximum modulus on the band grid.
fn candidate(sigma: f64, delta: f64, degree: usize) -> Vec<f64> {
    let mut c = quadrature(|x| smooth_window(x, sigma, delta), degree);
    for (k, ck) in c.iter_mut().enumerate() {
        if k % 2 == 1 {
            *ck = 0.0;
        }
    }
    let m = linspace(-1.0, 1.0, BAND_GRID)
        .into_iter()
        .map(|x| clenshaw_eval(&c, x).abs())
        .fold(0.0, f64::max);
    if m > 0.0 {
        for ck in c.iter_mut() {
            *ck /= m;
        }
    }
    c
}

/// Builds W_{ε,δ}. σ is the largest width with Φ(−0.5δ/σ) ≤ ε/4; the degree
/// starts at ⌈σ^{-1/2}⌉ and doubles until the bands hold, then a bisection
/// over even degrees finds the smallest passing degree below the first hit.
pub fn build_window(eps: f64, delta: f64) -> Result<WindowPolynomial> {
    if !(eps > 0.0 && eps <= 0.5) || !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::invalid(format!(
            "window needs eps, delta in (0, 1/2], got eps = {eps}, delta = {delta}"
        )));
    }
    let sigma = 0.5 * delta / normal_tail_point(eps / 4.0);
    let even = |d: usize| d + d % 2;
    let mut deg = even((sigma.powf(-0.5)).ceil() as usize).max(2);
    let mut coeffs = candidate(sigma, delta, deg);
    let mut last_err = check_bands(&coeffs, eps, delta);
    while let Err(detail) = &last_err {
        if deg * 2 > MAX_WINDOW_DEGREE {
            return Err(Error::WindowConstruction {
                eps,
                delta,
                degree: deg,
                detail: detail.clone(),
            });
        }
        deg *= 2;
        coeffs = candidate(sigma, delta, deg);
        last_err = check_bands(&coeffs, eps, delta);
    }
    let mut lo = deg / 2;
    let mut hi = deg;
    while hi - lo > 2 {
        let mid = even((lo + hi) / 2);
        if mid >= hi || mid <= lo {
            break;
        }
        let c = candidate(sigma, delta, mid);
        if check_bands(&c, eps, delta).is_ok() {
            hi = mid;
            coeffs = c;
        } else {
            lo = mid;
        }
    }
    Ok(WindowPolynomial {
        eps,
        delta,
        sigma,
        degree: hi,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_tail_accuracy() {
        // Φ(−10) ≈ 7.6199e−24
        assert!((phi(-10.0) / 7.619853024160527e-24 - 1.0).abs() < 1e-10);
        assert!((phi(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn sigma_condition_tight() {
        let w = build_window(0.05, 0.1).unwrap();
        let z = 0.5 * w.delta / w.sigma;
        assert!(phi(-z) <= 0.05 / 4.0);
        assert!(phi(-z * (1.0 - 1e-9)) > 0.05 / 4.0 * (1.0 - 1e-6));
    }

    #[test]
    fn even_and_banded() {
        let w = build_window(0.05, 0.1).unwrap();
        assert!(w.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0));
        assert!(w.eval(0.0) >= 0.95);
        assert!(w.eval(1.0).abs() <= 0.05);
        for x in linspace(0.0, 1.0, 1000) {
            assert_eq!(w.eval(x), w.eval(-x));
        }
        assert!(w.check_bands().is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_window(0.0, 0.1).is_err());
        assert!(build_window(0.1, 0.7).is_err());
    }
}
