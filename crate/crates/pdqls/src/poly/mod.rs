//! Chebyshev-basis polynomials used as matrix functions.

pub mod chebyshev;
pub mod inverse;
pub mod window;

use serde::{Deserialize, Serialize};

pub use chebyshev::{clenshaw_eval, sup_abs};
pub use inverse::{
    build_inverse_approximant, least_degree, normalization_degree, ErrorTarget, InverseApproximant, ShiftedChebyshev,
};
pub use window::{build_window, WindowPolynomial};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolynomialJson {
    pub basis: String,
    pub coeffs: Vec<f64>,
    pub meta: serde_json::Value,
}

/// Degree of a Chebyshev series, ignoring trailing exact zeros.
pub fn series_degree(coeffs: &[f64]) -> usize {
    coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
}
