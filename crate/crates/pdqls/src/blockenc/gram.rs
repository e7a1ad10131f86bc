//! Block-encoding of B = I − A for diagonally dominant A from two state
//! preparations: U_L|i⟩ = |ψ_i⟩, U_R|j⟩ = |φ_j⟩ with ⟨ψ_i|φ_j⟩ = δ_ij − A_ij.
//!
//! |ψ_i⟩ = Σ_l conj(√(δ_il − A_il))|i, l⟩ + √r_i|i, N⟩
//! |φ_j⟩ = Σ_k √(δ_jk − conj(A_jk))|k, j⟩ + √r_j|N, j⟩
//! with r_i = A_ii − Σ_{l≠i}|A_il|.
//!
//! Both states live in C^{N+1} ⊗ C^{N+1}, but only the pairs (i, l) with
//! A_il ≠ 0 or l = i, together with (i, N) and (N, j), are ever populated.
//! The unitaries are built on the span of those pairs, padded to 2^a·N.
//! Input |0^a⟩|i⟩ is identified with the pair (i, N).

use std::collections::HashMap;

use super::sparse::SparseMatrixOracle;
use crate::encoding::BlockEncoding;
use crate::error::{Error, Result};
use crate::ledger::{Oracle, QueryLedger};
use crate::linalg::{check_dim, complete_to_unitary, CMat, C64};

const DOMINANCE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GramEncoding {
    pub encoding: BlockEncoding,
    pub u_l: CMat,
    pub u_r: CMat,
    /// Number of populated basis pairs before padding.
    pub support_dim: usize,
    pub residuals: Vec<f64>,
}

/// Per-row margins r_i = A_ii − Σ_{l≠i}|A_il| and 1 − A_ii; the worst
/// violation, if any, is reported.
pub fn check_diagonal_dominance(a: &SparseMatrixOracle) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut r = vec![0.0; n];
    let mut worst: Option<(usize, f64)> = None;
    for (i, ri) in r.iter_mut().enumerate() {
        let diag = a.value(i, i);
        let off: f64 = a
            .row_support(i)
            .into_iter()
            .filter(|&l| l != i)
            .map(|l| a.value(i, l).norm())
            .sum();
        let margin = (diag.re - off).min(1.0 - diag.re);
        if (margin < -DOMINANCE_TOL || diag.im.abs() > DOMINANCE_TOL) && worst.is_none_or(|(_, m)| margin < m) {
            worst = Some((i, margin));
        }
        *ri = (diag.re - off).max(0.0);
    }
    match worst {
        Some((row, margin)) => Err(Error::NotDiagonallyDominant { row, margin }),
        None => Ok(r),
    }
}

pub fn gram_encoding(a: &SparseMatrixOracle, assert_diag_dominant: bool) -> Result<GramEncoding> {
    let n = a.dim();
    let residuals = if assert_diag_dominant {
        check_diagonal_dominance(a)?
    } else {
        // still required for the states to be normalizable
        check_diagonal_dominance(a).map_err(|e| match e {
            Error::NotDiagonallyDominant { row, margin } => Error::NumericalCheck(format!(
                "negative residual r_{row} = {margin:.3e}; state not normalizable"
            )),
            other => other,
        })?
    };

    // basis pairs, with (i, N) first so that the input |i⟩ is index i
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs = Vec::new();
    let mut push = |p: (usize, usize), pairs: &mut Vec<(usize, usize)>| {
        index.entry(p).or_insert_with(|| {
            pairs.push(p);
            pairs.len() - 1
        });
    };
    for i in 0..n {
        push((i, n), &mut pairs);
    }
    for j in 0..n {
        push((n, j), &mut pairs);
    }
    let mut support = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = a.row_support(i);
        if !s.contains(&i) {
            s.push(i);
            s.sort_unstable();
        }
        for &l in &s {
            push((i, l), &mut pairs);
        }
        support.push(s);
    }
    let support_dim = pairs.len();
    let mut ancillas = 0u32;
    while (n << ancillas) < support_dim {
        ancillas += 1;
    }
    let dim = n << ancillas;
    check_dim(dim).map_err(|_| Error::TooLarge(dim))?;

    let delta = |i: usize, l: usize| if i == l { 1.0 } else { 0.0 };
    let mut psi = CMat::zeros(dim, n);
    let mut phi = CMat::zeros(dim, n);
    for i in 0..n {
        for &l in &support[i] {
            let z = (C64::new(delta(i, l), 0.0) - a.value(i, l)).sqrt();
            psi[(index[&(i, l)], i)] = z.conj();
        }
        psi[(index[&(i, n)], i)] = C64::new(residuals[i].sqrt(), 0.0);
    }
    for j in 0..n {
        for &k in &support[j] {
            // (k, j) is populated because A is Hermitian
            let z = (C64::new(delta(j, k), 0.0) - a.value(j, k).conj()).sqrt();
            phi[(index[&(k, j)], j)] = z;
        }
        phi[(index[&(n, j)], j)] = C64::new(residuals[j].sqrt(), 0.0);
    }
    let u_l = complete_to_unitary(&psi);
    let u_r = complete_to_unitary(&phi);
    let core = u_l.ad_mul(&u_r);
    let d = a.sparsity() as u64;
    let cost = QueryLedger::single(Oracle::PA, 2 * (4 * d + 1));
    let encoding = BlockEncoding::new(core, ancillas, 1.0, 0.0, n, cost)?;
    Ok(GramEncoding {
        encoding,
        u_l,
        u_r,
        support_dim,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::extract_block;
    use crate::linalg::{c64, max_abs_diff, real, unitarity_residual};

    #[test]
    fn identity_gives_zero_block() {
        let a = SparseMatrixOracle::from_dense(&CMat::identity(4, 4)).unwrap();
        let g = gram_encoding(&a, true).unwrap();
        assert!(max_abs_diff(&extract_block(&g.encoding), &CMat::zeros(4, 4)) < 1e-12);
        assert!(unitarity_residual(&g.u_l) < 1e-12);
    }

    #[test]
    fn complex_off_diagonal() {
        let m = CMat::from_row_slice(2, 2, &[real(0.8), c64(0.3, -0.4), c64(0.3, 0.4), real(0.6)]);
        let a = SparseMatrixOracle::from_dense(&m).unwrap();
        let g = gram_encoding(&a, true).unwrap();
        let expect = CMat::identity(2, 2) - &m;
        assert!(max_abs_diff(&extract_block(&g.encoding), &expect) < 1e-12);
        assert!(g.encoding.unitarity_residual() < 1e-12);
    }

    #[test]
    fn reports_worst_row() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                real(0.5),
                real(0.2),
                real(0.0),
                real(0.2),
                real(0.1),
                real(0.3),
                real(0.0),
                real(0.3),
                real(0.9),
            ],
        );
        let a = SparseMatrixOracle::from_dense(&m).unwrap();
        match gram_encoding(&a, true) {
            Err(Error::NotDiagonallyDominant { row, margin }) => {
                assert_eq!(row, 1);
                assert!((margin + 0.4).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
