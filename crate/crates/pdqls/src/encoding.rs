//! Matrix-block-encodings: a unitary whose top-left block, after
//! post-selecting all ancillas on |0⟩, equals the target divided by α.
//!
//! Ancilla registers are the most significant part of the basis index, so
//! the |0^a⟩ block is the leading N×N block. Ancilla qubits that a
//! construction never touches are kept implicit ("idle"): the full unitary
//! is I ⊗ core with the idle qubits on the left.

use crate::error::{Error, Result};
use crate::ledger::QueryLedger;
use crate::linalg::{
    check_dim, singular_values, unitarity_residual, CMat, HermitianOperator, Spectrum, DENSE_CAP, ONE,
};
use crate::state::StateVector;

pub const UNITARY_TOL: f64 = 1e-10;
pub const NULL_POSTSELECTION: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct BlockEncoding {
    core: CMat,
    active_ancillas: u32,
    idle_ancillas: u32,
    alpha: f64,
    eps: f64,
    target_dim: usize,
    cost: QueryLedger,
}

impl BlockEncoding {
    /// `core` must have dimension 2^active_ancillas · target_dim.
    pub fn new(
        core: CMat,
        active_ancillas: u32,
        alpha: f64,
        eps: f64,
        target_dim: usize,
        cost: QueryLedger,
    ) -> Result<Self> {
        let expected = (1usize << active_ancillas) * target_dim;
        if core.nrows() != expected || core.ncols() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: core.nrows(),
            });
        }
        if !(alpha >= 1.0 - 1e-12) || !(eps >= 0.0) {
            return Err(Error::invalid(format!(
                "block encoding needs alpha >= 1 and eps >= 0 (alpha = {alpha}, eps = {eps})"
            )));
        }
        Ok(Self {
            core,
            active_ancillas,
            idle_ancillas: 0,
            alpha,
            eps,
            target_dim,
            cost,
        })
    }

    pub fn with_idle_ancillas(mut self, idle: u32) -> Self {
        self.idle_ancillas = idle;
        self
    }

    pub fn ancillas(&self) -> u32 {
        self.active_ancillas + self.idle_ancillas
    }

    pub fn active_ancillas(&self) -> u32 {
        self.active_ancillas
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Queries charged per application of the encoding.
    pub fn cost(&self) -> &QueryLedger {
        &self.cost
    }

    pub fn core(&self) -> &CMat {
        &self.core
    }

    /// Full 2^a·N unitary including idle ancillas.
    pub fn unitary(&self) -> Result<CMat> {
        let reps = 1usize << self.idle_ancillas;
        let d = self.core.nrows();
        check_dim(d * reps).map_err(|_| Error::TooLarge(d * reps))?;
        let mut u = CMat::zeros(d * reps, d * reps);
        for r in 0..reps {
            u.view_mut((r * d, r * d), (d, d)).copy_from(&self.core);
        }
        Ok(u)
    }

    /// ‖U†U − I‖_F; idle ancillas contribute only identity blocks.
    pub fn unitarity_residual(&self) -> f64 {
        let reps = (1usize << self.idle_ancillas) as f64;
        unitarity_residual(&self.core) * reps.sqrt()
    }

    /// Operator-norm distance between `target` and α·block.
    pub fn block_error(&self, target: &CMat) -> f64 {
        let d = target - extract_block(self);
        singular_values(&d)[0]
    }
}

/// U_M = [[M, −√(I−M²)], [√(I−M²), M]] for Hermitian M with ‖M‖ ≤ 1.
pub fn dilate_unitary(m: &HermitianOperator) -> Result<BlockEncoding> {
    let rad = m.op_norm();
    if rad > 1.0 + 1e-12 {
        return Err(Error::NormExceeded { spectral_radius: rad });
    }
    let core = dilation_core(m.entries().clone(), m.spectrum(), |x| x);
    BlockEncoding::new(core, 1, 1.0, 0.0, m.dim(), QueryLedger::new())
}

/// One-ancilla dilation of f(H) where `block` = f(H) and the square root
/// √(I − f(H)²) is taken in the eigenbasis of H with clamping to [0, 1].
pub fn dilation_core(block: CMat, spectrum: &Spectrum, f: impl Fn(f64) -> f64) -> CMat {
    let n = block.nrows();
    let root = spectrum.apply_fn(|x| {
        let v = f(x);
        (1.0 - v * v).clamp(0.0, 1.0).sqrt()
    });
    let mut u = CMat::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&block);
    u.view_mut((n, n), (n, n)).copy_from(&block);
    u.view_mut((0, n), (n, n)).copy_from(&(-&root));
    u.view_mut((n, 0), (n, n)).copy_from(&root);
    u
}

/// α · (⟨0^a| ⊗ I) U (|0^a⟩ ⊗ I).
pub fn extract_block(e: &BlockEncoding) -> CMat {
    let n = e.target_dim;
    e.core.view((0, 0), (n, n)).into_owned().scale(e.alpha)
}

/// Post-selects the ancillas on |0^a⟩ after applying U to |0^a⟩|b⟩.
/// Returns the renormalized system state and the success probability and
/// charges the encoding's declared cost to `ledger`.
pub fn apply_postselected(e: &BlockEncoding, b: &StateVector, ledger: &mut QueryLedger) -> Result<(StateVector, f64)> {
    let n = e.target_dim;
    if b.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.dim(),
        });
    }
    if !b.is_normalized() {
        return Err(Error::invalid("input state must be normalized"));
    }
    let mut v = crate::linalg::CVec::zeros(n);
    v.gemv(ONE, &e.core.view((0, 0), (n, n)), b.amplitudes(), crate::linalg::ZERO);
    ledger.absorb(&e.cost);
    let p = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if p < NULL_POSTSELECTION {
        return Err(Error::NullPostselection { p_succ: p });
    }
    Ok((StateVector::normalized(v)?, p))
}

impl BlockEncoding {
    pub fn is_unitary(&self) -> bool {
        self.unitarity_residual() <= UNITARY_TOL
    }

    pub fn dense_dim(&self) -> usize {
        self.core.nrows() << self.idle_ancillas
    }

    pub fn fits_dense(&self) -> bool {
        self.dense_dim() <= DENSE_CAP
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, real, CVec};
    use crate::rng::{porter_thomas, random_hermitian_bounded, seeded};

    #[test]
    fn dilation_of_zero() {
        let e = dilate_unitary(&HermitianOperator::from_real_diagonal(&[0.0, 0.0])).unwrap();
        let u = e.unitary().unwrap();
        let mut expect = CMat::zeros(4, 4);
        expect[(0, 2)] = real(-1.0);
        expect[(1, 3)] = real(-1.0);
        expect[(2, 0)] = real(1.0);
        expect[(3, 1)] = real(1.0);
        assert!(max_abs_diff(&u, &expect) < 1e-15);
    }

    #[test]
    fn dilation_of_identity() {
        let e = dilate_unitary(&HermitianOperator::identity(3)).unwrap();
        assert!(max_abs_diff(&e.unitary().unwrap(), &CMat::identity(6, 6)) < 1e-15);
    }

    #[test]
    fn dilation_rejects_large_norm() {
        let m = HermitianOperator::from_real_diagonal(&[0.5, -1.5]);
        match dilate_unitary(&m) {
            Err(Error::NormExceeded { spectral_radius }) => assert_eq!(spectral_radius, 1.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn random_dilation_block_and_unitarity() {
        let mut rng = seeded(11);
        let m = random_hermitian_bounded(&mut rng, 10, 1.0);
        let h = HermitianOperator::new(m.clone()).unwrap();
        let e = dilate_unitary(&h).unwrap();
        assert!(max_abs_diff(&extract_block(&e), &m) < 1e-10);
        assert!(e.unitarity_residual() < 1e-10);
    }

    #[test]
    fn postselect_identity() {
        let e = dilate_unitary(&HermitianOperator::identity(4)).unwrap();
        let b = StateVector::new(porter_thomas(&mut seeded(1), 4));
        let mut ledger = QueryLedger::new();
        let (x, p) = apply_postselected(&e, &b, &mut ledger).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
        assert!(crate::state::trace_distance(&x, &b) < 1e-14);
    }

    #[test]
    fn null_postselection() {
        let e = dilate_unitary(&HermitianOperator::from_real_diagonal(&[0.0, 1.0])).unwrap();
        let b = StateVector::new(CVec::from_vec(vec![real(1.0), real(0.0)]));
        assert!(matches!(
            apply_postselected(&e, &b, &mut QueryLedger::new()),
            Err(Error::NullPostselection { .. })
        ));
    }

    #[test]
    fn idle_ancillas_extend_unitary() {
        let e = dilate_unitary(&HermitianOperator::from_real_diagonal(&[0.3]))
            .unwrap()
            .with_idle_ancillas(2);
        assert_eq!(e.ancillas(), 3);
        let u = e.unitary().unwrap();
        assert_eq!(u.nrows(), 8);
        assert!(unitarity_residual(&u) < 1e-14);
        assert!((extract_block(&e)[(0, 0)].re - 0.3).abs() < 1e-15);
    }
}
