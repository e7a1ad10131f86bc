//! Seeded random sources shared by the instance generators and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, vec_norm, CMat, CVec, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for a sub-task of a seeded computation.
pub fn substream(seed: u64, stream: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Standard complex normal: real and imaginary parts N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(s * re, s * im)
}

/// Normalized complex Gaussian vector (Porter–Thomas amplitudes).
pub fn porter_thomas<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let v = CVec::from_fn(n, |_, _| complex_gaussian(rng));
    let nv = vec_norm(&v);
    v.unscale(nv)
}

/// Haar-distributed unitary from the QR factorization of a complex
/// Gaussian matrix, with the phases of diag(R) absorbed into Q.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// GUE-like random Hermitian matrix (unnormalized).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(rng));
    (&g + g.adjoint()).scale(0.5)
}

/// Random Hermitian matrix with its spectrum rescaled into [-r, r].
pub fn random_hermitian_bounded<R: Rng + ?Sized>(rng: &mut R, n: usize, r: f64) -> CMat {
    let h = random_hermitian(rng, n);
    let s = crate::linalg::eigendecompose(&h).expect("Hermitian by construction");
    let rad = s.spectral_radius().max(1e-300);
    s.apply_fn(|x| x * r / rad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_residual;

    #[test]
    fn haar_is_unitary() {
        let mut rng = seeded(1);
        assert!(unitarity_residual(&haar_unitary(&mut rng, 16)) < 1e-12);
    }

    #[test]
    fn porter_thomas_normalized() {
        let mut rng = seeded(2);
        assert!((vec_norm(&porter_thomas(&mut rng, 33)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = porter_thomas(&mut seeded(5), 4);
        let b = porter_thomas(&mut seeded(5), 4);
        assert_eq!(a, b);
    }
}
