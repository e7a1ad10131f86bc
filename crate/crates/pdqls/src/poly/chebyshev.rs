//! Chebyshev-T series: evaluation, interpolation and quadrature.

use std::f64::consts::PI;

/// Σ c_k T_k(x) by backward (Clenshaw) recurrence.
pub fn clenshaw_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    match coeffs.first() {
        Some(&c0) => x * b1 - b2 + c0,
        None => 0.0,
    }
}

/// T_n(x) for any real x: three-term recurrence on [−1, 1], hyperbolic
/// closed form outside.
pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        match n {
            0 => 1.0,
            1 => x,
            _ => {
                let (mut t0, mut t1) = (1.0, x);
                for _ in 1..n {
                    let t2 = 2.0 * x * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                }
                t1
            }
        }
    } else {
        let v = (n as f64 * x.abs().acosh()).cosh();
        if x < 0.0 && n % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// The n interior Chebyshev nodes cos(π(k + 1/2)/n), k = 0..n.
pub fn interior_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|k| (PI * (k as f64 + 0.5) / n as f64).cos()).collect()
}

/// Chebyshev coefficients c_0..c_{m} from samples at `interior_nodes(n)`
/// (m < n). With m = n − 1 this is exact interpolation.
pub fn coefficients_from_nodes(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    assert!(m < n, "need more nodes than coefficients");
    let nodes = interior_nodes(n);
    let mut c = vec![0.0; m + 1];
    for (&x, &f) in nodes.iter().zip(values) {
        let (mut t0, mut t1) = (1.0, x);
        c[0] += f;
        if m >= 1 {
            c[1] += f * x;
        }
        for cj in c.iter_mut().skip(2) {
            let t2 = 2.0 * x * t1 - t0;
            *cj += f * t2;
            t0 = t1;
            t1 = t2;
        }
    }
    let s = 2.0 / n as f64;
    for cj in c.iter_mut() {
        *cj *= s;
    }
    c[0] *= 0.5;
    c
}

/// Exact interpolant of degree n − 1 through f at n interior nodes.
pub fn interpolate(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
    let vals: Vec<f64> = interior_nodes(n).into_iter().map(f).collect();
    coefficients_from_nodes(&vals, n - 1)
}

/// Gauss–Chebyshev quadrature estimate of the first `degree + 1`
/// coefficients of the Chebyshev expansion of f.
pub fn quadrature(f: impl Fn(f64) -> f64, degree: usize) -> Vec<f64> {
    let n = 4 * (degree + 1);
    let vals: Vec<f64> = interior_nodes(n).into_iter().map(f).collect();
    coefficients_from_nodes(&vals, degree)
}

/// n equally spaced points on [a, b], both ends included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect()
}

/// Golden-section search for a maximum of f on [a, b].
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// max |p| over [−1, 1]: dense grid of `grid` points, then golden-section
/// refinement around every grid local maximum within 10% of the grid best.
pub fn sup_abs(coeffs: &[f64], grid: usize) -> (f64, f64) {
    let xs = linspace(-1.0, 1.0, grid);
    let vals: Vec<f64> = xs.iter().map(|&x| clenshaw_eval(coeffs, x).abs()).collect();
    let mut best = (xs[0], vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v > best.1 {
            best = (xs[i], v);
        }
    }
    let cut = 0.9 * best.1;
    let f = |x: f64| clenshaw_eval(coeffs, x).abs();
    for i in 0..grid {
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < grid { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] >= cut && vals[i] >= left && vals[i] >= right {
            let a = xs[i.saturating_sub(1)];
            let b = xs[(i + 1).min(grid - 1)];
            let (x, v) = golden_max(f, a, b, 80);
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clenshaw_low_orders() {
        assert_eq!(clenshaw_eval(&[0.0, 1.0], 0.3), 0.3);
        assert!((clenshaw_eval(&[0.0, 0.0, 1.0], 0.5) + 0.5).abs() < 1e-15);
        assert_eq!(clenshaw_eval(&[], 0.5), 0.0);
    }

    #[test]
    fn t_outside_interval() {
        // T_3(x) = 4x³ − 3x
        for &x in &[1.5, -1.5, 2.0, -3.0] {
            assert!((chebyshev_t(3, x) - (4.0 * x * x * x - 3.0 * x)).abs() < 1e-10 * x.abs().powi(3));
        }
        assert!((chebyshev_t(4, -2.0) - (8.0 * 16.0 - 8.0 * 4.0 + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn interpolation_reproduces_polynomial() {
        let c = [0.3, -0.2, 0.5, 0.1];
        let got = interpolate(|x| clenshaw_eval(&c, x), 4);
        for (a, b) in got.iter().zip(c.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| 1.0 - (x - 0.3) * (x - 0.3), 0.0, 1.0, 100);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
