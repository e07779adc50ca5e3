//! Independent reference implementations used by the integration tests and
//! the acceptance harness. Nothing here calls into the library's numerics.
#![allow(dead_code)]

use beamsteer::ComplexMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// `e^x E1(x) = integral_0^inf exp(-x (e^s - 1)) ds`, by adaptive Simpson.
/// The integrand is smooth and monotone; the range is cut where it drops
/// below `e^-60`.
pub fn scaled_e1_quadrature(x: f64) -> f64 {
    let f = |s: f64| (-x * s.exp_m1()).exp();
    let upper = (1.0 + 60.0 / x).ln();
    // split into panels so the recursion starts from a resolved shape
    let panels = 64;
    let h = upper / panels as f64;
    (0..panels)
        .map(|i| {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, a, b, fa, fm, fb, whole, 1e-15, 40)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol * (left + right).abs().max(1e-300) {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol, depth - 1)
}

/// Eigenvalues of a real symmetric matrix (row-major `n x n`) by cyclic Jacobi.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i].powi(2)).sum();
        if off <= 1e-32 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a Hermitian matrix through its real `2n x 2n` embedding
/// `[[Re, -Im], [Im, Re]]`, which repeats every eigenvalue twice.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.nrows();
    let big = 2 * n;
    let mut a = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            a[i * big + j] = z.re;
            a[(i + n) * big + j + n] = z.re;
            a[i * big + j + n] = -z.im;
            a[(i + n) * big + j] = z.im;
        }
    }
    let ev = jacobi_eigenvalues(a, big);
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// `log2 det(I + c G^-1 Hb Hb^H)` as `log2 det(G + c Hb Hb^H) - log2 det(G)`,
/// both determinants taken from Jacobi eigenvalues.
pub fn whitened_rate_oracle(w_gram: &ComplexMatrix, h_bar: &ComplexMatrix, c: f64) -> f64 {
    let s = h_bar * h_bar.adjoint();
    let num = w_gram + s.scale(c);
    let log_num: f64 = hermitian_eigenvalues(&num).iter().map(|v| v.log2()).sum();
    let log_den: f64 = hermitian_eigenvalues(w_gram).iter().map(|v| v.log2()).sum();
    log_num - log_den
}

pub fn random_complex<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// `a(psi1)^H a(psi2)` for an `n`-element half-normalized ULA, from the
/// closed-form geometric sum.
pub fn steering_overlap(n: usize, psi1: f64, psi2: f64) -> Complex64 {
    let x = psi2 - psi1;
    let nf = n as f64;
    if (x / 2.0).sin().abs() < 1e-14 {
        return Complex64::new(1.0, 0.0);
    }
    let amp = (nf * x / 2.0).sin() / (nf * (x / 2.0).sin());
    Complex64::from_polar(amp, (nf - 1.0) * x / 2.0)
}
