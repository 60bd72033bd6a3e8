#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortex_entanglement::correlation::{dgcz_theta, CorrelationState};
use vortex_entanglement::ModelParams;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * r.random::<f64>()).exp()
}

/// A valid parameter point away from the exactly singular EIT corner.
pub fn random_params(r: &mut impl Rng) -> ModelParams {
    let theta: f64 = r.random_range(0.15..1.4);
    let phase: f64 = r.random_range(-3.0..3.0);
    ModelParams::with_alpha(r.random_range(10.0..200.0))
        .delta(log_uniform(r, 1e-4, 0.3))
        .gamma12(if r.random_bool(0.5) { 0.0 } else { log_uniform(r, 1e-4, 0.1) })
        .omega(r.random_range(0.05..0.5))
        .amplitudes(C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), phase))
}

/// Gaussian two-mode state: thermal occupations followed by a random
/// Bogoliubov transformation, returned as ⟨a a†⟩ in the ordering
/// (a_s, a_s†, a_c, a_c†).
pub fn random_physical_corr(r: &mut impl Rng) -> Matrix4<C64> {
    let mut cplx = |s: f64| C64::new(r.random_range(-s..s), r.random_range(-s..s));
    let a01 = cplx(0.6);
    let b01 = cplx(0.6);
    let a = [[C64::new(0.0, 0.0), a01], [a01.conj(), C64::new(0.0, 0.0)]];
    let b = [[cplx(0.6), b01], [b01, cplx(0.6)]];
    let mut a = a;
    a[0][0] = C64::new(cplx(0.5).re, 0.0);
    a[1][1] = C64::new(cplx(0.5).re, 0.0);
    // Ordering x = (a_s, a_c, a_s†, a_c†); generator Σ H with H Hermitian.
    let mut k = DMatrix::<C64>::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            k[(i, j)] = a[i][j];
            k[(i, j + 2)] = b[i][j];
            k[(i + 2, j)] = -b[i][j].conj();
            k[(i + 2, j + 2)] = -a[i][j].conj();
        }
    }
    let s = (k * C64::new(0.0, -1.0)).exp();
    let n1 = r.random_range(0.0..1.5);
    let n2 = r.random_range(0.0..1.5);
    let mut th = DMatrix::<C64>::zeros(4, 4);
    for (i, v) in [1.0 + n1, 1.0 + n2, n1, n2].into_iter().enumerate() {
        th[(i, i)] = C64::new(v, 0.0);
    }
    let x = &s * th * s.adjoint();
    let perm = [0, 2, 1, 3];
    Matrix4::from_fn(|i, j| x[(perm[i], perm[j])])
}

/// Dense scan over θ ∈ [0, π) followed by golden-section polishing.
pub fn theta_scan_min(state: &CorrelationState) -> f64 {
    let n = 20_000;
    let h = std::f64::consts::PI / n as f64;
    let f = |t: f64| dgcz_theta(state, t);
    let (mut best, mut bt) = (f64::INFINITY, 0.0);
    for i in 0..n {
        let t = i as f64 * h;
        let v = f(t);
        if v < best {
            best = v;
            bt = t;
        }
    }
    let (mut lo, mut hi) = (bt - h, bt + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.min(f(0.5 * (lo + hi)))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<C64>], b: &[C64]) -> Vec<C64> {
    let n = b.len();
    let mut m: Vec<Vec<C64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm())).unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                let t = m[col][k];
                m[row][k] -= f * t;
            }
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

pub fn max_abs(m: &Matrix4<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
