mod common;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::Rng;

use common::*;
use vortex_entanglement::analytic::{analytic_v, approx_coefficients};
use vortex_entanglement::fluctuation::*;
use vortex_entanglement::integrator::Tolerances;
use vortex_entanglement::mean_field::*;
use vortex_entanglement::ModelParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn ket_bra(a: usize, b: usize) -> Matrix3<C64> {
    let mut m = Matrix3::zeros();
    m[(a, b)] = C64::new(1.0, 0.0);
    m
}

/// ⟨[L†, A_μ][A_ν†, L]⟩ summed over the dissipation channels, in the weak-field
/// ground state c1|g1⟩ + c2|g2⟩.
fn einstein_diffusion(p: &ModelParams) -> [[C64; 9]; 9] {
    let (g1, g2, e) = (0, 1, 2);
    let psi = nalgebra::Vector3::new(p.c1, p.c2, C64::new(0.0, 0.0));
    let rho = psi * psi.adjoint();
    let sq = |x: f64| C64::new(x.sqrt(), 0.0);
    let channels = [
        ket_bra(g1, e) * sq(p.gamma1),
        ket_bra(g2, e) * sq(p.gamma2),
        ket_bra(g1, g2) * sq(p.gamma12),
        ket_bra(g2, g2) * sq(2.0 * p.gamma_phi),
    ];
    let ops = [
        ket_bra(e, g1),
        ket_bra(e, g2),
        ket_bra(g2, g1),
        ket_bra(g1, g1),
        ket_bra(g2, g2),
        ket_bra(e, e),
        ket_bra(g1, g2),
        ket_bra(g2, e),
        ket_bra(g1, e),
    ];
    let mut d = [[C64::new(0.0, 0.0); 9]; 9];
    for mu in 0..9 {
        for nu in 0..9 {
            if mu == 5 || nu == 5 {
                continue;
            }
            for l in &channels {
                let ld = l.adjoint();
                let bd = ops[nu].adjoint();
                let x = (ld * ops[mu] - ops[mu] * ld) * (bd * l - l * bd);
                d[mu][nu] += (rho * x).trace();
            }
        }
    }
    d
}

#[test]
fn diffusion_matches_einstein_relation() {
    let mut r = rng(11);
    for _ in 0..50 {
        let p = random_params(&mut r);
        let coh = mean_field_coherences(&p, &propagate_mean_field(&p, 0.5));
        let d = diffusion_matrix(&p, &coh);
        let e = einstein_diffusion(&p);
        for i in 0..9 {
            for j in 0..9 {
                assert!((d[(i, j)] - e[i][j]).norm() < 1e-14, "({i},{j}): {} vs {}", d[(i, j)], e[i][j]);
            }
        }
    }
}

#[test]
fn diffusion_is_positive_semidefinite() {
    let mut r = rng(12);
    for _ in 0..100 {
        let p = random_params(&mut r);
        let coh = mean_field_coherences(&p, &propagate_mean_field(&p, 0.5));
        let d = diffusion_matrix(&p, &coh);
        let min = SymmetricEigen::new(d).eigenvalues.min();
        assert!(min > -1e-14, "{min}");
    }
}

fn drift_by_column_solve(p: &ModelParams, f: &FieldState, g: f64) -> [[C64; 4]; 4] {
    let opts = AssemblyOptions { g, ..Default::default() };
    let coh = mean_field_coherences(p, f);
    let m1 = build_m1(p, f, &opts);
    let m2 = build_m2(p, &coh, g);
    let a: Vec<Vec<C64>> = (0..9).map(|i| (0..9).map(|j| m1[(i, j)]).collect()).collect();
    let mut rows = [[C64::new(0.0, 0.0); 4]; 2];
    for col in 0..4 {
        let rhs: Vec<C64> = (0..9).map(|i| -m2[(i, col)]).collect();
        let y = gauss_solve(&a, &rhs);
        rows[0][col] = y[8];
        rows[1][col] = y[7];
    }
    let pre = I * p.gamma * p.alpha / (2.0 * g);
    let [r1, r2] = rows.map(|r| r.map(|x| x * pre));
    [
        r1,
        [r1[1].conj(), r1[0].conj(), r1[3].conj(), r1[2].conj()],
        r2,
        [r2[1].conj(), r2[0].conj(), r2[3].conj(), r2[2].conj()],
    ]
}

fn assert_drift_close(c: &M4, o: &[[C64; 4]; 4], tol: f64) {
    let scale = o.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
    for i in 0..4 {
        for j in 0..4 {
            assert!((c[(i, j)] - o[i][j]).norm() <= tol * scale, "({i},{j}) {} vs {}", c[(i, j)], o[i][j]);
        }
    }
}

#[test]
fn dephasing_terms_of_tabulated_diffusion_are_indefinite() {
    let mut p = ModelParams::with_alpha(50.0).delta(0.01);
    p.gamma_phi = 0.01;
    let coh = mean_field_coherences(&p, &propagate_mean_field(&p, 0.5));
    let min = SymmetricEigen::new(diffusion_matrix(&p, &coh)).eigenvalues.min();
    assert!(min < -1e-3 * p.gamma_phi);
}

#[test]
fn drift_matches_column_solve_at_sample_point() {
    let p = ModelParams::with_alpha(50.0).delta(0.001).omega(0.1);
    let f = stable_fields(&p, 1.0);
    let c = drift_matrix(&p, &f, &mean_field_coherences(&p, &f), &AssemblyOptions::default()).unwrap();
    assert_drift_close(&c, &drift_by_column_solve(&p, &f, 1.0), 1e-10);
}

#[test]
fn drift_matches_column_solve_at_random_points() {
    let mut r = rng(13);
    for _ in 0..50 {
        let p = random_params(&mut r);
        let f = propagate_mean_field(&p, r_xi(&mut r));
        let c = drift_matrix(&p, &f, &mean_field_coherences(&p, &f), &AssemblyOptions::default()).unwrap();
        assert_drift_close(&c, &drift_by_column_solve(&p, &f, 1.0), 1e-9);
    }
}

fn r_xi(r: &mut impl rand::Rng) -> f64 {
    r.random_range(0.0..1.0)
}

#[test]
fn zero_field_couplings_are_diagonal_solves() {
    let p = ModelParams::with_alpha(80.0)
        .delta(0.1)
        .gamma12(0.02)
        .amplitudes(C64::new(0.8, 0.0), C64::new(0.0, 0.6));
    let mut f = propagate_mean_field(&p, 0.0);
    f.omega_c = C64::new(0.0, 0.0);
    f.omega_s = C64::new(0.0, 0.0);
    let opts = AssemblyOptions::default();
    let coh = mean_field_coherences(&p, &f);
    let t = transfer_matrix(&build_m1(&p, &f, &opts), 0.0, COND_GUARD).unwrap();
    let k = couplings(&t, &build_m2(&p, &coh, 1.0));
    let r = effective_rates(&p, &opts);
    let c12 = p.c1.conj() * p.c2;
    let z = C64::new(0.0, 0.0);
    let want1 = [I * 0.5 * p.p1(), z, I * 0.5 * c12, z].map(|x| x / r.t13);
    let want2 = [I * 0.5 * c12.conj(), z, I * 0.5 * p.p2(), z].map(|x| x / r.t23);
    for j in 0..4 {
        assert!((k.row_g1e[j] - want1[j]).norm() < 1e-15);
        assert!((k.row_g2e[j] - want2[j]).norm() < 1e-15);
    }
    let o = drift_by_column_solve(&p, &f, 1.0);
    let c = drift_from_couplings(&p, &k, 1.0);
    assert_drift_close(&c, &o, 1e-12);
}

#[test]
fn g_cancels_from_drift_and_noise() {
    let mut r = rng(14);
    for _ in 0..30 {
        let p = random_params(&mut r);
        let f = propagate_mean_field(&p, r_xi(&mut r));
        let base = assemble(&p, &f, &AssemblyOptions::default()).unwrap();
        for g in [0.1, 3.7, 1e3] {
            let o = assemble(&p, &f, &AssemblyOptions { g, ..Default::default() }).unwrap();
            assert!((o.drift - base.drift).norm() <= 1e-12 * base.drift.norm());
            assert!((o.noise - base.noise).norm() <= 1e-12 * base.noise.norm().max(1e-300));
        }
    }
}

#[test]
fn mean_field_numeric_agrees_with_closed_form() {
    let mut r = rng(15);
    let tol = Tolerances { rtol: 1e-12, atol: 1e-18, ..Default::default() };
    for _ in 0..100 {
        let mut p = ModelParams::with_alpha(r.random_range(10.0..200.0))
            .delta(r.random_range(0.0..1.0))
            .gamma12(r.random_range(0.0..1.0));
        let th: f64 = r.random_range(0.0..1.57);
        p = p.amplitudes(C64::new(th.cos(), 0.0), C64::from_polar(th.sin(), r.random_range(-3.0..3.0)));
        let xi = r.random_range(0.0..1.0);
        let a = propagate_mean_field(&p, xi);
        let b = propagate_mean_field_numeric(&p, xi, &tol).unwrap();
        for (x, y) in [(a.omega_c, b.omega_c), (a.omega_s, b.omega_s)] {
            assert!((x - y).norm() <= 1e-8 * p.omega_in.norm(), "{x} vs {y}");
        }
    }
}

#[test]
fn eit_limit_intensities() {
    let p = ModelParams::with_alpha(50.0).amplitudes(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
    let (ic, is) = propagate_mean_field(&p, 1.0).normalized_intensities(p.omega_in);
    assert!((ic - 0.6f64.powi(4)).abs() < 1e-3);
    assert!((is - (0.6f64 * 0.8).powi(2)).abs() < 1e-3);
    assert!((ic + is - 0.36).abs() < 1e-3);
}

#[test]
fn analytic_coefficients_by_hand() {
    // δ = 0.1, α = 50, Ω = 0.1: (−i+δ)³ and (−i+δ)⁴ expanded by hand.
    let d = 0.1f64;
    let z3 = C64::new(d * d * d - 3.0 * d, 1.0 - 3.0 * d * d);
    let z4 = C64::new(d.powi(4) - 6.0 * d * d + 1.0, 4.0 * d - 4.0 * d.powi(3));
    let k = 50.0 * d * d / 1e-4;
    let p1 = C64::new(0.0, -2.0 * k) / z3;
    let r2 = C64::new(0.0, 2.0 * k) * C64::new(d, 1.0) / z4;
    let q2 = C64::new(2.0 * k, 0.0) * C64::new(1.0, -d) / z4;
    let (a, s, b, c) = approx_coefficients(&ModelParams::with_alpha(50.0).delta(d).omega(0.1)).unwrap();
    for (x, y) in [(a, p1), (s, -p1), (b, r2), (c, q2)] {
        assert!((x - y).norm() <= 1e-12 * y.norm(), "{x} vs {y}");
    }
}

#[test]
fn analytic_terms_monotone_on_small_delta_branch() {
    let base = ModelParams::with_alpha(50.0).omega(0.1);
    let ds: Vec<f64> = (1..=60).map(|i| 1e-5 * i as f64).collect();
    let v: Vec<_> = ds.iter().map(|&d| analytic_v(&base.delta(d)).unwrap()).collect();
    for w in v.windows(2) {
        assert!(w[1].term2 >= w[0].term2, "second term must increase");
        assert!(w[1].term3 <= w[0].term3, "third term must decrease");
    }
}

