//! Linearized atomic-fluctuation system and the reduced field drift and noise.
//!
//! Atomic fluctuations are ordered
//! `y = (s_eg1, s_eg2, s_g2g1, s_g1g1, s_g2g2, s_ee, s_g1g2, s_g2e, s_g1e)`
//! and field fluctuations `a = (a_s, a_s†, a_c, a_c†)`.

use nalgebra::{Matrix4, SMatrix};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mean_field::{mean_field_coherences, FieldState, MeanFieldCoherences};
use crate::params::ModelParams;

pub type M9 = SMatrix<C64, 9, 9>;
pub type M9x4 = SMatrix<C64, 9, 4>;
pub type M4 = Matrix4<C64>;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub const COND_GUARD: f64 = 1e12;

/// Detuning carried by the ground-state coherence rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundCoherenceDetuning {
    /// `−iδ`, matching the Heisenberg equation of `s_g2g1`.
    #[default]
    TwoPhoton,
    /// `−iΔc`, as in the tabulated matrix.
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyOptions {
    /// Atom–field coupling; cancels from drift and noise.
    pub g: f64,
    pub ground_detuning: GroundCoherenceDetuning,
    pub cond_guard: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            g: 1.0,
            ground_detuning: GroundCoherenceDetuning::TwoPhoton,
            cond_guard: COND_GUARD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub t13: C64,
    pub t23: C64,
    pub t12: C64,
}

pub fn effective_rates(p: &ModelParams, opts: &AssemblyOptions) -> EffectiveRates {
    let det12 = match opts.ground_detuning {
        GroundCoherenceDetuning::TwoPhoton => p.delta,
        GroundCoherenceDetuning::Control => p.delta_c,
    };
    EffectiveRates {
        t13: C64::new(0.5 * p.gamma, -p.delta_s),
        t23: C64::new(0.5 * (p.gamma + p.gamma12), -p.delta_c),
        t12: C64::new(0.5 * p.gamma12 + p.gamma_phi, -det12),
    }
}

pub fn build_m1(p: &ModelParams, f: &FieldState, opts: &AssemblyOptions) -> M9 {
    let r = effective_rates(p, opts);
    let (oc, os) = (f.omega_c, f.omega_s);
    let (occ, osc) = (oc.conj(), os.conj());
    let h = 0.5;
    let re = |x: f64| C64::new(x, 0.0);
    #[rustfmt::skip]
    let rows: [[C64; 9]; 9] = [
        [-r.t13.conj(), ZERO, -I * occ * h, -I * osc * h, ZERO, I * osc * h, ZERO, ZERO, ZERO],
        [ZERO, -r.t23.conj(), ZERO, ZERO, -I * occ * h, I * occ * h, -I * osc * h, ZERO, ZERO],
        [-I * oc * h, ZERO, -r.t12.conj(), ZERO, ZERO, ZERO, ZERO, I * osc * h, ZERO],
        [-I * os * h, ZERO, ZERO, ZERO, re(p.gamma12), re(p.gamma1), ZERO, ZERO, I * osc * h],
        [ZERO, -I * oc * h, ZERO, ZERO, re(-p.gamma12), re(p.gamma2), ZERO, I * occ * h, ZERO],
        [ZERO, ZERO, ZERO, re(1.0), re(1.0), re(1.0), ZERO, ZERO, ZERO],
        [ZERO, -I * os * h, ZERO, ZERO, ZERO, ZERO, -r.t12, ZERO, I * occ * h],
        [ZERO, ZERO, I * os * h, ZERO, I * oc * h, -I * oc * h, ZERO, -r.t23, ZERO],
        [ZERO, ZERO, ZERO, I * os * h, ZERO, -I * os * h, I * oc * h, ZERO, -r.t13],
    ];
    M9::from_fn(|i, j| rows[i][j])
}

pub fn build_m2(p: &ModelParams, coh: &MeanFieldCoherences, g: f64) -> M9x4 {
    let (c1, c2) = (p.c1, p.c2);
    let (p1, p2) = (C64::new(p.p1(), 0.0), C64::new(p.p2(), 0.0));
    let s1e = coh.sigma_g1e;
    let s2e = coh.sigma_g2e;
    let se1 = s1e.conj();
    let se2 = s2e.conj();
    let c12 = c1 * c2.conj();
    #[rustfmt::skip]
    let rows: [[C64; 4]; 9] = [
        [ZERO, -I * p1, ZERO, -I * c12],
        [ZERO, -I * c12.conj(), ZERO, -I * p2],
        [ZERO, I * s2e, -I * se1, ZERO],
        [-I * se1, I * s1e, ZERO, ZERO],
        [ZERO, ZERO, -I * se2, I * s2e],
        [ZERO, ZERO, ZERO, ZERO],
        [-I * se2, ZERO, ZERO, I * s1e],
        [I * c12, ZERO, I * p2, ZERO],
        [I * p1, ZERO, I * c12.conj(), ZERO],
    ];
    M9x4::from_fn(|i, j| rows[i][j] * (0.5 * g))
}

/// Diffusion coefficients of the atomic Langevin forces, evaluated on the
/// weak-field ground state (optical coherences and σee enter at zeroth order).
pub fn diffusion_matrix(p: &ModelParams, coh: &MeanFieldCoherences) -> M9 {
    let (g, g1, g2, g12, gp) = (p.gamma, p.gamma1, p.gamma2, p.gamma12, p.gamma_phi);
    let see = coh.sigma_ee;
    let (s11, s22) = (coh.sigma_g1g1, coh.sigma_g2g2);
    let s12 = coh.sigma_g1g2;
    let s21 = s12.conj();
    // Optical coherences vanish in the reference state.
    let (s1e, se1, s2e, se2) = (ZERO, ZERO, ZERO, ZERO);
    let re = |x: f64| C64::new(x, 0.0);
    #[rustfmt::skip]
    let rows: [[C64; 9]; 9] = [
        [ZERO, ZERO, s12 * gp, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO],
        [ZERO, re(g12 * see), ZERO, -se2 * g12, se2 * g12, ZERO, se1 * (g12 + gp), ZERO, ZERO],
        [s21 * gp, ZERO, re(g2 * see + 2.0 * gp * s22), ZERO, ZERO, ZERO, ZERO, ZERO, ZERO],
        [ZERO, -s2e * g12, ZERO, re(g1 * see + g12 * s22), re(-g12 * s22), ZERO, -s21 * g12, -se2 * g1, -se1 * g1],
        [ZERO, s2e * g12, ZERO, re(-g12 * s22), re(g2 * see + g12 * s22), ZERO, s21 * g12, -se2 * g2, -se1 * g2],
        [ZERO; 9],
        [ZERO, s1e * (g12 + gp), ZERO, -s12 * g12, s12 * g12, ZERO, re(g1 * see + g12 * s22 + (g12 + 2.0 * gp) * s11), ZERO, ZERO],
        [ZERO, ZERO, ZERO, -s2e * g1, -s2e * g2, ZERO, ZERO, re(g2 * see + g * s22), s21 * (g - gp)],
        [ZERO, ZERO, ZERO, -s1e * g1, -s1e * g2, ZERO, ZERO, s12 * (g - gp), re(g1 * see + g12 * s22 + g * s11)],
    ];
    M9::from_fn(|i, j| rows[i][j])
}

fn norm1(m: &M9) -> f64 {
    (0..9)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Returns `T = −M1⁻¹`, or `SingularSystem` if the 1-norm condition number
/// exceeds the guard.
pub fn transfer_matrix(m1: &M9, xi: f64, guard: f64) -> Result<M9> {
    let inv = m1
        .lu()
        .try_inverse()
        .ok_or(Error::SingularSystem { xi, cond: f64::INFINITY })?;
    let cond = norm1(m1) * norm1(&inv);
    if !cond.is_finite() || cond > guard {
        return Err(Error::SingularSystem { xi, cond });
    }
    Ok(-inv)
}

/// Coupling coefficients of `s_g1e` (index 1) and `s_g2e` (index 2) to the
/// field fluctuations, in column order `(a_s, a_s†, a_c, a_c†)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub row_g1e: [C64; 4],
    pub row_g2e: [C64; 4],
}

pub fn couplings(t: &M9, m2: &M9x4) -> Couplings {
    let tm = t * m2;
    let row = |r: usize| [tm[(r, 0)], tm[(r, 1)], tm[(r, 2)], tm[(r, 3)]];
    Couplings {
        row_g1e: row(8),
        row_g2e: row(7),
    }
}

pub fn drift_from_couplings(p: &ModelParams, k: &Couplings, g: f64) -> M4 {
    let pre = I * p.gamma * p.alpha / (2.0 * g);
    let [a1, b1, c1, d1] = k.row_g1e.map(|x| x * pre);
    let [a2, b2, c2, d2] = k.row_g2e.map(|x| x * pre);
    #[rustfmt::skip]
    let c = M4::new(
        a1, b1, c1, d1,
        b1.conj(), a1.conj(), d1.conj(), c1.conj(),
        a2, b2, c2, d2,
        b2.conj(), a2.conj(), d2.conj(), c2.conj(),
    );
    c
}

/// Noise-projection matrix: rows `T9•, −T1•, T8•, −T2•`.
pub fn noise_projection(t: &M9) -> SMatrix<C64, 4, 9> {
    SMatrix::<C64, 4, 9>::from_fn(|i, j| match i {
        0 => t[(8, j)],
        1 => -t[(0, j)],
        2 => t[(7, j)],
        _ => -t[(1, j)],
    })
}

pub fn noise_matrix(p: &ModelParams, coh: &MeanFieldCoherences, t: &M9, g: f64) -> M4 {
    let v = noise_projection(t);
    let d = diffusion_matrix(p, coh);
    let field_pre = p.gamma * p.alpha / (2.0 * g);
    let langevin = g * g / (p.gamma * p.alpha);
    let z = v * d * v.adjoint() * C64::new(field_pre * field_pre * langevin, 0.0);
    // Symmetrize away roundoff.
    (z + z.adjoint()) * C64::new(0.5, 0.0)
}

/// Drift matrix at the given fields, with `T` built on the way.
pub fn drift_matrix(
    p: &ModelParams,
    f: &FieldState,
    coh: &MeanFieldCoherences,
    opts: &AssemblyOptions,
) -> Result<M4> {
    let m1 = build_m1(p, f, opts);
    let t = transfer_matrix(&m1, f.xi, opts.cond_guard)?;
    let m2 = build_m2(p, coh, opts.g);
    Ok(drift_from_couplings(p, &couplings(&t, &m2), opts.g))
}

#[derive(Debug, Clone)]
pub struct FluctuationMatrices {
    pub m1: M9,
    pub m2: M9x4,
    pub t: M9,
    pub drift: M4,
    pub noise: M4,
    pub rates: EffectiveRates,
}

impl FluctuationMatrices {
    pub fn p1(&self) -> C64 {
        self.drift[(0, 0)]
    }
    pub fn q1(&self) -> C64 {
        self.drift[(0, 1)]
    }
    pub fn r1(&self) -> C64 {
        self.drift[(0, 2)]
    }
    pub fn s1(&self) -> C64 {
        self.drift[(0, 3)]
    }
    pub fn p2(&self) -> C64 {
        self.drift[(2, 0)]
    }
    pub fn q2(&self) -> C64 {
        self.drift[(2, 1)]
    }
    pub fn r2(&self) -> C64 {
        self.drift[(2, 2)]
    }
    pub fn s2(&self) -> C64 {
        self.drift[(2, 3)]
    }
}

pub fn assemble(p: &ModelParams, f: &FieldState, opts: &AssemblyOptions) -> Result<FluctuationMatrices> {
    let coh = mean_field_coherences(p, f);
    let m1 = build_m1(p, f, opts);
    let t = transfer_matrix(&m1, f.xi, opts.cond_guard)?;
    let m2 = build_m2(p, &coh, opts.g);
    let drift = drift_from_couplings(p, &couplings(&t, &m2), opts.g);
    let noise = noise_matrix(p, &coh, &t, opts.g);
    Ok(FluctuationMatrices {
        m1,
        m2,
        t,
        drift,
        noise,
        rates: effective_rates(p, opts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mean_field::{propagate_mean_field, stable_fields};

    fn sample() -> (ModelParams, FieldState) {
        let p = ModelParams::with_alpha(50.0).delta(0.01).gamma12(0.002);
        let f = propagate_mean_field(&p, 0.4);
        (p, f)
    }

    #[test]
    fn m1_entries() {
        let p = ModelParams::default();
        let f = propagate_mean_field(&p, 0.0);
        let m = build_m1(&p, &f, &AssemblyOptions::default());
        assert_eq!(m[(0, 0)], C64::new(-0.5, 0.0));
        for j in 0..9 {
            let want = if (3..6).contains(&j) { 1.0 } else { 0.0 };
            assert_eq!(m[(5, j)], C64::new(want, 0.0));
        }
    }

    #[test]
    fn m1_zero_field_diagonal() {
        let p = ModelParams::default().delta(0.2).gamma12(0.1);
        let mut f = propagate_mean_field(&p, 0.0);
        f.omega_c = ZERO;
        f.omega_s = ZERO;
        let opts = AssemblyOptions::default();
        let m = build_m1(&p, &f, &opts);
        let r = effective_rates(&p, &opts);
        assert_eq!(m[(0, 0)], -r.t13.conj());
        assert_eq!(m[(1, 1)], -r.t23.conj());
        assert_eq!(m[(2, 2)], -r.t12.conj());
        assert_eq!(r.t12, C64::new(0.05, -0.2));
        for (i, j) in [(0, 2), (0, 3), (0, 5), (1, 4), (2, 0), (3, 8), (7, 4), (8, 6)] {
            assert_eq!(m[(i, j)], ZERO);
        }
    }

    #[test]
    fn ground_detuning_flag() {
        let p = ModelParams::default().delta(0.2);
        let opts = AssemblyOptions {
            ground_detuning: GroundCoherenceDetuning::Control,
            ..Default::default()
        };
        assert_eq!(effective_rates(&p, &opts).t12, C64::new(0.0, 0.1));
    }

    #[test]
    fn m2_layout() {
        let (p, f) = sample();
        let coh = mean_field_coherences(&p, &f);
        let m = build_m2(&p, &coh, 1.0);
        assert!((m[(0, 1)] - (-I * 0.5 * p.p1())).norm() < 1e-16);
        assert!(m.row(5).iter().all(|z| *z == ZERO));
    }

    #[test]
    fn m2_dark_state_rows_vanish() {
        let p = ModelParams::default();
        let coh = mean_field_coherences(&p, &stable_fields(&p, 1.0));
        let m = build_m2(&p, &coh, 1.0);
        for r in [2, 3, 4, 6] {
            assert!(m.row(r).iter().all(|z| z.norm() < 1e-17), "row {r}");
        }
    }

    #[test]
    fn drift_conjugate_rows_exact() {
        let (p, f) = sample();
        let fm = assemble(&p, &f, &AssemblyOptions::default()).unwrap();
        let c = fm.drift;
        for (r, src) in [(1, 0), (3, 2)] {
            assert_eq!(c[(r, 0)], c[(src, 1)].conj());
            assert_eq!(c[(r, 1)], c[(src, 0)].conj());
            assert_eq!(c[(r, 2)], c[(src, 3)].conj());
            assert_eq!(c[(r, 3)], c[(src, 2)].conj());
        }
    }

    #[test]
    fn drift_and_noise_linear_in_alpha() {
        let (p, f) = sample();
        let opts = AssemblyOptions::default();
        let coh = mean_field_coherences(&p, &f);
        let mut p2 = p;
        p2.alpha *= 2.0;
        let c1 = drift_matrix(&p, &f, &coh, &opts).unwrap();
        let c2 = drift_matrix(&p2, &f, &coh, &opts).unwrap();
        assert!((c2 - c1 * C64::new(2.0, 0.0)).norm() <= 1e-14 * c1.norm());
        let t = transfer_matrix(&build_m1(&p, &f, &opts), f.xi, COND_GUARD).unwrap();
        let z1 = noise_matrix(&p, &coh, &t, 1.0);
        let z2 = noise_matrix(&p2, &coh, &t, 1.0);
        assert!((z2 - z1 * C64::new(2.0, 0.0)).norm() <= 1e-14 * z1.norm());
    }

    #[test]
    fn noise_hermitian() {
        let (p, f) = sample();
        let fm = assemble(&p, &f, &AssemblyOptions::default()).unwrap();
        assert_eq!(fm.noise, fm.noise.adjoint());
    }

    #[test]
    fn diffusion_hermitian() {
        let p = ModelParams::default().gamma12(0.3).amplitudes(C64::new(0.6, 0.1), C64::new(0.2, 0.7));
        let mut p = p;
        p.gamma_phi = 0.05;
        let coh = mean_field_coherences(&p, &propagate_mean_field(&p, 0.3));
        let d = diffusion_matrix(&p, &coh);
        assert!((d - d.adjoint()).norm() < 1e-16);
    }

    #[test]
    fn singular_point_is_reported() {
        let p = ModelParams::default().omega(0.0);
        let f = propagate_mean_field(&p, 0.5);
        let err = assemble(&p, &f, &AssemblyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
    }
}
