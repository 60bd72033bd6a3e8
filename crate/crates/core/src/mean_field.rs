//! Classical propagation of the control and signal Rabi amplitudes.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::integrator::{integrate, Tolerances};
use crate::params::ModelParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Betas {
    pub beta1: C64,
    pub beta2: C64,
    pub w: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub xi: f64,
    #[serde(with = "crate::complex_serde")]
    pub omega_c: C64,
    #[serde(with = "crate::complex_serde")]
    pub omega_s: C64,
    #[serde(with = "crate::complex_serde")]
    pub beta1: C64,
    #[serde(with = "crate::complex_serde")]
    pub beta2: C64,
    #[serde(with = "crate::complex_serde")]
    pub w_const: C64,
}

impl FieldState {
    /// Exit intensities normalized to the input intensity.
    pub fn normalized_intensities(&self, omega_in: C64) -> (f64, f64) {
        let i0 = omega_in.norm_sqr();
        (self.omega_c.norm_sqr() / i0, self.omega_s.norm_sqr() / i0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldCoherences {
    #[serde(with = "crate::complex_serde")]
    pub sigma_g1e: C64,
    #[serde(with = "crate::complex_serde")]
    pub sigma_g2e: C64,
    pub sigma_g1g1: f64,
    pub sigma_g2g2: f64,
    pub sigma_ee: f64,
    #[serde(with = "crate::complex_serde")]
    pub sigma_g1g2: C64,
}

pub fn beta_coefficients(p: &ModelParams) -> Betas {
    let beta1 = p.gamma * p.alpha / (2.0 * C64::new(2.0 * p.delta_s, p.gamma));
    let beta2 = p.gamma * p.alpha / (2.0 * C64::new(2.0 * p.delta_c, p.gamma + p.gamma12));
    let w = beta1 * p.p1() + beta2 * p.p2();
    Betas { beta1, beta2, w }
}

fn state(b: &Betas, xi: f64, omega_c: C64, omega_s: C64) -> FieldState {
    FieldState {
        xi,
        omega_c,
        omega_s,
        beta1: b.beta1,
        beta2: b.beta2,
        w_const: b.w,
    }
}

/// Closed-form fields at position `xi`.
pub fn propagate_mean_field(p: &ModelParams, xi: f64) -> FieldState {
    let b = beta_coefficients(p);
    let e = (-I * b.w * xi).exp();
    let pre = p.omega_in / b.w;
    let omega_c = pre * (b.beta2 * p.p2() * e + b.beta1 * p.p1());
    let omega_s = pre * p.c1.conj() * p.c2 * b.beta1 * (e - 1.0);
    state(&b, xi, omega_c, omega_s)
}

/// Fields after the entrance transient has died out.
pub fn stable_fields(p: &ModelParams, xi: f64) -> FieldState {
    let b = beta_coefficients(p);
    let pre = p.omega_in / b.w * b.beta1;
    state(&b, xi, pre * p.p1(), -pre * p.c1.conj() * p.c2)
}

/// Integrates the coupled field equations numerically from the entrance.
pub fn propagate_mean_field_numeric(p: &ModelParams, xi: f64, tol: &Tolerances) -> Result<FieldState> {
    let b = beta_coefficients(p);
    let (c1, c2) = (p.c1, p.c2);
    let (p1, p2) = (p.p1(), p.p2());
    let y0 = [p.omega_in, C64::new(0.0, 0.0)];
    let sol = integrate(
        |_, y, dy| {
            let (oc, os) = (y[0], y[1]);
            dy[1] = -I * b.beta1 * (os * p1 + c1.conj() * c2 * oc);
            dy[0] = -I * b.beta2 * (c1 * c2.conj() * os + oc * p2);
            Ok(())
        },
        0.0,
        &y0,
        xi,
        &[],
        tol,
        |_| {},
    )?;
    Ok(state(&b, xi, sol.y[0], sol.y[1]))
}

/// Optical coherences driven by the local fields; ground-state quantities
/// take their weak-field values.
pub fn mean_field_coherences(p: &ModelParams, f: &FieldState) -> MeanFieldCoherences {
    let (c1, c2) = (p.c1, p.c2);
    let sigma_g1e = -(f.omega_s * p.p1() + c1.conj() * c2 * f.omega_c) / C64::new(2.0 * p.delta_s, p.gamma);
    let sigma_g2e = -(c1 * c2.conj() * f.omega_s + f.omega_c * p.p2())
        / C64::new(2.0 * p.delta_c, p.gamma + p.gamma12);
    MeanFieldCoherences {
        sigma_g1e,
        sigma_g2e,
        sigma_g1g1: p.p1(),
        sigma_g2g2: p.p2(),
        sigma_ee: 0.0,
        sigma_g1g2: c1.conj() * c2,
    }
}
