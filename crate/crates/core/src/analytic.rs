//! Closed-form approximations for the two-photon-detuning scheme.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Radicand values above this (negative) floor are clamped to zero.
pub const RADICAND_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticApprox {
    pub lambda: f64,
    pub zeta: f64,
    pub eta: f64,
    pub nu: f64,
    /// Second and third terms of ν (the first is the constant 4).
    pub term2: f64,
    pub term3: f64,
    pub radicand_clamped: bool,
    #[serde(with = "crate::complex_serde")]
    pub p1: C64,
    #[serde(with = "crate::complex_serde")]
    pub s1: C64,
    #[serde(with = "crate::complex_serde")]
    pub r2: C64,
    #[serde(with = "crate::complex_serde")]
    pub q2: C64,
}

fn check_domain(p: &ModelParams) -> Result<f64> {
    let om = p.omega_in.norm();
    if om == 0.0 {
        return Err(Error::Domain("input Rabi frequency is zero".into()));
    }
    if p.gamma12 != 0.0 {
        return Err(Error::Domain(format!(
            "approximation assumes gamma12 = 0, got {}",
            p.gamma12
        )));
    }
    Ok(om)
}

/// Approximate `(P1, S1, R2, Q2)`.
pub fn approx_coefficients(p: &ModelParams) -> Result<(C64, C64, C64, C64)> {
    let om = check_domain(p)?;
    let (a, d) = (p.alpha, p.delta);
    let om4 = om.powi(4);
    let z = C64::new(d, -1.0);
    let z3 = z * z * z;
    let z4 = z3 * z;
    let p1 = -2.0 * I * a * d * d / (z3 * om4);
    let s1 = -p1;
    let r2 = 2.0 * I * a * d * d * C64::new(d, 1.0) / (z4 * om4);
    let q2 = 2.0 * a * d * d * C64::new(1.0, -d) / (z4 * om4);
    Ok((p1, s1, r2, q2))
}

/// Approximate DGCZ value at the medium exit.
pub fn analytic_v(p: &ModelParams) -> Result<AnalyticApprox> {
    let om = check_domain(p)?;
    let (a, d) = (p.alpha, p.delta);
    let d2 = d * d;
    let eta = 1.0 - 6.0 * d2 + d2 * d2;
    if eta.abs() < 1e-12 {
        return Err(Error::Domain(format!("eta vanishes at delta = {d}")));
    }
    let zeta = d * (d2 - 1.0);
    let lambda = 4.0 * a * d2 * eta / ((1.0 + d2).powi(4) * om.powi(4));
    let (cdl, sdl, chl) = ((d * lambda).cos(), (d * lambda).sin(), lambda.cosh());
    let (z2, e2) = (16.0 * zeta * zeta, eta * eta);
    let term2 = -4.0 * (-lambda).exp() * (1.0 + d2).powi(4) * (cdl - chl) / e2;
    let mut rad = (2.0 * lambda).exp()
        * (z2 + e2)
        * (chl - cdl)
        * ((e2 - z2) * cdl + (z2 + e2) * chl + 8.0 * zeta * eta * sdl);
    let mut clamped = false;
    if rad < 0.0 {
        if rad < RADICAND_FLOOR * (2.0 * lambda).exp().max(1.0) {
            return Err(Error::Domain(format!("negative radicand {rad:e} at delta = {d}")));
        }
        rad = 0.0;
        clamped = true;
    }
    let term3 = -4.0 * (-2.0 * lambda).exp() * rad.sqrt() / e2;
    let (p1, s1, r2, q2) = approx_coefficients(p)?;
    Ok(AnalyticApprox {
        lambda,
        zeta,
        eta,
        nu: 4.0 + term2 + term3,
        term2,
        term3,
        radicand_clamped: clamped,
        p1,
        s1,
        r2,
        q2,
    })
}

/// Magnitude estimates of the two-mode coupling for the detuning and the
/// relaxation schemes.
pub fn coefficient_scaling_estimates(p: &ModelParams, xi: f64) -> Result<(f64, f64)> {
    let om = p.omega_in.norm();
    if om == 0.0 {
        return Err(Error::Domain("input Rabi frequency is zero".into()));
    }
    let (g, a, d, g12) = (p.gamma, p.alpha, p.delta, p.gamma12);
    let om2 = om * om;
    let two_photon = a * g * d / (2.0 * om2) * (g * g * a * xi / (g * g + d * d)).exp();
    let relaxation = a * g12 / (4.0 * om2) * (a * (2.0 * g + g12) * xi / (g + g12)).exp();
    Ok((two_photon, relaxation))
}
