//! Laguerre–Gaussian input profile and radial maps of exit intensity and entanglement.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{exit_dgcz, PropagationMode};
use crate::error::{Error, Result};
use crate::mean_field::propagate_mean_field;
use crate::params::ModelParams;
use crate::sweep::with_pool;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexProfile {
    pub epsilon: f64,
    pub waist: f64,
    pub charge: f64,
}

impl VortexProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(Error::InvalidParams(format!("waist must be > 0, got {}", self.waist)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !self.charge.is_finite() {
            return Err(Error::InvalidParams("charge must be finite".into()));
        }
        Ok(())
    }

    /// Radius of peak amplitude, `w·sqrt(|l|/2)`.
    pub fn ring_radius(&self) -> f64 {
        self.waist * (0.5 * self.charge.abs()).sqrt()
    }

    /// Local complex input amplitude at `(r, phi)`.
    pub fn field(&self, r: f64, phi: f64) -> C64 {
        C64::from_polar(lg_amplitude(self, r), self.charge * phi)
    }
}

pub fn lg_amplitude(p: &VortexProfile, r: f64) -> f64 {
    let x = r / p.waist;
    let l = p.charge.abs();
    let radial = if l == 0.0 { 1.0 } else { x.powf(l) };
    p.epsilon * radial * (-x * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialRow {
    pub r: f64,
    pub amplitude: f64,
    pub intensity_c: f64,
    pub intensity_s: f64,
    /// NaN when the local pipeline failed.
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMap {
    pub profile: VortexProfile,
    /// Azimuth used for the local phase; both exit fields share `e^{i l phi}`.
    pub phi: f64,
    pub rows: Vec<RadialRow>,
    pub failures: Vec<(f64, String)>,
}

/// Runs the scalar pipeline at every radius with the local input amplitude.
pub fn radial_entanglement_map(
    profile: &VortexProfile,
    params: &ModelParams,
    radii: &[f64],
    phi: f64,
    mode: PropagationMode,
    workers: usize,
) -> Result<RadialMap> {
    profile.validate()?;
    if radii.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidParams("radii must be finite and nonnegative".into()));
    }
    let outcomes: Vec<(RadialRow, Option<String>)> = with_pool(workers, || {
        radii
            .par_iter()
            .map(|&r| {
                let mut p = *params;
                p.omega_in = profile.field(r, phi);
                let f = propagate_mean_field(&p, 1.0);
                let (v, err) = match exit_dgcz(&p, mode) {
                    Ok(e) => (e.v, None),
                    Err(e) => (f64::NAN, Some(e.to_string())),
                };
                let row = RadialRow {
                    r,
                    amplitude: p.omega_in.norm(),
                    intensity_c: f.omega_c.norm_sqr(),
                    intensity_s: f.omega_s.norm_sqr(),
                    v,
                };
                (row, err)
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(radii.len());
    let mut failures = Vec::new();
    for (row, err) in outcomes {
        if let Some(e) = err {
            failures.push((row.r, e));
        }
        rows.push(row);
    }
    Ok(RadialMap {
        profile: *profile,
        phi,
        rows,
        failures,
    })
}
