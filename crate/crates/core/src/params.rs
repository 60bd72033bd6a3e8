//! Physical parameters of the Λ medium and the input field.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the normalization constraints.
pub const NORM_TOL: f64 = 1e-12;

/// Rates and detunings in units of Γ; `alpha` is the optical density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma12: f64,
    pub gamma_phi: f64,
    pub delta: f64,
    pub delta_s: f64,
    pub delta_c: f64,
    pub alpha: f64,
    #[serde(with = "crate::complex_serde")]
    pub c1: C64,
    #[serde(with = "crate::complex_serde")]
    pub c2: C64,
    #[serde(with = "crate::complex_serde")]
    pub omega_in: C64,
}

impl Default for ModelParams {
    fn default() -> Self {
        let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            gamma: 1.0,
            gamma1: 0.5,
            gamma2: 0.5,
            gamma12: 0.0,
            gamma_phi: 0.0,
            delta: 0.0,
            delta_s: 0.0,
            delta_c: 0.0,
            alpha: 50.0,
            c1: c,
            c2: c,
            omega_in: C64::new(0.1, 0.0),
        }
    }
}

impl ModelParams {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    /// Sets δ and the symmetric split Δs = −Δc = δ/2.
    pub fn set_delta(&mut self, delta: f64) {
        self.delta = delta;
        self.delta_s = 0.5 * delta;
        self.delta_c = -0.5 * delta;
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.set_delta(delta);
        self
    }

    pub fn gamma12(mut self, gamma12: f64) -> Self {
        self.gamma12 = gamma12;
        self
    }

    pub fn omega(mut self, omega: f64) -> Self {
        self.omega_in = C64::new(omega, 0.0);
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Superposition amplitudes, normalized on the way in.
    pub fn amplitudes(mut self, c1: C64, c2: C64) -> Self {
        let n = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        self.c1 = c1 / n;
        self.c2 = c2 / n;
        self
    }

    pub fn p1(&self) -> f64 {
        self.c1.norm_sqr()
    }

    pub fn p2(&self) -> f64 {
        self.c2.norm_sqr()
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("gamma", self.gamma),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma12", self.gamma12),
            ("gamma_phi", self.gamma_phi),
            ("delta", self.delta),
            ("delta_s", self.delta_s),
            ("delta_c", self.delta_c),
            ("alpha", self.alpha),
        ];
        for (name, x) in reals {
            if !x.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        for (name, z) in [("c1", self.c1), ("c2", self.c2), ("omega_in", self.omega_in)] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.gamma <= 0.0 || self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(Error::InvalidParams("decay rates must be nonnegative, gamma > 0".into()));
        }
        if (self.gamma1 + self.gamma2 - self.gamma).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!(
                "gamma1 + gamma2 = {} differs from gamma = {}",
                self.gamma1 + self.gamma2,
                self.gamma
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::InvalidParams(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.gamma12 < 0.0 {
            return Err(Error::InvalidParams(format!("gamma12 must be >= 0, got {}", self.gamma12)));
        }
        if self.gamma_phi < 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma_phi must be >= 0, got {}",
                self.gamma_phi
            )));
        }
        let norm = self.p1() + self.p2();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!("|c1|^2 + |c2|^2 = {norm}, expected 1")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = ModelParams::default();
        p.validate().unwrap();
        assert_eq!(p.gamma1 + p.gamma2, p.gamma);
    }

    #[test]
    fn delta_split() {
        let p = ModelParams::default().delta(0.02);
        assert_eq!(p.delta_s, 0.01);
        assert_eq!(p.delta_c, -0.01);
        assert_eq!(p.delta_s - p.delta_c, p.delta);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ModelParams::default().alpha(0.0).validate().is_err());
        assert!(ModelParams::default().gamma12(-1e-3).validate().is_err());
        let mut p = ModelParams::default();
        p.c1 = C64::new(1.0, 0.0);
        assert!(p.validate().is_err());
        let mut p = ModelParams::default();
        p.gamma1 = 0.6;
        assert!(p.validate().is_err());
        let mut p = ModelParams::default();
        p.delta = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn amplitudes_normalize() {
        let p = ModelParams::default().amplitudes(C64::new(3.0, 0.0), C64::new(0.0, 4.0));
        assert!((p.p1() - 0.36).abs() < 1e-15);
        p.validate().unwrap();
    }
}
