//! Second moments of the field fluctuations along the medium and the DGCZ measure.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuation::{assemble, AssemblyOptions, M4};
use crate::integrator::{integrate, Solution, Tolerances};
use crate::mean_field::{propagate_mean_field, stable_fields};
use crate::params::ModelParams;

/// Floor below which a DGCZ value is treated as an upstream error.
pub const NONPHYSICAL_FLOOR: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropagationMode {
    /// Drift and noise follow the position-dependent mean fields.
    #[default]
    Full,
    /// Drift and noise frozen at the post-transient fields.
    Stable,
}

impl std::str::FromStr for PropagationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "stable" => Ok(Self::Stable),
            _ => Err(Error::Config(format!("unknown mode `{s}` (expected full|stable)"))),
        }
    }
}

impl std::fmt::Display for PropagationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Stable => "stable",
        })
    }
}

/// ⟨a a†⟩ with `a = (a_s, a_s†, a_c, a_c†)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState {
    pub xi: f64,
    pub corr: M4,
}

impl CorrelationState {
    /// `(corr[0,0] − corr[1,1], corr[2,2] − corr[3,3])`; both equal 1 when the
    /// bosonic commutators are preserved.
    pub fn commutators(&self) -> (f64, f64) {
        let k = &self.corr;
        ((k[(0, 0)] - k[(1, 1)]).re, (k[(2, 2)] - k[(3, 3)]).re)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let k = &self.corr;
        let mut e: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                e = e.max((k[(i, j)] - k[(j, i)].conj()).norm());
            }
        }
        e
    }
}

pub fn vacuum_initial_correlations() -> CorrelationState {
    let mut corr = M4::zeros();
    corr[(0, 0)] = C64::new(1.0, 0.0);
    corr[(2, 2)] = C64::new(1.0, 0.0);
    CorrelationState { xi: 0.0, corr }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementResult {
    pub v: f64,
    pub n_s: f64,
    pub n_c: f64,
    #[serde(with = "crate::complex_serde")]
    pub cross: C64,
    pub theta_opt: f64,
}

fn dgcz_raw(k: &M4) -> EntanglementResult {
    let n_s = k[(1, 1)].re;
    let n_c = k[(3, 3)].re;
    let cross = k[(0, 3)];
    let v = 4.0 * (1.0 + n_s + n_c - 2.0 * cross.norm());
    let theta_opt = (0.5 * cross.arg() + 0.5 * PI).rem_euclid(PI);
    EntanglementResult {
        v,
        n_s,
        n_c,
        cross,
        theta_opt,
    }
}

/// DGCZ value without the physicality check.
pub fn dgcz_unchecked(state: &CorrelationState) -> EntanglementResult {
    dgcz_raw(&state.corr)
}

pub fn dgcz_value(state: &CorrelationState) -> Result<EntanglementResult> {
    let r = dgcz_raw(&state.corr);
    if !r.v.is_finite() || r.v < NONPHYSICAL_FLOOR {
        return Err(Error::NonPhysical(r.v));
    }
    Ok(r)
}

/// Sum of the joint quadrature variances at quadrature angle `theta`.
pub fn dgcz_theta(state: &CorrelationState, theta: f64) -> f64 {
    let k = &state.corr;
    let rot = C64::from_polar(1.0, -2.0 * theta);
    4.0 * (1.0 + k[(1, 1)].re + k[(3, 3)].re + 2.0 * (k[(0, 3)] * rot).re)
}

/// Supplies drift `C(ξ)` and noise `Z(ξ)`.
pub trait DriftSource {
    fn drift_noise(&self, xi: f64) -> Result<(M4, M4)>;
}

#[derive(Debug, Clone)]
pub struct ConstantDrift {
    pub drift: M4,
    pub noise: M4,
}

impl DriftSource for ConstantDrift {
    fn drift_noise(&self, _xi: f64) -> Result<(M4, M4)> {
        Ok((self.drift, self.noise))
    }
}

/// The Λ medium in either propagation mode.
#[derive(Debug, Clone)]
pub struct LambdaMedium {
    pub params: ModelParams,
    pub mode: PropagationMode,
    pub opts: AssemblyOptions,
    frozen: Option<(M4, M4)>,
}

impl LambdaMedium {
    pub fn new(params: ModelParams, mode: PropagationMode, opts: AssemblyOptions) -> Result<Self> {
        params.validate()?;
        let frozen = match mode {
            PropagationMode::Full => None,
            PropagationMode::Stable => {
                let fm = assemble(&params, &stable_fields(&params, 1.0), &opts)?;
                Some((fm.drift, fm.noise))
            }
        };
        Ok(Self {
            params,
            mode,
            opts,
            frozen,
        })
    }
}

impl DriftSource for LambdaMedium {
    fn drift_noise(&self, xi: f64) -> Result<(M4, M4)> {
        if let Some(cz) = self.frozen {
            return Ok(cz);
        }
        let fm = assemble(&self.params, &propagate_mean_field(&self.params, xi), &self.opts)?;
        Ok((fm.drift, fm.noise))
    }
}

fn to_vec(k: &M4) -> Vec<C64> {
    k.iter().copied().collect()
}

fn to_mat(y: &[C64]) -> M4 {
    M4::from_column_slice(y)
}

fn hermitize(y: &mut [C64]) {
    let k = to_mat(y);
    let h = (k + k.adjoint()) * C64::new(0.5, 0.0);
    y.copy_from_slice(h.as_slice());
}

fn run<S: DriftSource + ?Sized>(
    source: &S,
    init: &CorrelationState,
    xi_end: f64,
    outputs: &[f64],
    tol: &Tolerances,
    symmetrize: bool,
) -> Result<Solution> {
    let fixup = |y: &mut [C64]| {
        if symmetrize {
            hermitize(y)
        }
    };
    integrate(
        |xi, y, dy| {
            let (c, z) = source.drift_noise(xi)?;
            let k = to_mat(y);
            let d = c * k + k * c.adjoint() + z;
            dy.copy_from_slice(d.as_slice());
            Ok(())
        },
        init.xi,
        &to_vec(&init.corr),
        xi_end,
        outputs,
        tol,
        fixup,
    )
}

/// Integrates `dK/dξ = C K + K C† + Z` from `init` to `xi_end`.
pub fn propagate_with<S: DriftSource + ?Sized>(
    source: &S,
    init: &CorrelationState,
    xi_end: f64,
    tol: &Tolerances,
) -> Result<CorrelationState> {
    let sol = run(source, init, xi_end, &[], tol, true)?;
    Ok(CorrelationState {
        xi: sol.x,
        corr: to_mat(&sol.y),
    })
}

/// As [`propagate_with`] but without re-hermitizing, so that the drift of
/// the Hermitian part can be measured.
pub fn propagate_unsymmetrized<S: DriftSource + ?Sized>(
    source: &S,
    init: &CorrelationState,
    xi_end: f64,
    tol: &Tolerances,
) -> Result<CorrelationState> {
    let sol = run(source, init, xi_end, &[], tol, false)?;
    Ok(CorrelationState {
        xi: sol.x,
        corr: to_mat(&sol.y),
    })
}

/// States at each of `xs` (ascending order not required); the step sequence
/// is the same as for a plain propagation to `max(xs)`.
pub fn trajectory_with<S: DriftSource + ?Sized>(
    source: &S,
    init: &CorrelationState,
    xs: &[f64],
    tol: &Tolerances,
) -> Result<Vec<CorrelationState>> {
    let end = xs.iter().copied().fold(init.xi, f64::max);
    let sol = run(source, init, end, xs, tol, true)?;
    Ok(sol
        .dense
        .into_iter()
        .map(|(xi, y)| CorrelationState { xi, corr: to_mat(&y) })
        .collect())
}

/// Rotates ⟨a a†⟩ by a common phase `phi` of both fields.
pub fn rotate_phase(k: &M4, phi: f64) -> M4 {
    let u = [phi, -phi, phi, -phi].map(|t| C64::from_polar(1.0, t));
    M4::from_fn(|i, j| u[i] * k[(i, j)] * u[j].conj())
}

/// The global input phase is a symmetry of the model; it is removed before
/// integration and restored on the result.
fn split_phase(params: &ModelParams) -> (ModelParams, f64) {
    let mut p = *params;
    let phi = params.omega_in.arg();
    p.omega_in = C64::new(params.omega_in.norm(), 0.0);
    (p, phi)
}

/// States at `xs` for vacuum input, default assembly and tolerances.
pub fn propagate_trajectory(
    params: &ModelParams,
    xs: &[f64],
    mode: PropagationMode,
) -> Result<Vec<CorrelationState>> {
    if xs.iter().any(|x| !(*x >= 0.0 && *x <= 1.0)) {
        return Err(Error::InvalidParams("output positions must lie in [0, 1]".into()));
    }
    let (p, phi) = split_phase(params);
    let medium = LambdaMedium::new(p, mode, AssemblyOptions::default())?;
    let mut states = trajectory_with(&medium, &vacuum_initial_correlations(), xs, &Tolerances::default())?;
    if phi != 0.0 {
        for s in &mut states {
            s.corr = rotate_phase(&s.corr, phi);
        }
    }
    Ok(states)
}

/// Vacuum input, default assembly and tolerances.
pub fn propagate_correlations(
    params: &ModelParams,
    xi_end: f64,
    mode: PropagationMode,
) -> Result<CorrelationState> {
    if !(xi_end > 0.0 && xi_end <= 1.0) {
        return Err(Error::InvalidParams(format!("xi_end must lie in (0, 1], got {xi_end}")));
    }
    let (p, phi) = split_phase(params);
    let medium = LambdaMedium::new(p, mode, AssemblyOptions::default())?;
    let mut s = propagate_with(&medium, &vacuum_initial_correlations(), xi_end, &Tolerances::default())?;
    if phi != 0.0 {
        s.corr = rotate_phase(&s.corr, phi);
    }
    Ok(s)
}

/// Convenience: DGCZ value at the medium exit.
pub fn exit_dgcz(params: &ModelParams, mode: PropagationMode) -> Result<EntanglementResult> {
    dgcz_value(&propagate_correlations(params, 1.0, mode)?)
}

/// Closed-form solution of the constant-coefficient equation, via the
/// exponential of the augmented vectorized generator.
pub fn lyapunov_closed_form(c: &M4, z: &M4, k0: &M4, xi: f64) -> M4 {
    let n = 16;
    let mut gen = DMatrix::<C64>::zeros(n + 1, n + 1);
    // Column-major vec: vec(CK) = (I ⊗ C) vec K, vec(K C†) = (C̄ ⊗ I) vec K.
    for a in 0..4 {
        for b in 0..4 {
            for i in 0..4 {
                gen[(a * 4 + i, a * 4 + b)] += c[(i, b)];
                gen[(b * 4 + i, a * 4 + i)] += c[(b, a)].conj();
            }
        }
    }
    for (idx, zz) in z.iter().enumerate() {
        gen[(idx, n)] = *zz;
    }
    let e = (gen * C64::new(xi, 0.0)).exp();
    let mut x0 = DVector::<C64>::zeros(n + 1);
    for (idx, kk) in k0.iter().enumerate() {
        x0[idx] = *kk;
    }
    x0[n] = C64::new(1.0, 0.0);
    let x = e * x0;
    M4::from_fn(|i, j| x[j * 4 + i])
}
