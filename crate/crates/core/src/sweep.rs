//! Parameter grids over (δ, Γ12, Ω, α) and optimum search.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{exit_dgcz, PropagationMode};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::simplex::{minimize, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Delta,
    Gamma12,
    Omega,
    Alpha,
}

impl AxisName {
    pub fn apply(self, p: &mut ModelParams, x: f64) {
        match self {
            Self::Delta => p.set_delta(x),
            Self::Gamma12 => p.gamma12 = x,
            Self::Omega => p.omega_in = num_complex::Complex64::new(x, 0.0),
            Self::Alpha => p.alpha = x,
        }
    }

    /// CSV column header carrying the unit.
    pub fn column(self) -> &'static str {
        match self {
            Self::Delta => "delta_over_Gamma",
            Self::Gamma12 => "gamma12_over_Gamma",
            Self::Omega => "omega_over_Gamma",
            Self::Alpha => "alpha",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Gamma12 => "gamma12",
            Self::Omega => "omega",
            Self::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: AxisName,
    pub values: Vec<f64>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn new(name: AxisName, values: Vec<f64>, spacing: Spacing) -> Result<Self> {
        let a = Self { name, values, spacing };
        a.validate()?;
        Ok(a)
    }

    pub fn linear(name: AxisName, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        };
        Self::new(name, values, Spacing::Linear)
    }

    pub fn log(name: AxisName, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > 0.0) {
            return Err(Error::InvalidParams(format!("log axis {} needs positive bounds", name.as_str())));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect(),
        };
        Self::new(name, values, Spacing::Log)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParams(format!("axis {} has no values", self.name.as_str())));
        }
        if self.values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(format!("axis {} has non-finite values", self.name.as_str())));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(format!(
                "axis {} values must be strictly increasing",
                self.name.as_str()
            )));
        }
        if self.spacing == Spacing::Log && self.values[0] <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "log axis {} values must be positive",
                self.name.as_str()
            )));
        }
        Ok(())
    }

    fn to_coord(&self, x: f64) -> f64 {
        match self.spacing {
            Spacing::Linear => x,
            Spacing::Log => x.ln(),
        }
    }

    fn from_coord(&self, u: f64) -> f64 {
        match self.spacing {
            Spacing::Linear => u,
            Spacing::Log => u.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    /// One coordinate per axis, in axis order.
    pub coords: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub coords: Vec<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axes: Vec<SweepAxis>,
    pub mode: PropagationMode,
    /// Row-major over the axes (last axis fastest); failed points are NaN.
    pub v_table: Vec<f64>,
    pub argmin: Option<GridPoint>,
    pub refined_min: Option<GridPoint>,
    pub failures: Vec<PointFailure>,
}

impl SweepResult {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn coords(&self, index: usize) -> Vec<f64> {
        grid_coords(&self.axes, index)
    }

    /// Minimum of the table over every axis except `axis`, for each value of `axis`.
    pub fn minima_along(&self, axis: usize) -> Vec<f64> {
        let shape = self.shape();
        let mut out = vec![f64::NAN; shape[axis]];
        for (i, &v) in self.v_table.iter().enumerate() {
            let k = unravel(&shape, i)[axis];
            if v.is_finite() && !(out[k] <= v) {
                out[k] = v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub mode: PropagationMode,
    /// Worker threads; 0 selects the machine parallelism.
    pub workers: usize,
    pub refine: bool,
    #[serde(skip)]
    pub simplex: SimplexOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            mode: PropagationMode::Full,
            workers: 0,
            refine: false,
            simplex: SimplexOptions::default(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs `f` inside a dedicated pool of `workers` threads.
pub fn with_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    let n = if workers == 0 { default_workers() } else { workers };
    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

fn unravel(shape: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        out[k] = index % shape[k];
        index /= shape[k];
    }
    out
}

fn grid_coords(axes: &[SweepAxis], index: usize) -> Vec<f64> {
    let shape: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
    unravel(&shape, index)
        .into_iter()
        .zip(axes)
        .map(|(k, a)| a.values[k])
        .collect()
}

fn params_at(fixed: &ModelParams, names: &[AxisName], coords: &[f64]) -> ModelParams {
    let mut p = *fixed;
    for (n, &x) in names.iter().zip(coords) {
        n.apply(&mut p, x);
    }
    p
}

/// Lexicographic tie-break: smaller δ, then Γ12, then Ω, then α.
fn tie_order(names: &[AxisName], a: &[f64], b: &[f64]) -> Ordering {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by_key(|&k| names[k]);
    for k in order {
        match a[k].total_cmp(&b[k]) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn better(names: &[AxisName], a: &GridPoint, b: &GridPoint) -> bool {
    match a.value.total_cmp(&b.value) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => tie_order(names, &a.coords, &b.coords) == Ordering::Less,
    }
}

/// DGCZ value at the medium exit; the objective used by sweeps and the optimizer.
pub fn exit_v(p: &ModelParams, mode: PropagationMode) -> Result<f64> {
    exit_dgcz(p, mode).map(|r| r.v)
}

pub fn grid_sweep(axes: &[SweepAxis], fixed: &ModelParams, opts: &SweepOptions) -> Result<SweepResult> {
    let mode = opts.mode;
    grid_sweep_with(axes, fixed, opts, |p| exit_v(p, mode))
}

/// Grid sweep with an arbitrary per-point evaluator.
pub fn grid_sweep_with<F>(axes: &[SweepAxis], fixed: &ModelParams, opts: &SweepOptions, eval: F) -> Result<SweepResult>
where
    F: Fn(&ModelParams) -> Result<f64> + Sync,
{
    if axes.is_empty() || axes.len() > 3 {
        return Err(Error::InvalidParams(format!("expected 1 to 3 axes, got {}", axes.len())));
    }
    for a in axes {
        a.validate()?;
    }
    let names: Vec<AxisName> = axes.iter().map(|a| a.name).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(Error::InvalidParams(format!("axis {} given twice", n.as_str())));
        }
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();

    let outcomes: Vec<Result<f64>> = with_pool(opts.workers, || {
        (0..total)
            .into_par_iter()
            .map(|i| {
                let p = params_at(fixed, &names, &grid_coords(axes, i));
                p.validate().and_then(|_| eval(&p))
            })
            .collect()
    });

    let mut v_table = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(v) if v.is_finite() => v_table.push(v),
            Ok(v) => {
                failures.push(PointFailure {
                    index: i,
                    coords: grid_coords(axes, i),
                    message: format!("non-finite value {v}"),
                });
                v_table.push(f64::NAN);
            }
            Err(e) => {
                failures.push(PointFailure {
                    index: i,
                    coords: grid_coords(axes, i),
                    message: e.to_string(),
                });
                v_table.push(f64::NAN);
            }
        }
    }
    if 2 * failures.len() > total {
        let f = &failures[0];
        return Err(Error::SweepFailed {
            failed: failures.len(),
            total,
            first: format!("{:?}: {}", f.coords, f.message),
        });
    }

    let mut argmin: Option<GridPoint> = None;
    for (i, &v) in v_table.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        let cand = GridPoint {
            coords: grid_coords(axes, i),
            value: v,
        };
        if argmin.as_ref().map_or(true, |b| better(&names, &cand, b)) {
            argmin = Some(cand);
        }
    }

    let refined_min = match (&argmin, opts.refine) {
        (Some(best), true) => Some(refine(axes, fixed, best, opts, &eval)),
        (best, _) => best.clone(),
    };

    Ok(SweepResult {
        axes: axes.to_vec(),
        mode: opts.mode,
        v_table,
        argmin,
        refined_min,
        failures,
    })
}

fn refine<F>(axes: &[SweepAxis], fixed: &ModelParams, best: &GridPoint, opts: &SweepOptions, eval: &F) -> GridPoint
where
    F: Fn(&ModelParams) -> Result<f64> + Sync,
{
    let free: Vec<usize> = (0..axes.len())
        .filter(|&k| axes[k].name != AxisName::Alpha && axes[k].values.len() > 1)
        .collect();
    if free.is_empty() {
        return best.clone();
    }
    let names: Vec<AxisName> = axes.iter().map(|a| a.name).collect();
    let lo: Vec<f64> = free.iter().map(|&k| axes[k].to_coord(axes[k].values[0])).collect();
    let hi: Vec<f64> = free
        .iter()
        .map(|&k| axes[k].to_coord(*axes[k].values.last().unwrap()))
        .collect();
    let x0: Vec<f64> = free.iter().map(|&k| axes[k].to_coord(best.coords[k])).collect();
    let full = |u: &[f64]| {
        let mut c = best.coords.clone();
        for (j, &k) in free.iter().enumerate() {
            c[k] = axes[k].from_coord(u[j]);
        }
        c
    };
    let res = minimize(
        |u| {
            let p = params_at(fixed, &names, &full(u));
            p.validate().and_then(|_| eval(&p)).unwrap_or(f64::NAN)
        },
        &x0,
        &lo,
        &hi,
        &opts.simplex,
    );
    let cand = GridPoint {
        coords: full(&res.x),
        value: res.f,
    };
    if cand.value.is_finite() && better(&names, &cand, best) {
        cand
    } else {
        best.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    pub name: AxisName,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeOptions {
    pub seeds_per_axis: usize,
    /// Number of best seeds refined by the simplex.
    pub starts: usize,
    pub workers: usize,
    #[serde(skip)]
    pub simplex: SimplexOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            seeds_per_axis: 7,
            starts: 3,
            workers: 0,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub names: Vec<AxisName>,
    pub best_seed: GridPoint,
    pub optimum: GridPoint,
    pub params: ModelParams,
    pub evaluations: usize,
}

fn bound_axis(b: &Bound, n: usize) -> Result<SweepAxis> {
    if !(b.lo.is_finite() && b.hi.is_finite() && b.hi > b.lo) {
        return Err(Error::InvalidParams(format!("empty bound for {}", b.name.as_str())));
    }
    if b.lo > 0.0 {
        SweepAxis::log(b.name, b.lo, b.hi, n)
    } else {
        SweepAxis::linear(b.name, b.lo, b.hi, n)
    }
}

/// Log-grid seeding over the box followed by simplex refinement from the best seeds.
/// `objective` returns `None` for a failed evaluation.
pub fn optimize_with<F>(bounds: &[Bound], opts: &OptimizeOptions, objective: F) -> Result<(GridPoint, GridPoint, usize)>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if bounds.is_empty() {
        return Err(Error::InvalidParams("no optimization bounds".into()));
    }
    let names: Vec<AxisName> = bounds.iter().map(|b| b.name).collect();
    let axes: Vec<SweepAxis> = bounds
        .iter()
        .map(|b| bound_axis(b, opts.seeds_per_axis.max(2)))
        .collect::<Result<_>>()?;
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let lo: Vec<f64> = axes.iter().map(|a| a.to_coord(a.values[0])).collect();
    let hi: Vec<f64> = axes.iter().map(|a| a.to_coord(*a.values.last().unwrap())).collect();

    with_pool(opts.workers, || {
        let seeds: Vec<Option<f64>> = (0..total)
            .into_par_iter()
            .map(|i| objective(&grid_coords(&axes, i)).filter(|v| v.is_finite()))
            .collect();
        let mut ok: Vec<GridPoint> = seeds
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|value| GridPoint { coords: grid_coords(&axes, i), value }))
            .collect();
        if ok.is_empty() {
            return Err(Error::NoImprovement);
        }
        ok.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then_with(|| tie_order(&names, &a.coords, &b.coords))
        });
        let best_seed = ok[0].clone();
        let starts = &ok[..opts.starts.clamp(1, ok.len())];
        let runs: Vec<(GridPoint, usize)> = starts
            .par_iter()
            .map(|s| {
                let mut count = 0usize;
                let x0: Vec<f64> = s.coords.iter().zip(&axes).map(|(&x, a)| a.to_coord(x)).collect();
                let to_x = |u: &[f64]| -> Vec<f64> { u.iter().zip(&axes).map(|(&c, a)| a.from_coord(c)).collect() };
                let r = minimize(
                    |u| {
                        count += 1;
                        objective(&to_x(u)).unwrap_or(f64::NAN)
                    },
                    &x0,
                    &lo,
                    &hi,
                    &opts.simplex,
                );
                (GridPoint { coords: to_x(&r.x), value: r.f }, count)
            })
            .collect();
        let mut optimum = best_seed.clone();
        let mut evaluations = total;
        for (cand, n) in runs {
            evaluations += n;
            if cand.value.is_finite() && better(&names, &cand, &optimum) {
                optimum = cand;
            }
        }
        Ok((best_seed, optimum, evaluations))
    })
}

pub fn optimize_v(bounds: &[Bound], fixed: &ModelParams, mode: PropagationMode, opts: &OptimizeOptions) -> Result<OptimizeResult> {
    let names: Vec<AxisName> = bounds.iter().map(|b| b.name).collect();
    let (best_seed, optimum, evaluations) = optimize_with(bounds, opts, |x| {
        let p = params_at(fixed, &names, x);
        p.validate().and_then(|_| exit_v(&p, mode)).ok()
    })?;
    Ok(OptimizeResult {
        params: params_at(fixed, &names, &optimum.coords),
        names,
        best_seed,
        optimum,
        evaluations,
    })
}
