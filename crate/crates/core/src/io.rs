//! Scenario configuration, dispatch and serialization of results.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analytic::{analytic_v, coefficient_scaling_estimates, AnalyticApprox};
use crate::correlation::{
    dgcz_unchecked, propagate_trajectory, CorrelationState, EntanglementResult, PropagationMode,
};
use crate::error::{Error, Result};
use crate::mean_field::propagate_mean_field;
use crate::params::ModelParams;
use crate::sweep::{
    grid_sweep, optimize_v, AxisName, Bound, OptimizeOptions, OptimizeResult, Spacing, SweepAxis, SweepOptions,
    SweepResult,
};
use crate::vortex::{radial_entanglement_map, RadialMap, VortexProfile};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Propagate,
    Sweep,
    Optimize,
    Vortexmap,
    Analytic,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Propagate => "propagate",
            Self::Sweep => "sweep",
            Self::Optimize => "optimize",
            Self::Vortexmap => "vortexmap",
            Self::Analytic => "analytic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Model parameters as given by the user; everything but `alpha` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma12: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::complex_serde::option")]
    pub c1: Option<C64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::complex_serde::option")]
    pub c2: Option<C64>,
    #[serde(
        default,
        alias = "omega",
        skip_serializing_if = "Option::is_none",
        with = "crate::complex_serde::option"
    )]
    pub omega_in: Option<C64>,
}

impl ParamsSpec {
    pub fn resolve(&self) -> Result<ModelParams> {
        let d = ModelParams::default();
        let gamma = self.gamma.unwrap_or(d.gamma);
        let delta = self.delta.unwrap_or(0.0);
        let p = ModelParams {
            gamma,
            gamma1: self.gamma1.unwrap_or(0.5 * gamma),
            gamma2: self.gamma2.unwrap_or(0.5 * gamma),
            gamma12: self.gamma12.unwrap_or(0.0),
            gamma_phi: self.gamma_phi.unwrap_or(0.0),
            delta,
            delta_s: self.delta_s.unwrap_or(0.5 * delta),
            delta_c: self.delta_c.unwrap_or(-0.5 * delta),
            alpha: self.alpha,
            c1: self.c1.unwrap_or(d.c1),
            c2: self.c2.unwrap_or(d.c2),
            omega_in: self.omega_in.unwrap_or(d.omega_in),
        };
        p.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(p)
    }

    pub fn explicit(p: &ModelParams) -> Self {
        Self {
            alpha: p.alpha,
            gamma: Some(p.gamma),
            gamma1: Some(p.gamma1),
            gamma2: Some(p.gamma2),
            gamma12: Some(p.gamma12),
            gamma_phi: Some(p.gamma_phi),
            delta: Some(p.delta),
            delta_s: Some(p.delta_s),
            delta_c: Some(p.delta_c),
            c1: Some(p.c1),
            c2: Some(p.c2),
            omega_in: Some(p.omega_in),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: AxisName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl AxisSpec {
    pub fn resolve(&self) -> Result<SweepAxis> {
        let name = self.name;
        let r = match (&self.values, self.min, self.max, self.n) {
            (Some(v), None, None, None) => SweepAxis::new(name, v.clone(), self.spacing),
            (None, Some(lo), Some(hi), Some(n)) => match self.spacing {
                Spacing::Linear => SweepAxis::linear(name, lo, hi, n),
                Spacing::Log => SweepAxis::log(name, lo, hi, n),
            },
            _ => {
                return Err(Error::Config(format!(
                    "axis {}: give either `values` or all of `min`, `max`, `n`",
                    name.as_str()
                )))
            }
        };
        r.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn explicit(a: &SweepAxis) -> Self {
        Self {
            name: a.name,
            values: Some(a.values.clone()),
            min: None,
            max: None,
            n: None,
            spacing: a.spacing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadiiSpec {
    List(Vec<f64>),
    #[serde(rename_all = "snake_case")]
    Range { min: f64, max: f64, n: usize },
}

impl RadiiSpec {
    pub fn resolve(&self) -> Vec<f64> {
        match self {
            Self::List(v) => v.clone(),
            Self::Range { min, max, n } => match *n {
                0 => vec![],
                1 => vec![*min],
                n => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

fn default_xi_points() -> usize {
    101
}

fn default_seeds() -> usize {
    OptimizeOptions::default().seeds_per_axis
}

fn default_starts() -> usize {
    OptimizeOptions::default().starts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub params: ParamsSpec,
    #[serde(default)]
    pub mode: PropagationMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub refine: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<Bound>,
    #[serde(default = "default_seeds")]
    pub seeds_per_axis: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<VortexProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<RadiiSpec>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "default_xi_points")]
    pub xi_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// 0 selects the machine parallelism.
    #[serde(default)]
    pub workers: usize,
}

impl ScenarioConfig {
    pub fn command(&self) -> Result<Command> {
        self.command
            .ok_or_else(|| Error::Config("missing key `command`".into()))
    }

    /// Same scenario with every default written out.
    pub fn resolved(&self) -> Result<Self> {
        let p = self.params.resolve()?;
        let axes = self
            .axes
            .iter()
            .map(|a| a.resolve().map(|x| AxisSpec::explicit(&x)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: ParamsSpec::explicit(&p),
            axes,
            radii: self.radii.as_ref().map(|r| RadiiSpec::List(r.resolve())),
            ..self.clone()
        })
    }
}

const PARAM_KEYS: [&str; 13] = [
    "alpha", "gamma", "gamma1", "gamma2", "gamma12", "gamma_phi", "delta", "delta_s", "delta_c", "c1", "c2",
    "omega_in", "omega",
];

/// Parses a configuration document. Result documents written by this tool
/// are accepted too; their embedded configuration is used.
pub fn parse_config_value(text: &str) -> Result<Value> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    match v {
        Value::Object(mut m) if m.contains_key("config") && m.contains_key("tool") => {
            Ok(m.remove("config").unwrap_or(Value::Null))
        }
        Value::Object(_) => Ok(v),
        _ => Err(Error::Config("configuration must be a JSON object".into())),
    }
}

/// Applies `key=value` to a configuration document. Bare model-parameter
/// names address `params`; dotted keys address nested objects. The value is
/// parsed as JSON, falling back to a plain string.
pub fn apply_set(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got `{assignment}`")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("empty key in `{assignment}`")));
    }
    let value = serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut path: Vec<&str> = key.split('.').collect();
    if path.len() == 1 && PARAM_KEYS.contains(&path[0]) {
        path.insert(0, "params");
    }
    let mut cur = doc;
    for (i, part) in path.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            _ => return Err(Error::Config(format!("`{key}`: {} is not an object", path[..i].join(".")))),
        };
        if i + 1 == path.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

pub fn config_from_value(mut v: Value) -> Result<ScenarioConfig> {
    if let Value::Object(m) = &mut v {
        m.entry("params").or_insert_with(|| json!({}));
    }
    serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_value(&text)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub xi: f64,
    pub ic_norm: f64,
    pub is_norm: f64,
    pub entanglement: EntanglementResult,
    pub commutator_s: f64,
    pub commutator_c: f64,
    pub hermiticity_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagateOutput {
    pub rows: Vec<TrajectoryRow>,
    #[serde(serialize_with = "serialize_state")]
    pub final_state: CorrelationState,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyticRow {
    pub delta: f64,
    pub approx: AnalyticApprox,
    pub two_photon_estimate: f64,
    pub relaxation_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ScenarioOutput {
    Propagate(PropagateOutput),
    Sweep(SweepResult),
    Optimize(OptimizeResult),
    Vortexmap(RadialMap),
    Analytic(Vec<AnalyticRow>),
}

fn serialize_state<S: serde::Serializer>(s: &CorrelationState, ser: S) -> std::result::Result<S::Ok, S::Error> {
    let corr: Vec<Vec<Value>> = (0..4)
        .map(|i| (0..4).map(|j| json!({"re": s.corr[(i, j)].re, "im": s.corr[(i, j)].im})).collect())
        .collect();
    json!({"xi": s.xi, "corr": corr}).serialize(ser)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let p = cfg.params.resolve()?;
    match cfg.command()? {
        Command::Propagate => {
            let n = cfg.xi_points.max(2);
            let xs: Vec<f64> = (0..n).map(|i| if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 }).collect();
            let states = propagate_trajectory(&p, &xs, cfg.mode)?;
            let rows = states
                .iter()
                .map(|s| {
                    let (ic, is) = propagate_mean_field(&p, s.xi).normalized_intensities(p.omega_in);
                    let (cs, cc) = s.commutators();
                    TrajectoryRow {
                        xi: s.xi,
                        ic_norm: ic,
                        is_norm: is,
                        entanglement: dgcz_unchecked(s),
                        commutator_s: cs,
                        commutator_c: cc,
                        hermiticity_error: s.hermiticity_error(),
                    }
                })
                .collect();
            let final_state = states.last().cloned().expect("at least two output points");
            crate::correlation::dgcz_value(&final_state)?;
            Ok(ScenarioOutput::Propagate(PropagateOutput { rows, final_state }))
        }
        Command::Sweep => {
            if cfg.axes.is_empty() {
                return Err(Error::Config("sweep needs at least one entry in `axes`".into()));
            }
            let axes = cfg.axes.iter().map(AxisSpec::resolve).collect::<Result<Vec<_>>>()?;
            let opts = SweepOptions {
                mode: cfg.mode,
                workers: cfg.workers,
                refine: cfg.refine,
                ..Default::default()
            };
            Ok(ScenarioOutput::Sweep(grid_sweep(&axes, &p, &opts)?))
        }
        Command::Optimize => {
            if cfg.bounds.is_empty() {
                return Err(Error::Config("optimize needs at least one entry in `bounds`".into()));
            }
            let opts = OptimizeOptions {
                seeds_per_axis: cfg.seeds_per_axis,
                starts: cfg.starts,
                workers: cfg.workers,
                ..Default::default()
            };
            Ok(ScenarioOutput::Optimize(optimize_v(&cfg.bounds, &p, cfg.mode, &opts)?))
        }
        Command::Vortexmap => {
            let profile = cfg
                .profile
                .ok_or_else(|| Error::Config("vortexmap needs a `profile` block".into()))?;
            let radii = cfg
                .radii
                .as_ref()
                .map(RadiiSpec::resolve)
                .unwrap_or_else(|| RadiiSpec::Range { min: 0.0, max: 3.0 * profile.waist, n: 61 }.resolve());
            Ok(ScenarioOutput::Vortexmap(radial_entanglement_map(
                &profile, &p, &radii, cfg.phi, cfg.mode, cfg.workers,
            )?))
        }
        Command::Analytic => {
            let deltas = match cfg.axes.as_slice() {
                [] => vec![p.delta],
                [a] if a.name == AxisName::Delta => a.resolve()?.values,
                _ => return Err(Error::Config("analytic accepts at most one axis, named `delta`".into())),
            };
            let rows = deltas
                .into_iter()
                .map(|d| {
                    let q = p.delta(d);
                    let approx = analytic_v(&q)?;
                    let (tp, rl) = coefficient_scaling_estimates(&q, 1.0)?;
                    Ok(AnalyticRow {
                        delta: d,
                        approx,
                        two_photon_estimate: tp,
                        relaxation_estimate: rl,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ScenarioOutput::Analytic(rows))
        }
    }
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

fn push_c(row: &mut Vec<String>, z: C64) {
    row.push(num(z.re));
    row.push(num(z.im));
}

/// Header and rows of the CSV rendering.
pub fn csv_table(cfg: &ScenarioConfig, out: &ScenarioOutput) -> (Vec<String>, Vec<Vec<String>>) {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    match out {
        ScenarioOutput::Propagate(o) => {
            let header = s(&[
                "xi", "Ic_norm", "Is_norm", "V", "n_s", "n_c", "cross_re", "cross_im", "theta_opt_rad",
                "commutator_s", "commutator_c",
            ]);
            let rows = o
                .rows
                .iter()
                .map(|r| {
                    let e = &r.entanglement;
                    let mut row = vec![num(r.xi), num(r.ic_norm), num(r.is_norm), num(e.v), num(e.n_s), num(e.n_c)];
                    push_c(&mut row, e.cross);
                    row.extend([num(e.theta_opt), num(r.commutator_s), num(r.commutator_c)]);
                    row
                })
                .collect();
            (header, rows)
        }
        ScenarioOutput::Sweep(r) => {
            let mut header: Vec<String> = r.axes.iter().map(|a| a.name.column().to_string()).collect();
            header.extend(s(&["V", "failed"]));
            let rows = r
                .v_table
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let mut row: Vec<String> = r.coords(i).into_iter().map(num).collect();
                    row.push(num(v));
                    row.push(if v.is_nan() { "1" } else { "0" }.into());
                    row
                })
                .collect();
            (header, rows)
        }
        ScenarioOutput::Optimize(r) => {
            let mut header: Vec<String> = r.names.iter().map(|n| n.column().to_string()).collect();
            header.extend(s(&["V_opt", "V_best_seed", "evaluations"]));
            let mut row: Vec<String> = r.optimum.coords.iter().copied().map(num).collect();
            row.extend([num(r.optimum.value), num(r.best_seed.value), r.evaluations.to_string()]);
            (header, vec![row])
        }
        ScenarioOutput::Vortexmap(m) => {
            let header = s(&["r_transverse", "amplitude_over_Gamma", "Ic_over_Gamma2", "Is_over_Gamma2", "V"]);
            let rows = m
                .rows
                .iter()
                .map(|r| vec![num(r.r), num(r.amplitude), num(r.intensity_c), num(r.intensity_s), num(r.v)])
                .collect();
            (header, rows)
        }
        ScenarioOutput::Analytic(rows) => {
            let header = s(&[
                "delta_over_Gamma", "nu", "lambda", "zeta", "eta", "term2", "term3", "p1_re", "p1_im", "s1_re",
                "s1_im", "r2_re", "r2_im", "q2_re", "q2_im", "two_photon_estimate", "relaxation_estimate",
            ]);
            let _ = cfg;
            let body = rows
                .iter()
                .map(|r| {
                    let a = &r.approx;
                    let mut row = vec![num(r.delta), num(a.nu), num(a.lambda), num(a.zeta), num(a.eta), num(a.term2), num(a.term3)];
                    for z in [a.p1, a.s1, a.r2, a.q2] {
                        push_c(&mut row, z);
                    }
                    row.extend([num(r.two_photon_estimate), num(r.relaxation_estimate)]);
                    row
                })
                .collect();
            (header, body)
        }
    }
}

/// Reproducibility record written next to every output file.
pub fn metadata(cfg: &ScenarioConfig) -> Result<Value> {
    let resolved = cfg.resolved()?;
    Ok(json!({
        "tool": TOOL,
        "version": VERSION,
        "command": resolved.command.map(Command::as_str),
        "conventions": {
            "units": "rates, detunings and Rabi frequencies in units of Gamma; L = 1; g = 1",
            "detuning_split": "delta_s = delta/2, delta_c = -delta/2 unless given",
            "branching": "gamma1 = gamma2 = gamma/2 unless given",
            "gamma_phi_default": 0.0,
            "field_ordering": ["a_s", "a_s_dag", "a_c", "a_c_dag"],
            "initial_correlations": "vacuum diag(1, 0, 1, 0)",
        },
        "config": resolved,
    }))
}

pub fn render_json(cfg: &ScenarioConfig, out: &ScenarioOutput) -> Result<String> {
    let doc = json!({
        "tool": TOOL,
        "version": VERSION,
        "config": cfg.resolved()?,
        "result": out,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn render_csv(cfg: &ScenarioConfig, out: &ScenarioOutput) -> Result<String> {
    let (header, rows) = csv_table(cfg, out);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Runs the scenario and writes the output (and its sidecar) to
/// `cfg.output_path`, or to `stdout` when no path is set.
pub fn run_and_write(cfg: &ScenarioConfig, stdout: &mut dyn Write) -> Result<ScenarioOutput> {
    let out = run_scenario(cfg)?;
    let text = match cfg.format {
        Format::Json => render_json(cfg, &out)?,
        Format::Csv => render_csv(cfg, &out)?,
    };
    match &cfg.output_path {
        Some(path) => {
            std::fs::write(path, text)?;
            let meta = serde_json::to_string_pretty(&metadata(cfg)?)?;
            std::fs::write(sidecar_path(path), meta)?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(out)
}
