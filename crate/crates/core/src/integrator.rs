//! Adaptive Dormand–Prince 5(4) integrator with dense output, on complex state vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Smallest admissible step relative to the integration span.
    pub min_step_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 200_000,
            min_step_rel: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: f64,
    pub y: Vec<C64>,
    /// States at the requested output abscissae, in request order.
    pub dense: Vec<(f64, Vec<C64>)>,
    pub stats: Stats,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (a, k) in terms {
            acc += k[i] * *a;
        }
        out[i] = y[i] + acc * h;
    }
}

fn err_norm(y0: &[C64], y1: &[C64], err: &[C64], tol: &Tolerances) -> f64 {
    let mut s = 0.0;
    for i in 0..y0.len() {
        let sc = tol.atol + tol.rtol * y0[i].norm().max(y1[i].norm());
        let e = err[i] / sc;
        s += e.norm_sqr();
    }
    (s / y0.len() as f64).sqrt()
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end`.
///
/// `f` writes the derivative into its third argument and may fail; `fixup`
/// runs on every accepted state and every dense output (e.g. to restore a
/// symmetry that roundoff erodes). `outputs` must lie in `[x0, x_end]`.
pub fn integrate<F, P>(
    mut f: F,
    x0: f64,
    y0: &[C64],
    x_end: f64,
    outputs: &[f64],
    tol: &Tolerances,
    mut fixup: P,
) -> Result<Solution>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
    P: FnMut(&mut [C64]),
{
    let n = y0.len();
    let span = x_end - x0;
    if !(span >= 0.0) || !span.is_finite() {
        return Err(Error::IntegrationFailure(format!("invalid span [{x0}, {x_end}]")));
    }
    for &xo in outputs {
        if !(xo >= x0 && xo <= x_end) {
            return Err(Error::IntegrationFailure(format!("output point {xo} outside span")));
        }
    }
    let mut order: Vec<usize> = (0..outputs.len()).collect();
    order.sort_by(|&a, &b| outputs[a].total_cmp(&outputs[b]));
    let mut dense: Vec<Option<Vec<C64>>> = vec![None; outputs.len()];
    let mut next_out = 0;

    let mut stats = Stats::default();
    let mut x = x0;
    let mut y = y0.to_vec();
    fixup(&mut y);

    while next_out < order.len() && outputs[order[next_out]] == x0 {
        dense[order[next_out]] = Some(y.clone());
        next_out += 1;
    }
    if span == 0.0 {
        return Ok(Solution {
            x,
            y,
            dense: collect_dense(outputs, dense),
            stats,
        });
    }

    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut ys = k1.clone();
    let mut y1 = k1.clone();
    let mut err = k1.clone();

    f(x, &y, &mut k1)?;
    stats.evaluations += 1;

    let mut h = initial_step(&mut f, x, &y, &k1, span, tol, &mut stats)?;
    let h_min = tol.min_step_rel * span;
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::IntegrationFailure(format!(
                "step budget of {} exhausted at x = {x}",
                tol.max_steps
            )));
        }
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }
        if h < h_min && !last {
            return Err(Error::IntegrationFailure(format!("step size underflow ({h:e}) at x = {x}")));
        }

        combine(&mut ys, &y, h, &[(A21, &k1)]);
        f(x + C2 * h, &ys, &mut k2)?;
        combine(&mut ys, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(x + C3 * h, &ys, &mut k3)?;
        combine(&mut ys, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(x + C4 * h, &ys, &mut k4)?;
        combine(&mut ys, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(x + C5 * h, &ys, &mut k5)?;
        combine(&mut ys, &y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let x_new = if last { x_end } else { x + h };
        f(x_new, &ys, &mut k6)?;
        combine(&mut y1, &y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        f(x_new, &y1, &mut k7)?;
        stats.evaluations += 6;

        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = err_norm(&y, &y1, &err, tol);
        if !e.is_finite() {
            stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            if h < h_min {
                return Err(Error::IntegrationFailure(format!("non-finite state near x = {x}")));
            }
            continue;
        }

        // Lund-stabilized step control.
        let fac11 = e.powf(0.2 - 0.04 * 0.75);
        let mut fac = fac11 / fac_old.powf(0.04);
        fac = (fac / 0.9).clamp(1.0 / 10.0, 1.0 / 0.2);
        let h_new = h / fac;

        if e <= 1.0 {
            fac_old = e.max(1e-4);
            stats.accepted += 1;

            while next_out < order.len() && outputs[order[next_out]] <= x_new {
                let xo = outputs[order[next_out]];
                let mut yo = if xo == x_new {
                    y1.clone()
                } else {
                    let theta = (xo - x) / h;
                    let theta1 = 1.0 - theta;
                    let mut out = vec![C64::new(0.0, 0.0); n];
                    for i in 0..n {
                        let r2 = y1[i] - y[i];
                        let r3 = k1[i] * h - r2;
                        let r4 = r2 - k7[i] * h - r3;
                        let r5 = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6
                            + k7[i] * D7)
                            * h;
                        out[i] = y[i] + (r2 + (r3 + (r4 + r5 * theta1) * theta) * theta1) * theta;
                    }
                    out
                };
                fixup(&mut yo);
                dense[order[next_out]] = Some(yo);
                next_out += 1;
            }

            std::mem::swap(&mut y, &mut y1);
            fixup(&mut y);
            x = x_new;
            if last {
                break;
            }
            std::mem::swap(&mut k1, &mut k7);
            h = if last_rejected { h_new.min(h) } else { h_new };
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h /= (fac11 / 0.9).min(5.0);
            last_rejected = true;
        }
    }

    Ok(Solution {
        x,
        y,
        dense: collect_dense(outputs, dense),
        stats,
    })
}

fn collect_dense(outputs: &[f64], dense: Vec<Option<Vec<C64>>>) -> Vec<(f64, Vec<C64>)> {
    outputs
        .iter()
        .zip(dense)
        .map(|(&x, y)| (x, y.expect("every output point is visited")))
        .collect()
}

fn initial_step<F>(
    f: &mut F,
    x: f64,
    y: &[C64],
    k1: &[C64],
    span: f64,
    tol: &Tolerances,
    stats: &mut Stats,
) -> Result<f64>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| tol.atol + tol.rtol * v.norm()).collect();
    let rms = |v: &[C64]| -> f64 {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).norm_sqr()).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(k1);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<C64> = y.iter().zip(k1).map(|(a, k)| a + k * h0).collect();
    let mut k2 = vec![C64::new(0.0, 0.0); n];
    f(x + h0, &y1, &mut k2)?;
    stats.evaluations += 1;
    let diff: Vec<C64> = k2.iter().zip(k1).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
