//! Box-constrained Nelder–Mead minimization.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Stop once every vertex lies within this fraction of the box width of the best vertex.
    pub xtol_rel: f64,
    /// Initial edge length as a fraction of the box width.
    pub initial_scale: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            xtol_rel: 1e-6,
            initial_scale: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

/// Minimizes `f` over the box `[lo, hi]` starting from `x0`. Non-finite
/// objective values count as `+∞`.
pub fn minimize<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let width: Vec<f64> = (0..n).map(|i| (hi[i] - lo[i]).max(f64::MIN_POSITIVE)).collect();

    let mut start = x0.to_vec();
    clamp(&mut start, lo, hi);
    let mut pts = vec![start.clone()];
    for i in 0..n {
        let mut p = start.clone();
        let step = opts.initial_scale * width[i];
        p[i] = if p[i] + step <= hi[i] { p[i] + step } else { p[i] - step };
        clamp(&mut p, lo, hi);
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();

    let (ra, ex, co, sh) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let diam = pts[1..]
            .iter()
            .flat_map(|p| (0..n).map(move |i| (i, p[i])))
            .map(|(i, x)| (x - pts[0][i]).abs() / width[i])
            .fold(0.0, f64::max);
        if diam < opts.xtol_rel {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|i| pts[..n].iter().map(|p| p[i]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..n).map(|i| centroid[i] + t * (pts[n][i] - centroid[i])).collect();
            clamp(&mut x, lo, hi);
            x
        };
        let xr = along(-ra);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-ex);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let x = along(-co);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(co);
                let v = eval(&x);
                (x, v)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for k in 1..=n {
                    let x: Vec<f64> = (0..n).map(|i| pts[0][i] + sh * (pts[k][i] - pts[0][i])).collect();
                    vals[k] = eval(&x);
                    pts[k] = x;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b))).unwrap();
    SimplexResult {
        x: pts[best].clone(),
        f: vals[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 0.3).powi(2) + (x[1] - 0.7).powi(2),
            &[0.9, 0.1],
            &[0.0, 0.0],
            &[1.0, 1.0],
            &SimplexOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 0.3).abs() < 1e-5 && (r.x[1] - 0.7).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_box() {
        let r = minimize(|x| x[0], &[0.5], &[0.2], &[1.0], &SimplexOptions::default());
        assert!((r.x[0] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.0, 1.5],
            &[-2.0, -2.0],
            &[2.0, 2.0],
            &SimplexOptions { max_iter: 5000, ..Default::default() },
        );
        assert!((r.x[0] - 1.0).abs() < 1e-4, "{:?}", r);
    }

    #[test]
    fn nan_regions_are_avoided() {
        let r = minimize(
            |x| if x[0] < 0.5 { f64::NAN } else { (x[0] - 0.6).powi(2) },
            &[0.9],
            &[0.0],
            &[1.0],
            &SimplexOptions::default(),
        );
        assert!((r.x[0] - 0.6).abs() < 1e-5);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (x[0] * 7.0).sin() + (x[1] * 3.0).cos();
        let x0 = [0.2, 0.4];
        let r = minimize(f, &x0, &[0.0, 0.0], &[1.0, 1.0], &SimplexOptions::default());
        assert!(r.f <= f(&x0));
    }
}
