//! Box-constrained Nelder-Mead maximizer.
//!
//! Trial points that leave the box are clamped back onto it. Objective
//! values that are NaN or `-inf` mark infeasible points and always rank
//! last.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop when the spread of objective values across the simplex falls
    /// below `tol * max(|f_best|, 1)` and every vertex lies within
    /// `sqrt(tol)` box widths of the best one.
    pub tol: f64,
    pub max_evals: usize,
    /// Initial edge length as a fraction of each box width.
    pub initial_step: f64,
    /// Fresh simplices rebuilt around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_evals: 500,
            initial_step: 0.1,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn rank(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

struct Counted<F> {
    f: F,
    evals: usize,
    max_evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.max_evals {
            return None;
        }
        self.evals += 1;
        Some(rank((self.f)(x)))
    }
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

/// Maximize `f` over the box `[lo, hi]` starting from `x0`.
///
/// Returns `None` when no evaluated point of the first simplex is feasible.
pub fn maximize<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &SimplexOptions) -> Option<SimplexResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    assert!(lo.len() == d && hi.len() == d, "bounds must match dimension");
    let mut obj = Counted {
        f,
        evals: 0,
        max_evals: opts.max_evals.max(1),
    };
    let mut start = x0.to_vec();
    clamp_into(&mut start, lo, hi);

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut converged = false;
    for round in 0..=opts.restarts {
        let Some((x, v, conv)) = run(&mut obj, &start, lo, hi, opts) else {
            break;
        };
        if round == 0 && !v.is_finite() {
            return None;
        }
        let improved = match &best {
            None => true,
            Some((_, bv)) => v > *bv,
        };
        let gain = best.as_ref().map_or(f64::INFINITY, |(_, bv)| v - bv);
        if improved {
            best = Some((x.clone(), v));
        }
        converged = conv;
        if !conv || gain <= opts.tol * v.abs().max(1.0) {
            break;
        }
        start = x;
    }
    let (x, value) = best?;
    if !value.is_finite() {
        return None;
    }
    Some(SimplexResult {
        x,
        value,
        evaluations: obj.evals,
        converged,
    })
}

/// One Nelder-Mead run. Returns the best vertex, its value and whether the
/// tolerance was met before the budget ran out.
fn run<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &SimplexOptions,
) -> Option<(Vec<f64>, f64, bool)> {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let d = x0.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(d + 1);
    pts.push(x0.to_vec());
    vals.push(obj.eval(x0)?);
    for i in 0..d {
        let mut p = x0.to_vec();
        let step = opts.initial_step * (hi[i] - lo[i]);
        p[i] = if p[i] + step <= hi[i] { p[i] + step } else { p[i] - step };
        clamp_into(&mut p, lo, hi);
        let Some(v) = obj.eval(&p) else {
            return best_of(&pts, &vals, false);
        };
        pts.push(p);
        vals.push(v);
    }
    if vals.iter().all(|v| !v.is_finite()) {
        return best_of(&pts, &vals, false);
    }

    loop {
        // Sort descending: pts[0] best, pts[d] worst. Stable on ties.
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        let (fb, fw) = (vals[0], vals[d]);
        let tight = (0..d).all(|k| {
            let w = (hi[k] - lo[k]) * opts.tol.sqrt();
            pts.iter().all(|p| (p[k] - pts[0][k]).abs() <= w)
        });
        if fw.is_finite() && fb - fw <= opts.tol * fb.abs().max(1.0) && tight {
            return best_of(&pts, &vals, true);
        }

        let mut centroid = vec![0.0; d];
        for p in &pts[..d] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&pts[d])
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp_into(&mut p, lo, hi);
            p
        };

        let xr = along(REFLECT);
        let Some(fr) = obj.eval(&xr) else {
            return best_of(&pts, &vals, false);
        };
        if fr > vals[0] {
            let xe = along(EXPAND);
            let Some(fe) = obj.eval(&xe) else {
                pts[d] = xr;
                vals[d] = fr;
                return best_of(&pts, &vals, false);
            };
            if fe > fr {
                pts[d] = xe;
                vals[d] = fe;
            } else {
                pts[d] = xr;
                vals[d] = fr;
            }
            continue;
        }
        if fr > vals[d - 1] {
            pts[d] = xr;
            vals[d] = fr;
            continue;
        }
        let (xc, outside) = if fr > vals[d] {
            (along(CONTRACT * REFLECT), true)
        } else {
            (along(-CONTRACT), false)
        };
        let Some(fc) = obj.eval(&xc) else {
            return best_of(&pts, &vals, false);
        };
        let accept = if outside { fc >= fr } else { fc > vals[d] };
        if accept {
            pts[d] = xc;
            vals[d] = fc;
            continue;
        }
        for i in 1..=d {
            let p: Vec<f64> = pts[0]
                .iter()
                .zip(&pts[i])
                .map(|(b, x)| b + SHRINK * (x - b))
                .collect();
            let Some(v) = obj.eval(&p) else {
                return best_of(&pts, &vals, false);
            };
            pts[i] = p;
            vals[i] = v;
        }
    }
}

fn best_of(pts: &[Vec<f64>], vals: &[f64], converged: bool) -> Option<(Vec<f64>, f64, bool)> {
    let mut b = 0;
    for i in 1..vals.len() {
        if vals[i] > vals[b] {
            b = i;
        }
    }
    Some((pts[b].clone(), vals[b], converged))
}
