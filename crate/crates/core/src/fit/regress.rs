use crate::error::{Error, Result};
use crate::geo::Dataset;

/// Residuals of a planar trend fit `value ~ a + b x + c y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Detrended {
    pub residuals: Dataset,
    /// `(a, b, c)`.
    pub coefficients: [f64; 3],
}

/// Least-squares removal of a linear trend in the coordinates.
pub fn ols_detrend(raw: &Dataset) -> Result<Detrended> {
    let n = raw.len();
    if n < 3 {
        return Err(Error::Regression(format!("need at least 3 points, got {n}")));
    }
    let locs = raw.locations();
    let vals = raw.observations();
    let nf = n as f64;
    let xm = locs.iter().map(|l| l.x).sum::<f64>() / nf;
    let ym = locs.iter().map(|l| l.y).sum::<f64>() / nf;
    let vm = vals.iter().sum::<f64>() / nf;

    // Centered normal equations for the two slopes.
    let (mut sxx, mut sxy, mut syy, mut sxv, mut syv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (l, &v) in locs.iter().zip(vals) {
        let (dx, dy, dv) = (l.x - xm, l.y - ym, v - vm);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxv += dx * dv;
        syv += dy * dv;
    }
    let det = sxx * syy - sxy * sxy;
    let scale = (sxx + syy) * (sxx + syy);
    if !(det > 1e-12 * scale) || scale == 0.0 {
        return Err(Error::Regression(
            "design matrix is rank deficient (locations are collinear)".into(),
        ));
    }
    let b = (syy * sxv - sxy * syv) / det;
    let c = (sxx * syv - sxy * sxv) / det;
    let a = vm - b * xm - c * ym;

    let resid: Vec<f64> = locs
        .iter()
        .zip(vals)
        .map(|(l, &v)| (v - vm) - b * (l.x - xm) - c * (l.y - ym))
        .collect();
    Ok(Detrended {
        residuals: raw.with_observations(resid)?,
        coefficients: [a, b, c],
    })
}

/// Elementwise square root of the observations.
pub fn sqrt_transform(raw: &Dataset) -> Result<Dataset> {
    if let Some(i) = raw.observations().iter().position(|&v| v < 0.0) {
        return Err(Error::Domain(format!(
            "observation {i} is negative ({})",
            raw.observations()[i]
        )));
    }
    raw.with_observations(raw.observations().iter().map(|v| v.sqrt()).collect())
}
