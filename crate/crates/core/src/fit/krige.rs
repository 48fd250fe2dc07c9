use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par};
use rayon::prelude::*;
use serde::Serialize;

use crate::batchla::{batch_dot, batch_potrf, batch_trsv_in_place, StridedMatrixBatch, StridedVectorBatch};
use crate::error::{Error, Result};
use crate::exact::DenseCovariance;
use crate::geo::{k_nearest, Dataset, Location};
use crate::kernels::{fill_cov_symmetric, KernelFamily, KernelParams, KernelSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub predictions: Vec<f64>,
    /// Conditional (kriging) variances, for diagnostics.
    pub variances: Vec<f64>,
    /// Mean squared error against the supplied truth, if any.
    pub mse: Option<f64>,
}

/// Simple-kriging prediction of a zero-mean field at `test` locations,
/// each conditioned on its `m` nearest training locations. With
/// `m >= n_train` every prediction conditions on the whole training set.
pub fn krige_predict(
    train: &Dataset,
    theta: KernelParams,
    family: KernelFamily,
    test: &[Location],
    m: usize,
    truth: Option<&[f64]>,
) -> Result<PredictionReport> {
    theta.validate()?;
    if m == 0 {
        return Err(Error::Size("kriging needs m >= 1".into()));
    }
    if let Some(t) = truth {
        if t.len() != test.len() {
            return Err(Error::Size(format!(
                "{} truth values for {} test locations",
                t.len(),
                test.len()
            )));
        }
    }
    let metric = train.metric();
    for l in test {
        metric.validate(l)?;
    }
    let spec = KernelSpec::new(family, theta);
    let (predictions, variances) = if m >= train.len() {
        full_conditioning(train, &spec, test)?
    } else {
        neighbor_conditioning(train, &spec, test, m)?
    };
    let mse = truth.map(|t| {
        predictions
            .iter()
            .zip(t)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / t.len().max(1) as f64
    });
    Ok(PredictionReport {
        predictions,
        variances,
        mse,
    })
}

fn full_conditioning(train: &Dataset, spec: &KernelSpec, test: &[Location]) -> Result<(Vec<f64>, Vec<f64>)> {
    let metric = train.metric();
    let locs = train.locations();
    let n = locs.len();
    let l = DenseCovariance::build(locs, spec, metric).cholesky()?;
    let mut y = Mat::from_fn(n, 1, |i, _| train.observations()[i]);
    solve_lower_triangular_in_place(l.as_ref(), y.as_mut(), Par::Seq);
    let mut cross = Mat::from_fn(n, test.len(), |i, j| spec.cov(metric.distance(&locs[i], &test[j])));
    solve_lower_triangular_in_place(l.as_ref(), cross.as_mut(), Par::Seq);
    let mut pred = Vec::with_capacity(test.len());
    let mut var = Vec::with_capacity(test.len());
    for j in 0..test.len() {
        let (mut mu, mut s) = (0.0, 0.0);
        for i in 0..n {
            mu += cross[(i, j)] * y[(i, 0)];
            s += cross[(i, j)] * cross[(i, j)];
        }
        pred.push(mu);
        var.push(spec.variance() - s);
    }
    Ok((pred, var))
}

fn neighbor_conditioning(
    train: &Dataset,
    spec: &KernelSpec,
    test: &[Location],
    m: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let metric = train.metric();
    let locs = train.locations();
    let y = train.observations();
    let count = test.len();
    let mut sigma = StridedMatrixBatch::zeros(count, m);
    let mut cross = StridedVectorBatch::zeros(count, m);
    let mut y_j = StridedVectorBatch::zeros(count, m);
    sigma
        .par_slots_mut()
        .zip(cross.par_slots_mut())
        .zip(y_j.par_slots_mut())
        .zip(test.par_iter())
        .for_each(|(((s, c), yk), q)| {
            let js = k_nearest(locs, metric, q, m);
            let nbr: Vec<Location> = js.iter().map(|&j| locs[j]).collect();
            fill_cov_symmetric(&nbr, spec, metric, s, m);
            for (a, &j) in js.iter().enumerate() {
                c[a] = spec.cov(metric.distance(q, &locs[j]));
                yk[a] = y[j];
            }
        });
    batch_potrf(&mut sigma)?;
    batch_trsv_in_place(&sigma, &mut cross)?;
    batch_trsv_in_place(&sigma, &mut y_j)?;
    let pred = batch_dot(&y_j, &cross)?.0;
    let var = batch_dot(&cross, &cross)?
        .0
        .into_iter()
        .map(|s| spec.variance() - s)
        .collect();
    Ok((pred, var))
}
