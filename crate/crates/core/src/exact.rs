//! Dense reference computations: exact Gaussian log-likelihood, field
//! simulation and KL divergence.

use std::f64::consts::PI;

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Dataset, Location, Metric};
use crate::kernels::{cov_matrix, KernelSpec};
use crate::vecchia::{vecchia_loglik, VecchiaPlan};

/// Largest problem the dense routines accept unless told otherwise.
pub const DEFAULT_MAX_DENSE_N: usize = 20_000;

/// Symmetric covariance matrix over a set of locations.
#[derive(Debug, Clone)]
pub struct DenseCovariance(pub Mat<f64>);

impl DenseCovariance {
    pub fn build(locations: &[Location], spec: &KernelSpec, metric: Metric) -> Self {
        Self(cov_matrix(locations, locations, spec, metric))
    }

    pub fn from_fn(k: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(Mat::from_fn(k, k, f))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    /// Lower Cholesky factor.
    pub fn cholesky(&self) -> Result<Mat<f64>> {
        let llt = self.0.llt(Side::Lower).map_err(|e| match e {
            faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index } => {
                Error::NotPositiveDefinite { index: 0, pivot: index }
            }
        })?;
        Ok(llt.L().to_owned())
    }
}

fn guard(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::GuardExceeded { n, limit });
    }
    Ok(())
}

fn log_diag_sum(l: &Mat<f64>) -> f64 {
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum()
}

/// `L^{-1} y` for a lower-triangular `L`.
pub fn forward_solve(l: &Mat<f64>, y: &[f64]) -> Vec<f64> {
    let mut rhs = Mat::from_fn(y.len(), 1, |i, _| y[i]);
    solve_lower_triangular_in_place(l.as_ref(), rhs.as_mut(), Par::Seq);
    (0..y.len()).map(|i| rhs[(i, 0)]).collect()
}

/// Exact Gaussian log-likelihood
/// `-(n/2) ln 2pi - (1/2) ln|Sigma| - (1/2) y^T Sigma^{-1} y`.
pub fn exact_loglik(dataset: &Dataset, spec: &KernelSpec, max_n: usize) -> Result<f64> {
    guard(dataset.len(), max_n)?;
    spec.params.validate()?;
    let sigma = DenseCovariance::build(dataset.locations(), spec, dataset.metric());
    let l = sigma.cholesky()?;
    let z = forward_solve(&l, dataset.observations());
    let quad: f64 = z.iter().map(|v| v * v).sum();
    let n = dataset.len() as f64;
    Ok(-0.5 * n * (2.0 * PI).ln() - log_diag_sum(&l) - 0.5 * quad)
}

/// Zero-mean Gaussian random field `L z` with `z` standard normal drawn
/// from ChaCha8 seeded by `seed`.
pub fn simulate_grf(
    locations: &[Location],
    metric: Metric,
    spec: &KernelSpec,
    seed: u64,
    max_n: usize,
) -> Result<Vec<f64>> {
    guard(locations.len(), max_n)?;
    spec.params.validate()?;
    let l = DenseCovariance::build(locations, spec, metric).cholesky()?;
    let z = standard_normals(locations.len(), seed);
    let n = locations.len();
    let mut y = vec![0.0; n];
    for j in 0..n {
        let zj = z[j];
        for (i, yi) in y.iter_mut().enumerate().skip(j) {
            *yi += l[(i, j)] * zj;
        }
    }
    Ok(y)
}

/// `n` standard-normal draws from ChaCha8 seeded with `seed`.
pub fn standard_normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `D_KL(N(0, Sigma0) || N(0, Sigma1))`.
pub fn kl_gaussian(sigma0: &DenseCovariance, sigma1: &DenseCovariance) -> Result<f64> {
    let k = sigma0.order();
    if sigma1.order() != k {
        return Err(Error::Shape(format!(
            "covariances of order {k} and {}",
            sigma1.order()
        )));
    }
    let l0 = sigma0.cholesky()?;
    let l1 = sigma1.cholesky()?;
    // tr(Sigma1^{-1} Sigma0) = ||L1^{-1} L0||_F^2
    let mut w = l0.clone();
    solve_lower_triangular_in_place(l1.as_ref(), w.as_mut(), Par::Seq);
    let mut trace = 0.0;
    for j in 0..k {
        for i in j..k {
            trace += w[(i, j)] * w[(i, j)];
        }
    }
    let log_ratio = 2.0 * (log_diag_sum(&l1) - log_diag_sum(&l0));
    Ok(0.5 * (trace - k as f64 + log_ratio))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlReport {
    pub ordering: String,
    pub m: usize,
    pub kl: f64,
    pub exact_ll0: f64,
    pub vecchia_ll0: f64,
}

/// KL divergence of the Vecchia approximation from the exact field,
/// computed as the difference of the two log-likelihoods at `y = 0`.
pub fn kl_vecchia(
    locations: &[Location],
    metric: Metric,
    plan: &VecchiaPlan,
    spec: &KernelSpec,
    max_n: usize,
) -> Result<KlReport> {
    let zeros = Dataset::zeros(locations.to_vec(), metric)?;
    let exact_ll0 = exact_loglik(&zeros, spec, max_n)?;
    let ordered = plan.order(&zeros)?;
    let vecchia_ll0 = vecchia_loglik(&ordered, plan, spec)?.total;
    Ok(KlReport {
        ordering: plan.ordering_name().to_string(),
        m: plan.m(),
        kl: exact_ll0 - vecchia_ll0,
        exact_ll0,
        vecchia_ll0,
    })
}
