//! Vecchia log-likelihood over a strided batch of conditioning problems.
//!
//! After ordering, the first `m` observations form one joint Gaussian block
//! and every later observation `i` is conditioned on its `m` nearest
//! predecessors `J_i`. All `n - m + 1` blocks are `m x m`, so they share one
//! strided workspace and are factored, solved and reduced as a batch.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::batchla::{
    batch_dot, batch_potrf, batch_trsv_in_place, half_log_det, BatchScalars, StridedMatrixBatch,
    StridedVectorBatch,
};
use crate::error::{Error, Result};
use crate::geo::{nearest_neighbors, Dataset, Location, Metric, NeighborTable, Ordering, Permutation};
use crate::kernels::{fill_cov_symmetric, KernelSpec};

/// Fixed chunk length of the ordered reduction over block log-densities.
pub const REDUCTION_CHUNK: usize = 1024;

/// Ordering and conditioning sets for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct VecchiaPlan {
    m: usize,
    n: usize,
    permutation: Permutation,
    /// `None` when `n <= m`: everything lands in the joint first block.
    neighbors: Option<NeighborTable>,
    metric: Metric,
    ordering: String,
}

impl VecchiaPlan {
    /// Order `dataset` and find the conditioning sets of the ordered points.
    pub fn build(dataset: &Dataset, m: usize, ordering: Ordering, seed: u64) -> Result<Self> {
        let perm = ordering.permutation(dataset.locations(), seed);
        let mut plan = Self::with_permutation(dataset, m, perm)?;
        plan.ordering = ordering.name().to_string();
        Ok(plan)
    }

    pub fn with_permutation(dataset: &Dataset, m: usize, permutation: Permutation) -> Result<Self> {
        if m == 0 {
            return Err(Error::Size("conditioning size m must be at least 1".into()));
        }
        let ordered = dataset.permuted(&permutation)?;
        let n = ordered.len();
        let neighbors = if n > m {
            Some(nearest_neighbors(&ordered, m)?)
        } else {
            None
        };
        Ok(Self {
            m,
            n,
            permutation,
            neighbors,
            metric: dataset.metric(),
            ordering: "custom".to_string(),
        })
    }

    /// Assemble a plan from an explicit permutation and neighbor table.
    pub fn from_parts(permutation: Permutation, neighbors: NeighborTable, metric: Metric) -> Result<Self> {
        if neighbors.n() != permutation.len() {
            return Err(Error::Size(format!(
                "neighbor table covers {} points, permutation {}",
                neighbors.n(),
                permutation.len()
            )));
        }
        Ok(Self {
            m: neighbors.m(),
            n: permutation.len(),
            permutation,
            neighbors: Some(neighbors),
            metric,
            ordering: "custom".to_string(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Order of the joint first block.
    pub fn block_dim(&self) -> usize {
        self.m.min(self.n)
    }

    /// Number of batch entries, the joint block included.
    pub fn block_count(&self) -> usize {
        self.n - self.block_dim() + 1
    }

    pub fn permutation(&self) -> &Permutation {
        &self.permutation
    }

    pub fn neighbors(&self) -> Option<&NeighborTable> {
        self.neighbors.as_ref()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// `random`, `morton`, or `custom` for an explicit permutation.
    pub fn ordering_name(&self) -> &str {
        &self.ordering
    }

    pub fn with_ordering_name(mut self, name: &str) -> Self {
        self.ordering = name.to_string();
        self
    }

    /// The dataset in plan order.
    pub fn order(&self, dataset: &Dataset) -> Result<Dataset> {
        dataset.permuted(&self.permutation)
    }

    fn check(&self, ordered: &Dataset) -> Result<()> {
        if ordered.len() != self.n {
            return Err(Error::Size(format!(
                "plan built for {} points, dataset has {}",
                self.n,
                ordered.len()
            )));
        }
        Ok(())
    }
}

/// Strided storage for every conditioning problem.
///
/// Entry 0 is the joint first block: `sigma` holds the covariance of the
/// first `m` ordered points and both `v` and `y_j` hold their observations,
/// so the correction `y_j' . v'` equals `y^T Sigma^{-1} y`. Entry `k >= 1`
/// conditions ordered point `m + k - 1` on its neighbors.
#[derive(Debug, Clone)]
pub struct BatchWorkspace {
    pub sigma: StridedMatrixBatch,
    pub v: StridedVectorBatch,
    pub y_j: StridedVectorBatch,
    /// Marginal variance of each block's target; entry 0 is unused.
    pub sigma_diag: BatchScalars,
    /// Observation of each block's target; entry 0 is unused.
    pub y_target: Vec<f64>,
    factored: bool,
}

impl BatchWorkspace {
    pub fn count(&self) -> usize {
        self.sigma.count()
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn is_factored(&self) -> bool {
        self.factored
    }

    /// Cholesky-factor every block and apply `L^{-1}` to `v` and `y_j`.
    pub fn factor_and_solve(&mut self) -> Result<()> {
        if self.factored {
            return Ok(());
        }
        batch_potrf(&mut self.sigma).map_err(|e| match e {
            Error::NotPositiveDefinite { index, pivot } => Error::Infeasible {
                block: index,
                reason: format!("conditioning covariance not positive definite at pivot {pivot}"),
            },
            other => other,
        })?;
        let singular = |e: Error| match e {
            Error::Singular { index, row } => Error::Infeasible {
                block: index,
                reason: format!("singular factor at row {row}"),
            },
            other => other,
        };
        batch_trsv_in_place(&self.sigma, &mut self.v).map_err(singular)?;
        batch_trsv_in_place(&self.sigma, &mut self.y_j).map_err(singular)?;
        self.factored = true;
        Ok(())
    }

    /// Correction dot products and per-block Gaussian log-densities.
    pub fn reduce(&self) -> Result<LogLikResult> {
        if !self.factored {
            return Err(Error::Shape("workspace must be factored before reduction".into()));
        }
        let m = self.dim();
        let mu_prime = batch_dot(&self.y_j, &self.v)?;
        let sigma_prime = batch_dot(&self.v, &self.v)?;
        let ln_2pi = (2.0 * PI).ln();

        let hld = half_log_det(self.sigma.matrix(0), m).map_err(|e| Error::Infeasible {
            block: 0,
            reason: e.to_string(),
        })?;
        let block_first = -hld - 0.5 * mu_prime.0[0] - 0.5 * m as f64 * ln_2pi;

        let rest = self.count() - 1;
        let mut mu_new = Vec::with_capacity(rest);
        let mut sigma_new = Vec::with_capacity(rest);
        let mut block_rest = Vec::with_capacity(rest);
        for k in 1..self.count() {
            let mu = mu_prime.0[k];
            let var = self.sigma_diag.0[k] - sigma_prime.0[k];
            if !(var > 0.0) || !var.is_finite() {
                return Err(Error::Infeasible {
                    block: k,
                    reason: format!("conditional variance {var} is not positive"),
                });
            }
            let r = self.y_target[k] - mu;
            block_rest.push(-0.5 * (r * r / var + ln_2pi + var.ln()));
            mu_new.push(mu);
            sigma_new.push(var);
        }
        let total = block_first + ordered_sum(&block_rest);
        Ok(LogLikResult {
            total,
            block_first,
            block_rest,
            mu_new,
            sigma_new,
        })
    }
}

/// Sum in fixed-size chunks whose partial sums are combined in index order.
/// The result depends only on the input, never on the thread pool.
pub fn ordered_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values
        .par_chunks(REDUCTION_CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLikResult {
    pub total: f64,
    pub block_first: f64,
    pub block_rest: Vec<f64>,
    /// Conditional means of ordered points `m..n`.
    pub mu_new: Vec<f64>,
    /// Conditional variances of ordered points `m..n`.
    pub sigma_new: Vec<f64>,
}

/// Fill the batch workspace for an ordered dataset.
pub fn assemble(ordered: &Dataset, plan: &VecchiaPlan, spec: &KernelSpec) -> Result<BatchWorkspace> {
    plan.check(ordered)?;
    spec.params.validate()?;
    let n = ordered.len();
    let m = plan.block_dim();
    let count = plan.block_count();
    let metric = ordered.metric();
    let locs = ordered.locations();
    let y = ordered.observations();

    let mut sigma = StridedMatrixBatch::zeros(count, m);
    let mut v = StridedVectorBatch::zeros(count, m);
    let mut y_j = StridedVectorBatch::zeros(count, m);

    {
        let head = sigma.slots_mut().next().expect("at least one block");
        fill_cov_symmetric(&locs[..m], spec, metric, head, m);
        v.slots_mut().next().expect("block 0")[..m].copy_from_slice(&y[..m]);
        y_j.slots_mut().next().expect("block 0")[..m].copy_from_slice(&y[..m]);
    }

    if let Some(nt) = plan.neighbors() {
        sigma
            .par_slots_mut()
            .zip(v.par_slots_mut())
            .zip(y_j.par_slots_mut())
            .enumerate()
            .skip(1)
            .for_each_init(
                || Vec::<Location>::with_capacity(m),
                |nbr_locs, (k, ((s, vk), yk))| {
                    let target = m + k - 1;
                    let js = nt.neighbors_of(target);
                    nbr_locs.clear();
                    nbr_locs.extend(js.iter().map(|&j| locs[j]));
                    fill_cov_symmetric(nbr_locs, spec, metric, s, m);
                    let t = &locs[target];
                    for (a, &j) in js.iter().enumerate() {
                        vk[a] = spec.cov(metric.distance(t, &locs[j]));
                        yk[a] = y[j];
                    }
                },
            );
    }

    let mut y_target = vec![0.0; count];
    y_target[1..].copy_from_slice(&y[m..n]);
    Ok(BatchWorkspace {
        sigma,
        v,
        y_j,
        sigma_diag: BatchScalars(vec![spec.variance(); count]),
        y_target,
        factored: false,
    })
}

/// Vecchia log-likelihood of an ordered dataset.
pub fn vecchia_loglik(ordered: &Dataset, plan: &VecchiaPlan, spec: &KernelSpec) -> Result<LogLikResult> {
    let mut ws = assemble(ordered, plan, spec)?;
    ws.factor_and_solve()?;
    ws.reduce()
}

/// Modeled flop count of one likelihood evaluation: per block a Cholesky
/// (`m^3/3`), two triangular solves (`m^2` each) and two dot products
/// (`2m` each).
pub fn flop_count(n: usize, m: usize) -> f64 {
    let blocks = (n - m + 1) as f64;
    let m = m as f64;
    blocks * (m * m * m / 3.0) + 2.0 * blocks * m * m + 4.0 * blocks * m
}

/// The dominant `n m^3 / 3` term of [`flop_count`].
pub fn flop_leading_term(n: usize, m: usize) -> f64 {
    let m = m as f64;
    n as f64 * m * m * m / 3.0
}
