//! Parameter estimation, detrending and kriging.

mod krige;
mod regress;
pub mod simplex;

pub use krige::{krige_predict, PredictionReport};
pub use regress::{ols_detrend, sqrt_transform, Detrended};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_loglik, DEFAULT_MAX_DENSE_N};
use crate::geo::{Dataset, Ordering};
use crate::kernels::{KernelFamily, KernelParams, KernelSpec};
use crate::vecchia::{vecchia_loglik, VecchiaPlan};
use simplex::{maximize, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Vecchia { m: usize, ordering: Ordering, seed: u64 },
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub objective: Objective,
    /// `[lo, hi]` for `(sigma^2, beta, nu)`.
    pub bounds: [(f64, f64); 3],
    pub init: KernelParams,
    /// Which of `(sigma^2, beta, nu)` are optimized; the rest stay at `init`.
    pub free: [bool; 3],
    pub tol: f64,
    pub max_evals: usize,
    pub max_dense_n: usize,
}

impl FitConfig {
    /// Defaults: `sigma^2` and `beta` free, `nu` held at its initial value.
    pub fn new(objective: Objective, init: KernelParams) -> Self {
        Self {
            objective,
            bounds: [(1e-3, 100.0), (1e-4, 10.0), (0.05, 5.0)],
            init,
            free: [true, true, false],
            tol: 1e-5,
            max_evals: 500,
            max_dense_n: DEFAULT_MAX_DENSE_N,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.init.validate()?;
        let init = self.init.to_array();
        for (k, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
                return Err(Error::Domain(format!("bad bounds [{lo}, {hi}] for parameter {k}")));
            }
            if init[k] < lo || init[k] > hi {
                return Err(Error::Domain(format!(
                    "initial value {} of parameter {k} outside [{lo}, {hi}]",
                    init[k]
                )));
            }
        }
        if !self.free.iter().any(|&f| f) {
            return Err(Error::Domain("no free parameters".into()));
        }
        if !(self.tol >= 0.0) || self.max_evals == 0 {
            return Err(Error::Domain("tol must be >= 0 and max_evals > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: KernelParams,
    pub loglik: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Log-likelihood as a function of the kernel parameters, with the
/// ordering and neighbor search done once up front.
pub struct LikelihoodObjective {
    family: KernelFamily,
    kind: Prepared,
}

enum Prepared {
    Vecchia { ordered: Dataset, plan: Box<VecchiaPlan> },
    Exact { data: Dataset, max_n: usize },
}

impl LikelihoodObjective {
    pub fn new(train: &Dataset, objective: Objective, family: KernelFamily, max_dense_n: usize) -> Result<Self> {
        let kind = match objective {
            Objective::Vecchia { m, ordering, seed } => {
                if train.len() <= m {
                    return Err(Error::Size(format!(
                        "Vecchia objective needs n > m, got n={}, m={m}",
                        train.len()
                    )));
                }
                let plan = VecchiaPlan::build(train, m, ordering, seed)?;
                Prepared::Vecchia {
                    ordered: plan.order(train)?,
                    plan: Box::new(plan),
                }
            }
            Objective::Exact => {
                if train.len() > max_dense_n {
                    return Err(Error::GuardExceeded {
                        n: train.len(),
                        limit: max_dense_n,
                    });
                }
                Prepared::Exact {
                    data: train.clone(),
                    max_n: max_dense_n,
                }
            }
        };
        Ok(Self { family, kind })
    }

    /// Log-likelihood at `params`; `Err(Infeasible)` and non-PD failures
    /// mean the point is outside the feasible region.
    pub fn eval(&self, params: KernelParams) -> Result<f64> {
        let spec = KernelSpec::new(self.family, params);
        match &self.kind {
            Prepared::Vecchia { ordered, plan } => Ok(vecchia_loglik(ordered, plan, &spec)?.total),
            Prepared::Exact { data, max_n } => exact_loglik(data, &spec, *max_n),
        }
    }

    /// Like [`eval`](Self::eval) but infeasible points map to `-inf`.
    pub fn eval_or_neg_inf(&self, params: KernelParams) -> f64 {
        match self.eval(params) {
            Ok(v) if v.is_finite() => v,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Maximum-likelihood estimate of the free kernel parameters.
///
/// The simplex search runs on log-parameters, so the box `[lo, hi]` maps to
/// `[ln lo, ln hi]` and steps are relative.
pub fn mle_estimate(train: &Dataset, config: &FitConfig, family: KernelFamily) -> Result<FitResult> {
    config.validate()?;
    let objective = LikelihoodObjective::new(train, config.objective, family, config.max_dense_n)?;
    let init = config.init.to_array();
    let free: Vec<usize> = (0..3).filter(|&k| config.free[k]).collect();

    let to_params = |u: &[f64]| {
        let mut a = init;
        for (&k, &uk) in free.iter().zip(u) {
            a[k] = uk.exp().clamp(config.bounds[k].0, config.bounds[k].1);
        }
        KernelParams::from_array(a)
    };
    let u0: Vec<f64> = free.iter().map(|&k| init[k].ln()).collect();
    let lo: Vec<f64> = free.iter().map(|&k| config.bounds[k].0.ln()).collect();
    let hi: Vec<f64> = free.iter().map(|&k| config.bounds[k].1.ln()).collect();
    let opts = SimplexOptions {
        tol: config.tol,
        max_evals: config.max_evals,
        ..Default::default()
    };
    let res = maximize(|u| objective.eval_or_neg_inf(to_params(u)), &u0, &lo, &hi, &opts)
        .ok_or_else(|| Error::Estimation("no feasible point in the initial simplex".into()))?;
    Ok(FitResult {
        theta_hat: to_params(&res.x),
        loglik: res.value,
        evaluations: res.evaluations,
        converged: res.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Location, Metric};

    #[test]
    fn surrogate_objective_optimum() {
        let f = |x: &[f64]| -(x[0] - 2.0).powi(2);
        let r = maximize(f, &[0.5], &[0.1], &[10.0], &SimplexOptions {
            tol: 1e-10,
            ..Default::default()
        })
        .unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn config_validation() {
        let init = KernelParams::new(1.0, 0.1, 0.5).unwrap();
        let mut c = FitConfig::new(Objective::Exact, init);
        assert!(c.validate().is_ok());
        c.bounds[1] = (0.2, 1.0);
        assert!(c.validate().is_err());
        c.bounds[1] = (0.0, 1.0);
        assert!(c.validate().is_err());
        let mut c = FitConfig::new(Objective::Exact, init);
        c.free = [false; 3];
        assert!(c.validate().is_err());
    }

    #[test]
    fn vecchia_objective_needs_n_above_m() {
        let ds = Dataset::zeros(vec![Location::new(0.0, 0.0), Location::new(1.0, 0.0)], Metric::Euclidean).unwrap();
        let init = KernelParams::new(1.0, 0.1, 0.5).unwrap();
        let c = FitConfig::new(
            Objective::Vecchia {
                m: 2,
                ordering: Ordering::Random,
                seed: 0,
            },
            init,
        );
        assert!(matches!(mle_estimate(&ds, &c, KernelFamily::Matern), Err(Error::Size(_))));
    }
}
