//! Command-line front end. Each subcommand returns the text it prints on
//! stdout; files named with `--out` are written as a side effect.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exact_loglik, kl_vecchia, simulate_grf, standard_normals, DEFAULT_MAX_DENSE_N};
use crate::fit::{krige_predict, mle_estimate, FitConfig, Objective};
use crate::geo::{Dataset, Location, Metric, Ordering, EARTH_RADIUS_KM};
use crate::io::{fmt_f64, read_dataset, read_table, write_dataset, write_predictions};
use crate::kernels::{KernelFamily, KernelParams, KernelSpec};
use crate::vecchia::{assemble, flop_count, vecchia_loglik, VecchiaPlan};

#[derive(Debug, Parser)]
#[command(name = "vecchia", version, about = "Batched Vecchia Gaussian-process likelihoods")]
pub struct Cli {
    /// Worker threads for batched kernels (results do not depend on it).
    /// Defaults to all available cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a Gaussian random field on uniform random unit-square locations.
    Generate(GenerateArgs),
    /// Vecchia (and optionally exact) log-likelihood of a dataset.
    Likelihood(LikelihoodArgs),
    /// KL divergence of the Vecchia approximation over conditioning sizes.
    Kl(KlArgs),
    /// Maximum-likelihood estimation of kernel parameters.
    Estimate(EstimateArgs),
    /// Kriging prediction at test locations.
    Predict(PredictArgs),
    /// Time the phases of one likelihood evaluation.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Matern,
    Powexp,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Matern => KernelFamily::Matern,
            KernelArg::Powexp => KernelFamily::PowerExponential,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum, default_value = "matern")]
    pub kernel: KernelArg,
    /// Variance sigma^2.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Range beta.
    #[arg(long, default_value_t = 0.078809)]
    pub beta: f64,
    /// Smoothness nu (the exponent for powexp).
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,
}

impl KernelArgs {
    pub fn spec(&self) -> Result<KernelSpec> {
        Ok(KernelSpec::new(
            self.kernel.into(),
            KernelParams::new(self.sigma2, self.beta, self.nu)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderingArg {
    Random,
    Morton,
}

impl From<OrderingArg> for Ordering {
    fn from(o: OrderingArg) -> Self {
        match o {
            OrderingArg::Random => Ordering::Random,
            OrderingArg::Morton => Ordering::Morton,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Gcd,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Distance metric; gcd expects `lon,lat,value` input in degrees.
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
    /// Sphere radius for gcd, in output distance units (default: km).
    #[arg(long, default_value_t = EARTH_RADIUS_KM)]
    pub radius: f64,
}

impl MetricArgs {
    pub fn metric(&self) -> Result<Metric> {
        match self.metric {
            MetricArg::Euclidean => Ok(Metric::Euclidean),
            MetricArg::Gcd => {
                if !(self.radius > 0.0) || !self.radius.is_finite() {
                    return Err(Error::Domain(format!("radius must be positive, got {}", self.radius)));
                }
                Ok(Metric::GreatCircle { radius: self.radius })
            }
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_DENSE_N)]
    pub max_dense_n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct LikelihoodArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Conditioning size.
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub ordering: OrderingArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Also evaluate the exact dense log-likelihood.
    #[arg(long)]
    pub with_exact: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_DENSE_N)]
    pub max_dense_n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct KlArgs {
    /// Locations CSV; when omitted, `--n` uniform unit-square points are drawn.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Seed for generated locations and for random ordering.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated conditioning sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,30,60")]
    pub m_list: Vec<usize>,
    /// Comma-separated orderings.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "random")]
    pub orderings: Vec<OrderingArg>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_DENSE_N)]
    pub max_dense_n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Conditioning size of the Vecchia objective.
    #[arg(long, default_value_t = 60)]
    pub m: usize,
    /// Maximize the exact dense likelihood instead.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_enum, default_value = "random")]
    pub ordering: OrderingArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Kernel family and starting parameters.
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Also estimate the smoothness (or exponent) parameter.
    #[arg(long)]
    pub free_nu: bool,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_evals: usize,
    /// Bounds as `lo,hi` for sigma^2.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1e-3, 100.0])]
    pub sigma2_bounds: Vec<f64>,
    /// Bounds as `lo,hi` for beta.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1e-4, 10.0])]
    pub beta_bounds: Vec<f64>,
    /// Bounds as `lo,hi` for nu.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.05, 5.0])]
    pub nu_bounds: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_DENSE_N)]
    pub max_dense_n: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Training data CSV.
    #[arg(long)]
    pub train: PathBuf,
    /// Test locations CSV; a value column, if present, is used as truth.
    #[arg(long)]
    pub test: PathBuf,
    /// Neighbors per prediction; values >= n_train use the whole training set.
    #[arg(long, default_value_t = 60)]
    pub m: usize,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Predictions CSV (`x,y,prediction`); the summary JSON goes to stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    pub ordering: OrderingArg,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

/// Uniform points on the unit square.
pub fn unit_square(n: usize, seed: u64) -> Vec<Location> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Location::new(rng.random::<f64>(), rng.random::<f64>()))
        .collect()
}

/// Seed of the field draws for `generate`, kept apart from the location seed.
fn field_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<String> {
    if a.n == 0 {
        return Err(Error::Size("n must be at least 1".into()));
    }
    if a.n > a.max_dense_n {
        return Err(Error::GuardExceeded {
            n: a.n,
            limit: a.max_dense_n,
        });
    }
    let spec = a.kernel.spec()?;
    let locs = unit_square(a.n, a.seed);
    let y = simulate_grf(&locs, Metric::Euclidean, &spec, field_seed(a.seed), a.max_dense_n)?;
    let ds = Dataset::new(locs, y, Metric::Euclidean)?;
    let mut buf = Vec::new();
    write_dataset(&mut buf, &ds)?;
    match &a.out {
        Some(path) => {
            std::fs::write(path, &buf)?;
            Ok(String::new())
        }
        None => Ok(String::from_utf8(buf).expect("ascii")),
    }
}

#[derive(Debug, Serialize)]
pub struct LikelihoodReport {
    pub n: usize,
    pub m: usize,
    pub ordering: String,
    pub vecchia_ll: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_ll: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_diff: Option<f64>,
}

pub fn cmd_likelihood(a: &LikelihoodArgs) -> Result<String> {
    let metric = a.metric.metric()?;
    let ds = read_dataset(&a.input, metric)?;
    if a.m == 0 || a.m >= ds.len() {
        return Err(Error::Size(format!("need 1 <= m < n, got m={}, n={}", a.m, ds.len())));
    }
    let spec = a.kernel.spec()?;
    let ordering: Ordering = a.ordering.into();
    let plan = VecchiaPlan::build(&ds, a.m, ordering, a.seed)?;
    let vecchia_ll = vecchia_loglik(&plan.order(&ds)?, &plan, &spec)?.total;
    let exact_ll = if a.with_exact {
        Some(exact_loglik(&ds, &spec, a.max_dense_n)?)
    } else {
        None
    };
    Ok(to_json(&LikelihoodReport {
        n: ds.len(),
        m: a.m,
        ordering: ordering.name().to_string(),
        vecchia_ll,
        exact_ll,
        abs_diff: exact_ll.map(|e| (e - vecchia_ll).abs()),
    }))
}

pub fn cmd_kl(a: &KlArgs) -> Result<String> {
    let metric = a.metric.metric()?;
    let locations = match &a.input {
        Some(path) => read_table(path, metric)?.locations,
        None => {
            if metric != Metric::Euclidean {
                return Err(Error::Domain("generated locations are planar; use --metric euclidean".into()));
            }
            unit_square(a.n, a.seed)
        }
    };
    if locations.len() > a.max_dense_n {
        return Err(Error::GuardExceeded {
            n: locations.len(),
            limit: a.max_dense_n,
        });
    }
    let spec = a.kernel.spec()?;
    let base = Dataset::zeros(locations.clone(), metric)?;
    let mut out = String::from("ordering,m,kl,exact_ll0,vecchia_ll0\n");
    for &ord in &a.orderings {
        let ordering: Ordering = ord.into();
        let perm = ordering.permutation(&locations, a.seed);
        for &m in &a.m_list {
            if m == 0 || m >= locations.len() {
                return Err(Error::Size(format!(
                    "conditioning size {m} must satisfy 1 <= m < n = {}",
                    locations.len()
                )));
            }
            let plan = VecchiaPlan::with_permutation(&base, m, perm.clone())?.with_ordering_name(ordering.name());
            let r = kl_vecchia(&locations, metric, &plan, &spec, a.max_dense_n)?;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.ordering,
                r.m,
                fmt_f64(r.kl),
                fmt_f64(r.exact_ll0),
                fmt_f64(r.vecchia_ll0)
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub theta_hat: KernelParams,
    pub loglik: f64,
    pub evaluations: usize,
    pub converged: bool,
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<String> {
    let metric = a.metric.metric()?;
    let ds = read_dataset(&a.input, metric)?;
    let spec = a.kernel.spec()?;
    let objective = if a.exact {
        Objective::Exact
    } else {
        Objective::Vecchia {
            m: a.m,
            ordering: a.ordering.into(),
            seed: a.seed,
        }
    };
    let mut cfg = FitConfig::new(objective, spec.params);
    let pair = |v: &[f64]| (v[0], v[1]);
    cfg.bounds = [pair(&a.sigma2_bounds), pair(&a.beta_bounds), pair(&a.nu_bounds)];
    cfg.free = [true, true, a.free_nu];
    cfg.tol = a.tol;
    cfg.max_evals = a.max_evals;
    cfg.max_dense_n = a.max_dense_n;
    let r = mle_estimate(&ds, &cfg, spec.family)?;
    Ok(to_json(&EstimateReport {
        theta_hat: r.theta_hat,
        loglik: r.loglik,
        evaluations: r.evaluations,
        converged: r.converged,
    }))
}

#[derive(Debug, Serialize)]
pub struct PredictSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub m: usize,
    pub mse: Option<f64>,
}

pub fn cmd_predict(a: &PredictArgs) -> Result<String> {
    let metric = a.metric.metric()?;
    let train = read_dataset(&a.train, metric)?;
    let test = read_table(&a.test, metric)?;
    let spec = a.kernel.spec()?;
    let r = krige_predict(
        &train,
        spec.params,
        spec.family,
        &test.locations,
        a.m,
        test.values.as_deref(),
    )?;
    let mut buf = Vec::new();
    write_predictions(&mut buf, &test.locations, &r.predictions)?;
    std::fs::write(&a.out, &buf)?;
    Ok(to_json(&PredictSummary {
        n_train: train.len(),
        n_test: test.locations.len(),
        m: a.m.min(train.len()),
        mse: r.mse,
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub m: usize,
    pub reps: usize,
    /// Median wall time of covariance generation into the batch.
    pub assembly_seconds: f64,
    /// Median wall time of batched Cholesky plus both triangular solves.
    pub factorization_seconds: f64,
    /// Median wall time of dot products and the log-density reduction.
    pub reduction_seconds: f64,
    pub total_seconds: f64,
    /// Ordering and neighbor search, done once outside the timed loop.
    pub preprocessing_seconds: f64,
    pub model_flops: f64,
    /// `model_flops` over the median numeric time (factorization + reduction).
    pub achieved_gflops: f64,
    pub loglik: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Time `reps` likelihood evaluations on uniform locations with
/// standard-normal observations.
pub fn run_bench(a: &BenchArgs) -> Result<BenchReport> {
    if a.reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }
    if a.m == 0 || a.m >= a.n {
        return Err(Error::Size(format!("need 1 <= m < n, got m={}, n={}", a.m, a.n)));
    }
    let spec = a.kernel.spec()?;
    let locs = unit_square(a.n, a.seed);
    let y = standard_normals(a.n, field_seed(a.seed));
    let ds = Dataset::new(locs, y, Metric::Euclidean)?;

    let t0 = Instant::now();
    let plan = VecchiaPlan::build(&ds, a.m, a.ordering.into(), a.seed)?;
    let ordered = plan.order(&ds)?;
    let preprocessing_seconds = t0.elapsed().as_secs_f64();

    let (mut ta, mut tf, mut tr) = (Vec::new(), Vec::new(), Vec::new());
    let mut loglik = f64::NAN;
    for _ in 0..a.reps {
        let t = Instant::now();
        let mut ws = assemble(&ordered, &plan, &spec)?;
        ta.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        ws.factor_and_solve()?;
        tf.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        let r = ws.reduce()?;
        tr.push(t.elapsed().as_secs_f64());
        loglik = r.total;
        drop(ws);
    }
    let assembly_seconds = median(&mut ta);
    let factorization_seconds = median(&mut tf);
    let reduction_seconds = median(&mut tr);
    let model_flops = flop_count(a.n, a.m);
    let numeric = (factorization_seconds + reduction_seconds).max(f64::MIN_POSITIVE);
    Ok(BenchReport {
        n: a.n,
        m: a.m,
        reps: a.reps,
        assembly_seconds,
        factorization_seconds,
        reduction_seconds,
        total_seconds: assembly_seconds + factorization_seconds + reduction_seconds,
        preprocessing_seconds,
        model_flops,
        achieved_gflops: model_flops / numeric / 1e9,
        loglik,
    })
}

pub fn cmd_bench(a: &BenchArgs) -> Result<String> {
    Ok(to_json(&run_bench(a)?))
}

/// Run a parsed command line, honoring `--threads`.
pub fn run(cli: &Cli) -> Result<String> {
    let exec = || match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Likelihood(a) => cmd_likelihood(a),
        Command::Kl(a) => cmd_kl(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match cli.threads {
        Some(t) => {
            if t == 0 {
                return Err(Error::Domain("--threads must be at least 1".into()));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Domain(e.to_string()))?;
            pool.install(exec)
        }
        None => exec(),
    }
}

/// Process exit code for an error: 2 for infeasible parameters, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible { .. } | Error::NotPositiveDefinite { .. } => 2,
        _ => 1,
    }
}
