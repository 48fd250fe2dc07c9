//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness) so that the timing checks
//! do not share the machine with other tests. Exits nonzero if any
//! criterion that is expected to hold fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use clap::Parser;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vecchia_gp::batchla::{batch_potrf, batch_trsv, StridedMatrixBatch, StridedVectorBatch};
use vecchia_gp::cli::{run, unit_square, Cli};
use vecchia_gp::exact::{kl_vecchia, simulate_grf, DEFAULT_MAX_DENSE_N};
use vecchia_gp::fit::{krige_predict, mle_estimate, FitConfig, Objective};
use vecchia_gp::geo::{Dataset, Location, Metric, Ordering};
use vecchia_gp::kernels::{
    beta_from_effective_range, bessel_kv, effective_range_table, matern_cov, KernelFamily, KernelParams, KernelSpec,
};
use vecchia_gp::vecchia::{flop_count, vecchia_loglik, VecchiaPlan};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

// Oracle side: closed-form half-integer Matern and a nalgebra Cholesky.

fn matern_half_integer(d: f64, s2: f64, beta: f64, nu: f64) -> f64 {
    let u = d / beta;
    let poly = if nu == 0.5 {
        1.0
    } else if nu == 1.5 {
        1.0 + u
    } else if nu == 2.5 {
        1.0 + u + u * u / 3.0
    } else {
        panic!("not a half-integer order: {nu}")
    };
    s2 * poly * (-u).exp()
}

fn oracle_loglik(locs: &[Location], y: &[f64], s2: f64, beta: f64, nu: f64) -> f64 {
    let n = locs.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (locs[i], locs[j]);
        matern_half_integer(((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt(), s2, beta, nu)
    });
    let chol = k.cholesky().expect("oracle covariance is SPD");
    let l = chol.l();
    let z = l.solve_lower_triangular(&DVector::from_column_slice(y)).unwrap();
    let half_logdet: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    -half_logdet - 0.5 * z.norm_squared() - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sizes = [50, 200, 512];
    let nus = [0.5, 1.5, 2.5];
    let mut worst = 0.0f64;
    for cfg in 0..20 {
        let n = sizes[cfg % 3];
        let nu = nus[(cfg / 3) % 3];
        let ordering = if cfg % 2 == 0 { Ordering::Random } else { Ordering::Morton };
        // short and medium effective ranges keep the dense oracle well conditioned
        let range = [0.1, 0.3][rng.random_range(0..2)];
        let beta = beta_from_effective_range(range, nu).unwrap();
        let locs: Vec<Location> = (0..n).map(|_| Location::new(rng.random(), rng.random())).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ds = Dataset::new(locs.clone(), y.clone(), Metric::Euclidean).unwrap();
        let spec = KernelSpec::matern(1.0, beta, nu).unwrap();
        let plan = VecchiaPlan::build(&ds, n - 1, ordering, cfg as u64).unwrap();
        let v = vecchia_loglik(&plan.order(&ds).unwrap(), &plan, &spec).unwrap().total;
        let e = oracle_loglik(&locs, &y, 1.0, beta, nu);
        worst = worst.max((v - e).abs() / e.abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && secs < 30.0,
        format!("worst relative gap {worst:.2e} over 20 configs (bound 1e-8), {secs:.1}s (bound 30s)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    for &nu in &[0.5, 1.5, 2.5] {
        for &d in &[1e-4, 0.01, 0.1, 0.5, 1.0, 2.5, 7.0] {
            for &(s2, beta) in &[(1.0, 1.0), (2.3, 0.078809), (0.4, 0.3)] {
                let got = matern_cov(d, &KernelParams::new(s2, beta, nu).unwrap());
                worst = worst.max(rel(got, matern_half_integer(d, s2, beta, nu)));
            }
        }
    }
    for &x in &[0.01, 0.3, 1.0, 4.0, 20.0] {
        let k_half = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
        worst = worst.max(rel(bessel_kv(0.5, x).unwrap(), k_half));
        worst = worst.max(rel(bessel_kv(1.5, x).unwrap(), k_half * (1.0 + 1.0 / x)));
        worst = worst.max(rel(bessel_kv(2.5, x).unwrap(), k_half * (1.0 + 3.0 / x + 3.0 / (x * x))));
    }
    let expected = [
        (0.1, 0.5, 0.026270),
        (0.1, 1.5, 0.017512),
        (0.1, 2.5, 0.014290),
        (0.3, 0.5, 0.078809),
        (0.3, 1.5, 0.052537),
        (0.3, 2.5, 0.014290),
        (0.8, 0.5, 0.210158),
        (0.8, 1.5, 0.140098),
        (0.8, 2.5, 0.114318),
    ];
    let table = effective_range_table();
    let table_ok = table.len() == 9
        && expected.iter().all(|&(r, nu, b)| {
            beta_from_effective_range(r, nu).ok() == Some(b) && table.contains(&(r, nu, b))
        });
    outcome(
        worst <= 1e-12 && table_ok,
        format!("worst relative error {worst:.2e} (bound 1e-12); nine table entries verbatim: {table_ok}"),
    )
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let n = 2000;
    let locs = unit_square(n, 3);
    let spec = KernelSpec::matern(1.0, 0.026270, 0.5).unwrap();
    let zeros = Dataset::zeros(locs.clone(), Metric::Euclidean).unwrap();
    let perm = Ordering::Random.permutation(&locs, 3);
    let kl_at = |m: usize| {
        let plan = VecchiaPlan::with_permutation(&zeros, m, perm.clone()).unwrap();
        kl_vecchia(&locs, Metric::Euclidean, &plan, &spec, DEFAULT_MAX_DENSE_N).unwrap().kl
    };
    let kls: Vec<f64> = [10, 30, 60].iter().map(|&m| kl_at(m)).collect();
    let full = kl_at(n - 1);
    let secs = t0.elapsed().as_secs_f64();
    let ok = kls[0] > kls[1] && kls[1] > kls[2] && full.abs() <= 1e-8 && secs < 120.0;
    outcome(
        ok,
        format!(
            "KL(10)={:.6e} KL(30)={:.6e} KL(60)={:.6e} KL(n-1)={full:.2e}, {secs:.1}s",
            kls[0], kls[1], kls[2]
        ),
    )
}

fn criterion_4() -> Outcome {
    let n = 4096;
    let locs = unit_square(n, 4);
    let spec = KernelSpec::matern(1.0, beta_from_effective_range(0.3, 0.5).unwrap(), 0.5).unwrap();
    let zeros = Dataset::zeros(locs.clone(), Metric::Euclidean).unwrap();
    let kl = |ordering: Ordering| {
        let plan = VecchiaPlan::build(&zeros, 30, ordering, 4).unwrap();
        kl_vecchia(&locs, Metric::Euclidean, &plan, &spec, DEFAULT_MAX_DENSE_N).unwrap().kl
    };
    let (random, morton) = (kl(Ordering::Random), kl(Ordering::Morton));
    outcome(random <= morton, format!("KL(random)={random:.6e} KL(morton)={morton:.6e}"))
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let n = 2000;
    let locs = unit_square(n, 5);
    let truth = KernelSpec::matern(1.0, 0.078809, 0.5).unwrap();
    let y = simulate_grf(&locs, Metric::Euclidean, &truth, 55, DEFAULT_MAX_DENSE_N).unwrap();
    let ds = Dataset::new(locs, y, Metric::Euclidean).unwrap();
    let init = KernelParams::new(0.5, 0.2, 0.5).unwrap();
    let fit = |objective| {
        let mut cfg = FitConfig::new(objective, init);
        cfg.tol = 1e-10;
        cfg.max_evals = 1000;
        mle_estimate(&ds, &cfg, KernelFamily::Matern).unwrap()
    };
    let vecchia = fit(Objective::Vecchia {
        m: 60,
        ordering: Ordering::Random,
        seed: 5,
    });
    let exact = fit(Objective::Exact);
    let secs = t0.elapsed().as_secs_f64();
    let (v, e) = (vecchia.theta_hat, exact.theta_hat);
    let rs = ((v.sigma_sq - e.sigma_sq) / e.sigma_sq).abs();
    let rb = ((v.beta - e.beta) / e.beta).abs();
    outcome(
        rs <= 0.05 && rb <= 0.05 && secs < 600.0,
        format!(
            "vecchia ({:.5}, {:.6}) exact ({:.5}, {:.6}): rel gaps {rs:.3e}, {rb:.3e} (bound 5e-2), {secs:.1}s",
            v.sigma_sq, v.beta, e.sigma_sq, e.beta
        ),
    )
}

fn criterion_6() -> Outcome {
    let (n_train, n_test) = (2000, 200);
    let locs = unit_square(n_train + n_test, 6);
    let spec = KernelSpec::matern(1.0, 0.078809, 0.5).unwrap();
    let y = simulate_grf(&locs, Metric::Euclidean, &spec, 66, DEFAULT_MAX_DENSE_N).unwrap();
    let train = Dataset::new(locs[..n_train].to_vec(), y[..n_train].to_vec(), Metric::Euclidean).unwrap();
    let test = &locs[n_train..];
    let truth = &y[n_train..];
    let mse = |m| {
        krige_predict(&train, spec.params, spec.family, test, m, Some(truth))
            .unwrap()
            .mse
            .unwrap()
    };
    let (near, full) = (mse(60), mse(n_train));
    let rel = (near - full).abs() / full;
    outcome(
        rel <= 0.01,
        format!("mse(m=60)={near:.6e} mse(full)={full:.6e} rel gap {rel:.3e} (bound 1e-2)"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_rec, mut worst_res) = (0.0f64, 0.0f64);
    let mut instances = 0;
    for &dim in &[10usize, 30, 60, 120] {
        let count = 250;
        let mut a = StridedMatrixBatch::zeros(count, dim);
        let mut b = StridedVectorBatch::zeros(count, dim);
        for k in 0..count {
            let g = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
            let spd = &g * g.transpose() + DMatrix::identity(dim, dim) * (0.1 * dim as f64);
            for j in 0..dim {
                for i in 0..dim {
                    a.set(k, i, j, spd[(i, j)]);
                }
                b.vector_mut(k)[j] = rng.random_range(-1.0..1.0);
            }
        }
        let original = a.clone();
        batch_potrf(&mut a).unwrap();
        let x = batch_trsv(&a, &b).unwrap();
        for k in 0..count {
            let l = DMatrix::from_fn(dim, dim, |i, j| if i >= j { a.get(k, i, j) } else { 0.0 });
            let orig = DMatrix::from_fn(dim, dim, |i, j| original.get(k, i, j));
            worst_rec = worst_rec.max((&l * l.transpose() - &orig).norm() / orig.norm());
            let xv = DVector::from_column_slice(x.vector(k));
            let bv = DVector::from_column_slice(b.vector(k));
            let l_inf = (0..dim).map(|i| l.row(i).abs().sum()).fold(0.0, f64::max);
            let scale = l_inf * xv.amax() + bv.amax();
            worst_res = worst_res.max((&l * &xv - &bv).amax() / scale);
            instances += 1;
        }
    }
    outcome(
        worst_rec <= 1e-12 && worst_res <= 1e-12,
        format!("{instances} instances: worst reconstruction {worst_rec:.2e}, worst scaled residual {worst_res:.2e} (bound 1e-12)"),
    )
}

fn bench_json(n: usize, m: usize) -> serde_json::Value {
    let args = ["vecchia", "bench", "--n", &n.to_string(), "--m", &m.to_string(), "--reps", "5", "--seed", "8"];
    let out = run(&Cli::try_parse_from(args).unwrap()).unwrap();
    serde_json::from_str(&out).unwrap()
}

fn criterion_8() -> Outcome {
    let m = 30;
    let mut times = Vec::new();
    let mut flops_ok = true;
    for &n in &[50_000usize, 100_000, 200_000] {
        let r = bench_json(n, m);
        times.push(r["total_seconds"].as_f64().unwrap());
        let blocks = (n - m + 1) as f64;
        let mf = m as f64;
        let formula = blocks * mf.powi(3) / 3.0 + 2.0 * blocks * mf * mf + 4.0 * blocks * mf;
        let reported = r["model_flops"].as_f64().unwrap();
        flops_ok &= reported == flop_count(n, m) && (reported - formula).abs() <= 1e-9 * formula;
    }
    let ratios = [times[1] / times[0], times[2] / times[1]];
    let ok = flops_ok && ratios.iter().all(|r| (1.5..=2.5).contains(r));
    outcome(
        ok,
        format!(
            "times {:.3}s {:.3}s {:.3}s, ratios {:.2} {:.2} (bound [1.5, 2.5]); model_flops matches formula: {flops_ok}",
            times[0], times[1], times[2], ratios[0], ratios[1]
        ),
    )
}

fn vecchia_cmd(args: &[&str], threads: Option<&str>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vecchia"));
    if let Some(t) = threads {
        cmd.args(["--threads", t]);
    }
    let out = cmd.args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

const TIMING_FIELDS: [&str; 6] = [
    "assembly_seconds",
    "factorization_seconds",
    "reduction_seconds",
    "total_seconds",
    "preprocessing_seconds",
    "achieved_gflops",
];

fn criterion_9(dir: &Path) -> (Outcome, Outcome) {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let (data, test, pred) = (p("data.csv"), p("test.csv"), p("pred.csv"));
    // A labelled test file from a second draw.
    vecchia_cmd(&["generate", "--n", "60", "--seed", "90", "--out", &test], None);

    let files: Vec<(&str, Vec<&str>, Option<&str>)> = vec![
        ("generate", vec!["generate", "--n", "400", "--seed", "9", "--out", &data], Some(data.as_str())),
        ("likelihood", vec!["likelihood", "--input", &data, "--m", "20", "--with-exact"], None),
        ("kl", vec!["kl", "--n", "400", "--m-list", "5,20", "--orderings", "random,morton"], None),
        ("estimate", vec!["estimate", "--input", &data, "--m", "20", "--max-evals", "150"], None),
        (
            "predict",
            vec!["predict", "--train", &data, "--test", &test, "--m", "20", "--out", &pred],
            Some(pred.as_str()),
        ),
    ];
    let mut mismatched = Vec::new();
    for (name, args, file) in &files {
        let mut reference: Option<(Vec<u8>, Vec<u8>)> = None;
        for threads in [None, Some("1"), Some("4"), None] {
            let stdout = vecchia_cmd(args, threads);
            let written = file.map(|f| std::fs::read(f).unwrap()).unwrap_or_default();
            match &reference {
                None => reference = Some((stdout, written)),
                Some(r) => {
                    if *r != (stdout, written) {
                        mismatched.push(*name);
                    }
                }
            }
        }
    }
    mismatched.dedup();
    let main = outcome(
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "generate, likelihood, kl, estimate, predict byte-identical across 4 runs (default, 1, 4 threads)".to_string()
        } else {
            format!("outputs differ for {mismatched:?}")
        },
    );

    let bench_args = ["bench", "--n", "20000", "--m", "20", "--reps", "2", "--seed", "9"];
    let runs: Vec<serde_json::Value> = [None, Some("1"), Some("4")]
        .into_iter()
        .map(|t| serde_json::from_slice(&vecchia_cmd(&bench_args, t)).unwrap())
        .collect();
    let strip = |v: &serde_json::Value| {
        let mut v = v.clone();
        for f in TIMING_FIELDS {
            v.as_object_mut().unwrap().remove(f);
        }
        v
    };
    let untimed_same = runs.iter().all(|r| strip(r) == strip(&runs[0]));
    let bytes_same = runs.iter().all(|r| r == &runs[0]);
    let bench = outcome(
        bytes_same,
        format!(
            "bench byte-identical: {bytes_same}; fields other than measured wall times identical: {untimed_same}"
        ),
    );
    (main, bench)
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut failed = Vec::new();
    let mut line = |id: &str, o: Outcome, expected: bool| {
        let tag = if o.ok { "PASS" } else { "FAIL" };
        let note = if !o.ok && !expected { " [known limitation]" } else { "" };
        println!("criterion {id}: {tag}{note} - {}", o.detail);
        if !o.ok && expected {
            failed.push(id.to_string());
        }
    };
    line("1", criterion_1(), true);
    line("2", criterion_2(), true);
    line("3", criterion_3(), true);
    line("4", criterion_4(), true);
    line("5", criterion_5(), true);
    line("6", criterion_6(), true);
    line("7", criterion_7(), true);
    line("8", criterion_8(), true);
    let (c9, c9_bench) = criterion_9(dir.path());
    line("9", c9, true);
    // Wall-clock fields cannot repeat bit for bit.
    line("9 (bench)", c9_bench, false);
    if !failed.is_empty() {
        eprintln!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
