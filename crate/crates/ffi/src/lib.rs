//! C ABI over `vecchia-gp`.
//!
//! Datasets and plans are opaque handles created and destroyed through this
//! interface. Every fallible call returns a [`VecchiaStatus`]; on failure a
//! message is available from [`vecchia_last_error`] on the same thread.
//! Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vecchia_gp::exact::{exact_loglik, kl_vecchia};
use vecchia_gp::fit::{krige_predict, mle_estimate, FitConfig, Objective};
use vecchia_gp::geo::{Dataset, Location, Metric, Ordering};
use vecchia_gp::kernels::{bessel_kv, KernelFamily, KernelParams, KernelSpec};
use vecchia_gp::vecchia::{self as core_vecchia, flop_count, VecchiaPlan};
use vecchia_gp::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecchiaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeError = 3,
    NotPositiveDefinite = 4,
    /// The parameter point makes a conditioning block unusable.
    Infeasible = 5,
    GuardExceeded = 6,
    ParseError = 7,
    IoError = 8,
    /// A panic was caught at the boundary.
    Internal = 99,
}

/// Opaque dataset handle.
pub struct VecchiaDataset(Dataset);

/// Opaque ordering + neighbor plan handle.
pub struct VecchiaPlanHandle(VecchiaPlan);

pub const VECCHIA_METRIC_EUCLIDEAN: u32 = 0;
pub const VECCHIA_METRIC_GREAT_CIRCLE: u32 = 1;
pub const VECCHIA_ORDERING_RANDOM: u32 = 0;
pub const VECCHIA_ORDERING_MORTON: u32 = 1;
pub const VECCHIA_KERNEL_MATERN: u32 = 0;
pub const VECCHIA_KERNEL_POWEXP: u32 = 1;

/// Kernel family (`VECCHIA_KERNEL_*`) and parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VecchiaKernel {
    pub family: u32,
    pub sigma2: f64,
    pub beta: f64,
    pub nu: f64,
}

/// Settings for [`vecchia_estimate`]. `m == 0` selects the exact objective.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VecchiaFitOptions {
    pub m: usize,
    pub ordering: u32,
    pub seed: u64,
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    /// Nonzero entries mark `(sigma2, beta, nu)` as free.
    pub free: [u8; 3],
    pub tol: f64,
    pub max_evals: usize,
    pub max_dense_n: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VecchiaStatus {
    match e {
        Error::Domain(m) if m.starts_with(NULL_PREFIX) => VecchiaStatus::NullPointer,
        Error::Domain(_) | Error::Lookup { .. } | Error::Shape(_) | Error::Regression(_) | Error::Estimation(_) => {
            VecchiaStatus::InvalidArgument
        }
        Error::Size(_) => VecchiaStatus::SizeError,
        Error::NotPositiveDefinite { .. } | Error::Singular { .. } => VecchiaStatus::NotPositiveDefinite,
        Error::Infeasible { .. } => VecchiaStatus::Infeasible,
        Error::GuardExceeded { .. } => VecchiaStatus::GuardExceeded,
        Error::Parse { .. } => VecchiaStatus::ParseError,
        Error::Io(_) => VecchiaStatus::IoError,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<(), Error>) -> VecchiaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            VecchiaStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            VecchiaStatus::Internal
        }
    }
}

const NULL_PREFIX: &str = "null pointer: ";

fn null_error(what: &str) -> Error {
    Error::Domain(format!("{NULL_PREFIX}{what}"))
}

fn metric_of(kind: u32, radius: f64) -> Result<Metric, Error> {
    match kind {
        VECCHIA_METRIC_EUCLIDEAN => Ok(Metric::Euclidean),
        VECCHIA_METRIC_GREAT_CIRCLE => Ok(Metric::GreatCircle { radius }),
        other => Err(Error::Domain(format!("unknown metric {other}"))),
    }
}

fn ordering_of(kind: u32) -> Result<Ordering, Error> {
    match kind {
        VECCHIA_ORDERING_RANDOM => Ok(Ordering::Random),
        VECCHIA_ORDERING_MORTON => Ok(Ordering::Morton),
        other => Err(Error::Domain(format!("unknown ordering {other}"))),
    }
}

fn spec_of(k: &VecchiaKernel) -> Result<KernelSpec, Error> {
    let family = match k.family {
        VECCHIA_KERNEL_MATERN => KernelFamily::Matern,
        VECCHIA_KERNEL_POWEXP => KernelFamily::PowerExponential,
        other => return Err(Error::Domain(format!("unknown kernel family {other}"))),
    };
    Ok(KernelSpec::new(family, KernelParams::new(k.sigma2, k.beta, k.nu)?))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Error> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null_error(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Error> {
    p.as_ref().ok_or_else(|| null_error(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Error> {
    if p.is_null() {
        return Err(null_error(what));
    }
    p.write(v);
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn vecchia_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a dataset from coordinate and value arrays of length `n`.
///
/// # Safety
/// `x`, `y`, `values` must point to `n` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_dataset_new(
    x: *const f64,
    y: *const f64,
    values: *const f64,
    n: usize,
    metric: u32,
    radius: f64,
    out: *mut *mut VecchiaDataset,
) -> VecchiaStatus {
    guarded(|| {
        let xs = slice(x, n, "x")?;
        let ys = slice(y, n, "y")?;
        let vs = slice(values, n, "values")?;
        let locs = xs.iter().zip(ys).map(|(&a, &b)| Location::new(a, b)).collect();
        let ds = Dataset::new(locs, vs.to_vec(), metric_of(metric, radius)?)?;
        write(out, Box::into_raw(Box::new(VecchiaDataset(ds))), "out")
    })
}

/// Read an `x,y,value` (or `lon,lat,value` for great-circle) CSV file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_dataset_read_csv(
    path: *const c_char,
    metric: u32,
    radius: f64,
    out: *mut *mut VecchiaDataset,
) -> VecchiaStatus {
    guarded(|| {
        if path.is_null() {
            return Err(null_error("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::Domain("path is not UTF-8".into()))?;
        let ds = vecchia_gp::io::read_dataset(Path::new(p), metric_of(metric, radius)?)?;
        write(out, Box::into_raw(Box::new(VecchiaDataset(ds))), "out")
    })
}

/// # Safety
/// `ds` must come from a dataset constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vecchia_dataset_free(ds: *mut VecchiaDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of locations, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn vecchia_dataset_len(ds: *const VecchiaDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Order `ds` and find each point's `m` nearest predecessors.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_plan_new(
    ds: *const VecchiaDataset,
    m: usize,
    ordering: u32,
    seed: u64,
    out: *mut *mut VecchiaPlanHandle,
) -> VecchiaStatus {
    guarded(|| {
        let ds = deref(ds, "dataset")?;
        let plan = VecchiaPlan::build(&ds.0, m, ordering_of(ordering)?, seed)?;
        write(out, Box::into_raw(Box::new(VecchiaPlanHandle(plan))), "out")
    })
}

/// # Safety
/// `plan` must come from [`vecchia_plan_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vecchia_plan_free(plan: *mut VecchiaPlanHandle) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Copy the plan's ordering (new position -> original index) into `out`,
/// which must hold `len` entries with `len` equal to the dataset size.
///
/// # Safety
/// `plan` must be live; `out` must point to `len` writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn vecchia_plan_permutation(
    plan: *const VecchiaPlanHandle,
    out: *mut usize,
    len: usize,
) -> VecchiaStatus {
    guarded(|| {
        let plan = deref(plan, "plan")?;
        let order = plan.0.permutation().order();
        if len != order.len() {
            return Err(Error::Size(format!("buffer holds {len}, permutation has {}", order.len())));
        }
        if out.is_null() {
            return Err(null_error("out"));
        }
        ptr::copy_nonoverlapping(order.as_ptr(), out, len);
        Ok(())
    })
}

/// Vecchia log-likelihood of `ds` (in its original order) under `plan`.
///
/// # Safety
/// Handles must be live and `plan` built from `ds`; pointers writable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_loglik(
    ds: *const VecchiaDataset,
    plan: *const VecchiaPlanHandle,
    kernel: *const VecchiaKernel,
    out: *mut f64,
) -> VecchiaStatus {
    guarded(|| {
        let ds = deref(ds, "dataset")?;
        let plan = &deref(plan, "plan")?.0;
        let spec = spec_of(deref(kernel, "kernel")?)?;
        let ordered = plan.order(&ds.0)?;
        let ll = core_vecchia::vecchia_loglik(&ordered, plan, &spec)?;
        write(out, ll.total, "out")
    })
}

/// Exact dense log-likelihood; fails with `GUARD_EXCEEDED` above `max_n`.
///
/// # Safety
/// Handles must be live; pointers writable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_exact_loglik(
    ds: *const VecchiaDataset,
    kernel: *const VecchiaKernel,
    max_n: usize,
    out: *mut f64,
) -> VecchiaStatus {
    guarded(|| {
        let ds = deref(ds, "dataset")?;
        let spec = spec_of(deref(kernel, "kernel")?)?;
        write(out, exact_loglik(&ds.0, &spec, max_n)?, "out")
    })
}

/// KL divergence between the exact field over `ds`'s locations and its
/// Vecchia approximation under `plan`.
///
/// # Safety
/// Handles must be live and `plan` built from `ds`; pointers writable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_kl(
    ds: *const VecchiaDataset,
    plan: *const VecchiaPlanHandle,
    kernel: *const VecchiaKernel,
    max_n: usize,
    out: *mut f64,
) -> VecchiaStatus {
    guarded(|| {
        let ds = deref(ds, "dataset")?;
        let plan = &deref(plan, "plan")?.0;
        let spec = spec_of(deref(kernel, "kernel")?)?;
        let r = kl_vecchia(ds.0.locations(), ds.0.metric(), plan, &spec, max_n)?;
        write(out, r.kl, "out")
    })
}

/// Kriging predictions at `n_test` locations from the `m` nearest training
/// points. `mse_out` may be NULL; when `truth` is non-NULL the mean squared
/// error is written there.
///
/// # Safety
/// `train` must be live; arrays must hold `n_test` doubles.
#[no_mangle]
pub unsafe extern "C" fn vecchia_krige(
    train: *const VecchiaDataset,
    kernel: *const VecchiaKernel,
    test_x: *const f64,
    test_y: *const f64,
    n_test: usize,
    m: usize,
    truth: *const f64,
    predictions: *mut f64,
    mse_out: *mut f64,
) -> VecchiaStatus {
    guarded(|| {
        let train = deref(train, "train")?;
        let spec = spec_of(deref(kernel, "kernel")?)?;
        let xs = slice(test_x, n_test, "test_x")?;
        let ys = slice(test_y, n_test, "test_y")?;
        let test: Vec<Location> = xs.iter().zip(ys).map(|(&a, &b)| Location::new(a, b)).collect();
        let truth = if truth.is_null() {
            None
        } else {
            Some(slice(truth, n_test, "truth")?)
        };
        let r = krige_predict(&train.0, spec.params, spec.family, &test, m, truth)?;
        if n_test > 0 {
            if predictions.is_null() {
                return Err(null_error("predictions"));
            }
            ptr::copy_nonoverlapping(r.predictions.as_ptr(), predictions, n_test);
        }
        if let (Some(mse), false) = (r.mse, mse_out.is_null()) {
            mse_out.write(mse);
        }
        Ok(())
    })
}

/// Maximum-likelihood estimate starting from `kernel`'s parameters.
/// Writes the estimate into `theta_out` (`sigma2, beta, nu`) and the
/// maximized log-likelihood into `loglik_out`.
///
/// # Safety
/// Handles must be live; `theta_out` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn vecchia_estimate(
    ds: *const VecchiaDataset,
    kernel: *const VecchiaKernel,
    options: *const VecchiaFitOptions,
    theta_out: *mut f64,
    loglik_out: *mut f64,
) -> VecchiaStatus {
    guarded(|| {
        let ds = deref(ds, "dataset")?;
        let spec = spec_of(deref(kernel, "kernel")?)?;
        let o = deref(options, "options")?;
        let objective = if o.m == 0 {
            Objective::Exact
        } else {
            Objective::Vecchia {
                m: o.m,
                ordering: ordering_of(o.ordering)?,
                seed: o.seed,
            }
        };
        let mut cfg = FitConfig::new(objective, spec.params);
        for k in 0..3 {
            cfg.bounds[k] = (o.lower[k], o.upper[k]);
            cfg.free[k] = o.free[k] != 0;
        }
        cfg.tol = o.tol;
        cfg.max_evals = o.max_evals;
        cfg.max_dense_n = o.max_dense_n;
        let r = mle_estimate(&ds.0, &cfg, spec.family)?;
        if theta_out.is_null() {
            return Err(null_error("theta_out"));
        }
        ptr::copy_nonoverlapping(r.theta_hat.to_array().as_ptr(), theta_out, 3);
        write(loglik_out, r.loglik, "loglik_out")
    })
}

/// Modeled flops of one likelihood evaluation with `n` points and
/// conditioning size `m` (requires `n > m >= 1`; returns NaN otherwise).
#[no_mangle]
pub extern "C" fn vecchia_flop_count(n: usize, m: usize) -> f64 {
    if m == 0 || n <= m {
        return f64::NAN;
    }
    flop_count(n, m)
}

/// Covariance at distance `d` for `kernel`; NaN for invalid parameters.
///
/// # Safety
/// `kernel` must be readable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_covariance(kernel: *const VecchiaKernel, d: f64) -> f64 {
    match kernel.as_ref().map(spec_of) {
        Some(Ok(spec)) if d >= 0.0 => spec.cov(d),
        _ => f64::NAN,
    }
}

/// Modified Bessel function of the second kind `K_nu(x)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vecchia_bessel_kv(nu: f64, x: f64, out: *mut f64) -> VecchiaStatus {
    guarded(|| write(out, bessel_kv(nu, x)?, "out"))
}
