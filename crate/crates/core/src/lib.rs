//! Vecchia approximation of Gaussian-process log-likelihoods computed over
//! batches of small dense matrices.
//!
//! The pipeline is: order the locations ([`geo::random_ordering`] or
//! [`geo::morton_ordering`]), find each location's `m` nearest predecessors
//! ([`geo::nearest_neighbors`]), assemble a strided batch of conditioning
//! covariances ([`vecchia::assemble`]), then factor, solve and reduce the
//! batch into a log-likelihood ([`vecchia::vecchia_loglik`]).
//!
//! [`exact`] holds a dense oracle for the full Gaussian likelihood and the
//! KL-divergence accuracy metric; [`fit`] wraps both objectives in a bounded
//! simplex maximizer and provides kriging prediction.

pub mod batchla;
pub mod cli;
pub mod error;
pub mod exact;
pub mod fit;
pub mod geo;
pub mod io;
pub mod kernels;
pub mod vecchia;

pub use error::{Error, Result};
pub use geo::{Dataset, Location, Metric, NeighborTable, Permutation};
pub use kernels::{KernelFamily, KernelParams, KernelSpec};
pub use vecchia::{LogLikResult, VecchiaPlan};
