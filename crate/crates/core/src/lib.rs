//! Floquet spectra of the double-kicked top: operator construction, butterfly
//! sweeps, level-crossing census, multifractal box counting and the classical
//! spin map.

pub mod classical;
pub mod crossings;
pub mod error;
pub mod floquet;
pub mod multifractal;
pub mod su2;
pub mod sweep;

pub use error::{Error, Result};

/// Runs dense kernels single-threaded, so results do not depend on the size
/// of the worker pool. Parallelism then comes from independent tasks only.
pub fn sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}
