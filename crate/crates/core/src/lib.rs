//! Numerical core for oscillatory integrals driven by long-range dependent
//! Gaussian noise.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every deterministic
//! and seeded-random building block:
//!
//! * [`lrd`]: the moving-average kernel, its covariance and a multilevel
//!   sampler for the stationary Gaussian process `g`;
//! * [`hermite`]: Hermite polynomials, chaos expansions, Hermite rank and the
//!   bounded rank-`m` constructions used to build random coefficients;
//! * [`hermite_process`]: Hermite processes of order `m`, their Wiener
//!   integrals and the `Λ^H` norms;
//! * [`homogenize`]: the explicit solver of the 1D divergence-form problem,
//!   its homogenized limit and the corrector decomposition;
//! * [`limit`]: normalizations, oscillatory integrals and the variance oracles
//!   used to verify the limit theorems;
//! * [`stats`]: moments and distributional distances for Monte Carlo ensembles.
//!
//! IO, configuration files, threading and the command line live in the
//! `oscillab` crate.

#![no_std]
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod gauss_hermite;
pub mod hermite;
pub mod hermite_process;
pub mod homogenize;
pub mod limit;
pub mod lrd;
pub mod math;
pub mod quad;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use hermite::{CoefficientSampler, HermiteExpansion, RankedFunction, ScalarFn};
pub use hermite_process::{HermiteProcess, HermiteProcessConfig, IntegrandFn, ProcessPath};
pub use homogenize::{CorrectorDecomposition, Medium, ProblemSpec, SolutionPair, Source};
pub use lrd::{GaussianPath, KernelSpec, MovingAverage, SlowlyVarying};
