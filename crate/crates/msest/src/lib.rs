//! Estimation of drift and diffusion parameters in coarse-grained SDEs
//! from ensembles of short trajectories.
//!
//! The toolkit targets effective (homogenized) dynamics of the form
//!
//! ```text
//! dX_t = f(X_t; theta) dt + sqrt(g(X_t; sigma)) dW_t
//! ```
//!
//! where `f` and `g` are linear in their parameters (monomial bases here).
//! Parameters are recovered in two steps from an ensemble of `N` paths per
//! initial condition, `m` initial conditions:
//!
//! 1. drift, from the martingale identity
//!    `E(x_t - xi) = int_0^t E f(x_s) ds`,
//! 2. diffusion, from the Ito isometry applied to the residual
//!    `E (x_t - xi - int_0^t f(x_s; theta_hat) ds)^2 = int_0^t E g(x_s) ds`,
//!
//! each stacked over initial conditions into a linear least-squares system.
//! Data can come from the effective model itself or from a fast/slow system
//! whose slow component is observed, in which case the estimates recover the
//! homogenized coefficients.
//!
//! Modules: [`simulate`] generates ensembles and accumulates moment
//! statistics in a single streaming pass, [`estimator`] assembles and solves
//! the two linear systems (scalar and matrix-valued variants), [`baselines`]
//! holds classical single-trajectory estimators (MLE, quadratic variation,
//! subsampling), [`registry`] registers the benchmark models together with
//! their effective coefficients, and [`experiment`] runs configured
//! experiments and writes CSV reports.

pub mod baselines;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod model;
pub mod moments;
pub mod numerics;
pub mod params;
pub mod registry;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use params::MonomialParam;
