//! Simulation and estimation toolkit for processes whose absolute moments grow
//! like powers of time,
//!
//! ```text
//!     E|X(t)|^q  ~  t^{tau(q)}   as t -> infinity,
//! ```
//!
//! with particular focus on the case where the scaling function `tau` is
//! nonlinear ("multiscaling"), so that `tau(q)/q` strictly increases somewhere
//! and the process exhibits intermittent bursts.
//!
//! The crate has three layers:
//!
//! * **Models** ([`ensemble::ProcessModel`]): deterministic-grid mixtures with
//!   two or three power-law branches, a fractional-Brownian-motion mixture, and
//!   integrated superpositions of Ornstein-Uhlenbeck processes (supOU) driven
//!   by Gaussian or compound-Poisson noise. Ensembles of independent paths are
//!   generated reproducibly: every replication owns a counter-based RNG stream,
//!   so results are bit-identical for any worker count.
//! * **Estimators** ([`estimator`], [`ldp`]): empirical moments, log-log
//!   regression estimates of `tau`, two-segment breakpoint detection for
//!   intermittency, rate-of-growth samples `R(t) = log|X(t)| / log t`, and
//!   power-law decay rates of `P(R(t) in A)` with large-deviation sandwich
//!   checks.
//! * **Convex analysis** ([`pwl`], [`conjugate`], [`scenarios`]): piecewise
//!   linear convex scaling functions, exact and grid-based Legendre transforms,
//!   exposed points, and closed-form `tau`/`tau*` pairs for the bundled
//!   scenarios.

pub mod conjugate;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod fgn;
pub mod grid;
pub mod ldp;
pub mod models;
pub mod pwl;
pub mod rng;
pub mod scaling;
pub mod scenarios;
pub mod special;
pub mod stats;
pub mod supou;

pub use error::{Error, Result};
