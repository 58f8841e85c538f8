//! Interference, SINR coverage and spectral efficiency of dynamic-TDD
//! cellular networks.
//!
//! Two geometries are covered:
//!
//! * an infinite hexagonal macro-cell lattice ([`hexgrid`] for the lattice
//!   itself and its brute-force / Monte Carlo oracles, [`macro_analytic`] for
//!   the series expressions of the four interference-to-signal ratios and the
//!   resulting coverage probability);
//! * a Poisson small-cell deployment ([`ppp_model`]), where coverage follows
//!   from the Laplace transform of the aggregate interference.
//!
//! Every analytic route has an independent numerical counterpart so results
//! can be cross-checked, see [`validation`]. Experiments are described by
//! JSON configs and written as CSV, see [`experiment`].

pub mod curve;
pub mod error;
pub mod experiment;
pub mod hexgrid;
pub mod macro_analytic;
pub mod ppp_model;
pub mod quad;
pub mod rng;
pub mod specfun;
pub mod units;
pub mod validation;

pub use curve::CoverageCurve;
pub use error::{Error, Result};
pub use hexgrid::{Direction, MacroNetwork, MobilePolar, PropagationParams, TddMix};
pub use specfun::{SeriesControl, ShadowingSpec};
