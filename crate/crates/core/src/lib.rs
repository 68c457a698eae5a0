//! Monte Carlo laboratory for Poisson functionals in stochastic geometry.
//!
//! The crate samples (marked) Poisson point processes on cubes and balls,
//! builds the geometric graphs whose edge-length functionals are studied
//! (online nearest-neighbour graph, Euclidean minimal spanning tree,
//! fixed-radius geometric graphs), evaluates shot-noise excursion
//! functionals, and measures add-one costs, two-scale discrepancies and
//! stabilization radii. Campaigns over growing windows are declared with
//! [`harness::ExperimentSpec`] and produce [`harness::Report`]s with
//! empirical Kolmogorov and Wasserstein distances to the normal law.

pub mod error;
pub mod graphs;
pub mod harness;
pub mod point_process;
pub mod shot_noise;
pub mod spatial;
pub mod stabilization;
pub mod stats;

pub use error::{GeoError, Result};
