//! Numerical laboratory for the fractional Schrödinger equation
//! (−Δ)^s u + V(x)u = g(u) on truncated periodic boxes: spectral operators,
//! variational diagnostics, critical-point solvers, resolvent-kernel studies,
//! and the experiment CLI built on top of them.

pub mod cli_experiments;
pub mod config;
pub mod energy;
pub mod grid_spectral;
pub mod kernel;
pub mod model;
pub mod report;
pub mod solver;
