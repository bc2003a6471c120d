//! Čech and Vietoris–Rips complexes on random point processes, Betti numbers
//! over GF(2), and Monte Carlo estimators for the thermodynamic-regime limits
//! of expected Betti numbers of binomial and Poissonized point processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`pointproc`] samples binomial, Poisson and Poissonized point clouds from
//!   piecewise-constant densities, with reproducible per-replicate RNG streams.
//! * [`cech`] builds Čech (miniball-filtered) and Rips complexes from a cloud.
//! * [`homology`] reduces boundary matrices over GF(2) and reports Betti numbers.
//! * [`limits`] runs the replicate-parallel estimators and experiment checks.
//! * [`cli`] wires everything into the `betti-thermo` command-line runner.

pub mod cech;
pub mod cli;
mod error;
pub mod homology;
pub mod limits;
pub mod pointproc;

pub use error::{Error, Result};
