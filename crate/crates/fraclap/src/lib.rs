//! Finite-element approximation of Neumann spectra of fractal Laplacians on
//! outer-approximating polygonal domains, plus the downstream spectral
//! analysis: renormalization factors, multiplicity clustering, Weyl ratios,
//! representation types and miniaturization.
//!
//! The pipeline is `geometry` (iterated function systems and cell domains)
//! → `mesh` (structured symmetric triangulations) → `fem` (P1 assembly and
//! generalized eigensolvers) → `spectral` / `symmetry` (analysis), with
//! `oracles` providing closed-form reference spectra and `cli` the command
//! line front end.

pub mod cli;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod oracles;
pub mod rng;
pub mod spectral;
pub mod symmetry;

pub use error::{Error, Result};
