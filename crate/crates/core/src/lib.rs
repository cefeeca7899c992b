//! Binary phase-measuring-profilometry (PMP) fringe patterns.
//!
//! The crate covers the whole simulated pipeline:
//!
//! 1. [`patterns`]: contone single- and dual-frequency phase-shift pattern sets
//!    and their ground-truth phase.
//! 2. [`optics`]: Gaussian FIR model of a defocused projector, applied with
//!    toroidal convolution.
//! 3. [`halftone`]: reference binarizers (white noise, Bayer, spatial DBS).
//! 4. [`phase_dbs`]: phase-weighted direct binary search, which re-binarizes
//!    all frames of a pixel jointly so the defocused set matches the contone
//!    set in selected temporal DFT bins.
//! 5. [`decode`]: per-pixel temporal DFT, phase/magnitude recovery and error
//!    statistics.

pub mod decode;
pub mod dft;
mod error;
pub mod grid;
pub mod halftone;
pub mod optics;
pub mod patterns;
pub mod phase_dbs;

pub use error::{Error, Result};
pub use grid::Grid;
pub use optics::{Kernel, SurroundKernel};
pub use patterns::{Domain, PatternMode, PatternSet, PatternSpec, PhaseMap};
