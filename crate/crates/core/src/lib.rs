//! Simulator and analysis harness for delayed-choice quantum eraser (DCQE)
//! experiments and their modified topologies.
//!
//! The crate is split along the experiment's data flow:
//!
//! * [`optics`] turns a declarative idler-arm layout into transfer
//!   coefficients, delays and joint detection densities.
//! * [`spacetime`] classifies detection events against the light cone of the
//!   local (D0) detection.
//! * [`scenarios`] generates timestamped detection streams, either under
//!   standard quantum mechanics or under one of the hypersurface-coupling
//!   conjectures.
//! * [`analysis`] recovers the observables: coincidence fringes, phases,
//!   peaks, mutual information, signalling onsets and marking fractions.
//! * [`config`], [`stream`] and [`report`] are the file-level harness used by
//!   the `dcqe` command line tool.

pub mod analysis;
pub mod config;
pub mod optics;
pub mod report;
pub mod scenarios;
pub mod spacetime;
pub mod stream;

/// Speed of light in vacuum, m/s (exact by SI definition).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
