//! Standard-QM amplitudes, joint detection densities and delays for the
//! idler arm of a DCQE layout.

mod graph;
mod signal;
mod transfer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{
    build_path_graph, ElementKind, GraphConfig, GraphPreset, OpticalElement, PathGraph,
    DEFAULT_WAVELENGTH_M,
};
pub use signal::{d0_marginal, joint_density, Grid, JointDensity, SignalArmModel};
pub use transfer::{
    transfer_coefficients, validate_unitarity, TransferCoefficients, UnitarityReport,
    UNITARITY_TOLERANCE,
};

/// Complex two-photon amplitude.
pub type Amplitude = num_complex::Complex64;

/// SPDC birth region of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("cycle detected through element `{0}`")]
    Cycle(String),
    #[error("dangling port `{port}` at element `{element}`")]
    DanglingPort { element: String, port: String },
    #[error("port `{port}` wired twice (at `{element}`)")]
    DuplicatePort { element: String, port: String },
    #[error("duplicate element id `{0}`")]
    DuplicateElement(String),
    #[error("detector `{0}` is unreachable from either source")]
    DetectorUnreachable(String),
    #[error("element `{element}` needs {expected:?} in/out ports, has {found:?}")]
    PortCount {
        element: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("element `{element}` has invalid length {length_m} m")]
    InvalidLength { element: String, length_m: f64 },
    #[error("wavelength must be positive, got {0}")]
    InvalidWavelength(f64),
    #[error("graph has no detectors")]
    NoDetectors,
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
    #[error("transfer coefficients are not unitary (residuals {residual_a:e}, {residual_b:e}, overlap {overlap:e})")]
    NotUnitary {
        residual_a: f64,
        residual_b: f64,
        overlap: f64,
    },
    #[error("invalid signal arm: {0}")]
    InvalidSignalArm(String),
    #[error("grid needs at least two points and hi > lo")]
    InvalidGrid,
}
