//! Statistics on detection-event streams: coincidence matching, fringe
//! fitting, peak finding, mutual information, onset detection, τ tests,
//! marking estimates and message decoding.

mod coincidence;
mod fringe;
mod histogram;
mod information;
mod ks;
mod marking;
mod message;
mod onset;
mod peaks;
mod tau;

use thiserror::Error;

pub use coincidence::{match_coincidences, CoincidencePair};
pub use fringe::{
    fit_fringes, fitted_counts, phase_difference, projected_visibility,
    projected_visibility_with_error, FitOptions, FringeEnvelope, FringeFit,
};
pub use histogram::{Binning, Histogram};
pub use information::{
    corrected_mi, estimate_mutual_information, mi_from_table, MIEstimate, MiOptions,
};
pub use ks::{kolmogorov_survival, ks_two_sample, KsResult};
pub use marking::{
    estimate_marking, locate_step, marking_scan, MarkingEstimate, MarkingOptions, ScanPoint,
};
pub use message::{decode_message, DecodeOptions, DecodedMessage, SlotDecode};
pub use onset::{
    cusum, detect_onset, predicted_onsets, visibility_series, OnsetEstimate, OnsetHypothesis,
    OnsetOptions, OnsetVerdict, VisibilityPoint,
};
pub use peaks::{peak_positions, PeakOptions};
pub use tau::{
    fit_exponential_decay, tau_dependence_test, tau_samples, TauBin, TauBinReport, TauOptions,
    TauPairTest,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Unsorted(String),
    #[error("histogram has {bins} bins, need at least {required}")]
    TooFewBins { bins: usize, required: usize },
    #[error("histogram has {counts} counts, need at least {required}")]
    TooFewCounts { counts: f64, required: f64 },
    #[error("fringe fit did not converge (residual {residual})")]
    FitNotConverged { residual: f64 },
    #[error("{0}")]
    Degenerate(String),
    #[error("stream too short: {0}")]
    StreamTooShort(String),
    #[error("{0}")]
    InsufficientBins(String),
}
