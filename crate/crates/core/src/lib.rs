//! Numerical toolkit for Leggett-Garg tests with ambiguous measurements:
//! correlators, signalling quantifiers (NSIT/ESIT) and their bounds for
//! small quantum systems under projective, POVM, inverted and weak
//! measurements.

pub mod contour;
pub mod detector;
pub mod error;
pub mod metrics;
pub mod protocol;
pub mod quantum;
pub mod threebox;
pub mod threelevel;

pub use contour::{ContourSet, ContourVertex};
pub use detector::{AmbiguousDetector, DetectorSpec, KrausSet};
pub use error::{LgError, Result};
pub use metrics::{BoundKind, LgiResult, SignallingReport};
pub use protocol::{ExperimentProtocol, ProbabilityTables};
pub use quantum::{DensityMatrix, LabeledProjectorSet, UnitaryEvolution};
pub use threelevel::{Objective, PointMetrics, ScanGrid, ScanRecord, ThreeLevelParams};
