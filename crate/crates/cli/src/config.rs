//! Run configuration: TOML file merged with command-line overrides
//! (flags win).  Unknown keys are rejected.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use lgsim_core::detector::DetectorSpec;
use lgsim_core::threelevel::Objective;

/// The merged, ready-to-run configuration.  All angles are radians.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scan window, default [0, pi] on both axes.
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    /// Grid points per axis for scans (default 512) and for the
    /// maximization pre-scan (default 192).
    pub resolution: Option<usize>,
    /// Point parameters for chi-solve and single-point queries.
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    /// Weak-detector epsilon for the custom scenario.
    pub epsilon: Option<f64>,
    /// Maximization objective: "ka" (default) or "weak-k".
    pub objective: Option<Objective>,
    /// When set, threelevel-maximize follows the chi-branch along this
    /// fixed-theta cut instead of maximizing over the no-signalling contours.
    pub cut_theta: Option<f64>,
    /// chi-solver tolerance override.
    pub chi_tol: Option<f64>,
    /// Primary artifact path (CSV for scans, JSON otherwise).
    pub out: Option<PathBuf>,
    /// Worker threads for grid scans (default: machine parallelism).
    pub workers: Option<usize>,
    /// Custom-scenario protocol description.
    pub custom: Option<CustomConfig>,
}

/// An arbitrary protocol with real entries, for the custom scenario.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    /// Density matrix rows (real, Hermitian, unit trace) or omitted in
    /// favour of `initial_state`.
    pub rho1: Option<Vec<Vec<f64>>>,
    /// Pure initial state amplitudes (normalized on load).
    pub initial_state: Option<Vec<f64>>,
    /// Real orthogonal evolution matrices, row-major.
    pub u21: Vec<Vec<f64>>,
    pub u32: Vec<Vec<f64>>,
    /// q-labels (+1/-1) of the full-basis t2 measurement.
    pub q2: Vec<i8>,
    /// q-labels of the t3 measurement: one per basis state, or exactly two
    /// with `meas3_state` set for a coarse state-vs-rest measurement.
    pub q3: Vec<i8>,
    /// Coarse t3 measurement: project onto this basis state vs the rest.
    pub meas3_state: Option<usize>,
    /// Ambiguous detector at t2 (omit to run unambiguous only).
    pub detector: Option<DetectorSpec>,
}

impl RunConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
            }
        }
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (
            self.theta_min.unwrap_or(0.0),
            self.theta_max.unwrap_or(std::f64::consts::PI),
        )
    }

    pub fn phi_range(&self) -> (f64, f64) {
        (
            self.phi_min.unwrap_or(0.0),
            self.phi_max.unwrap_or(std::f64::consts::PI),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (t0, t1) = self.theta_range();
        let (p0, p1) = self.phi_range();
        if !(t0 < t1) || !(p0 < p1) {
            bail!("scan ranges must be non-empty (theta {t0}..{t1}, phi {p0}..{p1})");
        }
        if let Some(r) = self.resolution {
            if r < 2 {
                bail!("resolution must be at least 2, got {r}");
            }
        }
        if let Some(w) = self.workers {
            if w == 0 {
                bail!("workers must be positive");
            }
        }
        if let Some(t) = self.chi_tol {
            if !(t > 0.0) {
                bail!("chi_tol must be positive, got {t}");
            }
        }
        for (name, v) in [
            ("theta_min", self.theta_min),
            ("theta_max", self.theta_max),
            ("phi_min", self.phi_min),
            ("phi_max", self.phi_max),
            ("theta", self.theta),
            ("phi", self.phi),
            ("epsilon", self.epsilon),
            ("cut_theta", self.cut_theta),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    bail!("{name} must be finite, got {v}");
                }
            }
        }
        Ok(())
    }
}
