//! Correlators, signalling quantifiers and bounds.
//!
//! Everything here exists in two forms: arithmetic on measured probability
//! tables, and the quantum decomposition through the cross terms X(n3,n,n')
//! weighted by the detector coefficients gamma and Gamma.  The two routes
//! must agree to 1e-10 and the tests lean on that equality heavily.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::AmbiguousDetector;
use crate::error::{LgError, Result};
use crate::protocol::{p2_alpha_direct, run_protocol, ExperimentProtocol, ProbabilityTables};
use crate::quantum::{cross_term_x, dagger, trace_re, CMat};

/// Tolerance for the dual-route equality checks.
pub const ROUTE_TOL: f64 = 1e-10;
/// A correlator must exceed its bound by more than this to count as a violation.
pub const VIOLATION_TOL: f64 = 1e-10;

/// Signalling quantifiers of one protocol: delta(n3) for the unambiguous
/// measurement, delta_A(n3) for the ambiguous one, their difference D(n3),
/// and the absolute sums Delta, Delta_A entering the modified LGI bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignallingReport {
    pub delta: Vec<f64>,
    pub delta_a: Vec<f64>,
    /// D(n3) = delta(n3) - delta_A(n3); zero iff ESIT holds.
    pub diff: Vec<f64>,
    /// Delta = sum |delta(n3)|.
    pub delta_total: f64,
    /// Delta_A = sum |delta_A(n3)|.
    pub delta_a_total: f64,
}

impl SignallingReport {
    pub fn from_deltas(delta: Vec<f64>, delta_a: Vec<f64>) -> Self {
        let diff = delta.iter().zip(&delta_a).map(|(d, da)| d - da).collect();
        let delta_total = delta.iter().map(|d| d.abs()).sum();
        let delta_a_total = delta_a.iter().map(|d| d.abs()).sum();
        Self { delta, delta_a, diff, delta_total, delta_a_total }
    }
}

/// Which side the bound constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// Outcome of evaluating a Leggett-Garg correlator against its
/// signalling-corrected bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LgiResult {
    pub value: f64,
    pub bound: f64,
    pub bound_kind: BoundKind,
    pub violated: bool,
    /// (projective term, signalling term, kappa term) of the quantum
    /// decomposition, when computed along that route.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<[f64; 3]>,
}

impl LgiResult {
    fn upper(value: f64, bound: f64, decomposition: Option<[f64; 3]>) -> Self {
        Self { value, bound, bound_kind: BoundKind::Upper, violated: value > bound + VIOLATION_TOL, decomposition }
    }

    fn lower(value: f64, bound: f64, decomposition: Option<[f64; 3]>) -> Self {
        Self { value, bound, bound_kind: BoundKind::Lower, violated: value < bound - VIOLATION_TOL, decomposition }
    }
}

/// delta(n3) = P(n3) - sum_{n2} P(n3,n2), from measured tables alone.
pub fn projective_delta(tables: &ProbabilityTables) -> Vec<f64> {
    (0..tables.num_t3_outcomes())
        .map(|n3| tables.p3[n3] - tables.p32.row(n3).sum())
        .collect()
}

/// Both signalling vectors from measured tables; requires the ambiguous table.
pub fn signalling_report(tables: &ProbabilityTables) -> Result<SignallingReport> {
    let pa = tables.ambiguous()?;
    let delta = projective_delta(tables);
    let delta_a = (0..tables.num_t3_outcomes())
        .map(|n3| tables.p3[n3] - pa.row(n3).sum())
        .collect();
    Ok(SignallingReport::from_deltas(delta, delta_a))
}

/// All cross terms X(n3, n, n') of a protocol, indexed [n3][n][n'].
fn cross_terms(proto: &ExperimentProtocol) -> Result<Vec<Vec<Vec<Complex64>>>> {
    let rho2 = proto.rho2()?;
    let k3 = proto.meas3.len();
    let m = proto.meas2.len();
    let mut x = vec![vec![vec![Complex64::default(); m]; m]; k3];
    for (n3, plane) in x.iter_mut().enumerate() {
        for (n, row) in plane.iter_mut().enumerate() {
            for (np, entry) in row.iter_mut().enumerate() {
                *entry =
                    cross_term_x(&rho2, &proto.u32, &proto.meas2, &proto.meas3, n3, n, np)?;
            }
        }
    }
    Ok(x)
}

fn real_part_checked(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > ROUTE_TOL {
        return Err(LgError::Inconsistent(format!(
            "{what} has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// Signalling quantifiers via the quantum decomposition:
/// delta(n3) = sum_{n != n'} X(n3,n,n') and
/// delta_A(n3) = sum_{n != n'} gamma(n,n') X(n3,n,n').
pub fn signalling_report_via_x(proto: &ExperimentProtocol) -> Result<SignallingReport> {
    let det = proto.detector()?;
    let gamma = det.gamma();
    let x = cross_terms(proto)?;
    let k3 = proto.meas3.len();
    let m = proto.meas2.len();
    let mut delta = Vec::with_capacity(k3);
    let mut delta_a = Vec::with_capacity(k3);
    for plane in x.iter().take(k3) {
        let mut s = Complex64::default();
        let mut sa = Complex64::default();
        for n in 0..m {
            for np in 0..m {
                if n != np {
                    s += plane[n][np];
                    sa += plane[n][np] * gamma[(n, np)];
                }
            }
        }
        delta.push(real_part_checked(s, "delta via X")?);
        delta_a.push(real_part_checked(sa, "delta_A via X")?);
    }
    Ok(SignallingReport::from_deltas(delta, delta_a))
}

/// kappa(n2, n3) = sum_{n != n'} Gamma(n2,n,n') X(n3,n,n'), the term of the
/// ambiguous correlator not tied to signalling.  Indexed [n2][n3].
pub fn kappa(proto: &ExperimentProtocol) -> Result<Vec<Vec<f64>>> {
    let det = proto.detector()?;
    let big_gamma = det.big_gamma();
    let x = cross_terms(proto)?;
    let k3 = proto.meas3.len();
    let m = proto.meas2.len();
    let mut out = vec![vec![0.0; k3]; m];
    for (n2, row) in out.iter_mut().enumerate() {
        for (n3, entry) in row.iter_mut().enumerate() {
            let mut s = Complex64::default();
            for n in 0..m {
                for np in 0..m {
                    if n != np {
                        s += x[n3][n][np] * big_gamma[n2][(n, np)];
                    }
                }
            }
            *entry = real_part_checked(s, "kappa")?;
        }
    }
    Ok(out)
}

fn check_labels(count: usize, q: &[i8]) -> Result<()> {
    if q.len() != count {
        return Err(LgError::LabelMismatch { labels: q.len(), outcomes: count });
    }
    if q.iter().any(|&v| v != 1 && v != -1) {
        return Err(LgError::InvalidParameter("q-labels must be +1 or -1".into()));
    }
    Ok(())
}

fn lgi_coefficient(q2: f64, q3: f64) -> f64 {
    q2 + q2 * q3 - q3
}

/// The unambiguous correlator K = <Q2> + <Q3 Q2> - <Q3>, with <Q2> taken
/// from the joint-table marginal and <Q3> from the measurement-free run.
///
/// Computed both directly and through the delta decomposition; the two
/// routes must agree to 1e-10.
pub fn correlator_k(tables: &ProbabilityTables, q2: &[i8], q3: &[i8]) -> Result<f64> {
    check_labels(tables.p32.ncols(), q2)?;
    check_labels(tables.num_t3_outcomes(), q3)?;

    let mut q2_ev = 0.0;
    let mut q32_ev = 0.0;
    let mut decomposed = 0.0;
    for n3 in 0..tables.num_t3_outcomes() {
        for n2 in 0..tables.p32.ncols() {
            let p = tables.p32[(n3, n2)];
            q2_ev += q2[n2] as f64 * p;
            q32_ev += q2[n2] as f64 * q3[n3] as f64 * p;
            decomposed += lgi_coefficient(q2[n2] as f64, q3[n3] as f64) * p;
        }
    }
    let q3_ev: f64 = tables.p3.iter().zip(q3).map(|(p, &q)| q as f64 * p).sum();
    let direct = q2_ev + q32_ev - q3_ev;

    let delta = projective_delta(tables);
    for (n3, d) in delta.iter().enumerate() {
        decomposed -= q3[n3] as f64 * d;
    }
    if (direct - decomposed).abs() > ROUTE_TOL {
        return Err(LgError::Inconsistent(format!(
            "K routes disagree: {direct} vs {decomposed}"
        )));
    }
    Ok(direct)
}

/// The ambiguously-measured correlator K_A from measured tables:
/// reconstructed joint quasiprobabilities d * P(n3, alpha) in the LGI
/// combination, minus the ambiguous signalling term.  Bound: 1 + Delta_A.
pub fn correlator_k_ambiguous(
    tables: &ProbabilityTables,
    det: &AmbiguousDetector,
    q2: &[i8],
    q3: &[i8],
) -> Result<LgiResult> {
    let pa = tables.ambiguous()?;
    check_labels(det.num_states(), q2)?;
    check_labels(tables.num_t3_outcomes(), q3)?;
    if pa.ncols() != det.num_responses() {
        return Err(LgError::DimensionMismatch { expected: det.num_responses(), got: pa.ncols() });
    }
    let report = signalling_report(tables)?;
    let mut value = 0.0;
    for n3 in 0..tables.num_t3_outcomes() {
        for n2 in 0..det.num_states() {
            let coef = lgi_coefficient(q2[n2] as f64, q3[n3] as f64);
            for alpha in 0..det.num_responses() {
                value += coef * det.d()[(n2, alpha)] * pa[(n3, alpha)];
            }
        }
        value -= q3[n3] as f64 * report.delta_a[n3];
    }
    Ok(LgiResult::upper(value, 1.0 + report.delta_a_total, None))
}

/// K_A through the quantum three-term decomposition: the projective term,
/// the ambiguous signalling term, and the kappa term that enables violations.
pub fn correlator_k_ambiguous_via_decomposition(proto: &ExperimentProtocol) -> Result<LgiResult> {
    let tables = run_protocol(proto)?;
    let q2 = proto.meas2.q_labels().to_vec();
    let q3 = proto.meas3.q_labels().to_vec();
    check_labels(tables.p32.ncols(), &q2)?;
    let report = signalling_report_via_x(proto)?;
    let kap = kappa(proto)?;

    let mut projective_term = 0.0;
    for n3 in 0..tables.num_t3_outcomes() {
        for n2 in 0..tables.p32.ncols() {
            projective_term +=
                lgi_coefficient(q2[n2] as f64, q3[n3] as f64) * tables.p32[(n3, n2)];
        }
    }
    let signalling_term: f64 = report
        .delta_a
        .iter()
        .zip(&q3)
        .map(|(d, &q)| -(q as f64) * d)
        .sum();
    let mut kappa_term = 0.0;
    for (n2, row) in kap.iter().enumerate() {
        for (n3, k) in row.iter().enumerate() {
            kappa_term += lgi_coefficient(q2[n2] as f64, q3[n3] as f64) * k;
        }
    }
    let value = projective_term + signalling_term + kappa_term;
    Ok(LgiResult::upper(
        value,
        1.0 + report.delta_a_total,
        Some([projective_term, signalling_term, kappa_term]),
    ))
}

/// The lower-bounded LGI variant:
/// K' = <Q1 Q2>_21 + <Q3 Q2>_321 + <Q1 Q3>_31 >= -1,
/// the all-plus pairwise combination (three products of dichotomic variables
/// cannot all equal -1), signalling-corrected to -1 - Delta_A.
///
/// Q1 is the declared value covered by the preparation step.  <Q1 Q2>_21 uses
/// the t2-only marginal of the ambiguous run, reconstructed through d;
/// <Q1 Q3>_31 uses the measurement-free t3 distribution.
pub fn correlator_k_prime(
    tables: &ProbabilityTables,
    det: &AmbiguousDetector,
    q1: i8,
    q2: &[i8],
    q3: &[i8],
) -> Result<LgiResult> {
    let pa = tables.ambiguous()?;
    if q1 != 1 && q1 != -1 {
        return Err(LgError::InvalidParameter("Q1 must be +1 or -1".into()));
    }
    check_labels(det.num_states(), q2)?;
    check_labels(tables.num_t3_outcomes(), q3)?;
    let report = signalling_report(tables)?;

    // t2-only response distribution as the n3-marginal of the joint run
    let p2_alpha: Vec<f64> = (0..det.num_responses()).map(|a| pa.column(a).sum()).collect();
    let mut q2_ev = 0.0;
    for n2 in 0..det.num_states() {
        for (alpha, p) in p2_alpha.iter().enumerate() {
            q2_ev += q2[n2] as f64 * det.d()[(n2, alpha)] * p;
        }
    }
    let mut q32_ev = 0.0;
    for n3 in 0..tables.num_t3_outcomes() {
        for n2 in 0..det.num_states() {
            for alpha in 0..det.num_responses() {
                q32_ev += q2[n2] as f64
                    * q3[n3] as f64
                    * det.d()[(n2, alpha)]
                    * pa[(n3, alpha)];
            }
        }
    }
    let q3_ev: f64 = tables.p3.iter().zip(q3).map(|(p, &q)| q as f64 * p).sum();
    let value = q1 as f64 * q2_ev + q32_ev + q1 as f64 * q3_ev;
    Ok(LgiResult::lower(value, -1.0 - report.delta_a_total, None))
}

/// <Q2>_21 from an actual t2-only run (no t3 measurement), for the
/// cross-check against the joint-run marginal used in `correlator_k_prime`.
pub fn k_prime_q2_from_t2_run(proto: &ExperimentProtocol) -> Result<f64> {
    let det = proto.detector()?;
    let q2 = proto.meas2.q_labels();
    let p2_alpha = p2_alpha_direct(proto)?;
    let mut q2_ev = 0.0;
    for n2 in 0..det.num_states() {
        for (alpha, p) in p2_alpha.iter().enumerate() {
            q2_ev += q2[n2] as f64 * det.d()[(n2, alpha)] * p;
        }
    }
    Ok(q2_ev)
}

/// The weak-measurement limit of K_A:
/// tr{ [Qhat_2 + (1/2){Qhat_2, Qhat_3} - Qhat_3] rho1 }
/// with Qhat_n the measured observable in the Heisenberg picture.
///
/// Requires the full unambiguous basis at t2; the t3 measurement may be
/// coarse-grained.
pub fn weak_limit_k(proto: &ExperimentProtocol) -> Result<f64> {
    if proto.meas2.len() != proto.meas2.dim() {
        return Err(LgError::InvalidParameter(
            "weak limit needs a full-basis t2 measurement".into(),
        ));
    }
    let u21 = proto.u21.matrix();
    let u31 = proto.u32.matrix() * u21;
    let q2_op = proto.meas2.q_operator();
    let q3_op = proto.meas3.q_operator();
    let q2_h: CMat = dagger(u21) * q2_op * u21;
    let q3_h: CMat = dagger(&u31) * q3_op * u31;
    let anti = &q2_h * &q3_h + &q3_h * &q2_h;
    let op = &q2_h + anti * Complex64::new(0.5, 0.0) - &q3_h;
    Ok(trace_re(&(op * proto.rho1.matrix())))
}
