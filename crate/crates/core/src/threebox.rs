//! The three-box problem as a Leggett-Garg test with ambiguous measurements.
//!
//! A particle starts in box C, shuffles under U21, has a box "opened" at t2,
//! shuffles under U32 and is finally checked for being in box C.  Opening box
//! A (or B) either finds the particle or does not; an empty box leaves the
//! other two states ambiguous.  Choosing the opened box at random gives a
//! four-response detector whose responses never distinguish B from C (box A
//! opened) or A from C (box B opened).
//!
//! The detector is non-signalling in every sense available to the experiment:
//! the ambiguous responses satisfy delta_A(n3) = 0, and each of the two
//! unambiguous box openings {Pi_n, 1 - Pi_n} separately satisfies
//! delta(n3) = 0.  Full identification of the box (dephasing in the whole
//! basis) would disturb the state, but the protocol never performs it.
//!
//! Despite the absence of signalling, the reconstructed correlator violates
//! the lower-bounded LGI: K' = -13/9 < -1.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::detector::AmbiguousDetector;
use crate::error::{LgError, Result};
use crate::metrics::{
    correlator_k_prime, k_prime_q2_from_t2_run, projective_delta, signalling_report,
    LgiResult, SignallingReport, ROUTE_TOL,
};
use crate::protocol::{run_protocol, ExperimentProtocol};
use crate::quantum::{DensityMatrix, LabeledProjectorSet, UnitaryEvolution};

/// Q-value of the preparation: the particle starts in box C, which carries
/// label -1 at every time.
pub const Q1: i8 = -1;
/// Q-labels of the boxes (A, B, C) at t2.
pub const Q2: [i8; 3] = [1, 1, -1];
/// Q-labels of the t3 outcomes (in box C, not in box C).
pub const Q3: [i8; 2] = [-1, 1];

fn real_unitary(rows: [f64; 9]) -> Result<UnitaryEvolution> {
    UnitaryEvolution::from_real(&DMatrix::from_row_slice(3, 3, &rows))
}

/// First shuffle: takes |C> to the uniform superposition of the boxes.
pub fn three_box_u21() -> Result<UnitaryEvolution> {
    let s = 6.0f64.sqrt();
    real_unitary([
        2.0 / s,
        0.0,
        2.0f64.sqrt() / s,
        -1.0 / s,
        3.0f64.sqrt() / s,
        2.0f64.sqrt() / s,
        -1.0 / s,
        -3.0f64.sqrt() / s,
        2.0f64.sqrt() / s,
    ])
}

/// Second shuffle: takes (|A> + |B> - |C>)/sqrt(3) to |C>, so the final
/// box-C check post-selects the paradoxical state.
pub fn three_box_u32() -> Result<UnitaryEvolution> {
    let s = 6.0f64.sqrt();
    real_unitary([
        1.0 / s,
        1.0 / s,
        2.0 / s,
        3.0f64.sqrt() / s,
        -(3.0f64.sqrt()) / s,
        0.0,
        2.0f64.sqrt() / s,
        2.0f64.sqrt() / s,
        -(2.0f64.sqrt()) / s,
    ])
}

/// The four-response box-opening detector: open A or B with probability 1/2
/// each and report whether the particle was found.
pub fn three_box_detector() -> Result<AmbiguousDetector> {
    let c = DMatrix::from_row_slice(
        4,
        3,
        &[
            0.5, 0.0, 0.0, // box A opened, particle found
            0.0, 0.5, 0.5, // box A opened, empty
            0.0, 0.5, 0.0, // box B opened, particle found
            0.5, 0.0, 0.5, // box B opened, empty
        ],
    );
    AmbiguousDetector::from_c(c)?.with_response_names(vec![
        "A-found".into(),
        "A-empty".into(),
        "B-found".into(),
        "B-empty".into(),
    ])
}

/// The full three-box protocol: preparation in C, both shuffles, the
/// box-opening detector over the three-box basis at t2, and the box-C check
/// {Pi_C (-1), 1 - Pi_C (+1)} at t3.
pub fn three_box_protocol() -> Result<ExperimentProtocol> {
    ExperimentProtocol::new(
        DensityMatrix::basis_state(3, 2)?,
        three_box_u21()?,
        three_box_u32()?,
        LabeledProjectorSet::computational_basis(3, Q2.to_vec())?,
        Some(three_box_detector()?),
        LabeledProjectorSet::basis_state_vs_rest(3, 2, Q3[0], Q3[1])?,
    )
}

/// The same experiment with a single unambiguous box opening at t2:
/// {Pi_box, 1 - Pi_box}.  These are the only unambiguous measurements the
/// protocol performs, and both are non-disturbing.
pub fn box_opening_protocol(boxed: usize) -> Result<ExperimentProtocol> {
    if boxed > 1 {
        return Err(LgError::InvalidParameter(
            "only boxes A (0) and B (1) are opened".into(),
        ));
    }
    ExperimentProtocol::new(
        DensityMatrix::basis_state(3, 2)?,
        three_box_u21()?,
        three_box_u32()?,
        LabeledProjectorSet::basis_state_vs_rest(3, boxed, 1, -1)?,
        None,
        LabeledProjectorSet::basis_state_vs_rest(3, 2, Q3[0], Q3[1])?,
    )
}

/// Everything the three-box scenario reports.
#[derive(Debug, Clone, Serialize)]
pub struct ThreeBoxReport {
    /// K' against its signalling-corrected lower bound.
    pub k_prime: LgiResult,
    /// delta from the unambiguous box openings (identical for boxes A and B),
    /// delta_A from the four-response detector.
    pub signalling: SignallingReport,
    /// Measurement-free t3 distribution (in C, not in C).
    pub p3: Vec<f64>,
    /// <Q2>_21 reconstructed through d from the t2-only marginal.
    pub q2_expectation: f64,
    /// <Q3 Q2>_321 reconstructed through d from the joint run.
    pub q32_expectation: f64,
    /// <Q3>_31 from the measurement-free run.
    pub q3_expectation: f64,
}

/// Run the three-box experiment and evaluate K' and the signalling
/// quantifiers.  The unambiguous delta comes from the two box-opening
/// experiments, which must agree with each other to 1e-10.
pub fn run_three_box() -> Result<ThreeBoxReport> {
    let proto = three_box_protocol()?;
    let tables = run_protocol(&proto)?;
    let det = proto.detector()?;

    let delta_a = signalling_report(&tables)?.delta_a;
    let delta_open_a = projective_delta(&run_protocol(&box_opening_protocol(0)?)?);
    let delta_open_b = projective_delta(&run_protocol(&box_opening_protocol(1)?)?);
    for (a, b) in delta_open_a.iter().zip(&delta_open_b) {
        if (a - b).abs() > ROUTE_TOL {
            return Err(LgError::Inconsistent(format!(
                "box openings disagree on delta: {a} vs {b}"
            )));
        }
    }
    let signalling = SignallingReport::from_deltas(delta_open_a, delta_a);

    let k_prime = correlator_k_prime(&tables, det, Q1, &Q2, &Q3)?;

    // cross-check the t2-only marginal against an actual t2-only run
    let pa = tables.ambiguous()?;
    let mut q2_expectation = 0.0;
    let mut q32_expectation = 0.0;
    for n2 in 0..3 {
        for alpha in 0..det.num_responses() {
            let d = det.d()[(n2, alpha)];
            q2_expectation += Q2[n2] as f64 * d * pa.column(alpha).sum();
            for n3 in 0..2 {
                q32_expectation += Q2[n2] as f64 * Q3[n3] as f64 * d * pa[(n3, alpha)];
            }
        }
    }
    let q2_direct = k_prime_q2_from_t2_run(&proto)?;
    if (q2_expectation - q2_direct).abs() > ROUTE_TOL {
        return Err(LgError::Inconsistent(format!(
            "<Q2> marginal {q2_expectation} disagrees with t2-only run {q2_direct}"
        )));
    }
    let q3_expectation = tables
        .p3
        .iter()
        .zip(Q3)
        .map(|(p, q)| q as f64 * p)
        .sum();

    Ok(ThreeBoxReport {
        k_prime,
        signalling,
        p3: tables.p3.clone(),
        q2_expectation,
        q32_expectation,
        q3_expectation,
    })
}
