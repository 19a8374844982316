//! The three-time experiment: prepare at t1 (declared Q1 = +1), optionally
//! measure at t2 (unambiguously or ambiguously), measure at t3.  Running a
//! protocol produces the probability tables everything else is computed from.

use nalgebra::DMatrix;

use crate::detector::AmbiguousDetector;
use crate::error::{LgError, Result};
use crate::quantum::{
    clamp_probability, dagger, evolve, probabilities_projective, trace_re, DensityMatrix,
    LabeledProjectorSet, UnitaryEvolution, PROB_TOL,
};

/// Full description of one Leggett-Garg experiment.
#[derive(Debug, Clone)]
pub struct ExperimentProtocol {
    pub rho1: DensityMatrix,
    pub u21: UnitaryEvolution,
    pub u32: UnitaryEvolution,
    /// Unambiguous basis measurement at t2 (M outcomes with q-labels).
    pub meas2: LabeledProjectorSet,
    /// Ambiguous detector at t2, if the ambiguous experiment is part of the run.
    pub det2: Option<AmbiguousDetector>,
    /// Measurement at t3; may be coarse-grained (fewer projectors than dim).
    pub meas3: LabeledProjectorSet,
}

impl ExperimentProtocol {
    pub fn new(
        rho1: DensityMatrix,
        u21: UnitaryEvolution,
        u32: UnitaryEvolution,
        meas2: LabeledProjectorSet,
        det2: Option<AmbiguousDetector>,
        meas3: LabeledProjectorSet,
    ) -> Result<Self> {
        let dim = rho1.dim();
        for (what, d) in [
            ("U21", u21.dim()),
            ("U32", u32.dim()),
            ("meas2", meas2.dim()),
            ("meas3", meas3.dim()),
        ] {
            if d != dim {
                return Err(LgError::InvalidParameter(format!(
                    "{what} has dimension {d}, protocol state has {dim}"
                )));
            }
        }
        if let Some(det) = &det2 {
            if det.num_states() != meas2.len() {
                return Err(LgError::DimensionMismatch {
                    expected: meas2.len(),
                    got: det.num_states(),
                });
            }
        }
        Ok(Self { rho1, u21, u32, meas2, det2, meas3 })
    }

    /// State at t2, before any measurement.
    pub fn rho2(&self) -> Result<DensityMatrix> {
        evolve(&self.rho1, &self.u21)
    }

    pub fn detector(&self) -> Result<&AmbiguousDetector> {
        self.det2.as_ref().ok_or(LgError::MissingDetector)
    }
}

/// Measured statistics of the three experimental configurations:
/// no t2 measurement, unambiguous t2, ambiguous t2.
///
/// Joint tables are indexed (n3, n2) and (n3, alpha).
#[derive(Debug, Clone)]
pub struct ProbabilityTables {
    pub p3: Vec<f64>,
    pub p32: DMatrix<f64>,
    pub p3_alpha: Option<DMatrix<f64>>,
}

impl ProbabilityTables {
    pub fn new(p3: Vec<f64>, p32: DMatrix<f64>, p3_alpha: Option<DMatrix<f64>>) -> Result<Self> {
        check_normalised(p3.iter().copied(), "P(n3)")?;
        check_normalised(p32.iter().copied(), "P(n3,n2)")?;
        if let Some(pa) = &p3_alpha {
            check_normalised(pa.iter().copied(), "P(n3,alpha)")?;
        }
        Ok(Self { p3, p32, p3_alpha })
    }

    pub fn num_t3_outcomes(&self) -> usize {
        self.p3.len()
    }

    pub fn ambiguous(&self) -> Result<&DMatrix<f64>> {
        self.p3_alpha.as_ref().ok_or(LgError::MissingDetector)
    }
}

fn check_normalised(values: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for v in values {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(LgError::Inconsistent(format!("{what} has invalid entry {v}")));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(LgError::Inconsistent(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Compute all probability tables for a protocol.  The ambiguous joint table
/// P(n3, alpha) = tr{ Pi_{n3} U32 (M_alpha rho2 M_alpha) U32^dag } is present
/// exactly when the protocol carries a detector.
pub fn run_protocol(proto: &ExperimentProtocol) -> Result<ProbabilityTables> {
    let rho2 = proto.rho2()?;
    let rho3_free = evolve(&rho2, &proto.u32)?;
    let p3 = probabilities_projective(&rho3_free, &proto.meas3)?;

    let k3 = proto.meas3.len();
    let m2 = proto.meas2.len();
    let u32m = proto.u32.matrix();

    let mut p32 = DMatrix::<f64>::zeros(k3, m2);
    for n2 in 0..m2 {
        let pi = proto.meas2.projector(n2);
        let branch = u32m * (pi * rho2.matrix() * pi) * dagger(u32m);
        for n3 in 0..k3 {
            p32[(n3, n2)] = clamp_probability(trace_re(&(proto.meas3.projector(n3) * &branch)))?;
        }
    }

    let p3_alpha = match &proto.det2 {
        None => None,
        Some(det) => {
            let kraus = det.kraus_operators(&proto.meas2)?;
            let mut pa = DMatrix::<f64>::zeros(k3, det.num_responses());
            for alpha in 0..det.num_responses() {
                let m = kraus.operator(alpha);
                let branch = u32m * (m * rho2.matrix() * m) * dagger(u32m);
                for n3 in 0..k3 {
                    pa[(n3, alpha)] =
                        clamp_probability(trace_re(&(proto.meas3.projector(n3) * &branch)))?;
                }
            }
            Some(pa)
        }
    };

    ProbabilityTables::new(p3, p32, p3_alpha)
}

/// t2-only unambiguous distribution P(n2) = tr(Pi_{n2} rho2).
pub fn p2_direct(proto: &ExperimentProtocol) -> Result<Vec<f64>> {
    probabilities_projective(&proto.rho2()?, &proto.meas2)
}

/// t2-only ambiguous distribution P(alpha) = tr(F_alpha rho2), with
/// F_alpha = M_alpha^2.
pub fn p2_alpha_direct(proto: &ExperimentProtocol) -> Result<Vec<f64>> {
    let det = proto.detector()?;
    let rho2 = proto.rho2()?;
    let kraus = det.kraus_operators(&proto.meas2)?;
    (0..det.num_responses())
        .map(|alpha| {
            let m = kraus.operator(alpha);
            clamp_probability(trace_re(&(m * m * rho2.matrix())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_protocol(with_det: bool) -> ExperimentProtocol {
        let rho1 = DensityMatrix::basis_state(3, 2).unwrap();
        let meas = LabeledProjectorSet::computational_basis(3, vec![1, -1, 1]).unwrap();
        ExperimentProtocol::new(
            rho1,
            UnitaryEvolution::identity_op(3),
            UnitaryEvolution::identity_op(3),
            meas.clone(),
            with_det.then(|| AmbiguousDetector::inverted(3).unwrap()),
            meas,
        )
        .unwrap()
    }

    #[test]
    fn identity_evolution_concentrates_tables() {
        let tables = run_protocol(&identity_protocol(false)).unwrap();
        assert_eq!(tables.p3, vec![0.0, 0.0, 1.0]);
        for n3 in 0..3 {
            for n2 in 0..3 {
                let expect = if n3 == 2 && n2 == 2 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(tables.p32[(n3, n2)], expect, epsilon = 1e-14);
            }
        }
        assert!(tables.p3_alpha.is_none());
    }

    #[test]
    fn ambiguous_table_reproduces_classical_mixing() {
        // For the eigenstate |C>, P(alpha) must equal c[alpha][C] and the
        // joint table factorises through the detector.
        let tables = run_protocol(&identity_protocol(true)).unwrap();
        let pa = tables.ambiguous().unwrap();
        let det = AmbiguousDetector::inverted(3).unwrap();
        for alpha in 0..3 {
            let marginal: f64 = (0..3).map(|n3| pa[(n3, alpha)]).sum();
            assert_abs_diff_eq!(marginal, det.c()[(alpha, 2)], epsilon = 1e-12);
        }
    }

    #[test]
    fn p2_marginals_agree_with_joint() {
        let proto = identity_protocol(true);
        let tables = run_protocol(&proto).unwrap();
        let p2 = p2_direct(&proto).unwrap();
        for n2 in 0..3 {
            let marg: f64 = (0..3).map(|n3| tables.p32[(n3, n2)]).sum();
            assert_abs_diff_eq!(marg, p2[n2], epsilon = 1e-12);
        }
        let p2a = p2_alpha_direct(&proto).unwrap();
        let pa = tables.ambiguous().unwrap();
        for alpha in 0..3 {
            let marg: f64 = (0..3).map(|n3| pa[(n3, alpha)]).sum();
            assert_abs_diff_eq!(marg, p2a[alpha], epsilon = 1e-12);
        }
    }

    #[test]
    fn missing_detector_is_an_error() {
        let proto = identity_protocol(false);
        let tables = run_protocol(&proto).unwrap();
        assert!(tables.ambiguous().is_err());
        assert!(p2_alpha_direct(&proto).is_err());
    }
}
