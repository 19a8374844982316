//! Dense complex linear algebra for finite-dimensional quantum states:
//! density matrices, unitary evolution and projective measurement statistics.
//!
//! All scenarios in this crate have dimension M <= 4, so everything is a
//! dense `DMatrix<Complex64>` and validation is exact to a few ulps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LgError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Structural tolerance (Hermiticity, unitarity, trace, idempotence).
pub const STRUCT_TOL: f64 = 1e-12;
/// Tolerance for probabilistic sums (normalisation of tables).
pub const PROB_TOL: f64 = 1e-10;
/// Eigenvalue floor for positive semidefiniteness.
pub const PSD_FLOOR: f64 = -1e-10;

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn trace_re(m: &CMat) -> f64 {
    m.trace().re
}

/// Max elementwise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMat) -> f64 {
    let diff = m - m.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

fn check_finite(m: &CMat, what: &str) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LgError::InvalidState(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// M x M complex Hermitian unit-trace positive-semidefinite matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dim: usize,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (Hermitian eigensolve,
    /// construction-time only).
    pub fn new(mat: CMat) -> Result<Self> {
        let dim = mat.nrows();
        if dim < 2 || mat.ncols() != dim {
            return Err(LgError::InvalidState(format!(
                "density matrix must be square with dim >= 2, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        check_finite(&mat, "density matrix")?;
        let herm = hermiticity_error(&mat);
        if herm > STRUCT_TOL {
            return Err(LgError::InvalidState(format!(
                "density matrix not Hermitian (deviation {herm:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(LgError::InvalidState(format!(
                "density matrix trace {tr} != 1"
            )));
        }
        let eigs = mat.clone().symmetric_eigen().eigenvalues;
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < PSD_FLOOR {
                return Err(LgError::InvalidState(format!(
                    "density matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { dim, mat })
    }

    /// Pure state |psi><psi| from a (not necessarily normalised) vector.
    pub fn from_pure(psi: &CVec) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 || !norm2.is_finite() {
            return Err(LgError::InvalidState("pure state has zero or non-finite norm".into()));
        }
        let scale = Complex64::new(1.0 / norm2, 0.0);
        let mat = psi * psi.adjoint() * scale;
        Self::new(mat)
    }

    /// Basis state |n><n| in dimension `dim`.
    pub fn basis_state(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(LgError::OutcomeOutOfRange { index: n, count: dim });
        }
        let mut psi = CVec::zeros(dim);
        psi[n] = Complex64::new(1.0, 0.0);
        Self::from_pure(&psi)
    }

    /// Maximally mixed state 1/M.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let scale = Complex64::new(1.0 / dim as f64, 0.0);
        Self::new(identity(dim) * scale)
    }

    /// Skips the eigensolve; used by operations that preserve positivity
    /// (conjugation by unitaries, projectors, Hermitian Kraus operators).
    pub(crate) fn from_trusted(mat: CMat) -> Self {
        let dim = mat.nrows();
        debug_assert!(hermiticity_error(&mat) <= 1e-10);
        debug_assert!((mat.trace().re - 1.0).abs() <= 1e-10);
        Self { dim, mat }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }
}

/// Unitary time-evolution operator U, applied as rho -> U rho U^dag.
#[derive(Debug, Clone)]
pub struct UnitaryEvolution {
    dim: usize,
    mat: CMat,
}

impl UnitaryEvolution {
    pub fn new(mat: CMat) -> Result<Self> {
        let dim = mat.nrows();
        if mat.ncols() != dim || dim == 0 {
            return Err(LgError::InvalidUnitary(format!(
                "unitary must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        check_finite(&mat, "unitary")?;
        let dev = max_abs_diff(&(mat.adjoint() * &mat), &identity(dim));
        if dev > STRUCT_TOL {
            return Err(LgError::InvalidUnitary(format!(
                "U^dag U deviates from identity by {dev:.3e}"
            )));
        }
        Ok(Self { dim, mat })
    }

    pub fn identity_op(dim: usize) -> Self {
        Self { dim, mat: identity(dim) }
    }

    /// Real orthogonal matrix promoted to a unitary.
    pub fn from_real(mat: &DMatrix<f64>) -> Result<Self> {
        Self::new(mat.map(|x| Complex64::new(x, 0.0)))
    }

    /// Composition: (self later) . (first earlier), i.e. self * first.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        if self.dim != first.dim {
            return Err(LgError::DimensionMismatch { expected: self.dim, got: first.dim });
        }
        Ok(Self { dim: self.dim, mat: &self.mat * &first.mat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }
}

/// Orthogonal projectors {Pi_n} with dichotomic labels q(n) = +/-1.
///
/// The set must be complete (sum to the identity) but may have fewer
/// projectors than the dimension when outcomes are coarse-grained.
#[derive(Debug, Clone)]
pub struct LabeledProjectorSet {
    dim: usize,
    projectors: Vec<CMat>,
    q_labels: Vec<i8>,
    state_names: Option<Vec<String>>,
}

impl LabeledProjectorSet {
    pub fn new(projectors: Vec<CMat>, q_labels: Vec<i8>, state_names: Option<Vec<String>>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(LgError::InvalidProjectors("empty projector set".into()));
        }
        let dim = projectors[0].nrows();
        if q_labels.len() != projectors.len() {
            return Err(LgError::LabelMismatch { labels: q_labels.len(), outcomes: projectors.len() });
        }
        if q_labels.iter().any(|&q| q != 1 && q != -1) {
            return Err(LgError::InvalidProjectors("q-labels must be +1 or -1".into()));
        }
        if let Some(names) = &state_names {
            if names.len() != projectors.len() {
                return Err(LgError::LabelMismatch { labels: names.len(), outcomes: projectors.len() });
            }
        }
        let mut sum = CMat::zeros(dim, dim);
        for (k, p) in projectors.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(LgError::DimensionMismatch { expected: dim, got: p.nrows() });
            }
            check_finite(p, "projector")?;
            for (kp, q) in projectors.iter().enumerate() {
                let prod = p * q;
                let target = if k == kp { p.clone() } else { CMat::zeros(dim, dim) };
                let dev = max_abs_diff(&prod, &target);
                if dev > STRUCT_TOL {
                    return Err(LgError::InvalidProjectors(format!(
                        "Pi_{k} Pi_{kp} fails orthogonality/idempotence by {dev:.3e}"
                    )));
                }
            }
            sum += p;
        }
        let dev = max_abs_diff(&sum, &identity(dim));
        if dev > STRUCT_TOL {
            return Err(LgError::InvalidProjectors(format!(
                "projectors do not sum to identity (deviation {dev:.3e})"
            )));
        }
        Ok(Self { dim, projectors, q_labels, state_names })
    }

    /// One rank-1 projector per basis state.
    pub fn computational_basis(dim: usize, q_labels: Vec<i8>) -> Result<Self> {
        let projectors = (0..dim)
            .map(|n| {
                let mut p = CMat::zeros(dim, dim);
                p[(n, n)] = Complex64::new(1.0, 0.0);
                p
            })
            .collect();
        Self::new(projectors, q_labels, None)
    }

    /// Two-outcome set {|n><n|, 1 - |n><n|} with labels (q_in, q_out).
    pub fn basis_state_vs_rest(dim: usize, n: usize, q_in: i8, q_out: i8) -> Result<Self> {
        if n >= dim {
            return Err(LgError::OutcomeOutOfRange { index: n, count: dim });
        }
        let mut p = CMat::zeros(dim, dim);
        p[(n, n)] = Complex64::new(1.0, 0.0);
        let rest = identity(dim) - &p;
        Self::new(vec![p, rest], vec![q_in, q_out], None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes (may be less than dim for coarse-grained sets).
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projector(&self, k: usize) -> &CMat {
        &self.projectors[k]
    }

    pub fn projectors(&self) -> &[CMat] {
        &self.projectors
    }

    pub fn q_labels(&self) -> &[i8] {
        &self.q_labels
    }

    pub fn state_names(&self) -> Option<&[String]> {
        self.state_names.as_deref()
    }

    /// The observable sum_n q(n) Pi_n.
    pub fn q_operator(&self) -> CMat {
        let mut op = CMat::zeros(self.dim, self.dim);
        for (p, &q) in self.projectors.iter().zip(&self.q_labels) {
            op += p * Complex64::new(q as f64, 0.0);
        }
        op
    }
}

/// rho -> U rho U^dag.
pub fn evolve(rho: &DensityMatrix, u: &UnitaryEvolution) -> Result<DensityMatrix> {
    if rho.dim() != u.dim() {
        return Err(LgError::DimensionMismatch { expected: rho.dim(), got: u.dim() });
    }
    let out = u.matrix() * rho.matrix() * dagger(u.matrix());
    debug_assert!(hermiticity_error(&out) <= 1e-10);
    debug_assert!((out.trace().re - 1.0).abs() <= 1e-10);
    Ok(DensityMatrix::from_trusted(out))
}

/// P(n) = tr(Pi_n rho), clamped to [0, 1].
pub fn probabilities_projective(rho: &DensityMatrix, meas: &LabeledProjectorSet) -> Result<Vec<f64>> {
    if rho.dim() != meas.dim() {
        return Err(LgError::DimensionMismatch { expected: rho.dim(), got: meas.dim() });
    }
    meas.projectors()
        .iter()
        .map(|p| clamp_probability(trace_re(&(p * rho.matrix()))))
        .collect()
}

/// Rounding noise in [-1e-12, 0) is clamped to 0; anything more negative is a bug.
pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    if p < -STRUCT_TOL {
        return Err(LgError::Inconsistent(format!("probability {p:.3e} below tolerance floor")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Lueders update: returns (P(n), Pi_n rho Pi_n / P(n)).
/// A zero-probability outcome yields (0, None).
pub fn post_measurement_state_projective(
    rho: &DensityMatrix,
    meas: &LabeledProjectorSet,
    outcome: usize,
) -> Result<(f64, Option<DensityMatrix>)> {
    if outcome >= meas.len() {
        return Err(LgError::OutcomeOutOfRange { index: outcome, count: meas.len() });
    }
    if rho.dim() != meas.dim() {
        return Err(LgError::DimensionMismatch { expected: rho.dim(), got: meas.dim() });
    }
    let pi = meas.projector(outcome);
    let branch = pi * rho.matrix() * pi;
    let p = clamp_probability(trace_re(&branch))?;
    if p == 0.0 {
        return Ok((0.0, None));
    }
    let state = DensityMatrix::from_trusted(branch * Complex64::new(1.0 / p, 0.0));
    Ok((p, Some(state)))
}

/// Cross term X(n3, n, n') = tr{ Pi_{n3} U32 (Pi_n rho2 Pi_n') U32^dag }.
///
/// Off-diagonal (n != n') terms carry the coherences of rho2 in the t2 basis
/// and are complex in general, with X(n3, n, n') = conj(X(n3, n', n)).
pub fn cross_term_x(
    rho2: &DensityMatrix,
    u32: &UnitaryEvolution,
    meas2: &LabeledProjectorSet,
    meas3: &LabeledProjectorSet,
    n3: usize,
    n: usize,
    nprime: usize,
) -> Result<Complex64> {
    if n3 >= meas3.len() {
        return Err(LgError::OutcomeOutOfRange { index: n3, count: meas3.len() });
    }
    if n >= meas2.len() || nprime >= meas2.len() {
        return Err(LgError::OutcomeOutOfRange { index: n.max(nprime), count: meas2.len() });
    }
    let dims = [rho2.dim(), u32.dim(), meas2.dim(), meas3.dim()];
    if dims.iter().any(|&d| d != rho2.dim()) {
        return Err(LgError::DimensionMismatch { expected: rho2.dim(), got: *dims.iter().find(|&&d| d != rho2.dim()).unwrap() });
    }
    let sandwiched = meas2.projector(n) * rho2.matrix() * meas2.projector(nprime);
    let evolved = u32.matrix() * sandwiched * dagger(u32.matrix());
    Ok((meas3.projector(n3) * evolved).trace())
}
