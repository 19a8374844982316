//! Ambiguous detectors: the conditional-probability matrix c, its left
//! inverse d, the derived Kraus operators and the gamma / Gamma coefficients
//! that control signalling and LGI-violating terms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LgError, Result};
use crate::quantum::{identity, max_abs_diff, CMat, LabeledProjectorSet, STRUCT_TOL};

/// Tolerance for the left-inverse property d c = 1 and column sums of d.
pub const INVERSE_TOL: f64 = 1e-10;

/// An ambiguous measurement: response alpha occurs with probability
/// c[alpha][n] given unambiguous state n.  d is a left inverse of c with
/// unit column sums, so quasiprobabilities P(n) = sum_alpha d[n][alpha] P(alpha)
/// reconstruct the state distribution.
#[derive(Debug, Clone)]
pub struct AmbiguousDetector {
    m: usize,
    m_a: usize,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    response_names: Option<Vec<String>>,
}

impl AmbiguousDetector {
    /// Build from c alone; d is the minimal-norm left inverse corrected to
    /// conserve probability (unit column sums).
    pub fn from_c(c: DMatrix<f64>) -> Result<Self> {
        let d = left_inverse(&c)?;
        Self::from_c_and_d(c, d)
    }

    /// Build from an explicit (c, d) pair; both are validated.
    pub fn from_c_and_d(c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let m_a = c.nrows();
        let m = c.ncols();
        if m == 0 || m_a < m {
            return Err(LgError::InvalidDetector(format!(
                "need M_A >= M >= 1, got c of shape {m_a}x{m}"
            )));
        }
        if c.iter().any(|&x| !x.is_finite() || x < 0.0 || x > 1.0) {
            return Err(LgError::InvalidDetector("c entries must lie in [0, 1]".into()));
        }
        for n in 0..m {
            let s: f64 = c.column(n).sum();
            if (s - 1.0).abs() > STRUCT_TOL {
                return Err(LgError::InvalidDetector(format!(
                    "column {n} of c sums to {s}, expected 1"
                )));
            }
        }
        if d.nrows() != m || d.ncols() != m_a {
            return Err(LgError::InvalidDetector(format!(
                "d must be {m}x{m_a}, got {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        let dev = (&d * &c - DMatrix::<f64>::identity(m, m))
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        if dev > INVERSE_TOL {
            return Err(LgError::InvalidDetector(format!(
                "d is not a left inverse of c (deviation {dev:.3e})"
            )));
        }
        for alpha in 0..m_a {
            let s: f64 = d.column(alpha).sum();
            if (s - 1.0).abs() > INVERSE_TOL {
                return Err(LgError::InvalidDetector(format!(
                    "column {alpha} of d sums to {s}, violating probability conservation"
                )));
            }
        }
        Ok(Self { m, m_a, c, d, response_names: None })
    }

    pub fn with_response_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.m_a {
            return Err(LgError::LabelMismatch { labels: names.len(), outcomes: self.m_a });
        }
        self.response_names = Some(names);
        Ok(self)
    }

    /// The trivial detector: responses coincide with states, c = d = 1.
    pub fn unambiguous(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(LgError::InvalidParameter("M must be positive".into()));
        }
        Self::from_c_and_d(DMatrix::identity(m, m), DMatrix::identity(m, m))
    }

    /// Inverted measurement: response alpha means "any state except alpha".
    /// c = (J - 1)/(M - 1), d = J - (M - 1) 1.
    pub fn inverted(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(LgError::InvalidParameter(format!(
                "inverted measurement needs M >= 3, got {m}"
            )));
        }
        let ones = DMatrix::<f64>::from_element(m, m, 1.0);
        let eye = DMatrix::<f64>::identity(m, m);
        let c = (&ones - &eye) / (m as f64 - 1.0);
        let d = &ones - &eye * (m as f64 - 1.0);
        Self::from_c_and_d(c, d)
    }

    /// Biased detector family that becomes a weak measurement as epsilon -> 0:
    /// c = ((1 - eps)/M) J + eps 1, d = (1/eps) 1 + ((eps - 1)/(eps M)) J.
    pub fn weak(m: usize, epsilon: f64) -> Result<Self> {
        if m < 2 {
            return Err(LgError::InvalidParameter(format!("weak detector needs M >= 2, got {m}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(LgError::InvalidParameter(format!(
                "epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        let ones = DMatrix::<f64>::from_element(m, m, 1.0);
        let eye = DMatrix::<f64>::identity(m, m);
        let c = &ones * ((1.0 - epsilon) / m as f64) + &eye * epsilon;
        let d = &eye * (1.0 / epsilon) + &ones * ((epsilon - 1.0) / (epsilon * m as f64));
        Self::from_c_and_d(c, d)
    }

    pub fn num_states(&self) -> usize {
        self.m
    }

    pub fn num_responses(&self) -> usize {
        self.m_a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn response_names(&self) -> Option<&[String]> {
        self.response_names.as_deref()
    }

    /// gamma(n, n') = 1 - sum_alpha sqrt(c[alpha][n] c[alpha][n']).
    /// Symmetric with zero diagonal; 1 off-diagonal for orthogonal responses.
    pub fn gamma(&self) -> DMatrix<f64> {
        let mut g = DMatrix::<f64>::zeros(self.m, self.m);
        for n in 0..self.m {
            for np in 0..self.m {
                let overlap: f64 = (0..self.m_a)
                    .map(|a| (self.c[(a, n)] * self.c[(a, np)]).sqrt())
                    .sum();
                g[(n, np)] = 1.0 - overlap;
            }
        }
        g
    }

    /// Gamma(n2, n, n') = sum_alpha d[n2][alpha] sqrt(c[alpha][n] c[alpha][n']),
    /// returned as one M x M matrix per n2.
    pub fn big_gamma(&self) -> Vec<DMatrix<f64>> {
        (0..self.m)
            .map(|n2| {
                let mut g = DMatrix::<f64>::zeros(self.m, self.m);
                for n in 0..self.m {
                    for np in 0..self.m {
                        g[(n, np)] = (0..self.m_a)
                            .map(|a| self.d[(n2, a)] * (self.c[(a, n)] * self.c[(a, np)]).sqrt())
                            .sum();
                    }
                }
                g
            })
            .collect()
    }

    /// Hermitian Kraus operators M_alpha = sum_n sqrt(c[alpha][n]) Pi_n.
    pub fn kraus_operators(&self, basis: &LabeledProjectorSet) -> Result<KrausSet> {
        if basis.len() != self.m {
            return Err(LgError::DimensionMismatch { expected: self.m, got: basis.len() });
        }
        let dim = basis.dim();
        let ops: Vec<CMat> = (0..self.m_a)
            .map(|a| {
                let mut op = CMat::zeros(dim, dim);
                for n in 0..self.m {
                    op += basis.projector(n) * Complex64::new(self.c[(a, n)].sqrt(), 0.0);
                }
                op
            })
            .collect();
        KrausSet::new(ops)
    }
}

/// Hermitian Kraus operators of an ambiguous measurement; completeness
/// sum_alpha M_alpha^2 = 1 is enforced.
#[derive(Debug, Clone)]
pub struct KrausSet {
    ops: Vec<CMat>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        if ops.is_empty() {
            return Err(LgError::InvalidDetector("empty Kraus set".into()));
        }
        let dim = ops[0].nrows();
        let mut sum = CMat::zeros(dim, dim);
        for op in &ops {
            let herm = crate::quantum::hermiticity_error(op);
            if herm > STRUCT_TOL {
                return Err(LgError::InvalidDetector(format!(
                    "Kraus operator not Hermitian (deviation {herm:.3e})"
                )));
            }
            sum += op * op;
        }
        let dev = max_abs_diff(&sum, &identity(dim));
        if dev > STRUCT_TOL {
            return Err(LgError::InvalidDetector(format!(
                "Kraus completeness fails by {dev:.3e}"
            )));
        }
        Ok(Self { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn operator(&self, alpha: usize) -> &CMat {
        &self.ops[alpha]
    }

    pub fn operators(&self) -> &[CMat] {
        &self.ops
    }
}

/// Left inverse of a column-stochastic c with unit column sums.
///
/// The pseudoinverse handles the minimal-norm part; when the all-ones vector
/// is outside the column space of c a rank-one correction restores
/// sum_n d[n][alpha] = 1 without disturbing d c = 1.
pub fn left_inverse(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m_a = c.nrows();
    let m = c.ncols();
    let pinv = c
        .clone()
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .map_err(|e| LgError::InvalidDetector(format!("pseudoinverse failed: {e}")))?;
    // Rank check: pinv * c must be the identity, otherwise reconstruction is impossible.
    let dev = (&pinv * c - DMatrix::<f64>::identity(m, m))
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    if dev > INVERSE_TOL {
        return Err(LgError::InvalidDetector(format!(
            "c is rank deficient (rank < {m}); ambiguous responses give insufficient information"
        )));
    }
    let ones_a = DVector::<f64>::from_element(m_a, 1.0);
    let proj = c * (&pinv * &ones_a); // projection of the ones vector onto colspace(c)
    let residual = &ones_a - &proj;
    let correction = DVector::<f64>::from_element(m, 1.0 / m as f64) * residual.transpose();
    Ok(pinv + correction)
}

/// Declarative detector description, loadable from a config document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DetectorSpec {
    Unambiguous,
    Inverted,
    Weak { epsilon: f64 },
    Custom {
        /// Row-major c matrix: one row per ambiguous response.
        c: Vec<Vec<f64>>,
        /// Optional explicit left inverse; defaults to the corrected pseudoinverse.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<Vec<Vec<f64>>>,
    },
}

impl DetectorSpec {
    pub fn build(&self, m: usize) -> Result<AmbiguousDetector> {
        match self {
            DetectorSpec::Unambiguous => AmbiguousDetector::unambiguous(m),
            DetectorSpec::Inverted => AmbiguousDetector::inverted(m),
            DetectorSpec::Weak { epsilon } => AmbiguousDetector::weak(m, *epsilon),
            DetectorSpec::Custom { c, d } => {
                let cm = rows_to_matrix(c)?;
                if cm.ncols() != m {
                    return Err(LgError::DimensionMismatch { expected: m, got: cm.ncols() });
                }
                match d {
                    Some(rows) => AmbiguousDetector::from_c_and_d(cm, rows_to_matrix(rows)?),
                    None => AmbiguousDetector::from_c(cm),
                }
            }
        }
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(LgError::InvalidDetector("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(LgError::InvalidDetector("ragged matrix rows".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}
