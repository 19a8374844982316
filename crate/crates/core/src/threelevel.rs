//! The three-level experiment: a three-parameter rotation, an inverted
//! detector, and a chi-solver that switches off the ambiguous signalling.
//!
//! Everything scans need is evaluated on a fast real-arithmetic path
//! (`point_metrics`): the unitary is a product of real rotations and the
//! initial state is a basis state, so every cross term X(n3,n,n') reduces to
//! a product of two real amplitudes.  The generic complex pipeline in
//! `protocol` / `metrics` serves as the oracle the fast path is tested
//! against.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::AmbiguousDetector;
use crate::error::{LgError, Result};
use crate::protocol::ExperimentProtocol;
use crate::quantum::{DensityMatrix, LabeledProjectorSet, UnitaryEvolution};

/// Measurement assignment q(A) = -q(B) = q(C) = 1, used at both t2 and t3.
pub const Q_LABELS: [i8; 3] = [1, -1, 1];

/// Bisection tolerance of the chi-solver (width of the final bracket).
pub const CHI_TOL: f64 = 1e-12;
/// Number of samples used to bracket chi-roots on [0, pi].
pub const CHI_SAMPLES: usize = 256;

/// Angles of the three-plane rotation, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeLevelParams {
    pub phi: f64,
    pub chi: f64,
    pub theta: f64,
}

impl ThreeLevelParams {
    pub fn new(phi: f64, chi: f64, theta: f64) -> Result<Self> {
        if !(phi.is_finite() && chi.is_finite() && theta.is_finite()) {
            return Err(LgError::InvalidParameter("angles must be finite".into()));
        }
        Ok(Self { phi, chi, theta })
    }
}

/// U(phi,chi,theta) as a real matrix: an AB-plane rotation by phi, then an
/// AC-plane rotation by chi, then a BC-plane rotation by theta (left-most
/// factor).
///
/// Naming note: theta drives the BC-plane rotation and phi the AB-plane
/// one; the benchmark maxima in the tests pin this assignment.
pub fn rotation(params: &ThreeLevelParams) -> Matrix3<f64> {
    let (st, ct) = params.theta.sin_cos();
    let (sx, cx) = params.chi.sin_cos();
    let (sp, cp) = params.phi.sin_cos();
    let r_bc = Matrix3::new(1.0, 0.0, 0.0, 0.0, ct, st, 0.0, -st, ct);
    let r_ac = Matrix3::new(cx, 0.0, sx, 0.0, 1.0, 0.0, -sx, 0.0, cx);
    let r_ab = Matrix3::new(cp, sp, 0.0, -sp, cp, 0.0, 0.0, 0.0, 1.0);
    r_bc * r_ac * r_ab
}

/// The same rotation as a validated complex evolution operator.
pub fn build_unitary(params: &ThreeLevelParams) -> Result<UnitaryEvolution> {
    let r = rotation(params);
    UnitaryEvolution::from_real(&nalgebra::DMatrix::from_fn(3, 3, |i, j| r[(i, j)]))
}

/// The full three-level protocol: rho1 = |C><C|, U21 = U32 = U, the
/// computational basis with q = (1,-1,1) at both times, and the inverted
/// detector at t2.
pub fn protocol_at(params: &ThreeLevelParams) -> Result<ExperimentProtocol> {
    let u = build_unitary(params)?;
    let meas = LabeledProjectorSet::computational_basis(3, Q_LABELS.to_vec())?;
    ExperimentProtocol::new(
        DensityMatrix::basis_state(3, 2)?,
        u.clone(),
        u,
        meas.clone(),
        Some(AmbiguousDetector::inverted(3)?),
        meas,
    )
}

/// Everything a grid point reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointMetrics {
    pub delta_a: [f64; 3],
    pub delta: [f64; 3],
    pub delta_total: f64,
    pub delta_a_total: f64,
    pub k: f64,
    pub k_a: f64,
    pub weak_k: f64,
}

/// Evaluate all correlators and signalling quantifiers of the three-level
/// protocol directly from the real rotation matrix.
///
/// With psi2 = U|C> and a(n3,n) = U(n3,n) psi2(n), the cross terms are
/// X(n3,n,n') = a(n3,n) a(n3,n'), and for the M = 3 inverted detector
/// gamma(n,n') = 1/2 for every pair, so
/// delta_A(n3) = (s^2 - q)/2 with s = sum_n a(n3,n), q = sum_n a(n3,n)^2,
/// and delta = 2 delta_A.  The kappa term collapses to
/// kappa(n2,n3) = delta_A(n3) - 2 a(n3,x) a(n3,y) with {x,y} the two states
/// other than n2.
pub fn point_metrics(u: &Matrix3<f64>) -> PointMetrics {
    let psi: [f64; 3] = [u[(0, 2)], u[(1, 2)], u[(2, 2)]];
    // state at t3 without a t2 measurement: w = U psi
    let w: [f64; 3] = [
        u[(0, 0)] * psi[0] + u[(0, 1)] * psi[1] + u[(0, 2)] * psi[2],
        u[(1, 0)] * psi[0] + u[(1, 1)] * psi[1] + u[(1, 2)] * psi[2],
        u[(2, 0)] * psi[0] + u[(2, 1)] * psi[1] + u[(2, 2)] * psi[2],
    ];

    let mut a = [[0.0; 3]; 3];
    let mut delta_a = [0.0; 3];
    for n3 in 0..3 {
        let mut s = 0.0;
        let mut q = 0.0;
        for n in 0..3 {
            let amp = u[(n3, n)] * psi[n];
            a[n3][n] = amp;
            s += amp;
            q += amp * amp;
        }
        delta_a[n3] = 0.5 * (s * s - q);
    }
    let delta = [2.0 * delta_a[0], 2.0 * delta_a[1], 2.0 * delta_a[2]];
    let delta_a_total: f64 = delta_a.iter().map(|d| d.abs()).sum();
    let delta_total = 2.0 * delta_a_total;

    let coef = |n2: usize, n3: usize| {
        let q2 = Q_LABELS[n2] as f64;
        let q3 = Q_LABELS[n3] as f64;
        q2 + q2 * q3 - q3
    };
    let others = |n2: usize| match n2 {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };

    let mut k = 0.0;
    let mut k_a = 0.0;
    for n3 in 0..3 {
        for n2 in 0..3 {
            let p = a[n3][n2] * a[n3][n2];
            let (x, y) = others(n2);
            let kappa = delta_a[n3] - 2.0 * a[n3][x] * a[n3][y];
            k += coef(n2, n3) * p;
            k_a += coef(n2, n3) * (p + kappa);
        }
        let q3 = Q_LABELS[n3] as f64;
        k -= q3 * delta[n3];
        k_a -= q3 * delta_a[n3];
    }

    // weak-measurement limit: <Qh2> + <{Qh2,Qh3}>/2 - <Qh3> on |C>
    let qd = [1.0, -1.0, 1.0];
    let mut q2_ev = 0.0;
    let mut q3_ev = 0.0;
    for n in 0..3 {
        q2_ev += qd[n] * psi[n] * psi[n];
        q3_ev += qd[n] * w[n] * w[n];
    }
    // <C| Qh2 Qh3 |C> = psi^T Q U^T Q w, real and symmetric under exchange
    let mut cross = 0.0;
    for n in 0..3 {
        for m in 0..3 {
            cross += psi[n] * qd[n] * u[(m, n)] * qd[m] * w[m];
        }
    }
    let weak_k = q2_ev + cross - q3_ev;

    PointMetrics {
        delta_a,
        delta,
        delta_total,
        delta_a_total,
        k,
        k_a,
        weak_k,
    }
}

/// delta_A(A) at the given angles: the quantity the chi-solver drives to zero.
pub fn delta_a_of_a(phi: f64, chi: f64, theta: f64) -> f64 {
    let u = rotation(&ThreeLevelParams { phi, chi, theta });
    let psi = [u[(0, 2)], u[(1, 2)], u[(2, 2)]];
    let mut s = 0.0;
    let mut q = 0.0;
    for n in 0..3 {
        let amp = u[(0, n)] * psi[n];
        s += amp;
        q += amp * amp;
    }
    0.5 * (s * s - q)
}

/// Solve delta_A(A) = 0 for chi on [0, pi].
///
/// chi = 0 (and chi = pi) solve the equation trivially at every (phi, theta):
/// the A-row of the cross-term amplitudes then has a single non-zero entry.
/// The interesting branch is therefore the leftmost *strict* sign change:
/// sample at `CHI_SAMPLES` points, take the first bracket with
/// f(a) f(b) < 0, and bisect until the bracket is narrower than `tol`.
/// Where no sign change exists, an exact-zero sample (the trivial root, or a
/// touching zero that lands on a sample point) is returned as a fallback;
/// with neither, the point has no root.
pub fn solve_chi(phi: f64, theta: f64, tol: f64) -> Result<Option<f64>> {
    if tol <= 0.0 {
        return Err(LgError::InvalidParameter("tolerance must be positive".into()));
    }
    let f = |chi: f64| delta_a_of_a(phi, chi, theta);
    let n = CHI_SAMPLES;
    let step = std::f64::consts::PI / n as f64;
    let mut exact = None;
    let mut prev_x = 0.0;
    let mut prev_f = f(0.0);
    if prev_f == 0.0 {
        exact = Some(0.0);
    }
    for i in 1..=n {
        let x = i as f64 * step;
        let fx = f(x);
        if fx == 0.0 && exact.is_none() {
            exact = Some(x);
        }
        if prev_f * fx < 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            let mut flo = prev_f;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        prev_x = x;
        prev_f = fx;
    }
    Ok(exact)
}

/// Polish a chi-root near `guess` by bracket expansion and bisection; used
/// when following a root branch continuously.
pub fn polish_chi(phi: f64, theta: f64, guess: f64) -> Option<f64> {
    let f = |chi: f64| delta_a_of_a(phi, chi, theta);
    let mut h = 1e-4;
    while h < 0.3 {
        let (a, b) = (guess - h, guess + h);
        let (fa, fb) = (f(a), f(b));
        if fa * fb <= 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            while hi - lo > CHI_TOL {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        h *= 2.0;
    }
    None
}

/// What a contour or cut maximization optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// The ambiguously-measured correlator K_A (inverted detector).
    KA,
    /// The weak-measurement limit of K_A.
    WeakK,
}

impl Objective {
    pub fn eval(&self, m: &PointMetrics) -> f64 {
        match self {
            Objective::KA => m.k_a,
            Objective::WeakK => m.weak_k,
        }
    }
}

/// One grid point of a scan.  `chi` and `metrics` are None when the
/// chi-solver found no root at (theta, phi).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRecord {
    pub theta: f64,
    pub phi: f64,
    pub chi: Option<f64>,
    pub metrics: Option<PointMetrics>,
}

/// A rectangular (theta, phi) scan with chi solved at every point.
/// Records are stored theta-major: index = i_theta * phi_axis.len() + i_phi.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanGrid {
    pub theta_axis: Vec<f64>,
    pub phi_axis: Vec<f64>,
    pub records: Vec<ScanRecord>,
}

impl ScanGrid {
    pub fn record(&self, i_theta: usize, i_phi: usize) -> &ScanRecord {
        &self.records[i_theta * self.phi_axis.len() + i_phi]
    }

    /// Maximum K_A over all solved points, with its record.
    pub fn max_k_a(&self) -> Option<&ScanRecord> {
        self.records
            .iter()
            .filter(|r| r.metrics.is_some())
            .max_by(|a, b| {
                a.metrics
                    .unwrap()
                    .k_a
                    .partial_cmp(&b.metrics.unwrap().k_a)
                    .unwrap()
            })
    }

    /// Maximum weak-limit K over all solved points, with its record.
    pub fn max_weak_k(&self) -> Option<&ScanRecord> {
        self.records
            .iter()
            .filter(|r| r.metrics.is_some())
            .max_by(|a, b| {
                a.metrics
                    .unwrap()
                    .weak_k
                    .partial_cmp(&b.metrics.unwrap().weak_k)
                    .unwrap()
            })
    }
}

fn uniform_axis(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    let step = (range.1 - range.0) / (n - 1) as f64;
    (0..n).map(|i| range.0 + i as f64 * step).collect()
}

/// Evaluate one grid point: solve chi, then compute all metrics.
pub fn evaluate_point(theta: f64, phi: f64, chi_tol: f64) -> Result<ScanRecord> {
    let chi = solve_chi(phi, theta, chi_tol)?;
    let metrics = chi.map(|chi| {
        point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta }))
    });
    Ok(ScanRecord { theta, phi, chi, metrics })
}

/// Scan a (theta, phi) rectangle at the given per-axis resolution, solving
/// chi at every point.  Points are evaluated in parallel and gathered in
/// grid order, so the result does not depend on scheduling.
pub fn scan(
    theta_range: (f64, f64),
    phi_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<ScanGrid> {
    if resolution.0 < 2 || resolution.1 < 2 {
        return Err(LgError::InvalidParameter(
            "resolution must be at least 2 per axis".into(),
        ));
    }
    let theta_axis = uniform_axis(theta_range, resolution.0);
    let phi_axis = uniform_axis(phi_range, resolution.1);
    let records: Vec<ScanRecord> = theta_axis
        .par_iter()
        .flat_map_iter(|&theta| {
            phi_axis
                .iter()
                .map(move |&phi| evaluate_point(theta, phi, CHI_TOL))
        })
        .collect::<Result<_>>()?;
    Ok(ScanGrid { theta_axis, phi_axis, records })
}

/// A no-signalling point on a fixed-theta cut: all three delta_A components
/// vanish there.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CutCrossing {
    pub params: ThreeLevelParams,
    pub metrics: PointMetrics,
}

/// Locate the zero-signalling crossings of the phi in [0, pi] cut at fixed
/// theta: points where delta_A(B) changes sign along the solved chi-branch.
pub fn cut_crossings(theta: f64, samples: usize) -> Result<Vec<CutCrossing>> {
    if samples < 2 {
        return Err(LgError::InvalidParameter("need at least 2 samples".into()));
    }
    let step = std::f64::consts::PI / (samples - 1) as f64;
    let eval = |phi: f64, guess: Option<f64>| -> Result<Option<(f64, PointMetrics)>> {
        let chi = match guess {
            Some(g) => polish_chi(phi, theta, g),
            None => solve_chi(phi, theta, CHI_TOL)?,
        };
        Ok(chi.map(|chi| {
            (chi, point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta })))
        }))
    };
    let mut crossings = Vec::new();
    let mut prev: Option<(f64, f64, f64)> = None; // (phi, chi, delta_a_b)
    for i in 0..samples {
        let phi = i as f64 * step;
        let cur = eval(phi, None)?;
        if let (Some((p0, c0, d0)), Some((chi, m))) = (prev, &cur) {
            let d1 = m.delta_a[1];
            // stay on one branch: the root must move continuously
            if (c0 - chi).abs() < 0.2 && d0 * d1 < 0.0 {
                let (mut lo, mut hi, mut flo, mut chi_g) = (p0, phi, d0, c0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    match eval(mid, Some(chi_g))? {
                        Some((c, m)) => {
                            chi_g = c;
                            let fm = m.delta_a[1];
                            if flo * fm <= 0.0 {
                                hi = mid;
                            } else {
                                lo = mid;
                                flo = fm;
                            }
                        }
                        None => break,
                    }
                    if hi - lo < 1e-13 {
                        break;
                    }
                }
                let phi_star = 0.5 * (lo + hi);
                if let Some((chi_star, m)) = eval(phi_star, Some(chi_g))? {
                    if m.delta_a.iter().all(|d| d.abs() < 1e-8) {
                        crossings.push(CutCrossing {
                            params: ThreeLevelParams { phi: phi_star, chi: chi_star, theta },
                            metrics: m,
                        });
                    }
                }
            }
        }
        prev = cur.map(|(chi, m)| (phi, chi, m.delta_a[1]));
    }
    Ok(crossings)
}

/// Maximize an objective along the fixed-theta cut, following the chi-branch
/// that passes through each zero-signalling crossing.  Returns the best
/// (params, value) over all crossings, refined by golden-section in phi.
pub fn maximize_on_cut(theta: f64, objective: Objective) -> Result<(ThreeLevelParams, f64)> {
    let crossings = cut_crossings(theta, 512)?;
    if crossings.is_empty() {
        return Err(LgError::NoRoot(format!(
            "no zero-signalling crossing on the theta = {theta} cut"
        )));
    }
    let mut best: Option<(ThreeLevelParams, f64)> = None;
    for crossing in &crossings {
        let mut consider = |params: ThreeLevelParams, value: f64| {
            if best.map_or(true, |(_, b)| value > b) {
                best = Some((params, value));
            }
        };
        consider(crossing.params, objective.eval(&crossing.metrics));
        // walk the branch in both directions, tracking the objective
        let step = std::f64::consts::PI / 4096.0;
        for dir in [-1.0, 1.0] {
            let mut phi = crossing.params.phi;
            let mut chi = crossing.params.chi;
            let mut history: Vec<(f64, f64, f64)> = Vec::new(); // (phi, chi, value)
            loop {
                phi += dir * step;
                if !(0.0..=std::f64::consts::PI).contains(&phi) {
                    break;
                }
                match polish_chi(phi, theta, chi) {
                    Some(c) => {
                        chi = c;
                        let m = point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta }));
                        history.push((phi, chi, objective.eval(&m)));
                    }
                    None => break,
                }
            }
            // golden-section around the best sample of this walk
            if let Some(&(p_best, c_best, v_best)) =
                history.iter().max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            {
                consider(ThreeLevelParams { phi: p_best, chi: c_best, theta }, v_best);
                let golden = 0.5 * (5.0f64.sqrt() - 1.0);
                let (mut lo, mut hi) = (p_best - step, p_best + step);
                let value_at = |phi: f64, guess: f64| -> Option<(f64, f64)> {
                    polish_chi(phi, theta, guess).map(|chi| {
                        let m =
                            point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta }));
                        (chi, objective.eval(&m))
                    })
                };
                let mut x1 = hi - golden * (hi - lo);
                let mut x2 = lo + golden * (hi - lo);
                let (mut f1, mut f2) = match (value_at(x1, c_best), value_at(x2, c_best)) {
                    (Some((_, f1)), Some((_, f2))) => (f1, f2),
                    _ => continue,
                };
                for _ in 0..80 {
                    if f1 < f2 {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + golden * (hi - lo);
                        match value_at(x2, c_best) {
                            Some((_, f)) => f2 = f,
                            None => break,
                        }
                    } else {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - golden * (hi - lo);
                        match value_at(x1, c_best) {
                            Some((_, f)) => f1 = f,
                            None => break,
                        }
                    }
                }
                let mid = 0.5 * (lo + hi);
                if let Some((chi, v)) = value_at(mid, c_best) {
                    consider(ThreeLevelParams { phi: mid, chi, theta }, v);
                }
            }
        }
    }
    best.ok_or_else(|| LgError::NoRoot("cut maximization found no candidate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{
        correlator_k, correlator_k_ambiguous, correlator_k_ambiguous_via_decomposition,
        signalling_report, weak_limit_k,
    };
    use crate::protocol::run_protocol;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn rotation_at_zero_is_identity() {
        let u = rotation(&ThreeLevelParams { phi: 0.0, chi: 0.0, theta: 0.0 });
        assert_abs_diff_eq!((u - Matrix3::identity()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn quarter_ac_rotation_moves_c_to_a() {
        let u = rotation(&ThreeLevelParams { phi: 0.0, chi: PI / 2.0, theta: 0.0 });
        assert_abs_diff_eq!(u[(0, 2)].abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn build_unitary_validates() {
        let p = ThreeLevelParams { phi: 1.1, chi: 0.4, theta: 2.2 };
        assert!(build_unitary(&p).is_ok());
    }

    #[test]
    fn fast_path_matches_generic_pipeline() {
        // a rational-multiple-of-pi point plus a few irrational angles
        let points = [
            (PI / 3.0, PI / 5.0, PI / 7.0),
            (0.9, 1.7, 2.5),
            (2.2, 0.3, 0.8),
            (1.234, 2.345, 0.456),
        ];
        for (phi, chi, theta) in points {
            let params = ThreeLevelParams { phi, chi, theta };
            let fast = point_metrics(&rotation(&params));

            let proto = protocol_at(&params).unwrap();
            let tables = run_protocol(&proto).unwrap();
            let report = signalling_report(&tables).unwrap();
            for n3 in 0..3 {
                assert_abs_diff_eq!(fast.delta_a[n3], report.delta_a[n3], epsilon = 1e-10);
                assert_abs_diff_eq!(fast.delta[n3], report.delta[n3], epsilon = 1e-10);
            }
            let k = correlator_k(&tables, &Q_LABELS, &Q_LABELS).unwrap();
            assert_abs_diff_eq!(fast.k, k, epsilon = 1e-10);
            let det = proto.detector().unwrap();
            let ka = correlator_k_ambiguous(&tables, det, &Q_LABELS, &Q_LABELS).unwrap();
            assert_abs_diff_eq!(fast.k_a, ka.value, epsilon = 1e-10);
            let ka_dec = correlator_k_ambiguous_via_decomposition(&proto).unwrap();
            assert_abs_diff_eq!(fast.k_a, ka_dec.value, epsilon = 1e-10);
            let wk = weak_limit_k(&proto).unwrap();
            assert_abs_diff_eq!(fast.weak_k, wk, epsilon = 1e-10);
        }
    }

    #[test]
    fn inverted_identity_holds_pointwise() {
        let m = point_metrics(&rotation(&ThreeLevelParams { phi: 0.6, chi: 1.9, theta: 2.8 }));
        for n3 in 0..3 {
            assert_abs_diff_eq!(m.delta[n3], 2.0 * m.delta_a[n3], epsilon = 1e-12);
        }
    }

    #[test]
    fn chi_solver_residual() {
        let cases = [(0.5, 1.0), (2.0, 2.9), (1.3, 0.4), (0.5 * PI, 0.831 * PI)];
        for (phi, theta) in cases {
            if let Some(chi) = solve_chi(phi, theta, CHI_TOL).unwrap() {
                assert!(delta_a_of_a(phi, chi, theta).abs() < 1e-11);
                // at the solved chi: delta_A(B) = -delta_A(C)
                let m = point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta }));
                assert_abs_diff_eq!(m.delta_a[1], -m.delta_a[2], epsilon = 1e-10);
            } else {
                panic!("expected a chi-root at ({phi}, {theta})");
            }
        }
    }

    #[test]
    fn chi_zero_solves_phi_zero() {
        // at phi = 0 the solver finds the root at chi = 0
        let chi = solve_chi(0.0, 1.1, CHI_TOL).unwrap().unwrap();
        assert!(chi.abs() < 1e-6, "chi = {chi}");
    }

    #[test]
    fn solver_rejects_bad_tolerance() {
        assert!(solve_chi(0.5, 0.5, 0.0).is_err());
        assert!(solve_chi(0.5, 0.5, -1.0).is_err());
    }

    #[test]
    fn coarse_scan_contains_the_trivial_point() {
        let grid = scan((0.0, 1.0), (0.0, 1.0), (2, 2)).unwrap();
        assert_eq!(grid.records.len(), 4);
        let origin = grid.record(0, 0);
        let m = origin.metrics.as_ref().unwrap();
        assert_abs_diff_eq!(m.k_a, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn scan_rejects_degenerate_resolution() {
        assert!(scan((0.0, 1.0), (0.0, 1.0), (1, 2)).is_err());
    }

    #[test]
    fn cut_maximum_matches_benchmark() {
        let (params, value) = maximize_on_cut(0.831 * PI, Objective::KA).unwrap();
        assert!((value - 1.482).abs() < 5e-3, "cut K_A = {value}");
        let m = point_metrics(&rotation(&params));
        assert!(m.delta_a[0].abs() < 1e-8, "residual delta_A(A) {}", m.delta_a[0]);
    }

    #[test]
    fn weak_cut_maximum_matches_benchmark() {
        let (params, value) = maximize_on_cut(0.856 * PI, Objective::WeakK).unwrap();
        assert!((value - 1.173).abs() < 5e-3, "cut weak K = {value}");
        let m = point_metrics(&rotation(&params));
        assert!(m.delta_a[0].abs() < 1e-8, "residual delta_A(A) {}", m.delta_a[0]);
    }

    #[test]
    fn cut_without_crossing_reports_no_root() {
        assert!(matches!(
            maximize_on_cut(0.0, Objective::KA),
            Err(LgError::NoRoot(_))
        ));
    }

    #[test]
    fn grid_max_approaches_benchmark_value() {
        // coarse stand-in for the 512x512 acceptance run
        let grid = scan((0.0, PI), (0.0, PI), (96, 96)).unwrap();
        let best = grid.max_k_a().unwrap();
        let m = best.metrics.as_ref().unwrap();
        assert!(m.k_a > 1.8, "max K_A = {} at ({}, {})", m.k_a, best.theta, best.phi);
        // the unambiguous correlator never violates its own bound
        for r in &grid.records {
            if let Some(m) = &r.metrics {
                assert!(m.k <= 1.0 + m.delta_total + 1e-10);
            }
        }
    }
}
