//! Scenario implementations: each returns the stdout summary object after
//! writing its file artifacts.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use lgsim_core::contour::{extract_contours, maximize_on_contour, ContourSet};
use lgsim_core::metrics::{
    correlator_k, correlator_k_ambiguous, signalling_report, weak_limit_k,
};
use lgsim_core::protocol::{run_protocol, ExperimentProtocol};
use lgsim_core::quantum::{CVec, DensityMatrix as Rho, LabeledProjectorSet, UnitaryEvolution};
use lgsim_core::threebox::run_three_box;
use lgsim_core::threelevel::{
    delta_a_of_a, maximize_on_cut, point_metrics, rotation, scan, solve_chi, Objective, ScanGrid,
    ThreeLevelParams, CHI_TOL,
};

use crate::config::{CustomConfig, RunConfig};
use crate::output::{scan_csv, write_atomic};

const PI: f64 = std::f64::consts::PI;

fn angle_json(value: f64) -> Value {
    json!({ "radians": value, "over_pi": value / PI })
}

fn params_json(p: &ThreeLevelParams) -> Value {
    json!({
        "theta": angle_json(p.theta),
        "phi": angle_json(p.phi),
        "chi": angle_json(p.chi),
    })
}

fn run_scan(config: &RunConfig, default_resolution: usize) -> Result<ScanGrid> {
    let res = config.resolution.unwrap_or(default_resolution);
    let grid = scan(config.theta_range(), config.phi_range(), (res, res))?;
    Ok(grid)
}

fn grid_summary(grid: &ScanGrid) -> Value {
    let solved = grid.records.iter().filter(|r| r.metrics.is_some()).count();
    let violations = grid
        .records
        .iter()
        .filter_map(|r| r.metrics.as_ref())
        .filter(|m| m.k_a > 1.0 + m.delta_a_total + 1e-10)
        .count();
    let best_ka = grid.max_k_a();
    let best_weak = grid.max_weak_k();
    json!({
        "rows": grid.records.len(),
        "solved": solved,
        "no_root": grid.records.len() - solved,
        "violations": violations,
        "max_k_a": best_ka.map(|r| {
            let m = r.metrics.as_ref().unwrap();
            json!({
                "value": m.k_a,
                "bound": 1.0 + m.delta_a_total,
                "violated": m.k_a > 1.0 + m.delta_a_total + 1e-10,
                "theta": angle_json(r.theta),
                "phi": angle_json(r.phi),
                "chi": angle_json(r.chi.unwrap()),
            })
        }),
        "max_weak_k": best_weak.map(|r| {
            let m = r.metrics.as_ref().unwrap();
            json!({
                "value": m.weak_k,
                "theta": angle_json(r.theta),
                "phi": angle_json(r.phi),
                "chi": angle_json(r.chi.unwrap()),
            })
        }),
    })
}

/// threelevel-scan and weak-scan: full grid to CSV plus a max summary.
pub fn threelevel_scan(config: &RunConfig, scenario: &str) -> Result<Value> {
    let grid = run_scan(config, 512)?;
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{scenario}.csv")));
    write_atomic(&out, scan_csv(&grid).as_bytes())?;
    let mut summary = grid_summary(&grid);
    let obj = summary.as_object_mut().unwrap();
    obj.insert("scenario".into(), json!(scenario));
    obj.insert("csv".into(), json!(out));
    obj.insert(
        "resolution".into(),
        json!([grid.theta_axis.len(), grid.phi_axis.len()]),
    );
    Ok(summary)
}

fn contour_json(set: &ContourSet) -> Value {
    json!({
        "polylines": set.polylines.iter().map(|line| {
            line.iter().map(|v| json!({
                "theta": v.theta,
                "phi": v.phi,
                "chi": v.chi,
                "delta_a_B": v.delta_a_b,
            })).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
        "isolated": set.isolated.iter().map(|v| json!({
            "theta": v.theta,
            "phi": v.phi,
            "chi": v.chi,
            "delta_a_B": v.delta_a_b,
        })).collect::<Vec<_>>(),
    })
}

/// threelevel-contour: scan, trace the no-signalling contours, write them
/// as JSON polylines.
pub fn threelevel_contour(config: &RunConfig) -> Result<Value> {
    let grid = run_scan(config, 192)?;
    let set = extract_contours(&grid)?;
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("contours.json"));
    let artifact = json!({
        "theta_range": [grid.theta_axis[0], *grid.theta_axis.last().unwrap()],
        "phi_range": [grid.phi_axis[0], *grid.phi_axis.last().unwrap()],
        "contours": contour_json(&set),
    });
    write_atomic(&out, serde_json::to_string_pretty(&artifact)?.as_bytes())?;
    Ok(json!({
        "scenario": "threelevel-contour",
        "json": out,
        "polylines": set.polylines.len(),
        "vertices": set.polylines.iter().map(|l| l.len()).sum::<usize>(),
        "isolated": set.isolated.len(),
    }))
}

/// threelevel-maximize: constrained maximization of K_A or the weak-limit
/// correlator, either over the no-signalling contours or along a
/// fixed-theta cut.
pub fn threelevel_maximize(config: &RunConfig) -> Result<Value> {
    let objective = config.objective.unwrap_or(Objective::KA);
    let (mode, params, value) = match config.cut_theta {
        Some(theta) => {
            let (p, v) = maximize_on_cut(theta, objective)?;
            ("cut", p, v)
        }
        None => {
            let grid = run_scan(config, 192)?;
            let set = extract_contours(&grid)?;
            let (p, v) = maximize_on_contour(&set, objective)?;
            ("contour", p, v)
        }
    };
    let m = point_metrics(&rotation(&params));
    let summary = json!({
        "scenario": "threelevel-maximize",
        "mode": mode,
        "objective": objective,
        "value": value,
        "params": params_json(&params),
        "delta_a": m.delta_a,
        "delta": m.delta,
        "k_a": m.k_a,
        "weak_k": m.weak_k,
        "bound": 1.0 + m.delta_a_total,
        "violated": objective_value_violates(objective, &m),
    });
    if let Some(out) = &config.out {
        write_atomic(out, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }
    Ok(summary)
}

fn objective_value_violates(objective: Objective, m: &lgsim_core::threelevel::PointMetrics) -> bool {
    match objective {
        Objective::KA => m.k_a > 1.0 + m.delta_a_total + 1e-10,
        Objective::WeakK => m.weak_k > 1.0 + m.delta_a_total + 1e-10,
    }
}

/// chi-solve: root of delta_A(A) in chi at a single (phi, theta).
pub fn chi_solve(config: &RunConfig) -> Result<Value> {
    let phi = config.phi.ok_or_else(|| anyhow!("chi-solve requires phi"))?;
    let theta = config
        .theta
        .ok_or_else(|| anyhow!("chi-solve requires theta"))?;
    let tol = config.chi_tol.unwrap_or(CHI_TOL);
    let chi = solve_chi(phi, theta, tol)?;
    let summary = match chi {
        Some(chi) => {
            let residual = delta_a_of_a(phi, chi, theta);
            let m = point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta }));
            json!({
                "scenario": "chi-solve",
                "found": true,
                "phi": angle_json(phi),
                "theta": angle_json(theta),
                "chi": angle_json(chi),
                "residual": residual,
                "metrics": m,
            })
        }
        None => json!({
            "scenario": "chi-solve",
            "found": false,
            "phi": angle_json(phi),
            "theta": angle_json(theta),
        }),
    };
    if let Some(out) = &config.out {
        write_atomic(out, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }
    Ok(summary)
}

/// threebox: the ambiguous three-box experiment report.
pub fn threebox(config: &RunConfig) -> Result<Value> {
    let report = run_three_box()?;
    let summary = json!({
        "scenario": "threebox",
        "k_prime": report.k_prime,
        "delta": report.signalling.delta,
        "delta_a": report.signalling.delta_a,
        "delta_total": report.signalling.delta_total,
        "delta_a_total": report.signalling.delta_a_total,
        "p3": report.p3,
        "q2_expectation": report.q2_expectation,
        "q32_expectation": report.q32_expectation,
        "q3_expectation": report.q3_expectation,
    });
    if let Some(out) = &config.out {
        write_atomic(out, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }
    Ok(summary)
}

/// weak-scan: the same grid as threelevel-scan, summarized by the
/// weak-limit maximum.
pub fn weak_scan(config: &RunConfig) -> Result<Value> {
    threelevel_scan(config, "weak-scan")
}

fn real_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        bail!("{what} is empty");
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        bail!("{what} rows have unequal lengths");
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn build_custom_protocol(custom: &CustomConfig, epsilon: Option<f64>) -> Result<ExperimentProtocol> {
    let u21 = UnitaryEvolution::from_real(&real_matrix(&custom.u21, "u21")?)?;
    let u32 = UnitaryEvolution::from_real(&real_matrix(&custom.u32, "u32")?)?;
    let dim = u21.dim();

    let rho1 = match (&custom.rho1, &custom.initial_state) {
        (Some(rows), None) => {
            let m = real_matrix(rows, "rho1")?;
            if m.nrows() != dim || m.ncols() != dim {
                bail!("rho1 must be {dim}x{dim}");
            }
            Rho::new(m.map(|x| Complex64::new(x, 0.0)))?
        }
        (None, Some(amps)) => {
            if amps.len() != dim {
                bail!("initial_state must have {dim} amplitudes");
            }
            let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                bail!("initial_state must be nonzero");
            }
            let psi = CVec::from_iterator(dim, amps.iter().map(|a| Complex64::new(a / norm, 0.0)));
            Rho::from_pure(&psi)?
        }
        _ => bail!("custom scenario needs exactly one of rho1 or initial_state"),
    };

    let meas2 = LabeledProjectorSet::computational_basis(dim, custom.q2.clone())?;
    let meas3 = match custom.meas3_state {
        Some(n) => {
            if custom.q3.len() != 2 {
                bail!("coarse t3 measurement needs exactly two q3 labels");
            }
            LabeledProjectorSet::basis_state_vs_rest(dim, n, custom.q3[0], custom.q3[1])?
        }
        None => LabeledProjectorSet::computational_basis(dim, custom.q3.clone())?,
    };

    let det = match &custom.detector {
        None => None,
        Some(spec) => {
            // a flag-supplied epsilon overrides the configured weak epsilon
            let spec = match (spec, epsilon) {
                (lgsim_core::detector::DetectorSpec::Weak { .. }, Some(e)) => {
                    lgsim_core::detector::DetectorSpec::Weak { epsilon: e }
                }
                _ => spec.clone(),
            };
            Some(spec.build(dim)?)
        }
    };

    ExperimentProtocol::new(rho1, u21, u32, meas2, det, meas3).map_err(Into::into)
}

/// custom: run an arbitrary configured protocol and report every metric
/// that applies to it.
pub fn custom(config: &RunConfig) -> Result<Value> {
    let custom = config
        .custom
        .as_ref()
        .context("custom scenario requires a [custom] config table")?;
    let proto = build_custom_protocol(custom, config.epsilon)?;
    let tables = run_protocol(&proto)?;
    let q2 = proto.meas2.q_labels().to_vec();
    let q3 = proto.meas3.q_labels().to_vec();
    let k = correlator_k(&tables, &q2, &q3)?;
    let report = signalling_report(&tables)?;

    let k_a = match proto.det2.as_ref() {
        Some(det) => Some(correlator_k_ambiguous(&tables, det, &q2, &q3)?),
        None => None,
    };
    // the weak limit needs a full-basis t3 measurement; skip it otherwise
    let weak = if custom.meas3_state.is_none() {
        weak_limit_k(&proto).ok()
    } else {
        None
    };

    let summary = json!({
        "scenario": "custom",
        "dim": proto.rho1.dim(),
        "k": k,
        "k_bound": 1.0 + report.delta_total,
        "k_violated": k > 1.0 + report.delta_total + 1e-10,
        "k_a": k_a,
        "weak_k": weak,
        "delta": report.delta,
        "delta_a": report.delta_a,
        "delta_total": report.delta_total,
        "delta_a_total": report.delta_a_total,
        "p3": tables.p3,
    });
    if let Some(out) = &config.out {
        write_atomic(out, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    }
    Ok(summary)
}
