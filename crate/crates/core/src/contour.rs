//! Zero-signalling contour extraction and constrained maximization.
//!
//! The scalar field is delta_A(B) over the (theta, phi) plane with chi solved
//! at every point.  Cells of a completed scan grid are scanned for edge sign
//! changes (marching-squares style), crossings are linked into polylines, and
//! every vertex is refined by a 1-D root solve along its grid edge until
//! |delta_A(B)| < 1e-8.  Touching zeros that never change sign refuse such
//! refinement and are recorded as isolated points instead of polylines.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{LgError, Result};
use crate::threelevel::{
    point_metrics, polish_chi, rotation, Objective, ScanGrid, ThreeLevelParams,
};

/// Refined vertices must satisfy |delta_A(B)| below this.
pub const CONTOUR_TOL: f64 = 1e-8;

/// One refined point on (or at) a zero of delta_A(B).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourVertex {
    pub theta: f64,
    pub phi: f64,
    pub chi: f64,
    pub delta_a_b: f64,
}

impl ContourVertex {
    pub fn params(&self) -> ThreeLevelParams {
        ThreeLevelParams { phi: self.phi, chi: self.chi, theta: self.theta }
    }
}

/// All zeros of delta_A(B) found in a grid: sign-change contours as
/// polylines, plus isolated (even-order) zeros.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourSet {
    pub polylines: Vec<Vec<ContourVertex>>,
    pub isolated: Vec<ContourVertex>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }
}

/// Edge of the grid, identified by its lower-left lattice point and
/// direction: false = along theta (i varies), true = along phi (j varies).
type EdgeId = (usize, usize, bool);

fn field(grid: &ScanGrid, i: usize, j: usize) -> Option<f64> {
    grid.record(i, j).metrics.as_ref().map(|m| m.delta_a[1])
}

/// Refine a sign-change crossing on one grid edge by bisection along that
/// edge, polishing chi continuously from the nearer endpoint.  Returns None
/// when the bracket refuses to tighten (even-order zero).
fn refine_edge(grid: &ScanGrid, edge: EdgeId) -> Option<ContourVertex> {
    let (i, j, along_phi) = edge;
    let (t0, p0) = (grid.theta_axis[i], grid.phi_axis[j]);
    let (t1, p1) = if along_phi {
        (grid.theta_axis[i], grid.phi_axis[j + 1])
    } else {
        (grid.theta_axis[i + 1], grid.phi_axis[j])
    };
    let chi0 = grid.record(i, j).chi?;
    let eval = |s: f64, chi_guess: f64| -> Option<(f64, f64)> {
        let theta = t0 + s * (t1 - t0);
        let phi = p0 + s * (p1 - p0);
        let chi = polish_chi(phi, theta, chi_guess)?;
        let m = point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta }));
        Some((chi, m.delta_a[1]))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut chi, mut flo) = eval(0.0, chi0)?;
    let (_, fhi) = eval(1.0, chi)?;
    if flo == 0.0 {
        // exact zero on the grid point itself
    } else if flo * fhi > 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let (c, fm) = eval(mid, chi)?;
        chi = c;
        if fm.abs() < CONTOUR_TOL * 1e-3 || hi - lo < 1e-13 {
            break;
        }
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let s = 0.5 * (lo + hi);
    let (chi, value) = eval(s, chi)?;
    if value.abs() > CONTOUR_TOL {
        return None;
    }
    Some(ContourVertex {
        theta: t0 + s * (t1 - t0),
        phi: p0 + s * (p1 - p0),
        chi,
        delta_a_b: value,
    })
}

/// Extract all delta_A(B) = 0 contours from a completed scan grid.
/// An empty polyline list is a valid result (no sign changes anywhere).
pub fn extract_contours(grid: &ScanGrid) -> Result<ContourSet> {
    let nt = grid.theta_axis.len();
    let np = grid.phi_axis.len();
    if nt < 2 || np < 2 {
        return Err(LgError::InvalidParameter("grid too small for contours".into()));
    }

    // 1. every edge with a sign change gets a refined crossing vertex
    let mut vertices: HashMap<EdgeId, ContourVertex> = HashMap::new();
    let mut isolated = Vec::new();
    let mut visit_edge = |edge: EdgeId, va: f64, vb: f64| {
        if va * vb < 0.0 || (va == 0.0 && vb != 0.0) {
            match refine_edge(grid, edge) {
                Some(v) => {
                    vertices.insert(edge, v);
                }
                None => {
                    // refinement failure on a sign-change edge: record the
                    // grid endpoint closest to zero as an isolated zero
                    let (i, j, along_phi) = edge;
                    let (ti, tj) = if va.abs() <= vb.abs() {
                        (i, j)
                    } else if along_phi {
                        (i, j + 1)
                    } else {
                        (i + 1, j)
                    };
                    if let Some(chi) = grid.record(ti, tj).chi {
                        isolated.push(ContourVertex {
                            theta: grid.theta_axis[ti],
                            phi: grid.phi_axis[tj],
                            chi,
                            delta_a_b: field(grid, ti, tj).unwrap_or(f64::NAN),
                        });
                    }
                }
            }
        }
    };
    for i in 0..nt {
        for j in 0..np {
            let Some(v0) = field(grid, i, j) else { continue };
            if i + 1 < nt {
                if let Some(v1) = field(grid, i + 1, j) {
                    visit_edge((i, j, false), v0, v1);
                }
            }
            if j + 1 < np {
                if let Some(v1) = field(grid, i, j + 1) {
                    visit_edge((i, j, true), v0, v1);
                }
            }
        }
    }

    // 2. per cell, pair up crossed edges into segments
    let mut adjacency: HashMap<EdgeId, Vec<EdgeId>> = HashMap::new();
    for i in 0..nt - 1 {
        for j in 0..np - 1 {
            let cell_edges: Vec<EdgeId> = [
                (i, j, false),
                (i, j, true),
                (i, j + 1, false),
                (i + 1, j, true),
            ]
            .into_iter()
            .filter(|e| vertices.contains_key(e))
            .collect();
            match cell_edges.len() {
                2 => {
                    adjacency.entry(cell_edges[0]).or_default().push(cell_edges[1]);
                    adjacency.entry(cell_edges[1]).or_default().push(cell_edges[0]);
                }
                4 => {
                    // saddle cell: resolve by the field value at the center
                    let center = 0.25
                        * [ (i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1) ]
                            .iter()
                            .filter_map(|&(a, b)| field(grid, a, b))
                            .sum::<f64>();
                    let corner = field(grid, i, j).unwrap_or(0.0);
                    // bottom edge is (i,j,false); left edge (i,j,true);
                    // top (i,j+1,false); right (i+1,j,true)
                    let (pairs_a, pairs_b) = if center * corner >= 0.0 {
                        // contour separates the two corners opposite (i,j)
                        (((i, j, false), (i + 1, j, true)), ((i, j, true), (i, j + 1, false)))
                    } else {
                        (((i, j, false), (i, j, true)), ((i, j + 1, false), (i + 1, j, true)))
                    };
                    for (a, b) in [pairs_a, pairs_b] {
                        if vertices.contains_key(&a) && vertices.contains_key(&b) {
                            adjacency.entry(a).or_default().push(b);
                            adjacency.entry(b).or_default().push(a);
                        }
                    }
                }
                _ => {}
            }
        }
    }

    // 3. walk the adjacency into polylines (open chains first, then loops)
    let mut polylines = Vec::new();
    let mut used: HashMap<EdgeId, bool> = vertices.keys().map(|&e| (e, false)).collect();
    let mut order: Vec<EdgeId> = vertices.keys().copied().collect();
    order.sort_unstable();
    for &start in &order {
        if used[&start] || adjacency.get(&start).map_or(0, |n| n.len()) != 1 {
            continue;
        }
        polylines.push(walk_chain(start, &adjacency, &vertices, &mut used));
    }
    for &start in &order {
        if used[&start] || !adjacency.contains_key(&start) {
            continue;
        }
        polylines.push(walk_chain(start, &adjacency, &vertices, &mut used));
    }
    // crossings with no cell partner (grid-boundary stubs) become isolated
    for &e in &order {
        if !used[&e] && !adjacency.contains_key(&e) {
            isolated.push(vertices[&e]);
        }
    }

    Ok(ContourSet { polylines, isolated })
}

fn walk_chain(
    start: EdgeId,
    adjacency: &HashMap<EdgeId, Vec<EdgeId>>,
    vertices: &HashMap<EdgeId, ContourVertex>,
    used: &mut HashMap<EdgeId, bool>,
) -> Vec<ContourVertex> {
    let mut chain = vec![vertices[&start]];
    used.insert(start, true);
    let mut prev = start;
    let mut cur = start;
    loop {
        let next = adjacency
            .get(&cur)
            .and_then(|n| n.iter().find(|&&e| e != prev && !used[&e]))
            .copied();
        match next {
            Some(e) => {
                chain.push(vertices[&e]);
                used.insert(e, true);
                prev = cur;
                cur = e;
            }
            None => break,
        }
    }
    chain
}

/// Maximize an objective over every contour polyline: coarse pass over the
/// refined vertices, then golden-section along arclength around the best
/// vertex, re-projecting each probe point onto the contour.
pub fn maximize_on_contour(
    contours: &ContourSet,
    objective: Objective,
) -> Result<(ThreeLevelParams, f64)> {
    if contours.is_empty() {
        return Err(LgError::EmptyContours);
    }
    let mut best: Option<(ThreeLevelParams, f64)> = None;
    for line in &contours.polylines {
        for (k, v) in line.iter().enumerate() {
            let value = objective.eval(&point_metrics(&rotation(&v.params())));
            if best.as_ref().map_or(true, |(_, b)| value > *b) {
                best = Some((v.params(), value));
            }
            // refine between this vertex and its neighbours
            if k + 1 < line.len() {
                if let Some((p, val)) = refine_segment(v, &line[k + 1], objective) {
                    if best.as_ref().map_or(true, |(_, b)| val > *b) {
                        best = Some((p, val));
                    }
                }
            }
        }
    }
    best.ok_or(LgError::EmptyContours)
}

/// Golden-section over the segment between two refined vertices,
/// re-projecting onto the contour at every probe.
fn refine_segment(
    a: &ContourVertex,
    b: &ContourVertex,
    objective: Objective,
) -> Option<(ThreeLevelParams, f64)> {
    let eval = |s: f64| -> Option<(ThreeLevelParams, f64)> {
        let theta = a.theta + s * (b.theta - a.theta);
        let phi = a.phi + s * (b.phi - a.phi);
        let chi_guess = a.chi + s * (b.chi - a.chi);
        let p = project_to_contour(theta, phi, chi_guess)?;
        let m = point_metrics(&rotation(&p));
        if m.delta_a.iter().any(|d| d.abs() > CONTOUR_TOL) {
            return None;
        }
        Some((p, objective.eval(&m)))
    };
    let golden = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    for _ in 0..60 {
        if f1.1 < f2.1 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = eval(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = eval(x1)?;
        }
    }
    if f1.1 >= f2.1 {
        Some(f1)
    } else {
        Some(f2)
    }
}

/// Pull an off-contour probe point back onto delta_A(B) = 0 by a 1-D root
/// solve in phi (falling back to theta), polishing chi at every evaluation.
fn project_to_contour(theta: f64, phi: f64, chi_guess: f64) -> Option<ThreeLevelParams> {
    let value = |theta: f64, phi: f64, guess: f64| -> Option<(f64, f64)> {
        let chi = polish_chi(phi, theta, guess)?;
        let m = point_metrics(&rotation(&ThreeLevelParams { phi, chi, theta }));
        Some((chi, m.delta_a[1]))
    };
    for transverse_phi in [true, false] {
        let solve = |h0: f64| -> Option<ThreeLevelParams> {
            let (chi0, f0) = value(theta, phi, chi_guess)?;
            if f0.abs() < CONTOUR_TOL * 1e-3 {
                return Some(ThreeLevelParams { phi, chi: chi0, theta });
            }
            let mut h = h0;
            while h < 0.1 {
                let (xa, xb) = if transverse_phi {
                    (phi - h, phi + h)
                } else {
                    (theta - h, theta + h)
                };
                let pa = if transverse_phi { (theta, xa) } else { (xa, phi) };
                let pb = if transverse_phi { (theta, xb) } else { (xb, phi) };
                if let (Some((ca, fa)), Some((_, fb))) =
                    (value(pa.0, pa.1, chi0), value(pb.0, pb.1, chi0))
                {
                    if fa * fb <= 0.0 {
                        let (mut lo, mut hi, mut flo, mut chi) = (xa, xb, fa, ca);
                        for _ in 0..100 {
                            let mid = 0.5 * (lo + hi);
                            let pm = if transverse_phi { (theta, mid) } else { (mid, phi) };
                            let (c, fm) = value(pm.0, pm.1, chi)?;
                            chi = c;
                            if fm.abs() < CONTOUR_TOL * 1e-3 || hi - lo < 1e-14 {
                                return Some(if transverse_phi {
                                    ThreeLevelParams { phi: mid, chi, theta }
                                } else {
                                    ThreeLevelParams { phi, chi, theta: mid }
                                });
                            }
                            if flo * fm <= 0.0 {
                                hi = mid;
                            } else {
                                lo = mid;
                                flo = fm;
                            }
                        }
                    }
                }
                h *= 2.0;
            }
            None
        };
        if let Some(p) = solve(1e-5) {
            return Some(p);
        }
    }
    None
}
