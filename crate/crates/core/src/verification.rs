//! Independent checks of synthesized gains and their certificates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::experiment::ExperimentData;
use crate::linalg::max_abs;
use crate::lp::{self, LpBuilder, LpStatus};
use crate::polytope::{DisturbanceSet, InputPolytope, PolyhedralCSet};
use crate::synthesis::{build_delta, Certificate};

pub const DEFAULT_TOL: f64 = 1e-6;
/// Horizon of the vertex trajectories used for the decay margin in reports.
pub const REPORT_HORIZON: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub contractivity_ok: bool,
    pub certificate_ok: bool,
    pub admissibility_ok: bool,
    pub robust_ok: Option<bool>,
    pub worst_vertex_gauge: f64,
    pub worst_input_violation: f64,
    pub lyapunov_decay_margin: Option<f64>,
}

impl VerificationReport {
    /// True iff every applicable check passed.
    pub fn passed(&self) -> bool {
        self.contractivity_ok && self.certificate_ok && self.admissibility_ok && self.robust_ok.unwrap_or(true)
    }
}

/// `P >= 0`, `P 1 <= λ 1` and `P S = S F`, each within `tol`.
pub fn check_fact1_certificate(f: &DMatrix<f64>, s: &PolyhedralCSet, p: &DMatrix<f64>, lambda: f64, tol: f64) -> bool {
    let ns = s.num_rows();
    if p.shape() != (ns, ns) || f.shape() != (s.dim(), s.dim()) {
        return false;
    }
    let nonneg = p.iter().all(|&v| v >= -tol);
    let rows = p.column_sum().iter().all(|&r| r <= lambda + tol);
    let equal = max_abs(&(p * s.h_matrix() - s.h_matrix() * f)) <= tol;
    nonneg && rows && equal
}

/// Searches for `P >= 0` with `P 1 <= λ 1` and `P S = S F` by linear
/// programming. Each row of `P` is an independent small LP.
pub fn find_fact1_certificate(f: &DMatrix<f64>, s: &PolyhedralCSet, lambda: f64) -> Option<DMatrix<f64>> {
    let sh = s.h_matrix();
    let ns = sh.nrows();
    let n = sh.ncols();
    let sf = sh * f;
    let mut p = DMatrix::zeros(ns, ns);
    for i in 0..ns {
        let mut b = LpBuilder::new(ns);
        for k in 0..ns {
            b.set_bounds(k, 0.0, f64::INFINITY);
        }
        let all: Vec<(usize, f64)> = (0..ns).map(|k| (k, 1.0)).collect();
        b.add_le(&all, lambda);
        for c in 0..n {
            let terms: Vec<(usize, f64)> = (0..ns).map(|k| (k, sh[(k, c)])).collect();
            b.add_eq(&terms, sf[(i, c)]);
        }
        let lp = b.build().ok()?;
        let sol = lp::solve(&lp);
        if sol.status != LpStatus::Optimal {
            return None;
        }
        for (k, v) in sol.primal?.into_iter().enumerate() {
            p[(i, k)] = v.max(0.0);
        }
    }
    Some(p)
}

/// Worst gauge of `F s` over the vertices `s` of the set.
pub fn check_vertex_contractivity(f: &DMatrix<f64>, s: &PolyhedralCSet, lambda: f64, tol: f64) -> (bool, f64) {
    let worst = s
        .vertices()
        .iter()
        .map(|v| s.gauge(&(f * v)))
        .fold(0.0, f64::max);
    (worst <= lambda + tol, worst)
}

/// Worst value of `U_i K s - 1` over vertices `s` and rows `i`.
pub fn check_admissibility(k: &DMatrix<f64>, s: &PolyhedralCSet, u: &InputPolytope, tol: f64) -> (bool, f64) {
    let worst = s
        .vertices()
        .iter()
        .map(|v| (u.h_matrix() * (k * v)).max() - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    (worst <= tol, worst)
}

/// Largest gauge of `F s + w` over vertex pairs of `S` and `D`.
pub fn worst_robust_gauge(f: &DMatrix<f64>, s: &PolyhedralCSet, d: &DisturbanceSet) -> f64 {
    let mut worst: f64 = 0.0;
    for v in s.vertices() {
        let image = f * v;
        for w in d.vertices() {
            worst = worst.max(s.gauge(&(&image + w)));
        }
    }
    worst
}

/// Vertex test for robust invariance: `S (F s + w) <= 1 + tol` for all pairs.
pub fn check_robust_invariance(f: &DMatrix<f64>, s: &PolyhedralCSet, d: &DisturbanceSet, tol: f64) -> bool {
    worst_robust_gauge(f, s, d) <= 1.0 + tol
}

/// Checks the robust data constraints `S((X_{1,T} - δ_ji) G_K s + w) <= 1`,
/// `U U_{0,T} G_K s <= 1` and `X_{0,T} G_K = I` at a given `G_K`. This is the
/// strongest check available when the plant is unknown.
pub fn check_robust_data_constraints(
    data: &ExperimentData,
    g: &DMatrix<f64>,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    d: &DisturbanceSet,
    tol: f64,
) -> bool {
    let n = data.n();
    let t = data.len();
    if g.shape() != (t, n) {
        return false;
    }
    if max_abs(&(data.x0t() * g - DMatrix::identity(n, n))) > tol {
        return false;
    }
    let k = data.u0t() * g;
    if !check_admissibility(&k, s, u, tol).0 {
        return false;
    }
    for j in 1..=t {
        for dv in d.vertices() {
            let Ok(delta) = build_delta(t, j, dv) else {
                return false;
            };
            let f = (data.x1t() - delta) * g;
            if !check_robust_invariance(&f, s, d, tol) {
                return false;
            }
        }
    }
    true
}

/// `max_i |S_i x|`.
pub fn lyapunov_value(s: &PolyhedralCSet, x: &DVector<f64>) -> f64 {
    s.lyapunov_value(x)
}

/// Whether `V(x(t+1)) <= λ V(x(t)) + tol` along the sequence, and the largest
/// value of `V(x(t+1)) - λ V(x(t))` (negative infinity for fewer than two states).
pub fn check_decay_along_trajectory(s: &PolyhedralCSet, states: &[DVector<f64>], lambda: f64, tol: f64) -> (bool, f64) {
    let margin = states
        .windows(2)
        .map(|w| lyapunov_value(s, &w[1]) - lambda * lyapunov_value(s, &w[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    (margin <= tol, margin)
}

/// Closed-loop states `x(t+1) = F x(t)` for `steps` steps.
pub fn closed_loop_trajectory(f: &DMatrix<f64>, x0: &DVector<f64>, steps: usize) -> Vec<DVector<f64>> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.clone());
    for t in 0..steps {
        let next = f * &states[t];
        states.push(next);
    }
    states
}

/// Runs every applicable check on a certificate.
///
/// `closed_loop` is the matrix the gain is meant to produce (`A + BK` when the
/// plant is known, `X_{1,T} G_K` from noiseless data). Certificates without `P`
/// are treated as robust-invariance certificates: contractivity is checked at
/// level 1, `robust_ok` comes from the vertex-pair test against `disturbance`,
/// and `certificate_ok` from the robust data constraints when `data` is given.
pub fn verify_certificate(
    cert: &Certificate,
    closed_loop: &DMatrix<f64>,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    disturbance: Option<&DisturbanceSet>,
    data: Option<&ExperimentData>,
    tol: f64,
) -> VerificationReport {
    let (admissibility_ok, worst_input_violation) = check_admissibility(&cert.gain, s, u, tol);
    match &cert.p_matrix {
        Some(p) => {
            let (contractivity_ok, worst_vertex_gauge) = check_vertex_contractivity(closed_loop, s, cert.lambda, tol);
            let certificate_ok = check_fact1_certificate(closed_loop, s, p, cert.lambda, tol);
            let margin = s
                .vertices()
                .iter()
                .map(|v| {
                    let states = closed_loop_trajectory(closed_loop, v, REPORT_HORIZON);
                    check_decay_along_trajectory(s, &states, cert.lambda, tol).1
                })
                .fold(f64::NEG_INFINITY, f64::max);
            VerificationReport {
                contractivity_ok,
                certificate_ok,
                admissibility_ok,
                robust_ok: disturbance.map(|d| check_robust_invariance(closed_loop, s, d, tol)),
                worst_vertex_gauge,
                worst_input_violation,
                lyapunov_decay_margin: Some(margin),
            }
        }
        None => {
            let (contractivity_ok, worst_vertex_gauge) = check_vertex_contractivity(closed_loop, s, 1.0, tol);
            let certificate_ok = match (data, disturbance, &cert.g_matrix) {
                (Some(data), Some(d), Some(g)) => check_robust_data_constraints(data, g, s, u, d, tol),
                _ => false,
            };
            VerificationReport {
                contractivity_ok,
                certificate_ok,
                admissibility_ok,
                robust_ok: Some(disturbance.is_some_and(|d| check_robust_invariance(closed_loop, s, d, tol))),
                worst_vertex_gauge,
                worst_input_violation,
                lyapunov_decay_margin: None,
            }
        }
    }
}
