//! Linear programs whose feasible points certify λ-contractivity (or robust
//! invariance) of a polyhedral set under a state-feedback gain.
//!
//! Decision variables are vectorized in a fixed order so that raw LP solutions
//! are portable:
//!
//! * data-based programs: `G_K` (T × n) column-major, then `P` (n_s × n_s)
//!   row-major, then `λ` when it is minimized;
//! * model-based programs: `K` (m × n) column-major, then `P` row-major, then `λ`.
//!
//! Robust programs have `G_K` only.

use log::warn;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::experiment::{ExperimentData, PlantModel};
use crate::lp::{self, LinearProgram, LpBuilder, LpError, LpStatus};
use crate::polytope::{DisturbanceSet, InputPolytope, PolyhedralCSet};

/// `λ < 1` is enforced as `λ <= 1 - EPS_STRICT`.
pub const EPS_STRICT: f64 = 1e-6;
/// Robust programs larger than this many inequality rows trigger a warning.
pub const DEFAULT_ROBUST_ROW_CAP: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("contractivity level {0} is outside [0, 1)")]
    InvalidLambda(f64),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("robust synthesis needs experiment data and a fixed contractivity level")]
    UnsupportedRobustMode,
    #[error("j = {j} is outside 1..={t}")]
    IndexOutOfRange { j: usize, t: usize },
    #[error("no certificate exists for this problem (LP infeasible)")]
    InfeasibleProblem,
    #[error("LP solver did not finish: {0:?}")]
    SolverFailure(LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
}

fn expect_dim(what: &'static str, expected: usize, found: usize) -> Result<(), SynthesisError> {
    if expected == found {
        Ok(())
    } else {
        Err(SynthesisError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<(), SynthesisError> {
    if (0.0..1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(SynthesisError::InvalidLambda(lambda))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Fixed(f64),
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Model(PlantModel),
    Data(ExperimentData),
}

impl Source {
    fn n(&self) -> usize {
        match self {
            Source::Model(p) => p.n(),
            Source::Data(d) => d.n(),
        }
    }

    fn m(&self) -> usize {
        match self {
            Source::Model(p) => p.m(),
            Source::Data(d) => d.m(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisProblem {
    pub state_set: PolyhedralCSet,
    pub input_set: InputPolytope,
    pub lambda: LambdaSpec,
    pub source: Source,
    pub disturbance: Option<DisturbanceSet>,
}

impl SynthesisProblem {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        let (n, m) = (self.source.n(), self.source.m());
        expect_dim("state set dimension", n, self.state_set.dim())?;
        expect_dim("input set dimension", m, self.input_set.dim())?;
        if let LambdaSpec::Fixed(l) = self.lambda {
            check_lambda(l)?;
        }
        if let Some(d) = &self.disturbance {
            expect_dim("disturbance dimension", n, d.dim())?;
            if !matches!(self.source, Source::Data(_)) || self.lambda == LambdaSpec::Minimize {
                return Err(SynthesisError::UnsupportedRobustMode);
            }
        }
        Ok(())
    }
}

/// Synthesized gain together with the witnesses that certify it.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub gain: DMatrix<f64>,
    /// `G_K`, present for data-based solves.
    pub g_matrix: Option<DMatrix<f64>>,
    /// `P >= 0` with `P 1 <= λ 1`; absent in robust mode.
    pub p_matrix: Option<DMatrix<f64>>,
    /// Contractivity level; `1.0` for robust invariance certificates.
    pub lambda: f64,
}

/// Variable layout shared by the builders and the solution decoder.
#[derive(Debug, Clone, Copy)]
struct Layout {
    /// rows × cols of the gain-like block (`G_K` or `K`)
    gain_rows: usize,
    gain_cols: usize,
    /// side of `P` (0 when absent)
    ns: usize,
    with_lambda: bool,
}

impl Layout {
    fn gain(&self, r: usize, c: usize) -> usize {
        c * self.gain_rows + r
    }

    fn p_offset(&self) -> usize {
        self.gain_rows * self.gain_cols
    }

    fn p(&self, i: usize, k: usize) -> usize {
        self.p_offset() + i * self.ns + k
    }

    fn lambda(&self) -> usize {
        self.p_offset() + self.ns * self.ns
    }

    fn num_vars(&self) -> usize {
        self.lambda() + usize::from(self.with_lambda)
    }

    fn gain_block(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.gain_rows, self.gain_cols, |r, c| z[self.gain(r, c)])
    }

    fn p_block(&self, z: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.ns, self.ns, |i, k| z[self.p(i, k)].max(0.0))
    }
}

/// Adds `P >= 0`, `P 1 <= λ 1` and the coefficients `P S` of the equality
/// `P S = S F`; the caller supplies the `-S F` terms through `closed_loop_terms`.
fn add_contractivity_rows(
    b: &mut LpBuilder,
    layout: &Layout,
    s: &DMatrix<f64>,
    lambda: LambdaSpec,
    mut closed_loop_terms: impl FnMut(usize, usize, &mut Vec<(usize, f64)>) -> f64,
) {
    let ns = s.nrows();
    let n = s.ncols();
    for i in 0..ns {
        for k in 0..ns {
            b.set_bounds(layout.p(i, k), 0.0, f64::INFINITY);
        }
    }
    if let LambdaSpec::Minimize = lambda {
        b.set_bounds(layout.lambda(), 0.0, 1.0 - EPS_STRICT);
        b.set_objective(layout.lambda(), 1.0);
    }
    for i in 0..ns {
        let mut terms: Vec<(usize, f64)> = (0..ns).map(|k| (layout.p(i, k), 1.0)).collect();
        match lambda {
            LambdaSpec::Fixed(l) => {
                b.add_le(&terms, l);
            }
            LambdaSpec::Minimize => {
                terms.push((layout.lambda(), -1.0));
                b.add_le(&terms, 0.0);
            }
        }
    }
    for i in 0..ns {
        for c in 0..n {
            let mut terms: Vec<(usize, f64)> = (0..ns)
                .filter(|&k| s[(k, c)] != 0.0)
                .map(|k| (layout.p(i, k), s[(k, c)]))
                .collect();
            let rhs = closed_loop_terms(i, c, &mut terms);
            b.add_eq(&terms, rhs);
        }
    }
}

fn model_layout(plant: &PlantModel, s: &PolyhedralCSet, with_lambda: bool) -> Layout {
    Layout {
        gain_rows: plant.m(),
        gain_cols: plant.n(),
        ns: s.num_rows(),
        with_lambda,
    }
}

fn data_layout(data: &ExperimentData, s: &PolyhedralCSet, with_p: bool, with_lambda: bool) -> Layout {
    Layout {
        gain_rows: data.len(),
        gain_cols: data.n(),
        ns: if with_p { s.num_rows() } else { 0 },
        with_lambda,
    }
}

fn check_model_shapes(plant: &PlantModel, s: &PolyhedralCSet, u: &InputPolytope) -> Result<(), SynthesisError> {
    expect_dim("state set dimension", plant.n(), s.dim())?;
    expect_dim("input set dimension", plant.m(), u.dim())
}

fn check_data_shapes(data: &ExperimentData, s: &PolyhedralCSet, u: &InputPolytope) -> Result<(), SynthesisError> {
    expect_dim("state set dimension", data.n(), s.dim())?;
    expect_dim("input set dimension", data.m(), u.dim())
}

fn model_program(
    plant: &PlantModel,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    lambda: LambdaSpec,
) -> Result<(LinearProgram, Layout), SynthesisError> {
    check_model_shapes(plant, s, u)?;
    let layout = model_layout(plant, s, lambda == LambdaSpec::Minimize);
    let (n, m) = (plant.n(), plant.m());
    let sh = s.h_matrix();
    let sa = sh * plant.a();
    let sb = sh * plant.b();
    let mut b = LpBuilder::new(layout.num_vars());

    // P S - S B K = S A
    add_contractivity_rows(&mut b, &layout, sh, lambda, |i, c, terms| {
        for r in 0..m {
            if sb[(i, r)] != 0.0 {
                terms.push((layout.gain(r, c), -sb[(i, r)]));
            }
        }
        sa[(i, c)]
    });

    // U K s <= 1 at every vertex
    let uh = u.h_matrix();
    for v in s.vertices() {
        for q in 0..uh.nrows() {
            let mut terms = Vec::with_capacity(m * n);
            for r in 0..m {
                for c in 0..n {
                    let coef = uh[(q, r)] * v[c];
                    if coef != 0.0 {
                        terms.push((layout.gain(r, c), coef));
                    }
                }
            }
            b.add_le(&terms, 1.0);
        }
    }
    Ok((b.build()?, layout))
}

/// Adds `U U_{0,T} G_K s <= 1` for every vertex and `X_{0,T} G_K = I_n`.
fn add_data_gain_rows(b: &mut LpBuilder, layout: &Layout, data: &ExperimentData, s: &PolyhedralCSet, u: &InputPolytope) {
    let (n, t) = (data.n(), data.len());
    let uu = u.h_matrix() * data.u0t();
    for v in s.vertices() {
        for q in 0..uu.nrows() {
            let mut terms = Vec::with_capacity(t * n);
            for tt in 0..t {
                for c in 0..n {
                    let coef = uu[(q, tt)] * v[c];
                    if coef != 0.0 {
                        terms.push((layout.gain(tt, c), coef));
                    }
                }
            }
            b.add_le(&terms, 1.0);
        }
    }
    let x0 = data.x0t();
    for r in 0..n {
        for c in 0..n {
            let terms: Vec<(usize, f64)> = (0..t)
                .filter(|&tt| x0[(r, tt)] != 0.0)
                .map(|tt| (layout.gain(tt, c), x0[(r, tt)]))
                .collect();
            b.add_eq(&terms, if r == c { 1.0 } else { 0.0 });
        }
    }
}

fn data_program(
    data: &ExperimentData,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    lambda: LambdaSpec,
) -> Result<(LinearProgram, Layout), SynthesisError> {
    check_data_shapes(data, s, u)?;
    let layout = data_layout(data, s, true, lambda == LambdaSpec::Minimize);
    let t = data.len();
    let sx1 = s.h_matrix() * data.x1t();
    let mut b = LpBuilder::new(layout.num_vars());

    // P S - S X_{1,T} G_K = 0
    add_contractivity_rows(&mut b, &layout, s.h_matrix(), lambda, |i, c, terms| {
        for tt in 0..t {
            if sx1[(i, tt)] != 0.0 {
                terms.push((layout.gain(tt, c), -sx1[(i, tt)]));
            }
        }
        0.0
    });
    add_data_gain_rows(&mut b, &layout, data, s, u);
    Ok((b.build()?, layout))
}

/// Feasibility LP in `(K, P)` for a known plant at fixed `λ`.
pub fn build_modelbased_lp(
    plant: &PlantModel,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    lambda: f64,
) -> Result<LinearProgram, SynthesisError> {
    check_lambda(lambda)?;
    Ok(model_program(plant, s, u, LambdaSpec::Fixed(lambda))?.0)
}

/// Feasibility LP in `(G_K, P)` built from experiment data only.
pub fn build_databased_lp(
    data: &ExperimentData,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    lambda: f64,
) -> Result<LinearProgram, SynthesisError> {
    check_lambda(lambda)?;
    Ok(data_program(data, s, u, LambdaSpec::Fixed(lambda))?.0)
}

/// `K = U_{0,T} G_K`.
pub fn extract_gain(data: &ExperimentData, g_matrix: &DMatrix<f64>) -> Result<DMatrix<f64>, SynthesisError> {
    expect_dim("G_K rows", data.len(), g_matrix.nrows())?;
    Ok(data.u0t() * g_matrix)
}

/// Data-consistent closed-loop matrix `X_{1,T} G_K`.
pub fn data_closed_loop(data: &ExperimentData, g_matrix: &DMatrix<f64>) -> Result<DMatrix<f64>, SynthesisError> {
    expect_dim("G_K rows", data.len(), g_matrix.nrows())?;
    Ok(data.x1t() * g_matrix)
}

/// A `G_K` with `[K; I_n] = Θ G_K` (minimum-norm solution), or `None` when Θ
/// lacks full row rank.
pub fn embed_gain(data: &ExperimentData, gain: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let theta = data.theta();
    let (m, n) = (data.m(), data.n());
    if gain.shape() != (m, n) {
        return None;
    }
    let mut target = DMatrix::zeros(m + n, n);
    target.view_mut((0, 0), (m, n)).copy_from(gain);
    target.view_mut((m, 0), (n, n)).fill_with_identity();
    let gram = &theta * theta.transpose();
    let y = gram.lu().solve(&target)?;
    Some(theta.transpose() * y)
}

/// `n × T` matrix that is zero except column `j` (1-based), equal to `T d`.
pub fn build_delta(t: usize, j: usize, d_vertex: &DVector<f64>) -> Result<DMatrix<f64>, SynthesisError> {
    if j == 0 || j > t {
        return Err(SynthesisError::IndexOutOfRange { j, t });
    }
    let mut delta = DMatrix::zeros(d_vertex.len(), t);
    delta.column_mut(j - 1).copy_from(&(d_vertex * t as f64));
    Ok(delta)
}

/// Number of inequality rows of the robust program.
pub fn robust_row_count(data: &ExperimentData, s: &PolyhedralCSet, u: &InputPolytope, d: &DisturbanceSet) -> usize {
    let nv = s.vertices().len();
    s.num_rows() * nv * d.vertices().len() * data.len() + u.num_rows() * nv
}

/// Robust-invariance LP in `G_K` for data collected under bounded disturbances.
pub fn build_robust_lp(
    data: &ExperimentData,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    d: &DisturbanceSet,
) -> Result<LinearProgram, SynthesisError> {
    build_robust_lp_with_cap(data, s, u, d, DEFAULT_ROBUST_ROW_CAP)
}

/// As [`build_robust_lp`], warning when the inequality count exceeds `row_cap`.
///
/// For each `(s, j, i)` the constraint `S (X_{1,T} - δ_ji) G_K s + S w <= 1`
/// must hold for every vertex `w` of `D`; since `w` enters only the right-hand
/// side, row `k` is imposed once with the tightest bound `1 - max_w S_k w`.
pub fn build_robust_lp_with_cap(
    data: &ExperimentData,
    s: &PolyhedralCSet,
    u: &InputPolytope,
    d: &DisturbanceSet,
    row_cap: usize,
) -> Result<LinearProgram, SynthesisError> {
    check_data_shapes(data, s, u)?;
    expect_dim("disturbance dimension", data.n(), d.dim())?;
    let rows = robust_row_count(data, s, u, d);
    if rows > row_cap {
        warn!("robust LP has {rows} inequality rows (cap {row_cap})");
    }
    let layout = data_layout(data, s, false, false);
    let (n, t) = (data.n(), data.len());
    let sh = s.h_matrix();
    let ns = sh.nrows();
    let rhs: Vec<f64> = (0..ns)
        .map(|k| {
            let worst = d
                .vertices()
                .iter()
                .map(|w| (sh.row(k) * w)[0])
                .fold(f64::NEG_INFINITY, f64::max);
            1.0 - worst
        })
        .collect();

    let mut b = LpBuilder::new(layout.num_vars());
    for j in 1..=t {
        for dv in d.vertices() {
            let delta = build_delta(t, j, dv)?;
            let m_ji = sh * (data.x1t() - delta);
            for v in s.vertices() {
                for k in 0..ns {
                    let mut terms = Vec::with_capacity(t * n);
                    for tt in 0..t {
                        for c in 0..n {
                            let coef = m_ji[(k, tt)] * v[c];
                            if coef != 0.0 {
                                terms.push((layout.gain(tt, c), coef));
                            }
                        }
                    }
                    b.add_le(&terms, rhs[k]);
                }
            }
        }
    }
    add_data_gain_rows(&mut b, &layout, data, s, u);
    Ok(b.build()?)
}

fn solve_program(lp: &LinearProgram) -> Result<Vec<f64>, SynthesisError> {
    let sol = lp::solve(lp);
    match sol.status {
        LpStatus::Optimal => Ok(sol.primal.expect("optimal solutions carry a primal point")),
        LpStatus::Infeasible => Err(SynthesisError::InfeasibleProblem),
        other => Err(SynthesisError::SolverFailure(other)),
    }
}

fn decode(source: &Source, layout: &Layout, z: &[f64], lambda: f64) -> Result<Certificate, SynthesisError> {
    let block = layout.gain_block(z);
    let p = (layout.ns > 0).then(|| layout.p_block(z));
    Ok(match source {
        Source::Model(_) => Certificate {
            gain: block,
            g_matrix: None,
            p_matrix: p,
            lambda,
        },
        Source::Data(data) => Certificate {
            gain: extract_gain(data, &block)?,
            g_matrix: Some(block),
            p_matrix: p,
            lambda,
        },
    })
}

fn solve_fixed_or_min(problem: &SynthesisProblem, lambda: LambdaSpec) -> Result<Certificate, SynthesisError> {
    let (lp, layout) = match &problem.source {
        Source::Model(plant) => model_program(plant, &problem.state_set, &problem.input_set, lambda)?,
        Source::Data(data) => data_program(data, &problem.state_set, &problem.input_set, lambda)?,
    };
    let z = solve_program(&lp)?;
    let level = match lambda {
        LambdaSpec::Fixed(l) => l,
        LambdaSpec::Minimize => z[layout.lambda()].max(0.0),
    };
    decode(&problem.source, &layout, &z, level)
}

/// Dispatches to the model-based, data-based, minimum-λ or robust program.
pub fn synthesize(problem: &SynthesisProblem) -> Result<Certificate, SynthesisError> {
    problem.validate()?;
    if let Some(d) = &problem.disturbance {
        let Source::Data(data) = &problem.source else {
            return Err(SynthesisError::UnsupportedRobustMode);
        };
        let lp = build_robust_lp(data, &problem.state_set, &problem.input_set, d)?;
        let layout = data_layout(data, &problem.state_set, false, false);
        let z = solve_program(&lp)?;
        return decode(&problem.source, &layout, &z, 1.0);
    }
    solve_fixed_or_min(problem, problem.lambda)
}

/// Smallest contractivity level achievable, with a certificate attaining it.
pub fn minimize_lambda(problem: &SynthesisProblem) -> Result<Certificate, SynthesisError> {
    if problem.disturbance.is_some() {
        return Err(SynthesisError::UnsupportedRobustMode);
    }
    let relaxed = SynthesisProblem {
        lambda: LambdaSpec::Minimize,
        ..problem.clone()
    };
    relaxed.validate()?;
    solve_fixed_or_min(&relaxed, LambdaSpec::Minimize)
}
