//! Polyhedral sets in the normalized H-representation `{x : Hx <= 1}` and
//! disturbance polytopes in vertex form.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{numerical_rank, solve_square, RANK_TOL};
use crate::lp::{self, LpBuilder, LpStatus};

/// Euclidean distance under which two enumerated vertices are merged.
pub const VERTEX_DEDUP_TOL: f64 = 1e-7;
/// Slack allowed when filtering candidate vertices against `Hx <= 1`.
pub const VERTEX_FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("H-matrix is empty")]
    Empty,
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("H-matrix has rank {rank}, expected {dim}")]
    RankDeficient { rank: usize, dim: usize },
    #[error("set is unbounded: {0}")]
    Unbounded(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("disturbance set has no vertices")]
    NoVertices,
    #[error("origin is not in the convex hull of the disturbance vertices")]
    OriginOutside,
    #[error("LP failure while checking {0}")]
    Solver(&'static str),
}

/// A compact polytope `{x : Sx <= 1}` containing the origin in its interior.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralCSet {
    h_matrix: DMatrix<f64>,
    vertices: Vec<DVector<f64>>,
}

impl PolyhedralCSet {
    /// Validates `h_matrix` and caches the vertex list.
    pub fn new(h_matrix: DMatrix<f64>) -> Result<Self, PolytopeError> {
        validate_cset(h_matrix)
    }

    pub fn h_matrix(&self) -> &DMatrix<f64> {
        &self.h_matrix
    }

    pub fn dim(&self) -> usize {
        self.h_matrix.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.h_matrix.nrows()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    /// Minkowski functional `max(0, max_i S_i x)`.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        (&self.h_matrix * x).iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Membership in `scale * S`, i.e. `Sx <= scale + tol` row by row.
    pub fn contains(&self, x: &DVector<f64>, scale: f64, tol: f64) -> bool {
        (&self.h_matrix * x).iter().all(|&v| v <= scale + tol)
    }

    /// `max_i |S_i x|`, the polyhedral Lyapunov function induced by the set.
    pub fn lyapunov_value(&self, x: &DVector<f64>) -> f64 {
        (&self.h_matrix * x).amax()
    }
}

pub fn validate_cset(h_matrix: DMatrix<f64>) -> Result<PolyhedralCSet, PolytopeError> {
    let (rows, dim) = h_matrix.shape();
    if rows == 0 || dim == 0 {
        return Err(PolytopeError::Empty);
    }
    if h_matrix.iter().any(|v| !v.is_finite()) {
        return Err(PolytopeError::NonFinite("H-matrix"));
    }
    if rows < dim + 1 {
        return Err(PolytopeError::Unbounded(format!(
            "{rows} half-spaces cannot bound a set in dimension {dim}"
        )));
    }
    let rank = numerical_rank(&h_matrix, RANK_TOL);
    if rank < dim {
        return Err(PolytopeError::RankDeficient { rank, dim });
    }
    check_bounded(&h_matrix)?;
    let vertices = enumerate_vertices(&h_matrix)?;
    // The zero vector satisfies Sx = 0 < 1 strictly, so the origin is interior.
    debug_assert!((&h_matrix * DVector::zeros(dim)).iter().all(|&v| v < 1.0));
    Ok(PolyhedralCSet { h_matrix, vertices })
}

/// Maximizes and minimizes each coordinate over the set; any unbounded LP
/// exhibits a recession direction.
fn check_bounded(h: &DMatrix<f64>) -> Result<(), PolytopeError> {
    let dim = h.ncols();
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut b = LpBuilder::new(dim);
            b.set_objective(axis, -sign);
            for i in 0..h.nrows() {
                let terms: Vec<(usize, f64)> = h.row(i).iter().copied().enumerate().collect();
                b.add_le(&terms, 1.0);
            }
            let lp = b.build().map_err(|_| PolytopeError::Solver("boundedness"))?;
            match lp::solve(&lp).status {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => {
                    let dir = if sign > 0.0 { "+" } else { "-" };
                    return Err(PolytopeError::Unbounded(format!("recession direction along {dir}e{axis}")));
                }
                _ => return Err(PolytopeError::Solver("boundedness")),
            }
        }
    }
    Ok(())
}

/// Vertices of `{x : Hx <= 1}` by solving every `dim`-row subsystem and
/// keeping the feasible, non-duplicate solutions.
pub fn enumerate_vertices(h: &DMatrix<f64>) -> Result<Vec<DVector<f64>>, PolytopeError> {
    let (rows, dim) = h.shape();
    if rows == 0 || dim == 0 {
        return Err(PolytopeError::Empty);
    }
    let rank = numerical_rank(h, RANK_TOL);
    if rank < dim {
        return Err(PolytopeError::RankDeficient { rank, dim });
    }
    let ones = DVector::from_element(dim, 1.0);
    let mut vertices: Vec<DVector<f64>> = Vec::new();
    for subset in (0..rows).combinations(dim) {
        let sub = h.select_rows(subset.iter());
        let Some(v) = solve_square(&sub, &ones) else {
            continue;
        };
        if (h * &v).iter().any(|&s| s > 1.0 + VERTEX_FEAS_TOL) {
            continue;
        }
        if vertices.iter().all(|w| (w - &v).norm() > VERTEX_DEDUP_TOL) {
            vertices.push(v);
        }
    }
    if vertices.len() < dim + 1 {
        return Err(PolytopeError::Unbounded(format!(
            "only {} vertices found in dimension {dim}",
            vertices.len()
        )));
    }
    Ok(vertices)
}

/// Input constraint set `{u : Uu <= 1}`; may be unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPolytope {
    h_matrix: DMatrix<f64>,
}

impl InputPolytope {
    pub fn new(h_matrix: DMatrix<f64>) -> Result<Self, PolytopeError> {
        if h_matrix.nrows() == 0 || h_matrix.ncols() == 0 {
            return Err(PolytopeError::Empty);
        }
        if h_matrix.iter().any(|v| !v.is_finite()) {
            return Err(PolytopeError::NonFinite("input H-matrix"));
        }
        Ok(Self { h_matrix })
    }

    pub fn h_matrix(&self) -> &DMatrix<f64> {
        &self.h_matrix
    }

    pub fn dim(&self) -> usize {
        self.h_matrix.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.h_matrix.nrows()
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        (&self.h_matrix * u).iter().all(|&v| v <= 1.0 + tol)
    }

    /// For scalar inputs, the interval `[lo, hi]` described by the rows
    /// (infinite ends when no row bounds that side).
    pub fn scalar_bounds(&self) -> Option<(f64, f64)> {
        if self.dim() != 1 {
            return None;
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for &a in self.h_matrix.column(0).iter() {
            if a > 0.0 {
                hi = hi.min(1.0 / a);
            } else if a < 0.0 {
                lo = lo.max(1.0 / a);
            }
        }
        Some((lo, hi))
    }
}

/// Disturbance polytope given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSet {
    vertices: Vec<DVector<f64>>,
}

impl DisturbanceSet {
    /// Requires at least one vertex, a common dimension, and the origin in the
    /// convex hull. The degenerate set `{0}` is accepted; [`Self::is_cset`]
    /// reports whether the origin is actually interior.
    pub fn new(vertices: Vec<DVector<f64>>) -> Result<Self, PolytopeError> {
        let first = vertices.first().ok_or(PolytopeError::NoVertices)?;
        let dim = first.len();
        for v in &vertices {
            if v.len() != dim {
                return Err(PolytopeError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(PolytopeError::NonFinite("disturbance vertex"));
            }
        }
        let set = Self { vertices };
        if set.interior_weight()? < 0.0 {
            return Err(PolytopeError::OriginOutside);
        }
        Ok(set)
    }

    /// Axis-aligned box `[-radius, radius]^dim` in vertex form.
    pub fn boxed(dim: usize, radius: f64) -> Result<Self, PolytopeError> {
        let vertices = (0..1usize << dim)
            .map(|mask| {
                DVector::from_iterator(dim, (0..dim).map(|k| if mask >> k & 1 == 1 { radius } else { -radius }))
            })
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    /// True when the origin lies in the interior of the hull (a genuine C-set).
    pub fn is_cset(&self) -> bool {
        let span = DMatrix::from_columns(&self.vertices);
        numerical_rank(&span, RANK_TOL) == self.dim()
            && self.interior_weight().map(|t| t > 1e-9).unwrap_or(false)
    }

    /// Largest `t` such that `0 = sum a_i d_i` with `sum a_i = 1` and every
    /// `a_i >= t`; negative when the origin is outside the hull.
    fn interior_weight(&self) -> Result<f64, PolytopeError> {
        let k = self.vertices.len();
        let dim = self.dim();
        // variables: a_0..a_{k-1}, t
        let mut b = LpBuilder::new(k + 1);
        b.set_objective(k, -1.0);
        b.set_bounds(k, f64::NEG_INFINITY, 1.0);
        let all: Vec<(usize, f64)> = (0..k).map(|i| (i, 1.0)).collect();
        b.add_eq(&all, 1.0);
        for r in 0..dim {
            let terms: Vec<(usize, f64)> = (0..k).map(|i| (i, self.vertices[i][r])).collect();
            b.add_eq(&terms, 0.0);
        }
        for i in 0..k {
            b.add_le(&[(k, 1.0), (i, -1.0)], 0.0);
        }
        let lp = b.build().map_err(|_| PolytopeError::Solver("disturbance hull"))?;
        let sol = lp::solve(&lp);
        match sol.status {
            LpStatus::Optimal => Ok(sol.primal.expect("optimal has primal")[k]),
            LpStatus::Infeasible => Ok(-1.0),
            _ => Err(PolytopeError::Solver("disturbance hull")),
        }
    }
}

/// `[I; -I] / radius`, the box `[-radius, radius]^dim`.
pub fn box_h_matrix(dim: usize, radius: f64) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * dim, dim);
    for i in 0..dim {
        h[(i, i)] = 1.0 / radius;
        h[(dim + i, i)] = -1.0 / radius;
    }
    h
}
