//! Dense linear programs and a two-phase primal simplex solver.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    c'z
//! subject to  A_eq z  = b_eq
//!             A_in z <= b_in
//!             l <= z <= u        (l may be -inf, u may be +inf)
//! ```
//!
//! and are converted internally to `min c'y, A y = b, y >= 0, b >= 0` by shifting
//! finite lower bounds, reflecting variables that only have an upper bound,
//! splitting free variables into a difference of two nonnegative columns, and
//! adding slack columns for inequality rows and finite upper bounds.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("variable {index} has lower bound {lower} above upper bound {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("linear program must have at least one variable")]
    NoVariables,
}

/// A dense linear program in minimization form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: DVector<f64>,
    eq_lhs: DMatrix<f64>,
    eq_rhs: DVector<f64>,
    ineq_lhs: DMatrix<f64>,
    ineq_rhs: DVector<f64>,
    lower_bounds: Vec<f64>,
    upper_bounds: Vec<f64>,
}

impl LinearProgram {
    /// Validates dimensions and bounds. An empty constraint block is given as a
    /// `0 × num_vars` matrix with an empty right-hand side.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        objective: DVector<f64>,
        eq_lhs: DMatrix<f64>,
        eq_rhs: DVector<f64>,
        ineq_lhs: DMatrix<f64>,
        ineq_rhs: DVector<f64>,
        lower_bounds: Vec<f64>,
        upper_bounds: Vec<f64>,
    ) -> Result<Self, LpError> {
        let num_vars = objective.len();
        if num_vars == 0 {
            return Err(LpError::NoVariables);
        }
        let check = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(LpError::DimensionMismatch {
                    what,
                    expected,
                    found,
                })
            }
        };
        check("equality columns", num_vars, eq_lhs.ncols())?;
        check("equality right-hand side", eq_lhs.nrows(), eq_rhs.len())?;
        check("inequality columns", num_vars, ineq_lhs.ncols())?;
        check("inequality right-hand side", ineq_lhs.nrows(), ineq_rhs.len())?;
        check("lower bounds", num_vars, lower_bounds.len())?;
        check("upper bounds", num_vars, upper_bounds.len())?;

        if objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if eq_lhs.iter().chain(eq_rhs.iter()).any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("equality rows"));
        }
        if ineq_lhs.iter().chain(ineq_rhs.iter()).any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("inequality rows"));
        }
        for (index, (&lower, &upper)) in lower_bounds.iter().zip(&upper_bounds).enumerate() {
            if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
                return Err(LpError::NonFinite("bounds"));
            }
            if lower > upper {
                return Err(LpError::InvalidBounds { index, lower, upper });
            }
        }

        Ok(Self {
            num_vars,
            objective,
            eq_lhs,
            eq_rhs,
            ineq_lhs,
            ineq_rhs,
            lower_bounds,
            upper_bounds,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &DVector<f64> {
        &self.objective
    }

    pub fn eq_lhs(&self) -> &DMatrix<f64> {
        &self.eq_lhs
    }

    pub fn eq_rhs(&self) -> &DVector<f64> {
        &self.eq_rhs
    }

    pub fn ineq_lhs(&self) -> &DMatrix<f64> {
        &self.ineq_lhs
    }

    pub fn ineq_rhs(&self) -> &DVector<f64> {
        &self.ineq_rhs
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper_bounds
    }

    pub fn num_eq(&self) -> usize {
        self.eq_lhs.nrows()
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq_lhs.nrows()
    }

    /// Largest violation of any equality, inequality or bound at `point`.
    pub fn max_violation(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.num_vars, "point length must equal num_vars");
        let z = DVector::from_column_slice(point);
        let mut worst: f64 = 0.0;
        if self.num_eq() > 0 {
            let r = &self.eq_lhs * &z - &self.eq_rhs;
            worst = worst.max(r.amax());
        }
        if self.num_ineq() > 0 {
            let r = &self.ineq_lhs * &z - &self.ineq_rhs;
            worst = worst.max(r.max());
        }
        for (i, &v) in point.iter().enumerate() {
            worst = worst.max(self.lower_bounds[i] - v).max(v - self.upper_bounds[i]);
        }
        worst
    }

    pub fn objective_at(&self, point: &[f64]) -> f64 {
        self.objective.iter().zip(point).map(|(c, z)| c * z).sum()
    }
}

/// True iff every equality, inequality and bound holds within `tol` at `point`.
pub fn check_feasible(lp: &LinearProgram, point: &[f64], tol: f64) -> bool {
    point.len() == lp.num_vars && point.iter().all(|v| v.is_finite()) && lp.max_violation(point) <= tol
}

impl fmt::Display for LinearProgram {
    /// Plain-text dump, one constraint per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn terms(row: impl Iterator<Item = f64>) -> String {
            let parts: Vec<String> = row
                .enumerate()
                .filter(|(_, a)| *a != 0.0)
                .map(|(j, a)| format!("{a:+} x{j}"))
                .collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" ")
            }
        }
        writeln!(f, "minimize {}", terms(self.objective.iter().copied()))?;
        for i in 0..self.num_eq() {
            writeln!(f, "eq{i}: {} = {}", terms(self.eq_lhs.row(i).iter().copied()), self.eq_rhs[i])?;
        }
        for i in 0..self.num_ineq() {
            writeln!(f, "in{i}: {} <= {}", terms(self.ineq_lhs.row(i).iter().copied()), self.ineq_rhs[i])?;
        }
        for j in 0..self.num_vars {
            writeln!(f, "bound: {} <= x{j} <= {}", self.lower_bounds[j], self.upper_bounds[j])?;
        }
        Ok(())
    }
}

/// Incremental construction of a [`LinearProgram`] from sparse rows.
#[derive(Debug, Clone)]
pub struct LpBuilder {
    num_vars: usize,
    objective: Vec<f64>,
    eq_rows: Vec<f64>,
    eq_rhs: Vec<f64>,
    ineq_rows: Vec<f64>,
    ineq_rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpBuilder {
    /// All variables start free with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            ineq_rows: Vec::new(),
            ineq_rhs: Vec::new(),
            lower: vec![f64::NEG_INFINITY; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) -> &mut Self {
        self.objective[var] = coeff;
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    fn dense(&self, terms: &[(usize, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.num_vars];
        for &(j, a) in terms {
            row[j] += a;
        }
        row
    }

    /// Adds `sum a_j z_j = rhs`; repeated indices accumulate.
    pub fn add_eq(&mut self, terms: &[(usize, f64)], rhs: f64) -> &mut Self {
        let row = self.dense(terms);
        self.eq_rows.extend(row);
        self.eq_rhs.push(rhs);
        self
    }

    /// Adds `sum a_j z_j <= rhs`; repeated indices accumulate.
    pub fn add_le(&mut self, terms: &[(usize, f64)], rhs: f64) -> &mut Self {
        let row = self.dense(terms);
        self.ineq_rows.extend(row);
        self.ineq_rhs.push(rhs);
        self
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.ineq_rhs.len()
    }

    pub fn build(self) -> Result<LinearProgram, LpError> {
        let n = self.num_vars;
        let eq_lhs = DMatrix::from_row_slice(self.eq_rhs.len(), n, &self.eq_rows);
        let ineq_lhs = DMatrix::from_row_slice(self.ineq_rhs.len(), n, &self.ineq_rows);
        LinearProgram::new(
            DVector::from_vec(self.objective),
            eq_lhs,
            DVector::from_vec(self.eq_rhs),
            ineq_lhs,
            DVector::from_vec(self.ineq_rhs),
            self.lower,
            self.upper,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// A feasible point was found but the iteration cap hit before optimality.
    Feasible,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Phase-one residual (relative to the right-hand side scale) above which
    /// the problem is declared infeasible.
    pub tol_feas: f64,
    /// Smallest magnitude accepted as a pivot element.
    pub pivot_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub tol_opt: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub bland_after: usize,
    /// Iteration cap; `None` means `50 * (rows + columns)` of the standard form.
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            pivot_tol: 1e-10,
            tol_opt: 1e-9,
            bland_after: 50,
            max_iterations: None,
        }
    }
}

/// Solves `lp` with default options.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    let sf = StandardForm::from_lp(lp);
    let mut tab = Tableau::new(&sf);
    let cap = opts
        .max_iterations
        .unwrap_or(50 * (tab.rows + tab.width - 1));

    let phase1 = tab.run(Phase::One, opts, cap);
    if phase1 == RunOutcome::IterationLimit {
        return LpSolution {
            status: LpStatus::IterationLimit,
            primal: None,
            objective_value: None,
            iterations: tab.iterations,
        };
    }
    let residual = -tab.obj_value(Phase::One);
    if residual > opts.tol_feas * (1.0 + sf.rhs_scale) {
        return LpSolution {
            status: LpStatus::Infeasible,
            primal: None,
            objective_value: None,
            iterations: tab.iterations,
        };
    }
    tab.drive_out_artificials(opts);

    let outcome = tab.run(Phase::Two, opts, cap);
    let primal = sf.recover(&tab.basic_values());
    let iterations = tab.iterations;
    match outcome {
        RunOutcome::Optimal => {
            let value = lp.objective_at(&primal);
            LpSolution {
                status: LpStatus::Optimal,
                primal: Some(primal),
                objective_value: Some(value),
                iterations,
            }
        }
        RunOutcome::Unbounded => LpSolution {
            status: LpStatus::Unbounded,
            primal: None,
            objective_value: None,
            iterations,
        },
        RunOutcome::IterationLimit => LpSolution {
            status: LpStatus::Feasible,
            primal: Some(primal),
            objective_value: None,
            iterations,
        },
    }
}

/// How an original variable is expressed in standard-form columns:
/// `z = offset + sum sign * y_col`.
#[derive(Debug, Clone)]
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

#[derive(Debug)]
struct StandardForm {
    /// Row-major `rows × cols` coefficient matrix after sign normalization.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    rows: usize,
    cols: usize,
    /// Per row, the slack column usable as an initial basic variable, if any.
    slack_basis: Vec<Option<usize>>,
    vars: Vec<VarMap>,
    rhs_scale: f64,
}

impl StandardForm {
    fn from_lp(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let mut vars = Vec::with_capacity(n);
        let mut cols = 0usize;
        // (structural column, bound) pairs that need an explicit upper-bound row
        let mut upper_rows = Vec::new();
        for j in 0..n {
            let (lo, hi) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
            let map = if lo.is_finite() {
                let col = cols;
                cols += 1;
                if hi.is_finite() {
                    upper_rows.push((col, hi - lo));
                }
                VarMap {
                    offset: lo,
                    cols: vec![(col, 1.0)],
                }
            } else if hi.is_finite() {
                let col = cols;
                cols += 1;
                VarMap {
                    offset: hi,
                    cols: vec![(col, -1.0)],
                }
            } else {
                let col = cols;
                cols += 2;
                VarMap {
                    offset: 0.0,
                    cols: vec![(col, 1.0), (col + 1, -1.0)],
                }
            };
            vars.push(map);
        }
        let structural = cols;
        let n_eq = lp.num_eq();
        let n_in = lp.num_ineq();
        let n_ub = upper_rows.len();
        let rows = n_eq + n_in + n_ub;
        let total_cols = structural + n_in + n_ub;

        let mut a = vec![0.0; rows * total_cols];
        let mut b = vec![0.0; rows];
        let mut slack_basis = vec![None; rows];

        let fill_row = |r: usize, coeffs: nalgebra::DVectorView<f64>, rhs: f64, a: &mut [f64]| -> f64 {
            let mut shifted = rhs;
            for (j, &coef) in coeffs.iter().enumerate() {
                if coef == 0.0 {
                    continue;
                }
                shifted -= coef * vars[j].offset;
                for &(col, sign) in &vars[j].cols {
                    a[r * total_cols + col] += coef * sign;
                }
            }
            shifted
        };

        for (i, bi) in b.iter_mut().enumerate().take(n_eq) {
            let row = lp.eq_lhs().row(i).transpose();
            *bi = fill_row(i, row.as_view(), lp.eq_rhs()[i], &mut a);
        }
        for i in 0..n_in {
            let r = n_eq + i;
            let row = lp.ineq_lhs().row(i).transpose();
            b[r] = fill_row(r, row.as_view(), lp.ineq_rhs()[i], &mut a);
            let slack = structural + i;
            a[r * total_cols + slack] = 1.0;
            slack_basis[r] = Some(slack);
        }
        for (k, &(col, width)) in upper_rows.iter().enumerate() {
            let r = n_eq + n_in + k;
            a[r * total_cols + col] = 1.0;
            let slack = structural + n_in + k;
            a[r * total_cols + slack] = 1.0;
            b[r] = width;
            slack_basis[r] = Some(slack);
        }

        for r in 0..rows {
            if b[r] < 0.0 {
                b[r] = -b[r];
                for v in &mut a[r * total_cols..(r + 1) * total_cols] {
                    *v = -*v;
                }
                slack_basis[r] = None;
            }
        }

        let mut c = vec![0.0; total_cols];
        for (j, map) in vars.iter().enumerate() {
            for &(col, sign) in &map.cols {
                c[col] += lp.objective()[j] * sign;
            }
        }
        let rhs_scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        Self {
            a,
            b,
            c,
            rows,
            cols: total_cols,
            slack_basis,
            vars,
            rhs_scale,
        }
    }

    fn recover(&self, y: &[f64]) -> Vec<f64> {
        self.vars
            .iter()
            .map(|m| m.offset + m.cols.iter().map(|&(col, s)| s * y[col]).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Dense simplex tableau. Rows `0..rows` are constraints; row `rows` holds the
/// phase-one reduced costs and row `rows + 1` the phase-two reduced costs. The
/// last column is the right-hand side; in cost rows it stores `-objective`.
struct Tableau {
    data: Vec<f64>,
    rows: usize,
    width: usize,
    /// Columns `>= first_artificial` (excluding the rhs) are artificial.
    first_artificial: usize,
    basis: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let n_art = sf.slack_basis.iter().filter(|s| s.is_none()).count();
        let first_artificial = sf.cols;
        let width = sf.cols + n_art + 1;
        let rows = sf.rows;
        let mut data = vec![0.0; (rows + 2) * width];
        let mut basis = Vec::with_capacity(rows);
        let mut next_art = first_artificial;
        for r in 0..rows {
            data[r * width..r * width + sf.cols].copy_from_slice(&sf.a[r * sf.cols..(r + 1) * sf.cols]);
            data[r * width + width - 1] = sf.b[r];
            match sf.slack_basis[r] {
                Some(slack) => basis.push(slack),
                None => {
                    data[r * width + next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
        }
        // Phase-one costs: 1 on artificials, priced out against the artificial basis.
        let p1 = rows * width;
        for r in 0..rows {
            if basis[r] >= first_artificial {
                for j in 0..width {
                    if j < first_artificial || j == width - 1 {
                        data[p1 + j] -= data[r * width + j];
                    }
                }
            }
        }
        // Phase-two costs: initial basis consists of zero-cost slacks and artificials.
        let p2 = (rows + 1) * width;
        data[p2..p2 + sf.cols].copy_from_slice(&sf.c);

        Self {
            data,
            rows,
            width,
            first_artificial,
            basis,
            iterations: 0,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn cost_row(&self, phase: Phase) -> usize {
        match phase {
            Phase::One => self.rows,
            Phase::Two => self.rows + 1,
        }
    }

    fn obj_value(&self, phase: Phase) -> f64 {
        self.at(self.cost_row(phase), self.width - 1)
    }

    fn basic_values(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.width - 1];
        for (r, &col) in self.basis.iter().enumerate() {
            y[col] = self.at(r, self.width - 1).max(0.0);
        }
        y
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows + 2 {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    fn run(&mut self, phase: Phase, opts: &SolverOptions, cap: usize) -> RunOutcome {
        let cost = self.cost_row(phase);
        let entering_limit = match phase {
            Phase::One => self.width - 1,
            Phase::Two => self.first_artificial,
        };
        let rhs = self.width - 1;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= cap {
                return RunOutcome::IterationLimit;
            }
            // Pricing
            let mut entering = None;
            let mut best = -opts.tol_opt;
            for j in 0..entering_limit {
                let d = self.at(cost, j);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else {
                return RunOutcome::Optimal;
            };

            // Ratio test
            let mut leave: Option<usize> = None;
            let mut min_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= opts.pivot_tol {
                    continue;
                }
                let ratio = self.at(r, rhs).max(0.0) / a;
                match leave {
                    None => {
                        leave = Some(r);
                        min_ratio = ratio;
                    }
                    Some(cur) => {
                        let tie = (ratio - min_ratio).abs() <= 1e-12 * (1.0 + min_ratio);
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[cur]
                            } else {
                                a > self.at(cur, pc)
                            }
                        } else {
                            ratio < min_ratio
                        };
                        if better {
                            leave = Some(r);
                            min_ratio = min_ratio.min(ratio);
                        }
                    }
                }
            }
            let Some(pr) = leave else {
                // Phase one is bounded below by zero, so this only happens in phase two.
                return RunOutcome::Unbounded;
            };
            if min_ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > opts.bland_after {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
    }

    /// Pivots zero-valued artificials out of the basis where possible. Rows whose
    /// artificial cannot leave are redundant; they stay inert because artificial
    /// columns never re-enter in phase two.
    fn drive_out_artificials(&mut self, opts: &SolverOptions) {
        for r in 0..self.rows {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                let a = self.at(r, j).abs();
                if a > opts.pivot_tol && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                self.pivot(r, j);
            }
        }
    }
}
