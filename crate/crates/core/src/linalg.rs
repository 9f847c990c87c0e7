//! Small dense helpers shared by the geometry and data modules.

use nalgebra::{DMatrix, DVector};

/// Relative threshold on the diagonal of the pivoted R factor.
pub const RANK_TOL: f64 = 1e-9;

/// Numerical rank from a column-pivoted QR factorization: the number of
/// diagonal entries of R whose magnitude exceeds `rel_tol` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    // Factor the orientation with more rows so R is square.
    let tall = if m.nrows() >= m.ncols() { m.clone() } else { m.transpose() };
    let r = tall.col_piv_qr().r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let largest = diag.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    diag.iter().filter(|&&d| d > rel_tol * largest).count()
}

/// Solves a square system, returning `None` when it is numerically singular.
pub fn solve_square(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if numerical_rank(a, RANK_TOL) < a.nrows() {
        return None;
    }
    a.clone().lu().solve(b)
}

/// Largest absolute entry, zero for empty matrices.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(numerical_rank(&DMatrix::identity(3, 3), RANK_TOL), 3);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 4), RANK_TOL), 0);
        let ones = DMatrix::from_element(2, 3, 1.0);
        assert_eq!(numerical_rank(&ones, RANK_TOL), 1);
        let wide = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(numerical_rank(&wide, RANK_TOL), 2);
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(solve_square(&a, &DVector::from_vec(vec![1.0, 1.0])).is_none());
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let x = solve_square(&a, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(x.as_slice(), &[0.5, 0.25]);
    }
}
