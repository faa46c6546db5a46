//! Dense phase-1 simplex for equality-constrained feasibility.
//!
//! Solves "does `A w = b` admit `w >= 0`" by minimizing the sum of
//! artificial variables over the full tableau. Bland's smallest-index
//! rule governs both the entering column and ratio-test ties, which rules
//! out cycling; the trade is extra pivots, acceptable at the problem
//! sizes this crate produces (hundreds of rows).

use nalgebra::{DMatrix, DVector};

const REDUCED_COST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-11;

/// Result of a phase-1 run.
#[derive(Debug, Clone)]
pub(crate) enum Phase1Outcome {
    /// An optimum was reached; `objective` is the residual sum of the
    /// artificial variables and `solution` the structural variables.
    Optimal { objective: f64, solution: Vec<f64> },
    /// The iteration cap was hit before optimality.
    IterationCap { iterations: usize },
}

/// Minimizes the artificial-variable sum for `A w = b`, `w >= 0`.
pub(crate) fn phase1_feasibility(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    max_iterations: usize,
) -> Phase1Outcome {
    let m = a.nrows();
    let n = a.ncols();
    debug_assert_eq!(b.len(), m);

    let mut tableau = DMatrix::<f64>::zeros(m, n + m);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            tableau[(i, j)] = flip * a[(i, j)];
        }
        tableau[(i, n + i)] = 1.0;
        rhs[i] = flip * b[i];
    }

    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut reduced = DVector::<f64>::zeros(n + m);
    for j in 0..n {
        reduced[j] = -tableau.column(j).sum();
    }
    let extract = |basis: &[usize], rhs: &DVector<f64>| {
        let mut solution = vec![0.0; n];
        let mut objective = 0.0;
        for (row, &var) in basis.iter().enumerate() {
            if var < n {
                solution[var] = rhs[row];
            } else {
                objective += rhs[row];
            }
        }
        Phase1Outcome::Optimal {
            objective,
            solution,
        }
    };

    for iteration in 0..max_iterations {
        let entering = (0..n + m).find(|&j| reduced[j] < -REDUCED_COST_TOL);
        let entering = match entering {
            Some(j) => j,
            None => return extract(&basis, &rhs),
        };

        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let coeff = tableau[(i, entering)];
            if coeff > PIVOT_TOL {
                let ratio = rhs[i] / coeff;
                let better = match leaving {
                    None => true,
                    Some((best_row, best_ratio)) => {
                        ratio < best_ratio - 1e-15
                            || (ratio <= best_ratio + 1e-15 && basis[i] < basis[best_row])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let (pivot_row, _) = match leaving {
            Some(found) => found,
            None => {
                return Phase1Outcome::IterationCap {
                    iterations: iteration,
                }
            }
        };

        let pivot = tableau[(pivot_row, entering)];
        for j in 0..n + m {
            tableau[(pivot_row, j)] /= pivot;
        }
        rhs[pivot_row] /= pivot;
        for i in 0..m {
            if i == pivot_row {
                continue;
            }
            let factor = tableau[(i, entering)];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n + m {
                tableau[(i, j)] -= factor * tableau[(pivot_row, j)];
            }
            rhs[i] -= factor * rhs[pivot_row];
            if rhs[i] < 0.0 && rhs[i] > -1e-12 {
                rhs[i] = 0.0;
            }
        }
        let cost_factor = reduced[entering];
        for j in 0..n + m {
            reduced[j] -= cost_factor * tableau[(pivot_row, j)];
        }
        basis[pivot_row] = entering;
    }

    Phase1Outcome::IterationCap {
        iterations: max_iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> DMatrix<f64> {
        let m = rows.len();
        let n = rows[0].len();
        DMatrix::from_fn(m, n, |i, j| rows[i][j])
    }

    #[test]
    fn single_simplex_constraint_is_feasible() {
        let a = matrix(&[&[1.0, 1.0]]);
        let b = DVector::from_vec(vec![1.0]);
        match phase1_feasibility(&a, &b, 1000) {
            Phase1Outcome::Optimal {
                objective,
                solution,
            } => {
                assert!(objective < 1e-12);
                assert!((solution.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(solution.iter().all(|&w| w >= 0.0));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn negative_solution_requirement_is_infeasible() {
        // x1 - x2 = 2 and x1 + x2 = 1 force x2 = -1/2.
        let a = matrix(&[&[1.0, -1.0], &[1.0, 1.0]]);
        let b = DVector::from_vec(vec![2.0, 1.0]);
        match phase1_feasibility(&a, &b, 1000) {
            Phase1Outcome::Optimal { objective, .. } => {
                assert!(objective > 0.4, "objective {objective}");
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows_are_handled() {
        // Same system scaled by -1 on the first row.
        let a = matrix(&[&[-1.0, -2.0], &[1.0, 1.0]]);
        let b = DVector::from_vec(vec![-3.0, 2.0]);
        match phase1_feasibility(&a, &b, 1000) {
            Phase1Outcome::Optimal {
                objective,
                solution,
            } => {
                assert!(objective < 1e-12);
                let lhs0 = -solution[0] - 2.0 * solution[1];
                let lhs1 = solution[0] + solution[1];
                assert!((lhs0 + 3.0).abs() < 1e-10);
                assert!((lhs1 - 2.0).abs() < 1e-10);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn redundant_rows_stay_feasible() {
        let a = matrix(&[&[1.0, 1.0], &[2.0, 2.0], &[1.0, 0.0]]);
        let b = DVector::from_vec(vec![1.0, 2.0, 0.25]);
        match phase1_feasibility(&a, &b, 1000) {
            Phase1Outcome::Optimal {
                objective,
                solution,
            } => {
                assert!(objective < 1e-10);
                assert!((solution[0] - 0.25).abs() < 1e-10);
                assert!((solution[1] - 0.75).abs() < 1e-10);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn iteration_cap_reports_indeterminate() {
        let a = matrix(&[&[1.0, 1.0, 0.5], &[0.5, 1.5, 1.0]]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            phase1_feasibility(&a, &b, 1),
            Phase1Outcome::IterationCap { .. }
        ));
    }
}
