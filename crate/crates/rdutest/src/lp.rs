//! Max-min-slack linear programs: maximize δ subject to rows of the form
//! Σ coeff·x − δ ≥ rhs plus plain linear rows, with box-bounded variables.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};

/// Bound on the slack variable keeping every program bounded even when no
/// row constrains δ. Row coefficients are O(1) and variables live in unit
/// boxes, so genuine margins never get near it.
pub(crate) const DELTA_BOUND: f64 = 16.0;

pub(crate) struct MarginLp {
    problem: Problem,
    delta: Variable,
    vars: Vec<Variable>,
}

impl MarginLp {
    /// One boxed variable per entry of `bounds`, objective = maximize δ.
    pub fn new(bounds: &[(f64, f64)]) -> MarginLp {
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let delta = problem.add_var(1.0, (-DELTA_BOUND, DELTA_BOUND));
        let vars = bounds
            .iter()
            .map(|&(lo, hi)| problem.add_var(0.0, (lo, hi)))
            .collect();
        MarginLp {
            problem,
            delta,
            vars,
        }
    }

    /// Adds Σ coeff_i·x_i − δ ≥ rhs. Duplicate indices accumulate.
    pub fn margin_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        self.row(coeffs, rhs, true);
    }

    /// Adds Σ coeff_i·x_i ≥ rhs. Rows with all-zero coefficients are dropped;
    /// callers only emit them with rhs ≤ 0.
    pub fn plain_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        self.row(coeffs, rhs, false);
    }

    fn row(&mut self, coeffs: &[(usize, f64)], rhs: f64, with_delta: bool) {
        let mut dense = vec![0.0; self.vars.len()];
        for &(i, c) in coeffs {
            dense[i] += c;
        }
        let mut row: Vec<(Variable, f64)> = dense
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0.0)
            .map(|(i, &c)| (self.vars[i], c))
            .collect();
        if with_delta {
            row.push((self.delta, -1.0));
        }
        if row.is_empty() {
            debug_assert!(rhs <= 0.0, "dropped an unsatisfiable constant row");
            return;
        }
        self.problem.add_constraint(&row, ComparisonOp::Ge, rhs);
    }

    /// Returns (δ*, x*).
    pub fn solve(self) -> Result<(f64, Vec<f64>)> {
        let solution = self.problem.solve().map_err(|e| Error::Lp(e.to_string()))?;
        let delta = solution.objective();
        if !delta.is_finite() {
            return Err(Error::Lp("non-finite objective".into()));
        }
        let values = self.vars.iter().map(|&v| solution[v]).collect();
        Ok((delta, values))
    }
}
