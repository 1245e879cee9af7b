//! Least squares with elementwise lower bounds via the Lawson-Hanson
//! active-set method.
//!
//! The cone projections behind the test statistic and its bootstrap all take
//! the form min ‖b − Ax‖² over x ≥ l. Shifting w = x − l reduces to plain
//! nonnegative least squares, which is solved exactly up to a KKT residual
//! tolerance; the solution carries its certificate so callers can trust the
//! projected distance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum stationarity violation accepted as optimal.
pub const KKT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    /// Minimizer in original coordinates, x ≥ lower.
    pub x: Vec<f64>,
    /// b − Ax at the minimizer.
    pub residual: Vec<f64>,
    /// ‖b − Ax‖².
    pub sq_residual: f64,
    /// Final KKT violation (see [`KKT_TOL`]).
    pub kkt_residual: f64,
    /// Least-squares subproblems solved.
    pub iterations: u32,
    /// Indices strictly above their lower bound, ascending.
    pub passive: Vec<usize>,
}

/// Minimizes ‖b − Ax‖² subject to x_i ≥ lower_i.
///
/// `warm_start` optionally seeds the passive set (indices allowed above
/// their bound); a bad seed only costs extra iterations. Fails if the KKT
/// residual cannot be driven below [`KKT_TOL`] within 10·ncols subproblem
/// solves.
pub fn nnls_lower_bounded(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    lower: &[f64],
    warm_start: Option<&[usize]>,
) -> Result<NnlsSolution> {
    let m = a.nrows();
    let n = a.ncols();
    if b.len() != m {
        return Err(Error::Nnls(format!(
            "matrix has {m} rows but the target has {} entries",
            b.len()
        )));
    }
    if lower.len() != n {
        return Err(Error::Nnls(format!(
            "matrix has {n} columns but {} lower bounds were given",
            lower.len()
        )));
    }

    // Shift to w = x − lower ≥ 0.
    let shift = DVector::from_column_slice(lower);
    let target = b - a * &shift;

    let mut w = DVector::<f64>::zeros(n);
    let mut in_passive = vec![false; n];
    if let Some(seed) = warm_start {
        for &i in seed {
            if i < n {
                in_passive[i] = true;
            }
        }
    }

    let max_solves = 10 * n.max(1) as u32;
    let mut solves: u32 = 0;
    let mut best: Option<(f64, DVector<f64>)> = None;

    // (Re)optimizes over the current passive set, shrinking it until the
    // subproblem solution is strictly positive there.
    let optimize_passive =
        |w: &mut DVector<f64>, in_passive: &mut Vec<bool>, solves: &mut u32| -> Result<()> {
            loop {
                let passive: Vec<usize> = (0..n).filter(|&i| in_passive[i]).collect();
                if passive.is_empty() {
                    w.fill(0.0);
                    return Ok(());
                }
                if *solves >= max_solves {
                    return Err(Error::Nnls(format!(
                        "no convergence within {max_solves} subproblem solves"
                    )));
                }
                *solves += 1;
                let sub = a.select_columns(passive.iter());
                let z_p = sub
                    .svd(true, true)
                    .solve(&target, 1e-12)
                    .map_err(|e| Error::Nnls(format!("least-squares subproblem failed: {e}")))?;
                if z_p.iter().all(|&z| z > 0.0) {
                    w.fill(0.0);
                    for (slot, &i) in passive.iter().enumerate() {
                        w[i] = z_p[slot];
                    }
                    return Ok(());
                }
                // Step toward z until the first passive coordinate hits zero,
                // then retire every coordinate that reached the boundary.
                let mut alpha = f64::INFINITY;
                for (slot, &i) in passive.iter().enumerate() {
                    if z_p[slot] <= 0.0 {
                        let denom = w[i] - z_p[slot];
                        let ratio = if denom > 0.0 { w[i] / denom } else { 0.0 };
                        alpha = alpha.min(ratio);
                    }
                }
                let alpha = alpha.clamp(0.0, 1.0);
                for (slot, &i) in passive.iter().enumerate() {
                    w[i] += alpha * (z_p[slot] - w[i]);
                    if w[i] <= 1e-14 {
                        w[i] = 0.0;
                        in_passive[i] = false;
                    }
                }
            }
        };

    if warm_start.is_some() {
        optimize_passive(&mut w, &mut in_passive, &mut solves)?;
    }

    loop {
        let gradient = a.transpose() * (&target - a * &w);
        let kkt = kkt_violation(&gradient, &w, &in_passive);
        match &best {
            Some((k, _)) if *k <= kkt => {}
            _ => best = Some((kkt, w.clone())),
        }
        if kkt <= KKT_TOL {
            break;
        }
        // Most violated active coordinate enters the passive set.
        let entering = (0..n)
            .filter(|&i| !in_passive[i])
            .max_by(|&i, &j| gradient[i].total_cmp(&gradient[j]));
        let Some(entering) = entering else {
            // All coordinates passive yet stationarity fails: numerically stuck.
            break;
        };
        if gradient[entering] <= KKT_TOL {
            break;
        }
        in_passive[entering] = true;
        if let Err(e) = optimize_passive(&mut w, &mut in_passive, &mut solves) {
            let (kkt, w_best) = best.expect("tracked at least once");
            return Err(Error::Nnls(format!(
                "{e}; best iterate had KKT residual {kkt:.3e} and squared distance {:.6e}",
                (&target - a * &w_best).norm_squared()
            )));
        }
    }

    let gradient = a.transpose() * (&target - a * &w);
    let kkt_residual = kkt_violation(&gradient, &w, &in_passive);
    if kkt_residual > KKT_TOL {
        return Err(Error::Nnls(format!(
            "stalled with KKT residual {kkt_residual:.3e} (tolerance {KKT_TOL:.1e})"
        )));
    }

    let x = &w + &shift;
    let residual = b - a * &x;
    let sq_residual = residual.norm_squared();
    Ok(NnlsSolution {
        x: x.iter().copied().collect(),
        residual: residual.iter().copied().collect(),
        sq_residual,
        kkt_residual,
        iterations: solves,
        passive: (0..n).filter(|&i| w[i] > 0.0).collect(),
    })
}

/// Stationarity violation of w for min ‖target − Aw‖², w ≥ 0, given the
/// gradient-sign convention g = Aᵀ(target − Aw): passive coordinates need
/// g = 0, active ones need g ≤ 0.
fn kkt_violation(gradient: &DVector<f64>, w: &DVector<f64>, in_passive: &[bool]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..w.len() {
        if in_passive[i] && w[i] > 0.0 {
            worst = worst.max(gradient[i].abs());
        } else {
            worst = worst.max(gradient[i]);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn solve(rows: &[&[f64]], b: &[f64], lower: &[f64], warm: Option<&[usize]>) -> NnlsSolution {
        let a = DMatrix::from_row_slice(rows.len(), rows[0].len(), &rows.concat());
        nnls_lower_bounded(&a, &DVector::from_column_slice(b), lower, warm).unwrap()
    }

    #[test]
    fn interior_point_fits_exactly() {
        let sol = solve(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.3, 0.7], &[0.0, 0.0], None);
        assert!(sol.sq_residual < 1e-20);
        assert!((sol.x[0] - 0.3).abs() < 1e-12);
        assert!((sol.x[1] - 0.7).abs() < 1e-12);
        assert_eq!(sol.passive, vec![0, 1]);
    }

    #[test]
    fn negative_component_is_clipped() {
        let sol = solve(&[&[1.0, 0.0], &[0.0, 1.0]], &[-1.0, 2.0], &[0.0, 0.0], None);
        assert!((sol.x[0]).abs() < 1e-14);
        assert!((sol.x[1] - 2.0).abs() < 1e-12);
        assert!((sol.sq_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bounds_bind_where_target_is_below() {
        let sol = solve(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.1, 0.5], &[0.2, 0.2], None);
        assert!((sol.x[0] - 0.2).abs() < 1e-14);
        assert!((sol.x[1] - 0.5).abs() < 1e-12);
        assert!((sol.sq_residual - 0.01).abs() < 1e-12);
        assert_eq!(sol.passive, vec![1]);
    }

    #[test]
    fn duplicate_columns_reach_the_same_objective() {
        let single = solve(&[&[1.0], &[1.0]], &[1.0, 0.5], &[0.0], None);
        let doubled = solve(&[&[1.0, 1.0], &[1.0, 1.0]], &[1.0, 0.5], &[0.0, 0.0], None);
        assert!((single.sq_residual - doubled.sq_residual).abs() < 1e-10);
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let rows: &[&[f64]] = &[&[1.0, 0.3, 0.0], &[0.0, 0.4, 1.0], &[1.0, 0.3, 1.0]];
        let b = [0.9, -0.2, 0.4];
        let cold = solve(rows, &b, &[0.0; 3], None);
        let warm = solve(rows, &b, &[0.0; 3], Some(&[0, 1, 2]));
        assert!((cold.sq_residual - warm.sq_residual).abs() < 1e-10);
    }

    #[test]
    fn zero_target_returns_the_bound() {
        let sol = solve(&[&[1.0, 1.0], &[0.0, 1.0]], &[0.0, 0.0], &[0.1, 0.1], None);
        assert!((sol.x[0] - 0.1).abs() < 1e-14);
        assert!((sol.x[1] - 0.1).abs() < 1e-14);
        assert!(sol.passive.is_empty());
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0]);
        assert!(nnls_lower_bounded(&a, &b, &[0.0, 0.0], None).is_err());
        let b = DVector::from_column_slice(&[1.0, 1.0]);
        assert!(nnls_lower_bounded(&a, &b, &[0.0], None).is_err());
    }

    /// Shrinking grid search over [0, hi]^m; an independent check on small
    /// instances. Returns the best objective found.
    fn grid_refine_min(a: &DMatrix<f64>, b: &DVector<f64>, hi: f64) -> f64 {
        let m = a.ncols();
        let steps: i64 = 8;
        let mut center = vec![hi / 2.0; m];
        let mut radius = hi / 2.0;
        let mut best = f64::INFINITY;
        for _ in 0..10 {
            let mut best_point = center.clone();
            let mut counters = vec![-steps; m];
            'grid: loop {
                let point: Vec<f64> = counters
                    .iter()
                    .zip(&center)
                    .map(|(&k, &c)| (c + k as f64 * radius / steps as f64).max(0.0))
                    .collect();
                let r = b - a * DVector::from_column_slice(&point);
                let f = r.norm_squared();
                if f < best {
                    best = f;
                    best_point = point;
                }
                for c in counters.iter_mut() {
                    *c += 1;
                    if *c <= steps {
                        continue 'grid;
                    }
                    *c = -steps;
                }
                break;
            }
            center = best_point;
            radius *= 0.35;
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// The active-set solution matches an exhaustive grid refinement.
        #[test]
        fn matches_grid_search(
            entries in proptest::collection::vec(0.2f64..1.0, 12),
            target in proptest::collection::vec(0.0f64..1.0, 4),
        ) {
            let a = DMatrix::from_row_slice(4, 3, &entries);
            let b = DVector::from_column_slice(&target);
            let sol = nnls_lower_bounded(&a, &b, &[0.0; 3], None).unwrap();
            // Entries ≥ 0.2 and ‖b‖∞ ≤ 1 bound any minimizer's coordinates
            // well inside [0, 15].
            let grid = grid_refine_min(&a, &b, 15.0);
            prop_assert!(grid >= sol.sq_residual - 1e-8);
            prop_assert!(grid - sol.sq_residual <= 1e-4);
        }
    }

    proptest! {
        /// Optimality certificate: no random feasible point does better.
        #[test]
        fn beats_random_feasible_points(
            entries in proptest::collection::vec(-1.0f64..1.0, 12),
            target in proptest::collection::vec(-1.0f64..1.0, 4),
            probes in proptest::collection::vec(proptest::collection::vec(0.0f64..2.0, 3), 8),
            lower in proptest::collection::vec(0.0f64..0.3, 3),
        ) {
            let a = DMatrix::from_row_slice(4, 3, &entries);
            let b = DVector::from_column_slice(&target);
            let sol = nnls_lower_bounded(&a, &b, &lower, None).unwrap();
            prop_assert!(sol.kkt_residual <= KKT_TOL);
            for (i, &xi) in sol.x.iter().enumerate() {
                prop_assert!(xi >= lower[i] - 1e-14);
            }
            for probe in &probes {
                let y: Vec<f64> = probe.iter().zip(&lower).map(|(p, l)| l + p).collect();
                let ry = &b - &a * DVector::from_column_slice(&y);
                prop_assert!(sol.sq_residual <= ry.norm_squared() + 1e-9);
            }
        }
    }
}
