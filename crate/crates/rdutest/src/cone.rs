//! The cone characterization and its bootstrap test.
//!
//! A stochastic choice rule is consistent with a population of maximizers
//! drawn from an order set R exactly when the stacked frequency vector ρ lies
//! in the cone {Bv : v ≥ 0}, where column l of B records the best element
//! order l picks from each menu. The test statistic is the sample-scaled
//! squared distance to that cone; critical values come from a bootstrap on a
//! tightened cone whose weights stay at least τ_n/|R| away from zero.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Menu, StochasticChoiceData};
use crate::nnls::{nnls_lower_bounded, NnlsSolution};
use crate::orders::OrderSet;
use crate::rng::{stream_rng, STREAM_BOOTSTRAP};

/// Stacked row indexing for frequency vectors: one row per (menu, member)
/// pair, menus in collection order, members ascending within each menu.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MenuIndex {
    menus: Vec<Menu>,
    offsets: Vec<usize>,
    d_rho: usize,
}

impl MenuIndex {
    pub fn new(menus: Vec<Menu>) -> Result<Self> {
        if menus.is_empty() {
            return Err(Error::invalid("need at least one menu"));
        }
        let mut offsets = Vec::with_capacity(menus.len());
        let mut next = 0;
        for m in &menus {
            offsets.push(next);
            next += m.len();
        }
        Ok(MenuIndex {
            menus,
            offsets,
            d_rho: next,
        })
    }

    pub fn from_data(data: &StochasticChoiceData) -> Result<Self> {
        MenuIndex::new(data.blocks().iter().map(|b| b.menu().clone()).collect())
    }

    /// Total row count Σ_A |A|.
    pub fn d_rho(&self) -> usize {
        self.d_rho
    }

    pub fn menus(&self) -> &[Menu] {
        &self.menus
    }

    pub fn menu_count(&self) -> usize {
        self.menus.len()
    }

    /// Row range of one menu's block.
    pub fn rows(&self, menu: usize) -> Range<usize> {
        let start = self.offsets[menu];
        start..start + self.menus[menu].len()
    }

    /// Row of (menu, lottery), if the lottery belongs to the menu.
    pub fn row_of(&self, menu: usize, lottery: usize) -> Option<usize> {
        self.menus[menu]
            .members()
            .binary_search(&lottery)
            .ok()
            .map(|slot| self.offsets[menu] + slot)
    }
}

/// The 0/1 matrix of deterministic choice rules: entry ((A,a), l) is 1 iff
/// order l picks a from menu A.
#[derive(Debug, Clone, PartialEq)]
pub struct BMatrix {
    index: MenuIndex,
    entries: DMatrix<f64>,
}

impl BMatrix {
    pub fn index(&self) -> &MenuIndex {
        &self.index
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn d_rho(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of orders |R|.
    pub fn order_count(&self) -> usize {
        self.entries.ncols()
    }

    /// Groups identical columns. Orders that choose alike in every menu are
    /// indistinguishable in the cone, so the solves run on one representative
    /// per group with the group size retained for tightening.
    pub fn collapse(&self) -> CollapsedCone {
        let d = self.entries.nrows();
        let mut key_to_group: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut representatives: Vec<usize> = Vec::new();
        let mut group_sizes: Vec<usize> = Vec::new();
        let mut group_of: Vec<usize> = Vec::with_capacity(self.entries.ncols());
        for col in 0..self.entries.ncols() {
            let key: Vec<u8> = (0..d).map(|r| self.entries[(r, col)] as u8).collect();
            let group = *key_to_group.entry(key).or_insert_with(|| {
                representatives.push(col);
                group_sizes.push(0);
                group_sizes.len() - 1
            });
            group_sizes[group] += 1;
            group_of.push(group);
        }
        CollapsedCone {
            columns: self.entries.select_columns(representatives.iter()),
            group_sizes,
            group_of,
        }
    }
}

/// Distinct columns of a [`BMatrix`] with their multiplicities.
#[derive(Debug, Clone)]
pub struct CollapsedCone {
    /// d_ρ × (distinct column count), still 0/1.
    pub columns: DMatrix<f64>,
    /// Orders represented by each distinct column.
    pub group_sizes: Vec<usize>,
    /// Group of each original column.
    pub group_of: Vec<usize>,
}

impl CollapsedCone {
    /// Lower bounds for the per-group aggregated weights when every order's
    /// weight must be at least `per_order`.
    fn lower_bounds(&self, per_order: f64) -> Vec<f64> {
        self.group_sizes
            .iter()
            .map(|&c| per_order * c as f64)
            .collect()
    }

    /// Spreads a per-group solution evenly over each group's orders.
    fn expand(&self, grouped: &[f64]) -> Vec<f64> {
        self.group_of
            .iter()
            .map(|&g| grouped[g] / self.group_sizes[g] as f64)
            .collect()
    }
}

/// Builds the choice-rule matrix of an order set over a menu collection.
pub fn build_b(order_set: &OrderSet, index: &MenuIndex, universe_len: usize) -> Result<BMatrix> {
    if order_set.is_empty() {
        return Err(Error::EmptyOrderSet);
    }
    for menu in index.menus() {
        if menu.members().iter().any(|&m| m >= universe_len) {
            return Err(Error::invalid(
                "menu refers to a lottery outside the universe",
            ));
        }
    }
    let mut entries = DMatrix::<f64>::zeros(index.d_rho(), order_set.len());
    for (col, order) in order_set.orders.iter().enumerate() {
        if order.len() != universe_len {
            return Err(Error::invalid("order and universe sizes disagree"));
        }
        for menu_j in 0..index.menu_count() {
            let best = order.best_in(&index.menus()[menu_j]);
            let row = index
                .row_of(menu_j, best)
                .expect("best element belongs to its menu");
            entries[(row, col)] = 1.0;
        }
    }
    Ok(BMatrix {
        index: index.clone(),
        entries,
    })
}

/// Stacks the empirical choice frequencies of `data` in index order.
pub fn estimate_rho(data: &StochasticChoiceData, index: &MenuIndex) -> Result<Vec<f64>> {
    if data.blocks().len() != index.menu_count() {
        return Err(Error::invalid("data and index cover different menus"));
    }
    let mut rho = vec![0.0; index.d_rho()];
    for (j, block) in data.blocks().iter().enumerate() {
        if block.menu() != &index.menus()[j] {
            return Err(Error::invalid("data and index disagree on a menu"));
        }
        let n_a = block.total() as f64;
        for (slot, &member) in block.menu().members().iter().enumerate() {
            rho[index.rows(j).start + slot] = block.count(member) as f64 / n_a;
        }
    }
    Ok(rho)
}

/// τ_n = sqrt(log(min_A n_A) / min_A n_A). A singleton menu sample gives 0,
/// which disables the tightening; callers should surface a warning.
pub fn tau_n(data: &StochasticChoiceData) -> f64 {
    let m = data.min_menu_total() as f64;
    (m.ln() / m).sqrt()
}

/// T_n = n · min_{v ≥ 0} ‖ρ̂ − Bv‖² with the per-order minimizer.
pub fn test_statistic(rho_hat: &[f64], b: &BMatrix, n: u64) -> Result<(f64, Vec<f64>)> {
    let collapsed = b.collapse();
    let solution = project(&collapsed, rho_hat, 0.0, None)?;
    Ok((
        n as f64 * solution.sq_residual,
        collapsed.expand(&solution.x),
    ))
}

fn project(
    cone: &CollapsedCone,
    target: &[f64],
    per_order_lower: f64,
    warm: Option<&[usize]>,
) -> Result<NnlsSolution> {
    nnls_lower_bounded(
        &cone.columns,
        &DVector::from_column_slice(target),
        &cone.lower_bounds(per_order_lower),
        warm,
    )
}

/// One critical value with its decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub alpha: f64,
    pub value: f64,
    pub reject: bool,
}

/// Everything the bootstrap test produces, sufficient to reproduce the run
/// together with the order-set fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeTestResult {
    pub t_n: f64,
    pub p_value: f64,
    pub tau_n: f64,
    pub sample_size: u64,
    pub order_count: usize,
    pub distinct_rules: usize,
    pub d_rho: usize,
    pub replications: u32,
    pub seed: u64,
    pub critical_values: Vec<CriticalValue>,
    pub eta_hat: Vec<f64>,
    pub v_star: Vec<f64>,
    pub bootstrap_stats: Vec<f64>,
}

/// Tightened-cone bootstrap: projects ρ̂ onto the τ_n-tightened cone, recenters
/// each within-menu resample at that projection, and compares T_n with the
/// resampled distribution.
pub fn ks_bootstrap(
    data: &StochasticChoiceData,
    b: &BMatrix,
    replications: u32,
    alphas: &[f64],
    seed: u64,
) -> Result<ConeTestResult> {
    if replications < 100 {
        return Err(Error::invalid(format!(
            "at least 100 bootstrap replications required, got {replications}"
        )));
    }
    if alphas.is_empty() {
        return Err(Error::invalid("at least one test level required"));
    }
    for &a in alphas {
        if !(a > 0.0 && a < 0.5) {
            return Err(Error::invalid(format!(
                "test level must lie strictly between 0 and 1/2, got {a}"
            )));
        }
    }

    let index = b.index();
    let rho_hat = estimate_rho(data, index)?;
    let n = data.total();
    let tau = tau_n(data);
    let cone = b.collapse();
    let per_order_lower = tau / b.order_count() as f64;

    let t_solution = project(&cone, &rho_hat, 0.0, None)?;
    let t_n = n as f64 * t_solution.sq_residual;
    let v_star = cone.expand(&t_solution.x);

    let tight = project(&cone, &rho_hat, per_order_lower, None)?;
    let eta_vec = &cone.columns * DVector::from_column_slice(&tight.x);
    let eta_hat: Vec<f64> = eta_vec.iter().copied().collect();

    // Per-replication bootstrap target: ρ̂* − ρ̂ + η̂, projected onto the
    // tightened cone. Each replication draws from its own seed stream so the
    // distribution is reproducible under any thread schedule.
    let counts: Vec<(Vec<u64>, u64)> = data
        .blocks()
        .iter()
        .map(|block| {
            let per_member: Vec<u64> = block
                .menu()
                .members()
                .iter()
                .map(|&m| block.count(m))
                .collect();
            (per_member, block.total())
        })
        .collect();

    let bootstrap_stats: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|l| {
            let mut rng = stream_rng(seed, STREAM_BOOTSTRAP, l as u64);
            let mut target = vec![0.0; index.d_rho()];
            for (j, (per_member, n_a)) in counts.iter().enumerate() {
                let start = index.rows(j).start;
                let resampled = resample_menu(per_member, *n_a, &mut rng);
                for (slot, &count) in resampled.iter().enumerate() {
                    let freq = count as f64 / *n_a as f64;
                    target[start + slot] = freq - rho_hat[start + slot] + eta_hat[start + slot];
                }
            }
            let solution = match project(&cone, &target, per_order_lower, None) {
                Ok(s) => s,
                Err(first) => project(&cone, &target, per_order_lower, Some(&tight.passive))
                    .map_err(|second| Error::Bootstrap {
                        replication: l as usize,
                        message: format!("{first}; retry: {second}"),
                    })?,
            };
            Ok(n as f64 * solution.sq_residual)
        })
        .collect::<Result<_>>()?;

    let mut sorted = bootstrap_stats.clone();
    sorted.sort_by(f64::total_cmp);
    let critical_values: Vec<CriticalValue> = alphas
        .iter()
        .map(|&alpha| {
            let rank = ((1.0 - alpha) * replications as f64).ceil() as usize;
            let value = sorted[rank.clamp(1, replications as usize) - 1];
            CriticalValue {
                alpha,
                value,
                reject: t_n > value,
            }
        })
        .collect();
    let exceed = bootstrap_stats.iter().filter(|&&t| t >= t_n).count();
    let p_value = (exceed + 1) as f64 / (replications as f64 + 1.0);

    Ok(ConeTestResult {
        t_n,
        p_value,
        tau_n: tau,
        sample_size: n,
        order_count: b.order_count(),
        distinct_rules: cone.group_sizes.len(),
        d_rho: b.d_rho(),
        replications,
        seed,
        critical_values,
        eta_hat,
        v_star,
        bootstrap_stats,
    })
}

/// n_A draws with replacement from one menu's observed choices, by inversion
/// on the integer tallies.
fn resample_menu(per_member: &[u64], n_a: u64, rng: &mut impl Rng) -> Vec<u64> {
    let mut cumulative = Vec::with_capacity(per_member.len());
    let mut running = 0u64;
    for &c in per_member {
        running += c;
        cumulative.push(running);
    }
    let mut out = vec![0u64; per_member.len()];
    for _ in 0..n_a {
        let u = rng.gen::<f64>() * n_a as f64;
        let slot = cumulative.partition_point(|&c| (c as f64) <= u);
        out[slot.min(per_member.len() - 1)] += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rat, Lottery, LotteryUniverse, MenuBlock, PrizeGrid};
    use crate::orders::{compute_order_set, ModelKind, SearchSettings};
    use std::collections::BTreeMap;

    fn two_prize_universe(highs: &[(i64, i64)]) -> LotteryUniverse {
        let grid = PrizeGrid::new(vec![0.0, 1.0]).unwrap();
        let lotteries = highs
            .iter()
            .map(|&(n, d)| {
                let high = rat(n, d);
                Lottery::new(vec![rat(1, 1) - high, high]).unwrap()
            })
            .collect();
        LotteryUniverse::new(grid, lotteries).unwrap()
    }

    fn pair_menu_index(universe_len: usize) -> MenuIndex {
        let mut menus = Vec::new();
        for a in 0..universe_len {
            for b in a + 1..universe_len {
                menus.push(Menu::new(vec![a, b], universe_len).unwrap());
            }
        }
        MenuIndex::new(menus).unwrap()
    }

    fn data_from_counts(index: &MenuIndex, per_menu: &[Vec<u64>]) -> StochasticChoiceData {
        let blocks = index
            .menus()
            .iter()
            .zip(per_menu)
            .map(|(menu, counts)| {
                let map: BTreeMap<usize, u64> = menu
                    .members()
                    .iter()
                    .copied()
                    .zip(counts.iter().copied())
                    .collect();
                MenuBlock::new(menu.clone(), map).unwrap()
            })
            .collect();
        StochasticChoiceData::new(blocks).unwrap()
    }

    #[test]
    fn single_menu_two_orders_is_the_identity() {
        let universe = two_prize_universe(&[(1, 5), (2, 5)]);
        let set = compute_order_set(&universe, &SearchSettings::new(ModelKind::Eu)).unwrap();
        assert_eq!(set.len(), 2);
        let index = MenuIndex::new(vec![Menu::new(vec![0, 1], 2).unwrap()]).unwrap();
        let b = build_b(&set, &index, 2).unwrap();
        assert_eq!(b.d_rho(), 2);
        assert_eq!(b.order_count(), 2);
        let e = b.entries();
        // Orders are [0,1] then [1,0]; rows are lotteries 0 then 1.
        assert_eq!(
            [(e[(0, 0)], e[(1, 0)]), (e[(0, 1)], e[(1, 1)])],
            [(1.0, 0.0), (0.0, 1.0)]
        );
    }

    #[test]
    fn columns_sum_to_the_menu_count() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let mut settings = SearchSettings::new(ModelKind::Rdeu);
        settings.seed = 11;
        let set = compute_order_set(&universe, &settings).unwrap();
        let index = pair_menu_index(3);
        let b = build_b(&set, &index, 3).unwrap();
        for col in 0..b.order_count() {
            let sum: f64 = (0..b.d_rho()).map(|r| b.entries()[(r, col)]).sum();
            assert_eq!(sum, index.menu_count() as f64);
        }
        for menu_j in 0..index.menu_count() {
            for col in 0..b.order_count() {
                let ones: f64 = index.rows(menu_j).map(|r| b.entries()[(r, col)]).sum();
                assert_eq!(ones, 1.0);
            }
        }
    }

    #[test]
    fn empty_order_set_is_rejected() {
        let universe = two_prize_universe(&[(1, 5), (2, 5)]);
        let set = OrderSet {
            fingerprint: String::new(),
            settings: SearchSettings::new(ModelKind::Eu),
            levels: vec![],
            orders: vec![],
            witnesses: vec![],
        };
        let index = MenuIndex::new(vec![Menu::new(vec![0, 1], 2).unwrap()]).unwrap();
        assert!(matches!(
            build_b(&set, &index, universe.len()),
            Err(Error::EmptyOrderSet)
        ));
    }

    #[test]
    fn tau_values() {
        let index = MenuIndex::new(vec![Menu::new(vec![0, 1], 2).unwrap()]).unwrap();
        let data = data_from_counts(&index, &[vec![2, 1]]);
        assert!((tau_n(&data) - (3f64.ln() / 3.0).sqrt()).abs() < 1e-12);
        assert!((tau_n(&data) - 0.60515).abs() < 1e-4);
        let single = data_from_counts(&index, &[vec![1, 0]]);
        assert_eq!(tau_n(&single), 0.0);
        let mut last = f64::INFINITY;
        for m in 3..200u64 {
            let t = {
                let d = data_from_counts(&index, &[vec![m, 0]]);
                tau_n(&d)
            };
            assert!(t < last, "tau must decrease beyond n = 3");
            last = t;
        }
    }

    #[test]
    fn statistic_vanishes_inside_the_cone() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let set = compute_order_set(&universe, &SearchSettings::new(ModelKind::Eu)).unwrap();
        let index = pair_menu_index(3);
        let b = build_b(&set, &index, 3).unwrap();
        // Mix the two EU orders 70/30; the induced rule lies in the cone.
        let e = b.entries();
        let rho: Vec<f64> = (0..b.d_rho())
            .map(|r| 0.7 * e[(r, 0)] + 0.3 * e[(r, 1)])
            .collect();
        let (t, v) = test_statistic(&rho, &b, 300).unwrap();
        assert!(t <= 1e-10, "t = {t}");
        assert_eq!(v.len(), 2);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn statistic_positive_outside_the_cone() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let set = compute_order_set(&universe, &SearchSettings::new(ModelKind::Eu)).unwrap();
        let index = pair_menu_index(3);
        let b = build_b(&set, &index, 3).unwrap();
        // Intransitive frequencies: always 0 over 1, always 1 over 2, always 2 over 0.
        let rho = vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let (t, _) = test_statistic(&rho, &b, 30).unwrap();
        assert!(t > 1.0, "t = {t}");
    }

    #[test]
    fn bootstrap_is_deterministic_and_sane() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let set = compute_order_set(&universe, &SearchSettings::new(ModelKind::Eu)).unwrap();
        let index = pair_menu_index(3);
        let b = build_b(&set, &index, 3).unwrap();
        let data = data_from_counts(&index, &[vec![38, 12], vec![41, 9], vec![35, 15]]);
        let r1 = ks_bootstrap(&data, &b, 200, &[0.05, 0.01], 7).unwrap();
        let r2 = ks_bootstrap(&data, &b, 200, &[0.05, 0.01], 7).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.p_value > 0.0 && r1.p_value <= 1.0);
        assert_eq!(r1.bootstrap_stats.len(), 200);
        assert_eq!(r1.sample_size, 150);
        assert!(r1.critical_values[0].value <= r1.critical_values[1].value);
        let r3 = ks_bootstrap(&data, &b, 200, &[0.05, 0.01], 8).unwrap();
        assert_ne!(r1.bootstrap_stats, r3.bootstrap_stats);
    }

    #[test]
    fn bootstrap_does_not_reject_cone_interior_data() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let set = compute_order_set(&universe, &SearchSettings::new(ModelKind::Eu)).unwrap();
        let index = pair_menu_index(3);
        let b = build_b(&set, &index, 3).unwrap();
        // 60/40 mixture of the two admissible orders, sampled without noise.
        let data = data_from_counts(&index, &[vec![60, 40], vec![60, 40], vec![60, 40]]);
        let result = ks_bootstrap(&data, &b, 300, &[0.05], 21).unwrap();
        assert!(result.t_n <= 1e-8);
        assert!(!result.critical_values[0].reject);
        assert!(result.p_value > 0.05);
    }

    #[test]
    fn bootstrap_rejects_far_from_the_cone() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let set = compute_order_set(&universe, &SearchSettings::new(ModelKind::Eu)).unwrap();
        let index = pair_menu_index(3);
        let b = build_b(&set, &index, 3).unwrap();
        // Strong choice cycle, far outside the EU cone.
        let data = data_from_counts(&index, &[vec![490, 10], vec![10, 490], vec![10, 490]]);
        let result = ks_bootstrap(&data, &b, 300, &[0.05, 0.01], 3).unwrap();
        assert!(result.critical_values.iter().all(|c| c.reject));
        assert!(result.p_value < 0.01);
    }

    #[test]
    fn bootstrap_validates_inputs() {
        let universe = two_prize_universe(&[(1, 5), (2, 5)]);
        let set = compute_order_set(&universe, &SearchSettings::new(ModelKind::Eu)).unwrap();
        let index = MenuIndex::new(vec![Menu::new(vec![0, 1], 2).unwrap()]).unwrap();
        let b = build_b(&set, &index, 2).unwrap();
        let data = data_from_counts(&index, &[vec![5, 5]]);
        assert!(ks_bootstrap(&data, &b, 99, &[0.05], 0).is_err());
        assert!(ks_bootstrap(&data, &b, 100, &[], 0).is_err());
        assert!(ks_bootstrap(&data, &b, 100, &[0.5], 0).is_err());
        assert!(ks_bootstrap(&data, &b, 100, &[0.0], 0).is_err());
    }

    #[test]
    fn resampling_preserves_menu_totals() {
        let mut rng = stream_rng(1, STREAM_BOOTSTRAP, 0);
        let out = resample_menu(&[30, 0, 70], 100, &mut rng);
        assert_eq!(out.iter().sum::<u64>(), 100);
        assert_eq!(out[1], 0, "members never observed cannot be redrawn");
    }

    #[test]
    fn duplicate_columns_collapse_with_multiplicity() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let mut settings = SearchSettings::new(ModelKind::Rdeu);
        settings.seed = 13;
        let set = compute_order_set(&universe, &settings).unwrap();
        assert_eq!(set.len(), 6);
        // A single menu {0,2} sees only the 0-vs-2 choice, so the 6 orders
        // collapse to 2 rules of multiplicity 3.
        let index = MenuIndex::new(vec![Menu::new(vec![0, 2], 3).unwrap()]).unwrap();
        let b = build_b(&set, &index, 3).unwrap();
        let cone = b.collapse();
        assert_eq!(cone.group_sizes.len(), 2);
        assert_eq!(cone.group_sizes.iter().sum::<usize>(), 6);
        let expanded = cone.expand(&[0.9, 0.1]);
        assert_eq!(expanded.len(), 6);
        assert!((expanded.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
