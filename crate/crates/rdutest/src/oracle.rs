//! Order-feasibility oracles.
//!
//! An order on the universe is consistent with expected utility iff some
//! v ∈ [−1,1]^K gives every consecutive comparison positive slack: a single
//! LP decides that. Rank-dependent consistency additionally needs a weighting
//! function φ with φ(0)=0, φ(1)=1 applied to cumulative probabilities; the
//! φ·v products make the system bilinear, searched here by alternating LPs
//! with seeded restarts. φ is represented by its values on the finite grid of
//! cumulative levels the universe can realize; levels compare as exact
//! rationals, so coinciding levels share one variable by construction.

use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{MarginLp, DELTA_BOUND};
use crate::model::{rat_to_f64, LinearOrder, Lottery, LotteryUniverse, Rat};

/// Default slack standing in for strict inequalities. A strictly feasible
/// system admits a scaled witness with at least this margin; the cost is a
/// conservative boundary of this width.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Default restart budget for the bilinear search.
pub const DEFAULT_RESTARTS: u32 = 20;

/// Alternation rounds per restart; a restart also ends when the slack stops
/// improving by more than `IMPROVEMENT_TOL`.
const MAX_ROUNDS: u32 = 50;
const IMPROVEMENT_TOL: f64 = 1e-9;

/// Optional restrictions on the weighting function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ShapeFlags {
    pub monotone: bool,
    pub convex: bool,
}

impl ShapeFlags {
    pub const NONE: ShapeFlags = ShapeFlags {
        monotone: false,
        convex: false,
    };
    pub const MONOTONE: ShapeFlags = ShapeFlags {
        monotone: true,
        convex: false,
    };

    pub fn label(&self) -> &'static str {
        match (self.monotone, self.convex) {
            (false, false) => "none",
            (true, false) => "monotone",
            (false, true) => "convex",
            (true, true) => "monotone+convex",
        }
    }
}

/// The sorted distinct cumulative probability levels of a universe, with a
/// total (lottery, position) → level-index map. Two positions share an index
/// iff their cumulative sums are equal as rationals; indices 0 and last are
/// always the levels 0 and 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeGrid {
    levels: Vec<Rat>,
    index: Vec<Vec<usize>>,
}

impl CumulativeGrid {
    fn from_lotteries(lotteries: &[Lottery]) -> CumulativeGrid {
        let mut levels: Vec<Rat> = vec![Rat::zero(), Rat::one()];
        for l in lotteries {
            for k in 1..l.len() {
                levels.push(l.cumulative(k));
            }
        }
        levels.sort_unstable();
        levels.dedup();
        let index = lotteries
            .iter()
            .map(|l| {
                (0..=l.len())
                    .map(|k| {
                        levels
                            .binary_search(&l.cumulative(k))
                            .expect("every cumulative value is a grid level")
                    })
                    .collect()
            })
            .collect();
        CumulativeGrid { levels, index }
    }

    pub fn levels(&self) -> &[Rat] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Level index of cumulative(lottery, k); k runs over 0..=K.
    pub fn index_of(&self, lottery: usize, k: usize) -> usize {
        self.index[lottery][k]
    }
}

/// Distinct cumulative levels of every lottery in the universe.
pub fn build_cumulative_grid(universe: &LotteryUniverse) -> CumulativeGrid {
    CumulativeGrid::from_lotteries(universe.lotteries())
}

/// A weighting function recorded by its values on a level grid, with
/// φ(0) = 0 and φ(1) = 1 pinned. Evaluation interpolates linearly between
/// knots, matching the piecewise-linear extension used for witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingGrid {
    levels: Vec<Rat>,
    values: Vec<f64>,
}

impl WeightingGrid {
    pub fn new(levels: Vec<Rat>, values: Vec<f64>) -> Result<Self> {
        if levels.len() != values.len() {
            return Err(Error::invalid("one value per level required"));
        }
        if levels.len() < 2
            || levels.windows(2).any(|w| w[0] >= w[1])
            || !levels[0].is_zero()
            || !levels[levels.len() - 1].is_one()
        {
            return Err(Error::invalid("levels must increase strictly from 0 to 1"));
        }
        let mut values = values;
        for v in values.iter_mut() {
            if !v.is_finite() || *v < -1e-9 || *v > 1.0 + 1e-9 {
                return Err(Error::invalid("weighting values must lie in [0, 1]"));
            }
            *v = v.clamp(0.0, 1.0);
        }
        if values[0].abs() > 1e-9 || (values[values.len() - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("weighting must map 0 to 0 and 1 to 1"));
        }
        values[0] = 0.0;
        let last = values.len() - 1;
        values[last] = 1.0;
        Ok(WeightingGrid { levels, values })
    }

    pub fn identity(levels: Vec<Rat>) -> Result<Self> {
        let values = levels.iter().map(|&q| rat_to_f64(q)).collect();
        WeightingGrid::new(levels, values)
    }

    pub fn levels(&self) -> &[Rat] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// φ(q) for q ∈ [0,1]: exact at knots, linear between them.
    pub fn at(&self, q: Rat) -> f64 {
        match self.levels.binary_search(&q) {
            Ok(j) => self.values[j],
            Err(j) => {
                assert!(
                    j > 0 && j < self.levels.len(),
                    "weighting queried outside [0, 1]"
                );
                let (lo, hi) = (self.levels[j - 1], self.levels[j]);
                let t = rat_to_f64((q - lo) / (hi - lo));
                self.values[j - 1] + t * (self.values[j] - self.values[j - 1])
            }
        }
    }

    /// Whether the grid values satisfy the shape restrictions up to `tol`.
    pub fn satisfies(&self, shape: ShapeFlags, tol: f64) -> bool {
        let ok_monotone = !shape.monotone || self.values.windows(2).all(|w| w[1] >= w[0] - tol);
        let levels_f64: Vec<f64> = self.levels.iter().map(|&q| rat_to_f64(q)).collect();
        let ok_convex = !shape.convex || convex_on_levels_tol(&levels_f64, &self.values, tol);
        ok_monotone && ok_convex
    }
}

/// Outcome of a feasibility search. The EU oracle decides exactly, so it
/// returns Feasible or Infeasible; the bilinear search cannot certify
/// absence, so its failures are Undetermined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Feasible,
    Infeasible,
    Undetermined,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    /// Restarts consumed (EU: always 1).
    pub restarts: u32,
    /// Total LP solves across restarts.
    pub lp_solves: u32,
}

/// A certificate (or best attempt) for one order: utilities v on the prize
/// grid, weighting values φ on the level grid, and the minimum slack they
/// achieve across the order's consecutive comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityWitness {
    pub decision: Decision,
    pub v: Option<Vec<f64>>,
    pub phi: Option<WeightingGrid>,
    pub margin: f64,
    pub diagnostics: SearchDiagnostics,
}

impl FeasibilityWitness {
    pub fn feasible(&self) -> bool {
        self.decision == Decision::Feasible
    }
}

/// Comparison row patterns for one order: for row l and prize k, the level
/// indices of C_l(k), C_l(k−1), C_{l+1}(k), C_{l+1}(k−1). The slack of row l
/// under (v, φ) is Σ_k (φ[a] − φ[b] − φ[c] + φ[d]) v_k.
struct RowPatterns {
    rows: Vec<Vec<[usize; 4]>>,
    level_count: usize,
    prize_count: usize,
}

impl RowPatterns {
    fn new(order: &LinearOrder, universe: &LotteryUniverse, grid: &CumulativeGrid) -> Self {
        let k_count = universe.prize_count();
        let ranking = order.ranking();
        let rows = ranking
            .windows(2)
            .map(|pair| {
                (1..=k_count)
                    .map(|k| {
                        [
                            grid.index_of(pair[0], k),
                            grid.index_of(pair[0], k - 1),
                            grid.index_of(pair[1], k),
                            grid.index_of(pair[1], k - 1),
                        ]
                    })
                    .collect()
            })
            .collect();
        RowPatterns {
            rows,
            level_count: grid.len(),
            prize_count: k_count,
        }
    }

    /// LP over v given φ values; returns (slack, v).
    fn solve_v(&self, phi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut lp = MarginLp::new(&vec![(-1.0, 1.0); self.prize_count]);
        for row in &self.rows {
            let coeffs: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .map(|(k, &[a, b, c, d])| (k, phi[a] - phi[b] - phi[c] + phi[d]))
                .collect();
            lp.margin_row(&coeffs, 0.0);
        }
        lp.solve()
    }

    /// LP over interior φ values given v; returns (slack, full φ vector
    /// including the pinned endpoints).
    fn solve_phi(&self, v: &[f64], shape: ShapeFlags, widths: &[f64]) -> Result<(f64, Vec<f64>)> {
        let nlevels = self.level_count;
        let interior = nlevels - 2;
        let mut lp = MarginLp::new(&vec![(0.0, 1.0); interior]);

        // Level j = 0 is the constant 0, level j = nlevels−1 the constant 1;
        // interior level j is variable j−1. Constants fold into the rhs.
        let fold = |dense: &[f64]| -> (Vec<(usize, f64)>, f64) {
            let mut coeffs = Vec::new();
            for (j, &c) in dense.iter().enumerate().skip(1) {
                if j == nlevels - 1 {
                    continue;
                }
                if c != 0.0 {
                    coeffs.push((j - 1, c));
                }
            }
            (coeffs, -dense[nlevels - 1])
        };

        for row in &self.rows {
            let mut dense = vec![0.0; nlevels];
            for (k, &[a, b, c, d]) in row.iter().enumerate() {
                dense[a] += v[k];
                dense[b] -= v[k];
                dense[c] -= v[k];
                dense[d] += v[k];
            }
            let (coeffs, shift) = fold(&dense);
            lp.margin_row(&coeffs, shift);
        }

        if shape.monotone {
            for j in 0..nlevels - 1 {
                let mut dense = vec![0.0; nlevels];
                dense[j + 1] += 1.0;
                dense[j] -= 1.0;
                let (coeffs, shift) = fold(&dense);
                lp.plain_row(&coeffs, shift);
            }
        }
        if shape.convex {
            for j in 0..nlevels - 2 {
                // (φ_{j+2} − φ_{j+1})·w_j − (φ_{j+1} − φ_j)·w_{j+1} ≥ 0
                let mut dense = vec![0.0; nlevels];
                dense[j + 2] += widths[j];
                dense[j + 1] -= widths[j] + widths[j + 1];
                dense[j] += widths[j + 1];
                let (coeffs, shift) = fold(&dense);
                lp.plain_row(&coeffs, shift);
            }
        }

        let (delta, interior_vals) = lp.solve()?;
        let mut full = Vec::with_capacity(nlevels);
        full.push(0.0);
        full.extend(interior_vals);
        full.push(1.0);
        Ok((delta, full))
    }
}

/// Decides EU-rationalizability of `order` by one LP: feasible iff some
/// v ∈ [−1,1]^K attains slack ≥ eps on every consecutive comparison.
pub fn eu_feasible(
    order: &LinearOrder,
    universe: &LotteryUniverse,
    eps: f64,
) -> Result<FeasibilityWitness> {
    check_inputs(order, universe, eps)?;
    let grid = build_cumulative_grid(universe);
    if order.len() <= 1 {
        return Ok(vacuous_witness(&grid, universe));
    }

    let mut lp = MarginLp::new(&vec![(-1.0, 1.0); universe.prize_count()]);
    for pair in order.ranking().windows(2) {
        let hi = universe.lottery(pair[0]).probs();
        let lo = universe.lottery(pair[1]).probs();
        let coeffs: Vec<(usize, f64)> = hi
            .iter()
            .zip(lo)
            .enumerate()
            .map(|(k, (p, q))| (k, rat_to_f64(p - q)))
            .collect();
        lp.margin_row(&coeffs, 0.0);
    }
    let (delta, v) = lp.solve()?;
    let diagnostics = SearchDiagnostics {
        restarts: 1,
        lp_solves: 1,
    };
    if delta >= eps {
        Ok(FeasibilityWitness {
            decision: Decision::Feasible,
            v: Some(v),
            phi: Some(WeightingGrid::identity(grid.levels().to_vec())?),
            margin: delta,
            diagnostics,
        })
    } else {
        Ok(FeasibilityWitness {
            decision: Decision::Infeasible,
            v: None,
            phi: None,
            margin: delta,
            diagnostics,
        })
    }
}

/// Searches for an RDEU certificate of `order` under the shape restrictions
/// by alternating LPs. Restart 0 starts from the identity weighting, so every
/// EU-feasible order is accepted immediately; later restarts draw random
/// shape-respecting weighting grids. Failure to find a certificate is
/// reported as Undetermined (the search is sound, not complete), carrying the
/// best margin attained.
pub fn rdeu_feasible(
    order: &LinearOrder,
    universe: &LotteryUniverse,
    shape: ShapeFlags,
    eps: f64,
    restarts: u32,
    seed: u64,
) -> Result<FeasibilityWitness> {
    check_inputs(order, universe, eps)?;
    if restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let grid = build_cumulative_grid(universe);
    if order.len() <= 1 {
        return Ok(vacuous_witness(&grid, universe));
    }

    let patterns = RowPatterns::new(order, universe, &grid);
    let widths: Vec<f64> = grid
        .levels()
        .windows(2)
        .map(|w| rat_to_f64(w[1] - w[0]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp_solves = 0u32;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;

    for restart in 0..restarts {
        let mut phi: Vec<f64> = if restart == 0 {
            grid.levels().iter().map(|&q| rat_to_f64(q)).collect()
        } else {
            random_weighting(&mut rng, grid.len(), &widths, shape)
        };
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..MAX_ROUNDS {
            let (slack_v, mut v) = patterns.solve_v(&phi)?;
            lp_solves += 1;
            track(&mut best, slack_v, &v, &phi);
            if slack_v >= eps {
                return finish(
                    Decision::Feasible,
                    slack_v,
                    v,
                    phi,
                    &grid,
                    restart + 1,
                    lp_solves,
                );
            }
            // Coordinate ascent can park on a flat ridge: the v-LP returns a
            // degenerate optimum (often with the decisive utility differences
            // zeroed out) and the following φ-LP then sees a vanishing
            // objective. When the v step fails to improve on the last φ step,
            // kick v to a random direction; the φ-LP given a generic v
            // explores the weighting space far better than a dead ascent.
            let plateaued = slack_v <= prev + IMPROVEMENT_TOL;
            if plateaued || v.iter().all(|x| x.abs() < 1e-12) {
                for x in v.iter_mut() {
                    *x = rng.gen_range(-1.0..=1.0);
                }
            }
            let (slack_phi, new_phi) = patterns.solve_phi(&v, shape, &widths)?;
            lp_solves += 1;
            track(&mut best, slack_phi, &v, &new_phi);
            if slack_phi >= eps {
                return finish(
                    Decision::Feasible,
                    slack_phi,
                    v,
                    new_phi,
                    &grid,
                    restart + 1,
                    lp_solves,
                );
            }
            phi = new_phi;
            if slack_phi - prev < IMPROVEMENT_TOL {
                break;
            }
            prev = slack_phi;
        }
    }

    let (margin, v, phi) = best.expect("at least one round ran");
    finish(
        Decision::Undetermined,
        margin,
        v,
        phi,
        &grid,
        restarts,
        lp_solves,
    )
}

fn track(best: &mut Option<(f64, Vec<f64>, Vec<f64>)>, margin: f64, v: &[f64], phi: &[f64]) {
    if best.as_ref().is_none_or(|(m, _, _)| margin > *m) {
        *best = Some((margin, v.to_vec(), phi.to_vec()));
    }
}

fn finish(
    decision: Decision,
    margin: f64,
    v: Vec<f64>,
    phi_values: Vec<f64>,
    grid: &CumulativeGrid,
    restarts: u32,
    lp_solves: u32,
) -> Result<FeasibilityWitness> {
    let phi = WeightingGrid::new(grid.levels().to_vec(), phi_values)?;
    Ok(FeasibilityWitness {
        decision,
        v: Some(v),
        phi: Some(phi),
        margin,
        diagnostics: SearchDiagnostics {
            restarts,
            lp_solves,
        },
    })
}

fn check_inputs(order: &LinearOrder, universe: &LotteryUniverse, eps: f64) -> Result<()> {
    if order.len() != universe.len() {
        return Err(Error::invalid("order does not match the universe"));
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::invalid("eps must be a positive real"));
    }
    Ok(())
}

/// No comparisons: any valuation works.
fn vacuous_witness(grid: &CumulativeGrid, universe: &LotteryUniverse) -> FeasibilityWitness {
    FeasibilityWitness {
        decision: Decision::Feasible,
        v: Some(vec![0.0; universe.prize_count()]),
        phi: WeightingGrid::identity(grid.levels().to_vec()).ok(),
        margin: DELTA_BOUND,
        diagnostics: SearchDiagnostics {
            restarts: 0,
            lp_solves: 0,
        },
    }
}

/// Random weighting start respecting the shape flags: sorted uniforms for the
/// values (monotone by construction), or sorted uniform slopes when convexity
/// is requested (nondecreasing difference quotients by construction).
fn random_weighting(
    rng: &mut ChaCha8Rng,
    nlevels: usize,
    widths: &[f64],
    shape: ShapeFlags,
) -> Vec<f64> {
    if shape.convex {
        let mut slopes: Vec<f64> = (0..nlevels - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        slopes.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut values = Vec::with_capacity(nlevels);
        let mut acc = 0.0;
        values.push(0.0);
        for (s, w) in slopes.iter().zip(widths) {
            acc += s * w;
            values.push(acc);
        }
        let total = *values.last().unwrap();
        if total > 0.0 {
            for v in values.iter_mut() {
                *v /= total;
            }
        } else {
            return (0..nlevels)
                .map(|j| j as f64 / (nlevels - 1) as f64)
                .collect();
        }
        let last = values.len() - 1;
        values[last] = 1.0;
        values
    } else {
        let mut interior: Vec<f64> = (0..nlevels - 2).map(|_| rng.gen_range(0.0..1.0)).collect();
        interior.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut values = Vec::with_capacity(nlevels);
        values.push(0.0);
        values.extend(interior);
        values.push(1.0);
        values
    }
}

/// A piecewise-linear function through strictly increasing knots; constant
/// beyond the first and last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::invalid("need matching knot lists of length ≥ 2"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("knot positions must increase strictly"));
        }
        if xs.iter().chain(ys.iter()).any(|t| !t.is_finite()) {
            return Err(Error::invalid("knots must be finite"));
        }
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let j = self.xs.partition_point(|&k| k <= x);
        if self.xs[j - 1] == x {
            return self.ys[j - 1];
        }
        let t = (x - self.xs[j - 1]) / (self.xs[j] - self.xs[j - 1]);
        self.ys[j - 1] + t * (self.ys[j] - self.ys[j - 1])
    }
}

/// Turns a feasible witness into the functions it certifies: u interpolating
/// (prize, v) and φ interpolating the weighting grid.
pub fn extend_to_functions(
    witness: &FeasibilityWitness,
    universe: &LotteryUniverse,
) -> Result<(PiecewiseLinear, PiecewiseLinear)> {
    if !witness.feasible() {
        return Err(Error::invalid("cannot extend an infeasible witness"));
    }
    let v = witness
        .v
        .as_ref()
        .ok_or_else(|| Error::invalid("feasible witness lacks utilities"))?;
    let phi = witness
        .phi
        .as_ref()
        .ok_or_else(|| Error::invalid("feasible witness lacks a weighting grid"))?;
    let u = PiecewiseLinear::new(universe.prize_grid().prizes().to_vec(), v.clone())?;
    let phi_fn = PiecewiseLinear::new(
        phi.levels().iter().map(|&q| rat_to_f64(q)).collect(),
        phi.values().to_vec(),
    )?;
    Ok((u, phi_fn))
}

/// True iff the rank-dependent values under (u, φ) strictly decrease along
/// the order's ranking.
pub fn verify_order(
    u: &PiecewiseLinear,
    phi: &PiecewiseLinear,
    order: &LinearOrder,
    universe: &LotteryUniverse,
) -> bool {
    let v: Vec<f64> = universe
        .prize_grid()
        .prizes()
        .iter()
        .map(|&x| u.eval(x))
        .collect();
    let value = |i: usize| {
        crate::model::rdeu_value(universe.lottery(i), &v, |q: Rat| phi.eval(rat_to_f64(q)))
    };
    order
        .ranking()
        .windows(2)
        .all(|pair| value(pair[0]) > value(pair[1]))
}

fn convex_on_levels_tol(levels: &[f64], values: &[f64], tol: f64) -> bool {
    (0..levels.len().saturating_sub(2)).all(|j| {
        let w0 = levels[j + 1] - levels[j];
        let w1 = levels[j + 2] - levels[j + 1];
        (values[j + 2] - values[j + 1]) * w0 - (values[j + 1] - values[j]) * w1 >= -tol
    })
}

/// Production convexity check: consecutive difference quotients nondecreasing
/// (cross-multiplied, no division).
pub fn convex_on_levels(levels: &[f64], values: &[f64]) -> bool {
    convex_on_levels_tol(levels, values, 0.0)
}

/// Brute-force convexity oracle: every chord comparison over index patterns
/// a < b ≤ c < d must satisfy slope([a,b]) ≤ slope([c,d]); these are the
/// cycle conditions of length 3 (b = c) and 4. Length-2 patterns are omitted
/// deliberately: they assert monotonicity, not convexity.
pub fn convex_by_short_cycles(levels: &[f64], values: &[f64]) -> bool {
    let n = levels.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b..n {
                for d in c + 1..n {
                    if (values[b] - values[a]) * (levels[d] - levels[c])
                        > (values[d] - values[c]) * (levels[b] - levels[a])
                    {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::model::{rat, LinearOrder, Lottery, LotteryUniverse, PrizeGrid};
    use num_traits::Zero;

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

    fn all_orders(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..rest.len() {
                let x = rest.remove(i);
                prefix.push(x);
                rec(prefix, rest, out);
                prefix.pop();
                rest.insert(i, x);
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
        out
    }

    #[test]
    fn grid_of_singleton_is_zero_one() {
        let deg = Lottery::degenerate(3, 0).unwrap();
        let grid = CumulativeGrid::from_lotteries(&[deg]);
        assert_eq!(grid.levels(), &[Rat::zero(), rat(1, 1)]);
        assert_eq!(grid.index_of(0, 0), 0);
        assert_eq!(grid.index_of(0, 1), 1);
        assert_eq!(grid.index_of(0, 3), 1);
    }

    #[test]
    fn grid_merges_equal_levels_exactly() {
        let l1 = Lottery::new(vec![rat(1, 2), Rat::zero(), rat(1, 2)]).unwrap();
        let l2 = Lottery::new(vec![Rat::zero(), rat(1, 2), rat(1, 2)]).unwrap();
        let grid = CumulativeGrid::from_lotteries(&[l1, l2]);
        assert_eq!(grid.levels(), &[Rat::zero(), rat(1, 2), rat(1, 1)]);
        assert_eq!(grid.index_of(0, 1), grid.index_of(1, 2));
    }

    #[test]
    fn tokens_grid_levels() {
        let cat = builtin::tokens();
        let grid = build_cumulative_grid(&cat.universe);
        let expected: Vec<Rat> = [
            (0, 1),
            (3, 20),
            (1, 4),
            (2, 5),
            (1, 2),
            (11, 20),
            (3, 4),
            (4, 5),
            (1, 1),
        ]
        .iter()
        .map(|&(n, d)| rat(n, d))
        .collect();
        assert_eq!(grid.levels(), expected.as_slice());
    }

    #[test]
    fn eu_accepts_fosd_consistent_pair_order() {
        let grid = PrizeGrid::new(vec![0.0, 1.0]).unwrap();
        let top = Lottery::degenerate(2, 1).unwrap();
        let bottom = Lottery::degenerate(2, 0).unwrap();
        let universe = LotteryUniverse::new(grid, vec![top, bottom]).unwrap();
        let order = LinearOrder::new(vec![0, 1], 2).unwrap();
        let w = eu_feasible(&order, &universe, 0.1).unwrap();
        assert!(w.feasible());
        assert!(w.margin >= 0.1);
        let v = w.v.unwrap();
        assert!(v[1] > v[0]);
    }

    #[test]
    fn eu_rejects_mixture_violations() {
        // l3 = ½l1 + ½l2 pins its expected value strictly between the two,
        // so l1 ≻ l2 ≻ l3 has no EU representation.
        let cat = builtin::tokens();
        let order = LinearOrder::new(vec![0, 1, 2, 3, 4, 5], 6).unwrap();
        let w = eu_feasible(&order, &cat.universe, DEFAULT_EPS).unwrap();
        assert_eq!(w.decision, Decision::Infeasible);
        assert!(w.margin < DEFAULT_EPS);
        assert!(w.v.is_none());
    }

    #[test]
    fn eu_accepts_expectation_order_on_tokens() {
        let cat = builtin::tokens();
        let order = LinearOrder::new(vec![0, 3, 2, 4, 1, 5], 6).unwrap();
        let w = eu_feasible(&order, &cat.universe, DEFAULT_EPS).unwrap();
        assert!(w.feasible());
        let (u, phi) = extend_to_functions(&w, &cat.universe).unwrap();
        assert!(verify_order(&u, &phi, &order, &cat.universe));
    }

    #[test]
    fn rdeu_unrestricted_accepts_every_order_on_distinct_two_prize_universe() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        for ranking in all_orders(3) {
            let order = LinearOrder::new(ranking.clone(), 3).unwrap();
            let w = rdeu_feasible(&order, &universe, ShapeFlags::NONE, DEFAULT_EPS, 20, 7).unwrap();
            assert!(
                w.feasible(),
                "order {ranking:?} not accepted, margin {}",
                w.margin
            );
            let (u, phi) = extend_to_functions(&w, &universe).unwrap();
            assert!(verify_order(&u, &phi, &order, &universe));
        }
    }

    #[test]
    fn rdeu_monotone_accepts_exactly_the_two_monotone_orders() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let mut accepted = Vec::new();
        for ranking in all_orders(3) {
            let order = LinearOrder::new(ranking.clone(), 3).unwrap();
            let w =
                rdeu_feasible(&order, &universe, ShapeFlags::MONOTONE, DEFAULT_EPS, 20, 7).unwrap();
            if w.feasible() {
                let phi = w.phi.as_ref().unwrap();
                assert!(phi.satisfies(ShapeFlags::MONOTONE, 1e-9));
                accepted.push(ranking);
            }
        }
        assert_eq!(accepted, vec![vec![0, 1, 2], vec![2, 1, 0]]);
    }

    #[test]
    fn eu_feasible_implies_rdeu_feasible_immediately() {
        let cat = builtin::tokens();
        let order = LinearOrder::new(vec![0, 3, 2, 4, 1, 5], 6).unwrap();
        let w = rdeu_feasible(&order, &cat.universe, ShapeFlags::NONE, DEFAULT_EPS, 20, 7).unwrap();
        assert!(w.feasible());
        assert_eq!(
            w.diagnostics.lp_solves, 1,
            "identity start must accept EU orders"
        );
    }

    #[test]
    fn weighting_grid_interpolates_and_validates() {
        let levels = vec![Rat::zero(), rat(1, 2), rat(1, 1)];
        let grid = WeightingGrid::new(levels.clone(), vec![0.0, 0.25, 1.0]).unwrap();
        assert_eq!(grid.at(rat(1, 2)), 0.25);
        assert!((grid.at(rat(3, 4)) - 0.625).abs() < 1e-12);
        assert!(WeightingGrid::new(levels.clone(), vec![0.1, 0.25, 1.0]).is_err());
        assert!(WeightingGrid::new(levels, vec![0.0, 1.5, 1.0]).is_err());
    }

    #[test]
    fn verify_rejects_fosd_reversal_under_monotone_functions() {
        let grid = PrizeGrid::new(vec![0.0, 1.0]).unwrap();
        let top = Lottery::degenerate(2, 1).unwrap();
        let bottom = Lottery::degenerate(2, 0).unwrap();
        let universe = LotteryUniverse::new(grid, vec![top, bottom]).unwrap();
        let u = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let phi = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let bad = LinearOrder::new(vec![1, 0], 2).unwrap();
        assert!(!verify_order(&u, &phi, &bad, &universe));
    }

    #[test]
    fn convexity_checkers_agree_on_simple_cases() {
        let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
        let convex = [0.0, 0.1, 0.3, 0.6, 1.0];
        let concave = [0.0, 0.4, 0.7, 0.9, 1.0];
        let wiggly = [0.0, 0.5, 0.3, 0.8, 1.0];
        assert!(convex_on_levels(&levels, &convex));
        assert!(convex_by_short_cycles(&levels, &convex));
        assert!(!convex_on_levels(&levels, &concave));
        assert!(!convex_by_short_cycles(&levels, &concave));
        assert!(!convex_on_levels(&levels, &wiggly));
        assert!(!convex_by_short_cycles(&levels, &wiggly));
    }

    #[test]
    fn rdeu_convex_witness_satisfies_shape() {
        let universe = two_prize_universe(&[(1, 5), (2, 5), (3, 5)]);
        let shape = ShapeFlags {
            monotone: true,
            convex: true,
        };
        let order = LinearOrder::new(vec![2, 1, 0], 3).unwrap();
        let w = rdeu_feasible(&order, &universe, shape, DEFAULT_EPS, 20, 11).unwrap();
        assert!(w.feasible());
        assert!(w.phi.unwrap().satisfies(shape, 1e-9));
    }

    #[test]
    fn piecewise_linear_eval() {
        let f = PiecewiseLinear::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(f.eval(-1.0), 1.0);
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(1.0), 2.0);
        assert!((f.eval(2.0) - 1.0).abs() < 1e-12);
        assert_eq!(f.eval(5.0), 0.0);
        assert!(PiecewiseLinear::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
