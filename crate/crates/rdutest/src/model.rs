//! Exact domain types: prize grids, lotteries, menus, linear orders, and
//! per-menu choice tallies.
//!
//! Probabilities are exact rationals throughout. Ties between cumulative
//! probability levels decide which weighting-function variables coincide, so
//! they must compare exactly; floating point enters only inside solvers.

use std::collections::{BTreeMap, HashSet};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact probability scalar. Experiment designs use small round fractions, so
/// i64 components leave enormous headroom.
pub type Rat = Ratio<i64>;

pub fn rat(num: i64, den: i64) -> Rat {
    Ratio::new(num, den)
}

/// Parses an exact rational written as `num/den` or a bare integer.
/// Decimal notation is rejected on purpose: probabilities feed exact tie
/// detection and must not pass through floating point.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::invalid("empty rational"));
    }
    if s.contains('.') {
        return Err(Error::invalid(format!(
            "decimal probability {s:?} not accepted; write an exact fraction like 3/20"
        )));
    }
    let mut parts = s.splitn(2, '/');
    let num_text = parts.next().unwrap().trim();
    let num: i64 = num_text
        .parse()
        .map_err(|_| Error::invalid(format!("bad rational numerator in {s:?}")))?;
    let den: i64 = match parts.next() {
        Some(d) => d
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad rational denominator in {s:?}")))?,
        None => 1,
    };
    if den == 0 {
        return Err(Error::invalid(format!("zero denominator in {s:?}")));
    }
    Ok(Ratio::new(num, den))
}

/// Renders a rational as `num/den`, or a bare integer when the denominator is 1.
pub fn format_rat(r: Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Strictly increasing monetary prizes x_1 < … < x_K. Only the order of
/// prizes matters to the feasibility systems; amounts are kept for reports
/// and for interpolating utility functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrizeGrid {
    prizes: Vec<f64>,
}

impl PrizeGrid {
    pub fn new(prizes: Vec<f64>) -> Result<Self> {
        if prizes.len() < 2 {
            return Err(Error::invalid("prize grid needs at least two prizes"));
        }
        if prizes.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("prizes must be finite"));
        }
        if prizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "prizes must be strictly increasing with no duplicates",
            ));
        }
        Ok(PrizeGrid { prizes })
    }

    pub fn len(&self) -> usize {
        self.prizes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn prizes(&self) -> &[f64] {
        &self.prizes
    }
}

/// A probability vector over the prize grid, exact and summing to one.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lottery {
    probs: Vec<Rat>,
}

impl Lottery {
    pub fn new(probs: Vec<Rat>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("lottery needs at least one entry"));
        }
        if probs.iter().any(|p| p.is_negative() || *p > Rat::one()) {
            return Err(Error::invalid("lottery entries must lie in [0, 1]"));
        }
        let total: Rat = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::invalid(format!(
                "lottery entries must sum to exactly 1, got {}",
                format_rat(total)
            )));
        }
        Ok(Lottery { probs })
    }

    /// Degenerate lottery putting all mass on prize index `j`.
    pub fn degenerate(len: usize, j: usize) -> Result<Self> {
        if j >= len {
            return Err(Error::invalid("degenerate index out of range"));
        }
        let mut probs = vec![Rat::zero(); len];
        probs[j] = Rat::one();
        Lottery::new(probs)
    }

    /// Exact convex mixture `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, alpha: Rat, other: &Lottery) -> Result<Self> {
        if alpha.is_negative() || alpha > Rat::one() {
            return Err(Error::invalid("mixture weight must lie in [0, 1]"));
        }
        if self.len() != other.len() {
            return Err(Error::invalid("mixture of lotteries on different grids"));
        }
        let beta = Rat::one() - alpha;
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| alpha * p + beta * q)
            .collect();
        Lottery::new(probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn probs(&self) -> &[Rat] {
        &self.probs
    }

    /// Exact partial sum ∑_{t ≤ k} p_t, with the empty-sum convention
    /// cumulative(0) = 0 and cumulative(K) = 1.
    ///
    /// Panics if `k` exceeds the number of prizes.
    pub fn cumulative(&self, k: usize) -> Rat {
        assert!(k <= self.probs.len(), "cumulative index {k} out of range");
        self.probs[..k].iter().sum()
    }
}

/// The finite ordered collection Π of distinct lotteries under study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LotteryUniverse {
    prize_grid: PrizeGrid,
    lotteries: Vec<Lottery>,
}

impl LotteryUniverse {
    pub fn new(prize_grid: PrizeGrid, lotteries: Vec<Lottery>) -> Result<Self> {
        if lotteries.len() < 2 {
            return Err(Error::invalid("universe needs at least two lotteries"));
        }
        for l in &lotteries {
            if l.len() != prize_grid.len() {
                return Err(Error::invalid(format!(
                    "lottery has {} entries but the prize grid has {}",
                    l.len(),
                    prize_grid.len()
                )));
            }
        }
        let mut seen = HashSet::new();
        for l in &lotteries {
            if !seen.insert(l.probs.clone()) {
                return Err(Error::invalid("universe lotteries must be distinct"));
            }
        }
        Ok(LotteryUniverse {
            prize_grid,
            lotteries,
        })
    }

    pub fn prize_grid(&self) -> &PrizeGrid {
        &self.prize_grid
    }

    pub fn lotteries(&self) -> &[Lottery] {
        &self.lotteries
    }

    pub fn lottery(&self, i: usize) -> &Lottery {
        &self.lotteries[i]
    }

    /// Number of lotteries |Π|.
    pub fn len(&self) -> usize {
        self.lotteries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of prizes K.
    pub fn prize_count(&self) -> usize {
        self.prize_grid.len()
    }
}

/// A nonempty set of universe indices offered for choice, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Menu {
    members: Vec<usize>,
}

impl Menu {
    pub fn new(mut members: Vec<usize>, universe_len: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("menu must be nonempty"));
        }
        if members.iter().any(|&m| m >= universe_len) {
            return Err(Error::invalid("menu member index out of range"));
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("menu members must be distinct"));
        }
        Ok(Menu { members })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, lottery: usize) -> bool {
        self.members.binary_search(&lottery).is_ok()
    }
}

/// A strict total ranking of the universe; `ranking[0]` is the best lottery.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinearOrder {
    ranking: Vec<usize>,
}

impl LinearOrder {
    pub fn new(ranking: Vec<usize>, universe_len: usize) -> Result<Self> {
        if ranking.len() != universe_len {
            return Err(Error::invalid(format!(
                "order ranks {} lotteries but the universe has {}",
                ranking.len(),
                universe_len
            )));
        }
        let mut seen = vec![false; universe_len];
        for &i in &ranking {
            if i >= universe_len || seen[i] {
                return Err(Error::invalid("order ranking must be a permutation"));
            }
            seen[i] = true;
        }
        Ok(LinearOrder { ranking })
    }

    /// Best-to-worst lottery indices.
    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// Position of a lottery in the ranking; 0 is best.
    pub fn rank_of(&self, lottery: usize) -> usize {
        self.ranking
            .iter()
            .position(|&i| i == lottery)
            .expect("lottery outside the order's universe")
    }

    /// The menu member this order would choose.
    pub fn best_in(&self, menu: &Menu) -> usize {
        *menu
            .members()
            .iter()
            .min_by_key(|&&m| self.rank_of(m))
            .expect("menu is nonempty")
    }

    /// True iff `a` is ranked strictly above `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.rank_of(a) < self.rank_of(b)
    }
}

/// Choice tallies for one menu. Keys are universe indices and must belong to
/// the menu; the menu must have been faced at least once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuBlock {
    menu: Menu,
    counts: BTreeMap<usize, u64>,
}

impl MenuBlock {
    pub fn new(menu: Menu, counts: BTreeMap<usize, u64>) -> Result<Self> {
        if counts.keys().any(|k| !menu.contains(*k)) {
            return Err(Error::invalid(
                "count recorded for a lottery outside its menu",
            ));
        }
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(Error::invalid("menu block needs at least one observation"));
        }
        Ok(MenuBlock { menu, counts })
    }

    pub fn menu(&self) -> &Menu {
        &self.menu
    }

    /// Observations n_A for this menu.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, lottery: usize) -> u64 {
        self.counts.get(&lottery).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }
}

/// Per-menu choice tallies across a menu collection; the empirical stochastic
/// choice rule ρ̂ and its bootstrap resamples both derive from this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticChoiceData {
    blocks: Vec<MenuBlock>,
}

impl StochasticChoiceData {
    pub fn new(blocks: Vec<MenuBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("choice data needs at least one menu"));
        }
        let mut seen = HashSet::new();
        for b in &blocks {
            if !seen.insert(b.menu.clone()) {
                return Err(Error::invalid("duplicate menu in choice data"));
            }
        }
        Ok(StochasticChoiceData { blocks })
    }

    pub fn blocks(&self) -> &[MenuBlock] {
        &self.blocks
    }

    /// Total observations n = ∑_A n_A.
    pub fn total(&self) -> u64 {
        self.blocks.iter().map(MenuBlock::total).sum()
    }

    /// Smallest per-menu sample size min_A n_A.
    pub fn min_menu_total(&self) -> u64 {
        self.blocks
            .iter()
            .map(MenuBlock::total)
            .min()
            .expect("data is nonempty")
    }
}

/// A universe plus named menus. Ids keep CSV files and reports readable; the
/// feasibility and testing layers never look at them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub universe: LotteryUniverse,
    pub menus: Vec<Menu>,
    pub lottery_ids: Vec<String>,
    pub menu_ids: Vec<String>,
}

impl Catalog {
    pub fn new(
        universe: LotteryUniverse,
        menus: Vec<Menu>,
        lottery_ids: Vec<String>,
        menu_ids: Vec<String>,
    ) -> Result<Self> {
        if lottery_ids.len() != universe.len() {
            return Err(Error::invalid("one id per lottery required"));
        }
        if menu_ids.len() != menus.len() {
            return Err(Error::invalid("one id per menu required"));
        }
        if menus.is_empty() {
            return Err(Error::invalid("catalog needs at least one menu"));
        }
        for id in lottery_ids.iter().chain(menu_ids.iter()) {
            validate_id(id)?;
        }
        let distinct: HashSet<&String> = lottery_ids.iter().collect();
        if distinct.len() != lottery_ids.len() {
            return Err(Error::invalid("lottery ids must be distinct"));
        }
        let distinct: HashSet<&String> = menu_ids.iter().collect();
        if distinct.len() != menu_ids.len() {
            return Err(Error::invalid("menu ids must be distinct"));
        }
        Ok(Catalog {
            universe,
            menus,
            lottery_ids,
            menu_ids,
        })
    }

    pub fn lottery_index(&self, id: &str) -> Option<usize> {
        self.lottery_ids.iter().position(|s| s == id)
    }

    pub fn menu_index(&self, id: &str) -> Option<usize> {
        self.menu_ids.iter().position(|s| s == id)
    }
}

/// Identifier grammar shared by config and CSV files: `[A-Za-z0-9_-]+`.
pub fn validate_id(id: &str) -> Result<()> {
    if id.is_empty()
        || !id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(Error::invalid(format!(
            "identifier {id:?} must match [A-Za-z0-9_-]+"
        )));
    }
    Ok(())
}

/// Rank-dependent value ∑_k [φ(P_k) − φ(P_{k−1})] v_k where P_k are the exact
/// cumulative sums of `p`. The weighting function is sampled at exact
/// rationals; with φ the identity this is the expected utility ∑_k p_k v_k.
pub fn rdeu_value(p: &Lottery, v: &[f64], mut phi: impl FnMut(Rat) -> f64) -> f64 {
    assert_eq!(p.len(), v.len(), "utility vector length mismatch");
    let mut total = 0.0;
    let mut cum = Rat::zero();
    let mut prev = phi(cum);
    for (pk, vk) in p.probs().iter().zip(v) {
        cum += pk;
        let next = phi(cum);
        total += (next - prev) * vk;
        prev = next;
    }
    total
}

/// Expected value of `p` under utilities `v`; the identity-weighting special case.
pub fn eu_value(p: &Lottery, v: &[f64]) -> f64 {
    assert_eq!(p.len(), v.len(), "utility vector length mismatch");
    p.probs()
        .iter()
        .zip(v)
        .map(|(pk, vk)| rat_to_f64(*pk) * vk)
        .sum()
}

/// Strict first-order stochastic dominance: every cumulative sum of `p` is ≤
/// the matching sum of `q`, with at least one strict. Exact comparison.
pub fn fosd_dominates(p: &Lottery, q: &Lottery) -> bool {
    assert_eq!(p.len(), q.len(), "lotteries on different grids");
    let mut strict = false;
    let mut cp = Rat::zero();
    let mut cq = Rat::zero();
    for (a, b) in p.probs().iter().zip(q.probs()) {
        cp += a;
        cq += b;
        if cp > cq {
            return false;
        }
        if cp < cq {
            strict = true;
        }
    }
    strict
}
