//! Enumeration of linear orders and oracle filtering into order sets.
//!
//! The universe's n! candidate orders stream in lexicographic sequence; each
//! is judged by the EU or RDEU oracle, in parallel, with a per-order random
//! stream derived from the master seed so the result never depends on thread
//! scheduling. Accepted orders and their witnesses form an [`OrderSet`],
//! which can be cached on disk keyed by a content fingerprint.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{format_rat, parse_rat, LinearOrder, LotteryUniverse, Rat};
use crate::oracle::{
    build_cumulative_grid, eu_feasible, rdeu_feasible, FeasibilityWitness, ShapeFlags,
    WeightingGrid, DEFAULT_EPS, DEFAULT_RESTARTS,
};
use crate::rng::{stream_rng, STREAM_ORDER_SEARCH};

/// Guard against factorial blowup in exhaustive enumeration.
pub const MAX_ENUMERABLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Eu,
    Rdeu,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Eu => "eu",
            ModelKind::Rdeu => "rdeu",
        }
    }
}

/// Everything the order search depends on besides the universe itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub model: ModelKind,
    pub shape: ShapeFlags,
    pub eps: f64,
    pub restarts: u32,
    pub seed: u64,
}

impl SearchSettings {
    pub fn new(model: ModelKind) -> Self {
        SearchSettings {
            model,
            shape: ShapeFlags::NONE,
            eps: DEFAULT_EPS,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// All n! orders in lexicographic sequence.
pub fn enumerate_orders(n: usize) -> Result<LexOrders> {
    if n == 0 || n > MAX_ENUMERABLE {
        return Err(Error::invalid(format!(
            "can enumerate orders for 1..={MAX_ENUMERABLE} lotteries, got {n}"
        )));
    }
    Ok(LexOrders {
        next: Some((0..n).collect()),
    })
}

pub struct LexOrders {
    next: Option<Vec<usize>>,
}

impl Iterator for LexOrders {
    type Item = LinearOrder;

    fn next(&mut self) -> Option<LinearOrder> {
        let current = self.next.take()?;
        self.next = next_permutation(&current);
        let n = current.len();
        Some(LinearOrder::new(current, n).expect("permutation by construction"))
    }
}

fn next_permutation(perm: &[usize]) -> Option<Vec<usize>> {
    let mut p = perm.to_vec();
    let n = p.len();
    let pivot = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1])?;
    let swap = (pivot + 1..n).rev().find(|&j| p[j] > p[pivot]).unwrap();
    p.swap(pivot, swap);
    p[pivot + 1..].reverse();
    Some(p)
}

pub fn factorial(n: usize) -> usize {
    (2..=n).product()
}

/// Permutation at lexicographic rank `rank` (factorial number system).
fn unrank(mut rank: usize, n: usize) -> Vec<usize> {
    let mut available: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    let mut block = factorial(n);
    for i in 0..n {
        block /= n - i;
        out.push(available.remove(rank / block));
        rank %= block;
    }
    out
}

/// Witness data kept per accepted order; the weighting levels live once on
/// the [`OrderSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub margin: f64,
    pub v: Vec<f64>,
    pub phi_values: Vec<f64>,
}

/// The rationalizable orders of a universe under one model configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSet {
    pub fingerprint: String,
    pub settings: SearchSettings,
    pub levels: Vec<Rat>,
    pub orders: Vec<LinearOrder>,
    pub witnesses: Vec<WitnessSummary>,
}

impl OrderSet {
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// The recorded weighting grid of the i-th accepted order.
    pub fn witness_grid(&self, i: usize) -> Result<WeightingGrid> {
        WeightingGrid::new(self.levels.clone(), self.witnesses[i].phi_values.clone())
    }
}

/// Content hash identifying (universe lotteries, model, flags, eps, restarts,
/// seed). Prize amounts are deliberately excluded: feasibility depends only
/// on the probability vectors and the prize ordering they index.
pub fn search_fingerprint(universe: &LotteryUniverse, settings: &SearchSettings) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"order-set-v1\n");
    hasher.update(format!("K={}\n", universe.prize_count()));
    for l in universe.lotteries() {
        let row: Vec<String> = l.probs().iter().map(|&p| format_rat(p)).collect();
        hasher.update(row.join(","));
        hasher.update(b"\n");
    }
    hasher.update(format!(
        "model={} monotone={} convex={} eps={:?} restarts={} seed={}\n",
        settings.model.label(),
        settings.shape.monotone,
        settings.shape.convex,
        settings.eps,
        settings.restarts,
        settings.seed,
    ));
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the configured oracle over every order of the universe, in parallel,
/// and returns the accepted ones in lexicographic sequence with witnesses.
pub fn compute_order_set(
    universe: &LotteryUniverse,
    settings: &SearchSettings,
) -> Result<OrderSet> {
    let n = universe.len();
    if n > MAX_ENUMERABLE {
        return Err(Error::invalid(format!(
            "universe of {n} lotteries exceeds the enumeration guard {MAX_ENUMERABLE}"
        )));
    }
    let total = factorial(n);
    let judged: Vec<Option<(LinearOrder, WitnessSummary)>> = (0..total)
        .into_par_iter()
        .map(|rank| {
            let order = LinearOrder::new(unrank(rank, n), n).expect("unrank yields a permutation");
            let witness =
                judge(&order, universe, settings, rank as u64).map_err(|e| Error::OrderSolve {
                    order: order.ranking().to_vec(),
                    message: e.to_string(),
                })?;
            Ok(witness
                .filter(w_feasible)
                .map(|w| summarize(order.clone(), w)))
        })
        .collect::<Result<_>>()?;

    let grid = build_cumulative_grid(universe);
    let mut orders = Vec::new();
    let mut witnesses = Vec::new();
    for item in judged.into_iter().flatten() {
        orders.push(item.0);
        witnesses.push(item.1);
    }
    Ok(OrderSet {
        fingerprint: search_fingerprint(universe, settings),
        settings: *settings,
        levels: grid.levels().to_vec(),
        orders,
        witnesses,
    })
}

fn judge(
    order: &LinearOrder,
    universe: &LotteryUniverse,
    settings: &SearchSettings,
    rank: u64,
) -> Result<Option<FeasibilityWitness>> {
    let witness = match settings.model {
        ModelKind::Eu => eu_feasible(order, universe, settings.eps)?,
        ModelKind::Rdeu => {
            let order_seed: u64 = stream_rng(settings.seed, STREAM_ORDER_SEARCH, rank).gen();
            rdeu_feasible(
                order,
                universe,
                settings.shape,
                settings.eps,
                settings.restarts,
                order_seed,
            )?
        }
    };
    Ok(Some(witness))
}

fn w_feasible(w: &FeasibilityWitness) -> bool {
    w.feasible()
}

fn summarize(order: LinearOrder, w: FeasibilityWitness) -> (LinearOrder, WitnessSummary) {
    let v = w.v.expect("feasible witness has utilities");
    let phi = w.phi.expect("feasible witness has a weighting grid");
    (
        order,
        WitnessSummary {
            margin: w.margin,
            v,
            phi_values: phi.values().to_vec(),
        },
    )
}

/// On-disk order-set document. Levels are exact-rational strings; everything
/// else serializes naturally. The format is versioned and the fingerprint is
/// re-derived on load so a stale cache can never masquerade as current.
#[derive(Serialize, Deserialize)]
struct CacheDoc {
    format_version: u32,
    fingerprint: String,
    model: ModelKind,
    monotone: bool,
    convex: bool,
    eps: f64,
    restarts: u32,
    seed: u64,
    levels: Vec<String>,
    orders: Vec<Vec<usize>>,
    witnesses: Vec<WitnessSummary>,
}

const CACHE_VERSION: u32 = 1;

pub fn write_cache(set: &OrderSet, path: &Path) -> Result<()> {
    let doc = CacheDoc {
        format_version: CACHE_VERSION,
        fingerprint: set.fingerprint.clone(),
        model: set.settings.model,
        monotone: set.settings.shape.monotone,
        convex: set.settings.shape.convex,
        eps: set.settings.eps,
        restarts: set.settings.restarts,
        seed: set.settings.seed,
        levels: set.levels.iter().map(|&q| format_rat(q)).collect(),
        orders: set.orders.iter().map(|o| o.ranking().to_vec()).collect(),
        witnesses: set.witnesses.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::invalid(format!("cache serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Loads a cache written by [`write_cache`], verifying that it matches the
/// current universe and settings exactly.
pub fn read_cache(
    path: &Path,
    universe: &LotteryUniverse,
    settings: &SearchSettings,
) -> Result<OrderSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let doc: CacheDoc = serde_json::from_str(&text)
        .map_err(|e| Error::CacheMismatch(format!("{}: not a cache file: {e}", path.display())))?;
    if doc.format_version != CACHE_VERSION {
        return Err(Error::CacheMismatch(format!(
            "unsupported cache version {}",
            doc.format_version
        )));
    }
    let expected = search_fingerprint(universe, settings);
    if doc.fingerprint != expected {
        return Err(Error::CacheMismatch(
            "cache was built for a different universe or settings".into(),
        ));
    }
    let n = universe.len();
    let levels = doc
        .levels
        .iter()
        .map(|s| parse_rat(s))
        .collect::<Result<Vec<Rat>>>()?;
    let orders = doc
        .orders
        .into_iter()
        .map(|r| LinearOrder::new(r, n))
        .collect::<Result<Vec<_>>>()?;
    if orders.len() != doc.witnesses.len() {
        return Err(Error::CacheMismatch(
            "order and witness counts disagree".into(),
        ));
    }
    Ok(OrderSet {
        fingerprint: doc.fingerprint,
        settings: *settings,
        levels,
        orders,
        witnesses: doc.witnesses,
    })
}
