//! Synthetic choice data from known agent populations, plus the canonical
//! dataset separating the expected-utility cone from the rank-dependent one.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    rat, rdeu_value, Catalog, LinearOrder, Lottery, LotteryUniverse, Menu, MenuBlock, PrizeGrid,
    Rat, StochasticChoiceData,
};
use crate::oracle::WeightingGrid;
use crate::rng::{stream_rng, STREAM_SIMULATE};

/// One member of a heterogeneous population: either a fixed ranking or a
/// preference given functionally by utilities on the prize grid and a
/// weighting function.
#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Order(LinearOrder),
    Parametric { v: Vec<f64>, phi: WeightingGrid },
}

/// A mixture over agents; weights are sampling probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    agents: Vec<(f64, Agent)>,
}

impl PopulationSpec {
    pub fn new(agents: Vec<(f64, Agent)>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::invalid("population needs at least one agent"));
        }
        if agents.iter().any(|(w, _)| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("agent weights must be nonnegative"));
        }
        let total: f64 = agents.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "agent weights must sum to 1, got {total}"
            )));
        }
        Ok(PopulationSpec { agents })
    }

    pub fn agents(&self) -> &[(f64, Agent)] {
        &self.agents
    }

    fn validate_against(&self, universe: &LotteryUniverse) -> Result<()> {
        for (_, agent) in &self.agents {
            match agent {
                Agent::Order(order) => {
                    if order.len() != universe.len() {
                        return Err(Error::invalid(
                            "population order does not rank the whole universe",
                        ));
                    }
                }
                Agent::Parametric { v, .. } => {
                    if v.len() != universe.prize_count() {
                        return Err(Error::invalid(
                            "population utilities do not cover the prize grid",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn agent_best(agent: &Agent, menu: &Menu, universe: &LotteryUniverse) -> usize {
    match agent {
        Agent::Order(order) => order.best_in(menu),
        Agent::Parametric { v, phi } => {
            // Deterministic tie-break: the first member attaining the max.
            let mut best = menu.members()[0];
            let mut best_value = f64::NEG_INFINITY;
            for &m in menu.members() {
                let value = rdeu_value(universe.lottery(m), v, |q| phi.at(q));
                if value > best_value {
                    best_value = value;
                    best = m;
                }
            }
            best
        }
    }
}

/// Draws `n_per_menu` agents i.i.d. from the mixture for every menu
/// independently and records each agent's choice. Menu j consumes its own
/// seed stream, so datasets are reproducible menu by menu.
pub fn sample_population(
    spec: &PopulationSpec,
    universe: &LotteryUniverse,
    menus: &[Menu],
    n_per_menu: u64,
    seed: u64,
) -> Result<StochasticChoiceData> {
    if menus.is_empty() {
        return Err(Error::invalid("need at least one menu"));
    }
    if n_per_menu == 0 {
        return Err(Error::invalid("need at least one draw per menu"));
    }
    spec.validate_against(universe)?;
    for menu in menus {
        if menu.members().iter().any(|&m| m >= universe.len()) {
            return Err(Error::invalid(
                "menu refers to a lottery outside the universe",
            ));
        }
    }

    let mut blocks = Vec::with_capacity(menus.len());
    for (j, menu) in menus.iter().enumerate() {
        let mut rng = stream_rng(seed, STREAM_SIMULATE, j as u64);
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..n_per_menu {
            let agent = pick_agent(&spec.agents, &mut rng);
            let choice = agent_best(agent, menu, universe);
            *counts.entry(choice).or_insert(0) += 1;
        }
        blocks.push(MenuBlock::new(menu.clone(), counts)?);
    }
    StochasticChoiceData::new(blocks)
}

fn pick_agent<'a>(agents: &'a [(f64, Agent)], rng: &mut impl Rng) -> &'a Agent {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (w, agent) in agents {
        acc += w;
        if u < acc {
            return agent;
        }
    }
    &agents.last().expect("population is nonempty").1
}

/// The three-menu dataset that a population of expected-utility maximizers
/// cannot generate but a single rank-dependent agent can.
///
/// Over prizes {0, 1}, p wins the high prize with probability 1/2 and q with
/// 2/5; p' mixes p with the sure high prize r, p' = mix·p + (1−mix)·r. The
/// recorded frequencies are degenerate: p always over q, q always over p',
/// p always over p'. Any utility increasing in the win probability ranks
/// p' above p, so those frequencies sit outside the expected-utility cone
/// for every mix in (0, 1); an inverted weighting function reproduces them
/// exactly. With `noise`, each draw trembles to a uniform menu choice with
/// the given probability instead of being recorded deterministically.
pub fn gp_counterexample(
    mix: Rat,
    n_per_menu: u64,
    noise: Option<f64>,
    seed: u64,
) -> Result<(Catalog, StochasticChoiceData)> {
    if mix <= rat(0, 1) || mix >= rat(1, 1) {
        return Err(Error::invalid("mixture weight must lie strictly in (0, 1)"));
    }
    if n_per_menu == 0 {
        return Err(Error::invalid("need at least one draw per menu"));
    }
    if let Some(theta) = noise {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid("tremble probability must lie in [0, 1]"));
        }
    }

    let grid = PrizeGrid::new(vec![0.0, 1.0])?;
    let p = Lottery::new(vec![rat(1, 2), rat(1, 2)])?;
    let q = Lottery::new(vec![rat(3, 5), rat(2, 5)])?;
    let r = Lottery::new(vec![rat(0, 1), rat(1, 1)])?;
    let p_prime = p.mix(mix, &r)?;
    if p_prime == p || p_prime == q || p_prime == r {
        return Err(Error::invalid(
            "mixture weight makes the blended lottery coincide with an existing one",
        ));
    }
    let universe = LotteryUniverse::new(grid, vec![p, q, p_prime])?;
    let menus = vec![
        Menu::new(vec![0, 1], 3)?,
        Menu::new(vec![1, 2], 3)?,
        Menu::new(vec![0, 2], 3)?,
    ];
    let catalog = Catalog::new(
        universe,
        menus.clone(),
        vec!["p".into(), "q".into(), "p_prime".into()],
        vec!["p-q".into(), "p_prime-q".into(), "p_prime-p".into()],
    )?;

    // The generating agent ranks p over q over p'.
    let order = LinearOrder::new(vec![0, 1, 2], 3)?;
    let data = match noise {
        None => {
            let blocks = menus
                .iter()
                .map(|menu| {
                    let best = order.best_in(menu);
                    MenuBlock::new(menu.clone(), BTreeMap::from([(best, n_per_menu)]))
                })
                .collect::<Result<Vec<_>>>()?;
            StochasticChoiceData::new(blocks)?
        }
        Some(theta) => {
            let mut blocks = Vec::with_capacity(menus.len());
            for (j, menu) in menus.iter().enumerate() {
                let mut rng = stream_rng(seed, STREAM_SIMULATE, j as u64);
                let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
                for _ in 0..n_per_menu {
                    let choice = if rng.gen::<f64>() < theta {
                        menu.members()[rng.gen_range(0..menu.len())]
                    } else {
                        order.best_in(menu)
                    };
                    *counts.entry(choice).or_insert(0) += 1;
                }
                blocks.push(MenuBlock::new(menu.clone(), counts)?);
            }
            StochasticChoiceData::new(blocks)?
        }
    };
    Ok((catalog, data))
}
