//! Dataset and test configuration files.
//!
//! A config is a TOML document naming either the built-in dataset or an
//! explicit prize grid, lottery table, and menu collection, with an optional
//! `[test]` section of solver and bootstrap settings. Lottery probabilities
//! are exact-rational strings; decimals are rejected so tie detection stays
//! exact.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builtin;
use crate::error::{Error, Result};
use crate::model::{
    format_rat, parse_rat, Catalog, LinearOrder, Lottery, LotteryUniverse, Menu, PrizeGrid,
};
use crate::oracle::{ShapeFlags, WeightingGrid, DEFAULT_EPS, DEFAULT_RESTARTS};
use crate::orders::ModelKind;
use crate::simulate::{Agent, PopulationSpec};

/// Test settings after defaulting; CLI flags override individual fields.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSettings {
    pub model: ModelKind,
    pub shape: ShapeFlags,
    pub eps: f64,
    pub restarts: u32,
    pub bootstrap: u32,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

impl Default for TestSettings {
    fn default() -> Self {
        TestSettings {
            model: ModelKind::Eu,
            shape: ShapeFlags::NONE,
            eps: DEFAULT_EPS,
            restarts: DEFAULT_RESTARTS,
            bootstrap: 1000,
            alphas: vec![0.05, 0.01],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub catalog: Catalog,
    pub test: TestSettings,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    builtin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prizes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lotteries: Vec<RawLottery>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    menus: Vec<RawMenu>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<RawTest>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLottery {
    id: String,
    probs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMenu {
    id: String,
    members: Vec<String>,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTest {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convex: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    restarts: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let catalog = catalog_from_raw(&raw, path)?;
    let test = test_from_raw(raw.test.as_ref().unwrap_or(&RawTest::default()))?;
    Ok(LoadedConfig { catalog, test })
}

fn catalog_from_raw(raw: &RawConfig, path: &Path) -> Result<Catalog> {
    let explicit = raw.prizes.is_some() || !raw.lotteries.is_empty() || !raw.menus.is_empty();
    match (&raw.builtin, explicit) {
        (Some(name), false) => match name.as_str() {
            builtin::TOKENS => Ok(builtin::tokens()),
            other => Err(Error::invalid(format!(
                "{}: unknown builtin dataset {other:?} (available: {:?})",
                path.display(),
                builtin::TOKENS
            ))),
        },
        (Some(_), true) => Err(Error::invalid(format!(
            "{}: a config is either builtin or explicit, not both",
            path.display()
        ))),
        (None, false) => Err(Error::invalid(format!(
            "{}: config defines no dataset",
            path.display()
        ))),
        (None, true) => {
            let prizes = raw
                .prizes
                .clone()
                .ok_or_else(|| Error::invalid(format!("{}: missing prize grid", path.display())))?;
            let grid = PrizeGrid::new(prizes)?;
            let k = grid.len();
            let mut lotteries = Vec::with_capacity(raw.lotteries.len());
            let mut lottery_ids = Vec::with_capacity(raw.lotteries.len());
            let mut by_id: HashMap<&str, usize> = HashMap::new();
            for (i, l) in raw.lotteries.iter().enumerate() {
                if l.probs.len() != k {
                    return Err(Error::invalid(format!(
                        "lottery {:?} has {} probabilities but the grid has {k} prizes",
                        l.id,
                        l.probs.len()
                    )));
                }
                let probs = l
                    .probs
                    .iter()
                    .map(|s| parse_rat(s))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::invalid(format!("lottery {:?}: {e}", l.id)))?;
                lotteries.push(Lottery::new(probs)?);
                if by_id.insert(&l.id, i).is_some() {
                    return Err(Error::invalid(format!("duplicate lottery id {:?}", l.id)));
                }
                lottery_ids.push(l.id.clone());
            }
            let universe = LotteryUniverse::new(grid, lotteries)?;
            let mut menus = Vec::with_capacity(raw.menus.len());
            let mut menu_ids = Vec::with_capacity(raw.menus.len());
            for m in &raw.menus {
                let members = m
                    .members
                    .iter()
                    .map(|id| {
                        by_id.get(id.as_str()).copied().ok_or_else(|| {
                            Error::invalid(format!(
                                "menu {:?} references unknown lottery {id:?}",
                                m.id
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                menus.push(Menu::new(members, universe.len())?);
                menu_ids.push(m.id.clone());
            }
            Catalog::new(universe, menus, lottery_ids, menu_ids)
        }
    }
}

fn test_from_raw(raw: &RawTest) -> Result<TestSettings> {
    let mut t = TestSettings::default();
    if let Some(model) = &raw.model {
        t.model = parse_model(model)?;
    }
    if let Some(m) = raw.monotone {
        t.shape.monotone = m;
    }
    if let Some(c) = raw.convex {
        t.shape.convex = c;
    }
    if let Some(eps) = raw.eps {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::invalid("eps must be positive"));
        }
        t.eps = eps;
    }
    if let Some(r) = raw.restarts {
        t.restarts = r;
    }
    if let Some(l) = raw.bootstrap {
        t.bootstrap = l;
    }
    if let Some(a) = &raw.alphas {
        t.alphas = a.clone();
    }
    if let Some(s) = raw.seed {
        t.seed = s;
    }
    Ok(t)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPopulation {
    agents: Vec<RawAgent>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    weight: f64,
    #[serde(default)]
    order: Option<Vec<String>>,
    #[serde(default)]
    v: Option<Vec<f64>>,
    #[serde(default)]
    phi: Option<RawPhi>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhi {
    levels: Vec<String>,
    values: Vec<f64>,
}

/// Loads a population mixture file: each `[[agents]]` entry carries a weight
/// and either `order` (lottery ids, best first) or `v` (utilities on the
/// prize grid) with an optional `phi` weighting table; `v` without `phi`
/// means expected utility.
pub fn load_population(path: &Path, catalog: &Catalog) -> Result<PopulationSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let raw: RawPopulation =
        toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let lottery_index: HashMap<&str, usize> = catalog
        .lottery_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut agents = Vec::with_capacity(raw.agents.len());
    for (i, a) in raw.agents.iter().enumerate() {
        let agent = match (&a.order, &a.v) {
            (Some(ids), None) => {
                if a.phi.is_some() {
                    return Err(Error::invalid(format!(
                        "agent {i}: phi only applies to parametric agents"
                    )));
                }
                let ranking = ids
                    .iter()
                    .map(|id| {
                        lottery_index.get(id.as_str()).copied().ok_or_else(|| {
                            Error::invalid(format!("agent {i}: unknown lottery {id:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Agent::Order(LinearOrder::new(ranking, catalog.universe.len())?)
            }
            (None, Some(v)) => {
                if v.len() != catalog.universe.prize_count() {
                    return Err(Error::invalid(format!(
                        "agent {i}: {} utilities for {} prizes",
                        v.len(),
                        catalog.universe.prize_count()
                    )));
                }
                let phi = match &a.phi {
                    Some(raw_phi) => {
                        let levels = raw_phi
                            .levels
                            .iter()
                            .map(|s| parse_rat(s))
                            .collect::<Result<Vec<_>>>()
                            .map_err(|e| Error::invalid(format!("agent {i}: {e}")))?;
                        WeightingGrid::new(levels, raw_phi.values.clone())?
                    }
                    None => WeightingGrid::new(
                        vec![crate::model::rat(0, 1), crate::model::rat(1, 1)],
                        vec![0.0, 1.0],
                    )?,
                };
                Agent::Parametric { v: v.clone(), phi }
            }
            _ => {
                return Err(Error::invalid(format!(
                    "agent {i}: specify exactly one of order or v"
                )));
            }
        };
        agents.push((a.weight, agent));
    }
    PopulationSpec::new(agents)
}

pub fn parse_model(s: &str) -> Result<ModelKind> {
    match s {
        "eu" => Ok(ModelKind::Eu),
        "rdeu" => Ok(ModelKind::Rdeu),
        other => Err(Error::invalid(format!(
            "unknown model {other:?} (expected \"eu\" or \"rdeu\")"
        ))),
    }
}

/// Renders a catalog (and optional test section) back to config TOML, for
/// generated datasets.
pub fn render_config(catalog: &Catalog, test: Option<&TestSettings>) -> Result<String> {
    let raw = RawConfig {
        builtin: None,
        prizes: Some(catalog.universe.prize_grid().prizes().to_vec()),
        lotteries: catalog
            .universe
            .lotteries()
            .iter()
            .zip(&catalog.lottery_ids)
            .map(|(l, id)| RawLottery {
                id: id.clone(),
                probs: l.probs().iter().map(|&q| format_rat(q)).collect(),
            })
            .collect(),
        menus: catalog
            .menus
            .iter()
            .zip(&catalog.menu_ids)
            .map(|(m, id)| RawMenu {
                id: id.clone(),
                members: m
                    .members()
                    .iter()
                    .map(|&i| catalog.lottery_ids[i].clone())
                    .collect(),
            })
            .collect(),
        test: test.map(|t| RawTest {
            model: Some(t.model.label().to_string()),
            monotone: Some(t.shape.monotone),
            convex: Some(t.shape.convex),
            eps: Some(t.eps),
            restarts: Some(t.restarts),
            bootstrap: Some(t.bootstrap),
            alphas: Some(t.alphas.clone()),
            seed: Some(t.seed),
        }),
    };
    toml::to_string(&raw).map_err(|e| Error::invalid(format!("config serialization failed: {e}")))
}
