//! Built-in six-lottery experiment universe.
//!
//! Five 50-token-scale lotteries plus a sure default of 12 tokens, offered in
//! all 31 menus that pair a nonempty subset of the five with the default.
//! The design has a deliberate mixture structure: l3 = ½l1 + ½l2, and with
//! the auxiliary lottery `a` below, l4 = ½l1 + ½a and l5 = ½l2 + ½a. Those
//! identities are what give expected-utility tests their bite here, so they
//! are verified exactly in tests rather than assumed.

use crate::error::Result;
use crate::model::{rat, Catalog, Lottery, LotteryUniverse, Menu, PrizeGrid, Rat};

use num_traits::Zero;

pub const TOKENS: &str = "tokens";

/// Prize amounts in tokens, the union of all prizes the six lotteries use.
pub const TOKEN_PRIZES: [f64; 7] = [0.0, 10.0, 12.0, 14.0, 30.0, 48.0, 50.0];

fn z() -> Rat {
    Rat::zero()
}

fn lotteries() -> Vec<(String, Lottery)> {
    let l = |probs: Vec<Rat>| Lottery::new(probs).expect("built-in lottery is valid");
    vec![
        // ½·50 + ½·0
        (
            "l1".into(),
            l(vec![rat(1, 2), z(), z(), z(), z(), z(), rat(1, 2)]),
        ),
        // ½·30 + ½·10
        (
            "l2".into(),
            l(vec![z(), rat(1, 2), z(), z(), rat(1, 2), z(), z()]),
        ),
        // ¼·(50 + 30 + 10 + 0)
        (
            "l3".into(),
            l(vec![
                rat(1, 4),
                rat(1, 4),
                z(),
                z(),
                rat(1, 4),
                z(),
                rat(1, 4),
            ]),
        ),
        // ¼·50 + ⅕·48 + 3/20·14 + ⅖·0
        (
            "l4".into(),
            l(vec![
                rat(2, 5),
                z(),
                z(),
                rat(3, 20),
                z(),
                rat(1, 5),
                rat(1, 4),
            ]),
        ),
        // ⅕·48 + ¼·30 + 3/20·14 + ¼·10 + 3/20·0
        (
            "l5".into(),
            l(vec![
                rat(3, 20),
                rat(1, 4),
                z(),
                rat(3, 20),
                rat(1, 4),
                rat(1, 5),
                z(),
            ]),
        ),
        // 12 with certainty
        ("o".into(), l(vec![z(), z(), rat(1, 1), z(), z(), z(), z()])),
    ]
}

/// The auxiliary lottery `a` satisfying l4 = ½·l1 + ½·a and l5 = ½·l2 + ½·a,
/// i.e. a = 2·l4 − l1 (equivalently 2·l5 − l2). Used by the mixture-identity
/// checks; not part of the universe.
pub fn tokens_mixture_auxiliary() -> Lottery {
    Lottery::new(vec![rat(3, 10), z(), z(), rat(3, 10), z(), rat(2, 5), z()])
        .expect("auxiliary lottery is valid")
}

/// The full catalog: six lotteries and the 31 menus `S ∪ {o}` for every
/// nonempty subset S of {l1,…,l5}. Menus are ordered by subset bitmask, so
/// the layout is reproducible.
pub fn tokens() -> Catalog {
    try_tokens().expect("built-in catalog is valid")
}

fn try_tokens() -> Result<Catalog> {
    let grid = PrizeGrid::new(TOKEN_PRIZES.to_vec())?;
    let (ids, lots): (Vec<String>, Vec<Lottery>) = lotteries().into_iter().unzip();
    let universe = LotteryUniverse::new(grid, lots)?;
    let default_index = 5;

    let mut menus = Vec::new();
    let mut menu_ids = Vec::new();
    for mask in 1u32..32 {
        let mut members: Vec<usize> = (0..5).filter(|i| mask & (1 << i) != 0).collect();
        let mut id = members
            .iter()
            .map(|&i| ids[i].as_str())
            .collect::<Vec<_>>()
            .join("-");
        id.push_str("-o");
        members.push(default_index);
        menus.push(Menu::new(members, universe.len())?);
        menu_ids.push(id);
    }
    Catalog::new(universe, menus, ids, menu_ids)
}
