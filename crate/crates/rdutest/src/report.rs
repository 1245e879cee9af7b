//! Test reports: a text summary for the terminal and a machine-readable
//! JSON document. Both are pure functions of the run's inputs and seed; no
//! timestamps or environment data, so identical runs emit identical bytes.

use serde::{Deserialize, Serialize};

use crate::cone::{ConeTestResult, CriticalValue};
use crate::config::TestSettings;
use crate::error::{Error, Result};
use crate::orders::OrderSet;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u32,
    pub model: String,
    pub monotone: bool,
    pub convex: bool,
    pub eps: f64,
    pub restarts: u32,
    pub order_fingerprint: String,
    pub order_count: usize,
    pub orders_enumerated: usize,
    pub distinct_rules: usize,
    pub d_rho: usize,
    pub menus_tested: usize,
    pub dropped_menus: Vec<String>,
    pub sample_size: u64,
    pub min_menu_observations: u64,
    pub tau_n: f64,
    pub t_n: f64,
    pub p_value: f64,
    pub replications: u32,
    pub seed: u64,
    pub critical_values: Vec<CriticalValue>,
    pub eta_hat: Vec<f64>,
    pub v_star: Vec<f64>,
    pub bootstrap_stats: Vec<f64>,
}

pub fn build_report(
    settings: &TestSettings,
    order_set: &OrderSet,
    orders_enumerated: usize,
    result: &ConeTestResult,
    min_menu_observations: u64,
    menus_tested: usize,
    dropped_menus: Vec<String>,
) -> Report {
    Report {
        format_version: REPORT_VERSION,
        model: settings.model.label().to_string(),
        monotone: settings.shape.monotone,
        convex: settings.shape.convex,
        eps: settings.eps,
        restarts: settings.restarts,
        order_fingerprint: order_set.fingerprint.clone(),
        order_count: result.order_count,
        orders_enumerated,
        distinct_rules: result.distinct_rules,
        d_rho: result.d_rho,
        menus_tested,
        dropped_menus,
        sample_size: result.sample_size,
        min_menu_observations,
        tau_n: result.tau_n,
        t_n: result.t_n,
        p_value: result.p_value,
        replications: result.replications,
        seed: result.seed,
        critical_values: result.critical_values.clone(),
        eta_hat: result.eta_hat.clone(),
        v_star: result.v_star.clone(),
        bootstrap_stats: result.bootstrap_stats.clone(),
    }
}

/// Human-readable summary, one fact per line.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let shape = match (report.monotone, report.convex) {
        (false, false) => String::new(),
        (true, false) => " (monotone)".into(),
        (false, true) => " (convex)".into(),
        (true, true) => " (monotone, convex)".into(),
    };
    out.push_str(&format!("model: {}{shape}\n", report.model));
    out.push_str(&format!(
        "orders: {} of {} feasible, {} distinct choice rules\n",
        report.order_count, report.orders_enumerated, report.distinct_rules
    ));
    out.push_str(&format!(
        "menus: {} tested ({} rows){}\n",
        report.menus_tested,
        report.d_rho,
        if report.dropped_menus.is_empty() {
            String::new()
        } else {
            format!(
                ", dropped without observations: {}",
                report.dropped_menus.join(", ")
            )
        }
    ));
    out.push_str(&format!(
        "observations: n = {} (min per menu {})\n",
        report.sample_size, report.min_menu_observations
    ));
    out.push_str(&format!("tau_n: {:.6}\n", report.tau_n));
    out.push_str(&format!("T_n: {:.6}\n", report.t_n));
    out.push_str(&format!(
        "p-value: {:.6} ({} bootstrap replications, seed {})\n",
        report.p_value, report.replications, report.seed
    ));
    for cv in &report.critical_values {
        out.push_str(&format!(
            "  alpha {:>5}: critical value {:>12.6} -> {}\n",
            cv.alpha,
            cv.value,
            if cv.reject {
                "reject"
            } else {
                "fail to reject"
            }
        ));
    }
    out
}

/// Machine-readable report document; stable field order, newline-terminated.
pub fn render_json(report: &Report) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::invalid(format!("report serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> Report {
        Report {
            format_version: REPORT_VERSION,
            model: "eu".into(),
            monotone: false,
            convex: false,
            eps: 1e-6,
            restarts: 20,
            order_fingerprint: "ab12".into(),
            order_count: 2,
            orders_enumerated: 6,
            distinct_rules: 2,
            d_rho: 6,
            menus_tested: 3,
            dropped_menus: vec![],
            sample_size: 150,
            min_menu_observations: 50,
            tau_n: 0.28,
            t_n: 1.25,
            p_value: 0.031,
            replications: 1000,
            seed: 7,
            critical_values: vec![
                CriticalValue {
                    alpha: 0.05,
                    value: 0.9,
                    reject: true,
                },
                CriticalValue {
                    alpha: 0.01,
                    value: 1.8,
                    reject: false,
                },
            ],
            eta_hat: vec![0.5, 0.5],
            v_star: vec![0.7, 0.3],
            bootstrap_stats: vec![0.1, 0.2],
        }
    }

    #[test]
    fn text_mentions_the_decisions() {
        let text = render_text(&sample_report());
        assert!(text.contains("T_n: 1.25"));
        assert!(text.contains("alpha  0.05"));
        assert!(text.contains("-> reject"));
        assert!(text.contains("-> fail to reject"));
        assert!(!text.contains("dropped"));
    }

    #[test]
    fn json_round_trips_and_is_stable() {
        let report = sample_report();
        let a = render_json(&report).unwrap();
        let b = render_json(&report).unwrap();
        assert_eq!(a, b);
        let back: Report = serde_json::from_str(&a).unwrap();
        assert_eq!(back, report);
        assert!(a.ends_with('\n'));
    }
}
