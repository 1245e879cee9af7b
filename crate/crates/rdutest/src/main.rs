use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rdutest::choices::{load_choices, write_choices};
use rdutest::cone::{build_b, ks_bootstrap, MenuIndex};
use rdutest::config::{load_config, load_population, render_config, LoadedConfig, TestSettings};
use rdutest::error::{Error, Result};
use rdutest::model::{parse_rat, Rat};
use rdutest::orders::{
    compute_order_set, factorial, read_cache, write_cache, ModelKind, OrderSet, SearchSettings,
};
use rdutest::report::{build_report, render_json, render_text};
use rdutest::simulate::{gp_counterexample, sample_population};

#[derive(Parser)]
#[command(
    name = "rdutest",
    version,
    about = "Cone-based consistency tests for stochastic choice between lotteries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the feasible orders of a universe and cache them.
    Orders(OrdersArgs),
    /// Test a choice dataset against a model's cone.
    Test(TestArgs),
    /// Sample a synthetic dataset from a known population mixture.
    Simulate(SimulateArgs),
    /// Emit the three-menu dataset separating the EU and RDEU cones.
    Counterexample(CounterexampleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Eu,
    Rdeu,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> ModelKind {
        match m {
            ModelArg::Eu => ModelKind::Eu,
            ModelArg::Rdeu => ModelKind::Rdeu,
        }
    }
}

/// Flags shared by `orders` and `test` that override the config's `[test]`
/// section.
#[derive(Args)]
struct ModelOverrides {
    /// Model whose orders form the cone.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Restrict the weighting function to be nondecreasing.
    #[arg(long)]
    monotone: bool,
    /// Restrict the weighting function to be convex.
    #[arg(long)]
    convex: bool,
    /// Feasibility margin the oracles must certify.
    #[arg(long)]
    eps: Option<f64>,
    /// Random restarts of the bilinear search per order.
    #[arg(long)]
    restarts: Option<u32>,
    /// Master seed for order search, bootstrap, and simulation streams.
    #[arg(long)]
    seed: Option<u64>,
}

impl ModelOverrides {
    fn apply(&self, t: &mut TestSettings) {
        if let Some(m) = self.model {
            t.model = m.into();
        }
        if self.monotone {
            t.shape.monotone = true;
        }
        if self.convex {
            t.shape.convex = true;
        }
        if let Some(eps) = self.eps {
            t.eps = eps;
        }
        if let Some(r) = self.restarts {
            t.restarts = r;
        }
        if let Some(s) = self.seed {
            t.seed = s;
        }
    }
}

#[derive(Args)]
struct OrdersArgs {
    /// Dataset config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: ModelOverrides,
    /// Cache file to write (default: next to the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    /// Dataset config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Choice data (CSV: subject_id,menu_id,choice_id).
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    overrides: ModelOverrides,
    /// Bootstrap replications.
    #[arg(long)]
    bootstrap: Option<u32>,
    /// Comma-separated test levels, e.g. 0.05,0.01.
    #[arg(long)]
    alpha: Option<String>,
    /// Order cache to reuse; computed and written here if absent.
    #[arg(long)]
    orders_cache: Option<PathBuf>,
    /// Write the machine-readable report to this path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Dataset config (TOML) naming the universe and menus.
    #[arg(long)]
    config: PathBuf,
    /// Population mixture file (TOML).
    #[arg(long)]
    population: PathBuf,
    /// Draws per menu.
    #[arg(long)]
    n: u64,
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Mixture weight in (0,1), as a fraction ("1/2") or finite decimal ("0.5").
    #[arg(long, default_value = "1/2")]
    alpha_mix: String,
    /// Observations per menu.
    #[arg(long, default_value_t = 1000)]
    n: u64,
    /// Tremble probability; omitted means exact degenerate frequencies.
    #[arg(long)]
    noise: Option<f64>,
    /// Seed for the trembles (unused without --noise).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Matching dataset config path (default: the CSV path with .toml).
    #[arg(long)]
    config_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Orders(args) => run_orders(args),
        Command::Test(args) => run_test(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Counterexample(args) => run_counterexample(args),
    }
}

fn search_settings(t: &TestSettings) -> SearchSettings {
    SearchSettings {
        model: t.model,
        shape: t.shape,
        eps: t.eps,
        restarts: t.restarts,
        seed: t.seed,
    }
}

fn default_cache_path(config: &Path, t: &TestSettings) -> PathBuf {
    let stem = config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "orders".into());
    let mut name = format!("{stem}-{}", t.model.label());
    if t.shape.monotone {
        name.push_str("-mono");
    }
    if t.shape.convex {
        name.push_str("-cvx");
    }
    name.push_str(".orders.json");
    config.with_file_name(name)
}

fn run_orders(args: OrdersArgs) -> Result<()> {
    let LoadedConfig { catalog, mut test } = load_config(&args.config)?;
    args.overrides.apply(&mut test);
    let settings = search_settings(&test);
    let set = compute_order_set(&catalog.universe, &settings)?;
    let path = args
        .out
        .unwrap_or_else(|| default_cache_path(&args.config, &test));
    write_cache(&set, &path)?;
    println!(
        "{} of {} orders feasible under {}{}",
        set.len(),
        factorial(catalog.universe.len()),
        test.model.label(),
        shape_suffix(&test),
    );
    println!("cache: {}", path.display());
    Ok(())
}

fn shape_suffix(t: &TestSettings) -> String {
    match (t.shape.monotone, t.shape.convex) {
        (false, false) => String::new(),
        (true, false) => " (monotone)".into(),
        (false, true) => " (convex)".into(),
        (true, true) => " (monotone, convex)".into(),
    }
}

fn obtain_order_set(
    catalog_universe: &rdutest::model::LotteryUniverse,
    settings: &SearchSettings,
    cache: Option<&Path>,
) -> Result<OrderSet> {
    match cache {
        Some(path) if path.exists() => read_cache(path, catalog_universe, settings),
        Some(path) => {
            let set = compute_order_set(catalog_universe, settings)?;
            write_cache(&set, path)?;
            Ok(set)
        }
        None => compute_order_set(catalog_universe, settings),
    }
}

fn run_test(args: TestArgs) -> Result<()> {
    let LoadedConfig { catalog, mut test } = load_config(&args.config)?;
    args.overrides.apply(&mut test);
    if let Some(l) = args.bootstrap {
        test.bootstrap = l;
    }
    if let Some(alpha) = &args.alpha {
        test.alphas = parse_alphas(alpha)?;
    }

    let loaded = load_choices(&args.data, &catalog)?;
    if !loaded.dropped_menus.is_empty() {
        eprintln!(
            "warning: {} menus have no observations and are excluded: {}",
            loaded.dropped_menus.len(),
            loaded.dropped_menus.join(", ")
        );
    }
    if loaded.data.min_menu_total() == 1 {
        eprintln!("warning: a menu has a single observation; tau_n = 0 disables the tightening");
    }

    let settings = search_settings(&test);
    let order_set = obtain_order_set(&catalog.universe, &settings, args.orders_cache.as_deref())?;
    let index = MenuIndex::from_data(&loaded.data)?;
    let b = build_b(&order_set, &index, catalog.universe.len())?;
    let result = ks_bootstrap(&loaded.data, &b, test.bootstrap, &test.alphas, test.seed)?;

    let report = build_report(
        &test,
        &order_set,
        factorial(catalog.universe.len()),
        &result,
        loaded.data.min_menu_total(),
        index.menu_count(),
        loaded.dropped_menus,
    );
    print!("{}", render_text(&report));
    if let Some(path) = &args.report {
        std::fs::write(path, render_json(&report)?)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        eprintln!("report: {}", path.display());
    }
    Ok(())
}

fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    let alphas = s
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("cannot parse test level {part:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if alphas.is_empty() {
        return Err(Error::invalid("no test levels given"));
    }
    Ok(alphas)
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let LoadedConfig { catalog, .. } = load_config(&args.config)?;
    let population = load_population(&args.population, &catalog)?;
    let data = sample_population(
        &population,
        &catalog.universe,
        &catalog.menus,
        args.n,
        args.seed,
    )?;
    let menu_indices: Vec<usize> = (0..catalog.menus.len()).collect();
    write_choices(&args.out, &catalog, &data, &menu_indices)?;
    println!(
        "wrote {} choices over {} menus to {}",
        data.total(),
        catalog.menus.len(),
        args.out.display()
    );
    Ok(())
}

fn run_counterexample(args: CounterexampleArgs) -> Result<()> {
    let mix = parse_mix(&args.alpha_mix)?;
    let (catalog, data) = gp_counterexample(mix, args.n, args.noise, args.seed)?;
    let menu_indices: Vec<usize> = (0..catalog.menus.len()).collect();
    write_choices(&args.out, &catalog, &data, &menu_indices)?;
    let config_path = args
        .config_out
        .unwrap_or_else(|| args.out.with_extension("toml"));
    let config_text = render_config(&catalog, Some(&TestSettings::default()))?;
    std::fs::write(&config_path, config_text)
        .map_err(|e| Error::io(config_path.display().to_string(), e))?;
    println!(
        "wrote {} choices to {} (config: {})",
        data.total(),
        args.out.display(),
        config_path.display()
    );
    Ok(())
}

/// Mixture weights accept fractions and finite decimals; decimals convert
/// exactly via their power-of-ten denominator.
fn parse_mix(s: &str) -> Result<Rat> {
    let s = s.trim();
    match s.split_once('.') {
        None => parse_rat(s),
        Some((int_part, frac_part)) => {
            let digits_ok = |t: &str| t.chars().all(|c| c.is_ascii_digit());
            if !digits_ok(int_part) || frac_part.is_empty() || !digits_ok(frac_part) {
                return Err(Error::invalid(format!("cannot parse mixture weight {s:?}")));
            }
            if frac_part.len() > 15 {
                return Err(Error::invalid("mixture weight has too many decimal digits"));
            }
            let scale = 10i64.pow(frac_part.len() as u32);
            let int: i64 = if int_part.is_empty() {
                0
            } else {
                int_part
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse mixture weight {s:?}")))?
            };
            let frac: i64 = frac_part
                .parse()
                .map_err(|_| Error::invalid(format!("cannot parse mixture weight {s:?}")))?;
            Ok(Rat::new(int * scale + frac, scale))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rdutest::model::rat;

    #[test]
    fn mix_parsing() {
        assert_eq!(parse_mix("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_mix("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_mix(".25").unwrap(), rat(1, 4));
        assert_eq!(parse_mix("0.125").unwrap(), rat(1, 8));
        assert!(parse_mix("abc").is_err());
        assert!(parse_mix("-0.5").is_err());
        assert!(parse_mix("0.").is_err());
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!(parse_alphas("0.05,0.01").unwrap(), vec![0.05, 0.01]);
        assert_eq!(parse_alphas(" 0.1 ").unwrap(), vec![0.1]);
        assert!(parse_alphas("x").is_err());
    }

    #[test]
    fn cache_paths_reflect_the_configuration() {
        let mut t = TestSettings::default();
        let base = Path::new("/tmp/tokens.toml");
        assert_eq!(
            default_cache_path(base, &t),
            Path::new("/tmp/tokens-eu.orders.json")
        );
        t.model = ModelKind::Rdeu;
        t.shape.monotone = true;
        assert_eq!(
            default_cache_path(base, &t),
            Path::new("/tmp/tokens-rdeu-mono.orders.json")
        );
    }
}
