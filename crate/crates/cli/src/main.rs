//! `screening`: solve, sweep, verify, closed forms, comparisons and the LP oracle.

mod config;
mod output;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use config::{ConfigError, GridSpec, RunConfig};
use screening_core::distributions::{PosteriorDistribution, Prior};
use screening_core::menu::{Menu, MenuItem};
use screening_core::menu_solver::{
    bhm_outcome, single_item_preconditions, solve_bhm_finite, solve_bhm_single_item, solve_mussa_rosen,
    solve_optimal_menu, solve_restricted_menu, BhmFiniteConfig,
};
use screening_core::numeric::bisect;
use screening_core::outcomes::{compare_regimes, sweep, write_sweep_csv};
use screening_core::persuasion::{build_certificate, check_obedience, oracle_best_response};
use screening_core::uq_closed_form::{uq_restricted_menu, uq_unrestricted_menu};
use screening_core::Error;

/// Cutoffs at or below this are treated as 0 when rebuilding a posterior.
const CUTOFF_ZERO: f64 = 1e-14;
/// Default item count for the `bhm-finite` regime.
const DEFAULT_FINITE_ITEMS: usize = 4;

#[derive(Parser)]
#[command(name = "screening", version, about = "Screening menus under a biased information intermediary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Prior: uniform, power:k or csv:path.
    #[arg(long)]
    prior: Option<String>,
    /// Cost: power:k or tabulated:path.
    #[arg(long)]
    cost: Option<String>,
    /// Quality cap q̄.
    #[arg(long)]
    qbar: Option<f64>,
    /// Output file (standard output when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MenuSource {
    /// Menu as a JSON array of {"q", "t"} objects.
    #[arg(long, conflicts_with = "input")]
    menu: Option<String>,
    /// Output of `solve` to read the menu and posterior from ("-" for standard input).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the outcome as JSON.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: Option<f64>,
        /// auto, mussa-rosen, bhm or bhm-finite.
        #[arg(long)]
        regime: Option<String>,
        /// Largest number of items (auto regime).
        #[arg(long)]
        cap: Option<usize>,
        /// Number of items for bhm-finite.
        #[arg(long)]
        items: Option<usize>,
    },
    /// Solve a grid of biases and write CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// start:stop:n or a comma-separated list.
        #[arg(long = "b-grid")]
        b_grid: Option<String>,
        #[arg(long)]
        cap: Option<usize>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a menu and posterior against the LP oracle and the dual certificate.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: MenuSource,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long = "grid-m")]
        grid_m: Option<usize>,
        /// Largest oracle gap accepted as obedient.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Closed forms for the uniform prior with quadratic cost.
    ClosedForm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: Option<f64>,
        /// Largest number of items (1 to 3).
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Full-information, intermediary and seller-designed outcomes at one bias.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: Option<f64>,
    },
    /// Raw LP best response of the intermediary to a menu.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: MenuSource,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long = "grid-m")]
        grid_m: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Solver(String),
    Verification,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::InvalidPrior(_)
            | Error::InvalidCost(_)
            | Error::NotRegular { .. }
            | Error::OutOfRegime { .. }
            | Error::Io(_)
            | Error::Csv(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn merged(common: &Common, flags: RunConfig) -> Outcome<RunConfig> {
    let flags = RunConfig {
        prior: common.prior.clone(),
        cost: common.cost.clone(),
        q_bar: common.qbar,
        output: common.output.clone(),
        ..flags
    };
    let file = match &common.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    Ok(flags.over(file))
}

fn emit(cfg: &RunConfig, text: &str) -> Outcome<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Config(format!("output {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Solver(e.to_string()))
        }
    }
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn solve(cfg: &RunConfig) -> Outcome<String> {
    let prior = cfg.prior()?;
    let cost = cfg.cost()?;
    let regime = cfg.regime.as_deref().unwrap_or("auto");
    Ok(match regime {
        "mussa-rosen" => {
            if let Some(b) = cfg.b.filter(|b| *b != 0.0) {
                warn(&format!("b = {b} is ignored by the full-information regime"));
            }
            let mr = solve_mussa_rosen(&prior, &cost)?;
            #[derive(Serialize)]
            struct MrOut {
                regime: &'static str,
                exclusion_cutoff: f64,
                stats: screening_core::menu_solver::MussaRosenStats,
            }
            output::to_json(&MrOut { regime: "mussa_rosen_limit", exclusion_cutoff: mr.exclusion_cutoff, stats: mr.stats })
        }
        "bhm" => {
            let b = cfg.bias()?;
            if let Some(detail) = single_item_preconditions(&prior, &cost) {
                warn(&format!("single-item conditions unverified: {detail}"));
            }
            let single = solve_bhm_single_item(&prior, &cost)?;
            output::to_json(&bhm_outcome(&prior, &cost, b, &single)?)
        }
        "bhm-finite" => {
            let n = cfg.items.unwrap_or(DEFAULT_FINITE_ITEMS);
            if n == 0 {
                return Err(ConfigError::field("items", "must be at least 1").into());
            }
            output::to_json(&solve_bhm_finite(&prior, &cost, n, &BhmFiniteConfig::default())?)
        }
        "auto" => {
            let b = cfg.bias()?;
            let out = match cfg.cap()? {
                Some(k) => solve_restricted_menu(&prior, &cost, b, k)?,
                None => solve_optimal_menu(&prior, &cost, b)?,
            };
            for w in &out.warnings {
                warn(&serde_json::to_string(w).unwrap_or_default());
            }
            output::to_json(&out)
        }
        other => {
            return Err(ConfigError::field("regime", format!("expected auto, mussa-rosen, bhm or bhm-finite, got {other:?}")).into())
        }
    })
}

fn run_sweep(cfg: &RunConfig) -> Outcome<String> {
    let prior = cfg.prior()?;
    let cost = cfg.cost()?;
    let grid = cfg.b_grid.as_ref().ok_or_else(|| ConfigError::field("b_grid", "required"))?.points()?;
    let rows = sweep(&prior, &cost, &grid, cfg.cap()?, cfg.jobs()?)?;
    for r in rows.iter().filter_map(|r| r.error.as_ref().map(|e| (r.b, e))) {
        warn(&format!("b = {}: {}", r.0, r.1));
    }
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

/// Pools each item's buyers at a mean equal to its breakpoint, top item
/// first, excluding everyone below the lowest pool.
fn implied_posterior(prior: &Prior, menu: &Menu) -> Outcome<PosteriorDistribution> {
    let mut upper = 1.0;
    let mut cutoffs = Vec::new();
    let bps = menu.breakpoints();
    for (k, &w) in bps.iter().enumerate().rev() {
        if w >= upper {
            return Err(Failure::Config(format!("menu: breakpoint {w} leaves no types to pool for item {}", k + 1)));
        }
        let gap = |x: f64| prior.conditional_mean_unchecked(x, upper) - w;
        let x = if gap(0.0) >= 0.0 {
            if k > 0 {
                return Err(Failure::Config(format!("menu: items below item {} cannot be reached", k + 1)));
            }
            0.0
        } else {
            bisect(gap, 0.0, upper, 200).map(|r| r.x).ok_or_else(|| Failure::Solver("no pooling cutoff".into()))?
        };
        cutoffs.push(x);
        upper = x;
    }
    cutoffs.reverse();
    let interior: Vec<f64> = cutoffs.into_iter().filter(|x| *x > CUTOFF_ZERO).collect();
    Ok(PosteriorDistribution::monotone_pool(prior, &interior)?)
}

struct Candidate {
    b: Option<f64>,
    menu: Menu,
    cutoffs: Option<Vec<f64>>,
}

fn read_candidate(source: &MenuSource) -> Outcome<Candidate> {
    if let Some(text) = &source.menu {
        let items: Vec<MenuItem> = serde_json::from_str(text).map_err(|e| ConfigError::field("menu", e))?;
        let menu = Menu::new(items).map_err(|e| ConfigError::field("menu", e))?;
        return Ok(Candidate { b: None, menu, cutoffs: None });
    }
    let Some(path) = &source.input else {
        return Err(ConfigError::field("menu", "pass --menu or --input").into());
    };
    let mut text = String::new();
    let read = if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    read.map_err(|e| ConfigError::field("input", format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| ConfigError::field("input", e))?;
    let items = v.get("items").or_else(|| v.pointer("/menu/items")).ok_or_else(|| {
        ConfigError::field("input", "no menu items found (full-information output has no menu)")
    })?;
    let items: Vec<MenuItem> = serde_json::from_value(items.clone()).map_err(|e| ConfigError::field("input", e))?;
    let menu = Menu::new(items).map_err(|e| ConfigError::field("input", e))?;
    let cutoffs = match v.get("cutoffs") {
        Some(c) => Some(serde_json::from_value(c.clone()).map_err(|e| ConfigError::field("input", e))?),
        None => None,
    };
    Ok(Candidate { b: v.get("b").and_then(Value::as_f64), menu, cutoffs })
}

fn candidate_bias(cfg: &RunConfig, cand: &Candidate) -> Outcome<f64> {
    let with_b = RunConfig { b: cfg.b.or(cand.b), ..RunConfig::default() };
    Ok(with_b.bias()?)
}

fn candidate_posterior(prior: &Prior, cand: &Candidate) -> Outcome<PosteriorDistribution> {
    match &cand.cutoffs {
        Some(c) => {
            let interior: Vec<f64> = c.iter().copied().filter(|x| *x > CUTOFF_ZERO).collect();
            Ok(PosteriorDistribution::monotone_pool(prior, &interior)?)
        }
        None => implied_posterior(prior, &cand.menu),
    }
}

#[derive(Serialize)]
struct CertificateReport {
    passed: bool,
    detail: Option<String>,
    knots: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct VerifyReport {
    b: f64,
    obedience: screening_core::persuasion::ObedienceReport,
    certificate: CertificateReport,
}

fn verify(cfg: &RunConfig, source: &MenuSource) -> Outcome<(String, bool)> {
    let prior = cfg.prior()?;
    let cand = read_candidate(source)?;
    let b = candidate_bias(cfg, &cand)?;
    let g = candidate_posterior(&prior, &cand)?;
    let obedience = check_obedience(&cand.menu, b, &prior, &g, cfg.grid_m()?, cfg.tol()?)?;
    let certificate = match build_certificate(&cand.menu, b, &prior, &g) {
        Ok(c) => CertificateReport { passed: true, detail: None, knots: c.knots, values: c.values },
        Err(e) => CertificateReport { passed: false, detail: Some(e.to_string()), knots: Vec::new(), values: Vec::new() },
    };
    let ok = obedience.obedient;
    Ok((output::to_json(&VerifyReport { b, obedience, certificate }), ok))
}

fn closed_form(cfg: &RunConfig) -> Outcome<String> {
    let b = cfg.bias()?;
    if cfg.prior.as_deref().is_some_and(|p| p != "uniform") || cfg.cost.as_deref().is_some_and(|c| c != "power:2") {
        return Err(ConfigError::field("prior", "closed forms cover only --prior uniform --cost power:2").into());
    }
    Ok(match cfg.cap()? {
        Some(cap) => {
            #[derive(Serialize)]
            struct Restricted {
                b: f64,
                cap: usize,
                #[serde(flatten)]
                menu: Menu,
            }
            output::to_json(&Restricted { b, cap, menu: uq_restricted_menu(b, cap)? })
        }
        None => output::to_json(&uq_unrestricted_menu(b)?),
    })
}

fn oracle(cfg: &RunConfig, source: &MenuSource) -> Outcome<String> {
    let prior = cfg.prior()?;
    let cand = read_candidate(source)?;
    let b = candidate_bias(cfg, &cand)?;
    Ok(output::to_json(&oracle_best_response(&cand.menu, b, &prior, cfg.grid_m()?)?))
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Solve { common, b, regime, cap, items } => {
            let cfg = merged(&common, RunConfig { b, regime, cap, items, ..Default::default() })?;
            let text = solve(&cfg)?;
            emit(&cfg, &text)
        }
        Command::Sweep { common, b_grid, cap, jobs } => {
            let b_grid = b_grid.as_deref().map(GridSpec::parse).transpose()?;
            let cfg = merged(&common, RunConfig { b_grid, cap, jobs, ..Default::default() })?;
            let text = run_sweep(&cfg)?;
            emit(&cfg, &text)
        }
        Command::Verify { common, source, b, grid_m, tol } => {
            let cfg = merged(&common, RunConfig { b, grid_m, tol, ..Default::default() })?;
            let (text, ok) = verify(&cfg, &source)?;
            emit(&cfg, &text)?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::ClosedForm { common, b, cap } => {
            let cfg = merged(&common, RunConfig { b, cap, ..Default::default() })?;
            let text = closed_form(&cfg)?;
            emit(&cfg, &text)
        }
        Command::Compare { common, b } => {
            let cfg = merged(&common, RunConfig { b, ..Default::default() })?;
            let b = cfg.bias()?;
            let text = output::to_json(&compare_regimes(&cfg.prior()?, &cfg.cost()?, b)?);
            emit(&cfg, &text)
        }
        Command::Oracle { common, source, b, grid_m } => {
            let cfg = merged(&common, RunConfig { b, grid_m, ..Default::default() })?;
            let text = oracle(&cfg, &source)?;
            emit(&cfg, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed: oracle gap exceeds tolerance");
            ExitCode::from(4)
        }
    }
}
