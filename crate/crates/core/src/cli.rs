//! The `accmarket` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::dynamics::analytic::run_analytic_dynamics;
use crate::dynamics::studies::{
    consecutive_pairs, run_asymmetric_power_study, run_capacity_study, run_order_of_play_study, run_overlap_sweep,
};
use crate::dynamics::{run_dynamics, DynamicsConfig};
use crate::error::{Error, Result};
use crate::output::{self, decomposition_legend, document, OutDir, Table};
use crate::verify::{run_suite, Scale};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

const SIMULATE_HELP: &str = "\
Writes to --out:
  trajectory.csv  one row per logged state (initialization, then every adopted move)
      seed, round, mover (-1 = initialization), mu_0..mu_{n-1}, welfare,
      hhi (0 when welfare is 0), potential
    with dynamics.analytic = true the columns are
      seed, round, mover, mu_0, mu_1, welfare, tau_0, tau_1
  outcome.json    final train/test outcomes, subset decomposition keyed by provider
                  bitmask (with legend), classifiers, config echo, seed, version
  schema.json     column descriptions";

const SWEEP_HELP: &str = "\
Writes to --out:
  sweep.csv   one row per spec
      seed, index, a, sigma_neg, sigma_pos, prior, h_opt, tau1, tau2, accuracy1,
      accuracy2, share1, share2, welfare, hhi (0 when welfare is 0), converged,
      rounds, low_level_exists, high_level_exists, boundary_hit
    booleans are 0/1; infinite thresholds are written as inf / -inf
  sweep.json  the same rows plus config echo, seed, version
  schema.json column descriptions";

const ORDER_HELP: &str = "\
Writes to --out:
  order_runs.csv     one row per repetition
      seed, mu_pos0..mu_pos{n-1} (final share by order position), converged, rounds
  order_summary.csv  one row per compared position pair
      seed, later, earlier, count, mean, std_error, min, q1, median, q3, max
    statistics describe mu[later] - mu[earlier]
  order_study.json   runs, summaries, config echo, seed, version
  schema.json        column descriptions";

const CAPACITY_HELP: &str = "\
Writes to --out:
  capacity.csv   one row per (seed, feature count, round)
      seed, k, round, welfare_train, welfare_test (-1 without a split)
  capacity.json  runs with final shares, config echo, seed, version
  schema.json    column descriptions";

const ASYM_HELP: &str = "\
Writes to --out:
  asym.csv   one row per seed
      seed, delta_self, delta_next_best, adv_mu_0.., base_mu_0..
  asym.json  runs, mean deltas, config echo, seed, version
  schema.json column descriptions";

const VERIFY_HELP: &str = "\
Prints one PASS/FAIL line per property, with a counterexample for each failure.
Exit status 0 when every property holds, 3 otherwise.";

#[derive(Parser, Debug)]
#[command(name = "accmarket", version, about = "Competing classifiers under best-response dynamics")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run best-response dynamics once.
    #[command(after_long_help = SIMULATE_HELP)]
    Simulate(RunArgs),
    /// Analytic or sampled two-threshold equilibria over a range of class offsets.
    #[command(after_long_help = SWEEP_HELP)]
    Sweep(RunArgs),
    /// Final share by position in the order of play, over repeated draws.
    #[command(name = "order-study", after_long_help = ORDER_HELP)]
    OrderStudy(RunArgs),
    /// Welfare per round as the number of visible features varies.
    #[command(after_long_help = CAPACITY_HELP)]
    Capacity(RunArgs),
    /// Share gained by one provider from extra features.
    #[command(after_long_help = ASYM_HELP)]
    Asym(RunArgs),
    /// Run the property suites.
    #[command(after_long_help = VERIFY_HELP)]
    Verify {
        #[arg(long, default_value = "quick")]
        scale: Scale,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Only run properties whose name contains this string.
        #[arg(long)]
        only: Option<String>,
        /// Also write verify.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure of a command, tagged with its exit status.
enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e),
            other => Failure::Runtime(other),
        }
    }
}

fn config_stage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Config)
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Simulate(a) => with_config(&a, quiet, simulate),
        Command::Sweep(a) => with_config(&a, quiet, sweep),
        Command::OrderStudy(a) => with_config(&a, quiet, order_study),
        Command::Capacity(a) => with_config(&a, quiet, capacity),
        Command::Asym(a) => with_config(&a, quiet, asym),
        Command::Verify { scale, seed, only, out } => return verify(scale, seed, only.as_deref(), out, quiet),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("ACCMARKET_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("ACCMARKET_THREADS must be a positive integer, got {v:?}")))?;
    // A second call in the same process (tests) finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

struct Ctx {
    cfg: RunConfig,
    text: String,
    out: OutDir,
    quiet: bool,
}

impl Ctx {
    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn document(&self, kind: &str, result: impl Serialize) -> serde_json::Value {
        document(kind, self.seed(), &self.text, result)
    }

    fn write_tables(&self, tables: &[(&str, &Table)]) -> Result<()> {
        for (name, t) in tables {
            self.out.table(name, t)?;
        }
        self.out.json("schema.json", &output::schema(tables, self.seed()))
    }

    fn source(&self) -> Result<impl Fn(u64) -> Result<(Dataset, Option<Dataset>)> + Sync + '_> {
        let base = self.cfg.base_dataset()?;
        Ok(move |seed| self.cfg.draw(base.as_ref(), seed))
    }
}

fn with_config(
    a: &RunArgs,
    quiet: bool,
    command: fn(&Ctx) -> std::result::Result<(), Failure>,
) -> std::result::Result<(), Failure> {
    let (mut cfg, text) = config_stage(RunConfig::load(&a.config))?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out = OutDir::create(&a.out).map_err(Failure::Runtime)?;
    command(&Ctx { cfg, text, out, quiet })
}

fn simulate(ctx: &Ctx) -> std::result::Result<(), Failure> {
    if ctx.cfg.dynamics.analytic {
        let acfg = config_stage(ctx.cfg.analytic())?;
        let t = run_analytic_dynamics(&acfg)?;
        let table = output::analytic_trajectory_table(&t, ctx.seed());
        ctx.write_tables(&[("trajectory.csv", &table)])?;
        let last = t.last();
        ctx.out.json(
            "outcome.json",
            &ctx.document(
                "simulate",
                json!({
                    "mode": "analytic",
                    "spec": acfg.spec,
                    "converged": t.converged,
                    "adopted_per_round": t.adopted,
                    "initial": t.first(),
                    "final": last,
                }),
            ),
        )?;
        ctx.note(format!(
            "analytic: thresholds {:?}, shares {:?}, welfare {:.6}, converged {}",
            last.taus, last.shares, last.welfare, t.converged
        ));
        return Ok(());
    }
    let dcfg = config_stage(ctx.cfg.dynamics())?;
    let base = ctx.cfg.base_dataset()?;
    let (train, test) = ctx.cfg.draw(base.as_ref(), ctx.seed())?;
    let t = run_dynamics(&dcfg, &train, test.as_ref())?;
    let table = output::trajectory_table(&t, ctx.seed());
    ctx.write_tables(&[("trajectory.csv", &table)])?;
    let fin = t.final_train();
    ctx.out.json(
        "outcome.json",
        &ctx.document(
            "simulate",
            json!({
                "mode": "sampled",
                "n": t.n,
                "train_size": train.len(),
                "test_size": test.as_ref().map(Dataset::len),
                "dim": train.dim(),
                "feature_restriction": "each provider sees the leading `features` columns",
                "order": t.order,
                "converged": t.converged,
                "rounds_played": t.rounds_played(),
                "adopted_moves": t.adopted_moves(),
                "decomposition_legend": decomposition_legend(t.n),
                "initial_train": t.initial_train(),
                "final_train": fin,
                "final_test": t.final_test(),
                "initial_classifiers": t.initial,
                "classifiers": t.classifiers,
            }),
        ),
    )?;
    ctx.note(format!(
        "{} providers, {} rounds, {} adopted moves, converged {}: shares {:?}, welfare {:.6}",
        t.n,
        t.rounds_played(),
        t.adopted_moves(),
        t.converged,
        fin.shares,
        fin.welfare
    ));
    Ok(())
}

fn sweep(ctx: &Ctx) -> std::result::Result<(), Failure> {
    let (specs, scfg) = config_stage(ctx.cfg.sweep_specs())?;
    let rows = run_overlap_sweep(&specs, &scfg)?;
    let table = output::sweep_table(&rows, ctx.seed());
    ctx.write_tables(&[("sweep.csv", &table)])?;
    ctx.out.json("sweep.json", &ctx.document("sweep", json!({ "config": scfg, "rows": rows })))?;
    ctx.note(format!("{} sweep points written", rows.len()));
    Ok(())
}

fn study_dynamics(ctx: &Ctx) -> std::result::Result<DynamicsConfig, Failure> {
    config_stage(ctx.cfg.dynamics())
}

fn order_study(ctx: &Ctx) -> std::result::Result<(), Failure> {
    let section = config_stage(
        ctx.cfg
            .order_study
            .clone()
            .ok_or_else(|| Error::Config("missing [order_study] section".into())),
    )?;
    let dcfg = study_dynamics(ctx)?;
    let pairs: Vec<(usize, usize)> = match &section.pairs {
        Some(p) => p.iter().map(|&[a, b]| (a, b)).collect(),
        None => consecutive_pairs(dcfg.n()),
    };
    let source = ctx.source()?;
    let study = run_order_of_play_study(&dcfg, &source, &pairs, section.repetitions, ctx.seed())?;
    let runs = output::order_runs_table(&study);
    let summary = output::order_summary_table(&study, ctx.seed());
    ctx.write_tables(&[("order_runs.csv", &runs), ("order_summary.csv", &summary)])?;
    ctx.out.json("order_study.json", &ctx.document("order_study", &study))?;
    for p in &study.pairs {
        if let Some(s) = &p.summary {
            ctx.note(format!(
                "mu[{}] - mu[{}]: mean {:.6} (se {:.6}) over {} runs",
                p.later, p.earlier, s.mean, s.std_error, s.count
            ));
        }
    }
    Ok(())
}

fn capacity(ctx: &Ctx) -> std::result::Result<(), Failure> {
    let section = config_stage(
        ctx.cfg
            .capacity
            .clone()
            .ok_or_else(|| Error::Config("missing [capacity] section".into())),
    )?;
    let dcfg = study_dynamics(ctx)?;
    let source = ctx.source()?;
    let runs = run_capacity_study(&dcfg, &source, &section.feature_counts, &ctx.cfg.seeds(section.seeds))?;
    let table = output::capacity_table(&runs);
    ctx.write_tables(&[("capacity.csv", &table)])?;
    ctx.out.json("capacity.json", &ctx.document("capacity", &runs))?;
    for r in &runs {
        ctx.note(format!(
            "seed {} k={}: welfare {:.6} -> {:.6}",
            r.seed, r.k, r.welfare_initial, r.welfare_final
        ));
    }
    Ok(())
}

fn asym(ctx: &Ctx) -> std::result::Result<(), Failure> {
    let section = config_stage(
        ctx.cfg
            .asym
            .clone()
            .ok_or_else(|| Error::Config("missing [asym] section".into())),
    )?;
    let dcfg = study_dynamics(ctx)?;
    let source = ctx.source()?;
    let study = run_asymmetric_power_study(
        &dcfg,
        &source,
        section.better,
        section.worse,
        section.position,
        &ctx.cfg.seeds(section.seeds),
    )?;
    let table = output::asym_table(&study);
    ctx.write_tables(&[("asym.csv", &table)])?;
    ctx.out.json("asym.json", &ctx.document("asym", &study))?;
    if let (Some(s), Some(n)) = (&study.delta_self, &study.delta_next_best) {
        ctx.note(format!(
            "provider {}: mean delta_self {:.6}, mean delta_next_best {:.6} over {} seeds",
            study.provider, s.mean, n.mean, s.count
        ));
    }
    Ok(())
}

fn verify(scale: Scale, seed: u64, only: Option<&str>, out: Option<PathBuf>, quiet: bool) -> i32 {
    let checks = run_suite(scale, seed, only);
    if checks.is_empty() {
        eprintln!("no property matches {:?}", only.unwrap_or(""));
        return EXIT_CONFIG;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        if !c.passed || !quiet {
            println!("{c}");
        }
    }
    if !quiet {
        println!("{} of {} properties passed ({scale} scale)", checks.len() - failed, checks.len());
    }
    if let Some(dir) = out {
        let written = OutDir::create(dir).and_then(|d| {
            d.json(
                "verify.json",
                &json!({ "version": output::VERSION, "seed": seed, "scale": scale, "checks": checks }),
            )
        });
        if let Err(e) = written {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    }
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_PROPERTY
    }
}
