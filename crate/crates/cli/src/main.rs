use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use burnlab::audit::{audit_corpus, audit_profiles, AuditRow};
use burnlab::benchmark::{benchmark_g, full_surplus};
use burnlab::dist::{ValuationProfile, ValueDistribution};
use burnlab::ironing::{iron, iron_clipped, DEFAULT_GRID};
use burnlab::mechanisms::{
    mixed_vickrey_lottery, BayesOptimal, LogPrice, Mechanism, MixedVickreyLottery, PLottery, PqLottery, Rsol,
    Vickrey,
};
use burnlab::simlab::{monte_carlo_on_profile, run_experiment, ExperimentConfig, ExperimentName, MechanismEval};

#[derive(Parser)]
#[command(name = "burnlab", version, about = "Money-burning mechanism simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechName {
    Plottery,
    Pqlottery,
    Vickrey,
    Bayes,
    Rsol,
    Mix,
    Logprice,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the ironed virtual valuation of a prior.
    Iron {
        #[arg(long)]
        dist: ValueDistribution,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Quantile clip at both ends of the grid.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Expected residual surplus of a mechanism on a profile.
    Eval {
        #[arg(long, value_enum)]
        mech: MechName,
        /// One value per line.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monte-Carlo over the mechanism's randomness instead of the exact expectation.
        #[arg(long, conflicts_with = "exact")]
        reps: Option<usize>,
        #[arg(long)]
        exact: bool,
        /// Prior for `bayes`.
        #[arg(long)]
        dist: Option<ValueDistribution>,
    },
    /// Benchmark G and the best single-price lottery of a profile.
    Benchmark {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// DSIC and payment-identity audit on random profiles from a prior.
    Audit {
        #[arg(long, value_enum)]
        mech: MechName,
        #[arg(long)]
        dist: ValueDistribution,
        /// Largest profile size in the audit corpus.
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        profiles: usize,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Run a named experiment and write its CSV.
    Experiment {
        #[arg(long)]
        name: ExperimentName,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_profile(path: &Path) -> Result<ValuationProfile> {
    ValuationProfile::from_path(path).with_context(|| format!("reading profile {}", path.display()))
}

/// Mechanism plus its parameter string for output rows. Default prices for
/// audits come from quantiles of the prior.
fn build_mechanism(
    name: MechName,
    k: usize,
    p: Option<f64>,
    q: Option<f64>,
    dist: Option<&ValueDistribution>,
) -> Result<(Box<dyn Mechanism>, String)> {
    let price = |given: Option<f64>, quantile: f64, flag: &str| match (given, dist) {
        (Some(x), _) => Ok(x),
        (None, Some(d)) => Ok(d.quantile(quantile)),
        (None, None) => bail!("--{flag} is required"),
    };
    Ok(match name {
        MechName::Plottery => {
            let p = price(p, 0.5, "p")?;
            (Box::new(PLottery::new(k, p)?), format!("p={p}"))
        }
        MechName::Pqlottery => {
            let (p, q) = (price(p, 0.8, "p")?, price(q, 0.3, "q")?);
            (Box::new(PqLottery::new(k, p, q)?), format!("p={p};q={q}"))
        }
        MechName::Vickrey => (Box::new(Vickrey::new(k)?), String::new()),
        MechName::Logprice => (Box::new(LogPrice::new(k)?), String::new()),
        MechName::Rsol => (Box::new(Rsol::new(k)?), String::new()),
        MechName::Mix => {
            if k != 1 {
                bail!("mix sells a single unit; use --k 1");
            }
            (Box::new(MixedVickreyLottery), String::new())
        }
        MechName::Bayes => {
            let d = dist.context("bayes needs --dist")?;
            let iv = iron(d, DEFAULT_GRID)?;
            (Box::new(BayesOptimal::new(Arc::new(iv), k)?), format!("dist={}", d.name()))
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn eval(
    mech: MechName,
    profile: &Path,
    k: usize,
    p: Option<f64>,
    q: Option<f64>,
    seed: u64,
    reps: Option<usize>,
    dist: Option<ValueDistribution>,
) -> Result<()> {
    let profile = read_profile(profile)?;
    let (m, params) = match (mech, dist.as_ref()) {
        // Prices only default from a prior for audits.
        (MechName::Plottery | MechName::Pqlottery, _) => build_mechanism(mech, k, p, q, None)?,
        (_, d) => build_mechanism(mech, k, p, q, d)?,
    };
    let result: MechanismEval = match reps {
        Some(reps) => monte_carlo_on_profile(m.as_ref(), &profile, reps, seed)?,
        None if mech == MechName::Mix => mixed_vickrey_lottery(&profile)?,
        None => MechanismEval::exact(m.expected_residual(profile.values())?),
    };
    let (lo, hi) = result.interval();
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["mech", "n", "k", "params", "expected_residual", "ci_lo", "ci_hi", "seed"])?;
    let seed = result.seed.map(|s| s.to_string()).unwrap_or_default();
    w.write_record([
        m.name(),
        profile.len().to_string(),
        k.to_string(),
        params,
        result.mean.to_string(),
        lo.to_string(),
        hi.to_string(),
        seed,
    ])?;
    w.flush()?;
    Ok(())
}

fn benchmark(profile: &Path, k: usize) -> Result<()> {
    let profile = read_profile(profile)?;
    let r = benchmark_g(&profile, k)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["G", "p", "q", "best_single_value", "best_single_p", "full_surplus"])?;
    w.write_record(
        [r.value, r.best_p, r.best_q, r.single_value, r.best_single_p, full_surplus(&profile, k)].map(|x| x.to_string()),
    )?;
    w.flush()?;
    Ok(())
}

/// Returns whether every check passed.
#[allow(clippy::too_many_arguments)]
fn audit(
    mech: MechName,
    dist: &ValueDistribution,
    n: usize,
    k: usize,
    seed: u64,
    count: usize,
    p: Option<f64>,
    q: Option<f64>,
) -> Result<bool> {
    if n == 0 || count == 0 {
        bail!("--n and --profiles must be >= 1");
    }
    let (m, _) = build_mechanism(mech, k, p, q, Some(dist))?;
    let mut profiles = audit_corpus(dist, count, n, seed);
    if mech == MechName::Mix {
        profiles.retain(|v| v.len() == 2);
        if profiles.is_empty() {
            bail!("mix needs two-agent profiles; use --n 2 or larger");
        }
    }
    let rows = audit_profiles(m.as_ref(), dist, &profiles)?;
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(rows.iter().all(|r: &AuditRow| r.passed))
}

fn experiment(name: ExperimentName, config: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let cfg = match config {
        Some(path) => ExperimentConfig::from_path(path).with_context(|| format!("reading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(configured) = cfg.experiment {
        if configured != name {
            bail!("config names experiment {configured}, command line says {name}");
        }
    }
    let out_path = out.map(Path::to_path_buf).or_else(|| cfg.out.clone());
    let mut sink = output(out_path.as_deref())?;
    run_experiment(name, &cfg, &mut sink)?;
    sink.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Iron { dist, grid, out, eps } => {
            let iv = match eps {
                Some(eps) => iron_clipped(&dist, grid, eps)?,
                None => iron(&dist, grid)?,
            };
            let mut sink = output(out.as_deref())?;
            iv.write_csv(&mut sink)?;
            sink.flush()?;
        }
        Command::Eval { mech, profile, k, p, q, seed, reps, exact: _, dist } => {
            eval(mech, &profile, k, p, q, seed, reps, dist)?
        }
        Command::Benchmark { profile, k } => benchmark(&profile, k)?,
        Command::Audit { mech, dist, n, k, seed, profiles, p, q } => {
            return audit(mech, &dist, n, k, seed, profiles, p, q);
        }
        Command::Experiment { name, config, out } => experiment(name, config.as_deref(), out.as_deref())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
