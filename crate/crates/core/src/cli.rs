use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use causal_avc::acceptance::{run_criterion, CRITERIA};
use causal_avc::capacity::compute_c_k;
use causal_avc::codec::{iterative_decode, Codebook, Vgrid};
use causal_avc::config::RunConfig;
use causal_avc::harness::{
    estimate_error_with, sweep, write_sweep_csv, write_trials_csv, Experiment, Strategy, SweepAxis,
};
use causal_avc::model::{validate_avc, AvcSpec, ChunkScheme, RawChannel, SlackSchedule};

#[derive(Debug, Parser)]
#[command(
    name = "causal-avc",
    version,
    about = "Causal AVC capacity and coding experiments"
)]
pub struct Cli {
    /// Worker threads [default: logical cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a channel file against the structural assumptions.
    Validate {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Evaluate C_K and its brackets, one CSV row per budget.
    Capacity {
        #[command(flatten)]
        common: Common,
        /// Number of chunks K.
        #[arg(long = "k", visible_alias = "K", default_value_t = 4)]
        k: usize,
        /// Budgets to evaluate [default: the channel's budget].
        #[arg(long, value_delimiter = ',')]
        budget: Vec<f64>,
    },
    /// Build a codebook and write it as JSON.
    Codebook {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Decode one output sequence with a stored codebook.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        codebook: PathBuf,
        /// Output symbols, comma separated or as one string of one-character labels.
        #[arg(long)]
        y: String,
        /// Budget the decoder assumes [default: the channel's budget].
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Plan the configured jammer, print the plan and write per-trial flags as CSV.
    Attack {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Estimate the error probability; per-trial CSV goes to --out.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// One experiment per grid value, as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long, value_enum, default_value_t = SweepAxis::Budget)]
        axis: SweepAxis,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
    },
    /// Run the acceptance criteria; exits 3 when any fails.
    Check {
        /// Criterion numbers to run [default: all].
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Channel description (TOML).
    #[arg(long)]
    channel: PathBuf,
    /// Run configuration (TOML) with [experiment], [codec], [attack], [search] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config entry, e.g. --set codec.tol=0.05.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "k", visible_alias = "K")]
    k: Option<usize>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
    #[arg(long)]
    budget: Option<f64>,
}

/// Failure with its exit code.
enum Failure {
    Config(String),
    Check(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Check(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

struct Resolved {
    avc: AvcSpec,
    cfg: RunConfig,
    out: Option<PathBuf>,
}

fn load_channel(path: &Path) -> Result<AvcSpec, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read channel {}: {e}", path.display())))?;
    let raw = RawChannel::from_toml_str(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    validate_avc(&raw).map_err(config_err)
}

fn resolve(common: &Common, exp: Option<&ExperimentArgs>) -> Result<Resolved, Failure> {
    let avc = load_channel(&common.channel)?;
    let base = match &common.config {
        Some(p) => RunConfig::load(p).map_err(config_err)?,
        None => RunConfig::default(),
    };
    let mut cfg = base.with_overrides(&common.set).map_err(config_err)?;
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
        cfg.search.seed = seed;
    }
    if let Some(e) = exp {
        let x = &mut cfg.experiment;
        x.n = e.n.unwrap_or(x.n);
        x.k = e.k.unwrap_or(x.k);
        x.rate = e.rate.unwrap_or(x.rate);
        x.trials = e.trials.unwrap_or(x.trials);
        x.strategy = e.strategy.unwrap_or(x.strategy);
        x.budget = e.budget.or(x.budget);
    }
    eprintln!(
        "# channel {} ({}), budget {}\n# resolved config\n{}",
        common.channel.display(),
        avc.name(),
        avc.budget(),
        cfg.to_toml_string()
    );
    Ok(Resolved {
        avc,
        cfg,
        out: common.out.clone(),
    })
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p)
                .map_err(|e| runtime_err(format!("cannot write {}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

#[derive(Serialize)]
struct CapacityRow {
    budget: f64,
    k: usize,
    c_lower: f64,
    c_hat: f64,
    c_upper: f64,
    /// Chunk input laws joined by `|`, entries by `/`.
    argmax: String,
}

fn parse_outputs(avc: &AvcSpec, y: &str) -> Result<Vec<usize>, Failure> {
    let labels: Vec<String> = if y.contains(',') {
        y.split(',').map(|s| s.trim().to_string()).collect()
    } else {
        y.chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect()
    };
    labels
        .iter()
        .map(|l| {
            avc.raw()
                .outputs
                .iter()
                .position(|o| o == l)
                .ok_or_else(|| Failure::Config(format!("unknown output symbol {l:?}")))
        })
        .collect()
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { channel } => {
            let avc = load_channel(&channel)?;
            println!(
                "{}: valid, |X| = {}, |S| = {}, |Y| = {}, stand-down state {}, budget {}",
                avc.name(),
                avc.nx(),
                avc.ns(),
                avc.ny(),
                avc.raw().states[avc.s0()],
                avc.budget()
            );
        }
        Command::Capacity { common, k, budget } => {
            let r = resolve(&common, None)?;
            if k == 0 {
                return Err(Failure::Config("--k must be at least 1".into()));
            }
            let budgets = if budget.is_empty() {
                vec![r.avc.budget()]
            } else {
                budget
            };
            let mut w = csv::Writer::from_writer(output(&r.out)?);
            for b in budgets {
                let res = compute_c_k(&r.avc.with_budget(b), k, &r.cfg.search);
                let argmax = res
                    .argmax_input
                    .rows()
                    .iter()
                    .map(|p| {
                        p.probs()
                            .iter()
                            .map(|x| format!("{x:.4}"))
                            .collect::<Vec<_>>()
                            .join("/")
                    })
                    .collect::<Vec<_>>()
                    .join("|");
                w.serialize(CapacityRow {
                    budget: b,
                    k,
                    c_lower: res.lower,
                    c_hat: res.value,
                    c_upper: res.upper,
                    argmax,
                })
                .map_err(runtime_err)?;
            }
            w.flush().map_err(runtime_err)?;
        }
        Command::Codebook { common, exp } => {
            let r = resolve(&common, Some(&exp))?;
            let e = prepare(&r, Strategy::StandDown)?;
            writeln!(output(&r.out)?, "{}", e.codebook.to_json()).map_err(runtime_err)?;
        }
        Command::Decode {
            common,
            codebook,
            y,
            budget,
        } => {
            let r = resolve(&common, None)?;
            let text = std::fs::read_to_string(&codebook).map_err(|e| {
                Failure::Config(format!("cannot read codebook {}: {e}", codebook.display()))
            })?;
            let cb = Codebook::from_json(&text).map_err(config_err)?;
            if cb.params.nx != r.avc.nx() {
                return Err(Failure::Config(
                    "codebook alphabet does not match the channel".into(),
                ));
            }
            let y = parse_outputs(&r.avc, &y)?;
            if y.len() != cb.params.n {
                return Err(Failure::Config(format!(
                    "expected {} output symbols, got {}",
                    cb.params.n,
                    y.len()
                )));
            }
            let avc = match budget.or(r.cfg.experiment.budget) {
                Some(b) => r.avc.with_budget(b),
                None => r.avc.clone(),
            };
            let scheme = ChunkScheme::new(cb.params.n, cb.params.k).map_err(config_err)?;
            let x = &r.cfg.experiment;
            let slack = SlackSchedule::new(&scheme, avc.nx(), avc.ns(), x.delta_min, x.delta0);
            let vgrid = Vgrid::build(&cb, &avc, &slack, r.cfg.codec.vgrid_resolution);
            let tol = r.cfg.codec.tolerance(scheme.chunk_len());
            let outcome = iterative_decode(&y, &cb, &avc, tol, &vgrid);
            writeln!(output(&r.out)?, "{}", to_json(&outcome)).map_err(runtime_err)?;
        }
        Command::Attack { common, exp } => {
            let r = resolve(&common, Some(&exp))?;
            let e = prepare(&r, r.cfg.experiment.strategy)?;
            println!("{}", to_json(&e.jammer));
            let rep = estimate_error_with(&e, &e.decoder()).map_err(runtime_err)?;
            if let Some(p) = &r.out {
                write_trials_csv(&rep.records, output(&Some(p.clone()))?).map_err(runtime_err)?;
            }
            eprintln!(
                "attack failures {}/{}, cost violations {:.3}",
                rep.attack_failures, rep.trials, rep.cost_violation_rate
            );
        }
        Command::Simulate { common, exp, json } => {
            let r = resolve(&common, Some(&exp))?;
            let e = prepare(&r, r.cfg.experiment.strategy)?;
            let mut rep = estimate_error_with(&e, &e.decoder()).map_err(runtime_err)?;
            if let Some(p) = &r.out {
                write_trials_csv(&rep.records, output(&Some(p.clone()))?).map_err(runtime_err)?;
            }
            eprintln!("# runtime {:.2} s", rep.runtime_secs);
            if json {
                rep.records.clear();
                println!("{}", to_json(&rep));
            } else {
                println!(
                    "trials {}  messages {}  seeds {}\navg error {:.4}  95% CI [{:.4}, {:.4}]  max error {:.4}\n\
                     decoded {}  aborts {}  erasures {}  attack failures {}  cost violations {:.4}\n\
                     list bound {}  within bound {:.4}  list sizes {:?}  alpha used {:?}",
                    rep.trials,
                    rep.messages,
                    rep.seeds,
                    rep.avg_error,
                    rep.ci_low,
                    rep.ci_high,
                    rep.max_error,
                    rep.decoded,
                    rep.aborts,
                    rep.erasures,
                    rep.attack_failures,
                    rep.cost_violation_rate,
                    rep.list_bound,
                    rep.list_within_bound,
                    rep.list_size_hist,
                    rep.alpha_hist
                );
            }
        }
        Command::Sweep {
            common,
            exp,
            axis,
            grid,
        } => {
            let r = resolve(&common, Some(&exp))?;
            let c = &r.cfg;
            let rows = sweep(
                &r.avc,
                axis,
                &grid,
                &c.experiment,
                &c.codec,
                &c.attack,
                &c.search,
            )
            .map_err(|e| match e {
                causal_avc::harness::HarnessError::EmptyGrid => config_err(e),
                e => runtime_err(e),
            })?;
            write_sweep_csv(&rows, output(&r.out)?).map_err(runtime_err)?;
        }
        Command::Check { criteria } => {
            let ids: Vec<usize> = if criteria.is_empty() {
                (1..=CRITERIA).collect()
            } else {
                criteria
            };
            if let Some(bad) = ids.iter().find(|&&i| !(1..=CRITERIA).contains(&i)) {
                return Err(Failure::Config(format!(
                    "no criterion {bad}; valid are 1..={CRITERIA}"
                )));
            }
            let mut failed = 0;
            for id in ids {
                let res = run_criterion(id);
                println!("{res}");
                failed += usize::from(!res.passed);
            }
            if failed > 0 {
                return Err(Failure::Check(format!("{failed} criteria failed")));
            }
        }
    }
    Ok(())
}

fn prepare(r: &Resolved, strategy: Strategy) -> Result<Experiment, Failure> {
    let mut x = r.cfg.experiment.clone();
    x.strategy = strategy;
    Experiment::prepare(&r.avc, &x, &r.cfg.codec, &r.cfg.attack).map_err(config_err)
}

pub fn main_with(cli: Cli) -> ExitCode {
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) | Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Check(m) => eprintln!("{m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
