use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delayed_hedge_cli::config::NList;
use delayed_hedge_cli::{run_config, ExperimentConfig, Kind, Outcome, RunError, THREADS_ENV};

#[derive(Parser)]
#[command(
    name = "delayed-hedge",
    version,
    about = "Indifference pricing under delayed information"
)]
struct Cli {
    /// Worker threads for the parallel parts of each experiment.
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    payoff: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Write artifacts here and print a one-line JSON summary instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Super-replication price and buy-and-hold hedge.
    Envelope {
        #[command(flatten)]
        common: Common,
    },
    /// Vanishing-delay limit price at risk aversion A.
    PriceLimit {
        #[command(flatten)]
        common: Common,
        #[arg(long = "A")]
        a: f64,
        #[arg(long, default_value_t = 64)]
        nodes: usize,
    },
    /// Discrete-time price with N delay periods.
    PriceDiscrete {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N")]
        n: usize,
        #[arg(long)]
        lambda: f64,
        /// Trades per delay period.
        #[arg(long, default_value_t = 1)]
        substeps: usize,
    },
    /// Discrete prices at risk aversion A·N/T against the limit price.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long = "A")]
        a: f64,
        #[arg(long = "N", value_delimiter = ',', default_value = "4,8,16,32")]
        n: Vec<usize>,
        #[arg(long, default_value_t = delayed_hedge::dp::STUDY_SUBSTEPS)]
        substeps: usize,
    },
    /// Monte Carlo of a relaxed martingale measure.
    SimulateDual {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// Payoff for the weak-duality bound; zero when absent.
        #[arg(long)]
        payoff: Option<PathBuf>,
        #[arg(long = "H")]
        h: f64,
        #[arg(long = "A")]
        a: f64,
        #[arg(long, default_value_t = 20_000)]
        paths: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every acceptance check, with a pass/fail table.
    AcceptanceSuite {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a TOML experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn with_common(kind: Kind, c: Common) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.payoff = Some(c.payoff);
    cfg.params = Some(c.params);
    cfg.out = c.out;
    cfg
}

fn build(command: Command) -> Result<ExperimentConfig, RunError> {
    Ok(match command {
        Command::Envelope { common } => with_common(Kind::Envelope, common),
        Command::PriceLimit { common, a, nodes } => {
            let mut cfg = with_common(Kind::Limit, common);
            cfg.a = Some(a);
            cfg.nodes = Some(nodes);
            cfg
        }
        Command::PriceDiscrete {
            common,
            n,
            lambda,
            substeps,
        } => {
            let mut cfg = with_common(Kind::Discrete, common);
            cfg.n = Some(NList::One(n));
            cfg.lambda = Some(lambda);
            cfg.substeps = Some(substeps);
            cfg
        }
        Command::Convergence { common, a, n, substeps } => {
            let mut cfg = with_common(Kind::Convergence, common);
            cfg.a = Some(a);
            cfg.n = Some(NList::Many(n));
            cfg.substeps = Some(substeps);
            cfg
        }
        Command::SimulateDual {
            policy,
            params,
            payoff,
            h,
            a,
            paths,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::new(Kind::DualSim);
            cfg.policy = Some(policy);
            cfg.params = Some(params);
            cfg.payoff = payoff;
            cfg.h = Some(h);
            cfg.a = Some(a);
            cfg.paths = Some(paths);
            cfg.seed = Some(seed);
            cfg.out = out;
            cfg
        }
        Command::AcceptanceSuite { seed, out } => {
            let mut cfg = ExperimentConfig::new(Kind::AcceptanceSuite);
            cfg.seed = Some(seed);
            cfg.out = out;
            cfg
        }
        Command::Run { config } => ExperimentConfig::load(&config)?,
    })
}

fn report(outcome: &Outcome, written: &[PathBuf], to_files: bool) {
    if outcome.kind == Kind::AcceptanceSuite {
        for c in &outcome.checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if to_files {
        println!("{}", outcome.summary(written));
    } else if outcome.kind == Kind::AcceptanceSuite {
        println!("{}", outcome.summary(&[]));
    } else {
        print!("{}", outcome.artifacts[0].contents);
        for c in outcome.checks.iter().filter(|c| !c.passed) {
            eprintln!("check {} failed: {}", c.name, c.detail);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = build(cli.command).and_then(|cfg| {
        let to_files = cfg.out.is_some();
        run_config(&cfg).map(|(o, w)| (o, w, to_files))
    });
    match result {
        Ok((outcome, written, to_files)) => {
            report(&outcome, &written, to_files);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
