use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use margin_paths::config::{self, ExperimentConfig, Overrides};
use margin_paths::experiments;
use margin_paths::report;

#[derive(Parser)]
#[command(
    name = "margin-paths",
    version,
    about = "Path experiments for exponential-loss classifiers over homogeneous predictor sums"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file overlaying the experiment's built-in defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Solver and generator seed
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for results.csv, summary.json, summary.txt
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest scale of the rho grid
    #[arg(long)]
    rho_max: Option<f64>,
    /// Random restarts per solve
    #[arg(long)]
    restarts: Option<usize>,
    /// Certification grid spacing
    #[arg(long)]
    grid_res: Option<f64>,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Command {
    /// Margin gap between the best and the loss-constrained direction
    MarginGap(RunArgs),
    /// Rate at which the constrained direction closes the margin deficit
    HomogRate(RunArgs),
    /// Scale-free margin differences of the log-wrapped predictor
    LogPredictor(RunArgs),
    /// Slow direction convergence of the powered-log predictor
    PowerlogPredictor(RunArgs),
    /// Which blocks of a mixed-degree ensemble the margin path keeps
    EnsembleDiscard(RunArgs),
    /// Squared-bias predictor against nonnegative-intercept SVMs
    SvmBias(RunArgs),
    /// Certified lexicographic refinement of tied margins
    Lexicographic(RunArgs),
    /// Gradient descent against the margin problem's optimality conditions
    OptimizationAlignment(RunArgs),
    /// Ridge path re-solved as constrained problems at its own radii
    RegularizationLink(RunArgs),
    /// Bisection for the cheapest radius matching each recorded loss
    ParetoCheck(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::MarginGap(a) => ("margin_gap", a),
            Command::HomogRate(a) => ("homog_rate", a),
            Command::LogPredictor(a) => ("log_predictor", a),
            Command::PowerlogPredictor(a) => ("powerlog_predictor", a),
            Command::EnsembleDiscard(a) => ("ensemble_discard", a),
            Command::SvmBias(a) => ("svm_bias", a),
            Command::Lexicographic(a) => ("lexicographic", a),
            Command::OptimizationAlignment(a) => ("optimization_alignment", a),
            Command::RegularizationLink(a) => ("regularization_link", a),
            Command::ParetoCheck(a) => ("pareto_check", a),
        }
    }
}

fn prepare(name: &str, flags: &Overrides) -> anyhow::Result<ExperimentConfig> {
    let defaults = experiments::defaults(name)?;
    let file = match &flags.config {
        Some(path) => Some(config::load_file(path)?),
        None => None,
    };
    config::resolve(defaults, file, flags)
}

fn execute(cfg: &ExperimentConfig) -> anyhow::Result<bool> {
    let out = experiments::run(cfg)?;
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.experiment));
    let pass = report::write_artifacts(&dir, &out)?;
    for c in &out.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{}: {} ({})", c.label, verdict, c.detail);
    }
    println!(
        "{}: wrote {}",
        if pass { "PASS" } else { "FAIL" },
        dir.join("summary.txt").display()
    );
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();
    let flags = Overrides {
        config: args.config.clone(),
        seed: args.seed,
        out: args.out.clone(),
        rho_max: args.rho_max,
        restarts: args.restarts,
        grid_res: args.grid_res,
    };
    // bad flags and unknown subcommands exit 2 inside clap; a config file
    // that fails to load or contradicts the invocation is the same class
    let cfg = match prepare(name, &flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
