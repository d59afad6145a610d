use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mite_cli::config::{BackendKind, ModelKind, RunConfig, Solution, SweepConfig, SweepVariable, Switch};
use mite_cli::{cmd_run, cmd_sweep, cmd_verify, load_run_config, load_sweep_config, CliError, VerifyOptions};

#[derive(Parser)]
#[command(name = "mite", version, about = "Deterministic imaginary time evolution by weak measurement and correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ensemble of trajectories.
    Run(RunArgs),
    /// Mean time to 90% fidelity across epsilon or the search dimension.
    Sweep(SweepArgs),
    /// Check completeness, unitarity, stabilization, Trotter scaling and the search identities.
    Verify {
        #[arg(long, hide = true)]
        corrupt_kraus: bool,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(short = 'L', long)]
    qubits: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Solution index, or "random".
    #[arg(long)]
    solution: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    epsilon_bound: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    correction: Option<Switch>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { cfg.$f = v; })* };
        }
        set!(model, qubits, lambda, omega, dim, epsilon, epsilon_bound, trajectories, seed, correction, backend, out);
        if self.steps.is_some() {
            cfg.steps = self.steps;
        }
        if let Some(s) = &self.solution {
            cfg.solution = s.parse().map_or_else(|_| Solution::Named(s.clone()), Solution::Index);
        }
    }

    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => load_run_config(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    variable: Option<SweepVariable>,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    run: RunArgs,
}

impl SweepArgs {
    fn load(&self) -> Result<SweepConfig, CliError> {
        let mut sweep = match &self.run.config {
            Some(path) => load_sweep_config(path)?,
            None => SweepConfig {
                variable: self.variable.unwrap_or(SweepVariable::Epsilon),
                values: Vec::new(),
                threshold: 0.9,
                template: RunConfig { model: ModelKind::Search, ..Default::default() },
            },
        };
        if let Some(v) = self.variable {
            sweep.variable = v;
        }
        if let Some(v) = &self.values {
            sweep.values = v.clone();
        }
        if let Some(t) = self.threshold {
            sweep.threshold = t;
        }
        self.run.apply(&mut sweep.template);
        Ok(sweep)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let out = cmd_run(&cfg)?;
            let s = &out.ensemble.summary;
            println!(
                "{} trajectories x {} steps -> {}",
                s.num_trajectories,
                s.mean_fidelity_vs_step.len(),
                out.out.display()
            );
            println!("final mean fidelity {:.6}", s.mean_fidelity_vs_step.last().copied().unwrap_or(f64::NAN));
            if let Some(f) = s.fit {
                println!("ln(1-F) slope {:.6e}, R^2 {:.6}", f.slope, f.r2);
            }
        }
        Command::Sweep(args) => {
            let sweep = args.load()?;
            let out = cmd_sweep(&sweep)?;
            for p in &out.points {
                let flag = if p.flagged() { " (censored)" } else { "" };
                println!("{:>12.6}  eps {:.6}  mean T90 {:.2}{flag}", p.value, p.epsilon, p.mean_t90);
            }
            if let Some(f) = out.t90_fit {
                println!("log-log slope {:.4} (R^2 {:.4})", f.slope, f.r2);
            }
        }
        Command::Verify { corrupt_kraus } => {
            let report = cmd_verify(&VerifyOptions { corrupt_kraus });
            print!("{report}");
            if !report.passed() {
                for c in report.failures() {
                    eprintln!("failed: {}", c.name);
                }
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
