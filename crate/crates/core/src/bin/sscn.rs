use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sscn::expcli::{rows_to_csv, run_sweep, SweepSpec};
use sscn::solution::SolveResult;
use sscn::{generate_scenario, run_baseline, run_solver, BaselineKind, Error, MatchingMode, Result, Scenario, ScenarioConfig, SolverParams};

#[derive(Parser)]
#[command(name = "sscn", version, about = "Caching, pairing and power control for secure D2D semantic networks")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a scenario and write it as JSON.
    Gen {
        #[command(flatten)]
        input: ScenarioInput,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the dual solver on one scenario.
    Solve {
        #[command(flatten)]
        input: ScenarioInput,
        /// Solver parameters (TOML).
        #[arg(long)]
        solver: Option<PathBuf>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<MatchingMode>,
        /// Print the per-iteration trace as CSV on stderr.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a comparison scheme on one scenario.
    Baseline {
        #[command(flatten)]
        input: ScenarioInput,
        #[arg(long, value_parser = parse_kind)]
        kind: BaselineKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write CSV.
    Sweep {
        /// Sweep specification (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<MatchingMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioInput {
    /// Scenario configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Previously generated scenario (JSON); takes precedence over --config.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the configuration's rng_seed; for `baseline` it also seeds
    /// the scheme.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioInput {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::from_toml_str(&read(p)?)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.rng_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(p) => Scenario::read_file(p),
            None => generate_scenario(&self.config()?),
        }
    }
}

fn parse_mode(s: &str) -> std::result::Result<MatchingMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kind(s: &str) -> std::result::Result<BaselineKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn print_trace(res: &SolveResult) {
    eprintln!("t,dual_value,sst,max_violation");
    for r in &res.trace {
        eprintln!("{},{},{},{}", r.t, r.dual_value, r.sst, r.max_violation);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Gen { input, out } => {
            let scn = generate_scenario(&input.config()?)?;
            emit(out.as_deref(), &scn.to_json())
        }
        Command::Solve { input, solver, mode, trace, out } => {
            let scn = input.load()?;
            let mut params = match solver {
                Some(p) => SolverParams::from_toml_str(&read(&p)?)?,
                None => SolverParams::default(),
            };
            if let Some(m) = mode {
                params.matching = m;
            }
            let res = run_solver(&scn, &params)?;
            if trace {
                print_trace(&res);
            }
            emit(out.as_deref(), &res.to_json())
        }
        Command::Baseline { input, kind, out } => {
            let scn = input.load()?;
            let res = run_baseline(&scn, kind, input.seed.unwrap_or(scn.config().rng_seed))?;
            emit(out.as_deref(), &res.to_json())
        }
        Command::Sweep { config, seed, mode, out } => {
            let mut spec = SweepSpec::from_toml_str(&read(&config)?)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(m) = mode {
                spec.solver.matching = m;
            }
            let csv = rows_to_csv(&run_sweep(&spec)?)?;
            emit(out.as_deref(), &csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
