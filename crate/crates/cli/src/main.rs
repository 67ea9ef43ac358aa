use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use motif_engine::config::ExperimentConfig;
use motif_engine::experiment::{eval_baseline, generate_datasets, resume, run, RunOptions, RunStatus};
use motif_engine::report::write_reports;

#[derive(Parser)]
#[command(name = "motif", version, about = "Competitive tree search over solver strategy code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set t_outer=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Start a new experiment in an empty directory.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        out: PathBuf,
        /// Stop after this many outer iterations (resumable).
        #[arg(long, hide = true)]
        halt_after: Option<u64>,
    },
    /// Continue an interrupted experiment.
    Resume {
        dir: PathBuf,
        #[arg(long, hide = true)]
        halt_after: Option<u64>,
    },
    /// Rebuild the reports of an experiment from its run log.
    Report { dir: PathBuf },
    /// Write the train and test datasets a config would use.
    GenData {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Score the baseline strategy set on both datasets.
    EvalBaseline {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the effective config as TOML.
    ShowConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, String> {
    let (mut base, dir) = match &args.config {
        Some(p) => (ExperimentConfig::load(p).map_err(|e| format!("{}: {e}", p.display()))?, p.parent().map(Path::to_path_buf)),
        None => (ExperimentConfig::default(), None),
    };
    // a fixture named in a config file is relative to that file
    if let Some(d) = dir {
        if let Some(p) = base.fixture_path(&d) {
            base.mock_fixture = p.to_string_lossy().into_owned();
        }
    }
    base.with_overrides(&args.overrides).map_err(|e| e.to_string())
}

fn print_status(status: &RunStatus, dir: &Path) {
    let s = status.snapshot();
    match status {
        RunStatus::Halted(_) => println!("halted at outer iteration {}; resume with `motif resume {}`", s.outer.iteration, dir.display()),
        RunStatus::AlreadyDone(_) => println!("notice: {} is already finished; nothing to do", dir.display()),
        RunStatus::Finished(_) => {
            println!("train cost {} -> {}", s.initial_cost, s.final_round.as_ref().map_or(s.outer.baseline_cost, |f| f.cost));
            if let Some(t) = &s.test {
                println!("test cost {} -> {} ({:+.4}%)", t.baseline_cost, t.final_cost, t.improvement);
            }
            println!("reports in {}", dir.join("reports").display());
        }
    }
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { config, out, halt_after } => {
            let cfg = load_config(&config)?;
            let opts = RunOptions { halt_after_outer: halt_after, ..Default::default() };
            let status = run(&cfg, &out, opts).map_err(|e| e.to_string())?;
            print_status(&status, &out);
        }
        Command::Resume { dir, halt_after } => {
            let opts = RunOptions { halt_after_outer: halt_after, ..Default::default() };
            let status = resume(&dir, opts).map_err(|e| e.to_string())?;
            print_status(&status, &dir);
        }
        Command::Report { dir } => {
            let files = write_reports(&dir).map_err(|e| e.to_string())?;
            for p in [files.convergence, files.operators, files.summary] {
                println!("{}", p.display());
            }
        }
        Command::GenData { config, out } => {
            let cfg = load_config(&config)?;
            let (train, test) = generate_datasets(&cfg).map_err(|e| e.to_string())?;
            fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            for (name, d) in [("train.txt", train), ("test.txt", test)] {
                let p = out.join(name);
                fs::write(&p, d.to_text()).map_err(|e| format!("{}: {e}", p.display()))?;
                println!("{} ({} instances)", p.display(), d.len());
            }
        }
        Command::EvalBaseline { config } => {
            let cfg = load_config(&config)?;
            let (train, test) = eval_baseline(&cfg).map_err(|e| e.to_string())?;
            println!("{}/{} baseline: train {train} test {test}", cfg.framework, cfg.domain);
        }
        Command::ShowConfig { config } => {
            print!("{}", load_config(&config)?.to_toml().map_err(|e| e.to_string())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
