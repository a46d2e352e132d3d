use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use critique_rl::harness::{
    ensure_dataset, generate_data, iterate_refine, render_table, run_eval, run_ppo, run_sweep,
    run_warm_start, train_pipeline, write_report, ExperimentConfig, HarnessError,
};
use critique_rl::policy::load_checkpoint;

#[derive(Parser)]
#[command(name = "critique-rl", version, about = "Train and evaluate critique policies for a frozen task model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set ppo.lr=1e-4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset into `data.dir`.
    GenData(Common),
    /// Supervised warm start; writes the supervised checkpoint.
    TrainSup(Common),
    /// PPO from the supervised checkpoint, or the whole pipeline with `--pipeline`.
    TrainPpo {
        #[command(flatten)]
        common: Common,
        /// Run dataset → warm start → PPO according to `[stages]`.
        #[arg(long)]
        pipeline: bool,
    },
    /// One critique → refine round with the configured critique source.
    Eval(Common),
    /// `rounds` chained critique → refine rounds.
    Iterate(Common),
    /// Warm start + PPO for each width in `sweep.hidden`.
    Sweep(Common),
}

fn log(line: &str) {
    eprintln!("{line}");
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let load = |c: &Common| ExperimentConfig::load(c.config.as_deref(), &c.overrides);
    match cli.command {
        Command::GenData(c) => {
            generate_data(&load(&c)?, &mut log)?;
        }
        Command::TrainSup(c) => {
            let config = load(&c)?;
            let data = ensure_dataset(&config, &mut log)?;
            run_warm_start(&config, config.policy, &data, &config.supervised_path(), &mut log)?;
        }
        Command::TrainPpo { common, pipeline } => {
            let config = load(&common)?;
            if pipeline {
                train_pipeline(&config, &mut log)?;
            } else {
                let warm = load_checkpoint(&config.supervised_path())?.params;
                let data = ensure_dataset(&config, &mut log)?;
                let backend = critique_rl::harness::build_backend(&config)?;
                run_ppo(
                    &config,
                    &warm,
                    &data,
                    backend.as_ref(),
                    &config.rl4f_path(),
                    &config.output_dir.join("curve.csv"),
                    &mut log,
                )?;
            }
        }
        Command::Eval(c) => {
            let config = load(&c)?;
            let report = run_eval(&config)?;
            let path = write_report(&config.output_dir, &format!("eval_{}", report.critique_source), &report)?;
            print!("{}", render_table(&report));
            log(&format!("wrote {}", path.display()));
        }
        Command::Iterate(c) => {
            let config = load(&c)?;
            let report = iterate_refine(&config)?;
            let path = write_report(&config.output_dir, &format!("iterate_{}", report.critique_source), &report)?;
            print!("{}", render_table(&report));
            log(&format!("wrote {}", path.display()));
        }
        Command::Sweep(c) => {
            let report = run_sweep(&load(&c)?, &mut log)?;
            print!("{}", report.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
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
