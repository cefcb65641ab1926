use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use repeval::runner::{cmd_plot, cmd_report, cmd_run, exit_code, JobStatus, RunConfig, RunOptions};

#[derive(Parser)]
#[command(name = "repeval", version, about = "Probe-based evaluation of embedding extractors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every job in a configuration file.
    Run {
        config: PathBuf,
        /// Recompute jobs whose reports are already up to date.
        #[arg(long)]
        force: bool,
        /// Jobs to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides `output_dir` from the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consolidate reports into CSV tables.
    Report { dir: PathBuf },
    /// Render reports as SVG figures.
    Plot { dir: PathBuf },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            force,
            jobs,
            out,
        } => RunConfig::load(&config).and_then(|cfg| {
            let opts = RunOptions {
                force,
                jobs: jobs.max(1),
                output_dir: out,
            };
            let summary = cmd_run(&cfg, &opts)?;
            for job in &summary.jobs {
                let status = match job.status {
                    JobStatus::Completed => "done",
                    JobStatus::Skipped => "skipped",
                    JobStatus::Failed => "FAILED",
                };
                match &job.error {
                    Some(e) => println!("{status:>8}  {}  {e}", job.name),
                    None => println!("{status:>8}  {}  {:.2}s", job.name, job.wall_clock_s),
                }
            }
            println!("output: {}", summary.output_dir.display());
            Ok(if summary.failed() > 0 { 2 } else { 0 })
        }),
        Command::Report { dir } => cmd_report(&dir).map(|paths| {
            paths.iter().for_each(|p| println!("{}", p.display()));
            0
        }),
        Command::Plot { dir } => cmd_plot(&dir).map(|paths| {
            paths.iter().for_each(|p| println!("{}", p.display()));
            0
        }),
        Command::Validate { config } => RunConfig::load(&config).map(|cfg| {
            println!("ok: {} jobs, config hash {}", cfg.jobs.len(), cfg.hash());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
