use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use l1ds_cli::commands::{cmd_batch, cmd_certify, cmd_dtw, cmd_fit, cmd_gen_demos, cmd_run};
use l1ds_cli::{CliError, GlobalOpts};

#[derive(Parser)]
#[command(name = "l1ds", version, about = "Simulate learned motion plans under disturbances")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single repetition seed, overriding `seeds`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Validate the configuration and exit without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Worker threads for `batch`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the vector field and write the model and fit report.
    Fit,
    /// Simulate the configured stack and the nominal baseline.
    Run,
    /// Run the shape × disturbance × controller × seed sweep.
    Batch,
    /// Evaluate the tube certificate.
    Certify,
    /// DTW distance between two trajectory CSVs.
    Dtw {
        file_a: PathBuf,
        file_b: PathBuf,
        /// Sakoe-Chiba half-width.
        #[arg(long)]
        band: Option<usize>,
        /// Also print the warping path (0-based index pairs).
        #[arg(long)]
        path: bool,
    },
    /// Write synthetic demonstrations as CSV files.
    GenDemos,
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let g = cli.global;
    let opts = GlobalOpts {
        config: g.config,
        out: g.out,
        seed: g.seed,
        dry_run: g.dry_run,
        jobs: g.jobs,
    };
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Dtw {
            file_a,
            file_b,
            band,
            path,
        } => cmd_dtw(&file_a, &file_b, band, path, &mut out),
        cmd => {
            let cfg = opts.resolve_config()?;
            match cmd {
                Command::Fit => cmd_fit(&cfg, &opts, &mut out),
                Command::Run => cmd_run(&cfg, &opts, &mut out),
                Command::Batch => cmd_batch(&cfg, &opts, &mut out),
                Command::Certify => cmd_certify(&cfg, &opts, &mut out),
                Command::GenDemos => cmd_gen_demos(&cfg, &opts, &mut out),
                Command::Dtw { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
