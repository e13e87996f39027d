use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bplmc::cli::commands::{cmd_diag, cmd_sample, cmd_verify, print};
use bplmc::cli::suite::SuiteOptions;

#[derive(Parser)]
#[command(name = "bplmc", version, about = "Bregman proximal Langevin Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler described by a JSON config.
    Sample {
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Base seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the numerical verification suite.
    Verify {
        /// Only run checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Where to write the CSV report.
        #[arg(long, default_value = "verify_report.csv")]
        report: PathBuf,
        #[arg(long, hide = true, default_value_t = 0.0)]
        corrupt_prox: f64,
    },
    /// Compare a sample file with reference marginals.
    Diag {
        #[arg(short, long)]
        input: PathBuf,
        /// `laplace:<rate>` or `uniform:<lower>:<upper>`, formulas over d and i.
        #[arg(short, long)]
        reference: String,
        /// Output directory (defaults to the input's directory).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample {
            config,
            output,
            seed,
        } => cmd_sample(&config, output.as_deref(), seed).map(|out| {
            print(&format!(
                "wrote {} files to {}\n",
                out.files.len(),
                out.output_dir.display()
            ));
            true
        }),
        Command::Verify {
            filter,
            report,
            corrupt_prox,
        } => cmd_verify(
            filter.as_deref(),
            Some(&report),
            SuiteOptions {
                prox_corruption: corrupt_prox,
            },
        )
        .map(|out| {
            print(&out.render());
            out.passed()
        }),
        Command::Diag {
            input,
            reference,
            output,
        } => {
            let dir = output.unwrap_or_else(|| {
                input
                    .parent()
                    .map(|p| p.to_path_buf())
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            cmd_diag(&input, &reference, &dir).map(|p| {
                print(&format!("wrote {}\n", p.display()));
                true
            })
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
