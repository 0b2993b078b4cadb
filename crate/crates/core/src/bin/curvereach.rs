use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curvereach::cli_io::{self, CliError, ImageFormat, RenderTarget};
use curvereach::propagation::storage_bits;

/// Backward reachability verification of grid feedback plans.
#[derive(Parser)]
#[command(name = "curvereach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the border bitmaps of a plan and write them with a summary.
    Verify {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Resolution (position and heading bins per border).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Classify one configuration using verification artifacts.
    Query {
        #[arg(long)]
        out: PathBuf,
        /// Plan file; defaults to the copy stored with the artifacts.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        /// Heading in degrees.
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
    },
    /// Render a border bitmap (`--border`) or a heading slice (`--theta`).
    Render {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value = "svg")]
        fmt: ImageFormat,
        #[arg(long, conflicts_with = "theta", required_unless_present = "theta")]
        border: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        /// Samples per cell side in slice mode.
        #[arg(long, default_value_t = cli_io::DEFAULT_SLICE_K)]
        k: usize,
    },
    /// Compare bitmap queries with direct simulation on random samples.
    OracleCheck {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = 0.99)]
        threshold: f64,
    },
    /// Print the storage model (border encoding vs dense 3-D grid) in bits.
    Bits { n: u64, m: u64 },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Verify { plan, out, m, threads } => {
            let s = cli_io::cmd_verify(&plan, &out, m, threads)?;
            println!(
                "fixed point after {} iterations: {} bits marked over {} borders (coverage {:.4})",
                s.iterations,
                s.marked_bits,
                s.borders.len(),
                s.coverage
            );
            println!("wall time {:.3} s", s.wall_time.as_secs_f64());
        }
        Command::Query { out, plan, x, y, theta } => {
            let q = cli_io::cmd_query(&out, plan.as_deref(), x, y, theta)?;
            println!("{}", cli_io::describe_query(&q));
        }
        Command::Render { out, plan, fmt, border, theta, k } => {
            let what = match (border, theta) {
                (Some(b), _) => RenderTarget::Border(cli_io::parse_border_id(&b)?),
                (None, Some(t)) => RenderTarget::Slice { theta_deg: t },
                (None, None) => return Err(CliError::Usage("render needs --border or --theta".into())),
            };
            let path = cli_io::cmd_render(&out, plan.as_deref(), &what, fmt, k)?;
            println!("{}", path.display());
        }
        Command::OracleCheck { plan, samples, seed, m, threads, threshold } => {
            let report = cli_io::cmd_oracle_check(&plan, samples, seed, m, threads, threshold)?;
            if samples == 0 {
                log::warn!("no samples requested");
            }
            print!("{}", report.render());
            if !report.passed() {
                return Err(CliError::Threshold { agreement: report.agreement, threshold });
            }
        }
        Command::Bits { n, m } => {
            let (border, dense) = storage_bits(n, m);
            println!("border_encoding_bits {border}");
            println!("dense_3d_bits {dense}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CURVEREACH_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
