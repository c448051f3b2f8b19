//! `sensor2edge` command-line front end.
//!
//! Exit codes: 0 ok, 2 invalid scenario, 3 I/O failure, 4 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use sensor2edge::report::{Mode, ReportBundle};
use sensor2edge::scenario::{load_scenario, sweep, Scenario};

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sensor2edge",
    version,
    about = "Sensor-to-edge latency and safety-distance simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Output {
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Zero the timestamp so reports are byte-reproducible
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report every problem found
    Validate { config: PathBuf },
    /// Simulate one seed
    Run {
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Simulate consecutive seeds and merge the statistics
    Sweep {
        config: PathBuf,
        /// Number of seeds
        #[arg(long)]
        seeds: u64,
        /// First seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[command(flatten)]
        output: Output,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn load(path: &Path) -> Result<(String, Scenario), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    match load_scenario(&text) {
        Ok(s) => Ok((text, s)),
        Err(e) => {
            let lines: Vec<String> = e
                .diagnostics
                .iter()
                .map(|d| format!("{}:{d}", path.display()))
                .collect();
            Err(fail(EXIT_VALIDATION, lines.join("\n")))
        }
    }
}

fn simulate(
    config: &Path,
    seeds: Vec<u64>,
    parallel: usize,
    mode: Mode,
    output: &Output,
) -> Result<(), Failure> {
    let (text, scenario) = load(config)?;
    let result =
        sweep(&scenario, &seeds, parallel).map_err(|e| fail(EXIT_VALIDATION, e.to_string()))?;
    let stamp = if output.deterministic {
        0
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    };
    let bundle = ReportBundle::build(&text, &result.runs, &result.merged, mode, stamp);
    let written = match output.format {
        Format::Json => bundle.write_json(&output.out),
        Format::Csv => bundle.write_csv(&output.out),
    }
    .map_err(|e| fail(EXIT_IO, format!("{}: {e}", output.out.display())))?;

    let e2e = &bundle.summary.end_to_end;
    println!(
        "{} toggles, {} samples, {} lost; end-to-end mean {:.1} ms, p99 {:.1} ms, max {:.1} ms",
        bundle.summary.toggles,
        bundle.summary.samples,
        bundle.summary.losses,
        e2e.mean_us.unwrap_or(0.0) / 1000.0,
        e2e.p99_us.unwrap_or(0) as f64 / 1000.0,
        e2e.max_us.unwrap_or(0) as f64 / 1000.0,
    );
    println!(
        "worst case {:.1} ms, safety distance {:.4} m (presented {:.1} m)",
        bundle.summary.worst_case_us as f64 / 1000.0,
        bundle.summary.safety_distance_m,
        bundle.summary.safety_distance_presented_m,
    );
    println!(
        "wrote {} file(s) to {}",
        written.len(),
        output.out.display()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => {
            let (_, scenario) = load(&config)?;
            println!(
                "{}: ok ({} segments, {} hops, worst case {})",
                config.display(),
                scenario.segments.len(),
                scenario.hops().len(),
                scenario.worst_case()
            );
            Ok(())
        }
        Command::Run {
            config,
            seed,
            output,
        } => simulate(&config, vec![seed], 1, Mode::Run, &output),
        Command::Sweep {
            config,
            seeds,
            seed,
            parallel,
            output,
        } => {
            if seeds == 0 {
                return Err(fail(EXIT_USAGE, "--seeds must be at least 1"));
            }
            if parallel == 0 {
                return Err(fail(EXIT_USAGE, "--parallel must be at least 1"));
            }
            let list = (0..seeds).map(|i| seed.wrapping_add(i)).collect();
            simulate(&config, list, parallel, Mode::Sweep, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
