use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use resetloop_cli::commands::{self, AngleUnit, CommandError};
use resetloop_cli::config::{resolve, ProjectConfig, Resolved};
use resetloop_cli::output;
use resetloop_cli::service::{self, AppState, DEFAULT_BUDGET};

/// Design and analysis of reset-based add-on filters for linear motion controllers.
#[derive(Parser)]
#[command(name = "resetloop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Project configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Report phases in degrees instead of radians.
    #[arg(long)]
    deg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sensitivity curves and constraint report of the configured loop.
    Analyze(Common),
    /// Design the CgLp and notch add-on and evaluate it.
    Design(Common),
    /// Paired baseline and add-on time-domain runs.
    Simulate(Common),
    /// Local HTTP service on 127.0.0.1.
    Serve {
        /// Server configuration; request bodies are merged over it.
        #[arg(long)]
        config: PathBuf,
        /// Listen port on 127.0.0.1.
        #[arg(long, default_value_t = 8765)]
        port: u16,
        /// Default wall-clock budget for /simulate, milliseconds.
        #[arg(long)]
        budget_ms: Option<u64>,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn load(path: &Path) -> Result<Resolved, CommandError> {
    let cfg = ProjectConfig::load(path)?;
    Ok(resolve(&cfg, path.parent().unwrap_or(Path::new(".")))?)
}

fn report_error(e: &CommandError) -> ExitCode {
    eprintln!("error: {e}");
    for f in e.field_errors() {
        if !f.field.is_empty() {
            eprintln!("  {}: {}", f.field, f.message);
        }
    }
    ExitCode::from(match e {
        CommandError::Config(_) => EXIT_INVALID,
        CommandError::Infeasible { .. } => EXIT_INFEASIBLE,
        _ => EXIT_FAILURE,
    })
}

fn list(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run_file_command(cmd: &Command) -> Result<(), CommandError> {
    let io = |e: resetloop_core::io::FormatError| CommandError::Internal(e.to_string());
    match cmd {
        Command::Analyze(c) => {
            let cfg = load(&c.config)?;
            let unit = if c.deg { AngleUnit::Deg } else { AngleUnit::Rad };
            let r = commands::analyze(&cfg, unit)?;
            list(&output::write_analyze(&c.out, &r).map_err(io)?);
            println!(
                "M_s = {:.3} dB, M_r = {:.3} dB, verdict: {}",
                r.evaluation.report.m_s_db,
                r.evaluation.report.m_r_db,
                if r.evaluation.verdict.pass { "pass" } else { "fail" }
            );
            for reason in &r.evaluation.verdict.reasons {
                println!("  {reason}");
            }
        }
        Command::Design(c) => {
            let cfg = load(&c.config)?;
            let unit = if c.deg { AngleUnit::Deg } else { AngleUnit::Rad };
            let r = commands::design(&cfg, unit)?;
            list(&output::write_design(&c.out, &r).map_err(io)?);
            if let Some(d) = &r.design {
                println!(
                    "omega_l = {:.4}, omega_f = {:.4}, omega_r = {:.4}, k_c = {:.4}, D_r = {:.4}",
                    d.omega_l, d.omega_f, d.omega_r, d.k_c, d.d_r
                );
            }
            println!(
                "theta = {:.4} {u} of max {:.4} {u} at omega_c = {:.4}",
                r.theta_target,
                r.theta_max,
                r.omega_c,
                u = unit.suffix()
            );
            for nd in &r.evaluation.verdict.notch_deltas {
                println!("delta_s({:.4}) = {:.2}%", nd.omega_n, nd.delta_s_pct);
            }
            println!(
                "M_s = {:.3} dB, M_r = {:.3} dB, verdict: {}",
                r.evaluation.report.m_s_db,
                r.evaluation.report.m_r_db,
                if r.evaluation.verdict.pass { "pass" } else { "fail" }
            );
            for reason in &r.evaluation.verdict.reasons {
                println!("  {reason}");
            }
        }
        Command::Simulate(c) => {
            let cfg = load(&c.config)?;
            let unit = if c.deg { AngleUnit::Deg } else { AngleUnit::Rad };
            let deadline = cfg
                .simulation
                .budget_ms
                .map(|ms| Instant::now() + Duration::from_millis(ms));
            let out = commands::simulate(&cfg, unit, deadline)?;
            list(&output::write_simulate(&c.out, &out).map_err(io)?);
            if let Some(t) = output::comparison_table(&out) {
                print!("{t}");
            }
            if let Some(points) = &out.report.sinusoid {
                println!(
                    "{:>10} {:>3} {:>12} {:>12} {:>9} {:>9} {:>7}",
                    "omega", "n", "|S_n| pred", "|S_n| sim", "mag err", "cplx err", "resets"
                );
                for p in points {
                    println!(
                        "{:>10.4} {:>3} {:>12.5e} {:>12.5e} {:>8.2}% {:>8.2}% {:>7}",
                        p.omega,
                        p.n,
                        p.predicted_mag,
                        p.simulated_mag,
                        100.0 * p.magnitude_error,
                        100.0 * p.relative_error,
                        p.resets_per_period
                    );
                }
            }
        }
        Command::Serve { .. } => unreachable!("handled separately"),
    }
    Ok(())
}

fn serve(config: &Path, port: u16, budget_ms: Option<u64>) -> ExitCode {
    let cfg = match ProjectConfig::load(config) {
        Ok(c) => c,
        Err(e) => return report_error(&e.into()),
    };
    let base = config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let budget = budget_ms.map(Duration::from_millis).unwrap_or(DEFAULT_BUDGET);
    let state = match AppState::new(&cfg, base, budget) {
        Ok(s) => Arc::new(s),
        Err(e) => return report_error(&e.into()),
    };
    let mut rt = tokio::runtime::Builder::new_multi_thread();
    if let Some(n) = resetloop_cli::thread_cap() {
        rt.worker_threads(n).max_blocking_threads(n);
    }
    let rt = match rt.enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    match rt.block_on(service::serve(state, port)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    resetloop_cli::init_threads();
    match &cli.command {
        Command::Serve {
            config,
            port,
            budget_ms,
        } => serve(config, *port, *budget_ms),
        cmd => match run_file_command(cmd) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => report_error(&e),
        },
    }
}
