use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ftl_cli::commands::{self, Sources};
use ftl_cli::config::ResolvedRun;
use ftl_cli::{exit, CliError};

#[derive(Parser)]
#[command(name = "ftl", version, about = "Non-local Follow-the-Leader traffic on a ring, with an LWR reference solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write trajectory and diagnostics.
    Simulate(Common),
    /// Compare particle densities with a Godunov reference as ell shrinks.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Vehicle counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
        /// Godunov reference cells.
        #[arg(long)]
        ref_cells: Option<usize>,
    },
    /// Check the Godunov solver against exact Riemann solutions.
    GodunovValidate {
        #[command(flatten)]
        common: Common,
        /// Grid sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
    },
    /// Shorthand for `simulate --preset figure1`.
    Figure1(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: figure1, uniform-steady, smooth, random-bv.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overridden by FTL_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relax the step guard to dt <= ell.
    #[arg(long)]
    unsafe_dt: bool,
    /// Run `weights_printed` after renormalization.
    #[arg(long)]
    literal_weights: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Override one configuration key, e.g. `--set horizon=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn sources(&self) -> Sources {
        Sources {
            preset: self.preset.clone(),
            config: self.config.clone(),
            overrides: self.overrides.clone(),
            unsafe_dt: self.unsafe_dt,
            literal_weights: self.literal_weights,
            seed: self.seed,
        }
    }
}

fn list(v: &[usize]) -> String {
    v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")
}

fn resolve(common: &Common, extra: &[(&str, String)], require_source: bool) -> Result<(ResolvedRun, PathBuf), CliError> {
    if require_source && common.preset.is_none() && common.config.is_none() {
        return Err(ftl_core::FtlError::Config("pass --config <path> or --preset <name>".into()).into());
    }
    let mut cfg = commands::build_config(&common.sources())?;
    for (k, v) in extra {
        cfg.set(k, v)?;
    }
    if !require_source && cfg.get("period").is_none() {
        // Validation runs need no initial profile; supply a placeholder.
        cfg.set("period", "4")?;
        cfg.set("profile_breaks", "0")?;
        cfg.set("profile_values", "0.5")?;
    }
    let run = cfg.resolve()?;
    let out = commands::resolve_out_dir(common.out.as_deref(), &run);
    Ok((run, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(common) => simulate(&common, "simulate"),
        Command::Figure1(mut common) => {
            common.preset = Some("figure1".into());
            simulate(&common, "figure1")
        }
        Command::Converge { common, m_list, ref_cells } => {
            let mut extra = Vec::new();
            if let Some(m) = &m_list {
                extra.push(("m_list", list(m)));
            }
            if let Some(r) = ref_cells {
                extra.push(("ref_cells", r.to_string()));
            }
            let (run, out) = resolve(&common, &extra, true)?;
            let report = commands::converge(&run, &out)?;
            for (case, order) in report.cases.iter().zip(report.observed_orders()) {
                let order = order.map_or(String::from("-"), |o| format!("{o:.3}"));
                println!("M = {:5}  ell = {:.3e}  l1 = {:.6e}  order = {order}", case.vehicles, case.ell, case.l1_error);
            }
            println!("strictly decreasing: {}", report.strictly_decreasing());
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::GodunovValidate { common, m_list } => {
            let extra: Vec<(&str, String)> = m_list.iter().map(|m| ("godunov_m_list", list(m))).collect();
            let (run, out) = resolve(&common, &extra, false)?;
            let outcome = commands::godunov_validate(&run, &out);
            let report = match &outcome {
                Ok(report) => Some(report.clone()),
                Err(_) => None,
            };
            if let Some(report) = report {
                for row in &report.rows {
                    println!("{:12} m = {:5}  l1 = {:.6e}", row.case, row.cells, row.l1_error);
                }
            }
            println!("wrote {}", out.display());
            outcome.map(|_| ())
        }
    }
}

fn simulate(common: &Common, label: &str) -> Result<(), CliError> {
    let (run, out) = resolve(common, &[], true)?;
    let summary = commands::simulate(&run, &out, label)?;
    println!(
        "M = {}  ell = {:.6e}  dt = {:.6e}  steps = {}  T = {}",
        run.vehicles, run.ell, run.dt, summary.steps, run.horizon
    );
    println!(
        "tv_rho: initial {:.6}  max {:.6} at t = {:.4}  exceeds initial: {}",
        summary.blowup.initial, summary.blowup.max, summary.blowup.t_max, summary.blowup.exceeds_initial
    );
    if summary.reversing_steps > 0 {
        println!("negative vehicle speeds during {} steps", summary.reversing_steps);
    }
    for note in &run.notes {
        println!("note: {note}");
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Model(inner) = &e {
                let mut source = std::error::Error::source(inner);
                while let Some(s) = source {
                    eprintln!("  caused by: {s}");
                    source = s.source();
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
