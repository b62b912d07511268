//! Command-line front end: run experiment specs, print modification
//! constants and root-first schedules, list built-in methods.
//!
//! Exit codes: 0 success, 2 spec/argument errors, 3 solver failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conserva::experiments::{run_spec_to_dir, ExperimentSpec};
use conserva::pseudo::{root_first_schedule, PseudoSchedule};
use conserva::tableau::ButcherTableau;
use conserva::{Error, Tableau64};

/// Finite-volume conservation-law workbench.
#[derive(Parser)]
#[command(name = "conserva", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment spec (JSON) and write CSV artifacts plus a
    /// run manifest.
    Run {
        /// Path to the experiment spec JSON document.
        spec: PathBuf,
        /// Output directory (default: CONSERVA_OUT or the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep members.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the modification constant 1 - Π φ(-μ_l) for a tableau and a
    /// list of pseudo-time step ratios.
    Constant {
        /// Built-in tableau name (euler, heun, ssprk3) or a JSON file.
        tableau: String,
        /// Pseudo-time step ratios μ_0 .. μ_{N-1}.
        #[arg(required = true)]
        mu: Vec<f64>,
    },
    /// Print the root-first schedule [μ_root, base, .., base] for a tableau,
    /// or an error if its stability function has no real root.
    Schedule {
        /// Built-in tableau name or a JSON file.
        tableau: String,
        /// Tail step ratio.
        mu: f64,
        /// Number of tail steps.
        n: usize,
    },
    /// List built-in tableaus and experiment kinds.
    List,
}

fn load_tableau(name: &str) -> Result<Tableau64, Error> {
    if name.ends_with(".json") || name.contains('/') {
        let text = std::fs::read_to_string(name)?;
        ButcherTableau::from_json(&text)
    } else {
        ButcherTableau::by_name(name)
    }
}

fn output_dir(requested: Option<PathBuf>) -> PathBuf {
    requested
        .or_else(|| std::env::var_os("CONSERVA_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(command: Command) -> Result<(), (u8, String)> {
    match command {
        Command::Run { spec, out, jobs } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| (2, format!("cannot read {}: {e}", spec.display())))?;
            let spec = ExperimentSpec::from_json(&text).map_err(|e| (2, e.to_string()))?;
            let dir = output_dir(out);
            let manifest =
                run_spec_to_dir(&spec, &dir, jobs).map_err(|e| (3, e.to_string()))?;
            for path in &manifest.outputs {
                println!("wrote {path}");
            }
            println!("wrote {}", dir.join("manifest.json").display());
            if let Some(c) = manifest.modification_constant {
                println!("modification constant: {c:.12e}");
            }
            Ok(())
        }
        Command::Constant { tableau, mu } => {
            let tab = load_tableau(&tableau).map_err(|e| (2, e.to_string()))?;
            let schedule = PseudoSchedule::new(mu).map_err(|e| (2, e.to_string()))?;
            // twelve significant digits
            println!("{:.11e}", schedule.modification_constant(&tab));
            Ok(())
        }
        Command::Schedule { tableau, mu, n } => {
            let tab = load_tableau(&tableau).map_err(|e| (2, e.to_string()))?;
            let schedule = root_first_schedule(&tab, mu, n).map_err(|e| (2, e.to_string()))?;
            let steps: Vec<String> = schedule.mus().iter().map(|m| m.to_string()).collect();
            println!("schedule: [{}]", steps.join(", "));
            println!(
                "modification constant: {:.11e}",
                schedule.modification_constant(&tab)
            );
            Ok(())
        }
        Command::List => {
            println!("built-in tableaus:");
            for name in Tableau64::builtin_names() {
                println!("  {name}");
            }
            println!("experiment kinds (spec JSON `kind` field):");
            for kind in [
                "table1 {problem: advection|burgers}",
                "table2",
                "advection_convergence {tableau, schedule, j_min, j_max}",
                "advection_speed {tableau, mu, iterations}",
                "burgers_triangle {resolution, t_end, tableau, schedule}",
                "burgers_step {resolution, t_end, mu, iterations}",
                "burgers_strategies",
                "euler_vortex {strategy: Constant|RootFirst, dx, t_end}",
                "mass_audit {problem, dx}",
            ] {
                println!("  {kind}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
