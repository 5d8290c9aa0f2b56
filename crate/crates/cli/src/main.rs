use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use rayon::prelude::*;

use rsf_cli::csv::{emit_csv, gnuplot_script, to_csv};
use rsf_cli::library::{self, SweepParams};
use rsf_cli::{oracle_check, run_plan, CliError, Plan, Scenario, Table};

#[derive(Parser)]
#[command(name = "rsf", version, about = "Reduced-state simulations of open multimode bosonic fields")]
struct Cli {
    /// Worker threads for independent runs.
    #[arg(long, global = true, env = "RSF_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files and write one CSV per file.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output file, or directory when several configs are given.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fixed integration step.
        #[arg(long)]
        dt: Option<f64>,
        /// Also write a gnuplot script next to each CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Run a bundled scenario (`--list` shows the names).
    Scenario {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// Override a key, e.g. `pipeline.0.bath.n_omega=0.5`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        plot: bool,
        /// Print the resolved scenario file instead of running it.
        #[arg(long)]
        emit_config: bool,
        #[arg(long)]
        list: bool,
    },
    /// Compare the moment equations against a truncated Fock-space run.
    OracleCheck {
        /// Scenario file or bundled scenario name.
        config: String,
        #[arg(long)]
        cutoff: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// A path on disk, or else the name of a bundled scenario.
fn source(arg: &str) -> Result<String, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        return read(path);
    }
    library::bundled(arg)
        .map(|b| b.text.to_string())
        .ok_or_else(|| CliError::Config(format!("`{arg}` is neither a file nor a bundled scenario")))
}

fn write_table(t: &Table, out: Option<&Path>, plot: bool) -> Result<(), CliError> {
    match out {
        Some(path) => {
            emit_csv(t, path)?;
            if plot {
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                let gp = path.with_extension("gp");
                std::fs::write(&gp, gnuplot_script(t, &name))
                    .map_err(|source| CliError::Io { path: gp.display().to_string(), source })?;
            }
            info!("wrote {}", path.display());
        }
        None => print!("{}", to_csv(t)),
    }
    Ok(())
}

fn run_file(path: &Path, dt: Option<f64>) -> Result<Table, CliError> {
    let text = read(path)?;
    let s = Scenario::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let plan = Plan::new(&s).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    info!("running {} ({} grid points)", path.display(), plan.grid.len());
    run_plan(&plan, dt)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Run { configs, out, dt, plot } => {
            if configs.len() == 1 {
                return write_table(&run_file(&configs[0], dt)?, out.as_deref(), plot);
            }
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
            let results: Vec<Result<Table, CliError>> = configs.par_iter().map(|c| run_file(c, dt)).collect();
            for (c, r) in configs.iter().zip(results) {
                let stem = c.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
                write_table(&r?, Some(&dir.join(format!("{stem}.csv"))), plot)?;
            }
            Ok(())
        }
        Command::Scenario { name, params, out, dt, plot, emit_config, list } => {
            if list {
                for b in library::BUNDLED {
                    println!("{:<24} {}", b.name, b.summary);
                }
                println!("{:<24} critical time against bath occupation, single photon and BSV", library::SWEEP);
                return Ok(());
            }
            let name = name.expect("required unless --list");
            if name == library::SWEEP {
                let p = SweepParams::from_overrides(&params)?;
                return write_table(&library::critical_time_sweep(&p, dt)?, out.as_deref(), plot);
            }
            let b = library::bundled(&name).ok_or_else(|| {
                CliError::Config(format!("unknown scenario `{name}`; available: {}", library::names().join(", ")))
            })?;
            let s = Scenario::from_toml_with(b.text, &params)?;
            let plan = Plan::new(&s)?;
            if emit_config {
                print!("{}", s.to_toml()?);
                return Ok(());
            }
            write_table(&run_plan(&plan, dt)?, out.as_deref(), plot)
        }
        Command::OracleCheck { config, cutoff, tol, params, dt } => {
            let s = Scenario::from_toml_with(&source(&config)?, &params)?;
            let report = oracle_check(&Plan::new(&s)?, cutoff, tol, dt)?;
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::OracleMismatch(format!("tolerance {tol:e} exceeded at cutoff {cutoff}")))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
