//! `clapp`: analysis front end for the Clapp-oscillator state-space
//! model. Subcommands cover device fitting, equilibrium and eigenvalue
//! analysis, trajectory generation, phase projections, the R_E stability
//! sweep and boundary search, Lyapunov estimation, and tank resonance.
//!
//! Exit codes: 0 success, 1 input error, 2 numeric/convergence error.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::ConfigBuilder;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "clapp",
    version,
    about = "Clapp oscillator chaos analysis toolkit"
)]
struct Cli {
    /// Config file in `key = value` form; missing keys use the
    /// reference profile.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for CSV files (overrides the `out_dir` key).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override one config key, e.g. `--set r_e=10`. Repeatable; applied
    /// after the config file in order.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Reserved for randomized tooling; core computations are
    /// deterministic and ignore it.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Print the fully-resolved config in normalized form and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit I_S and eta from a DC I-V sweep (or a synthesized one).
    Fit {
        /// CSV of `v_be,i_dc` rows; omitted = synthesize noiseless
        /// samples from the configured device.
        #[arg(long, value_name = "PATH")]
        samples: Option<PathBuf>,
    },
    /// Solve the DC operating point.
    Equilibrium,
    /// Jacobian eigenvalues and stability classification at the
    /// operating point.
    Eigs,
    /// Integrate the transient trajectory and export samples.
    Simulate,
    /// Project the trajectory onto a state-variable pair.
    Phase {
        #[arg(long, default_value = "v_c1", value_name = "COMPONENT")]
        x: String,
        #[arg(long, default_value = "v_c2", value_name = "COMPONENT")]
        y: String,
    },
    /// Classify stability across an R_E grid.
    Sweep,
    /// Bisect the instability boundary R_E*.
    Boundary,
    /// Estimate the largest Lyapunov exponent.
    Lyapunov,
    /// Small-signal tank resonance.
    Freq {
        /// `two-cap` (capacitive divider) or `three-cap` (full series
        /// tank).
        #[arg(long, default_value = "two-cap", value_name = "MODE")]
        mode: String,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut builder = ConfigBuilder::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        builder.apply_file(&text).map_err(CliError::Input)?;
    }
    for entry in &cli.set {
        builder.apply_set(entry).map_err(CliError::Input)?;
    }
    let mut cfg = builder.finish().map_err(CliError::Input)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }

    if cli.dump_config {
        print!("{}", config::dump(&cfg));
        return Ok(());
    }

    if !cfg.beta_explicit {
        eprintln!(
            "warning: beta defaulted to 100; the reference component set does not \
             document a transistor current gain, so set beta explicitly for \
             calibrated runs"
        );
    }

    let out_dir = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| {
        CliError::Input(format!("cannot create out dir {}: {e}", out_dir.display()))
    })?;

    let summary = match &cli.cmd {
        Cmd::Fit { samples } => commands::fit(&cfg, &out_dir, samples.as_deref())?,
        Cmd::Equilibrium => commands::equilibrium(&cfg, &out_dir)?,
        Cmd::Eigs => commands::eigs(&cfg, &out_dir)?,
        Cmd::Simulate => commands::simulate_cmd(&cfg, &out_dir)?,
        Cmd::Phase { x, y } => commands::phase(&cfg, &out_dir, x, y)?,
        Cmd::Sweep => commands::sweep(&cfg, &out_dir)?,
        Cmd::Boundary => commands::boundary(&cfg, &out_dir)?,
        Cmd::Lyapunov => commands::lyapunov(&cfg, &out_dir)?,
        Cmd::Freq { mode } => commands::freq(&cfg, &out_dir, mode)?,
    };
    println!("{summary}");
    Ok(())
}
