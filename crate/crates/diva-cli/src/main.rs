//! Command-line front end: filling scans, momentum distributions,
//! exchange-correlation potential tables, molecular runs from FCIDUMP
//! files, and density-matrix decomposition reports.
//!
//! Exit codes: 0 success, 2 invalid flags, 3 solver non-convergence
//! (data files are still written), 4 non-representable input.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "diva", version, about = "Density-matrix interpolation solvers for lattice and molecular 1-RDM functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// Plain-text `key = value` configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for data files
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Output format for tabular data
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Seed recorded in output headers (runs are deterministic)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for scan points
    #[arg(long)]
    jobs: Option<usize>,
    /// Energy convergence threshold
    #[arg(long)]
    energy_tol: Option<f64>,
    /// 1-RDM Frobenius convergence threshold
    #[arg(long)]
    rdm_tol: Option<f64>,
    /// Iteration cap per solver run
    #[arg(long)]
    max_iters: Option<usize>,
    /// Central-difference step for numerical gradients
    #[arg(long)]
    fd_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state energy as a function of electron filling on uniform chains
    HubbardScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of lattice sites
        #[arg(long)]
        sites: Option<usize>,
        /// Hopping amplitude t
        #[arg(long)]
        t: Option<f64>,
        /// Comma-separated Coulomb strengths U
        #[arg(long)]
        u_list: Option<String>,
        /// Comma-separated electron fillings n in [0, 2]
        #[arg(long)]
        fillings: Option<String>,
        /// Open instead of periodic boundaries
        #[arg(long)]
        open: bool,
        /// Energy functional
        #[arg(long, value_parser = ["mueller", "tp", "hf"])]
        functional: Option<String>,
        /// Interpolation mode
        #[arg(long, value_parser = ["mono", "multi"])]
        mode: Option<String>,
    },
    /// Natural occupations as a function of the Bloch wave number
    Momentum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        sites: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        u_list: Option<String>,
        /// Single electron filling
        #[arg(long)]
        filling: Option<f64>,
        #[arg(long, value_parser = ["mueller", "tp", "hf"])]
        functional: Option<String>,
        #[arg(long, value_parser = ["mono", "multi"])]
        mode: Option<String>,
    },
    /// Exchange-correlation potential over a filling grid (self-consistent
    /// site-occupation loop)
    Vxc {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        sites: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        u_list: Option<String>,
        #[arg(long)]
        fillings: Option<String>,
        #[arg(long, value_parser = ["mueller", "tp", "hf"])]
        functional: Option<String>,
        /// Linear mixing weight on the potential update
        #[arg(long)]
        mixing: Option<f64>,
        /// Outer-loop iteration cap
        #[arg(long)]
        max_outer: Option<usize>,
    },
    /// Molecular runs from FCIDUMP integral files
    Molecule {
        #[command(flatten)]
        common: CommonArgs,
        /// FCIDUMP file, or a directory scanned for *.fcidump
        #[arg(long)]
        fcidump: PathBuf,
        /// Minimization algorithm
        #[arg(long, value_parser = ["mono", "multi", "soft"])]
        algorithm: Option<String>,
        #[arg(long, value_parser = ["mueller", "hf"])]
        functional: Option<String>,
        /// Skip the exact-diagonalization reference columns
        #[arg(long)]
        no_oracle: bool,
    },
    /// Decompose a density-matrix snapshot into idempotent extreme points
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
        /// Snapshot file (`N s` header then row-major entries)
        #[arg(long)]
        input: PathBuf,
        /// Band within which an occupation counts as integer
        #[arg(long)]
        tol_integer: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::HubbardScan {
            common,
            sites,
            t,
            u_list,
            fillings,
            open,
            functional,
            mode,
        } => commands::hubbard_scan(common, sites, t, u_list, fillings, open, functional, mode),
        Command::Momentum {
            common,
            sites,
            t,
            u_list,
            filling,
            functional,
            mode,
        } => commands::momentum(common, sites, t, u_list, filling, functional, mode),
        Command::Vxc {
            common,
            sites,
            t,
            u_list,
            fillings,
            functional,
            mixing,
            max_outer,
        } => commands::vxc(common, sites, t, u_list, fillings, functional, mixing, max_outer),
        Command::Molecule {
            common,
            fcidump,
            algorithm,
            functional,
            no_oracle,
        } => commands::molecule(common, fcidump, algorithm, functional, no_oracle),
        Command::Decompose {
            common,
            input,
            tol_integer,
        } => commands::decompose(common, input, tol_integer),
    };
    std::process::exit(code);
}
