use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ehuav_core::allocation::{allocate, equal_bandwidth_taf, Algorithm};
use ehuav_core::channel::{make_link_budgets, sample_realization, trial_rng};
use ehuav_core::experiments::{
    equal_bandwidth_altitude_curve, iteration_sweep_trends, outage_sweep_trends, place_nodes,
    run_iterations_and_minrate_sweep, run_outage_altitude_sweep, write_csv, ExperimentRow, Sweep,
    TrendCheck,
};
use ehuav_core::outage::{outage_closed_form, outage_monte_carlo, Allocation};

mod config;

/// Why a command failed; each kind maps to its own exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    Trend(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Trend(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Numeric(m) | Failure::Io(m) => f.write_str(m),
            Failure::Trend(m) => write!(f, "trend check failed: {m}"),
        }
    }
}

impl From<ehuav_core::Error> for Failure {
    fn from(e: ehuav_core::Error) -> Self {
        match e {
            ehuav_core::Error::Invalid { .. } | ehuav_core::Error::Capability(_) => {
                Failure::Config(e.to_string())
            }
            ehuav_core::Error::Output(m) => Failure::Io(m),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ehuav",
    version,
    about = "Resource allocation and outage analysis for energy-harvesting UAV identification networks"
)]
struct Cli {
    /// Worker threads for Monte-Carlo loops (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print derived link quantities.
    Validate { config: PathBuf },

    /// Run one allocator on a single channel realization.
    Allocate {
        config: PathBuf,
        /// Composite channel gains, one per UAV (comma separated).
        #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
        gamma: Option<Vec<f64>>,
        /// Draw the realization from this seed instead.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "proposed")]
        algorithm: Algorithm,
    },

    /// Closed-form and simulated outage for a fixed allocation
    /// (equal bandwidth with the closed-form time split by default).
    Outage {
        config: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        beta: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },

    /// Mean iterations and minimum rate versus the number of pairs (CSV).
    Fig3 {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },

    /// Outage versus maximum altitude for several velocities (CSV).
    Fig4 {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn cmd_validate(path: &Path) -> Result<(), Failure> {
    let s = config::load(path)?;
    let c = &s.network;
    let geoms = place_nodes(c);
    let budgets = make_link_budgets(c, &geoms);
    println!("{}: ok", path.display());
    println!("pairs K = {}", c.pairs);
    println!("block time T = {:.6} ms", s.timing.block_time(c) * 1e3);
    println!(
        "equal-bandwidth time split = {:.6}",
        equal_bandwidth_taf(c.pairs, c.required_rate)?
    );
    println!("uav  d_h[m]   d_g[m]   A[m]    PL_h[dB]  PL_g[dB]  lambda       mu           rho");
    for (k, (g, b)) in geoms.iter().zip(&budgets).enumerate() {
        println!(
            "{:<4} {:<8.2} {:<8.2} {:<7.2} {:<9.3} {:<9.3} {:<12.5e} {:<12.5e} {:.5e}",
            k + 1,
            g.d_h,
            g.d_g,
            g.altitude,
            b.pl_h_db,
            b.pl_g_db,
            b.lambda,
            b.mu,
            b.rho
        );
    }
    Ok(())
}

fn cmd_allocate(
    path: &Path,
    gamma: Option<Vec<f64>>,
    seed: Option<u64>,
    algorithm: Algorithm,
) -> Result<(), Failure> {
    let s = config::load(path)?;
    let c = &s.network;
    let gamma = match gamma {
        Some(g) => {
            if g.len() != c.pairs {
                return Err(Failure::Config(format!(
                    "--gamma has {} values for {} UAVs",
                    g.len(),
                    c.pairs
                )));
            }
            if let Some(bad) = g.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(Failure::Config(format!(
                    "--gamma value {bad} must be positive"
                )));
            }
            g
        }
        None => {
            let budgets = make_link_budgets(c, &place_nodes(c));
            sample_realization(&budgets, c, &mut trial_rng(seed.unwrap_or(0), 0)).gamma
        }
    };
    let r = allocate(algorithm, &gamma, 1.0, c.epsilon, c.required_rate)?;
    let nu_r = s.timing.nu_r(algorithm, r.op_count, c);
    let fmt_vec = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.9}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("algorithm = {algorithm}");
    println!("gamma = [{}]", fmt_vec(&gamma));
    println!("tau = {:.9}", r.tau);
    println!("beta = [{}]", fmt_vec(&r.beta));
    println!(
        "iterations: tau {}, beta {}, inner {} (total {})",
        r.iters_tau,
        r.iters_beta,
        r.inner_iters_beta,
        r.total_iterations()
    );
    println!("op_count = {}", r.op_count);
    println!("nu_r = {nu_r:.6e}");
    println!("min rate (no RAP) = {:.9} bps/Hz", r.min_rate(&gamma, 1.0));
    println!("min rate = {:.9} bps/Hz", r.min_rate(&gamma, 1.0 - nu_r));
    Ok(())
}

fn cmd_outage(
    path: &Path,
    tau: Option<f64>,
    beta: Option<Vec<f64>>,
    trials: u64,
    seed: u64,
) -> Result<(), Failure> {
    let s = config::load(path)?;
    let c = &s.network;
    let tau = match tau {
        Some(t) => t,
        None => equal_bandwidth_taf(c.pairs, c.required_rate)?,
    };
    let beta = beta.unwrap_or_else(|| vec![1.0 / c.pairs as f64; c.pairs]);
    if beta.len() != c.pairs {
        return Err(Failure::Config(format!(
            "--beta has {} values for {} UAVs",
            beta.len(),
            c.pairs
        )));
    }
    let alloc = Allocation::new(tau, beta, 0.0)?;
    let budgets = make_link_budgets(c, &place_nodes(c));
    let analytic = outage_closed_form(&alloc, &budgets, c)?;
    let mc = outage_monte_carlo(&alloc, &budgets, c, trials, seed)?;
    let diff = (analytic - mc.p_out).abs();
    println!("tau = {:.9}", alloc.tau);
    println!("outage (closed form) = {analytic:.12e}");
    println!(
        "outage (simulated)   = {:.12e} +/- {:.3e} over {} trials",
        mc.p_out, mc.std_err, mc.trials
    );
    println!(
        "agreement within 3 standard errors: {} (|difference| = {diff:.3e})",
        if diff <= 3.0 * mc.std_err {
            "PASS"
        } else {
            "FAIL"
        }
    );
    Ok(())
}

fn write_rows(rows: &[ExperimentRow], out: &Path) -> Result<(), Failure> {
    let f = File::create(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    write_csv(rows, BufWriter::new(f))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn report(checks: &[TrendCheck]) -> Result<(), Failure> {
    for c in checks {
        println!(
            "[{}] {}{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            if c.detail.is_empty() {
                String::new()
            } else {
                format!(" -- {}", c.detail)
            }
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Trend(failed.join("; ")))
    }
}

fn cmd_fig3(path: &Path, out: &Path) -> Result<(), Failure> {
    let s = config::load(path)?;
    let rows = run_iterations_and_minrate_sweep(&s.iterations)?;
    write_rows(&rows, out)?;
    report(&iteration_sweep_trends(&rows))
}

fn cmd_fig4(path: &Path, out: &Path) -> Result<(), Failure> {
    let s = config::load(path)?;
    let rows = run_outage_altitude_sweep(&s.outage)?;
    write_rows(&rows, out)?;
    let Sweep::Altitude {
        altitudes_m,
        velocities_mps,
    } = &s.outage.sweep
    else {
        unreachable!("outage sweep is always over altitude")
    };
    let curve = equal_bandwidth_altitude_curve(&s.outage.scenario, altitudes_m)?;
    report(&outage_sweep_trends(
        &rows,
        velocities_mps,
        &curve,
        90.0,
        (70.0, 110.0),
    ))
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Allocate {
            config,
            gamma,
            seed,
            algorithm,
        } => cmd_allocate(&config, gamma, seed, algorithm),
        Command::Outage {
            config,
            tau,
            beta,
            trials,
            seed,
        } => cmd_outage(&config, tau, beta, trials, seed),
        Command::Fig3 { config, out } => cmd_fig3(&config, &out),
        Command::Fig4 { config, out } => cmd_fig4(&config, &out),
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
