//! Batch runner for the brick-wall circuit experiments. Flags override the
//! optional config file, which overrides built-in defaults. Writes a CSV of
//! per-measurement rows plus a JSON summary next to it, and prints a short
//! digest to stdout.
//!
//! Exit codes: 0 clean run, 1 I/O or backend failure, 2 bad arguments or
//! config, 3 run invariant violations, 4 a requested fit was unavailable.

use brickwall::circuit::CircuitSpec;
use brickwall::experiment::{
    parse_alphas, render_summary, run_experiment, ConfigPatch, Mode, RunConfig,
};
use brickwall::rng::{derive_key, StreamDomain};
use brickwall::Error;
use clap::Parser;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    version,
    about = "Charge-conserving brick-wall circuit simulator",
    long_about = "Evolves random sigma_x product states under brick-wall circuits of \
                  charge-conserving two-site gates, measuring middle-cut entanglement, \
                  zero-block leakage, and certified entropy bounds."
)]
struct Cli {
    /// Chain length, even, 2..=28 [default: 12]
    #[arg(long)]
    spins: Option<usize>,

    /// Circuit depth in brick-wall layers [default: 20]
    #[arg(long)]
    depth: Option<usize>,

    /// Number of circuit/sign realizations [default: 8]
    #[arg(long)]
    ensemble: Option<usize>,

    /// Master seed; every other stream is derived from it [default: 7]
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated Renyi orders above 1, e.g. "2,3,inf" [default: 2,3,inf]
    #[arg(long)]
    alphas: Option<String>,

    /// entropy, transport, proof, or all [default: entropy]
    #[arg(long)]
    mode: Option<String>,

    /// Record rows at multiples of this layer count [default: 1]
    #[arg(long)]
    measure_every: Option<usize>,

    /// Prefactor k in the block schedule m(t) = ceil(k sqrt(t ln t)) [default: 2]
    #[arg(long)]
    m_const: Option<f64>,

    /// Degree of the membership threshold polynomial p(t) = t^d [default: 2]
    #[arg(long)]
    p_degree: Option<u32>,

    /// Worker threads; 0 keeps the library default [default: 0]
    #[arg(long)]
    workers: Option<usize>,

    /// CSV output path; the summary goes to the same path with a
    /// .summary.json extension [default: run.csv]
    #[arg(long)]
    out: Option<PathBuf>,

    /// Read key = value defaults from this file before applying flags
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Fit the mean of log entropies instead of the log of mean entropies
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    log_then_mean: Option<bool>,

    /// Growth fits start at this time [default: 2]
    #[arg(long)]
    fit_t_min: Option<usize>,

    /// Replace every gate with the identity (debugging hook)
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    identity_gates: Option<bool>,

    /// Write the gate table of realization 0 to PATH and exit
    #[arg(long, value_name = "PATH")]
    dump_circuit: Option<PathBuf>,
}

fn cli_patch(cli: &Cli) -> brickwall::Result<ConfigPatch> {
    Ok(ConfigPatch {
        num_spins: cli.spins,
        depth: cli.depth,
        ensemble: cli.ensemble,
        master_seed: cli.seed,
        alphas: cli.alphas.as_deref().map(parse_alphas).transpose()?,
        mode: cli.mode.as_deref().map(str::parse::<Mode>).transpose()?,
        measure_every: cli.measure_every,
        m_const: cli.m_const,
        p_degree: cli.p_degree,
        workers: cli.workers,
        out: cli.out.clone(),
        log_then_mean: cli.log_then_mean,
        fit_t_min: cli.fit_t_min,
        identity_gates: cli.identity_gates,
    })
}

fn run(cli: &Cli) -> brickwall::Result<i32> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        ConfigPatch::parse(&text)?.apply(&mut config);
    }
    cli_patch(cli)?.apply(&mut config);
    config.validate()?;

    if let Some(path) = &cli.dump_circuit {
        let spec = if config.identity_gates {
            CircuitSpec::identity(config.num_spins, config.depth)?
        } else {
            let seed = derive_key(config.master_seed, StreamDomain::Circuit, 0);
            CircuitSpec::new(config.num_spins, config.depth, seed)?
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        spec.write_gate_table(BufWriter::new(File::create(path)?))?;
        println!("gate table: {}", path.display());
        return Ok(0);
    }

    let outcome = run_experiment(&config)?;
    print!("{}", render_summary(&outcome.summary));
    println!("csv: {}", outcome.csv_path.display());
    println!("summary: {}", outcome.summary_path.display());
    Ok(outcome.exit_code())
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::InvalidArgument(_) | Error::InvalidConfig(_) => 2,
                _ => 1,
            };
            std::process::exit(code);
        }
    }
}
