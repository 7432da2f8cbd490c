//! `hzreach`: reachability, safety verification and set reduction from
//! scenario files.

mod error;
mod export;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hzreach::milp::{encode_avoidance, to_lp_format};
use hzreach::nn::BoundsMode;
use hzreach::reach::{reach_horizon, ReachResult};
use hzreach::reduce::{reduce_complexity, ReductionPolicy};
use hzreach::verify::{check_avoidance, Status};
use serde_json::json;

use crate::error::{exit, CliError, Result};
use crate::export::{write_file, write_reach, Manifest};
use crate::scenario::{load_set, Overrides, Scenario};

const DEFAULT_OUT: &str = "hzreach-out";

#[derive(Debug, Parser)]
#[command(
    name = "hzreach",
    version,
    about = "Exact reachability and safety verification with hybrid zonotopes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Bounds mode, overriding the scenario.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory (reach, verify) or file (reduce).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for a seeded network, overriding the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Fast,
}

impl From<ModeArg> for BoundsMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => BoundsMode::Exact,
            ModeArg::Fast => BoundsMode::Fast,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute reach sets and write sets, manifest and polygons.
    Reach { scenario: PathBuf },
    /// Check the reach sets against the scenario's unsafe set.
    Verify {
        scenario: PathBuf,
        /// Write each step's avoidance MILP in LP format.
        #[arg(long)]
        dump_milp: bool,
    },
    /// Reduce a set file.
    Reduce {
        set: PathBuf,
        /// Continuous generators to eliminate.
        #[arg(long = "ng")]
        n_g: usize,
        /// Binary generators to relax.
        #[arg(long = "nb")]
        n_b: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.report() }));
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn run(cli: &Cli) -> Result<i32> {
    let overrides = Overrides {
        mode: cli.mode.map(Into::into),
        seed: cli.seed,
    };
    match &cli.command {
        Command::Reach { scenario } => run_reach(&Scenario::load(scenario, &overrides)?, cli.out.as_deref()),
        Command::Verify { scenario, dump_milp } => {
            run_verify(&Scenario::load(scenario, &overrides)?, cli.out.as_deref(), *dump_milp)
        }
        Command::Reduce { set, n_g, n_b } => run_reduce(set, *n_g, *n_b, cli.out.as_deref()),
    }
}

fn output_dir(scenario: &Scenario, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn compute(scenario: &Scenario) -> Result<ReachResult> {
    Ok(reach_horizon(
        &scenario.initial_set,
        &scenario.system,
        &scenario.network,
        scenario.horizon,
        &scenario.options,
    )?)
}

fn run_reach(scenario: &Scenario, out: Option<&Path>) -> Result<i32> {
    let result = compute(scenario)?;
    let dir = output_dir(scenario, out);
    let manifest = Manifest {
        scenario: scenario.path.display().to_string(),
        horizon: scenario.horizon,
        mode: scenario.options.mode,
        seed: scenario.seed,
        projection: scenario.projection,
        steps: Vec::new(),
        polygon_file: "polygons.csv".into(),
    };
    let (manifest_path, skipped) = write_reach(&dir, &result, scenario.projection, scenario.enumeration_cap, manifest)?;
    for note in skipped {
        eprintln!("warning: {note}");
    }
    for (t, z) in result.sets.iter().enumerate() {
        println!(
            "R_{t}: n_g={} n_b={} n_c={} order={:.3}",
            z.n_g(),
            z.n_b(),
            z.n_c(),
            z.order()
        );
    }
    println!("wrote {}", manifest_path.display());
    Ok(exit::OK)
}

fn run_verify(scenario: &Scenario, out: Option<&Path>, dump_milp: bool) -> Result<i32> {
    let o = scenario
        .unsafe_set
        .as_ref()
        .ok_or_else(|| CliError::invalid("scenario", &scenario.path, "verify needs an unsafe_set"))?;
    let result = compute(scenario)?;
    let verdict = check_avoidance(&result, o)?;
    let dir = output_dir(scenario, out);
    export::create_dir(&dir)?;
    if dump_milp {
        for t in 1..result.sets.len() {
            let (p, _) = encode_avoidance(&result.sets[t], o)?;
            write_file(&dir.join(format!("milp_{t}.lp")), &to_lp_format(&p))?;
        }
    }
    let report = verdict.to_json();
    write_file(&dir.join("verdict.json"), &report)?;
    println!("{report}");
    Ok(match verdict.status {
        Status::Safe => exit::OK,
        Status::Unsafe | Status::Boundary => exit::UNSAFE,
        Status::Indeterminate => exit::INDETERMINATE,
    })
}

fn run_reduce(path: &Path, n_g: usize, n_b: usize, out: Option<&Path>) -> Result<i32> {
    let z = load_set(path)?;
    if n_b > z.n_b() {
        return Err(CliError::Usage(format!(
            "--nb {n_b} exceeds the set's {} binaries",
            z.n_b()
        )));
    }
    let reduced = reduce_complexity(&z, &ReductionPolicy::new(n_g, n_b))?;
    let target = out.map(Path::to_path_buf).unwrap_or_else(|| {
        let stem = path
            .file_stem()
            .map_or("set".into(), |s| s.to_string_lossy().into_owned());
        path.with_file_name(format!("{stem}.reduced.json"))
    });
    write_file(&target, &reduced.to_json())?;
    let row = |z: &hzreach::HybridZonotope| json!([z.n_g(), z.n_b(), z.n_c(), z.order()]);
    println!(
        "{}",
        json!({ "before": row(&z), "after": row(&reduced), "file": target.display().to_string() })
    );
    Ok(exit::OK)
}
