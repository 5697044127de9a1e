//! Command-line surface: `solve`, `verify`, `oracle`, `region-map`, `scan`.
//!
//! Solver commands emit JSON on stdout (or `--out`); sweep commands emit
//! CSV. Outputs are deterministic for identical flags; the JSON metadata
//! block can be dropped with `--no-meta` for diff-stable files.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::equivalence::kw_verify;
use crate::information::{info_dense, log_det_dense};
use crate::model::DispersionSpec;
use crate::regions::{
    conjecture_scan, region_map, write_region_csv, write_scan_csv, MapConfig, ScanConfig,
};
use crate::solvers::{grid_oracle, solve, Design, NumericOptions, OracleOptions};

#[derive(Parser)]
#[command(name = "optdes", version, about = "D-optimal designs on the hypercube for regression with equi-correlated random coefficients", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Optimality tolerance for the verification verdict.
    #[arg(long, global = true, env = "OPTDES_TOL")]
    tolerance: Option<f64>,

    /// Write the output artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Omit the metadata block from JSON outputs.
    #[arg(long, global = true)]
    no_meta: bool,

    /// Worker threads for sweep commands (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SpecArgs {
    /// Number of regression factors K (dimension of the hypercube).
    #[arg(long)]
    k: usize,
    /// Intercept variance (observational error variance included).
    #[arg(long, allow_negative_numbers = true)]
    d0: f64,
    /// Common slope variance.
    #[arg(long, allow_negative_numbers = true)]
    d1: f64,
    /// Common slope covariance.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    d2: f64,
}

impl SpecArgs {
    fn to_spec(&self) -> Result<DispersionSpec> {
        DispersionSpec::new(self.k, self.d0, self.d1, self.d2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignFormat {
    Rhombic,
    Discrete,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a D-optimal design for the given dispersion parameters.
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        /// Design representation in the output.
        #[arg(long, value_enum)]
        format: Option<DesignFormat>,
        /// Sweep budget for the numeric solver.
        #[arg(long)]
        max_sweeps: Option<usize>,
    },
    /// Check a design file against the optimality conditions.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
        /// Design JSON file ({"format": "rhombic"|"discrete", ...}).
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Brute-force D-optimal design over a uniform grid of candidates.
    Oracle {
        #[command(flatten)]
        spec: SpecArgs,
        /// Grid nodes per axis.
        #[arg(long, default_value_t = 41)]
        grid: usize,
        /// Iteration cap for the multiplicative loop.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Classify the (d1, d2) plane at d0 = 1 by the boundary polynomial.
    RegionMap {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 60)]
        resolution: usize,
        /// Solve every cell and record what the solver found.
        #[arg(long)]
        confirm: bool,
        #[arg(long, allow_negative_numbers = true)]
        d1_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        d1_max: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        d2_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        d2_max: Option<f64>,
    },
    /// Scan the cone for cells without an optimal rhombic design.
    Scan {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 40)]
        resolution: usize,
        /// Sweep budget for the numeric solver per cell.
        #[arg(long)]
        budget: Option<usize>,
    },
}

/// Parses the arguments and runs one command, returning the process exit
/// code: 0 on success, 1 on usage errors, 2 on domain errors, 3 on
/// non-convergence.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
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
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConvergence(_) | Error::Internal(_) => 3,
                _ => 2,
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let tols = match cli.tolerance {
        Some(t) => Tolerances::with_kw(t),
        None => Tolerances::default(),
    };
    let out = cli.out.as_deref();
    let no_meta = cli.no_meta;

    match cli.command {
        Command::Solve { spec, format, max_sweeps } => {
            let spec = spec.to_spec()?;
            let mut opts = NumericOptions::default();
            if let Some(n) = max_sweeps {
                opts.max_sweeps = n;
            }
            let mut result = solve(&spec, &opts, &tols)?;
            if let Some(DesignFormat::Discrete) = format {
                result.design = Design::Discrete(result.design.to_discrete()?);
                if let Some(alt) = result.alternate.as_mut() {
                    alt.design = Design::Discrete(alt.design.to_discrete()?);
                }
            }
            let mut value = serde_json::to_value(&result)?;
            attach_meta(
                &mut value,
                json!({
                    "tool": "optdes",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": "solve",
                    "options": {
                        "max_sweeps": opts.max_sweeps,
                        "tolerance": tols.kw,
                    },
                }),
                no_meta,
            );
            emit_json(&value, out)
        }
        Command::Verify { spec, input } => {
            let spec = spec.to_spec()?;
            let design = read_design(&input)?;
            if design.k() != spec.k() {
                return Err(Error::Domain(format!(
                    "design dimension {} does not match --k {}",
                    design.k(),
                    spec.k()
                )));
            }
            let dd = design.to_discrete()?;
            let report = kw_verify(&spec, &dd, tols.kw)?;
            let log_det = log_det_dense(&info_dense(&spec, &dd)?);
            let mut value = serde_json::to_value(&report)?;
            value["log_det"] = serde_json::to_value(log_det)?;
            attach_meta(
                &mut value,
                json!({
                    "tool": "optdes",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": "verify",
                    "options": { "tolerance": tols.kw },
                }),
                no_meta,
            );
            emit_json(&value, out)
        }
        Command::Oracle { spec, grid, max_iters } => {
            let spec = spec.to_spec()?;
            let mut opts = OracleOptions::default();
            if let Some(n) = max_iters {
                opts.max_iters = n;
            }
            let result = grid_oracle(&spec, grid, &opts, &tols)?;
            let mut value = serde_json::to_value(&result)?;
            attach_meta(
                &mut value,
                json!({
                    "tool": "optdes",
                    "version": env!("CARGO_PKG_VERSION"),
                    "command": "oracle",
                    "options": {
                        "grid": grid,
                        "max_iters": opts.max_iters,
                        "prune_weight": opts.prune_weight,
                        "cluster_radius": 2.0 / (grid - 1) as f64,
                        "tolerance": tols.kw,
                    },
                }),
                no_meta,
            );
            emit_json(&value, out)
        }
        Command::RegionMap { k, resolution, confirm, d1_min, d1_max, d2_min, d2_max } => {
            let mut cfg = MapConfig::new(k, resolution, confirm);
            if let Some(v) = d1_min {
                cfg.d1_min = v;
            }
            if let Some(v) = d1_max {
                cfg.d1_max = v;
            }
            if let Some(v) = d2_min {
                cfg.d2_min = v;
            }
            if let Some(v) = d2_max {
                cfg.d2_max = v;
            }
            if k < 2 {
                return Err(Error::Domain("--k must be at least 2".into()));
            }
            let rows = region_map(&cfg, &tols);
            let mut buf = Vec::new();
            write_region_csv(&rows, &mut buf)?;
            emit_bytes(&buf, out)
        }
        Command::Scan { k, resolution, budget } => {
            if k < 2 {
                return Err(Error::Domain("--k must be at least 2".into()));
            }
            let mut cfg = ScanConfig::new(k, resolution);
            if let Some(b) = budget {
                cfg.budget_sweeps = b;
            }
            let summary = conjecture_scan(&cfg, &tols);
            let mut buf = Vec::new();
            write_scan_csv(&summary, &mut buf)?;
            if let Some(path) = out {
                fs::write(path, &buf)?;
                let digest = serde_json::to_value(&summary)?;
                println!("{}", serde_json::to_string_pretty(&digest)?);
            } else {
                print!("{}", String::from_utf8_lossy(&buf));
            }
            Ok(())
        }
    }
}

fn attach_meta(value: &mut Value, meta: Value, no_meta: bool) {
    if !no_meta {
        if let Value::Object(map) = value {
            map.insert("meta".to_string(), meta);
        }
    }
}

fn emit_json(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(value)?);
    emit_bytes(text.as_bytes(), out)
}

fn emit_bytes(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => print!("{}", String::from_utf8_lossy(bytes)),
    }
    Ok(())
}

/// Reads a design file: either a bare design object with a `format` tag or
/// any JSON object with a `design` field holding one (solver output).
fn read_design(path: &Path) -> Result<Design> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    let design_value = match value.get("design") {
        Some(inner) => inner.clone(),
        None => value,
    };
    Ok(serde_json::from_value(design_value)?)
}
