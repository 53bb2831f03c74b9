//! Command line front end: experiment configs, reports and exit codes.
//!
//! Exit status is 0 on success, 1 when a computed check fails and 2 when the
//! configuration or an input file is unusable.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::acceptance::{reference_grid, CRITERIA};
use crate::corpus::{builtin, corpus, BUILTIN_NAMES};
use crate::cylinder::{block_split_check, compress_index, fiber_resolvent_bound_sweep, verify_scalar_bounds, CylinderFamily, FiberGrid, ScalarGrids};
use crate::error::{Error, Result};
use crate::grid::{cobordism_shift_test, index_class_grid, ChoppingSpec, CylinderGrid};
use crate::index::TruncationPolicy;
use crate::pairing::{auto_inverse_degree, cocycle_identities, connes_pairing, cylinder_window, index_trace_identity};
use crate::symbol::TrigSymbol;
use crate::toeplitz::index_theorem_check;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const CSV_COLUMNS: [&str; 6] = ["symbol_id", "index_svd", "index_winding", "index_cylinder", "pairing_times_8pi_i", "converged"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Toeplitz,
    Cylinder,
    Pairing,
    Bounds,
    Grid,
    Suite,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Built-in names or paths to symbol JSON files.
    #[serde(default)]
    pub symbols: Vec<String>,
    /// First truncation level of the index extraction.
    #[serde(default)]
    pub trunc: Option<usize>,
    /// Grid config JSON path.
    #[serde(default)]
    pub grid: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Maximum number of truncation levels tried.
    #[serde(default)]
    pub escalate_max: Option<usize>,
    /// Subset of acceptance criteria for the suite; empty runs all.
    #[serde(default)]
    pub criteria: Vec<u8>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn policy(&self) -> TruncationPolicy {
        let mut p = TruncationPolicy::default();
        if let Some(t) = self.trunc {
            p = p.with_start(t);
        }
        if let Some(m) = self.escalate_max {
            p = p.with_max_attempts(m);
        }
        p
    }
}

#[derive(Parser, Debug)]
#[command(name = "indexlab", version, about = "Fredholm indices of Toeplitz operators on the circle and the cylinder")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Index of T_phi on the circle against the winding number.
    Toeplitz(CommonArgs),
    /// Index of the compressed cylinder operator and its block split.
    Cylinder(CommonArgs),
    /// Cocycle pairing and trace identity on the cylinder.
    Pairing(CommonArgs),
    /// Scalar and fiber bounds on their default grids.
    Bounds(CommonArgs),
    /// Finite-difference grid index and cut shifts.
    Grid(CommonArgs),
    /// Acceptance criteria over the built-in corpus.
    Suite(CommonArgs),
    /// Run an experiment described by a JSON config.
    Run {
        config: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Built-in symbol name or path to a symbol JSON file; repeatable.
    #[arg(long = "symbol")]
    symbols: Vec<String>,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Directory for report.json and the CSV table.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    escalate_max: Option<usize>,
    /// Comma-separated criteria for the suite.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<u8>,
}

impl CommonArgs {
    fn into_config(self, kind: Kind) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            symbols: self.symbols,
            trunc: self.trunc,
            grid: self.grid,
            out: self.out,
            seed: self.seed,
            escalate_max: self.escalate_max,
            criteria: self.criteria,
        }
    }
}

/// A finished experiment: the report, the CSV table and whether every
/// check passed.
pub struct Outcome {
    pub report: Value,
    pub csv: String,
    pub passed: bool,
}

#[derive(Default)]
struct Row {
    id: String,
    index_svd: Option<i64>,
    index_winding: Option<i64>,
    index_cylinder: Option<i64>,
    pairing: Option<String>,
    converged: Option<bool>,
}

fn to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.id.clone(),
            opt(r.index_svd.map(|v| v.to_string())),
            opt(r.index_winding.map(|v| v.to_string())),
            opt(r.index_cylinder.map(|v| v.to_string())),
            opt(r.pairing.clone()),
            opt(r.converged.map(|v| v.to_string())),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Resolves each entry as a built-in name first and as a file path otherwise.
fn load_symbols(names: &[String], default: &[&str]) -> Result<Vec<(String, TrigSymbol)>> {
    let names: Vec<String> = if names.is_empty() { default.iter().map(|s| s.to_string()).collect() } else { names.to_vec() };
    names
        .into_iter()
        .map(|n| {
            let sym = if BUILTIN_NAMES.contains(&n.as_str()) { builtin(&n)? } else { TrigSymbol::load(Path::new(&n))? };
            Ok((n, sym))
        })
        .collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of everything that determines the output: the config without its
/// output path, plus the resolved symbols and grid.
fn config_hash(config: &ExperimentConfig, symbols: &[(String, TrigSymbol)], grid: Option<&CylinderGrid>) -> Result<String> {
    let canonical = json!({
        "config": ExperimentConfig { out: None, grid: None, ..config.clone() },
        "symbols": symbols.iter().map(|(n, s)| json!({ "id": n, "symbol": s.to_file() })).collect::<Vec<_>>(),
        "grid": grid,
    });
    Ok(hex(&Sha256::digest(serde_json::to_vec(&canonical)?)))
}

fn envelope(config: &ExperimentConfig, hash: String, passed: bool, results: Value) -> Value {
    json!({
        "tool": "indexlab",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": config.kind,
        "seed": config.seed,
        "config_sha256": hash,
        "passed": passed,
        "results": results,
    })
}

fn pairing_display(times: f64, defect: f64) -> (Value, String) {
    if defect < 1e-6 {
        let r = times.round() as i64;
        (json!(r), r.to_string())
    } else {
        (json!(times), format!("{times}"))
    }
}

fn run_toeplitz(symbols: &[(String, TrigSymbol)], policy: &TruncationPolicy) -> Result<(Vec<Value>, Vec<Row>, bool)> {
    let checks: Vec<_> = symbols.par_iter().map(|(_, s)| index_theorem_check(s, policy)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut ok = true;
    for ((id, _), c) in symbols.iter().zip(checks) {
        ok &= c.holds;
        rows.push(Row {
            id: id.clone(),
            index_svd: Some(c.index),
            index_winding: Some(c.winding),
            converged: Some(c.report.converged),
            ..Row::default()
        });
        out.push(json!({ "symbol": id, "index": c.index, "winding": c.winding, "theorem_check": c.holds, "report": c.report }));
    }
    Ok((out, rows, ok))
}

fn run_cylinder(symbols: &[(String, TrigSymbol)], policy: &TruncationPolicy) -> Result<(Vec<Value>, Vec<Row>, bool)> {
    let results: Vec<_> = symbols
        .par_iter()
        .map(|(_, s)| {
            let check = index_theorem_check(s, policy)?;
            let cyl = compress_index(s, policy)?;
            let split = block_split_check(s, auto_inverse_degree(s)?)?;
            Ok((check, cyl, split))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut ok = true;
    for ((id, _), (check, cyl, split)) in symbols.iter().zip(results) {
        let agree = cyl.converged && cyl.index == check.index;
        ok &= agree;
        rows.push(Row {
            id: id.clone(),
            index_svd: Some(check.index),
            index_winding: Some(check.winding),
            index_cylinder: Some(cyl.index),
            converged: Some(cyl.converged && check.report.converged),
            ..Row::default()
        });
        out.push(json!({ "symbol": id, "index": cyl.index, "circle_index": check.index, "agree": agree,
            "report": cyl, "block_split": split }));
    }
    Ok((out, rows, ok))
}

fn run_pairing(symbols: &[(String, TrigSymbol)], policy: &TruncationPolicy, seed: u64) -> Result<(Vec<Value>, Vec<Row>, bool)> {
    let results: Vec<_> = symbols
        .par_iter()
        .map(|(_, s)| {
            let w = cylinder_window(s, auto_inverse_degree(s)?)?;
            let p = connes_pairing(&w.u, &w.u_inv, &w.grading)?;
            let t = index_trace_identity(&w.u, &w.u_inv, &w.grading, &CylinderFamily::new(s), policy)?;
            Ok((p, t))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut ok = true;
    for ((id, _), (p, t)) in symbols.iter().zip(results) {
        let (rounded, defect) = p.rounded();
        let (shown, text) = pairing_display(p.times_8pi_i.re, defect);
        let agree = t.agree && rounded == -t.lhs && defect < 1e-6;
        ok &= agree;
        rows.push(Row {
            id: id.clone(),
            index_cylinder: Some(t.lhs),
            pairing: Some(text),
            converged: Some(t.report.converged),
            ..Row::default()
        });
        out.push(json!({ "symbol": id, "zeta": [p.times_8pi_i.re, p.times_8pi_i.im], "pairing_times_8pi_i": shown,
            "index_lhs": t.lhs, "trace_rhs": t.rhs, "agree": agree, "pairing": p, "trace_defect": t.defect }));
    }
    let ids = cocycle_identities(seed, 8, 16)?;
    ok &= ids.antisymmetry < 1e-10 && ids.hochschild < 1e-10;
    out.push(json!({ "cocycle_identities": ids }));
    Ok((out, rows, ok))
}

fn run_bounds() -> Result<(Value, String, bool)> {
    let scalar = verify_scalar_bounds(&ScalarGrids::default());
    let fiber = fiber_resolvent_bound_sweep(&FiberGrid::default());
    let (fiber_ok, fiber_value) = match fiber {
        Ok(f) => (true, serde_json::to_value(&f)?),
        Err(e @ Error::BoundViolated { .. }) => (false, json!({ "error": e.to_string() })),
        Err(e) => return Err(e),
    };
    let ok = scalar.all_hold() && fiber_ok;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["family", "evaluations", "max_ratio", "violations"]).map_err(io)?;
    for f in &scalar.families {
        w.write_record([f.name.clone(), f.evaluations.to_string(), format!("{:.12e}", f.max_ratio), f.violations.to_string()])
            .map_err(io)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?).expect("utf-8");
    let status = if ok { "all bounds hold" } else { "bound violations found" };
    Ok((json!({ "status": status, "scalar": scalar, "fiber": fiber_value }), csv, ok))
}

fn run_grid(symbols: &[(String, TrigSymbol)], grid: &CylinderGrid) -> Result<(Vec<Value>, Vec<Row>, bool)> {
    let spec = ChoppingSpec::Rational;
    let results: Vec<_> = symbols
        .par_iter()
        .map(|(_, s)| {
            let r = index_class_grid(grid, s, &spec)?;
            let shifts = [-4i64, 4].iter().map(|&d| cobordism_shift_test(grid, s, &spec, d)).collect::<Result<Vec<_>>>()?;
            Ok((r, shifts))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut rows = Vec::new();
    let mut ok = true;
    for ((id, _), (r, shifts)) in symbols.iter().zip(results) {
        let shifts_agree = shifts.iter().all(|s| s.agree);
        ok &= r.matches_oracle && shifts_agree;
        rows.push(Row {
            id: id.clone(),
            index_svd: Some(r.chopping.report.index),
            index_winding: Some(r.winding),
            converged: Some(r.chopping.report.converged),
            ..Row::default()
        });
        out.push(json!({ "symbol": id, "index": r.chopping.report.index, "oracle": r.oracle, "matches_oracle": r.matches_oracle,
            "report": r, "shifts": shifts }));
    }
    Ok((out, rows, ok))
}

fn run_suite(criteria: &[u8], policy: &TruncationPolicy) -> Result<(Vec<Value>, Vec<Row>, bool)> {
    for &c in criteria {
        if !(1..=CRITERIA.len() as u8).contains(&c) {
            return Err(Error::InvalidParameter(format!("no criterion {c}")));
        }
    }
    let selected: Vec<usize> = if criteria.is_empty() { (0..CRITERIA.len()).collect() } else { criteria.iter().map(|&c| c as usize - 1).collect() };
    let results: Vec<_> = selected.iter().map(|&i| CRITERIA[i]()).collect();
    let ok = results.iter().all(|r| r.passed);
    let symbols: Vec<(String, TrigSymbol)> = corpus().into_iter().map(|e| (e.id.to_string(), e.symbol)).collect();
    let table: Vec<_> = symbols
        .par_iter()
        .map(|(_, s)| {
            let check = index_theorem_check(s, policy)?;
            let cyl = compress_index(s, policy)?;
            let w = cylinder_window(s, auto_inverse_degree(s)?)?;
            let p = connes_pairing(&w.u, &w.u_inv, &w.grading)?;
            Ok((check, cyl, p))
        })
        .collect::<Result<_>>()?;
    let rows = symbols
        .iter()
        .zip(table)
        .map(|((id, _), (check, cyl, p))| {
            let (_, defect) = p.rounded();
            Row {
                id: id.clone(),
                index_svd: Some(check.index),
                index_winding: Some(check.winding),
                index_cylinder: Some(cyl.index),
                pairing: Some(pairing_display(p.times_8pi_i.re, defect).1),
                converged: Some(check.report.converged && cyl.converged),
            }
        })
        .collect();
    let out = results.iter().map(|r| serde_json::to_value(r).expect("serializable")).collect();
    Ok((out, rows, ok))
}

/// Runs one experiment without touching the file system beyond its inputs.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let policy = config.policy();
    let grid = match (&config.grid, config.kind) {
        (Some(p), _) => Some(CylinderGrid::load(p)?),
        (None, Kind::Grid) => Some(reference_grid()),
        _ => None,
    };
    let default: &[&str] = match config.kind {
        Kind::Grid => &["one", "z", "z^2"],
        Kind::Bounds | Kind::Suite => &[],
        _ => &BUILTIN_NAMES[..9],
    };
    let symbols = load_symbols(&config.symbols, default)?;
    let hash = config_hash(config, &symbols, grid.as_ref())?;
    let (results, csv, passed) = match config.kind {
        Kind::Toeplitz => tabulate(run_toeplitz(&symbols, &policy)?)?,
        Kind::Cylinder => tabulate(run_cylinder(&symbols, &policy)?)?,
        Kind::Pairing => tabulate(run_pairing(&symbols, &policy, config.seed)?)?,
        Kind::Grid => tabulate(run_grid(&symbols, grid.as_ref().expect("grid set above"))?)?,
        Kind::Suite => tabulate(run_suite(&config.criteria, &policy)?)?,
        Kind::Bounds => run_bounds()?,
    };
    Ok(Outcome { report: envelope(config, hash, passed, results), csv, passed })
}

fn tabulate((results, rows, ok): (Vec<Value>, Vec<Row>, bool)) -> Result<(Value, String, bool)> {
    Ok((Value::Array(results), to_csv(&rows)?, ok))
}

fn write_outputs(dir: &Path, outcome: &Outcome, kind: Kind) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&outcome.report)?;
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)?;
    let table = if kind == Kind::Bounds { "bounds.csv" } else { "table.csv" };
    std::fs::write(dir.join(table), &outcome.csv)?;
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence(_)
        | Error::BoundViolated { .. }
        | Error::SplitViolated { .. }
        | Error::NotInverse { .. }
        | Error::ConventionLockFailure { .. }
        | Error::EigenFailure(_)
        | Error::DegreeTooSmall { .. } => EXIT_ASSERTION,
        _ => EXIT_CONFIG,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("INDEXLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Error::InvalidParameter(format!("INDEXLAB_THREADS = {v:?} is not a count")))?;
    // A second initialization in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    Ok(())
}

/// Parses arguments, runs, prints the report and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match cli.command {
        Command::Toeplitz(a) => a.into_config(Kind::Toeplitz),
        Command::Cylinder(a) => a.into_config(Kind::Cylinder),
        Command::Pairing(a) => a.into_config(Kind::Pairing),
        Command::Bounds(a) => a.into_config(Kind::Bounds),
        Command::Grid(a) => a.into_config(Kind::Grid),
        Command::Suite(a) => a.into_config(Kind::Suite),
        Command::Run { config } => match ExperimentConfig::load(&config) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        },
    };
    let result = configure_threads().and_then(|_| run(&config)).and_then(|outcome| {
        if let Some(dir) = &config.out {
            write_outputs(dir, &outcome, config.kind)?;
        }
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            use std::io::Write;
            let text = serde_json::to_string_pretty(&outcome.report).expect("serializable");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
