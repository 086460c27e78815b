//! Command-line front end. Reports go to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 domain or validation failure, 2 I/O or parse
//! failure, 3 numeric failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::engine::{assemble_trace, EngineError, ExpansionRecord, DEFAULT_ORDER};
use crate::inverse::{invert, HeatData, InverseError, InverseReport};
use crate::model::config::{self, ConfigError, LoadedConfig};
use crate::model::{BoundaryCondition, BoundaryError, HybridSpec, SelfAdjointDiagBC};
use crate::oracle::{oracle_table, OracleError};
use crate::scalar::to_float;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Relative tolerance of the round-trip comparison.
pub const ROUNDTRIP_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "hybrid-trace", version, about = "Trace expansions and inverse problems on hybrid manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a hybrid configuration and its boundary conditions.
    Validate { config: PathBuf },
    /// Expand Tr R^2(z) and write the coefficient file.
    Expand {
        config: PathBuf,
        /// Highest power of 1/z kept.
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add this many terms of each coefficient's 1/L expansion.
        #[arg(long = "l-tail")]
        l_tail: Option<usize>,
    },
    /// Recover geometry and boundary data from a coefficient file.
    Invert {
        coeffs: PathBuf,
        /// Heat coefficient file; flat data when absent.
        #[arg(long)]
        heat: Option<PathBuf>,
    },
    /// Expand a configuration, invert the result and compare.
    Roundtrip { config: PathBuf },
    /// Compare the series with direct numeric evaluation.
    Oracle {
        config: PathBuf,
        /// Comma-separated evaluation points, each at least 10.
        #[arg(long, value_delimiter = ',', default_values_t = [50.0, 100.0, 200.0, 400.0])]
        z: Vec<f64>,
    },
}

/// A terminating failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

type Outcome = Result<i32, Failure>;

pub fn run(cli: &Cli) -> i32 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let r = match &cli.command {
        Command::Validate { config } => cmd_validate(config, &mut out),
        Command::Expand { config, order, out: path, l_tail } => cmd_expand(config, *order, path.as_deref(), *l_tail, &mut out),
        Command::Invert { coeffs, heat } => cmd_invert(coeffs, heat.as_deref(), &mut out),
        Command::Roundtrip { config } => cmd_roundtrip(config, &mut out),
        Command::Oracle { config, z } => cmd_oracle(config, z, &mut out),
    };
    let _ = out.flush();
    match r {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn io_fail(e: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, e.to_string())
}

fn load_config(path: &Path) -> Result<LoadedConfig, Failure> {
    config::load(path).map_err(|e| Failure::new(EXIT_IO, e.to_string()))
}

fn engine_fail(e: EngineError) -> Failure {
    match e {
        EngineError::Series(s) => Failure::new(EXIT_NUMERIC, s.to_string()),
        other => Failure::new(EXIT_DOMAIN, other.to_string()),
    }
}

fn inverse_fail(e: &InverseError) -> Failure {
    Failure::new(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_DOMAIN }, e.to_string())
}

fn boundary_findings(cfg: &LoadedConfig) -> Vec<String> {
    let mut findings = Vec::new();
    for (j, (name, block)) in cfg.point_names.iter().zip(&cfg.blocks).enumerate() {
        let Some(b) = block else {
            findings.push(format!("MissingBoundary: no boundary condition for `{name}`"));
            continue;
        };
        match b.check(j).and_then(|_| b.is_reducible(j)) {
            Ok(false) => {}
            Ok(true) => findings.push(format!("Reducible: `{name}` decouples segment and manifold")),
            Err(BoundaryError::NotSelfAdjoint { reason, .. }) => {
                findings.push(format!("NotSelfAdjoint: `{name}`: {reason}"))
            }
            Err(e) => findings.push(format!("BoundaryError: `{name}`: {e}")),
        }
    }
    findings
}

/// Configuration checked for both the hybrid and its boundary condition.
fn checked(cfg: &LoadedConfig) -> Result<BoundaryCondition, Vec<String>> {
    let mut findings: Vec<String> = match cfg.hybrid.validate() {
        Ok(()) => Vec::new(),
        Err(es) => es.iter().map(ToString::to_string).collect(),
    };
    findings.extend(boundary_findings(cfg));
    if findings.is_empty() {
        cfg.boundary()
    } else {
        Err(findings)
    }
}

fn findings_fail(findings: Vec<String>) -> Failure {
    Failure::new(EXIT_DOMAIN, format!("invalid configuration:\n  {}", findings.join("\n  ")))
}

pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Outcome {
    let cfg = load_config(path)?;
    match checked(&cfg) {
        Ok(_) => {
            let h = &cfg.hybrid;
            writeln!(
                out,
                "ok: {} manifolds, {} segments, {} gluing points",
                h.manifolds.len(),
                h.segments.len(),
                h.n_points()
            )
            .map_err(io_fail)?;
            Ok(EXIT_OK)
        }
        Err(findings) => {
            for f in &findings {
                writeln!(out, "{f}").map_err(io_fail)?;
            }
            Ok(EXIT_DOMAIN)
        }
    }
}

pub fn cmd_expand(path: &Path, order: usize, dest: Option<&Path>, l_tail: Option<usize>, out: &mut dyn Write) -> Outcome {
    let cfg = load_config(path)?;
    let bc = checked(&cfg).map_err(findings_fail)?;
    let exp = assemble_trace(&cfg.hybrid, &bc, order).map_err(engine_fail)?;
    let text = exp.to_json(l_tail);
    match dest {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display())))?,
        None => out.write_all(text.as_bytes()).map_err(io_fail)?,
    }
    Ok(EXIT_OK)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn report_code(report: &InverseReport) -> i32 {
    if report.errors.iter().any(InverseError::is_numeric) {
        EXIT_NUMERIC
    } else if report.errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_DOMAIN
    }
}

pub fn cmd_invert(coeffs: &Path, heat: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let record = ExpansionRecord::from_json(&read(coeffs)?).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    let series = record.series().map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    let heat = match heat {
        Some(p) => config::parse_heat(&read(p)?).map_err(|e: ConfigError| Failure::new(EXIT_IO, e.to_string()))?,
        None => {
            log::warn!("no heat file given; assuming flat data (all a_k = 0 for k >= 2, a_n(q) = 0 for n >= 1)");
            HeatData::default()
        }
    };
    let report = invert(&series, &heat).map_err(|e| inverse_fail(&e))?;
    for e in &report.errors {
        log::error!("{e}");
    }
    out.write_all(report.to_json().as_bytes()).map_err(io_fail)?;
    Ok(report_code(&report))
}

/// Largest order `≤ cap` for which every heat coefficient the expansion
/// needs is known.
pub fn supported_order(h: &HybridSpec, cap: usize) -> Option<usize> {
    (4..=cap).rev().find(|&q| {
        h.manifolds.iter().all(|m| {
            (0..=(q - 2) / 2).all(|k| m.heat(k).is_ok())
                && m.points.iter().all(|p| (1..=(q - 4) / 2).all(|n| p.local_heat.get(n).is_ok()))
        })
    })
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn max_rel(got: &[f64], want: &[f64]) -> Option<f64> {
    (got.len() == want.len()).then(|| got.iter().zip(want).map(|(g, w)| rel_err(*g, *w)).fold(0.0, f64::max))
}

pub fn cmd_roundtrip(path: &Path, out: &mut dyn Write) -> Outcome {
    let cfg = load_config(path)?;
    let bc = checked(&cfg).map_err(findings_fail)?;
    let h = &cfg.hybrid;
    let n = h.n_points();
    let order = (n + 4).max(supported_order(h, DEFAULT_ORDER).unwrap_or(0));
    let heat = HeatData::from_hybrid(h, order).map_err(|e| Failure::new(EXIT_DOMAIN, e))?;
    let exp = assemble_trace(h, &bc, order).map_err(engine_fail)?;
    let report = invert(&exp.series, &heat).map_err(|e| inverse_fail(&e))?;

    let g = &report.geometry;
    let geometry_ok = report.is_hybrid == (n > 0)
        && g.sum_volume == h.sum_volume().to_string()
        && g.sum_length == h.sum_length().to_string()
        && g.n_points == n
        && g.n_segments == h.segments.len()
        && g.sum_euler == h.sum_euler()
        && g.euler_hybrid == h.sum_euler() - n as i64;
    let mut pass = geometry_ok;
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(io_fail);
    w(out, format!("order: {order}"))?;
    w(out, format!("geometry: {}", mark(geometry_ok)))?;

    let diag = SelfAdjointDiagBC::from_boundary(&bc);
    match (&diag, n) {
        (_, 0) => w(out, "boundary: skipped (no gluing points)".into())?,
        (None, _) => w(out, "boundary: skipped (conditions outside the diagonal class)".into())?,
        (Some(d), _) => {
            let prec = 64;
            let mut truth: Vec<(f64, f64, f64)> = d
                .points
                .iter()
                .map(|p| {
                    let off = crate::scalar::gq_to_mp(&p.off, prec);
                    (to_float(&p.seg, prec).to_f64(), off.abs().real().to_f64(), to_float(&p.top, prec).to_f64())
                })
                .collect();
            truth.sort_by(|a, b| a.0.total_cmp(&b.0));
            let want = |f: fn(&(f64, f64, f64)) -> f64| truth.iter().map(f).collect::<Vec<f64>>();
            let stages = [
                ("lambda_seg", &report.lambda_seg, want(|t| t.0)),
                ("lambda_off", &report.lambda_off_abs, want(|t| t.1)),
                ("lambda_top", &report.lambda_top, want(|t| t.2)),
            ];
            for (name, got, expect) in stages {
                match max_rel(got, &expect) {
                    Some(e) if e <= ROUNDTRIP_TOL => w(out, format!("{name}: PASS (max relative error {e:.3e})"))?,
                    Some(e) => {
                        pass = false;
                        w(out, format!("{name}: FAIL (max relative error {e:.3e})"))?
                    }
                    None => {
                        pass = false;
                        let why = report.stage(name).and_then(|s| s.message.clone()).unwrap_or_default();
                        w(out, format!("{name}: FAIL (not recovered: {why})"))?
                    }
                }
            }
        }
    }
    w(out, format!("roundtrip: {}", mark(pass)))?;
    Ok(if pass {
        EXIT_OK
    } else if report.errors.iter().any(InverseError::is_numeric) {
        EXIT_NUMERIC
    } else {
        EXIT_DOMAIN
    })
}

pub fn cmd_oracle(path: &Path, zs: &[f64], out: &mut dyn Write) -> Outcome {
    let cfg = load_config(path)?;
    let bc = checked(&cfg).map_err(findings_fail)?;
    let order = supported_order(&cfg.hybrid, DEFAULT_ORDER)
        .ok_or_else(|| Failure::new(EXIT_DOMAIN, "heat data too short for any expansion order"))?;
    let rows = oracle_table(&cfg.hybrid, &bc, order, zs).map_err(|e| match e {
        OracleError::Engine(e) => engine_fail(e),
        OracleError::Series(e) => Failure::new(EXIT_NUMERIC, e.to_string()),
        other => Failure::new(EXIT_DOMAIN, other.to_string()),
    })?;
    writeln!(out, "# order {order}").map_err(io_fail)?;
    writeln!(out, "{:>12}  {:>24}  {:>24}  {:>12}", "z", "series", "oracle", "abs_diff").map_err(io_fail)?;
    for r in rows {
        writeln!(out, "{:>12}  {:>24.17e}  {:>24.17e}  {:>12.4e}", r.z, r.series, r.oracle, r.difference)
            .map_err(io_fail)?;
    }
    Ok(EXIT_OK)
}
