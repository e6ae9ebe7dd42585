//! CSV, manifest and checkpoint emission. All floating-point values are
//! printed with 17 significant digits so files round-trip bit-exactly,
//! and writing the same results twice produces byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use hydrolim_core::harness::{
    DiffReport, FitOutcome, PeRunLog, RateNorm, SnsRunLog, SweepResult,
};
use hydrolim_core::{Error, Result};

use crate::config::{Mode, RunConfig};

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)
        .map_err(|e| Error::Config(format!("cannot write '{}': {e}", path.display())))
}

/// Creates the output directory and proves it is writable before any
/// compute starts.
pub fn preflight(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output directory '{}': {e}", dir.display())))?;
    let probe = dir.join(".write-probe");
    std::fs::write(&probe, b"ok")
        .map_err(|e| Error::Config(format!("output directory '{}' is not writable: {e}", dir.display())))?;
    let _ = std::fs::remove_file(&probe);
    Ok(())
}

pub const PE_CSV_COLUMNS: &str = "t,l2_v,grad_v,l4_v,dz_v,lap_v,energy_residual";
pub const SNS_CSV_COLUMNS: &str = "t,l2_v,eps_l2_w,grad_v,eps_grad_w,div_residual,energy_slack";
pub const DIFF_CSV_COLUMNS: &str = "t,l2_v,eps_l2_w,grad_v,eps_grad_w,l2_w,h1_v";
pub const RATES_CSV_COLUMNS: &str = "norm,eps,error,slope,residual";

pub fn pe_diagnostics_csv(log: &PeRunLog) -> String {
    let mut s = String::from(PE_CSV_COLUMNS);
    s.push('\n');
    for r in &log.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.l2_v),
            fmt_f64(r.grad_v),
            fmt_f64(r.l4_v),
            fmt_f64(r.dz_v),
            fmt_f64(r.lap_v),
            fmt_f64(r.energy_residual),
        );
    }
    s
}

pub fn sns_diagnostics_csv(log: &SnsRunLog) -> String {
    let mut s = String::from(SNS_CSV_COLUMNS);
    s.push('\n');
    for r in &log.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.l2_v),
            fmt_f64(r.eps_l2_w),
            fmt_f64(r.grad_v),
            fmt_f64(r.eps_grad_w),
            fmt_f64(r.divergence_residual),
            fmt_f64(r.energy_slack),
        );
    }
    s
}

pub fn diff_csv(report: &DiffReport) -> String {
    let mut s = String::from(DIFF_CSV_COLUMNS);
    s.push('\n');
    let e = report.eps;
    for r in &report.samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.l2_v),
            fmt_f64(e * r.l2_w),
            fmt_f64(r.grad_v),
            fmt_f64(e * r.grad_w),
            fmt_f64(r.l2_w),
            fmt_f64(r.h1_v),
        );
    }
    s
}

/// One row per (norm, eps); the fitted slope and residual repeat on each
/// row of the norm they belong to.
pub fn rates_csv(sweep: &SweepResult) -> String {
    let mut s = String::from(RATES_CSV_COLUMNS);
    s.push('\n');
    for (norm, out) in &sweep.fits {
        let (slope, residual) = match &out.fit {
            Ok(f) => (fmt_f64(f.slope), fmt_f64(f.residual)),
            Err(_) => ("nan".into(), "nan".into()),
        };
        for o in &sweep.outcomes {
            let err = hydrolim_core::harness::error_value(&o.report, *norm);
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                norm.label(),
                fmt_f64(o.report.eps),
                fmt_f64(err),
                slope,
                residual,
            );
        }
    }
    s
}

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Flat, diffable manifest: config echo, content hash of the echoed
/// inputs, emitted files with their column layouts, and any sweep
/// exclusions. No timestamps, so identical inputs yield identical bytes.
pub struct ManifestBuilder {
    body: String,
}

impl ManifestBuilder {
    pub fn new(cfg: &RunConfig, mode: Mode) -> Self {
        let echo = cfg.echo(mode);
        let mut body = String::new();
        let _ = writeln!(body, "# run manifest");
        let _ = writeln!(body, "config_hash = sha256:{}", sha256_hex(&echo));
        body.push_str(&echo);
        ManifestBuilder { body }
    }

    pub fn kv(&mut self, key: &str, value: &str) -> &mut Self {
        let _ = writeln!(self.body, "{key} = {value}");
        self
    }

    pub fn file(&mut self, name: &str, columns: &str) -> &mut Self {
        let _ = writeln!(self.body, "file.{name} = columns[{columns}]");
        self
    }

    pub fn sweep_details(&mut self, sweep: &SweepResult) -> &mut Self {
        for (norm, out) in &sweep.fits {
            self.fit_line(*norm, out);
        }
        self
    }

    fn fit_line(&mut self, norm: RateNorm, out: &FitOutcome) {
        let label = norm.label();
        match &out.fit {
            Ok(f) => {
                let _ = writeln!(
                    self.body,
                    "fit.{label} = slope {} residual {} points {}",
                    fmt_f64(f.slope),
                    fmt_f64(f.residual),
                    f.points.len()
                );
            }
            Err(e) => {
                let _ = writeln!(self.body, "fit.{label} = failed ({e})");
            }
        }
        let excluded = if out.excluded.is_empty() {
            "none".to_string()
        } else {
            out.excluded
                .iter()
                .map(|&e| fmt_f64(e))
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(self.body, "excluded.{label} = {excluded}");
        for (eps, floor) in &out.floor_errors {
            let _ = writeln!(
                self.body,
                "floor.{label}.eps_{} = {}",
                fmt_f64(*eps),
                fmt_f64(*floor)
            );
        }
    }

    pub fn finish(&self) -> String {
        self.body.clone()
    }
}

pub fn write_text(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    write_bytes(&path, body.as_bytes())?;
    Ok(path)
}

/// Stable file name fragment for an eps value (0.2 -> "0.2").
pub fn eps_tag(eps: f64) -> String {
    format!("{eps}")
}
