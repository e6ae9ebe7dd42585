//! Subcommand drivers: validate, preflight the output directory, run,
//! emit files.

use hydrolim_core::harness::{run_pe, run_sns, run_sweep, RunSpec, SweepSpec};
use hydrolim_core::symmetry::{make_initial_data, SnsState};
use hydrolim_core::{Error, Result};

use crate::checkpoint;
use crate::config::{Mode, RunConfig};
use crate::outputs::{
    self, diff_csv, eps_tag, pe_diagnostics_csv, rates_csv, sns_diagnostics_csv, ManifestBuilder,
    DIFF_CSV_COLUMNS, PE_CSV_COLUMNS, RATES_CSV_COLUMNS, SNS_CSV_COLUMNS,
};

fn run_spec(cfg: &RunConfig) -> Result<RunSpec> {
    let grid = cfg.grid()?;
    Ok(RunSpec {
        grid,
        dt: cfg.dt,
        t_final: cfg.t_final,
        cfl_safety: cfg.cfl_safety,
        record_every: cfg.output_every,
    })
}

pub fn cmd_run_pe(cfg: &RunConfig) -> Result<()> {
    cfg.validate(Mode::RunPe)?;
    outputs::preflight(&cfg.out_dir)?;
    let spec = run_spec(cfg)?;
    let v0 = make_initial_data(&cfg.initial_recipe(), &spec.grid)?;
    let log = run_pe(&v0, &spec)?;

    outputs::write_text(&cfg.out_dir, "pe_diagnostics.csv", &pe_diagnostics_csv(&log))?;
    let mut manifest = ManifestBuilder::new(cfg, Mode::RunPe);
    manifest.file("pe_diagnostics.csv", PE_CSV_COLUMNS);
    manifest.kv(
        "max_relative_energy_residual",
        &outputs::fmt_f64(log.max_relative_energy_residual()),
    );
    if cfg.save_state {
        checkpoint::write_pe(&cfg.out_dir.join("pe_state.hlim"), &log.final_state)?;
        manifest.kv("file.pe_state.hlim", "checkpoint");
    }
    outputs::write_text(&cfg.out_dir, "manifest.txt", &manifest.finish())?;
    Ok(())
}

pub fn cmd_run_sns(cfg: &RunConfig) -> Result<()> {
    cfg.validate(Mode::RunSns)?;
    outputs::preflight(&cfg.out_dir)?;
    let spec = run_spec(cfg)?;
    let eps = cfg.eps[0];
    let v0 = make_initial_data(&cfg.initial_recipe(), &spec.grid)?;
    let s0 = SnsState::from_initial(&v0, eps)?;
    let log = run_sns(&s0, &spec)?;

    outputs::write_text(&cfg.out_dir, "sns_diagnostics.csv", &sns_diagnostics_csv(&log))?;
    let mut manifest = ManifestBuilder::new(cfg, Mode::RunSns);
    manifest.file("sns_diagnostics.csv", SNS_CSV_COLUMNS);
    manifest.kv(
        "min_energy_slack",
        &outputs::fmt_f64(log.min_energy_slack()),
    );
    if cfg.save_state {
        checkpoint::write_sns(&cfg.out_dir.join("sns_state.hlim"), &log.final_state)?;
        manifest.kv("file.sns_state.hlim", "checkpoint");
    }
    outputs::write_text(&cfg.out_dir, "manifest.txt", &manifest.finish())?;
    Ok(())
}

pub fn cmd_converge(cfg: &RunConfig) -> Result<()> {
    cfg.validate(Mode::Converge)?;
    outputs::preflight(&cfg.out_dir)?;
    let spec = SweepSpec::new(run_spec(cfg)?, cfg.initial_recipe(), cfg.eps.clone());
    let sweep = run_sweep(&spec)?;

    let mut manifest = ManifestBuilder::new(cfg, Mode::Converge);
    outputs::write_text(&cfg.out_dir, "rates.csv", &rates_csv(&sweep))?;
    manifest.file("rates.csv", RATES_CSV_COLUMNS);

    outputs::write_text(
        &cfg.out_dir,
        "pe_diagnostics.csv",
        &pe_diagnostics_csv(&sweep.outcomes[0].pe),
    )?;
    manifest.file("pe_diagnostics.csv", PE_CSV_COLUMNS);

    for o in &sweep.outcomes {
        let tag = eps_tag(o.report.eps);
        outputs::write_text(
            &cfg.out_dir,
            &format!("diff_eps_{tag}.csv"),
            &diff_csv(&o.report),
        )?;
        manifest.file(&format!("diff_eps_{tag}.csv"), DIFF_CSV_COLUMNS);
        outputs::write_text(
            &cfg.out_dir,
            &format!("sns_diagnostics_eps_{tag}.csv"),
            &sns_diagnostics_csv(&o.sns),
        )?;
        manifest.file(&format!("sns_diagnostics_eps_{tag}.csv"), SNS_CSV_COLUMNS);
    }
    manifest.sweep_details(&sweep);
    for o in &sweep.outcomes {
        if let Some(note) = &o.report.failed {
            manifest.kv(&format!("failed.eps_{}", eps_tag(o.report.eps)), note);
        }
    }
    outputs::write_text(&cfg.out_dir, "manifest.txt", &manifest.finish())?;

    if let Some(bad) = sweep.outcomes.iter().find(|o| !o.report.succeeded()) {
        return Err(Error::BlowUp {
            step: 0,
            t: 0.0,
            what: format!(
                "sweep member eps = {} failed: {}",
                bad.report.eps,
                bad.report.failed.as_deref().unwrap_or("")
            ),
        });
    }
    Ok(())
}

/// Runs the property suite; `Ok(true)` means everything passed. A
/// manifest (and nothing else) is always written.
pub fn cmd_verify(cfg: &RunConfig) -> Result<bool> {
    cfg.validate(Mode::Verify)?;
    outputs::preflight(&cfg.out_dir)?;
    let results = crate::verify::run_suite();
    let ok = crate::verify::report(&results);
    let mut manifest = ManifestBuilder::new(cfg, Mode::Verify);
    for r in &results {
        manifest.kv(
            &format!("property.{}", r.name.replace(' ', "-")),
            match &r.outcome {
                Ok(()) => "pass",
                Err(_) => "fail",
            },
        );
    }
    manifest.kv("suite", if ok { "pass" } else { "fail" });
    outputs::write_text(&cfg.out_dir, "manifest.txt", &manifest.finish())?;
    Ok(ok)
}
