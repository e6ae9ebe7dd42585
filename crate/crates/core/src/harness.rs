//! Paired runs and the aspect-ratio sweep: advances the primitive
//! equations and the scaled system from identical initial data on one
//! grid, samples the difference norms at shared times, and fits the
//! empirical convergence order of log(error) against log(eps).

use rayon::prelude::*;
use std::sync::Arc;

use crate::diagnostics::EnergySample;
use crate::error::{Error, Result};
use crate::field::Parity;
use crate::grid::Grid;
use crate::pe;
use crate::sns;
use crate::symmetry::{
    barotropic_residual, diagnostic_w, make_initial_data, InitialDataRecipe,
    PeState, SnsState,
};

/// Shared run parameters for one time integration.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub grid: Arc<Grid>,
    pub dt: f64,
    pub t_final: f64,
    pub cfl_safety: f64,
    /// Steps between recorded samples (energy accumulators always advance
    /// every step). 1 records everything.
    pub record_every: usize,
}

impl RunSpec {
    pub fn new(grid: &Arc<Grid>, dt: f64, t_final: f64) -> Self {
        RunSpec {
            grid: grid.clone(),
            dt,
            t_final,
            cfl_safety: 0.5,
            record_every: 1,
        }
    }

    pub fn n_steps(&self) -> u64 {
        ((self.t_final / self.dt).round() as u64).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    fn stepper_config(&self) -> pe::StepperConfig {
        let mut cfg = pe::StepperConfig::new(self.dt);
        cfg.cfl_safety = self.cfl_safety;
        cfg
    }
}

/// Per-step diagnostics of a PE run.
#[derive(Debug, Clone, Copy)]
pub struct PeStepRecord {
    pub t: f64,
    pub l2_v: f64,
    pub grad_v: f64,
    pub l4_v: f64,
    pub dz_v: f64,
    pub lap_v: f64,
    /// Signed residual of the discrete energy identity (absolute units).
    pub energy_residual: f64,
    /// Structural monitors.
    pub parity_dev: f64,
    pub barotropic_residual: f64,
    pub mean_mode_abs: f64,
}

/// Per-step diagnostics of a scaled-system run.
#[derive(Debug, Clone, Copy)]
pub struct SnsStepRecord {
    pub t: f64,
    pub l2_v: f64,
    pub eps_l2_w: f64,
    pub grad_v: f64,
    pub eps_grad_w: f64,
    pub divergence_residual: f64,
    /// Slack of the scaled energy inequality (nonnegative when it holds).
    pub energy_slack: f64,
    pub parity_dev_v: f64,
    pub parity_dev_w: f64,
    pub mean_mode_abs: f64,
}

#[derive(Debug, Clone)]
pub struct PeRunLog {
    pub records: Vec<PeStepRecord>,
    pub final_state: PeState,
}

#[derive(Debug, Clone)]
pub struct SnsRunLog {
    pub records: Vec<SnsStepRecord>,
    pub final_state: SnsState,
}

impl PeRunLog {
    pub fn energy_samples(&self) -> Vec<EnergySample> {
        self.records
            .iter()
            .map(|r| EnergySample {
                t: r.t,
                energy: r.l2_v * r.l2_v,
                dissipation: r.grad_v * r.grad_v,
            })
            .collect()
    }

    pub fn max_relative_energy_residual(&self) -> f64 {
        let e0 = self.records[0].l2_v.powi(2).max(f64::MIN_POSITIVE);
        self.records
            .iter()
            .fold(0.0f64, |m, r| m.max(r.energy_residual.abs()))
            / e0
    }
}

impl SnsRunLog {
    pub fn energy_samples(&self) -> Vec<EnergySample> {
        self.records
            .iter()
            .map(|r| EnergySample {
                t: r.t,
                energy: r.l2_v * r.l2_v + r.eps_l2_w * r.eps_l2_w,
                dissipation: r.grad_v * r.grad_v + r.eps_grad_w * r.eps_grad_w,
            })
            .collect()
    }

    pub fn min_energy_slack(&self) -> f64 {
        self.records.iter().fold(f64::INFINITY, |m, r| m.min(r.energy_slack))
    }
}

fn pe_record(state: &PeState, t: f64, energy_residual: f64) -> PeStepRecord {
    let v = &state.v;
    PeStepRecord {
        t,
        l2_v: v.l2(),
        grad_v: v.grad_l2(),
        l4_v: v.l4(),
        dz_v: v.dz_l2(),
        lap_v: v.laplacian_l2(),
        energy_residual,
        parity_dev: v.parity_deviation(Parity::Even),
        barotropic_residual: barotropic_residual(v),
        mean_mode_abs: v.x.mean_mode().norm().max(v.y.mean_mode().norm()),
    }
}

fn sns_record(state: &SnsState, t: f64, energy_slack: f64) -> SnsStepRecord {
    let e = state.eps;
    SnsStepRecord {
        t,
        l2_v: state.v.l2(),
        eps_l2_w: e * state.w.l2(),
        grad_v: state.v.grad_l2(),
        eps_grad_w: e * state.w.grad_l2(),
        divergence_residual: state.divergence_residual(),
        energy_slack,
        parity_dev_v: state.v.parity_deviation(Parity::Even),
        parity_dev_w: state.w.parity_deviation(Parity::Odd),
        mean_mode_abs: state
            .v
            .x
            .mean_mode()
            .norm()
            .max(state.v.y.mean_mode().norm())
            .max(state.w.mean_mode().norm()),
    }
}

/// Advances the primitive equations for the whole horizon, recording
/// per-step diagnostics and the running energy-identity residual.
pub fn run_pe(v0: &PeState, spec: &RunSpec) -> Result<PeRunLog> {
    spec.validate()?;
    let stepper = pe::Stepper::new(&spec.grid, spec.stepper_config())?;
    let n = spec.n_steps();
    let mut state = v0.clone();
    let e0 = state.v.l2().powi(2);
    let mut prev_diss = state.v.grad_l2().powi(2);
    let mut acc = 0.0;
    let mut records = Vec::with_capacity((n as usize / spec.record_every) + 2);
    records.push(pe_record(&state, 0.0, 0.0));
    for i in 1..=n {
        state = stepper.step(&state, i)?;
        let diss = state.v.grad_l2().powi(2);
        acc += 0.5 * spec.dt * (prev_diss + diss);
        prev_diss = diss;
        if i % spec.record_every as u64 == 0 || i == n {
            let t = i as f64 * spec.dt;
            let residual = state.v.l2().powi(2) + 2.0 * acc - e0;
            records.push(pe_record(&state, t, residual));
        }
    }
    Ok(PeRunLog {
        records,
        final_state: state,
    })
}

/// Advances the scaled system for the whole horizon, recording per-step
/// diagnostics and the running energy-inequality slack.
pub fn run_sns(s0: &SnsState, spec: &RunSpec) -> Result<SnsRunLog> {
    spec.validate()?;
    let stepper = sns::Stepper::new(&spec.grid, spec.stepper_config())?;
    let n = spec.n_steps();
    let mut state = s0.clone();
    let e0 = state.scaled_energy();
    let mut prev_diss = state.scaled_dissipation();
    let mut acc = 0.0;
    let mut records = Vec::with_capacity((n as usize / spec.record_every) + 2);
    records.push(sns_record(&state, 0.0, 0.0));
    for i in 1..=n {
        state = stepper.step(&state, i)?;
        let diss = state.scaled_dissipation();
        acc += 0.5 * spec.dt * (prev_diss + diss);
        prev_diss = diss;
        if i % spec.record_every as u64 == 0 || i == n {
            let t = i as f64 * spec.dt;
            let slack = e0 - (state.scaled_energy() + 2.0 * acc);
            records.push(sns_record(&state, t, slack));
        }
    }
    Ok(SnsRunLog {
        records,
        final_state: state,
    })
}

/// Difference norms at one shared output time. Raw component norms are
/// stored; the eps weights are applied when summaries are assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffSample {
    pub t: f64,
    pub l2_v: f64,
    pub l2_w: f64,
    pub grad_v: f64,
    pub grad_w: f64,
    pub h1_v: f64,
    pub h1_w: f64,
    pub grad_h1_v: f64,
    pub grad_h1_w: f64,
}

/// Difference trajectory of one (eps, recipe, grid, horizon) pair run.
#[derive(Debug, Clone)]
pub struct DiffReport {
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    pub samples: Vec<DiffSample>,
    /// Set when either run blew up; holds the failure note and the report
    /// retains every sample up to the last valid time.
    pub failed: Option<String>,
}

impl DiffReport {
    pub fn succeeded(&self) -> bool {
        self.failed.is_none()
    }
}

/// Everything produced by one pair run.
#[derive(Debug, Clone)]
pub struct PairOutcome {
    pub report: DiffReport,
    pub pe: PeRunLog,
    pub sns: SnsRunLog,
}

fn diff_sample(t: f64, pe: &PeState, sns: &SnsState) -> Result<DiffSample> {
    let v = sns.v.sub(&pe.v);
    let w_pe = diagnostic_w(&pe.v)?;
    let w = sns.w.sub(&w_pe);
    let grad_v = v.grad_l2();
    let lap_v = v.laplacian_l2();
    let grad_w = w.grad_l2();
    let lap_w = w.laplacian_l2();
    Ok(DiffSample {
        t,
        l2_v: v.l2(),
        l2_w: w.l2(),
        grad_v,
        grad_w,
        h1_v: v.h1(),
        h1_w: w.h1(),
        grad_h1_v: (grad_v * grad_v + lap_v * lap_v).sqrt(),
        grad_h1_w: (grad_w * grad_w + lap_w * lap_w).sqrt(),
    })
}

/// Runs both solvers in lockstep from identical initial data (the scaled
/// system's w0 recovered from incompressibility) and samples the
/// difference norms at identical output times. A blow-up in either run
/// flags the report as failed at the last valid time instead of erroring.
pub fn run_pair(v0: &PeState, eps: f64, spec: &RunSpec) -> Result<PairOutcome> {
    spec.validate()?;
    let pe_stepper = pe::Stepper::new(&spec.grid, spec.stepper_config())?;
    let sns_stepper = sns::Stepper::new(&spec.grid, spec.stepper_config())?;
    let n = spec.n_steps();

    let mut pe_state = v0.clone();
    let mut sns_state = SnsState::from_initial(v0, eps)?;

    let pe_e0 = pe_state.v.l2().powi(2);
    let sns_e0 = sns_state.scaled_energy();
    let mut pe_prev = pe_state.v.grad_l2().powi(2);
    let mut sns_prev = sns_state.scaled_dissipation();
    let (mut pe_acc, mut sns_acc) = (0.0, 0.0);

    let mut pe_records = vec![pe_record(&pe_state, 0.0, 0.0)];
    let mut sns_records = vec![sns_record(&sns_state, 0.0, 0.0)];
    let mut samples = vec![diff_sample(0.0, &pe_state, &sns_state)?];
    let mut failed = None;

    for i in 1..=n {
        let stepped = pe_stepper
            .step(&pe_state, i)
            .and_then(|p| sns_stepper.step(&sns_state, i).map(|s| (p, s)));
        match stepped {
            Ok((p, s)) => {
                pe_state = p;
                sns_state = s;
            }
            Err(Error::BlowUp { step, t, what }) => {
                failed = Some(format!(
                    "blow-up at step {step} (t = {t}); last valid time {}",
                    (i - 1) as f64 * spec.dt
                ) + &format!(": {what}"));
                break;
            }
            Err(e) => return Err(e),
        }
        let t = i as f64 * spec.dt;
        let pe_diss = pe_state.v.grad_l2().powi(2);
        pe_acc += 0.5 * spec.dt * (pe_prev + pe_diss);
        pe_prev = pe_diss;
        let sns_diss = sns_state.scaled_dissipation();
        sns_acc += 0.5 * spec.dt * (sns_prev + sns_diss);
        sns_prev = sns_diss;
        if i % spec.record_every as u64 == 0 || i == n {
            pe_records.push(pe_record(
                &pe_state,
                t,
                pe_state.v.l2().powi(2) + 2.0 * pe_acc - pe_e0,
            ));
            sns_records.push(sns_record(
                &sns_state,
                t,
                sns_e0 - (sns_state.scaled_energy() + 2.0 * sns_acc),
            ));
            samples.push(diff_sample(t, &pe_state, &sns_state)?);
        }
    }

    Ok(PairOutcome {
        report: DiffReport {
            eps,
            dt: spec.dt,
            t_final: spec.t_final,
            samples,
            failed,
        },
        pe: PeRunLog {
            records: pe_records,
            final_state: pe_state,
        },
        sns: SnsRunLog {
            records: sns_records,
            final_state: sns_state,
        },
    })
}

/// Numerical-error floor proxy: the same PE run at dt and dt/2, compared
/// at shared times with the same difference norms (eps is recorded as 0
/// and the weights are applied per sweep point when excluding).
pub fn run_floor(v0: &PeState, spec: &RunSpec) -> Result<DiffReport> {
    spec.validate()?;
    let coarse = pe::Stepper::new(&spec.grid, spec.stepper_config())?;
    let mut fine_cfg = spec.stepper_config();
    fine_cfg.dt = spec.dt / 2.0;
    let fine = pe::Stepper::new(&spec.grid, fine_cfg)?;

    let n = spec.n_steps();
    let mut a = v0.clone();
    let mut b = v0.clone();
    let mut samples = vec![floor_sample(0.0, &a, &b)?];
    for i in 1..=n {
        a = coarse.step(&a, i)?;
        b = fine.step(&b, 2 * i - 1)?;
        b = fine.step(&b, 2 * i)?;
        if i % spec.record_every as u64 == 0 || i == n {
            samples.push(floor_sample(i as f64 * spec.dt, &a, &b)?);
        }
    }
    Ok(DiffReport {
        eps: 0.0,
        dt: spec.dt,
        t_final: spec.t_final,
        samples,
        failed: None,
    })
}

fn floor_sample(t: f64, a: &PeState, b: &PeState) -> Result<DiffSample> {
    let v = a.v.sub(&b.v);
    let w = diagnostic_w(&a.v)?.sub(&diagnostic_w(&b.v)?);
    let grad_v = v.grad_l2();
    let lap_v = v.laplacian_l2();
    let grad_w = w.grad_l2();
    let lap_w = w.laplacian_l2();
    Ok(DiffSample {
        t,
        l2_v: v.l2(),
        l2_w: w.l2(),
        grad_v,
        grad_w,
        h1_v: v.h1(),
        h1_w: w.h1(),
        grad_h1_v: (grad_v * grad_v + lap_v * lap_v).sqrt(),
        grad_h1_w: (grad_w * grad_w + lap_w * lap_w).sqrt(),
    })
}

/// Which grouping of the difference norms a summary reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormGroup {
    /// sup ||(V, eps W)||_2^2 and int ||grad(V, eps W)||_2^2 dt.
    L2,
    /// sup ||(V, eps W)||_H1^2, int ||grad(V, eps W)||_H1^2 dt and
    /// sup ||W||_2 (the vertical velocity converges in L-infinity L2 in
    /// this regime).
    H1,
}

#[derive(Debug, Clone, Copy)]
pub struct GroupSummary {
    pub sup_pair_sq: f64,
    pub integral_grad_sq: f64,
    pub sup_l2_w: Option<f64>,
}

/// Sup-in-time and trapezoidal time-integral summaries of a difference
/// report, grouped exactly as the convergence statements group them.
pub fn group_summary(report: &DiffReport, group: NormGroup) -> GroupSummary {
    summarize(&report.samples, report.eps, group)
}

fn summarize(samples: &[DiffSample], eps: f64, group: NormGroup) -> GroupSummary {
    let e2 = eps * eps;
    let pair = |s: &DiffSample| match group {
        NormGroup::L2 => s.l2_v * s.l2_v + e2 * s.l2_w * s.l2_w,
        NormGroup::H1 => s.h1_v * s.h1_v + e2 * s.h1_w * s.h1_w,
    };
    let grad = |s: &DiffSample| match group {
        NormGroup::L2 => s.grad_v * s.grad_v + e2 * s.grad_w * s.grad_w,
        NormGroup::H1 => s.grad_h1_v * s.grad_h1_v + e2 * s.grad_h1_w * s.grad_h1_w,
    };
    let sup_pair_sq = samples.iter().map(&pair).fold(0.0f64, f64::max);
    let mut integral = 0.0;
    for win in samples.windows(2) {
        integral += 0.5 * (win[1].t - win[0].t) * (grad(&win[0]) + grad(&win[1]));
    }
    let sup_l2_w = match group {
        NormGroup::L2 => None,
        NormGroup::H1 => Some(samples.iter().map(|s| s.l2_w).fold(0.0f64, f64::max)),
    };
    GroupSummary {
        sup_pair_sq,
        integral_grad_sq: integral,
        sup_l2_w,
    }
}

/// Error measures fitted against eps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateNorm {
    SupPairL2,
    IntGradPairL2,
    SupPairH1,
    IntGradPairH1,
    SupL2W,
}

impl RateNorm {
    pub const ALL: [RateNorm; 5] = [
        RateNorm::SupPairL2,
        RateNorm::IntGradPairL2,
        RateNorm::SupPairH1,
        RateNorm::IntGradPairH1,
        RateNorm::SupL2W,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RateNorm::SupPairL2 => "sup-l2-pair",
            RateNorm::IntGradPairL2 => "int-grad-l2-pair",
            RateNorm::SupPairH1 => "sup-h1-pair",
            RateNorm::IntGradPairH1 => "int-grad-h1-pair",
            RateNorm::SupL2W => "sup-l2-w",
        }
    }
}

/// Error value of one report in one norm, with the eps weight taken from
/// `weight_eps` (so the floor report can be weighted per sweep point).
pub fn error_value_weighted(report: &DiffReport, norm: RateNorm, weight_eps: f64) -> f64 {
    match norm {
        RateNorm::SupPairL2 => summarize(&report.samples, weight_eps, NormGroup::L2)
            .sup_pair_sq
            .sqrt(),
        RateNorm::IntGradPairL2 => summarize(&report.samples, weight_eps, NormGroup::L2)
            .integral_grad_sq
            .sqrt(),
        RateNorm::SupPairH1 => summarize(&report.samples, weight_eps, NormGroup::H1)
            .sup_pair_sq
            .sqrt(),
        RateNorm::IntGradPairH1 => summarize(&report.samples, weight_eps, NormGroup::H1)
            .integral_grad_sq
            .sqrt(),
        RateNorm::SupL2W => summarize(&report.samples, weight_eps, NormGroup::H1)
            .sup_l2_w
            .unwrap(),
    }
}

pub fn error_value(report: &DiffReport, norm: RateNorm) -> f64 {
    error_value_weighted(report, norm, report.eps)
}

/// Least-squares fit of log(error) against log(eps).
#[derive(Debug, Clone)]
pub struct RateFit {
    pub norm: RateNorm,
    /// (eps, error) pairs actually fitted, eps strictly decreasing.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of log(error) around the fitted line.
    pub residual: f64,
}

/// Fits the convergence order from completed reports (no floor
/// exclusion; the sweep driver applies that before calling
/// `fit_points`). Requires at least three reports.
pub fn fit_rate(reports: &[DiffReport], norm: RateNorm) -> Result<RateFit> {
    if reports.len() < 3 {
        return Err(Error::Input(format!(
            "rate fit needs at least 3 reports, got {}",
            reports.len()
        )));
    }
    if let Some(bad) = reports.iter().find(|r| !r.succeeded()) {
        return Err(Error::Input(format!(
            "cannot fit a rate from a failed report (eps = {}): {}",
            bad.eps,
            bad.failed.as_deref().unwrap_or("")
        )));
    }
    let points: Vec<(f64, f64)> = reports.iter().map(|r| (r.eps, error_value(r, norm))).collect();
    fit_points(points, norm)
}

/// Fits (eps, error) points directly; needs two or more points with
/// strictly decreasing, positive eps and positive errors.
pub fn fit_points(points: Vec<(f64, f64)>, norm: RateNorm) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    for win in points.windows(2) {
        if win[1].0.partial_cmp(&win[0].0) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Input("eps values must be strictly decreasing".into()));
        }
    }
    if points.iter().any(|&(e, _)| e <= 0.0) {
        return Err(Error::Input("eps values must be positive".into()));
    }
    if points.iter().any(|&(_, err)| err == 0.0) {
        return Err(Error::DegenerateFit("error value is zero, log undefined".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all eps values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        norm,
        points,
        slope,
        intercept,
        residual,
    })
}

/// Sweep configuration: one recipe and grid, several eps values.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub run: RunSpec,
    pub recipe: InitialDataRecipe,
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    /// Points whose error is within this factor of the floor are excluded
    /// from the fit.
    pub floor_exclusion_factor: f64,
}

impl SweepSpec {
    pub fn new(run: RunSpec, recipe: InitialDataRecipe, eps_list: Vec<f64>) -> Self {
        SweepSpec {
            run,
            recipe,
            eps_list,
            floor_exclusion_factor: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.run.validate()?;
        if self.eps_list.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        for win in self.eps_list.windows(2) {
            if win[1].partial_cmp(&win[0]) != Some(std::cmp::Ordering::Less) {
                return Err(Error::Config("eps list must be strictly decreasing".into()));
            }
        }
        if self.eps_list.iter().any(|&e| e <= 0.0) {
            return Err(Error::Config("eps values must be positive".into()));
        }
        Ok(())
    }
}

/// One fitted norm with its excluded points.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub fit: Result<RateFit>,
    /// eps values dropped because their error sat within the exclusion
    /// factor of the floor.
    pub excluded: Vec<f64>,
    /// Floor errors per retained/excluded point (eps, floor error).
    pub floor_errors: Vec<(f64, f64)>,
}

/// Full sweep result, deterministically ordered by decreasing eps.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub outcomes: Vec<PairOutcome>,
    pub floor: DiffReport,
    pub fits: Vec<(RateNorm, FitOutcome)>,
}

/// Runs the sweep: a parallel map over eps values plus the floor proxy,
/// merged in eps order so results are independent of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let v0 = make_initial_data(&spec.recipe, &spec.run.grid)?;
    run_sweep_from(&v0, spec)
}

/// Sweep from explicit initial data (used by tests and the zero-state
/// fixture).
pub fn run_sweep_from(v0: &PeState, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    enum Job {
        Pair(usize, f64),
        Floor,
    }
    let mut jobs: Vec<Job> = spec
        .eps_list
        .iter()
        .enumerate()
        .map(|(i, &e)| Job::Pair(i, e))
        .collect();
    jobs.push(Job::Floor);

    enum JobOut {
        Pair(usize, Box<PairOutcome>),
        Floor(DiffReport),
    }
    let results: Vec<Result<JobOut>> = jobs
        .into_par_iter()
        .map(|job| match job {
            Job::Pair(i, eps) => run_pair(v0, eps, &spec.run).map(|o| JobOut::Pair(i, Box::new(o))),
            Job::Floor => run_floor(v0, &spec.run).map(JobOut::Floor),
        })
        .collect();

    let mut outcomes: Vec<Option<PairOutcome>> = vec![None; spec.eps_list.len()];
    let mut floor = None;
    for r in results {
        match r? {
            JobOut::Pair(i, o) => outcomes[i] = Some(*o),
            JobOut::Floor(f) => floor = Some(f),
        }
    }
    let outcomes: Vec<PairOutcome> = outcomes.into_iter().map(|o| o.unwrap()).collect();
    let floor = floor.unwrap();

    let fits = fit_all(&outcomes, &floor, spec.floor_exclusion_factor);
    Ok(SweepResult {
        outcomes,
        floor,
        fits,
    })
}

fn fit_all(
    outcomes: &[PairOutcome],
    floor: &DiffReport,
    exclusion_factor: f64,
) -> Vec<(RateNorm, FitOutcome)> {
    RateNorm::ALL
        .iter()
        .map(|&norm| {
            let mut points = Vec::new();
            let mut excluded = Vec::new();
            let mut floor_errors = Vec::new();
            for o in outcomes {
                let eps = o.report.eps;
                let floor_err = error_value_weighted(floor, norm, eps);
                floor_errors.push((eps, floor_err));
                if !o.report.succeeded() {
                    excluded.push(eps);
                    continue;
                }
                let err = error_value(&o.report, norm);
                if err < exclusion_factor * floor_err {
                    excluded.push(eps);
                } else {
                    points.push((eps, err));
                }
            }
            let fit = fit_points(points, norm);
            (
                norm,
                FitOutcome {
                    fit,
                    excluded,
                    floor_errors,
                },
            )
        })
        .collect()
}
