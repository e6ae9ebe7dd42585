//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them on success).
//!
//! Criteria 1-6 share a single desk-scale sweep: single-mode recipe with
//! amplitude 1 on the (2 pi)^2 x (-1,1) box, N = 32^3, dt = 5e-4, T = 1,
//! eps in {0.2, 0.1, 0.05}, per-step records.

use std::process::Command;
use std::sync::{Arc, OnceLock};

use hydrolim_core::diagnostics::{ratio_family_max, LadyVariant};
use hydrolim_core::harness::{
    error_value, run_pair, RateNorm, RunSpec, SweepResult, SweepSpec,
};
use hydrolim_core::oracles::{antiderivative_test_pair, pe_pressure_by_quadrature, IsoNs};
use hydrolim_core::symmetry::{diagnostic_w, make_initial_data, InitialDataRecipe, SnsState};
use hydrolim_core::{pe, sns, Grid, PeState};

const EPS_SWEEP: [f64; 3] = [0.2, 0.1, 0.05];

struct Desk {
    grid: Arc<Grid>,
    sweep: SweepResult,
}

static DESK: OnceLock<Desk> = OnceLock::new();

fn desk() -> &'static Desk {
    DESK.get_or_init(|| {
        let two_pi = 2.0 * std::f64::consts::PI;
        let grid = Grid::new(32, 32, 32, two_pi, two_pi).expect("grid");
        let spec = SweepSpec::new(
            RunSpec::new(&grid, 5e-4, 1.0),
            InitialDataRecipe::single_mode(1.0),
            EPS_SWEEP.to_vec(),
        );
        let sweep = hydrolim_core::harness::run_sweep(&spec).expect("desk-scale sweep");
        Desk { grid, sweep }
    })
}

fn grid16() -> Arc<Grid> {
    let two_pi = 2.0 * std::f64::consts::PI;
    Grid::new(16, 16, 16, two_pi, two_pi).unwrap()
}

fn fit_for(sweep: &SweepResult, norm: RateNorm) -> &hydrolim_core::harness::FitOutcome {
    &sweep.fits.iter().find(|(n, _)| *n == norm).unwrap().1
}

#[test]
fn criterion_01_convergence_rate_l2() {
    let d = desk();
    let out = fit_for(&d.sweep, RateNorm::SupPairL2);
    let fit = out.fit.as_ref().expect("fit after floor exclusion");
    assert!(
        fit.slope >= 0.8,
        "fitted slope {} below 0.8 (points {:?})",
        fit.slope,
        fit.points
    );
    assert!(fit.residual <= 0.15, "fit residual {} above 0.15", fit.residual);
    println!(
        "criterion 01 PASS: sup-l2 pair slope {:.3} (>= 0.8), residual {:.4} (<= 0.15), excluded {:?}",
        fit.slope, fit.residual, out.excluded
    );
}

#[test]
fn criterion_02_convergence_rate_h1_and_w_monotone() {
    let d = desk();
    let out = fit_for(&d.sweep, RateNorm::SupPairH1);
    let fit = out.fit.as_ref().expect("fit after floor exclusion");
    assert!(fit.slope >= 0.8, "H1 slope {} below 0.8", fit.slope);
    let sup_w: Vec<f64> = d
        .sweep
        .outcomes
        .iter()
        .map(|o| error_value(&o.report, RateNorm::SupL2W))
        .collect();
    for win in sup_w.windows(2) {
        assert!(
            win[1] <= win[0] * 1.05,
            "sup ||W||_2 not decreasing within 5%: {:?}",
            sup_w
        );
    }
    // Sweep-monotonicity invariant: the paired L2 error also shrinks with
    // eps (5% tolerance for discretization noise).
    let sup_pair: Vec<f64> = d
        .sweep
        .outcomes
        .iter()
        .map(|o| error_value(&o.report, RateNorm::SupPairL2))
        .collect();
    for win in sup_pair.windows(2) {
        assert!(
            win[1] <= win[0] * 1.05,
            "sup pair L2 not decreasing within 5%: {:?}",
            sup_pair
        );
    }
    println!(
        "criterion 02 PASS: sup-h1 pair slope {:.3} (>= 0.8); sup||W||_2 over sweep {:?} decreasing",
        fit.slope, sup_w
    );
}

#[test]
fn criterion_03_pe_energy_identity() {
    let d = desk();
    let resid = d.sweep.outcomes[0].pe.max_relative_energy_residual();
    assert!(resid <= 1e-4, "relative energy-identity residual {resid:e} exceeds 1e-4");
    println!("criterion 03 PASS: max relative energy-identity residual {resid:.3e} (<= 1e-4)");
}

#[test]
fn criterion_04_pe_decay_bound() {
    let d = desk();
    let lambda1 = d.grid.lambda1();
    let records = &d.sweep.outcomes[0].pe.records;
    let e0 = records[0].l2_v.powi(2);
    let mut worst = f64::NEG_INFINITY;
    for r in records {
        let bound = (1.0 + 1e-3) * (-2.0 * lambda1 * r.t).exp() * e0;
        let energy = r.l2_v.powi(2);
        let margin = energy / bound;
        worst = worst.max(margin);
        assert!(
            energy <= bound,
            "decay bound violated at t = {}: {energy} > {bound}",
            r.t
        );
    }
    println!(
        "criterion 04 PASS: ||v(t)||^2 <= (1+1e-3) exp(-2 {lambda1} t) ||v0||^2 at all {} output times (max energy/bound {worst:.3e})",
        records.len()
    );
}

#[test]
fn criterion_05_sns_energy_inequality() {
    let d = desk();
    for o in &d.sweep.outcomes {
        let r0 = &o.sns.records[0];
        let e0 = r0.l2_v.powi(2) + r0.eps_l2_w.powi(2);
        let min_slack = o.sns.min_energy_slack();
        assert!(
            min_slack >= -1e-4 * e0,
            "eps {}: inequality slack {min_slack:e} below -1e-4 * {e0:e}",
            o.report.eps
        );
    }
    let rel: Vec<String> = d
        .sweep
        .outcomes
        .iter()
        .map(|o| {
            let r0 = &o.sns.records[0];
            let e0 = r0.l2_v.powi(2) + r0.eps_l2_w.powi(2);
            format!("{:.2e}", o.sns.min_energy_slack() / e0)
        })
        .collect();
    println!("criterion 05 PASS: scaled energy-inequality slack >= -1e-4 E0 at every output time (relative minima {rel:?})");
}

#[test]
fn criterion_06_structural_invariants() {
    let d = desk();
    let mut max_parity = 0.0f64;
    let mut max_div = 0.0f64;
    let mut max_baro = 0.0f64;
    for o in &d.sweep.outcomes {
        for r in &o.pe.records {
            max_parity = max_parity.max(r.parity_dev);
            max_baro = max_baro.max(r.barotropic_residual);
            assert_eq!(r.mean_mode_abs, 0.0, "PE mean mode nonzero at t = {}", r.t);
        }
        for r in &o.sns.records {
            max_parity = max_parity.max(r.parity_dev_v.max(r.parity_dev_w));
            max_div = max_div.max(r.divergence_residual);
            assert_eq!(r.mean_mode_abs, 0.0, "scaled mean mode nonzero at t = {}", r.t);
        }
    }
    assert!(max_parity <= 1e-10, "parity deviation {max_parity:e} exceeds 1e-10");
    assert!(max_div <= 1e-10, "divergence residual {max_div:e} exceeds 1e-10");
    assert!(max_baro <= 1e-9, "barotropic residual {max_baro:e} exceeds 1e-9");
    println!(
        "criterion 06 PASS: after every step of both solvers parity <= {max_parity:.2e}, divergence <= {max_div:.2e}, barotropic <= {max_baro:.2e}, mean modes exactly 0"
    );
}

#[test]
fn criterion_07_oracle_equivalences() {
    // (a) eps = 1 trajectory against the independent isotropic solver.
    let two_pi = 2.0 * std::f64::consts::PI;
    let g = Grid::new(32, 32, 32, two_pi, two_pi).unwrap();
    let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 42), &g).unwrap();
    let dt = 1e-3;
    let n_steps = 100; // T = 0.1
    let mut state = SnsState::from_initial(&v0, 1.0).unwrap();
    let stepper = sns::Stepper::new(&g, pe::StepperConfig::new(dt)).unwrap();
    let mut iso = IsoNs::new(g.n(), g.l1(), g.l2(), dt);
    iso.set_velocity(state.v.x.coeffs(), state.v.y.coeffs(), state.w.coeffs());
    for i in 0..n_steps {
        state = stepper.step(&state, i).unwrap();
        iso.step();
    }
    let dist = iso.l2_distance(g.volume(), state.v.x.coeffs(), state.v.y.coeffs(), state.w.coeffs());
    assert!(dist <= 1e-8, "eps=1 trajectory deviates from isotropic oracle by {dist:e}");

    // (b) vertical-velocity recovery against the symbolic antiderivative,
    // on the single-mode recipe (whose w vanishes identically) and on the
    // x-dependent harmonic with a nonzero closed form.
    let recipe_a = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
    let w_a = diagnostic_w(&recipe_a.v).unwrap();
    assert!(
        w_a.l2() <= 1e-12 * recipe_a.v.l2(),
        "single-mode recipe should recover w = 0, got {:e}",
        w_a.l2()
    );
    let (v_h, w_expected) = antiderivative_test_pair(&g, 1.0);
    let w_h = diagnostic_w(&v_h).unwrap().to_physical();
    let worst_w = w_h
        .values()
        .iter()
        .zip(w_expected.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(worst_w <= 1e-12, "vertical velocity deviates from symbolic oracle by {worst_w:e}");

    // (c) pressure solve against the quadrature + mode-division oracle.
    let mut worst_p = 0.0f64;
    for recipe in [InitialDataRecipe::single_mode(1.0), InitialDataRecipe::random(1.0, 5)] {
        let v = make_initial_data(&recipe, &g).unwrap();
        let p = pe::pressure_solve(&v.v);
        let oracle = pe_pressure_by_quadrature(&v.v);
        let [n1, n2, _] = g.n();
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                if g.in_mask(i1, i2, 0) {
                    worst_p = worst_p.max((p.coeffs()[i1 * n2 + i2] - oracle[i1 * n2 + i2]).norm());
                }
            }
        }
    }
    assert!(worst_p <= 1e-10, "pressure deviates from quadrature oracle by {worst_p:e}");

    println!(
        "criterion 07 PASS: eps=1 trajectory within {dist:.2e} of isotropic oracle (<= 1e-8); \
         vertical velocity within {worst_w:.2e} of symbolic oracle (<= 1e-12); \
         pressure within {worst_p:.2e} of quadrature oracle (<= 1e-10)"
    );
}

#[test]
fn criterion_08_temporal_self_convergence() {
    let g = grid16();
    let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
    let t_final: f64 = 0.1;

    let run_pe_at = |dt: f64| -> PeState {
        let stepper = pe::Stepper::new(&g, pe::StepperConfig::new(dt)).unwrap();
        let mut s = v0.clone();
        for i in 0..(t_final / dt).round() as u64 {
            s = stepper.step(&s, i).unwrap();
        }
        s
    };
    let (a, b, c) = (run_pe_at(4e-3), run_pe_at(2e-3), run_pe_at(1e-3));
    let order_pe = (a.v.sub(&b.v).l2() / b.v.sub(&c.v).l2()).log2();
    assert!(order_pe >= 1.9, "PE temporal order {order_pe:.3} below 1.9");

    let s0 = SnsState::from_initial(&v0, 0.2).unwrap();
    let run_sns_at = |dt: f64| -> SnsState {
        let stepper = sns::Stepper::new(&g, pe::StepperConfig::new(dt)).unwrap();
        let mut s = s0.clone();
        for i in 0..(t_final / dt).round() as u64 {
            s = stepper.step(&s, i).unwrap();
        }
        s
    };
    let (a, b, c) = (run_sns_at(4e-3), run_sns_at(2e-3), run_sns_at(1e-3));
    let e1 = (a.v.sub(&b.v).l2().powi(2) + a.w.sub(&b.w).l2().powi(2)).sqrt();
    let e2 = (b.v.sub(&c.v).l2().powi(2) + b.w.sub(&c.w).l2().powi(2)).sqrt();
    let order_sns = (e1 / e2).log2();
    assert!(order_sns >= 1.9, "scaled-system temporal order {order_sns:.3} below 1.9");

    println!(
        "criterion 08 PASS: dt-halving Richardson orders {order_pe:.3} (PE) and {order_sns:.3} (scaled), both >= 1.9"
    );
}

#[test]
fn criterion_09_inequality_ratio_refinement_stability() {
    let two_pi = 2.0 * std::f64::consts::PI;
    let coarse = Grid::new(16, 16, 16, two_pi, two_pi).unwrap();
    let fine = Grid::new(32, 32, 32, two_pi, two_pi).unwrap();
    let mut notes = Vec::new();
    for variant in [LadyVariant::A, LadyVariant::B] {
        let a = ratio_family_max(&coarse, variant, 100, 3, 7_000).unwrap();
        let b = ratio_family_max(&fine, variant, 100, 3, 7_000).unwrap();
        let change = (a.max_ratio - b.max_ratio).abs() / b.max_ratio;
        assert!(
            change < 0.05,
            "{:?}: max ratio changed by {change:.3} under refinement ({} -> {})",
            a.id,
            a.max_ratio,
            b.max_ratio
        );
        notes.push(format!("{}: {:.4} -> {:.4} ({change:.2e})", a.id.label(), a.max_ratio, b.max_ratio));
    }
    println!(
        "criterion 09 PASS: max ratio over 100 seeded triples stable under N 16 -> 32 within 5% [{}]",
        notes.join("; ")
    );
}

#[test]
fn criterion_10_converge_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_hydrolim"))
            .args([
                "converge",
                "--n",
                "16",
                "--dt",
                "2e-3",
                "--t-final",
                "0.05",
                "--eps",
                "0.4,0.2,0.1",
                "--recipe",
                "random",
                "--seed",
                "42",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "converge run failed");
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run(&out_a);
    run(&out_b);
    let rates_a = std::fs::read(out_a.join("rates.csv")).unwrap();
    let rates_b = std::fs::read(out_b.join("rates.csv")).unwrap();
    assert_eq!(rates_a, rates_b, "rates.csv differs between identical runs");
    let manifest_a = std::fs::read(out_a.join("manifest.txt")).unwrap();
    let manifest_b = std::fs::read(out_b.join("manifest.txt")).unwrap();
    assert_eq!(manifest_a, manifest_b, "manifest differs between identical runs");
    println!(
        "criterion 10 PASS: repeated converge runs with identical config produce byte-identical rates.csv ({} bytes)",
        rates_a.len()
    );
}

/// Sanity ceiling from the pair-run contract: the difference stays well
/// below the initial-data scale (this also exercises `run_pair` on the
/// desk grid outside the shared sweep).
#[test]
fn pair_difference_stays_below_initial_scale() {
    let g = grid16();
    let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
    let out = run_pair(&v0, 0.1, &RunSpec::new(&g, 1e-3, 0.1)).unwrap();
    let sup = error_value(&out.report, RateNorm::SupPairL2);
    assert!(out.report.succeeded());
    assert!(sup.is_finite() && sup < v0.v.l2(), "sup difference {sup} vs ||v0|| {}", v0.v.l2());
}
