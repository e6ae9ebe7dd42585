//! The `verify` property suite: transforms, symmetry machinery, both
//! solvers, the audits and the inequality ratios, each checked against an
//! independent route at desk scale. Prints one PASS/FAIL line per
//! property and reports whether everything held.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use hydrolim_core::diagnostics::{
    energy_audit_pe, energy_audit_sns, ladyzhenskaya_ratio, random_band_limited, ratio_family_max,
    LadyVariant,
};
use hydrolim_core::field::{Parity, PhysicalField};
use hydrolim_core::harness::{run_pair, run_pe, run_sns, RunSpec};
use hydrolim_core::oracles::{antiderivative_test_pair, pe_pressure_by_quadrature, IsoNs};
use hydrolim_core::symmetry::{
    barotropic_residual, diagnostic_w, divergence_3d, make_initial_data, project_admissible,
    HorizontalField, InitialDataRecipe,
};
use hydrolim_core::{pe, sns, Grid, PeState, SnsState};

pub struct PropertyResult {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(), String>) -> PropertyResult {
    PropertyResult {
        name,
        outcome: f(),
    }
}

fn ensure(cond: bool, detail: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail)
    }
}

fn grid16() -> Arc<Grid> {
    Grid::new(16, 16, 16, 2.0 * PI, 2.0 * PI).expect("grid")
}

/// Runs the whole suite; failures carry a one-line detail.
pub fn run_suite() -> Vec<PropertyResult> {
    let mut out = Vec::new();

    out.push(check("transform round-trip", || {
        let g = grid16();
        let f = PhysicalField::from_fn(&g, |x, y, z| {
            (x + 0.3).sin() * (2.0 * y).cos() + 0.2 * (PI * z).sin() * (x - y).cos()
        });
        let back = f.to_spectral().to_physical();
        let scale = f.max_abs();
        let worst = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
            / scale;
        ensure(worst < 1e-12, format!("round-trip relative error {worst:e}"))
    }));

    out.push(check("parseval vs collocation quadrature", || {
        let g = grid16();
        let f = random_band_limited(&g, 4, 1).dealias();
        let parseval = f.l2();
        let quad = f.to_physical().quadrature_l2();
        let rel = (parseval - quad).abs() / quad;
        ensure(rel < 1e-10, format!("L2 disagreement {rel:e}"))
    }));

    out.push(check("spectral derivative exactness", || {
        let g = grid16();
        let f = PhysicalField::from_fn(&g, |x, _, _| (2.0 * x).cos()).to_spectral();
        let d = f.derivative(hydrolim_core::Axis::X).to_physical();
        let expect = PhysicalField::from_fn(&g, |x, _, _| -2.0 * (2.0 * x).sin());
        let worst = d
            .values()
            .iter()
            .zip(expect.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure(worst < 1e-12, format!("derivative error {worst:e}"))
    }));

    out.push(check("parity decomposition and idempotence", || {
        let g = grid16();
        let f = random_band_limited(&g, 4, 2);
        let even = f.parity_project(Parity::Even);
        let odd = f.parity_project(Parity::Odd);
        let mut sum = even.clone();
        sum.axpy(1.0, &odd);
        let recon = sum.sub(&f).l2() / f.l2();
        let idem = even.parity_project(Parity::Even).sub(&even).l2();
        ensure(
            recon < 1e-14 && idem < 1e-14,
            format!("decomposition {recon:e}, idempotence {idem:e}"),
        )
    }));

    out.push(check("dealias mask and norm bound", || {
        let g = grid16();
        let f = random_band_limited(&g, 8, 3);
        let d = f.dealias();
        let lim = g.dealias_limit(hydrolim_core::Axis::X);
        let mode_out = d.coeffs()[g.index(lim + 1, 0, 0)].norm();
        ensure(
            d.l2() <= f.l2() && mode_out == 0.0,
            format!("norm {} vs {}, leaked mode {mode_out:e}", d.l2(), f.l2()),
        )
    }));

    out.push(check("vertical velocity vs symbolic antiderivative", || {
        let g = grid16();
        let (v, expect) = antiderivative_test_pair(&g, 1.0);
        let w = diagnostic_w(&v).map_err(|e| e.to_string())?.to_physical();
        let worst = w
            .values()
            .iter()
            .zip(expect.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure(worst < 1e-12, format!("w error {worst:e}"))
    }));

    out.push(check("vertical velocity closes the divergence", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 4), &g).map_err(|e| e.to_string())?;
        let w = diagnostic_w(&v0.v).map_err(|e| e.to_string())?;
        let div = divergence_3d(&v0.v, &w).l2();
        ensure(div < 1e-12, format!("3D divergence {div:e}"))
    }));

    out.push(check("initial-data recipes admissible and idempotent", || {
        let g = grid16();
        for recipe in [InitialDataRecipe::single_mode(1.0), InitialDataRecipe::random(1.0, 42)] {
            let s = make_initial_data(&recipe, &g).map_err(|e| e.to_string())?;
            let twice = project_admissible(&s.v);
            let moved = twice.sub(&s.v).l2();
            let baro = barotropic_residual(&s.v);
            let par = s.v.parity_deviation(Parity::Even);
            if !(moved < 1e-14 && baro < 1e-12 && par < 1e-14) {
                return Err(format!(
                    "recipe {recipe:?}: projection moved {moved:e}, barotropic {baro:e}, parity {par:e}"
                ));
            }
        }
        Ok(())
    }));

    out.push(check("pressure solve vs quadrature oracle", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 5), &g).map_err(|e| e.to_string())?;
        let p = pe::pressure_solve(&v0.v);
        let oracle = pe_pressure_by_quadrature(&v0.v);
        let [n1, n2, _] = g.n();
        let mut worst = 0.0f64;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                if g.in_mask(i1, i2, 0) {
                    worst = worst.max((p.coeffs()[i1 * n2 + i2] - oracle[i1 * n2 + i2]).norm());
                }
            }
        }
        ensure(worst < 1e-10, format!("pressure mode mismatch {worst:e}"))
    }));

    out.push(check("heat-kernel exactness of both steppers", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).map_err(|e| e.to_string())?;
        let dt = 1e-2;
        let cfg = pe::StepperConfig::new(dt);
        let s = pe::Stepper::new(&g, cfg)
            .map_err(|e| e.to_string())?
            .linear_only(true)
            .step(&v0, 0)
            .map_err(|e| e.to_string())?;
        let ksq = 1.0 + PI * PI;
        let expect = v0.v.l2() * (-ksq * dt).exp();
        let rel_pe = (s.v.l2() - expect).abs() / expect;

        let sns0 = SnsState::from_initial(&v0, 0.3).map_err(|e| e.to_string())?;
        let s2 = sns::Stepper::new(&g, cfg)
            .map_err(|e| e.to_string())?
            .linear_only(true)
            .step(&sns0, 0)
            .map_err(|e| e.to_string())?;
        let rel_sns = (s2.v.l2() - expect).abs() / expect;
        ensure(
            rel_pe < 1e-12 && rel_sns < 1e-12,
            format!("heat-kernel deviation pe {rel_pe:e}, scaled {rel_sns:e}"),
        )
    }));

    out.push(check("diffusion-only budget is non-increasing", || {
        // With the nonlinearity disabled, dt v = Lap v and the grouped
        // budget ||v||_H1^2 + int (||grad v||_H1^2 + ||dt v||_2^2) ds has
        // derivative -||grad v||_2^2 <= 0. The trapezoid integral needs
        // the mode transient resolved, so use single-shell data at a dt
        // with |k|^2 dt << 1.
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).map_err(|e| e.to_string())?;
        let dt = 1e-3;
        let stepper = pe::Stepper::new(&g, pe::StepperConfig::new(dt))
            .map_err(|e| e.to_string())?
            .linear_only(true);
        let rate = |s: &PeState| {
            let grad_h1_sq = s.v.grad_l2().powi(2) + s.v.laplacian_l2().powi(2);
            let dtv_sq = s.v.laplacian_l2().powi(2);
            grad_h1_sq + dtv_sq
        };
        let mut s = v0;
        let mut acc = 0.0;
        let mut prev_rate = rate(&s);
        let mut last_budget = f64::INFINITY;
        for i in 0..20 {
            let budget = s.v.h1().powi(2) + acc;
            if budget > last_budget * (1.0 + 1e-13) {
                return Err(format!("budget grew at step {i}: {budget} > {last_budget}"));
            }
            last_budget = budget;
            s = stepper.step(&s, i).map_err(|e| e.to_string())?;
            let r = rate(&s);
            acc += 0.5 * dt * (prev_rate + r);
            prev_rate = r;
        }
        Ok(())
    }));

    out.push(check("discrete time derivative is finite and consistent", || {
        // The budget monitors use the full discrete tendency (advection,
        // pressure and diffusion), not finite differences of states.
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 12), &g).map_err(|e| e.to_string())?;
        let dtv = pe::time_derivative(&v0).map_err(|e| e.to_string())?;
        if !dtv.is_finite() {
            return Err("non-finite time derivative".into());
        }
        // Cross-check against a centred finite difference of two tiny
        // steps; agreement to O(dt^2) of the smooth trajectory.
        let dt = 1e-5;
        let stepper = pe::Stepper::new(&g, pe::StepperConfig::new(dt)).map_err(|e| e.to_string())?;
        let fwd = stepper.step(&v0, 0).map_err(|e| e.to_string())?;
        let mut fd = fwd.v.sub(&v0.v);
        fd.scale(1.0 / dt);
        let rel = fd.sub(&dtv).l2() / dtv.l2();
        ensure(rel < 1e-3, format!("tendency vs finite difference differ by {rel:e}"))
    }));

    out.push(check("trilinear advective ratio is finite on admissible data", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 14), &g).map_err(|e| e.to_string())?;
        let w = diagnostic_w(&v0.v).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for seed in 400..410 {
            let q = random_band_limited(&g, 3, seed);
            let psi = random_band_limited(&g, 3, seed + 100);
            let r = hydrolim_core::diagnostics::advective_trilinear_ratio(&v0.v, &w, &q, &psi)
                .map_err(|e| e.to_string())?;
            if !r.is_finite() || r < 0.0 {
                return Err(format!("ratio {r} not a nonnegative finite number"));
            }
            worst = worst.max(r);
        }
        ensure(worst > 0.0, "all trilinear ratios vanished".into())
    }));

    out.push(check("pe energy identity and decay bound", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).map_err(|e| e.to_string())?;
        let spec = RunSpec::new(&g, 1e-3, 0.2);
        let log = run_pe(&v0, &spec).map_err(|e| e.to_string())?;
        let resid = log.max_relative_energy_residual();
        let audit =
            energy_audit_pe(&log.energy_samples(), g.lambda1()).map_err(|e| e.to_string())?;
        let min_slack = audit.decay_slack.iter().cloned().fold(f64::INFINITY, f64::min);
        // Slack may only dip below zero by the decay-bound tolerance.
        let tol = 1e-3 * audit.initial_energy;
        ensure(
            resid < 1e-4 && min_slack >= -tol,
            format!("identity residual {resid:e}, decay slack {min_slack:e}"),
        )
    }));

    out.push(check("scaled energy inequality on a nonlinear run", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).map_err(|e| e.to_string())?;
        let s0 = SnsState::from_initial(&v0, 0.1).map_err(|e| e.to_string())?;
        let spec = RunSpec::new(&g, 1e-3, 0.2);
        let log = run_sns(&s0, &spec).map_err(|e| e.to_string())?;
        let slack = energy_audit_sns(&log.energy_samples()).map_err(|e| e.to_string())?;
        let e0 = log.records[0].l2_v.powi(2) + log.records[0].eps_l2_w.powi(2);
        let min = slack.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure(
            min >= -1e-4 * e0,
            format!("inequality slack {min:e} below -1e-4 * {e0:e}"),
        )
    }));

    out.push(check("structural invariants along both solvers", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 7), &g).map_err(|e| e.to_string())?;
        let out = run_pair(&v0, 0.2, &RunSpec::new(&g, 2e-3, 0.05)).map_err(|e| e.to_string())?;
        for r in &out.pe.records {
            if r.parity_dev > 1e-10 || r.barotropic_residual > 1e-9 || r.mean_mode_abs != 0.0 {
                return Err(format!(
                    "pe t={}: parity {:e}, barotropic {:e}, mean {:e}",
                    r.t, r.parity_dev, r.barotropic_residual, r.mean_mode_abs
                ));
            }
        }
        for r in &out.sns.records {
            if r.parity_dev_v > 1e-10
                || r.parity_dev_w > 1e-10
                || r.divergence_residual > 1e-10
                || r.mean_mode_abs != 0.0
            {
                return Err(format!(
                    "scaled t={}: parity ({:e},{:e}), divergence {:e}, mean {:e}",
                    r.t, r.parity_dev_v, r.parity_dev_w, r.divergence_residual, r.mean_mode_abs
                ));
            }
        }
        Ok(())
    }));

    out.push(check("pressure z-parity is even (monitored)", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 8), &g).map_err(|e| e.to_string())?;
        let state = SnsState::from_initial(&v0, 0.2).map_err(|e| e.to_string())?;
        let p = sns::pressure_solve(&state).map_err(|e| e.to_string())?;
        let dev = p.field.parity_deviation(Parity::Even);
        ensure(dev < 1e-10, format!("even-parity deviation {dev:e}"))
    }));

    out.push(check("anisotropic projection reduces to Leray at eps 1", || {
        let g = grid16();
        let f = [
            random_band_limited(&g, 3, 30),
            random_band_limited(&g, 3, 31),
            random_band_limited(&g, 3, 32),
        ];
        let mut t = sns::Tendency {
            v: HorizontalField {
                x: f[0].clone(),
                y: f[1].clone(),
            },
            w: f[2].clone(),
        };
        sns::pressure_project(&mut t, 1.0).map_err(|e| e.to_string())?;
        let iso = IsoNs::new(g.n(), g.l1(), g.l2(), 1e-3);
        let mut gv = [f[0].coeffs().to_vec(), f[1].coeffs().to_vec(), f[2].coeffs().to_vec()];
        iso.leray(&mut gv);
        let mut worst = 0.0f64;
        for (a, b) in [
            (t.v.x.coeffs(), &gv[0]),
            (t.v.y.coeffs(), &gv[1]),
            (t.w.coeffs(), &gv[2]),
        ] {
            for i in 0..a.len() {
                worst = worst.max((a[i] - b[i]).norm());
            }
        }
        ensure(worst < 1e-10, format!("projection mismatch {worst:e}"))
    }));

    out.push(check("scaled solver matches isotropic oracle at eps 1", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 42), &g).map_err(|e| e.to_string())?;
        let dt = 1e-3;
        let t_final: f64 = 0.1;
        let n = (t_final / dt).round() as u64;
        let mut state = SnsState::from_initial(&v0, 1.0).map_err(|e| e.to_string())?;
        let stepper = sns::Stepper::new(&g, pe::StepperConfig::new(dt)).map_err(|e| e.to_string())?;
        let mut iso = IsoNs::new(g.n(), g.l1(), g.l2(), dt);
        iso.set_velocity(state.v.x.coeffs(), state.v.y.coeffs(), state.w.coeffs());
        for i in 0..n {
            state = stepper.step(&state, i).map_err(|e| e.to_string())?;
            iso.step();
        }
        let dist = iso.l2_distance(
            g.volume(),
            state.v.x.coeffs(),
            state.v.y.coeffs(),
            state.w.coeffs(),
        );
        ensure(dist < 1e-8, format!("trajectory L2 distance {dist:e} over T={t_final}"))
    }));

    out.push(check("temporal self-convergence of both solvers", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).map_err(|e| e.to_string())?;
        let t_final = 0.1;
        let order_pe = {
            let run = |dt: f64| -> Result<PeState, String> {
                let stepper = pe::Stepper::new(&g, pe::StepperConfig::new(dt)).map_err(|e| e.to_string())?;
                let mut s = v0.clone();
                for i in 0..(t_final / dt).round() as u64 {
                    s = stepper.step(&s, i).map_err(|e| e.to_string())?;
                }
                Ok(s)
            };
            let (a, b, c) = (run(4e-3)?, run(2e-3)?, run(1e-3)?);
            (a.v.sub(&b.v).l2() / b.v.sub(&c.v).l2()).log2()
        };
        let order_sns = {
            let s0 = SnsState::from_initial(&v0, 0.2).map_err(|e| e.to_string())?;
            let run = |dt: f64| -> Result<SnsState, String> {
                let stepper = sns::Stepper::new(&g, pe::StepperConfig::new(dt)).map_err(|e| e.to_string())?;
                let mut s = s0.clone();
                for i in 0..(t_final / dt).round() as u64 {
                    s = stepper.step(&s, i).map_err(|e| e.to_string())?;
                }
                Ok(s)
            };
            let (a, b, c) = (run(4e-3)?, run(2e-3)?, run(1e-3)?);
            let e1 = (a.v.sub(&b.v).l2().powi(2) + a.w.sub(&b.w).l2().powi(2)).sqrt();
            let e2 = (b.v.sub(&c.v).l2().powi(2) + b.w.sub(&c.w).l2().powi(2)).sqrt();
            (e1 / e2).log2()
        };
        ensure(
            order_pe >= 1.9 && order_sns >= 1.9,
            format!("temporal orders pe {order_pe:.3}, scaled {order_sns:.3}"),
        )
    }));

    out.push(check("inequality ratios stable under refinement", || {
        let two_pi = 2.0 * PI;
        let coarse = Grid::new(16, 16, 16, two_pi, two_pi).map_err(|e| e.to_string())?;
        let fine = Grid::new(32, 32, 32, two_pi, two_pi).map_err(|e| e.to_string())?;
        for variant in [LadyVariant::A, LadyVariant::B] {
            let a = ratio_family_max(&coarse, variant, 30, 3, 2024).map_err(|e| e.to_string())?;
            let b = ratio_family_max(&fine, variant, 30, 3, 2024).map_err(|e| e.to_string())?;
            let change = (a.max_ratio - b.max_ratio).abs() / b.max_ratio;
            if change >= 0.05 {
                return Err(format!("{:?}: max ratio changed by {change:.3}", a.id));
            }
        }
        Ok(())
    }));

    out.push(check("inequality ratio hand-computed constant case", || {
        let g = grid16();
        let one = PhysicalField::from_fn(&g, |_, _, _| 1.0).to_spectral();
        let ratio =
            ladyzhenskaya_ratio(&one, &one, &one, LadyVariant::A).map_err(|e| e.to_string())?;
        let expect = 1.0 / (2.0f64.sqrt() * PI);
        ensure(
            (ratio - expect).abs() < 1e-12,
            format!("ratio {ratio} expected {expect}"),
        )
    }));

    out.push(check("budget monitors stay bounded over a run", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 9), &g).map_err(|e| e.to_string())?;
        let out = run_pair(&v0, 0.2, &RunSpec::new(&g, 2e-3, 0.1)).map_err(|e| e.to_string())?;
        // Bound: 1e3 times the initial value, with the initial H1 scale
        // as the floor for quantities that start at zero.
        let scale = v0.v.h1();
        for r in &out.pe.records {
            for (name, val, init) in [
                ("l2", r.l2_v, out.pe.records[0].l2_v),
                ("grad", r.grad_v, out.pe.records[0].grad_v),
                ("l4", r.l4_v, out.pe.records[0].l4_v),
                ("dz", r.dz_v, out.pe.records[0].dz_v),
                ("lap", r.lap_v, out.pe.records[0].lap_v),
            ] {
                if val > 1e3 * init.max(scale) {
                    return Err(format!("{name} exploded: {val} vs initial {init}"));
                }
            }
        }
        Ok(())
    }));

    out.push(check("pair runs are bit-reproducible", || {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 10), &g).map_err(|e| e.to_string())?;
        let spec = RunSpec::new(&g, 2e-3, 0.02);
        let a = run_pair(&v0, 0.2, &spec).map_err(|e| e.to_string())?;
        let b = run_pair(&v0, 0.2, &spec).map_err(|e| e.to_string())?;
        for (x, y) in a.report.samples.iter().zip(&b.report.samples) {
            if x.l2_v.to_bits() != y.l2_v.to_bits() || x.h1_w.to_bits() != y.h1_w.to_bits() {
                return Err("difference samples are not bit-identical".into());
            }
        }
        Ok(())
    }));

    out.push(check("eps-scaling of anisotropic pressure modes", || {
        let g = grid16();
        let gt = [
            random_band_limited(&g, 3, 60),
            random_band_limited(&g, 3, 61),
            random_band_limited(&g, 3, 62),
        ];
        for eps in [0.5, 0.1] {
            let mut t = sns::Tendency {
                v: HorizontalField {
                    x: gt[0].clone(),
                    y: gt[1].clone(),
                },
                w: gt[2].clone(),
            };
            let p = sns::pressure_project(&mut t, eps).map_err(|e| e.to_string())?;
            let [n1, n2, n3] = g.n();
            let mut worst = 0.0f64;
            for i1 in 0..n1 {
                let kx = g.wavenumber(hydrolim_core::Axis::X, i1);
                for i2 in 0..n2 {
                    let ky = g.wavenumber(hydrolim_core::Axis::Y, i2);
                    for i3 in 0..n3 {
                        let kz = g.wavenumber(hydrolim_core::Axis::Z, i3);
                        let denom = kx * kx + ky * ky + kz * kz / (eps * eps);
                        if denom == 0.0 {
                            continue;
                        }
                        let idx = (i1 * n2 + i2) * n3 + i3;
                        let kdotg =
                            kx * gt[0].coeffs()[idx] + ky * gt[1].coeffs()[idx] + kz * gt[2].coeffs()[idx];
                        let expect = Complex64::new(kdotg.im, -kdotg.re) / denom;
                        worst = worst.max((p.field.coeffs()[idx] - expect).norm());
                    }
                }
            }
            if worst >= 1e-12 {
                return Err(format!("eps {eps}: pressure mode error {worst:e}"));
            }
        }
        Ok(())
    }));

    out
}

/// Prints one line per property; returns true when everything passed.
pub fn report(results: &[PropertyResult]) -> bool {
    let mut ok = true;
    for r in results {
        match &r.outcome {
            Ok(()) => println!("PASS  {}", r.name),
            Err(detail) => {
                ok = false;
                println!("FAIL  {} - {detail}", r.name);
            }
        }
    }
    ok
}
