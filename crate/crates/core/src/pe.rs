//! Time integration of the primitive equations: prognostic horizontal
//! velocity v, diagnostic vertical velocity w and diagnostic 2D pressure
//! p(x, y, t).
//!
//! The advective tendency is assembled in divergence form, which is
//! identical to the convective form (v.grad_H)v + w dz v on the dealiased
//! modes because the quadratic products are alias-free and the velocity is
//! exactly divergence-free. Diffusion uses the exact integrating factor
//! exp(-|k|^2 dt) per mode (unit viscosity); advection and pressure are
//! advanced with an explicit two-stage Runge-Kutta step.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Parity, SpectralField};
use crate::grid::{Axis, Grid};
use crate::symmetry::{diagnostic_w, project_admissible, HorizontalField, PeState};

/// Smallest admissible (sub)step before the CFL guard declares blow-up.
pub const MIN_DT: f64 = 1e-8;

/// Time-stepping scheme; the integrating-factor Heun step is the only one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImexRk2,
}

#[derive(Debug, Clone, Copy)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub cfl_safety: f64,
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        StepperConfig {
            dt,
            scheme: Scheme::ImexRk2,
            cfl_safety: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }
}

/// Diagnostic 2D pressure on M, mean-zero by convention.
#[derive(Debug, Clone)]
pub struct PePressure {
    grid: Arc<Grid>,
    /// k1-major 2D coefficients, length N1 * N2.
    coeff: Vec<Complex64>,
}

impl PePressure {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeff
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.grid.n()[1] + i2
    }

    pub fn mean_mode(&self) -> Complex64 {
        self.coeff[0]
    }

    /// L2 norm over M.
    pub fn l2_m(&self) -> f64 {
        let area = self.grid.l1() * self.grid.l2();
        let sum: f64 = self.coeff.iter().map(|c| c.norm_sqr()).sum();
        (area * sum).sqrt()
    }
}

/// Dealiased spectral products of the velocity components used by both
/// the pressure solve and the momentum tendency.
struct VelocityProducts {
    txx: SpectralField,
    txy: SpectralField,
    tyy: SpectralField,
    /// w vx and w vy, present unless the caller runs pressure-only.
    qx: Option<SpectralField>,
    qy: Option<SpectralField>,
    max_speed: f64,
}

fn velocity_products(v: &HorizontalField, w: Option<&SpectralField>) -> VelocityProducts {
    let px = v.x.to_physical();
    let py = v.y.to_physical();
    let mut max_speed = px.max_abs().max(py.max_abs());
    let txx = px.mul(&px).to_spectral().dealias();
    let txy = px.mul(&py).to_spectral().dealias();
    let tyy = py.mul(&py).to_spectral().dealias();
    let (qx, qy) = match w {
        Some(w) => {
            let pw = w.to_physical();
            max_speed = max_speed.max(pw.max_abs());
            (
                Some(pw.mul(&px).to_spectral().dealias()),
                Some(pw.mul(&py).to_spectral().dealias()),
            )
        }
        None => (None, None),
    };
    VelocityProducts {
        txx,
        txy,
        tyy,
        qx,
        qy,
        max_speed,
    }
}

fn pressure_from_products(grid: &Arc<Grid>, prod: &VelocityProducts) -> PePressure {
    let [n1, n2, _] = grid.n();
    let mut coeff = vec![Complex64::default(); n1 * n2];
    for i1 in 0..n1 {
        let kx = grid.wavenumber(Axis::X, i1);
        for i2 in 0..n2 {
            let ky = grid.wavenumber(Axis::Y, i2);
            let khsq = kx * kx + ky * ky;
            if khsq == 0.0 {
                continue;
            }
            // The k3 = 0 coefficient slab is the vertical average.
            let idx = grid.index(i1, i2, 0);
            let txx = prod.txx.coeffs()[idx];
            let txy = prod.txy.coeffs()[idx];
            let tyy = prod.tyy.coeffs()[idx];
            let kkt = kx * kx * txx + 2.0 * kx * ky * txy + ky * ky * tyy;
            coeff[i1 * n2 + i2] = -kkt / khsq;
        }
    }
    PePressure {
        grid: grid.clone(),
        coeff,
    }
}

/// Solves -Lap_H p = avg_z div_H (div_H (v (x) v)) for the unique
/// mean-zero 2D pressure, by vertical averaging (the k3 = 0 coefficient
/// slab) and division by |k_H|^2.
pub fn pressure_solve(v: &HorizontalField) -> PePressure {
    let prod = velocity_products(v, None);
    pressure_from_products(v.grid(), &prod)
}

/// Explicit tendency: -(v.grad_H)v - w dz v - grad_H p, with
/// w = diagnostic_w(v) and p = pressure_solve(v). Diffusion is handled by
/// the stepper's integrating factor and is not part of this tendency.
pub fn rhs(state: &PeState) -> Result<HorizontalField> {
    Ok(rhs_with_speed(state)?.0)
}

fn rhs_with_speed(state: &PeState) -> Result<(HorizontalField, f64)> {
    let grid = state.grid().clone();
    let w = diagnostic_w(&state.v)?;
    let prod = velocity_products(&state.v, Some(&w));

    // G = -div(u (x) v) in spectral space.
    let mut gx = prod.txx.derivative(Axis::X);
    gx.axpy(1.0, &prod.txy.derivative(Axis::Y));
    gx.axpy(1.0, &prod.qx.as_ref().unwrap().derivative(Axis::Z));
    gx.scale(-1.0);

    let mut gy = prod.txy.derivative(Axis::X);
    gy.axpy(1.0, &prod.tyy.derivative(Axis::Y));
    gy.axpy(1.0, &prod.qy.as_ref().unwrap().derivative(Axis::Z));
    gy.scale(-1.0);

    // Subtract grad_H p on the vertical-mean slab; p is z-independent so
    // it has no other spectral content.
    let p = pressure_from_products(&grid, &prod);
    let [n1, n2, _] = grid.n();
    for i1 in 0..n1 {
        let kx = grid.wavenumber(Axis::X, i1);
        for i2 in 0..n2 {
            let ky = grid.wavenumber(Axis::Y, i2);
            let pc = p.coeffs()[i1 * n2 + i2];
            let idx = grid.index(i1, i2, 0);
            gx.coeffs_mut()[idx] -= Complex64::new(0.0, kx) * pc;
            gy.coeffs_mut()[idx] -= Complex64::new(0.0, ky) * pc;
        }
    }

    gx.zero_mean_mode();
    gy.zero_mean_mode();
    gx.set_parity(Parity::Even);
    gy.set_parity(Parity::Even);
    Ok((HorizontalField { x: gx, y: gy }, prod.max_speed))
}

/// Full discrete time derivative including diffusion, for the budget
/// monitors (finite differencing of states would add order-reduction
/// noise).
pub fn time_derivative(state: &PeState) -> Result<HorizontalField> {
    let mut d = rhs(state)?;
    let grid = state.grid().clone();
    let [n1, n2, n3] = grid.n();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let base = (i1 * n2 + i2) * n3;
            for i3 in 0..n3 {
                let ksq = grid.k_sq(i1, i2, i3);
                d.x.coeffs_mut()[base + i3] -= ksq * state.v.x.coeffs()[base + i3];
                d.y.coeffs_mut()[base + i3] -= ksq * state.v.y.coeffs()[base + i3];
            }
        }
    }
    Ok(d)
}

/// Integrating-factor Heun stepper. Holds the cached diffusion factor for
/// the configured dt; a fresh instance is confined to one thread at a time
/// while distinct instances run concurrently without coordination.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<Grid>,
    cfg: StepperConfig,
    efac: Vec<f64>,
    linear_only: bool,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Stepper {
            grid: grid.clone(),
            cfg,
            efac: diffusion_factor(grid, cfg.dt),
            linear_only: false,
        })
    }

    /// Test hook: disables advection and pressure so a step is exactly the
    /// heat kernel.
    pub fn linear_only(mut self, on: bool) -> Self {
        self.linear_only = on;
        self
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Advances one step of length dt. `step_index` only labels errors.
    pub fn step(&self, state: &PeState, step_index: u64) -> Result<PeState> {
        if !state.grid().same_geometry(&self.grid) {
            return Err(Error::Config("state grid does not match stepper grid".into()));
        }
        let dt = self.cfg.dt;

        let (mut v, substeps) = if self.linear_only {
            (state.v.clone(), 1)
        } else {
            let (_, speed) = rhs_with_speed(state).map_err(|e| self.blowup(step_index, state.t, e))?;
            let h_cfl = self.cfl_limit(speed);
            let m = if dt <= h_cfl { 1 } else { (dt / h_cfl).ceil() as u64 };
            if dt / m as f64 <= MIN_DT {
                return Err(Error::BlowUp {
                    step: step_index,
                    t: state.t,
                    what: format!("CFL requires dt below {MIN_DT:e} (max speed {speed:.3e})"),
                });
            }
            (state.v.clone(), m)
        };

        let h = dt / substeps as f64;
        let efac = if substeps == 1 {
            None
        } else {
            Some(diffusion_factor(&self.grid, h))
        };
        let efac: &[f64] = efac.as_deref().unwrap_or(&self.efac);

        let mut t = state.t;
        for _ in 0..substeps {
            v = self
                .heun_substep(&v, t, h, efac)
                .map_err(|e| self.blowup(step_index, t, e))?;
            t += h;
        }

        let mut v = project_admissible(&v);
        v.x.set_parity(Parity::Even);
        v.y.set_parity(Parity::Even);
        if !v.is_finite() {
            return Err(Error::BlowUp {
                step: step_index,
                t: state.t,
                what: "non-finite velocity after step".into(),
            });
        }
        Ok(PeState {
            v,
            t: state.t + dt,
        })
    }

    fn heun_substep(&self, v: &HorizontalField, t: f64, h: f64, efac: &[f64]) -> Result<HorizontalField> {
        if self.linear_only {
            let mut out = v.clone();
            apply_factor(&mut out, efac);
            return Ok(out);
        }
        let stage = |v: &HorizontalField| -> Result<HorizontalField> {
            rhs(&PeState { v: v.clone(), t })
        };
        let k1 = stage(v)?;

        // u* = E (u + h k1)
        let mut ustar = v.clone();
        ustar.axpy(h, &k1);
        apply_factor(&mut ustar, efac);
        let k2 = stage(&ustar)?;

        // u' = E u + (h/2) (E k1 + k2)
        let mut out = v.clone();
        out.axpy(0.5 * h, &k1);
        apply_factor(&mut out, efac);
        out.axpy(0.5 * h, &k2);
        Ok(out)
    }

    fn cfl_limit(&self, max_speed: f64) -> f64 {
        let [dx, dy, dz] = self.grid.spacing();
        let h = dx.min(dy).min(dz);
        if max_speed <= 0.0 {
            f64::INFINITY
        } else {
            self.cfg.cfl_safety * h / max_speed
        }
    }

    fn blowup(&self, step: u64, t: f64, e: Error) -> Error {
        match e {
            Error::BlowUp { .. } => e,
            other => Error::BlowUp {
                step,
                t,
                what: other.to_string(),
            },
        }
    }
}

/// One step with an ephemeral stepper.
pub fn step(state: &PeState, cfg: StepperConfig) -> Result<PeState> {
    Stepper::new(state.grid(), cfg)?.step(state, 0)
}

pub(crate) fn diffusion_factor(grid: &Arc<Grid>, dt: f64) -> Vec<f64> {
    let [n1, n2, n3] = grid.n();
    let mut efac = Vec::with_capacity(grid.size());
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                efac.push((-grid.k_sq(i1, i2, i3) * dt).exp());
            }
        }
    }
    efac
}

pub(crate) fn apply_factor(v: &mut HorizontalField, efac: &[f64]) {
    for (c, &e) in v.x.coeffs_mut().iter_mut().zip(efac) {
        *c *= e;
    }
    for (c, &e) in v.y.coeffs_mut().iter_mut().zip(efac) {
        *c *= e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PhysicalField;
    use crate::symmetry::{barotropic_residual, make_initial_data, InitialDataRecipe};
    use std::f64::consts::PI;

    fn grid16() -> Arc<Grid> {
        Grid::new(16, 16, 16, 2.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn zero_velocity_gives_zero_pressure_and_tendency() {
        let g = grid16();
        let v = HorizontalField::zeros(&g, Parity::Even);
        let p = pressure_solve(&v);
        assert!(p.l2_m() == 0.0);
        let state = PeState { v, t: 0.0 };
        let tend = rhs(&state).unwrap();
        assert!(tend.l2() == 0.0);
    }

    #[test]
    fn z_dependent_velocity_gives_zero_pressure() {
        let g = grid16();
        let v = HorizontalField {
            x: PhysicalField::from_fn(&g, |_, _, z| (PI * z).cos())
                .to_spectral()
                .with_parity(Parity::Even),
            y: PhysicalField::from_fn(&g, |_, _, z| (2.0 * PI * z).cos())
                .to_spectral()
                .with_parity(Parity::Even),
        };
        // v (x) v depends only on z, so its horizontal divergence vanishes.
        let p = pressure_solve(&v);
        assert!(p.l2_m() < 1e-13);
    }

    #[test]
    fn pressure_mean_mode_is_zero() {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
        let p = pressure_solve(&v0.v);
        assert_eq!(p.mean_mode(), Complex64::default());
        assert!(p.l2_m() > 0.0);
    }

    #[test]
    fn shear_flow_tendency_is_minus_pressure_gradient() {
        let g = grid16();
        // v = (f(y), 0): w = 0, (v.grad_H)v = 0 and the pressure RHS
        // vanishes, so p = 0 and the tendency is -grad_H p = 0.
        let v = HorizontalField {
            x: PhysicalField::from_fn(&g, |_, y, _| y.sin())
                .to_spectral()
                .with_parity(Parity::Even),
            y: SpectralField::zeros(&g, Parity::Even),
        };
        let p = pressure_solve(&v);
        assert!(p.l2_m() < 1e-13);
        let tend = rhs(&PeState { v, t: 0.0 }).unwrap();
        assert!(tend.l2() < 1e-12);
    }

    #[test]
    fn tendency_is_mean_zero_even_and_barotropic() {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 3), &g).unwrap();
        let tend = rhs(&v0).unwrap();
        assert_eq!(tend.x.mean_mode(), Complex64::default());
        assert_eq!(tend.y.mean_mode(), Complex64::default());
        assert!(tend.parity_deviation(Parity::Even) < 1e-12);
        assert!(barotropic_residual(&tend) < 1e-11);
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = grid16();
        let state = PeState {
            v: HorizontalField::zeros(&g, Parity::Even),
            t: 0.0,
        };
        let next = step(&state, StepperConfig::new(1e-2)).unwrap();
        assert!(next.v.l2() == 0.0);
        assert_eq!(next.t, 1e-2);
    }

    #[test]
    fn linear_step_is_exact_heat_kernel() {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
        let dt = 1e-2;
        let stepper = Stepper::new(&g, StepperConfig::new(dt)).unwrap().linear_only(true);
        let mut s = v0.clone();
        for i in 0..10 {
            s = stepper.step(&s, i).unwrap();
        }
        // Single-mode data decays by exp(-|k|^2 t) with |k|^2 = 1 + pi^2.
        let ksq = 1.0 + PI * PI;
        let expect = v0.v.l2() * (-ksq * dt * 10.0).exp();
        assert!(
            (s.v.l2() - expect).abs() / expect < 1e-12,
            "got {} expected {}",
            s.v.l2(),
            expect
        );
    }

    #[test]
    fn invariants_preserved_over_steps() {
        let g = grid16();
        let mut s = make_initial_data(&InitialDataRecipe::random(1.0, 11), &g).unwrap();
        let stepper = Stepper::new(&g, StepperConfig::new(2e-3)).unwrap();
        for i in 0..20 {
            s = stepper.step(&s, i).unwrap();
            assert_eq!(s.v.x.mean_mode(), Complex64::default());
            assert!(s.v.parity_deviation(Parity::Even) < 1e-10);
            assert!(barotropic_residual(&s.v) < 1e-9);
        }
    }

    #[test]
    fn temporal_self_convergence_is_second_order() {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
        let t_final = 0.05;
        let run = |dt: f64| -> PeState {
            let stepper = Stepper::new(&g, StepperConfig::new(dt)).unwrap();
            let n = (t_final / dt).round() as u64;
            let mut s = v0.clone();
            for i in 0..n {
                s = stepper.step(&s, i).unwrap();
            }
            s
        };
        let dt = 2e-3;
        let a = run(dt);
        let b = run(dt / 2.0);
        let c = run(dt / 4.0);
        let e1 = a.v.sub(&b.v).l2();
        let e2 = b.v.sub(&c.v).l2();
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "observed temporal order {order:.3} (e1={e1:e}, e2={e2:e})");
    }
}
