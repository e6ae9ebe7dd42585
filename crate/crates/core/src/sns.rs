//! Time integration of the scaled anisotropic Navier-Stokes system:
//! prognostic (v, w) with the eps^2 weight on the vertical momentum
//! equation, and a 3D anisotropic pressure solve.
//!
//! Isolating dt w in the vertical equation gives
//!   dt w + u.grad w - Lap w + eps^{-2} dz p = 0,
//! so diffusion acts with unit coefficient on both v and w and the exact
//! integrating factor exp(-|k|^2 dt) applies to all three components.
//! Requiring the post-projection tendency to be divergence-free yields the
//! mode-wise pressure equation (|k_H|^2 + k3^2/eps^2) p = -i k . G with
//! the eps^{-2} weight on the w correction; at eps = 1 this is the
//! standard Leray projection.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Parity, SpectralField};
use crate::grid::{Axis, Grid};
use crate::pe::{apply_factor, diffusion_factor, MIN_DT};
use crate::symmetry::{HorizontalField, SnsState};

pub type StepperConfig = crate::pe::StepperConfig;

/// 3D pressure of the scaled system, mean-zero. The z-parity of the
/// computed pressure is monitored, not enforced.
#[derive(Debug, Clone)]
pub struct SnsPressure {
    pub field: SpectralField,
}

impl SnsPressure {
    pub fn l2(&self) -> f64 {
        self.field.l2()
    }

    pub fn mean_mode(&self) -> Complex64 {
        self.field.mean_mode()
    }
}

/// Explicit (advective) tendencies for (vx, vy, w) before the pressure
/// correction.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub v: HorizontalField,
    pub w: SpectralField,
}

/// Solves the anisotropic pressure equation for given tendencies and
/// subtracts the weighted gradient, returning the pressure. After the
/// call the tendency satisfies div_H g_v + dz g_w = 0 to round-off.
pub fn pressure_project(g: &mut Tendency, eps: f64) -> Result<SnsPressure> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let grid = g.v.grid().clone();
    let [n1, n2, n3] = grid.n();
    let inv_eps_sq = 1.0 / (eps * eps);
    let mut p = SpectralField::zeros(&grid, Parity::None);
    for i1 in 0..n1 {
        let kx = grid.wavenumber(Axis::X, i1);
        for i2 in 0..n2 {
            let ky = grid.wavenumber(Axis::Y, i2);
            let base = (i1 * n2 + i2) * n3;
            for i3 in 0..n3 {
                let kz = grid.wavenumber(Axis::Z, i3);
                let denom = kx * kx + ky * ky + kz * kz * inv_eps_sq;
                if denom == 0.0 {
                    continue;
                }
                let gx = g.v.x.coeffs()[base + i3];
                let gy = g.v.y.coeffs()[base + i3];
                let gw = g.w.coeffs()[base + i3];
                let kdotg = kx * gx + ky * gy + kz * gw;
                // p = -i (k.G) / D
                let pc = Complex64::new(kdotg.im, -kdotg.re) / denom;
                p.coeffs_mut()[base + i3] = pc;
                let i_pc = Complex64::new(-pc.im, pc.re);
                g.v.x.coeffs_mut()[base + i3] = gx - kx * i_pc;
                g.v.y.coeffs_mut()[base + i3] = gy - ky * i_pc;
                g.w.coeffs_mut()[base + i3] = gw - kz * inv_eps_sq * i_pc;
            }
        }
    }
    Ok(SnsPressure { field: p })
}

/// Advective tendencies in divergence form: G_j = -d_i (u_i u_j), with all
/// products dealiased, followed by the anisotropic pressure projection.
/// Diffusion is handled by the stepper's integrating factor.
pub fn rhs(state: &SnsState) -> Result<Tendency> {
    Ok(rhs_with_extras(state)?.0)
}

fn rhs_with_extras(state: &SnsState) -> Result<(Tendency, SnsPressure, f64)> {
    let px = state.v.x.to_physical();
    let py = state.v.y.to_physical();
    let pw = state.w.to_physical();
    let max_speed = px.max_abs().max(py.max_abs()).max(pw.max_abs());

    let txx = px.mul(&px).to_spectral().dealias();
    let txy = px.mul(&py).to_spectral().dealias();
    let tyy = py.mul(&py).to_spectral().dealias();
    let txw = px.mul(&pw).to_spectral().dealias();
    let tyw = py.mul(&pw).to_spectral().dealias();
    let tww = pw.mul(&pw).to_spectral().dealias();

    let div3 = |a: &SpectralField, b: &SpectralField, c: &SpectralField| {
        let mut d = a.derivative(Axis::X);
        d.axpy(1.0, &b.derivative(Axis::Y));
        d.axpy(1.0, &c.derivative(Axis::Z));
        d.scale(-1.0);
        d
    };
    let mut gx = div3(&txx, &txy, &txw);
    let mut gy = div3(&txy, &tyy, &tyw);
    let mut gw = div3(&txw, &tyw, &tww);
    gx.zero_mean_mode();
    gy.zero_mean_mode();
    gw.zero_mean_mode();
    gx.set_parity(Parity::Even);
    gy.set_parity(Parity::Even);
    gw.set_parity(Parity::Odd);

    let mut g = Tendency {
        v: HorizontalField { x: gx, y: gy },
        w: gw,
    };
    let p = pressure_project(&mut g, state.eps)?;
    Ok((g, p, max_speed))
}

/// Pressure diagnostic for the current state (the stage pressure of the
/// projected tendency).
pub fn pressure_solve(state: &SnsState) -> Result<SnsPressure> {
    Ok(rhs_with_extras(state)?.1)
}

/// Integrating-factor Heun stepper for the scaled system.
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

    /// Test hook: diffusion only.
    pub fn linear_only(mut self, on: bool) -> Self {
        self.linear_only = on;
        self
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn step(&self, state: &SnsState, step_index: u64) -> Result<SnsState> {
        if !state.grid().same_geometry(&self.grid) {
            return Err(Error::Config("state grid does not match stepper grid".into()));
        }
        let dt = self.cfg.dt;

        let substeps = if self.linear_only {
            1
        } else {
            let (_, _, speed) =
                rhs_with_extras(state).map_err(|e| self.blowup(step_index, state.t, e))?;
            let h_cfl = self.cfl_limit(speed);
            let m = if dt <= h_cfl { 1 } else { (dt / h_cfl).ceil() as u64 };
            if dt / m as f64 <= MIN_DT {
                return Err(Error::BlowUp {
                    step: step_index,
                    t: state.t,
                    what: format!("CFL requires dt below {MIN_DT:e} (max speed {speed:.3e})"),
                });
            }
            m
        };

        let h = dt / substeps as f64;
        let efac_fine;
        let efac: &[f64] = if substeps == 1 {
            &self.efac
        } else {
            efac_fine = diffusion_factor(&self.grid, h);
            &efac_fine
        };

        let mut v = state.v.clone();
        let mut w = state.w.clone();
        let mut t = state.t;
        for _ in 0..substeps {
            (v, w) = self
                .heun_substep(&v, &w, state.eps, t, h, efac)
                .map_err(|e| self.blowup(step_index, t, e))?;
            t += h;
        }

        // Re-project onto parity / mean-zero / incompressibility; all are
        // round-off cleanups for an exact step.
        let mut v = v.parity_project(Parity::Even);
        let mut w = w.parity_project(Parity::Odd);
        v.x.zero_mean_mode();
        v.y.zero_mean_mode();
        w.zero_mean_mode();
        v.x.dealias_in_place();
        v.y.dealias_in_place();
        w.dealias_in_place();
        let mut g = Tendency { v, w };
        pressure_project(&mut g, state.eps)?;
        let (v, w) = (g.v, g.w);

        if !v.is_finite() || !w.is_finite() {
            return Err(Error::BlowUp {
                step: step_index,
                t: state.t,
                what: "non-finite velocity after step".into(),
            });
        }
        Ok(SnsState {
            v,
            w,
            eps: state.eps,
            t: state.t + dt,
        })
    }

    fn heun_substep(
        &self,
        v: &HorizontalField,
        w: &SpectralField,
        eps: f64,
        t: f64,
        h: f64,
        efac: &[f64],
    ) -> Result<(HorizontalField, SpectralField)> {
        let apply = |v: &mut HorizontalField, w: &mut SpectralField| {
            apply_factor(v, efac);
            for (c, &e) in w.coeffs_mut().iter_mut().zip(efac) {
                *c *= e;
            }
        };
        if self.linear_only {
            let mut v = v.clone();
            let mut w = w.clone();
            apply(&mut v, &mut w);
            return Ok((v, w));
        }
        let stage = |v: &HorizontalField, w: &SpectralField| -> Result<Tendency> {
            rhs(&SnsState {
                v: v.clone(),
                w: w.clone(),
                eps,
                t,
            })
        };
        let k1 = stage(v, w)?;

        let mut vstar = v.clone();
        let mut wstar = w.clone();
        vstar.axpy(h, &k1.v);
        wstar.axpy(h, &k1.w);
        apply(&mut vstar, &mut wstar);
        let k2 = stage(&vstar, &wstar)?;

        let mut vn = v.clone();
        let mut wn = w.clone();
        vn.axpy(0.5 * h, &k1.v);
        wn.axpy(0.5 * h, &k1.w);
        apply(&mut vn, &mut wn);
        vn.axpy(0.5 * h, &k2.v);
        wn.axpy(0.5 * h, &k2.w);
        Ok((vn, wn))
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
pub fn step(state: &SnsState, cfg: StepperConfig) -> Result<SnsState> {
    Stepper::new(state.grid(), cfg)?.step(state, 0)
}
