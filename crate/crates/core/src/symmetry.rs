//! Velocity state containers, the z-parity projection, divergence
//! operators, the hydrostatic recovery of the vertical velocity and the
//! admissible initial-data recipes.
//!
//! Admissible horizontal velocities are even in z, have a zero mean mode,
//! and satisfy the barotropic constraint div_H(int_{-1}^{1} v dz) = 0. The
//! vertical velocity is then w(z) = -int_0^z div_H v dz', odd in z and
//! vanishing at z = 0.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Parity, PhysicalField, SpectralField};
use crate::grid::{Axis, Grid};

/// Hard-error threshold for the barotropic constraint inside the
/// vertical-velocity recovery (the antiderivative would be non-periodic
/// beyond it); roughly 100x accumulated round-off at desk scales.
pub const BAROTROPIC_HARD_TOL: f64 = 1e-8;

/// Monitoring tolerance for state invariants.
pub const STATE_TOL: f64 = 1e-10;

/// Two-component horizontal vector field in coefficient space.
#[derive(Debug, Clone)]
pub struct HorizontalField {
    pub x: SpectralField,
    pub y: SpectralField,
}

impl HorizontalField {
    pub fn zeros(grid: &Arc<Grid>, parity: Parity) -> Self {
        HorizontalField {
            x: SpectralField::zeros(grid, parity),
            y: SpectralField::zeros(grid, parity),
        }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        self.x.grid()
    }

    pub fn l2(&self) -> f64 {
        (self.x.l2().powi(2) + self.y.l2().powi(2)).sqrt()
    }

    pub fn grad_l2(&self) -> f64 {
        (self.x.grad_l2().powi(2) + self.y.grad_l2().powi(2)).sqrt()
    }

    pub fn h1(&self) -> f64 {
        (self.x.h1().powi(2) + self.y.h1().powi(2)).sqrt()
    }

    pub fn dz_l2(&self) -> f64 {
        let dx = self.x.derivative(Axis::Z);
        let dy = self.y.derivative(Axis::Z);
        (dx.l2().powi(2) + dy.l2().powi(2)).sqrt()
    }

    pub fn laplacian_l2(&self) -> f64 {
        (self.x.laplacian_l2().powi(2) + self.y.laplacian_l2().powi(2)).sqrt()
    }

    pub fn grad_laplacian_l2(&self) -> f64 {
        (self.x.grad_laplacian_l2().powi(2) + self.y.grad_laplacian_l2().powi(2)).sqrt()
    }

    /// L4 norm of the vector magnitude, by collocation quadrature on the
    /// dealiased components.
    pub fn l4(&self) -> f64 {
        let px = self.x.dealias().to_physical();
        let py = self.y.dealias().to_physical();
        let cell = self.grid().volume() / self.grid().size() as f64;
        let sum: f64 = px
            .values()
            .iter()
            .zip(py.values())
            .map(|(a, b)| {
                let m = a * a + b * b;
                m * m
            })
            .sum();
        (cell * sum).powf(0.25)
    }

    pub fn axpy(&mut self, s: f64, other: &HorizontalField) {
        self.x.axpy(s, &other.x);
        self.y.axpy(s, &other.y);
    }

    pub fn sub(&self, other: &HorizontalField) -> HorizontalField {
        HorizontalField {
            x: self.x.sub(&other.x),
            y: self.y.sub(&other.y),
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.x.scale(s);
        self.y.scale(s);
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn parity_project(&self, parity: Parity) -> HorizontalField {
        HorizontalField {
            x: self.x.parity_project(parity),
            y: self.y.parity_project(parity),
        }
    }

    pub fn parity_deviation(&self, parity: Parity) -> f64 {
        let total = self.l2();
        if total == 0.0 {
            return 0.0;
        }
        let wrong = match parity {
            Parity::Even => self.parity_project(Parity::Odd).l2(),
            Parity::Odd => self.parity_project(Parity::Even).l2(),
            Parity::None => panic!("deviation needs a target parity"),
        };
        wrong / total
    }
}

/// Horizontal divergence div_H v = dx vx + dy vy; preserves z-parity.
pub fn divergence_h(v: &HorizontalField) -> SpectralField {
    let mut d = v.x.derivative(Axis::X);
    d.axpy(1.0, &v.y.derivative(Axis::Y));
    d
}

/// Full divergence div_H v + dz w. For admissible states (even v, odd w)
/// the result is even-tagged.
pub fn divergence_3d(v: &HorizontalField, w: &SpectralField) -> SpectralField {
    let mut d = divergence_h(v);
    d.axpy(1.0, &w.derivative(Axis::Z));
    d
}

/// L2 norm of the horizontal divergence of the vertical average of v
/// (the barotropic constraint residual). The vertical average is the
/// k3 = 0 coefficient slab.
pub fn barotropic_residual(v: &HorizontalField) -> f64 {
    let d = divergence_h(v);
    let grid = v.grid();
    let [n1, n2, _] = grid.n();
    let mut acc = 0.0;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            acc += d.coeffs()[grid.index(i1, i2, 0)].norm_sqr();
        }
    }
    // The average is the slab itself; measure it as a function on Omega.
    (grid.volume() * acc).sqrt()
}

/// Recovers the vertical velocity from incompressibility:
/// w(z) = -int_0^z div_H v dz', computed as the exact spectral
/// antiderivative in z followed by the odd projection (which pins the
/// k3 = 0 slab so that w vanishes at z = 0).
///
/// Errors with `InvalidState` when the barotropic constraint is violated
/// beyond `BAROTROPIC_HARD_TOL`: the antiderivative of a non-mean-free
/// slab would not be periodic.
pub fn diagnostic_w(v: &HorizontalField) -> Result<SpectralField> {
    let grid = v.grid().clone();
    let d = divergence_h(v);

    let [n1, n2, n3] = grid.n();
    let mut slab = 0.0;
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            slab += d.coeffs()[grid.index(i1, i2, 0)].norm_sqr();
        }
    }
    let slab_norm = (grid.volume() * slab).sqrt();
    if slab_norm > BAROTROPIC_HARD_TOL {
        return Err(Error::InvalidState(format!(
            "barotropic constraint violated: ||div_H mean(v)||_2 = {slab_norm:.3e} > {BAROTROPIC_HARD_TOL:.0e}"
        )));
    }

    let mut w = SpectralField::zeros(&grid, Parity::Odd);
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let base = (i1 * n2 + i2) * n3;
            for i3 in 1..n3 {
                if i3 == n3 / 2 {
                    // Nyquist slab has no signed antiderivative; it is
                    // zero for any dealiased input.
                    continue;
                }
                let kz = grid.wavenumber(Axis::Z, i3);
                // -d / (i kz) = i d / kz
                let c = d.coeffs()[base + i3];
                w.coeffs_mut()[base + i3] = Complex64::new(-c.im, c.re) / kz;
            }
        }
    }
    // Odd projection: symmetrizes round-off and leaves the k3 = 0 slab
    // zero, which is exactly w(.,.,0) = 0 for an even divergence.
    Ok(w.parity_project(Parity::Odd))
}

/// Prognostic state of the primitive equations: horizontal velocity only.
#[derive(Debug, Clone)]
pub struct PeState {
    pub v: HorizontalField,
    pub t: f64,
}

impl PeState {
    pub fn new(v: HorizontalField, t: f64) -> Result<Self> {
        let state = PeState { v, t };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.v.grid()
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.v.x.mean_mode().norm() != 0.0 || self.v.y.mean_mode().norm() != 0.0 {
            return Err(Error::InvalidState("velocity mean mode is nonzero".into()));
        }
        let res = barotropic_residual(&self.v);
        if res > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "barotropic residual {res:.3e} exceeds {STATE_TOL:.0e}"
            )));
        }
        Ok(())
    }
}

/// Prognostic state of the scaled Navier-Stokes system.
#[derive(Debug, Clone)]
pub struct SnsState {
    pub v: HorizontalField,
    pub w: SpectralField,
    pub eps: f64,
    pub t: f64,
}

impl SnsState {
    pub fn new(v: HorizontalField, w: SpectralField, eps: f64, t: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("eps must be positive, got {eps}")));
        }
        let state = SnsState { v, w, eps, t };
        state.check_invariants()?;
        Ok(state)
    }

    /// Builds the scaled state from PE initial data: the vertical velocity
    /// is always recovered from incompressibility, never user-supplied.
    pub fn from_initial(v0: &PeState, eps: f64) -> Result<Self> {
        let w = diagnostic_w(&v0.v)?;
        SnsState::new(v0.v.clone(), w, eps, v0.t)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.v.grid()
    }

    pub fn divergence_residual(&self) -> f64 {
        divergence_3d(&self.v, &self.w).l2()
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.v.x.mean_mode().norm() != 0.0
            || self.v.y.mean_mode().norm() != 0.0
            || self.w.mean_mode().norm() != 0.0
        {
            return Err(Error::InvalidState("velocity mean mode is nonzero".into()));
        }
        let div = self.divergence_residual();
        if div > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "divergence residual {div:.3e} exceeds {STATE_TOL:.0e}"
            )));
        }
        Ok(())
    }

    /// Scaled kinetic energy ||v||_2^2 + eps^2 ||w||_2^2.
    pub fn scaled_energy(&self) -> f64 {
        self.v.l2().powi(2) + self.eps.powi(2) * self.w.l2().powi(2)
    }

    /// Scaled dissipation ||grad v||_2^2 + eps^2 ||grad w||_2^2.
    pub fn scaled_dissipation(&self) -> f64 {
        self.v.grad_l2().powi(2) + self.eps.powi(2) * self.w.grad_l2().powi(2)
    }
}

/// Reproducible initial-data recipes. Every generated field is even in z,
/// mean-zero and barotropic divergence-free.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDataRecipe {
    /// v0 = A (sin(2 pi y / L2) cos(pi z), sin(2 pi x / L1) cos(pi z)).
    /// Its horizontal divergence vanishes pointwise.
    SingleMode { amplitude: f64 },
    /// Seeded band-limited random data projected onto the admissible set
    /// and rescaled to the requested L2 norm.
    RandomBand {
        amplitude: f64,
        max_mode: usize,
        seed: u64,
    },
}

impl InitialDataRecipe {
    pub fn single_mode(amplitude: f64) -> Self {
        InitialDataRecipe::SingleMode { amplitude }
    }

    pub fn random(amplitude: f64, seed: u64) -> Self {
        InitialDataRecipe::RandomBand {
            amplitude,
            max_mode: 3,
            seed,
        }
    }
}

/// Projects a horizontal velocity onto the admissible set: even in z,
/// zero mean mode, barotropic divergence-free, dealiased. Idempotent.
pub fn project_admissible(v: &HorizontalField) -> HorizontalField {
    let grid = v.grid().clone();
    let mut px = v.x.parity_project(Parity::Even).dealias();
    let mut py = v.y.parity_project(Parity::Even).dealias();
    px.zero_mean_mode();
    py.zero_mean_mode();
    // Leray projection of the k3 = 0 slab in 2D kills the barotropic
    // divergence without touching the baroclinic part.
    let [n1, n2, _] = grid.n();
    for i1 in 0..n1 {
        let kx = grid.wavenumber(Axis::X, i1);
        for i2 in 0..n2 {
            let ky = grid.wavenumber(Axis::Y, i2);
            let khsq = kx * kx + ky * ky;
            if khsq == 0.0 {
                continue;
            }
            let idx = grid.index(i1, i2, 0);
            let ax = px.coeffs()[idx];
            let ay = py.coeffs()[idx];
            let kdot = kx * ax + ky * ay;
            px.coeffs_mut()[idx] = ax - kdot * kx / khsq;
            py.coeffs_mut()[idx] = ay - kdot * ky / khsq;
        }
    }
    HorizontalField { x: px, y: py }
}

/// Generates admissible initial data from a recipe.
pub fn make_initial_data(recipe: &InitialDataRecipe, grid: &Arc<Grid>) -> Result<PeState> {
    let v = match recipe {
        InitialDataRecipe::SingleMode { amplitude } => {
            let a = *amplitude;
            let l1 = grid.l1();
            let l2 = grid.l2();
            let two_pi = 2.0 * std::f64::consts::PI;
            let pi = std::f64::consts::PI;
            let vx = PhysicalField::from_fn(grid, |_, y, z| a * (two_pi * y / l2).sin() * (pi * z).cos());
            let vy = PhysicalField::from_fn(grid, |x, _, z| a * (two_pi * x / l1).sin() * (pi * z).cos());
            HorizontalField {
                x: vx.to_spectral().with_parity(Parity::Even),
                y: vy.to_spectral().with_parity(Parity::Even),
            }
        }
        InitialDataRecipe::RandomBand {
            amplitude,
            max_mode,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut vx = SpectralField::zeros(grid, Parity::None);
            let mut vy = SpectralField::zeros(grid, Parity::None);
            fill_random_band(&mut vx, *max_mode, &mut rng);
            fill_random_band(&mut vy, *max_mode, &mut rng);
            let mut v = HorizontalField { x: vx, y: vy };
            v = project_admissible(&v);
            let norm = v.l2();
            if norm > 0.0 {
                v.scale(*amplitude / norm);
            }
            v
        }
    };
    let mut v = project_admissible(&v);
    v.x.set_parity(Parity::Even);
    v.y.set_parity(Parity::Even);
    if v.l2() == 0.0 {
        return Err(Error::DegenerateData(format!("recipe {recipe:?} produced the zero field")));
    }
    PeState::new(v, 0.0)
}

/// Fills Hermitian-paired random coefficients for modes with every
/// |signed index| <= max_mode; the draw order is independent of the grid
/// resolution so one seed denotes one continuum field.
fn fill_random_band(f: &mut SpectralField, max_mode: usize, rng: &mut ChaCha8Rng) {
    let grid = f.grid().clone();
    let [n1, n2, n3] = grid.n();
    let m = max_mode as i64;
    for s1 in -m..=m {
        for s2 in -m..=m {
            for s3 in -m..=m {
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = rng.gen_range(-1.0..1.0);
                if (s1, s2, s3) == (0, 0, 0) {
                    continue;
                }
                let i1 = s1.rem_euclid(n1 as i64) as usize;
                let i2 = s2.rem_euclid(n2 as i64) as usize;
                let i3 = s3.rem_euclid(n3 as i64) as usize;
                let j1 = (-s1).rem_euclid(n1 as i64) as usize;
                let j2 = (-s2).rem_euclid(n2 as i64) as usize;
                let j3 = (-s3).rem_euclid(n3 as i64) as usize;
                // Mild decay keeps the spectrum smooth.
                let decay = 1.0 / (1.0 + (s1 * s1 + s2 * s2 + s3 * s3) as f64);
                let c = Complex64::new(re, im) * decay;
                let idx = grid.index(i1, i2, i3);
                let jdx = grid.index(j1, j2, j3);
                f.coeffs_mut()[idx] += c;
                f.coeffs_mut()[jdx] += c.conj();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid16() -> Arc<Grid> {
        Grid::new(16, 16, 16, 2.0 * PI, 2.0 * PI).unwrap()
    }

    #[test]
    fn divergence_of_shear_is_cosine() {
        let g = grid16();
        let v = HorizontalField {
            x: PhysicalField::from_fn(&g, |x, _, _| x.sin()).to_spectral(),
            y: SpectralField::zeros(&g, Parity::None),
        };
        let d = divergence_h(&v).to_physical();
        let expect = PhysicalField::from_fn(&g, |x, _, _| x.cos());
        let worst = d
            .values()
            .iter()
            .zip(expect.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-12);
    }

    #[test]
    fn divergence_of_constant_vanishes() {
        let g = grid16();
        let v = HorizontalField {
            x: PhysicalField::from_fn(&g, |_, _, _| 2.0).to_spectral(),
            y: PhysicalField::from_fn(&g, |_, _, _| -1.0).to_spectral(),
        };
        assert!(divergence_h(&v).l2() < 1e-13);
    }

    #[test]
    fn diagnostic_w_matches_symbolic_antiderivative() {
        let g = grid16();
        // v = (sin(x) cos(pi z), 0): div_H v = cos(x) cos(pi z),
        // w = -cos(x) sin(pi z)/pi.
        let v = HorizontalField {
            x: PhysicalField::from_fn(&g, |x, _, z| x.sin() * (PI * z).cos())
                .to_spectral()
                .with_parity(Parity::Even),
            y: SpectralField::zeros(&g, Parity::Even),
        };
        let w = diagnostic_w(&v).unwrap();
        assert_eq!(w.parity(), Parity::Odd);
        let expect = PhysicalField::from_fn(&g, |x, _, z| -x.cos() * (PI * z).sin() / PI);
        let got = w.to_physical();
        let worst = got
            .values()
            .iter()
            .zip(expect.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-12, "worst {worst:e}");
    }

    #[test]
    fn diagnostic_w_vanishes_for_z_dependent_velocity() {
        let g = grid16();
        let v = HorizontalField {
            x: PhysicalField::from_fn(&g, |_, _, z| (PI * z).cos()).to_spectral(),
            y: SpectralField::zeros(&g, Parity::Even),
        };
        let w = diagnostic_w(&v).unwrap();
        assert!(w.l2() < 1e-13);
    }

    #[test]
    fn diagnostic_w_closes_the_divergence() {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::random(1.0, 7), &g).unwrap();
        let w = diagnostic_w(&v0.v).unwrap();
        assert!(divergence_3d(&v0.v, &w).l2() < 1e-12);
        // dz(diagnostic_w) + div_H v = 0 in coefficient space.
        let mut resid = w.derivative(Axis::Z);
        resid.axpy(1.0, &divergence_h(&v0.v));
        assert!(resid.l2() < 1e-12);
    }

    #[test]
    fn diagnostic_w_rejects_barotropic_violation() {
        let g = grid16();
        // sin(x) alone: div_H of its vertical mean is cos(x) != 0.
        let v = HorizontalField {
            x: PhysicalField::from_fn(&g, |x, _, _| x.sin()).to_spectral(),
            y: SpectralField::zeros(&g, Parity::None),
        };
        match diagnostic_w(&v) {
            Err(Error::InvalidState(_)) => {}
            other => panic!("expected InvalidState, got {other:?}"),
        }
    }

    #[test]
    fn single_mode_recipe_is_admissible() {
        let g = grid16();
        let state = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
        // Vertical integral of cos(pi z) vanishes pointwise: check the
        // k3 = 0 slab of both components.
        let [n1, n2, _] = g.n();
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                assert!(state.v.x.coeffs()[g.index(i1, i2, 0)].norm() < 1e-14);
                assert!(state.v.y.coeffs()[g.index(i1, i2, 0)].norm() < 1e-14);
            }
        }
        assert!(state.v.parity_deviation(Parity::Even) < 1e-14);
        assert!(barotropic_residual(&state.v) < 1e-12);
        // div_H v0 = 0 pointwise for this recipe, so w0 = 0.
        assert!(diagnostic_w(&state.v).unwrap().l2() < 1e-12);
    }

    #[test]
    fn random_recipe_projection_is_idempotent() {
        let g = grid16();
        let state = make_initial_data(&InitialDataRecipe::random(1.0, 42), &g).unwrap();
        let twice = project_admissible(&state.v);
        let dx = twice.x.sub(&state.v.x).l2();
        let dy = twice.y.sub(&state.v.y).l2();
        assert!(dx < 1e-14 && dy < 1e-14, "projection moved the field: {dx:e} {dy:e}");
        assert!((state.v.l2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_amplitude_recipe_is_degenerate() {
        let g = grid16();
        match make_initial_data(&InitialDataRecipe::single_mode(0.0), &g) {
            Err(Error::DegenerateData(_)) => {}
            other => panic!("expected DegenerateData, got {other:?}"),
        }
    }

    #[test]
    fn sns_state_requires_positive_eps() {
        let g = grid16();
        let v0 = make_initial_data(&InitialDataRecipe::single_mode(1.0), &g).unwrap();
        assert!(SnsState::from_initial(&v0, 0.0).is_err());
        assert!(SnsState::from_initial(&v0, -0.5).is_err());
        let s = SnsState::from_initial(&v0, 0.1).unwrap();
        assert!(s.divergence_residual() < 1e-12);
    }
}
