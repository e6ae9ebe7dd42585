//! Scalar fields in coefficient space and on collocation points.
//!
//! A `SpectralField` stores the complex Fourier coefficients of a real
//! field together with a z-parity tag. `PhysicalField` is the matching
//! collocation representation; constructing one rejects non-finite values.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::grid::{signed_index, Axis, Grid};

/// Parity with respect to z: f(-z) = f(z) (even), f(-z) = -f(z) (odd),
/// or untracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    /// Parity after one z-derivative.
    fn flipped(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }
}

/// Norms computed from a field. `H1Seminorm` and `GradL2` both denote
/// the L2 norm of the full gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    L4,
    H1Seminorm,
    GradL2,
}

#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeff: Vec<Complex64>,
    parity: Parity,
}

#[derive(Debug, Clone)]
pub struct PhysicalField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>, parity: Parity) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeff: vec![Complex64::default(); grid.size()],
            parity,
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeff: Vec<Complex64>, parity: Parity) -> Result<Self> {
        if coeff.len() != grid.size() {
            return Err(Error::Config(format!(
                "coefficient buffer of length {} does not conform to {}x{}x{} grid",
                coeff.len(),
                grid.n()[0],
                grid.n()[1],
                grid.n()[2]
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeff,
            parity,
        })
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeff
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeff
    }

    #[inline]
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn set_parity(&mut self, parity: Parity) {
        self.parity = parity;
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    /// Inverse transform to collocation values (real parts; the imaginary
    /// residue of a Hermitian-symmetric field is round-off).
    pub fn to_physical(&self) -> PhysicalField {
        let mut buf = self.coeff.clone();
        self.grid.fft3(&mut buf, FftDirection::Inverse);
        let values: Vec<f64> = buf.iter().map(|c| c.re).collect();
        PhysicalField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Spectral derivative along an axis: multiplies each mode by i*k.
    /// A z-derivative flips the parity tag.
    pub fn derivative(&self, axis: Axis) -> SpectralField {
        let [n1, n2, n3] = self.grid.n();
        let mut out = self.coeff.clone();
        match axis {
            Axis::X => {
                for i1 in 0..n1 {
                    let k = self.grid.wavenumber(Axis::X, i1);
                    for c in &mut out[i1 * n2 * n3..(i1 + 1) * n2 * n3] {
                        *c = Complex64::new(-c.im * k, c.re * k);
                    }
                }
            }
            Axis::Y => {
                for i1 in 0..n1 {
                    for i2 in 0..n2 {
                        let k = self.grid.wavenumber(Axis::Y, i2);
                        let base = (i1 * n2 + i2) * n3;
                        for c in &mut out[base..base + n3] {
                            *c = Complex64::new(-c.im * k, c.re * k);
                        }
                    }
                }
            }
            Axis::Z => {
                for i1 in 0..n1 {
                    for i2 in 0..n2 {
                        let base = (i1 * n2 + i2) * n3;
                        for i3 in 0..n3 {
                            let k = self.grid.wavenumber(Axis::Z, i3);
                            let c = out[base + i3];
                            out[base + i3] = Complex64::new(-c.im * k, c.re * k);
                        }
                    }
                }
            }
        }
        let parity = if axis == Axis::Z {
            self.parity.flipped()
        } else {
            self.parity
        };
        SpectralField {
            grid: self.grid.clone(),
            coeff: out,
            parity,
        }
    }

    /// Zeroes every mode outside the dealias mask; modes inside are
    /// untouched bit-for-bit.
    pub fn dealias(&self) -> SpectralField {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        let [n1, n2, n3] = self.grid.n();
        for i1 in 0..n1 {
            let keep1 = signed_index(n1, i1).unsigned_abs() as usize <= self.grid.dealias_limit(Axis::X);
            for i2 in 0..n2 {
                let keep2 =
                    keep1 && signed_index(n2, i2).unsigned_abs() as usize <= self.grid.dealias_limit(Axis::Y);
                let base = (i1 * n2 + i2) * n3;
                if !keep2 {
                    self.coeff[base..base + n3].fill(Complex64::default());
                    continue;
                }
                let lim3 = self.grid.dealias_limit(Axis::Z);
                for i3 in 0..n3 {
                    if signed_index(n3, i3).unsigned_abs() as usize > lim3 {
                        self.coeff[base + i3] = Complex64::default();
                    }
                }
            }
        }
    }

    /// Even or odd part with respect to z, computed in coefficient space:
    /// reflection z -> -z maps mode k3 to -k3.
    pub fn parity_project(&self, parity: Parity) -> SpectralField {
        assert!(parity != Parity::None, "project onto Even or Odd");
        let [n1, n2, n3] = self.grid.n();
        let sign = if parity == Parity::Even { 1.0 } else { -1.0 };
        let mut out = vec![Complex64::default(); self.coeff.len()];
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let base = (i1 * n2 + i2) * n3;
                for i3 in 0..n3 {
                    let j3 = (n3 - i3) % n3;
                    out[base + i3] = 0.5 * (self.coeff[base + i3] + sign * self.coeff[base + j3]);
                }
            }
        }
        SpectralField {
            grid: self.grid.clone(),
            coeff: out,
            parity,
        }
    }

    /// Relative magnitude of the parity-violating part, 0 for the zero field.
    pub fn parity_deviation(&self, parity: Parity) -> f64 {
        let total = self.l2();
        if total == 0.0 {
            return 0.0;
        }
        let wrong = self
            .parity_project(match parity {
                Parity::Even => Parity::Odd,
                Parity::Odd => Parity::Even,
                Parity::None => panic!("deviation needs a target parity"),
            })
            .l2();
        wrong / total
    }

    /// Zeroes the (0,0,0) mode.
    pub fn zero_mean_mode(&mut self) {
        self.coeff[0] = Complex64::default();
    }

    pub fn mean_mode(&self) -> Complex64 {
        self.coeff[0]
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::L2 => self.l2(),
            NormKind::L4 => self.l4(),
            NormKind::H1Seminorm | NormKind::GradL2 => self.grad_l2(),
        }
    }

    /// L2 norm via Parseval: ||f||_2^2 = |Omega| * sum |c_k|^2.
    pub fn l2(&self) -> f64 {
        let sum: f64 = self.coeff.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.volume() * sum).sqrt()
    }

    /// L2 norm of the gradient via Parseval with |k|^2 weights.
    pub fn grad_l2(&self) -> f64 {
        (self.grid.volume() * self.weighted_power(1)).sqrt()
    }

    /// L2 norm of the Laplacian (equals the L2 norm of the full second
    /// gradient for periodic fields).
    pub fn laplacian_l2(&self) -> f64 {
        (self.grid.volume() * self.weighted_power(2)).sqrt()
    }

    /// L2 norm of grad(Laplacian), |k|^6 weights.
    pub fn grad_laplacian_l2(&self) -> f64 {
        (self.grid.volume() * self.weighted_power(3)).sqrt()
    }

    /// Full H1 norm (L2 + gradient).
    pub fn h1(&self) -> f64 {
        let sum: f64 = self.coeff.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.volume() * (sum + self.weighted_power(1))).sqrt()
    }

    /// sum |k|^(2m) |c_k|^2 in a fixed traversal order.
    fn weighted_power(&self, m: u32) -> f64 {
        let [n1, n2, n3] = self.grid.n();
        let mut acc = 0.0;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let base = (i1 * n2 + i2) * n3;
                for i3 in 0..n3 {
                    let ksq = self.grid.k_sq(i1, i2, i3);
                    acc += ksq.powi(m as i32) * self.coeff[base + i3].norm_sqr();
                }
            }
        }
        acc
    }

    /// L2 norm of the horizontal gradient only.
    pub fn grad_h_l2(&self) -> f64 {
        let [n1, n2, n3] = self.grid.n();
        let mut acc = 0.0;
        for i1 in 0..n1 {
            let kx = self.grid.wavenumber(Axis::X, i1);
            for i2 in 0..n2 {
                let ky = self.grid.wavenumber(Axis::Y, i2);
                let khsq = kx * kx + ky * ky;
                let base = (i1 * n2 + i2) * n3;
                for c in &self.coeff[base..base + n3] {
                    acc += khsq * c.norm_sqr();
                }
            }
        }
        (self.grid.volume() * acc).sqrt()
    }

    /// L4 norm by collocation quadrature on the dealiased field.
    pub fn l4(&self) -> f64 {
        let phys = self.dealias().to_physical();
        phys.quadrature_lp(4)
    }

    /// Max |c_k| over modes violating Hermitian symmetry; diagnostic only.
    pub fn hermitian_error(&self) -> f64 {
        let [n1, n2, n3] = self.grid.n();
        let mut worst = 0.0f64;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let j1 = (n1 - i1) % n1;
                    let j2 = (n2 - i2) % n2;
                    let j3 = (n3 - i3) % n3;
                    let a = self.coeff[self.grid.index(i1, i2, i3)];
                    let b = self.coeff[self.grid.index(j1, j2, j3)];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeff {
            *c *= s;
        }
    }

    /// self += s * other. Parities combine: equal tags survive, mixed
    /// tags drop to None.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        assert!(self.grid.same_geometry(&other.grid), "grid mismatch");
        for (a, b) in self.coeff.iter_mut().zip(&other.coeff) {
            *a += s * b;
        }
        if self.parity != other.parity {
            self.parity = Parity::None;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeff.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl PhysicalField {
    /// Wraps collocation values; the buffer must conform to the grid and
    /// contain only finite values.
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::Config(format!(
                "value buffer of length {} does not conform to {}x{}x{} grid",
                values.len(),
                grid.n()[0],
                grid.n()[1],
                grid.n()[2]
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("physical field contains NaN/Inf".into()));
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples a function of (x, y, z) on the collocation points.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let [n1, n2, n3] = grid.n();
        let mut values = Vec::with_capacity(grid.size());
        for i1 in 0..n1 {
            let x = grid.coordinate(Axis::X, i1);
            for i2 in 0..n2 {
                let y = grid.coordinate(Axis::Y, i2);
                for i3 in 0..n3 {
                    let z = grid.coordinate(Axis::Z, i3);
                    values.push(f(x, y, z));
                }
            }
        }
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Forward transform; the result carries no parity tag.
    pub fn to_spectral(&self) -> SpectralField {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.fft3(&mut buf, FftDirection::Forward);
        SpectralField {
            grid: self.grid.clone(),
            coeff: buf,
            parity: Parity::None,
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &PhysicalField) -> PhysicalField {
        assert!(self.grid.same_geometry(&other.grid), "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        PhysicalField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Collocation quadrature of ||f||_p for even p.
    pub fn quadrature_lp(&self, p: u32) -> f64 {
        let cell = self.grid.volume() / self.grid.size() as f64;
        let sum: f64 = self.values.iter().map(|v| v.powi(p as i32)).sum();
        (cell * sum).powf(1.0 / p as f64)
    }

    /// Collocation quadrature of the L2 norm (used as an independent check
    /// against the Parseval route).
    pub fn quadrature_l2(&self) -> f64 {
        let cell = self.grid.volume() / self.grid.size() as f64;
        let sum: f64 = self.values.iter().map(|v| v * v).sum();
        (cell * sum).sqrt()
    }
}
