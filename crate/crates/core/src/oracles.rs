//! Brute-force reference implementations used by the verification suites
//! and the `verify` command. Everything here is written against its own
//! data layout and transform calls, independent of the production solver
//! paths it cross-checks, and is only exercised at verification scales.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::field::PhysicalField;
use crate::grid::{signed_index, Axis, Grid};
use crate::symmetry::HorizontalField;

/// Standalone 3D FFT over a flat i3-fastest buffer, line by line.
struct IsoFft {
    n: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl IsoFft {
    fn new(n: [usize; 3]) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        IsoFft {
            n,
            fwd: n.map(|m| planner.plan_fft(m, FftDirection::Forward)),
            inv: n.map(|m| planner.plan_fft(m, FftDirection::Inverse)),
        }
    }

    fn transform(&self, data: &mut [Complex64], dir: FftDirection) {
        let [n1, n2, n3] = self.n;
        let plans = match dir {
            FftDirection::Forward => &self.fwd,
            FftDirection::Inverse => &self.inv,
        };
        let mut line = vec![Complex64::default(); n1.max(n2).max(n3)];
        // axis 2
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let base = (i1 * n2 + i2) * n3;
                plans[2].process(&mut data[base..base + n3]);
            }
        }
        // axis 1
        for i1 in 0..n1 {
            for i3 in 0..n3 {
                for i2 in 0..n2 {
                    line[i2] = data[(i1 * n2 + i2) * n3 + i3];
                }
                plans[1].process(&mut line[..n2]);
                for i2 in 0..n2 {
                    data[(i1 * n2 + i2) * n3 + i3] = line[i2];
                }
            }
        }
        // axis 0
        for i2 in 0..n2 {
            for i3 in 0..n3 {
                for i1 in 0..n1 {
                    line[i1] = data[(i1 * n2 + i2) * n3 + i3];
                }
                plans[0].process(&mut line[..n1]);
                for i1 in 0..n1 {
                    data[(i1 * n2 + i2) * n3 + i3] = line[i1];
                }
            }
        }
        if dir == FftDirection::Forward {
            let s = 1.0 / (n1 * n2 * n3) as f64;
            for c in data.iter_mut() {
                *c *= s;
            }
        }
    }
}

/// Independent isotropic incompressible Navier-Stokes reference solver:
/// convective-form advection, classical Leray projection
/// P = I - k k^T / |k|^2, 2/3 dealiasing and the same integrating-factor
/// Heun stepping. At eps = 1 the scaled system is this system with
/// u = (v, w).
pub struct IsoNs {
    n: [usize; 3],
    k: [Vec<f64>; 3],
    limit: [usize; 3],
    fft: IsoFft,
    efac: Vec<f64>,
    dt: f64,
    /// Velocity coefficients (ux, uy, uz), i3-fastest layout.
    pub u: [Vec<Complex64>; 3],
}

impl IsoNs {
    pub fn new(n: [usize; 3], l1: f64, l2: f64, dt: f64) -> Self {
        let len = [l1, l2, 2.0];
        let k: [Vec<f64>; 3] = [0, 1, 2].map(|a| {
            (0..n[a])
                .map(|i| 2.0 * std::f64::consts::PI / len[a] * signed_index(n[a], i) as f64)
                .collect()
        });
        let limit = [0, 1, 2].map(|a| (2.0 / 3.0 * n[a] as f64 / 2.0).floor() as usize);
        let size = n[0] * n[1] * n[2];
        let mut efac = Vec::with_capacity(size);
        for i1 in 0..n[0] {
            for i2 in 0..n[1] {
                for i3 in 0..n[2] {
                    let ksq = k[0][i1] * k[0][i1] + k[1][i2] * k[1][i2] + k[2][i3] * k[2][i3];
                    efac.push((-ksq * dt).exp());
                }
            }
        }
        IsoNs {
            n,
            k,
            limit,
            fft: IsoFft::new(n),
            efac,
            dt,
            u: [
                vec![Complex64::default(); size],
                vec![Complex64::default(); size],
                vec![Complex64::default(); size],
            ],
        }
    }

    pub fn size(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Loads a velocity from coefficient slices (same index convention).
    pub fn set_velocity(&mut self, ux: &[Complex64], uy: &[Complex64], uz: &[Complex64]) {
        self.u[0].copy_from_slice(ux);
        self.u[1].copy_from_slice(uy);
        self.u[2].copy_from_slice(uz);
    }

    fn dealias(&self, f: &mut [Complex64]) {
        let [n1, n2, n3] = self.n;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let out = signed_index(n1, i1).unsigned_abs() as usize > self.limit[0]
                        || signed_index(n2, i2).unsigned_abs() as usize > self.limit[1]
                        || signed_index(n3, i3).unsigned_abs() as usize > self.limit[2];
                    if out {
                        f[(i1 * n2 + i2) * n3 + i3] = Complex64::default();
                    }
                }
            }
        }
    }

    fn deriv(&self, f: &[Complex64], axis: usize) -> Vec<Complex64> {
        let [n1, n2, n3] = self.n;
        let mut out = vec![Complex64::default(); f.len()];
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let idx = (i1 * n2 + i2) * n3 + i3;
                    let kk = match axis {
                        0 => self.k[0][i1],
                        1 => self.k[1][i2],
                        _ => self.k[2][i3],
                    };
                    out[idx] = Complex64::new(0.0, kk) * f[idx];
                }
            }
        }
        out
    }

    fn to_phys(&self, f: &[Complex64]) -> Vec<f64> {
        let mut buf = f.to_vec();
        self.fft.transform(&mut buf, FftDirection::Inverse);
        buf.iter().map(|c| c.re).collect()
    }

    fn to_spec(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.transform(&mut buf, FftDirection::Forward);
        buf
    }

    /// Classical Leray projection applied in place.
    pub fn leray(&self, g: &mut [Vec<Complex64>; 3]) {
        let [n1, n2, n3] = self.n;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    let ksq = self.k[0][i1] * self.k[0][i1]
                        + self.k[1][i2] * self.k[1][i2]
                        + self.k[2][i3] * self.k[2][i3];
                    if ksq == 0.0 {
                        continue;
                    }
                    let idx = (i1 * n2 + i2) * n3 + i3;
                    let kv = [self.k[0][i1], self.k[1][i2], self.k[2][i3]];
                    let kdotg = kv[0] * g[0][idx] + kv[1] * g[1][idx] + kv[2] * g[2][idx];
                    for a in 0..3 {
                        g[a][idx] -= kv[a] * kdotg / ksq;
                    }
                }
            }
        }
    }

    /// Projected convective tendency -P[(u.grad) u], dealiased.
    pub fn tendency(&self, u: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
        let phys: Vec<Vec<f64>> = u.iter().map(|c| self.to_phys(c)).collect();
        let mut adv: [Vec<Complex64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for b in 0..3 {
            let mut acc = vec![0.0; self.size()];
            for (a, ua) in phys.iter().enumerate() {
                let dab = self.to_phys(&self.deriv(&u[b], a));
                for (s, (x, d)) in acc.iter_mut().zip(ua.iter().zip(&dab)) {
                    *s += x * d;
                }
            }
            let mut spec = self.to_spec(&acc);
            self.dealias(&mut spec);
            for c in spec.iter_mut() {
                *c = -*c;
            }
            spec[0] = Complex64::default();
            adv[b] = spec;
        }
        self.leray(&mut adv);
        adv
    }

    /// One integrating-factor Heun step.
    pub fn step(&mut self) {
        let k1 = self.tendency(&self.u);
        let mut ustar: [Vec<Complex64>; 3] = self.u.clone();
        for a in 0..3 {
            for i in 0..ustar[a].len() {
                ustar[a][i] = (ustar[a][i] + self.dt * k1[a][i]) * self.efac[i];
            }
        }
        let k2 = self.tendency(&ustar);
        for a in 0..3 {
            for i in 0..self.u[a].len() {
                self.u[a][i] =
                    (self.u[a][i] + 0.5 * self.dt * k1[a][i]) * self.efac[i] + 0.5 * self.dt * k2[a][i];
            }
            self.u[a][0] = Complex64::default();
        }
        let mut u = std::mem::take(&mut self.u);
        self.leray(&mut u);
        self.u = u;
    }

    /// L2 distance to another coefficient triple, Parseval with the box
    /// measure l1 * l2 * 2.
    pub fn l2_distance(
        &self,
        volume: f64,
        vx: &[Complex64],
        vy: &[Complex64],
        vz: &[Complex64],
    ) -> f64 {
        let mut acc = 0.0;
        for (a, b) in [(&self.u[0], vx), (&self.u[1], vy), (&self.u[2], vz)] {
            for i in 0..a.len() {
                acc += (a[i] - b[i]).norm_sqr();
            }
        }
        (volume * acc).sqrt()
    }
}

/// Reference 2D pressure: assembles the vertically averaged tensor
/// RHS by collocation quadrature, transforms with its own 2D FFT and
/// divides mode-wise. Returns k1-major 2D coefficients of length N1*N2.
/// Only modes inside the dealias mask are meaningful for comparison (the
/// production solve works with dealiased products).
pub fn pe_pressure_by_quadrature(v: &HorizontalField) -> Vec<Complex64> {
    let grid = v.grid().clone();
    let [n1, n2, n3] = grid.n();
    let px = v.x.to_physical();
    let py = v.y.to_physical();

    // Vertically averaged products on the horizontal grid.
    let mut axx = vec![0.0; n1 * n2];
    let mut axy = vec![0.0; n1 * n2];
    let mut ayy = vec![0.0; n1 * n2];
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let base = (i1 * n2 + i2) * n3;
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for i3 in 0..n3 {
                let a = px.values()[base + i3];
                let b = py.values()[base + i3];
                sxx += a * a;
                sxy += a * b;
                syy += b * b;
            }
            axx[i1 * n2 + i2] = sxx / n3 as f64;
            axy[i1 * n2 + i2] = sxy / n3 as f64;
            ayy[i1 * n2 + i2] = syy / n3 as f64;
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let f1 = planner.plan_fft(n1, FftDirection::Forward);
    let f2 = planner.plan_fft(n2, FftDirection::Forward);
    let fft2 = |vals: &[f64]| -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        // rows (i2 contiguous)
        for i1 in 0..n1 {
            f2.process(&mut buf[i1 * n2..(i1 + 1) * n2]);
        }
        // columns
        let mut col = vec![Complex64::default(); n1];
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                col[i1] = buf[i1 * n2 + i2];
            }
            f1.process(&mut col);
            for i1 in 0..n1 {
                buf[i1 * n2 + i2] = col[i1];
            }
        }
        let s = 1.0 / (n1 * n2) as f64;
        buf.iter().map(|c| c * s).collect()
    };
    let txx = fft2(&axx);
    let txy = fft2(&axy);
    let tyy = fft2(&ayy);

    let mut p = vec![Complex64::default(); n1 * n2];
    for i1 in 0..n1 {
        let kx = grid.wavenumber(Axis::X, i1);
        for i2 in 0..n2 {
            let ky = grid.wavenumber(Axis::Y, i2);
            let khsq = kx * kx + ky * ky;
            if khsq == 0.0 {
                continue;
            }
            let idx = i1 * n2 + i2;
            let kkt = kx * kx * txx[idx] + 2.0 * kx * ky * txy[idx] + ky * ky * tyy[idx];
            p[idx] = -kkt / khsq;
        }
    }
    p
}

/// The closed-form test pair: v = (A sin(2 pi x / L1) cos(pi z), 0) and
/// its vertical velocity w = -(A 2 pi / (pi L1)) cos(2 pi x / L1) sin(pi z)
/// from the symbolic antiderivative.
pub fn antiderivative_test_pair(grid: &Arc<Grid>, amplitude: f64) -> (HorizontalField, PhysicalField) {
    let l1 = grid.l1();
    let two_pi = 2.0 * std::f64::consts::PI;
    let pi = std::f64::consts::PI;
    let v = HorizontalField {
        x: PhysicalField::from_fn(grid, |x, _, z| amplitude * (two_pi * x / l1).sin() * (pi * z).cos())
            .to_spectral()
            .with_parity(crate::field::Parity::Even),
        y: crate::field::SpectralField::zeros(grid, crate::field::Parity::Even),
    };
    let w_expected = PhysicalField::from_fn(grid, |x, _, z| {
        -amplitude * (two_pi / l1) / pi * (two_pi * x / l1).cos() * (pi * z).sin()
    });
    (v, w_expected)
}
