//! Periodic Fourier grid on the box (0,L1) x (0,L2) x (-1,1).
//!
//! The z direction has period 2, so the wavenumber attached to integer
//! index (k1,k2,k3) is (2*pi*k1/L1, 2*pi*k2/L2, pi*k3). All derivative
//! operators, norms and the dealias mask are built from exactly these
//! values.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Default dealias fraction (the classical 2/3 rule).
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Coordinate axes of the box; `Z` is the thin direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Geometry, wavenumber tables, dealias mask and FFT plans for one
/// resolution. Grids are immutable and shared through `Arc`.
pub struct Grid {
    n: [usize; 3],
    len: [f64; 3],
    dealias_fraction: f64,
    /// Signed wavenumbers per axis, indexed by storage index.
    k: [Vec<f64>; 3],
    /// Dealias limits per axis: modes with |signed index| > limit are masked.
    limit: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("len", &self.len)
            .field("dealias_fraction", &self.dealias_fraction)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.len == other.len && self.dealias_fraction == other.dealias_fraction
    }
}

/// Signed mode index for storage index `i` on an axis of length `n`:
/// 0..=n/2 map to themselves, the upper half maps to negative indices.
#[inline]
pub fn signed_index(n: usize, i: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    /// Builds a grid with the default 2/3 dealias rule.
    pub fn new(n1: usize, n2: usize, n3: usize, l1: f64, l2: f64) -> Result<Arc<Grid>> {
        Self::with_dealias(n1, n2, n3, l1, l2, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(
        n1: usize,
        n2: usize,
        n3: usize,
        l1: f64,
        l2: f64,
        dealias_fraction: f64,
    ) -> Result<Arc<Grid>> {
        for (name, n) in [("N1", n1), ("N2", n2), ("N3", n3)] {
            if n == 0 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "{name} must be a positive even integer, got {n}"
                )));
            }
        }
        for (name, l) in [("L1", l1), ("L2", l2)] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {l}")));
            }
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }

        let n = [n1, n2, n3];
        let len = [l1, l2, 2.0];
        let mut k: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for a in 0..3 {
            let base = 2.0 * std::f64::consts::PI / len[a];
            k[a] = (0..n[a]).map(|i| base * signed_index(n[a], i) as f64).collect();
        }
        let limit = [0, 1, 2].map(|a| (dealias_fraction * n[a] as f64 / 2.0).floor() as usize);

        let mut planner = FftPlanner::<f64>::new();
        let fwd = n.map(|m| planner.plan_fft(m, FftDirection::Forward));
        let inv = n.map(|m| planner.plan_fft(m, FftDirection::Inverse));

        Ok(Arc::new(Grid {
            n,
            len,
            dealias_fraction,
            k,
            limit,
            fwd,
            inv,
        }))
    }

    #[inline]
    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    #[inline]
    pub fn l1(&self) -> f64 {
        self.len[0]
    }

    #[inline]
    pub fn l2(&self) -> f64 {
        self.len[1]
    }

    /// Box measure |Omega| = L1 * L2 * 2.
    #[inline]
    pub fn volume(&self) -> f64 {
        self.len[0] * self.len[1] * self.len[2]
    }

    /// Collocation spacings (dx, dy, dz).
    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.len[a] / self.n[a] as f64)
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Dealias limit for one axis: floor(fraction * N/2).
    #[inline]
    pub fn dealias_limit(&self, axis: Axis) -> usize {
        self.limit[axis.index()]
    }

    /// Storage index for mode/collocation indices (i1, i2, i3); i3 is fastest
    /// so coefficient storage is k1-major.
    #[inline]
    pub fn index(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.n[1] + i2) * self.n[2] + i3
    }

    /// Signed wavenumber along an axis for a storage index.
    #[inline]
    pub fn wavenumber(&self, axis: Axis, i: usize) -> f64 {
        self.k[axis.index()][i]
    }

    #[inline]
    pub fn wavenumbers(&self, axis: Axis) -> &[f64] {
        &self.k[axis.index()]
    }

    /// |k|^2 for a mode.
    #[inline]
    pub fn k_sq(&self, i1: usize, i2: usize, i3: usize) -> f64 {
        let kx = self.k[0][i1];
        let ky = self.k[1][i2];
        let kz = self.k[2][i3];
        kx * kx + ky * ky + kz * kz
    }

    /// True when the mode survives the dealias mask.
    #[inline]
    pub fn in_mask(&self, i1: usize, i2: usize, i3: usize) -> bool {
        signed_index(self.n[0], i1).unsigned_abs() as usize <= self.limit[0]
            && signed_index(self.n[1], i2).unsigned_abs() as usize <= self.limit[1]
            && signed_index(self.n[2], i3).unsigned_abs() as usize <= self.limit[2]
    }

    /// Collocation coordinate along an axis (x, y in [0, L); z in [-1, 1)).
    #[inline]
    pub fn coordinate(&self, axis: Axis, i: usize) -> f64 {
        let a = axis.index();
        let x = self.len[a] * i as f64 / self.n[a] as f64;
        if a == 2 {
            x - 1.0
        } else {
            x
        }
    }

    /// First eigenvalue of -Laplace on mean-zero periodic functions:
    /// the minimum of |k|^2 over nonzero grid modes.
    pub fn lambda1(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i1 in 0..self.n[0] {
            for i2 in 0..self.n[1] {
                for i3 in 0..self.n[2] {
                    if i1 == 0 && i2 == 0 && i3 == 0 {
                        continue;
                    }
                    let ksq = self.k_sq(i1, i2, i3);
                    if ksq < min {
                        min = ksq;
                    }
                }
            }
        }
        min
    }

    pub fn same_geometry(&self, other: &Grid) -> bool {
        self == other
    }

    /// In-place 3D FFT over the flat (k1-major) buffer. The forward
    /// direction is normalized by 1/(N1*N2*N3) so coefficients match the
    /// Fourier-series convention f(x) = sum c_k exp(i k.x).
    pub(crate) fn fft3(&self, data: &mut [Complex64], direction: FftDirection) {
        assert_eq!(data.len(), self.size(), "buffer does not conform to grid");
        let [n1, n2, n3] = self.n;
        let plans = match direction {
            FftDirection::Forward => &self.fwd,
            FftDirection::Inverse => &self.inv,
        };

        WORKSPACE.with(|ws| {
            let mut ws = ws.borrow_mut();
            let scratch_len = plans
                .iter()
                .map(|p| p.get_inplace_scratch_len())
                .max()
                .unwrap_or(0);
            ws.scratch.resize(scratch_len, Complex64::default());
            ws.tmp.resize(n2 * n3, Complex64::default());
            ws.txp.resize(n1 * n2 * n3, Complex64::default());

            // Axis Z: lines are contiguous, one batched call.
            plans[2].process_with_scratch(data, &mut ws.scratch);

            // Axis Y: per-i1 plane transpose so lines become contiguous.
            for i1 in 0..n1 {
                let plane = &mut data[i1 * n2 * n3..(i1 + 1) * n2 * n3];
                for i2 in 0..n2 {
                    for i3 in 0..n3 {
                        ws.tmp[i3 * n2 + i2] = plane[i2 * n3 + i3];
                    }
                }
                {
                    let ws = &mut *ws;
                    plans[1].process_with_scratch(&mut ws.tmp, &mut ws.scratch);
                }
                for i2 in 0..n2 {
                    for i3 in 0..n3 {
                        plane[i2 * n3 + i3] = ws.tmp[i3 * n2 + i2];
                    }
                }
            }

            // Axis X: transpose the (n1, n2*n3) view.
            let m = n2 * n3;
            for i1 in 0..n1 {
                for j in 0..m {
                    ws.txp[j * n1 + i1] = data[i1 * m + j];
                }
            }
            {
                let ws = &mut *ws;
                plans[0].process_with_scratch(&mut ws.txp, &mut ws.scratch);
            }
            for i1 in 0..n1 {
                for j in 0..m {
                    data[i1 * m + j] = ws.txp[j * n1 + i1];
                }
            }
        });

        if direction == FftDirection::Forward {
            let scale = 1.0 / self.size() as f64;
            for c in data.iter_mut() {
                *c *= scale;
            }
        }
    }
}

/// Reused per-thread FFT workspace; transforms stay pure functions and
/// distinct fields can be processed from multiple threads.
struct Workspace {
    scratch: Vec<Complex64>,
    tmp: Vec<Complex64>,
    txp: Vec<Complex64>,
}

thread_local! {
    static WORKSPACE: std::cell::RefCell<Workspace> = const {
        std::cell::RefCell::new(Workspace {
            scratch: Vec::new(),
            tmp: Vec::new(),
            txp: Vec::new(),
        })
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_zero_resolution() {
        assert!(Grid::new(7, 8, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 0, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 8, -1.0, 1.0).is_err());
        assert!(Grid::with_dealias(8, 8, 8, 1.0, 1.0, 0.0).is_err());
        assert!(Grid::with_dealias(8, 8, 8, 1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn wavenumbers_use_exact_factors() {
        let g = Grid::new(8, 8, 8, 4.0, 2.0).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert_eq!(g.wavenumber(Axis::X, 1), two_pi / 4.0);
        assert_eq!(g.wavenumber(Axis::Y, 1), two_pi / 2.0);
        // z period is fixed at 2, so k3 = pi * index.
        assert_eq!(g.wavenumber(Axis::Z, 1), std::f64::consts::PI);
        assert_eq!(g.wavenumber(Axis::Z, 7), -std::f64::consts::PI);
    }

    #[test]
    fn dealias_limit_follows_floor_rule() {
        // N = 8 with fraction 2/3: floor(2/3 * 4) = 2.
        let g = Grid::new(8, 8, 8, 1.0, 1.0).unwrap();
        assert_eq!(g.dealias_limit(Axis::X), 2);
        assert!(g.in_mask(2, 0, 0));
        assert!(!g.in_mask(3, 0, 0));
        assert!(!g.in_mask(0, 6 - 1, 0) || signed_index(8, 5).abs() > 2); // index 5 -> -3, masked
        assert!(g.in_mask(6, 0, 0)); // index 6 -> -2, kept
    }

    /// Enumerating the lowest modes gives lambda1 directly.
    fn brute_lambda1(l1: f64, l2: f64) -> f64 {
        let mut min = f64::INFINITY;
        for k1 in -3i32..=3 {
            for k2 in -3i32..=3 {
                for k3 in -3i32..=3 {
                    if (k1, k2, k3) == (0, 0, 0) {
                        continue;
                    }
                    let kx = 2.0 * std::f64::consts::PI * k1 as f64 / l1;
                    let ky = 2.0 * std::f64::consts::PI * k2 as f64 / l2;
                    let kz = std::f64::consts::PI * k3 as f64;
                    min = min.min(kx * kx + ky * ky + kz * kz);
                }
            }
        }
        min
    }

    #[test]
    fn lambda1_matches_enumeration() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let g = Grid::new(16, 16, 16, two_pi, two_pi).unwrap();
        assert!((g.lambda1() - 1.0).abs() < 1e-14);
        assert!((g.lambda1() - brute_lambda1(two_pi, two_pi)).abs() < 1e-14);

        let g = Grid::new(16, 16, 16, 1.0, 1.0).unwrap();
        let pi_sq = std::f64::consts::PI * std::f64::consts::PI;
        assert!((g.lambda1() - pi_sq).abs() < 1e-12);
        assert!((g.lambda1() - brute_lambda1(1.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn lambda1_decreases_with_horizontal_period() {
        let mut last = f64::INFINITY;
        for l in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let g = Grid::new(8, 8, 8, l, 1.0).unwrap();
            let lam = g.lambda1();
            assert!(lam <= last);
            last = lam;
        }
    }
}
