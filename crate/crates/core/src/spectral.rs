//! Uniform periodic grids on `T²` and trigonometric differentiation on them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::background::{Dimension, GeonParams};
use crate::error::{GeonError, Result};

/// Coordinate carried by a grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "xi")]
    Xi,
    #[serde(rename = "theta3")]
    Theta3,
    #[serde(rename = "theta4")]
    Theta4,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Xi => "xi",
            Axis::Theta3 => "theta3",
            Axis::Theta4 => "theta4",
        })
    }
}

/// An `N₁ × N₂` uniform periodic grid. Fields are stored row-major, so node
/// `(i, j)` sits at index `i * N₂ + j` with coordinates `(i h₁, j h₂)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub axes: [Axis; 2],
    pub sizes: [usize; 2],
    pub periods: [f64; 2],
}

impl PeriodicGrid {
    pub fn new(axes: [Axis; 2], sizes: [usize; 2], periods: [f64; 2]) -> Result<Self> {
        for (k, &n) in sizes.iter().enumerate() {
            if n < 16 || n % 2 != 0 {
                return Err(GeonError::InvalidGrid(format!(
                    "axis {} has {n} points; need an even count of at least 16",
                    axes[k]
                )));
            }
        }
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(GeonError::InvalidGrid(format!(
                "periods must be positive, got {periods:?}"
            )));
        }
        if axes[0] == axes[1] {
            return Err(GeonError::InvalidGrid("axes must differ".into()));
        }
        Ok(Self {
            axes,
            sizes,
            periods,
        })
    }

    /// `(ξ, θ³)` for `n = 3`, `(θ³, θ⁴)` for the ξ-symmetric `n = 4` case.
    pub fn for_params(params: &GeonParams, n1: usize, n2: usize) -> Result<Self> {
        let a = params.periods();
        match params.dim() {
            Dimension::Three => Self::new(
                [Axis::Xi, Axis::Theta3],
                [n1, n2],
                [params.xi_period(), a[0]],
            ),
            Dimension::Four => Self::new([Axis::Theta3, Axis::Theta4], [n1, n2], [a[0], a[1]]),
        }
    }

    pub fn len(&self) -> usize {
        self.sizes[0] * self.sizes[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 2] {
        [
            self.periods[0] / self.sizes[0] as f64,
            self.periods[1] / self.sizes[1] as f64,
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        let h = self.spacing();
        h[0].min(h[1])
    }

    /// Area element of one node, so that `Σ f · cell_area()` is the
    /// trapezoid (spectrally exact) integral over the torus.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1]
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        (
            (idx / self.sizes[1]) as f64 * h[0],
            (idx % self.sizes[1]) as f64 * h[1],
        )
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let (x, y) = self.coords(idx);
                f(x, y)
            })
            .collect()
    }

    /// The same grid with both sizes multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(
            self.axes,
            [self.sizes[0] * factor, self.sizes[1] * factor],
            self.periods,
        )
    }

    /// The grid with its two axes exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            axes: [self.axes[1], self.axes[0]],
            sizes: [self.sizes[1], self.sizes[0]],
            periods: [self.periods[1], self.periods[0]],
        }
    }
}

/// Transposes a row-major field to match [`PeriodicGrid::transposed`].
pub fn transpose_field(grid: &PeriodicGrid, f: &[f64]) -> Vec<f64> {
    let [n1, n2] = grid.sizes;
    let mut out = vec![0.0; f.len()];
    for i in 0..n1 {
        for j in 0..n2 {
            out[j * n1 + i] = f[i * n2 + j];
        }
    }
    out
}

/// How spatial derivatives are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    #[default]
    Spectral,
    /// Fourth-order centered differences, kept as a cross-check.
    FiniteDifference4,
}

/// A field with its first and second partial derivatives.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub f: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d11: Vec<f64>,
    pub d12: Vec<f64>,
    pub d22: Vec<f64>,
}

/// Exponential filter `σ(η) = exp(−α η^p)` with `η = |k| / k_max` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFilter {
    pub alpha: f64,
    pub order: u32,
}

impl Default for ExpFilter {
    fn default() -> Self {
        Self {
            alpha: 36.0,
            order: 36,
        }
    }
}

impl ExpFilter {
    fn factor(&self, k: i64, n: usize) -> f64 {
        let eta = k.unsigned_abs() as f64 / (n / 2) as f64;
        (-self.alpha * eta.powi(self.order as i32)).exp()
    }
}

/// FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral2d {
    grid: PeriodicGrid,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
    kint: [Vec<i64>; 2],
    mode: DerivativeMode,
}

impl fmt::Debug for Spectral2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral2d")
            .field("grid", &self.grid)
            .field("mode", &self.mode)
            .finish()
    }
}

fn signed_modes(n: usize) -> Vec<i64> {
    (0..n)
        .map(|j| {
            if j <= n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            }
        })
        .collect()
}

impl Spectral2d {
    pub fn new(grid: &PeriodicGrid) -> Self {
        Self::with_mode(grid, DerivativeMode::Spectral)
    }

    pub fn with_mode(grid: &PeriodicGrid, mode: DerivativeMode) -> Self {
        let mut planner = FftPlanner::new();
        let [n1, n2] = grid.sizes;
        Self {
            grid: grid.clone(),
            fwd: [planner.plan_fft_forward(n1), planner.plan_fft_forward(n2)],
            inv: [planner.plan_fft_inverse(n1), planner.plan_fft_inverse(n2)],
            kint: [signed_modes(n1), signed_modes(n2)],
            mode,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    fn transform(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 2]) {
        let [n1, n2] = self.grid.sizes;
        plans[1].process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                t[j * n1 + i] = buf[i * n2 + j];
            }
        }
        plans[0].process(&mut t);
        for j in 0..n2 {
            for i in 0..n1 {
                buf[i * n2 + j] = t[j * n1 + i];
            }
        }
    }

    /// Unnormalized 2D DFT of a real field.
    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        buf
    }

    /// Inverse of [`forward`](Self::forward), keeping the real part.
    pub fn inverse(&self, mut c: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut c, &self.inv);
        let scale = 1.0 / self.grid.len() as f64;
        c.into_iter().map(|z| z.re * scale).collect()
    }

    /// Angular wavenumber of mode index `j` on axis `a`, with the Nyquist
    /// mode zeroed when `odd` is set.
    fn wavenumber(&self, a: usize, j: usize, odd: bool) -> f64 {
        let n = self.grid.sizes[a];
        if odd && j == n / 2 {
            0.0
        } else {
            2.0 * PI * self.kint[a][j] as f64 / self.grid.periods[a]
        }
    }

    fn apply_symbol<F: Fn(f64, f64, f64, f64) -> Complex64>(
        &self,
        hat: &[Complex64],
        symbol: F,
    ) -> Vec<f64> {
        let [n1, n2] = self.grid.sizes;
        let mut out = hat.to_vec();
        for i in 0..n1 {
            let (k1o, k1e) = (self.wavenumber(0, i, true), self.wavenumber(0, i, false));
            for j in 0..n2 {
                let (k2o, k2e) = (self.wavenumber(1, j, true), self.wavenumber(1, j, false));
                out[i * n2 + j] *= symbol(k1o, k1e, k2o, k2e);
            }
        }
        self.inverse(out)
    }

    /// Partial derivative of order `(p, q)` with `p + q ≤ 2`.
    pub fn partial(&self, f: &[f64], p: u32, q: u32) -> Vec<f64> {
        match self.mode {
            DerivativeMode::Spectral => {
                let hat = self.forward(f);
                self.spectral_partial(&hat, p, q)
            }
            DerivativeMode::FiniteDifference4 => self.fd_partial(f, p, q),
        }
    }

    fn spectral_partial(&self, hat: &[Complex64], p: u32, q: u32) -> Vec<f64> {
        let i = Complex64::new(0.0, 1.0);
        self.apply_symbol(hat, |k1o, k1e, k2o, k2e| {
            let a = match p {
                0 => Complex64::new(1.0, 0.0),
                1 => i * k1o,
                _ => Complex64::new(-k1e * k1e, 0.0),
            };
            let b = match q {
                0 => Complex64::new(1.0, 0.0),
                1 => i * k2o,
                _ => Complex64::new(-k2e * k2e, 0.0),
            };
            a * b
        })
    }

    pub fn derivatives(&self, f: &[f64]) -> Derivatives {
        match self.mode {
            DerivativeMode::Spectral => {
                let hat = self.forward(f);
                Derivatives {
                    f: f.to_vec(),
                    d1: self.spectral_partial(&hat, 1, 0),
                    d2: self.spectral_partial(&hat, 0, 1),
                    d11: self.spectral_partial(&hat, 2, 0),
                    d12: self.spectral_partial(&hat, 1, 1),
                    d22: self.spectral_partial(&hat, 0, 2),
                }
            }
            DerivativeMode::FiniteDifference4 => Derivatives {
                f: f.to_vec(),
                d1: self.fd_partial(f, 1, 0),
                d2: self.fd_partial(f, 0, 1),
                d11: self.fd_partial(f, 2, 0),
                d12: self.fd_partial(f, 1, 1),
                d22: self.fd_partial(f, 0, 2),
            },
        }
    }

    /// First derivatives only.
    pub fn gradient(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.mode {
            DerivativeMode::Spectral => {
                // Both derivatives are real, so one complex inverse carries
                // ∂₁f in the real part and ∂₂f in the imaginary part.
                let [n1, n2] = self.grid.sizes;
                let mut hat = self.forward(f);
                for i in 0..n1 {
                    let k1 = self.wavenumber(0, i, true);
                    for j in 0..n2 {
                        let k2 = self.wavenumber(1, j, true);
                        hat[i * n2 + j] *= Complex64::new(-k2, k1);
                    }
                }
                self.transform(&mut hat, &self.inv);
                let scale = 1.0 / self.grid.len() as f64;
                hat.into_iter()
                    .map(|z| (z.re * scale, z.im * scale))
                    .unzip()
            }
            DerivativeMode::FiniteDifference4 => {
                (self.fd_partial(f, 1, 0), self.fd_partial(f, 0, 1))
            }
        }
    }

    fn fd_axis(&self, f: &[f64], axis: usize, order: u32) -> Vec<f64> {
        let [n1, n2] = self.grid.sizes;
        let h = self.grid.spacing()[axis];
        let at = |i: usize, j: usize, d: isize| -> f64 {
            if axis == 0 {
                f[((i as isize + d).rem_euclid(n1 as isize) as usize) * n2 + j]
            } else {
                f[i * n2 + (j as isize + d).rem_euclid(n2 as isize) as usize]
            }
        };
        let mut out = vec![0.0; f.len()];
        for i in 0..n1 {
            for j in 0..n2 {
                out[i * n2 + j] = match order {
                    1 => {
                        (at(i, j, -2) - 8.0 * at(i, j, -1) + 8.0 * at(i, j, 1) - at(i, j, 2))
                            / (12.0 * h)
                    }
                    _ => {
                        (-at(i, j, -2) + 16.0 * at(i, j, -1) - 30.0 * at(i, j, 0)
                            + 16.0 * at(i, j, 1)
                            - at(i, j, 2))
                            / (12.0 * h * h)
                    }
                };
            }
        }
        out
    }

    fn fd_partial(&self, f: &[f64], p: u32, q: u32) -> Vec<f64> {
        let after_p = if p > 0 {
            self.fd_axis(f, 0, p)
        } else {
            f.to_vec()
        };
        if q > 0 {
            self.fd_axis(&after_p, 1, q)
        } else {
            after_p
        }
    }

    /// Exponential low-pass filter. A no-op for the finite-difference mode.
    pub fn filter(&self, f: &[f64], filter: &ExpFilter) -> Vec<f64> {
        if self.mode == DerivativeMode::FiniteDifference4 {
            return f.to_vec();
        }
        let [n1, n2] = self.grid.sizes;
        let s1: Vec<f64> = self.kint[0].iter().map(|&k| filter.factor(k, n1)).collect();
        let s2: Vec<f64> = self.kint[1].iter().map(|&k| filter.factor(k, n2)).collect();
        let mut hat = self.forward(f);
        for i in 0..n1 {
            for j in 0..n2 {
                hat[i * n2 + j] *= s1[i] * s2[j];
            }
        }
        self.inverse(hat)
    }

    /// Evaluates the trigonometric interpolant of `f` at arbitrary points.
    pub fn interpolant(&self, f: &[f64]) -> TrigInterpolant {
        TrigInterpolant {
            grid: self.grid.clone(),
            hat: self.forward(f),
            kint: self.kint.clone(),
        }
    }

    /// Maximum of the trigonometric interpolant of `f`, found by Newton
    /// iteration started from the largest grid value. Never below the grid
    /// maximum.
    pub fn refined_max(&self, f: &[f64]) -> f64 {
        let (imax, &grid_max) = f
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty field");
        if self.mode == DerivativeMode::FiniteDifference4 {
            return grid_max;
        }
        let interp = self.interpolant(f);
        let h = self.grid.spacing();
        let (x0, y0) = self.grid.coords(imax);
        let (mut x, mut y) = (x0, y0);
        for _ in 0..20 {
            let j = interp.jet(x, y);
            let det = j.fxx * j.fyy - j.fxy * j.fxy;
            if !(j.fxx < 0.0 && det > 0.0) {
                break;
            }
            let dx = -(j.fyy * j.fx - j.fxy * j.fy) / det;
            let dy = -(-j.fxy * j.fx + j.fxx * j.fy) / det;
            x += dx;
            y += dy;
            if (x - x0).abs() > h[0] || (y - y0).abs() > h[1] {
                return grid_max;
            }
            if dx.abs() < 1e-14 * h[0] && dy.abs() < 1e-14 * h[1] {
                break;
            }
        }
        interp.jet(x, y).f.max(grid_max)
    }

    /// Minimum of the trigonometric interpolant; see [`refined_max`](Self::refined_max).
    pub fn refined_min(&self, f: &[f64]) -> f64 {
        let neg: Vec<f64> = f.iter().map(|x| -x).collect();
        -self.refined_max(&neg)
    }
}

/// Value, gradient and Hessian of an interpolant at one point.
#[derive(Debug, Clone, Copy)]
pub struct PointJet {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
}

/// Trigonometric interpolant of a sampled periodic field.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    grid: PeriodicGrid,
    hat: Vec<Complex64>,
    kint: [Vec<i64>; 2],
}

impl TrigInterpolant {
    pub fn jet(&self, x: f64, y: f64) -> PointJet {
        let [n1, n2] = self.grid.sizes;
        let w1 = 2.0 * PI / self.grid.periods[0];
        let w2 = 2.0 * PI / self.grid.periods[1];
        let e2: Vec<(Complex64, f64)> = (0..n2)
            .map(|j| {
                // Nyquist modes are split evenly between ±k so the
                // interpolant stays real.
                let k = self.kint[1][j] as f64;
                let kk = if j == n2 / 2 { 0.0 } else { k * w2 };
                let z = if j == n2 / 2 {
                    Complex64::new((k * w2 * y).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, kk * y)
                };
                (z, kk)
            })
            .collect();
        let mut acc = [Complex64::new(0.0, 0.0); 6];
        let i_unit = Complex64::new(0.0, 1.0);
        for i in 0..n1 {
            let k = self.kint[0][i] as f64;
            let nyq = i == n1 / 2;
            let k1 = if nyq { 0.0 } else { k * w1 };
            let z1 = if nyq {
                Complex64::new((k * w1 * x).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, k1 * x)
            };
            let mut row = [Complex64::new(0.0, 0.0); 3];
            for (&(z2, k2), &h) in e2.iter().zip(&self.hat[i * n2..(i + 1) * n2]) {
                let c = h * z2;
                row[0] += c;
                row[1] += c * i_unit * k2;
                row[2] += c * (-k2 * k2);
            }
            acc[0] += z1 * row[0];
            acc[1] += z1 * i_unit * k1 * row[0];
            acc[2] += z1 * row[1];
            acc[3] += z1 * (-k1 * k1) * row[0];
            acc[4] += z1 * i_unit * k1 * row[1];
            acc[5] += z1 * row[2];
        }
        let s = 1.0 / self.grid.len() as f64;
        PointJet {
            f: acc[0].re * s,
            fx: acc[1].re * s,
            fy: acc[2].re * s,
            fxx: acc[3].re * s,
            fxy: acc[4].re * s,
            fyy: acc[5].re * s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n1: usize, n2: usize) -> PeriodicGrid {
        PeriodicGrid::new([Axis::Xi, Axis::Theta3], [n1, n2], [4.0 * PI / 3.0, 1.0]).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(PeriodicGrid::new([Axis::Xi, Axis::Theta3], [15, 16], [1.0, 1.0]).is_err());
        assert!(PeriodicGrid::new([Axis::Xi, Axis::Theta3], [8, 16], [1.0, 1.0]).is_err());
        assert!(PeriodicGrid::new([Axis::Xi, Axis::Xi], [16, 16], [1.0, 1.0]).is_err());
        assert!(PeriodicGrid::new([Axis::Xi, Axis::Theta3], [16, 16], [1.0, 0.0]).is_err());
    }

    #[test]
    fn spectral_derivatives_exact_on_trig_polynomial() {
        let g = grid(32, 48);
        let (w1, w2) = (2.0 * PI / g.periods[0], 2.0 * PI / g.periods[1]);
        let f = g.sample(|x, y| {
            (2.0 * w1 * x).sin() * (3.0 * w2 * y).cos() + 0.3 * (w1 * x + w2 * y).cos()
        });
        let sp = Spectral2d::new(&g);
        let d = sp.derivatives(&f);
        let ex1 = g.sample(|x, y| {
            2.0 * w1 * (2.0 * w1 * x).cos() * (3.0 * w2 * y).cos()
                - 0.3 * w1 * (w1 * x + w2 * y).sin()
        });
        let ex12 = g.sample(|x, y| {
            -6.0 * w1 * w2 * (2.0 * w1 * x).cos() * (3.0 * w2 * y).sin()
                - 0.3 * w1 * w2 * (w1 * x + w2 * y).cos()
        });
        let ex22 = g.sample(|x, y| {
            -9.0 * w2 * w2 * (2.0 * w1 * x).sin() * (3.0 * w2 * y).cos()
                - 0.3 * w2 * w2 * (w1 * x + w2 * y).cos()
        });
        assert!(max_abs_diff(&d.d1, &ex1) < 1e-11);
        assert!(max_abs_diff(&d.d12, &ex12) < 1e-9);
        assert!(max_abs_diff(&d.d22, &ex22) < 1e-9);
    }

    #[test]
    fn fd_mode_is_fourth_order() {
        let err = |n: usize| {
            let g = grid(n, n);
            let w2 = 2.0 * PI / g.periods[1];
            let f = g.sample(|_, y| (w2 * y).sin());
            let d = Spectral2d::with_mode(&g, DerivativeMode::FiniteDifference4).partial(&f, 0, 1);
            max_abs_diff(&d, &g.sample(|_, y| w2 * (w2 * y).cos()))
        };
        let ratio = err(32) / err(64);
        assert!((ratio.log2() - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn filter_leaves_low_modes_and_kills_nyquist() {
        let g = grid(32, 32);
        let w1 = 2.0 * PI / g.periods[0];
        let low = g.sample(|x, _| (w1 * x).cos());
        let sp = Spectral2d::new(&g);
        assert!(max_abs_diff(&sp.filter(&low, &ExpFilter::default()), &low) < 1e-14);
        let nyq: Vec<f64> = (0..g.len())
            .map(|k| if (k / 32) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let out = sp.filter(&nyq, &ExpFilter::default());
        assert!(out.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn refined_extrema_find_off_grid_peak() {
        let g = grid(32, 32);
        let (w1, w2) = (2.0 * PI / g.periods[0], 2.0 * PI / g.periods[1]);
        let (x0, y0) = (0.123, 0.377);
        let f = g.sample(|x, y| (w1 * (x - x0)).cos() + 0.5 * (w2 * (y - y0)).cos());
        let sp = Spectral2d::new(&g);
        let grid_max = f.iter().cloned().fold(f64::MIN, f64::max);
        let m = sp.refined_max(&f);
        assert!((m - 1.5).abs() < 1e-13 && m > grid_max);
        assert!((sp.refined_min(&f) + 1.5).abs() < 1e-13);
    }

    #[test]
    fn interpolant_reproduces_nodes() {
        let g = grid(16, 16);
        let f = g.sample(|x, y| (x + 2.0 * y).sin().exp());
        let interp = Spectral2d::new(&g).interpolant(&f);
        for idx in [0, 17, 100, 255] {
            let (x, y) = g.coords(idx);
            assert!((interp.jet(x, y).f - f[idx]).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_round_trip() {
        let g = grid(16, 32);
        let f = g.sample(|x, y| x + 10.0 * y);
        let t = transpose_field(&g, &f);
        assert_eq!(transpose_field(&g.transposed(), &t), f);
    }
}
