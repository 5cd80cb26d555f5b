//! Radial geometry of the Horowitz-Myers geon.
//!
//! The Riemannian slice is `g = ds² + φ'(s)² dξ² + φ(s)² Σ dθⁱ²` with
//! `φ(s) = cosh^{2/n}(ns/2)`, `ξ ∈ [0, 4π/n)` and `θⁱ ∈ [0, aᵢ)`. The conformal
//! radial coordinate `q(s) = ∫₀ˢ ds'/φ(s')` has no elementary antiderivative
//! and is tabulated once per dimension by [`RadialProfile`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{GeonError, Result};
use crate::numerics;

/// Spatial dimension of the geon. Only 3 and 4 are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Dimension {
    Three,
    Four,
}

impl Dimension {
    pub fn from_n(n: usize) -> Result<Self> {
        match n {
            3 => Ok(Dimension::Three),
            4 => Ok(Dimension::Four),
            _ => Err(GeonError::InvalidParams(format!(
                "dimension must be 3 or 4, got {n}"
            ))),
        }
    }

    pub fn n(self) -> usize {
        match self {
            Dimension::Three => 3,
            Dimension::Four => 4,
        }
    }

    pub fn nf(self) -> f64 {
        self.n() as f64
    }
}

impl TryFrom<usize> for Dimension {
    type Error = GeonError;
    fn try_from(n: usize) -> Result<Self> {
        Dimension::from_n(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.n()
    }
}

/// Dimension and torus periods `a₃..aₙ` of the geon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeonParams {
    n: Dimension,
    periods: Vec<f64>,
}

impl GeonParams {
    pub fn new(n: usize, periods: Vec<f64>) -> Result<Self> {
        let dim = Dimension::from_n(n)?;
        if periods.len() != n - 2 {
            return Err(GeonError::InvalidParams(format!(
                "n = {n} needs {} torus periods, got {}",
                n - 2,
                periods.len()
            )));
        }
        if let Some(a) = periods.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(GeonError::InvalidParams(format!(
                "torus periods must be positive, got {a}"
            )));
        }
        Ok(Self { n: dim, periods })
    }

    pub fn three(a3: f64) -> Result<Self> {
        Self::new(3, vec![a3])
    }

    pub fn four(a3: f64, a4: f64) -> Result<Self> {
        Self::new(4, vec![a3, a4])
    }

    pub fn dim(&self) -> Dimension {
        self.n
    }

    pub fn n(&self) -> usize {
        self.n.n()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    /// Period of ξ, always `4π/n`; it makes the metric smooth across `s = 0`.
    pub fn xi_period(&self) -> f64 {
        4.0 * PI / self.n.nf()
    }

    /// Coordinate volume of `T^{n-1}` in `(ξ, θ³, …, θⁿ)`.
    pub fn coordinate_volume(&self) -> f64 {
        self.xi_period() * self.periods.iter().product::<f64>()
    }

    /// Total mass `m = −(4π/n) Π aᵢ`.
    pub fn mass(&self) -> f64 {
        -self.coordinate_volume()
    }
}

/// Free-function form of [`GeonParams::mass`].
pub fn mass(params: &GeonParams) -> f64 {
    params.mass()
}

fn check_s(s: f64) -> Result<()> {
    if s < 0.0 || s.is_nan() {
        Err(GeonError::NegativeRadius(s))
    } else {
        Ok(())
    }
}

/// `φ(s) = cosh^{2/n}(ns/2)`.
pub fn phi(s: f64, n: Dimension) -> Result<f64> {
    check_s(s)?;
    Ok(phi_unchecked(s, n))
}

/// `dφ/ds = φ tanh(ns/2)`, which equals `φ(1 − φ^{−n})^{1/2}`.
pub fn dphi_ds(s: f64, n: Dimension) -> Result<f64> {
    check_s(s)?;
    Ok(RadialJet::at(s, n).dphi)
}

#[inline]
pub(crate) fn phi_unchecked(s: f64, n: Dimension) -> f64 {
    let nf = n.nf();
    (0.5 * nf * s).cosh().powf(2.0 / nf)
}

/// `φ` and its first three `s`-derivatives at one radial position, all in
/// closed form. With `c = cosh(ns/2)` we have `φ^{−n} = c^{−2}` and
///
/// ```text
/// φ'   = φ tanh(ns/2)
/// φ''  = φ (1 + (n/2 − 1) φ^{−n})
/// φ''' = φ' (1 + (n/2 − 1)(1 − n) φ^{−n})
/// ```
#[derive(Debug, Clone, Copy)]
pub struct RadialJet {
    pub n: Dimension,
    pub s: f64,
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
    pub d3phi: f64,
    /// `φ^{−n}`.
    pub phi_neg_n: f64,
}

impl RadialJet {
    pub fn at(s: f64, n: Dimension) -> Self {
        let nf = n.nf();
        let x = 0.5 * nf * s;
        let c = x.cosh();
        let phi = c.powf(2.0 / nf);
        let phi_neg_n = 1.0 / (c * c);
        let dphi = phi * x.tanh();
        let d2phi = phi * (1.0 + (0.5 * nf - 1.0) * phi_neg_n);
        let d3phi = dphi * (1.0 + (0.5 * nf - 1.0) * (1.0 - nf) * phi_neg_n);
        Self {
            n,
            s,
            phi,
            dphi,
            d2phi,
            d3phi,
            phi_neg_n,
        }
    }

    /// `Ψ = φ^{−1} dφ/ds = (1 − φ^{−n})^{1/2}`.
    pub fn psi_warp(&self) -> f64 {
        self.dphi / self.phi
    }
}

/// Tabulated conformal radial coordinate `q(s)` on `[0, s_max]`, with its
/// inverse.
///
/// Nodes are uniform with spacing 1/128. Node values come from adaptive
/// Gauss-Kronrod quadrature; between nodes the table uses quintic Hermite
/// interpolation with the exact derivatives `q' = 1/φ`, `q'' = −φ'/φ²`,
/// which keeps the interpolation error near 1e−15 and the interpolant
/// strictly increasing.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    params: GeonParams,
    step: f64,
    q: Vec<f64>,
    dq: Vec<f64>,
    d2q: Vec<f64>,
    quadrature_tol: f64,
}

impl RadialProfile {
    pub const DEFAULT_S_MAX: f64 = 8.0;
    pub const DEFAULT_TOL: f64 = 1e-12;
    const NODES_PER_UNIT: f64 = 128.0;

    pub fn new(params: &GeonParams) -> Self {
        Self::with_range(params, Self::DEFAULT_S_MAX, Self::DEFAULT_TOL)
            .expect("default profile range is valid")
    }

    pub fn with_range(params: &GeonParams, s_max: f64, quadrature_tol: f64) -> Result<Self> {
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(GeonError::InvalidParams(format!(
                "s_max must be positive, got {s_max}"
            )));
        }
        if !(quadrature_tol > 0.0) {
            return Err(GeonError::InvalidParams(
                "quadrature tolerance must be positive".into(),
            ));
        }
        let n = params.dim();
        let intervals = (s_max * Self::NODES_PER_UNIT).ceil() as usize;
        let step = s_max / intervals as f64;
        let per_interval_tol = quadrature_tol / intervals as f64;
        let mut q = Vec::with_capacity(intervals + 1);
        let mut dq = Vec::with_capacity(intervals + 1);
        let mut d2q = Vec::with_capacity(intervals + 1);
        let mut acc = numerics::CompensatedSum::new();
        for k in 0..=intervals {
            let s = k as f64 * step;
            if k > 0 {
                let a = (k - 1) as f64 * step;
                acc.add(numerics::integrate(
                    |x| 1.0 / phi_unchecked(x, n),
                    a,
                    s,
                    per_interval_tol,
                ));
            }
            let jet = RadialJet::at(s, n);
            q.push(acc.value());
            dq.push(1.0 / jet.phi);
            d2q.push(-jet.dphi / (jet.phi * jet.phi));
        }
        Ok(Self {
            params: params.clone(),
            step,
            q,
            dq,
            d2q,
            quadrature_tol,
        })
    }

    pub fn params(&self) -> &GeonParams {
        &self.params
    }

    pub fn dim(&self) -> Dimension {
        self.params.dim()
    }

    pub fn s_max(&self) -> f64 {
        self.step * (self.q.len() - 1) as f64
    }

    pub fn q_max(&self) -> f64 {
        *self.q.last().unwrap()
    }

    pub fn quadrature_tol(&self) -> f64 {
        self.quadrature_tol
    }

    fn hermite(&self, k: usize, s: f64) -> f64 {
        let h = self.step;
        let t = (s - k as f64 * h) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h21 = 0.5 * t3 - t4 + 0.5 * t5;
        h00 * self.q[k]
            + h * h10 * self.dq[k]
            + h * h * h20 * self.d2q[k]
            + h01 * self.q[k + 1]
            + h * h11 * self.dq[k + 1]
            + h * h * h21 * self.d2q[k + 1]
    }

    /// `q(s) = ∫₀ˢ ds'/φ(s')`. Beyond the table the remainder is integrated
    /// directly.
    pub fn q_of_s(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let s_max = self.s_max();
        if s >= s_max {
            let n = self.dim();
            let tail =
                numerics::integrate(|x| 1.0 / phi_unchecked(x, n), s_max, s, self.quadrature_tol);
            return Ok(self.q_max() + tail);
        }
        let k = ((s / self.step) as usize).min(self.q.len() - 2);
        Ok(self.hermite(k, s))
    }

    /// Inverse of [`q_of_s`](Self::q_of_s) on the tabulated range.
    ///
    /// The bracketing table interval is found by bisection over node values;
    /// Newton steps with `dq/ds = 1/φ` then refine inside that bracket,
    /// falling back to bisection whenever a step would leave it.
    pub fn s_of_q(&self, q: f64) -> Result<f64> {
        if q < 0.0 || q.is_nan() {
            return Err(GeonError::NegativeRadius(q));
        }
        if q >= self.q_max() {
            return Err(GeonError::OutOfRange {
                q,
                q_max: self.q_max(),
            });
        }
        if q == 0.0 {
            return Ok(0.0);
        }
        let k = self
            .q
            .partition_point(|&x| x <= q)
            .saturating_sub(1)
            .min(self.q.len() - 2);
        let (mut lo, mut hi) = (k as f64 * self.step, (k + 1) as f64 * self.step);
        let n = self.dim();
        let mut s = lo + (hi - lo) * (q - self.q[k]) / (self.q[k + 1] - self.q[k]);
        for _ in 0..60 {
            let f = self.hermite(k, s) - q;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let mut next = s - f * phi_unchecked(s, n);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-16 * (1.0 + s) {
                s = next;
                break;
            }
            s = next;
        }
        Ok(s)
    }
}
