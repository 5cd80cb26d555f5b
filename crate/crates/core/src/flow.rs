//! Weighted normal flows `∂F/∂t = p ν` of graphs, in height form
//!
//! ```text
//! n = 3:  ∂v/∂t = ρ / φ(v),            ρ² = 1 + v_ξ²/φ'² + v_θ²/φ²
//! n = 4:  ∂v/∂t = ρ / (φ(v) φ'(v)),    ρ² = 1 + Σ v_i²/φ²
//! ```
//!
//! integrated with classical RK4 in time and trigonometric differentiation in
//! space.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::background::{Dimension, GeonParams, RadialJet, RadialProfile};
use crate::curvature::{gbar_margin_root, ConformalChoice};
use crate::error::{GeonError, Result};
use crate::functional::{q_report_from, q_surface_from, QReport};
use crate::numerics;
use crate::spectral::{Axis, ExpFilter, PeriodicGrid, Spectral2d};
use crate::surface::{GraphSurface, SymField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub t_end: f64,
    /// Fraction of the advective stability limit used per step.
    pub cfl_safety: f64,
    /// Upper bound on the step; it controls the time-discretization error
    /// once slopes have decayed and the advective limit is irrelevant.
    pub dt_max: f64,
    pub filter: Option<ExpFilter>,
    /// Lower bound on `φ(v)`; `None` selects the dimension default.
    pub phi_floor: Option<f64>,
    /// Diagnostics are recorded every this many steps (and at the end).
    pub diag_every: usize,
    pub max_retries: u32,
    /// Records `Q` after every accepted step, not only at diagnostics.
    pub track_q: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 50.0,
            cfl_safety: 0.25,
            dt_max: 0.02,
            filter: Some(ExpFilter::default()),
            phi_floor: None,
            diag_every: 10,
            max_retries: 8,
            track_q: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(GeonError::InvalidParams(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(GeonError::InvalidParams(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.dt_max > 0.0) {
            return Err(GeonError::InvalidParams(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        if self.diag_every == 0 {
            return Err(GeonError::InvalidParams(
                "diag_every must be at least 1".into(),
            ));
        }
        if let Some(f) = self.phi_floor {
            if !(f > 1.0) {
                return Err(GeonError::InvalidParams(format!(
                    "phi_floor must exceed 1, got {f}"
                )));
            }
        }
        Ok(())
    }

    pub fn floor_for(&self, n: Dimension) -> f64 {
        self.phi_floor.unwrap_or_else(|| default_phi_floor(n))
    }
}

/// `1.05` for `n = 3`; `(1 + 2/√3)^{1/4}` for `n = 4`.
pub fn default_phi_floor(n: Dimension) -> f64 {
    match n {
        Dimension::Three => 1.05,
        Dimension::Four => gbar_margin_root().powf(0.25),
    }
}

/// One diagnostics record. The first ten fields form the CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub q_surface: f64,
    pub q_flat: f64,
    pub q_bulk: f64,
    pub max_rho2m1: f64,
    pub min_phi: f64,
    /// `min φ(v) − t` (n = 3) or `min φ²(v) − 2t` (n = 4).
    pub height_dev_lo: f64,
    /// `max φ(v) − t` (n = 3) or `max φ²(v) − 2t` (n = 4).
    pub height_dev_hi: f64,
    pub min_eig_conf: f64,
    pub dt: f64,
    pub step: usize,
    pub q_spread: f64,
    pub flat_laplacian_term: f64,
    pub flat_gradient_term: f64,
    /// Smallest eigenvalue of `D'D'u`, scaled by `t²/log t` (n = 3) or
    /// `t^{3/2}/log t` (n = 4); `None` for `t ≤ e`.
    pub hessian_scaled: Option<f64>,
}

impl DiagnosticsRow {
    pub const CSV_HEADER: &'static str =
        "t,q_surface,q_flat,q_bulk,max_rho2m1,min_phi,height_dev_lo,height_dev_hi,min_eig_conf,dt";

    pub fn csv_fields(&self) -> [f64; 10] {
        [
            self.t,
            self.q_surface,
            self.q_flat,
            self.q_bulk,
            self.max_rho2m1,
            self.min_phi,
            self.height_dev_lo,
            self.height_dev_hi,
            self.min_eig_conf,
            self.dt,
        ]
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowExit {
    Completed,
    /// The surface left the region where the flow is known to exist.
    ValidityExit {
        t: f64,
        reason: String,
    },
    NonFinite {
        t: f64,
        retries: u32,
    },
}

impl FlowExit {
    pub fn is_completed(&self) -> bool {
        matches!(self, FlowExit::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<DiagnosticsRow>,
    pub final_surface: GraphSurface,
    pub final_report: QReport,
    pub exit: FlowExit,
    pub steps: usize,
    /// `(t, Q)` after every step when [`FlowConfig::track_q`] is set.
    pub q_track: Vec<(f64, f64)>,
}

/// Speed of the flow `p`: `φ⁻¹` for `n = 3`, `(φφ')⁻¹` for `n = 4`.
pub fn normal_speed(jet: &RadialJet) -> f64 {
    match jet.n {
        Dimension::Three => 1.0 / jet.phi,
        Dimension::Four => 1.0 / (jet.phi * jet.dphi),
    }
}

/// Integrator state for one grid: FFT plans plus the profile.
#[derive(Debug, Clone)]
pub struct FlowEngine {
    profile: Arc<RadialProfile>,
    grid: PeriodicGrid,
    sp: Spectral2d,
    config: FlowConfig,
    xi_axis: Option<usize>,
}

/// The right-hand side with the advective stability bound
/// `max_x Σ_a |∂(v_t)/∂(v_a)| / h_a`.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub dvdt: Vec<f64>,
    pub advective_rate: f64,
}

impl FlowEngine {
    pub fn new(
        profile: Arc<RadialProfile>,
        grid: PeriodicGrid,
        config: FlowConfig,
    ) -> Result<Self> {
        config.validate()?;
        let xi_axis = match profile.dim() {
            Dimension::Three => grid.axes.iter().position(|a| *a == Axis::Xi),
            Dimension::Four => None,
        };
        if profile.dim() == Dimension::Three && xi_axis.is_none() {
            return Err(GeonError::InvalidGrid(
                "n = 3 grids must carry the ξ axis".into(),
            ));
        }
        let sp = Spectral2d::new(&grid);
        Ok(Self {
            profile,
            grid,
            sp,
            config,
            xi_axis,
        })
    }

    pub fn spectral(&self) -> &Spectral2d {
        &self.sp
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn profile(&self) -> &Arc<RadialProfile> {
        &self.profile
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn dim(&self) -> Dimension {
        self.profile.dim()
    }

    /// `∂v/∂t` for the height field `v`.
    pub fn rhs_v(&self, v: &[f64]) -> Result<Rhs> {
        let n = self.dim();
        if let Some(s) = v.iter().find(|s| !(**s > 0.0)) {
            return Err(GeonError::SingularAxis(format!(
                "height {s} reached the central torus"
            )));
        }
        let (g1, g2) = self.sp.gradient(v);
        let h = self.grid.spacing();
        let mut dvdt = vec![0.0; v.len()];
        let mut rate: f64 = 0.0;
        for k in 0..v.len() {
            let jet = RadialJet::at(v[k], n);
            let p = normal_speed(&jet);
            let (phi, dphi) = (jet.phi, jet.dphi);
            // Per-axis weights w_a with ρ² = 1 + Σ w_a v_a².
            let w = match self.xi_axis {
                Some(0) => [1.0 / (dphi * dphi), 1.0 / (phi * phi)],
                Some(_) => [1.0 / (phi * phi), 1.0 / (dphi * dphi)],
                None => [1.0 / (phi * phi), 1.0 / (phi * phi)],
            };
            let rho = (1.0 + w[0] * g1[k] * g1[k] + w[1] * g2[k] * g2[k]).sqrt();
            dvdt[k] = rho * p;
            let c = (p * w[0] * g1[k] / rho).abs() / h[0] + (p * w[1] * g2[k] / rho).abs() / h[1];
            rate = rate.max(c);
        }
        Ok(Rhs {
            dvdt,
            advective_rate: rate,
        })
    }

    /// Checks the assumptions on a height field before or during a run.
    pub fn check_floor(&self, v: &[f64]) -> std::result::Result<(), String> {
        let floor = self.config.floor_for(self.dim());
        let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
        let phi_min = RadialJet::at(vmin.max(0.0), self.dim()).phi;
        if !(phi_min >= floor) {
            return Err(format!("min φ = {phi_min} fell below the floor {floor}"));
        }
        Ok(())
    }

    /// `∂v/∂t` for a surface, after checking the floor.
    pub fn rhs(&self, surface: &GraphSurface) -> Result<Vec<f64>> {
        self.check_floor(surface.v())
            .map_err(|reason| GeonError::FlowDomain {
                t: f64::NAN,
                reason,
            })?;
        Ok(self.rhs_v(surface.v())?.dvdt)
    }

    /// Step size for the current state.
    pub fn choose_dt(&self, advective_rate: f64) -> f64 {
        if advective_rate > 0.0 {
            self.config
                .dt_max
                .min(self.config.cfl_safety / advective_rate)
        } else {
            self.config.dt_max
        }
    }

    /// One RK4 step of size `dt`, followed by the filter.
    pub fn rk4(&self, v: &[f64], k1: &[f64], dt: f64) -> Result<Vec<f64>> {
        let add = |a: &[f64], b: &[f64], c: f64| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x + c * y)
                .collect::<Vec<f64>>()
        };
        let k2 = self.rhs_v(&add(v, k1, 0.5 * dt))?.dvdt;
        let k3 = self.rhs_v(&add(v, &k2, 0.5 * dt))?.dvdt;
        let k4 = self.rhs_v(&add(v, &k3, dt))?.dvdt;
        let out: Vec<f64> = (0..v.len())
            .map(|i| v[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        Ok(match &self.config.filter {
            Some(f) => self.sp.filter(&out, f),
            None => out,
        })
    }

    /// One step with reject-and-halve on non-finite output. Returns the new
    /// field and the step actually taken.
    pub fn step_v(&self, v: &[f64], dt: f64) -> Result<(Vec<f64>, f64)> {
        self.step_from(v, &self.rhs_v(v)?.dvdt, dt)
    }

    /// [`step_v`](Self::step_v) with the first stage `k1 = ∂v/∂t` supplied.
    pub fn step_from(&self, v: &[f64], k1: &[f64], dt: f64) -> Result<(Vec<f64>, f64)> {
        let mut h = dt;
        for _ in 0..=self.config.max_retries {
            match self.rk4(v, k1, h) {
                Ok(out) if out.iter().all(|x| x.is_finite()) => return Ok((out, h)),
                _ => h *= 0.5,
            }
        }
        Err(GeonError::NonFinite {
            t: f64::NAN,
            retries: self.config.max_retries,
        })
    }

    /// Advances a surface by `dt`.
    pub fn step(&self, surface: &GraphSurface, dt: f64) -> Result<GraphSurface> {
        let (v, _) = self.step_v(surface.v(), dt)?;
        GraphSurface::from_v(self.profile.clone(), self.grid.clone(), v)
    }

    /// Diagnostics of a height field at time `t`.
    pub fn diagnostics(
        &self,
        v: &[f64],
        t: f64,
        dt: f64,
        step: usize,
    ) -> Result<(DiagnosticsRow, QReport, GraphSurface)> {
        let n = self.dim();
        let surf = GraphSurface::from_v(self.profile.clone(), self.grid.clone(), v.to_vec())?;
        let geo = surf.geometry(&self.sp)?;
        let report = q_report_from(&surf, &geo, &self.sp)?;
        let max_rho2m1 = self.sp.refined_max(&geo.rho2m1());
        let vmin = self.sp.refined_min(v).max(0.0);
        let vmax = self.sp.refined_max(v);
        let (jlo, jhi) = (RadialJet::at(vmin, n), RadialJet::at(vmax, n));
        let (lo, hi) = match n {
            Dimension::Three => (jlo.phi - t, jhi.phi - t),
            Dimension::Four => (jlo.phi * jlo.phi - 2.0 * t, jhi.phi * jhi.phi - 2.0 * t),
        };
        let min_eig_conf = geo.weingarten_min_eig(ConformalChoice::flow_metric(n))?;
        let hessian_scaled = if t > std::f64::consts::E {
            let hmin = SymField::min_generalized_eig(&geo.hessian_u(), &geo.induced_metric())
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let scale = match n {
                Dimension::Three => t * t / t.ln(),
                Dimension::Four => t.powf(1.5) / t.ln(),
            };
            Some(hmin * scale)
        } else {
            None
        };
        let row = DiagnosticsRow {
            t,
            q_surface: report.q_surface,
            q_flat: report.q_flat,
            q_bulk: report.q_bulk,
            max_rho2m1,
            min_phi: jlo.phi,
            height_dev_lo: lo,
            height_dev_hi: hi,
            min_eig_conf,
            dt,
            step,
            q_spread: report.spread,
            flat_laplacian_term: report.flat_laplacian_term,
            flat_gradient_term: report.flat_gradient_term,
            hessian_scaled,
        };
        Ok((row, report, surf))
    }

    /// Runs the flow from `initial` to `t_end` or until the surface leaves
    /// the validity region.
    pub fn run(&self, initial: &GraphSurface) -> Result<RunOutcome> {
        self.run_with(initial, |_| {})
    }

    /// [`run`](Self::run) with a callback on every diagnostics row.
    pub fn run_with<F: FnMut(&DiagnosticsRow)>(
        &self,
        initial: &GraphSurface,
        mut on_row: F,
    ) -> Result<RunOutcome> {
        if initial.grid() != &self.grid {
            return Err(GeonError::InvalidGrid(
                "initial surface lives on a different grid".into(),
            ));
        }
        if let Err(reason) = self.check_floor(initial.v()) {
            return Err(GeonError::FlowDomain { t: 0.0, reason });
        }
        let t_end = self.config.t_end;
        let mut v = initial.v().to_vec();
        let mut t = 0.0;
        let mut step = 0usize;
        let mut rows = Vec::new();
        let (row, mut report, mut surf) = self.diagnostics(&v, t, 0.0, 0)?;
        let mut q_track = Vec::new();
        if self.config.track_q {
            q_track.push((t, row.q_surface));
        }
        on_row(&row);
        rows.push(row);
        let mut exit = FlowExit::Completed;
        let mut last_dt = 0.0;
        let mut dirty = false;
        while t < t_end * (1.0 - 1e-14) {
            let rhs = match self.rhs_v(&v) {
                Ok(r) => r,
                Err(e) => {
                    exit = FlowExit::ValidityExit {
                        t,
                        reason: e.to_string(),
                    };
                    break;
                }
            };
            let dt = self.choose_dt(rhs.advective_rate).min(t_end - t);
            let (next, taken) = match self.step_from(&v, &rhs.dvdt, dt) {
                Ok(x) => x,
                Err(GeonError::NonFinite { retries, .. }) => {
                    exit = FlowExit::NonFinite { t, retries };
                    break;
                }
                Err(e) => {
                    exit = FlowExit::ValidityExit {
                        t,
                        reason: e.to_string(),
                    };
                    break;
                }
            };
            v = next;
            t += taken;
            step += 1;
            last_dt = taken;
            dirty = true;
            if let Err(reason) = self.check_floor(&v) {
                exit = FlowExit::ValidityExit { t, reason };
                break;
            }
            if self.config.track_q {
                let s = GraphSurface::from_v(self.profile.clone(), self.grid.clone(), v.clone())?;
                q_track.push((t, q_surface_from(&s.geometry(&self.sp)?)?));
            }
            if step.is_multiple_of(self.config.diag_every) {
                let (row, r, s) = self.diagnostics(&v, t, taken, step)?;
                on_row(&row);
                rows.push(row);
                report = r;
                surf = s;
                dirty = false;
            }
        }
        if dirty {
            match self.diagnostics(&v, t, last_dt, step) {
                Ok((row, r, s)) => {
                    on_row(&row);
                    rows.push(row);
                    report = r;
                    surf = s;
                }
                Err(e) if exit.is_completed() => return Err(e),
                Err(_) => {}
            }
        }
        Ok(RunOutcome {
            rows,
            final_surface: surf,
            final_report: report,
            exit,
            steps: step,
            q_track,
        })
    }
}

/// `Φ(t)` solving `∂Φ/∂t = (1 − Φ^{−3})^{1/2}`, `Φ(0) = a`.
pub fn ode_comparison_phi(t: f64, a: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(GeonError::InvalidParams(format!(
            "comparison needs a > 1, got {a}"
        )));
    }
    if t < 0.0 {
        return Err(GeonError::InvalidParams(format!(
            "comparison needs t ≥ 0, got {t}"
        )));
    }
    Ok(numerics::dopri5(
        |p| (1.0 - p.powi(-3)).max(0.0).sqrt(),
        a,
        t,
        1e-13,
    ))
}

/// Height of a coordinate torus flowing from `s0` for time `t`.
///
/// For `n = 4`, `φ²(v_t) = φ²(s0) + 2t` exactly. For `n = 3`, `φ(v_t)`
/// solves the comparison ODE, and `v` is recovered from `φ`.
pub fn torus_height(n: Dimension, s0: f64, t: f64) -> Result<f64> {
    let jet = RadialJet::at(s0, n);
    match n {
        Dimension::Four => {
            let p2 = jet.phi * jet.phi + 2.0 * t;
            Ok(0.5 * p2.acosh())
        }
        Dimension::Three => {
            if s0 == 0.0 {
                return Err(GeonError::InvalidParams(
                    "torus at s = 0 does not move under the comparison ODE".into(),
                ));
            }
            let phi = ode_comparison_phi(t, jet.phi)?;
            Ok(crate::curvature::s_of_phi(phi, n))
        }
    }
}

/// Least-squares slope of `log y` against `log t` over `t ∈ [t0, t1]`.
pub fn decay_fit(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    const NOISE_FLOOR: f64 = 1e-13;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .collect();
    if pts.len() < 20 {
        return Err(GeonError::FitWindow(format!(
            "only {} samples in [{}, {}]; need at least 20",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, y)) = pts.iter().find(|(_, y)| !(*y > NOISE_FLOOR)) {
        return Err(GeonError::FitWindow(format!(
            "value {y} at t = {t} is below the noise floor {NOISE_FLOOR}; use a shorter window"
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, y)| y.ln()).collect();
    Ok(numerics::ls_slope(&xs, &ys))
}

/// One Fourier mode `A cos(2π(k₁x₁/L₁ + k₂x₂/L₂) + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: [i32; 2],
    pub amplitude: f64,
    pub phase: f64,
}

/// `v₀ = s₀ + Σ A cos(2π k·x / L + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub s0: f64,
    pub modes: Vec<Mode>,
}

/// Ranges for seeded initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomInit {
    pub phi0_range: (f64, f64),
    /// Cap on `Σ |A|`.
    pub max_amplitude: f64,
    pub n_modes: usize,
    pub max_k: i32,
    pub require_convex: bool,
    /// Restricts modes to the first grid axis.
    pub axisymmetric: bool,
    pub max_attempts: usize,
}

impl Default for RandomInit {
    fn default() -> Self {
        Self {
            phi0_range: (1.5, 3.0),
            max_amplitude: 0.1,
            n_modes: 2,
            max_k: 2,
            require_convex: true,
            axisymmetric: false,
            max_attempts: 1000,
        }
    }
}

impl InitialData {
    pub fn torus(s0: f64) -> Self {
        Self {
            s0,
            modes: Vec::new(),
        }
    }

    pub fn sample(&self, grid: &PeriodicGrid) -> Vec<f64> {
        let two_pi = 2.0 * std::f64::consts::PI;
        grid.sample(|x, y| {
            let mut v = self.s0;
            for m in &self.modes {
                let arg = two_pi
                    * (m.k[0] as f64 * x / grid.periods[0] + m.k[1] as f64 * y / grid.periods[1]);
                v += m.amplitude * (arg + m.phase).cos();
            }
            v
        })
    }

    pub fn surface(
        &self,
        profile: Arc<RadialProfile>,
        grid: &PeriodicGrid,
    ) -> Result<GraphSurface> {
        GraphSurface::from_v(profile, grid.clone(), self.sample(grid))
    }

    /// Draws initial data from a ChaCha8 stream seeded with `seed`, rejecting
    /// draws that violate the floor or, when requested, convexity in the
    /// flow metric.
    pub fn random(engine: &FlowEngine, seed: u64, opts: &RandomInit) -> Result<Self> {
        let n = engine.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = opts.phi0_range;
        if !(lo > 1.0 && hi >= lo) {
            return Err(GeonError::InvalidParams(format!(
                "invalid φ₀ range [{lo}, {hi}]"
            )));
        }
        for _ in 0..opts.max_attempts {
            let phi0 = if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            };
            let s0 = crate::curvature::s_of_phi(phi0, n);
            let mut weights: Vec<f64> = (0..opts.n_modes)
                .map(|_| rng.random_range(0.05..1.0))
                .collect();
            let total: f64 = weights.iter().sum();
            let budget = opts.max_amplitude * rng.random_range(0.2..1.0);
            for w in weights.iter_mut() {
                *w *= budget / total;
            }
            let mut modes = Vec::with_capacity(opts.n_modes);
            for w in weights {
                let k = loop {
                    let k = if opts.axisymmetric {
                        [rng.random_range(1..=opts.max_k.max(1)), 0]
                    } else {
                        [
                            rng.random_range(-opts.max_k..=opts.max_k),
                            rng.random_range(0..=opts.max_k),
                        ]
                    };
                    if k != [0, 0] && !(k[1] == 0 && k[0] < 0) {
                        break k;
                    }
                };
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                modes.push(Mode {
                    k,
                    amplitude: w,
                    phase,
                });
            }
            let data = InitialData { s0, modes };
            if data.admissible(engine, opts.require_convex)? {
                return Ok(data);
            }
        }
        Err(GeonError::InvalidParams(format!(
            "no admissible initial data after {} attempts",
            opts.max_attempts
        )))
    }

    /// Whether the sampled surface satisfies the floor and, optionally,
    /// nonnegativity of the flow-metric Weingarten map.
    pub fn admissible(&self, engine: &FlowEngine, require_convex: bool) -> Result<bool> {
        let v = self.sample(engine.grid());
        if engine.check_floor(&v).is_err() {
            return Ok(false);
        }
        if !require_convex {
            return Ok(true);
        }
        let surf = GraphSurface::from_v(engine.profile().clone(), engine.grid().clone(), v)?;
        let geo = surf.geometry(engine.spectral())?;
        Ok(geo.weingarten_min_eig(ConformalChoice::flow_metric(engine.dim()))? >= 0.0)
    }
}

/// Convenience constructor used by the CLI and the demo.
pub fn engine_for(
    params: &GeonParams,
    sizes: [usize; 2],
    config: FlowConfig,
) -> Result<FlowEngine> {
    let profile = Arc::new(RadialProfile::new(params));
    let grid = PeriodicGrid::for_params(params, sizes[0], sizes[1])?;
    FlowEngine::new(profile, grid, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::s_of_phi;

    fn engine(n: Dimension, size: usize, cfg: FlowConfig) -> FlowEngine {
        let params = match n {
            Dimension::Three => GeonParams::three(1.0).unwrap(),
            Dimension::Four => GeonParams::four(1.0, 1.0).unwrap(),
        };
        engine_for(&params, [size, size], cfg).unwrap()
    }

    #[test]
    fn torus_rhs_values() {
        let e3 = engine(Dimension::Three, 16, FlowConfig::default());
        let v = vec![s_of_phi(2.0, Dimension::Three); 256];
        let r = e3.rhs_v(&v).unwrap();
        assert!(r.dvdt.iter().all(|x| (x - 0.5).abs() < 1e-14));
        let e4 = engine(Dimension::Four, 16, FlowConfig::default());
        let v = vec![s_of_phi(2.0, Dimension::Four); 256];
        let expect = 1.0 / (4.0 * (15.0f64 / 16.0).sqrt());
        assert!(e4
            .rhs_v(&v)
            .unwrap()
            .dvdt
            .iter()
            .all(|x| (x - expect).abs() < 1e-13));
    }

    #[test]
    fn rhs_bounded_below_by_inverse_max_phi() {
        let e = engine(Dimension::Three, 32, FlowConfig::default());
        let data = InitialData {
            s0: 1.0,
            modes: vec![Mode {
                k: [1, 1],
                amplitude: 0.1,
                phase: 0.2,
            }],
        };
        let surf = data.surface(e.profile().clone(), e.grid()).unwrap();
        let r = e.rhs(&surf).unwrap();
        let bound = 1.0 / surf.max_phi();
        assert!(r.iter().all(|&x| x >= bound * (1.0 - 1e-14)));
    }

    #[test]
    fn floor_violation_is_a_domain_error() {
        let e = engine(Dimension::Four, 16, FlowConfig::default());
        let surf = InitialData::torus(0.3)
            .surface(e.profile().clone(), e.grid())
            .unwrap();
        assert!(matches!(e.rhs(&surf), Err(GeonError::FlowDomain { .. })));
        assert!(matches!(e.run(&surf), Err(GeonError::FlowDomain { .. })));
    }

    #[test]
    fn torus_step_matches_exact_height() {
        for n in [Dimension::Three, Dimension::Four] {
            let cfg = FlowConfig {
                t_end: 2.0,
                dt_max: 0.01,
                diag_every: 50,
                ..FlowConfig::default()
            };
            let e = engine(n, 16, cfg);
            let s0 = s_of_phi(2.0, n);
            let surf = InitialData::torus(s0)
                .surface(e.profile().clone(), e.grid())
                .unwrap();
            let out = e.run(&surf).unwrap();
            assert!(out.exit.is_completed());
            let exact = torus_height(n, s0, 2.0).unwrap();
            assert!((out.final_surface.v()[0] - exact).abs() < 1e-8);
            let q0 = out.rows[0].q_surface;
            assert!(out.rows.iter().all(|r| (r.q_surface - q0).abs() < 1e-9));
        }
    }

    #[test]
    fn comparison_ode_properties() {
        assert_eq!(ode_comparison_phi(0.0, 2.0).unwrap(), 2.0);
        assert!(ode_comparison_phi(1.0, 1.0).is_err());
        let a = 2.0;
        let (p1, p2) = (
            ode_comparison_phi(1.0, a).unwrap(),
            ode_comparison_phi(1.001, a).unwrap(),
        );
        let slope = (p2 - p1) / 0.001;
        assert!(slope > (1.0 - a.powi(-3)).sqrt() && slope < 1.0);
    }

    #[test]
    fn synthetic_power_law_fit() {
        let series: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = 10.0 + i as f64 * 0.5;
                (t, (t + 1.0).powi(-4))
            })
            .collect();
        let p = decay_fit(&series, (10.0, 100.0)).unwrap();
        // The local log-log slope of (t+1)^{-4} is −4t/(t+1).
        assert!(p > -4.0 && p < -4.0 * 10.0 / 11.0, "{p}");
        let exact: Vec<(f64, f64)> = series.iter().map(|(t, _)| (*t, t.powi(-4))).collect();
        assert!((decay_fit(&exact, (10.0, 100.0)).unwrap() + 4.0).abs() < 1e-10);
        assert!(matches!(
            decay_fit(&series[..10], (10.0, 100.0)),
            Err(GeonError::FitWindow(_))
        ));
        let tiny: Vec<(f64, f64)> = series.iter().map(|(t, _)| (*t, 1e-20)).collect();
        assert!(matches!(
            decay_fit(&tiny, (10.0, 100.0)),
            Err(GeonError::FitWindow(_))
        ));
    }

    #[test]
    fn seeded_initial_data_is_reproducible() {
        let e = engine(Dimension::Three, 32, FlowConfig::default());
        let a = InitialData::random(&e, 7, &RandomInit::default()).unwrap();
        let b = InitialData::random(&e, 7, &RandomInit::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.admissible(&e, true).unwrap());
        let c = InitialData::random(&e, 8, &RandomInit::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn reflection_symmetry_is_preserved() {
        let cfg = FlowConfig {
            t_end: 1.0,
            diag_every: 1000,
            ..FlowConfig::default()
        };
        let e = engine(Dimension::Four, 32, cfg);
        let data = InitialData {
            s0: s_of_phi(2f64.sqrt(), Dimension::Four),
            modes: vec![
                Mode {
                    k: [1, 0],
                    amplitude: 0.03,
                    phase: 0.0,
                },
                Mode {
                    k: [0, 2],
                    amplitude: 0.01,
                    phase: 0.0,
                },
            ],
        };
        let out = e
            .run(&data.surface(e.profile().clone(), e.grid()).unwrap())
            .unwrap();
        let v = out.final_surface.v();
        let [n1, n2] = e.grid().sizes;
        let mut err: f64 = 0.0;
        for i in 0..n1 {
            for j in 0..n2 {
                let ri = (n1 - i) % n1;
                err = err.max((v[i * n2 + j] - v[ri * n2 + j]).abs());
            }
        }
        assert!(err < 1e-10, "asymmetry {err}");
    }
}
