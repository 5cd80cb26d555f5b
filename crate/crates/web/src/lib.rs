//! Browser bindings for the static demo in `www/`.
//!
//! Three operations: run a flow and watch `Q` rise towards the torus value,
//! sample a curvature table along the radial direction, and evaluate a
//! coordinate torus in closed form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

use geonflow::curvature::{riemann_conformal_at_s, s_of_phi, ConformalChoice};
use geonflow::flow::engine_for;
use geonflow::functional::{bound, torus_value};
use geonflow::surface::torus_mean_curvature;
use geonflow::{Dimension, FlowConfig, FlowEngine, GeonParams, InitialData, Mode, RadialJet};

fn to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn params_for(n: usize) -> Result<GeonParams, String> {
    match n {
        3 => GeonParams::three(1.0).map_err(|e| e.to_string()),
        4 => GeonParams::four(1.0, 1.0).map_err(|e| e.to_string()),
        _ => Err("n must be 3 or 4".into()),
    }
}

/// A flow on a square grid, advanced in slices from JavaScript.
#[wasm_bindgen]
pub struct FlowDemo {
    engine: FlowEngine,
    v: Vec<f64>,
    t: f64,
    steps: usize,
}

impl FlowDemo {
    pub fn try_new(
        n: usize,
        size: usize,
        phi0: f64,
        amplitude: f64,
        k: [i32; 2],
    ) -> Result<FlowDemo, String> {
        if !(phi0 > 1.0) {
            return Err("phi0 must exceed 1".into());
        }
        let params = params_for(n)?;
        let cfg = FlowConfig {
            t_end: 1e12,
            ..FlowConfig::default()
        };
        let engine = engine_for(&params, [size, size], cfg).map_err(|e| e.to_string())?;
        let data = InitialData {
            s0: s_of_phi(phi0, params.dim()),
            modes: vec![Mode {
                k,
                amplitude,
                phase: 0.0,
            }],
        };
        let v = data.sample(engine.grid());
        engine.check_floor(&v)?;
        Ok(FlowDemo {
            engine,
            v,
            t: 0.0,
            steps: 0,
        })
    }

    pub fn try_advance(&mut self, duration: f64) -> Result<Vec<f64>, String> {
        let t_stop = self.t + duration.max(0.0);
        while self.t < t_stop * (1.0 - 1e-14) {
            let rhs = self.engine.rhs_v(&self.v).map_err(|e| e.to_string())?;
            let dt = self
                .engine
                .choose_dt(rhs.advective_rate)
                .min(t_stop - self.t);
            let (next, taken) = self
                .engine
                .step_from(&self.v, &rhs.dvdt, dt)
                .map_err(|e| e.to_string())?;
            self.engine.check_floor(&next)?;
            self.v = next;
            self.t += taken;
            self.steps += 1;
        }
        self.try_summary()
    }

    pub fn try_summary(&self) -> Result<Vec<f64>, String> {
        let (row, report, _) = self
            .engine
            .diagnostics(&self.v, self.t, 0.0, self.steps)
            .map_err(|e| e.to_string())?;
        Ok(vec![
            row.t,
            row.q_surface,
            row.q_flat,
            row.max_rho2m1,
            row.min_eig_conf,
            row.height_dev_lo,
            row.height_dev_hi,
            report.bound,
            report.torus_value,
        ])
    }
}

#[wasm_bindgen]
impl FlowDemo {
    /// Torus `{φ = phi0}` perturbed by `amplitude · cos(2π(k1 x/L1 + k2 y/L2))`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        n: usize,
        size: usize,
        phi0: f64,
        amplitude: f64,
        k1: i32,
        k2: i32,
    ) -> Result<FlowDemo, JsValue> {
        Self::try_new(n, size, phi0, amplitude, [k1, k2]).map_err(to_js)
    }

    /// Advances by `duration` and returns
    /// `[t, q_surface, q_flat, max_rho2m1, min_eig_conf, height_dev_lo, height_dev_hi, bound, torus_value]`.
    pub fn advance(&mut self, duration: f64) -> Result<Vec<f64>, JsValue> {
        self.try_advance(duration).map_err(to_js)
    }

    pub fn summary(&self) -> Result<Vec<f64>, JsValue> {
        self.try_summary().map_err(to_js)
    }

    /// `v − mean(v)`, row-major.
    pub fn heights(&self) -> Vec<f64> {
        let mean = self.v.iter().sum::<f64>() / self.v.len() as f64;
        self.v.iter().map(|x| x - mean).collect()
    }

    pub fn size(&self) -> usize {
        self.engine.grid().sizes[0]
    }

    pub fn time(&self) -> f64 {
        self.t
    }
}

fn choice_from(name: &str) -> Result<ConformalChoice, String> {
    ConformalChoice::ALL
        .into_iter()
        .find(|c| c.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| "choice must be one of G_PRIME, G, G_TILDE, G_BAR".into())
}

/// Samples the curvature table at `samples` points of `s ∈ [s_min, s_max]`.
/// Returns rows `[s, φ, R_qξqξ, R_qiqi, R_ξiξi, R_ijij]` flattened; `R_ijij`
/// is NaN for `n = 3`.
#[wasm_bindgen]
pub fn curvature_profile(
    n: usize,
    choice: &str,
    s_min: f64,
    s_max: f64,
    samples: usize,
) -> Result<Vec<f64>, JsValue> {
    curvature_profile_rows(n, choice, s_min, s_max, samples).map_err(to_js)
}

pub fn curvature_profile_rows(
    n: usize,
    choice: &str,
    s_min: f64,
    s_max: f64,
    samples: usize,
) -> Result<Vec<f64>, String> {
    let dim = params_for(n)?.dim();
    let choice = choice_from(choice)?;
    if !(s_min > 0.0 && s_max > s_min) || samples < 2 {
        return Err("need 0 < s_min < s_max and at least two samples".into());
    }
    let mut out = Vec::with_capacity(6 * samples);
    for i in 0..samples {
        let s = s_min + (s_max - s_min) * i as f64 / (samples - 1) as f64;
        let t = riemann_conformal_at_s(s, dim, choice).map_err(|e| e.to_string())?;
        out.extend([
            s,
            RadialJet::at(s, dim).phi,
            t.r_qxqx,
            t.r_qiqi,
            t.r_xixi,
            t.r_ijij.unwrap_or(f64::NAN),
        ]);
    }
    Ok(out)
}

/// `[s, φ, φ_s, H, mass, Q(torus), bound]` for the torus `{φ = phi}` in the
/// geon with unit periods.
#[wasm_bindgen]
pub fn torus_exact(n: usize, phi: f64) -> Result<Vec<f64>, JsValue> {
    torus_exact_values(n, phi).map_err(to_js)
}

pub fn torus_exact_values(n: usize, phi: f64) -> Result<Vec<f64>, String> {
    let params = params_for(n)?;
    if !(phi > 1.0) {
        return Err("phi must exceed 1".into());
    }
    let dim: Dimension = params.dim();
    let s = s_of_phi(phi, dim);
    let jet = RadialJet::at(s, dim);
    let h = torus_mean_curvature(s, dim).map_err(|e| e.to_string())?;
    Ok(vec![
        s,
        jet.phi,
        jet.dphi,
        h,
        params.mass(),
        torus_value(&params),
        bound(&params),
    ])
}
