//! The quantity `Q(Σ) = n(n−1)∫_Ω φ − ∫_Σ φH`, evaluated
//! three ways.
//!
//! * surface route: `∫_Σ (n−1) g(∇φ, ν) − φH` with `H` the trace of the
//!   second fundamental form,
//! * bulk route: the closed-form bulk integral `(n−1)∫(φⁿ(v) − 1)` minus
//!   `∫φH` with `H` from the Hessian of `u`,
//! * flat route: `nm/2 + ∫ ρ²φ^{n−2}φ' Δ'u − (n/2)|∂_θ u|²` with `Δ'u` in
//!   divergence form.
//!
//! The routes agree analytically and differ only by discretization error.

use serde::{Deserialize, Serialize};

use crate::background::{GeonParams, RadialJet};
use crate::curvature::ConformalChoice;
use crate::error::Result;
use crate::spectral::Spectral2d;
use crate::surface::{GraphSurface, SurfaceGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QReport {
    pub q_surface: f64,
    pub q_bulk: f64,
    pub q_flat: f64,
    /// The upper bound `−nm/2`.
    pub bound: f64,
    /// `nm/2`, the value attained by every coordinate torus.
    pub torus_value: f64,
    /// Largest pairwise difference of the three routes.
    pub spread: f64,
    /// `∫ ρ²φ^{n−2}φ' Δ'u`.
    pub flat_laplacian_term: f64,
    /// `−(n/2)∫|∂_θ u|²`, never positive.
    pub flat_gradient_term: f64,
}

/// `−nm/2`.
pub fn bound(params: &GeonParams) -> f64 {
    -0.5 * params.n() as f64 * params.mass()
}

/// `nm/2`, the value of `Q` on any coordinate torus.
pub fn torus_value(params: &GeonParams) -> f64 {
    0.5 * params.n() as f64 * params.mass()
}

/// `n(n−1)∫_Ω φ dvol_g = (n−1)∫(φⁿ(v) − 1)` over the region between the
/// central torus and the graph.
pub fn bulk_term(surface: &GraphSurface, geo: &SurfaceGeometry) -> f64 {
    let nf = surface.dim().nf();
    let f: Vec<f64> = geo
        .jets
        .iter()
        .map(|j| (nf - 1.0) * (j.phi.powf(nf) - 1.0))
        .collect();
    geo.integrate(&f)
}

/// `φ ρ φ^{n−2} φ' H`, the integrand of `∫_Σ φH dvol_γ` in coordinates.
fn phi_h_density(geo: &SurfaceGeometry, h: &[f64]) -> Vec<f64> {
    let nf = geo.dim().nf();
    (0..geo.len())
        .map(|k| {
            let RadialJet { phi, dphi, .. } = geo.jets[k];
            phi * h[k] * geo.rho[k] * phi.powf(nf - 2.0) * dphi
        })
        .collect()
}

pub fn q_surface_from(geo: &SurfaceGeometry) -> Result<f64> {
    let nf = geo.dim().nf();
    let h = geo.mean_curvature_conformal(ConformalChoice::G)?;
    let phi_h = phi_h_density(geo, &h);
    let f: Vec<f64> = (0..geo.len())
        .map(|k| {
            let RadialJet { phi, dphi, .. } = geo.jets[k];
            let r = geo.rho[k];
            let normal_deriv = dphi / r;
            (nf - 1.0) * normal_deriv * r * phi.powf(nf - 2.0) * dphi - phi_h[k]
        })
        .collect();
    Ok(geo.integrate(&f))
}

pub fn q_bulk_from(surface: &GraphSurface, geo: &SurfaceGeometry) -> f64 {
    let phi_h = phi_h_density(geo, &geo.mean_curvature_g());
    bulk_term(surface, geo) - geo.integrate(&phi_h)
}

/// `(flat_laplacian_term, flat_gradient_term)`.
pub fn flat_terms(geo: &SurfaceGeometry, sp: &Spectral2d) -> (f64, f64) {
    let nf = geo.dim().nf();
    let lap = geo.laplacian_divergence(sp);
    let grad = geo.theta_grad_sq();
    let a: Vec<f64> = (0..geo.len())
        .map(|k| {
            let RadialJet { phi, dphi, .. } = geo.jets[k];
            geo.rho[k] * geo.rho[k] * phi.powf(nf - 2.0) * dphi * lap[k]
        })
        .collect();
    let b: Vec<f64> = grad.iter().map(|g| -0.5 * nf * g).collect();
    (geo.integrate(&a), geo.integrate(&b))
}

pub fn q_surface(surface: &GraphSurface, sp: &Spectral2d) -> Result<f64> {
    q_surface_from(&surface.geometry(sp)?)
}

pub fn q_bulk(surface: &GraphSurface, sp: &Spectral2d) -> Result<f64> {
    Ok(q_bulk_from(surface, &surface.geometry(sp)?))
}

pub fn q_flat(surface: &GraphSurface, sp: &Spectral2d) -> Result<f64> {
    let (a, b) = flat_terms(&surface.geometry(sp)?, sp);
    Ok(torus_value(surface.params()) + a + b)
}

/// All three routes from a single derivative pass.
pub fn q_report(surface: &GraphSurface, sp: &Spectral2d) -> Result<QReport> {
    let geo = surface.geometry(sp)?;
    q_report_from(surface, &geo, sp)
}

pub fn q_report_from(
    surface: &GraphSurface,
    geo: &SurfaceGeometry,
    sp: &Spectral2d,
) -> Result<QReport> {
    let qs = q_surface_from(geo)?;
    let qb = q_bulk_from(surface, geo);
    let (a, b) = flat_terms(geo, sp);
    let qf = torus_value(surface.params()) + a + b;
    let spread = (qs - qb).abs().max((qs - qf).abs()).max((qb - qf).abs());
    Ok(QReport {
        q_surface: qs,
        q_bulk: qb,
        q_flat: qf,
        bound: bound(surface.params()),
        torus_value: torus_value(surface.params()),
        spread,
        flat_laplacian_term: a,
        flat_gradient_term: b,
    })
}
