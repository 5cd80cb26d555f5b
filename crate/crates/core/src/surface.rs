//! Toroidal graphs `s = v(x)` (equivalently `q = u(x)`, `u = q(v)`) and their
//! extrinsic geometry in the flat chart `g'` and its conformal rescalings.
//!
//! For `n = 3` the grid axes are `(ξ, θ³)`. For `n = 4` they are `(θ³, θ⁴)`
//! and the surface is ξ-symmetric; every tensor then carries a decoupled
//! `ξξ` entry alongside the `2 × 2` block.

use std::sync::Arc;

use crate::background::{Dimension, GeonParams, RadialJet, RadialProfile};
use crate::curvature::{ConformalChoice, WarpJet};
use crate::error::{GeonError, Result};
use crate::numerics::compensated_sum;
use crate::spectral::{PeriodicGrid, Spectral2d};

/// A symmetric tensor field on the grid: a `2 × 2` block over the grid axes
/// and, for `n = 4`, the decoupled `ξξ` entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymField {
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
    pub xi: Option<Vec<f64>>,
}

impl SymField {
    fn zeros(len: usize, with_xi: bool) -> Self {
        Self {
            a11: vec![0.0; len],
            a12: vec![0.0; len],
            a22: vec![0.0; len],
            xi: with_xi.then(|| vec![0.0; len]),
        }
    }

    pub fn len(&self) -> usize {
        self.a11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a11.is_empty()
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &SymField) -> f64 {
        let mut m: f64 = 0.0;
        for (a, b) in [
            (&self.a11, &other.a11),
            (&self.a12, &other.a12),
            (&self.a22, &other.a22),
        ] {
            for (x, y) in a.iter().zip(b.iter()) {
                m = m.max((x - y).abs());
            }
        }
        if let (Some(a), Some(b)) = (&self.xi, &other.xi) {
            for (x, y) in a.iter().zip(b.iter()) {
                m = m.max((x - y).abs());
            }
        }
        m
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for f in [&self.a11, &self.a12, &self.a22] {
            m = f.iter().fold(m, |acc, x| acc.max(x.abs()));
        }
        if let Some(x) = &self.xi {
            m = x.iter().fold(m, |acc, v| acc.max(v.abs()));
        }
        m
    }

    /// `Σ_{ab} A^{ab} B_{ab}` node-wise, where `self` is the inverse metric.
    pub fn contract(&self, b: &SymField) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let mut t =
                    self.a11[k] * b.a11[k] + 2.0 * self.a12[k] * b.a12[k] + self.a22[k] * b.a22[k];
                if let (Some(x), Some(y)) = (&self.xi, &b.xi) {
                    t += x[k] * y[k];
                }
                t
            })
            .collect()
    }

    /// Node-wise smallest eigenvalue of `g^{-1} h` with `g` positive definite.
    pub fn min_generalized_eig(h: &SymField, g: &SymField) -> Vec<f64> {
        (0..h.len())
            .map(|k| {
                let (h11, h12, h22) = (h.a11[k], h.a12[k], h.a22[k]);
                let (g11, g12, g22) = (g.a11[k], g.a12[k], g.a22[k]);
                let a = g11 * g22 - g12 * g12;
                let b = -(h11 * g22 + h22 * g11 - 2.0 * h12 * g12);
                let c = h11 * h22 - h12 * h12;
                let disc = (b * b - 4.0 * a * c).max(0.0);
                let mut lam = (-b - disc.sqrt()) / (2.0 * a);
                if let (Some(hx), Some(gx)) = (&h.xi, &g.xi) {
                    lam = lam.min(hx[k] / gx[k]);
                }
                lam
            })
            .collect()
    }
}

/// A graph hypersurface over a periodic grid.
#[derive(Debug, Clone)]
pub struct GraphSurface {
    profile: Arc<RadialProfile>,
    grid: PeriodicGrid,
    v: Vec<f64>,
    u: Vec<f64>,
}

impl GraphSurface {
    pub fn from_v(profile: Arc<RadialProfile>, grid: PeriodicGrid, v: Vec<f64>) -> Result<Self> {
        if v.len() != grid.len() {
            return Err(GeonError::InvalidGrid(format!(
                "field has {} nodes, grid has {}",
                v.len(),
                grid.len()
            )));
        }
        check_grid_matches(profile.params(), &grid)?;
        let u = v
            .iter()
            .map(|&s| profile.q_of_s(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profile,
            grid,
            v,
            u,
        })
    }

    pub fn from_u(profile: Arc<RadialProfile>, grid: PeriodicGrid, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(GeonError::InvalidGrid(format!(
                "field has {} nodes, grid has {}",
                u.len(),
                grid.len()
            )));
        }
        check_grid_matches(profile.params(), &grid)?;
        let v = u
            .iter()
            .map(|&q| profile.s_of_q(q))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profile,
            grid,
            v,
            u,
        })
    }

    /// The level set `s = s0`.
    pub fn coordinate_torus(
        profile: Arc<RadialProfile>,
        grid: PeriodicGrid,
        s0: f64,
    ) -> Result<Self> {
        let n = grid.len();
        Self::from_v(profile, grid, vec![s0; n])
    }

    pub fn params(&self) -> &GeonParams {
        self.profile.params()
    }

    pub fn dim(&self) -> Dimension {
        self.profile.dim()
    }

    pub fn profile(&self) -> &Arc<RadialProfile> {
        &self.profile
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn into_v(self) -> Vec<f64> {
        self.v
    }

    /// `min φ(v)` over the nodes.
    pub fn min_phi(&self) -> f64 {
        let n = self.dim();
        self.v
            .iter()
            .map(|&s| RadialJet::at(s, n).phi)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_phi(&self) -> f64 {
        let n = self.dim();
        self.v
            .iter()
            .map(|&s| RadialJet::at(s, n).phi)
            .fold(0.0, f64::max)
    }

    /// Evaluates the derivative fields of `u` and the radial jets at every
    /// node.
    pub fn geometry(&self, sp: &Spectral2d) -> Result<SurfaceGeometry> {
        if sp.grid() != &self.grid {
            return Err(GeonError::InvalidGrid(
                "spectral plan belongs to a different grid".into(),
            ));
        }
        if let Some(s) = self.v.iter().find(|&&s| !(s > 0.0)) {
            return Err(GeonError::SingularAxis(format!(
                "graph touches the central torus (v = {s})"
            )));
        }
        let n = self.dim();
        let d = sp.derivatives(&self.u);
        let jets: Vec<RadialJet> = self.v.iter().map(|&s| RadialJet::at(s, n)).collect();
        let warp: Vec<WarpJet> = jets.iter().map(WarpJet::closed_form).collect();
        let mut geo = SurfaceGeometry {
            n,
            grid: self.grid.clone(),
            xi_period: self.params().xi_period(),
            jets,
            warp,
            d,
            rho: Vec::new(),
        };
        geo.rho = geo.rho2m1().into_iter().map(|x| (1.0 + x).sqrt()).collect();
        Ok(geo)
    }
}

fn check_grid_matches(params: &GeonParams, grid: &PeriodicGrid) -> Result<()> {
    let expected = PeriodicGrid::for_params(params, grid.sizes[0], grid.sizes[1])?;
    let same_axes = expected.axes == grid.axes
        && expected
            .periods
            .iter()
            .zip(grid.periods.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs());
    let swapped = expected.transposed().axes == grid.axes
        && expected
            .transposed()
            .periods
            .iter()
            .zip(grid.periods.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs());
    if same_axes || swapped {
        Ok(())
    } else {
        Err(GeonError::InvalidGrid(format!(
            "grid axes {:?} with periods {:?} do not match n = {} and periods {:?}",
            grid.axes,
            grid.periods,
            params.n(),
            params.periods()
        )))
    }
}

/// Derivative fields and radial data of one surface, from which every
/// extrinsic quantity is assembled node-wise.
#[derive(Debug, Clone)]
pub struct SurfaceGeometry {
    n: Dimension,
    grid: PeriodicGrid,
    xi_period: f64,
    pub jets: Vec<RadialJet>,
    pub warp: Vec<WarpJet>,
    /// `u` and its partials with respect to the grid axes.
    pub d: crate::spectral::Derivatives,
    pub rho: Vec<f64>,
}

impl SurfaceGeometry {
    pub fn len(&self) -> usize {
        self.jets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jets.is_empty()
    }

    pub fn dim(&self) -> Dimension {
        self.n
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    fn xi_axis(&self) -> Option<usize> {
        match self.n {
            Dimension::Three => Some(
                self.grid
                    .axes
                    .iter()
                    .position(|a| *a == crate::spectral::Axis::Xi)
                    .unwrap(),
            ),
            Dimension::Four => None,
        }
    }

    /// Partials of `u` ordered so that index 0 is ξ when the grid carries ξ.
    /// Returns `(u_ξ, u_θ, u_ξξ, u_ξθ, u_θθ)` for `n = 3`.
    fn n3_partials(&self, k: usize) -> (f64, f64, f64, f64, f64) {
        let d = &self.d;
        if self.xi_axis() == Some(0) {
            (d.d1[k], d.d2[k], d.d11[k], d.d12[k], d.d22[k])
        } else {
            (d.d2[k], d.d1[k], d.d22[k], d.d12[k], d.d11[k])
        }
    }

    /// Reorders a tensor given in (ξ, θ) order into grid-axis order.
    fn to_grid_order(&self, t11: f64, t12: f64, t22: f64) -> (f64, f64, f64) {
        if self.xi_axis() == Some(1) {
            (t22, t12, t11)
        } else {
            (t11, t12, t22)
        }
    }

    /// `ρ² − 1`.
    pub fn rho2m1(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| match self.n {
                Dimension::Three => {
                    let (ux, ut, ..) = self.n3_partials(k);
                    (ux / self.warp[k].psi).powi(2) + ut * ut
                }
                Dimension::Four => self.d.d1[k].powi(2) + self.d.d2[k].powi(2),
            })
            .collect()
    }

    /// `δ^{ij} u_i u_j` over the θ directions.
    pub fn theta_grad_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| match self.n {
                Dimension::Three => self.n3_partials(k).1.powi(2),
                Dimension::Four => self.d.d1[k].powi(2) + self.d.d2[k].powi(2),
            })
            .collect()
    }

    /// Induced metric `γ' = γ̂ + du ⊗ du` with `γ̂ = diag(Ψ², 1, …)`.
    pub fn induced_metric(&self) -> SymField {
        let mut g = SymField::zeros(self.len(), self.n == Dimension::Four);
        for k in 0..self.len() {
            let psi = self.warp[k].psi;
            match self.n {
                Dimension::Three => {
                    let (ux, ut, ..) = self.n3_partials(k);
                    let (a, b, c) = self.to_grid_order(psi * psi + ux * ux, ux * ut, 1.0 + ut * ut);
                    g.a11[k] = a;
                    g.a12[k] = b;
                    g.a22[k] = c;
                }
                Dimension::Four => {
                    let (u1, u2) = (self.d.d1[k], self.d.d2[k]);
                    g.a11[k] = 1.0 + u1 * u1;
                    g.a12[k] = u1 * u2;
                    g.a22[k] = 1.0 + u2 * u2;
                    g.xi.as_mut().unwrap()[k] = psi * psi;
                }
            }
        }
        g
    }

    /// `(γ')^{ab} = γ̂^{ab} − ρ^{−2} γ̂^{ac} γ̂^{bd} u_c u_d`.
    pub fn inverse_metric(&self) -> SymField {
        let mut g = SymField::zeros(self.len(), self.n == Dimension::Four);
        for k in 0..self.len() {
            let psi = self.warp[k].psi;
            let r2 = self.rho[k] * self.rho[k];
            match self.n {
                Dimension::Three => {
                    let (ux, ut, ..) = self.n3_partials(k);
                    let p2 = psi * psi;
                    let (a, b, c) = self.to_grid_order(
                        1.0 / p2 - ux * ux / (r2 * p2 * p2),
                        -ux * ut / (r2 * p2),
                        1.0 - ut * ut / r2,
                    );
                    g.a11[k] = a;
                    g.a12[k] = b;
                    g.a22[k] = c;
                }
                Dimension::Four => {
                    let (u1, u2) = (self.d.d1[k], self.d.d2[k]);
                    g.a11[k] = 1.0 - u1 * u1 / r2;
                    g.a12[k] = -u1 * u2 / r2;
                    g.a22[k] = 1.0 - u2 * u2 / r2;
                    g.xi.as_mut().unwrap()[k] = 1.0 / (psi * psi);
                }
            }
        }
        g
    }

    /// Second fundamental form `h'` of the graph in `g'`, with the normal
    /// pointing towards increasing `q`:
    ///
    /// ```text
    /// h'_ξξ = ρ⁻¹(−u_ξξ + 2Ψ⁻¹Ψ' u_ξ² + ΨΨ')
    /// h'_ij = −ρ⁻¹ u_ij
    /// h'_ξi = ρ⁻¹(−u_ξi + Ψ⁻¹Ψ' u_ξ u_i)
    /// ```
    pub fn second_form_gprime(&self) -> SymField {
        let mut h = SymField::zeros(self.len(), self.n == Dimension::Four);
        for k in 0..self.len() {
            let WarpJet { psi, psi_q, .. } = self.warp[k];
            let r = self.rho[k];
            match self.n {
                Dimension::Three => {
                    let (ux, ut, uxx, uxt, utt) = self.n3_partials(k);
                    let (a, b, c) = self.to_grid_order(
                        (-uxx + 2.0 * psi_q / psi * ux * ux + psi * psi_q) / r,
                        (-uxt + psi_q / psi * ux * ut) / r,
                        -utt / r,
                    );
                    h.a11[k] = a;
                    h.a12[k] = b;
                    h.a22[k] = c;
                }
                Dimension::Four => {
                    h.a11[k] = -self.d.d11[k] / r;
                    h.a12[k] = -self.d.d12[k] / r;
                    h.a22[k] = -self.d.d22[k] / r;
                    h.xi.as_mut().unwrap()[k] = psi * psi_q / r;
                }
            }
        }
        h
    }

    /// `ȟ = e^ψ (h' + ρ⁻¹ ψ_q γ')` for the chosen conformal metric.
    pub fn second_form_direct(&self, choice: ConformalChoice) -> Result<SymField> {
        let hp = self.second_form_gprime();
        if choice == ConformalChoice::GPrime {
            return Ok(hp);
        }
        let g = self.induced_metric();
        let mut out = hp.clone();
        for k in 0..self.len() {
            let (psi, psi_q, _) = choice.psi_jet(&self.jets[k])?;
            let e = psi.exp();
            let c = psi_q / self.rho[k];
            out.a11[k] = e * (hp.a11[k] + c * g.a11[k]);
            out.a12[k] = e * (hp.a12[k] + c * g.a12[k]);
            out.a22[k] = e * (hp.a22[k] + c * g.a22[k]);
            if let (Some(o), Some(h), Some(gx)) = (out.xi.as_mut(), hp.xi.as_ref(), g.xi.as_ref()) {
                o[k] = e * (h[k] + c * gx[k]);
            }
        }
        Ok(out)
    }

    /// Hessian `D'D'u` of `u` on `(Σ, γ')`:
    ///
    /// ```text
    /// D'_ξD'_ξu = ρ⁻²u_ξξ − 2ρ⁻²Ψ⁻¹Ψ' u_ξ² − ρ⁻²ΨΨ' + ΨΨ'
    /// D'_iD'_ju = ρ⁻² u_ij
    /// D'_ξD'_iu = ρ⁻²u_ξi − ρ⁻²Ψ⁻¹Ψ' u_ξ u_i
    /// ```
    pub fn hessian_u(&self) -> SymField {
        let mut h = SymField::zeros(self.len(), self.n == Dimension::Four);
        for k in 0..self.len() {
            let WarpJet { psi, psi_q, .. } = self.warp[k];
            let ir2 = 1.0 / (self.rho[k] * self.rho[k]);
            match self.n {
                Dimension::Three => {
                    let (ux, ut, uxx, uxt, utt) = self.n3_partials(k);
                    let (a, b, c) = self.to_grid_order(
                        ir2 * uxx - 2.0 * ir2 * psi_q / psi * ux * ux - ir2 * psi * psi_q
                            + psi * psi_q,
                        ir2 * uxt - ir2 * psi_q / psi * ux * ut,
                        ir2 * utt,
                    );
                    h.a11[k] = a;
                    h.a12[k] = b;
                    h.a22[k] = c;
                }
                Dimension::Four => {
                    h.a11[k] = ir2 * self.d.d11[k];
                    h.a12[k] = ir2 * self.d.d12[k];
                    h.a22[k] = ir2 * self.d.d22[k];
                    h.xi.as_mut().unwrap()[k] = (1.0 - ir2) * psi * psi_q;
                }
            }
        }
        h
    }

    /// `h' = −ρ D'D'u + ρ Ψ Ψ' D'ξ ⊗ D'ξ`.
    pub fn second_form_from_hessian(&self) -> SymField {
        let hess = self.hessian_u();
        let mut h = hess.clone();
        let xi = self.xi_axis();
        for k in 0..self.len() {
            let r = self.rho[k];
            let c = r * self.xi_coefficient(k);
            h.a11[k] = -r * hess.a11[k] + if xi == Some(0) { c } else { 0.0 };
            h.a12[k] = -r * hess.a12[k];
            h.a22[k] = -r * hess.a22[k] + if xi == Some(1) { c } else { 0.0 };
            if let (Some(o), Some(hx)) = (h.xi.as_mut(), hess.xi.as_ref()) {
                o[k] = -r * hx[k] + c;
            }
        }
        h
    }

    /// `ΨΨ'` at node `k`, the coefficient of `D'ξ ⊗ D'ξ`.
    pub fn xi_coefficient(&self, k: usize) -> f64 {
        self.warp[k].psi * self.warp[k].psi_q
    }

    /// The same coefficient in its specialized form: `(3/2)φ⁻²(1−φ⁻³)^{1/2}`
    /// for `n = 3`, `2φ⁻³(1−φ⁻⁴)^{1/2}` for `n = 4`.
    pub fn xi_coefficient_specialized(&self, k: usize) -> f64 {
        let p = self.jets[k].phi;
        match self.n {
            Dimension::Three => 1.5 * p.powi(-2) * (1.0 - p.powi(-3)).sqrt(),
            Dimension::Four => 2.0 * p.powi(-3) * (1.0 - p.powi(-4)).sqrt(),
        }
    }

    /// `Δ'u` as the `γ'`-trace of [`hessian_u`](Self::hessian_u).
    pub fn laplacian_trace(&self) -> Vec<f64> {
        self.inverse_metric().contract(&self.hessian_u())
    }

    /// `Δ'u = (√γ')⁻¹ ∂_a(√γ' (γ')^{ab} ∂_b u)` with `√γ' = Ψ(u) ρ`, the
    /// fluxes differentiated spectrally.
    pub fn laplacian_divergence(&self, sp: &Spectral2d) -> Vec<f64> {
        let inv = self.inverse_metric();
        let len = self.len();
        let mut f1 = vec![0.0; len];
        let mut f2 = vec![0.0; len];
        let mut vol = vec![0.0; len];
        for k in 0..len {
            vol[k] = self.warp[k].psi * self.rho[k];
            let (u1, u2) = (self.d.d1[k], self.d.d2[k]);
            f1[k] = vol[k] * (inv.a11[k] * u1 + inv.a12[k] * u2);
            f2[k] = vol[k] * (inv.a12[k] * u1 + inv.a22[k] * u2);
        }
        let df1 = sp.partial(&f1, 1, 0);
        let df2 = sp.partial(&f2, 0, 1);
        (0..len).map(|k| (df1[k] + df2[k]) / vol[k]).collect()
    }

    /// Mean curvature in the physical metric `g`:
    ///
    /// ```text
    /// H = −ρφ⁻¹Δ'u + (n/2)ρ⁻¹φ^{1−n}φ'⁻¹ δ^{ij}u_iu_j + (n−1)ρ⁻¹φ⁻¹φ' + (n/2)ρ⁻¹φ^{1−n}φ'⁻¹
    /// ```
    ///
    /// with `Δ'u` supplied by the caller.
    pub fn mean_curvature_g_with(&self, lap: &[f64]) -> Vec<f64> {
        let nf = self.n.nf();
        let grad = self.theta_grad_sq();
        (0..self.len())
            .map(|k| {
                let RadialJet { phi, dphi, .. } = self.jets[k];
                let r = self.rho[k];
                let w = 0.5 * nf * phi.powf(1.0 - nf) / dphi;
                -r * lap[k] / phi + w * grad[k] / r + (nf - 1.0) * dphi / (r * phi) + w / r
            })
            .collect()
    }

    /// [`mean_curvature_g_with`](Self::mean_curvature_g_with) using the
    /// Hessian trace for `Δ'u`.
    pub fn mean_curvature_g(&self) -> Vec<f64> {
        self.mean_curvature_g_with(&self.laplacian_trace())
    }

    /// Mean curvature in `ǧ`: the `ǧ`-trace of [`second_form_direct`](Self::second_form_direct),
    /// `ǧ^{ab} = e^{−2ψ}(γ')^{ab}`.
    pub fn mean_curvature_conformal(&self, choice: ConformalChoice) -> Result<Vec<f64>> {
        let h = self.second_form_direct(choice)?;
        let tr = self.inverse_metric().contract(&h);
        (0..self.len())
            .map(|k| {
                let (psi, ..) = choice.psi_jet(&self.jets[k])?;
                Ok((-2.0 * psi).exp() * tr[k])
            })
            .collect()
    }

    /// Closed-form mean curvature in `ǧ`:
    ///
    /// ```text
    /// Ȟ = e^{−ψ}(−ρΔ'u + ρ⁻¹Ψ⁻¹Ψ' δ^{ij}u_iu_j + (n−1)ρ⁻¹ψ_q + ρ⁻¹Ψ⁻¹Ψ')
    /// ```
    pub fn mean_curvature_conformal_closed(
        &self,
        choice: ConformalChoice,
        lap: &[f64],
    ) -> Result<Vec<f64>> {
        let nf = self.n.nf();
        let grad = self.theta_grad_sq();
        (0..self.len())
            .map(|k| {
                let (psi, psi_q, _) = choice.psi_jet(&self.jets[k])?;
                let WarpJet {
                    psi: w, psi_q: w1, ..
                } = self.warp[k];
                let r = self.rho[k];
                Ok((-psi).exp()
                    * (-r * lap[k] + w1 / w * grad[k] / r + (nf - 1.0) * psi_q / r + w1 / (w * r)))
            })
            .collect()
    }

    /// The conformal induced metric `γ̌ = e^{2ψ}γ'`.
    pub fn conformal_metric(&self, choice: ConformalChoice) -> Result<SymField> {
        let mut g = self.induced_metric();
        for k in 0..self.len() {
            let (psi, ..) = choice.psi_jet(&self.jets[k])?;
            let e2 = (2.0 * psi).exp();
            g.a11[k] *= e2;
            g.a12[k] *= e2;
            g.a22[k] *= e2;
            if let Some(x) = g.xi.as_mut() {
                x[k] *= e2;
            }
        }
        Ok(g)
    }

    /// Node-wise smallest eigenvalue of the Weingarten map `ȟ^a_b`.
    pub fn weingarten_eigs(&self, choice: ConformalChoice) -> Result<Vec<f64>> {
        let h = self.second_form_direct(choice)?;
        let g = self.conformal_metric(choice)?;
        Ok(SymField::min_generalized_eig(&h, &g))
    }

    /// Minimum over the grid of [`weingarten_eigs`](Self::weingarten_eigs).
    pub fn weingarten_min_eig(&self, choice: ConformalChoice) -> Result<f64> {
        Ok(self
            .weingarten_eigs(choice)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }

    /// Integral over `T^{n−1}` of a node field, including the trivial ξ
    /// factor for `n = 4`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let extra = match self.n {
            Dimension::Three => 1.0,
            Dimension::Four => self.xi_period,
        };
        compensated_sum(f.iter().copied()) * self.grid.cell_area() * extra
    }
}

/// Mean curvature in `g` of the coordinate torus `{s}`,
/// `H = φ_ss/φ_s + (n−2) φ_s/φ`, with respect to the normal towards
/// increasing `s`.
pub fn torus_mean_curvature(s: f64, n: Dimension) -> Result<f64> {
    if !(s > 0.0) {
        return Err(GeonError::SingularAxis(format!(
            "coordinate torus at s = {s}"
        )));
    }
    let j = RadialJet::at(s, n);
    Ok(j.d2phi / j.dphi + (n.nf() - 2.0) * j.dphi / j.phi)
}

/// `ρ` field of a surface.
pub fn slope(surface: &GraphSurface, sp: &Spectral2d) -> Result<Vec<f64>> {
    Ok(surface.geometry(sp)?.rho)
}

/// Smallest Weingarten eigenvalue of `ȟ^a_b` over the grid.
pub fn weingarten_min_eig(
    surface: &GraphSurface,
    sp: &Spectral2d,
    choice: ConformalChoice,
) -> Result<f64> {
    surface.geometry(sp)?.weingarten_min_eig(choice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::s_of_phi;
    use std::f64::consts::PI;

    fn setup3(n: usize) -> (Arc<RadialProfile>, PeriodicGrid, Spectral2d) {
        let p = GeonParams::three(1.0).unwrap();
        let prof = Arc::new(RadialProfile::new(&p));
        let g = PeriodicGrid::for_params(&p, n, n).unwrap();
        let sp = Spectral2d::new(&g);
        (prof, g, sp)
    }

    fn setup4(n: usize) -> (Arc<RadialProfile>, PeriodicGrid, Spectral2d) {
        let p = GeonParams::four(1.0, 1.0).unwrap();
        let prof = Arc::new(RadialProfile::new(&p));
        let g = PeriodicGrid::for_params(&p, n, n).unwrap();
        let sp = Spectral2d::new(&g);
        (prof, g, sp)
    }

    fn wavy(g: &PeriodicGrid, s0: f64, amp: f64) -> Vec<f64> {
        let (w1, w2) = (2.0 * PI / g.periods[0], 2.0 * PI / g.periods[1]);
        g.sample(|x, y| {
            s0 + amp
                * ((w1 * x + 0.3).cos()
                    + 0.5 * (w2 * y - 1.1).sin()
                    + 0.3 * (w1 * x + 2.0 * w2 * y).cos())
        })
    }

    #[test]
    fn torus_has_unit_slope_and_closed_form_values() {
        let (prof, g, sp) = setup3(16);
        let s0 = s_of_phi(2.0, Dimension::Three);
        let surf = GraphSurface::coordinate_torus(prof, g, s0).unwrap();
        let geo = surf.geometry(&sp).unwrap();
        assert!(geo.rho.iter().all(|&r| r == 1.0));
        let h = geo.second_form_gprime();
        let expect = geo.xi_coefficient(0);
        assert!(h.a11.iter().all(|&x| (x - expect).abs() < 1e-15));
        assert!(h.a12.iter().chain(h.a22.iter()).all(|&x| x == 0.0));
        let hess = geo.hessian_u();
        assert!(hess.max_abs() < 1e-15);
    }

    #[test]
    fn torus_mean_curvature_value() {
        let (prof, g, sp) = setup3(16);
        let s0 = s_of_phi(2.0, Dimension::Three);
        let geo = GraphSurface::coordinate_torus(prof, g, s0)
            .unwrap()
            .geometry(&sp)
            .unwrap();
        let dphi = 2.0 * (7.0f64 / 8.0).sqrt();
        let closed = 2.0 * dphi / 2.0 + 1.5 * 0.25 / dphi;
        let h = geo.mean_curvature_g();
        assert!((h[0] - closed).abs() < 1e-12);
        assert!((h[0] - 2.071_274_624_8).abs() < 1e-9);
    }

    #[test]
    fn mean_curvature_tends_to_n_minus_one() {
        let (prof, g, sp) = setup4(16);
        let geo = GraphSurface::coordinate_torus(prof, g, 7.5)
            .unwrap()
            .geometry(&sp)
            .unwrap();
        assert!((geo.mean_curvature_g()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn axisymmetric_slope_formula() {
        let (prof, g, sp) = setup4(32);
        let eps = 0.05;
        let q0 = prof.q_of_s(1.0).unwrap();
        let u = g.sample(|x, _| q0 + eps * (2.0 * PI * x).sin());
        let geo = GraphSurface::from_u(prof, g.clone(), u)
            .unwrap()
            .geometry(&sp)
            .unwrap();
        let r2 = geo.rho2m1();
        let exact = g.sample(|x, _| (eps * 2.0 * PI * (2.0 * PI * x).cos()).powi(2));
        for k in 0..g.len() {
            assert!((r2[k] - exact[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_metric_identity() {
        for (prof, g, sp) in [setup3(32), setup4(32)] {
            let v = wavy(&g, 1.0, 0.15);
            let geo = GraphSurface::from_v(prof, g, v)
                .unwrap()
                .geometry(&sp)
                .unwrap();
            let (a, b) = (geo.induced_metric(), geo.inverse_metric());
            for k in 0..geo.len() {
                let m11 = b.a11[k] * a.a11[k] + b.a12[k] * a.a12[k];
                let m12 = b.a11[k] * a.a12[k] + b.a12[k] * a.a22[k];
                let m22 = b.a12[k] * a.a12[k] + b.a22[k] * a.a22[k];
                assert!(
                    (m11 - 1.0).abs() < 1e-12 && m12.abs() < 1e-12 && (m22 - 1.0).abs() < 1e-12
                );
                if let (Some(x), Some(y)) = (&a.xi, &b.xi) {
                    assert!((x[k] * y[k] - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hessian_route_matches_direct_route() {
        for (prof, g, sp) in [setup3(64), setup4(64)] {
            let v = wavy(&g, 1.0, 0.2);
            let geo = GraphSurface::from_v(prof, g, v)
                .unwrap()
                .geometry(&sp)
                .unwrap();
            let a = geo.second_form_gprime();
            let b = geo.second_form_from_hessian();
            assert!(a.max_abs_diff(&b) < 1e-9);
            for k in (0..geo.len()).step_by(97) {
                assert!((geo.xi_coefficient(k) - geo.xi_coefficient_specialized(k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_trace_matches_divergence_form() {
        for (prof, g, sp) in [setup3(64), setup4(64)] {
            let v = wavy(&g, 1.0, 0.1);
            let geo = GraphSurface::from_v(prof, g, v)
                .unwrap()
                .geometry(&sp)
                .unwrap();
            let a = geo.laplacian_trace();
            let b = geo.laplacian_divergence(&sp);
            let err = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "err {err}");
        }
    }

    #[test]
    fn conformal_consistency_and_mean_curvature_routes() {
        for (prof, g, sp) in [setup3(32), setup4(32)] {
            let v = wavy(&g, 1.2, 0.1);
            let geo = GraphSurface::from_v(prof, g, v)
                .unwrap()
                .geometry(&sp)
                .unwrap();
            let lap = geo.laplacian_trace();
            let h_sec2 = geo.mean_curvature_g();
            let h_gen = geo.mean_curvature_conformal(ConformalChoice::G).unwrap();
            let h_closed = geo
                .mean_curvature_conformal_closed(ConformalChoice::G, &lap)
                .unwrap();
            for k in 0..geo.len() {
                assert!((h_sec2[k] - h_gen[k]).abs() < 1e-10);
                assert!((h_sec2[k] - h_closed[k]).abs() < 1e-10);
            }
            for choice in [ConformalChoice::GTilde, ConformalChoice::GBar] {
                let a = geo.mean_curvature_conformal(choice).unwrap();
                let b = geo.mean_curvature_conformal_closed(choice, &lap).unwrap();
                for k in 0..geo.len() {
                    assert!((a[k] - b[k]).abs() < 1e-10 * a[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn torus_is_convex_in_gtilde() {
        let (prof, g, sp) = setup3(16);
        let surf =
            GraphSurface::coordinate_torus(prof, g, s_of_phi(2.0, Dimension::Three)).unwrap();
        assert!(weingarten_min_eig(&surf, &sp, ConformalChoice::GTilde).unwrap() > 0.0);
    }

    #[test]
    fn steep_graph_reports_negative_eigenvalue() {
        let (prof, g, sp) = setup3(32);
        let w = 2.0 * PI;
        let v = g.sample(|_, y| 1.0 + 0.3 * (3.0 * w * y).cos());
        let surf = GraphSurface::from_v(prof, g, v).unwrap();
        assert!(weingarten_min_eig(&surf, &sp, ConformalChoice::GTilde).unwrap() < 0.0);
    }

    #[test]
    fn eigenvalues_invariant_under_axis_swap() {
        let (prof, g, sp) = setup3(32);
        let v = wavy(&g, 1.0, 0.1);
        let a = GraphSurface::from_v(prof.clone(), g.clone(), v.clone()).unwrap();
        let gt = g.transposed();
        let vt = crate::spectral::transpose_field(&g, &v);
        let b = GraphSurface::from_v(prof, gt.clone(), vt).unwrap();
        let ea = a
            .geometry(&sp)
            .unwrap()
            .weingarten_eigs(ConformalChoice::GTilde)
            .unwrap();
        let eb = b
            .geometry(&Spectral2d::new(&gt))
            .unwrap()
            .weingarten_eigs(ConformalChoice::GTilde)
            .unwrap();
        let ebt = crate::spectral::transpose_field(&gt, &eb);
        for k in 0..ea.len() {
            assert!((ea[k] - ebt[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn axis_contact_is_rejected() {
        let (prof, g, sp) = setup3(16);
        let surf = GraphSurface::coordinate_torus(prof, g, 0.0).unwrap();
        assert!(matches!(
            surf.geometry(&sp),
            Err(GeonError::SingularAxis(_))
        ));
    }

    #[test]
    fn u_matches_q_of_v() {
        let (prof, g, _) = setup3(16);
        let v = wavy(&g, 1.0, 0.1);
        let surf = GraphSurface::from_v(prof.clone(), g, v).unwrap();
        for (s, q) in surf.v().iter().zip(surf.u()) {
            assert!((prof.q_of_s(*s).unwrap() - q).abs() < 1e-11);
        }
    }
}
