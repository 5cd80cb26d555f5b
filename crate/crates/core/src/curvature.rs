//! Closed-form curvature of the flat chart `g' = dq² + Ψ(q)² dξ² + Σ dθⁱ²`
//! and of its conformal rescalings `ǧ = e^{2ψ(q)} g'`.
//!
//! All `q`-derivatives go through `d/dq = φ d/ds` with closed-form
//! `s`-derivatives of `φ`. Components are lowered-index in the coordinate
//! frame `(q, ξ, θ³, …, θⁿ)`.

use serde::{Deserialize, Serialize};

use crate::background::{Dimension, RadialJet, RadialProfile};
use crate::error::{GeonError, Result};

/// The conformal representative `ǧ = e^{2ψ} g'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConformalChoice {
    /// `ψ = 0`, the flat chart itself.
    GPrime,
    /// `ψ = log φ`, the physical metric.
    G,
    /// `ψ = 2 log φ`, the metric in which the 3D flow has unit speed.
    GTilde,
    /// `ψ = 2 log φ + log φ'`, the metric in which the 4D flow has unit speed.
    GBar,
}

impl ConformalChoice {
    pub const ALL: [ConformalChoice; 4] = [
        ConformalChoice::GPrime,
        ConformalChoice::G,
        ConformalChoice::GTilde,
        ConformalChoice::GBar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConformalChoice::GPrime => "G_PRIME",
            ConformalChoice::G => "G",
            ConformalChoice::GTilde => "G_TILDE",
            ConformalChoice::GBar => "G_BAR",
        }
    }

    /// The conformal choice whose second fundamental form is monitored by
    /// the flow in dimension `n`.
    pub fn flow_metric(n: Dimension) -> Self {
        match n {
            Dimension::Three => ConformalChoice::GTilde,
            Dimension::Four => ConformalChoice::GBar,
        }
    }

    /// `(ψ, dψ/dq, d²ψ/dq²)` at the jet's radial position.
    pub fn psi_jet(self, jet: &RadialJet) -> Result<(f64, f64, f64)> {
        let RadialJet {
            phi: p,
            dphi: p1,
            d2phi: p2,
            d3phi: p3,
            ..
        } = *jet;
        Ok(match self {
            ConformalChoice::GPrime => (0.0, 0.0, 0.0),
            ConformalChoice::G => (p.ln(), p1, p * p2),
            ConformalChoice::GTilde => (2.0 * p.ln(), 2.0 * p1, 2.0 * p * p2),
            ConformalChoice::GBar => {
                if !(p1 > 0.0) {
                    return Err(GeonError::SingularAxis(format!(
                        "G_BAR needs dφ/ds > 0, got s = {}",
                        jet.s
                    )));
                }
                let psi = 2.0 * p.ln() + p1.ln();
                let psi_q = 2.0 * p1 + p * p2 / p1;
                let psi_qq = p * (2.0 * p2 + (p1 * p2 + p * p3) / p1 - p * p2 * p2 / (p1 * p1));
                (psi, psi_q, psi_qq)
            }
        })
    }
}

/// `Ψ = φ'/φ` and its first two `q`-derivatives.
///
/// [`from_radial`](Self::from_radial) is the plain chain rule on the `φ`-jet;
/// it loses digits to cancellation once `φ^n` is large, so the tables use
/// [`closed_form`](Self::closed_form).
#[derive(Debug, Clone, Copy)]
pub struct WarpJet {
    pub psi: f64,
    pub psi_q: f64,
    pub psi_qq: f64,
}

impl WarpJet {
    pub fn from_radial(jet: &RadialJet) -> Self {
        let RadialJet {
            phi: p,
            dphi: p1,
            d2phi: p2,
            d3phi: p3,
            ..
        } = *jet;
        let psi = p1 / p;
        let psi_q = p2 - p1 * p1 / p;
        let psi_qq = p * (p3 - 2.0 * p1 * p2 / p + p1 * p1 * p1 / (p * p));
        Self { psi, psi_q, psi_qq }
    }

    /// Closed forms `Ψ_q = (n/2)φ^{1−n}` and `Ψ_qq = (n/2)(1−n)φ^{2−n}Ψ`.
    pub fn closed_form(jet: &RadialJet) -> Self {
        let nf = jet.n.nf();
        let psi = jet.psi_warp();
        let psi_q = 0.5 * nf * jet.phi.powf(1.0 - nf);
        let psi_qq = 0.5 * nf * (1.0 - nf) * jet.phi.powf(2.0 - nf) * psi;
        Self { psi, psi_q, psi_qq }
    }
}

/// The two nonzero Christoffel symbols of `g'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelPair {
    /// `Γ^ξ_{qξ} = Ψ⁻¹ dΨ/dq`.
    pub xi_q_xi: f64,
    /// `Γ^q_{ξξ} = −Ψ dΨ/dq`.
    pub q_xi_xi: f64,
}

pub fn christoffel_gprime_at_s(s: f64, n: Dimension) -> Result<ChristoffelPair> {
    if !(s > 0.0) {
        return Err(GeonError::SingularAxis(format!("Ψ vanishes at s = {s}")));
    }
    let w = WarpJet::closed_form(&RadialJet::at(s, n));
    Ok(ChristoffelPair {
        xi_q_xi: w.psi_q / w.psi,
        q_xi_xi: -w.psi * w.psi_q,
    })
}

pub fn christoffel_gprime(q: f64, profile: &RadialProfile) -> Result<ChristoffelPair> {
    christoffel_gprime_at_s(profile.s_of_q(q)?, profile.dim())
}

/// Nonzero lowered-index Riemann components of one conformal choice at one
/// radial position. `r_ijij` is `None` for `n = 3`, which has a single θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTable {
    pub choice: ConformalChoice,
    pub n: Dimension,
    pub s: f64,
    pub r_qxqx: f64,
    pub r_qiqi: f64,
    pub r_xixi: f64,
    pub r_ijij: Option<f64>,
}

impl CurvatureTable {
    pub fn components(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("R_qxiqxi", self.r_qxqx),
            ("R_qiqi", self.r_qiqi),
            ("R_xiixii", self.r_xixi),
        ];
        if let Some(v) = self.r_ijij {
            out.push(("R_ijij", v));
        }
        out
    }
}

/// `R'_{qξqξ} = −Ψ d²Ψ/dq²`.
pub fn gprime_component_generic(s: f64, n: Dimension) -> f64 {
    let w = WarpJet::closed_form(&RadialJet::at(s, n));
    -w.psi * w.psi_qq
}

/// `R'_{qξqξ}` in its dimension-specialized form: `3φ^{−1}(1−φ^{−3})` for
/// `n = 3`, `6φ^{−2}(1−φ^{−4})` for `n = 4`.
pub fn gprime_component_specialized(phi: f64, n: Dimension) -> f64 {
    match n {
        Dimension::Three => 3.0 / phi * (1.0 - phi.powi(-3)),
        Dimension::Four => 6.0 / (phi * phi) * (1.0 - phi.powi(-4)),
    }
}

pub fn riemann_gprime_at_s(s: f64, n: Dimension) -> CurvatureTable {
    CurvatureTable {
        choice: ConformalChoice::GPrime,
        n,
        s,
        r_qxqx: gprime_component_generic(s, n),
        r_qiqi: 0.0,
        r_xixi: 0.0,
        r_ijij: match n {
            Dimension::Three => None,
            Dimension::Four => Some(0.0),
        },
    }
}

pub fn riemann_gprime(q: f64, profile: &RadialProfile) -> Result<CurvatureTable> {
    Ok(riemann_gprime_at_s(profile.s_of_q(q)?, profile.dim()))
}

/// Curvature of `ǧ = e^{2ψ}g'`:
///
/// ```text
/// Ř_qξqξ = −e^{2ψ}(ΨΨ'' + Ψ²ψ'' + ΨΨ'ψ')
/// Ř_qiqi = −e^{2ψ}ψ''
/// Ř_ξiξi = −e^{2ψ}(ΨΨ'ψ' + Ψ²ψ'²)
/// Ř_ijij = −e^{2ψ}ψ'²            (i ≠ j)
/// ```
pub fn riemann_conformal_at_s(
    s: f64,
    n: Dimension,
    choice: ConformalChoice,
) -> Result<CurvatureTable> {
    if s < 0.0 || s.is_nan() {
        return Err(GeonError::NegativeRadius(s));
    }
    let jet = RadialJet::at(s, n);
    let w = WarpJet::closed_form(&jet);
    let (psi, dpsi, d2psi) = choice.psi_jet(&jet)?;
    let e2 = (2.0 * psi).exp();
    let (pw, pw1, pw2) = (w.psi, w.psi_q, w.psi_qq);
    Ok(CurvatureTable {
        choice,
        n,
        s,
        r_qxqx: -e2 * (pw * pw2 + pw * pw * d2psi + pw * pw1 * dpsi),
        r_qiqi: -e2 * d2psi,
        r_xixi: -e2 * (pw * pw1 * dpsi + pw * pw * dpsi * dpsi),
        r_ijij: match n {
            Dimension::Three => None,
            Dimension::Four => Some(-e2 * dpsi * dpsi),
        },
    })
}

pub fn riemann_conformal(
    q: f64,
    choice: ConformalChoice,
    profile: &RadialProfile,
) -> Result<CurvatureTable> {
    riemann_conformal_at_s(profile.s_of_q(q)?, profile.dim(), choice)
}

/// The `g̃` list for `n = 3` as polynomials in `φ`.
pub fn gtilde_list_n3(phi: f64) -> CurvatureTable {
    let p6 = phi.powi(6);
    let x = phi.powi(-3);
    CurvatureTable {
        choice: ConformalChoice::GTilde,
        n: Dimension::Three,
        s: s_of_phi(phi, Dimension::Three),
        r_qxqx: -p6 * (2.0 + x) * (1.0 - x),
        r_qiqi: -p6 * (2.0 + x),
        r_xixi: -p6 * (4.0 - x) * (1.0 - x),
        r_ijij: None,
    }
}

/// The `ḡ` list for `n = 4` exactly as it is usually quoted, with
/// `R̄_ijij = −φ⁸(1−φ^{−4})²`. See [`gbar_list_n4_consistent`].
pub fn gbar_list_n4(phi: f64) -> CurvatureTable {
    let p8 = phi.powi(8);
    let x = phi.powi(-4);
    CurvatureTable {
        choice: ConformalChoice::GBar,
        n: Dimension::Four,
        s: s_of_phi(phi, Dimension::Four),
        r_qxqx: -3.0 * p8 * (1.0 - x).powi(3),
        r_qiqi: -p8 * (3.0 - 6.0 * x - x * x),
        r_xixi: -p8 * (9.0 - x * x) * (1.0 - x),
        r_ijij: Some(-p8 * (1.0 - x) * (1.0 - x)),
    }
}

/// The `ḡ` list with `R̄_ijij = −e^{2ψ}ψ'² = −φ⁸(3−φ^{−4})²`, which is what
/// the generic conformal formula and the finite-difference oracle give.
pub fn gbar_list_n4_consistent(phi: f64) -> CurvatureTable {
    let mut t = gbar_list_n4(phi);
    let x = phi.powi(-4);
    t.r_ijij = Some(-phi.powi(8) * (3.0 - x) * (3.0 - x));
    t
}

/// `s` with `φ(s) = phi`, i.e. `s = (2/n) acosh(φ^{n/2})`.
pub fn s_of_phi(phi: f64, n: Dimension) -> f64 {
    let nf = n.nf();
    2.0 / nf * phi.powf(0.5 * nf).max(1.0).acosh()
}

/// `3x² − 6x − 1`; at `x = φ⁴` this is `φ⁸(3 − 6φ^{−4} − φ^{−8})`, the sign
/// of `−R̄_qiqi`.
pub fn gbar_convexity_margin(phi4: f64) -> f64 {
    3.0 * phi4 * phi4 - 6.0 * phi4 - 1.0
}

/// The positive root `1 + 2/√3` of [`gbar_convexity_margin`].
pub fn gbar_margin_root() -> f64 {
    1.0 + 2.0 / 3f64.sqrt()
}

/// Weight of `|Dv|²` in `dQ/dt` for the 4D flow,
/// `−2 (1/φ')' φ'' − 2 φ'² (1/(φφ'))'`, from the radial jet.
pub fn monotonicity_weight_4d(s: f64) -> f64 {
    let j = RadialJet::at(s, Dimension::Four);
    let (p, p1, p2) = (j.phi, j.dphi, j.d2phi);
    2.0 * p2 * p2 / (p1 * p1) + 2.0 * (p1 * p1 + p * p2) / (p * p)
}

/// Closed form `(1−φ^{−4})^{−1}(6 + 2φ^{−8})` of [`monotonicity_weight_4d`].
pub fn monotonicity_weight_4d_closed(phi: f64) -> f64 {
    let x = phi.powi(-4);
    (6.0 + 2.0 * x * x) / (1.0 - x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{GeonParams, RadialProfile};

    const THREE: Dimension = Dimension::Three;
    const FOUR: Dimension = Dimension::Four;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn warp_chain_rule_matches_closed_form() {
        for n in [THREE, FOUR] {
            for i in 1..150 {
                let s = 0.02 * i as f64;
                let j = RadialJet::at(s, n);
                let a = WarpJet::from_radial(&j);
                let b = WarpJet::closed_form(&j);
                assert!(rel(a.psi_q, b.psi_q) < 1e-10);
                assert!((a.psi_qq - b.psi_qq).abs() < 1e-10 * b.psi_qq.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn christoffels_against_fd_of_psi() {
        let prof = RadialProfile::new(&GeonParams::three(1.0).unwrap());
        let q = prof.q_of_s(1.0).unwrap();
        let psi_at = |q: f64| {
            let s = prof.s_of_q(q).unwrap();
            RadialJet::at(s, THREE).psi_warp()
        };
        let h = 1e-5;
        let dpsi = (psi_at(q + h) - psi_at(q - h)) / (2.0 * h);
        let psi = psi_at(q);
        let c = christoffel_gprime(q, &prof).unwrap();
        assert!(rel(c.xi_q_xi, dpsi / psi) < 1e-8);
        assert!(rel(c.q_xi_xi, -psi * dpsi) < 1e-8);
        assert!(rel(c.q_xi_xi, -psi * psi * c.xi_q_xi) < 1e-14);
    }

    #[test]
    fn christoffels_flatten_far_out() {
        let c = christoffel_gprime_at_s(16.0, THREE).unwrap();
        assert!(c.xi_q_xi.abs() < 1e-10);
        assert!(matches!(
            christoffel_gprime_at_s(0.0, FOUR),
            Err(GeonError::SingularAxis(_))
        ));
    }

    #[test]
    fn gprime_values() {
        assert_eq!(gprime_component_generic(0.0, THREE), 0.0);
        assert!((gprime_component_specialized(2.0, THREE) - 1.3125).abs() < 1e-15);
        assert!((gprime_component_specialized(2.0, FOUR) - 1.40625).abs() < 1e-15);
        for n in [THREE, FOUR] {
            let s = s_of_phi(2.0, n);
            assert!(
                (gprime_component_generic(s, n) - gprime_component_specialized(2.0, n)).abs()
                    < 1e-10
            );
        }
    }

    #[test]
    fn gprime_choice_reduces_to_gprime_table() {
        for n in [THREE, FOUR] {
            let a = riemann_conformal_at_s(0.8, n, ConformalChoice::GPrime).unwrap();
            let b = riemann_gprime_at_s(0.8, n);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gtilde_and_gbar_examples() {
        let t = gtilde_list_n3(2.0);
        assert!((t.r_qxqx + 119.0).abs() < 1e-12);
        let g =
            riemann_conformal_at_s(s_of_phi(2.0, THREE), THREE, ConformalChoice::GTilde).unwrap();
        assert!(rel(g.r_qxqx, -119.0) < 1e-10);

        let phi = 2f64.powf(0.25);
        let b = gbar_list_n4(phi);
        assert!((b.r_qiqi - 1.0).abs() < 1e-12);
        let g = riemann_conformal_at_s(s_of_phi(phi, FOUR), FOUR, ConformalChoice::GBar).unwrap();
        assert!(rel(g.r_qiqi, 1.0) < 1e-10);
    }

    #[test]
    fn generic_table_matches_quoted_lists() {
        for i in 1..100 {
            let phi = 1.0 + 0.05 * i as f64;
            let t = gtilde_list_n3(phi);
            let g = riemann_conformal_at_s(t.s, THREE, ConformalChoice::GTilde).unwrap();
            assert!(rel(g.r_qxqx, t.r_qxqx) < 1e-10 || (g.r_qxqx - t.r_qxqx).abs() < 1e-10);
            assert!(rel(g.r_qiqi, t.r_qiqi) < 1e-10);
            assert!(rel(g.r_xixi, t.r_xixi) < 1e-10 || (g.r_xixi - t.r_xixi).abs() < 1e-10);

            let b = gbar_list_n4_consistent(phi);
            let g = riemann_conformal_at_s(b.s, FOUR, ConformalChoice::GBar).unwrap();
            for ((_, x), (_, y)) in g.components().iter().zip(b.components()) {
                assert!(
                    rel(*x, y) < 1e-9 || (x - y).abs() < 1e-9 * phi.powi(8),
                    "{x} vs {y} at φ={phi}"
                );
            }
        }
    }

    #[test]
    fn quoted_gbar_ijij_differs_from_generic() {
        let phi = 1.5;
        let quoted = gbar_list_n4(phi).r_ijij.unwrap();
        let g = riemann_conformal_at_s(s_of_phi(phi, FOUR), FOUR, ConformalChoice::GBar).unwrap();
        assert!(rel(g.r_ijij.unwrap(), quoted) > 0.5);
    }

    #[test]
    fn gbar_singular_at_axis() {
        assert!(matches!(
            riemann_conformal_at_s(0.0, FOUR, ConformalChoice::GBar),
            Err(GeonError::SingularAxis(_))
        ));
    }

    #[test]
    fn margin_values() {
        assert!(gbar_convexity_margin(gbar_margin_root()).abs() < 1e-14);
        assert_eq!(gbar_convexity_margin(1.0), -4.0);
        assert_eq!(gbar_convexity_margin(2.0), -1.0);
        let r = gbar_margin_root();
        assert!(gbar_convexity_margin(r - 1e-9) < 0.0);
        assert!(gbar_convexity_margin(r + 1e-9) > 0.0);
    }

    #[test]
    fn monotonicity_weight_matches_closed_form() {
        for i in 1..100 {
            let s = 0.05 * i as f64;
            let phi = RadialJet::at(s, FOUR).phi;
            let a = monotonicity_weight_4d(s);
            assert!(rel(a, monotonicity_weight_4d_closed(phi)) < 1e-10);
            assert!(a > 0.0);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gtilde_sectional_nonpositive(phi in 1.0f64..8.0) {
                let t = gtilde_list_n3(phi);
                prop_assert!(t.r_qxqx <= 0.0 && t.r_qiqi <= 0.0 && t.r_xixi <= 0.0);
                if phi > 1.0 + 1e-6 {
                    let g = riemann_conformal_at_s(t.s, THREE, ConformalChoice::GTilde).unwrap();
                    prop_assert!(g.r_qxqx <= 0.0 && g.r_qiqi <= 0.0 && g.r_xixi <= 0.0);
                }
            }

            #[test]
            fn gbar_nonpositive_above_margin(x in 0.0f64..10.0) {
                let phi = (gbar_margin_root() + x).powf(0.25);
                let g = riemann_conformal_at_s(s_of_phi(phi, FOUR), FOUR, ConformalChoice::GBar).unwrap();
                let scale = phi.powi(8);
                for (_, v) in g.components() {
                    prop_assert!(v <= 1e-12 * scale);
                }
                for (_, v) in gbar_list_n4(phi).components() {
                    prop_assert!(v <= 1e-12 * scale);
                }
            }

            #[test]
            fn margin_sign_tracks_root(x in 1.0f64..6.0) {
                let m = gbar_convexity_margin(x);
                prop_assert_eq!(m >= 0.0, x >= gbar_margin_root() - 1e-12 || m.abs() < 1e-10);
            }
        }
    }
}
