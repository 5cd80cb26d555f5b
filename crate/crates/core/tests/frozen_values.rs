//! Reference values computed independently (symbolic Riemann tensors of the
//! metric written in `s`, adaptive quadrature for `q`), frozen here.

use std::f64::consts::PI;
use std::sync::Arc;

use geonflow::curvature::{riemann_conformal_at_s, s_of_phi, ConformalChoice};
use geonflow::functional::{bound, q_report, torus_value};
use geonflow::surface::torus_mean_curvature;
use geonflow::{Dimension, GeonParams, GraphSurface, PeriodicGrid, RadialProfile, Spectral2d};

fn close(got: f64, want: f64, rel: f64) {
    let err = (got - want).abs() / want.abs().max(1.0);
    assert!(err <= rel, "got {got}, want {want}, rel err {err:.3e}");
}

fn params(n: Dimension) -> GeonParams {
    match n {
        Dimension::Three => GeonParams::three(1.0).unwrap(),
        Dimension::Four => GeonParams::four(1.0, 1.0).unwrap(),
    }
}

type Row = (Dimension, ConformalChoice, f64, [f64; 4]);

const NAN: f64 = f64::NAN;

#[rustfmt::skip]
const TABLE: [Row; 16] = {
    use ConformalChoice::*;
    use Dimension::*;
    [
        (Three, GPrime, 0.5, [1.0188182901168334, 0.0, 0.0, NAN]),
        (Three, GPrime, 1.3, [1.1810121880510824, 0.0, 0.0, NAN]),
        (Three, G, 0.5, [-0.32404484751733886, -2.5850887601761143, -1.0428614927074622, NAN]),
        (Three, G, 1.3, [-25.612729756591587, -31.28700840563978, -28.853296144621694, NAN]),
        (Three, GTilde, 0.5, [-2.943120306566065, -7.295529921809313, -3.857626190267259, NAN]),
        (Three, GTilde, 1.3, [-316.68097117417875, -343.3923166826667, -597.7949240856256, NAN]),
        (Three, GBar, 0.5, [-1.9356603362116855, -0.1919999536288283, -10.100784411970517, NAN]),
        (Three, GBar, 1.3, [-2314.0364753925205, -2399.2809260231793, -7234.885279985288, NAN]),
        (Four, GPrime, 0.5, [2.2553286405104354, 0.0, 0.0, 0.0]),
        (Four, GPrime, 1.3, [0.8670477440126387, 0.0, 0.0, 0.0]),
        (Four, G, 0.5, [0.35897912961610606, -3.3810978455418157, -1.9611235039277897, -1.3810978455418157]),
        (Four, G, 1.3, [-41.88491400297902, -46.81943960989299, -45.79761481219764, -44.81943960989299]),
        (Four, GTilde, 0.5, [-4.262290680481261, -10.434613219742236, -8.524581360962522, -8.524581360962522]),
        (Four, GTilde, 1.3, [-606.7660939365655, -633.8421171629975, -1213.532187873131, -1213.532187873131]),
        (Four, GBar, 0.5, [-3.31907721541321, -1.7222937768807354, -29.016736282132573, -37.740055477144]),
        (Four, GBar, 1.3, [-5894.822707611767, -6022.346500834533, -18481.43628379033, -18620.872777822315]),
    ]
};

#[test]
fn curvature_tables_match_symbolic_values() {
    for (n, choice, s, want) in TABLE {
        let t = riemann_conformal_at_s(s, n, choice).unwrap();
        close(t.r_qxqx, want[0], 1e-12);
        close(t.r_qiqi, want[1], 1e-12);
        close(t.r_xixi, want[2], 1e-12);
        match t.r_ijij {
            Some(r) => close(r, want[3], 1e-12),
            None => assert!(want[3].is_nan()),
        }
    }
}

#[test]
fn radial_coordinate_matches_quadrature() {
    let cases = [
        (
            Dimension::Three,
            [0.471832570932, 0.8229441599290267, 1.1874393820371156],
        ),
        (
            Dimension::Four,
            [0.4642657554548277, 0.7917143756453421, 1.1196422037476166],
        ),
    ];
    for (n, want) in cases {
        let prof = RadialProfile::new(&params(n));
        for (s, q) in [0.5, 1.0, 2.0].into_iter().zip(want) {
            close(prof.q_of_s(s).unwrap(), q, 1e-10);
            close(prof.s_of_q(q).unwrap(), s, 1e-9);
        }
    }
}

#[test]
fn torus_mean_curvature_matches_numeric_derivatives() {
    let cases = [
        (Dimension::Three, 1.5, 0.8115661217919511, 2.20755392844174),
        (Dimension::Three, 2.0, 1.133361471371113, 2.0712746248212888),
        (Dimension::Four, 1.5, 0.7252872569112901, 3.128431639083369),
        (Dimension::Four, 2.0, 1.0317185344477802, 3.0338369545291433),
    ];
    for (n, phi, s, h) in cases {
        close(s_of_phi(phi, n), s, 1e-13);
        close(torus_mean_curvature(s, n).unwrap(), h, 1e-12);
    }
}

#[test]
fn torus_value_is_minus_two_pi_for_unit_periods() {
    for n in [Dimension::Three, Dimension::Four] {
        let p = params(n);
        close(p.mass(), -4.0 * PI / n.nf(), 1e-15);
        close(torus_value(&p), -2.0 * PI, 1e-15);
        close(bound(&p), 2.0 * PI, 1e-15);
        let grid = PeriodicGrid::for_params(&p, 16, 16).unwrap();
        let surf = GraphSurface::coordinate_torus(
            Arc::new(RadialProfile::new(&p)),
            grid.clone(),
            s_of_phi(1.7, n),
        )
        .unwrap();
        let r = q_report(&surf, &Spectral2d::new(&grid)).unwrap();
        close(r.q_surface, -2.0 * PI, 1e-10);
    }
}
