use std::sync::Arc;

use proptest::prelude::*;

use geonflow::curvature::s_of_phi;
use geonflow::flow::{engine_for, FlowConfig, InitialData, Mode};
use geonflow::functional::{q_report, torus_value};
use geonflow::{Dimension, GeonParams, GraphSurface, PeriodicGrid, RadialProfile, Spectral2d};

fn params(four: bool) -> GeonParams {
    if four {
        GeonParams::four(1.0, 1.0).unwrap()
    } else {
        GeonParams::three(1.0).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coordinate_tori_all_give_the_torus_value(four in any::<bool>(), phi0 in 1.1f64..4.0) {
        let p = params(four);
        let grid = PeriodicGrid::for_params(&p, 16, 16).unwrap();
        let surf = GraphSurface::coordinate_torus(Arc::new(RadialProfile::new(&p)), grid.clone(), s_of_phi(phi0, p.dim())).unwrap();
        let r = q_report(&surf, &Spectral2d::new(&grid)).unwrap();
        let scale = phi0.powi(p.n() as i32);
        for q in [r.q_surface, r.q_bulk, r.q_flat] {
            prop_assert!((q - torus_value(&p)).abs() < 1e-10 * scale, "{q}");
        }
    }

    #[test]
    fn routes_agree_on_smooth_graphs(
        four in any::<bool>(),
        phi0 in 1.5f64..3.0,
        a in -0.08f64..0.08,
        b in -0.08f64..0.08,
        k in 1i32..3,
    ) {
        let p = params(four);
        let grid = PeriodicGrid::for_params(&p, 32, 32).unwrap();
        let data = InitialData {
            s0: s_of_phi(phi0, p.dim()),
            modes: vec![Mode { k: [k, 0], amplitude: a, phase: 0.3 }, Mode { k: [1, k], amplitude: b, phase: 0.0 }],
        };
        let surf = GraphSurface::from_v(Arc::new(RadialProfile::new(&p)), grid.clone(), data.sample(&grid)).unwrap();
        let r = q_report(&surf, &Spectral2d::new(&grid)).unwrap();
        prop_assert!(r.spread < 1e-7 * phi0.powi(p.n() as i32), "spread {}", r.spread);
        prop_assert!(r.flat_gradient_term <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn short_flows_do_not_decrease_q(seed in 0u64..1000, axis in 0usize..2) {
        let mut k = [0, 0];
        k[axis] = 1;
        let p = params(false);
        let cfg = FlowConfig { t_end: 0.5, diag_every: 5, track_q: true, ..FlowConfig::default() };
        let e = engine_for(&p, [16, 16], cfg).unwrap();
        let amp = 0.02 + 0.06 * (seed as f64 / 1000.0);
        let data = InitialData { s0: s_of_phi(2.0, Dimension::Three), modes: vec![Mode { k, amplitude: amp, phase: 0.0 }] };
        let out = e.run(&data.surface(e.profile().clone(), e.grid()).unwrap()).unwrap();
        prop_assert!(out.exit.is_completed());
        for w in out.q_track.windows(2) {
            prop_assert!(w[1].1 >= w[0].1 - 1e-8, "{:?}", w);
        }
    }
}
