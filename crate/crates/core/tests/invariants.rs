use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use proptest::prelude::*;

use bvlab_core::field::energy;
use bvlab_core::geometry::{make_disk, make_ellipse};
use bvlab_core::jacobian::{pair_boundary, pair_global, pair_interior};
use bvlab_core::lifting::unwrap_phase;
use bvlab_core::onedim::{f_eps, truncations, Profile1D};
use bvlab_core::{Domain, VectorField2D, Vortex, VortexSet};

fn disk() -> Arc<Domain> {
    Arc::new(make_disk(1.0, 8, 32).unwrap())
}

fn wave(c: [f64; 4]) -> impl Fn([f64; 2]) -> f64 {
    move |p| c[0] * p[0] + c[1] * p[1] + c[2] * (c[3] * p[0] * p[1]).sin()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn phase_unwraps_to_itself(c in prop::array::uniform4(-1.5f64..1.5), shift in 0.0f64..TAU) {
        let d = disk();
        let f = wave(c);
        let phi: Vec<f64> = d.mesh.nodes.iter().map(|&p| f(p) + shift).collect();
        let u = VectorField2D::from_phase(d.clone(), &phi, 0.1, 0.1).unwrap();
        let back = unwrap_phase(&d.mesh, &u.values, 0.1).unwrap();
        let k = ((back[0] - phi[0]) / TAU).round();
        for (a, b) in back.iter().zip(&phi) {
            prop_assert!((a - b - k * TAU).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobian_of_smooth_field_has_no_total_mass(c in prop::array::uniform4(-1.0f64..1.0), e in prop::array::uniform4(-1.0f64..1.0)) {
        let d = Arc::new(make_ellipse(1.0, 0.7, 6, 24).unwrap());
        let (f, g) = (wave(c), wave(e));
        let u = VectorField2D::from_fn(d.clone(), 0.1, 0.1, |p| [f(p), 1.0 + g(p)]).unwrap();
        let one = vec![1.0; d.mesh.n_nodes()];
        prop_assert!(pair_global(&u, &one).abs() < 1e-10);
        let q: Vec<f64> = d.mesh.nodes.iter().map(|p| p[0] - 2.0 * p[1]).collect();
        let split = pair_interior(&u, &q) + pair_boundary(&u, &q);
        prop_assert!((split - pair_global(&u, &q)).abs() < 1e-9 * (1.0 + split.abs()));
    }

    #[test]
    fn energy_parts_add_up_and_rotation_keeps_bulk(c in prop::array::uniform4(-1.0f64..1.0), alpha in 0.0f64..TAU, eta in 0.01f64..0.5) {
        let d = disk();
        let f = wave(c);
        let u = VectorField2D::from_fn(d.clone(), 0.05, eta, |p| [0.8 * f(p).cos(), f(p).sin()]).unwrap();
        let (s, co) = alpha.sin_cos();
        let r = u.with_values(u.values.iter().map(|v| [co * v[0] - s * v[1], s * v[0] + co * v[1]]).collect()).unwrap();
        let (a, b) = (energy(&u), energy(&r));
        prop_assert!((a.total - a.dirichlet - a.penalty - a.anchoring).abs() < 1e-12 * a.total.max(1.0));
        prop_assert!((a.dirichlet - b.dirichlet).abs() < 1e-10 * a.dirichlet.max(1.0));
        prop_assert!((a.penalty - b.penalty).abs() < 1e-10 * a.penalty.max(1.0));
        prop_assert!(a.anchoring >= 0.0 && b.anchoring >= 0.0);
    }

    #[test]
    fn vortex_sets_are_normalized(ts in prop::collection::vec(-10.0f64..10.0, 2), rot in 0.0f64..TAU) {
        prop_assume!((ts[0] - ts[1]).rem_euclid(TAU).min((ts[1] - ts[0]).rem_euclid(TAU)) > 1e-6);
        let vs = VortexSet::new(ts.iter().map(|&t| Vortex { t, d: 1 }).collect()).unwrap();
        prop_assert!(vs.vortices.windows(2).all(|w| w[0].t < w[1].t));
        prop_assert!(vs.vortices.iter().all(|v| (0.0..TAU).contains(&v.t)));
        let turned = VortexSet::new(ts.iter().map(|&t| Vortex { t: t + rot, d: 1 }).collect()).unwrap();
        prop_assert!((vs.min_separation() - turned.min_separation()).abs() < 1e-9);
        prop_assert!(vs.min_separation() <= PI + 1e-12);
    }

    #[test]
    fn truncations_are_superadditive(c in prop::array::uniform4(-3.0f64..3.0)) {
        let p = Profile1D::uniform(-1.0, 1.0, 120, 0.05, |x| c[0] * x + c[1] * (c[2] * x).sin() + c[3]).unwrap();
        prop_assert!(truncations(&p).superadditivity_margin() >= -1e-8);
        prop_assert!(f_eps(&p) >= 0.0);
    }
}

#[test]
fn bad_vortex_sets_are_rejected() {
    assert!(VortexSet::new(vec![Vortex { t: 0.0, d: 1 }, Vortex { t: 1.0, d: 2 }]).is_err());
    assert!(VortexSet::new(vec![Vortex { t: 0.0, d: 2 }, Vortex { t: 1.0, d: 0 }]).is_err());
    assert!(VortexSet::new(vec![Vortex { t: 0.5, d: 1 }, Vortex { t: 0.5 + TAU, d: 1 }]).is_err());
}
