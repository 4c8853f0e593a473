use symcone::extremal::{
    check_order_interval_segment, check_state_gauge_identity, check_strong_atomicity, extremal_for_state,
    pure_states, PureState,
};
use symcone::maps::{conjugated_inversion, SAMPLE_RADIUS};
use symcone::reconstruction::inversion_j;
use symcone::{ConeSpec, GaugeMapSpec, OrderUnitSpace};

fn families() -> Vec<ConeSpec> {
    vec![ConeSpec::orthant(5), ConeSpec::lorentz(5), ConeSpec::psd(3)]
}

fn skewed(cone: &ConeSpec, seed: u64) -> OrderUnitSpace {
    let base = OrderUnitSpace::standard(cone.clone()).unwrap();
    base.with_unit(&base.sample_interior(seed, 0.7)).unwrap()
}

#[test]
fn state_gauge_identity_through_conjugated_maps() {
    for cone in families() {
        let map = conjugated_inversion(&cone, 11).unwrap();
        for space in [OrderUnitSpace::standard(cone.clone()).unwrap(), skewed(&cone, 4)] {
            let r = check_state_gauge_identity(&map, &space, 30, 7, 1e-8);
            assert!(r.pass(), "{cone:?}\n{}", r.to_text());
        }
    }
}

#[test]
fn strong_atomicity_at_random_points() {
    for cone in families() {
        let map = conjugated_inversion(&cone, 3).unwrap();
        let space = skewed(&cone, 8);
        let mut smp = space.sampler(21);
        for _ in 0..3 {
            let g = smp.scaled_interior(SAMPLE_RADIUS, 0.5, 3.0);
            let r = check_strong_atomicity(&space, &map, &g, 40, 5, 1e-9);
            assert!(r.pass(), "{cone:?}\n{}", r.to_text());
        }
    }
}

#[test]
fn order_intervals_above_generated_extremals_are_segments() {
    for cone in families() {
        let space = skewed(&cone, 2);
        let x = space.sample_interior(6, 1.0);
        for psi in pure_states(&space, 4, 13).unwrap() {
            let p = extremal_for_state(&space, &psi).unwrap();
            let r = check_order_interval_segment(&space, &x, &p, 100, 17, 1e-8).unwrap();
            assert!(r.pass(), "{cone:?}\n{}", r.to_text());
        }
    }
}

#[test]
fn swapped_states_are_distinguished() {
    for cone in families() {
        let space = OrderUnitSpace::standard(cone.clone()).unwrap();
        let j = inversion_j(&GaugeMapSpec::inversion(cone.clone()).unwrap(), &space).unwrap();
        let states = pure_states(&space, 8, 3).unwrap();
        let mut smp = space.sampler(1);
        for k in 0..states.len() {
            let p = extremal_for_state(&space, &states[k]).unwrap();
            let wrong: &PureState = &states[(k + 1) % states.len()];
            let worst = (0..20)
                .map(|_| {
                    let g = smp.interior(SAMPLE_RADIUS);
                    let lhs = space.cone().upper_ratio(&p.p, &g).unwrap();
                    let rhs = wrong.eval(&j.apply(&g).unwrap());
                    (lhs - rhs).abs() / (1.0 + rhs.abs())
                })
                .fold(0.0, f64::max);
            assert!(worst > 1e-3, "{cone:?}: state {k} not distinguished ({worst:e})");
        }
    }
}

#[test]
fn orthant_pure_states_decide_the_order() {
    let space = skewed(&ConeSpec::orthant(4), 5);
    let states = pure_states(&space, 4, 0).unwrap();
    let mut smp = space.sampler(33);
    let mut dominated = 0;
    for _ in 0..500 {
        let a = smp.gaussian();
        let b = smp.gaussian();
        if states.iter().all(|s| s.eval(&a) <= s.eval(&b)) {
            dominated += 1;
            assert!(space.leq(&a, &b, 0.0).unwrap());
        } else {
            assert!(!space.leq(&a, &b, 0.0).unwrap());
        }
    }
    assert!(dominated > 0);
}
