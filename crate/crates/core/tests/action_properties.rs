use limset::action::{action, lif_path, Path};
use limset::flow::integrate_ode;
use limset::systems::corpus::double_well_potential;
use limset::systems::{builtin_corpus, corpus_system};
use proptest::prelude::*;

fn random_path(seed_points: &[(f64, f64)], t: f64) -> Path {
    let pts = seed_points.iter().map(|&(a, b)| vec![a, b]).collect();
    Path::uniform(pts, t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn action_is_nonnegative(pts in prop::collection::vec((-1.2f64..1.2, -1.2f64..1.2), 2..30), t in 0.1f64..10.0, which in 0usize..15) {
        let s = &builtin_corpus()[which];
        prop_assume!(s.dim == 2);
        let p = random_path(&pts, t);
        prop_assert!(action(s, &p).unwrap().value >= 0.0);
    }

    #[test]
    fn action_is_additive(pts in prop::collection::vec((-1.2f64..1.2, -1.2f64..1.2), 3..30), t in 0.1f64..10.0, cut in 1usize..28) {
        let s = corpus_system("prnot").unwrap();
        let p = random_path(&pts, t);
        let k = 1 + cut % (p.n_segments() - 1);
        let (a, b) = p.split_at(k).unwrap();
        let whole = action(&s, &p).unwrap().value;
        let parts = action(&s, &a).unwrap().value + action(&s, &b).unwrap().value;
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300));
    }

    #[test]
    fn scaling_a_divides_action(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..20), c in 0.1f64..10.0) {
        let s = corpus_system("twoco").unwrap();
        let scaled = s.clone().with_scaled_diffusion(c).unwrap();
        let p = random_path(&pts, 2.0);
        let a = action(&s, &p).unwrap().value;
        let b = action(&scaled, &p).unwrap().value;
        prop_assert!((b * c - a).abs() <= 1e-12 * a.max(1e-300));
    }
}

#[test]
fn flow_residual_is_second_order() {
    for name in ["closed_orbit_v1", "twoco", "prnot"] {
        let s = corpus_system(name).unwrap();
        let x0 = s.metadata.default_start.iter().map(|v| v + 0.3).collect::<Vec<_>>();
        let res = |dt: f64| {
            let tr = integrate_ode(&s, &x0, 2.0, dt).unwrap();
            action(&s, &Path::from_trajectory(&tr).unwrap()).unwrap().value
        };
        let (coarse, fine) = (res(0.02), res(0.01));
        assert!(coarse >= 3.0 * fine, "{name}: {coarse} vs {fine}");
    }
}

#[test]
fn reversed_gradient_flow_costs_twice_the_barrier() {
    let s = corpus_system("gradient_dw2").unwrap();
    let (saddle, min) = ([1.0, 0.5], [1.0, 1.0]);
    let tr = integrate_ode(&s, &[1.0, 0.5 + 1e-6], 30.0, 1e-3).unwrap();
    let down = Path::from_trajectory(&tr).unwrap();
    let up = down.reversed();
    let barrier = double_well_potential(&saddle) - double_well_potential(&min);
    let a = action(&s, &up).unwrap().value;
    assert!((a - 2.0 * barrier).abs() < 0.05 * 2.0 * barrier, "{a}");
    assert!(action(&s, &down).unwrap().value < 1e-6);
    // a straight line is never cheaper than the reversed flow here
    assert!(action(&s, &lif_path(&min, &saddle, 200).unwrap()).unwrap().value >= a * 0.95);
}
