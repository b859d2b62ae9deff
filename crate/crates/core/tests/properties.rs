use lp_resolvent::config::{parse_config, Checks, RunConfig, SpaceConfig, CheckName, Format};
use lp_resolvent::geometry::raw::{bregman_phi, dot, duality_map, lp_norm, sub};
use lp_resolvent::operators::catalog;
use lp_resolvent::resolvent::{solve_resolvent, ResolventProblem};
use lp_resolvent::{MonotoneOperatorSpec, SamplerConfig, SpaceDescriptor};
use proptest::prelude::*;

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.1), Just(1.5), Just(2.0), Just(3.0), 1.05f64..4.0]
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, n), -3i32..3).prop_map(|(v, e)| v.into_iter().map(|c| c * 10f64.powi(e)).collect())
}

fn pair() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>)> {
    (exponent(), 1usize..8).prop_flat_map(|(p, n)| (Just(p), vector(n), vector(n)))
}

fn conj(p: f64) -> f64 {
    p / (p - 1.0)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn duality_map_defining_property((p, x, _) in pair()) {
        let j = duality_map(&x, p);
        let nx = lp_norm(&x, p);
        prop_assert!(close(dot(&x, &j), nx * nx, 1e-12));
        prop_assert!(close(lp_norm(&j, conj(p)), nx, 1e-12));
    }

    #[test]
    fn inverse_duality_map_round_trip((p, x, _) in pair()) {
        let back = duality_map(&duality_map(&x, p), conj(p));
        let nx = lp_norm(&x, p);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * nx.max(f64::MIN_POSITIVE), "{a} vs {b}");
        }
    }

    #[test]
    fn duality_map_is_homogeneous((p, x, _) in pair(), t in -5.0f64..5.0) {
        let jx = duality_map(&x, p);
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let jtx = duality_map(&tx, p);
        let scale = lp_norm(&jx, conj(p)) * t.abs();
        for (a, b) in jtx.iter().zip(&jx) {
            prop_assert!((a - t * b).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn duality_map_is_monotone((p, x, y) in pair()) {
        let d = sub(&x, &y);
        let dj = sub(&duality_map(&x, p), &duality_map(&y, p));
        let (nx, ny) = (lp_norm(&x, p), lp_norm(&y, p));
        prop_assert!(dot(&d, &dj) >= -1e-12 * (nx + ny).powi(2));
    }

    #[test]
    fn phi_lies_between_norm_bounds((p, x, y) in pair()) {
        let phi = bregman_phi(&x, &y, p);
        let (nx, ny) = (lp_norm(&x, p), lp_norm(&y, p));
        let slack = 1e-12 * (nx + ny).powi(2);
        prop_assert!(phi >= (nx - ny).powi(2) - slack);
        prop_assert!(phi <= (nx + ny).powi(2) + slack);
    }

    #[test]
    fn phi_symmetrization_identity((p, x, y) in pair()) {
        let lhs = bregman_phi(&x, &y, p) + bregman_phi(&y, &x, p);
        let rhs = 2.0 * dot(&sub(&x, &y), &sub(&duality_map(&x, p), &duality_map(&y, p)));
        let scale = lp_norm(&x, p).max(lp_norm(&y, p)).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale.max(1e-300));
    }

    #[test]
    fn hilbert_degeneracy(x in vector(5), y in vector(5)) {
        prop_assert_eq!(duality_map(&x, 2.0), x.clone());
        let d = sub(&x, &y);
        let phi = bregman_phi(&x, &y, 2.0);
        prop_assert!(close(phi, dot(&d, &d), 1e-12));
    }

    #[test]
    fn resolvent_inclusion_holds(p in prop_oneof![Just(1.5), Just(2.0), Just(3.0)], x in vector(3), r in 0.1f64..10.0, k in 0usize..8) {
        let space = SpaceDescriptor::new(3, p).unwrap();
        let (name, op) = &catalog(3)[k];
        let problem = ResolventProblem::new(&space, op, r, x.clone());
        if let Ok(sol) = solve_resolvent(&problem) {
            prop_assert!(sol.residual <= 1e-10 * lp_norm(&x, p).max(1.0), "{name}: {}", sol.residual);
        } else {
            // only domain-restricted operators may refuse a point
            prop_assert!(op.domain_radius().is_some(), "{name} failed at {x:?}");
        }
    }

    #[test]
    fn hilbert_l1_resolvent_is_shrinkage(x in vector(4), r in 0.01f64..10.0, gamma in 0.0f64..2.0) {
        let space = SpaceDescriptor::new(4, 2.0).unwrap();
        let op = MonotoneOperatorSpec::subgrad_l1(gamma).unwrap();
        let z = solve_resolvent(&ResolventProblem::new(&space, &op, r, x.clone())).unwrap().z.into_coords();
        for (zi, xi) in z.iter().zip(&x) {
            let shrunk = xi.signum() * (xi.abs() - r * gamma).max(0.0);
            prop_assert!((zi - shrunk).abs() <= 1e-8 * xi.abs().max(1.0));
        }
    }

    #[test]
    fn config_round_trip(
        dim in 1usize..6,
        p in 1.01f64..5.0,
        seed in 0u64..(i64::MAX as u64),
        count in 1usize..100_000,
        r in prop::collection::vec(1e-3f64..1e3, 1..4),
        all in any::<bool>(),
        csv in any::<bool>(),
        gamma in 0.0f64..3.0,
    ) {
        let checks = if all { Checks::All } else { Checks::List(vec![CheckName::Keylem1, CheckName::PhiIdentity]) };
        let mut c = RunConfig::new(SpaceConfig { dim, p }, checks);
        c.sampler = SamplerConfig::with_seed(seed, count);
        c.r_values = r;
        c.format = if csv { Format::Csv } else { Format::Json };
        c.operator = MonotoneOperatorSpec::sum(vec![
            MonotoneOperatorSpec::grad_quadratic(vec![0.5; dim], 1.0).unwrap(),
            MonotoneOperatorSpec::subgrad_l1(gamma).unwrap(),
        ]);
        let text = c.to_toml().unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), c);
    }
}
