use approx::assert_relative_eq;
use kepler_cz::catalog::{effective_potential, hill_classify, resonance_energy, FamilyId, HillTag};
use kepler_cz::dynamics::{invariants, poisson_bracket, Observable, PhasePoint};
use kepler_cz::index::{cz_circular, rs_family, rs_index, AnalyticKind, CircularSign, CrossingOptions, HalfInteger, SymplecticPath};
use kepler_cz::moduli::{from_sphere_pair, to_sphere_pair};
use kepler_cz::regularization::{regularize, stereo_lift, stereo_project, unregularize, SphereCotangent};
use kepler_cz::verify::random_bound_state;
use nalgebra::{Vector3, Vector4};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bound_state(seed: u64) -> PhasePoint {
    random_bound_state(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-range..range).prop_map(Vector3::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn half_integer_arithmetic(a in -10_000i64..10_000, b in -10_000i64..10_000) {
        let x = HalfInteger::from_doubled(a);
        let y = HalfInteger::from_doubled(b);
        prop_assert_eq!((x + y).doubled(), a + b);
        prop_assert_eq!((x - y).doubled(), a - b);
        prop_assert_eq!((-x).doubled(), -a);
        prop_assert_eq!(x + y - y, x);
        prop_assert_eq!(x.to_string().parse::<HalfInteger>().unwrap(), x);
        prop_assert_eq!(x.is_integer(), a % 2 == 0);
        prop_assert_eq!(x.to_f64(), a as f64 / 2.0);
    }

    #[test]
    fn family_index_is_four_k_minus_half(k in 2u64..500, l in 1u64..499) {
        prop_assume!(l < k);
        let (f, _) = FamilyId::new(k, l).unwrap();
        prop_assert_eq!(rs_family(f).doubled(), 8 * f.k as i64 - 1);
        prop_assert_eq!(rs_family(f) - HalfInteger::from_doubled(3), HalfInteger::from_int(4 * f.k as i64 - 2));
    }

    #[test]
    fn moduli_round_trip(seed in any::<u64>()) {
        let inv = invariants(&bound_state(seed)).unwrap();
        let sp = to_sphere_pair(inv.energy, &inv.angular_momentum, &inv.lrl).unwrap();
        prop_assert!(sp.norm_defect() < 1e-12);
        let (l, a) = from_sphere_pair(inv.energy, &sp).unwrap();
        prop_assert!((l - inv.angular_momentum).amax() < 1e-12);
        prop_assert!((a - inv.lrl).amax() < 1e-12);
    }

    #[test]
    fn stereographic_round_trip_from_the_plane(r in 0.2f64..5.0, p in vec3(10.0), q in vec3(10.0)) {
        let sc = stereo_lift(r, &p, &q).unwrap();
        prop_assert!(sc.constraint_defect() < 1e-12 * (1.0 + q.norm() + p.norm()));
        let (p2, q2) = stereo_project(&sc).unwrap();
        prop_assert!((p2 - p).amax() <= 1e-12 * (1.0 + p.amax()));
        prop_assert!((q2 - q).amax() <= 1e-12 * (1.0 + q.amax()) * (1.0 + p.norm_squared() / (r * r)));
    }

    #[test]
    fn stereographic_round_trip_from_the_sphere(r in 0.2f64..5.0, x in prop::array::uniform4(-1.0f64..1.0), y in prop::array::uniform4(-1.0f64..1.0)) {
        let xv = Vector4::from(x);
        prop_assume!(xv.norm() > 0.1);
        let xs = xv.normalize() * r;
        prop_assume!(r - xs[0] > 0.05 * r);
        let yv = Vector4::from(y);
        let ys = yv - xs * (yv.dot(&xs) / (r * r));
        let sc = SphereCotangent { x: xs, y: ys, radius: r };
        let (p, q) = stereo_project(&sc).unwrap();
        let back = stereo_lift(r, &p, &q).unwrap();
        prop_assert!((back.x - sc.x).amax() < 1e-10 * r);
        prop_assert!((back.y - sc.y).amax() < 1e-10 * (1.0 + ys.amax()));
    }

    #[test]
    fn regularizing_chart_round_trip(seed in any::<u64>()) {
        let x = bound_state(seed);
        let e0 = invariants(&x).unwrap().energy;
        let back = unregularize(&regularize(&x, e0).unwrap(), e0).unwrap();
        prop_assert!((back.q - x.q).amax() < 1e-10 * (1.0 + x.q.amax()));
        prop_assert!((back.p - x.p).amax() < 1e-10 * (1.0 + x.p.amax()));
    }

    #[test]
    fn poisson_bracket_is_antisymmetric(seed in any::<u64>(), i in 0usize..8, j in 0usize..8) {
        let obs = |n: usize| match n {
            0 => Observable::Energy,
            1..=3 => Observable::AngularMomentum(n - 1),
            4..=6 => Observable::Lrl(n - 4),
            _ => Observable::RotatingH,
        };
        let x = bound_state(seed);
        let fg = poisson_bracket(&obs(i), &obs(j), &x, None).unwrap();
        let gf = poisson_bracket(&obs(j), &obs(i), &x, None).unwrap();
        prop_assert!((fg + gf).abs() < 1e-12 * (1.0 + fg.abs()));
    }

    #[test]
    fn circular_index_matches_floor_formula(e in -6.0f64..-0.52, n in 1u32..=5) {
        // independent oracle: count the integers below N x / (x +- 1)
        let x = (-2.0 * e).powf(1.5);
        for (sign, mu) in [(CircularSign::Retrograde, x / (x + 1.0)), (CircularSign::Direct, x / (x - 1.0))] {
            let nm = n as f64 * mu;
            prop_assume!((nm - nm.round()).abs() > 1e-9);
            let below = (0..).take_while(|m| (*m as f64) < nm).count() as i64 - 1;
            prop_assert_eq!(cz_circular(e, sign, n).unwrap(), HalfInteger::from_int(2 + 4 * below));
        }
    }

    #[test]
    fn hill_tags_agree_with_the_potential(c in -4.0f64..-1.0, q in vec3(3.0)) {
        prop_assume!(q.norm() > 1e-3);
        let tag = hill_classify(c, &q).unwrap().tag;
        prop_assert_eq!(tag == HillTag::Forbidden, effective_potential(&q) > c);
    }

    #[test]
    fn resonance_energy_matches_kepler_period(k in 1u64..60, l in 1u64..60) {
        // k Kepler periods 2 pi (-2E)^{-3/2} fill l frame periods 2 pi
        let e = resonance_energy(k, l);
        assert_relative_eq!(k as f64 * (-2.0 * e).powf(-1.5), l as f64, max_relative = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn index_is_invariant_under_reparametrization(r in 1.2f64..3.0, n in 1u32..=3, amp in 0.05f64..0.9) {
        let opts = CrossingOptions::default();
        let duration = 2.0 * std::f64::consts::PI * n as f64 / r;
        let path = SymplecticPath::analytic(AnalyticKind::CollisionKepler { r }, duration).unwrap();
        let plain = rs_index(&path, &opts).unwrap().index;
        let warped = rs_index(&SymplecticPath::warped(path, amp).unwrap(), &opts).unwrap().index;
        prop_assert_eq!(plain, warped);
    }
}
