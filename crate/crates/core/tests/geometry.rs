use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use powerconv::field::{Domain, GridFunction};
use powerconv::geometry::{ConvexBody, Vec2};

fn polygon(seed: u64, n: usize) -> ConvexBody {
    ConvexBody::random_polygon(&mut ChaCha8Rng::seed_from_u64(seed), n).unwrap()
}

fn mu_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.1), Just(0.5), Just(0.9), 0.01f64..0.99]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_is_additive(s0 in any::<u64>(), s1 in any::<u64>(), n0 in 3usize..12, n1 in 3usize..12, mu in mu_strategy()) {
        let (b0, b1) = (polygon(s0, n0), polygon(s1, n1));
        let c = ConvexBody::minkowski_combine(&b0, &b1, mu).unwrap();
        let grid = c.grid();
        for j in 0..grid.len() {
            let xi = grid.direction(j);
            let lin = (1.0 - mu) * b0.support_eval(xi).unwrap() + mu * b1.support_eval(xi).unwrap();
            prop_assert!((c.support_eval(xi).unwrap() - lin).abs() <= 1e-12);
        }
    }

    #[test]
    fn brunn_minkowski(s0 in any::<u64>(), s1 in any::<u64>(), n0 in 3usize..12, n1 in 3usize..12, mu in mu_strategy()) {
        let (b0, b1) = (polygon(s0, n0), polygon(s1, n1));
        let c = ConvexBody::minkowski_combine(&b0, &b1, mu).unwrap();
        let rhs = (1.0 - mu) * b0.area().sqrt() + mu * b1.area().sqrt();
        prop_assert!(c.area().sqrt() >= rhs - 1e-9);
    }

    #[test]
    fn mean_width_is_linear(s0 in any::<u64>(), r in 0.1f64..2.0, mu in mu_strategy()) {
        let b0 = polygon(s0, 7);
        let b1 = ConvexBody::disc(Vec2::new(0.2, -0.4), r).unwrap();
        let c = ConvexBody::minkowski_combine(&b0, &b1, mu).unwrap();
        let lin = (1.0 - mu) * b0.mean_width() + mu * b1.mean_width();
        prop_assert!((c.mean_width() - lin).abs() <= 1e-9);
    }

    #[test]
    fn rotation_mean_keeps_mean_width(s in any::<u64>(), n in 3usize..10, m in 1usize..40) {
        let b = polygon(s, n);
        let r = b.rotation_mean(m).unwrap();
        prop_assert!((r.mean_width() - b.mean_width()).abs() <= 1e-9);
    }

    #[test]
    fn hausdorff_is_a_metric(s0 in any::<u64>(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b, c) = (polygon(s0, 5), polygon(s1, 8), polygon(s2, 4));
        let d = |x: &ConvexBody, y: &ConvexBody| ConvexBody::hausdorff_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &a) == 0.0);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }

    #[test]
    fn urysohn_containment(s in any::<u64>(), n in 3usize..12) {
        let b = polygon(s, n);
        prop_assert!((b.area() / PI).sqrt() <= b.mean_width() / 2.0 + 1e-12);
    }

    #[test]
    fn superlevel_measure_is_non_increasing(s in any::<u64>(), a in -1.0f64..1.0) {
        let body = polygon(s, 6).scale(4.0).unwrap();
        let u = GridFunction::from_fn(Domain::new(&body, 0.05).unwrap(), |x| (2.0 - x.norm2() + a * x.x).max(0.0));
        let top = u.max_value();
        let mut last = f64::INFINITY;
        for k in 0..=20 {
            let m = u.superlevel_measure(top * k as f64 / 20.0);
            prop_assert!(m <= last);
            last = m;
        }
    }

    #[test]
    fn sampling_is_exact_at_nodes_and_bounded(fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
        let d = Domain::new(&ConvexBody::square(1.0).unwrap(), 0.125).unwrap();
        let u = GridFunction::from_fn(d, |x| (x.x * 3.0).sin() + x.y * x.y);
        let lat = *u.lattice();
        let (i, j) = (lat.nx / 2, lat.ny / 2);
        prop_assert_eq!(u.sample(lat.node(i, j)), u.value(i, j));
        let x = lat.node(i, j) + Vec2::new(fx, fy) * lat.h;
        let corners = [u.value(i, j), u.value(i + 1, j), u.value(i, j + 1), u.value(i + 1, j + 1)];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = u.sample(x);
        prop_assert!(v >= lo - 1e-15 && v <= hi + 1e-15);
    }
}

#[test]
fn hadwiger_sequence_for_the_square() {
    let q = ConvexBody::square(1.0).unwrap();
    let ball = ConvexBody::disc(Vec2::ZERO, 4.0 / PI).unwrap();
    let d: Vec<f64> = [4, 8, 16, 32, 64]
        .iter()
        .map(|&m| ConvexBody::hausdorff_distance(&q.rotation_mean(m).unwrap(), &ball).unwrap())
        .collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    assert!(d[4] <= 0.01);
}
