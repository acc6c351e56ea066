use std::f64::consts::PI;

use powerconv::exec::Exec;
use powerconv::field::GridFunction;
use powerconv::geometry::{ConvexBody, Vec2};
use powerconv::pde::{solve_poisson, SolveParams, SourceTerm};
use powerconv::rearrange::{
    level_containment_check, rearrangement_convergence, schwarz_ball, sharp_ball, sharp_domain,
    sharp_rearrangement, superlevel_growth, RearrangementRun,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn torsion(body: &ConvexBody, h: f64) -> GridFunction {
    solve_poisson(body, &SourceTerm::Constant(1.0), &SolveParams::new(h)).unwrap()
}

#[test]
fn square_rotation_means_approach_the_ball() {
    let q = ConvexBody::square(1.0).unwrap();
    let ball = ConvexBody::disc(Vec2::ZERO, 4.0 / PI).unwrap();
    let d: Vec<f64> = [4, 8, 16, 32, 64]
        .iter()
        .map(|&m| ConvexBody::hausdorff_distance(&sharp_domain(&q, m).unwrap(), &ball).unwrap())
        .collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
    assert!(d[4] <= 0.01, "{d:?}");
    assert_eq!(sharp_domain(&q, 1).unwrap().shape(), q.shape());
    assert!(ConvexBody::hausdorff_distance(&sharp_ball(&q).unwrap(), &ball).unwrap() < 1e-12);
}

#[test]
fn urysohn_containment() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bodies = vec![ConvexBody::square(1.0).unwrap()];
    for _ in 0..20 {
        bodies.push(ConvexBody::random_polygon(&mut rng, 7).unwrap());
    }
    for b in bodies {
        let star = schwarz_ball(&b).unwrap();
        let sharp = sharp_ball(&b).unwrap();
        assert!(star.mean_width() <= sharp.mean_width() + 1e-12);
    }
}

#[test]
fn disc_torsion_is_a_fixed_point() {
    let h = 1.0 / 16.0;
    let u = torsion(&ConvexBody::disc(Vec2::ZERO, 1.0).unwrap(), h);
    for m in [2, 3, 5] {
        let r = sharp_rearrangement(&u, 0.5, m, None, Exec::Parallel).unwrap();
        let d = r.field.max_diff_on_shared_nodes(&u).unwrap();
        assert!(d <= r.interpolation_slack, "m={m}: {d} vs {}", r.interpolation_slack);
    }
}

#[test]
fn square_rearrangement_properties() {
    let h = 1.0 / 16.0;
    let q = ConvexBody::square(1.0).unwrap();
    let u = torsion(&q, h);
    let m = 4;
    let r = sharp_rearrangement(&u, 0.5, m, None, Exec::Parallel).unwrap();
    let s = &r.field;
    assert!((s.body().mean_width() - q.mean_width()).abs() < 1e-9);
    assert!((s.max_value() - u.max_value()).abs() <= r.interpolation_slack);
    // the area budget: one layer of boundary cells
    let area_slack = s.body().perimeter() * h;
    for (t, growth) in superlevel_growth(&u, s, 20) {
        assert!(growth >= -area_slack, "t={t}: {growth}");
    }
    let c = level_containment_check(&u, s, m, 200, 5, r.interpolation_slack).unwrap();
    assert!(c.pass, "{c:?}");
    // zero on the boundary, positive inside
    let lat = *s.lattice();
    for k in 0..lat.len() {
        let kind = s.domain().kind_at(k);
        if kind.is_inside() && r.argmax[k].is_some() {
            assert!(s.values()[k] > 0.0);
        } else {
            assert_eq!(s.values()[k], 0.0);
        }
    }
}

#[test]
fn square_rearrangement_converges() {
    let h = 1.0 / 16.0;
    let u = torsion(&ConvexBody::square(1.0).unwrap(), h);
    let run = RearrangementRun::new(&u, 0.5, &[2, 4, 8, 16], None, Exec::Parallel).unwrap();
    let rep = rearrangement_convergence(&run).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.mean_width_drift.iter().all(|d| d.abs() < 1e-9));
    assert!(rep.hausdorff_to_ball[3] < rep.hausdorff_to_ball[0]);
}
