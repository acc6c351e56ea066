use powerconv::convolve::{
    convolve_binary, convolve_multi, lagrange_diagnostic, monotone_in_p_check, Intermediate,
};
use powerconv::exec::Exec;
use powerconv::field::{Domain, GridFunction};
use powerconv::geometry::{ConvexBody, Vec2};
use powerconv::means::{p_mean, p_mean_multi, PMeanSpec};
use powerconv::pde::{solve_poisson, SolveParams, SourceTerm};

fn torsion(body: &ConvexBody, h: f64) -> GridFunction {
    solve_poisson(body, &SourceTerm::Constant(1.0), &SolveParams::new(h)).unwrap()
}

fn square() -> ConvexBody {
    ConvexBody::square(1.0).unwrap()
}

fn disc(r: f64) -> ConvexBody {
    ConvexBody::disc(Vec2::ZERO, r).unwrap()
}

fn triangle() -> ConvexBody {
    ConvexBody::polygon(&[Vec2::new(-1.0, -0.8), Vec2::new(1.0, -0.6), Vec2::new(0.1, 1.0)]).unwrap()
}

fn closed_nodes(u: &GridFunction) -> Vec<(Vec2, f64)> {
    let lat = *u.lattice();
    let mut out = Vec::new();
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            if u.kind(i, j).in_closure() {
                out.push((lat.node(i, j), u.value(i, j)));
            }
        }
    }
    out
}

/// Direct double loop over target nodes and closed nodes of `Ω̄₀`.
fn binary_oracle(u0: &GridFunction, u1: &GridFunction, mu: f64, p: f64, target: &GridFunction) -> Vec<f64> {
    let lat = *target.lattice();
    let nodes0 = closed_nodes(u0);
    let mut out = vec![0.0; lat.len()];
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            if !target.kind(i, j).is_inside() {
                continue;
            }
            let x = lat.node(i, j);
            let mut best: Option<f64> = None;
            for &(x0, a) in &nodes0 {
                let x1 = (x - x0 * (1.0 - mu)) / mu;
                if !u1.body().contains(x1) {
                    continue;
                }
                let v = p_mean(a, u1.sample(x1), mu, p).unwrap();
                if best.is_none_or(|b| v > b) {
                    best = Some(v);
                }
            }
            out[lat.index(i, j)] = best.unwrap_or(0.0);
        }
    }
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn binary_matches_double_loop_oracle() {
    let h = 0.125;
    let u0 = torsion(&square(), h);
    let u1 = torsion(&disc(0.8), h);
    for mu in [0.5, 0.3] {
        for p in [0.0, 1.0 / 3.0, 0.5] {
            let r = convolve_binary(&u0, &u1, mu, p, None, Exec::Sequential).unwrap();
            let oracle = binary_oracle(&u0, &u1, mu, p, &r.field);
            let d = max_abs_diff(r.field.values(), &oracle);
            assert!(d <= 1e-12, "μ={mu} p={p}: {d}");
        }
    }
}

#[test]
fn multi_matches_triple_loop_oracle() {
    let h = 0.25;
    let fields = [torsion(&square(), h), torsion(&disc(1.0), h), torsion(&triangle(), h)];
    let spec = PMeanSpec::equal(0.5, 3).unwrap();
    let r = convolve_multi(&fields, &spec, Some(h), Intermediate::Refined(2), Exec::Sequential).unwrap();
    let lat = *r.field.lattice();
    let n0 = closed_nodes(&fields[0]);
    let n1 = closed_nodes(&fields[1]);
    let mut worst: f64 = 0.0;
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            if !r.field.kind(i, j).is_inside() {
                continue;
            }
            let x = lat.node(i, j);
            let mut best: Option<f64> = None;
            for &(x0, a) in &n0 {
                for &(x1, b) in &n1 {
                    let x2 = x * 3.0 - x0 - x1;
                    if !fields[2].body().contains(x2) {
                        continue;
                    }
                    let v = p_mean_multi(&[a, b, fields[2].sample(x2)], &spec).unwrap();
                    if best.is_none_or(|c| v > c) {
                        best = Some(v);
                    }
                }
            }
            worst = worst.max((best.unwrap_or(0.0) - r.field.value(i, j)).abs());
        }
    }
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn two_field_multi_is_binary() {
    let h = 0.125;
    let u0 = torsion(&square(), h);
    let u1 = torsion(&disc(0.8), h);
    let spec = PMeanSpec::binary(0.5, 0.3).unwrap();
    let m = convolve_multi(&[u0.clone(), u1.clone()], &spec, None, Intermediate::Output, Exec::Sequential).unwrap();
    let b = convolve_binary(&u0, &u1, 0.3, 0.5, None, Exec::Sequential).unwrap();
    assert_eq!(m.field.values(), b.field.values());
}

#[test]
fn parallel_equals_sequential() {
    let h = 0.125;
    let u0 = torsion(&square(), h);
    let u1 = torsion(&disc(0.8), h);
    let a = convolve_binary(&u0, &u1, 0.3, 0.5, None, Exec::Sequential).unwrap();
    let b = convolve_binary(&u0, &u1, 0.3, 0.5, None, Exec::Parallel).unwrap();
    assert_eq!(a.field.values(), b.field.values());
    assert_eq!(a.argmax, b.argmax);
}

#[test]
fn half_concave_torsion_is_a_fixed_point() {
    let h = 1.0 / 16.0;
    let u = torsion(&disc(1.0), h);
    let r = convolve_binary(&u, &u, 0.5, 0.5, None, Exec::Parallel).unwrap();
    let d = r.field.max_diff_on_shared_nodes(&u).unwrap();
    assert!(d <= 2e-9, "{d}");
}

#[test]
fn argmax_pairs_are_consistent_and_positive() {
    let h = 0.125;
    let u0 = torsion(&square(), h);
    let u1 = torsion(&disc(0.8), h);
    let mu = 0.3;
    let r = convolve_binary(&u0, &u1, mu, 0.5, None, Exec::Parallel).unwrap();
    let lat = *r.field.lattice();
    let mut inside = 0;
    for (k, pair) in r.argmax.iter().enumerate() {
        let x = lat.node(k % lat.nx, k / lat.nx);
        if r.field.domain().kind_at(k).is_inside() {
            inside += 1;
            let pair = pair.expect("no starved nodes at this resolution");
            assert!((pair.x0 * (1.0 - mu) + pair.x1 * mu - x).norm() <= 1e-9 * h);
            let a = u0.sample(pair.x0);
            let b = u1.sample(pair.x1);
            assert_eq!(r.field.values()[k], p_mean(a, b, mu, 0.5).unwrap());
            assert!(r.field.values()[k] > 0.0);
            // hypograph identity for p = 1/2: (x, u^p) is the same combination
            let lhs = r.field.values()[k].sqrt();
            assert!((lhs * lhs - r.field.values()[k]).abs() < 1e-15);
            let comb = (1.0 - mu) * a.sqrt() + mu * b.sqrt();
            assert!((lhs - comb).abs() <= 1e-12, "{lhs} {comb}");
        } else {
            assert!(pair.is_none());
            assert_eq!(r.field.values()[k], 0.0);
        }
    }
    assert_eq!(r.starved, 0);
    assert!(inside > 0);
}

#[test]
fn geometric_mean_ignores_zero_candidates() {
    let h = 0.125;
    let u0 = torsion(&square(), h);
    let zero = GridFunction::zeros(u0.domain().clone());
    let r = convolve_binary(&zero, &u0, 0.5, 0.0, None, Exec::Sequential).unwrap();
    assert!(r.field.values().iter().all(|&v| v == 0.0));
}

#[test]
fn dominates_every_candidate_pair() {
    let h = 0.125;
    let u0 = torsion(&square(), h);
    let u1 = torsion(&disc(0.8), h);
    let mu = 0.5;
    let r = convolve_binary(&u0, &u1, mu, 0.5, None, Exec::Parallel).unwrap();
    let n0 = closed_nodes(&u0);
    let n1 = closed_nodes(&u1);
    for (a_i, &(x0, a)) in n0.iter().enumerate().step_by(7) {
        for &(x1, b) in n1.iter().skip(a_i % 5).step_by(5) {
            let x = x0 * (1.0 - mu) + x1 * mu;
            let lhs = r.field.sample(x);
            let rhs = p_mean(a, b, mu, 0.5).unwrap();
            assert!(lhs >= rhs - r.interpolation_slack, "{lhs} < {rhs} at {x:?}");
        }
    }
}

#[test]
fn identical_inputs_dominate_the_input() {
    let h = 0.125;
    let u = torsion(&triangle(), h);
    let r = convolve_binary(&u, &u, 0.4, 0.5, Some(h), Exec::Parallel).unwrap();
    let lat = *u.lattice();
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            if u.kind(i, j).is_inside() {
                assert!(r.field.sample(lat.node(i, j)) >= u.value(i, j) - r.interpolation_slack);
            }
        }
    }
}

#[test]
fn translation_equivariance() {
    let h = 0.125;
    let (b0, b1) = (square(), disc(0.8));
    let (u0, u1) = (torsion(&b0, h), torsion(&b1, h));
    let (t0, t1) = (Vec2::new(2.0 * h, 0.0), Vec2::new(0.0, 4.0 * h));
    let shifted = |u: &GridFunction, t: Vec2| {
        let d = Domain::new(&u.body().translate(t), h).unwrap();
        GridFunction::from_fn(d, |x| u.sample(x - t))
    };
    let mu = 0.5;
    let r = convolve_binary(&u0, &u1, mu, 0.5, None, Exec::Parallel).unwrap();
    let s = convolve_binary(&shifted(&u0, t0), &shifted(&u1, t1), mu, 0.5, None, Exec::Parallel).unwrap();
    let shift = t0 * (1.0 - mu) + t1 * mu;
    let lat = *r.field.lattice();
    for j in 0..lat.ny {
        for i in 0..lat.nx {
            if r.field.kind(i, j).is_inside() {
                let x = lat.node(i, j);
                assert!((s.field.sample(x + shift) - r.field.value(i, j)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn monotone_in_p_on_torsion_pair() {
    let h = 0.125;
    let u0 = torsion(&square(), h);
    let u1 = torsion(&disc(1.0), h);
    let r = monotone_in_p_check(&u0, &u1, 0.5, &[0.0, 1.0 / 3.0, 0.5], None, Exec::Parallel).unwrap();
    assert!(r.pass, "{r:?}");
    let single = monotone_in_p_check(&u0, &u1, 0.5, &[0.5], None, Exec::Parallel).unwrap();
    assert!(single.pass);
    assert!(monotone_in_p_check(&u0, &u1, 0.5, &[0.5, 0.0], None, Exec::Parallel).is_err());
}

#[test]
fn constant_inputs_are_p_independent() {
    let h = 0.25;
    let d = Domain::new(&square(), h).unwrap();
    let c = GridFunction::from_fn(d, |_| 2.0);
    let vals: Vec<Vec<f64>> = [0.0, 0.5, 0.9]
        .iter()
        .map(|&p| convolve_binary(&c, &c, 0.5, p, None, Exec::Sequential).unwrap().field.values().to_vec())
        .collect();
    assert_eq!(vals[0], vals[1]);
    assert_eq!(vals[1], vals[2]);
}

#[test]
fn rejects_exponents_outside_range() {
    let u = torsion(&square(), 0.25);
    assert!(convolve_binary(&u, &u, 0.5, 1.0, None, Exec::Sequential).is_err());
    assert!(convolve_binary(&u, &u, 0.5, -0.1, None, Exec::Sequential).is_err());
}

#[test]
fn lagrange_condition_on_symmetric_pair() {
    let h = 1.0 / 16.0;
    let u = torsion(&disc(1.0), h);
    let r = convolve_binary(&u, &u, 0.5, 0.5, None, Exec::Parallel).unwrap();
    let rep = lagrange_diagnostic(&r, &u, &u, 0.5, 1e-3).unwrap();
    assert!(rep.tested > 0 && rep.excluded > 0);
    assert!(rep.max_mismatch < 1e-6, "{rep:?}");
}
