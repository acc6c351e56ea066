//! Mean-width rearrangement: rotation means `Ω♯_m` of the domain and the
//! equal-weight (p, 1/m)-convolution `u♯_{p,m}` of rotated copies of `u`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convolve::{convolve_multi, ConvolutionResult, Intermediate};
use crate::error::{arg, Result};
use crate::exec::Exec;
use crate::field::{Domain, GridFunction};
use crate::geometry::{ConvexBody, Rotation, Vec2};
use crate::means::PMeanSpec;

/// Fields on a new body with the same spacing; values at inside nodes from
/// `value`, zero elsewhere.
fn resampled(body: &ConvexBody, h: f64, value: impl Fn(Vec2) -> f64) -> Result<GridFunction> {
    let domain = Domain::new(body, h)?;
    let lat = *domain.lattice();
    let values = (0..lat.len())
        .map(|k| {
            if domain.kind_at(k).is_inside() {
                value(lat.node(k % lat.nx, k / lat.nx))
            } else {
                0.0
            }
        })
        .collect();
    GridFunction::from_values(domain, values)
}

/// `u_ρ(x) = u(ρ⁻¹x)` on `ρΩ`. Quarter turns of a lattice-symmetric field
/// permute nodes exactly.
pub fn rotate_field(u: &GridFunction, rot: &Rotation) -> Result<GridFunction> {
    let inv = rot.inverse();
    resampled(&u.body().rotate(rot), u.h(), |x| u.sample(inv.apply(x)))
}

pub fn translate_field(u: &GridFunction, t: Vec2) -> Result<GridFunction> {
    resampled(&u.body().translate(t), u.h(), |x| u.sample(x - t))
}

/// `u` moved so that its body's centroid is the origin. Rotations act about
/// the origin, so this keeps the rotated copies overlapping.
pub fn center_field(u: &GridFunction) -> Result<GridFunction> {
    let c = u.body().centroid();
    if c == Vec2::ZERO {
        return Ok(u.clone());
    }
    translate_field(u, -c)
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return arg("m must be at least 1");
    }
    Ok(())
}

/// `Ω♯_m`: the rotation mean of the centered body with equally spaced angles.
pub fn sharp_domain(body: &ConvexBody, m: usize) -> Result<ConvexBody> {
    check_m(m)?;
    body.translate(-body.centroid()).rotation_mean(m)
}

/// `Ω♯`: the disc centered at the origin whose diameter is the mean width.
pub fn sharp_ball(body: &ConvexBody) -> Result<ConvexBody> {
    ConvexBody::disc_on(Vec2::ZERO, body.mean_width() / 2.0, body.grid())
}

/// `Ω⋆`: the disc centered at the origin with the same area.
pub fn schwarz_ball(body: &ConvexBody) -> Result<ConvexBody> {
    ConvexBody::disc_on(Vec2::ZERO, (body.area() / PI).sqrt(), body.grid())
}

/// `u♯_{p,m}` on `Ω♯_m`: the centered field rotated by `2π(i−1)/m`,
/// `i = 1..m`, and combined by the equal-weight (p, 1/m)-convolution.
pub fn sharp_rearrangement(
    u: &GridFunction,
    p: f64,
    m: usize,
    h_out: Option<f64>,
    exec: Exec,
) -> Result<ConvolutionResult> {
    if m < 2 {
        return arg("the rearrangement needs m >= 2");
    }
    if !(p > 0.0 && p < 1.0) {
        return arg(format!("the rearrangement needs p in (0,1), got {p}"));
    }
    let centered = center_field(u)?;
    let fields = exec
        .map(m, |i| rotate_field(&centered, &Rotation::new(2.0 * PI * i as f64 / m as f64)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let spec = PMeanSpec::equal(p, m)?;
    convolve_multi(&fields, &spec, h_out.or(Some(u.h())), Intermediate::Output, exec)
}

#[derive(Clone, Debug)]
pub struct RearrangementStage {
    pub m: usize,
    pub domain: ConvexBody,
    pub result: ConvolutionResult,
}

/// `u♯_{p,m}` for an increasing list of `m`.
#[derive(Clone, Debug)]
pub struct RearrangementRun {
    pub source: GridFunction,
    pub p: f64,
    pub stages: Vec<RearrangementStage>,
    /// `Ω♯`, the limit ball.
    pub ball: ConvexBody,
}

impl RearrangementRun {
    pub fn new(u: &GridFunction, p: f64, m_list: &[usize], h_out: Option<f64>, exec: Exec) -> Result<Self> {
        if m_list.windows(2).any(|w| w[0] >= w[1]) {
            return arg("m_list must be strictly increasing");
        }
        let stages = m_list
            .iter()
            .map(|&m| {
                let result = sharp_rearrangement(u, p, m, h_out, exec)?;
                Ok(RearrangementStage {
                    m,
                    domain: result.field.body().clone(),
                    result,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: u.clone(),
            p,
            stages,
            ball: sharp_ball(u.body())?,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub m_list: Vec<usize>,
    /// Mean width of each `Ω♯_m` minus that of `Ω`.
    pub mean_width_drift: Vec<f64>,
    /// `dH(Ω♯_m, Ω♯)`.
    pub hausdorff_to_ball: Vec<f64>,
    /// Sup distance between consecutive `u♯_{p,m}`, both read on the grid of
    /// `Ω♯`.
    pub consecutive_sup_diff: Vec<f64>,
    pub slack: f64,
    /// Each sup difference is below the previous one or below `slack`.
    pub pass: bool,
}

/// Consecutive differences of a run, resampled on the grid of `Ω♯`.
pub fn rearrangement_convergence(run: &RearrangementRun) -> Result<ConvergenceReport> {
    if run.stages.len() < 3 {
        return arg("convergence needs at least three values of m");
    }
    let w = run.source.body().mean_width();
    let ball_domain = Domain::new(&run.ball, run.source.h())?;
    let lat = *ball_domain.lattice();
    let nodes: Vec<Vec2> = (0..lat.len())
        .filter(|&k| ball_domain.kind_at(k).in_closure())
        .map(|k| lat.node(k % lat.nx, k / lat.nx))
        .collect();
    let mut sup = Vec::new();
    for pair in run.stages.windows(2) {
        let (a, b) = (&pair[0].result.field, &pair[1].result.field);
        sup.push(nodes.iter().map(|&x| (a.sample(x) - b.sample(x)).abs()).fold(0.0, f64::max));
    }
    let slack = run
        .stages
        .iter()
        .map(|s| s.result.interpolation_slack)
        .fold(0.0, f64::max);
    let pass = sup.windows(2).all(|d| d[1] <= d[0] || d[1] <= slack);
    Ok(ConvergenceReport {
        m_list: run.stages.iter().map(|s| s.m).collect(),
        mean_width_drift: run.stages.iter().map(|s| s.domain.mean_width() - w).collect(),
        hausdorff_to_ball: run
            .stages
            .iter()
            .map(|s| ConvexBody::hausdorff_distance(&s.domain, &run.ball))
            .collect::<Result<Vec<_>>>()?,
        consecutive_sup_diff: sup,
        slack,
        pass,
    })
}

/// `|{u♯ ≥ t}| − |{u ≥ t}|` at `levels` equally spaced `t ∈ (0, max u)`.
pub fn superlevel_growth(u: &GridFunction, sharp: &GridFunction, levels: usize) -> Vec<(f64, f64)> {
    let top = u.max_value();
    (1..=levels)
        .map(|i| {
            let t = top * i as f64 / (levels + 1) as f64;
            (t, sharp.superlevel_measure(t) - u.superlevel_measure(t))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainmentReport {
    pub samples: usize,
    /// Smallest `u♯(z) − t` over sampled `z = (1/m)Σρ_i x_i` with
    /// `u(x_i) ≥ t`.
    pub min_slack: f64,
    pub pass: bool,
}

/// Spot check that `{u♯ ≥ t}` contains `(1/m)Σρ_i{u ≥ t}`. Points `x_i`
/// are drawn from the nodes of the centered field at or above a random
/// level.
pub fn level_containment_check(
    u: &GridFunction,
    sharp: &GridFunction,
    m: usize,
    samples: usize,
    seed: u64,
    slack: f64,
) -> Result<ContainmentReport> {
    check_m(m)?;
    let centered = center_field(u)?;
    let lat = *centered.lattice();
    let nodes: Vec<(Vec2, f64)> = (0..lat.len())
        .filter(|&k| centered.domain().kind_at(k).is_inside())
        .map(|k| (lat.node(k % lat.nx, k / lat.nx), centered.values()[k]))
        .collect();
    if nodes.is_empty() {
        return arg("field has no inside nodes");
    }
    let top = centered.max_value();
    let rots: Vec<Rotation> = (0..m).map(|i| Rotation::new(2.0 * PI * i as f64 / m as f64)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..samples {
        let t = rng.gen_range(0.05..0.95) * top;
        let above: Vec<&(Vec2, f64)> = nodes.iter().filter(|(_, v)| *v >= t).collect();
        let z = rots
            .iter()
            .map(|r| r.apply(above[rng.gen_range(0..above.len())].0))
            .fold(Vec2::ZERO, |a, b| a + b)
            / m as f64;
        min_slack = min_slack.min(sharp.sample(z) - t);
    }
    Ok(ContainmentReport {
        samples,
        min_slack,
        pass: min_slack >= -slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_permutes_nodes() {
        let d = Domain::new(&ConvexBody::square(1.0).unwrap(), 0.25).unwrap();
        let u = GridFunction::from_fn(d, |x| (1.0 - x.x * x.x) * (1.0 - x.y * x.y) * (2.0 + x.x));
        let r = rotate_field(&u, &Rotation::new(PI / 2.0)).unwrap();
        let lat = *r.lattice();
        for j in 0..lat.ny {
            for i in 0..lat.nx {
                let x = lat.node(i, j);
                let back = Vec2::new(x.y, -x.x);
                assert_eq!(r.value(i, j), u.sample(back));
            }
        }
        let id = rotate_field(&u, &Rotation::identity()).unwrap();
        assert_eq!(id.values(), u.values());
    }

    #[test]
    fn sharp_domain_preserves_mean_width() {
        let q = ConvexBody::square(1.0).unwrap().translate(Vec2::new(0.3, -0.2));
        for m in [1, 2, 5, 8] {
            let s = sharp_domain(&q, m).unwrap();
            assert!((s.mean_width() - q.mean_width()).abs() < 1e-9);
        }
        let d = ConvexBody::disc(Vec2::ZERO, 1.0).unwrap();
        let s = sharp_domain(&d, 7).unwrap();
        assert!(ConvexBody::hausdorff_distance(&s, &d).unwrap() < 1e-12);
    }
}
