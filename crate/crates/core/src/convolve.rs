//! The (p, μ)-convolution `sup { M_p(u₀(x₀), u₁(x₁); μ) : x = (1−μ)x₀ + μx₁ }`
//! of grid functions and its structural diagnostics.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{arg, Result};
use crate::exec::Exec;
use crate::field::{Domain, GridFunction};
use crate::geometry::{ConvexBody, Vec2};
use crate::means::{mean_kernel, PMeanSpec};

/// Relative widening of the chord-derived scan range; the membership test
/// inside the range is what decides candidates.
const RANGE_PAD: f64 = 1e-9;

/// The maximizing splitting `x̄ = (1−μ)x₀ + μx₁` of one target node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArgmaxPair {
    pub x0: Vec2,
    pub x1: Vec2,
}

#[derive(Clone, Debug)]
pub struct ConvolutionResult {
    pub field: GridFunction,
    /// Per lattice node of `field`; `None` off the open body and at starved
    /// nodes.
    pub argmax: Vec<Option<ArgmaxPair>>,
    pub spec: PMeanSpec,
    /// Inside nodes whose candidate set was empty. They lie within a cell of
    /// the boundary and are assigned 0, the boundary value.
    pub starved: usize,
    /// `2·L·h_out` with `L` the larger finite-difference Lipschitz constant
    /// of the inputs.
    pub interpolation_slack: f64,
}

impl ConvolutionResult {
    pub fn mu(&self) -> f64 {
        self.spec.weights()[1]
    }
}

/// Which lattice the intermediate results of an m-ary fold live on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Intermediate {
    /// Every fold step on the output spacing.
    Output,
    /// Intermediate steps on `h_out / k`. With equal weights `1/3`, `k = 2`
    /// makes every pair midpoint a node, so the fold reproduces the direct
    /// three-way maximization.
    Refined(u32),
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return arg(format!("convolution exponent must lie in [0,1), got {p}"));
    }
    Ok(())
}

/// Monotone surrogate of `M_p` whose maximizer is the maximizer of `M_p`.
#[inline]
fn power(v: f64, p: f64) -> f64 {
    if p == 0.0 {
        v.ln()
    } else {
        v.powf(p)
    }
}

struct Scan<'a> {
    u0: &'a GridFunction,
    u1: &'a GridFunction,
    mu: f64,
    p: f64,
    pow0: Vec<f64>,
    pow1: Vec<f64>,
}

impl Scan<'_> {
    /// Surrogate power of `u₁` at `x₁`, reusing node powers when `x₁` is a
    /// lattice node.
    #[inline]
    fn pow1_at(&self, x1: Vec2) -> (f64, f64) {
        let lat = self.u1.lattice();
        let (fx, fy) = lat.locate(x1);
        if fx.fract() == 0.0 && fy.fract() == 0.0 && fx >= 0.0 && fy >= 0.0 {
            let (i, j) = (fx as usize, fy as usize);
            if i < lat.nx && j < lat.ny {
                let k = lat.index(i, j);
                return (self.u1.values()[k], self.pow1[k]);
            }
        }
        let b = self.u1.sample(x1);
        (b, power(b, self.p))
    }

    /// Row-major scan over the closed nodes `x₀` of `Ω̄₀` whose partner
    /// `x₁` lies in `Ω̄₁`; the first strict maximum wins.
    fn best(&self, xbar: Vec2) -> Option<(ArgmaxPair, f64)> {
        let lat0 = self.u0.lattice();
        let body1 = self.u1.body();
        let shape1 = body1.shape();
        let (mu, nu) = (self.mu, 1.0 - self.mu);
        let h0 = lat0.h;
        let mut best: Option<(f64, usize, Vec2)> = None;
        for j in 0..lat0.ny {
            let y0 = lat0.node(0, j).y;
            let y1 = (xbar.y - nu * y0) / mu;
            let Some((t0, t1)) = shape1.line_chord(Vec2::new(0.0, y1), Vec2::new(1.0, 0.0)) else {
                continue;
            };
            let pad = RANGE_PAD * (1.0 + t0.abs().max(t1.abs()));
            let lo = (xbar.x - mu * (t1 + pad)) / nu;
            let hi = (xbar.x - mu * (t0 - pad)) / nu;
            let x_origin = lat0.node(0, j).x;
            let i_lo = ((lo - x_origin) / h0).ceil().max(0.0) as usize;
            let i_hi = ((hi - x_origin) / h0).floor();
            if i_hi < 0.0 {
                continue;
            }
            let i_hi = (i_hi as usize).min(lat0.nx - 1);
            for i in i_lo..=i_hi {
                let k0 = lat0.index(i, j);
                if !self.u0.domain().kind_at(k0).in_closure() {
                    continue;
                }
                let x0 = lat0.node(i, j);
                let x1 = (xbar - x0 * nu) / mu;
                if !body1.contains(x1) {
                    continue;
                }
                let (_, b) = self.pow1_at(x1);
                let key = nu * self.pow0[k0] + mu * b;
                if best.is_none_or(|(k, _, _)| key > k) {
                    best = Some((key, k0, x1));
                }
            }
        }
        best.map(|(_, k0, x1)| {
            let x0 = lat0.node(k0 % lat0.nx, k0 / lat0.nx);
            let a = self.u0.values()[k0];
            let (b, _) = self.pow1_at(x1);
            let value = mean_kernel(&[a, b], &[nu, mu], self.p);
            (ArgmaxPair { x0, x1 }, value)
        })
    }
}

/// Binary (p, μ)-convolution on the grid of spacing `h_out` over
/// `(1−μ)Ω₀ + μΩ₁`. Candidates are the closed nodes `x₀` of `Ω̄₀` with
/// `x₁ = (x̄ − (1−μ)x₀)/μ` read bilinearly from `u₁`.
pub fn convolve_binary(
    u0: &GridFunction,
    u1: &GridFunction,
    mu: f64,
    p: f64,
    h_out: Option<f64>,
    exec: Exec,
) -> Result<ConvolutionResult> {
    check_p(p)?;
    let spec = PMeanSpec::binary(p, mu)?;
    if u0.values().iter().chain(u1.values()).any(|&v| !(v >= 0.0)) {
        return arg("convolution inputs must be non-negative");
    }
    let h_out = h_out.unwrap_or(u0.h().max(u1.h()));
    let body = ConvexBody::minkowski_combine(u0.body(), u1.body(), mu)?;
    let domain = Domain::new(&body, h_out)?;
    convolve_onto(u0, u1, spec, domain, exec)
}

fn convolve_onto(
    u0: &GridFunction,
    u1: &GridFunction,
    spec: PMeanSpec,
    domain: Arc<Domain>,
    exec: Exec,
) -> Result<ConvolutionResult> {
    let (p, mu) = (spec.p(), spec.weights()[1]);
    let scan = Scan {
        u0,
        u1,
        mu,
        p,
        pow0: u0.values().iter().map(|&v| power(v, p)).collect(),
        pow1: u1.values().iter().map(|&v| power(v, p)).collect(),
    };
    let lat = *domain.lattice();
    let results = exec.map(lat.len(), |k| {
        if !domain.kind_at(k).is_inside() {
            return None;
        }
        Some(scan.best(lat.node(k % lat.nx, k / lat.nx)))
    });
    let mut values = vec![0.0; lat.len()];
    let mut argmax = vec![None; lat.len()];
    let mut starved = 0;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Some(Some((pair, v))) => {
                values[k] = v;
                argmax[k] = Some(pair);
            }
            Some(None) => starved += 1,
            None => {}
        }
    }
    let slack = 2.0 * u0.lipschitz_estimate().max(u1.lipschitz_estimate()) * lat.h;
    Ok(ConvolutionResult {
        field: GridFunction::from_values(domain, values)?,
        argmax,
        spec,
        starved,
        interpolation_slack: slack,
    })
}

/// m-ary convolution by the left fold `v₁ = u₁`,
/// `v_k = convolve_binary(v_{k−1}, u_k, w_k/(w₁+…+w_k))`. The argmax map of
/// the result refers to the last fold step.
pub fn convolve_multi(
    fields: &[GridFunction],
    weights: &PMeanSpec,
    h_out: Option<f64>,
    intermediate: Intermediate,
    exec: Exec,
) -> Result<ConvolutionResult> {
    let m = fields.len();
    if m < 2 {
        return arg("an m-ary convolution needs at least two fields");
    }
    if weights.len() != m {
        return arg(format!("{m} fields for {} weights", weights.len()));
    }
    let p = weights.p();
    check_p(p)?;
    let h_out = h_out.unwrap_or_else(|| fields.iter().map(|f| f.h()).fold(0.0, f64::max));
    let h_mid = match intermediate {
        Intermediate::Output => h_out,
        Intermediate::Refined(k) if k >= 1 => h_out / k as f64,
        Intermediate::Refined(_) => return arg("refinement factor must be at least 1"),
    };
    let w = weights.weights();
    let mut acc = fields[0].clone();
    let mut total = w[0];
    let mut slack: f64 = 0.0;
    let mut starved = 0;
    for k in 1..m {
        total += w[k];
        let mu = (w[k] / total).min(1.0 - f64::EPSILON);
        let h = if k + 1 == m { h_out } else { h_mid };
        let step = convolve_binary(&acc, &fields[k], mu, p, Some(h), exec)?;
        slack = slack.max(step.interpolation_slack);
        starved += step.starved;
        if k + 1 == m {
            return Ok(ConvolutionResult {
                field: step.field,
                argmax: step.argmax,
                spec: weights.clone(),
                starved,
                interpolation_slack: slack,
            });
        }
        acc = step.field;
    }
    unreachable!("m ≥ 2 returns inside the fold")
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotonicityReport {
    pub p_list: Vec<f64>,
    /// Largest `u_{p_i,μ} − u_{p_{i+1},μ}` over nodes and consecutive pairs.
    pub max_violation: f64,
    pub worst_node: Option<Vec2>,
    pub nodes: usize,
    pub pass: bool,
}

/// Allowed floating-point drift in the pointwise monotonicity of the
/// convolution in `p`.
pub const MONOTONE_DRIFT: f64 = 1e-12;

/// `u_{p,μ} ≤ u_{q,μ}` for `p ≤ q` at every node of a shared target grid.
pub fn monotone_in_p_check(
    u0: &GridFunction,
    u1: &GridFunction,
    mu: f64,
    p_list: &[f64],
    h_out: Option<f64>,
    exec: Exec,
) -> Result<MonotonicityReport> {
    if p_list.windows(2).any(|w| w[0] > w[1]) {
        return arg("p_list must be ascending");
    }
    let runs = p_list
        .iter()
        .map(|&p| convolve_binary(u0, u1, mu, p, h_out, exec))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = (f64::NEG_INFINITY, None);
    let nodes = runs.first().map_or(0, |r| r.field.domain().inside_count());
    for pair in runs.windows(2) {
        let (lo, hi) = (&pair[0].field, &pair[1].field);
        let lat = *lo.lattice();
        for (k, (a, b)) in lo.values().iter().zip(hi.values()).enumerate() {
            if a - b > worst.0 {
                worst = (a - b, Some(lat.node(k % lat.nx, k / lat.nx)));
            }
        }
    }
    let max_violation = if runs.len() < 2 { 0.0 } else { worst.0.max(0.0) };
    Ok(MonotonicityReport {
        p_list: p_list.to_vec(),
        max_violation,
        worst_node: if max_violation > 0.0 { worst.1 } else { None },
        nodes,
        pass: max_violation <= MONOTONE_DRIFT,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LagrangeReport {
    pub tested: usize,
    /// Nodes near `∂Ω_μ`, pairs too close to `∂Ω₀`, `∂Ω₁` for central
    /// differences, and pairs with vanishing gradients.
    pub excluded: usize,
    pub max_mismatch: f64,
    pub fraction_below: f64,
    pub threshold: f64,
}

pub const LAGRANGE_THRESHOLD: f64 = 0.1;

fn central_gradient(u: &GridFunction, x: Vec2) -> Vec2 {
    let h = u.h();
    let dx = u.sample(x + Vec2::new(h, 0.0)) - u.sample(x - Vec2::new(h, 0.0));
    let dy = u.sample(x + Vec2::new(0.0, h)) - u.sample(x - Vec2::new(0.0, h));
    Vec2::new(dx, dy) / (2.0 * h)
}

/// First-order condition at the recorded maximizers:
/// `u₀(x₀)^{p−1}Du₀(x₀) = u₁(x₁)^{p−1}Du₁(x₁)`. Tested at target nodes
/// more than `4h_out` inside `Ω_μ` whose pair is more than `2h` inside
/// both bodies. Pairs where both sides are below `gradient_floor` times the
/// largest tested magnitude sit at a common critical point and are excluded.
pub fn lagrange_diagnostic(
    result: &ConvolutionResult,
    u0: &GridFunction,
    u1: &GridFunction,
    p: f64,
    gradient_floor: f64,
) -> Result<LagrangeReport> {
    if !(p > 0.0 && p < 1.0) {
        return arg(format!("the Lagrange diagnostic needs p in (0,1), got {p}"));
    }
    let domain = result.field.domain();
    let lat = *domain.lattice();
    let shape = domain.body().shape();
    let margin = |u: &GridFunction, x: Vec2| -u.body().shape().signed_distance(x) > 2.0 * u.h();
    let mut pairs = Vec::new();
    let mut excluded = 0;
    for (k, pair) in result.argmax.iter().enumerate() {
        let Some(pair) = pair else { continue };
        let x = lat.node(k % lat.nx, k / lat.nx);
        if -shape.signed_distance(x) <= 4.0 * lat.h || !margin(u0, pair.x0) || !margin(u1, pair.x1) {
            excluded += 1;
            continue;
        }
        let g0 = central_gradient(u0, pair.x0) * u0.sample(pair.x0).powf(p - 1.0);
        let g1 = central_gradient(u1, pair.x1) * u1.sample(pair.x1).powf(p - 1.0);
        pairs.push((g0, g1));
    }
    let scale = pairs
        .iter()
        .map(|(a, b)| a.norm().max(b.norm()))
        .fold(0.0, f64::max);
    let mut mismatches = Vec::new();
    for (g0, g1) in pairs {
        let m = g0.norm().max(g1.norm());
        if m <= gradient_floor * scale {
            excluded += 1;
            continue;
        }
        mismatches.push((g0 - g1).norm() / m);
    }
    let tested = mismatches.len();
    let below = mismatches.iter().filter(|&&m| m < LAGRANGE_THRESHOLD).count();
    Ok(LagrangeReport {
        tested,
        excluded,
        max_mismatch: mismatches.iter().copied().fold(0.0, f64::max),
        fraction_below: if tested > 0 { below as f64 / tested as f64 } else { 0.0 },
        threshold: LAGRANGE_THRESHOLD,
    })
}
