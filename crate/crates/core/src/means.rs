//! Weighted power means and the exponent arithmetic built on them.

use serde::Serialize;

use crate::error::{arg, Result};
use crate::field::GridFunction;
use crate::geometry::Vec2;

/// Tolerance on `Σμ_i = 1`.
pub const WEIGHT_TOL: f64 = 1e-12;

/// The exponent and weights of a power mean. Weights are positive and sum
/// to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PMeanSpec {
    p: f64,
    weights: Vec<f64>,
}

impl PMeanSpec {
    pub fn new(p: f64, weights: Vec<f64>) -> Result<Self> {
        if p.is_nan() {
            return arg("p must not be NaN");
        }
        if weights.is_empty() {
            return arg("at least one weight is required");
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return arg("weights must be positive and finite");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return arg(format!("weights must sum to 1, got {total}"));
        }
        Ok(Self { p, weights })
    }

    /// The binary spec `(1−μ, μ)`.
    pub fn binary(p: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return arg(format!("μ must lie in (0,1), got {mu}"));
        }
        Self::new(p, vec![1.0 - mu, mu])
    }

    /// Equal weights `1/m`.
    pub fn equal(p: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return arg("at least one weight is required");
        }
        let w = 1.0 / m as f64;
        let mut weights = vec![w; m];
        // absorb rounding so the sum is within tolerance for any m
        let rest: f64 = weights[..m - 1].iter().sum();
        weights[m - 1] = 1.0 - rest;
        Self::new(p, weights)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Shared kernel for the binary and m-ary means; inputs already validated.
#[inline]
pub(crate) fn mean_kernel(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    if p == f64::INFINITY {
        return values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    if p == f64::NEG_INFINITY {
        return values.iter().copied().fold(f64::INFINITY, f64::min);
    }
    if p <= 0.0 && values.contains(&0.0) {
        return 0.0;
    }
    if p == 0.0 {
        return values
            .iter()
            .zip(weights)
            .map(|(&v, &w)| v.powf(w))
            .product();
    }
    let s: f64 = values.iter().zip(weights).map(|(&v, &w)| w * v.powf(p)).sum();
    s.powf(1.0 / p)
}

fn check_values(values: &[f64]) -> Result<()> {
    for &v in values {
        if v.is_nan() || v < 0.0 {
            return arg(format!("p-mean arguments must be non-negative, got {v}"));
        }
    }
    Ok(())
}

/// `M_p(a, b; μ)`: the μ-weighted p-mean of `a` and `b`, with the max, min
/// and geometric branches at `p = +∞, −∞, 0`. For `p ≤ 0` a zero argument
/// gives 0 (for `p = 0` this is the continuous extension).
pub fn p_mean(a: f64, b: f64, mu: f64, p: f64) -> Result<f64> {
    check_values(&[a, b])?;
    if !(mu > 0.0 && mu < 1.0) {
        return arg(format!("μ must lie in (0,1), got {mu}"));
    }
    if p.is_nan() {
        return arg("p must not be NaN");
    }
    Ok(mean_kernel(&[a, b], &[1.0 - mu, mu], p))
}

/// m-ary p-mean. With two values and weights `(1−μ, μ)` the result is
/// bit-identical to [`p_mean`].
pub fn p_mean_multi(values: &[f64], spec: &PMeanSpec) -> Result<f64> {
    if values.len() != spec.len() {
        return arg(format!(
            "{} values for {} weights",
            values.len(),
            spec.len()
        ));
    }
    check_values(values)?;
    Ok(mean_kernel(values, &spec.weights, spec.p))
}

/// Exponent `q = pr/(np + r)` of the norm inequality; `p` when `r = ∞`.
pub fn corollary_exponent(p: f64, r: f64, n: u32) -> Result<f64> {
    if !(p >= 0.0 && p.is_finite()) {
        return arg(format!("p must be finite and non-negative, got {p}"));
    }
    if !(r > 0.0) {
        return arg(format!("r must be positive, got {r}"));
    }
    if n == 0 {
        return arg("dimension must be at least 1");
    }
    if r == f64::INFINITY {
        return Ok(p);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok(p * r / (n as f64 * p + r))
}

/// The Borell-Brascamp-Lieb exponent: `1/n` at `s = ∞`, `−∞` at
/// `s = −1/n`, `s/(ns + 1)` in between.
pub fn bbl_exponent(s: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return arg("dimension must be at least 1");
    }
    let nf = n as f64;
    let floor = -1.0 / nf;
    if s.is_nan() || s < floor {
        return arg(format!("s must be at least -1/n = {floor}, got {s}"));
    }
    if s == f64::INFINITY {
        return Ok(1.0 / nf);
    }
    if s == floor {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(s / (nf * s + 1.0))
}

/// `p = β/(1 + 2β)` for a β-concave source; `1/2` at `β = ∞`.
pub fn p_from_beta(beta: f64) -> Result<f64> {
    if beta.is_nan() || beta < 1.0 {
        return arg(format!("β must be at least 1, got {beta}"));
    }
    if beta == f64::INFINITY {
        return Ok(0.5);
    }
    Ok(beta / (1.0 + 2.0 * beta))
}

/// Outcome of a sampled midpoint p-concavity test.
#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    pub holds: bool,
    pub pairs_tested: usize,
    /// `min v(mid) − M_p(v(x), v(y); ½)` over tested pairs.
    pub min_slack: f64,
    /// The worst pair when the test fails.
    pub witness: Option<(Vec2, Vec2)>,
}

/// Tests `v((x+y)/2) ≥ M_p(v(x), v(y); ½) − tol` over all pairs of strictly
/// inside nodes whose midpoint is a node, with `tol = 1e−9 + slack`.
pub fn is_p_concave(gf: &GridFunction, p: f64, slack: f64) -> ConcavityReport {
    let tol = 1e-9 + slack;
    let lat = gf.lattice();
    let (nx, ny) = (lat.nx, lat.ny);
    let inside: Vec<(usize, usize)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .filter(|&(i, j)| gf.kind(i, j).is_inside())
        .collect();
    let mut min_slack = f64::INFINITY;
    let mut worst = None;
    let mut pairs = 0usize;
    for (a, &(i0, j0)) in inside.iter().enumerate() {
        let v0 = gf.value(i0, j0);
        for &(i1, j1) in &inside[a + 1..] {
            if (i0 + i1) % 2 != 0 || (j0 + j1) % 2 != 0 {
                continue;
            }
            pairs += 1;
            let mid = gf.value((i0 + i1) / 2, (j0 + j1) / 2);
            let rhs = mean_kernel(&[v0, gf.value(i1, j1)], &[0.5, 0.5], p);
            let s = mid - rhs;
            if s < min_slack {
                min_slack = s;
                worst = Some((lat.node(i0, j0), lat.node(i1, j1)));
            }
        }
    }
    if pairs == 0 {
        min_slack = 0.0;
    }
    let holds = min_slack >= -tol;
    ConcavityReport {
        holds,
        pairs_tested: pairs,
        min_slack,
        witness: if holds { None } else { worst },
    }
}
