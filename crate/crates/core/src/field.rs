//! Scalar fields sampled on a uniform lattice cut to a convex body.
//!
//! Lattices are aligned to `hℤ²`: node `(i, j)` sits at
//! `((i0 + i)h, (j0 + j)h)`. Two grids with the same spacing therefore share
//! nodes wherever they overlap, and the `2h` lattice is a sublattice of the
//! `h` lattice.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::geometry::{polygon, ConvexBody, Vec2};

/// Nodes with `|signed distance| ≤ ON_BOUNDARY_TOL·h` are boundary nodes.
pub const ON_BOUNDARY_TOL: f64 = 1e-10;

/// Fractional lattice coordinates this close to an integer snap to it.
const SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    /// Inside, with all four lattice neighbours inside.
    Interior,
    /// Inside, with at least one lattice neighbour on or beyond `∂Ω`.
    BoundaryAdjacent,
    /// On `∂Ω` up to [`ON_BOUNDARY_TOL`]; carries Dirichlet data.
    OnBoundary,
    Exterior,
}

impl NodeKind {
    /// Strictly inside the body.
    #[inline]
    pub fn is_inside(self) -> bool {
        matches!(self, NodeKind::Interior | NodeKind::BoundaryAdjacent)
    }

    /// In the closed body.
    #[inline]
    pub fn in_closure(self) -> bool {
        self != NodeKind::Exterior
    }
}

/// Rectangular block of `hℤ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lattice {
    pub h: f64,
    pub i0: i64,
    pub j0: i64,
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    /// Smallest block covering `[lo, hi]` padded by `h` on every side.
    pub fn covering(lo: Vec2, hi: Vec2, h: f64) -> Lattice {
        let i0 = ((lo.x - h) / h).floor() as i64;
        let j0 = ((lo.y - h) / h).floor() as i64;
        let i1 = ((hi.x + h) / h).ceil() as i64;
        let j1 = ((hi.y + h) / h).ceil() as i64;
        Lattice {
            h,
            i0,
            j0,
            nx: (i1 - i0 + 1) as usize,
            ny: (j1 - j0 + 1) as usize,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn origin(&self) -> Vec2 {
        Vec2::new(self.i0 as f64 * self.h, self.j0 as f64 * self.h)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            (self.i0 + i as i64) as f64 * self.h,
            (self.j0 + j as i64) as f64 * self.h,
        )
    }

    /// Fractional local coordinates of `x`, snapped to integers within
    /// 1e−9.
    #[inline]
    pub fn locate(&self, x: Vec2) -> (f64, f64) {
        (
            snap(x.x / self.h - self.i0 as f64),
            snap(x.y / self.h - self.j0 as f64),
        )
    }

    /// Local index of the global lattice index `(gi, gj)` if it lies in the
    /// block.
    #[inline]
    pub fn local(&self, gi: i64, gj: i64) -> Option<(usize, usize)> {
        let (i, j) = (gi - self.i0, gj - self.j0);
        if i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }
}

#[inline]
pub(crate) fn snap(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() < SNAP {
        r
    } else {
        s
    }
}

/// Mask, boundary geometry and quadrature weights of a body on a lattice.
/// Shared by every field discretized on the same body and spacing.
#[derive(Debug)]
pub struct Domain {
    body: ConvexBody,
    lattice: Lattice,
    kinds: Vec<NodeKind>,
    signed_distance: Vec<f64>,
    /// Arm fractions along `+x, −x, +y, −y`, in `(0, 1]`.
    arms: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

const AXES: [Vec2; 4] = [
    Vec2::new(1.0, 0.0),
    Vec2::new(-1.0, 0.0),
    Vec2::new(0.0, 1.0),
    Vec2::new(0.0, -1.0),
];

const STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

impl Domain {
    /// Cuts `body` to the lattice `hℤ²`. Requires `h ≤ r/2` with `r` the
    /// inradius estimate.
    pub fn new(body: &ConvexBody, h: f64) -> Result<Arc<Domain>> {
        if !(h > 0.0 && h.is_finite()) {
            return arg(format!("grid spacing must be positive, got {h}"));
        }
        let r = body.inradius_estimate();
        if h > 0.5 * r {
            return Err(Error::Resolution(format!(
                "h = {h} exceeds half the inradius estimate {r}"
            )));
        }
        let (lo, hi) = body.bbox();
        let lattice = Lattice::covering(lo, hi, h);
        Ok(Arc::new(Self::build(body.clone(), lattice)))
    }

    fn build(body: ConvexBody, lattice: Lattice) -> Domain {
        let shape = body.shape();
        let h = lattice.h;
        let n = lattice.len();
        let mut sd = vec![0.0; n];
        let mut kinds = vec![NodeKind::Exterior; n];
        for j in 0..lattice.ny {
            for i in 0..lattice.nx {
                let k = lattice.index(i, j);
                let d = shape.signed_distance(lattice.node(i, j));
                sd[k] = d;
                kinds[k] = if d.abs() <= ON_BOUNDARY_TOL * h {
                    NodeKind::OnBoundary
                } else if d < 0.0 {
                    NodeKind::Interior
                } else {
                    NodeKind::Exterior
                };
            }
        }
        let mut arms = vec![[1.0; 4]; n];
        for j in 0..lattice.ny {
            for i in 0..lattice.nx {
                let k = lattice.index(i, j);
                if kinds[k] != NodeKind::Interior {
                    continue;
                }
                let x = lattice.node(i, j);
                let mut adjacent = false;
                for (a, &(di, dj)) in STEPS.iter().enumerate() {
                    let ni = i as i64 + di;
                    let nj = j as i64 + dj;
                    // the padded box keeps every inside node's neighbours in range
                    let nk = lattice.index(ni as usize, nj as usize);
                    if kinds[nk].is_inside() {
                        continue;
                    }
                    adjacent = true;
                    let exit = shape
                        .line_chord(x, AXES[a])
                        .map(|(_, t1)| t1)
                        .unwrap_or(h);
                    arms[k][a] = (exit / h).clamp(f64::MIN_POSITIVE, 1.0);
                }
                if adjacent {
                    kinds[k] = NodeKind::BoundaryAdjacent;
                }
            }
        }
        let outline = shape.outline();
        let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
        let mut weights = vec![0.0; n];
        for j in 0..lattice.ny {
            for i in 0..lattice.nx {
                let k = lattice.index(i, j);
                let d = sd[k];
                weights[k] = if d <= -half_diag {
                    h * h
                } else if d >= half_diag {
                    0.0
                } else {
                    let c = lattice.node(i, j);
                    let e = 0.5 * h;
                    let cell = [
                        Vec2::new(c.x - e, c.y - e),
                        Vec2::new(c.x + e, c.y - e),
                        Vec2::new(c.x + e, c.y + e),
                        Vec2::new(c.x - e, c.y + e),
                    ];
                    polygon::signed_area(&polygon::clip_convex(&cell, &outline)).max(0.0)
                };
            }
        }
        Domain {
            body,
            lattice,
            kinds,
            signed_distance: sd,
            arms,
            weights,
        }
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    #[inline]
    pub fn kind_at(&self, k: usize) -> NodeKind {
        self.kinds[k]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    #[inline]
    pub fn signed_distance_at(&self, k: usize) -> f64 {
        self.signed_distance[k]
    }

    /// Arm fractions `(+x, −x, +y, −y)` of a strictly inside node.
    #[inline]
    pub fn arms_at(&self, k: usize) -> [f64; 4] {
        self.arms[k]
    }

    /// Area of the dual cell of node `k` inside the body.
    #[inline]
    pub fn weight_at(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.kinds.iter().filter(|&&c| c == kind).count()
    }

    pub fn inside_count(&self) -> usize {
        self.kinds.iter().filter(|c| c.is_inside()).count()
    }

    /// Sum of the quadrature weights.
    pub fn quadrature_area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A scalar field on a [`Domain`]. Values at exterior and boundary nodes are
/// whatever the producer set; every constructor here zeroes exterior nodes.
#[derive(Clone, Debug)]
pub struct GridFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

/// Zero field on `body` at spacing `h`.
pub fn discretize(body: &ConvexBody, h: f64) -> Result<GridFunction> {
    Ok(GridFunction::zeros(Domain::new(body, h)?))
}

impl GridFunction {
    pub fn zeros(domain: Arc<Domain>) -> Self {
        let n = domain.lattice.len();
        Self {
            domain,
            values: vec![0.0; n],
        }
    }

    /// Wraps node values; exterior entries are forced to zero.
    pub fn from_values(domain: Arc<Domain>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.lattice.len() {
            return arg(format!(
                "{} values for a lattice of {} nodes",
                values.len(),
                domain.lattice.len()
            ));
        }
        for (v, k) in values.iter_mut().zip(&domain.kinds) {
            if *k == NodeKind::Exterior {
                *v = 0.0;
            }
        }
        Ok(Self { domain, values })
    }

    /// Evaluates `f` at every node of the closed body; zero elsewhere.
    pub fn from_fn(domain: Arc<Domain>, f: impl Fn(Vec2) -> f64) -> Self {
        let lat = domain.lattice;
        let values = (0..lat.len())
            .map(|k| {
                if domain.kinds[k].in_closure() {
                    f(lat.node(k % lat.nx, k / lat.nx))
                } else {
                    0.0
                }
            })
            .collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn body(&self) -> &ConvexBody {
        &self.domain.body
    }

    pub fn lattice(&self) -> &Lattice {
        &self.domain.lattice
    }

    pub fn h(&self) -> f64 {
        self.domain.lattice.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.lattice.index(i, j)]
    }

    #[inline]
    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.domain.kinds[self.domain.lattice.index(i, j)]
    }

    /// Fractional distances to `∂Ω` along `+x, −x, +y, −y` in units of `h`,
    /// for boundary-adjacent nodes.
    pub fn boundary_distances(&self, i: usize, j: usize) -> Option<[f64; 4]> {
        let k = self.domain.lattice.index(i, j);
        (self.domain.kinds[k] == NodeKind::BoundaryAdjacent).then(|| self.domain.arms[k])
    }

    /// Pointwise map on the closed body; exterior stays zero.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .zip(&self.domain.kinds)
            .map(|(&v, k)| if k.in_closure() { f(v) } else { 0.0 })
            .collect();
        GridFunction {
            domain: self.domain.clone(),
            values,
        }
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// Bilinear interpolation at fractional local coordinates; nodes outside
    /// the block read as zero.
    #[inline]
    pub(crate) fn interp_local(&self, fx: f64, fy: f64) -> f64 {
        let lat = &self.domain.lattice;
        let i = fx.floor();
        let j = fy.floor();
        let (tx, ty) = (fx - i, fy - j);
        let (i, j) = (i as i64, j as i64);
        let at = |a: i64, b: i64| -> f64 {
            if a < 0 || b < 0 || a as usize >= lat.nx || b as usize >= lat.ny {
                0.0
            } else {
                self.values[lat.index(a as usize, b as usize)]
            }
        };
        if tx == 0.0 && ty == 0.0 {
            return at(i, j);
        }
        if ty == 0.0 {
            return (1.0 - tx) * at(i, j) + tx * at(i + 1, j);
        }
        if tx == 0.0 {
            return (1.0 - ty) * at(i, j) + ty * at(i, j + 1);
        }
        (1.0 - tx) * (1.0 - ty) * at(i, j)
            + tx * (1.0 - ty) * at(i + 1, j)
            + (1.0 - tx) * ty * at(i, j + 1)
            + tx * ty * at(i + 1, j + 1)
    }

    /// Bilinear interpolation; zero outside the body. Exterior nodes read as
    /// zero, matching the homogeneous boundary data.
    pub fn sample(&self, x: Vec2) -> f64 {
        if !self.domain.body.contains(x) {
            return 0.0;
        }
        let (fx, fy) = self.domain.lattice.locate(x);
        self.interp_local(fx, fy)
    }

    /// Maximum over the closed body.
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.domain.kinds)
            .filter(|(_, k)| k.in_closure())
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimum over the closed body.
    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.domain.kinds)
            .filter(|(_, k)| k.in_closure())
            .map(|(&v, _)| v)
            .fold(f64::INFINITY, f64::min)
    }

    /// Node and value of the maximum; first in row-major order on ties.
    pub fn argmax(&self) -> (Vec2, f64) {
        let lat = self.domain.lattice;
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, (&v, kind)) in self.values.iter().zip(&self.domain.kinds).enumerate() {
            if kind.in_closure() && v > best.1 {
                best = (k, v);
            }
        }
        (lat.node(best.0 % lat.nx, best.0 / lat.nx), best.1)
    }

    /// `(Σ_k w_k |u_k|^q)^{1/q}` with cell-area weights; for `q = ∞` the
    /// maximum of `|u|` over the closed body.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return arg(format!("norm exponent must be positive, got {q}"));
        }
        if q == f64::INFINITY {
            return Ok(self
                .values
                .iter()
                .zip(&self.domain.kinds)
                .filter(|(_, k)| k.in_closure())
                .map(|(v, _)| v.abs())
                .fold(0.0, f64::max));
        }
        let s: f64 = self
            .values
            .iter()
            .zip(&self.domain.weights)
            .map(|(v, w)| if *w > 0.0 { w * v.abs().powf(q) } else { 0.0 })
            .sum();
        Ok(s.powf(1.0 / q))
    }

    /// `∫_Ω u` by the cell-area quadrature.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.domain.weights)
            .map(|(v, w)| w * v)
            .sum()
    }

    /// Cell-area measure of `{u ≥ t}`.
    pub fn superlevel_measure(&self, t: f64) -> f64 {
        self.values
            .iter()
            .zip(&self.domain.weights)
            .filter(|(&v, _)| v >= t)
            .map(|(_, w)| w)
            .sum()
    }

    /// `∫_0^M q t^{q−1} |{u ≥ t}| dt` by the composite trapezoid rule on
    /// `levels` equally spaced levels, `M = max u`. Approximates
    /// `lq_norm(q)^q` for non-negative fields.
    pub fn layer_cake(&self, q: f64, levels: usize) -> f64 {
        let top = self.max_value().max(0.0);
        if top == 0.0 || levels < 2 {
            return 0.0;
        }
        let dt = top / (levels - 1) as f64;
        let mut s = 0.0;
        for l in 0..levels {
            let t = l as f64 * dt;
            let weight = if l == 0 || l == levels - 1 { 0.5 } else { 1.0 };
            let density = if t == 0.0 {
                if q == 1.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                q * t.powf(q - 1.0)
            };
            s += weight * density * self.superlevel_measure(t);
        }
        s * dt
    }

    /// `max |u − v|` over strictly inside nodes of `self` that are also
    /// nodes of `other` (same spacing or `other` on a coarser sublattice).
    pub fn max_diff_on_shared_nodes(&self, other: &GridFunction) -> Result<f64> {
        let a = self.lattice();
        let b = other.lattice();
        let ratio = b.h / a.h;
        let r = ratio.round();
        if (ratio - r).abs() > 1e-9 || r < 1.0 {
            return arg("the second grid must be an integer coarsening of the first");
        }
        let r = r as i64;
        let mut worst: f64 = 0.0;
        for j in 0..b.ny {
            for i in 0..b.nx {
                if !other.kind(i, j).is_inside() {
                    continue;
                }
                let gi = (b.i0 + i as i64) * r;
                let gj = (b.j0 + j as i64) * r;
                if let Some((fi, fj)) = a.local(gi, gj) {
                    worst = worst.max((self.value(fi, fj) - other.value(i, j)).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Largest forward-difference slope `|Δu|/h` between adjacent nodes of
    /// the closed body.
    pub fn lipschitz_estimate(&self) -> f64 {
        let lat = self.domain.lattice;
        let mut l: f64 = 0.0;
        for j in 0..lat.ny {
            for i in 0..lat.nx {
                if !self.kind(i, j).in_closure() {
                    continue;
                }
                let v = self.value(i, j);
                if i + 1 < lat.nx && self.kind(i + 1, j).in_closure() {
                    l = l.max((self.value(i + 1, j) - v).abs());
                }
                if j + 1 < lat.ny && self.kind(i, j + 1).in_closure() {
                    l = l.max((self.value(i, j + 1) - v).abs());
                }
            }
        }
        l / lat.h
    }
}
