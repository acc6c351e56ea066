use std::f64::consts::PI;

use super::polygon;
use super::{Rotation, Vec2};

/// Segments per full turn used when a rounded shape is flattened to a polygon.
const OUTLINE_SEGMENTS: usize = 2048;

/// Exact description of a convex body: the Minkowski sum of a convex
/// polygon `core` (or a single point) and a closed disc of radius `radius`.
///
/// Polygons have `radius == 0`; discs have a one-point core. The class is
/// closed under Minkowski combination, rotation and translation.
#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    core: Vec<Vec2>,
    radius: f64,
}

impl Shape {
    /// `core` must be a single point or a validated counterclockwise
    /// convex polygon.
    pub(crate) fn new(core: Vec<Vec2>, radius: f64) -> Self {
        debug_assert!(core.len() == 1 || core.len() >= 3);
        debug_assert!(radius >= 0.0);
        Self { core, radius }
    }

    pub fn core(&self) -> &[Vec2] {
        &self.core
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_polygon(&self) -> bool {
        self.radius == 0.0 && self.core.len() >= 3
    }

    /// Support function for a unit direction.
    #[inline]
    pub fn support(&self, xi: Vec2) -> f64 {
        polygon::support(&self.core, xi) + self.radius
    }

    fn edge(&self, i: usize) -> (Vec2, Vec2, Vec2) {
        let n = self.core.len();
        let a = self.core[i];
        let b = self.core[(i + 1) % n];
        let e = b - a;
        let normal = Vec2::new(e.y, -e.x) / e.norm();
        (a, b, normal)
    }

    fn polygon_edges(&self) -> usize {
        if self.core.len() >= 3 {
            self.core.len()
        } else {
            0
        }
    }

    /// Nearest point of the core and whether `x` lies inside the core.
    /// For interior points the nearest point is on the closest edge.
    fn nearest_core(&self, x: Vec2) -> (Vec2, bool, Vec2) {
        if self.core.len() == 1 {
            let c = self.core[0];
            let d = x - c;
            let n = if d.norm() > 0.0 { d.normalized() } else { Vec2::new(1.0, 0.0) };
            return (c, false, n);
        }
        let m = self.polygon_edges();
        let mut inside = true;
        let mut best_s = f64::NEG_INFINITY;
        let mut best_i = 0;
        for i in 0..m {
            let (a, _, n) = self.edge(i);
            let s = n.dot(x - a);
            if s > 0.0 {
                inside = false;
            }
            if s > best_s {
                best_s = s;
                best_i = i;
            }
        }
        if inside {
            let (_, _, n) = self.edge(best_i);
            return (x - n * best_s, true, n);
        }
        let mut best = (f64::INFINITY, Vec2::ZERO);
        for i in 0..m {
            let (a, b, _) = self.edge(i);
            let e = b - a;
            let t = ((x - a).dot(e) / e.norm2()).clamp(0.0, 1.0);
            let q = a + e * t;
            let d = (x - q).norm2();
            if d < best.0 {
                best = (d, q);
            }
        }
        let q = best.1;
        (q, false, (x - q).normalized())
    }

    /// Euclidean signed distance to the boundary (negative inside).
    pub fn signed_distance(&self, x: Vec2) -> f64 {
        let (q, inside, _) = self.nearest_core(x);
        let d = (x - q).norm();
        if inside {
            -d - self.radius
        } else {
            d - self.radius
        }
    }

    /// Membership with an absolute tolerance; boundary points count as inside.
    #[inline]
    pub fn contains(&self, x: Vec2, tol: f64) -> bool {
        if self.radius == 0.0 && self.core.len() >= 3 {
            let n = self.core.len();
            for i in 0..n {
                let a = self.core[i];
                let e = self.core[(i + 1) % n] - a;
                // outward normal is (e.y, -e.x); compare unnormalized
                if e.y * (x.x - a.x) - e.x * (x.y - a.y) > tol * e.norm() {
                    return false;
                }
            }
            true
        } else {
            self.signed_distance(x) <= tol
        }
    }

    /// Parameter interval `[t0, t1]` of the line `p + t d` (unit `d`) that
    /// lies inside the shape, if any.
    pub fn line_chord(&self, p: Vec2, d: Vec2) -> Option<(f64, f64)> {
        if self.radius == 0.0 {
            if self.core.len() < 3 {
                return None;
            }
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..self.core.len() {
                let (a, _, n) = self.edge(i);
                let nd = n.dot(d);
                let gap = n.dot(a - p);
                if nd.abs() < 1e-300 {
                    if gap < 0.0 {
                        return None;
                    }
                } else if nd > 0.0 {
                    hi = hi.min(gap / nd);
                } else {
                    lo = lo.max(gap / nd);
                }
            }
            return if lo <= hi { Some((lo, hi)) } else { None };
        }
        let r = self.radius;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut push = |t: f64| {
            lo = lo.min(t);
            hi = hi.max(t);
        };
        for &v in &self.core {
            let w = v - p;
            let along = w.dot(d);
            let off2 = w.norm2() - along * along;
            let disc = r * r - off2;
            if disc >= 0.0 {
                let s = disc.sqrt();
                push(along - s);
                push(along + s);
            }
        }
        for i in 0..self.polygon_edges() {
            let (a, b, n) = self.edge(i);
            let a = a + n * r;
            let e = b - a + n * r;
            let den = d.cross(e);
            if den.abs() < 1e-300 {
                continue;
            }
            let w = a - p;
            let s = w.cross(d) / den;
            if (0.0..=1.0).contains(&s) {
                push(w.cross(e) / den);
            }
        }
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Nearest boundary point and the outward unit normal there.
    pub fn nearest_boundary(&self, x: Vec2) -> (Vec2, Vec2) {
        let (q, _, n) = self.nearest_core(x);
        (q + n * self.radius, n)
    }

    /// Polygon vertices that are genuine corners of the boundary.
    pub fn corners(&self) -> &[Vec2] {
        if self.is_polygon() {
            &self.core
        } else {
            &[]
        }
    }

    pub fn area(&self) -> f64 {
        let r = self.radius;
        polygon::signed_area(&self.core) + r * polygon::perimeter(&self.core) + PI * r * r
    }

    pub fn perimeter(&self) -> f64 {
        polygon::perimeter(&self.core) + 2.0 * PI * self.radius
    }

    pub fn centroid(&self) -> Vec2 {
        if self.radius == 0.0 || self.core.len() == 1 {
            polygon::centroid(&self.core)
        } else {
            polygon::centroid(&self.outline())
        }
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (Vec2, Vec2) {
        let r = self.radius;
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.core {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo - Vec2::new(r, r), hi + Vec2::new(r, r))
    }

    /// Counterclockwise polygon approximating the boundary; exact for
    /// polygons, arcs flattened otherwise.
    pub fn outline(&self) -> Vec<Vec2> {
        if self.radius == 0.0 {
            return self.core.clone();
        }
        let r = self.radius;
        let step = 2.0 * PI / OUTLINE_SEGMENTS as f64;
        if self.core.len() == 1 {
            let c = self.core[0];
            return (0..OUTLINE_SEGMENTS)
                .map(|k| {
                    let a = k as f64 * step;
                    c + Vec2::new(a.cos(), a.sin()) * r
                })
                .collect();
        }
        let n = self.core.len();
        let mut out = Vec::new();
        for i in 0..n {
            let (_, _, n_prev) = self.edge((i + n - 1) % n);
            let (_, _, n_next) = self.edge(i);
            let a0 = n_prev.y.atan2(n_prev.x);
            let mut a1 = n_next.y.atan2(n_next.x);
            while a1 < a0 {
                a1 += 2.0 * PI;
            }
            let k = ((a1 - a0) / step).ceil().max(1.0) as usize;
            let v = self.core[i];
            for s in 0..=k {
                let a = a0 + (a1 - a0) * s as f64 / k as f64;
                out.push(v + Vec2::new(a.cos(), a.sin()) * r);
            }
        }
        polygon::remove_collinear(&out)
    }

    pub fn translated(&self, t: Vec2) -> Shape {
        Shape::new(self.core.iter().map(|&p| p + t).collect(), self.radius)
    }

    pub fn rotated(&self, rot: &Rotation) -> Shape {
        let mut core: Vec<Vec2> = self.core.iter().map(|&p| rot.apply(p)).collect();
        polygon::start_at_bottom(&mut core);
        Shape::new(core, self.radius)
    }

    pub fn scaled(&self, s: f64) -> Shape {
        debug_assert!(s > 0.0);
        Shape::new(self.core.iter().map(|&p| p * s).collect(), self.radius * s)
    }

    /// Exact Minkowski sum.
    pub fn minkowski(&self, other: &Shape) -> Shape {
        let core = polygon::minkowski_sum(&self.core, &other.core);
        let core = if core.len() == 2 {
            // collinear degenerate sums cannot arise from valid inputs
            vec![core[0]]
        } else {
            core
        };
        Shape::new(core, self.radius + other.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Shape {
        Shape::new(
            vec![
                Vec2::new(-1.0, -1.0),
                Vec2::new(1.0, -1.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(-1.0, 1.0),
            ],
            0.0,
        )
    }

    fn rounded() -> Shape {
        square().scaled(0.5).minkowski(&Shape::new(vec![Vec2::ZERO], 0.5))
    }

    #[test]
    fn signed_distance_polygon_and_rounded() {
        let s = square();
        assert!((s.signed_distance(Vec2::new(0.5, 0.0)) + 0.5).abs() < 1e-15);
        assert!((s.signed_distance(Vec2::new(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
        let r = rounded();
        assert!((r.signed_distance(Vec2::ZERO) + 1.0).abs() < 1e-15);
        let corner = Vec2::new(0.5, 0.5) + Vec2::new(1.0, 1.0).normalized() * 0.5;
        assert!(r.signed_distance(corner).abs() < 1e-15);
    }

    #[test]
    fn chords_match_membership() {
        let r = rounded();
        let (t0, t1) = r.line_chord(Vec2::new(0.0, 0.7), Vec2::new(1.0, 0.0)).unwrap();
        // at height 0.7 the right end lies on the arc around (0.5, 0.5)
        let x = 0.5 + (0.25f64 - 0.04).sqrt();
        assert!((t1 - x).abs() < 1e-14 && (t0 + x).abs() < 1e-14);
        let s = square();
        let (a, b) = s.line_chord(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0).normalized()).unwrap();
        assert!((b - 2f64.sqrt()).abs() < 1e-14 && (a + 2f64.sqrt()).abs() < 1e-14);
        assert!(s.line_chord(Vec2::new(0.0, 3.0), Vec2::new(1.0, 0.0)).is_none());
    }

    #[test]
    fn steiner_area_and_outline() {
        let r = rounded();
        let exact = 3.0 + PI / 4.0;
        assert!((r.area() - exact).abs() < 1e-14);
        let o = r.outline();
        assert!((polygon::signed_area(&o) - exact).abs() < 1e-5);
    }
}
