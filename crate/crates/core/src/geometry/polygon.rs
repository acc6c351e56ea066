//! Convex polygon primitives on counterclockwise vertex lists.

use super::Vec2;
use crate::error::{arg, Result};

/// Relative tolerance for merging collinear edges.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// Checks that `v` is a counterclockwise convex polygon: every turn is
/// non-negative and at least three turns are strictly positive.
pub fn validate_convex(v: &[Vec2]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return arg(format!("polygon needs at least 3 vertices, got {n}"));
    }
    if v.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return arg("polygon has non-finite coordinates");
    }
    let scale = v.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut strict = 0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let c = v[(i + 2) % n];
        let turn = (b - a).cross(c - b);
        if turn < -1e-12 * scale * scale {
            return arg(format!(
                "vertex list is not counterclockwise convex at vertex {}",
                (i + 1) % n
            ));
        }
        if turn > 1e-12 * scale * scale {
            strict += 1;
        }
    }
    if strict < 3 {
        return arg("polygon is degenerate (fewer than 3 non-collinear vertices)");
    }
    // A star-shaped self-overlapping vertex list passes the local turn test;
    // the total turning must be exactly one revolution.
    if signed_area(v) <= 0.0 {
        return arg("polygon has non-positive signed area");
    }
    let mut winding = 0.0;
    for i in 0..n {
        let e0 = v[(i + 1) % n] - v[i];
        let e1 = v[(i + 2) % n] - v[(i + 1) % n];
        winding += e0.cross(e1).atan2(e0.dot(e1));
    }
    if (winding - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
        return arg("vertex list winds more than once");
    }
    Ok(())
}

/// Andrew's monotone chain; returns the strictly convex hull,
/// counterclockwise, starting from the lowest-leftmost point.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    start_at_bottom(&mut lower);
    lower
}

/// Shoelace signed area.
pub fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += v[i].cross(v[(i + 1) % n]);
    }
    0.5 * s
}

pub fn perimeter(v: &[Vec2]) -> f64 {
    let n = v.len();
    match n {
        0 | 1 => 0.0,
        2 => 2.0 * (v[1] - v[0]).norm(),
        _ => (0..n).map(|i| (v[(i + 1) % n] - v[i]).norm()).sum(),
    }
}

/// Area centroid; falls back to the vertex mean for degenerate lists.
pub fn centroid(v: &[Vec2]) -> Vec2 {
    let a = signed_area(v);
    if a.abs() < 1e-300 {
        let n = v.len().max(1) as f64;
        return v.iter().fold(Vec2::ZERO, |s, &p| s + p) / n;
    }
    let n = v.len();
    let mut c = Vec2::ZERO;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        let w = p.cross(q);
        c += (p + q) * w;
    }
    c / (6.0 * a)
}

/// `max_v <v, xi>`.
#[inline]
pub fn support(v: &[Vec2], xi: Vec2) -> f64 {
    v.iter().map(|p| p.dot(xi)).fold(f64::NEG_INFINITY, f64::max)
}

/// Rotates the list so that it starts at the lowest (then leftmost) vertex.
pub fn start_at_bottom(v: &mut [Vec2]) {
    if v.is_empty() {
        return;
    }
    let mut k = 0;
    for (i, p) in v.iter().enumerate() {
        let q = v[k];
        if p.y < q.y || (p.y == q.y && p.x < q.x) {
            k = i;
        }
    }
    v.rotate_left(k);
}

/// Drops vertices whose adjacent edges are parallel within
/// [`COLLINEAR_TOL`] (relative to the edge lengths), and repeated vertices.
pub fn remove_collinear(v: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = v.to_vec();
    let mut changed = true;
    while changed && out.len() > 2 {
        changed = false;
        let n = out.len();
        for i in 0..n {
            let a = out[(i + n - 1) % n];
            let b = out[i];
            let c = out[(i + 1) % n];
            let e0 = b - a;
            let e1 = c - b;
            let l0 = e0.norm();
            let l1 = e1.norm();
            let degenerate = l0 == 0.0 || l1 == 0.0;
            if degenerate || (e0.cross(e1).abs() <= COLLINEAR_TOL * l0 * l1 && e0.dot(e1) > 0.0) {
                out.remove(i);
                changed = true;
                break;
            }
        }
    }
    out
}

/// Minkowski sum of two convex polygons by merging their edge sequences in
/// angular order. Single points (or empty lists) act as translations.
pub fn minkowski_sum(a: &[Vec2], b: &[Vec2]) -> Vec<Vec2> {
    if a.is_empty() {
        return b.to_vec();
    }
    if b.is_empty() {
        return a.to_vec();
    }
    if a.len() == 1 {
        return b.iter().map(|&p| p + a[0]).collect();
    }
    if b.len() == 1 {
        return a.iter().map(|&p| p + b[0]).collect();
    }
    let mut p = a.to_vec();
    let mut q = b.to_vec();
    start_at_bottom(&mut p);
    start_at_bottom(&mut q);
    let (n, m) = (p.len(), q.len());
    p.push(p[0]);
    p.push(p[1]);
    q.push(q[0]);
    q.push(q[1]);
    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0usize, 0usize);
    while i < n || j < m {
        out.push(p[i] + q[j]);
        let cross = (p[i + 1] - p[i]).cross(q[j + 1] - q[j]);
        if cross >= 0.0 && i < n {
            i += 1;
        }
        if cross <= 0.0 && j < m {
            j += 1;
        }
    }
    remove_collinear(&out)
}

/// Sutherland-Hodgman clipping of `subject` against the convex
/// counterclockwise polygon `clip`.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut out = subject.to_vec();
    let n = clip.len();
    for k in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[k];
        let e = clip[(k + 1) % n] - a;
        let side = |p: Vec2| e.cross(p - a);
        if out.iter().all(|&p| side(p) >= 0.0) {
            continue;
        }
        let input = std::mem::take(&mut out);
        let m = input.len();
        for i in 0..m {
            let cur = input[i];
            let prev = input[(i + m - 1) % m];
            let sc = side(cur);
            let sp = side(prev);
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(prev + (cur - prev) * (sp / (sp - sc)));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(prev + (cur - prev) * (sp / (sp - sc)));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(s: f64) -> Vec<Vec2> {
        vec![
            Vec2::new(-s, -s),
            Vec2::new(s, -s),
            Vec2::new(s, s),
            Vec2::new(-s, s),
        ]
    }

    #[test]
    fn hull_of_square_with_interior_points() {
        let mut pts = square(1.0);
        pts.push(Vec2::new(0.1, 0.2));
        pts.push(Vec2::new(1.0, 0.0)); // on an edge
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!((signed_area(&h) - 4.0).abs() < 1e-15);
        assert_eq!(h[0], Vec2::new(-1.0, -1.0));
    }

    #[test]
    fn validate_rejects_clockwise_and_degenerate() {
        let mut cw = square(1.0);
        cw.reverse();
        assert!(validate_convex(&cw).is_err());
        let line = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        assert!(validate_convex(&line).is_err());
        assert!(validate_convex(&square(1.0)).is_ok());
    }

    #[test]
    fn minkowski_square_plus_square() {
        let s = minkowski_sum(&square(1.0), &square(0.5));
        assert_eq!(s.len(), 4);
        assert!((signed_area(&s) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn minkowski_square_plus_diamond_is_octagon() {
        let d = vec![
            Vec2::new(0.0, -1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
        ];
        let s = minkowski_sum(&square(1.0), &d);
        assert_eq!(s.len(), 8);
        // area(A+B) = area A + area B + 2 mixed area; mixed area = 4 here.
        assert!((signed_area(&s) - (4.0 + 2.0 + 8.0)).abs() < 1e-12);
        assert!((perimeter(&s) - (perimeter(&square(1.0)) + perimeter(&d))).abs() < 1e-12);
    }

    #[test]
    fn clip_square_by_triangle() {
        let tri = vec![Vec2::new(-2.0, -2.0), Vec2::new(2.0, -2.0), Vec2::new(-2.0, 2.0)];
        let c = clip_convex(&square(1.0), &tri);
        assert!((signed_area(&c) - 2.0).abs() < 1e-12);
    }
}
