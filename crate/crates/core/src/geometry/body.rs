use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::Rng;

use super::polygon;
use super::{DirectionGrid, Rotation, Shape, Vec2};
use crate::error::{arg, Error, Result};

/// Tolerance on `|ξ| = 1` accepted by [`ConvexBody::support_eval`].
pub const UNIT_TOL: f64 = 1e-9;

/// Membership tolerance for bodies known only through support samples.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BodyKind {
    Polygon,
    Disc { center: Vec2, radius: f64 },
    SupportOnly,
}

/// A planar convex body with its support function sampled on a
/// [`DirectionGrid`].
///
/// Bodies built from polygons and discs (including every Minkowski
/// combination, rotation, translation and rotation mean of them) keep an
/// exact [`Shape`]. A body constructed from support samples alone carries
/// the polygon cut out by its support half-planes instead; `exact` tells
/// the two apart.
#[derive(Clone, Debug)]
pub struct ConvexBody {
    kind: BodyKind,
    shape: Shape,
    exact: bool,
    grid: DirectionGrid,
    samples: Vec<f64>,
}

impl ConvexBody {
    fn from_shape(kind: BodyKind, shape: Shape, grid: DirectionGrid) -> Self {
        let samples = grid.directions().map(|xi| shape.support(xi)).collect();
        Self {
            kind,
            shape,
            exact: true,
            grid,
            samples,
        }
    }

    /// Counterclockwise convex polygon. Collinear vertices are dropped.
    pub fn polygon(vertices: &[Vec2]) -> Result<Self> {
        Self::polygon_on(vertices, DirectionGrid::default())
    }

    pub fn polygon_on(vertices: &[Vec2], grid: DirectionGrid) -> Result<Self> {
        polygon::validate_convex(vertices)?;
        let mut v = polygon::remove_collinear(vertices);
        polygon::start_at_bottom(&mut v);
        Ok(Self::from_shape(BodyKind::Polygon, Shape::new(v, 0.0), grid))
    }

    /// Convex hull of a point cloud.
    pub fn hull(points: &[Vec2]) -> Result<Self> {
        Self::polygon(&polygon::convex_hull(points))
    }

    /// The square `[-a, a]²`.
    pub fn square(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return arg(format!("square half-side must be positive, got {a}"));
        }
        Self::polygon(&[
            Vec2::new(-a, -a),
            Vec2::new(a, -a),
            Vec2::new(a, a),
            Vec2::new(-a, a),
        ])
    }

    pub fn disc(center: Vec2, radius: f64) -> Result<Self> {
        Self::disc_on(center, radius, DirectionGrid::default())
    }

    pub fn disc_on(center: Vec2, radius: f64, grid: DirectionGrid) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.x.is_finite() || !center.y.is_finite() {
            return arg(format!("disc needs a finite center and positive radius, got r={radius}"));
        }
        Ok(Self::from_shape(
            BodyKind::Disc { center, radius },
            Shape::new(vec![center], radius),
            grid,
        ))
    }

    /// A body known only through `h(ξ_j)` on `grid`. Membership uses the
    /// half-planes `⟨x, ξ_j⟩ ≤ h_j`.
    pub fn from_support_samples(grid: DirectionGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return arg(format!(
                "expected {} support samples, got {}",
                grid.len(),
                samples.len()
            ));
        }
        if samples.iter().any(|h| !h.is_finite()) {
            return arg("support samples must be finite");
        }
        let m = grid.len();
        let mut corners = Vec::with_capacity(m);
        for j in 0..m {
            let (a, b) = (grid.direction(j), grid.direction((j + 1) % m));
            let det = a.cross(b);
            let (ha, hb) = (samples[j], samples[(j + 1) % m]);
            corners.push(Vec2::new(ha * b.y - hb * a.y, hb * a.x - ha * b.x) / det);
        }
        // keep only corners satisfying every half-plane; consecutive
        // intersections of redundant lines fall outside
        let kept: Vec<Vec2> = corners
            .into_iter()
            .filter(|c| {
                grid.directions()
                    .zip(&samples)
                    .all(|(xi, &h)| c.dot(xi) <= h + 1e-9 * (1.0 + h.abs()))
            })
            .collect();
        // lines through a common vertex meet in clusters of nearly equal points
        let scale = samples.iter().fold(1.0f64, |a, h| a.max(h.abs()));
        let mut hull: Vec<Vec2> = Vec::new();
        for p in polygon::convex_hull(&kept) {
            if hull.last().is_none_or(|q: &Vec2| (p - *q).norm() > 1e-9 * scale) {
                hull.push(p);
            }
        }
        while hull.len() > 1 && (hull[0] - hull[hull.len() - 1]).norm() <= 1e-9 * scale {
            hull.pop();
        }
        let hull = polygon::remove_collinear(&hull);
        if polygon::validate_convex(&hull).is_err() {
            return arg("support samples do not describe a body with interior");
        }
        Ok(Self {
            kind: BodyKind::SupportOnly,
            shape: Shape::new(hull, 0.0),
            exact: false,
            grid,
            samples,
        })
    }

    /// Convex hull of `n` uniform points in the unit disc, retried until it
    /// has interior.
    pub fn random_polygon<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        let n = n.max(3);
        loop {
            let pts: Vec<Vec2> = (0..n)
                .map(|_| {
                    let r = rng.gen::<f64>().sqrt();
                    let a = rng.gen::<f64>() * 2.0 * PI;
                    Vec2::new(r * a.cos(), r * a.sin())
                })
                .collect();
            let hull = polygon::convex_hull(&pts);
            if polygon::validate_convex(&hull).is_ok() && polygon::signed_area(&hull) > 1e-3 {
                return Self::polygon(&hull);
            }
        }
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    /// The exact shape, or the support-half-plane polygon for sampled bodies.
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn grid(&self) -> DirectionGrid {
        self.grid
    }

    pub fn support_samples(&self) -> &[f64] {
        &self.samples
    }

    /// Vertex list for polygon bodies.
    pub fn vertices(&self) -> Option<&[Vec2]> {
        match self.kind {
            BodyKind::Polygon => Some(self.shape.core()),
            _ => None,
        }
    }

    pub fn support_eval(&self, xi: Vec2) -> Result<f64> {
        if (xi.norm() - 1.0).abs() > UNIT_TOL {
            return arg(format!("support direction must be a unit vector, |ξ| = {}", xi.norm()));
        }
        if self.exact {
            Ok(self.shape.support(xi))
        } else {
            Ok(self.samples[self.grid.nearest(xi)])
        }
    }

    /// Sampled support function at an arbitrary angle, by linear
    /// interpolation between grid directions. Shifting the evaluation angle
    /// leaves the trapezoid sum of the samples unchanged.
    fn sample_at_angle(&self, angle: f64) -> f64 {
        let m = self.grid.len();
        let s = angle.rem_euclid(2.0 * PI) / self.grid.step();
        let j = s.floor();
        let frac = s - j;
        let j = (j as usize) % m;
        if frac < 1e-12 {
            return self.samples[j];
        }
        (1.0 - frac) * self.samples[j] + frac * self.samples[(j + 1) % m]
    }

    fn same_grid(&self, other: &ConvexBody) -> Result<()> {
        if self.grid != other.grid {
            return arg(format!(
                "bodies use different direction grids ({} vs {})",
                self.grid.len(),
                other.grid.len()
            ));
        }
        Ok(())
    }

    fn tag_for(shape: &Shape, polygonal: bool) -> BodyKind {
        if shape.core().len() == 1 {
            BodyKind::Disc {
                center: shape.core()[0],
                radius: shape.radius(),
            }
        } else if polygonal && shape.radius() == 0.0 {
            BodyKind::Polygon
        } else {
            BodyKind::SupportOnly
        }
    }

    /// `(1−μ)b0 + μb1`.
    pub fn minkowski_combine(b0: &ConvexBody, b1: &ConvexBody, mu: f64) -> Result<ConvexBody> {
        if !(mu > 0.0 && mu < 1.0) {
            return arg(format!("μ must lie in (0,1), got {mu}"));
        }
        b0.same_grid(b1)?;
        if b0.exact && b1.exact {
            let shape = b0.shape.scaled(1.0 - mu).minkowski(&b1.shape.scaled(mu));
            let both_polygons =
                matches!(b0.kind, BodyKind::Polygon) && matches!(b1.kind, BodyKind::Polygon);
            let kind = Self::tag_for(&shape, both_polygons);
            return Ok(Self::from_shape(kind, shape, b0.grid));
        }
        let samples = b0
            .samples
            .iter()
            .zip(&b1.samples)
            .map(|(h0, h1)| (1.0 - mu) * h0 + mu * h1)
            .collect();
        Self::from_support_samples(b0.grid, samples)
    }

    /// `(2/(nω_n)) ∫ h` with `n = 2`; perimeter/π when the shape is exact.
    pub fn mean_width(&self) -> f64 {
        if self.exact {
            self.shape.perimeter() / PI
        } else {
            self.mean_width_quadrature()
        }
    }

    /// Trapezoid rule on the direction grid.
    pub fn mean_width_quadrature(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.step() / PI
    }

    /// Exact for exact shapes. For sampled bodies, `½∫(h² − h′²)` with the
    /// derivative term as a forward difference; centered differences smear
    /// the jumps of `h′` at corners and lose an order of accuracy there.
    pub fn area(&self) -> f64 {
        if self.exact {
            return self.shape.area();
        }
        let m = self.grid.len();
        let d = self.grid.step();
        let mut s = 0.0;
        for j in 0..m {
            let h = self.samples[j];
            let dh = self.samples[(j + 1) % m] - h;
            s += h * h * d - dh * dh / d;
        }
        0.5 * s
    }

    pub fn perimeter(&self) -> f64 {
        if self.exact {
            self.shape.perimeter()
        } else {
            PI * self.mean_width_quadrature()
        }
    }

    /// Boundary points count as inside.
    pub fn contains(&self, x: Vec2) -> bool {
        if self.exact {
            self.shape.contains(x, SUPPORT_TOL)
        } else {
            self.grid
                .directions()
                .zip(&self.samples)
                .all(|(xi, &h)| x.dot(xi) <= h + SUPPORT_TOL)
        }
    }

    /// `max_j |h0(ξ_j) − h1(ξ_j)|`.
    pub fn hausdorff_distance(b0: &ConvexBody, b1: &ConvexBody) -> Result<f64> {
        b0.same_grid(b1)?;
        Ok(b0
            .samples
            .iter()
            .zip(&b1.samples)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `(1/m)(ρ_1Ω + … + ρ_mΩ)` with `ρ_i` the rotation by `2π(i−1)/m`.
    pub fn rotation_mean(&self, m: usize) -> Result<ConvexBody> {
        if m == 0 {
            return arg("rotation mean needs m >= 1");
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let rotations: Vec<Rotation> = (0..m)
            .map(|i| Rotation::new(2.0 * PI * i as f64 / m as f64))
            .collect();
        if self.exact {
            let scaled = self.shape.scaled(1.0 / m as f64);
            let mut acc: Option<Shape> = None;
            for rot in &rotations {
                let r = scaled.rotated(rot);
                acc = Some(match acc {
                    None => r,
                    Some(a) => a.minkowski(&r),
                });
            }
            let shape = acc.expect("m >= 2");
            let kind = Self::tag_for(&shape, false);
            return Ok(Self::from_shape(kind, shape, self.grid));
        }
        let samples = (0..self.grid.len())
            .map(|j| {
                let a = self.grid.angle(j);
                rotations
                    .iter()
                    .map(|r| self.sample_at_angle(a - r.angle()))
                    .sum::<f64>()
                    / m as f64
            })
            .collect();
        Self::from_support_samples(self.grid, samples)
    }

    pub fn rotate(&self, rot: &Rotation) -> ConvexBody {
        if self.exact {
            let shape = self.shape.rotated(rot);
            let kind = match self.kind {
                BodyKind::Disc { radius, .. } => BodyKind::Disc {
                    center: shape.core()[0],
                    radius,
                },
                k => k,
            };
            return Self::from_shape(kind, shape, self.grid);
        }
        let samples = (0..self.grid.len())
            .map(|j| self.sample_at_angle(self.grid.angle(j) - rot.angle()))
            .collect();
        Self::from_support_samples(self.grid, samples).expect("rotation keeps interior")
    }

    pub fn translate(&self, t: Vec2) -> ConvexBody {
        if self.exact {
            let shape = self.shape.translated(t);
            let kind = match self.kind {
                BodyKind::Disc { center, radius } => BodyKind::Disc {
                    center: center + t,
                    radius,
                },
                k => k,
            };
            return Self::from_shape(kind, shape, self.grid);
        }
        let samples = self
            .grid
            .directions()
            .zip(&self.samples)
            .map(|(xi, h)| h + t.dot(xi))
            .collect();
        Self::from_support_samples(self.grid, samples).expect("translation keeps interior")
    }

    /// Homothety about the origin with factor `s > 0`.
    pub fn scale(&self, s: f64) -> Result<ConvexBody> {
        if !(s > 0.0 && s.is_finite()) {
            return arg(format!("scale factor must be positive, got {s}"));
        }
        if self.exact {
            let shape = self.shape.scaled(s);
            let kind = match self.kind {
                BodyKind::Disc { center, radius } => BodyKind::Disc {
                    center: center * s,
                    radius: radius * s,
                },
                k => k,
            };
            return Ok(Self::from_shape(kind, shape, self.grid));
        }
        Self::from_support_samples(self.grid, self.samples.iter().map(|h| h * s).collect())
    }

    pub fn centroid(&self) -> Vec2 {
        self.shape.centroid()
    }

    /// Distance from the centroid to the boundary; a lower bound for the
    /// inradius.
    pub fn inradius_estimate(&self) -> f64 {
        (-self.shape.signed_distance(self.centroid())).max(0.0)
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        self.shape.bbox()
    }

    /// One-line literal accepted by [`ConvexBody::parse`] for polygons and
    /// discs.
    pub fn describe(&self) -> String {
        match self.kind {
            BodyKind::Polygon => {
                let mut s = String::from("polygon");
                for v in self.shape.core() {
                    s.push_str(&format!(" {} {}", v.x, v.y));
                }
                s
            }
            BodyKind::Disc { center, radius } => format!("disc {} {} {}", center.x, center.y, radius),
            BodyKind::SupportOnly => {
                let core = self.shape.core();
                let mut s = format!(
                    "support-only directions={} exact={} radius={} core",
                    self.grid.len(),
                    self.exact,
                    self.shape.radius()
                );
                for v in core {
                    s.push_str(&format!(" {} {}", v.x, v.y));
                }
                s
            }
        }
    }

    /// Parses `square [a]`, `disc cx cy r`, `polygon x0 y0 x1 y1 ...`, or
    /// `file PATH` (a polygon file).
    pub fn parse(text: &str) -> Result<ConvexBody> {
        let mut it = text.split_whitespace();
        let head = it.next().ok_or_else(|| Error::Parse("empty body literal".into()))?;
        let nums = |rest: Vec<&str>| -> Result<Vec<f64>> {
            rest.iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {t:?} in body literal")))
                })
                .collect()
        };
        let rest: Vec<&str> = it.collect();
        match head {
            "square" => {
                let v = nums(rest)?;
                match v.as_slice() {
                    [] => Self::square(1.0),
                    [a] => Self::square(*a),
                    _ => Err(Error::Parse("square takes at most one half-side".into())),
                }
            }
            "disc" => {
                let v = nums(rest)?;
                match v.as_slice() {
                    [r] => Self::disc(Vec2::ZERO, *r),
                    [cx, cy, r] => Self::disc(Vec2::new(*cx, *cy), *r),
                    _ => Err(Error::Parse("disc literal is \"disc cx cy r\"".into())),
                }
            }
            "polygon" => {
                let v = nums(rest)?;
                if v.len() % 2 != 0 {
                    return Err(Error::Parse("polygon needs an even number of coordinates".into()));
                }
                let pts: Vec<Vec2> = v.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
                Self::polygon(&pts)
            }
            "file" => {
                if rest.is_empty() {
                    return Err(Error::Parse("file literal needs a path".into()));
                }
                Self::from_polygon_file(rest.join(" "))
            }
            other => Err(Error::Parse(format!("unknown body kind {other:?}"))),
        }
    }

    /// Plain-text polygon: one `x y` pair per line, counterclockwise, `#`
    /// comments.
    pub fn parse_polygon_text(text: &str) -> Result<ConvexBody> {
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {t:?}", lineno + 1)))
            };
            if f.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected \"x y\", got {line:?}",
                    lineno + 1
                )));
            }
            pts.push(Vec2::new(parse(f[0])?, parse(f[1])?));
        }
        Self::polygon(&pts)
    }

    pub fn from_polygon_file(path: impl AsRef<Path>) -> Result<ConvexBody> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_polygon_text(&text)
    }
}

impl fmt::Display for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> ConvexBody {
        ConvexBody::square(1.0).unwrap()
    }

    fn b() -> ConvexBody {
        ConvexBody::disc(Vec2::ZERO, 1.0).unwrap()
    }

    #[test]
    fn support_examples() {
        assert_eq!(q().support_eval(Vec2::new(1.0, 0.0)).unwrap(), 1.0);
        let d = Vec2::new(0.5f64.sqrt(), 0.5f64.sqrt());
        assert!((q().support_eval(d).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((b().support_eval(d).unwrap() - 1.0).abs() < 1e-15);
        assert!(q().support_eval(Vec2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn square_plus_disc() {
        let c = ConvexBody::minkowski_combine(&q(), &b(), 0.5).unwrap();
        assert_eq!(c.kind(), BodyKind::SupportOnly);
        assert!((c.area() - (3.0 + PI / 4.0)).abs() < 1e-12);
        assert!(!c.contains(Vec2::new(1.2, 0.0)));
        assert!(c.contains(Vec2::new(1.0, 0.0)));
        let g = c.grid();
        for j in 0..g.len() {
            let xi = g.direction(j);
            let expect = 0.5 * (xi.x.abs() + xi.y.abs()) + 0.5;
            assert!((c.support_samples()[j] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn combining_square_with_itself_is_idempotent() {
        let c = ConvexBody::minkowski_combine(&q(), &q(), 0.5).unwrap();
        assert_eq!(c.kind(), BodyKind::Polygon);
        assert_eq!(c.support_samples(), q().support_samples());
    }

    #[test]
    fn mean_widths() {
        assert!((b().mean_width() - 2.0).abs() < 1e-15);
        assert_eq!(q().mean_width(), 8.0 / PI);
        assert!((q().mean_width_quadrature() - 8.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn hausdorff_examples() {
        let b2 = ConvexBody::disc(Vec2::ZERO, 2.0).unwrap();
        assert!((ConvexBody::hausdorff_distance(&b(), &b2).unwrap() - 1.0).abs() < 1e-15);
        let w = ConvexBody::disc(Vec2::ZERO, 4.0 / PI).unwrap();
        // the maximum sits on the axes, where the square's support is 1
        let d = ConvexBody::hausdorff_distance(&q(), &w).unwrap();
        assert!((d - (4.0 / PI - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rotation_means() {
        assert_eq!(q().rotation_mean(1).unwrap().support_samples(), q().support_samples());
        let d = b().rotation_mean(5).unwrap();
        assert!(matches!(d.kind(), BodyKind::Disc { .. }));
        assert!(ConvexBody::hausdorff_distance(&d, &b()).unwrap() < 1e-12);
        let r = q().rotation_mean(32).unwrap();
        assert!((r.mean_width() - q().mean_width()).abs() < 1e-9);
        assert!(q().rotation_mean(0).is_err());
    }

    #[test]
    fn sampled_bodies_round_trip() {
        let g = DirectionGrid::default();
        let s = ConvexBody::from_support_samples(g, q().support_samples().to_vec()).unwrap();
        assert!((s.area() - 4.0).abs() < 1e-4);
        assert!((s.mean_width() - q().mean_width_quadrature()).abs() < 1e-15);
        assert!(s.contains(Vec2::new(1.0, 1.0)));
        assert!(!s.contains(Vec2::new(1.0 + 1e-9, 0.0)));
        let r = s.rotation_mean(7).unwrap();
        assert!((r.mean_width() - s.mean_width()).abs() < 1e-12);
    }

    #[test]
    fn parse_and_describe() {
        let p = ConvexBody::parse("polygon 0 0 2 0 0 1").unwrap();
        assert!((p.area() - 1.0).abs() < 1e-15);
        let again = ConvexBody::parse(&p.describe()).unwrap();
        assert_eq!(again.support_samples(), p.support_samples());
        let d = ConvexBody::parse("disc 1 2 0.5").unwrap();
        assert_eq!(d.describe(), "disc 1 2 0.5");
        assert!(ConvexBody::parse("triangle").is_err());
        let f = ConvexBody::parse_polygon_text("# unit square\n0 0\n1 0\n1 1\n0 1\n").unwrap();
        assert!((f.area() - 1.0).abs() < 1e-15);
    }
}
