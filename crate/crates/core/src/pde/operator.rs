use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{arg, Error, Result};
use crate::field::GridFunction;
use crate::geometry::{ConvexBody, Vec2};

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.a11 + self.a22);
        let r = (0.5 * (self.a11 - self.a22)).hypot(self.a12);
        (m - r, m + r)
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(s * self.a11, s * self.a12, s * self.a22)
    }

    pub fn lerp(&self, other: &Sym2, mu: f64) -> Sym2 {
        let l = |a: f64, b: f64| (1.0 - mu) * a + mu * b;
        Sym2::new(l(self.a11, other.a11), l(self.a12, other.a12), l(self.a22, other.a22))
    }
}

/// `λ·x` for `x > 0`, `Λ·x` for `x < 0`.
#[inline]
pub(crate) fn pucci_weight(x: f64, lambda: f64, big_lambda: f64) -> f64 {
    if x > 0.0 {
        lambda * x
    } else {
        big_lambda * x
    }
}

/// Minimal Pucci operator `λ Σ_{e>0} e + Λ Σ_{e<0} e` over the eigenvalues.
pub fn pucci_minus(a: &Sym2, lambda: f64, big_lambda: f64) -> f64 {
    let (e0, e1) = a.eigenvalues();
    pucci_weight(e0, lambda, big_lambda) + pucci_weight(e1, lambda, big_lambda)
}

/// Radially symmetric source profiles about the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RadialProfile {
    /// `c + k|x|²`, clipped at zero.
    Paraboloid { c: f64, k: f64 },
    /// `(1 − |x|²/R²)_+^{1/β}`; β-concave.
    BetaBump { radius: f64, beta: f64 },
}

/// Right-hand side `f(x) ≥ 0` of the Dirichlet problems.
#[derive(Clone, Debug)]
pub enum SourceTerm {
    Constant(f64),
    /// `max(c + ⟨a, x⟩, 0)`.
    Affine { c: f64, a: Vec2 },
    Radial(RadialProfile),
    /// Bilinear samples of a concave grid field.
    Sampled(Arc<GridFunction>),
}

impl SourceTerm {
    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            SourceTerm::Constant(c) => *c,
            SourceTerm::Affine { c, a } => (c + a.dot(x)).max(0.0),
            SourceTerm::Radial(RadialProfile::Paraboloid { c, k }) => (c + k * x.norm2()).max(0.0),
            SourceTerm::Radial(RadialProfile::BetaBump { radius, beta }) => {
                let s = 1.0 - x.norm2() / (radius * radius);
                if s <= 0.0 {
                    0.0
                } else {
                    s.powf(1.0 / beta)
                }
            }
            SourceTerm::Sampled(g) => g.sample(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SourceTerm::Constant(c) if *c == 0.0)
    }

    /// Invariant under rotations about the origin.
    pub fn is_rotation_invariant(&self) -> bool {
        matches!(self, SourceTerm::Constant(_) | SourceTerm::Radial(_))
    }

    /// Parses `const c`, `affine c ax ay`, `paraboloid c k`, `beta R β`.
    pub fn parse(text: &str) -> Result<SourceTerm> {
        let f: Vec<&str> = text.split_whitespace().collect();
        let nums = |s: &[&str]| -> Result<Vec<f64>> {
            s.iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {t:?} in source")))
                })
                .collect()
        };
        let src = match f.first().copied() {
            Some("const") | Some("constant") => match nums(&f[1..])?.as_slice() {
                [c] => SourceTerm::Constant(*c),
                _ => return Err(Error::Parse("source literal is \"const c\"".into())),
            },
            Some("affine") => match nums(&f[1..])?.as_slice() {
                [c, ax, ay] => SourceTerm::Affine {
                    c: *c,
                    a: Vec2::new(*ax, *ay),
                },
                _ => return Err(Error::Parse("source literal is \"affine c ax ay\"".into())),
            },
            Some("paraboloid") => match nums(&f[1..])?.as_slice() {
                [c, k] => SourceTerm::Radial(RadialProfile::Paraboloid { c: *c, k: *k }),
                _ => return Err(Error::Parse("source literal is \"paraboloid c k\"".into())),
            },
            Some("beta") => match nums(&f[1..])?.as_slice() {
                [r, b] => SourceTerm::Radial(RadialProfile::BetaBump {
                    radius: *r,
                    beta: *b,
                }),
                _ => return Err(Error::Parse("source literal is \"beta R beta\"".into())),
            },
            _ => return Err(Error::Parse(format!("unknown source {text:?}"))),
        };
        src.validate()?;
        Ok(src)
    }

    fn validate(&self) -> Result<()> {
        match self {
            SourceTerm::Constant(c) if !(*c >= 0.0 && c.is_finite()) => {
                arg(format!("constant source must be finite and non-negative, got {c}"))
            }
            SourceTerm::Radial(RadialProfile::BetaBump { radius, beta })
                if !(*radius > 0.0 && *beta > 0.0) =>
            {
                arg("beta bump needs positive radius and β")
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Constant(c) => write!(f, "const {c}"),
            SourceTerm::Affine { c, a } => write!(f, "affine {c} {} {}", a.x, a.y),
            SourceTerm::Radial(RadialProfile::Paraboloid { c, k }) => write!(f, "paraboloid {c} {k}"),
            SourceTerm::Radial(RadialProfile::BetaBump { radius, beta }) => {
                write!(f, "beta {radius} {beta}")
            }
            SourceTerm::Sampled(g) => write!(f, "sampled h={}", g.h()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    Poisson,
    PucciMinus,
}

/// `F(D²u) + f(x)` with `F = tr` or `F = M⁻_{λ,Λ}`.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub lambda: f64,
    pub big_lambda: f64,
    pub source: SourceTerm,
    /// Number of orthogonal stencil frames for the Pucci scheme.
    pub frames: usize,
}

pub const DEFAULT_FRAMES: usize = 8;

impl OperatorSpec {
    pub fn poisson(source: SourceTerm) -> Result<Self> {
        source.validate()?;
        Ok(Self {
            kind: OperatorKind::Poisson,
            lambda: 1.0,
            big_lambda: 1.0,
            source,
            frames: 1,
        })
    }

    pub fn pucci(lambda: f64, big_lambda: f64, source: SourceTerm, frames: usize) -> Result<Self> {
        if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
            return arg(format!("Pucci needs 0 < λ ≤ Λ, got λ={lambda}, Λ={big_lambda}"));
        }
        if frames < 2 {
            return arg(format!("Pucci needs at least 2 frames, got {frames}"));
        }
        source.validate()?;
        Ok(Self {
            kind: OperatorKind::PucciMinus,
            lambda,
            big_lambda,
            source,
            frames,
        })
    }

    /// `F(x, ·, ·, A) = tr A + f(x)` or `M⁻(A) + f(x)`.
    pub fn eval(&self, x: Vec2, a: &Sym2) -> f64 {
        let second = match self.kind {
            OperatorKind::Poisson => a.trace(),
            OperatorKind::PucciMinus => pucci_minus(a, self.lambda, self.big_lambda),
        };
        second + self.source.eval(x)
    }

    pub fn is_rotation_invariant(&self) -> bool {
        self.source.is_rotation_invariant()
    }
}

/// The operator seen by `t = u^p` (or `t = log u` at `p = 0`):
/// `F(x, t^{1/p}, t^{1/p−1}θ, t^{1/p−3}A)` for `p > 0` and
/// `F(x, e^t, e^t θ, e^t A)` for `p = 0`. The implemented operators do not
/// depend on `u` or `Du`, so `θ` only enters through the signature.
pub fn transformed_operator_value(
    spec: &OperatorSpec,
    p: f64,
    _theta: Vec2,
    x: Vec2,
    t: f64,
    a: &Sym2,
) -> Result<f64> {
    if !(p >= 0.0 && p.is_finite()) {
        return arg(format!("p must be finite and non-negative, got {p}"));
    }
    if p == 0.0 {
        return Ok(spec.eval(x, &a.scale(t.exp())));
    }
    if !(t > 0.0) {
        return arg(format!("t must be positive for p > 0, got {t}"));
    }
    Ok(spec.eval(x, &a.scale(t.powf(1.0 / p - 3.0))))
}

/// `g_p(x, t) = t^{3−1/p} f(x)` for `p > 0`, `e^{−t} f(x)` for `p = 0`.
pub fn source_transform(f: &SourceTerm, p: f64, x: Vec2, t: f64) -> f64 {
    if p == 0.0 {
        (-t).exp() * f.eval(x)
    } else {
        t.powf(3.0 - 1.0 / p) * f.eval(x)
    }
}

/// Result of a sampled inequality check.
#[derive(Clone, Debug, Serialize)]
pub struct SampledCheck {
    pub name: String,
    pub samples: usize,
    pub min_slack: f64,
    pub pass: bool,
    /// Coordinates of the worst sample when the check fails.
    pub witness: Option<Vec<f64>>,
}

impl SampledCheck {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            samples: 0,
            min_slack: f64::INFINITY,
            pass: true,
            witness: None,
        }
    }

    fn record(&mut self, slack: f64, coords: impl FnOnce() -> Vec<f64>) {
        self.samples += 1;
        if slack < self.min_slack {
            self.min_slack = slack;
            self.witness = Some(coords());
        }
    }

    fn finish(mut self, tol: f64) -> Self {
        self.pass = self.min_slack >= -tol;
        if self.pass {
            self.witness = None;
        }
        self
    }
}

/// Outcome of the sufficient source condition for the Laplacian family.
#[derive(Clone, Debug, Serialize)]
pub struct SourceConditionReport {
    pub p: f64,
    pub mu: f64,
    pub transformed: SampledCheck,
    /// Midpoint concavity of `f`, run when the three sources coincide.
    pub midpoint_concavity: Option<SampledCheck>,
    pub pass: bool,
}

/// Uniform point of a body by rejection from its bounding box.
pub(crate) fn random_point<R: Rng + ?Sized>(body: &ConvexBody, rng: &mut R) -> Vec2 {
    let (lo, hi) = body.bbox();
    loop {
        let x = Vec2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
        if body.contains(x) {
            return x;
        }
    }
}

/// Relative tolerance for sampled source inequalities.
const SOURCE_TOL: f64 = 1e-12;

/// Samples `g_{μ,p}((1−μ)x₀+μx₁, (1−μ)t₀+μt₁) ≥ (1−μ)g_{0,p}(x₀,t₀) + μ
/// g_{1,p}(x₁,t₁)` with `t` log-uniform in `[1e−2, 1e2]`. When the three
/// sources are the same value the midpoint concavity of `f` is also
/// sampled.
#[allow(clippy::too_many_arguments)]
pub fn check_source_condition(
    f0: &SourceTerm,
    f1: &SourceTerm,
    fmu: &SourceTerm,
    b0: &ConvexBody,
    b1: &ConvexBody,
    mu: f64,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<SourceConditionReport> {
    if !(mu > 0.0 && mu < 1.0) {
        return arg(format!("μ must lie in (0,1), got {mu}"));
    }
    if !(p >= 0.0 && p.is_finite()) {
        return arg(format!("p must be finite and non-negative, got {p}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = SampledCheck::new("transformed_source");
    let mut scale: f64 = 0.0;
    for _ in 0..samples {
        let x0 = random_point(b0, &mut rng);
        let x1 = random_point(b1, &mut rng);
        let t0 = 10f64.powf(rng.gen_range(-2.0..=2.0));
        let t1 = 10f64.powf(rng.gen_range(-2.0..=2.0));
        let xm = x0 * (1.0 - mu) + x1 * mu;
        let tm = (1.0 - mu) * t0 + mu * t1;
        let lhs = source_transform(fmu, p, xm, tm);
        let rhs = (1.0 - mu) * source_transform(f0, p, x0, t0) + mu * source_transform(f1, p, x1, t1);
        scale = scale.max(lhs.abs()).max(rhs.abs());
        g.record(lhs - rhs, || vec![x0.x, x0.y, x1.x, x1.y, t0, t1]);
    }
    let transformed = g.finish(SOURCE_TOL * scale.max(1.0));
    let same = same_source(f0, f1) && same_source(f0, fmu);
    let midpoint_concavity = same.then(|| {
        let mut c = SampledCheck::new("midpoint_concavity");
        let mut scale: f64 = 0.0;
        for _ in 0..samples {
            let x0 = random_point(b0, &mut rng);
            let x1 = random_point(b1, &mut rng);
            let lhs = f0.eval((x0 + x1) * 0.5);
            let rhs = 0.5 * (f0.eval(x0) + f0.eval(x1));
            scale = scale.max(lhs.abs()).max(rhs.abs());
            c.record(lhs - rhs, || vec![x0.x, x0.y, x1.x, x1.y]);
        }
        c.finish(SOURCE_TOL * scale.max(1.0))
    });
    let pass = transformed.pass && midpoint_concavity.as_ref().is_none_or(|c| c.pass);
    Ok(SourceConditionReport {
        p,
        mu,
        transformed,
        midpoint_concavity,
        pass,
    })
}

fn same_source(a: &SourceTerm, b: &SourceTerm) -> bool {
    match (a, b) {
        (SourceTerm::Constant(x), SourceTerm::Constant(y)) => x == y,
        (SourceTerm::Affine { c, a }, SourceTerm::Affine { c: d, a: b }) => c == d && a == b,
        (SourceTerm::Radial(x), SourceTerm::Radial(y)) => x == y,
        (SourceTerm::Sampled(x), SourceTerm::Sampled(y)) => Arc::ptr_eq(x, y),
        _ => false,
    }
}

fn random_sym<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Sym2 {
    Sym2::new(
        rng.gen_range(-scale..=scale),
        rng.gen_range(-scale..=scale),
        rng.gen_range(-scale..=scale),
    )
}

/// Samples the min-form assumption
/// `G_μ((1−μ)x₀+μx₁, (1−μ)t₀+μt₁, (1−μ)A₀+μA₁) ≥ min{G₀(x₀,t₀,A₀), G₁(x₁,t₁,A₁)}`
/// for one operator family with per-domain sources, `θ` drawn from a fixed
/// set.
#[allow(clippy::too_many_arguments)]
pub fn check_assumption(
    op0: &OperatorSpec,
    op1: &OperatorSpec,
    opmu: &OperatorSpec,
    b0: &ConvexBody,
    b1: &ConvexBody,
    mu: f64,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<SampledCheck> {
    if !(mu > 0.0 && mu < 1.0) {
        return arg(format!("μ must lie in (0,1), got {mu}"));
    }
    let thetas = [
        Vec2::ZERO,
        Vec2::new(1.0, 0.0),
        Vec2::new(0.0, 1.0),
        Vec2::new(-1.0, 1.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = SampledCheck::new("assumption_min_form");
    let mut scale: f64 = 0.0;
    for k in 0..samples {
        let theta = thetas[k % thetas.len()];
        let x0 = random_point(b0, &mut rng);
        let x1 = random_point(b1, &mut rng);
        let (t0, t1) = if p == 0.0 {
            (rng.gen_range(-3.0..=3.0), rng.gen_range(-3.0..=3.0))
        } else {
            (10f64.powf(rng.gen_range(-2.0..=2.0)), 10f64.powf(rng.gen_range(-2.0..=2.0)))
        };
        let a0 = random_sym(&mut rng, 2.0);
        let a1 = random_sym(&mut rng, 2.0);
        let g0 = transformed_operator_value(op0, p, theta, x0, t0, &a0)?;
        let g1 = transformed_operator_value(op1, p, theta, x1, t1, &a1)?;
        let xm = x0 * (1.0 - mu) + x1 * mu;
        let tm = (1.0 - mu) * t0 + mu * t1;
        let gm = transformed_operator_value(opmu, p, theta, xm, tm, &a0.lerp(&a1, mu))?;
        let rhs = g0.min(g1);
        scale = scale.max(gm.abs()).max(rhs.abs());
        c.record(gm - rhs, || {
            vec![x0.x, x0.y, x1.x, x1.y, t0, t1, theta.x, theta.y]
        });
    }
    Ok(c.finish(SOURCE_TOL * scale.max(1.0)))
}
