use serde::Serialize;

use super::operator::{pucci_weight, OperatorKind, OperatorSpec, SourceTerm};
use crate::error::{arg, Error, Result};
use crate::field::{GridFunction, NodeKind};
use crate::geometry::{ConvexBody, Vec2};

/// How the nonlinear Pucci system is iterated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PucciMethod {
    /// Policy iteration: freeze the minimizing frame and signs, solve the
    /// resulting linear M-matrix system by SOR, repeat.
    PolicyIteration,
    /// Explicit Jacobi pseudo-time stepping `u ← u + dt (M⁻_h u + f)`.
    PseudoTime,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveParams {
    pub h: f64,
    /// Threshold on the scaled residual, relative to `max(1, max f)`.
    pub tol: f64,
    /// Sweep (or pseudo-time step) budget.
    pub max_iters: usize,
    /// SOR factor for linear problems (Poisson, or Pucci with `λ = Λ`).
    pub relaxation: f64,
    /// SOR factor for the frozen-policy systems of a genuine Pucci solve.
    /// These are non-symmetric M-matrices mixing frames node by node, where
    /// over-relaxation can diverge; Gauss-Seidel (1.0) always converges.
    pub policy_relaxation: f64,
    pub method: PucciMethod,
    /// Pseudo-time step; defaults to `0.9 h²/(4Λ)`.
    pub pseudo_dt: Option<f64>,
    /// Local step cap `dt_safety / diag` for shortened boundary arms.
    pub dt_safety: f64,
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_RELAXATION: f64 = 1.7;

impl SolveParams {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            tol: DEFAULT_TOL,
            max_iters: 200_000,
            relaxation: DEFAULT_RELAXATION,
            policy_relaxation: 1.0,
            method: PucciMethod::PolicyIteration,
            pseudo_dt: None,
            dt_safety: 0.9,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return arg(format!("tolerance must be positive, got {}", self.tol));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return arg(format!("relaxation must lie in (0,2), got {}", self.relaxation));
        }
        if !(self.policy_relaxation > 0.0 && self.policy_relaxation < 2.0) {
            return arg(format!(
                "policy relaxation must lie in (0,2), got {}",
                self.policy_relaxation
            ));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return arg(format!("dt_safety must lie in (0,1], got {}", self.dt_safety));
        }
        Ok(())
    }
}

/// A solved field and its iteration record.
#[derive(Clone, Debug)]
pub struct Solution {
    pub field: GridFunction,
    pub iterations: usize,
    pub residual: f64,
}

const NO_NODE: u32 = u32::MAX;

/// One directional second difference `c₊u₊ + c₋u₋ − (c₊ + c₋)u₀`; a missing
/// neighbour is boundary data (zero).
#[derive(Clone, Copy, Debug)]
struct Dir {
    cp: f64,
    ip: u32,
    cm: f64,
    im: u32,
}

impl Dir {
    #[inline]
    fn diag(&self) -> f64 {
        self.cp + self.cm
    }

    #[inline]
    fn neighbours(&self, u: &[f64]) -> f64 {
        let up = if self.ip == NO_NODE { 0.0 } else { u[self.ip as usize] };
        let um = if self.im == NO_NODE { 0.0 } else { u[self.im as usize] };
        self.cp * up + self.cm * um
    }
}

/// Lattice directions `(a, b)`, `a ≥ 1`, `b ≥ 0`, coprime, by increasing
/// length then angle. Each gives the orthogonal frame `{(a,b), (−b,a)}`.
pub fn lattice_frames(k: usize) -> Vec<[(i64, i64); 2]> {
    let mut dirs = Vec::new();
    let mut r = 1;
    while dirs.len() < k {
        dirs.clear();
        for a in 1..=r {
            for b in 0..=r {
                if gcd(a, b) == 1 {
                    dirs.push((a, b));
                }
            }
        }
        dirs.sort_by(|&(a0, b0), &(a1, b1)| {
            (a0 * a0 + b0 * b0)
                .cmp(&(a1 * a1 + b1 * b1))
                .then(((b0 as f64).atan2(a0 as f64)).total_cmp(&(b1 as f64).atan2(a1 as f64)))
        });
        // only lengths ≤ r are complete in the enumeration
        dirs.retain(|&(a, b)| a * a + b * b <= r * r);
        r += 1;
    }
    dirs.truncate(k);
    dirs.into_iter().map(|(a, b)| [(a, b), (-b, a)]).collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Assembled monotone stencil on the strictly inside nodes.
struct Stencil {
    /// Lattice index of each unknown, row-major.
    nodes: Vec<usize>,
    dirs_per_node: usize,
    dirs: Vec<Dir>,
    rhs: Vec<f64>,
}

fn assemble(field: &GridFunction, frames: &[[(i64, i64); 2]], source: &SourceTerm) -> Stencil {
    let domain = field.domain();
    let lat = *domain.lattice();
    let shape = domain.body().shape();
    let h = lat.h;
    let mut nodes = Vec::new();
    for k in 0..lat.len() {
        if domain.kind_at(k).is_inside() {
            nodes.push(k);
        }
    }
    let dirs_per_node = 2 * frames.len();
    let mut dirs = Vec::with_capacity(nodes.len() * dirs_per_node);
    let mut rhs = Vec::with_capacity(nodes.len());
    for &k in &nodes {
        let (i, j) = ((k % lat.nx) as i64, (k / lat.nx) as i64);
        let x = lat.node(i as usize, j as usize);
        rhs.push(source.eval(x));
        for frame in frames {
            for &(a, b) in frame {
                let len = ((a * a + b * b) as f64).sqrt() * h;
                let unit = Vec2::new(a as f64, b as f64) * (h / len);
                let arm = |s: i64| -> (f64, u32) {
                    let (ni, nj) = (i + s * a, j + s * b);
                    if ni >= 0 && nj >= 0 && (ni as usize) < lat.nx && (nj as usize) < lat.ny {
                        let nk = lat.index(ni as usize, nj as usize);
                        match domain.kind_at(nk) {
                            NodeKind::Interior | NodeKind::BoundaryAdjacent => return (1.0, nk as u32),
                            NodeKind::OnBoundary => return (1.0, NO_NODE),
                            NodeKind::Exterior => {}
                        }
                    }
                    let d = unit * s as f64;
                    let exit = shape.line_chord(x, d).map_or(len, |(_, t1)| t1);
                    ((exit / len).clamp(f64::MIN_POSITIVE, 1.0), NO_NODE)
                };
                let (fp, ip) = arm(1);
                let (fm, im) = arm(-1);
                let base = 2.0 / (len * len * (fp + fm));
                dirs.push(Dir {
                    cp: base / fp,
                    ip,
                    cm: base / fm,
                    im,
                });
            }
        }
    }
    Stencil {
        nodes,
        dirs_per_node,
        dirs,
        rhs,
    }
}

/// Scalar node equation `Φ(u₀) = min_frames Σ w(s_d − c_d u₀) + f`.
struct NodeEq<'a> {
    s: &'a [f64],
    c: &'a [f64],
    f: f64,
    lambda: f64,
    big_lambda: f64,
}

impl NodeEq<'_> {
    #[inline]
    fn eval(&self, u0: f64) -> f64 {
        let mut best = f64::INFINITY;
        for (s, c) in self.s.chunks_exact(2).zip(self.c.chunks_exact(2)) {
            let v: f64 = (0..2).map(|q| pucci_weight(s[q] - c[q] * u0, self.lambda, self.big_lambda)).sum();
            best = best.min(v);
        }
        best + self.f
    }
}

struct Workspace {
    s: Vec<f64>,
    c: Vec<f64>,
}

impl Stencil {
    fn load(&self, n: usize, u: &[f64], ws: &mut Workspace) {
        let dirs = &self.dirs[n * self.dirs_per_node..(n + 1) * self.dirs_per_node];
        for (q, d) in dirs.iter().enumerate() {
            ws.s[q] = d.neighbours(u);
            ws.c[q] = d.diag();
        }
    }

    /// Largest diagonal over frames, scaled so a full interior 5-point
    /// stencil gives 1.
    fn diag_scale(&self, n: usize, h: f64) -> f64 {
        let dirs = &self.dirs[n * self.dirs_per_node..(n + 1) * self.dirs_per_node];
        let m = dirs
            .chunks_exact(2)
            .map(|f| f[0].diag() + f[1].diag())
            .fold(0.0, f64::max);
        (m * h * h / 4.0).max(1.0)
    }
}

/// Linear monotone system obtained by freezing the minimizing frame and the
/// sign of each of its directional differences.
struct Policy {
    nb: Vec<[(u32, f64); 4]>,
    diag: Vec<f64>,
}

impl Policy {
    #[inline]
    fn row(&self, n: usize, u: &[f64]) -> (f64, f64) {
        let acc = self.nb[n]
            .iter()
            .filter(|(k, _)| *k != NO_NODE)
            .map(|&(k, c)| c * u[k as usize])
            .sum::<f64>();
        (acc, self.diag[n])
    }
}

impl Stencil {
    /// Refreshes the policy at `u` and returns the scaled nonlinear residual.
    fn update_policy(
        &self,
        u: &[f64],
        lambda: f64,
        big_lambda: f64,
        scales: &[f64],
        ws: &mut Workspace,
        policy: &mut Policy,
    ) -> f64 {
        let mut r: f64 = 0.0;
        for (n, &k) in self.nodes.iter().enumerate() {
            self.load(n, u, ws);
            let u0 = u[k];
            let mut best = (f64::INFINITY, 0);
            for (fi, (s, c)) in ws.s.chunks_exact(2).zip(ws.c.chunks_exact(2)).enumerate() {
                let v: f64 = (0..2).map(|q| pucci_weight(s[q] - c[q] * u0, lambda, big_lambda)).sum();
                if v < best.0 {
                    best = (v, fi);
                }
            }
            r = r.max((best.0 + self.rhs[n]).abs() / scales[n]);
            let dirs = &self.dirs[n * self.dirs_per_node + 2 * best.1..][..2];
            let mut row = [(NO_NODE, 0.0); 4];
            let mut diag = 0.0;
            for (q, d) in dirs.iter().enumerate() {
                let w = if ws.s[2 * best.1 + q] - ws.c[2 * best.1 + q] * u0 > 0.0 {
                    lambda
                } else {
                    big_lambda
                };
                row[2 * q] = (d.ip, w * d.cp);
                row[2 * q + 1] = (d.im, w * d.cm);
                diag += w * d.diag();
            }
            policy.nb[n] = row;
            policy.diag[n] = diag;
        }
        r
    }
}

/// Solves `F(D²u) + f = 0` in the body, `u = 0` on the boundary.
pub fn solve(body: &ConvexBody, spec: &OperatorSpec, params: &SolveParams) -> Result<Solution> {
    params.validate()?;
    let mut field = crate::field::discretize(body, params.h)?;
    let (frames, lambda, big_lambda) = match spec.kind {
        OperatorKind::Poisson => (lattice_frames(1), 1.0, 1.0),
        OperatorKind::PucciMinus => {
            let k = if spec.lambda == spec.big_lambda { 1 } else { spec.frames };
            (lattice_frames(k), spec.lambda, spec.big_lambda)
        }
    };
    let stencil = assemble(&field, &frames, &spec.source);
    if stencil.rhs.iter().any(|&f| !(f >= 0.0)) {
        return arg("source must be non-negative on the body");
    }
    let fmax = stencil.rhs.iter().fold(0.0f64, |a, &b| a.max(b));
    let threshold = params.tol * fmax.max(1.0);
    let h = params.h;
    let scales: Vec<f64> = (0..stencil.nodes.len()).map(|n| stencil.diag_scale(n, h)).collect();
    let mut u = vec![0.0; field.lattice().len()];
    let mut ws = Workspace {
        s: vec![0.0; stencil.dirs_per_node],
        c: vec![0.0; stencil.dirs_per_node],
    };
    let pseudo_time = spec.kind == OperatorKind::PucciMinus && params.method == PucciMethod::PseudoTime;
    let (iterations, res) = if pseudo_time {
        let limit = h * h / (4.0 * big_lambda);
        let dt = params.pseudo_dt.unwrap_or(0.9 * limit);
        if !(dt > 0.0 && dt <= limit) {
            return arg(format!(
                "pseudo_dt = {dt} violates the monotonicity bound h²/(4Λ) = {limit}"
            ));
        }
        let dts: Vec<f64> = (0..stencil.nodes.len())
            .map(|n| dt.min(params.dt_safety / (big_lambda * scales[n] * 4.0 / (h * h))))
            .collect();
        let mut next = u.clone();
        let mut it = 0;
        loop {
            let mut r: f64 = 0.0;
            for (n, &k) in stencil.nodes.iter().enumerate() {
                stencil.load(n, &u, &mut ws);
                let eq = NodeEq {
                    s: &ws.s,
                    c: &ws.c,
                    f: stencil.rhs[n],
                    lambda,
                    big_lambda,
                };
                let v = eq.eval(u[k]);
                r = r.max(v.abs() / scales[n]);
                next[k] = u[k] + dts[n] * v;
            }
            if r <= threshold {
                break (it, r);
            }
            if it >= params.max_iters {
                return Err(Error::Solver {
                    iterations: it,
                    residual: r,
                });
            }
            std::mem::swap(&mut u, &mut next);
            it += 1;
        }
    } else {
        let omega = if lambda == big_lambda {
            params.relaxation
        } else {
            params.policy_relaxation
        };
        let mut policy = Policy {
            nb: vec![[(NO_NODE, 0.0); 4]; stencil.nodes.len()],
            diag: vec![0.0; stencil.nodes.len()],
        };
        let mut sweeps = 0;
        loop {
            let r = stencil.update_policy(&u, lambda, big_lambda, &scales, &mut ws, &mut policy);
            if r <= threshold {
                break (sweeps, r);
            }
            if sweeps >= params.max_iters {
                return Err(Error::Solver {
                    iterations: sweeps,
                    residual: r,
                });
            }
            // inexact inner solve; the final pass tightens to below the threshold
            let target = (1e-3 * r).max(0.5 * threshold);
            loop {
                for (n, &k) in stencil.nodes.iter().enumerate() {
                    let (acc, d) = policy.row(n, &u);
                    u[k] += omega * ((acc + stencil.rhs[n]) / d - u[k]);
                }
                sweeps += 1;
                if sweeps % 10 == 0 || sweeps >= params.max_iters {
                    let rl = stencil
                        .nodes
                        .iter()
                        .enumerate()
                        .map(|(n, &k)| {
                            let (acc, d) = policy.row(n, &u);
                            (acc + stencil.rhs[n] - d * u[k]).abs() / scales[n]
                        })
                        .fold(0.0, f64::max);
                    if rl <= target || sweeps >= params.max_iters {
                        break;
                    }
                }
            }
        }
    };
    field.values_mut().copy_from_slice(&u);
    Ok(Solution {
        field,
        iterations,
        residual: res,
    })
}

/// 5-point Shortley-Weller discretization of `Δu + f = 0`.
pub fn solve_poisson(body: &ConvexBody, f: &SourceTerm, params: &SolveParams) -> Result<GridFunction> {
    let spec = OperatorSpec::poisson(f.clone())?;
    Ok(solve(body, &spec, params)?.field)
}

/// Wide-stencil monotone discretization of `M⁻_{λ,Λ}(D²u) + f = 0`.
pub fn solve_pucci(body: &ConvexBody, spec: &OperatorSpec, params: &SolveParams) -> Result<GridFunction> {
    if spec.kind != OperatorKind::PucciMinus {
        return arg("solve_pucci needs a Pucci operator");
    }
    Ok(solve(body, spec, params)?.field)
}

/// `∫_Ω u` for the torsion solution.
pub fn torsional_rigidity(gf: &GridFunction) -> f64 {
    gf.lq_norm(1.0).expect("q = 1 is valid")
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfReport {
    pub min_slope: f64,
    pub mean_slope: f64,
    pub nodes_tested: usize,
    pub nodes_excluded: usize,
    /// Boundary point with the smallest slope.
    pub worst_point: Option<Vec2>,
    pub pass: bool,
}

/// Inward normal slope `u(b − 2h n)/(2h)` at the nearest boundary point `b`
/// of every boundary-adjacent node, skipping nodes whose `b` lies within
/// `corner_exclusion·h` of a polygon vertex.
pub fn hopf_boundary_check(gf: &GridFunction, corner_exclusion: f64) -> HopfReport {
    let domain = gf.domain();
    let lat = *domain.lattice();
    let shape = domain.body().shape();
    let h = lat.h;
    let corners = shape.corners();
    let mut min_slope = f64::INFINITY;
    let mut sum = 0.0;
    let mut tested = 0;
    let mut excluded = 0;
    let mut worst = None;
    for k in 0..lat.len() {
        if domain.kind_at(k) != NodeKind::BoundaryAdjacent {
            continue;
        }
        let x = lat.node(k % lat.nx, k / lat.nx);
        let (b, n) = shape.nearest_boundary(x);
        if corners.iter().any(|&c| (c - b).norm() < corner_exclusion * h) {
            excluded += 1;
            continue;
        }
        let slope = gf.sample(b - n * (2.0 * h)) / (2.0 * h);
        tested += 1;
        sum += slope;
        if slope < min_slope {
            min_slope = slope;
            worst = Some(b);
        }
    }
    if tested == 0 {
        min_slope = 0.0;
    }
    HopfReport {
        min_slope,
        mean_slope: if tested > 0 { sum / tested as f64 } else { 0.0 },
        nodes_tested: tested,
        nodes_excluded: excluded,
        worst_point: worst,
        pass: tested > 0 && min_slope > 0.0,
    }
}
