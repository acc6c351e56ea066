use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExperimentConfig, OperatorChoice, Report, ReportBuilder, SlackBudget};
use crate::convolve::convolve_binary;
use crate::error::{Error, Result};
use crate::field::GridFunction;
use crate::geometry::{ConvexBody, Vec2};
use crate::means::{corollary_exponent, p_mean};
use crate::pde::{
    check_assumption, check_source_condition, solve, torsional_rigidity, OperatorSpec, SourceTerm,
};
use crate::rearrange::{schwarz_ball, sharp_ball, sharp_rearrangement, superlevel_growth};

/// Solution on `h` with an error estimate `|u_h − u_{2h}|/3` from a solve on
/// `2h`; `tol` when `2h` is too coarse for the body.
struct Solved {
    u: GridFunction,
    error: f64,
}

fn solve_with_estimate(cfg: &ExperimentConfig, body: &ConvexBody, spec: &OperatorSpec) -> Result<Solved> {
    let u = solve(body, spec, &cfg.solve_params(cfg.h))?.field;
    let error = match solve(body, spec, &cfg.solve_params(2.0 * cfg.h)) {
        Ok(coarse) => u.max_diff_on_shared_nodes(&coarse.field)? / 3.0,
        Err(Error::Resolution(_)) => cfg.tol,
        Err(e) => return Err(e),
    };
    Ok(Solved { u, error })
}

/// `|quadrature area − area| / area` of a solution's grid.
fn area_defect(u: &GridFunction) -> f64 {
    let a = u.body().area();
    (u.domain().quadrature_area() - a).abs() / a
}

fn fmt_r(r: f64) -> String {
    if r == f64::INFINITY {
        "inf".into()
    } else {
        format!("{r}")
    }
}

/// The three problems of the Minkowski-combination experiments.
struct Triple {
    s0: Solved,
    s1: Solved,
    smu: Solved,
    p: f64,
    /// Source precondition outcome: `None` when it passed.
    precondition_slack: Option<(f64, Option<Vec<f64>>)>,
    precondition_min: f64,
}

fn sources(cfg: &ExperimentConfig) -> Result<(SourceTerm, SourceTerm, SourceTerm)> {
    Ok((
        cfg.source_term(cfg.source0.as_ref())?,
        cfg.source_term(cfg.source1.as_ref())?,
        cfg.source_term(cfg.source_mu.as_ref())?,
    ))
}

fn solve_triple(cfg: &ExperimentConfig) -> Result<Triple> {
    let p = cfg.resolved_p()?;
    let b0 = cfg.body_from(&cfg.body0, 0)?;
    let b1 = cfg.body_from(&cfg.body1, 1)?;
    let bmu = ConvexBody::minkowski_combine(&b0, &b1, cfg.mu)?;
    let (f0, f1, fmu) = sources(cfg)?;
    let (op0, op1, opmu) = (
        cfg.operator_with(f0.clone())?,
        cfg.operator_with(f1.clone())?,
        cfg.operator_with(fmu.clone())?,
    );
    // the Laplacian family has the explicit source condition; other
    // operators are held to the sampled min-form assumption
    let (pass, min_slack, witness) = match cfg.operator {
        OperatorChoice::Poisson => {
            let r = check_source_condition(&f0, &f1, &fmu, &b0, &b1, cfg.mu, p, cfg.samples, cfg.seed)?;
            let mut min = r.transformed.min_slack;
            let mut witness = r.transformed.witness.clone();
            if let Some(c) = &r.midpoint_concavity {
                if c.min_slack < min {
                    min = c.min_slack;
                    witness = c.witness.clone();
                }
            }
            (r.pass, min, witness)
        }
        OperatorChoice::Pucci => {
            let c = check_assumption(&op0, &op1, &opmu, &b0, &b1, cfg.mu, p, cfg.samples, cfg.seed)?;
            (c.pass, c.min_slack, c.witness)
        }
    };
    if !pass && !cfg.waiver {
        return Err(Error::Config(format!(
            "the source does not satisfy the concavity precondition for p = {p} (min slack {min_slack:e}); set waiver = true to run descriptively"
        )));
    }
    let s0 = solve_with_estimate(cfg, &b0, &op0)?;
    let s1 = solve_with_estimate(cfg, &b1, &op1)?;
    let smu = solve_with_estimate(cfg, &bmu, &opmu)?;
    Ok(Triple {
        s0,
        s1,
        smu,
        p,
        precondition_slack: (!pass).then_some((min_slack, witness)),
        precondition_min: min_slack,
    })
}

impl Triple {
    fn solver_error(&self) -> f64 {
        self.s0.error.max(self.s1.error).max(self.smu.error)
    }

    fn lipschitz(&self) -> f64 {
        self.s0
            .u
            .lipschitz_estimate()
            .max(self.s1.u.lipschitz_estimate())
            .max(self.smu.u.lipschitz_estimate())
    }

    fn h(&self) -> f64 {
        self.s0.u.h()
    }

    /// Records the precondition and switches to descriptive mode when it
    /// was waived.
    fn precondition(&self, rb: &mut ReportBuilder) {
        match &self.precondition_slack {
            None => rb.push(super::Check::ge("source_precondition", self.precondition_min, 0.0, rb.eps)),
            Some((slack, witness)) => {
                rb.push(super::Check::ge("source_precondition", *slack, 0.0, rb.eps).into_info());
                if let Some(w) = witness {
                    rb.witnesses.push(super::Witness {
                        check: "source_precondition".into(),
                        point: w.clone(),
                        note: "waived; later records are descriptive".into(),
                    });
                }
                rb.descriptive();
            }
        }
    }

    fn max_record(&self, rb: &mut ReportBuilder, mu: f64) -> Result<()> {
        let lhs = self.smu.u.max_value();
        let rhs = p_mean(self.s0.u.max_value().max(0.0), self.s1.u.max_value().max(0.0), mu, self.p)?;
        rb.ge("max_nodes", lhs, rhs);
        Ok(())
    }
}

fn budget_for(cfg: &ExperimentConfig, solver_error: f64, lipschitz: f64, h: f64, quadrature: f64) -> (SlackBudget, f64) {
    let b = SlackBudget {
        solver: 2.0 * solver_error,
        interpolation: 2.0 * lipschitz * h,
        quadrature,
    };
    (b, cfg.epsilon.unwrap_or_else(|| b.total()))
}

/// Nodes on an evenly spaced `n × n` index subgrid that lie inside the body.
fn pair_subgrid(u: &GridFunction, n: usize) -> Vec<(Vec2, f64)> {
    let lat = *u.lattice();
    let pick = |len: usize| -> Vec<usize> {
        let mut v: Vec<usize> = (0..n)
            .map(|k| ((k as f64) * (len - 1) as f64 / (n - 1) as f64).round() as usize)
            .collect();
        v.dedup();
        v
    };
    let (is, js) = (pick(lat.nx), pick(lat.ny));
    let mut out = Vec::new();
    for &j in &js {
        for &i in &is {
            if u.kind(i, j).in_closure() {
                out.push((lat.node(i, j), u.value(i, j)));
            }
        }
    }
    out
}

/// Pointwise `u_μ((1−μ)x₀+μx₁) ≥ M_p(u₀(x₀), u₁(x₁); μ) − ε` over all
/// pairs of the coarsened subgrids.
pub fn run_theorem41(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let t = solve_triple(cfg)?;
    let (budget, eps) = budget_for(cfg, t.solver_error(), t.lipschitz(), t.h(), 0.0);
    let mut rb = ReportBuilder::new(eps);
    t.precondition(&mut rb);

    let a = pair_subgrid(&t.s0.u, cfg.pair_grid);
    let b = pair_subgrid(&t.s1.u, cfg.pair_grid);
    let (mu, p) = (cfg.mu, t.p);
    let umu = &t.smu.u;
    // worst pair per x₀, then overall; slack, lhs, rhs, x₀, x₁
    type Worst = (f64, f64, f64, Vec2, Vec2);
    let per_x0: Vec<Result<Worst>> = cfg.exec.map(a.len(), |k| {
        let (x0, v0) = a[k];
        let mut worst: Worst = (f64::INFINITY, 0.0, 0.0, x0, x0);
        for &(x1, v1) in &b {
            let lhs = umu.sample(x0 * (1.0 - mu) + x1 * mu);
            let rhs = p_mean(v0.max(0.0), v1.max(0.0), mu, p)?;
            if lhs - rhs < worst.0 {
                worst = (lhs - rhs, lhs, rhs, x0, x1);
            }
        }
        Ok(worst)
    });
    let mut worst: Worst = (f64::INFINITY, 0.0, 0.0, Vec2::ZERO, Vec2::ZERO);
    for w in per_x0 {
        let w = w?;
        if w.0 < worst.0 {
            worst = w;
        }
    }
    rb.ge("pointwise_pairs", worst.1, worst.2);
    rb.witness_if_short(
        vec![worst.3.x, worst.3.y, worst.4.x, worst.4.y],
        format!("{} x {} subgrid pairs", a.len(), b.len()),
    );
    t.max_record(&mut rb, cfg.mu)?;
    Ok(rb.finish(cfg, budget, started))
}

/// `‖u_μ‖_r ≥ M_q(‖u₀‖_r, ‖u₁‖_r; μ) − ε`, `q = pr/(2p + r)`.
pub fn run_corollary42(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let t = solve_triple(cfg)?;
    let fields = [&t.s0.u, &t.s1.u, &t.smu.u];
    let mut top_norm: f64 = 0.0;
    let mut norms = Vec::new();
    for &r in &cfg.r_list {
        let n: Vec<f64> = fields.iter().map(|u| u.lq_norm(r)).collect::<Result<_>>()?;
        top_norm = top_norm.max(n[2]);
        norms.push((r, n));
    }
    let defect = fields.iter().map(|u| area_defect(u)).fold(0.0, f64::max);
    let (budget, eps) = budget_for(cfg, t.solver_error(), t.lipschitz(), t.h(), defect * top_norm);
    let mut rb = ReportBuilder::new(eps);
    t.precondition(&mut rb);
    for (r, n) in &norms {
        let q = corollary_exponent(t.p, *r, 2)?;
        let rhs = p_mean(n[0], n[1], cfg.mu, q)?;
        rb.ge(&format!("norm_r={}", fmt_r(*r)), n[2], rhs);
        if *r == f64::INFINITY {
            rb.eq("norm_r=inf_equality", n[2], rhs);
        }
    }
    // the maximum of the supremal convolution is exactly the p-mean of the
    // maxima; u_μ sits above it
    if (0.0..1.0).contains(&t.p) {
        let conv = convolve_binary(&t.s0.u, &t.s1.u, cfg.mu, t.p, Some(cfg.h), cfg.exec)?;
        let top = p_mean(t.s0.u.max_value(), t.s1.u.max_value(), cfg.mu, t.p)?;
        rb.eq("convolution_max_equality", conv.field.max_value(), top);
        rb.ge("max_u_mu_ge_convolution_max", t.smu.u.max_value(), conv.field.max_value());
    }
    Ok(rb.finish(cfg, budget, started))
}

/// The chain `‖u‖_q ≤ ‖u♯_{p,m}‖_q ≤ ‖v‖_q + ε` and `u♯_{p,m} ≤ v + ε` on
/// `Ω♯_m ∩ Ω♯`, with `v` solved on `Ω♯`.
pub fn run_rearrangement65(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let p = cfg.resolved_p()?;
    let body = cfg.body_from(&cfg.body, 0)?;
    let op = cfg.operator_with(cfg.source_term(None)?)?;
    if !op.is_rotation_invariant() {
        return Err(Error::Config(
            "the rearrangement comparison needs a rotation-invariant operator and source".into(),
        ));
    }
    let su = solve_with_estimate(cfg, &body, &op)?;
    let ball = sharp_ball(&body)?;
    let sv = solve_with_estimate(cfg, &ball, &op)?;
    let sharp = sharp_rearrangement(&su.u, p, cfg.m, Some(cfg.h), cfg.exec)?;
    let us = &sharp.field;
    let (u, v) = (&su.u, &sv.u);

    let mut norms = Vec::new();
    let mut top: f64 = 0.0;
    for &q in &cfg.q_list {
        let n = [u.lq_norm(q)?, us.lq_norm(q)?, v.lq_norm(q)?];
        top = top.max(n[2]);
        norms.push((q, n));
    }
    let defect = [u, us, v].iter().map(|g| area_defect(g)).fold(0.0, f64::max);
    let lip = u.lipschitz_estimate().max(us.lipschitz_estimate()).max(v.lipschitz_estimate());
    let (budget, eps) = budget_for(cfg, su.error.max(sv.error), lip, cfg.h, defect * top);
    let mut rb = ReportBuilder::new(eps);

    for (q, n) in &norms {
        let q = fmt_r(*q);
        rb.ge(&format!("norm_u_le_sharp_q={q}"), n[1], n[0]);
        rb.ge(&format!("norm_sharp_le_v_q={q}"), n[2], n[1]);
        rb.ge(&format!("norm_u_le_v_q={q}"), n[2], n[0]);
    }

    // pointwise on Ω♯_m ∩ Ω♯; every grid here lives on the same lattice
    let lat = *us.lattice();
    let mut worst = (f64::INFINITY, 0.0, 0.0, Vec2::ZERO);
    for k in 0..lat.len() {
        if !us.domain().kind_at(k).in_closure() {
            continue;
        }
        let x = lat.node(k % lat.nx, k / lat.nx);
        if !ball.contains(x) {
            continue;
        }
        let (a, b) = (v.sample(x), us.values()[k]);
        if a - b < worst.0 {
            worst = (a - b, a, b, x);
        }
    }
    rb.ge("pointwise_sharp_le_v", worst.1, worst.2);
    rb.witness_if_short(vec![worst.3.x, worst.3.y], "node of the rearranged grid");

    rb.eq("max_preserved", us.max_value(), u.max_value());

    // superlevel sets only grow; the allowance is one cell layer of the
    // perimeter, folded into rhs
    let area_budget = sharp.field.body().perimeter() * cfg.h;
    let growth = superlevel_growth(u, us, 20);
    let (t_worst, g_worst) = growth
        .iter()
        .copied()
        .fold((0.0, f64::INFINITY), |acc, (t, g)| if g < acc.1 { (t, g) } else { acc });
    rb.ge("superlevel_growth", g_worst, -area_budget);
    rb.witness_if_short(vec![t_worst], "level t");
    Ok(rb.finish(cfg, budget, started))
}

/// `τ(Ω) ≤ τ(Ω⋆) + ε ≤ τ(Ω♯) + 2ε` with both disc values against `πR⁴/8`.
pub fn run_torsion_urysohn(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let source = cfg.source_term(None)?;
    if cfg.operator != OperatorChoice::Poisson || !matches!(source, SourceTerm::Constant(c) if c == 1.0) {
        return Err(Error::Config("torsion_urysohn needs the Poisson operator with source const 1".into()));
    }
    let op = OperatorSpec::poisson(source)?;
    let body = cfg.body_from(&cfg.body, 0)?;
    let star = schwarz_ball(&body)?;
    let sharp = sharp_ball(&body)?;
    let solved = [&body, &star, &sharp]
        .iter()
        .map(|b| solve_with_estimate(cfg, b, &op))
        .collect::<Result<Vec<_>>>()?;
    let tau: Vec<f64> = solved.iter().map(|s| torsional_rigidity(&s.u)).collect();
    // a nodal error e moves the integral by at most e·|Ω|
    let solver = solved
        .iter()
        .map(|s| s.error * s.u.body().area())
        .fold(0.0, f64::max);
    let quadrature = solved
        .iter()
        .zip(&tau)
        .map(|(s, t)| area_defect(&s.u) * t)
        .fold(0.0, f64::max);
    let budget = SlackBudget {
        solver: 2.0 * solver,
        interpolation: 0.0,
        quadrature,
    };
    let eps = cfg.epsilon.unwrap_or_else(|| budget.total());
    let mut rb = ReportBuilder::new(eps);
    rb.ge("tau_omega_le_tau_star", tau[1], tau[0]);
    rb.ge("tau_star_le_tau_sharp", tau[2], tau[1]);
    for (name, b, t) in [("tau_star_formula", &star, tau[1]), ("tau_sharp_formula", &sharp, tau[2])] {
        let r = b.shape().radius();
        let exact = PI * r.powi(4) / 8.0;
        // 1% relative, folded into lhs
        rb.ge(name, 0.01 * exact, (t - exact).abs());
    }
    Ok(rb.finish(cfg, budget, started))
}

/// Tolerance of the exact geometric identities.
const GEOM_TOL: f64 = 1e-9;

/// Seeded random polygon sweeps of the convex-geometry invariants plus the
/// fixed square/disc values.
pub fn run_geometry_suite(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let budget = SlackBudget {
        solver: 0.0,
        interpolation: 0.0,
        quadrature: GEOM_TOL,
    };
    let eps = cfg.epsilon.unwrap_or(GEOM_TOL);
    let mut rb = ReportBuilder::new(eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mus = [0.1, 0.5, 0.9];

    let mut additivity: f64 = 0.0;
    let mut bm = (f64::INFINITY, 0.0, 0.0, 0usize);
    let mut width: f64 = 0.0;
    let mut identity: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    let mut triangle = f64::INFINITY;
    let mut urysohn = (f64::INFINITY, 0.0, 0.0, 0usize);
    for k in 0..cfg.pairs {
        let n0 = rng.gen_range(3..12);
        let n1 = rng.gen_range(3..12);
        let b0 = ConvexBody::random_polygon(&mut rng, n0)?;
        let b1 = ConvexBody::random_polygon(&mut rng, n1)?;
        let b2 = ConvexBody::random_polygon(&mut rng, 6)?;
        let mu = mus[k % mus.len()];
        let c = ConvexBody::minkowski_combine(&b0, &b1, mu)?;
        for j in 0..16 {
            let a = 2.0 * PI * (j as f64 + rng.gen::<f64>()) / 16.0;
            let xi = Vec2::new(a.cos(), a.sin());
            let lin = (1.0 - mu) * b0.support_eval(xi)? + mu * b1.support_eval(xi)?;
            additivity = additivity.max((c.support_eval(xi)? - lin).abs());
        }
        let lhs = c.area().sqrt();
        let rhs = (1.0 - mu) * b0.area().sqrt() + mu * b1.area().sqrt();
        if lhs - rhs < bm.0 {
            bm = (lhs - rhs, lhs, rhs, k);
        }
        let lin = (1.0 - mu) * b0.mean_width() + mu * b1.mean_width();
        width = width.max((c.mean_width() - lin).abs());
        identity = identity.max(ConvexBody::hausdorff_distance(&ConvexBody::minkowski_combine(&b0, &b0, mu)?, &b0)?);
        let d01 = ConvexBody::hausdorff_distance(&b0, &b1)?;
        let d10 = ConvexBody::hausdorff_distance(&b1, &b0)?;
        symmetry = symmetry.max((d01 - d10).abs());
        let d02 = ConvexBody::hausdorff_distance(&b0, &b2)?;
        let d21 = ConvexBody::hausdorff_distance(&b2, &b1)?;
        triangle = triangle.min(d02 + d21 - d01);
        let (w, r) = (b0.mean_width() / 2.0, (b0.area() / PI).sqrt());
        if w - r < urysohn.0 {
            urysohn = (w - r, w, r, k);
        }
    }
    rb.eq("support_additivity", additivity, 0.0);
    rb.ge("brunn_minkowski", bm.1, bm.2);
    rb.witness_if_short(vec![bm.3 as f64], "pair index");
    rb.eq("mean_width_linearity", width, 0.0);
    rb.eq("self_combination_identity", identity, 0.0);
    rb.eq("hausdorff_symmetry", symmetry, 0.0);
    rb.ge("hausdorff_triangle", triangle, 0.0);
    rb.ge("urysohn_width_vs_area", urysohn.1, urysohn.2);
    rb.witness_if_short(vec![urysohn.3 as f64], "pair index");

    let q = ConvexBody::square(1.0)?;
    let disc = ConvexBody::disc(Vec2::ZERO, 1.0)?;
    rb.eq("square_mean_width_exact", q.mean_width(), q.perimeter() / PI);
    // own tolerance 1e-3, folded into lhs
    rb.ge("square_mean_width_quadrature", 1e-3, (q.mean_width_quadrature() - 8.0 / PI).abs());
    rb.ge(
        "square_disc_steiner_area",
        1e-6,
        (ConvexBody::minkowski_combine(&q, &disc, 0.5)?.area() - (3.0 + PI / 4.0)).abs(),
    );
    let ball = ConvexBody::disc(Vec2::ZERO, 4.0 / PI)?;
    let mut d = Vec::new();
    for m in [4, 8, 16, 32, 64] {
        d.push(ConvexBody::hausdorff_distance(&q.rotation_mean(m)?, &ball)?);
    }
    rb.ge("hadwiger_m64", 0.01, d[4]);
    let worst_increase = d.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    rb.ge("hadwiger_non_increasing", 0.0, worst_increase);
    let rot = q.translate(Vec2::new(0.3, -0.1)).rotation_mean(7)?;
    rb.eq("rotation_mean_width", rot.mean_width(), q.mean_width());
    Ok(rb.finish(cfg, budget, started))
}

/// Sampled source condition and min-form assumption for the configured
/// operator and sources.
pub fn run_assumption_check(cfg: &ExperimentConfig) -> Result<Report> {
    let started = Instant::now();
    let p = cfg.resolved_p()?;
    let b0 = cfg.body_from(&cfg.body0, 0)?;
    let b1 = cfg.body_from(&cfg.body1, 1)?;
    let (f0, f1, fmu) = sources(cfg)?;
    let budget = SlackBudget {
        solver: 0.0,
        interpolation: 0.0,
        quadrature: GEOM_TOL,
    };
    let eps = cfg.epsilon.unwrap_or(GEOM_TOL);
    let mut rb = ReportBuilder::new(eps);
    let record = |rb: &mut ReportBuilder, c: &crate::pde::SampledCheck, info: bool| {
        let check = super::Check::ge(c.name.clone(), c.min_slack, 0.0, rb.eps);
        rb.push(if info { check.into_info() } else { check });
        if let Some(w) = &c.witness {
            rb.witness_if_short(w.clone(), format!("{} samples", c.samples));
        }
    };
    if cfg.operator == OperatorChoice::Poisson {
        let r = check_source_condition(&f0, &f1, &fmu, &b0, &b1, cfg.mu, p, cfg.samples, cfg.seed)?;
        record(&mut rb, &r.transformed, false);
        if let Some(c) = &r.midpoint_concavity {
            record(&mut rb, c, false);
        }
    }
    let c = check_assumption(
        &cfg.operator_with(f0)?,
        &cfg.operator_with(f1)?,
        &cfg.operator_with(fmu)?,
        &b0,
        &b1,
        cfg.mu,
        p,
        cfg.samples,
        cfg.seed,
    )?;
    // for the Laplacian the source condition already implies the weak form
    // of the assumption; the min form is stronger and fails e.g. for f ≡ 1
    // at p = 0.4, so it is reported but not judged
    record(&mut rb, &c, cfg.operator == OperatorChoice::Poisson);
    Ok(rb.finish(cfg, budget, started))
}
