use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use powerconv::convolve::{convolve_binary, lagrange_diagnostic};
use powerconv::exec::Exec;
use powerconv::geometry::{ConvexBody, Vec2};
use powerconv::io::{argmax_csv, grid_csv, write_grid};
use powerconv::pde::{hopf_boundary_check, solve, torsional_rigidity, OperatorSpec, SolveParams, SourceTerm};
use powerconv::rearrange::{sharp_ball, sharp_rearrangement};
use powerconv::verify::{self, ExperimentConfig, Report};
use powerconv::Error;

const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "powerconv", version, about = "Minkowski combinations, power-mean convolutions of PDE solutions, and their numerical checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Grid spacing, decimal or a/b.
    #[arg(long, value_parser = parse_number)]
    h: Option<f64>,
    /// Output directory; files are written there instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct OperatorArgs {
    /// poisson or pucci.
    #[arg(long, default_value = "poisson")]
    operator: String,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long = "Lambda", default_value_t = 2.0)]
    big_lambda: f64,
    /// Number of lattice frames of the Pucci stencil.
    #[arg(long = "K", default_value_t = 8)]
    frames: usize,
    /// Source literal: `const c`, `affine c ax ay`, `paraboloid c k`, `beta R b`.
    #[arg(long, default_value = "const 1")]
    source: String,
}

impl OperatorArgs {
    fn spec(&self) -> powerconv::Result<OperatorSpec> {
        let f = SourceTerm::parse(&self.source)?;
        match self.operator.as_str() {
            "poisson" => OperatorSpec::poisson(f),
            "pucci" => OperatorSpec::pucci(self.lambda, self.big_lambda, f, self.frames),
            other => Err(Error::Config(format!("unknown operator {other:?}"))),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Geometric quantities of a body, optionally of its Minkowski
    /// combination with a second body and of its rotation mean.
    Geom {
        /// Body literal: `square [a]`, `disc [cx cy] r`, `polygon x y ...`, `file PATH`.
        body: String,
        /// Second body for the combination `(1−μ)B₀ + μB₁`.
        #[arg(long)]
        with: Option<String>,
        #[arg(long, default_value_t = 0.5, value_parser = parse_number)]
        mu: f64,
        /// Rotation mean with m equally spaced angles.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Solve the Dirichlet problem on a body.
    Solve {
        body: String,
        #[command(flatten)]
        op: OperatorArgs,
        #[command(flatten)]
        common: Common,
    },
    /// (p, μ)-convolution of the solutions on two bodies.
    Convolve {
        body0: String,
        body1: String,
        #[arg(long, default_value_t = 0.5, value_parser = parse_number)]
        p: f64,
        #[arg(long, default_value_t = 0.5, value_parser = parse_number)]
        mu: f64,
        #[command(flatten)]
        op: OperatorArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Mean-width rearrangement of the solution on a body.
    Rearrange {
        body: String,
        #[arg(long, default_value_t = 0.5, value_parser = parse_number)]
        p: f64,
        #[arg(long, default_value_t = 8)]
        m: usize,
        #[command(flatten)]
        op: OperatorArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Run experiment presets or config files and report every check.
    Verify {
        /// Preset names or config file paths; several run one after another
        /// with one report each.
        #[arg(required = true)]
        specs: Vec<String>,
        #[arg(long, value_parser = parse_number)]
        p: Option<f64>,
        #[arg(long, value_parser = parse_number)]
        mu: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// List the shipped presets.
    Presets,
}

fn parse_number(s: &str) -> Result<f64, String> {
    verify::parse_number(s).map_err(|e| e.to_string())
}

fn exec(common: &Common) -> Exec {
    if common.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

/// Writes `name` into `--out` or prints it.
fn emit(common: &Common, name: &str, text: &str) -> powerconv::Result<()> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn pretty(v: serde_json::Value) -> String {
    serde_json::to_string_pretty(&v).expect("json") + "\n"
}

fn body_summary(b: &ConvexBody) -> serde_json::Value {
    let c = b.centroid();
    json!({
        "body": b.describe(),
        "area": b.area(),
        "perimeter": b.perimeter(),
        "mean_width": b.mean_width(),
        "mean_width_quadrature": b.mean_width_quadrature(),
        "centroid": [c.x, c.y],
        "inradius_estimate": b.inradius_estimate(),
    })
}

fn run_geom(body: &str, with: Option<&str>, mu: f64, m: Option<usize>) -> powerconv::Result<()> {
    let b = ConvexBody::parse(body)?;
    let mut out = json!({ "body0": body_summary(&b) });
    if let Some(w) = with {
        let b1 = ConvexBody::parse(w)?;
        let c = ConvexBody::minkowski_combine(&b, &b1, mu)?;
        out["body1"] = body_summary(&b1);
        out["combination"] = body_summary(&c);
        out["hausdorff"] = json!(ConvexBody::hausdorff_distance(&b, &b1)?);
    }
    if let Some(m) = m {
        let r = b.translate(-b.centroid()).rotation_mean(m)?;
        let ball = ConvexBody::disc(Vec2::ZERO, b.mean_width() / 2.0)?;
        out["rotation_mean"] = body_summary(&r);
        out["rotation_mean_to_ball"] = json!(ConvexBody::hausdorff_distance(&r, &ball)?);
    }
    print!("{}", pretty(out));
    Ok(())
}

fn params(common: &Common) -> SolveParams {
    SolveParams::new(common.h.unwrap_or(1.0 / 32.0))
}

fn run_solve(body: &str, op: &OperatorArgs, common: &Common) -> powerconv::Result<()> {
    let b = ConvexBody::parse(body)?;
    let s = solve(&b, &op.spec()?, &params(common))?;
    if common.format == Format::Csv {
        return match &common.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                write_grid(&s.field, &dir.join("u.csv"))
            }
            None => {
                print!("{}", grid_csv(&s.field));
                Ok(())
            }
        };
    }
    let hopf = hopf_boundary_check(&s.field, 2.0 * s.field.h());
    let (x, top) = s.field.argmax();
    let summary = json!({
        "body": b.describe(),
        "h": s.field.h(),
        "iterations": s.iterations,
        "residual": s.residual,
        "max": top,
        "argmax": [x.x, x.y],
        "torsional_rigidity": torsional_rigidity(&s.field),
        "hopf": hopf,
    });
    emit(common, "solve.json", &pretty(summary))
}

fn run_convolve(b0: &str, b1: &str, p: f64, mu: f64, op: &OperatorArgs, common: &Common) -> powerconv::Result<()> {
    let (b0, b1) = (ConvexBody::parse(b0)?, ConvexBody::parse(b1)?);
    let spec = op.spec()?;
    let prm = params(common);
    let u0 = solve(&b0, &spec, &prm)?.field;
    let u1 = solve(&b1, &spec, &prm)?.field;
    let r = convolve_binary(&u0, &u1, mu, p, Some(prm.h), exec(common))?;
    if common.format == Format::Csv {
        emit(common, "convolution.csv", &grid_csv(&r.field))?;
        return emit(common, "argmax.csv", &argmax_csv(&r));
    }
    let lagrange = lagrange_diagnostic(&r, &u0, &u1, p, 0.05)?;
    let summary = json!({
        "body": r.field.body().describe(),
        "p": p,
        "mu": mu,
        "max": r.field.max_value(),
        "starved": r.starved,
        "interpolation_slack": r.interpolation_slack,
        "lagrange": lagrange,
    });
    emit(common, "convolve.json", &pretty(summary))
}

fn run_rearrange(body: &str, p: f64, m: usize, op: &OperatorArgs, common: &Common) -> powerconv::Result<()> {
    let b = ConvexBody::parse(body)?;
    let prm = params(common);
    let u = solve(&b, &op.spec()?, &prm)?.field;
    let r = sharp_rearrangement(&u, p, m, Some(prm.h), exec(common))?;
    let ball = sharp_ball(&b)?;
    if common.format == Format::Csv {
        emit(common, "rearranged.csv", &grid_csv(&r.field))?;
        // plain-text manifest next to the grid; only written with --out
        if common.out.is_some() {
            let manifest = format!(
                "m = {m}\np = {p}\nh = {}\nmax_u = {}\nmax_rearranged = {}\nmean_width_u = {}\nmean_width_rearranged = {}\nhausdorff_to_ball = {}\nstarved = {}\n",
                prm.h,
                u.max_value(),
                r.field.max_value(),
                b.mean_width(),
                r.field.body().mean_width(),
                ConvexBody::hausdorff_distance(r.field.body(), &ball)?,
                r.starved,
            );
            emit(common, "manifest.txt", &manifest)?;
        }
        return Ok(());
    }
    let summary = json!({
        "domain": r.field.body().describe(),
        "m": m,
        "p": p,
        "max_u": u.max_value(),
        "max_rearranged": r.field.max_value(),
        "mean_width": r.field.body().mean_width(),
        "hausdorff_to_ball": ConvexBody::hausdorff_distance(r.field.body(), &ball)?,
        "starved": r.starved,
    });
    emit(common, "rearrange.json", &pretty(summary))
}

fn report_name(spec: &str, format: Format) -> String {
    let stem = Path::new(spec)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    match format {
        Format::Json => format!("{stem}.json"),
        Format::Csv => format!("{stem}.csv"),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_verify(
    specs: &[String],
    p: Option<f64>,
    mu: Option<f64>,
    m: Option<usize>,
    seed: Option<u64>,
    common: &Common,
) -> u8 {
    let mut worst = 0u8;
    for spec in specs {
        let outcome = (|| -> powerconv::Result<Report> {
            let mut cfg: ExperimentConfig = verify::load(spec)?;
            if let Some(h) = common.h {
                cfg.h = h;
            }
            if let Some(p) = p {
                cfg.p = verify::PChoice::Value(p);
            }
            if let Some(mu) = mu {
                cfg.mu = mu;
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.exec = exec(common);
            let report = verify::run(&cfg)?;
            let text = match common.format {
                Format::Json => report.to_json() + "\n",
                Format::Csv => report.to_csv(),
            };
            emit(common, &report_name(spec, common.format), &text)?;
            Ok(report)
        })();
        let code = match outcome {
            Ok(r) => {
                eprintln!(
                    "{spec}: {} checks, min slack {:e}, epsilon {:e}",
                    r.checks.len(),
                    r.min_slack,
                    r.epsilon()
                );
                r.exit_code() as u8
            }
            Err(e) => {
                eprintln!("{spec}: {e}");
                error_code(&e)
            }
        };
        worst = severity(worst, code);
    }
    worst
}

/// 3 dominates, then 1 (fail), then 2 (inconclusive).
fn severity(a: u8, b: u8) -> u8 {
    let rank = |c: u8| match c {
        3 => 3,
        1 => 2,
        2 => 1,
        _ => 0,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Solver { .. } | Error::Internal(_) => 1,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Geom { body, with, mu, m } => run_geom(body, with.as_deref(), *mu, *m),
        Command::Solve { body, op, common } => run_solve(body, op, common),
        Command::Convolve {
            body0,
            body1,
            p,
            mu,
            op,
            common,
        } => run_convolve(body0, body1, *p, *mu, op, common),
        Command::Rearrange { body, p, m, op, common } => run_rearrange(body, *p, *m, op, common),
        Command::Verify {
            specs,
            p,
            mu,
            m,
            seed,
            common,
        } => return ExitCode::from(run_verify(specs, *p, *mu, *m, *seed, common)),
        Command::Presets => {
            for name in verify::PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
