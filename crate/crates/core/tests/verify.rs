use powerconv::verify::{self, ExperimentConfig, Verdict};
use powerconv::Error;

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn slack(r: &verify::Report, name: &str) -> f64 {
    r.check(name).unwrap_or_else(|| panic!("no record {name}")).slack
}

#[test]
fn report_has_exactly_the_documented_fields() {
    let r = verify::run(&cfg("experiment = geometry_suite\npairs = 20")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|s| s.as_str()).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["checks", "config_echo", "experiment", "min_slack", "runtime_seconds", "slack_budget", "witnesses"]
    );
    let check = v["checks"][0].as_object().unwrap();
    let mut ck: Vec<&str> = check.keys().map(|s| s.as_str()).collect();
    ck.sort_unstable();
    assert_eq!(ck, ["lhs", "name", "rhs", "slack", "verdict"]);
    let b = v["slack_budget"].as_object().unwrap();
    assert!(b.contains_key("solver") && b.contains_key("interpolation") && b.contains_key("quadrature"));
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn verdicts_follow_the_slack_rule() {
    let r = verify::run(&cfg("experiment = torsion_urysohn\nh = 1/16")).unwrap();
    let eps = r.epsilon();
    for c in &r.checks {
        assert_eq!(c.slack, c.lhs - c.rhs);
        assert_eq!(c.verdict == Verdict::Pass, c.slack >= -eps, "{}", c.name);
    }
}

#[test]
fn identical_discs_reduce_to_concavity() {
    let text = "body0 = disc 0 0 1\nbody1 = disc 0 0 1\nh = 1/16\n";
    let r = verify::run(&cfg(&format!("experiment = theorem41\n{text}"))).unwrap();
    assert_eq!(r.exit_code(), 0, "{}", r.to_json());
    assert!(slack(&r, "max_nodes").abs() <= 1e-12);
    let c = verify::run(&cfg(&format!("experiment = corollary42\n{text}"))).unwrap();
    let eps = c.epsilon();
    for name in ["norm_r=1", "norm_r=2", "norm_r=inf"] {
        assert!(slack(&c, name).abs() <= eps, "{name}");
    }
}

#[test]
fn corollary_infinity_record_matches_theorem_max_record() {
    let t = verify::run(&cfg("experiment = theorem41\nh = 1/16")).unwrap();
    let c = verify::run(&cfg("experiment = corollary42\nh = 1/16")).unwrap();
    let (a, b) = (t.check("max_nodes").unwrap(), c.check("norm_r=inf").unwrap());
    assert!((a.lhs - b.lhs).abs() <= 1e-12 && (a.rhs - b.rhs).abs() <= 1e-12);
    assert!(slack(&c, "convolution_max_equality").abs() <= 1e-12);
}

#[test]
fn precondition_failure_needs_a_waiver() {
    let base = "experiment = theorem41\np = 0.9\nh = 1/16\n";
    assert!(matches!(verify::run(&cfg(base)), Err(Error::Config(_))));
    let r = verify::run(&cfg(&format!("{base}waiver = true"))).unwrap();
    assert!(r.checks.iter().all(|c| c.verdict == Verdict::Info));
    assert_eq!(r.exit_code(), 0);
    assert!(r.witnesses.iter().any(|w| w.check == "source_precondition"));
}

#[test]
fn assumption_check_cases() {
    // f ≡ 1 satisfies the transformed condition exactly for p in [1/3, 1/2]
    for p in ["1/3", "0.4", "1/2"] {
        let r = verify::run(&cfg(&format!("experiment = assumption_check\np = {p}"))).unwrap();
        assert_eq!(r.exit_code(), 0, "p = {p}");
    }
    // the min form is only descriptive for the Laplacian
    let r = verify::run(&cfg("experiment = assumption_check\np = 0.4")).unwrap();
    let min_form = r.check("assumption_min_form").unwrap();
    assert!(min_form.verdict == Verdict::Info && min_form.slack < 0.0);
    let r = verify::run(&cfg("experiment = assumption_check\np = 0.9")).unwrap();
    assert_eq!(r.exit_code(), 1);
    // Pucci with a constant source is concave in (t, A) at p = 1/3
    let r = verify::run(&cfg("experiment = assumption_check\noperator = pucci\nLambda = 2\np = 1/3")).unwrap();
    assert_eq!(r.check("assumption_min_form").unwrap().verdict, Verdict::Pass);
    let r = verify::run(&verify::preset("assumption-check").unwrap()).unwrap();
    assert_eq!(r.exit_code(), 0);
    let r = verify::run(&cfg("experiment = assumption_check\np = 1/3\nsource = paraboloid 0 1")).unwrap();
    assert_eq!(r.check("midpoint_concavity").unwrap().verdict, Verdict::Fail);
    assert!(r.witnesses.iter().any(|w| w.check == "midpoint_concavity" && w.point.len() == 4));
}

#[test]
fn disc_is_a_fixed_point_of_the_comparisons() {
    let r = verify::run(&cfg("experiment = rearrangement65\nbody = disc 0 0 1\nh = 1/16\nm = 3")).unwrap();
    let eps = r.epsilon();
    for q in ["1", "2", "inf"] {
        for name in [format!("norm_u_le_sharp_q={q}"), format!("norm_sharp_le_v_q={q}")] {
            assert!(slack(&r, &name).abs() <= eps, "{name}");
        }
    }
    let t = verify::run(&cfg("experiment = torsion_urysohn\nbody = disc 0 0 1\nh = 1/16")).unwrap();
    let eps = t.epsilon();
    assert!(slack(&t, "tau_omega_le_tau_star").abs() <= eps);
    assert!(slack(&t, "tau_star_le_tau_sharp").abs() <= eps);
}

#[test]
fn random_polygons_keep_the_rigidity_ordering() {
    for seed in 1..4 {
        let r = verify::run(&cfg(&format!("experiment = torsion_urysohn\nbody = random 6\nh = 1/32\nseed = {seed}"))).unwrap();
        assert!(slack(&r, "tau_omega_le_tau_star") >= 0.0, "seed {seed}");
        assert!(slack(&r, "tau_star_le_tau_sharp") >= 0.0, "seed {seed}");
    }
}

#[test]
fn configuration_errors() {
    let bad = [
        "experiment = rearrangement65\nsource = affine 1 0.5 0",
        "experiment = torsion_urysohn\nsource = const 2",
        "epsilon = 0",
        "p = auto-from-beta\nbeta = 0.5",
    ];
    for text in bad {
        let r = ExperimentConfig::parse(text).and_then(|c| verify::run(&c));
        assert!(matches!(r, Err(Error::Config(_))), "{text}");
    }
    assert!(matches!(verify::load("no-such-preset"), Err(Error::Config(_))));
}

#[test]
fn reports_are_deterministic() {
    let c = cfg("experiment = theorem41\nh = 1/16\nexec = parallel");
    let a = verify::run(&c).unwrap().to_json_without_runtime();
    let b = verify::run(&c).unwrap().to_json_without_runtime();
    assert_eq!(a, b);
    let mut s = c.clone();
    s.exec = powerconv::exec::Exec::Sequential;
    let seq = verify::run(&s).unwrap().to_json_without_runtime();
    // the echo carries no exec entry, so the reports agree byte for byte
    assert_eq!(a, seq);
}
