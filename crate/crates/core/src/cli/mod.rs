//! Batch experiment runner. Each subcommand reads one JSON instance, runs the
//! experiment from a single `--seed`, logs the bound under test, writes CSV
//! and JSON reports on request, and exits 0 when every check passes, 1 when
//! a bound or check fails, and 2 on malformed input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_traits::One;
use serde::Serialize;
use serde_json::Value;

use crate::applications::{
    evaluate_prophet, run_probing, run_probing_with_deadlines, OrderPolicy, ProbingInstance, ProbingOptions,
    ProphetInstance, ProphetOptions,
};
use crate::base::{tags, ElementSet, FractionalPoint, PointFragment, SeedSpec};
use crate::error::{invalid, Error, Result};
use crate::harness::{
    brute_force_selectability, estimate_prepared, knapsack_deterministic_impossibility, parse_rational, write_csv,
    write_json, CsvRow, SelectabilityOptions, SelectabilityReport, TrialValue,
};
use crate::matroids::{validate_axioms, Matroid, MatroidDescriptor, MatroidOracle};
use crate::optimize::solve_probing_lp;
use crate::schemes::{Constraint, ConstraintSummary, SchemeSpec};
use crate::submodular::{
    ocrs_submodular_value, run_submodular_probing, Multilinear, SubmodularFunction, SubmodularOptions,
};

#[derive(Parser, Debug)]
#[command(
    name = "ocrs",
    version,
    about = "Online contention resolution schemes: verification and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate per-element selectability of a scheme at a point of b·P.
    VerifySelectability(VerifyArgs),
    /// Best deterministic knapsack OCRS on the n-item lower-bound instance.
    Impossibility(ImpossibilityArgs),
    /// Prophet inequality over a matroid against the exact E[max].
    Prophet(ProphetArgs),
    /// Stochastic probing against the LP upper bound.
    Probing(ProbingArgs),
    /// Stochastic probing with deadlines.
    ProbingDeadlines(ProbingArgs),
    /// Submodular rounding, or submodular probing when the instance has `p`.
    Submodular(SubmodularArgs),
    /// Check the matroid axioms of a descriptor exhaustively.
    ValidateMatroid(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; changes wall time only.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
    /// Half-widths are multiplied by this before comparing with a bound.
    #[arg(long, default_value_t = 3.0)]
    pub ci_multiplier: f64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Constraint JSON, or `{"constraint": …, "point": {"n", "x", "seed"}}`.
    pub instance: PathBuf,
    /// auto, matroid, matching, knapsack or intersect.
    #[arg(long, default_value = "auto")]
    pub scheme: String,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Use the deterministic matching scheme.
    #[arg(long)]
    pub deterministic: bool,
    /// Also enumerate the scheme's randomness exactly (n ≤ 6).
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct ImpossibilityArgs {
    #[arg(long)]
    pub n: usize,
    /// Exact rational, e.g. `0.5` or `1/4`.
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProphetArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Fixed arrival order, e.g. `2,0,1`; the worst order found otherwise.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct ProbingArgs {
    pub instance: PathBuf,
    /// Overrides the instance's `b`.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    /// Write the final LP as plain text.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct SubmodularArgs {
    /// `{"function", "constraint", "x"?, "b"?}` or
    /// `{"function", "p", "inner", "outer", "b"?}`.
    pub instance: PathBuf,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Require the exact multilinear extension (n ≤ 14).
    #[arg(long)]
    pub exact: bool,
    /// Continuous greedy steps per unit time.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    report: &'a T,
}

fn emit<T: Serialize>(command: &str, path: Option<&Path>, report: &T) -> Result<()> {
    if let Some(p) = path {
        write_json(
            p,
            &Envelope {
                command,
                version: env!("CARGO_PKG_VERSION"),
                report,
            },
        )?;
    }
    Ok(())
}

fn emit_csv<T: CsvRow>(path: Option<&Path>, rows: &[T]) -> Result<()> {
    match path {
        Some(p) => write_csv(p, rows),
        None => Ok(()),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn check_trials(run: &RunArgs) -> Result<()> {
    if run.trials == 0 {
        return Err(invalid("--trials must be at least 1"));
    }
    Ok(())
}

/// Builds the scheme for `constraint`; `name` must match its kind unless
/// it is `auto`.
fn build_scheme(constraint: &Constraint, name: &str, b: f64, eps: f64, deterministic: bool) -> Result<SchemeSpec> {
    let kind = match constraint {
        Constraint::Matroid(_) => "matroid",
        Constraint::Knapsack(_) => "knapsack",
        Constraint::Matching(_) => "matching",
        Constraint::All(_) => "intersect",
    };
    if name != "auto" && name != kind {
        return Err(invalid(format!("--scheme {name}: instance is a {kind} constraint")));
    }
    match constraint {
        Constraint::Matching(g) => Ok(SchemeSpec::matching((**g).clone(), b, deterministic)),
        Constraint::All(parts) => SchemeSpec::intersect(
            parts
                .iter()
                .map(|p| build_scheme(p, "auto", b, eps, deterministic))
                .collect::<Result<_>>()?,
        ),
        c => c.scheme(b, eps),
    }
}

#[derive(Serialize)]
struct VerifyReport {
    constraint: ConstraintSummary,
    x: Vec<f64>,
    selectability: SelectabilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<Vec<f64>>,
    pass: bool,
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    check_trials(&args.run)?;
    let v = read_json(&args.instance)?;
    let (constraint, fragment) = match v.get("constraint") {
        Some(c) => {
            if let Some(k) = v
                .as_object()
                .and_then(|o| o.keys().find(|k| *k != "constraint" && *k != "point"))
            {
                return Err(invalid(format!("instance: unknown field {k:?}")));
            }
            let point = match v.get("point") {
                Some(p) => Some(
                    serde_json::from_value::<PointFragment>(p.clone()).map_err(|e| invalid(format!("point: {e}")))?,
                ),
                None => None,
            };
            (Constraint::from_value(c)?, point)
        }
        None => (Constraint::from_value(&v)?, None),
    };
    let seed = SeedSpec::new(args.run.seed);
    let x = match fragment {
        Some(f) => {
            let (x, _) = f.into_point()?;
            if x.len() != constraint.ground_size() {
                return Err(Error::GroundMismatch {
                    expected: constraint.ground_size(),
                    got: x.len(),
                });
            }
            x
        }
        None => constraint.random_point(args.b, &mut seed.child(tags::POINT).stream(0))?,
    };
    let spec = build_scheme(&constraint, &args.scheme, args.b, args.eps, args.deterministic)?;
    log::info!(
        "verify-selectability: scheme {}, b = {}, trials = {}, seed = {}, claimed {}",
        spec.name(),
        args.b,
        args.run.trials,
        args.run.seed,
        spec.claimed_bound().expression
    );
    let prepared = spec.prepare(&x, &seed)?;
    let opts = SelectabilityOptions {
        trials: args.run.trials,
        seed: args.run.seed,
        workers: args.run.workers,
        ci_multiplier: args.run.ci_multiplier,
    };
    let report = estimate_prepared(&prepared, &spec.name(), spec.b(), &x, &opts)?;
    let exact = if args.exact {
        Some(brute_force_selectability(&prepared, &x)?)
    } else {
        None
    };
    let bound = &report.bound;
    let exact_pass = exact
        .as_ref()
        .is_none_or(|ex| ex.iter().all(|&p| p + bound.slack + 1e-12 >= bound.value));
    let pass = report.pass && exact_pass;
    println!(
        "{} verify-selectability {}: min estimate {:.6} vs {} = {:.6}",
        verdict(pass),
        report.scheme,
        report.min_estimate(),
        bound.expression,
        bound.value
    );
    if let Some(ex) = &exact {
        println!("exact: {ex:?}");
    }
    emit_csv(args.run.out_csv.as_deref(), &report.elements)?;
    let full = VerifyReport {
        constraint: constraint.summary(),
        x: x.values().to_vec(),
        selectability: report,
        exact,
        pass,
    };
    emit("verify-selectability", args.run.out_json.as_deref(), &full)?;
    Ok(pass)
}

#[derive(Serialize)]
struct ImpossibilityReport {
    n: usize,
    b: String,
    value: String,
    value_f64: f64,
    /// `(1-b)^(n-1)`.
    expected: String,
    witness: Vec<Vec<usize>>,
    families_checked: usize,
    pass: bool,
}

struct WitnessRow(String);

impl CsvRow for WitnessRow {
    fn header() -> &'static str {
        "member"
    }

    fn row(&self) -> String {
        format!("\"{}\"", self.0)
    }
}

fn impossibility(args: &ImpossibilityArgs) -> Result<bool> {
    let b = parse_rational(&args.b)?;
    log::info!("impossibility: n = {}, b = {b}", args.n);
    let r = knapsack_deterministic_impossibility(args.n, &b)?;
    let base = crate::optimize::Rational::one() - &b;
    let expected = num_traits::pow(base, args.n - 1);
    let pass = r.value == expected;
    let witness: Vec<Vec<usize>> = r.witness.iter().map(|s| s.to_vec()).collect();
    println!(
        "{} impossibility n = {}, b = {}: best deterministic selectability {} (expected (1-b)^(n-1) = {})",
        verdict(pass),
        args.n,
        b,
        r.value,
        expected
    );
    println!(
        "witness family: {}",
        r.witness
            .iter()
            .map(ElementSet::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    );
    emit_csv(
        args.out_csv.as_deref(),
        &r.witness.iter().map(|s| WitnessRow(s.to_string())).collect::<Vec<_>>(),
    )?;
    let report = ImpossibilityReport {
        n: args.n,
        b: b.to_string(),
        value: r.value.to_string(),
        value_f64: crate::optimize::rational_to_f64(&r.value),
        expected: expected.to_string(),
        witness,
        families_checked: r.families_checked,
        pass,
    };
    emit("impossibility", args.out_json.as_deref(), &report)?;
    Ok(pass)
}

fn prophet(args: &ProphetArgs) -> Result<bool> {
    check_trials(&args.run)?;
    let text =
        std::fs::read_to_string(&args.instance).map_err(|e| invalid(format!("{}: {e}", args.instance.display())))?;
    let instance = ProphetInstance::from_json(&text)?;
    let opts = ProphetOptions {
        b: args.b,
        eps: args.eps,
        trials: args.run.trials,
        seed: args.run.seed,
        workers: args.run.workers,
        order: match &args.order {
            Some(o) => OrderPolicy::Fixed(o.clone()),
            None => OrderPolicy::WorstFound,
        },
        ci_multiplier: args.run.ci_multiplier,
    };
    log::info!(
        "prophet: b = {}, trials = {}, seed = {}",
        args.b,
        args.run.trials,
        args.run.seed
    );
    let (report, values) = evaluate_prophet(&instance, &opts)?;
    println!(
        "{} prophet: ratio {:.6} ± {:.6} vs {} = {:.6} under order {:?}",
        verdict(report.pass),
        report.ratio.ratio,
        report.ratio.ci_halfwidth,
        report.bound.expression,
        report.bound.value,
        report.order
    );
    emit_csv(args.run.out_csv.as_deref(), &TrialValue::rows(&values))?;
    emit("prophet", args.run.out_json.as_deref(), &report)?;
    Ok(report.pass)
}

fn probing(args: &ProbingArgs, deadlines: bool) -> Result<bool> {
    check_trials(&args.run)?;
    let mut instance = ProbingInstance::from_value(&read_json(&args.instance)?)?;
    if let Some(b) = args.b {
        instance = ProbingInstance::new(
            instance.p,
            instance.w,
            instance.inner,
            instance.outer,
            instance.deadlines,
            b,
        )?;
    }
    if let Some(path) = &args.dump_lp {
        let lp = solve_probing_lp(&instance)?;
        std::fs::write(path, lp.program.to_text()).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    }
    let opts = ProbingOptions {
        eps: args.eps,
        trials: args.run.trials,
        seed: args.run.seed,
        workers: args.run.workers,
        order: args.order.clone(),
        ci_multiplier: args.run.ci_multiplier,
    };
    let command = if deadlines { "probing-deadlines" } else { "probing" };
    log::info!(
        "{command}: b = {}, trials = {}, seed = {}",
        instance.b,
        args.run.trials,
        args.run.seed
    );
    let (report, values) = if deadlines {
        run_probing_with_deadlines(&instance, &opts)?
    } else {
        run_probing(&instance, &opts)?
    };
    println!(
        "{} {command}: ratio {:.6} ± {:.6} vs {} = {:.6}; LP {}, violations {}/{}",
        verdict(report.pass),
        report.ratio.ratio,
        report.ratio.ci_halfwidth,
        report.bound.expression,
        report.bound.value,
        report.lp_value_exact,
        report.feasibility_violations,
        report.deadline_violations
    );
    emit_csv(args.run.out_csv.as_deref(), &TrialValue::rows(&values))?;
    emit(command, args.run.out_json.as_deref(), &report)?;
    Ok(report.pass)
}

fn submodular(args: &SubmodularArgs) -> Result<bool> {
    check_trials(&args.run)?;
    let v = read_json(&args.instance)?;
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("instance: expected a JSON object"))?;
    let probing_mode = obj.contains_key("p");
    let allowed: &[&str] = if probing_mode {
        &["function", "p", "inner", "outer", "b"]
    } else {
        &["function", "constraint", "x", "b"]
    };
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(invalid(format!("instance: unknown field {k:?}")));
    }
    let f = SubmodularFunction::from_value(obj.get("function").ok_or_else(|| invalid("function: missing"))?)?;
    let b = match (args.b, obj.get("b")) {
        (Some(b), _) => b,
        (None, Some(b)) => b.as_f64().ok_or_else(|| invalid("b: expected a number"))?,
        (None, None) => 0.5,
    };
    let mut opts = SubmodularOptions::new(args.run.trials, args.run.seed);
    opts.workers = args.run.workers;
    opts.order = args.order.clone();
    opts.ci_multiplier = args.run.ci_multiplier;
    opts.eps = args.eps;
    opts.greedy.steps_per_unit = args.steps;
    if args.exact {
        opts.multilinear = Some(Multilinear::Exact);
    }
    log::info!(
        "submodular: {} function, n = {}, b = {b}, trials = {}, seed = {}",
        f.kind(),
        f.ground_size(),
        args.run.trials,
        args.run.seed
    );
    let constraint = |name: &str| -> Result<Constraint> {
        Constraint::from_value(obj.get(name).ok_or_else(|| invalid(format!("{name}: missing")))?)
    };
    if probing_mode {
        let p: Vec<f64> = serde_json::from_value(obj["p"].clone()).map_err(|e| invalid(format!("p: {e}")))?;
        let (report, values) = run_submodular_probing(&f, &p, &constraint("inner")?, &constraint("outer")?, b, &opts)?;
        println!(
            "{} submodular probing: mean {:.6} ± {:.6} vs ({}) * F(p∘x̃) = {:.6}",
            verdict(report.pass),
            report.mean.mean,
            report.mean.ci_halfwidth,
            report.bound.expression,
            report.target
        );
        emit_csv(args.run.out_csv.as_deref(), &TrialValue::rows(&values))?;
        emit("submodular", args.run.out_json.as_deref(), &report)?;
        return Ok(report.pass);
    }
    let c = constraint("constraint")?;
    let x = match obj.get("x") {
        Some(x) => FractionalPoint::new(serde_json::from_value(x.clone()).map_err(|e| invalid(format!("x: {e}")))?)?,
        None => c.random_point(b, &mut SeedSpec::new(args.run.seed).child(tags::POINT).stream(0))?,
    };
    if !c.in_scaled_polytope(&x, b)? {
        return Err(Error::OutsidePolytope(format!("x is not in {b}·P")));
    }
    let spec = c.scheme(b, args.eps)?;
    let (report, values) = ocrs_submodular_value(&f, &spec, &x, &opts)?;
    println!(
        "{} submodular{}: mean {:.6} ± {:.6} vs {}·({}) * F(x) = {:.6}",
        verdict(report.pass),
        if report.subsampled { " (half subsample)" } else { "" },
        report.mean.mean,
        report.mean.ci_halfwidth,
        report.factor,
        report.selectability.expression,
        report.target
    );
    emit_csv(args.run.out_csv.as_deref(), &TrialValue::rows(&values))?;
    emit("submodular", args.run.out_json.as_deref(), &report)?;
    Ok(report.pass)
}

#[derive(Serialize)]
struct ValidateReport {
    kind: Option<&'static str>,
    n: Option<usize>,
    rank: Option<usize>,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn validate_matroid(args: &ValidateArgs) -> Result<bool> {
    let v = read_json(&args.instance)?;
    let d: MatroidDescriptor = serde_json::from_value(v).map_err(|e| invalid(format!("matroid: {e}")))?;
    let checked = Matroid::from_descriptor(&d).and_then(|m| validate_axioms(&m).map(|_| m));
    let report = match checked {
        Ok(m) => {
            let n = m.ground_size();
            ValidateReport {
                kind: Some(m.kind()),
                n: Some(n),
                rank: Some(m.rank(ElementSet::full(n))),
                valid: true,
                error: None,
            }
        }
        Err(Error::NotAMatroid(msg)) => ValidateReport {
            kind: None,
            n: None,
            rank: None,
            valid: false,
            error: Some(msg),
        },
        Err(e) => return Err(e),
    };
    match &report.error {
        None => println!(
            "PASS validate-matroid: {} matroid, n = {}, rank {}",
            report.kind.unwrap_or_default(),
            report.n.unwrap_or_default(),
            report.rank.unwrap_or_default()
        ),
        Some(msg) => println!("FAIL validate-matroid: {msg}"),
    }
    emit("validate-matroid", args.out_json.as_deref(), &report)?;
    Ok(report.valid)
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::VerifySelectability(a) => verify(a),
        Command::Impossibility(a) => impossibility(a),
        Command::Prophet(a) => prophet(a),
        Command::Probing(a) => probing(a, false),
        Command::ProbingDeadlines(a) => probing(a, true),
        Command::Submodular(a) => submodular(a),
        Command::ValidateMatroid(a) => validate_matroid(a),
    }
}

/// Exit code for a library error: 1 for failed checks, 2 for bad input.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BoundViolated(_) | Error::FeasibilityViolated(_) => 1,
        _ => 2,
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OCRS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
