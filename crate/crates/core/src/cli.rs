//! Command-line front end: argument parsing, dispatch and report rendering.
//!
//! Exit codes: 0 success, 1 validation error, 2 capacity or size error,
//! 3 cross-check failure.
//!
//! The CSV report is one header row and one data row with the columns
//! `command,spec,mode,expectation,variance,states,edges,wall_ms`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use crate::chain_solver;
use crate::error::Error;
use crate::mc_oracle::{self, Estimate};
use crate::model::{CollectionSpec, StateSpace, DEFAULT_STATE_LIMIT};
use crate::scalar::{ScalarMode, Value};
use crate::single_exact::ClosedForm;
use crate::tail_oracle::{self, TailConfig};

/// Version of the JSON report layout.
pub const REPORT_VERSION: u32 = 1;

/// Environment variable overriding the state-count limit.
pub const STATE_LIMIT_ENV: &str = "PARCOLLECT_STATE_LIMIT";

/// `check` skips the tail oracle when any collection is larger than this.
pub const TAILSUM_MAX_COUPONS: u64 = 150;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_CROSS_CHECK: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Absorbing-chain solve on the product state space.
    Exact,
    /// Single-collection closed forms (requires one collection).
    ClosedForm,
    /// Inclusion-exclusion tail sums.
    Tailsum,
    /// Monte Carlo estimate.
    Simulate,
    /// Run every applicable method and cross-check them.
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::ClosedForm => "closed-form",
            Command::Tailsum => "tailsum",
            Command::Simulate => "simulate",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rational,
    Float,
}

impl From<ModeArg> for ScalarMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rational => ScalarMode::Rational,
            ModeArg::Float => ScalarMode::Float,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

/// Waiting time to complete parallel coupon collections.
#[derive(Debug, Parser)]
#[command(name = "parcollect", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,

    /// Collection sizes, e.g. `6,6,6`.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["n", "m"])]
    pub collections: Option<Vec<u64>>,

    /// Coupons per collection (with `--m`).
    #[arg(long)]
    pub n: Option<u64>,

    /// Number of identical collections (with `--n`, default 1).
    #[arg(long, requires = "n")]
    pub m: Option<usize>,

    #[arg(long, value_enum, default_value_t = ModeArg::Float)]
    pub mode: ModeArg,

    /// Tail-sum truncation target.
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,

    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,

    /// Include per-state vectors (exact only).
    #[arg(long)]
    pub full: bool,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub command: Command,
    pub spec: CollectionSpec,
    pub mode: ScalarMode,
    pub eps: f64,
    pub trials: u64,
    pub seed: u64,
    pub output: OutputFormat,
    pub full: bool,
    pub state_limit: u64,
}

impl RunRequest {
    pub fn from_args(args: Args, state_limit_env: Option<&str>) -> Result<Self, String> {
        let spec = match (args.collections, args.n) {
            (Some(sizes), None) => CollectionSpec::new(sizes),
            (None, Some(n)) => CollectionSpec::uniform(n, args.m.unwrap_or(1)),
            (None, None) => {
                return Err("a spec is required: --collections N1,N2,... or --n N --m M".into())
            }
            (Some(_), Some(_)) => unreachable!("clap enforces exclusivity"),
        }
        .map_err(|e| e.to_string())?;

        let state_limit = match state_limit_env {
            Some(raw) => raw
                .trim()
                .parse::<u64>()
                .map_err(|_| format!("{STATE_LIMIT_ENV} must be a non-negative integer, got `{raw}`"))?,
            None => DEFAULT_STATE_LIMIT,
        };
        let mode = ScalarMode::from(args.mode);

        TailConfig::new(args.eps, None).map_err(|e| e.to_string())?;
        match args.command {
            Command::ClosedForm if spec.m() != 1 => {
                return Err(format!(
                    "closed-form needs exactly one collection, got {}",
                    spec.m()
                ))
            }
            Command::Tailsum | Command::Simulate if mode == ScalarMode::Rational => {
                return Err(format!("{} only runs in float mode", args.command.name()))
            }
            Command::Simulate | Command::Check if args.trials < 2 => {
                return Err(format!("--trials must be at least 2, got {}", args.trials))
            }
            _ => {}
        }
        if args.full && args.command != Command::Exact {
            return Err("--full only applies to exact".into());
        }

        Ok(Self {
            command: args.command,
            spec,
            mode,
            eps: args.eps,
            trials: args.trials,
            seed: args.seed,
            output: args.output,
            full: args.full,
            state_limit,
        })
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PerState {
    pub state: Vec<u64>,
    pub k: Value,
    pub v: Value,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Results {
    pub expectation: Value,
    pub variance: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_markov: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_state: Option<Vec<PerState>>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Diagnostics {
    pub states: Option<u64>,
    pub edges: Option<u64>,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

/// One method's numbers in a `check` run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MethodRow {
    pub method: &'static str,
    pub expectation: Value,
    pub variance: Value,
    pub note: String,
}

/// One pairwise agreement test in a `check` run.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckRow {
    pub pair: String,
    pub quantity: &'static str,
    pub difference: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub spec: Vec<u64>,
    pub mode: &'static str,
    pub results: Results,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<MethodRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckRow>>,
    pub version: u32,
}

impl Report {
    fn new(req: &RunRequest, mode: ScalarMode, results: Results, diagnostics: Diagnostics) -> Self {
        Self {
            command: req.command.name(),
            spec: req.spec.sizes().to_vec(),
            mode: mode.as_str(),
            results,
            diagnostics,
            methods: None,
            checks: None,
            version: REPORT_VERSION,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks
            .as_ref()
            .is_none_or(|rows| rows.iter().all(|r| r.ok))
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            OutputFormat::Csv => self.render_csv(),
            OutputFormat::Text => self.render_text(),
        }
    }

    fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            "command",
            "spec",
            "mode",
            "expectation",
            "variance",
            "states",
            "edges",
            "wall_ms",
        ])
        .and_then(|_| {
            w.write_record([
                self.command.to_string(),
                join_sizes(&self.spec),
                self.mode.to_string(),
                self.results.expectation.to_string(),
                self.results.variance.to_string(),
                opt(self.diagnostics.states),
                opt(self.diagnostics.edges),
                self.diagnostics.wall_ms.to_string(),
            ])
        })
        .expect("in-memory csv write");
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "spec: {}", join_sizes(&self.spec));
        let _ = writeln!(out, "mode: {}", self.mode);

        if let (Some(methods), Some(checks)) = (&self.methods, &self.checks) {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<12} {:>24} {:>24}  note", "method", "expectation", "variance");
            for m in methods {
                let _ = writeln!(
                    out,
                    "{:<12} {:>24} {:>24}  {}",
                    m.method,
                    m.expectation.to_string(),
                    m.variance.to_string(),
                    m.note
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:<24} {:<12} {:>12} {:>12}  status",
                "comparison", "quantity", "difference", "tolerance"
            );
            for c in checks {
                let _ = writeln!(
                    out,
                    "{:<24} {:<12} {:>12.3e} {:>12.3e}  {}",
                    c.pair,
                    c.quantity,
                    c.difference,
                    c.tolerance,
                    if c.ok { "ok" } else { "FAIL" }
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "check: {}", if self.passed() { "PASS" } else { "FAIL" });
            return out;
        }

        let _ = writeln!(out, "expectation: {}", self.results.expectation);
        let _ = writeln!(out, "variance: {}", self.results.variance);
        if let Some(v) = &self.results.variance_markov {
            let _ = writeln!(out, "variance_markov: {v}");
        }
        if let Some(states) = self.diagnostics.states {
            let _ = writeln!(out, "states: {states}");
        }
        if let Some(edges) = self.diagnostics.edges {
            let _ = writeln!(out, "edges: {edges}");
        }
        if let Some(b) = self.diagnostics.truncation_bound {
            let _ = writeln!(out, "truncation_bound: {b:e}");
        }
        if let Some(se) = self.diagnostics.stderr {
            let _ = writeln!(out, "stderr: {se}");
        }
        let _ = writeln!(out, "wall_ms: {:.3}", self.diagnostics.wall_ms);
        if let Some(rows) = &self.results.per_state {
            let _ = writeln!(out);
            for r in rows {
                let _ = writeln!(out, "{:?} k={} v={}", r.state, r.k, r.v);
            }
        }
        out
    }
}

fn join_sizes(sizes: &[u64]) -> String {
    sizes.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// Exit code plus what to print.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
    pub report: Option<Report>,
}

impl RunOutcome {
    fn failure(exit_code: i32, message: impl Into<String>) -> Self {
        Self {
            exit_code,
            stdout: String::new(),
            stderr: format!("error: {}\n", message.into()),
            report: None,
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Capacity { .. } | Error::DenseLimit { .. } | Error::TailCapExceeded { .. } => {
            EXIT_CAPACITY
        }
        _ => EXIT_VALIDATION,
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run_exact(req: &RunRequest) -> Result<Report, Error> {
    let start = Instant::now();
    let space = StateSpace::with_limit(&req.spec, req.state_limit)?;
    let moments = chain_solver::solve(&space, req.mode)?;
    let per_state = if req.full {
        Some(
            space
                .states()
                .zip(moments.k.iter().zip(&moments.v))
                .map(|(s, (k, v))| PerState {
                    state: s.counts().to_vec(),
                    k: k.clone(),
                    v: v.clone(),
                })
                .collect(),
        )
    } else {
        None
    };
    let results = Results {
        expectation: moments.k[0].clone(),
        variance: moments.v[0].clone(),
        variance_markov: None,
        per_state,
    };
    let diagnostics = Diagnostics {
        states: Some(space.len() as u64),
        edges: Some(moments.edges_visited),
        wall_ms: elapsed_ms(start),
        truncation_bound: None,
        stderr: None,
    };
    Ok(Report::new(req, req.mode, results, diagnostics))
}

fn run_closed_form(req: &RunRequest) -> Result<(Report, bool), Error> {
    let start = Instant::now();
    let n = req.spec.sizes()[0];
    let cf = ClosedForm::compute(n, req.mode)?;
    let agree = cf.variances_agree(1e-12);
    let results = Results {
        expectation: cf.expectation,
        variance: cf.variance_geometric,
        variance_markov: Some(cf.variance_markov),
        per_state: None,
    };
    let diagnostics = Diagnostics {
        states: None,
        edges: None,
        wall_ms: elapsed_ms(start),
        truncation_bound: None,
        stderr: None,
    };
    Ok((Report::new(req, req.mode, results, diagnostics), agree))
}

fn run_tailsum(req: &RunRequest) -> Result<Report, Error> {
    let start = Instant::now();
    let cfg = TailConfig::new(req.eps, TailConfig::default().n_cap)?;
    let m = tail_oracle::max_moments(&req.spec, &cfg)?;
    let results = Results {
        expectation: Value::Float(m.expectation),
        variance: Value::Float(m.variance),
        variance_markov: None,
        per_state: None,
    };
    let diagnostics = Diagnostics {
        states: None,
        edges: None,
        wall_ms: elapsed_ms(start),
        truncation_bound: Some(m.truncation_bound),
        stderr: None,
    };
    Ok(Report::new(req, ScalarMode::Float, results, diagnostics))
}

fn simulate(req: &RunRequest) -> Result<(Estimate, f64), Error> {
    let start = Instant::now();
    let est = mc_oracle::estimate_parallel(&req.spec, req.trials, req.seed)?;
    Ok((est, elapsed_ms(start)))
}

fn run_simulate(req: &RunRequest) -> Result<Report, Error> {
    let (est, wall_ms) = simulate(req)?;
    let results = Results {
        expectation: Value::Float(est.mean),
        variance: Value::Float(est.sample_variance),
        variance_markov: None,
        per_state: None,
    };
    let diagnostics = Diagnostics {
        states: None,
        edges: None,
        wall_ms,
        truncation_bound: None,
        stderr: Some(est.stderr_mean),
    };
    Ok(Report::new(req, ScalarMode::Float, results, diagnostics))
}

/// Compares two deterministic values: exactly when both are rational,
/// otherwise within `tol`.
fn compare(pair: String, quantity: &'static str, a: &Value, b: &Value, tol: f64) -> CheckRow {
    match (a, b) {
        (Value::Rational(x), Value::Rational(y)) => CheckRow {
            pair,
            quantity,
            difference: (a.to_f64() - b.to_f64()).abs(),
            tolerance: 0.0,
            ok: x == y,
        },
        _ => {
            let difference = (a.to_f64() - b.to_f64()).abs();
            CheckRow {
                pair,
                quantity,
                difference,
                tolerance: tol,
                ok: difference <= tol,
            }
        }
    }
}

fn run_check(req: &RunRequest) -> Result<(Report, Vec<String>), Error> {
    let start = Instant::now();
    let mut warnings = Vec::new();
    let mut methods: Vec<MethodRow> = Vec::new();
    let mut states = None;
    let mut edges = None;
    let mut truncation_bound = None;

    if req.spec.m() == 1 {
        let (r, agree) = run_closed_form(req)?;
        if !agree {
            warnings.push("closed-form variance forms disagree".into());
        }
        methods.push(MethodRow {
            method: "closed-form",
            expectation: r.results.expectation,
            variance: r.results.variance,
            note: String::new(),
        });
    }

    match run_exact(req) {
        Ok(r) => {
            states = r.diagnostics.states;
            edges = r.diagnostics.edges;
            methods.push(MethodRow {
                method: "exact",
                expectation: r.results.expectation,
                variance: r.results.variance,
                note: format!("states={}", states.unwrap_or(0)),
            });
        }
        Err(e @ Error::Capacity { .. }) => warnings.push(format!("exact skipped: {e}")),
        Err(e) => return Err(e),
    }

    if req.spec.sizes().iter().any(|&n| n > TAILSUM_MAX_COUPONS) {
        warnings.push(format!(
            "tailsum skipped: a collection exceeds {TAILSUM_MAX_COUPONS} coupons"
        ));
    } else {
        let r = run_tailsum(req)?;
        truncation_bound = r.diagnostics.truncation_bound;
        methods.push(MethodRow {
            method: "tailsum",
            expectation: r.results.expectation,
            variance: r.results.variance,
            note: format!("bound={:.1e}", truncation_bound.unwrap_or(0.0)),
        });
    }

    let (est, _) = simulate(req)?;

    let tol = req.eps.max(1e-8);
    let mut checks = Vec::new();
    if let Some((reference, rest)) = methods.split_first() {
        for other in rest {
            let pair = format!("{} vs {}", reference.method, other.method);
            checks.push(compare(
                pair.clone(),
                "expectation",
                &reference.expectation,
                &other.expectation,
                tol,
            ));
            checks.push(compare(pair, "variance", &reference.variance, &other.variance, tol));
        }
        let difference = (est.mean - reference.expectation.to_f64()).abs();
        let tolerance = 4.0 * est.stderr_mean;
        checks.push(CheckRow {
            pair: format!("{} vs simulate", reference.method),
            quantity: "expectation",
            difference,
            tolerance,
            ok: difference <= tolerance,
        });
    }
    if warnings.iter().any(|w| w.contains("disagree")) {
        checks.push(CheckRow {
            pair: "closed-form eq1 vs eq2".into(),
            quantity: "variance",
            difference: f64::NAN,
            tolerance: 0.0,
            ok: false,
        });
    }
    methods.push(MethodRow {
        method: "simulate",
        expectation: Value::Float(est.mean),
        variance: Value::Float(est.sample_variance),
        note: format!("stderr={:.3e} trials={}", est.stderr_mean, est.trials),
    });

    let reference = &methods[0];
    let results = Results {
        expectation: reference.expectation.clone(),
        variance: reference.variance.clone(),
        variance_markov: None,
        per_state: None,
    };
    let diagnostics = Diagnostics {
        states,
        edges,
        wall_ms: elapsed_ms(start),
        truncation_bound,
        stderr: Some(est.stderr_mean),
    };
    let mut report = Report::new(req, req.mode, results, diagnostics);
    report.methods = Some(methods);
    report.checks = Some(checks);
    Ok((report, warnings))
}

/// Executes a validated request.
pub fn run(req: &RunRequest) -> RunOutcome {
    let (report, exit_code, warnings) = match req.command {
        Command::Exact => match run_exact(req) {
            Ok(r) => (r, EXIT_OK, Vec::new()),
            Err(e) => return RunOutcome::failure(exit_code_for(&e), e.to_string()),
        },
        Command::ClosedForm => match run_closed_form(req) {
            Ok((r, true)) => (r, EXIT_OK, Vec::new()),
            Ok((r, false)) => (
                r,
                EXIT_CROSS_CHECK,
                vec!["the two variance forms disagree".to_string()],
            ),
            Err(e) => return RunOutcome::failure(exit_code_for(&e), e.to_string()),
        },
        Command::Tailsum => match run_tailsum(req) {
            Ok(r) => (r, EXIT_OK, Vec::new()),
            Err(e) => return RunOutcome::failure(exit_code_for(&e), e.to_string()),
        },
        Command::Simulate => match run_simulate(req) {
            Ok(r) => (r, EXIT_OK, Vec::new()),
            Err(e) => return RunOutcome::failure(exit_code_for(&e), e.to_string()),
        },
        Command::Check => match run_check(req) {
            Ok((r, w)) => {
                let code = if r.passed() { EXIT_OK } else { EXIT_CROSS_CHECK };
                (r, code, w)
            }
            Err(e) => return RunOutcome::failure(exit_code_for(&e), e.to_string()),
        },
    };
    let stderr = warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    RunOutcome {
        exit_code,
        stdout: report.render(req.output),
        stderr,
        report: Some(report),
    }
}

/// Parses `argv` and runs it. Help and version requests exit 0; any other
/// parse failure is a validation error.
pub fn main_with<I, T>(argv: I, state_limit_env: Option<&str>) -> RunOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => RunOutcome {
                    exit_code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                    report: None,
                },
                _ => RunOutcome {
                    exit_code: EXIT_VALIDATION,
                    stdout: String::new(),
                    stderr: text,
                    report: None,
                },
            };
        }
    };
    match RunRequest::from_args(args, state_limit_env) {
        Ok(req) => run(&req),
        Err(msg) => RunOutcome::failure(EXIT_VALIDATION, msg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> RunOutcome {
        let argv = std::iter::once("parcollect").chain(args.iter().copied());
        main_with(argv, None)
    }

    #[test]
    fn shorthand_spec() {
        let args = Args::try_parse_from(["parcollect", "exact", "--n", "4", "--m", "3"]).unwrap();
        let req = RunRequest::from_args(args, None).unwrap();
        assert_eq!(req.spec.sizes(), &[4, 4, 4]);
        assert_eq!(req.mode, ScalarMode::Float);
        assert_eq!(req.trials, 100_000);
        assert_eq!(req.seed, 0);
        assert_eq!(req.eps, 1e-10);
        assert_eq!(req.output, OutputFormat::Text);
        assert_eq!(req.state_limit, DEFAULT_STATE_LIMIT);
    }

    #[test]
    fn validation_errors_exit_one() {
        assert_eq!(go(&["exact"]).exit_code, EXIT_VALIDATION);
        assert_eq!(go(&["exact", "--collections", "3,0"]).exit_code, EXIT_VALIDATION);
        assert_eq!(go(&["closed-form", "--collections", "3,3"]).exit_code, EXIT_VALIDATION);
        assert_eq!(go(&["bogus", "--n", "3"]).exit_code, EXIT_VALIDATION);
        assert_eq!(
            go(&["exact", "--collections", "3", "--n", "3"]).exit_code,
            EXIT_VALIDATION
        );
        assert_eq!(
            go(&["simulate", "--n", "3", "--trials", "1"]).exit_code,
            EXIT_VALIDATION
        );
        assert_eq!(
            go(&["tailsum", "--n", "3", "--mode", "rational"]).exit_code,
            EXIT_VALIDATION
        );
        assert_eq!(go(&["tailsum", "--n", "3", "--eps", "2"]).exit_code, EXIT_VALIDATION);
    }

    #[test]
    fn capacity_errors_exit_two() {
        let out = main_with(["parcollect", "exact", "--collections", "10,10"], Some("50"));
        assert_eq!(out.exit_code, EXIT_CAPACITY);
        assert!(out.stderr.contains("exceeds the limit"));
        let bad = main_with(["parcollect", "exact", "--n", "3"], Some("many"));
        assert_eq!(bad.exit_code, EXIT_VALIDATION);
    }

    #[test]
    fn closed_form_rational_strings() {
        let out = go(&["closed-form", "--n", "6", "--m", "1", "--mode", "rational"]);
        assert_eq!(out.exit_code, 0);
        let r = out.report.unwrap();
        assert_eq!(r.results.expectation.to_string(), "147/10");
        assert_eq!(r.results.variance.to_string(), "3899/100");
        assert_eq!(r.results.variance_markov.unwrap().to_string(), "3899/100");
    }

    #[test]
    fn check_skips_exact_above_the_limit() {
        let out = main_with(
            ["parcollect", "check", "--collections", "4,4", "--trials", "20000"],
            Some("10"),
        );
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.stdout);
        assert!(out.stderr.contains("exact skipped"));
        let methods = out.report.unwrap().methods.unwrap();
        let names: Vec<_> = methods.iter().map(|m| m.method).collect();
        assert_eq!(names, vec!["tailsum", "simulate"]);
    }

    #[test]
    fn check_fails_when_tolerance_is_violated() {
        let rows = vec![compare(
            "a vs b".into(),
            "expectation",
            &Value::Float(1.0),
            &Value::Float(1.1),
            1e-8,
        )];
        assert!(!rows[0].ok);
        let mut report = go(&["exact", "--n", "2"]).report.unwrap();
        report.checks = Some(rows);
        assert!(!report.passed());
    }

    #[test]
    fn csv_has_fixed_columns() {
        let out = go(&["exact", "--collections", "2,2", "--mode", "rational", "--output", "csv"]);
        let mut lines = out.stdout.lines();
        assert_eq!(
            lines.next().unwrap(),
            "command,spec,mode,expectation,variance,states,edges,wall_ms"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("exact,\"2,2\",rational,11/3,8/3,5,"), "{row}");
        assert!(lines.next().is_none());
    }

    #[test]
    fn full_vectors_only_for_exact() {
        assert_eq!(go(&["tailsum", "--n", "3", "--full"]).exit_code, EXIT_VALIDATION);
        let out = go(&["exact", "--n", "3", "--full", "--mode", "rational"]);
        let rows = out.report.unwrap().results.per_state.unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].k.to_string(), "0/1");
    }
}
