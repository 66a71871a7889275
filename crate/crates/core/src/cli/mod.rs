//! `persuade` command-line front end.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::casebook::{self, CaseReport, Example2Params};
use crate::error::{Error, Result};
use crate::kernels::{is_blackwell_preserving, parity_class, Horizon, KernelSchedule};
use crate::measures::dominates;
use crate::policies::ic_check;
use crate::rational::{self, Rational};
use crate::solver::{
    greedy_evaluate, interval_optimize, lp_solve, PeriodRecord, SolveResult, SolveValue,
};
use config::{ConfigError, Overrides, Scenario, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
/// A case or strict check ran but did not hold.
pub const EXIT_FAILED: i32 = 1;
/// Bad input or a solver error.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "persuade", version, about = "Optimal persuasion policies for a learning sender")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario and print the result as JSON.
    Solve(SolveArgs),
    /// Check a structural property of a scenario.
    Check(CheckArgs),
    /// Run a worked case and report expected against computed values.
    Case(CaseArgs),
    /// Solve a scenario over a range of one parameter and emit CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lp,
    Interval,
    Greedy,
    ValueIter,
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub config: PathBuf,
    /// Defaults to lp for finite horizons and value-iter otherwise.
    #[arg(long, alias = "oracle", value_enum)]
    pub method: Option<MethodArg>,
    /// Step of the float mass search used by the interval method.
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Truncation tolerance; turns the horizon infinite.
    #[arg(long, value_parser = parse_rational)]
    pub tol: Option<Rational>,
    /// Second-period weight, replacing the configured one.
    #[arg(long, value_parser = parse_rational)]
    pub w2: Option<Rational>,
    /// Fractional digits in CSV output.
    #[arg(long, default_value_t = 12)]
    pub digits: usize,
    /// Directory for result.json and plan.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    /// Kernel preserves the Blackwell order on its domain.
    Blackwell,
    /// `dominated` is dominated by the initial law.
    Domination,
    /// `plan` satisfies the obedience constraints.
    Ic,
    /// Initial law sits on one parity class of the grid.
    Parity,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub kind: CheckKind,
    pub config: PathBuf,
    /// Exit nonzero when the property fails.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseId {
    Counterexample,
    Example1,
    Example1Cutoffs,
    Example2,
    Prop1,
    Lemmas,
}

#[derive(Debug, Args)]
pub struct CaseArgs {
    pub id: CaseId,
    #[arg(long, value_parser = parse_rational)]
    pub w2: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub l: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub q: Option<Rational>,
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long, value_parser = parse_rational)]
    pub delta: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub eps: Option<Rational>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Directory for `<case>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    W2,
    Discount,
    Threshold,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario file, or `example2` for the closed-form q sweep.
    pub target: String,
    #[arg(long, value_enum)]
    pub param: Option<SweepParam>,
    #[arg(long, value_parser = parse_rational)]
    pub from: Rational,
    #[arg(long, value_parser = parse_rational)]
    pub to: Rational,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    #[arg(long, alias = "oracle", value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_parser = parse_rational)]
    pub l: Option<Rational>,
    #[arg(long, value_parser = parse_rational)]
    pub w2: Option<Rational>,
    #[arg(long, default_value_t = 12)]
    pub digits: usize,
    /// Directory for sweep.csv; CSV goes to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Config(ConfigError),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Case(a) => cmd_case(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn default_method(s: &Scenario) -> MethodArg {
    match s.spec.horizon() {
        Horizon::Finite(_) => MethodArg::Lp,
        Horizon::Truncated { .. } => MethodArg::ValueIter,
    }
}

/// Runs `method` on the scenario; `None` picks lp or value-iter by horizon.
pub fn solve_scenario(s: &Scenario, method: Option<MethodArg>) -> Result<SolveResult> {
    match method.unwrap_or_else(|| default_method(s)) {
        MethodArg::Lp => lp_solve(&s.spec, &s.threshold, &s.weights, &s.options),
        MethodArg::Interval => interval_optimize(&s.spec, &s.threshold, &s.weights, &s.options),
        MethodArg::Greedy => greedy_evaluate(&s.spec, &s.threshold, &s.weights),
        MethodArg::ValueIter => {
            if s.spec.horizon().finite().is_some() {
                return Err(Error::InvalidSpec("value-iter needs a tolerance horizon or --tol".into()));
            }
            greedy_evaluate(&s.spec, &s.threshold, &s.weights)
        }
    }
}

#[derive(Serialize)]
struct DecimalValue {
    lower: String,
    upper: String,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    method: crate::solver::Method,
    threshold: String,
    value: &'a SolveValue,
    value_decimal: DecimalValue,
    #[serde(with = "rational::serde_vec")]
    per_period_mass: &'a [Rational],
    periods: &'a [PeriodRecord],
}

/// The JSON document printed by `solve`.
pub fn solve_report(s: &Scenario, res: &SolveResult, digits: usize) -> Result<String> {
    output::to_json(&SolveReport {
        method: res.method,
        threshold: rational::format(&s.threshold),
        value: &res.value,
        value_decimal: DecimalValue {
            lower: rational::to_decimal(res.value.lower(), digits),
            upper: rational::to_decimal(res.value.upper(), digits),
        },
        per_period_mass: &res.per_period_mass,
        periods: &res.periods,
    })
}

fn cmd_solve(a: &SolveArgs) -> std::result::Result<i32, Failure> {
    let overrides = Overrides { w2: a.w2.clone(), tolerance: a.tol.clone(), resolution: a.resolution, ..Overrides::default() };
    let s = config::load(&a.config, &overrides)?;
    let res = solve_scenario(&s, a.method)?;
    let text = solve_report(&s, &res, a.digits)?;
    let csv = output::plan_csv(&res, a.digits)?;
    let (json_path, csv_path) = match &a.out {
        Some(dir) => (Some(dir.join("result.json")), Some(dir.join("plan.csv"))),
        None => (s.output.json.clone(), s.output.csv.clone()),
    };
    if let Some(p) = json_path {
        output::write_file(&p, text.as_bytes())?;
    }
    if let Some(p) = csv_path {
        output::write_file(&p, &csv)?;
    }
    print!("{text}");
    Ok(EXIT_OK)
}

fn triple_json(t: &(Rational, Rational, Rational)) -> serde_json::Value {
    json!([rational::format(&t.0), rational::format(&t.1), rational::format(&t.2)])
}

fn check_blackwell(s: &Scenario) -> Result<(bool, serde_json::Value)> {
    let kernels: Vec<_> = match s.spec.kernels() {
        KernelSchedule::Stationary(k) => vec![k],
        KernelSchedule::PerPeriod(ks) => ks.iter().collect(),
    };
    let mut per_kernel = Vec::with_capacity(kernels.len());
    let mut all = true;
    for (i, k) in kernels.iter().enumerate() {
        let domain: Vec<Rational> = k.domain().cloned().collect();
        let (holds, triple) = is_blackwell_preserving(k, &domain)?;
        all &= holds;
        per_kernel.push(json!({
            "kernel": i + 1,
            "holds": holds,
            "triple": triple.as_ref().map(triple_json),
        }));
    }
    Ok((all, json!({ "kernels": per_kernel })))
}

fn check_domination(s: &Scenario) -> Result<(bool, serde_json::Value)> {
    let lambda = s
        .dominated
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("domination check needs a `dominated` measure".into()))?;
    let (holds, witness) = dominates(lambda, s.spec.initial())?;
    Ok((holds, json!({ "dominated": lambda, "witness": witness })))
}

fn check_ic(s: &Scenario) -> Result<(bool, serde_json::Value)> {
    let plan = s.plan.as_ref().ok_or_else(|| Error::InvalidSpec("ic check needs a `plan`".into()))?;
    match ic_check(plan, &s.spec, &s.threshold) {
        Ok(()) => Ok((true, json!({ "violation": null }))),
        Err(Error::IcViolation { period, kind }) => {
            Ok((false, json!({ "violation": { "period": period, "kind": kind.to_string() } })))
        }
        Err(e) => Err(e),
    }
}

fn check_parity(s: &Scenario) -> Result<(bool, serde_json::Value)> {
    let g = s
        .grid
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("parity check needs a random-walk kernel".into()))?;
    Ok((parity_class(g, s.spec.initial())?, json!({})))
}

fn cmd_check(a: &CheckArgs) -> std::result::Result<i32, Failure> {
    let s = config::load(&a.config, &Overrides::default())?;
    let (name, (holds, detail)) = match a.kind {
        CheckKind::Blackwell => ("blackwell", check_blackwell(&s)?),
        CheckKind::Domination => ("domination", check_domination(&s)?),
        CheckKind::Ic => ("ic", check_ic(&s)?),
        CheckKind::Parity => ("parity", check_parity(&s)?),
    };
    let report = json!({ "check": name, "holds": holds, "detail": detail });
    let text = output::to_json(&report)?;
    if let Some(dir) = &a.out {
        output::write_file(&dir.join(format!("check-{name}.json")), text.as_bytes())?;
    }
    print!("{text}");
    Ok(if a.strict && !holds { EXIT_FAILED } else { EXIT_OK })
}

/// Dispatches a case id with its parameters; unset parameters take their defaults.
pub fn run_case(a: &CaseArgs) -> Result<CaseReport> {
    let r = |v: &Option<Rational>, n: i64, d: i64| v.clone().unwrap_or_else(|| rational::ratio(n, d));
    match a.id {
        CaseId::Counterexample => casebook::counterexample_nonblackwell(),
        CaseId::Example1 => casebook::example1(&r(&a.w2, 4, 5)),
        CaseId::Example1Cutoffs => casebook::example1_cutoffs(),
        CaseId::Example2 => {
            let d = Example2Params::default();
            casebook::example2(&Example2Params {
                l: a.l.clone().unwrap_or(d.l),
                w2: a.w2.clone().unwrap_or(d.w2),
                q: a.q.clone().unwrap_or(d.q),
                atoms: a.atoms.unwrap_or(d.atoms),
            })
        }
        CaseId::Prop1 => casebook::prop1_check(&r(&a.delta, 3, 4), &r(&a.eps, 1, 100), &r(&a.l, 1, 2)),
        CaseId::Lemmas => casebook::lemma_property_suite(a.seed, a.trials),
    }
}

fn cmd_case(a: &CaseArgs) -> std::result::Result<i32, Failure> {
    let report = run_case(a)?;
    let text = output::to_json(&report)?;
    if let Some(dir) = &a.out {
        output::write_file(&dir.join(format!("{}.json", report.case_id)), text.as_bytes())?;
    }
    print!("{text}");
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
}

/// `steps` evenly spaced values from `from` to `to`, both included.
pub fn sweep_points(from: &Rational, to: &Rational, steps: usize) -> Vec<Rational> {
    match steps {
        0 => Vec::new(),
        1 => vec![from.clone()],
        n => (0..n)
            .map(|k| from + (to - from) * rational::ratio(k as i64, n as i64 - 1))
            .collect(),
    }
}

fn sweep_example2(a: &SweepArgs) -> Result<(Vec<&'static str>, Vec<Vec<String>>)> {
    let d = Example2Params::default();
    let l = rational::to_f64(a.l.as_ref().unwrap_or(&d.l));
    let w2 = rational::to_f64(a.w2.as_ref().unwrap_or(&d.w2));
    let rows = sweep_points(&a.from, &a.to, a.steps)
        .par_iter()
        .map(|q| {
            let qf = rational::to_f64(q);
            let alpha = casebook::example2_alpha_star(l, qf, w2)?;
            let gamma = casebook::example2_gamma(alpha, l, qf, w2)?;
            let regime = casebook::example2_regime(l, qf, w2)?;
            Ok(vec![
                rational::to_decimal(q, a.digits),
                format!("{alpha:.*}", a.digits),
                format!("{gamma:.*}", a.digits),
                regime.to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((vec!["q", "alpha_star", "gamma_max", "regime"], rows))
}

fn sweep_scenario(a: &SweepArgs, path: &Path) -> std::result::Result<(Vec<&'static str>, Vec<Vec<String>>), Failure> {
    let param = a
        .param
        .ok_or_else(|| Error::InvalidSpec("--param is required when sweeping a scenario file".into()))?;
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: shown.clone(),
        line: 1,
        column: 1,
        message: format!("cannot read: {e}"),
    })?;
    let cfg = ScenarioConfig::parse(&text, &shown)?;
    let rows = sweep_points(&a.from, &a.to, a.steps)
        .par_iter()
        .map(|v| {
            let mut o = Overrides { w2: a.w2.clone(), ..Overrides::default() };
            match param {
                SweepParam::W2 => o.w2 = Some(v.clone()),
                SweepParam::Discount => o.discount = Some(v.clone()),
                SweepParam::Threshold => o.threshold = Some(v.clone()),
            }
            let s = cfg.build(&o)?;
            let res = solve_scenario(&s, a.method)?;
            let first = res.per_period_mass.first().cloned().unwrap_or_else(rational::zero);
            Ok(vec![
                rational::to_decimal(v, a.digits),
                rational::to_decimal(res.value.lower(), a.digits),
                rational::to_decimal(res.value.upper(), a.digits),
                rational::to_decimal(&first, a.digits),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match param {
        SweepParam::W2 => "w2",
        SweepParam::Discount => "discount",
        SweepParam::Threshold => "threshold",
    };
    Ok((vec![name, "value_lower", "value_upper", "first_period_mass"], rows))
}

fn cmd_sweep(a: &SweepArgs) -> std::result::Result<i32, Failure> {
    let (header, rows) = if a.target == "example2" {
        sweep_example2(a)?
    } else {
        sweep_scenario(a, Path::new(&a.target))?
    };
    let csv = output::table_csv(&header, &rows)?;
    match &a.out {
        Some(dir) => output::write_file(&dir.join("sweep.csv"), &csv)?,
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn sweep_points_include_ends() {
        let pts = sweep_points(&ratio(0, 1), &ratio(1, 1), 5);
        assert_eq!(pts, vec![ratio(0, 1), ratio(1, 4), ratio(1, 2), ratio(3, 4), ratio(1, 1)]);
        assert_eq!(sweep_points(&ratio(1, 3), &ratio(1, 1), 1), vec![ratio(1, 3)]);
    }

    #[test]
    fn help_exits_zero_and_bad_flag_exits_two() {
        assert_eq!(run(["persuade", "--help"]), EXIT_OK);
        assert_eq!(run(["persuade", "solve", "--bogus"]), EXIT_ERROR);
    }
}
