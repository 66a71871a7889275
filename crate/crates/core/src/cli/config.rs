//! Scenario files: JSON describing the prior, kernels, threshold, weights and
//! horizon. Errors carry the line and column they refer to.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::error::Error;
use crate::kernels::{
    binary_signal_image, binary_signal_kernel, random_walk_kernel, Grid, Horizon, Kernel, KernelSchedule,
    MartingaleSpec,
};
use crate::measures::DiscreteMeasure;
use crate::policies::StoppingPlan;
use crate::rational::{self, Rational};
use crate::solver::{SolveOptions, WeightSchedule};

const DEFAULT_MAX_PERIODS: usize = 100_000;

/// A rational written either as a string (`"3/4"`, `"0.75"`) or a JSON number.
#[derive(Debug, Clone, PartialEq)]
pub struct Num(pub Rational);

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as \"p/q\", a decimal string, or a number")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<Num, E> {
                rational::parse(s).map(Num).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(rational::int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(Rational::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                // shortest round-trip text, read back exactly
                rational::parse(&format!("{v}")).map(Num).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConfig {
    Atoms(DiscreteMeasure),
    /// Prior `prior` updated by one binary signal of precision `signal`.
    Signal { prior: Rational, signal: Rational },
}

impl<'de> Deserialize<'de> for InitialConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = InitialConfig;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of [point, weight] atoms or {\"prior\", \"signal\"}")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<InitialConfig, A::Error> {
                let mut atoms = Vec::new();
                while let Some((x, w)) = seq.next_element::<(Num, Num)>()? {
                    atoms.push((x.0, w.0));
                }
                DiscreteMeasure::new(atoms).map(InitialConfig::Atoms).map_err(de::Error::custom)
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<InitialConfig, A::Error> {
                let (mut prior, mut signal) = (None, None);
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "prior" => prior = Some(map.next_value::<Num>()?.0),
                        "signal" => signal = Some(map.next_value::<Num>()?.0),
                        other => return Err(de::Error::unknown_field(other, &["prior", "signal"])),
                    }
                }
                Ok(InitialConfig::Signal {
                    prior: prior.ok_or_else(|| de::Error::missing_field("prior"))?,
                    signal: signal.ok_or_else(|| de::Error::missing_field("signal"))?,
                })
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridConfig {
    Points(Vec<Num>),
    /// `{0, ε, …, 1}`.
    Epsilon(Num),
    /// Beliefs reachable from 1/2 by signals of this precision, `depth` steps each way.
    BinarySignal { precision: Num, depth: usize },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    Explicit { rows: BTreeMap<String, Vec<(Num, Num)>> },
    RandomWalk { grid: GridConfig },
    BinarySignal { precision: Num },
    PerPeriod { kernels: Vec<KernelConfig> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightsConfig {
    List(Vec<Rational>),
    Discount(Rational),
}

impl<'de> Deserialize<'de> for WeightsConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = WeightsConfig;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a list of weights or {\"discount\": δ}")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<WeightsConfig, A::Error> {
                let mut out = Vec::new();
                while let Some(w) = seq.next_element::<Num>()? {
                    out.push(w.0);
                }
                Ok(WeightsConfig::List(out))
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<WeightsConfig, A::Error> {
                let mut discount = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "discount" => discount = Some(map.next_value::<Num>()?.0),
                        other => return Err(de::Error::unknown_field(other, &["discount"])),
                    }
                }
                discount.map(WeightsConfig::Discount).ok_or_else(|| de::Error::missing_field("discount"))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HorizonConfig {
    Finite(usize),
    Truncated { tolerance: Rational, max_periods: usize },
}

impl<'de> Deserialize<'de> for HorizonConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = HorizonConfig;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a period count or {\"tolerance\", \"max_periods\"}")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<HorizonConfig, E> {
                Ok(HorizonConfig::Finite(v as usize))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<HorizonConfig, E> {
                usize::try_from(v).map(HorizonConfig::Finite).map_err(|_| E::custom("horizon must be positive"))
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<HorizonConfig, A::Error> {
                let (mut tolerance, mut max_periods) = (None, None);
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "tolerance" => tolerance = Some(map.next_value::<Num>()?.0),
                        "max_periods" => max_periods = Some(map.next_value::<usize>()?),
                        other => return Err(de::Error::unknown_field(other, &["tolerance", "max_periods"])),
                    }
                }
                Ok(HorizonConfig::Truncated {
                    tolerance: tolerance.ok_or_else(|| de::Error::missing_field("tolerance"))?,
                    max_periods: max_periods.unwrap_or(DEFAULT_MAX_PERIODS),
                })
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    pub resolution: Option<f64>,
    pub max_lp_vars: Option<usize>,
    pub lexicographic: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub initial: InitialConfig,
    pub kernel: KernelConfig,
    pub threshold: Num,
    pub weights: WeightsConfig,
    pub horizon: HorizonConfig,
    #[serde(default)]
    pub options: OptionsConfig,
    /// Eliminated measures per period, for `check ic`.
    #[serde(default)]
    pub plan: Option<Vec<InitialConfig>>,
    /// Measure tested against the initial law by `check domination`.
    #[serde(default)]
    pub dominated: Option<InitialConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Error tied to a position in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.path, self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Fully built scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: MartingaleSpec,
    pub threshold: Rational,
    pub weights: WeightSchedule,
    pub options: SolveOptions,
    /// Grid of a stationary random-walk kernel.
    pub grid: Option<Grid>,
    pub plan: Option<StoppingPlan>,
    pub dominated: Option<DiscreteMeasure>,
    pub output: OutputConfig,
}

/// Command-line adjustments applied before the scenario is built.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub w2: Option<Rational>,
    /// Replaces the weights with `w_t = δ^t`.
    pub discount: Option<Rational>,
    pub threshold: Option<Rational>,
    pub tolerance: Option<Rational>,
    pub resolution: Option<f64>,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

/// Position of the first quoted occurrence of any needle, else of the first
/// fallback key, else the top of the file.
fn locate(text: &str, needles: &[String], fallback: &str) -> (usize, usize) {
    needles
        .iter()
        .filter(|n| !n.is_empty())
        .find_map(|n| text.find(&format!("\"{n}\"")))
        .or_else(|| text.find(&format!("\"{fallback}\"")))
        .map(|off| position(text, off))
        .unwrap_or((1, 1))
}

fn point_of(err: &Error) -> Option<String> {
    match err {
        Error::MissingTransition { point }
        | Error::InvalidTransition { point, .. }
        | Error::OffGridSupport { point }
        | Error::NegativeWeight { point, .. }
        | Error::NotSubmeasure { point } => Some(point.clone()),
        Error::PointOutOfRange(p) => Some(p.clone()),
        _ => None,
    }
}

fn measure_of(cfg: &InitialConfig) -> crate::error::Result<DiscreteMeasure> {
    match cfg {
        InitialConfig::Atoms(m) => Ok(m.clone()),
        InitialConfig::Signal { prior, signal } => binary_signal_image(signal, prior),
    }
}

fn build_grid(cfg: &GridConfig, threshold: &Rational) -> crate::error::Result<Grid> {
    match cfg {
        GridConfig::Points(pts) => Grid::new(pts.iter().map(|p| p.0.clone()).collect(), threshold.clone(), false),
        GridConfig::Epsilon(eps) => Grid::epsilon(&eps.0, threshold.clone()),
        GridConfig::BinarySignal { precision, depth } => {
            let g = Grid::binary_signal(&precision.0, *depth)?;
            if g.threshold() != threshold {
                return Err(Error::InvalidSpec(format!(
                    "a binary-signal grid has threshold 1/2, not {}",
                    rational::format(threshold)
                )));
            }
            Ok(g)
        }
    }
}

fn support_after(kernel: &Kernel, support: &[Rational]) -> crate::error::Result<Vec<Rational>> {
    let mut next: Vec<Rational> = Vec::new();
    for x in support {
        next.extend(kernel.get(x)?.points().cloned());
    }
    next.sort();
    next.dedup();
    Ok(next)
}

/// One kernel valid on `support`.
fn build_kernel(cfg: &KernelConfig, support: &[Rational], threshold: &Rational) -> crate::error::Result<Kernel> {
    match cfg {
        KernelConfig::Explicit { rows } => {
            let mut parsed = Vec::with_capacity(rows.len());
            for (x, atoms) in rows {
                let img = DiscreteMeasure::new(atoms.iter().map(|(p, w)| (p.0.clone(), w.0.clone())))?;
                parsed.push((rational::parse(x)?, img));
            }
            Kernel::new(parsed)
        }
        KernelConfig::RandomWalk { grid } => random_walk_kernel(&build_grid(grid, threshold)?),
        KernelConfig::BinarySignal { precision } => binary_signal_kernel(&precision.0, support),
        KernelConfig::PerPeriod { .. } => Err(Error::InvalidSpec("per-period lists cannot be nested".into())),
    }
}

fn build_schedule(
    cfg: &KernelConfig,
    initial: &DiscreteMeasure,
    horizon: &Horizon,
    threshold: &Rational,
) -> crate::error::Result<(KernelSchedule, Option<Grid>)> {
    match cfg {
        KernelConfig::RandomWalk { grid } => {
            let g = build_grid(grid, threshold)?;
            Ok((KernelSchedule::Stationary(random_walk_kernel(&g)?), Some(g)))
        }
        KernelConfig::Explicit { .. } => {
            Ok((KernelSchedule::Stationary(build_kernel(cfg, &[], threshold)?), None))
        }
        KernelConfig::BinarySignal { .. } | KernelConfig::PerPeriod { .. } => {
            let periods = horizon.finite().ok_or_else(|| {
                Error::InvalidSpec("binary-signal and per-period kernels need a finite horizon".into())
            })?;
            let mut support: Vec<Rational> = initial.points().cloned().collect();
            let mut kernels = Vec::with_capacity(periods.saturating_sub(1));
            for t in 1..periods.max(2) {
                let item = match cfg {
                    KernelConfig::PerPeriod { kernels: list } => list.get(t - 1).ok_or_else(|| {
                        Error::InvalidSpec(format!("{} kernels given for horizon {periods}", list.len()))
                    })?,
                    other => other,
                };
                let k = build_kernel(item, &support, threshold)?;
                support = support_after(&k, &support)?;
                kernels.push(k);
            }
            Ok((KernelSchedule::PerPeriod(kernels), None))
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str, path: &str) -> Result<ScenarioConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError {
            path: path.to_string(),
            line: e.line().max(1),
            column: e.column().max(1),
            message: strip_position(&e.to_string()),
        })
    }

    pub fn build(&self, overrides: &Overrides) -> crate::error::Result<Scenario> {
        let threshold = overrides.threshold.clone().unwrap_or_else(|| self.threshold.0.clone());
        let initial = measure_of(&self.initial)?;
        let mut horizon = match &self.horizon {
            HorizonConfig::Finite(t) => Horizon::Finite(*t),
            HorizonConfig::Truncated { tolerance, max_periods } => {
                Horizon::Truncated { tol: tolerance.clone(), max_periods: *max_periods }
            }
        };
        if let Some(tol) = &overrides.tolerance {
            horizon = match horizon {
                Horizon::Truncated { max_periods, .. } => Horizon::Truncated { tol: tol.clone(), max_periods },
                Horizon::Finite(_) => Horizon::Truncated { tol: tol.clone(), max_periods: DEFAULT_MAX_PERIODS },
            };
        }
        let (kernels, grid) = build_schedule(&self.kernel, &initial, &horizon, &threshold)?;
        let spec = MartingaleSpec::new(initial, kernels, horizon)?;
        let weights = match (&overrides.discount, &self.weights) {
            (Some(d), _) => WeightSchedule::geometric(d.clone())?,
            (None, WeightsConfig::List(list)) => {
                let mut list: Vec<Rational> = list.clone();
                if let Some(w2) = &overrides.w2 {
                    match list.len() {
                        0 => return Err(Error::InvalidSpec("--w2 needs a first-period weight".into())),
                        1 => list.push(w2.clone()),
                        _ => list[1] = w2.clone(),
                    }
                }
                WeightSchedule::explicit(list)?
            }
            (None, WeightsConfig::Discount(d)) => {
                if overrides.w2.is_some() {
                    return Err(Error::InvalidSpec("--w2 needs an explicit weight list".into()));
                }
                WeightSchedule::geometric(d.clone())?
            }
        };
        let mut options = SolveOptions::default();
        if let Some(r) = overrides.resolution.or(self.options.resolution) {
            options.resolution = r;
        }
        if let Some(v) = self.options.max_lp_vars {
            options.max_lp_vars = v;
        }
        if let Some(lex) = self.options.lexicographic {
            options.lexicographic = lex;
        }
        let plan = match &self.plan {
            Some(list) => Some(StoppingPlan::new(list.iter().map(measure_of).collect::<crate::error::Result<_>>()?)),
            None => None,
        };
        let dominated = self.dominated.as_ref().map(measure_of).transpose()?;
        Ok(Scenario { spec, threshold, weights, options, grid, plan, dominated, output: self.output.clone() })
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Reads, parses and builds a scenario file, anchoring every failure to a line.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Scenario, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: shown.clone(),
        line: 1,
        column: 1,
        message: format!("cannot read: {e}"),
    })?;
    load_str(&text, &shown, overrides)
}

pub fn load_str(text: &str, path: &str, overrides: &Overrides) -> Result<Scenario, ConfigError> {
    let cfg = ScenarioConfig::parse(text, path)?;
    cfg.build(overrides).map_err(|e| {
        let needles: Vec<String> = point_of(&e).into_iter().collect();
        let fallback = match e {
            Error::InvalidPrecision(_) | Error::DegenerateGrid(_) | Error::MissingTransition { .. } => "kernel",
            Error::InvalidTransition { .. } => "rows",
            Error::OffGridSupport { .. } | Error::ZeroMass => "initial",
            _ => "threshold",
        };
        let (line, column) = locate(text, &needles, fallback);
        ConfigError { path: path.to_string(), line, column, message: e.to_string() }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    const COUNTER: &str = r#"{
  "initial": [["1/3", "1/7"], ["1/2", "2/7"], ["3/4", "4/7"]],
  "kernel": {
    "kind": "explicit",
    "rows": {
      "1/3": [["1/3", "1"]],
      "1/2": [["0", "1/2"], ["1", "1/2"]],
      "3/4": [["3/4", "1"]]
    }
  },
  "threshold": "2/3",
  "weights": ["1", "3/4"],
  "horizon": 2
}"#;

    #[test]
    fn parses_explicit_scenario() {
        let s = load_str(COUNTER, "c.json", &Overrides::default()).unwrap();
        assert_eq!(s.threshold, ratio(2, 3));
        assert_eq!(s.spec.horizon(), &Horizon::Finite(2));
        assert_eq!(s.weights.weight(2), ratio(3, 4));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let broken = COUNTER.replace("\"threshold\": \"2/3\",", "\"threshold\": \"2/3\"");
        let err = load_str(&broken, "c.json", &Overrides::default()).unwrap_err();
        assert_eq!(err.line, 12);
        assert!(err.to_string().starts_with("c.json:12:"));
    }

    #[test]
    fn off_support_kernel_is_anchored() {
        let missing = COUNTER.replace("      \"3/4\": [[\"3/4\", \"1\"]]\n", "      \"3/5\": [[\"3/5\", \"1\"]]\n");
        let err = load_str(&missing, "c.json", &Overrides::default()).unwrap_err();
        assert!(err.message.contains("3/4"), "{err}");
        assert_eq!(err.line, 2, "{err}");
    }

    #[test]
    fn signal_prior_and_overrides() {
        let text = r#"{"initial": {"prior": "1/2", "signal": "3/4"},
            "kernel": {"kind": "binary-signal", "precision": "4/5"},
            "threshold": "18/25", "weights": [1, 0.5], "horizon": 2}"#;
        let o = Overrides { w2: Some(ratio(4, 5)), ..Overrides::default() };
        let s = load_str(text, "e.json", &o).unwrap();
        assert_eq!(s.weights.weight(2), ratio(4, 5));
        assert_eq!(s.spec.initial().total_mass(), ratio(1, 1));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = COUNTER.replace("\"horizon\": 2", "\"horizon\": 2, \"colour\": 1");
        let err = load_str(&text, "c.json", &Overrides::default()).unwrap_err();
        assert!(err.message.contains("colour"));
        assert_eq!(err.line, 13);
    }
}
