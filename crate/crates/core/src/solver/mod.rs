//! Sender value three ways: LP oracle, interval-policy search, greedy.

mod float;
mod interval;
mod oracle;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernels::{pushforward, random_walk_kernel, Grid, Horizon, KernelSchedule, MartingaleSpec};
use crate::measures::DiscreteMeasure;
use crate::policies::{greedy_measure, IntervalPeriod, StoppingPlan};
use crate::rational::{self, Rational};

pub use interval::interval_optimize;
pub use oracle::lp_solve;

/// Default cap on LP variables when `PERSUADE_MAX_LP_VARS` is unset.
pub const DEFAULT_MAX_LP_VARS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSchedule {
    Explicit(Vec<Rational>),
    /// `w_t = δ^t`.
    Geometric(Rational),
}

impl WeightSchedule {
    pub fn explicit(weights: Vec<Rational>) -> Result<Self> {
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::InvalidSpec("weights must be nonnegative".into()));
        }
        if weights.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::InvalidSpec("weights must be non-increasing".into()));
        }
        Ok(WeightSchedule::Explicit(weights))
    }

    pub fn geometric(delta: Rational) -> Result<Self> {
        if !delta.is_positive() || delta >= Rational::one() {
            return Err(Error::InvalidSpec(format!(
                "discount {} outside (0, 1)",
                rational::format(&delta)
            )));
        }
        Ok(WeightSchedule::Geometric(delta))
    }

    /// `w_t` for 1-based `t`; explicit schedules are zero past their end.
    pub fn weight(&self, t: usize) -> Rational {
        match self {
            WeightSchedule::Explicit(w) => w.get(t - 1).cloned().unwrap_or_else(Rational::zero),
            WeightSchedule::Geometric(d) => num_traits::pow(d.clone(), t),
        }
    }

    pub fn weights(&self, periods: usize) -> Vec<Rational> {
        (1..=periods).map(|t| self.weight(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub max_lp_vars: usize,
    /// Step of the floating-point mass search in `interval_optimize`.
    pub resolution: f64,
    /// Break ties toward earlier stopping (max α_1, then α_2, …).
    pub lexicographic: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        let max_lp_vars = std::env::var("PERSUADE_MAX_LP_VARS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_LP_VARS);
        SolveOptions { max_lp_vars, resolution: 1e-3, lexicographic: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lp,
    Interval,
    Greedy,
    ValueIter,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveValue {
    Exact(Rational),
    /// Certified enclosure of an infinite-horizon value.
    Bracket { lower: Rational, upper: Rational },
}

impl SolveValue {
    pub fn lower(&self) -> &Rational {
        match self {
            SolveValue::Exact(v) => v,
            SolveValue::Bracket { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> &Rational {
        match self {
            SolveValue::Exact(v) => v,
            SolveValue::Bracket { upper, .. } => upper,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            SolveValue::Exact(v) => Some(v),
            SolveValue::Bracket { .. } => None,
        }
    }
}

impl Serialize for SolveValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SolveValue::Exact(v) => s.serialize_str(&rational::format(v)),
            SolveValue::Bracket { lower, upper } => {
                #[derive(Serialize)]
                struct B {
                    lower: String,
                    upper: String,
                }
                B { lower: rational::format(lower), upper: rational::format(upper) }.serialize(s)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub period: usize,
    #[serde(flatten)]
    pub window: IntervalPeriod,
    #[serde(with = "rational::serde_str")]
    pub value_to_go: Rational,
    pub eliminated: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub method: Method,
    pub value: SolveValue,
    #[serde(with = "rational::serde_vec")]
    pub per_period_mass: Vec<Rational>,
    pub periods: Vec<PeriodRecord>,
    #[serde(skip)]
    pub plan: StoppingPlan,
}

impl SolveResult {
    /// Assembles a result from eliminated measures; the value is `Σ w_t |ν_t|`
    /// plus `tail` on the upper end.
    pub(crate) fn build(
        method: Method,
        spec: &MartingaleSpec,
        w: &WeightSchedule,
        plan: StoppingPlan,
        tail: Option<Rational>,
    ) -> Result<SolveResult> {
        let periods = plan.eliminated.len();
        let flows = plan.residual_flows(spec, periods.max(1))?;
        let masses = plan.masses();
        let mut to_go = vec![Rational::zero(); periods + 1];
        for t in (1..=periods).rev() {
            to_go[t - 1] = &to_go[t] + w.weight(t) * &masses[t - 1];
        }
        let records = plan
            .eliminated
            .iter()
            .enumerate()
            .map(|(i, nu)| PeriodRecord {
                period: i + 1,
                window: IntervalPeriod::from_measures(&flows[i], nu),
                value_to_go: to_go[i].clone(),
                eliminated: nu.clone(),
            })
            .collect();
        let total = to_go[0].clone();
        let value = match tail {
            None => SolveValue::Exact(total),
            Some(t) => SolveValue::Bracket { upper: &total + t, lower: total },
        };
        Ok(SolveResult { method, value, per_period_mass: masses, periods: records, plan })
    }
}

/// Number of periods after which the weight left for every unit of `mass`
/// is at most `tol`, searched up to `max_periods`.
pub(crate) fn truncation_periods(
    w: &WeightSchedule,
    mass: &Rational,
    tol: &Rational,
    max_periods: usize,
) -> Result<usize> {
    (1..=max_periods)
        .find(|&t| mass * w.weight(t + 1) <= *tol)
        .ok_or(Error::ToleranceUnachievable { periods: max_periods })
}

/// Mass that can never reach the threshold: absorbed at points below `l`.
fn live_mass(sigma: &crate::kernels::Kernel, mu: &DiscreteMeasure, l: &Rational) -> Rational {
    mu.atoms()
        .iter()
        .filter(|(x, _)| {
            let absorbed = sigma
                .get(x)
                .map(|img| img.len() == 1 && img.atoms()[0].0 == *x)
                .unwrap_or(false);
            !(absorbed && x < l)
        })
        .fold(Rational::zero(), |acc, (_, w)| acc + w)
}

/// Value and plan of stopping greedily in every period.
pub fn greedy_evaluate(spec: &MartingaleSpec, l: &Rational, w: &WeightSchedule) -> Result<SolveResult> {
    let mut mu = spec.initial().clone();
    let mut eliminated = Vec::new();
    match spec.horizon() {
        Horizon::Finite(periods) => {
            for t in 1..=*periods {
                let nu = if mu.is_empty() { DiscreteMeasure::zero() } else { greedy_measure(&mu, l)? };
                if t < *periods {
                    mu = pushforward(spec.kernel(t), &mu.subtract(&nu)?)?;
                }
                eliminated.push(nu);
            }
            SolveResult::build(Method::Greedy, spec, w, StoppingPlan::new(eliminated), None)
        }
        Horizon::Truncated { tol, max_periods } => {
            let sigma = spec.kernel(1);
            for t in 1..=*max_periods {
                let nu = if mu.is_empty() { DiscreteMeasure::zero() } else { greedy_measure(&mu, l)? };
                let rest = mu.subtract(&nu)?;
                if let Some(edge) = rest.points().find(|x| sigma.window_edges().contains(*x)) {
                    return Err(Error::DegenerateGrid(format!(
                        "window edge {} reached in period {t}; widen the grid window",
                        rational::format(edge)
                    )));
                }
                mu = pushforward(sigma, &rest)?;
                eliminated.push(nu);
                // each remaining unit adopts at most once, at weight at most w_{t+1}
                let tail = live_mass(sigma, &mu, l) * w.weight(t + 1);
                if tail <= *tol {
                    return SolveResult::build(Method::ValueIter, spec, w, StoppingPlan::new(eliminated), Some(tail));
                }
            }
            Err(Error::ToleranceUnachievable { periods: *max_periods })
        }
    }
}

/// Greedy value of the infinite-horizon random walk on `g` with `w_t = δ^t`,
/// enclosed within `tol`.
pub fn value_iterate_random_walk(
    g: &Grid,
    l: &Rational,
    delta: &Rational,
    mu1: &DiscreteMeasure,
    tol: &Rational,
    max_periods: usize,
) -> Result<(Rational, Rational)> {
    for x in mu1.points() {
        if g.index_of(x).is_none() {
            return Err(Error::OffGridSupport { point: rational::format(x) });
        }
    }
    let spec = MartingaleSpec::new(
        mu1.clone(),
        KernelSchedule::Stationary(random_walk_kernel(g)?),
        Horizon::Truncated { tol: tol.clone(), max_periods },
    )?;
    let res = greedy_evaluate(&spec, l, &WeightSchedule::geometric(delta.clone())?)?;
    Ok((res.value.lower().clone(), res.value.upper().clone()))
}

/// `D(Γ) = max_{j ≤ 0} (l - z_{j-1}) / (l - z_j)` over the represented window.
/// The flag is set when the window cuts an infinite grid, so the value is only
/// a lower bound on the supremum.
pub fn grid_d(g: &Grid) -> Result<(Rational, bool)> {
    let l = g.threshold();
    let mut best: Option<Rational> = None;
    for j in (g.first_index() + 1)..=0 {
        let (lo, hi) = (g.z(j - 1).expect("in window"), g.z(j).expect("in window"));
        let r = (l - lo) / (l - hi);
        if best.as_ref().is_none_or(|b| r > *b) {
            best = Some(r);
        }
    }
    best.map(|d| (d, g.is_truncated()))
        .ok_or_else(|| Error::DegenerateGrid("need a grid point below z_0".into()))
}

/// Adoption-time law of the policy that reveals the posterior until it sits
/// next to the threshold: whatever lands on `z_1` or above from `z_0` adopts,
/// pooled with just enough of the mass that fell from `z_0` to `z_{-1}` to
/// keep the pooled mean at `l`. Mass already at or above `l` adopts at once.
pub fn transparent_adoption_law(
    g: &Grid,
    mu1: &DiscreteMeasure,
    periods: usize,
) -> Result<Vec<(usize, Rational)>> {
    let l = g.threshold();
    let sigma = random_walk_kernel(g)?;
    for x in mu1.points() {
        if g.index_of(x).is_none() {
            return Err(Error::OffGridSupport { point: rational::format(x) });
        }
    }
    let z0 = g.z(0).expect("z_0 exists").clone();
    let zm1 = g.z(-1).cloned();
    let mut law = Vec::with_capacity(periods);
    let mut mu = mu1.clone();
    let mut from_z0 = Rational::zero(); // residual at z_0 in the previous period
    for t in 1..=periods {
        let mut adopt: Vec<(Rational, Rational)> = mu
            .atoms()
            .iter()
            .filter(|(x, _)| x >= l)
            .cloned()
            .collect();
        if t > 1 && from_z0.is_positive() {
            if let (Some(zm1), Ok(img)) = (&zm1, sigma.get(&z0)) {
                let up: Rational = img.atoms().iter().filter(|(x, _)| x >= l).map(|(x, p)| (x - l) * p).sum();
                let share = &from_z0 * up / (l - zm1);
                if share.is_positive() {
                    adopt.push((zm1.clone(), share));
                }
            }
        }
        let nu = DiscreteMeasure::new(adopt)?;
        law.push((t, nu.total_mass()));
        let rest = mu.subtract(&nu)?;
        from_z0 = rest.weight_at(&z0);
        mu = pushforward(&sigma, &rest)?;
    }
    Ok(law)
}
