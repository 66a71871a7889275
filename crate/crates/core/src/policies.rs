//! Greedy and interval stopping rules, and incentive-compatibility replay.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, IcViolationKind, Result};
use crate::kernels::{pushforward, MartingaleSpec};
use crate::measures::DiscreteMeasure;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct Greedy {
    pub measure: DiscreteMeasure,
    /// No support point reaches the threshold, so nothing can be stopped.
    pub threshold_unreachable: bool,
}

/// Largest sub-measure with barycenter at least `l`, taken from the top.
pub fn greedy(mu: &DiscreteMeasure, l: &Rational) -> Result<Greedy> {
    if mu.is_empty() {
        return Err(Error::ZeroMass);
    }
    let unreachable = mu.max_point().is_some_and(|x| x < l);
    if mu.barycenter()? >= *l {
        return Ok(Greedy { measure: mu.clone(), threshold_unreachable: false });
    }
    let mut surplus = Rational::zero(); // Σ (x - l) w over the taken atoms
    let mut taken = Vec::new();
    for (x, w) in mu.atoms().iter().rev() {
        let gain = (x - l) * w;
        if &surplus + &gain >= Rational::zero() {
            surplus += gain;
            taken.push((x.clone(), w.clone()));
        } else {
            let part = &surplus / (l - x);
            taken.push((x.clone(), part));
            break;
        }
    }
    Ok(Greedy { measure: DiscreteMeasure::new(taken)?, threshold_unreachable: unreachable })
}

pub fn greedy_measure(mu: &DiscreteMeasure, l: &Rational) -> Result<DiscreteMeasure> {
    Ok(greedy(mu, l)?.measure)
}

pub fn greedy_mass(mu: &DiscreteMeasure, l: &Rational) -> Result<Rational> {
    Ok(greedy(mu, l)?.measure.total_mass())
}

/// `∫_0^u Q(s) ds` for the quantile function of `mu` (unnormalized).
fn integrated_quantile(mu: &DiscreteMeasure, u: &Rational) -> Rational {
    let mut acc = Rational::zero();
    let mut left = u.clone();
    for (x, w) in mu.atoms() {
        if !left.is_positive() {
            break;
        }
        let take = rational::min(w, &left);
        acc += x * &take;
        left -= take;
    }
    acc
}

/// The part of `mu` lying in the quantile window `[p, p + beta]`.
fn quantile_window(mu: &DiscreteMeasure, p: &Rational, beta: &Rational) -> Result<DiscreteMeasure> {
    let end = p + beta;
    let mut lo = Rational::zero();
    let mut out = Vec::new();
    for (x, w) in mu.atoms() {
        let hi = &lo + w;
        let a = rational::max(&lo, p);
        let b = rational::min(&hi, &end);
        if a < b {
            out.push((x.clone(), b - a));
        }
        lo = hi;
    }
    DiscreteMeasure::new(out)
}

/// Interval sub-measure of mass `beta` with barycenter `l`.
///
/// When `mu` itself already has barycenter at least `l` and no window of mass
/// `beta` has mean exactly `l`, the lowest window is returned (its mean exceeds `l`).
pub fn interval_measure(mu: &DiscreteMeasure, l: &Rational, beta: &Rational) -> Result<DiscreteMeasure> {
    if beta.is_negative() {
        return Err(Error::Domain(format!("negative mass {}", rational::format(beta))));
    }
    if beta.is_zero() {
        return Ok(DiscreteMeasure::zero());
    }
    let g = greedy(mu, l)?;
    let gmass = g.measure.total_mass();
    if *beta > gmass {
        return Err(Error::MassTooLarge {
            requested: rational::format(beta),
            max: rational::format(&gmass),
        });
    }
    if *beta == gmass {
        return Ok(g.measure);
    }
    let total = mu.total_mass();
    let last = &total - beta;
    let target = l * beta;
    let window = |p: &Rational| integrated_quantile(mu, &(p + beta)) - integrated_quantile(mu, p);
    if window(&Rational::zero()) >= target {
        return quantile_window(mu, &Rational::zero(), beta);
    }
    // window(p) is nondecreasing and piecewise linear with kinks where p or
    // p + beta crosses a cumulative atom boundary.
    let mut cuts = vec![Rational::zero(), last.clone()];
    let mut c = Rational::zero();
    for (_, w) in mu.atoms() {
        c += w;
        for p in [c.clone(), &c - beta] {
            if p.is_positive() && p < last {
                cuts.push(p);
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    let mut prev = (cuts[0].clone(), window(&cuts[0]));
    for p in cuts.iter().skip(1) {
        let v = window(p);
        if v >= target {
            let (p0, v0) = prev;
            let root = if v == v0 { p0 } else { &p0 + (&target - &v0) * (p - &p0) / (&v - &v0) };
            return quantile_window(mu, &root, beta);
        }
        prev = (p.clone(), v);
    }
    Err(Error::Domain("no window with barycenter at the threshold".into()))
}

/// Window form of one period of an interval rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalPeriod {
    #[serde(with = "rational::serde_str")]
    pub mass: Rational,
    #[serde(serialize_with = "opt_rational")]
    pub lower: Option<Rational>,
    #[serde(serialize_with = "opt_rational")]
    pub upper: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub lower_atom_prob: Rational,
    #[serde(with = "rational::serde_str")]
    pub upper_atom_prob: Rational,
}

fn opt_rational<S: serde::Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&rational::format(r)),
        None => s.serialize_none(),
    }
}

impl IntervalPeriod {
    /// Reads the window off the eliminated measure `nu ≤ mu`.
    pub fn from_measures(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> IntervalPeriod {
        match (nu.min_point(), nu.max_point()) {
            (Some(lo), Some(hi)) => IntervalPeriod {
                mass: nu.total_mass(),
                lower: Some(lo.clone()),
                upper: Some(hi.clone()),
                lower_atom_prob: nu.weight_at(lo) / mu.weight_at(lo),
                upper_atom_prob: nu.weight_at(hi) / mu.weight_at(hi),
            },
            _ => IntervalPeriod {
                mass: Rational::zero(),
                lower: None,
                upper: None,
                lower_atom_prob: Rational::zero(),
                upper_atom_prob: Rational::zero(),
            },
        }
    }
}

/// Eliminated (stopped) measure per period.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StoppingPlan {
    pub eliminated: Vec<DiscreteMeasure>,
}

impl StoppingPlan {
    pub fn new(eliminated: Vec<DiscreteMeasure>) -> Self {
        StoppingPlan { eliminated }
    }

    pub fn masses(&self) -> Vec<Rational> {
        self.eliminated.iter().map(|n| n.total_mass()).collect()
    }

    /// Residual flows `μ_1, …, μ_{T}` induced by the plan; periods beyond the
    /// plan's length eliminate nothing.
    pub fn residual_flows(&self, spec: &MartingaleSpec, periods: usize) -> Result<Vec<DiscreteMeasure>> {
        let zero = DiscreteMeasure::zero();
        let mut flows = Vec::with_capacity(periods);
        let mut mu = spec.initial().clone();
        for t in 1..=periods {
            flows.push(mu.clone());
            if t == periods {
                break;
            }
            let nu = self.eliminated.get(t - 1).unwrap_or(&zero);
            mu = pushforward(spec.kernel(t), &mu.subtract(nu)?)?;
        }
        Ok(flows)
    }
}

/// Replays the plan and reports the first period breaking the constraints.
pub fn ic_check(plan: &StoppingPlan, spec: &MartingaleSpec, l: &Rational) -> Result<()> {
    let periods = match spec.horizon().finite() {
        Some(t) => t,
        None => plan.eliminated.len().max(1),
    };
    if plan.eliminated.len() > periods {
        return Err(Error::IcViolation { period: periods + 1, kind: IcViolationKind::Dimension });
    }
    let mut mu = spec.initial().clone();
    for (i, nu) in plan.eliminated.iter().enumerate() {
        let t = i + 1;
        if !nu.leq(&mu) {
            return Err(Error::IcViolation { period: t, kind: IcViolationKind::ExceedsResidual });
        }
        if !nu.is_empty() && nu.barycenter()? < *l {
            return Err(Error::IcViolation { period: t, kind: IcViolationKind::MeanBelowThreshold });
        }
        if t < plan.eliminated.len() {
            mu = pushforward(spec.kernel(t), &mu.subtract(nu)?)?;
        }
    }
    Ok(())
}

pub fn ic_holds(plan: &StoppingPlan, spec: &MartingaleSpec, l: &Rational) -> bool {
    ic_check(plan, spec, l).is_ok()
}
