//! Best interval policy.
//!
//! The value as a function of the stopping masses is searched in floating
//! point first. The resulting window shapes are then solved exactly: once each
//! period's window endpoints are fixed, the interval constraints are linear in
//! the eliminated measures, so an LP over that shape yields the exact best
//! masses. A local search over neighbouring shapes removes float misreads at
//! the kinks.

use std::collections::HashMap;

use super::float::FloatModel;
use super::oracle::{planning_periods, Flow, Rule};
use super::{Method, SolveOptions, SolveResult, WeightSchedule};
use crate::error::{Error, Result};
use crate::kernels::{pushforward, MartingaleSpec};
use crate::measures::DiscreteMeasure;
use crate::policies::{greedy_measure, interval_measure, StoppingPlan};
use crate::rational::Rational;

const FLOAT_TOL: f64 = 1e-9;
const MAX_ROUNDS: usize = 200;

type Candidate = (Rational, Vec<DiscreteMeasure>);

struct Search<'a> {
    flow: &'a Flow,
    spec: &'a MartingaleSpec,
    l: &'a Rational,
    weights: Vec<Rational>,
    lexicographic: bool,
    seen: HashMap<Vec<Rule>, Option<Candidate>>,
}

impl Search<'_> {
    fn eval(&mut self, rules: &[Rule]) -> Result<Option<Candidate>> {
        if let Some(hit) = self.seen.get(rules) {
            return Ok(hit.clone());
        }
        let out = self.flow.solve(rules, self.l, &self.weights, self.lexicographic)?;
        self.seen.insert(rules.to_vec(), out.clone());
        Ok(out)
    }

    fn flows(&self, nus: &[DiscreteMeasure]) -> Result<Vec<DiscreteMeasure>> {
        StoppingPlan::new(nus.to_vec()).residual_flows(self.spec, nus.len())
    }

    fn rules_of(&self, nus: &[DiscreteMeasure]) -> Result<Vec<Rule>> {
        let flows = self.flows(nus)?;
        Ok(nus
            .iter()
            .enumerate()
            .map(|(t, nu)| rule_of(&self.flow.supports[t], &flows[t], nu))
            .collect())
    }

    fn greedy_rule(&self, t: usize, mu: &DiscreteMeasure) -> Result<Rule> {
        if mu.is_empty() {
            return Ok(Rule::Empty);
        }
        Ok(rule_of(&self.flow.supports[t], mu, &greedy_measure(mu, self.l)?))
    }
}

fn rule_of(support: &[Rational], mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Rule {
    match (nu.min_point(), nu.max_point()) {
        _ if nu == mu && !nu.is_empty() => Rule::All,
        (Some(lo), Some(hi)) => Rule::Window(
            support.binary_search(lo).expect("reachable point"),
            support.binary_search(hi).expect("reachable point"),
        ),
        _ => Rule::Empty,
    }
}

fn better(a: &Candidate, b: &Candidate, lexicographic: bool) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    if !lexicographic {
        return false;
    }
    let ma: Vec<Rational> = a.1.iter().map(|n| n.total_mass()).collect();
    let mb: Vec<Rational> = b.1.iter().map(|n| n.total_mass()).collect();
    ma > mb
}

fn neighbours(rule: Rule, n: usize, greedy: Rule) -> Vec<Rule> {
    let mut out = vec![Rule::Empty, Rule::All, greedy];
    if let Rule::Window(i, j) = rule {
        let (i, j) = (i as i64, j as i64);
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
            let (a, b) = (i + di, j + dj);
            if a >= 0 && a <= b && (b as usize) < n {
                out.push(Rule::Window(a as usize, b as usize));
            }
        }
    }
    out.retain(|r| *r != rule);
    out
}

fn extract(model: &FloatModel, alphas: &[f64]) -> Vec<Rule> {
    model
        .trajectory(alphas)
        .into_iter()
        .map(|(mu, nu)| {
            let scale = mu.iter().sum::<f64>().max(1.0);
            let mass: f64 = nu.iter().sum();
            if mass <= FLOAT_TOL * scale {
                return Rule::Empty;
            }
            let whole = mu.iter().zip(&nu).all(|(a, b)| (a - b).abs() <= FLOAT_TOL * scale);
            if whole {
                return Rule::All;
            }
            let i = nu.iter().position(|&v| v > FLOAT_TOL * scale).unwrap_or(0);
            let j = nu.iter().rposition(|&v| v > FLOAT_TOL * scale).unwrap_or(i);
            Rule::Window(i, j)
        })
        .collect()
}

/// Best plan within the interval class, solved exactly.
pub fn interval_optimize(
    spec: &MartingaleSpec,
    l: &Rational,
    w: &WeightSchedule,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let (periods, tail) = planning_periods(spec, w)?;
    let flow = Flow::new(spec, periods)?;
    let vars = flow.num_points();
    if vars > opts.max_lp_vars {
        return Err(Error::HorizonTooLarge { vars, cap: opts.max_lp_vars });
    }
    let weights = w.weights(periods);
    let model = FloatModel::new(&flow, l, &weights, opts.resolution);
    let (_, alphas) = model.best(0, &model.initial);

    let mut search = Search {
        flow: &flow,
        spec,
        l,
        weights,
        lexicographic: opts.lexicographic,
        seen: HashMap::new(),
    };

    // greedy is always an interval plan, so the search has a feasible start
    let mut greedy_nus = Vec::with_capacity(periods);
    let mut mu = spec.initial().clone();
    for t in 1..=periods {
        let nu = if mu.is_empty() { DiscreteMeasure::zero() } else { greedy_measure(&mu, l)? };
        if t < periods {
            mu = pushforward(spec.kernel(t), &mu.subtract(&nu)?)?;
        }
        greedy_nus.push(nu);
    }
    let starts = [extract(&model, &alphas), search.rules_of(&greedy_nus)?, vec![Rule::Empty; periods]];
    let mut best: Option<(Vec<Rule>, Candidate)> = None;
    for rules in starts {
        if let Some(c) = search.eval(&rules)? {
            if best.as_ref().is_none_or(|(_, b)| better(&c, b, opts.lexicographic)) {
                best = Some((rules, c));
            }
        }
    }
    let (mut rules, mut cand) = best.ok_or_else(|| Error::InfeasibleSpec("greedy plan rejected".into()))?;

    for _ in 0..MAX_ROUNDS {
        let mut improved = false;
        let flows = search.flows(&cand.1)?;
        for t in 0..periods {
            let greedy = search.greedy_rule(t, &flows[t])?;
            for alt in neighbours(rules[t], flow.supports[t].len(), greedy) {
                let mut trial = rules.clone();
                trial[t] = alt;
                if let Some(c) = search.eval(&trial)? {
                    if better(&c, &cand, opts.lexicographic) {
                        rules = trial;
                        cand = c;
                        improved = true;
                    }
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            break;
        }
    }

    // exact replay through the interval construction
    let mut nus = Vec::with_capacity(periods);
    let mut mu = spec.initial().clone();
    for (t, lp_nu) in cand.1.iter().enumerate() {
        let nu = if mu.is_empty() {
            DiscreteMeasure::zero()
        } else {
            interval_measure(&mu, l, &lp_nu.total_mass())?
        };
        debug_assert_eq!(&nu, lp_nu, "interval replay differs in period {}", t + 1);
        if t + 1 < periods {
            mu = pushforward(spec.kernel(t + 1), &mu.subtract(&nu)?)?;
        }
        nus.push(nu);
    }
    SolveResult::build(Method::Interval, spec, w, StoppingPlan::new(nus), tail)
}
