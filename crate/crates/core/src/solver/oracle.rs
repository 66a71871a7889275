//! LP over eliminated measures with the residual recursion substituted.
//!
//! Variable `ν_t(x)` for each reachable `x`. Writing `M_{s→t}` for the
//! `t - s` step transition law, the residual at `(t, x)` is
//! `(M_{1→t} μ_1)(x) - Σ_{s<t} Σ_y M_{s→t}(y, x) ν_s(y)`, so `ν_t ≤ μ_t`
//! is one linear row per reachable point.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};

use super::{truncation_periods, Method, SolveOptions, SolveResult, WeightSchedule};
use crate::error::{Error, Result};
use crate::kernels::{Horizon, MartingaleSpec};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::measures::DiscreteMeasure;
use crate::policies::StoppingPlan;
use crate::rational::{self, Rational};

type Sparse = Vec<(usize, Rational)>;

/// Reachable supports and multi-step transition laws of a spec.
pub(crate) struct Flow {
    pub supports: Vec<Vec<Rational>>,
    /// `step[t][i]`: one-step law from point `i` of period `t` (0-based) into period `t + 1`.
    pub step: Vec<Vec<Sparse>>,
    /// `reach[s][i][k]`: law of period `s + 1 + k` started from point `i` of period `s`.
    reach: Vec<Vec<Vec<Sparse>>>,
    /// `(M_{1→t} μ_1)` over the support of period `t`.
    pub base: Vec<Vec<Rational>>,
}

/// Constraint shape of one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Rule {
    /// Any sub-measure with mean at least `l` (the oracle).
    Free,
    /// Stop nothing.
    Empty,
    /// Stop everything; the mean must still be at least `l`.
    All,
    /// Support indices `i..=j`: interior atoms fully stopped, endpoints
    /// partially, mean exactly `l`.
    Window(usize, usize),
}

impl Flow {
    pub fn new(spec: &MartingaleSpec, periods: usize) -> Result<Flow> {
        let mut supports: Vec<Vec<Rational>> = vec![spec.initial().points().cloned().collect()];
        let mut step = Vec::with_capacity(periods);
        for t in 1..periods {
            let sigma = spec.kernel(t);
            let prev = &supports[t - 1];
            let mut next = BTreeSet::new();
            for x in prev {
                if sigma.window_edges().contains(x) {
                    return Err(Error::DegenerateGrid(format!(
                        "window edge {} reachable in period {t}; widen the grid window",
                        rational::format(x)
                    )));
                }
                next.extend(sigma.get(x)?.points().cloned());
            }
            let next: Vec<Rational> = next.into_iter().collect();
            let index: HashMap<&Rational, usize> = next.iter().enumerate().map(|(i, x)| (x, i)).collect();
            let rows = prev
                .iter()
                .map(|x| {
                    Ok(sigma
                        .get(x)?
                        .atoms()
                        .iter()
                        .map(|(y, p)| (index[y], p.clone()))
                        .collect::<Sparse>())
                })
                .collect::<Result<Vec<_>>>()?;
            step.push(rows);
            supports.push(next);
        }
        let apply = |t: usize, v: &Sparse| -> Sparse {
            let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
            for (i, a) in v {
                for (j, p) in &step[t][*i] {
                    *acc.entry(*j).or_insert_with(Rational::zero) += a * p;
                }
            }
            acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
        };
        let mut reach = Vec::with_capacity(periods);
        for (s, support) in supports.iter().enumerate() {
            let mut per_point = Vec::with_capacity(support.len());
            for i in 0..support.len() {
                let mut laws = Vec::with_capacity(periods - s - 1);
                let mut cur: Sparse = vec![(i, Rational::one())];
                for t in s..periods - 1 {
                    cur = apply(t, &cur);
                    laws.push(cur.clone());
                }
                per_point.push(laws);
            }
            reach.push(per_point);
        }
        let mut base = Vec::with_capacity(periods);
        let mut cur: Sparse = spec.initial().atoms().iter().enumerate().map(|(i, (_, w))| (i, w.clone())).collect();
        for (t, support) in supports.iter().enumerate() {
            let mut dense = vec![Rational::zero(); support.len()];
            for (i, v) in &cur {
                dense[*i] = v.clone();
            }
            base.push(dense);
            if t + 1 < periods {
                cur = apply(t, &cur);
            }
        }
        Ok(Flow { supports, step, reach, base })
    }

    pub fn periods(&self) -> usize {
        self.supports.len()
    }

    pub fn num_points(&self) -> usize {
        self.supports.iter().map(Vec::len).sum()
    }

    /// Builds the LP for the given per-period rules. Returns the program and
    /// the `(period, point index)` of every variable.
    pub fn program(&self, rules: &[Rule], l: &Rational, w: &[Rational]) -> (LinearProgram, Vec<(usize, usize)>) {
        let mut vars = Vec::new();
        let mut var_of: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, rule) in rules.iter().enumerate() {
            let range = match *rule {
                Rule::Empty => 0..0,
                Rule::Free | Rule::All => 0..self.supports[t].len(),
                Rule::Window(i, j) => i..j + 1,
            };
            for i in range {
                var_of.insert((t, i), vars.len());
                vars.push((t, i));
            }
        }
        let mut rows: BTreeMap<(usize, usize), Sparse> = BTreeMap::new();
        for (&(t, i), &v) in &var_of {
            rows.entry((t, i)).or_default().push((v, Rational::one()));
        }
        for (v, &(s, i)) in vars.iter().enumerate() {
            for (k, law) in self.reach[s][i].iter().enumerate() {
                let t = s + 1 + k;
                for (x, p) in law {
                    if let Some(row) = rows.get_mut(&(t, *x)) {
                        row.push((v, p.clone()));
                    }
                }
            }
        }
        let mut lp = LinearProgram::new(vars.len());
        lp.maximize(vars.iter().enumerate().map(|(v, &(t, _))| (v, w[t].clone())).collect());
        for ((t, i), mut coeffs) in rows {
            coeffs.sort_by_key(|(v, _)| *v);
            let rel = match rules[t] {
                Rule::All => Relation::Eq,
                Rule::Window(a, b) if a < i && i < b => Relation::Eq,
                _ => Relation::Le,
            };
            lp.add(coeffs, rel, self.base[t][i].clone());
        }
        for (t, rule) in rules.iter().enumerate() {
            let coeffs: Sparse = vars
                .iter()
                .enumerate()
                .filter(|(_, &(s, _))| s == t)
                .map(|(v, &(_, i))| (v, &self.supports[t][i] - l))
                .filter(|(_, c)| !c.is_zero())
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            let rel = if matches!(rule, Rule::Window(..)) { Relation::Eq } else { Relation::Ge };
            lp.add(coeffs, rel, Rational::zero());
        }
        (lp, vars)
    }

    /// Solves the LP for `rules`; `None` when infeasible.
    pub fn solve(
        &self,
        rules: &[Rule],
        l: &Rational,
        w: &[Rational],
        lexicographic: bool,
    ) -> Result<Option<(Rational, Vec<DiscreteMeasure>)>> {
        let (lp, vars) = self.program(rules, l, w);
        let mut out = lp.solve();
        if lexicographic {
            if let LpOutcome::Optimal { objective, .. } = &out {
                let groups: Vec<Vec<usize>> = (0..self.periods())
                    .map(|t| (0..vars.len()).filter(|&v| vars[v].0 == t).collect())
                    .collect();
                out = lexicographic_refine(&lp, objective.clone(), &groups);
            }
        }
        match out {
            LpOutcome::Optimal { values, .. } => {
                let mut per: Vec<Vec<(Rational, Rational)>> = vec![Vec::new(); self.periods()];
                for (v, &(t, i)) in vars.iter().enumerate() {
                    per[t].push((self.supports[t][i].clone(), values[v].clone()));
                }
                let nus = per.into_iter().map(DiscreteMeasure::new).collect::<Result<Vec<_>>>()?;
                let value = nus
                    .iter()
                    .zip(w)
                    .fold(Rational::zero(), |acc, (n, wt)| acc + wt * n.total_mass());
                Ok(Some((value, nus)))
            }
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::InfeasibleSpec("unbounded program".into())),
        }
    }
}

/// Among optimal solutions, maximize each group's total in turn.
pub(crate) fn lexicographic_refine(lp: &LinearProgram, optimum: Rational, groups: &[Vec<usize>]) -> LpOutcome {
    let mut fixed = lp.clone();
    fixed.add(lp.objective.clone(), Relation::Ge, optimum);
    let mut last = None;
    for g in groups.iter().filter(|g| !g.is_empty()) {
        let coeffs: Sparse = g.iter().map(|&v| (v, Rational::one())).collect();
        fixed.maximize(coeffs.clone());
        let out = fixed.solve();
        let Some((_, best)) = out.optimal() else { return out };
        fixed.add(coeffs, Relation::Ge, best.clone());
        last = Some(out);
    }
    match last {
        Some(LpOutcome::Optimal { values, .. }) => {
            let objective = lp
                .objective
                .iter()
                .fold(Rational::zero(), |acc, (j, c)| acc + c * &values[*j]);
            LpOutcome::Optimal { values, objective }
        }
        Some(other) => other,
        None => fixed.solve(),
    }
}

/// Periods to optimize over and the upper tail for truncated horizons.
pub(crate) fn planning_periods(spec: &MartingaleSpec, w: &WeightSchedule) -> Result<(usize, Option<Rational>)> {
    match spec.horizon() {
        Horizon::Finite(t) => Ok((*t, None)),
        Horizon::Truncated { tol, max_periods } => {
            let mass = spec.initial().total_mass();
            let t = truncation_periods(w, &mass, tol, *max_periods)?;
            Ok((t, Some(mass * w.weight(t + 1))))
        }
    }
}

/// Exact optimum of the stopping LP over all IC plans.
pub fn lp_solve(spec: &MartingaleSpec, l: &Rational, w: &WeightSchedule, opts: &SolveOptions) -> Result<SolveResult> {
    let (periods, tail) = planning_periods(spec, w)?;
    let flow = Flow::new(spec, periods)?;
    let vars = flow.num_points();
    if vars > opts.max_lp_vars {
        return Err(Error::HorizonTooLarge { vars, cap: opts.max_lp_vars });
    }
    let weights = w.weights(periods);
    let rules = vec![Rule::Free; periods];
    let (_, nus) = flow
        .solve(&rules, l, &weights, opts.lexicographic)?
        .ok_or_else(|| Error::InfeasibleSpec("the never-stop plan should be feasible".into()))?;
    SolveResult::build(Method::Lp, spec, w, StoppingPlan::new(nus), tail)
}
