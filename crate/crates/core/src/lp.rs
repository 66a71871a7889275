//! Exact rational simplex.
//!
//! Two-phase primal simplex over sparse rows. Pricing is Dantzig's largest
//! reduced cost; after a run of degenerate pivots it switches to Bland's rule
//! until the objective moves again, which rules out cycling.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `maximize objective · x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<(usize, Rational)>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { values: Vec<Rational>, objective: Rational },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[Rational], &Rational)> {
        match self {
            LpOutcome::Optimal { values, objective } => Some((values, objective)),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, objective: Vec::new(), constraints: Vec::new() }
    }

    pub fn maximize(&mut self, objective: Vec<(usize, Rational)>) {
        self.objective = objective;
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

type SparseRow = Vec<(usize, Rational)>;

const DEGENERATE_STREAK: usize = 40;

struct Tableau {
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    ncols: usize,
    first_artificial: usize,
    reduced: Vec<Rational>,
    value: Rational,
}

fn entry(row: &SparseRow, col: usize) -> Option<&Rational> {
    row.binary_search_by_key(&col, |(c, _)| *c).ok().map(|i| &row[i].1)
}

fn merge_sub(row: &SparseRow, factor: &Rational, pivot: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let take_row = j >= pivot.len() || (i < row.len() && row[i].0 < pivot[j].0);
        let take_piv = i >= row.len() || (j < pivot.len() && pivot[j].0 < row[i].0);
        if take_row {
            out.push(row[i].clone());
            i += 1;
        } else if take_piv {
            out.push((pivot[j].0, -(factor * &pivot[j].1)));
            j += 1;
        } else {
            let v = &row[i].1 - factor * &pivot[j].1;
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Relation after making the rhs nonnegative, and whether the row was negated.
/// Zero-rhs `>=` rows are negated too so they start feasible on a slack.
fn normalized(c: &Constraint) -> (Relation, bool) {
    let flip = c.rhs.is_negative() || (c.rhs.is_zero() && c.relation == Relation::Ge);
    let rel = match (c.relation, flip) {
        (Relation::Le, true) => Relation::Ge,
        (Relation::Ge, true) => Relation::Le,
        (r, _) => r,
    };
    (rel, flip)
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars;
        let mut slack_cols = 0;
        let mut art_cols = 0;
        for c in &lp.constraints {
            match normalized(c).0 {
                Relation::Le => slack_cols += 1,
                Relation::Ge => {
                    slack_cols += 1;
                    art_cols += 1;
                }
                Relation::Eq => art_cols += 1,
            }
        }
        let first_artificial = n + slack_cols;
        let ncols = first_artificial + art_cols;
        let mut rows = Vec::with_capacity(lp.constraints.len());
        let mut rhs = Vec::with_capacity(lp.constraints.len());
        let mut basis = Vec::with_capacity(lp.constraints.len());
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for c in &lp.constraints {
            let (rel, flip) = normalized(c);
            let mut row: SparseRow = Vec::with_capacity(c.coeffs.len() + 2);
            let mut merged = c.coeffs.clone();
            merged.sort_by_key(|(j, _)| *j);
            for (j, v) in merged {
                assert!(j < n, "constraint references variable {j} >= {n}");
                let v = if flip { -v } else { v };
                match row.last_mut() {
                    Some((last, acc)) if *last == j => *acc += v,
                    _ => row.push((j, v)),
                }
            }
            row.retain(|(_, v)| !v.is_zero());
            match rel {
                Relation::Le => {
                    row.push((next_slack, Rational::from_integer(1.into())));
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row.push((next_slack, Rational::from_integer((-1).into())));
                    row.push((next_art, Rational::from_integer(1.into())));
                    basis.push(next_art);
                    next_slack += 1;
                    next_art += 1;
                }
                Relation::Eq => {
                    row.push((next_art, Rational::from_integer(1.into())));
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(if flip { -c.rhs.clone() } else { c.rhs.clone() });
        }
        Tableau {
            rows,
            rhs,
            basis,
            ncols,
            first_artificial,
            reduced: vec![Rational::zero(); ncols],
            value: Rational::zero(),
        }
    }

    /// Sets reduced costs and objective value for the cost vector `cost`.
    fn price(&mut self, cost: &[Rational]) {
        self.reduced = cost.to_vec();
        self.value = Rational::zero();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (j, a) in row {
                self.reduced[*j] -= cb * a;
            }
            self.value += cb * &self.rhs[i];
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = entry(&self.rows[r], c).expect("pivot on zero").clone();
        for (_, v) in self.rows[r].iter_mut() {
            *v /= &piv;
        }
        self.rhs[r] /= &piv;
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = match entry(&self.rows[i], c) {
                Some(f) => f.clone(),
                None => continue,
            };
            self.rows[i] = merge_sub(&self.rows[i], &f, &prow);
            self.rhs[i] -= &f * &prhs;
        }
        let d = self.reduced[c].clone();
        if !d.is_zero() {
            for (j, v) in &prow {
                self.reduced[*j] -= &d * v;
            }
            self.value += &d * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    /// Runs simplex iterations on columns `< limit`. Returns false if unbounded.
    fn iterate(&mut self, limit: usize) -> bool {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_STREAK;
            let mut enter: Option<usize> = None;
            for j in 0..limit {
                if !self.reduced[j].is_positive() {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                match enter {
                    Some(e) if self.reduced[e] >= self.reduced[j] => {}
                    _ => enter = Some(j),
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let Some(a) = entry(row, c) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((li, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else { return false };
            if ratio.is_zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let n = lp.num_vars;
        if self.first_artificial < self.ncols {
            let mut cost = vec![Rational::zero(); self.ncols];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = Rational::from_integer((-1).into());
            }
            self.price(&cost);
            self.iterate(self.ncols);
            if self.value.is_negative() {
                return LpOutcome::Infeasible;
            }
            self.expel_artificials();
        }
        let mut cost = vec![Rational::zero(); self.ncols];
        for (j, v) in &lp.objective {
            cost[*j] += v;
        }
        self.price(&cost);
        if !self.iterate(self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut values = vec![Rational::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                values[b] = self.rhs[i].clone();
            }
        }
        let objective = lp
            .objective
            .iter()
            .fold(Rational::zero(), |acc, (j, v)| acc + v * &values[*j]);
        LpOutcome::Optimal { values, objective }
    }

    /// Pivots zero-level artificial variables out of the basis, dropping
    /// rows that turn out to be redundant.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            let col = self.rows[i]
                .iter()
                .find(|(j, v)| *j < self.first_artificial && !v.is_zero())
                .map(|(j, _)| *j);
            match col {
                Some(c) => {
                    self.pivot(i, c);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn textbook_max() {
        // max 3x + 5y ; x <= 4 ; 2y <= 12 ; 3x + 2y <= 18  -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![(0, int(3)), (1, int(5))]);
        lp.add(vec![(0, int(1))], Relation::Le, int(4));
        lp.add(vec![(1, int(2))], Relation::Le, int(12));
        lp.add(vec![(0, int(3)), (1, int(2))], Relation::Le, int(18));
        let out = lp.solve();
        let (x, z) = out.optimal().unwrap();
        assert_eq!(x, &[int(2), int(6)]);
        assert_eq!(z, &int(36));
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x + y ; x + y = 1 ; x >= 1/3 ; y >= 1/4
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![(0, int(1)), (1, int(1))]);
        lp.add(vec![(0, int(1)), (1, int(1))], Relation::Eq, int(1));
        lp.add(vec![(0, int(1))], Relation::Ge, ratio(1, 3));
        lp.add(vec![(1, int(1))], Relation::Ge, ratio(1, 4));
        let (x, z) = lp.solve().optimal().map(|(x, z)| (x.to_vec(), z.clone())).unwrap();
        assert_eq!(z, int(1));
        assert!(x[0] >= ratio(1, 3) && x[1] >= ratio(1, 4));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(0, int(1))], Relation::Le, int(1));
        lp.add(vec![(0, int(1))], Relation::Ge, int(2));
        assert_eq!(lp.solve(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![(0, int(1))]);
        lp.add(vec![(0, int(1)), (1, int(-1))], Relation::Le, int(1));
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // max -x ; -x <= -2  (x >= 2)
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![(0, int(-1))]);
        lp.add(vec![(0, int(-1))], Relation::Le, int(-2));
        let (x, z) = lp.solve().optimal().map(|(x, z)| (x.to_vec(), z.clone())).unwrap();
        assert_eq!(x, vec![int(2)]);
        assert_eq!(z, int(-2));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![(0, int(1))]);
        lp.add(vec![(0, int(1)), (1, int(1))], Relation::Eq, int(2));
        lp.add(vec![(0, int(2)), (1, int(2))], Relation::Eq, int(4));
        let (_, z) = lp.solve().optimal().map(|(x, z)| (x.to_vec(), z.clone())).unwrap();
        assert_eq!(z, int(2));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's cycling example (as a max problem).
        let mut lp = LinearProgram::new(4);
        lp.maximize(vec![(0, ratio(3, 4)), (1, int(-150)), (2, ratio(1, 50)), (3, int(-6))]);
        lp.add(vec![(0, ratio(1, 4)), (1, int(-60)), (2, ratio(-1, 25)), (3, int(9))], Relation::Le, int(0));
        lp.add(vec![(0, ratio(1, 2)), (1, int(-90)), (2, ratio(-1, 50)), (3, int(3))], Relation::Le, int(0));
        lp.add(vec![(2, int(1))], Relation::Le, int(1));
        let (_, z) = lp.solve().optimal().map(|(x, z)| (x.to_vec(), z.clone())).unwrap();
        assert_eq!(z, ratio(1, 20));
    }
}
