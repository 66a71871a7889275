//! Floating-point mirror of the greedy/interval recursion, used only to find
//! a starting point for the exact search.

use super::oracle::Flow;
use crate::rational;

pub(crate) struct FloatModel {
    pub points: Vec<Vec<f64>>,
    step: Vec<Vec<Vec<(usize, f64)>>>,
    pub initial: Vec<f64>,
    pub l: f64,
    w: Vec<f64>,
    /// (grid points, golden-section iterations) per search level.
    plan: (usize, usize),
}

const EPS: f64 = 1e-12;
const EVAL_BUDGET: f64 = 4e5;

pub(crate) fn greedy_mass(points: &[f64], mu: &[f64], l: f64) -> f64 {
    let mass: f64 = mu.iter().sum();
    let moment: f64 = points.iter().zip(mu).map(|(x, w)| x * w).sum();
    if mass <= EPS {
        return 0.0;
    }
    if moment >= l * mass - EPS * mass.max(1.0) {
        return mass;
    }
    let mut surplus = 0.0;
    let mut taken = 0.0;
    for i in (0..points.len()).rev() {
        let gain = (points[i] - l) * mu[i];
        if surplus + gain >= 0.0 {
            surplus += gain;
            taken += mu[i];
        } else {
            taken += surplus / (l - points[i]);
            break;
        }
    }
    taken
}

/// Interval sub-measure of mass `beta` with mean `l`, located by a sweep over
/// the kinks of the window-moment function.
pub(crate) fn interval(points: &[f64], mu: &[f64], l: f64, beta: f64) -> Vec<f64> {
    let n = points.len();
    if beta <= EPS {
        return vec![0.0; n];
    }
    let mut cum = Vec::with_capacity(n + 1);
    let mut mom = Vec::with_capacity(n + 1);
    cum.push(0.0);
    mom.push(0.0);
    for i in 0..n {
        cum.push(cum[i] + mu[i]);
        mom.push(mom[i] + mu[i] * points[i]);
    }
    let total = cum[n];
    let beta = beta.min(total);
    let iq = |u: f64| -> f64 {
        // ∫_0^u Q
        let k = cum.partition_point(|&c| c <= u).saturating_sub(1).min(n - 1);
        mom[k] + (u - cum[k]).max(0.0) * points[k]
    };
    let window = |p: f64| iq(p + beta) - iq(p);
    let last = (total - beta).max(0.0);
    let target = l * beta;
    let mut root = 0.0;
    if window(0.0) < target {
        let mut cuts: Vec<f64> = vec![0.0, last];
        for &c in &cum[1..] {
            for p in [c, c - beta] {
                if p > 0.0 && p < last {
                    cuts.push(p);
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        root = last;
        let mut prev = (cuts[0], window(cuts[0]));
        for &p in &cuts[1..] {
            let v = window(p);
            if v >= target {
                root = if v - prev.1 <= 0.0 {
                    prev.0
                } else {
                    prev.0 + (target - prev.1) * (p - prev.0) / (v - prev.1)
                };
                break;
            }
            prev = (p, v);
        }
    }
    let end = root + beta;
    (0..n)
        .map(|i| (cum[i + 1].min(end) - cum[i].max(root)).max(0.0))
        .collect()
}

impl FloatModel {
    pub fn new(flow: &Flow, l: &rational::Rational, w: &[rational::Rational], resolution: f64) -> FloatModel {
        let points: Vec<Vec<f64>> = flow
            .supports
            .iter()
            .map(|s| s.iter().map(rational::to_f64).collect())
            .collect();
        let step = flow
            .step
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|r| r.iter().map(|(j, p)| (*j, rational::to_f64(p))).collect())
                    .collect()
            })
            .collect();
        let levels = points.len().saturating_sub(1).max(1) as f64;
        let per_level = EVAL_BUDGET.powf(1.0 / levels).floor().max(4.0) as usize;
        let res = resolution.clamp(1e-9, 0.5);
        let grid = (per_level / 2).clamp(3, (1.0 / res).ceil() as usize + 1);
        let wanted = ((2.0 / (grid - 1) as f64 / res).ln() / 1.618f64.ln()).ceil().max(0.0) as usize;
        let golden = wanted.min(per_level.saturating_sub(grid)).max(if levels <= 1.0 { wanted } else { 0 });
        FloatModel {
            points,
            step,
            initial: flow.base[0].iter().map(rational::to_f64).collect(),
            l: rational::to_f64(l),
            w: w.iter().map(rational::to_f64).collect(),
            plan: (grid, golden),
        }
    }

    pub fn periods(&self) -> usize {
        self.points.len()
    }

    pub fn push(&self, t: usize, rest: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.points[t + 1].len()];
        for (i, &a) in rest.iter().enumerate() {
            if a > 0.0 {
                for &(j, p) in &self.step[t][i] {
                    out[j] += a * p;
                }
            }
        }
        out
    }

    fn after(&self, t: usize, mu: &[f64], alpha: f64) -> Vec<f64> {
        let nu = interval(&self.points[t], mu, self.l, alpha);
        let rest: Vec<f64> = mu.iter().zip(&nu).map(|(a, b)| (a - b).max(0.0)).collect();
        self.push(t, &rest)
    }

    /// Best value from period `t` on, with the chosen masses.
    pub fn best(&self, t: usize, mu: &[f64]) -> (f64, Vec<f64>) {
        let last = self.periods() - 1;
        let g = greedy_mass(&self.points[t], mu, self.l);
        let mass: f64 = mu.iter().sum();
        if t == last || g <= EPS || (g - mass).abs() <= EPS * mass.max(1.0) {
            let mut alphas = vec![0.0; self.periods() - t];
            alphas[0] = g;
            if t < last && g <= EPS {
                let (v, rest) = self.best(t + 1, &self.push(t, mu));
                alphas[1..].copy_from_slice(&rest);
                return (v, alphas);
            }
            return (self.w[t] * g, alphas);
        }
        let eval = |a: f64| -> (f64, Vec<f64>) {
            let (v, rest) = self.best(t + 1, &self.after(t, mu, a));
            let mut alphas = Vec::with_capacity(rest.len() + 1);
            alphas.push(a);
            alphas.extend(rest);
            (self.w[t] * a + v, alphas)
        };
        let (grid, golden) = self.plan;
        let mut best = eval(0.0);
        let mut best_k = 0usize;
        let step = g / (grid - 1) as f64;
        for k in 1..grid {
            let cand = eval(step * k as f64);
            if cand.0 > best.0 + 1e-15 {
                best = cand;
                best_k = k;
            }
        }
        let (mut lo, mut hi) = (
            step * best_k.saturating_sub(1) as f64,
            (step * (best_k + 1) as f64).min(g),
        );
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for _ in 0..golden {
            if f1.0 >= f2.0 {
                hi = x2;
                x2 = x1;
                f2 = f1.clone();
                x1 = hi - phi * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2.clone();
                x2 = lo + phi * (hi - lo);
                f2 = eval(x2);
            }
        }
        for cand in [f1, f2] {
            if cand.0 > best.0 + 1e-15 {
                best = cand;
            }
        }
        best
    }

    /// Eliminated measures along the mass sequence.
    pub fn trajectory(&self, alphas: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut mu = self.initial.clone();
        let mut out = Vec::with_capacity(alphas.len());
        for (t, &a) in alphas.iter().enumerate() {
            let g = greedy_mass(&self.points[t], &mu, self.l);
            let nu = interval(&self.points[t], &mu, self.l, a.min(g));
            let next = if t + 1 < self.periods() {
                let rest: Vec<f64> = mu.iter().zip(&nu).map(|(a, b)| (a - b).max(0.0)).collect();
                Some(self.push(t, &rest))
            } else {
                None
            };
            out.push((mu.clone(), nu));
            if let Some(n) = next {
                mu = n;
            }
        }
        out
    }
}
