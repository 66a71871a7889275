//! Uniform first-period posterior followed by a signal that reveals the state
//! with probability `q` and is pure noise otherwise.

use std::fmt;

use serde::Serialize;

use super::{CaseReport, Quantity, Source};
use crate::error::{Error, Result};
use crate::kernels::{Horizon, Kernel, KernelSchedule, MartingaleSpec};
use crate::measures::DiscreteMeasure;
use crate::rational::{self, int, ratio, Rational};
use crate::solver::{lp_solve, SolveOptions, WeightSchedule};

const SCAN_POINTS: usize = 400;
const GOLDEN_STEPS: usize = 80;
const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRegime {
    Greedy,
    Interior,
    Zero,
}

impl fmt::Display for AlphaRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlphaRegime::Greedy => "greedy",
            AlphaRegime::Interior => "interior",
            AlphaRegime::Zero => "zero",
        })
    }
}

fn check_domain(l: f64, q: f64) -> Result<()> {
    if !(l > 0.5 && l < 1.0) {
        return Err(Error::Domain(format!("l = {l} outside (1/2, 1)")));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} outside [0, 1)")));
    }
    Ok(())
}

fn check_alpha(alpha: f64, l: f64) -> Result<()> {
    let top = 2.0 * (1.0 - l);
    if !(0.0..=top).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0, {top}]")));
    }
    Ok(())
}

/// Second-period greedy cutoff on the uniform part after a first-period
/// window of mass `alpha` centred at `l`. May be negative, in which case the
/// greedy cut reaches the atom at 0.
pub fn example2_xhat(alpha: f64, l: f64, q: f64) -> Result<f64> {
    check_domain(l, q)?;
    check_alpha(alpha, l)?;
    let rad = ((1.0 - l).powi(2) + (1.0 - l) * l * q * (1.0 - 2.0 * alpha)) / (1.0 - q);
    Ok(l - rad.sqrt())
}

/// Two-period value of stopping `alpha` in period 1 and greedily in period 2.
pub fn example2_gamma(alpha: f64, l: f64, q: f64, w2: f64) -> Result<f64> {
    let xhat = example2_xhat(alpha, l, q)?;
    if !(0.0..=1.0).contains(&w2) {
        return Err(Error::Domain(format!("w2 = {w2} outside [0, 1]")));
    }
    let revealed_high = q * (0.5 - l * alpha);
    let second = if xhat >= 0.0 {
        (1.0 - q) * (1.0 - alpha - xhat) + revealed_high
    } else {
        // everything off the atom at 0 pools, plus a share of that atom
        let moment = revealed_high + (1.0 - q) * (0.5 - l * alpha);
        let mass = revealed_high + (1.0 - q) * (1.0 - alpha);
        (mass + (moment - l * mass) / l).min(1.0 - alpha)
    };
    Ok(alpha + w2 * second)
}

/// Maximizer of the two-period value over `[0, 2(1-l)]`.
pub fn example2_alpha_star(l: f64, q: f64, w2: f64) -> Result<f64> {
    let top = 2.0 * (1.0 - l);
    let f = |a: f64| example2_gamma(a.clamp(0.0, top), l, q, w2);
    let step = top / SCAN_POINTS as f64;
    let mut best = (0.0, f(0.0)?);
    for k in 1..=SCAN_POINTS {
        let a = step * k as f64;
        let v = f(a)?;
        if v > best.1 {
            best = (a, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - step).max(0.0), (best.0 + step).min(top));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..GOLDEN_STEPS {
        let (x1, x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        if f(x1)? >= f(x2)? {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let inner = (lo + hi) / 2.0;
    let inner_value = f(inner)?;
    let (at_zero, at_top) = (f(0.0)?, f(top)?);
    if at_top + EDGE_TOL >= inner_value && at_top >= at_zero {
        Ok(top)
    } else if at_zero + EDGE_TOL >= inner_value {
        Ok(0.0)
    } else {
        Ok(inner)
    }
}

pub fn example2_regime(l: f64, q: f64, w2: f64) -> Result<AlphaRegime> {
    let a = example2_alpha_star(l, q, w2)?;
    let top = 2.0 * (1.0 - l);
    Ok(if a <= 0.0 {
        AlphaRegime::Zero
    } else if a >= top {
        AlphaRegime::Greedy
    } else {
        AlphaRegime::Interior
    })
}

/// Uniform prior as `n` equal atoms at cell midpoints.
pub(crate) fn discretized(q: &Rational, w2: &Rational, n: usize) -> Result<(MartingaleSpec, WeightSchedule)> {
    if n == 0 {
        return Err(Error::Domain("need at least one atom".into()));
    }
    let one = int(1);
    let cell = ratio(1, n as i64);
    let mid: Vec<Rational> = (0..n).map(|k| ratio(2 * k as i64 + 1, 2 * n as i64)).collect();
    let mu1 = DiscreteMeasure::new(mid.iter().map(|x| (x.clone(), cell.clone())))?;
    let rows = mid
        .iter()
        .map(|x| {
            let img = DiscreteMeasure::new([
                (x.clone(), &one - q),
                (one.clone(), q * x),
                (int(0), q * (&one - x)),
            ])?;
            Ok((x.clone(), img))
        })
        .collect::<Result<Vec<_>>>()?;
    let spec = MartingaleSpec::new(mu1, KernelSchedule::Stationary(Kernel::new(rows)?), Horizon::Finite(2))?;
    Ok((spec, WeightSchedule::explicit(vec![one, w2.clone()])?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example2Params {
    pub l: Rational,
    pub w2: Rational,
    /// Signal quality for the discretized LP cross-check.
    pub q: Rational,
    /// Number of atoms in the discretized prior.
    pub atoms: usize,
}

impl Default for Example2Params {
    fn default() -> Self {
        Example2Params { l: ratio(3, 4), w2: ratio(24, 25), q: ratio(7, 10), atoms: 400 }
    }
}

/// Regimes along `q = k/100` with consecutive repeats collapsed.
fn regime_runs(l: f64, w2: f64) -> Result<Vec<(AlphaRegime, f64, f64)>> {
    let mut runs: Vec<(AlphaRegime, f64, f64)> = Vec::new();
    for k in 1..100 {
        let q = k as f64 / 100.0;
        let regime = example2_regime(l, q, w2)?;
        match runs.last_mut() {
            Some(last) if last.0 == regime => last.2 = q,
            _ => runs.push((regime, q, q)),
        }
    }
    Ok(runs)
}

pub fn example2(p: &Example2Params) -> Result<CaseReport> {
    CaseReport::timed("example2", |r| {
        let (l, w2, q) = (rational::to_f64(&p.l), rational::to_f64(&p.w2), rational::to_f64(&p.q));
        r.param("l", rational::format(&p.l));
        r.param("w2", rational::format(&p.w2));
        r.param("q", rational::format(&p.q));
        r.param("atoms", p.atoms);
        check_domain(l, q)?;

        let xhat0 = example2_xhat(0.0, l, 0.0)?;
        r.expect_near("cutoff without signal", 2.0 * l - 1.0, xhat0, 1e-12, Source::Derived);

        let alpha = example2_alpha_star(l, q, w2)?;
        let best = example2_gamma(alpha, l, q, w2)?;
        r.record("alpha_star", Quantity::Decimal(alpha));
        r.record("gamma_max", Quantity::Decimal(best));

        let (spec, w) = discretized(&p.q, &p.w2, p.atoms)?;
        let opts = SolveOptions { lexicographic: false, ..SolveOptions::default() };
        let lp = lp_solve(&spec, &p.l, &w, &opts)?;
        let lp_value = rational::to_f64(lp.value.lower());
        r.record("lp_value", Quantity::Decimal(lp_value));
        r.expect_near("discretized lp matches closed form", best, lp_value, 1e-2, Source::Derived);

        for q in [0.01, 0.2, 0.5, 0.8, 0.99] {
            let regime = example2_regime(l, q, w2)?;
            r.record(&format!("regime_q_{q}"), Quantity::Text(regime.to_string()));
        }
        let runs = regime_runs(l, w2)?;
        let observed: Vec<String> = runs.iter().map(|(g, _, _)| g.to_string()).collect();
        let bands: Vec<String> = runs.iter().map(|(g, a, b)| format!("{g} [{a}, {b}]")).collect();
        r.record("regime_bands", Quantity::Text(bands.join("; ")));
        let want = ["greedy", "interior", "zero", "interior", "greedy"];
        r.expect_that(
            "regime pattern over q",
            &want.join(" > "),
            &observed.join(" > "),
            observed == want,
            Source::Reference,
        );
        Ok(())
    })
}
