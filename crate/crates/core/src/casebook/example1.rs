use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use super::{CaseReport, Quantity, Source};
use crate::error::{Error, Result};
use crate::kernels::{binary_signal_image, binary_signal_kernel, Horizon, KernelSchedule, MartingaleSpec};
use crate::policies::greedy_mass;
use crate::rational::{self, int, ratio, Rational};
use crate::solver::{interval_optimize, lp_solve, SolveOptions, WeightSchedule};

const BISECTION_STEPS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Stop greedily in the first period.
    Greedy,
    /// Stop a positive mass below the greedy mass.
    Interior,
    /// Stay silent in the first period.
    Mute,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Greedy => "greedy",
            Regime::Interior => "interior",
            Regime::Mute => "mute",
        })
    }
}

/// Prior 1/2 refined by a 3/4-precision signal, then a 4/5-precision signal,
/// adoption threshold 18/25.
pub(crate) fn instance(w2: &Rational) -> Result<(MartingaleSpec, Rational, WeightSchedule)> {
    if *w2 < Rational::zero() || *w2 > int(1) {
        return Err(Error::Domain(format!("w2 = {} outside [0, 1]", rational::format(w2))));
    }
    let mu1 = binary_signal_image(&ratio(3, 4), &ratio(1, 2))?;
    let support: Vec<Rational> = mu1.points().cloned().collect();
    let kernel = binary_signal_kernel(&ratio(4, 5), &support)?;
    let spec = MartingaleSpec::new(mu1, KernelSchedule::Stationary(kernel), Horizon::Finite(2))?;
    let w = WeightSchedule::explicit(vec![int(1), w2.clone()])?;
    Ok((spec, ratio(18, 25), w))
}

/// Optimal regime, first-period mass and value at second-period weight `w2`.
pub fn example1_regime(w2: &Rational) -> Result<(Regime, Rational, Rational)> {
    let (spec, l, w) = instance(w2)?;
    let res = lp_solve(&spec, &l, &w, &SolveOptions::default())?;
    let mass = res.per_period_mass[0].clone();
    let greedy = greedy_mass(spec.initial(), &l)?;
    let regime = if mass.is_zero() {
        Regime::Mute
    } else if mass == greedy {
        Regime::Greedy
    } else {
        Regime::Interior
    };
    Ok((regime, mass, res.value.lower().clone()))
}

pub fn example1(w2: &Rational) -> Result<CaseReport> {
    CaseReport::timed("example1", |r| {
        r.param("w2", rational::format(w2));
        let (spec, l, w) = instance(w2)?;
        let opts = SolveOptions::default();

        let greedy = greedy_mass(spec.initial(), &l)?;
        r.exact_value("greedy_mass", &greedy);
        r.expect_exact("greedy first-period mass", &ratio(25, 47), &greedy, Source::Reference);

        let (regime, mass, value) = example1_regime(w2)?;
        r.record("regime", Quantity::Text(regime.to_string()));
        r.exact_value("first_period_mass", &mass);
        r.exact_value("lp_value", &value);

        let interval = interval_optimize(&spec, &l, &w, &opts)?;
        let iv = interval.value.lower().clone();
        r.exact_value("interval_value", &iv);
        r.expect_exact("interval value equals lp value", &value, &iv, Source::Derived);

        let (expected_regime, expected_mass) = if *w2 <= ratio(618, 1000) {
            (Regime::Greedy, ratio(25, 47))
        } else if *w2 >= ratio(955, 1000) {
            (Regime::Mute, Rational::zero())
        } else {
            (Regime::Interior, ratio(25, 58))
        };
        r.expect_that(
            "regime",
            &expected_regime.to_string(),
            &regime.to_string(),
            regime == expected_regime,
            Source::Reference,
        );
        r.expect_exact("first-period mass", &expected_mass, &mass, Source::Reference);
        Ok(())
    })
}

/// Bisects `[lo, hi]` for the point where `inside` stops holding.
fn bisect<F: FnMut(&Rational) -> Result<bool>>(mut lo: Rational, mut hi: Rational, mut inside: F) -> Result<Rational> {
    for _ in 0..BISECTION_STEPS {
        let mid = (&lo + &hi) / int(2);
        if inside(&mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / int(2))
}

pub fn example1_cutoffs() -> Result<CaseReport> {
    CaseReport::timed("example1-cutoffs", |r| {
        let lower = bisect(int(0), int(1), |w2| Ok(example1_regime(w2)?.0 == Regime::Greedy))?;
        let upper = bisect(int(0), int(1), |w2| Ok(example1_regime(w2)?.0 != Regime::Mute))?;
        let (lf, uf) = (rational::to_f64(&lower), rational::to_f64(&upper));
        r.record("lower_cutoff", Quantity::Decimal(lf));
        r.record("upper_cutoff", Quantity::Decimal(uf));
        let mid = (&lower + &upper) / int(2);
        let (_, interior_mass, _) = example1_regime(&mid)?;
        r.exact_value("interior_mass", &interior_mass);

        r.expect_near("lower cutoff", 0.618, lf, 0.01, Source::Reference);
        r.expect_near("upper cutoff", 0.955, uf, 0.01, Source::Reference);

        let step = ratio(2, 100);
        let probes = [
            ("below lower cutoff", &lower - &step, Regime::Greedy),
            ("above lower cutoff", &lower + &step, Regime::Interior),
            ("below upper cutoff", &upper - &step, Regime::Interior),
            ("above upper cutoff", rational::min(&(&upper + &step), &int(1)), Regime::Mute),
        ];
        for (name, w2, want) in probes {
            let (got, _, _) = example1_regime(&w2)?;
            r.expect_that(
                &format!("regime {name}"),
                &want.to_string(),
                &got.to_string(),
                got == want,
                Source::Derived,
            );
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes_at_reference_weights() {
        assert_eq!(example1_regime(&ratio(1, 2)).unwrap().0, Regime::Greedy);
        assert_eq!(example1_regime(&ratio(49, 50)).unwrap().0, Regime::Mute);
        let (regime, mass, _) = example1_regime(&ratio(4, 5)).unwrap();
        assert_eq!(regime, Regime::Interior);
        assert_eq!(mass, ratio(125, 378));
    }

    #[test]
    fn greedy_weight_case_passes() {
        let r = example1(&ratio(1, 2)).unwrap();
        assert!(r.pass, "{:#?}", r.expectations);
    }

    #[test]
    fn weight_out_of_range() {
        assert!(matches!(example1(&ratio(3, 2)), Err(Error::Domain(_))));
    }
}
