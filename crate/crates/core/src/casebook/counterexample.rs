use super::{CaseReport, Quantity, Source};
use crate::error::Result;
use crate::kernels::{is_blackwell_preserving, Horizon, Kernel, KernelSchedule, MartingaleSpec};
use crate::measures::DiscreteMeasure;
use crate::policies::{greedy_measure, ic_check, StoppingPlan};
use crate::rational::{self, int, ratio, Rational};
use crate::solver::{interval_optimize, lp_solve, Method, SolveOptions, SolveResult, WeightSchedule};

fn measure(atoms: &[(Rational, Rational)]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(atoms.iter().cloned())
}

/// Two-period instance whose middle belief splits to the ends while the
/// outer beliefs stay put.
pub(crate) fn instance() -> Result<(MartingaleSpec, Rational, WeightSchedule)> {
    let kernel = Kernel::new([
        (ratio(1, 3), DiscreteMeasure::dirac(ratio(1, 3))?),
        (ratio(1, 2), measure(&[(int(0), ratio(1, 2)), (int(1), ratio(1, 2))])?),
        (ratio(3, 4), DiscreteMeasure::dirac(ratio(3, 4))?),
    ])?;
    let mu1 = measure(&[(ratio(1, 3), ratio(1, 7)), (ratio(1, 2), ratio(2, 7)), (ratio(3, 4), ratio(4, 7))])?;
    let spec = MartingaleSpec::new(mu1, KernelSchedule::Stationary(kernel), Horizon::Finite(2))?;
    let w = WeightSchedule::explicit(vec![int(1), ratio(3, 4)])?;
    Ok((spec, ratio(2, 3), w))
}

pub fn counterexample_nonblackwell() -> Result<CaseReport> {
    CaseReport::timed("counterexample", |r| {
        let (spec, l, w) = instance()?;
        let opts = SolveOptions::default();
        r.param("l", rational::format(&l));
        r.param("weights", "1, 3/4");

        let interval = interval_optimize(&spec, &l, &w, &opts)?;
        let iv = interval.value.lower().clone();
        r.exact_value("interval_value", &iv);
        r.expect_exact("interval optimum", &ratio(6, 7), &iv, Source::Reference);

        // skip the middle belief in period 1, then stop greedily
        let nu1 = measure(&[(ratio(1, 3), ratio(1, 7)), (ratio(3, 4), ratio(4, 7))])?;
        let mu2 = crate::kernels::pushforward(spec.kernel(1), &spec.initial().subtract(&nu1)?)?;
        let nu2 = greedy_measure(&mu2, &l)?;
        let plan = StoppingPlan::new(vec![nu1, nu2]);
        let ic = ic_check(&plan, &spec, &l);
        r.expect_that("alternative plan is feasible", "true", &ic.is_ok().to_string(), ic.is_ok(), Source::Trivial);
        let alt = SolveResult::build(Method::Lp, &spec, &w, plan, None)?;
        let av = alt.value.lower().clone();
        r.exact_value("alternative_value", &av);
        r.expect_exact("alternative plan value", &ratio(7, 8), &av, Source::Reference);

        let lp = lp_solve(&spec, &l, &w, &opts)?;
        let lv = lp.value.lower().clone();
        r.exact_value("lp_value", &lv);
        r.expect_that(
            "lp value at least 7/8",
            ">= 7/8",
            &rational::format(&lv),
            lv >= ratio(7, 8),
            Source::Reference,
        );
        r.expect_that(
            "lp value beats interval",
            "> 6/7",
            &rational::format(&lv),
            lv > ratio(6, 7),
            Source::Reference,
        );

        let support: Vec<Rational> = spec.initial().points().cloned().collect();
        let (preserving, triple) = is_blackwell_preserving(spec.kernel(1), &support)?;
        let shown = triple
            .map(|(a, b, c)| format!("({}, {}, {})", rational::format(&a), rational::format(&b), rational::format(&c)))
            .unwrap_or_else(|| "none".into());
        r.record("violating_triple", Quantity::Text(shown.clone()));
        r.expect_that(
            "kernel is not Blackwell preserving",
            "false, (1/3, 1/2, 3/4)",
            &format!("{preserving}, {shown}"),
            !preserving && shown == "(1/3, 1/2, 3/4)",
            Source::Reference,
        );
        Ok(())
    })
}
