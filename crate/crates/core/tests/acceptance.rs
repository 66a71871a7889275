//! Acceptance criteria. Prints one `criterion N: PASS|FAIL` line per criterion
//! with its runtime against the limit, and exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{random_blackwell_instance, random_greedy_instance, random_transparency_instance, rng};
use persuasion::casebook::{
    counterexample_nonblackwell, example1, example1_cutoffs, example2, lemma_property_suite, prop1_check,
    CaseReport, Example2Params,
};
use persuasion::rational::{ratio, Rational};
use persuasion::solver::{greedy_evaluate, interval_optimize, lp_solve, transparent_adoption_law, SolveOptions};
use rand::Rng;

type Criterion = fn() -> bool;

const SEED: u64 = 20_240_601;

fn verdict(n: u32, pass: bool, detail: &str, elapsed: Duration, limit: Duration) -> bool {
    let in_time = elapsed < limit;
    let ok = pass && in_time;
    println!(
        "criterion {n}: {} ({detail}; {:.2} s, limit {} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    ok
}

fn failed_expectations(r: &CaseReport) -> String {
    let bad: Vec<String> = r
        .expectations
        .iter()
        .filter(|e| !e.pass)
        .map(|e| format!("{} expected {} got {}", e.name, e.expected, e.observed))
        .collect();
    if bad.is_empty() {
        "all expectations hold".into()
    } else {
        bad.join(", ")
    }
}

fn computed(r: &CaseReport, key: &str) -> String {
    r.computed.get(key).map(|q| serde_json::to_string(q).unwrap()).unwrap_or_default()
}

fn criterion_1_counterexample() -> bool {
    let r = counterexample_nonblackwell().unwrap();
    let detail = format!(
        "interval {} alternative {} lp {}; {}",
        computed(&r, "interval_value"),
        computed(&r, "alternative_value"),
        computed(&r, "lp_value"),
        failed_expectations(&r)
    );
    verdict(1, r.pass, &detail, r.runtime, Duration::from_secs(1))
}

fn criterion_2_example1_masses() -> bool {
    let r = example1(&ratio(4, 5)).unwrap();
    let greedy = r.expectation("greedy first-period mass").unwrap();
    let interior = r.expectation("first-period mass").unwrap();
    let pass = greedy.pass && interior.pass;
    let detail = format!(
        "greedy mass {} (want {}), interior mass {} (want {})",
        greedy.observed, greedy.expected, interior.observed, interior.expected
    );
    verdict(2, pass, &detail, r.runtime, Duration::from_secs(1))
}

fn criterion_3_example1_cutoffs() -> bool {
    let r = example1_cutoffs().unwrap();
    let lower = r.expectation("lower cutoff").unwrap();
    let upper = r.expectation("upper cutoff").unwrap();
    let detail = format!(
        "lower {} (want {} ± 0.01), upper {} (want {} ± 0.01)",
        lower.observed, lower.expected, upper.observed, upper.expected
    );
    verdict(3, lower.pass && upper.pass, &detail, r.runtime, Duration::from_secs(10))
}

fn criterion_4_interval_policies_are_optimal() -> bool {
    let start = Instant::now();
    let mut rng = rng(SEED);
    let opts = SolveOptions::default();
    let mut mismatches = Vec::new();
    let trials = 60;
    for _ in 0..trials {
        let inst = random_blackwell_instance(&mut rng);
        let lp = lp_solve(&inst.spec, &inst.l, &inst.w, &opts).unwrap();
        let iv = interval_optimize(&inst.spec, &inst.l, &inst.w, &opts).unwrap();
        if iv.value != lp.value {
            mismatches.push(inst.label);
        }
    }
    let detail = format!("{} of {trials} specs with interval value equal to the lp value", trials - mismatches.len());
    verdict(4, mismatches.is_empty(), &detail, start.elapsed(), Duration::from_secs(120))
}

fn criterion_5_greedy_is_optimal_on_walks() -> bool {
    let start = Instant::now();
    let mut rng = rng(SEED + 1);
    let opts = SolveOptions::default();
    let trials = 60;
    let mut matched = 0;
    for _ in 0..trials {
        let (inst, _) = random_greedy_instance(&mut rng, 6);
        let lp = lp_solve(&inst.spec, &inst.l, &inst.w, &opts).unwrap();
        let greedy = greedy_evaluate(&inst.spec, &inst.l, &inst.w).unwrap();
        matched += usize::from(greedy.value == lp.value);
    }
    let detail = format!("{matched} of {trials} specs with greedy value equal to the lp value");
    verdict(5, matched == trials, &detail, start.elapsed(), Duration::from_secs(120))
}

fn criterion_6_waiting_beats_greedy() -> bool {
    let (eps, l) = (ratio(1, 100), ratio(1, 2));
    let high = prop1_check(&ratio(3, 4), &eps, &l).unwrap();
    let low = prop1_check(&ratio(1, 2), &eps, &l).unwrap();
    let detail = format!(
        "delta 3/4: greedy {} deviation {}; delta 1/2: greedy {} deviation {}; {} / {}",
        computed(&high, "greedy_value_decimal"),
        computed(&high, "deviation_value_decimal"),
        computed(&low, "greedy_value_decimal"),
        computed(&low, "deviation_value_decimal"),
        failed_expectations(&high),
        failed_expectations(&low)
    );
    verdict(6, high.pass && low.pass, &detail, high.runtime + low.runtime, Duration::from_secs(30))
}

fn criterion_7_example2() -> bool {
    let r = example2(&Example2Params::default()).unwrap();
    let detail = format!(
        "gamma max {} lp {}; bands {}; {}",
        computed(&r, "gamma_max"),
        computed(&r, "lp_value"),
        computed(&r, "regime_bands"),
        failed_expectations(&r)
    );
    verdict(7, r.pass, &detail, r.runtime, Duration::from_secs(120))
}

fn criterion_8_property_suites() -> bool {
    let r = lemma_property_suite(SEED, 100).unwrap();
    verdict(8, r.pass, &failed_expectations(&r), r.runtime, Duration::from_secs(300))
}

fn criterion_9_transparency() -> bool {
    let start = Instant::now();
    let mut rng = rng(SEED + 2);
    let trials = 30;
    let mut matched = 0;
    for _ in 0..trials {
        let periods = rng.gen_range(1..=20);
        let (inst, g) = random_transparency_instance(&mut rng, periods);
        let greedy = greedy_evaluate(&inst.spec, &inst.l, &inst.w).unwrap();
        let law: Vec<Rational> = transparent_adoption_law(&g, inst.spec.initial(), periods)
            .unwrap()
            .into_iter()
            .map(|(_, m)| m)
            .collect();
        matched += usize::from(law == greedy.per_period_mass);
    }
    let detail = format!("{matched} of {trials} priors with identical adoption laws");
    verdict(9, matched == trials, &detail, start.elapsed(), Duration::from_secs(30))
}


fn main() {
    let criteria: [Criterion; 9] = [
        criterion_1_counterexample,
        criterion_2_example1_masses,
        criterion_3_example1_cutoffs,
        criterion_4_interval_policies_are_optimal,
        criterion_5_greedy_is_optimal_on_walks,
        criterion_6_waiting_beats_greedy,
        criterion_7_example2,
        criterion_8_property_suites,
        criterion_9_transparency,
    ];
    let failed = criteria.iter().filter(|c| !c()).count();
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
