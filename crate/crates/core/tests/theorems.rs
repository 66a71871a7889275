//! Structural results checked on random instances against the LP oracle.

mod common;

use common::{random_blackwell_instance, random_greedy_instance, random_transparency_instance, rng};
use persuasion::kernels::{is_blackwell_preserving, parity_class, KernelSchedule};
use persuasion::rational::Rational;
use persuasion::solver::{greedy_evaluate, interval_optimize, lp_solve, transparent_adoption_law, SolveOptions};
use proptest::prelude::*;

fn kernels_preserve_blackwell(spec: &persuasion::kernels::MartingaleSpec) -> bool {
    let ks: Vec<_> = match spec.kernels() {
        KernelSchedule::Stationary(k) => vec![k],
        KernelSchedule::PerPeriod(ks) => ks.iter().collect(),
    };
    ks.into_iter().all(|k| {
        let dom: Vec<Rational> = k.domain().cloned().collect();
        is_blackwell_preserving(k, &dom).expect("domain rows").0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn interval_policy_matches_lp_under_blackwell_kernels(seed in any::<u64>()) {
        let inst = random_blackwell_instance(&mut rng(seed));
        prop_assert!(kernels_preserve_blackwell(&inst.spec), "{}", inst.label);
        let opts = SolveOptions::default();
        let lp = lp_solve(&inst.spec, &inst.l, &inst.w, &opts).unwrap();
        let iv = interval_optimize(&inst.spec, &inst.l, &inst.w, &opts).unwrap();
        prop_assert_eq!(iv.value, lp.value, "{}", inst.label);
    }

    #[test]
    fn greedy_matches_lp_on_parity_walks(seed in any::<u64>()) {
        let (inst, g) = random_greedy_instance(&mut rng(seed), 6);
        prop_assert!(parity_class(&g, inst.spec.initial()).unwrap());
        let lp = lp_solve(&inst.spec, &inst.l, &inst.w, &SolveOptions::default()).unwrap();
        let greedy = greedy_evaluate(&inst.spec, &inst.l, &inst.w).unwrap();
        prop_assert_eq!(greedy.value, lp.value, "{}", inst.label);
    }

    #[test]
    fn transparent_policy_adopts_like_greedy(seed in any::<u64>(), periods in 1usize..=20) {
        let (inst, g) = random_transparency_instance(&mut rng(seed), periods);
        let spec = &inst.spec;
        let greedy = greedy_evaluate(spec, &inst.l, &inst.w).unwrap();
        let law: Vec<Rational> =
            transparent_adoption_law(&g, spec.initial(), periods).unwrap().into_iter().map(|(_, m)| m).collect();
        prop_assert_eq!(law, greedy.per_period_mass, "{}", inst.label);
    }

    #[test]
    fn lp_bounds_every_heuristic(seed in any::<u64>()) {
        let inst = random_blackwell_instance(&mut rng(seed));
        let opts = SolveOptions::default();
        let lp = lp_solve(&inst.spec, &inst.l, &inst.w, &opts).unwrap();
        let greedy = greedy_evaluate(&inst.spec, &inst.l, &inst.w).unwrap();
        prop_assert!(greedy.value.upper() <= lp.value.lower(), "{}", inst.label);
    }
}
