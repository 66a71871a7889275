//! Invariants of measures, kernels and stopping rules on generated inputs.

use num_traits::{Signed, Zero};
use persuasion::kernels::{
    binary_signal_image, is_blackwell_preserving, pushforward, random_walk_kernel, Grid, Horizon, KernelSchedule,
    MartingaleSpec,
};
use persuasion::measures::{blackwell_leq, dominates, fosd_leq, stop_loss_leq, DiscreteMeasure};
use persuasion::policies::{greedy_mass, greedy_measure, ic_holds, interval_measure, StoppingPlan};
use persuasion::rational::{self, int, ratio, Rational};
use proptest::prelude::*;

fn lattice_point() -> impl Strategy<Value = Rational> {
    (0i64..=24).prop_map(|k| ratio(k, 24))
}

fn measure() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((lattice_point(), 1i64..=12), 1..6)
        .prop_map(|atoms| DiscreteMeasure::new(atoms.into_iter().map(|(x, w)| (x, ratio(w, 12)))).unwrap())
}

fn threshold() -> impl Strategy<Value = Rational> {
    (1i64..24).prop_map(|k| ratio(k, 24))
}

/// A pair `(λ, μ)` with μ a mean-preserving spread of λ: some atoms of λ are
/// split into two points around them.
fn spread_pair() -> impl Strategy<Value = (DiscreteMeasure, DiscreteMeasure)> {
    (measure(), prop::collection::vec((0i64..=24, 0i64..=24), 6)).prop_map(|(lambda, moves)| {
        let mut atoms = Vec::new();
        for ((x, w), (a, b)) in lambda.atoms().iter().zip(moves.iter().cycle()) {
            let lo = rational::min(x, &ratio(*a, 24));
            let hi = rational::max(x, &ratio(*b, 24));
            if lo == hi {
                atoms.push((x.clone(), w.clone()));
                continue;
            }
            let up = (x - &lo) / (&hi - &lo);
            atoms.push((hi, w * &up));
            atoms.push((lo, w * (int(1) - up)));
        }
        (lambda, DiscreteMeasure::new(atoms).unwrap())
    })
}

proptest! {
    #[test]
    fn rational_text_roundtrip(n in -1000i64..1000, d in 1i64..1000) {
        let r = ratio(n, d);
        prop_assert_eq!(rational::parse(&rational::format(&r)).unwrap(), r);
    }

    #[test]
    fn decimal_rendering_is_close(n in 0i64..1000, d in 1i64..1000) {
        let r = ratio(n, d);
        let shown: f64 = rational::to_decimal(&r, 9).parse().unwrap();
        prop_assert!((shown - n as f64 / d as f64).abs() <= 5e-10);
    }

    #[test]
    fn sqrt_bounds_enclose(n in 0i64..500, d in 1i64..500) {
        let r = ratio(n, d);
        let (lo, hi) = rational::sqrt_bounds(&r, 40);
        prop_assert!(&lo * &lo <= r && r <= &hi * &hi);
        prop_assert!(&hi - &lo <= ratio(1, 1 << 30));
    }

    #[test]
    fn measure_json_roundtrip(mu in measure()) {
        let text = serde_json::to_string(&mu).unwrap();
        let back: DiscreteMeasure = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, mu);
    }

    #[test]
    fn addition_is_commutative_and_additive(a in measure(), b in measure()) {
        let s = a.add(&b);
        prop_assert_eq!(&s, &b.add(&a));
        prop_assert_eq!(s.total_mass(), a.total_mass() + b.total_mass());
        prop_assert_eq!(s.moment(), a.moment() + b.moment());
        prop_assert_eq!(s.subtract(&b).unwrap(), a);
    }

    #[test]
    fn barycenter_within_support(mu in measure()) {
        let b = mu.barycenter().unwrap();
        prop_assert!(mu.min_point().unwrap() <= &b && &b <= mu.max_point().unwrap());
    }

    #[test]
    fn orders_are_reflexive(mu in measure()) {
        prop_assert!(blackwell_leq(&mu, &mu).unwrap());
        prop_assert!(fosd_leq(&mu, &mu).unwrap());
        prop_assert!(stop_loss_leq(&mu, &mu).unwrap());
        prop_assert!(dominates(&mu, &mu).unwrap().0);
    }

    #[test]
    fn spreads_are_blackwell_larger((lambda, mu) in spread_pair()) {
        prop_assert!(blackwell_leq(&lambda, &mu).unwrap());
        prop_assert!(stop_loss_leq(&lambda, &mu).unwrap());
    }

    #[test]
    fn blackwell_and_stop_loss_agree((lambda, mu) in spread_pair()) {
        // swapping the pair turns the relation around unless nothing moved
        let forward = blackwell_leq(&mu, &lambda).unwrap();
        prop_assert_eq!(forward, stop_loss_leq(&mu, &lambda).unwrap());
        prop_assert_eq!(forward, lambda == mu);
    }

    #[test]
    fn sub_measures_are_dominated(mu in measure(), keep in prop::collection::vec(0i64..=4, 6)) {
        let part = DiscreteMeasure::new(
            mu.atoms().iter().zip(keep.iter().cycle()).map(|((x, w), k)| (x.clone(), w * ratio(*k, 4))),
        )
        .unwrap();
        let (holds, witness) = dominates(&part, &mu).unwrap();
        prop_assert!(holds);
        let moved: Rational = witness.unwrap().transport.iter().map(|(_, _, m)| m.clone()).sum();
        prop_assert_eq!(moved, part.total_mass());
    }

    #[test]
    fn random_walk_is_a_martingale(n in 2i64..=12, k in 1i64..12, mu in measure()) {
        let l = ratio(k.min(n - 1), n);
        let g = Grid::epsilon(&ratio(1, n), l).unwrap();
        let sigma = random_walk_kernel(&g).unwrap();
        for (x, img) in sigma.rows() {
            prop_assert_eq!(img.total_mass(), int(1));
            prop_assert_eq!(&img.barycenter().unwrap(), x);
        }
        let on_grid = DiscreteMeasure::new(
            mu.atoms().iter().map(|(x, w)| (ratio((x * int(n)).round().to_integer().try_into().unwrap(), n), w.clone())),
        )
        .unwrap();
        let next = pushforward(&sigma, &on_grid).unwrap();
        prop_assert_eq!(next.total_mass(), on_grid.total_mass());
        prop_assert_eq!(next.moment(), on_grid.moment());
        prop_assert!(blackwell_leq(&on_grid, &next).unwrap());
        let domain: Vec<Rational> = g.points().to_vec();
        prop_assert!(is_blackwell_preserving(&sigma, &domain).unwrap().0);
    }

    #[test]
    fn binary_signal_preserves_the_prior(q in 50i64..=100, y in 0i64..=24) {
        let (q, y) = (ratio(q, 100), ratio(y, 24));
        let img = binary_signal_image(&q, &y).unwrap();
        prop_assert_eq!(img.total_mass(), int(1));
        prop_assert_eq!(img.barycenter().unwrap(), y);
    }

    #[test]
    fn greedy_is_feasible_and_maximal(mu in measure(), l in threshold(), frac in 0i64..=8) {
        let g = greedy_measure(&mu, &l).unwrap();
        prop_assert!(g.leq(&mu));
        if !g.is_empty() {
            prop_assert!(g.barycenter().unwrap() >= l);
        }
        // any interval stopping of smaller mass fits under the greedy mass
        let gm = greedy_mass(&mu, &l).unwrap();
        let beta = &gm * ratio(frac, 8);
        let nu = interval_measure(&mu, &l, &beta).unwrap();
        prop_assert_eq!(nu.total_mass(), beta.clone());
        prop_assert!(nu.leq(&mu));
        if beta.is_positive() && mu.barycenter().unwrap() < l {
            prop_assert_eq!(nu.barycenter().unwrap(), l.clone());
        }
        prop_assert!(interval_measure(&mu, &l, &(&gm + ratio(1, 1000))).is_err());
    }

    #[test]
    fn greedy_plans_pass_the_ic_replay(mu in measure(), l in threshold(), periods in 1usize..=4) {
        let g = Grid::epsilon(&ratio(1, 24), l.clone()).unwrap();
        let spec = MartingaleSpec::new(
            mu,
            KernelSchedule::Stationary(random_walk_kernel(&g).unwrap()),
            Horizon::Finite(periods),
        )
        .unwrap();
        let mut flow = spec.initial().clone();
        let mut eliminated = Vec::new();
        for t in 1..=periods {
            let nu = if flow.is_empty() { DiscreteMeasure::zero() } else { greedy_measure(&flow, &l).unwrap() };
            if t < periods {
                flow = pushforward(spec.kernel(t), &flow.subtract(&nu).unwrap()).unwrap();
            }
            eliminated.push(nu);
        }
        let plan = StoppingPlan::new(eliminated);
        prop_assert!(ic_holds(&plan, &spec, &l));
        // scaling the first stop above the available mass breaks it
        let mut bad = plan.clone();
        if !bad.eliminated[0].total_mass().is_zero() {
            bad.eliminated[0] = bad.eliminated[0].scale(&int(2));
            prop_assert!(!ic_holds(&bad, &spec, &l));
        }
    }
}
