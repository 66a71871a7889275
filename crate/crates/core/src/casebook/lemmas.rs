//! Seeded randomized checks of the structural properties the solvers rely on.

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CaseReport, Quantity, Source};
use crate::error::Result;
use crate::kernels::{parity_class, pushforward, random_walk_kernel, Grid, Kernel};
use crate::measures::{blackwell_leq, dominates, tail_dominates, DiscreteMeasure};
use crate::policies::{greedy_mass, greedy_measure, interval_measure};
use crate::rational::{self, int, ratio, Rational};
use crate::solver::grid_d;

const DENOMS: [i64; 5] = [12, 16, 20, 24, 30];
const SWEEP_STEPS: i64 = 8;

fn random_weight(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.gen_range(1..=12), rng.gen_range(12..=48))
}

fn random_fraction(rng: &mut ChaCha8Rng) -> Rational {
    let d = rng.gen_range(2..=10);
    ratio(rng.gen_range(0..=d), d)
}

/// Random finite grid with a threshold that has at least two grid points below it.
fn random_grid(rng: &mut ChaCha8Rng) -> Grid {
    loop {
        let den = *DENOMS.choose(rng).expect("nonempty");
        let n = rng.gen_range(4..=9usize).min(den as usize + 1);
        let mut ks: Vec<i64> = (0..=den).collect();
        ks.shuffle(rng);
        let mut ks: Vec<i64> = ks.into_iter().take(n).collect();
        ks.sort();
        let points: Vec<Rational> = ks.iter().map(|&k| ratio(k, den)).collect();
        let zero = rng.gen_range(1..n - 1);
        let (lo, hi) = (&points[zero], &points[zero + 1]);
        let l = if rng.gen_bool(0.5) {
            hi.clone()
        } else {
            lo + (hi - lo) * ratio(rng.gen_range(1..=4), 5)
        };
        if let Ok(g) = Grid::new(points, l, false) {
            return g;
        }
    }
}

fn random_measure_on(rng: &mut ChaCha8Rng, points: &[Rational], max_atoms: usize) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_atoms.min(points.len()));
    let chosen: Vec<&Rational> = points.choose_multiple(rng, k).collect();
    DiscreteMeasure::new(chosen.into_iter().map(|x| (x.clone(), random_weight(rng)))).expect("valid atoms")
}

/// Random measure on a grid supported on one parity class.
fn random_parity_measure(rng: &mut ChaCha8Rng, g: &Grid) -> DiscreteMeasure {
    let parity = rng.gen_range(0..2i64);
    let pts: Vec<Rational> = (g.first_index()..=g.last_index())
        .filter(|j| *j == g.first_index() || *j == g.last_index() || j.rem_euclid(2) == parity)
        .map(|j| g.z(j).expect("in window").clone())
        .collect();
    random_measure_on(rng, &pts, 4)
}

/// Random measure on `[0, 1]` with points on a 1/24 lattice and mean below `l`.
fn random_prior(rng: &mut ChaCha8Rng, l: &Rational) -> DiscreteMeasure {
    let lattice: Vec<Rational> = (0..=24).map(|k| ratio(k, 24)).collect();
    loop {
        let mu = random_measure_on(rng, &lattice, 6);
        let above = mu.max_point().is_some_and(|x| x > l);
        if above && mu.barycenter().is_ok_and(|b| b < *l) {
            return mu;
        }
    }
}

fn scaled_part(mu: &DiscreteMeasure, keep: impl Fn(&Rational) -> bool, c: &Rational) -> Vec<(Rational, Rational)> {
    mu.atoms().iter().filter(|(x, _)| keep(x)).map(|(x, w)| (x.clone(), w * c)).collect()
}

/// Random sub-measure of `mu` with barycenter exactly `l`, if the draw allows one.
fn random_stopping(rng: &mut ChaCha8Rng, mu: &DiscreteMeasure, l: &Rational) -> Option<DiscreteMeasure> {
    let part = DiscreteMeasure::new(mu.atoms().iter().map(|(x, w)| (x.clone(), w * random_fraction(rng)))).ok()?;
    let excess: Rational = part.atoms().iter().filter(|(x, _)| x >= l).map(|(x, w)| (x - l) * w).sum();
    let deficit: Rational = part.atoms().iter().filter(|(x, _)| x < l).map(|(x, w)| (l - x) * w).sum();
    if excess.is_zero() || deficit.is_zero() {
        return None;
    }
    let one = int(1);
    let (up, down) = if excess > deficit { (&deficit / &excess, one) } else { (one, &excess / &deficit) };
    let mut atoms = scaled_part(&part, |x| x >= l, &up);
    atoms.extend(scaled_part(&part, |x| x < l, &down));
    DiscreteMeasure::new(atoms).ok()
}

/// Every sub-measure of `mu` of mass `beta` cut out by a quantile window and
/// having mean `l`, found by solving each pair of end cells directly.
fn all_interval_windows(mu: &DiscreteMeasure, l: &Rational, beta: &Rational) -> Vec<DiscreteMeasure> {
    let atoms = mu.atoms();
    let n = atoms.len();
    let mut cum = vec![Rational::zero()];
    for (_, w) in atoms {
        let next = cum.last().expect("nonempty") + w;
        cum.push(next);
    }
    let total = &cum[n];
    let mut found: Vec<DiscreteMeasure> = Vec::new();
    let mut keep = |nu: DiscreteMeasure| {
        if !found.contains(&nu) {
            found.push(nu);
        }
    };
    for i in 0..n {
        for j in i..n {
            // p in cell i, p + beta in cell j
            let p_lo = rational::max(&cum[i], &(&cum[j] - beta));
            let p_hi = rational::min(&cum[i + 1], &(&cum[j + 1] - beta));
            let p_hi = rational::min(&p_hi, &(total - beta));
            if p_lo > p_hi || p_lo.is_negative() {
                continue;
            }
            let window = |p: &Rational| -> DiscreteMeasure {
                let end = p + beta;
                DiscreteMeasure::new((0..n).filter_map(|k| {
                    let a = rational::max(&cum[k], p);
                    let b = rational::min(&cum[k + 1], &end);
                    (a < b).then(|| (atoms[k].0.clone(), b - a))
                }))
                .expect("valid window")
            };
            let (xi, xj) = (&atoms[i].0, &atoms[j].0);
            if xi == xj {
                if *xi == *l {
                    keep(window(&p_lo));
                }
                continue;
            }
            // moment(p) = m0 + (x_j - x_i) p over the cell, solved for l * beta
            let slope = xj - xi;
            let m0 = window(&p_lo).moment() - &slope * &p_lo;
            let p = (l * beta - m0) / slope;
            if p >= p_lo && p <= p_hi {
                keep(window(&p));
            }
        }
    }
    found
}

/// Moves part of `mu` downward and pools pairs of atoms at their mean;
/// the result is dominated by `mu` by construction.
fn degrade(rng: &mut ChaCha8Rng, mu: &DiscreteMeasure) -> DiscreteMeasure {
    let mut atoms: Vec<(Rational, Rational)> =
        mu.atoms().iter().map(|(x, w)| (x.clone(), w * random_fraction(rng))).filter(|(_, w)| w.is_positive()).collect();
    for _ in 0..rng.gen_range(0..3) {
        if atoms.len() >= 2 {
            let i = rng.gen_range(0..atoms.len());
            let a = atoms.swap_remove(i);
            let j = rng.gen_range(0..atoms.len());
            let b = atoms.swap_remove(j);
            let mass = &a.1 + &b.1;
            atoms.push(((&a.0 * &a.1 + &b.0 * &b.1) / &mass, mass));
        }
        if let Some(atom) = atoms.choose_mut(rng) {
            atom.0 = &atom.0 * random_fraction(rng);
        }
    }
    DiscreteMeasure::new(atoms).unwrap_or_default()
}

/// Grid version of [`degrade`]: downward moves to lower grid points and
/// reverse random-walk steps that pool neighbours at the middle point.
fn degrade_on_grid(rng: &mut ChaCha8Rng, g: &Grid, mu: &DiscreteMeasure) -> DiscreteMeasure {
    let mut nu = DiscreteMeasure::new(mu.atoms().iter().map(|(x, w)| (x.clone(), w * random_fraction(rng))))
        .unwrap_or_default();
    for _ in 0..rng.gen_range(0..3) {
        let j = rng.gen_range(g.first_index() + 1..g.last_index());
        let (lo, mid, hi) = (g.z(j - 1).unwrap(), g.z(j).unwrap(), g.z(j + 1).unwrap());
        let (wl, wh) = (nu.weight_at(lo), nu.weight_at(hi));
        if wl.is_positive() && wh.is_positive() {
            // a (mid - lo) = b (hi - mid)
            let a = rational::min(&wl, &(&wh * (hi - mid) / (mid - lo)));
            let b = &a * (mid - lo) / (hi - mid);
            let take = DiscreteMeasure::new([(lo.clone(), a.clone()), (hi.clone(), b.clone())]).expect("valid");
            nu = nu.subtract(&take).expect("sub-measure").add(&DiscreteMeasure::dirac(mid.clone()).unwrap().scale(&(a + b)));
        }
        if let Some((x, w)) = nu.atoms().choose(rng).cloned() {
            let k = g.index_of(&x).expect("on grid");
            let to = rng.gen_range(g.first_index()..=k);
            let part = &w * random_fraction(rng);
            let moved = DiscreteMeasure::new([(x.clone(), part.clone())]).expect("valid");
            nu = nu.subtract(&moved).expect("sub-measure").add(&DiscreteMeasure::new([(g.z(to).unwrap().clone(), part)]).expect("valid"));
        }
    }
    nu
}

struct Tally {
    name: &'static str,
    passed: usize,
    trials: usize,
}

fn run<F: FnMut(&mut ChaCha8Rng) -> Result<bool>>(name: &'static str, seed: u64, trials: usize, mut check: F) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    for _ in 0..trials {
        if check(&mut rng)? {
            passed += 1;
        }
    }
    Ok(Tally { name, passed, trials })
}

fn interval_uniqueness(rng: &mut ChaCha8Rng) -> Result<bool> {
    let l = ratio(rng.gen_range(8..=20), 24);
    let mu = random_prior(rng, &l);
    let g = greedy_mass(&mu, &l)?;
    let beta = &g * ratio(rng.gen_range(1..=20), 20);
    let nu = interval_measure(&mu, &l, &beta)?;
    let all = all_interval_windows(&mu, &l, &beta);
    Ok(all.len() == 1 && all[0] == nu)
}

fn interval_minimality(rng: &mut ChaCha8Rng) -> Result<bool> {
    let l = ratio(rng.gen_range(8..=20), 24);
    let mu = random_prior(rng, &l);
    let other = loop {
        if let Some(nu) = random_stopping(rng, &mu, &l) {
            break nu;
        }
    };
    let interval = interval_measure(&mu, &l, &other.total_mass())?;
    blackwell_leq(&interval, &other)
}

fn greedy_residual_order(rng: &mut ChaCha8Rng) -> Result<bool> {
    let g = random_grid(rng);
    let l = g.threshold().clone();
    let sigma = random_walk_kernel(&g)?;
    let mu1 = random_measure_on(rng, g.points(), 5);
    let nu1 = greedy_measure(&mu1, &l)?;
    let alpha = nu1.total_mass() * random_fraction(rng);
    let dev1 = interval_measure(&mu1, &l, &alpha)?;
    let residual = |first: &DiscreteMeasure| -> Result<DiscreteMeasure> {
        let mu2 = pushforward(&sigma, &mu1.subtract(first)?)?;
        let nu2 = if mu2.is_empty() { DiscreteMeasure::zero() } else { greedy_measure(&mu2, &l)? };
        mu2.subtract(&nu2)
    };
    Ok(tail_dominates(&residual(&dev1)?, &residual(&nu1)?))
}

fn domination_additivity(rng: &mut ChaCha8Rng) -> Result<bool> {
    let lattice: Vec<Rational> = (0..=24).map(|k| ratio(k, 24)).collect();
    let (mu, mu2) = (random_measure_on(rng, &lattice, 4), random_measure_on(rng, &lattice, 4));
    let (psi, psi2) = (degrade(rng, &mu), degrade(rng, &mu2));
    let premise = dominates(&psi, &mu)?.0 && dominates(&psi2, &mu2)?.0;
    Ok(premise && dominates(&psi.add(&psi2), &mu.add(&mu2))?.0)
}

fn domination_preservation(rng: &mut ChaCha8Rng) -> Result<bool> {
    let g = random_grid(rng);
    let sigma = random_walk_kernel(&g)?;
    let mu = random_measure_on(rng, g.points(), 5);
    let psi = degrade_on_grid(rng, &g, &mu);
    let premise = dominates(&psi, &mu)?.0;
    Ok(premise && dominates(&pushforward(&sigma, &psi)?, &pushforward(&sigma, &mu)?)?.0)
}

fn wait_setup(rng: &mut ChaCha8Rng) -> Result<(Kernel, Rational, Rational, DiscreteMeasure, DiscreteMeasure)> {
    let g = random_grid(rng);
    let sigma = random_walk_kernel(&g)?;
    let (d, _) = grid_d(&g)?;
    let delta = int(1) / d;
    let mu = random_parity_measure(rng, &g);
    debug_assert!(parity_class(&g, &mu)?);
    let nu = greedy_measure(&mu, g.threshold())?;
    Ok((sigma, g.threshold().clone(), delta, mu, nu))
}

fn g_of(sigma: &Kernel, mu: &DiscreteMeasure, l: &Rational) -> Result<Rational> {
    let next = pushforward(sigma, mu)?;
    if next.is_empty() {
        return Ok(Rational::zero());
    }
    greedy_mass(&next, l)
}

fn one_period_wait_bound(rng: &mut ChaCha8Rng) -> Result<bool> {
    let (sigma, l, delta, mu, nu) = wait_setup(rng)?;
    let lhs = &delta * g_of(&sigma, &mu, &l)?;
    let rhs = nu.total_mass() + &delta * g_of(&sigma, &mu.subtract(&nu)?, &l)?;
    Ok(lhs <= rhs)
}

fn partial_wait_bound(rng: &mut ChaCha8Rng) -> Result<bool> {
    let (sigma, l, delta, mu, nu) = wait_setup(rng)?;
    let g = nu.total_mass();
    let rhs = &g + &delta * g_of(&sigma, &mu.subtract(&nu)?, &l)?;
    for k in 0..=SWEEP_STEPS {
        let alpha = &g * ratio(k, SWEEP_STEPS);
        let part = interval_measure(&mu, &l, &alpha)?;
        let lhs = &alpha + &delta * g_of(&sigma, &mu.subtract(&part)?, &l)?;
        if lhs > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs every property `trials` times from `seed`; each property gets its own
/// stream so adding a property does not perturb the others.
pub fn lemma_property_suite(seed: u64, trials: usize) -> Result<CaseReport> {
    CaseReport::timed("lemmas", |r| {
        r.param("seed", seed);
        r.param("trials", trials);
        type Check = fn(&mut ChaCha8Rng) -> Result<bool>;
        let checks: [(&'static str, Check); 7] = [
            ("interval measure is unique", interval_uniqueness),
            ("interval measure is Blackwell minimal", interval_minimality),
            ("greedy residual is first-order dominated", greedy_residual_order),
            ("domination is closed under addition", domination_additivity),
            ("random walk preserves domination", domination_preservation),
            ("one-period wait bound", one_period_wait_bound),
            ("partial wait bound", partial_wait_bound),
        ];
        for (k, (name, check)) in checks.into_iter().enumerate() {
            let t = run(name, seed.wrapping_add(k as u64), trials, check)?;
            let shown = format!("{}/{}", t.passed, t.trials);
            r.record(&t.name.to_lowercase().replace([' ', '-'], "_"), Quantity::Text(shown.clone()));
            r.expect_that(t.name, &format!("{}/{}", t.trials, t.trials), &shown, t.passed == t.trials, Source::Derived);
        }
        Ok(())
    })
}
