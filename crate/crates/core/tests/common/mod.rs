//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use persuasion::kernels::{
    binary_signal_image, binary_signal_kernel, random_walk_kernel, Grid, Horizon, Kernel, KernelSchedule,
    MartingaleSpec,
};
use persuasion::measures::DiscreteMeasure;
use persuasion::rational::{int, ratio, Rational};
use persuasion::solver::WeightSchedule;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A spec together with the threshold and weights it is solved under.
#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub spec: MartingaleSpec,
    pub l: Rational,
    pub w: WeightSchedule,
}

pub fn random_measure_on(rng: &mut ChaCha8Rng, points: &[Rational], max_atoms: usize) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_atoms.min(points.len()));
    let atoms: Vec<(Rational, Rational)> =
        points.choose_multiple(rng, k).map(|x| (x.clone(), ratio(rng.gen_range(1..=9), 10))).collect();
    let m = DiscreteMeasure::new(atoms).expect("valid atoms");
    let total = m.total_mass();
    m.scale(&(int(1) / total))
}

/// Nonincreasing weights starting at 1.
pub fn random_weights(rng: &mut ChaCha8Rng, periods: usize) -> WeightSchedule {
    let mut w = vec![int(1)];
    for _ in 1..periods {
        let last = w.last().expect("nonempty").clone();
        w.push(last * ratio(rng.gen_range(1..=10), 10));
    }
    WeightSchedule::explicit(w).expect("nonincreasing")
}

fn random_threshold(rng: &mut ChaCha8Rng) -> Rational {
    let d = rng.gen_range(3..=12);
    ratio(rng.gen_range(1..d), d)
}

/// Walk on `{0, 1/n, …, 1}` with `n ≤ 8`.
fn epsilon_walk(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(3..=8);
    let l = random_threshold(rng);
    let g = Grid::epsilon(&ratio(1, n), l.clone()).expect("grid");
    let mu = random_measure_on(rng, g.points(), 4);
    let periods = rng.gen_range(1..=4);
    let spec = MartingaleSpec::new(
        mu,
        KernelSchedule::Stationary(random_walk_kernel(&g).expect("kernel")),
        Horizon::Finite(periods),
    )
    .expect("spec");
    Instance { label: format!("walk n={n}"), spec, l, w: random_weights(rng, periods) }
}

/// Walk on the beliefs reachable from 1/2 by signals of one precision, with
/// the window wide enough that the horizon never reaches its edges.
fn signal_grid_walk(rng: &mut ChaCha8Rng) -> Instance {
    let p = [ratio(2, 3), ratio(3, 4), ratio(4, 5)].choose(rng).expect("nonempty").clone();
    let periods = rng.gen_range(1..=4);
    let g = Grid::binary_signal(&p, periods).expect("grid");
    let l = random_threshold(rng);
    let centre: Vec<Rational> = [0, 1].iter().map(|&j| g.z(j).expect("in window").clone()).collect();
    let mu = random_measure_on(rng, &centre, 2);
    let kernel = random_walk_kernel(&g).expect("kernel");
    let spec = MartingaleSpec::new(mu, KernelSchedule::Stationary(kernel), Horizon::Finite(periods)).expect("spec");
    Instance { label: format!("signal grid p={p}"), spec, l, w: random_weights(rng, periods) }
}

/// Prior refined by a signal of fixed precision each period.
fn repeated_signal(rng: &mut ChaCha8Rng) -> Instance {
    let q = [ratio(3, 5), ratio(2, 3), ratio(3, 4), ratio(4, 5)].choose(rng).expect("nonempty").clone();
    let prior = ratio(rng.gen_range(1..=5), 6);
    let mu = binary_signal_image(&q, &prior).expect("image");
    let periods = rng.gen_range(1..=4);
    let mut support: Vec<Rational> = mu.points().cloned().collect();
    let mut kernels: Vec<Kernel> = Vec::new();
    for _ in 1..periods.max(2) {
        let k = binary_signal_kernel(&q, &support).expect("kernel");
        let mut next: Vec<Rational> =
            support.iter().flat_map(|x| k.get(x).expect("row").points().cloned().collect::<Vec<_>>()).collect();
        next.sort();
        next.dedup();
        support = next;
        kernels.push(k);
    }
    let spec = MartingaleSpec::new(mu, KernelSchedule::PerPeriod(kernels), Horizon::Finite(periods)).expect("spec");
    let l = random_threshold(rng);
    Instance { label: format!("signal q={q} prior={prior}"), spec, l, w: random_weights(rng, periods) }
}

/// Finite spec with a Blackwell-preserving kernel, at most 9 support points
/// per period and horizon at most 4.
pub fn random_blackwell_instance(rng: &mut ChaCha8Rng) -> Instance {
    match rng.gen_range(0..3) {
        0 => epsilon_walk(rng),
        1 => signal_grid_walk(rng),
        _ => repeated_signal(rng),
    }
}

/// ε-grid walk with the threshold on the grid, initial law on one parity
/// class, geometric weights with `δ ≤ 1/2` and horizon at most `max_periods`.
pub fn random_greedy_instance(rng: &mut ChaCha8Rng, max_periods: usize) -> (Instance, Grid) {
    let n = rng.gen_range(4..=10);
    let l = ratio(rng.gen_range(2..n), n);
    let g = Grid::epsilon(&ratio(1, n), l.clone()).expect("grid");
    let mu = random_parity_measure(rng, &g);
    let periods = rng.gen_range(1..=max_periods);
    let delta = ratio(rng.gen_range(1..=5), 10);
    let spec = MartingaleSpec::new(
        mu,
        KernelSchedule::Stationary(random_walk_kernel(&g).expect("kernel")),
        Horizon::Finite(periods),
    )
    .expect("spec");
    let w = WeightSchedule::geometric(delta.clone()).expect("discount");
    (Instance { label: format!("walk n={n} l={l} delta={delta}"), spec, l, w }, g)
}

/// Measure on one parity class of grid indices; the grid ends belong to both.
pub fn random_parity_measure(rng: &mut ChaCha8Rng, g: &Grid) -> DiscreteMeasure {
    let parity = rng.gen_range(0..2i64);
    let pts: Vec<Rational> = (g.first_index()..=g.last_index())
        .filter(|j| *j == g.first_index() || *j == g.last_index() || j.rem_euclid(2) == parity)
        .map(|j| g.z(j).expect("in window").clone())
        .collect();
    random_measure_on(rng, &pts, 4)
}

/// ε-grid walk with the initial law on grid points below the threshold and on
/// one parity class; the threshold may sit between grid points.
pub fn random_transparency_instance(rng: &mut ChaCha8Rng, periods: usize) -> (Instance, Grid) {
    let n = rng.gen_range(4..=12);
    let k = rng.gen_range(2..n);
    let l = if rng.gen_bool(0.5) { ratio(k, n) } else { ratio(k, n) + ratio(rng.gen_range(1..=3), 4 * n) };
    let g = Grid::epsilon(&ratio(1, n), l.clone()).expect("grid");
    let parity = rng.gen_range(0..2i64);
    let pts: Vec<Rational> = (g.first_index()..=0)
        .filter(|j| *j == g.first_index() || j.rem_euclid(2) == parity)
        .map(|j| g.z(j).expect("in window").clone())
        .collect();
    let mu = random_measure_on(rng, &pts, 4);
    let spec = MartingaleSpec::new(
        mu,
        KernelSchedule::Stationary(random_walk_kernel(&g).expect("kernel")),
        Horizon::Finite(periods),
    )
    .expect("spec");
    let w = WeightSchedule::geometric(ratio(1, 2)).expect("discount");
    (Instance { label: format!("walk n={n} l={l}"), spec, l, w }, g)
}
