//! Belief-space transition kernels, grids, and the martingale specification.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::{ser::SerializeSeq, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measures::{blackwell_leq, DiscreteMeasure};
use crate::rational::{self, Rational};

/// Finite table from a source belief to a unit-mass image with the same barycenter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Kernel {
    transitions: BTreeMap<Rational, DiscreteMeasure>,
    /// Absorbing points that only exist because an infinite grid was cut to a window.
    window_edges: BTreeSet<Rational>,
}

impl Kernel {
    pub fn new<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, DiscreteMeasure)>,
    {
        let mut transitions = BTreeMap::new();
        for (x, image) in rows {
            if x.is_negative() || x > rational::one() {
                return Err(Error::PointOutOfRange(rational::format(&x)));
            }
            let mass = image.total_mass();
            if !mass.is_one() {
                return Err(Error::InvalidTransition {
                    point: rational::format(&x),
                    reason: format!("image has mass {}", rational::format(&mass)),
                });
            }
            let bar = image.barycenter()?;
            if bar != x {
                return Err(Error::InvalidTransition {
                    point: rational::format(&x),
                    reason: format!("image has barycenter {}", rational::format(&bar)),
                });
            }
            transitions.insert(x, image);
        }
        Ok(Kernel { transitions, window_edges: BTreeSet::new() })
    }

    pub fn identity<'a, I: IntoIterator<Item = &'a Rational>>(support: I) -> Self {
        let transitions = support
            .into_iter()
            .map(|x| (x.clone(), DiscreteMeasure::dirac(x.clone()).expect("point in range")))
            .collect();
        Kernel { transitions, window_edges: BTreeSet::new() }
    }

    pub fn get(&self, x: &Rational) -> Result<&DiscreteMeasure> {
        self.transitions
            .get(x)
            .ok_or_else(|| Error::MissingTransition { point: rational::format(x) })
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.transitions.contains_key(x)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Rational> {
        self.transitions.keys()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Rational, &DiscreteMeasure)> {
        self.transitions.iter()
    }

    pub fn window_edges(&self) -> &BTreeSet<Rational> {
        &self.window_edges
    }
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.transitions.len()))?;
        for (x, image) in &self.transitions {
            seq.serialize_element(&(rational::format(x), image))?;
        }
        seq.end()
    }
}

/// `σ∘μ`.
pub fn pushforward(sigma: &Kernel, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let mut out = Vec::new();
    for (x, w) in mu.atoms() {
        for (y, v) in sigma.get(x)?.atoms() {
            out.push((y.clone(), w * v));
        }
    }
    DiscreteMeasure::new(out)
}

/// Ordered belief grid with threshold `l`, indexed so that `l ∈ (z_0, z_1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    #[serde(with = "rational::serde_vec")]
    points: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    threshold: Rational,
    /// Position of `z_0` in `points`.
    #[serde(skip)]
    zero: usize,
    /// The points are a finite window of an infinite grid.
    truncated: bool,
}

impl Grid {
    pub fn new(points: Vec<Rational>, threshold: Rational, truncated: bool) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::DegenerateGrid("need at least two points".into()));
        }
        for p in &points {
            if p.is_negative() || *p > rational::one() {
                return Err(Error::PointOutOfRange(rational::format(p)));
            }
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DegenerateGrid("points must be strictly increasing".into()));
        }
        let zero = points
            .windows(2)
            .position(|w| w[0] < threshold && threshold <= w[1])
            .ok_or_else(|| {
                Error::DegenerateGrid(format!(
                    "threshold {} is not inside (z_first, z_last]",
                    rational::format(&threshold)
                ))
            })?;
        Ok(Grid { points, threshold, zero, truncated })
    }

    /// `{0, ε, 2ε, …, 1}`; `1/ε` must be an integer.
    pub fn epsilon(eps: &Rational, threshold: Rational) -> Result<Self> {
        if !eps.is_positive() || *eps > rational::one() || !(rational::one() / eps).is_integer() {
            return Err(Error::DegenerateGrid(format!(
                "step {} does not divide [0, 1]",
                rational::format(eps)
            )));
        }
        let n = (rational::one() / eps).to_integer();
        let n: usize = n.try_into().map_err(|_| Error::DegenerateGrid("step too small".into()))?;
        let points = (0..=n).map(|k| eps * rational::int(k as i64)).collect();
        Grid::new(points, threshold, false)
    }

    /// Posteriors reachable from prior 1/2 by repeated signals of precision `p`,
    /// `z_j = r^(j-1) / (1 + r^(j-1))` with `r = p/(1-p)`, so that `z_1 = 1/2`.
    /// Keeps indices `-depth ..= depth + 1`; the window cuts an infinite grid.
    pub fn binary_signal(p: &Rational, depth: usize) -> Result<Self> {
        if *p <= rational::ratio(1, 2) || *p >= rational::one() {
            return Err(Error::InvalidPrecision(rational::format(p)));
        }
        let r = p / (rational::one() - p);
        let mut points = Vec::new();
        for j in -(depth as i64)..=(depth as i64 + 1) {
            let e = j - 1;
            let pow = if e >= 0 {
                num_traits::pow(r.clone(), e as usize)
            } else {
                rational::one() / num_traits::pow(r.clone(), (-e) as usize)
            };
            points.push(&pow / (rational::one() + &pow));
        }
        Grid::new(points, rational::ratio(1, 2), true)
    }

    pub fn points(&self) -> &[Rational] {
        &self.points
    }

    pub fn threshold(&self) -> &Rational {
        &self.threshold
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// Smallest represented index `a`.
    pub fn first_index(&self) -> i64 {
        -(self.zero as i64)
    }

    /// Largest represented index `b`.
    pub fn last_index(&self) -> i64 {
        (self.points.len() - 1 - self.zero) as i64
    }

    pub fn z(&self, j: i64) -> Option<&Rational> {
        let i = j + self.zero as i64;
        if i < 0 {
            return None;
        }
        self.points.get(i as usize)
    }

    pub fn index_of(&self, x: &Rational) -> Option<i64> {
        self.points.binary_search(x).ok().map(|i| i as i64 - self.zero as i64)
    }
}

/// Simple random walk on the grid, absorbing at the two ends.
pub fn random_walk_kernel(g: &Grid) -> Result<Kernel> {
    let pts = g.points();
    if pts.len() < 2 {
        return Err(Error::DegenerateGrid("need at least two points".into()));
    }
    let mut rows = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let image = if i == 0 || i + 1 == pts.len() {
            DiscreteMeasure::dirac(pts[i].clone())?
        } else {
            let span = &pts[i + 1] - &pts[i - 1];
            DiscreteMeasure::new([
                (pts[i - 1].clone(), (&pts[i + 1] - &pts[i]) / &span),
                (pts[i + 1].clone(), (&pts[i] - &pts[i - 1]) / &span),
            ])?
        };
        rows.push((pts[i].clone(), image));
    }
    let mut k = Kernel::new(rows)?;
    if g.is_truncated() {
        for edge in [&pts[0], &pts[pts.len() - 1]] {
            if !edge.is_zero() && !edge.is_one() {
                k.window_edges.insert(edge.clone());
            }
        }
    }
    Ok(k)
}

/// Image of belief `y` under a signal that matches the state with probability `q`.
pub fn binary_signal_image(q: &Rational, y: &Rational) -> Result<DiscreteMeasure> {
    let one = rational::one();
    let high = y * q + (&one - y) * (&one - q);
    let low = &one - &high;
    let mut atoms = Vec::with_capacity(2);
    if high.is_positive() {
        atoms.push(((y * q) / &high, high.clone()));
    }
    if low.is_positive() {
        atoms.push(((y * (&one - q)) / &low, low.clone()));
    }
    DiscreteMeasure::new(atoms)
}

pub fn binary_signal_kernel(q: &Rational, support: &[Rational]) -> Result<Kernel> {
    if *q < rational::ratio(1, 2) || *q > rational::one() {
        return Err(Error::InvalidPrecision(rational::format(q)));
    }
    let rows = support
        .iter()
        .map(|y| Ok((y.clone(), binary_signal_image(q, y)?)))
        .collect::<Result<Vec<_>>>()?;
    Kernel::new(rows)
}

/// A triple `y' < y < y''` on which the binary-support criterion fails.
pub type Triple = (Rational, Rational, Rational);

/// Checks `σ∘δ_y ⪯_B σ∘(αδ_{y'} + (1-α)δ_{y''})` for every triple inside `support`.
pub fn is_blackwell_preserving(sigma: &Kernel, support: &[Rational]) -> Result<(bool, Option<Triple>)> {
    let mut pts: Vec<Rational> = support.to_vec();
    pts.sort();
    pts.dedup();
    for p in &pts {
        sigma.get(p)?;
    }
    let one = rational::one();
    for j in 0..pts.len() {
        for i in 0..j {
            for k in (j + 1)..pts.len() {
                let (lo, mid, hi) = (&pts[i], &pts[j], &pts[k]);
                let alpha = (hi - mid) / (hi - lo);
                let spread = sigma
                    .get(lo)?
                    .scale(&alpha)
                    .add(&sigma.get(hi)?.scale(&(&one - &alpha)));
                if !blackwell_leq(sigma.get(mid)?, &spread)? {
                    return Ok((false, Some((lo.clone(), mid.clone(), hi.clone()))));
                }
            }
        }
    }
    Ok((true, None))
}

/// Whether all interior support indices share one parity; endpoints count as both.
pub fn parity_class(g: &Grid, mu: &DiscreteMeasure) -> Result<bool> {
    let mut parity: Option<i64> = None;
    for x in mu.points() {
        let j = g.index_of(x).ok_or_else(|| Error::OffGridSupport { point: rational::format(x) })?;
        if j == g.first_index() || j == g.last_index() {
            continue;
        }
        let p = j.rem_euclid(2);
        match parity {
            Some(q) if q != p => return Ok(false),
            _ => parity = Some(p),
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSchedule {
    Stationary(Kernel),
    /// `σ_1, …, σ_{T-1}`.
    PerPeriod(Vec<Kernel>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Horizon {
    Finite(usize),
    /// Infinite horizon evaluated until the tail bound drops below `tol`,
    /// giving up after `max_periods`.
    Truncated { tol: Rational, max_periods: usize },
}

impl Horizon {
    pub fn finite(&self) -> Option<usize> {
        match self {
            Horizon::Finite(t) => Some(*t),
            Horizon::Truncated { .. } => None,
        }
    }
}

/// Initial belief law, transition kernels and horizon of the sender's martingale.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSpec {
    initial: DiscreteMeasure,
    kernels: KernelSchedule,
    horizon: Horizon,
    /// Reachable support of each period for finite horizons.
    supports: Vec<Vec<Rational>>,
}

impl MartingaleSpec {
    pub fn new(initial: DiscreteMeasure, kernels: KernelSchedule, horizon: Horizon) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::ZeroMass);
        }
        let periods = match &horizon {
            Horizon::Finite(0) => return Err(Error::InvalidSpec("horizon must be at least 1".into())),
            Horizon::Finite(t) => *t,
            Horizon::Truncated { max_periods: 0, .. } => {
                return Err(Error::InvalidSpec("max_periods must be at least 1".into()))
            }
            Horizon::Truncated { tol, .. } if !tol.is_positive() => {
                return Err(Error::InvalidSpec("tolerance must be positive".into()))
            }
            Horizon::Truncated { .. } => 1,
        };
        if let (KernelSchedule::PerPeriod(list), Horizon::Finite(t)) = (&kernels, &horizon) {
            if list.len() + 1 < *t {
                return Err(Error::InvalidSpec(format!(
                    "{} kernels given for horizon {t}",
                    list.len()
                )));
            }
        }
        if let (KernelSchedule::PerPeriod(_), Horizon::Truncated { .. }) = (&kernels, &horizon) {
            return Err(Error::InvalidSpec("an infinite horizon needs a stationary kernel".into()));
        }
        let mut spec = MartingaleSpec { initial, kernels, horizon, supports: Vec::new() };
        let mut current: Vec<Rational> = spec.initial.points().cloned().collect();
        spec.supports.push(current.clone());
        for t in 1..periods {
            let sigma = spec.kernel(t);
            let mut next = BTreeSet::new();
            for x in &current {
                if sigma.window_edges().contains(x) {
                    return Err(Error::DegenerateGrid(format!(
                        "window edge {} reachable in period {t}; widen the grid window",
                        rational::format(x)
                    )));
                }
                for y in sigma.get(x)?.points() {
                    next.insert(y.clone());
                }
            }
            current = next.into_iter().collect();
            spec.supports.push(current.clone());
        }
        Ok(spec)
    }

    pub fn initial(&self) -> &DiscreteMeasure {
        &self.initial
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn kernels(&self) -> &KernelSchedule {
        &self.kernels
    }

    /// `σ_t`, mapping period `t` to period `t + 1` (1-based).
    pub fn kernel(&self, t: usize) -> &Kernel {
        match &self.kernels {
            KernelSchedule::Stationary(k) => k,
            KernelSchedule::PerPeriod(list) => &list[(t.max(1) - 1).min(list.len() - 1)],
        }
    }

    /// Reachable support per period for finite horizons (index 0 is period 1).
    pub fn supports(&self) -> &[Vec<Rational>] {
        &self.supports
    }

    pub fn with_initial(&self, initial: DiscreteMeasure) -> Result<Self> {
        MartingaleSpec::new(initial, self.kernels.clone(), self.horizon.clone())
    }

    pub fn with_horizon(&self, horizon: Horizon) -> Result<Self> {
        MartingaleSpec::new(self.initial.clone(), self.kernels.clone(), horizon)
    }
}
