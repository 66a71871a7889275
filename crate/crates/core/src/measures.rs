//! Finitely supported positive measures on [0, 1] and their order relations.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::{self, Rational};

/// Atoms are kept sorted by point, merged, and free of zero weights, so two
/// measures are equal exactly when their atom lists are.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct DiscreteMeasure {
    atoms: Vec<(Rational, Rational)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    FosdKernel,
    DominationTransport,
}

/// Transport plan certifying an order relation: `(from, to, mass)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderWitness {
    pub kind: WitnessKind,
    pub transport: Vec<(Rational, Rational, Rational)>,
}

impl Serialize for OrderWitness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            kind: WitnessKind,
            transport: Vec<[String; 3]>,
        }
        Repr {
            kind: self.kind,
            transport: self
                .transport
                .iter()
                .map(|(a, b, m)| [rational::format(a), rational::format(b), rational::format(m)])
                .collect(),
        }
        .serialize(s)
    }
}

fn check_point(x: &Rational) -> Result<()> {
    if x.is_negative() || *x > rational::one() {
        return Err(Error::PointOutOfRange(rational::format(x)));
    }
    Ok(())
}

impl DiscreteMeasure {
    pub fn zero() -> Self {
        DiscreteMeasure::default()
    }

    /// Builds a measure from `(point, weight)` pairs in any order.
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let mut list: Vec<(Rational, Rational)> = Vec::new();
        for (x, w) in atoms {
            check_point(&x)?;
            if w.is_negative() {
                return Err(Error::NegativeWeight {
                    point: rational::format(&x),
                    weight: rational::format(&w),
                });
            }
            list.push((x, w));
        }
        Ok(Self::normalize(list))
    }

    fn normalize(mut list: Vec<(Rational, Rational)>) -> Self {
        list.sort_by(|a, b| a.0.cmp(&b.0));
        let mut atoms: Vec<(Rational, Rational)> = Vec::with_capacity(list.len());
        for (x, w) in list {
            match atoms.last_mut() {
                Some((y, v)) if *y == x => *v += w,
                _ => atoms.push((x, w)),
            }
        }
        atoms.retain(|(_, w)| !w.is_zero());
        DiscreteMeasure { atoms }
    }

    pub fn dirac(x: Rational) -> Result<Self> {
        Self::new([(x, rational::one())])
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn points(&self) -> impl Iterator<Item = &Rational> {
        self.atoms.iter().map(|(x, _)| x)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight_at(&self, x: &Rational) -> Rational {
        match self.atoms.binary_search_by(|(y, _)| y.cmp(x)) {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn total_mass(&self) -> Rational {
        self.atoms.iter().fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    /// Σ x·w, the unnormalized first moment.
    pub fn moment(&self) -> Rational {
        self.atoms.iter().fold(Rational::zero(), |acc, (x, w)| acc + x * w)
    }

    pub fn barycenter(&self) -> Result<Rational> {
        let m = self.total_mass();
        if m.is_zero() {
            return Err(Error::ZeroMass);
        }
        Ok(self.moment() / m)
    }

    pub fn min_point(&self) -> Option<&Rational> {
        self.atoms.first().map(|(x, _)| x)
    }

    pub fn max_point(&self) -> Option<&Rational> {
        self.atoms.last().map(|(x, _)| x)
    }

    pub fn add(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let mut list = self.atoms.clone();
        list.extend(other.atoms.iter().cloned());
        Self::normalize(list)
    }

    pub fn scale(&self, c: &Rational) -> DiscreteMeasure {
        assert!(!c.is_negative(), "negative scale factor");
        Self::normalize(self.atoms.iter().map(|(x, w)| (x.clone(), w * c)).collect())
    }

    pub fn subtract(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        let mut list = self.atoms.clone();
        for (x, w) in &other.atoms {
            match list.binary_search_by(|(y, _)| y.cmp(x)) {
                Ok(i) if list[i].1 >= *w => list[i].1 -= w,
                _ => return Err(Error::NotSubmeasure { point: rational::format(x) }),
            }
        }
        Ok(Self::normalize(list))
    }

    /// Setwise `self ≤ other`.
    pub fn leq(&self, other: &DiscreteMeasure) -> bool {
        self.atoms.iter().all(|(x, w)| other.weight_at(x) >= *w)
    }

    /// Mass in `[x, 1]`.
    pub fn tail(&self, x: &Rational) -> Rational {
        self.atoms
            .iter()
            .filter(|(y, _)| y >= x)
            .fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    /// `∫ (y - k)₊ dμ(y)`.
    pub fn stop_loss(&self, k: &Rational) -> Rational {
        self.atoms
            .iter()
            .filter(|(y, _)| y > k)
            .fold(Rational::zero(), |acc, (y, w)| acc + (y - k) * w)
    }

    /// `∫ (k - y)₊ dμ(y)`, the integrated CDF at `k`.
    pub fn integrated_cdf(&self, k: &Rational) -> Rational {
        self.atoms
            .iter()
            .filter(|(y, _)| y < k)
            .fold(Rational::zero(), |acc, (y, w)| acc + (k - y) * w)
    }

    /// Sub-measure of mass `m` sitting on the highest points.
    pub fn top_mass(&self, m: &Rational) -> Result<DiscreteMeasure> {
        let total = self.total_mass();
        if m.is_negative() || *m > total {
            return Err(Error::MassMismatch(format!(
                "requested top mass {} of a measure with mass {}",
                rational::format(m),
                rational::format(&total)
            )));
        }
        let mut left = m.clone();
        let mut out = Vec::new();
        for (x, w) in self.atoms.iter().rev() {
            if left.is_zero() {
                break;
            }
            let take = rational::min(w, &left);
            left -= &take;
            out.push((x.clone(), take));
        }
        Ok(Self::normalize(out))
    }

    pub fn to_f64_atoms(&self) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .map(|(x, w)| (rational::to_f64(x), rational::to_f64(w)))
            .collect()
    }
}

impl fmt::Display for DiscreteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("0");
        }
        for (i, (x, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}·δ({})", rational::format(w), rational::format(x))?;
        }
        Ok(())
    }
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.atoms.len()))?;
        for (x, w) in &self.atoms {
            seq.serialize_element(&[rational::format(x), rational::format(w)])?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<(String, String)>::deserialize(d)?;
        let mut atoms = Vec::with_capacity(raw.len());
        for (x, w) in raw {
            let x = rational::parse(&x).map_err(D::Error::custom)?;
            let w = rational::parse(&w).map_err(D::Error::custom)?;
            atoms.push((x, w));
        }
        DiscreteMeasure::new(atoms).map_err(D::Error::custom)
    }
}

fn union_points(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Vec<Rational> {
    let mut pts: Vec<Rational> = a.points().chain(b.points()).cloned().collect();
    pts.sort();
    pts.dedup();
    pts
}

fn require_equal_mass(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<()> {
    let (ma, mb) = (a.total_mass(), b.total_mass());
    if ma != mb {
        return Err(Error::MassMismatch(format!(
            "{} vs {}",
            rational::format(&ma),
            rational::format(&mb)
        )));
    }
    Ok(())
}

/// `λ ⪯_F μ` for equal masses: every upper tail of μ carries at least as much as λ's.
pub fn fosd_leq(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<bool> {
    require_equal_mass(lambda, mu)?;
    Ok(tail_dominates(lambda, mu))
}

/// Tail comparison without the equal-mass requirement: `μ([x,1]) ≥ λ([x,1])` for all x.
pub fn tail_dominates(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> bool {
    union_points(lambda, mu).iter().all(|x| mu.tail(x) >= lambda.tail(x))
}

/// Quantile coupling of `λ ⪯_F μ`: each unit of λ moves to the matching unit of μ.
pub fn fosd_witness(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<Option<OrderWitness>> {
    if !fosd_leq(lambda, mu)? {
        return Ok(None);
    }
    let mut transport = Vec::new();
    let mut src = lambda.atoms().to_vec();
    let mut dst = mu.atoms().to_vec();
    let (mut i, mut j) = (0, 0);
    while i < src.len() && j < dst.len() {
        let m = rational::min(&src[i].1, &dst[j].1);
        transport.push((src[i].0.clone(), dst[j].0.clone(), m.clone()));
        src[i].1 -= &m;
        dst[j].1 -= &m;
        if src[i].1.is_zero() {
            i += 1;
        }
        if dst[j].1.is_zero() {
            j += 1;
        }
    }
    Ok(Some(OrderWitness { kind: WitnessKind::FosdKernel, transport }))
}

/// `λ ⪯_B μ`: μ is a mean-preserving spread of λ.
pub fn blackwell_leq(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<bool> {
    require_equal_mass(lambda, mu)?;
    if lambda.is_empty() {
        return Ok(true);
    }
    let (a, b) = (lambda.moment(), mu.moment());
    if a != b {
        let m = lambda.total_mass();
        return Err(Error::MeanMismatch {
            left: rational::format(&(a / &m)),
            right: rational::format(&(b / m)),
        });
    }
    // Both integrated CDFs are piecewise linear with kinks at support points.
    Ok(union_points(lambda, mu)
        .iter()
        .all(|k| lambda.integrated_cdf(k) <= mu.integrated_cdf(k)))
}

/// `λ ⪯_D μ`, decided as feasibility of a one-step upward-mean transport of λ into μ.
pub fn dominates(
    lambda: &DiscreteMeasure,
    mu: &DiscreteMeasure,
) -> Result<(bool, Option<OrderWitness>)> {
    let (ml, mm) = (lambda.total_mass(), mu.total_mass());
    if ml > mm {
        return Err(Error::MassMismatch(format!(
            "dominated measure has mass {} > {}",
            rational::format(&ml),
            rational::format(&mm)
        )));
    }
    if lambda.is_empty() {
        return Ok((true, Some(OrderWitness { kind: WitnessKind::DominationTransport, transport: vec![] })));
    }
    let (nx, nz) = (lambda.len(), mu.len());
    let var = |i: usize, j: usize| i * nz + j;
    let mut lp = LinearProgram::new(nx * nz);
    for (i, (x, w)) in lambda.atoms().iter().enumerate() {
        lp.add((0..nz).map(|j| (var(i, j), rational::one())).collect(), Relation::Eq, w.clone());
        let lift: Vec<_> = mu
            .atoms()
            .iter()
            .enumerate()
            .map(|(j, (z, _))| (var(i, j), z - x))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        lp.add(lift, Relation::Ge, Rational::zero());
    }
    for (j, (_, w)) in mu.atoms().iter().enumerate() {
        lp.add((0..nx).map(|i| (var(i, j), rational::one())).collect(), Relation::Le, w.clone());
    }
    match lp.solve() {
        LpOutcome::Optimal { values, .. } => {
            let mut transport = Vec::new();
            for (i, (x, _)) in lambda.atoms().iter().enumerate() {
                for (j, (z, _)) in mu.atoms().iter().enumerate() {
                    let m = &values[var(i, j)];
                    if !m.is_zero() {
                        transport.push((x.clone(), z.clone(), m.clone()));
                    }
                }
            }
            Ok((true, Some(OrderWitness { kind: WitnessKind::DominationTransport, transport })))
        }
        _ => Ok((false, None)),
    }
}

/// Increasing convex order test by stop-loss transforms; kept as a cross-check on
/// [`dominates`] for equal masses.
pub fn stop_loss_leq(lambda: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<bool> {
    require_equal_mass(lambda, mu)?;
    let mut ks = union_points(lambda, mu);
    ks.insert(0, Rational::zero());
    Ok(ks.iter().all(|k| lambda.stop_loss(k) <= mu.stop_loss(k)))
}
