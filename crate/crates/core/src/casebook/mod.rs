//! Reproducible worked cases. Each case builds its instance, runs the solvers
//! and reports computed quantities next to the values they are expected to hit.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::rational::{self, Rational};

mod counterexample;
mod example1;
mod example2;
mod lemmas;
mod prop1;

pub use counterexample::counterexample_nonblackwell;
pub use example1::{example1, example1_cutoffs, example1_regime, Regime};
pub use example2::{
    example2, example2_alpha_star, example2_gamma, example2_regime, example2_xhat, AlphaRegime,
    Example2Params,
};
pub use lemmas::lemma_property_suite;
pub use prop1::{prop1_check, wait_constant};

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// Published reference value.
    Reference,
    /// Obtained from an independent computation.
    Derived,
    /// Holds by construction.
    Trivial,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Exact(Rational),
    Decimal(f64),
    Interval(Rational, Rational),
    Text(String),
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Quantity::Exact(r) => s.serialize_str(&rational::format(r)),
            Quantity::Decimal(x) => s.serialize_f64(*x),
            Quantity::Interval(lo, hi) => {
                [rational::format(lo), rational::format(hi)].serialize(s)
            }
            Quantity::Text(t) => s.serialize_str(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub source: Source,
    /// Absent for exact comparisons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case_id: String,
    pub parameters: BTreeMap<String, String>,
    pub computed: BTreeMap<String, Quantity>,
    pub expectations: Vec<Expectation>,
    pub pass: bool,
    /// Wall time; left out of the JSON so reports stay byte-identical.
    #[serde(skip)]
    pub runtime: Duration,
}

impl CaseReport {
    pub(crate) fn new(case_id: &str) -> Self {
        CaseReport {
            case_id: case_id.to_string(),
            parameters: BTreeMap::new(),
            computed: BTreeMap::new(),
            expectations: Vec::new(),
            pass: true,
            runtime: Duration::ZERO,
        }
    }

    pub(crate) fn param(&mut self, name: &str, value: impl ToString) {
        self.parameters.insert(name.to_string(), value.to_string());
    }

    pub(crate) fn exact_value(&mut self, name: &str, r: &Rational) {
        self.computed.insert(name.to_string(), Quantity::Exact(r.clone()));
    }

    pub(crate) fn record(&mut self, name: &str, q: Quantity) {
        self.computed.insert(name.to_string(), q);
    }

    fn push(&mut self, e: Expectation) {
        self.pass &= e.pass;
        self.expectations.push(e);
    }

    pub(crate) fn expect_exact(&mut self, name: &str, expected: &Rational, observed: &Rational, source: Source) {
        self.push(Expectation {
            name: name.to_string(),
            expected: rational::format(expected),
            observed: rational::format(observed),
            source,
            tolerance: None,
            pass: expected == observed,
        });
    }

    pub(crate) fn expect_near(&mut self, name: &str, expected: f64, observed: f64, tol: f64, source: Source) {
        self.push(Expectation {
            name: name.to_string(),
            expected: format!("{expected}"),
            observed: format!("{observed}"),
            source,
            tolerance: Some(tol),
            pass: (expected - observed).abs() <= tol,
        });
    }

    pub(crate) fn expect_that(&mut self, name: &str, expected: &str, observed: &str, pass: bool, source: Source) {
        self.push(Expectation {
            name: name.to_string(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            source,
            tolerance: None,
            pass,
        });
    }

    pub fn expectation(&self, name: &str) -> Option<&Expectation> {
        self.expectations.iter().find(|e| e.name == name)
    }

    pub(crate) fn timed<F: FnOnce(&mut CaseReport) -> crate::error::Result<()>>(
        case_id: &str,
        body: F,
    ) -> crate::error::Result<CaseReport> {
        let start = Instant::now();
        let mut report = CaseReport::new(case_id);
        body(&mut report)?;
        report.runtime = start.elapsed();
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn pass_is_conjunction() {
        let mut r = CaseReport::new("t");
        r.expect_exact("a", &ratio(1, 2), &ratio(2, 4), Source::Trivial);
        assert!(r.pass);
        r.expect_near("b", 0.5, 0.52, 0.01, Source::Derived);
        assert!(!r.pass);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"expected\":\"1/2\""));
        assert!(!json.contains("runtime"));
    }
}
