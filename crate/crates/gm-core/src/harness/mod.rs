//! Lemma verifiers, the renorming and indecomposability experiments, and
//! the report model.
//!
//! Reports are plain data: named quantities with a `measured`/`bound` kind
//! and provenance, and named checks with both sides and the slack rendered.
//! A verifier is bracket-sound: a check passes only when the inequality
//! holds with the adversarial bracket choice (upper bound on the large
//! side, lower bound on the small side). Toy relaxations are recorded as
//! quantities named `relaxation.*` — an experiment never weakens a check
//! silently.

mod hi;
mod lemmas;
mod theorem11;

pub use hi::{exp_hi, HiArtifacts, HiConfig};
pub use lemmas::{
    corollary4_check, lemma3_check, lemma5_check, lemma8_check, lemma9_check, GRef,
};
pub use theorem11::{exp_theorem11, Theorem11Artifacts, Theorem11Config};

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::value::Val;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantityKind {
    Measured,
    Bound,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: String,
    pub kind: QuantityKind,
    pub provenance: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub slack: String,
    pub pass: bool,
}

/// The report every verifier and experiment emits.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub params: BTreeMap<String, String>,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn new(id: &str, seed: u64) -> Self {
        ExperimentReport {
            id: id.to_string(),
            params: BTreeMap::new(),
            quantities: Vec::new(),
            checks: Vec::new(),
            seed,
            runtime_ms: 0,
        }
    }

    pub fn param(&mut self, k: &str, v: impl ToString) {
        self.params.insert(k.to_string(), v.to_string());
    }

    pub fn measured(&mut self, name: &str, value: impl ToString, provenance: &str) {
        self.quantities.push(Quantity {
            name: name.to_string(),
            value: value.to_string(),
            kind: QuantityKind::Measured,
            provenance: provenance.to_string(),
        });
    }

    pub fn bound(&mut self, name: &str, value: impl ToString, provenance: &str) {
        self.quantities.push(Quantity {
            name: name.to_string(),
            value: value.to_string(),
            kind: QuantityKind::Bound,
            provenance: provenance.to_string(),
        });
    }

    /// Record a toy relaxation; honesty requires these to be loud.
    pub fn relaxation(&mut self, stage: &str, detail: impl ToString) {
        self.quantities.push(Quantity {
            name: alloc::format!("relaxation.{stage}"),
            value: detail.to_string(),
            kind: QuantityKind::Bound,
            provenance: "toy relaxation, recorded explicitly".to_string(),
        });
    }

    /// Check `lhs <= rhs` with exact values; slack is `rhs - lhs`.
    pub fn check_le(&mut self, name: &str, lhs: &Val, rhs: &Val) -> bool {
        let slack = rhs.sub(lhs);
        let pass = slack >= Val::zero();
        self.checks.push(Check {
            name: name.to_string(),
            lhs: lhs.canonical(),
            rhs: rhs.canonical(),
            slack: slack.canonical(),
            pass,
        });
        pass
    }

    /// Check `lhs < rhs` strictly.
    pub fn check_lt(&mut self, name: &str, lhs: &Val, rhs: &Val) -> bool {
        let slack = rhs.sub(lhs);
        let pass = slack > Val::zero();
        self.checks.push(Check {
            name: name.to_string(),
            lhs: lhs.canonical(),
            rhs: rhs.canonical(),
            slack: slack.canonical(),
            pass,
        });
        pass
    }

    /// Check `lhs >= rhs`.
    pub fn check_ge(&mut self, name: &str, lhs: &Val, rhs: &Val) -> bool {
        let slack = lhs.sub(rhs);
        let pass = slack >= Val::zero();
        self.checks.push(Check {
            name: name.to_string(),
            lhs: lhs.canonical(),
            rhs: rhs.canonical(),
            slack: slack.canonical(),
            pass,
        });
        pass
    }

    pub fn check_named(&mut self, name: &str, lhs: &str, rhs: &str, slack: &str, pass: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            slack: slack.to_string(),
            pass,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}
