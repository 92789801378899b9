//! Refuter output: a constant-size list of candidate counterexamples.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::decider::DeciderHandle;
use crate::error::Result;
use crate::oracle::{Language, OracleBudget};

/// Ground truth against the decider's answer for one emitted string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub ground_truth: bool,
    pub answer: bool,
    pub counterexample: bool,
}

impl Verdict {
    pub fn new(ground_truth: bool, answer: bool) -> Self {
        Self { ground_truth, answer, counterexample: ground_truth != answer }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub string: BitString,
    pub language: Language,
    /// What the refuter claims this string is, e.g. `padded-shortest-violation`.
    pub role: String,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleList {
    pub entries: Vec<Entry>,
    /// Declared bound on the number of entries.
    pub bound: usize,
    /// How the refuter terminated.
    pub outcome: String,
}

impl CounterexampleList {
    pub fn new(bound: usize, outcome: impl Into<String>) -> Self {
        Self { entries: Vec::new(), bound, outcome: outcome.into() }
    }

    pub fn push(&mut self, string: BitString, language: Language, role: impl Into<String>) {
        self.entries.push(Entry { string, language, role: role.into(), verdict: None });
        debug_assert!(self.entries.len() <= self.bound, "list exceeds its declared bound");
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn strings(&self) -> impl Iterator<Item = &BitString> {
        self.entries.iter().map(|e| &e.string)
    }

    /// Fills every entry's verdict from the exact oracle and `decider` under its seed.
    pub fn verify(&mut self, decider: &mut DeciderHandle, budget: &OracleBudget) -> Result<()> {
        for e in &mut self.entries {
            let truth = e.language.member(&e.string, budget)?;
            let answer = decider.decide(&e.string);
            e.verdict = Some(Verdict::new(truth, answer));
        }
        Ok(())
    }

    /// Whether some verified entry is a counterexample.
    pub fn has_counterexample(&self) -> bool {
        self.entries.iter().any(|e| e.verdict.is_some_and(|v| v.counterexample))
    }
}
