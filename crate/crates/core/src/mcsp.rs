//! One-sided streaming search for a small circuit computing a truth table.
//!
//! Bits arrive one at a time. The stream keeps one circuit per set bit of the
//! position counter, each responsible for a dyadic block of the bits seen so far.
//! A new bit starts a single-point circuit which is merged upward through the
//! set slots like a carry. Every merge result is checked on its whole range
//! before it is kept, so a faulty merge oracle can only cause a NO.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{BooleanCircuit, Gate, GateOp, Wire};
use crate::error::{Error, Result};
use crate::instance::TruthTable;
use crate::oracle::{merge_target, MergeCache};

/// Largest arity handled (truth tables up to 64 bits).
pub const MAX_STREAM_ARITY: usize = 6;

/// A uniformly random circuit with exactly `size` gates over the full basis.
pub fn random_circuit(rng: &mut impl Rng, n: usize, size: usize) -> BooleanCircuit {
    let gates = (0..size)
        .map(|j| {
            let avail = (2 + n + j) as u64;
            Gate {
                op: GateOp::new(rng.random_range(0..16)),
                a: Wire::from_code(rng.random_range(0..avail), n),
                b: Wire::from_code(rng.random_range(0..avail), n),
            }
        })
        .collect();
    let output = if size == 0 { Wire::Const(rng.random()) } else { Wire::Gate(size as u32 - 1) };
    BooleanCircuit::new(n, gates, output).expect("operands refer backwards")
}

/// The circuit that is `value` at point `z` (1-based) and 0 elsewhere.
pub fn point_circuit(n: usize, z: u64, value: bool) -> BooleanCircuit {
    if !value {
        return BooleanCircuit::constant(n, false);
    }
    let t = z - 1;
    let mut c = BooleanCircuit::builder(n);
    let literal = |c: &mut BooleanCircuit, i: usize| {
        let bit = (t >> (n - 1 - i)) & 1 == 1;
        if bit {
            Wire::Input(i as u32)
        } else {
            c.push_gate(GateOp::NOT_A, Wire::Input(i as u32), Wire::Const(false))
        }
    };
    if n == 0 {
        return BooleanCircuit::constant(0, true);
    }
    let mut acc = literal(&mut c, 0);
    for i in 1..n {
        let bit = (t >> (n - 1 - i)) & 1 == 1;
        // Fold negation into the gate: AND or AND-with-negated-second-operand.
        let op = if bit { GateOp::AND } else { GateOp::ANDNOT_B };
        acc = c.push_gate(op, acc, Wire::Input(i as u32));
    }
    c.set_output(acc);
    c
}

/// What a merge oracle call returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Reported "no such circuit" although one exists.
    Refused,
    /// A gate's operation was replaced.
    GateFlipped,
    /// A random circuit of size at most `s`.
    Random,
    /// The right function, one gate too large.
    Oversized,
}

/// Circuit-Min-Merge with an optional fault channel.
#[derive(Debug)]
pub struct MergeOracle {
    cache: MergeCache,
    fault_rate: f64,
    rng: ChaCha8Rng,
    calls: u64,
    corruptions: u64,
}

impl MergeOracle {
    pub fn exact() -> Self {
        Self::faulty(0.0, 0)
    }

    pub fn faulty(fault_rate: f64, seed: u64) -> Self {
        Self { cache: MergeCache::new(), fault_rate, rng: ChaCha8Rng::seed_from_u64(seed), calls: 0, corruptions: 0 }
    }

    /// Restarts the fault channel; the memo of exact answers is kept.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.calls = 0;
        self.corruptions = 0;
    }

    pub fn fault_rate(&self) -> f64 {
        self.fault_rate
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn corruptions(&self) -> u64 {
        self.corruptions
    }

    pub fn merge(
        &mut self,
        c1: &BooleanCircuit,
        c2: &BooleanCircuit,
        range: (u64, u64, u64),
        s: usize,
    ) -> Option<BooleanCircuit> {
        self.calls += 1;
        let (alpha, beta, gamma) = range;
        let exact = self.cache.merge(c1, c2, alpha, beta, gamma, s);
        if self.fault_rate <= 0.0 || !self.rng.random_bool(self.fault_rate.min(1.0)) {
            return exact;
        }
        self.corruptions += 1;
        let n = c1.arity();
        let kind = [Corruption::Refused, Corruption::GateFlipped, Corruption::Random, Corruption::Oversized]
            [self.rng.random_range(0..4)];
        match (kind, exact) {
            (Corruption::Refused, _) => None,
            (Corruption::GateFlipped, Some(c)) if c.size() > 0 => {
                let mut gates = c.gates().to_vec();
                let j = self.rng.random_range(0..gates.len());
                gates[j].op = GateOp::new(gates[j].op.id() ^ self.rng.random_range(1..16));
                Some(BooleanCircuit::new(n, gates, c.output()).expect("same wiring"))
            }
            (Corruption::Oversized, Some(c)) => {
                let mut gates = c.gates().to_vec();
                gates.push(Gate { op: GateOp::AND, a: c.output(), b: c.output() });
                Some(BooleanCircuit::new(n, gates, Wire::Gate(c.size() as u32)).expect("appended gate"))
            }
            _ => {
                let size = self.rng.random_range(0..=s);
                Some(random_circuit(&mut self.rng, n, size))
            }
        }
    }
}

/// True iff `d` has size at most `s` and agrees with `expected` on `[alpha, gamma]`,
/// where `expected` bit `z - alpha` is the value at point `z`.
pub fn verify_merge(d: &BooleanCircuit, alpha: u64, gamma: u64, expected: &[bool], s: usize) -> bool {
    d.size() <= s
        && expected.len() as u64 == gamma - alpha + 1
        && (alpha..=gamma).zip(expected).all(|(z, &e)| d.eval_index(z - 1) == e)
}

/// Why a run answered NO.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeFailure {
    pub position: u64,
    pub level: usize,
    pub range: (u64, u64, u64),
    /// The oracle returned no circuit.
    pub refused: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    /// `merges[k]`: merges of slot `k`.
    pub merges: Vec<u64>,
    pub oracle_calls: u64,
    /// Most circuits held at once (set slots plus the one being carried).
    pub peak_retained: usize,
    /// Largest total description length, in gates, held at once.
    pub peak_retained_gates: usize,
}

impl Accounting {
    /// The per-level, total-call and retention bounds for a stream of `2^n` bits.
    pub fn within_bounds(&self, n: usize) -> bool {
        let big_n = 1u64 << n;
        self.merges.iter().enumerate().all(|(k, &m)| m <= big_n >> k)
            && self.oracle_calls <= big_n * n as u64
            && self.peak_retained <= n + 1
    }
}

#[derive(Debug)]
pub struct StreamState {
    n: usize,
    s: usize,
    /// `slots[k]` is `Some` exactly when counter bit `k` is set.
    slots: Vec<Option<BooleanCircuit>>,
    position: u64,
    accounting: Accounting,
    failure: Option<MergeFailure>,
}

impl StreamState {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if n > MAX_STREAM_ARITY {
            return Err(Error::Config(format!("streams of 2^{n} bits exceed the supported 2^{MAX_STREAM_ARITY}")));
        }
        Ok(Self {
            n,
            s,
            slots: vec![None; n + 1],
            position: 0,
            accounting: Accounting { merges: vec![0; n + 1], ..Accounting::default() },
            failure: None,
        })
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn counter_bits(&self) -> Vec<bool> {
        self.slots.iter().map(Option::is_some).collect()
    }

    /// Slot `k`'s circuit; the constant-0 circuit when the counter bit is clear.
    pub fn slot(&self, k: usize) -> BooleanCircuit {
        self.slots[k].clone().unwrap_or_else(|| BooleanCircuit::constant(self.n, false))
    }

    /// The range of points slot `k` is responsible for, if set.
    pub fn slot_range(&self, k: usize) -> Option<(u64, u64)> {
        self.slots[k].as_ref()?;
        let above: u64 = (k + 1..=self.n).filter(|&l| self.slots[l].is_some()).map(|l| 1u64 << l).sum();
        Some((above + 1, above + (1 << k)))
    }

    pub fn failure(&self) -> Option<&MergeFailure> {
        self.failure.as_ref()
    }

    pub fn accounting(&self) -> &Accounting {
        &self.accounting
    }

    fn retained(&self) -> (usize, usize) {
        let set = self.slots.iter().flatten();
        (set.clone().count(), set.map(BooleanCircuit::size).sum())
    }

    fn note_retained(&mut self, carried: &BooleanCircuit) {
        let (count, gates) = self.retained();
        self.accounting.peak_retained = self.accounting.peak_retained.max(count + 1);
        self.accounting.peak_retained_gates = self.accounting.peak_retained_gates.max(gates + carried.size());
    }

    /// Consumes the next bit. Returns `false` once the run has answered NO.
    pub fn push(&mut self, bit: bool, oracle: &mut MergeOracle) -> bool {
        if self.failure.is_some() {
            return false;
        }
        assert!(self.position < 1 << self.n, "stream longer than the truth table");
        let z = self.position + 1;
        let mut d = point_circuit(self.n, z, bit);
        let mut low = z;
        for k in 0..=self.n {
            self.note_retained(&d);
            let Some(ck) = self.slots[k].take() else {
                self.slots[k] = Some(d);
                self.position = z;
                return true;
            };
            let (alpha, beta, gamma) = (low - (1 << k), low, z);
            self.accounting.merges[k] += 1;
            self.accounting.oracle_calls += 1;
            let merged = oracle.merge(&ck, &d, (alpha, beta, gamma), self.s);
            let ok = merged.as_ref().is_some_and(|m| {
                let expected: Vec<bool> = (alpha..=gamma)
                    .map(|p| if p < beta { ck.eval_index(p - 1) } else { d.eval_index(p - 1) })
                    .collect();
                verify_merge(m, alpha, gamma, &expected, self.s)
            });
            if !ok {
                self.failure = Some(MergeFailure {
                    position: z,
                    level: k,
                    range: (alpha, beta, gamma),
                    refused: merged.is_none(),
                });
                return false;
            }
            d = merged.expect("checked above");
            low = alpha;
        }
        unreachable!("the counter has a free bit while fewer than 2^n bits are consumed")
    }

    /// The released circuit once all `2^n` bits are in, or `None` for NO.
    pub fn finish(&self) -> Option<BooleanCircuit> {
        if self.failure.is_some() || self.position != 1 << self.n {
            return None;
        }
        let c = self.slots[self.n].as_ref().expect("full counter sets the top slot");
        (c.size() <= self.s).then(|| c.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamOutcome {
    /// `None` is the answer NO.
    pub circuit: Option<BooleanCircuit>,
    pub failure: Option<MergeFailure>,
    pub accounting: Accounting,
    pub corruptions: u64,
}

impl StreamOutcome {
    pub fn is_no(&self) -> bool {
        self.circuit.is_none()
    }
}

/// Runs the stream over `table` with the oracle's fault channel seeded by `seed`.
pub fn stream_search_mcsp(table: &TruthTable, s: usize, oracle: &mut MergeOracle, seed: u64) -> Result<StreamOutcome> {
    oracle.reseed(seed);
    let mut state = StreamState::new(table.arity(), s)?;
    for &bit in table.bits().bits() {
        if !state.push(bit, oracle) {
            break;
        }
    }
    Ok(StreamOutcome {
        circuit: state.finish(),
        failure: state.failure.clone(),
        accounting: state.accounting.clone(),
        corruptions: oracle.corruptions(),
    })
}

/// Whether `c` has size at most `s` and computes `table` everywhere.
pub fn computes(c: &BooleanCircuit, table: &TruthTable, s: usize) -> bool {
    c.size() <= s && c.arity() == table.arity() && (0..table.len() as u64).all(|t| c.eval_index(t) == table.get(t))
}

/// The care/value pair a merge over `range` must match, for inspection.
pub fn merge_spec(c1: &BooleanCircuit, c2: &BooleanCircuit, range: (u64, u64, u64)) -> (u64, u64) {
    merge_target(c1, c2, range.0, range.1, range.2)
}
