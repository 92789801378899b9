//! Candidate deciders under refutation.
//!
//! A [`DeciderHandle`] wraps an [`Algorithm`] with a default seed, a per-call
//! step budget and an append-only transcript of every query. Algorithms that
//! can describe themselves as circuits at a given input length advertise it
//! through [`Algorithm::circuit`]; the others are black boxes.
//!
//! The sampling heuristics in the catalog take their seed as a parameter: for
//! a fixed seed they are deterministic algorithms, and their answer frequency
//! over seeds can sit at one half, so they are not flagged as bounded-gap
//! randomized deciders. [`DeciderHandle::with_noise`] produces genuinely
//! randomized deciders with a gap whenever the flip probability is below 1/3.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{mix64, BitString};
use crate::circuit::{BooleanCircuit, GateOp, Wire};
use crate::compile::{apply, synthesize};
use crate::error::{Error, Result};
use crate::instance::{Decoded, Formula3CNF, Instance};
use crate::oracle::{Language, OracleBudget};

pub const DEFAULT_STEP_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutOfSteps;

/// Counts work done by one call.
#[derive(Debug, Clone)]
pub struct StepMeter {
    used: u64,
    limit: u64,
}

impl StepMeter {
    pub fn new(limit: u64) -> Self {
        Self { used: 0, limit }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    pub fn charge(&mut self, steps: u64) -> Result<(), OutOfSteps> {
        self.used = self.used.saturating_add(steps);
        if self.used > self.limit {
            Err(OutOfSteps)
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }
}

pub trait Algorithm: Send + Sync {
    fn decide(&self, x: &BitString, seed: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps>;

    fn randomized(&self) -> bool {
        false
    }

    /// A circuit agreeing with `decide(·, seed)` on all length-`n` strings, if
    /// this algorithm exposes one.
    fn circuit(&self, _n: usize, _seed: u64) -> Option<Result<BooleanCircuit>> {
        None
    }
}

/// Circuit obtained by tabulating `decide` at length `n`.
pub fn tabulated_circuit(alg: &dyn Algorithm, n: usize, seed: u64) -> Result<BooleanCircuit> {
    synthesize(n, |t| alg.decide(&BitString::from_u64(t, n), seed, &mut StepMeter::unlimited()).unwrap_or(false))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub input: BitString,
    pub output: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

#[derive(Clone)]
pub struct DeciderHandle {
    id: String,
    language: Language,
    algorithm: Arc<dyn Algorithm>,
    seed: u64,
    step_budget: u64,
    recording: bool,
    transcript: Transcript,
    calls: u64,
}

impl fmt::Debug for DeciderHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeciderHandle")
            .field("id", &self.id)
            .field("language", &self.language)
            .field("seed", &self.seed)
            .field("calls", &self.calls)
            .finish()
    }
}

impl DeciderHandle {
    pub fn new(id: impl Into<String>, language: Language, algorithm: Arc<dyn Algorithm>) -> Self {
        Self {
            id: id.into(),
            language,
            algorithm,
            seed: 0,
            step_budget: DEFAULT_STEP_BUDGET,
            recording: true,
            transcript: Transcript::default(),
            calls: 0,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_step_budget(mut self, steps: u64) -> Self {
        self.step_budget = steps;
        self
    }

    /// Turns transcript recording on or off; call counts are kept either way.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    pub fn randomized(&self) -> bool {
        self.algorithm.randomized()
    }

    pub fn algorithm(&self) -> &Arc<dyn Algorithm> {
        &self.algorithm
    }

    pub fn has_circuit(&self) -> bool {
        self.algorithm.circuit(0, self.seed).is_some()
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Transcript {
        std::mem::take(&mut self.transcript)
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    /// Answer on `x` under the handle's seed.
    pub fn decide(&mut self, x: &BitString) -> bool {
        self.decide_with_seed(x, self.seed)
    }

    /// Deterministic in `(x, seed)`. Running out of steps yields 0.
    pub fn decide_with_seed(&mut self, x: &BitString, seed: u64) -> bool {
        let mut meter = StepMeter::new(self.step_budget);
        let output = match self.algorithm.decide(x, seed, &mut meter) {
            Ok(b) => b,
            Err(OutOfSteps) => {
                log::warn!("decider {} ran out of steps on a {}-bit input; answering 0", self.id, x.len());
                false
            }
        };
        self.calls += 1;
        if self.recording {
            self.transcript.records.push(TranscriptRecord { input: x.clone(), output, seed });
        }
        output
    }

    /// Circuit with `n` inputs agreeing with `decide` on every length-`n` string.
    pub fn as_circuit(&self, n: usize) -> Result<BooleanCircuit> {
        self.algorithm
            .circuit(n, self.seed)
            .unwrap_or_else(|| Err(Error::UnsupportedCapability { decider: self.id.clone(), capability: "circuit" }))
    }

    /// Majority vote over `reps` runs with derived seeds; `reps = 1` is the identity.
    pub fn amplify(&self, reps: usize) -> Result<DeciderHandle> {
        if reps % 2 == 0 {
            return Err(Error::Config("amplification needs an odd number of repetitions".into()));
        }
        if reps == 1 {
            return Ok(self.fresh());
        }
        let algorithm = Arc::new(Amplified { inner: self.algorithm.clone(), reps });
        Ok(DeciderHandle { id: format!("{}*{reps}", self.id), algorithm, ..self.fresh() })
    }

    /// Flips each answer independently with probability `p` (a function of input and
    /// seed). The wrapped decider always runs under this handle's current seed.
    pub fn with_noise(&self, p: f64) -> DeciderHandle {
        let algorithm = Arc::new(Noisy { inner: self.algorithm.clone(), inner_seed: self.seed, p });
        DeciderHandle { id: format!("{}~{p}", self.id), algorithm, ..self.fresh() }
    }

    /// Same decider with an empty transcript.
    pub fn fresh(&self) -> DeciderHandle {
        DeciderHandle { transcript: Transcript::default(), calls: 0, ..self.clone() }
    }
}

/// Seed of repetition `i` derived from `seed`.
pub fn derive_seed(seed: u64, i: u64) -> u64 {
    mix64(seed ^ mix64(i.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

struct Amplified {
    inner: Arc<dyn Algorithm>,
    reps: usize,
}

impl Algorithm for Amplified {
    fn decide(&self, x: &BitString, seed: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
        let mut ones = 0;
        for i in 0..self.reps {
            ones += self.inner.decide(x, derive_seed(seed, i as u64), meter)? as usize;
        }
        Ok(2 * ones > self.reps)
    }

    fn randomized(&self) -> bool {
        self.inner.randomized()
    }

    fn circuit(&self, n: usize, seed: u64) -> Option<Result<BooleanCircuit>> {
        if let Err(e) = self.inner.circuit(n, seed)? {
            return Some(Err(e));
        }
        Some(tabulated_circuit(self, n, seed))
    }
}

struct Noisy {
    inner: Arc<dyn Algorithm>,
    inner_seed: u64,
    p: f64,
}

impl Algorithm for Noisy {
    fn decide(&self, x: &BitString, seed: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
        let answer = self.inner.decide(x, self.inner_seed, meter)?;
        let r = mix64(x.fingerprint() ^ mix64(seed ^ 0x6e6f_6973_65));
        let u = (r >> 11) as f64 / (1u64 << 53) as f64;
        Ok(answer != (u < self.p))
    }

    fn randomized(&self) -> bool {
        true
    }
}

/// Answer for a decoded instance given an estimate of its model count
/// (`hits` out of `samples` uniformly drawn assignments).
fn from_estimate(language: Language, instance: &Instance, hits: u64, samples: u64) -> bool {
    match (language, instance) {
        (Language::Sat | Language::Qbf, _) => hits > 0,
        (Language::Parity, _) => hits % 2 == 1,
        (Language::Threshold, Instance::Threshold(t)) => {
            let v = t.formula.num_vars.min(62);
            (hits as u128) << v >= t.threshold as u128 * samples as u128
        }
        _ => false,
    }
}

/// Answer for a decoded instance given whether a probe assignment satisfies it.
fn from_probe(language: Language, instance: &Instance, found: bool) -> bool {
    match instance {
        Instance::Threshold(t) => t.threshold == 0 || (found && t.threshold <= 1),
        _ => {
            let _ = language;
            found
        }
    }
}

fn decode_for(language: Language, x: &BitString) -> Option<Instance> {
    match language.codec().decode(x) {
        Decoded::Valid(i) => Some(i),
        Decoded::Invalid => None,
    }
}

fn eval_charged(f: &Formula3CNF, assignment: &[bool], meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
    meter.charge(f.clauses.len() as u64 + 1)?;
    Ok(f.eval(assignment))
}

struct Constant(bool);

impl Algorithm for Constant {
    fn decide(&self, _: &BitString, _: u64, _: &mut StepMeter) -> Result<bool, OutOfSteps> {
        Ok(self.0)
    }

    fn circuit(&self, n: usize, _: u64) -> Option<Result<BooleanCircuit>> {
        Some(Ok(BooleanCircuit::constant(n, self.0)))
    }
}

/// The ground-truth oracle as a decider.
struct Exact {
    language: Language,
}

impl Algorithm for Exact {
    fn decide(&self, x: &BitString, _: u64, _: &mut StepMeter) -> Result<bool, OutOfSteps> {
        let budget = OracleBudget { max_vars: 30, ..OracleBudget::default() };
        self.language.member(x, &budget).map_err(|e| {
            log::warn!("exact decider gave up: {e}");
            OutOfSteps
        })
    }

    fn circuit(&self, n: usize, seed: u64) -> Option<Result<BooleanCircuit>> {
        Some(tabulated_circuit(self, n, seed))
    }
}

/// Accepts when the header announces at most `max_clauses` clauses. Only the
/// header is read, with bits past the end read as zero; the body is never checked.
struct ClauseCount {
    language: Language,
    max_clauses: usize,
}

impl ClauseCount {
    /// Width of the fields between the variable count and the clause count.
    fn extra(&self, v: usize) -> usize {
        match self.language {
            Language::Sat | Language::Parity => 0,
            Language::Qbf => v,
            Language::Threshold => v + 1,
        }
    }
}

impl Algorithm for ClauseCount {
    fn decide(&self, x: &BitString, _: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
        meter.charge(x.len() as u64 + 1)?;
        let v = (0..).take_while(|&i| x.bit_or_zero(i)).count();
        if v == 0 {
            return Ok(false);
        }
        let start = v + 1 + self.extra(v);
        let c = (start..).take_while(|&i| x.bit_or_zero(i)).count();
        Ok(c <= self.max_clauses)
    }

    fn circuit(&self, n: usize, _: u64) -> Option<Result<BooleanCircuit>> {
        let mut c = BooleanCircuit::builder(n);
        let bit = |i: usize| if i < n { Wire::Input(i as u32) } else { Wire::Const(false) };
        let mut prefix_ones = Wire::Const(true); // x[0..v] all ones
        let mut accept = Wire::Const(false);
        for v in 1..=n {
            prefix_ones = apply(&mut c, GateOp::AND, prefix_ones, bit(v - 1));
            // header 1^v 0
            let is_v = apply(&mut c, GateOp::ANDNOT_B, prefix_ones, bit(v));
            let start = v + 1 + self.extra(v);
            // c <= t unless the t + 1 bits from `start` are all ones
            let mut run = Wire::Const(true);
            for i in start..=start + self.max_clauses {
                run = apply(&mut c, GateOp::AND, run, bit(i));
            }
            let ok = apply(&mut c, GateOp::ANDNOT_B, is_v, run);
            accept = apply(&mut c, GateOp::OR, accept, ok);
        }
        c.set_output(accept);
        Some(Ok(c))
    }
}

/// Tries `k` assignments that depend only on the seed.
struct SampleK {
    language: Language,
    k: u64,
}

/// Value of variable `var` (1-based) in seeded sample `i`.
fn sample_bit(seed: u64, i: u64, var: u32) -> bool {
    mix64(seed ^ mix64((i << 32) ^ var as u64 ^ 0x5eed)) & 1 == 1
}

impl Algorithm for SampleK {
    fn decide(&self, x: &BitString, seed: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
        let Some(instance) = decode_for(self.language, x) else { return Ok(false) };
        let f = instance.formula();
        let mut hits = 0;
        for i in 0..self.k {
            let assignment: Vec<bool> = (1..=f.num_vars).map(|var| sample_bit(seed, i, var)).collect();
            hits += eval_charged(f, &assignment, meter)? as u64;
        }
        Ok(from_estimate(self.language, &instance, hits, self.k))
    }

    fn circuit(&self, n: usize, seed: u64) -> Option<Result<BooleanCircuit>> {
        Some(tabulated_circuit(self, n, seed))
    }
}

/// Sets every variable to the polarity of its first occurrence and checks the formula.
struct SingleLiteralProbe {
    language: Language,
}

impl Algorithm for SingleLiteralProbe {
    fn decide(&self, x: &BitString, _: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
        let Some(instance) = decode_for(self.language, x) else { return Ok(false) };
        let f = instance.formula();
        let mut assignment: Vec<Option<bool>> = vec![None; f.num_vars as usize];
        for l in f.clauses.iter().flatten() {
            assignment[(l.var - 1) as usize].get_or_insert(!l.negated);
        }
        let assignment: Vec<bool> = assignment.into_iter().map(|a| a.unwrap_or(false)).collect();
        let found = eval_charged(f, &assignment, meter)?;
        Ok(from_probe(self.language, &instance, found))
    }

    fn circuit(&self, n: usize, seed: u64) -> Option<Result<BooleanCircuit>> {
        Some(tabulated_circuit(self, n, seed))
    }
}

/// WalkSAT with a flip budget; accepts when it finds a model. Black box only.
struct WalkSat {
    language: Language,
    max_flips: u64,
    noise: f64,
}

impl Algorithm for WalkSat {
    fn decide(&self, x: &BitString, seed: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
        let Some(instance) = decode_for(self.language, x) else { return Ok(false) };
        let f = instance.formula();
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(x.fingerprint() ^ seed));
        let mut assignment: Vec<bool> = (0..f.num_vars).map(|_| rng.random()).collect();
        let mut found = false;
        for _ in 0..=self.max_flips {
            meter.charge(f.clauses.len() as u64 + 1)?;
            let unsat: Vec<usize> =
                (0..f.clauses.len()).filter(|&i| !f.clauses[i].iter().any(|l| l.eval(&assignment))).collect();
            if unsat.is_empty() {
                found = true;
                break;
            }
            let clause = f.clauses[unsat[rng.random_range(0..unsat.len())]];
            let var = if rng.random_bool(self.noise) {
                clause[rng.random_range(0..3)].var
            } else {
                // flip the literal that leaves the fewest clauses unsatisfied
                *clause
                    .iter()
                    .map(|l| l.var)
                    .collect::<Vec<_>>()
                    .iter()
                    .min_by_key(|&&v| {
                        assignment[(v - 1) as usize] ^= true;
                        let broken = f.clauses.iter().filter(|c| !c.iter().any(|l| l.eval(&assignment))).count();
                        assignment[(v - 1) as usize] ^= true;
                        broken
                    })
                    .expect("three literals")
            };
            assignment[(var - 1) as usize] ^= true;
        }
        Ok(from_probe(self.language, &instance, found))
    }
}

/// Estimates the model count from assignments drawn from a hash of the input
/// and seed. Black box only.
struct SamplingCounter {
    language: Language,
    samples: u64,
}

impl Algorithm for SamplingCounter {
    fn decide(&self, x: &BitString, seed: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
        let Some(instance) = decode_for(self.language, x) else { return Ok(false) };
        let f = instance.formula();
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(x.fingerprint() ^ mix64(seed)));
        let mut hits = 0;
        for _ in 0..self.samples {
            let assignment: Vec<bool> = (0..f.num_vars).map(|_| rng.random()).collect();
            hits += eval_charged(f, &assignment, meter)? as u64;
        }
        Ok(from_estimate(self.language, &instance, hits, self.samples))
    }
}

pub const CATALOG_IDS: [&str; 8] = [
    "const0",
    "const1",
    "exact",
    "clause-count-threshold",
    "sample-k-assignments",
    "single-literal-probe",
    "walksat",
    "sampling-threshold-counter",
];

/// One catalog decider for `language` by id.
pub fn catalog_entry(language: Language, id: &str) -> Result<DeciderHandle> {
    let algorithm: Arc<dyn Algorithm> = match id {
        "const0" => Arc::new(Constant(false)),
        "const1" => Arc::new(Constant(true)),
        "exact" => Arc::new(Exact { language }),
        "clause-count-threshold" => Arc::new(ClauseCount { language, max_clauses: 2 }),
        "sample-k-assignments" => Arc::new(SampleK { language, k: 4 }),
        "single-literal-probe" => Arc::new(SingleLiteralProbe { language }),
        "walksat" => Arc::new(WalkSat { language, max_flips: 32, noise: 0.5 }),
        "sampling-threshold-counter" => Arc::new(SamplingCounter { language, samples: 8 }),
        _ => return Err(Error::Unknown { kind: "decider", id: id.to_string() }),
    };
    Ok(DeciderHandle::new(id, language, algorithm))
}

/// Every catalog decider for `language`, in a fixed order.
pub fn catalog(language: Language) -> Vec<DeciderHandle> {
    CATALOG_IDS.iter().map(|id| catalog_entry(language, id).expect("catalog ids are known")).collect()
}

/// A decider backed by an arbitrary closure; deterministic and black box.
pub fn from_fn(
    id: impl Into<String>,
    language: Language,
    f: impl Fn(&BitString) -> bool + Send + Sync + 'static,
) -> DeciderHandle {
    struct FnAlgorithm<F>(F);
    impl<F: Fn(&BitString) -> bool + Send + Sync> Algorithm for FnAlgorithm<F> {
        fn decide(&self, x: &BitString, _: u64, _: &mut StepMeter) -> Result<bool, OutOfSteps> {
            Ok((self.0)(x))
        }
    }
    DeciderHandle::new(id, language, Arc::new(FnAlgorithm(f)))
}

/// A decider defined by a circuit per input length (other lengths answer 0).
pub fn from_circuits(
    id: impl Into<String>,
    language: Language,
    circuits: impl Fn(usize) -> Option<BooleanCircuit> + Send + Sync + 'static,
) -> DeciderHandle {
    struct CircuitAlgorithm<F>(F);
    impl<F: Fn(usize) -> Option<BooleanCircuit> + Send + Sync> Algorithm for CircuitAlgorithm<F> {
        fn decide(&self, x: &BitString, _: u64, meter: &mut StepMeter) -> Result<bool, OutOfSteps> {
            match (self.0)(x.len()) {
                Some(c) => {
                    meter.charge(c.size() as u64 + 1)?;
                    Ok(c.eval(x).expect("length matches"))
                }
                None => Ok(false),
            }
        }

        fn circuit(&self, n: usize, _: u64) -> Option<Result<BooleanCircuit>> {
            Some(Ok((self.0)(n).unwrap_or_else(|| BooleanCircuit::constant(n, false))))
        }
    }
    DeciderHandle::new(id, language, Arc::new(CircuitAlgorithm(circuits)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{encode, encode_natural, Layout, Lit};

    fn unique_model_formula(v: u32) -> Formula3CNF {
        // all variables forced true
        Formula3CNF::new(v, (1..=v).map(|i| [Lit::pos(i); 3]).collect())
    }

    #[test]
    fn constant_and_exact_answers() {
        let f = unique_model_formula(3);
        let x = encode_natural(&Instance::Cnf(f), Layout::Compact);
        let mut zero = catalog_entry(Language::Sat, "const0").unwrap();
        let mut exact = catalog_entry(Language::Sat, "exact").unwrap();
        assert!(!zero.decide(&x));
        assert!(exact.decide(&x));
        assert_eq!(exact.transcript().len(), 1);
        assert_eq!(exact.transcript().records()[0].input, x);
    }

    #[test]
    fn sample_k_misses_unique_model() {
        let x = encode_natural(&Instance::Cnf(unique_model_formula(10)), Layout::Compact);
        let mut a = catalog_entry(Language::Sat, "sample-k-assignments").unwrap();
        a.set_recording(false);
        let accepted = (0..10_000u64).filter(|&s| a.decide_with_seed(&x, s)).count();
        // expected 10_000 * (1 - (1 - 2^-10)^4) ~ 39
        assert!(accepted < 100, "accepted {accepted} times");
    }

    #[test]
    fn catalog_lists_required_entries() {
        for lang in Language::ALL {
            let ids: Vec<String> = catalog(lang).iter().map(|d| d.id().to_string()).collect();
            assert_eq!(ids, CATALOG_IDS.to_vec());
        }
        assert!(catalog_entry(Language::Sat, "oracle-of-delphi").is_err());
    }

    #[test]
    fn black_boxes_lack_circuits() {
        for id in ["walksat", "sampling-threshold-counter"] {
            let a = catalog_entry(Language::Sat, id).unwrap();
            assert!(matches!(a.as_circuit(4), Err(Error::UnsupportedCapability { .. })));
        }
    }

    #[test]
    fn circuits_agree_with_decide_at_12() {
        for lang in Language::ALL {
            for mut a in catalog(lang).into_iter().filter(|a| a.has_circuit()) {
                a.set_recording(false);
                let c = a.as_circuit(12).unwrap();
                for x in BitString::all_of_length(12) {
                    assert_eq!(c.eval(&x).unwrap(), a.decide(&x), "{lang} {} {x:?}", a.id());
                }
            }
        }
    }

    #[test]
    fn clause_count_reads_header_only() {
        let mut a = catalog_entry(Language::Sat, "clause-count-threshold").unwrap();
        // 1^1 0 1^3 0: three clauses announced, body garbage
        assert!(!a.decide(&BitString::from_binary("1011100000").unwrap()));
        assert!(a.decide(&BitString::from_binary("1011000000").unwrap()));
        assert!(!a.decide(&BitString::from_binary("0111").unwrap()));
        // header runs off the end: zeros are read
        assert!(a.decide(&BitString::from_binary("111").unwrap()));
    }

    #[test]
    fn const1_circuit_is_constant() {
        let a = catalog_entry(Language::Sat, "const1").unwrap();
        assert_eq!(a.as_circuit(5).unwrap(), BooleanCircuit::constant(5, true));
    }

    #[test]
    fn determinism_given_seed() {
        let x = encode(&Instance::Cnf(unique_model_formula(4)), Layout::Compact, 60).unwrap();
        for id in CATALOG_IDS {
            let mut a = catalog_entry(Language::Parity, id).unwrap();
            let mut b = catalog_entry(Language::Parity, id).unwrap();
            for s in 0..50 {
                assert_eq!(a.decide_with_seed(&x, s), b.decide_with_seed(&x, s));
            }
        }
    }

    #[test]
    fn amplify_identity_and_majority() {
        let a = catalog_entry(Language::Sat, "single-literal-probe").unwrap();
        let mut one = a.amplify(1).unwrap();
        let mut three = a.amplify(3).unwrap();
        let mut base = a.fresh();
        for x in BitString::all_of_length(10) {
            let want = base.decide(&x);
            assert_eq!(one.decide(&x), want);
            assert_eq!(three.decide(&x), want);
        }
        assert!(a.amplify(2).is_err());
    }

    #[test]
    fn amplification_reduces_noise() {
        let x = encode_natural(&Instance::Cnf(unique_model_formula(2)), Layout::Compact);
        let noisy = catalog_entry(Language::Sat, "exact").unwrap().with_noise(0.3);
        let mut single = noisy.fresh();
        let mut amplified = noisy.amplify(31).unwrap();
        single.set_recording(false);
        amplified.set_recording(false);
        let trials = 10_000u64;
        let err1 = (0..trials).filter(|&s| !single.decide_with_seed(&x, s)).count() as f64 / trials as f64;
        let err31 = (0..trials).filter(|&s| !amplified.decide_with_seed(&x, s)).count() as f64 / trials as f64;
        assert!((err1 - 0.3).abs() < 0.03, "single error {err1}");
        assert!(err31 <= 0.05, "amplified error {err31}");
    }

    #[test]
    fn randomized_deciders_have_a_gap_on_random_strings() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for lang in Language::ALL {
            let noisy = catalog(lang).iter().map(|a| a.with_noise(0.2)).collect::<Vec<_>>();
            let randomized = catalog(lang).into_iter().filter(|a| a.randomized()).chain(noisy);
            for mut a in randomized {
                a.set_recording(false);
                for _ in 0..100 {
                    let x: BitString = (0..16).map(|_| rng.random::<bool>()).collect();
                    let ones = (0..1000).filter(|&s| a.decide_with_seed(&x, s)).count();
                    let majority = ones.max(1000 - ones) as f64 / 1000.0;
                    assert!(majority >= 0.66, "{lang} {} {x:?}: {majority}", a.id());
                }
            }
        }
    }

    #[test]
    fn step_budget_exhaustion_answers_zero() {
        let f = Formula3CNF::new(8, vec![[Lit::pos(1), Lit::pos(2), Lit::pos(3)]; 30]);
        let x = encode_natural(&Instance::Cnf(f), Layout::Compact);
        let mut a = catalog_entry(Language::Sat, "single-literal-probe").unwrap();
        assert!(a.decide(&x));
        let mut starved = a.fresh().with_step_budget(5);
        assert!(!starved.decide(&x));
    }

    #[test]
    fn transcript_jsonl() {
        let mut a = catalog_entry(Language::Sat, "const1").unwrap().with_seed(9);
        a.decide(&BitString::from_binary("101").unwrap());
        assert_eq!(a.transcript().to_jsonl(), "{\"input\":\"3:a\",\"output\":true,\"seed\":9}\n");
    }
}
