//! Refuters for the counting classes.
//!
//! Threshold: a claimed decider for "#SAT(formula) >= t" drives a bit-by-bit
//! model counter. Where the counter is not additive over fixing the first
//! variable, three threshold queries contain an error.
//!
//! Parity: the formulas on which a parity decider is not additive are
//! collected into a CNF, isolated with random affine constraints and handed
//! back to the decider.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::compile::{synthesize, tseitin_to_3cnf};
use crate::decider::DeciderHandle;
use crate::dsr::{condition_holds, pad, DsrLanguage};
use crate::error::{Error, Result};
use crate::instance::{
    encode, encode_natural, encoded_len, Formula3CNF, Instance, Layout, Lit, Restriction, ThresholdInstance,
};
use crate::list::CounterexampleList;
use crate::oracle::Language;

/// One threshold query asked by the counter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    /// The threshold the counter meant to ask about.
    pub threshold: u64,
    /// Encoding sent to the decider; thresholds above `2^v + 1` are clamped there.
    pub string: BitString,
    pub answer: bool,
}

/// A model count reconstructed one bit at a time, most significant first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCount {
    pub num_vars: u32,
    /// `bits[0]` is the coefficient of `2^num_vars`.
    pub bits: Vec<bool>,
    pub transcript: Vec<ThresholdQuery>,
}

impl BinaryCount {
    pub fn value(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    /// Count of a constant (a zero-variable formula); asks nothing.
    pub fn constant(value: bool) -> Self {
        Self { num_vars: 0, bits: vec![value], transcript: Vec::new() }
    }

    /// Whether the value exceeds the largest possible count `2^num_vars`.
    pub fn overflows(&self) -> bool {
        self.value() > 1u64 << self.num_vars
    }

    pub fn answer_at(&self, threshold: u64) -> Option<bool> {
        self.transcript.iter().find(|q| q.threshold == threshold).map(|q| q.answer)
    }
}

/// Common encoded length of every threshold query at `nvars` variables and up to
/// `max_clauses` clauses (at least two, to fit the contradiction).
pub fn threshold_query_len(nvars: u32, max_clauses: usize) -> usize {
    let f = Formula3CNF::new(nvars.max(1), vec![[Lit::pos(1); 3]; max_clauses.max(2)]);
    encoded_len(&Instance::Threshold(ThresholdInstance { formula: f, threshold: 0 }), Layout::Compact)
}

pub fn threshold_string(formula: &Formula3CNF, threshold: u64, query_len: usize) -> Result<BitString> {
    let t = ThresholdInstance::clamped(formula.clone(), threshold);
    encode(&Instance::Threshold(t), Layout::Compact, query_len)
}

/// Model count of `formula` by descending-bit threshold queries to `decider`.
pub fn dpp_count(decider: &mut DeciderHandle, formula: &Formula3CNF, query_len: usize) -> Result<BinaryCount> {
    let m = formula.num_vars;
    if m >= 62 {
        return Err(Error::BudgetExceeded(format!("{m} variables overflow the binary counter")));
    }
    let mut acc = 0u64;
    let mut bits = Vec::with_capacity(m as usize + 1);
    let mut transcript = Vec::with_capacity(m as usize + 1);
    for i in (0..=m).rev() {
        let threshold = acc + (1u64 << i);
        let string = threshold_string(formula, threshold, query_len)?;
        let answer = decider.decide(&string);
        if answer {
            acc = threshold;
        }
        bits.push(answer);
        transcript.push(ThresholdQuery { threshold, string, answer });
    }
    Ok(BinaryCount { num_vars: m, bits, transcript })
}

/// Counts the restriction of the first variable to `value`. With two or more
/// variables the restriction is always a formula (an emptied clause becomes a
/// contradiction), so its count also comes from the decider.
fn count_restriction(
    decider: &mut DeciderHandle,
    formula: &Formula3CNF,
    value: bool,
    query_len: usize,
) -> Result<BinaryCount> {
    match formula.restrict_first_formula(value) {
        Some(f) => dpp_count(decider, &f, query_len),
        None => match formula.restrict_first(value) {
            Restriction::Constant(b) => Ok(BinaryCount::constant(b)),
            Restriction::Instance(f) => dpp_count(decider, &f, query_len),
        },
    }
}

/// Counter values for a formula and both restrictions of its first variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTriple {
    pub whole: BinaryCount,
    pub zero: BinaryCount,
    pub one: BinaryCount,
}

impl CountTriple {
    pub fn of(decider: &mut DeciderHandle, formula: &Formula3CNF, query_len: usize) -> Result<Self> {
        Ok(Self {
            whole: dpp_count(decider, formula, query_len)?,
            zero: count_restriction(decider, formula, false, query_len)?,
            one: count_restriction(decider, formula, true, query_len)?,
        })
    }

    pub fn additive(&self) -> bool {
        self.whole.value() == self.zero.value() + self.one.value()
    }
}

/// Which branch of the case analysis produced the list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpCase {
    /// Some counter exceeded the largest possible count: a clamped query was answered 1.
    Overflow,
    /// `value(whole) < value(zero) + value(one)`.
    Below,
    /// `value(whole) > value(zero) + value(one)`.
    Above,
}

/// The three threshold statements a non-additive triple is refuted with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpTriple {
    pub case: PpCase,
    /// Whole formula, then the zero and one restrictions.
    pub queries: [ThresholdQuery; 3],
}

impl PpTriple {
    /// Checks, from the recorded answers alone, that assuming all three are right
    /// contradicts `count(whole) = count(zero) + count(one)`.
    pub fn rederive(&self) -> bool {
        // `answer = 1` means count >= t, `answer = 0` means count <= t - 1.
        let bounds = |q: &ThresholdQuery| -> (u128, u128) {
            let t = q.threshold as u128;
            if q.answer {
                (t, u128::MAX / 4)
            } else {
                (0, t.saturating_sub(1))
            }
        };
        let [w, z, o] = self.queries.each_ref().map(bounds);
        let expected = match self.case {
            PpCase::Below => [false, true, true],
            PpCase::Above => [true, false, false],
            PpCase::Overflow => return false,
        };
        let pattern = self.queries.each_ref().map(|q| q.answer) == expected;
        let empty_intersection = w.0 > z.1 + o.1 || w.1 < z.0 + o.0;
        pattern && empty_intersection
    }

    /// Every query appears with the same answer in the corresponding transcript
    /// (threshold-0 statements are trivially true and need not be asked).
    pub fn matches(&self, counts: &CountTriple) -> bool {
        [&counts.whole, &counts.zero, &counts.one]
            .iter()
            .zip(&self.queries)
            .all(|(c, q)| c.answer_at(q.threshold).map_or(q.threshold == 0, |a| a == q.answer))
    }
}

/// Builds the case-analysis list from a non-additive triple.
pub fn pp_case_analysis(
    decider: &mut DeciderHandle,
    formula: &Formula3CNF,
    counts: &CountTriple,
    query_len: usize,
) -> Result<(PpCase, Option<PpTriple>, Vec<BitString>)> {
    for c in [&counts.whole, &counts.zero, &counts.one] {
        if c.overflows() {
            let cap = 1u64 << c.num_vars;
            let q = c
                .transcript
                .iter()
                .find(|q| q.answer && q.threshold > cap)
                .expect("overflow needs an accepted clamped query");
            return Ok((PpCase::Overflow, None, vec![q.string.clone()]));
        }
    }
    let (c, a, b) = (counts.whole.value() as i128, counts.zero.value() as i128, counts.one.value() as i128);
    let restricted = |v| formula.restrict_first_formula(v).expect("case analysis needs at least two variables");
    let (f0, f1) = (restricted(false), restricted(true));
    let mut query = |f: &Formula3CNF, count: &BinaryCount, threshold: u64| -> Result<ThresholdQuery> {
        let string = threshold_string(f, threshold, query_len)?;
        let answer = match count.answer_at(threshold) {
            Some(ans) => ans,
            None => decider.decide(&string),
        };
        Ok(ThresholdQuery { threshold, string, answer })
    };
    let (case, thresholds) = if c - a - b <= -1 {
        (PpCase::Below, [c + 1, a, b])
    } else {
        debug_assert!(c - a - b > 0, "case analysis needs a non-additive triple");
        (PpCase::Above, [c, a + 1, b + 1])
    };
    let queries = [
        query(formula, &counts.whole, thresholds[0] as u64)?,
        query(&f0, &counts.zero, thresholds[1] as u64)?,
        query(&f1, &counts.one, thresholds[2] as u64)?,
    ];
    let strings = queries.iter().map(|q| q.string.clone()).collect();
    Ok((case, Some(PpTriple { case, queries }), strings))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PpSearch {
    /// Every formula over exactly `nvars` variables with up to `max_clauses` clauses.
    Exhaustive { max_clauses: usize },
    /// `samples` random formulas with 1 to `max_clauses` clauses.
    Guided { max_clauses: usize, samples: usize, seed: u64 },
}

impl PpSearch {
    pub fn max_clauses(&self) -> usize {
        match self {
            PpSearch::Exhaustive { max_clauses } | PpSearch::Guided { max_clauses, .. } => *max_clauses,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpRun {
    pub list: CounterexampleList,
    pub formula: Option<Formula3CNF>,
    pub counts: Option<CountTriple>,
    pub case: Option<PpCase>,
    pub triple: Option<PpTriple>,
    pub candidates: u64,
}

/// Calls `visit` on every formula over `nvars` variables with at most `max_clauses`
/// clauses, in order of clause count; stops early when `visit` returns `true`.
pub fn for_each_formula(
    nvars: u32,
    max_clauses: usize,
    mut visit: impl FnMut(&Formula3CNF) -> Result<bool>,
) -> Result<bool> {
    let lits: Vec<Lit> = (1..=nvars).flat_map(|v| [Lit::pos(v), Lit::neg(v)]).collect();
    let l = lits.len();
    let clauses: Vec<[Lit; 3]> = (0..l * l * l).map(|i| [lits[i / (l * l)], lits[i / l % l], lits[i % l]]).collect();
    let mut f = Formula3CNF::new(nvars, Vec::new());
    for count in 0..=max_clauses {
        let mut idx = vec![0usize; count];
        loop {
            f.clauses = idx.iter().map(|&i| clauses[i]).collect();
            if visit(&f)? {
                return Ok(true);
            }
            // Odometer over clause indices.
            let mut pos = count;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < clauses.len() {
                    break;
                }
                idx[pos] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    Ok(false)
}

pub fn random_formula(rng: &mut impl Rng, nvars: u32, clauses: usize) -> Formula3CNF {
    let clauses = (0..clauses)
        .map(|_| std::array::from_fn(|_| Lit { var: rng.random_range(1..=nvars), negated: rng.random() }))
        .collect();
    Formula3CNF::new(nvars, clauses)
}

/// Searches for a formula on which the counter driven by `decider` is not additive
/// and returns the case-analysis list for it.
pub fn pp_refute(decider: &mut DeciderHandle, nvars: u32, search: &PpSearch) -> Result<PpRun> {
    if nvars < 2 {
        return Err(Error::Config("the threshold refuter needs at least two variables".into()));
    }
    let query_len = threshold_query_len(nvars, search.max_clauses());
    let mut candidates = 0u64;
    let mut found: Option<(Formula3CNF, CountTriple)> = None;
    let mut check = |decider: &mut DeciderHandle, f: &Formula3CNF| -> Result<bool> {
        candidates += 1;
        let counts = CountTriple::of(decider, f, query_len)?;
        if counts.additive() {
            return Ok(false);
        }
        found = Some((f.clone(), counts));
        Ok(true)
    };
    match search {
        PpSearch::Exhaustive { max_clauses } => {
            for_each_formula(nvars, *max_clauses, |f| check(decider, f))?;
        }
        PpSearch::Guided { max_clauses, samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for _ in 0..*samples {
                let c = rng.random_range(1..=(*max_clauses).max(1));
                let f = random_formula(&mut rng, nvars, c);
                if check(decider, &f)? {
                    break;
                }
            }
        }
    }
    let Some((formula, counts)) = found else {
        return Ok(PpRun {
            list: CounterexampleList::new(3, "no-violation-found"),
            formula: None,
            counts: None,
            case: None,
            triple: None,
            candidates,
        });
    };
    let (case, triple, strings) = pp_case_analysis(decider, &formula, &counts, query_len)?;
    let outcome = match case {
        PpCase::Overflow => "overflow",
        PpCase::Below => "below",
        PpCase::Above => "above",
    };
    let mut list = CounterexampleList::new(3, outcome);
    for (s, role) in strings.into_iter().zip(["threshold-whole", "threshold-zero", "threshold-one"]) {
        let role = if case == PpCase::Overflow { "clamped-threshold-accepted" } else { role };
        list.push(s, Language::Threshold, role);
    }
    Ok(PpRun { list, formula: Some(formula), counts: Some(counts), case: Some(case), triple, candidates })
}

/// One affine constraint `xor(vars) = rhs` over GF(2).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub vars: Vec<u32>,
    pub rhs: bool,
}

impl AffineConstraint {
    pub fn holds(&self, assignment: &[bool]) -> bool {
        self.vars.iter().fold(false, |acc, &v| acc ^ assignment[v as usize - 1]) == self.rhs
    }
}

/// A sampled isolation seed: `k` uniform in `[1, over + 1]`, then `k` uniform
/// affine constraints over variables `1..=over`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VVSeed {
    pub seed: u64,
    pub k: u32,
    pub constraints: Vec<AffineConstraint>,
}

impl VVSeed {
    pub fn sample(seed: u64, over: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..=over + 1);
        let constraints = (0..k)
            .map(|_| AffineConstraint { vars: (1..=over).filter(|_| rng.random()).collect(), rhs: rng.random() })
            .collect();
        Self { seed, k, constraints }
    }
}

/// `formula` conjoined with the seed's constraints, each as a chain of XOR
/// definitions on fresh variables; every model of the result restricts to a model
/// of `formula` meeting the constraints, and each such model extends uniquely.
pub fn vv_isolate_with(formula: &Formula3CNF, seed: &VVSeed) -> Formula3CNF {
    let mut f = formula.clone();
    for c in &seed.constraints {
        add_xor_constraint(&mut f, c);
    }
    f
}

/// Isolation over all of `formula`'s variables.
pub fn vv_isolate(formula: &Formula3CNF, seed: u64) -> Formula3CNF {
    vv_isolate_with(formula, &VVSeed::sample(seed, formula.num_vars))
}

fn add_xor_constraint(f: &mut Formula3CNF, c: &AffineConstraint) {
    let lit = |v: u32, neg: bool| Lit { var: v, negated: neg };
    let clause = |a: Lit, b: Lit, c: Lit| [a, b, c];
    match c.vars.as_slice() {
        [] => {
            if c.rhs {
                f.clauses.push([Lit::pos(1); 3]);
                f.clauses.push([Lit::neg(1); 3]);
            }
        }
        [v] => f.clauses.push([lit(*v, !c.rhs); 3]),
        [first, rest @ ..] => {
            let mut acc = *first;
            for (i, &v) in rest.iter().enumerate() {
                if i + 1 == rest.len() {
                    // acc xor v = rhs
                    if c.rhs {
                        f.clauses.push(clause(lit(acc, false), lit(v, false), lit(v, false)));
                        f.clauses.push(clause(lit(acc, true), lit(v, true), lit(v, true)));
                    } else {
                        f.clauses.push(clause(lit(acc, true), lit(v, false), lit(v, false)));
                        f.clauses.push(clause(lit(acc, false), lit(v, true), lit(v, true)));
                    }
                } else {
                    f.num_vars += 1;
                    let t = f.num_vars;
                    f.clauses.push(clause(lit(t, true), lit(acc, false), lit(v, false)));
                    f.clauses.push(clause(lit(t, true), lit(acc, true), lit(v, true)));
                    f.clauses.push(clause(lit(t, false), lit(acc, true), lit(v, false)));
                    f.clauses.push(clause(lit(t, false), lit(acc, false), lit(v, true)));
                    acc = t;
                }
            }
        }
    }
}

/// The witness strings (length `nvars`, read as parity instances) on which
/// `decider` is not additive, as a truth table over `nvars` inputs.
pub fn non_additivity_table(decider: &mut DeciderHandle, nvars: usize) -> Vec<bool> {
    BitString::all_of_length(nvars).map(|w| condition_holds(DsrLanguage::Parity, decider, nvars, &w)).collect()
}

/// CNF whose models, projected to variables `1..=nvars`, are exactly the
/// non-additive witnesses; every auxiliary variable is determined by them.
pub fn non_additivity_formula(table: &[bool], nvars: usize) -> Result<Formula3CNF> {
    let circuit = synthesize(nvars, |t| table[t as usize])?;
    Ok(tseitin_to_3cnf(&circuit))
}

/// How one isolation seed ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum ParityBranch {
    /// The decider rejected the isolated instance, which is emitted.
    Rejected,
    /// Accepted, and the search extracted a non-additive witness.
    Extracted { witness: BitString },
    /// Accepted, but the decider's answers on some restriction step do not add up.
    Inconsistent { depth: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParitySeedRun {
    pub seed: VVSeed,
    pub branch: ParityBranch,
    pub list: CounterexampleList,
}

/// One seed: isolate, ask the decider, and either emit the isolated instance or
/// search for a model through the decider's answers.
pub fn parity_seed(
    decider: &mut DeciderHandle,
    target: &Formula3CNF,
    nvars: usize,
    seed: u64,
) -> Result<ParitySeedRun> {
    let language = Language::Parity;
    let vv = VVSeed::sample(seed, nvars as u32);
    let isolated = vv_isolate_with(target, &vv);
    let top = encode_natural(&Instance::Cnf(isolated.clone()), Layout::Compact);
    if !decider.decide(&top) {
        let mut list = CounterexampleList::new(3, "rejected");
        list.push(top, language, "isolated-instance");
        return Ok(ParitySeedRun { seed: vv, branch: ParityBranch::Rejected, list });
    }
    let enc = |f: &Formula3CNF| encode_natural(&Instance::Cnf(f.clone()), Layout::Compact);
    let mut current = isolated;
    let mut current_string = top;
    let mut assignment = BitString::new();
    loop {
        let halves = [current.restrict_first(false), current.restrict_first(true)];
        let mut values = [false; 2];
        let mut strings: [Option<BitString>; 2] = [None, None];
        for (b, r) in halves.iter().enumerate() {
            values[b] = match r {
                Restriction::Constant(v) => *v,
                Restriction::Instance(g) => {
                    let s = enc(g);
                    let v = decider.decide(&s);
                    strings[b] = Some(s);
                    v
                }
            };
        }
        if !(values[0] ^ values[1]) {
            let mut list = CounterexampleList::new(3, "inconsistent");
            list.push(current_string, language, "accepted-instance");
            for (s, role) in strings.into_iter().zip(["restriction-0", "restriction-1"]) {
                if let Some(s) = s {
                    list.push(s, language, role);
                }
            }
            return Ok(ParitySeedRun {
                seed: vv,
                branch: ParityBranch::Inconsistent { depth: assignment.len() },
                list,
            });
        }
        let b = !values[0];
        assignment.push(b);
        let [h0, h1] = halves;
        match if b { h1 } else { h0 } {
            Restriction::Constant(_) => break,
            Restriction::Instance(g) => {
                current_string = strings[b as usize].take().expect("instance branch was encoded");
                current = g;
            }
        }
    }
    let witness = BitString::from_bits(assignment.bits()[..nvars].to_vec());
    let reduction = DsrLanguage::Parity.reduce(&witness);
    let mut list = CounterexampleList::new(3, "extracted");
    list.push(witness.clone(), language, "non-additive-witness");
    if let Ok(r) = reduction {
        for (d, role) in r.derived.iter().zip(["witness-restriction-0", "witness-restriction-1"]) {
            if let crate::dsr::Derived::Query(q) = d {
                list.push(pad(q, nvars), language, role);
            }
        }
    }
    Ok(ParitySeedRun { seed: vv, branch: ParityBranch::Extracted { witness }, list })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityRun {
    /// Output of the last seed tried.
    pub last: Option<ParitySeedRun>,
    pub seeds_used: u64,
    /// No seed satisfied the stopping rule.
    pub exhausted: bool,
    /// Whether any witness string is non-additive for the decider.
    pub target_satisfiable: bool,
}

/// Tries seeds `derive(base, 0), derive(base, 1), ...` until `until` accepts a
/// seed's list or `seed_budget` seeds have run.
pub fn parity_refute(
    decider: &mut DeciderHandle,
    nvars: usize,
    seed_budget: u64,
    base_seed: u64,
    mut until: impl FnMut(&mut DeciderHandle, &CounterexampleList) -> Result<bool>,
) -> Result<ParityRun> {
    let table = non_additivity_table(decider, nvars);
    let target_satisfiable = table.iter().any(|&b| b);
    let target = non_additivity_formula(&table, nvars)?;
    let mut last = None;
    for i in 0..seed_budget {
        let run = parity_seed(decider, &target, nvars, crate::decider::derive_seed(base_seed, i))?;
        let stop = until(decider, &run.list)?;
        last = Some(run);
        if stop {
            return Ok(ParityRun { last, seeds_used: i + 1, exhausted: false, target_satisfiable });
        }
    }
    Ok(ParityRun { last, seeds_used: seed_budget, exhausted: true, target_satisfiable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decider::catalog_entry;
    use crate::oracle::{count_sat, parity_sat, OracleBudget};
    use proptest::prelude::*;

    fn budget() -> OracleBudget {
        OracleBudget::default()
    }

    #[test]
    fn exact_counter_matches_model_count() {
        let mut a = catalog_entry(Language::Threshold, "exact").unwrap();
        let len = threshold_query_len(3, 2);
        for v in 1..=3 {
            for_each_formula(v, 2, |f| {
                let c = dpp_count(&mut a, f, len)?;
                assert_eq!(c.value(), count_sat(f, &budget())?, "{f:?}");
                assert_eq!(c.transcript.len(), v as usize + 1);
                Ok(false)
            })
            .unwrap();
        }
    }

    #[test]
    fn constant_counters() {
        let f = Formula3CNF::new(3, vec![[Lit::pos(1), Lit::neg(2), Lit::pos(3)]]);
        let len = threshold_query_len(3, 3);
        let mut zero = catalog_entry(Language::Threshold, "const0").unwrap();
        assert_eq!(dpp_count(&mut zero, &f, len).unwrap().value(), 0);
        let mut one = catalog_entry(Language::Threshold, "const1").unwrap();
        let c = dpp_count(&mut one, &f, len).unwrap();
        assert_eq!(c.value(), 15);
        assert!(c.overflows());
        let run = pp_refute(&mut one, 3, &PpSearch::Guided { max_clauses: 3, samples: 4, seed: 1 }).unwrap();
        assert_eq!(run.case, Some(PpCase::Overflow));
        assert_eq!(run.list.len(), 1);
        assert!(!Language::Threshold.member(&run.list.entries[0].string, &budget()).unwrap());
    }

    #[test]
    fn exact_threshold_decider_is_additive() {
        let mut a = catalog_entry(Language::Threshold, "exact").unwrap();
        let run = pp_refute(&mut a, 2, &PpSearch::Exhaustive { max_clauses: 2 }).unwrap();
        assert_eq!(run.list.outcome, "no-violation-found");
        let run = pp_refute(&mut a, 5, &PpSearch::Guided { max_clauses: 6, samples: 300, seed: 9 }).unwrap();
        assert!(run.case.is_none());
    }

    #[test]
    fn sampling_counter_triples_rederive_and_contain_an_error() {
        let mut hits = 0;
        for seed in 0..30 {
            let mut a = catalog_entry(Language::Threshold, "sampling-threshold-counter").unwrap().with_seed(seed);
            let mut run = pp_refute(&mut a, 6, &PpSearch::Guided { max_clauses: 6, samples: 100, seed }).unwrap();
            if run.case.is_none() {
                continue;
            }
            if let Some(t) = &run.triple {
                assert!(t.rederive(), "{t:?}");
                assert!(t.matches(run.counts.as_ref().unwrap()));
            }
            run.list.verify(&mut a, &budget()).unwrap();
            assert!(run.list.has_counterexample(), "{run:?}");
            hits += 1;
        }
        assert!(hits >= 27);
    }

    #[test]
    fn xor_chain_is_parsimonious() {
        for seed in 0..200 {
            let f = Formula3CNF::new(5, vec![[Lit::pos(1), Lit::neg(3), Lit::pos(5)]]);
            let vv = VVSeed::sample(seed, 5);
            let g = vv_isolate_with(&f, &vv);
            let expected = (0..32u64)
                .filter(|&t| {
                    let a: Vec<bool> = (0..5).map(|i| (t >> (4 - i)) & 1 == 1).collect();
                    f.eval(&a) && vv.constraints.iter().all(|c| c.holds(&a))
                })
                .count() as u64;
            assert_eq!(count_sat(&g, &budget()).unwrap(), expected);
            assert!((1..=6).contains(&vv.k));
        }
    }

    #[test]
    fn unsatisfiable_input_never_isolates() {
        let f = Formula3CNF::contradiction(6);
        for seed in 0..500 {
            assert!(!parity_sat(&vv_isolate(&f, seed), &budget()).unwrap());
        }
    }

    #[test]
    fn const0_parity_refutation_and_exact_consistency() {
        let b = budget();
        let mut a = catalog_entry(Language::Parity, "const0").unwrap();
        let run = parity_refute(&mut a, 8, 64, 5, |d, l| {
            let mut l = l.clone();
            l.verify(d, &b)?;
            Ok(l.has_counterexample())
        })
        .unwrap();
        assert!(run.target_satisfiable);
        assert!(!run.exhausted);

        let mut exact = catalog_entry(Language::Parity, "exact").unwrap();
        let run = parity_refute(&mut exact, 6, 20, 5, |d, l| {
            let mut l = l.clone();
            l.verify(d, &b)?;
            assert!(!l.has_counterexample());
            Ok(false)
        })
        .unwrap();
        assert!(!run.target_satisfiable && run.exhausted);
    }

    proptest! {
        #[test]
        fn rederive_agrees_with_arithmetic(c in 0u64..40, a in 0u64..20, b in 0u64..20) {
            prop_assume!(c != a + b);
            let q = |t: u64, ans: bool| ThresholdQuery { threshold: t, string: BitString::new(), answer: ans };
            let triple = if c < a + b {
                PpTriple { case: PpCase::Below, queries: [q(c + 1, false), q(a, true), q(b, true)] }
            } else {
                PpTriple { case: PpCase::Above, queries: [q(c, true), q(a + 1, false), q(b + 1, false)] }
            };
            prop_assert!(triple.rederive());
        }
    }
}
