//! Refuting a claimed decider for a downward self-reducible language.
//!
//! For a string `x` of length `m <= n`, the *condition* at `x` says the
//! decider's answer on `x` padded to length `n` differs from the one-step
//! self-reduction of `x` evaluated with the padded decider as its oracle.
//! Invalid strings reduce to 0. The shortest string meeting the condition,
//! padded to length `n`, is an input the decider gets wrong.
//!
//! Two backends find it. `Exact` enumerates strings by length and then
//! lexicographically, asking the decider directly. `Compiled` never looks at
//! the decider except through its answers: it compiles "some string of length
//! `m` (with prefix `y`) meets the condition" into SAT instances, asks the
//! decider about those, binary-searches the length and then extends a prefix.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::BooleanCircuit;
use crate::compile::{build_condition_circuit, tseitin_to_3cnf, Combine};
use crate::decider::DeciderHandle;
use crate::error::{Error, Result};
use crate::instance::{encode, encoded_len, Decoded, Formula3CNF, Instance, Layout, Lit, Restriction};
use crate::list::CounterexampleList;
use crate::oracle::Language;

/// Largest `n` the exact backend enumerates.
pub const EXACT_LENGTH_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsrLanguage {
    Sat,
    Parity,
    Qbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Compiled,
}

impl Backend {
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "exact" => Ok(Backend::Exact),
            "compiled" => Ok(Backend::Compiled),
            _ => Err(Error::Unknown { kind: "backend", id: id.to_string() }),
        }
    }
}

/// Value of one derived instance: decided outright, or the natural encoding of
/// a strictly shorter instance to be asked of the oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derived {
    Constant(bool),
    Query(BitString),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combiner {
    Or,
    Xor,
    And,
}

impl Combiner {
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            Combiner::Or => a | b,
            Combiner::Xor => a ^ b,
            Combiner::And => a & b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub derived: [Derived; 2],
    pub combine: Combiner,
}

impl DsrLanguage {
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "sat" => Ok(DsrLanguage::Sat),
            "parity" => Ok(DsrLanguage::Parity),
            "qbf" => Ok(DsrLanguage::Qbf),
            _ => Err(Error::Unknown { kind: "self-reducible language", id: id.to_string() }),
        }
    }

    pub fn language(self) -> Language {
        match self {
            DsrLanguage::Sat => Language::Sat,
            DsrLanguage::Parity => Language::Parity,
            DsrLanguage::Qbf => Language::Qbf,
        }
    }

    /// Combining gate for the compiled path; QBF has none.
    pub fn compiled_combine(self) -> Option<Combine> {
        match self {
            DsrLanguage::Sat => Some(Combine::Or),
            DsrLanguage::Parity => Some(Combine::Xor),
            DsrLanguage::Qbf => None,
        }
    }

    /// The one-step self-reduction of `x`: fix variable 1 both ways.
    pub fn reduce(self, x: &BitString) -> Result<Reduction> {
        let instance = match self.language().codec().decode(x) {
            Decoded::Valid(i) => i,
            Decoded::Invalid => return Err(Error::Decode),
        };
        let derive = |r: Restriction<Instance>| match r {
            Restriction::Constant(b) => Derived::Constant(b),
            Restriction::Instance(i) => Derived::Query(
                encode(&i, Layout::Compact, encoded_len(&i, Layout::Compact)).expect("natural length fits"),
            ),
        };
        let lift_cnf = |r: Restriction<Formula3CNF>| match r {
            Restriction::Constant(b) => Restriction::Constant(b),
            Restriction::Instance(f) => Restriction::Instance(Instance::Cnf(f)),
        };
        Ok(match (self, instance) {
            (DsrLanguage::Sat | DsrLanguage::Parity, Instance::Cnf(f)) => Reduction {
                derived: [derive(lift_cnf(f.restrict_first(false))), derive(lift_cnf(f.restrict_first(true)))],
                combine: if self == DsrLanguage::Sat { Combiner::Or } else { Combiner::Xor },
            },
            (DsrLanguage::Qbf, Instance::Qbf(q)) => {
                let lift = |r: Restriction<_>| match r {
                    Restriction::Constant(b) => Restriction::Constant(b),
                    Restriction::Instance(q) => Restriction::Instance(Instance::Qbf(q)),
                };
                let combine = match q.quantifiers[0] {
                    crate::instance::Quantifier::Exists => Combiner::Or,
                    crate::instance::Quantifier::Forall => Combiner::And,
                };
                Reduction {
                    derived: [derive(lift(q.restrict_first(false))), derive(lift(q.restrict_first(true)))],
                    combine,
                }
            }
            _ => unreachable!("codec matches language"),
        })
    }
}

/// The self-reduction of `x` evaluated with `oracle` on the derived instances.
pub fn dsr_eval(lang: DsrLanguage, x: &BitString, mut oracle: impl FnMut(&BitString) -> bool) -> Result<bool> {
    let r = lang.reduce(x)?;
    let mut value = |d: &Derived| match d {
        Derived::Constant(b) => *b,
        Derived::Query(y) => {
            debug_assert!(y.len() < x.len(), "derived instances are strictly shorter");
            oracle(y)
        }
    };
    let a = value(&r.derived[0]);
    let b = value(&r.derived[1]);
    Ok(r.combine.apply(a, b))
}

/// `x` zero-extended to length `n`; for the compact codecs this is exactly
/// padding (decoding, and so membership, is unchanged).
pub fn pad(x: &BitString, n: usize) -> BitString {
    x.zero_extended(n)
}

/// Memoized decider answers on padded strings.
struct PaddedDecider<'a> {
    decider: &'a mut DeciderHandle,
    n: usize,
    cache: HashMap<BitString, bool>,
}

impl PaddedDecider<'_> {
    fn answer(&mut self, x: &BitString) -> bool {
        let y = pad(x, self.n);
        if let Some(&b) = self.cache.get(&y) {
            return b;
        }
        let b = self.decider.decide(&y);
        self.cache.insert(y, b);
        b
    }
}

/// Whether the condition holds at `x` (|x| <= n), asking `decider` directly.
pub fn condition_holds(lang: DsrLanguage, decider: &mut DeciderHandle, n: usize, x: &BitString) -> bool {
    let mut padded = PaddedDecider { decider, n, cache: HashMap::new() };
    condition_with(lang, &mut padded, x)
}

fn condition_with(lang: DsrLanguage, padded: &mut PaddedDecider<'_>, x: &BitString) -> bool {
    let direct = padded.answer(x);
    let reduced = match dsr_eval(lang, x, |y| padded.answer(y)) {
        Ok(v) => v,
        Err(_) => false,
    };
    direct != reduced
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchOutcome {
    /// `x` meets the condition; with the exact backend it is the lexicographically
    /// first among the shortest such strings.
    Violation { x: BitString, m: usize, below: Option<BitString> },
    /// The decider's answers on these queries cannot all be right.
    Inconsistency { queries: Vec<BitString> },
    /// No string meets the condition (exact), or the decider claims so on `query` (compiled).
    NoViolation { query: Option<BitString> },
}

/// The compiled queries at one target length.
pub struct CompiledQueries {
    n: usize,
    conditions: Vec<Formula3CNF>,
    query_len: usize,
}

impl CompiledQueries {
    /// Compiles the condition circuits for every length `0..=n` from the decider's circuit at `n`.
    pub fn new(lang: DsrLanguage, decider: &DeciderHandle, n: usize) -> Result<Self> {
        let combine = lang.compiled_combine().ok_or(Error::UnsupportedCapability {
            decider: decider.id().to_string(),
            capability: "compiled self-reduction for quantified formulas",
        })?;
        let circuit = decider.as_circuit(n)?;
        Self::from_circuit(&circuit, combine)
    }

    pub fn from_circuit(circuit: &BooleanCircuit, combine: Combine) -> Result<Self> {
        let n = circuit.arity();
        let mut conditions = Vec::with_capacity(n + 1);
        let mut query_len = 0;
        for m in 0..=n {
            let f = tseitin_to_3cnf(&build_condition_circuit(circuit, combine, m)?);
            // Room for up to `m` prefix units.
            let mut widest = f.clone();
            widest.clauses.extend(std::iter::repeat_n([Lit::pos(1); 3], m));
            query_len = query_len.max(encoded_len(&Instance::Cnf(widest), Layout::Compact));
            conditions.push(f);
        }
        Ok(Self { n, conditions, query_len })
    }

    pub fn query_len(&self) -> usize {
        self.query_len
    }

    /// "Some string of length `m` starting with `prefix` meets the condition", as a SAT string.
    pub fn query(&self, m: usize, prefix: &BitString) -> BitString {
        assert!(m <= self.n && prefix.len() <= m, "query outside the compiled range");
        let mut f = self.conditions[m].clone();
        for (i, &b) in prefix.bits().iter().enumerate() {
            let var = i as u32 + 1;
            f.clauses.push([if b { Lit::pos(var) } else { Lit::neg(var) }; 3]);
        }
        encode(&Instance::Cnf(f), Layout::Compact, self.query_len).expect("query length covers every prefix")
    }

    /// The formula behind [`Self::query`] for `prefix`, for direct inspection.
    pub fn condition_formula(&self, m: usize) -> &Formula3CNF {
        &self.conditions[m]
    }
}

/// Finds the shortest string meeting the condition at target length `n`.
pub fn find_shortest_violation(
    lang: DsrLanguage,
    decider: &mut DeciderHandle,
    n: usize,
    backend: Backend,
) -> Result<SearchOutcome> {
    match backend {
        Backend::Exact => exact_search(lang, decider, n),
        Backend::Compiled => {
            let queries = CompiledQueries::new(lang, decider, n)?;
            compiled_search(decider, &queries, n)
        }
    }
}

fn exact_search(lang: DsrLanguage, decider: &mut DeciderHandle, n: usize) -> Result<SearchOutcome> {
    if n > EXACT_LENGTH_CAP {
        return Err(Error::BudgetExceeded(format!("exact search is capped at length {EXACT_LENGTH_CAP}")));
    }
    let mut padded = PaddedDecider { decider, n, cache: HashMap::new() };
    for m in 0..=n {
        for x in BitString::all_of_length(m) {
            if condition_with(lang, &mut padded, &x) {
                return Ok(SearchOutcome::Violation { x, m, below: None });
            }
        }
    }
    Ok(SearchOutcome::NoViolation { query: None })
}

/// Binary search over lengths, then prefix extension preferring 0.
pub fn compiled_search(decider: &mut DeciderHandle, queries: &CompiledQueries, n: usize) -> Result<SearchOutcome> {
    let empty = BitString::new();
    let top = queries.query(n, &empty);
    if !decider.decide(&top) {
        return Ok(SearchOutcome::NoViolation { query: Some(top) });
    }
    // Invariant: the decider says yes at `hi` and no at `lo` (length -1 is vacuously no).
    let (mut lo, mut hi): (i64, i64) = (-1, n as i64);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if decider.decide(&queries.query(mid as usize, &empty)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let m = hi as usize;
    let below = (m > 0).then(|| queries.query(m - 1, &empty));
    let mut prefix = BitString::new();
    while prefix.len() < m {
        let current = queries.query(m, &prefix);
        let zero = queries.query(m, &prefix.with(false));
        if decider.decide(&zero) {
            prefix.push(false);
            continue;
        }
        let one = queries.query(m, &prefix.with(true));
        if decider.decide(&one) {
            prefix.push(true);
            continue;
        }
        return Ok(SearchOutcome::Inconsistency { queries: vec![current, zero, one] });
    }
    Ok(SearchOutcome::Violation { x: prefix, m, below })
}

/// Runs the search and turns its outcome into a counterexample list.
///
/// On a violation `x*` of length `m`, the list holds `x*` padded to `n` and,
/// for the compiled backend, the length-`(m-1)` existence query: if `x*` is not
/// the shortest violation, the decider wrongly denied that query. A compiled
/// violation whose final full-prefix query is false is itself reported as an
/// inconsistency.
pub fn refute_dsr(
    lang: DsrLanguage,
    decider: &mut DeciderHandle,
    n: usize,
    backend: Backend,
) -> Result<CounterexampleList> {
    let language = lang.language();
    let queries = match backend {
        Backend::Compiled => Some(CompiledQueries::new(lang, decider, n)?),
        Backend::Exact => None,
    };
    let outcome = match &queries {
        Some(q) => compiled_search(decider, q, n)?,
        None => exact_search(lang, decider, n)?,
    };
    Ok(match outcome {
        SearchOutcome::Violation { x, m, below } => {
            if condition_holds(lang, decider, n, &x) {
                let mut list = CounterexampleList::new(2, "violation");
                list.push(pad(&x, n), language, "padded-shortest-violation");
                if let Some(q) = below {
                    list.push(q, language, "existence-query-below");
                }
                list
            } else {
                let q = queries.as_ref().expect("only the compiled search can end on a non-violation");
                let mut list = CounterexampleList::new(3, "inconsistency");
                list.push(q.query(m, &x), language, "accepted-false-completion");
                list
            }
        }
        SearchOutcome::Inconsistency { queries } => {
            let mut list = CounterexampleList::new(3, "inconsistency");
            for (q, role) in queries.into_iter().zip(["accepted-prefix", "rejected-zero", "rejected-one"]) {
                list.push(q, language, role);
            }
            list
        }
        SearchOutcome::NoViolation { query } => {
            let mut list = CounterexampleList::new(1, "no-violation");
            if let Some(q) = query {
                list.push(q, language, "denied-existence-query");
            }
            list
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decider::catalog_entry;
    use crate::instance::encode_natural;
    use crate::oracle::{count_sat, qbf_eval, OracleBudget};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn base_case_strings_reduce_to_constants() {
        // (x1 | x1 | x1) over one variable: both restrictions are constants.
        let x = encode_natural(&Instance::Cnf(Formula3CNF::new(1, vec![[Lit::pos(1); 3]])), Layout::Compact);
        let r = DsrLanguage::Sat.reduce(&x).unwrap();
        assert_eq!(r.derived, [Derived::Constant(false), Derived::Constant(true)]);
        assert!(dsr_eval(DsrLanguage::Sat, &x, |_| panic!("no oracle call expected")).unwrap());
        assert!(dsr_eval(DsrLanguage::Parity, &x, |_| unreachable!()).unwrap());
        assert!(matches!(dsr_eval(DsrLanguage::Sat, &BitString::zeros(8), |_| false), Err(Error::Decode)));
    }

    #[test]
    fn dsr_eval_with_exact_oracle_matches_ground_truth() {
        let budget = OracleBudget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..300 {
            let v = rng.random_range(1..=12u32);
            let c = rng.random_range(0..12);
            let clauses = (0..c)
                .map(|_| std::array::from_fn(|_| Lit { var: rng.random_range(1..=v), negated: rng.random() }))
                .collect();
            let f = Formula3CNF::new(v, clauses);
            let x = encode_natural(&Instance::Cnf(f.clone()), Layout::Compact);
            let count = count_sat(&f, &budget).unwrap();
            let sat = dsr_eval(DsrLanguage::Sat, &x, |y| Language::Sat.member(y, &budget).unwrap()).unwrap();
            let par = dsr_eval(DsrLanguage::Parity, &x, |y| Language::Parity.member(y, &budget).unwrap()).unwrap();
            assert_eq!(sat, count > 0);
            assert_eq!(par, count % 2 == 1);
            let quants = (0..v)
                .map(|_| {
                    if rng.random() {
                        crate::instance::Quantifier::Forall
                    } else {
                        crate::instance::Quantifier::Exists
                    }
                })
                .collect();
            let q = crate::instance::QBFormula::new(quants, f);
            let xq = encode_natural(&Instance::Qbf(q.clone()), Layout::Compact);
            let val = dsr_eval(DsrLanguage::Qbf, &xq, |y| Language::Qbf.member(y, &budget).unwrap()).unwrap();
            assert_eq!(val, qbf_eval(&q, &budget).unwrap());
        }
    }

    #[test]
    fn exact_decider_has_no_violation() {
        for n in 0..=10 {
            let mut a = catalog_entry(Language::Sat, "exact").unwrap();
            let out = find_shortest_violation(DsrLanguage::Sat, &mut a, n, Backend::Exact).unwrap();
            assert_eq!(out, SearchOutcome::NoViolation { query: None });
        }
    }

    #[test]
    fn const0_first_violation_is_shortest_true_base_case() {
        let mut a = catalog_entry(Language::Sat, "const0").unwrap();
        let out = find_shortest_violation(DsrLanguage::Sat, &mut a, 10, Backend::Exact).unwrap();
        // "1001" is the one-variable empty formula, the shortest satisfiable encoding.
        assert_eq!(out, SearchOutcome::Violation { x: BitString::from_binary("1001").unwrap(), m: 4, below: None });
        let list = refute_dsr(DsrLanguage::Sat, &mut a, 10, Backend::Exact).unwrap();
        assert_eq!(list.entries[0].string, BitString::from_binary("1001000000").unwrap());
    }

    #[test]
    fn compiled_search_on_const1_is_verified() {
        let budget = OracleBudget::default();
        for n in [4, 6, 8] {
            let mut a = catalog_entry(Language::Sat, "const1").unwrap();
            let mut list = refute_dsr(DsrLanguage::Sat, &mut a, n, Backend::Compiled).unwrap();
            list.verify(&mut a, &budget).unwrap();
            assert!(list.has_counterexample(), "n={n}: {list:?}");
        }
    }

    #[test]
    fn qbf_has_no_compiled_path() {
        let mut a = catalog_entry(Language::Qbf, "const0").unwrap();
        assert!(matches!(
            refute_dsr(DsrLanguage::Qbf, &mut a, 6, Backend::Compiled),
            Err(Error::UnsupportedCapability { .. })
        ));
        let mut w = catalog_entry(Language::Sat, "walksat").unwrap();
        assert!(matches!(
            refute_dsr(DsrLanguage::Sat, &mut w, 6, Backend::Compiled),
            Err(Error::UnsupportedCapability { .. })
        ));
    }
}
