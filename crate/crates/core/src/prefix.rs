//! Prefix-extension list-refuter for languages closed under bounded
//! quantification, and the conversion of constant-size list-refuters into
//! single-output refuters.
//!
//! The refuter grows a prefix `x` one bit at a time, trying `1` before `0`,
//! keeping it only while the decider (through a two-query reduction) claims some
//! length-`n` completion of `x` is an input it gets wrong.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::decider::DeciderHandle;
use crate::dsr::Combiner;
use crate::error::{Error, Result};
use crate::instance::{encode, Formula3CNF, Instance, Layout, Lit, PaddingScheme, QBFormula, Quantifier};
use crate::list::CounterexampleList;
use crate::oracle::{Language, OracleBudget};

/// Largest `n` at which error sets are computed by brute force.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 16;

/// "Some length-`n` string extending `prefix` is one the decider gets wrong."
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GAQuery {
    n: usize,
    prefix: BitString,
}

impl GAQuery {
    pub fn new(n: usize, prefix: BitString) -> Result<Self> {
        if prefix.len() > n {
            return Err(Error::Length { len: prefix.len(), target: n });
        }
        Ok(Self { n, prefix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prefix(&self) -> &BitString {
        &self.prefix
    }
}

/// Ground truth and the decider's answer on every string of one length.
#[derive(Clone, Debug)]
pub struct ErrorTable {
    n: usize,
    /// Indexed by the string read as a big-endian integer.
    truth: Vec<bool>,
    answer: Vec<bool>,
}

impl ErrorTable {
    pub fn build(
        language: Language,
        decider: &DeciderHandle,
        n: usize,
        cap: usize,
        budget: &OracleBudget,
    ) -> Result<Self> {
        if n > cap {
            return Err(Error::BudgetExceeded(format!("exhaustive error table at length {n} exceeds cap {cap}")));
        }
        let mut probe = decider.fresh();
        probe.set_recording(false);
        let mut truth = Vec::with_capacity(1 << n);
        let mut answer = Vec::with_capacity(1 << n);
        for y in BitString::all_of_length(n) {
            truth.push(language.member(&y, budget)?);
            answer.push(probe.decide(&y));
        }
        Ok(Self { n, truth, answer })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn error_count(&self) -> usize {
        self.truth.iter().zip(&self.answer).filter(|(t, a)| t != a).count()
    }

    /// Whether some completion `y` of `prefix` has truth `b` and answer `!b`.
    pub fn half(&self, prefix: &BitString, b: bool) -> bool {
        let free = self.n - prefix.len();
        let start = (prefix.to_u64() as usize) << free;
        (start..start + (1 << free)).any(|i| self.truth[i] == b && self.answer[i] != b)
    }

    pub fn erring(&self, prefix: &BitString) -> bool {
        self.half(prefix, true) || self.half(prefix, false)
    }
}

/// Brute-force membership in the decider's error set.
pub fn decide_ga_exact(
    language: Language,
    decider: &DeciderHandle,
    q: &GAQuery,
    cap: usize,
    budget: &OracleBudget,
) -> Result<bool> {
    Ok(ErrorTable::build(language, decider, q.n, cap, budget)?.erring(&q.prefix))
}

/// A fixed instance with known membership, encoded at `len` bits.
pub fn canonical_instance(language: Language, value: bool, len: usize) -> Result<BitString> {
    // (x1) has exactly one model, so it is true for counting parity too.
    let matrix = if value { Formula3CNF::new(1, vec![[Lit::pos(1); 3]]) } else { Formula3CNF::contradiction(1) };
    let instance = match language {
        Language::Sat | Language::Parity => Instance::Cnf(matrix),
        Language::Qbf => Instance::Qbf(QBFormula::new(vec![Quantifier::Exists], matrix)),
        Language::Threshold => {
            return Err(Error::UnsupportedCapability {
                decider: "prefix reduction".into(),
                capability: "threshold instances",
            })
        }
    };
    encode(&instance, Layout::Compact, len)
}

/// Two `l(n)`-bit queries whose membership bits, combined, answer a [`GAQuery`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedQuery {
    pub queries: [BitString; 2],
    pub combine: Combiner,
}

/// Decides the error set exactly and emits canonical instances carrying the two
/// halves (wrong on a member, wrong on a non-member), combined with OR.
pub struct OracleReduction {
    language: Language,
    padding: PaddingScheme,
    cap: usize,
    budget: OracleBudget,
    tables: HashMap<usize, ErrorTable>,
}

impl OracleReduction {
    pub fn new(language: Language, padding: PaddingScheme, budget: OracleBudget) -> Self {
        Self { language, padding, cap: DEFAULT_EXHAUSTIVE_CAP, budget, tables: HashMap::new() }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn padding(&self) -> &PaddingScheme {
        &self.padding
    }

    pub fn query_len(&self, n: usize) -> usize {
        self.padding.eval(n)
    }

    pub fn table(&mut self, decider: &DeciderHandle, n: usize) -> Result<&ErrorTable> {
        if !self.tables.contains_key(&n) {
            let t = ErrorTable::build(self.language, decider, n, self.cap, &self.budget)?;
            self.tables.insert(n, t);
        }
        Ok(&self.tables[&n])
    }

    pub fn reduce(&mut self, decider: &DeciderHandle, q: &GAQuery) -> Result<ReducedQuery> {
        let (language, len) = (self.language, self.query_len(q.n));
        let table = self.table(decider, q.n)?;
        let (wrong_on_member, wrong_on_nonmember) = (table.half(&q.prefix, true), table.half(&q.prefix, false));
        Ok(ReducedQuery {
            queries: [
                canonical_instance(language, wrong_on_member, len)?,
                canonical_instance(language, wrong_on_nonmember, len)?,
            ],
            combine: Combiner::Or,
        })
    }
}

/// Which way the prefix search ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalCase {
    /// Neither one-bit extension of the empty prefix was accepted.
    EmptyPrefix,
    /// Stuck at a proper, non-empty prefix.
    PartialPrefix,
    /// Reached a full length-`n` string.
    FullString,
}

impl TerminalCase {
    pub fn id(self) -> &'static str {
        match self {
            TerminalCase::EmptyPrefix => "empty-prefix",
            TerminalCase::PartialPrefix => "partial-prefix",
            TerminalCase::FullString => "full-string",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixRun {
    pub list: CounterexampleList,
    pub case: TerminalCase,
    pub prefix: BitString,
    /// Whether the reduction saw any error at length `n`; when it did not the run
    /// is tagged `no-violation`.
    pub error_at_n: bool,
}

/// Maximum number of strings a run returns.
pub const PREFIX_LIST_BOUND: usize = 6;

pub fn prefix_refute(decider: &mut DeciderHandle, n: usize, reduction: &mut OracleReduction) -> Result<PrefixRun> {
    let language = reduction.language();
    let mut ask = |decider: &mut DeciderHandle, prefix: &BitString| -> Result<(bool, ReducedQuery)> {
        let r = reduction.reduce(decider, &GAQuery::new(n, prefix.clone())?)?;
        let a = decider.decide(&r.queries[0]);
        let b = decider.decide(&r.queries[1]);
        Ok((r.combine.apply(a, b), r))
    };
    let mut x = BitString::new();
    let mut stuck = None;
    for _ in 0..n {
        let (one, r1) = ask(decider, &x.with(true))?;
        if one {
            x.push(true);
            continue;
        }
        let (zero, r0) = ask(decider, &x.with(false))?;
        if zero {
            x.push(false);
            continue;
        }
        let (_, here) = ask(decider, &x)?;
        stuck = Some([here, r0, r1]);
        break;
    }

    let mut list = CounterexampleList::new(PREFIX_LIST_BOUND, "");
    let push_unique = |list: &mut CounterexampleList, s: BitString, role: &str| {
        if !list.strings().any(|t| *t == s) {
            list.push(s, language, role);
        }
    };
    let case = match stuck {
        Some(reductions) => {
            for (r, name) in reductions.into_iter().zip(["prefix", "prefix-0", "prefix-1"]) {
                for (q, half) in r.queries.into_iter().zip(["member", "nonmember"]) {
                    push_unique(&mut list, q, &format!("query-{name}-{half}"));
                }
            }
            if x.is_empty() {
                TerminalCase::EmptyPrefix
            } else {
                TerminalCase::PartialPrefix
            }
        }
        None => {
            let (_, r) = ask(decider, &x)?;
            push_unique(&mut list, x.clone(), "final-string");
            for (q, half) in r.queries.into_iter().zip(["member", "nonmember"]) {
                push_unique(&mut list, q, &format!("query-final-{half}"));
            }
            TerminalCase::FullString
        }
    };
    debug_assert!(list.len() <= PREFIX_LIST_BOUND);
    let error_at_n = reduction.table(decider, n)?.error_count() > 0;
    list.outcome = if error_at_n { case.id().to_string() } else { format!("{}/no-violation", case.id()) };
    Ok(PrefixRun { list, case, prefix: x, error_at_n })
}

/// A strictly increasing length function with `l(n) >= n` (the identity allowed).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthPoly {
    coeffs: Vec<u64>,
}

impl LengthPoly {
    pub fn new(coeffs: Vec<u64>) -> Result<Self> {
        let p = Self { coeffs };
        for n in 1..=256 {
            if p.eval(n) < n || p.eval(n) <= p.eval(n - 1) {
                return Err(Error::Config(format!("length polynomial is not increasing with l(n) >= n at n = {n}")));
            }
        }
        Ok(p)
    }

    pub fn identity() -> Self {
        Self { coeffs: vec![0, 1] }
    }

    pub fn eval(&self, n: usize) -> usize {
        self.coeffs.iter().rev().fold(0u64, |acc, &c| acc.saturating_mul(n as u64).saturating_add(c)) as usize
    }

    pub fn preimage(&self, len: usize) -> Option<usize> {
        (0..=len).take_while(|&n| self.eval(n) <= len).find(|&n| self.eval(n) == len)
    }
}

impl From<&PaddingScheme> for LengthPoly {
    fn from(p: &PaddingScheme) -> Self {
        Self { coeffs: p.coeffs().to_vec() }
    }
}

/// A list-refuter with a fixed number of entries, entry `i` of length `l_i(n)`.
pub type ListRefuterFn = dyn Fn(usize) -> Result<Vec<BitString>> + Send + Sync;

/// Entry `index` of a list-refuter, run at the `n` with `l_index(n) = len`.
#[derive(Clone)]
pub struct LiftedRefuter {
    source: Arc<ListRefuterFn>,
    polys: Arc<[LengthPoly]>,
    index: usize,
}

impl std::fmt::Debug for LiftedRefuter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiftedRefuter").field("index", &self.index).field("poly", &self.polys[self.index]).finish()
    }
}

impl LiftedRefuter {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn poly(&self) -> &LengthPoly {
        &self.polys[self.index]
    }

    /// The refuter's parameter for target length `len`, if `len` is in the image of its polynomial.
    pub fn parameter(&self, len: usize) -> Option<usize> {
        self.poly().preimage(len)
    }

    /// Output at target length `len`; `None` when `len` is not a length this refuter targets.
    pub fn emit(&self, len: usize) -> Result<Option<BitString>> {
        let Some(n) = self.parameter(len) else { return Ok(None) };
        let entries = (self.source)(n)?;
        check_lengths(&entries, &self.polys, n)?;
        Ok(Some(entries[self.index].clone()))
    }
}

fn check_lengths(entries: &[BitString], polys: &[LengthPoly], n: usize) -> Result<()> {
    if entries.len() != polys.len() {
        return Err(Error::Config(format!(
            "list has {} entries, {} length polynomials declared",
            entries.len(),
            polys.len()
        )));
    }
    for (index, (e, p)) in entries.iter().zip(polys).enumerate() {
        if e.len() != p.eval(n) {
            return Err(Error::LengthMismatch { index, expected: p.eval(n), actual: e.len() });
        }
    }
    Ok(())
}

/// One single-output refuter per list entry.
pub fn lift_list_refuter(list_refuter: Arc<ListRefuterFn>, length_polys: Vec<LengthPoly>) -> Vec<LiftedRefuter> {
    let polys: Arc<[LengthPoly]> = length_polys.into();
    (0..polys.len()).map(|index| LiftedRefuter { source: list_refuter.clone(), polys: polys.clone(), index }).collect()
}

/// Number of fixed slots in [`prefix_slots`]: one length-`n` slot, then six `l(n)` slots.
pub const PREFIX_SLOTS: usize = 7;

/// Arranges a prefix run's list into fixed slots so it can be lifted: slot 0 is the
/// final string zero-extended to `n`, slots 1..=6 the reduction queries in order,
/// the last one repeated to fill.
pub fn prefix_slots(run: &PrefixRun, n: usize, query_len: usize) -> Vec<BitString> {
    debug_assert!(query_len > n);
    let mut slots = vec![run.prefix.zero_extended(n)];
    slots.extend(run.list.strings().filter(|s| s.len() == query_len).cloned());
    let filler = slots.last().filter(|s| s.len() == query_len).cloned().unwrap_or_else(|| BitString::zeros(query_len));
    slots.resize(PREFIX_SLOTS, filler);
    slots
}

/// The lifted refuters of the prefix refuter against one decider.
pub fn lifted_prefix_refuters(
    decider: DeciderHandle,
    padding: PaddingScheme,
    budget: OracleBudget,
) -> Vec<LiftedRefuter> {
    let language = decider.language();
    let polys: Vec<LengthPoly> = std::iter::once(LengthPoly::identity())
        .chain(std::iter::repeat_n(LengthPoly::from(&padding), PREFIX_SLOTS - 1))
        .collect();
    let source = move |n: usize| -> Result<Vec<BitString>> {
        let mut reduction = OracleReduction::new(language, padding.clone(), budget);
        let mut a = decider.fresh();
        let run = prefix_refute(&mut a, n, &mut reduction)?;
        Ok(prefix_slots(&run, n, reduction.query_len(n)))
    };
    lift_list_refuter(Arc::new(source), polys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decider::{catalog_entry, from_fn};

    fn budget() -> OracleBudget {
        OracleBudget::default()
    }

    #[test]
    fn ga_on_exact_decider_is_empty() {
        let a = catalog_entry(Language::Sat, "exact").unwrap();
        for n in 0..=8 {
            let t = ErrorTable::build(Language::Sat, &a, n, 16, &budget()).unwrap();
            assert_eq!(t.error_count(), 0);
            assert!(!decide_ga_exact(Language::Sat, &a, &GAQuery::new(n, BitString::new()).unwrap(), 16, &budget())
                .unwrap());
        }
    }

    #[test]
    fn ga_full_prefix_is_pointwise_error() {
        let a = catalog_entry(Language::Sat, "const0").unwrap();
        let t = ErrorTable::build(Language::Sat, &a, 8, 16, &budget()).unwrap();
        for y in BitString::all_of_length(8) {
            assert_eq!(t.erring(&y), Language::Sat.member(&y, &budget()).unwrap());
        }
        assert!(t.erring(&BitString::new()));
        assert!(matches!(ErrorTable::build(Language::Sat, &a, 17, 16, &budget()), Err(Error::BudgetExceeded(_))));
        assert!(GAQuery::new(2, BitString::zeros(3)).is_err());
    }

    #[test]
    fn canonical_instances_have_their_value_at_every_length() {
        for lang in [Language::Sat, Language::Qbf, Language::Parity] {
            for len in 16..40 {
                for v in [false, true] {
                    let s = canonical_instance(lang, v, len).unwrap();
                    assert_eq!(s.len(), len);
                    assert_eq!(lang.member(&s, &budget()).unwrap(), v);
                }
            }
        }
    }

    #[test]
    fn reduction_emits_padded_length_and_matches_ga() {
        let a = catalog_entry(Language::Sat, "clause-count-threshold").unwrap();
        let mut r = OracleReduction::new(Language::Sat, PaddingScheme::default(), budget());
        for x in (0..=4).flat_map(BitString::all_of_length) {
            let q = GAQuery::new(9, x).unwrap();
            let red = r.reduce(&a, &q).unwrap();
            assert!(red.queries.iter().all(|s| s.len() == 25));
            let bits = red.queries.clone().map(|s| Language::Sat.member(&s, &budget()).unwrap());
            let g = decide_ga_exact(Language::Sat, &a, &q, 16, &budget()).unwrap();
            assert_eq!(red.combine.apply(bits[0], bits[1]), g);
        }
    }

    #[test]
    fn exact_decider_ends_empty_with_no_violation() {
        let mut a = catalog_entry(Language::Qbf, "exact").unwrap();
        let mut r = OracleReduction::new(Language::Qbf, PaddingScheme::default(), budget());
        let mut run = prefix_refute(&mut a, 8, &mut r).unwrap();
        assert_eq!(run.case, TerminalCase::EmptyPrefix);
        assert!(run.list.outcome.ends_with("no-violation"));
        run.list.verify(&mut a, &budget()).unwrap();
        assert!(!run.list.has_counterexample());
    }

    #[test]
    fn const0_run_reaches_a_counterexample() {
        let mut a = catalog_entry(Language::Sat, "const0").unwrap();
        let mut r = OracleReduction::new(Language::Sat, PaddingScheme::default(), budget());
        let mut run = prefix_refute(&mut a, 12, &mut r).unwrap();
        assert!(run.list.len() <= PREFIX_LIST_BOUND);
        run.list.verify(&mut a, &budget()).unwrap();
        assert!(run.list.has_counterexample());
    }

    #[test]
    fn decider_wrong_only_on_padded_false_instance_is_caught() {
        let n = 6;
        let bad = canonical_instance(Language::Sat, false, PaddingScheme::default().eval(n)).unwrap();
        let b = budget();
        let mut a = from_fn("liar", Language::Sat, move |x| x == &bad || Language::Sat.member(x, &b).unwrap());
        let mut r = OracleReduction::new(Language::Sat, PaddingScheme::default(), budget());
        let mut run = prefix_refute(&mut a, n, &mut r).unwrap();
        assert_eq!(run.case, TerminalCase::FullString);
        run.list.verify(&mut a, &budget()).unwrap();
        assert!(run.list.entries.iter().any(|e| e.string.len() == 22 && e.verdict.unwrap().counterexample));
    }

    #[test]
    fn identity_lift_and_length_checks() {
        let source: Arc<ListRefuterFn> = Arc::new(|n| Ok(vec![BitString::zeros(n)]));
        let lifted = lift_list_refuter(source, vec![LengthPoly::identity()]);
        assert_eq!(lifted[0].emit(5).unwrap(), Some(BitString::zeros(5)));
        let wrong: Arc<ListRefuterFn> = Arc::new(|n| Ok(vec![BitString::zeros(n), BitString::zeros(n)]));
        let lifted = lift_list_refuter(wrong, vec![LengthPoly::identity(), LengthPoly::new(vec![1, 2]).unwrap()]);
        assert!(matches!(lifted[1].emit(7), Err(Error::LengthMismatch { index: 1, expected: 7, actual: 3 })));
        assert_eq!(lifted[1].emit(8).unwrap(), None);
        assert!(LengthPoly::new(vec![5]).is_err());
    }

    #[test]
    fn lifted_prefix_slots_have_declared_lengths() {
        let a = catalog_entry(Language::Sat, "const1").unwrap();
        let lifted = lifted_prefix_refuters(a, PaddingScheme::default(), budget());
        assert_eq!(lifted.len(), PREFIX_SLOTS);
        for n in 1..=8 {
            assert_eq!(lifted[0].emit(n).unwrap().unwrap().len(), n);
            assert_eq!(lifted[3].emit(n + 16).unwrap().unwrap().len(), n + 16);
        }
    }
}
