//! Exact ground truth: model counting, QBF evaluation, minimum circuit size and
//! Circuit-Min-Merge.
//!
//! Counting enumerates assignments bit-parallel up to 16 variables and switches
//! to a counting DPLL with unit propagation above that. Its search tree is
//! capped at `2^max_vars` nodes, so the answer is exact or `BudgetExceeded`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::circuit::{input_word, table_mask, BooleanCircuit, Gate, GateOp, Wire};
use crate::error::{Error, Result};
use crate::instance::{
    Codec, Decoded, Formula3CNF, Instance, Lit, QBFormula, Quantifier, ThresholdInstance, TruthTable,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_vars: u32,
    pub max_circuit_size: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_vars: 24, max_circuit_size: 6 }
    }
}

impl OracleBudget {
    pub fn new(max_vars: u32, max_circuit_size: usize) -> Result<Self> {
        if max_vars == 0 || max_circuit_size == 0 {
            return Err(Error::Config("oracle caps must be positive".into()));
        }
        Ok(Self { max_vars, max_circuit_size })
    }

    fn node_cap(&self) -> u64 {
        1u64 << self.max_vars.min(40)
    }
}

/// The hard languages, each read through its compact codec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    /// Satisfiable 3-CNF formulas.
    Sat,
    /// 3-CNF formulas with an odd number of models.
    Parity,
    /// True closed QBFs.
    Qbf,
    /// Pairs `(formula, t)` with at least `t` models.
    Threshold,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::Sat, Language::Parity, Language::Qbf, Language::Threshold];

    pub fn codec(self) -> Codec {
        match self {
            Language::Sat | Language::Parity => Codec::CNF,
            Language::Qbf => Codec::QBF,
            Language::Threshold => Codec::THRESHOLD,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Language::Sat => "sat",
            Language::Parity => "parity",
            Language::Qbf => "qbf",
            Language::Threshold => "threshold",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.id() == id)
            .ok_or_else(|| Error::Unknown { kind: "language", id: id.to_string() })
    }

    /// Exact membership of a decoded instance.
    pub fn holds(self, instance: &Instance, budget: &OracleBudget) -> Result<bool> {
        match (self, instance) {
            (Language::Sat, Instance::Cnf(f)) => sat(f, budget),
            (Language::Parity, Instance::Cnf(f)) => parity_sat(f, budget),
            (Language::Qbf, Instance::Qbf(q)) => qbf_eval(q, budget),
            (Language::Threshold, Instance::Threshold(t)) => threshold_holds(t, budget),
            _ => Ok(false),
        }
    }

    /// Exact membership of a string; invalid strings are non-members.
    pub fn member(self, x: &BitString, budget: &OracleBudget) -> Result<bool> {
        match self.codec().decode(x) {
            Decoded::Valid(instance) => self.holds(&instance, budget),
            Decoded::Invalid => Ok(false),
        }
    }
}

impl std::fmt::Display for Language {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

pub fn threshold_holds(t: &ThresholdInstance, budget: &OracleBudget) -> Result<bool> {
    Ok(count_sat(&t.formula, budget)? >= t.threshold)
}

/// Exact number of satisfying assignments over all `num_vars` variables.
pub fn count_sat(f: &Formula3CNF, budget: &OracleBudget) -> Result<u64> {
    if f.num_vars > budget.max_vars {
        return Err(Error::BudgetExceeded(format!(
            "{} variables exceed the counting cap of {}",
            f.num_vars, budget.max_vars
        )));
    }
    if f.num_vars <= 16 {
        return Ok(count_by_enumeration(f));
    }
    let count = Dpll::new(f, budget.node_cap()).count()?;
    u64::try_from(count).map_err(|_| Error::BudgetExceeded("model count exceeds 64 bits".into()))
}

pub fn sat(f: &Formula3CNF, budget: &OracleBudget) -> Result<bool> {
    if f.num_vars <= 16 && f.num_vars <= budget.max_vars {
        return Ok(count_by_enumeration(f) > 0);
    }
    Ok(find_model(f, budget)?.is_some())
}

pub fn parity_sat(f: &Formula3CNF, budget: &OracleBudget) -> Result<bool> {
    if f.num_vars <= 16 && f.num_vars <= budget.max_vars {
        return Ok(count_by_enumeration(f) % 2 == 1);
    }
    Ok(Dpll::new(f, budget.node_cap()).count()? % 2 == 1)
}

/// A satisfying assignment indexed by `var - 1`, if one exists.
///
/// Unlike counting, satisfiability is not limited to `max_vars` variables:
/// only the DPLL search tree is capped. Tseitin encodings, whose auxiliary
/// variables are forced by propagation, stay cheap at any size.
pub fn find_model(f: &Formula3CNF, budget: &OracleBudget) -> Result<Option<Vec<bool>>> {
    Dpll::new(f, budget.node_cap()).solve()
}

fn count_by_enumeration(f: &Formula3CNF) -> u64 {
    let v = f.num_vars as usize;
    // Falsifying pattern per clause: assignment `a` falsifies it iff `a & mask == pattern`.
    let mut patterns = Vec::with_capacity(f.clauses.len());
    'clauses: for clause in &f.clauses {
        let (mut mask, mut pattern) = (0u32, 0u32);
        for l in clause {
            let bit = 1u32 << (l.var - 1);
            let falsifying = if l.negated { bit } else { 0 };
            if mask & bit != 0 {
                if pattern & bit != falsifying {
                    continue 'clauses; // x | !x
                }
            } else {
                mask |= bit;
                pattern |= falsifying;
            }
        }
        patterns.push((mask, pattern));
    }
    patterns.sort_unstable();
    patterns.dedup();
    (0..1u32 << v).filter(|&a| patterns.iter().all(|&(m, p)| a & m != p)).count() as u64
}

/// Counting / searching DPLL with counter-based unit propagation.
struct Dpll {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    occurrences: Vec<Vec<usize>>,
    value: Vec<Option<bool>>,
    true_count: Vec<u8>,
    false_count: Vec<u8>,
    unsatisfied: usize,
    assigned: usize,
    trail: Vec<u32>,
    nodes: u64,
    node_cap: u64,
}

fn lit_slot(l: Lit) -> usize {
    2 * l.var as usize + l.negated as usize
}

impl Dpll {
    fn new(f: &Formula3CNF, node_cap: u64) -> Self {
        let mut clauses = Vec::new();
        for clause in &f.clauses {
            let mut lits: Vec<Lit> = clause.to_vec();
            lits.sort_unstable();
            lits.dedup();
            if lits.windows(2).any(|w| w[0].var == w[1].var) {
                continue;
            }
            clauses.push(lits);
        }
        let mut occurrences = vec![Vec::new(); 2 * f.num_vars as usize + 2];
        for (i, c) in clauses.iter().enumerate() {
            for &l in c {
                occurrences[lit_slot(l)].push(i);
            }
        }
        let n = clauses.len();
        Self {
            num_vars: f.num_vars as usize,
            unsatisfied: n,
            clauses,
            occurrences,
            value: vec![None; f.num_vars as usize + 1],
            true_count: vec![0; n],
            false_count: vec![0; n],
            assigned: 0,
            trail: Vec::new(),
            nodes: 0,
            node_cap,
        }
    }

    /// Assigns and propagates; returns false on conflict. Assignments stay on the trail.
    fn assign(&mut self, var: u32, val: bool) -> bool {
        let mut queue = vec![(var, val)];
        let mut ok = true;
        while let Some((var, val)) = queue.pop() {
            match self.value[var as usize] {
                Some(existing) => {
                    if existing != val {
                        ok = false;
                        break;
                    }
                    continue;
                }
                None => {}
            }
            self.value[var as usize] = Some(val);
            self.assigned += 1;
            self.trail.push(var);
            let true_lit = Lit { var, negated: !val };
            for idx in 0..self.occurrences[lit_slot(true_lit)].len() {
                let c = self.occurrences[lit_slot(true_lit)][idx];
                if self.true_count[c] == 0 {
                    self.unsatisfied -= 1;
                }
                self.true_count[c] += 1;
            }
            for idx in 0..self.occurrences[lit_slot(!true_lit)].len() {
                let c = self.occurrences[lit_slot(!true_lit)][idx];
                self.false_count[c] += 1;
                if self.true_count[c] > 0 {
                    continue;
                }
                let len = self.clauses[c].len() as u8;
                if self.false_count[c] == len {
                    ok = false;
                } else if self.false_count[c] + 1 == len {
                    let unit = self.clauses[c]
                        .iter()
                        .copied()
                        .find(|l| self.value[l.var as usize].is_none())
                        .expect("one literal left");
                    queue.push((unit.var, !unit.negated));
                }
            }
            if !ok {
                break;
            }
        }
        ok
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().expect("trail");
            let val = self.value[var as usize].take().expect("assigned");
            self.assigned -= 1;
            let true_lit = Lit { var, negated: !val };
            for &c in &self.occurrences[lit_slot(true_lit)] {
                self.true_count[c] -= 1;
                if self.true_count[c] == 0 {
                    self.unsatisfied += 1;
                }
            }
            for &c in &self.occurrences[lit_slot(!true_lit)] {
                self.false_count[c] -= 1;
            }
        }
    }

    fn branch_var(&self) -> Option<u32> {
        (1..=self.num_vars as u32).find(|&v| {
            self.value[v as usize].is_none()
                && [false, true].iter().any(|&neg| {
                    self.occurrences[lit_slot(Lit { var: v, negated: neg })].iter().any(|&c| self.true_count[c] == 0)
                })
        })
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::BudgetExceeded(format!("DPLL search exceeded {} nodes", self.node_cap)));
        }
        Ok(())
    }

    fn initial_units(&mut self) -> bool {
        for c in 0..self.clauses.len() {
            if self.clauses[c].len() == 1 && self.true_count[c] == 0 {
                let l = self.clauses[c][0];
                if !self.assign(l.var, !l.negated) {
                    return false;
                }
            }
        }
        true
    }

    fn count(mut self) -> Result<u128> {
        if !self.initial_units() {
            return Ok(0);
        }
        self.count_rec()
    }

    fn count_rec(&mut self) -> Result<u128> {
        self.tick()?;
        if self.unsatisfied == 0 {
            let free = (self.num_vars - self.assigned) as u32;
            return 1u128
                .checked_shl(free)
                .filter(|_| free < 128)
                .ok_or_else(|| Error::BudgetExceeded("model count exceeds 128 bits".into()));
        }
        let var = match self.branch_var() {
            Some(v) => v,
            None => return Ok(0),
        };
        let mut total = 0u128;
        for val in [false, true] {
            let mark = self.trail.len();
            if self.assign(var, val) {
                total += self.count_rec()?;
            }
            self.undo_to(mark);
        }
        Ok(total)
    }

    fn solve(mut self) -> Result<Option<Vec<bool>>> {
        if !self.initial_units() {
            return Ok(None);
        }
        if self.solve_rec()? {
            Ok(Some((1..=self.num_vars).map(|v| self.value[v].unwrap_or(false)).collect()))
        } else {
            Ok(None)
        }
    }

    fn solve_rec(&mut self) -> Result<bool> {
        self.tick()?;
        if self.unsatisfied == 0 {
            return Ok(true);
        }
        let var = match self.branch_var() {
            Some(v) => v,
            None => return Ok(false),
        };
        for val in [false, true] {
            let mark = self.trail.len();
            if self.assign(var, val) && self.solve_rec()? {
                return Ok(true);
            }
            self.undo_to(mark);
        }
        Ok(false)
    }
}

/// Truth value of a closed QBF by recursive expansion in prefix order.
pub fn qbf_eval(q: &QBFormula, budget: &OracleBudget) -> Result<bool> {
    if q.num_vars() > budget.max_vars {
        return Err(Error::BudgetExceeded(format!(
            "{} variables exceed the QBF cap of {}",
            q.num_vars(),
            budget.max_vars
        )));
    }
    let mut assignment = Vec::with_capacity(q.num_vars() as usize);
    Ok(qbf_rec(q, &mut assignment))
}

fn qbf_rec(q: &QBFormula, assignment: &mut Vec<bool>) -> bool {
    let depth = assignment.len() as u32;
    let mut all_satisfied = true;
    for clause in &q.matrix.clauses {
        let satisfied = clause.iter().any(|l| l.var <= depth && l.eval(assignment));
        if !satisfied {
            if clause.iter().all(|l| l.var <= depth) {
                return false;
            }
            all_satisfied = false;
        }
    }
    if all_satisfied {
        return true;
    }
    let quantifier = q.quantifiers[depth as usize];
    let branch = |b: bool, assignment: &mut Vec<bool>| {
        assignment.push(b);
        let r = qbf_rec(q, assignment);
        assignment.pop();
        r
    };
    match quantifier {
        Quantifier::Exists => branch(false, assignment) || branch(true, assignment),
        Quantifier::Forall => branch(false, assignment) && branch(true, assignment),
    }
}

/// Allowed gate functions and whether constant leaves are free.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitBasis {
    ops: Vec<GateOp>,
    pub free_constants: bool,
}

impl CircuitBasis {
    pub fn new(mut ops: Vec<GateOp>, free_constants: bool) -> Result<Self> {
        ops.sort_unstable();
        ops.dedup();
        if ops.is_empty() {
            return Err(Error::Config("circuit basis must contain a gate function".into()));
        }
        Ok(Self { ops, free_constants })
    }

    /// All sixteen two-input functions with free constants.
    pub fn full() -> Self {
        Self { ops: GateOp::all().collect(), free_constants: true }
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    fn swap_closed(&self) -> bool {
        self.ops.iter().all(|op| self.ops.contains(&swapped(*op)))
    }
}

impl Default for CircuitBasis {
    fn default() -> Self {
        Self::full()
    }
}

fn swapped(op: GateOp) -> GateOp {
    let t = op.id();
    GateOp::new((t & 0b1001) | ((t & 0b0010) << 1) | ((t & 0b0100) >> 1))
}

/// Depth-first search over gate lists of a fixed size, in canonical description order.
struct CircuitSearch<'a> {
    n: usize,
    mask: u64,
    care: u64,
    target: u64,
    ops: &'a [GateOp],
    free_constants: bool,
    /// Existence mode: prune operand swaps and reorderings of independent gates.
    /// Off for lexicographically-first search, where those orders matter.
    symmetry: bool,
    leaves: Vec<u64>,
    words: Vec<u64>,
    gates: Vec<Gate>,
    uses: Vec<u32>,
    nodes: u64,
    node_cap: u64,
}

impl<'a> CircuitSearch<'a> {
    fn new(n: usize, care: u64, target: u64, basis: &'a CircuitBasis, symmetry: bool, node_cap: u64) -> Self {
        assert!(n <= 6, "circuit search supports at most six inputs");
        let mask = table_mask(n);
        let leaves = (0..n).map(|i| input_word(n, i)).collect();
        Self {
            n,
            mask,
            care: care & mask,
            target: target & mask,
            ops: &basis.ops,
            free_constants: basis.free_constants,
            symmetry: symmetry && basis.swap_closed(),
            leaves,
            words: Vec::new(),
            gates: Vec::new(),
            uses: Vec::new(),
            nodes: 0,
            node_cap,
        }
    }

    fn matches(&self, w: u64) -> bool {
        (w ^ self.target) & self.care == 0
    }

    fn operands(&self) -> Vec<(Wire, u64)> {
        let mut out = Vec::with_capacity(2 + self.n + self.gates.len());
        if self.free_constants {
            out.push((Wire::Const(false), 0));
            out.push((Wire::Const(true), self.mask));
        }
        out.extend(self.leaves.iter().enumerate().map(|(i, &w)| (Wire::Input(i as u32), w)));
        out.extend(self.words.iter().enumerate().map(|(j, &w)| (Wire::Gate(j as u32), w)));
        out
    }

    fn redundant(&self, w: u64) -> bool {
        (self.free_constants && (w == 0 || w == self.mask)) || self.leaves.contains(&w) || self.words.contains(&w)
    }

    fn size_zero(&self) -> Option<BooleanCircuit> {
        let mut candidates = Vec::new();
        if self.free_constants {
            candidates.push((Wire::Const(false), 0));
            candidates.push((Wire::Const(true), self.mask));
        }
        candidates.extend(self.leaves.iter().enumerate().map(|(i, &w)| (Wire::Input(i as u32), w)));
        candidates
            .into_iter()
            .find(|&(_, w)| self.matches(w))
            .map(|(wire, _)| BooleanCircuit::new(self.n, Vec::new(), wire).expect("leaf"))
    }

    fn run(&mut self, size: usize) -> Result<Option<BooleanCircuit>> {
        if size == 0 {
            return Ok(self.size_zero());
        }
        if self.dfs(size)? {
            let circuit = BooleanCircuit::new(self.n, self.gates.clone(), Wire::Gate(size as u32 - 1))
                .expect("search builds well-formed circuits");
            Ok(Some(circuit))
        } else {
            Ok(None)
        }
    }

    fn dfs(&mut self, size: usize) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::BudgetExceeded(format!("circuit search exceeded {} nodes", self.node_cap)));
        }
        let j = self.gates.len();
        let last = j + 1 == size;
        let operands = self.operands();
        let prev = self.gates.last().copied();
        for oi in 0..self.ops.len() {
            let op = self.ops[oi];
            for ai in 0..operands.len() {
                let b_start = if self.symmetry { ai } else { 0 };
                for bi in b_start..operands.len() {
                    let (a, wa) = operands[ai];
                    let (b, wb) = operands[bi];
                    let w = op.apply_word(wa, wb) & self.mask;
                    if self.redundant(w) {
                        continue;
                    }
                    let gate = Gate { op, a, b };
                    if self.symmetry {
                        if let Some(p) = prev {
                            let uses_prev = a == Wire::Gate(j as u32 - 1) || b == Wire::Gate(j as u32 - 1);
                            if !uses_prev && self.tuple(&gate) <= self.tuple(&p) {
                                continue;
                            }
                        }
                    }
                    if last && !self.matches(w) {
                        continue;
                    }
                    self.push(gate, w);
                    let unused = self.uses.iter().take(j + usize::from(!last)).filter(|&&u| u == 0).count();
                    let feasible = if last { unused == 0 } else { unused <= 2 * (size - 1 - j) };
                    if feasible && (last || self.dfs(size)?) {
                        return Ok(true);
                    }
                    self.pop();
                }
            }
        }
        Ok(false)
    }

    fn tuple(&self, g: &Gate) -> (u8, u64, u64) {
        (g.op.id(), g.a.code(self.n), g.b.code(self.n))
    }

    fn push(&mut self, gate: Gate, w: u64) {
        for wire in [gate.a, gate.b] {
            if let Wire::Gate(k) = wire {
                self.uses[k as usize] += 1;
            }
        }
        self.gates.push(gate);
        self.words.push(w);
        self.uses.push(0);
    }

    fn pop(&mut self) {
        let gate = self.gates.pop().expect("gate");
        self.words.pop();
        self.uses.pop();
        for wire in [gate.a, gate.b] {
            if let Wire::Gate(k) = wire {
                self.uses[k as usize] -= 1;
            }
        }
    }
}

/// A smallest circuit of size at most `s` computing `t`, or `None` if none exists.
pub fn circuit_of_size_at_most(
    t: &TruthTable,
    s: usize,
    basis: &CircuitBasis,
    budget: &OracleBudget,
) -> Result<Option<BooleanCircuit>> {
    if t.arity() > 6 {
        return Err(Error::BudgetExceeded(format!("truth tables of arity {} are out of reach", t.arity())));
    }
    let node_cap = 1u64 << 32;
    for size in 0..=s.min(budget.max_circuit_size) {
        let mut search = CircuitSearch::new(t.arity(), u64::MAX, t.to_word(), basis, true, node_cap);
        if let Some(c) = search.run(size)? {
            return Ok(Some(c));
        }
    }
    if s > budget.max_circuit_size {
        return Err(Error::BudgetExceeded(format!(
            "no circuit up to the size cap {}; larger sizes not searched",
            budget.max_circuit_size
        )));
    }
    Ok(None)
}

/// Minimal gate count of a circuit over `basis` computing `t`.
pub fn min_circuit_size(t: &TruthTable, basis: &CircuitBasis, budget: &OracleBudget) -> Result<usize> {
    match circuit_of_size_at_most(t, budget.max_circuit_size, basis, budget)? {
        Some(c) => Ok(c.size()),
        None => Err(Error::BudgetExceeded(format!("minimum circuit size exceeds the cap {}", budget.max_circuit_size))),
    }
}

/// Care mask and values of the partial function "`c1` on `[alpha, beta-1]`, `c2` on `[beta, gamma]`".
///
/// Positions are 1-based; position `z` is the input with index `z - 1`.
pub fn merge_target(c1: &BooleanCircuit, c2: &BooleanCircuit, alpha: u64, beta: u64, gamma: u64) -> (u64, u64) {
    let (w1, w2) = (c1.truth_word(), c2.truth_word());
    let (mut care, mut value) = (0u64, 0u64);
    for z in alpha..=gamma {
        let t = z - 1;
        let bit = if z < beta { (w1 >> t) & 1 } else { (w2 >> t) & 1 };
        care |= 1 << t;
        value |= bit << t;
    }
    (care, value)
}

/// The lexicographically first circuit of size at most `s` (full basis, free
/// constants) agreeing with `c1` on `[alpha, beta-1]` and with `c2` on `[beta, gamma]`.
///
/// Circuits are ordered by size, then by their gate tuples `(op, a, b)` compared
/// as integers; see [`BooleanCircuit::description`].
pub fn circuit_min_merge_exact(
    c1: &BooleanCircuit,
    c2: &BooleanCircuit,
    alpha: u64,
    beta: u64,
    gamma: u64,
    s: usize,
) -> Option<BooleanCircuit> {
    assert_eq!(c1.arity(), c2.arity(), "merged circuits must share their arity");
    assert!(alpha < beta && beta <= gamma, "merge needs alpha < beta <= gamma");
    assert!(gamma <= 1u64 << c1.arity(), "merge range exceeds the truth table");
    let (care, value) = merge_target(c1, c2, alpha, beta, gamma);
    merge_partial(c1.arity(), care, value, s)
}

/// Lexicographically first circuit of size at most `s` matching `value` on `care`.
pub fn merge_partial(n: usize, care: u64, value: u64, s: usize) -> Option<BooleanCircuit> {
    let basis = CircuitBasis::full();
    (0..=s).find_map(|size| {
        CircuitSearch::new(n, care, value, &basis, false, u64::MAX).run(size).expect("uncapped search")
    })
}

/// Memoizes [`merge_partial`] by partial function.
#[derive(Debug, Default)]
pub struct MergeCache {
    entries: HashMap<(usize, u64, u64, usize), Option<BooleanCircuit>>,
}

impl MergeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn merge(
        &mut self,
        c1: &BooleanCircuit,
        c2: &BooleanCircuit,
        alpha: u64,
        beta: u64,
        gamma: u64,
        s: usize,
    ) -> Option<BooleanCircuit> {
        let n = c1.arity();
        let (care, value) = merge_target(c1, c2, alpha, beta, gamma);
        self.entries.entry((n, care, value, s)).or_insert_with(|| merge_partial(n, care, value, s)).clone()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::arb_formula;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budget() -> OracleBudget {
        OracleBudget::default()
    }

    /// Inclusion-exclusion over clause subsets: falsifying sets are cubes.
    fn count_by_inclusion_exclusion(f: &Formula3CNF) -> u64 {
        let c = f.clauses.len();
        let mut falsifying: i64 = 0;
        for subset in 1u32..(1 << c) {
            let mut fixed: HashMap<u32, bool> = HashMap::new();
            let mut consistent = true;
            for (i, clause) in f.clauses.iter().enumerate() {
                if subset >> i & 1 == 0 {
                    continue;
                }
                for l in clause {
                    // falsifying l means var = negated
                    if *fixed.entry(l.var).or_insert(l.negated) != l.negated {
                        consistent = false;
                    }
                }
            }
            if consistent {
                let term = 1i64 << (f.num_vars as usize - fixed.len());
                falsifying += if subset.count_ones() % 2 == 1 { term } else { -term };
            }
        }
        ((1i64 << f.num_vars) - falsifying) as u64
    }

    fn random_formula(rng: &mut ChaCha8Rng, v: u32, c: usize) -> Formula3CNF {
        let clauses = (0..c)
            .map(|_| std::array::from_fn(|_| Lit { var: rng.random_range(1..=v), negated: rng.random() }))
            .collect();
        Formula3CNF::new(v, clauses)
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_sat(&Formula3CNF::tautology(3), &budget()).unwrap(), 8);
        let f = Formula3CNF::new(2, vec![[Lit::pos(1), Lit::pos(2), Lit::pos(2)]]);
        assert_eq!(count_sat(&f, &budget()).unwrap(), 3);
        let tight = OracleBudget::new(4, 6).unwrap();
        assert!(matches!(count_sat(&Formula3CNF::tautology(5), &tight), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn count_matches_inclusion_exclusion_on_random_10_var_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let c = rng.random_range(0..12);
            let f = random_formula(&mut rng, 10, c);
            assert_eq!(count_sat(&f, &budget()).unwrap(), count_by_inclusion_exclusion(&f));
        }
    }

    #[test]
    fn dpll_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let v = rng.random_range(1..=12);
            let c = rng.random_range(0..30);
            let f = random_formula(&mut rng, v, c);
            let expected = count_by_enumeration(&f);
            assert_eq!(Dpll::new(&f, u64::MAX).count().unwrap(), expected as u128);
            let model = find_model(&f, &budget()).unwrap();
            assert_eq!(model.is_some(), expected > 0);
            if let Some(m) = model {
                assert!(f.eval(&m));
            }
        }
    }

    #[test]
    fn large_formulas_use_dpll() {
        // 30 variables, x_i <-> x_{i+1} chain: exactly two models.
        let mut clauses = Vec::new();
        for i in 1..30u32 {
            clauses.push([Lit::neg(i), Lit::pos(i + 1), Lit::pos(i + 1)]);
            clauses.push([Lit::pos(i), Lit::neg(i + 1), Lit::neg(i + 1)]);
        }
        let f = Formula3CNF::new(30, clauses);
        let big = OracleBudget::new(30, 6).unwrap();
        assert_eq!(count_sat(&f, &big).unwrap(), 2);
        assert!(sat(&f, &budget()).unwrap());
        assert!(!parity_sat(&f, &big).unwrap());
    }

    #[test]
    fn qbf_examples() {
        use Quantifier::*;
        let xor =
            Formula3CNF::new(2, vec![[Lit::pos(1), Lit::pos(2), Lit::pos(2)], [Lit::neg(1), Lit::neg(2), Lit::neg(2)]]);
        assert!(qbf_eval(&QBFormula::new(vec![Forall, Exists], xor.clone()), &budget()).unwrap());
        assert!(!qbf_eval(&QBFormula::new(vec![Exists, Forall], xor), &budget()).unwrap());
        let one = Formula3CNF::new(1, vec![[Lit::pos(1); 3]]);
        assert!(qbf_eval(&QBFormula::new(vec![Exists], one.clone()), &budget()).unwrap());
        assert!(!qbf_eval(&QBFormula::new(vec![Forall], one), &budget()).unwrap());
    }

    fn qbf_by_restriction(q: &QBFormula) -> bool {
        use crate::instance::Restriction;
        let branch = |b| match q.restrict_first(b) {
            Restriction::Constant(v) => v,
            Restriction::Instance(r) => qbf_by_restriction(&r),
        };
        match q.quantifiers[0] {
            Quantifier::Exists => branch(false) || branch(true),
            Quantifier::Forall => branch(false) && branch(true),
        }
    }

    #[test]
    fn qbf_matches_restriction_semantics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let v = rng.random_range(1..=8);
            let c = rng.random_range(0..10);
            let f = random_formula(&mut rng, v, c);
            let quants = (0..v).map(|_| if rng.random() { Quantifier::Forall } else { Quantifier::Exists }).collect();
            let q = QBFormula::new(quants, f);
            assert_eq!(qbf_eval(&q, &budget()).unwrap(), qbf_by_restriction(&q));
        }
    }

    #[test]
    fn min_size_examples() {
        let full = CircuitBasis::full();
        let zero = TruthTable::parse("0b0000").unwrap();
        assert_eq!(min_circuit_size(&zero, &full, &budget()).unwrap(), 0);
        assert_eq!(min_circuit_size(&TruthTable::parse("0b0110").unwrap(), &full, &budget()).unwrap(), 1);
        assert_eq!(min_circuit_size(&TruthTable::parse("0b0001").unwrap(), &full, &budget()).unwrap(), 1);
        // 3-input parity needs two gates, majority needs four.
        let parity3 = TruthTable::from_fn(3, |t| t.count_ones() % 2 == 1);
        assert_eq!(min_circuit_size(&parity3, &full, &budget()).unwrap(), 2);
        let maj3 = TruthTable::from_fn(3, |t| t.count_ones() >= 2);
        assert_eq!(min_circuit_size(&maj3, &full, &budget()).unwrap(), 4);
    }

    #[test]
    fn min_size_monotone_under_basis_enlargement() {
        let nand = CircuitBasis::new(vec![GateOp::NAND], true).unwrap();
        let and_or = CircuitBasis::new(vec![GateOp::AND, GateOp::OR, GateOp::NAND], true).unwrap();
        let full = CircuitBasis::full();
        for word in 0..16u64 {
            let t = TruthTable::from_fn(2, |i| word >> i & 1 == 1);
            let a = min_circuit_size(&t, &nand, &budget()).unwrap();
            let b = min_circuit_size(&t, &and_or, &budget()).unwrap();
            let c = min_circuit_size(&t, &full, &budget()).unwrap();
            assert!(a >= b && b >= c, "table {word:04b}: {a} {b} {c}");
        }
    }

    #[test]
    fn found_circuits_compute_their_tables() {
        for word in 0..256u64 {
            let t = TruthTable::from_fn(3, |i| word >> i & 1 == 1);
            let c = circuit_of_size_at_most(&t, 4, &CircuitBasis::full(), &budget()).unwrap();
            if let Some(c) = c {
                assert_eq!(c.truth_word(), word);
            }
        }
    }

    /// Enumerates every gate list of the given size in description order with
    /// no pruning; the output ranges over all wires.
    fn naive_lex_first(n: usize, care: u64, value: u64, s: usize) -> Option<Vec<u64>> {
        fn rec(n: usize, gates: &mut Vec<Gate>, size: usize, care: u64, value: u64) -> Option<Vec<u64>> {
            if gates.len() == size {
                let total = 2 + n + size;
                for code in 0..total as u64 {
                    let c = BooleanCircuit::new(n, gates.clone(), Wire::from_code(code, n)).unwrap();
                    if (c.truth_word() ^ value) & care == 0 {
                        return Some(c.description());
                    }
                }
                return None;
            }
            let avail = 2 + n + gates.len();
            for op in 0..16u8 {
                for a in 0..avail as u64 {
                    for b in 0..avail as u64 {
                        gates.push(Gate { op: GateOp::new(op), a: Wire::from_code(a, n), b: Wire::from_code(b, n) });
                        if let Some(d) = rec(n, gates, size, care, value) {
                            return Some(d);
                        }
                        gates.pop();
                    }
                }
            }
            None
        }
        (0..=s).find_map(|size| rec(n, &mut Vec::new(), size, care, value))
    }

    fn random_circuit(rng: &mut ChaCha8Rng, n: usize, size: usize) -> BooleanCircuit {
        let mut gates = Vec::new();
        for j in 0..size {
            let avail = (2 + n + j) as u64;
            gates.push(Gate {
                op: GateOp::new(rng.random_range(0..16)),
                a: Wire::from_code(rng.random_range(0..avail), n),
                b: Wire::from_code(rng.random_range(0..avail), n),
            });
        }
        let out = if size == 0 { Wire::Input(0) } else { Wire::Gate(size as u32 - 1) };
        BooleanCircuit::new(n, gates, out).unwrap()
    }

    #[test]
    fn merge_matches_naive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for round in 0..60 {
            let n = if round % 3 == 0 { 2 } else { 3 };
            let s = if n == 2 { 2 } else { 1 + round % 2 };
            let (s1, s2) = (rng.random_range(0..4), rng.random_range(0..4));
            let c1 = random_circuit(&mut rng, n, s1);
            let c2 = random_circuit(&mut rng, n, s2);
            let big_n = 1u64 << n;
            let alpha = rng.random_range(1..big_n);
            let beta = rng.random_range(alpha + 1..=big_n);
            let gamma = rng.random_range(beta..=big_n);
            let fast = circuit_min_merge_exact(&c1, &c2, alpha, beta, gamma, s);
            let (care, value) = merge_target(&c1, &c2, alpha, beta, gamma);
            let naive = naive_lex_first(n, care, value, s);
            assert_eq!(fast.as_ref().map(|c| c.description()), naive, "round {round}");
            if let Some(c) = fast {
                assert!(c.size() <= s);
                for z in alpha..=gamma {
                    let want = if z < beta { c1.eval_index(z - 1) } else { c2.eval_index(z - 1) };
                    assert_eq!(c.eval_index(z - 1), want);
                }
            }
        }
    }

    #[test]
    fn merge_examples() {
        let xor = "inputs 2\ng0 = xor(x0, x1)\noutput g0\n".parse::<BooleanCircuit>().unwrap();
        let merged = circuit_min_merge_exact(&xor, &xor, 1, 2, 4, 3).unwrap();
        assert_eq!(merged.truth_word(), xor.truth_word());
        assert_eq!(merged.size(), 1);
        let zero = BooleanCircuit::constant(2, false);
        let one = BooleanCircuit::constant(2, true);
        assert_eq!(circuit_min_merge_exact(&zero, &one, 1, 2, 4, 0), None);
        assert_eq!(circuit_min_merge_exact(&zero, &one, 1, 2, 4, 1).unwrap().size(), 1);
        // Zeros on the first half and ones on the second is the first input.
        let c = circuit_min_merge_exact(&zero, &one, 1, 3, 4, 0).unwrap();
        assert_eq!(c.output(), Wire::Input(0));
    }

    #[test]
    fn merge_cache_reuses_entries() {
        let xor = "inputs 2\ng0 = xor(x0, x1)\noutput g0\n".parse::<BooleanCircuit>().unwrap();
        let mut cache = MergeCache::new();
        let a = cache.merge(&xor, &xor, 1, 2, 4, 2);
        let b = cache.merge(&xor, &xor, 1, 2, 4, 2);
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn language_membership_of_invalid_strings_is_false() {
        for lang in Language::ALL {
            assert!(!lang.member(&BitString::zeros(20), &budget()).unwrap());
            assert_eq!(Language::from_id(lang.id()).unwrap(), lang);
        }
    }

    proptest! {
        #[test]
        fn count_self_reduces(f in arb_formula(12, 10)) {
            let b = budget();
            let total = count_sat(&f, &b).unwrap();
            let part = |v| match f.restrict_first(v) {
                crate::instance::Restriction::Constant(true) => 1,
                crate::instance::Restriction::Constant(false) => 0,
                crate::instance::Restriction::Instance(g) => count_sat(&g, &b).unwrap(),
            };
            prop_assert_eq!(total, part(false) + part(true));
        }
    }
}
