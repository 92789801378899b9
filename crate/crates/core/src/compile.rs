//! Circuit compilation: Tseitin encoding to 3-CNF, truth-table synthesis via
//! reduced ordered BDDs, and the condition circuits queried by the compiled
//! self-reduction refuter.

use std::collections::HashMap;

use crate::bits::BitString;
use crate::circuit::{BooleanCircuit, GateOp, Wire};
use crate::error::{Error, Result};
use crate::instance::{encode, Codec, Decoded, Formula3CNF, Instance, Layout, Lit, Restriction};

/// Tseitin encoding. Input `i` becomes variable `i + 1` and gate `j` becomes
/// variable `arity + j + 1`; the output is asserted by a unit clause.
///
/// Models project onto inputs bijectively: every input accepted by the
/// circuit extends to exactly one model. A circuit with no inputs and no gates
/// still gets one variable, since formulas need at least one; it is pinned to 1.
pub fn tseitin_to_3cnf(c: &BooleanCircuit) -> Formula3CNF {
    let n = c.arity() as u32;
    let var_of = |w: Wire| -> Result<u32, bool> {
        match w {
            Wire::Const(b) => Err(b),
            Wire::Input(i) => Ok(i + 1),
            Wire::Gate(j) => Ok(n + j + 1),
        }
    };
    let num_vars = (n + c.size() as u32).max(1);
    let mut clauses: Vec<Vec<Lit>> = Vec::with_capacity(4 * c.size() + 2);
    for (j, g) in c.gates().iter().enumerate() {
        let out = n + j as u32 + 1;
        for va in [false, true] {
            for vb in [false, true] {
                let mut lits = Vec::with_capacity(3);
                let mut satisfied = false;
                for (w, v) in [(g.a, va), (g.b, vb)] {
                    match var_of(w) {
                        // operand literal "w != v"
                        Ok(var) => lits.push(Lit { var, negated: v }),
                        Err(b) => satisfied |= b != v,
                    }
                }
                if satisfied {
                    continue;
                }
                lits.push(Lit { var: out, negated: !g.op.apply(va, vb) });
                lits.sort_unstable();
                lits.dedup();
                if lits.windows(2).any(|w| w[0].var == w[1].var) {
                    continue;
                }
                clauses.push(lits);
            }
        }
    }
    match var_of(c.output()) {
        Ok(var) => clauses.push(vec![Lit::pos(var)]),
        Err(true) if n as usize + c.size() == 0 => clauses.push(vec![Lit::pos(1)]),
        Err(true) => {}
        Err(false) => {
            clauses.push(vec![Lit::pos(1)]);
            clauses.push(vec![Lit::neg(1)]);
        }
    }
    Formula3CNF::from_short_clauses(num_vars, &clauses).expect("clauses have one to three literals")
}

const FALSE_NODE: u32 = 0;
const TRUE_NODE: u32 = 1;

/// A shared reduced ordered BDD store; variable 0 is tested first.
#[derive(Debug, Default)]
pub struct Bdd {
    nodes: Vec<(u32, u32, u32)>,
    unique: HashMap<(u32, u32, u32), u32>,
}

impl Bdd {
    pub fn new() -> Self {
        Self { nodes: vec![(u32::MAX, 0, 0), (u32::MAX, 1, 1)], unique: HashMap::new() }
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        let key = (var, lo, hi);
        if let Some(&id) = self.unique.get(&key) {
            return id;
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(key);
        self.unique.insert(key, id);
        id
    }

    /// Root of the function whose truth table is `table` (entry `t` at index `t`).
    pub fn from_table(&mut self, table: &[bool]) -> u32 {
        assert!(table.len().is_power_of_two(), "truth table length must be a power of two");
        self.build(table, 0)
    }

    fn build(&mut self, table: &[bool], var: u32) -> u32 {
        if table.len() == 1 {
            return if table[0] { TRUE_NODE } else { FALSE_NODE };
        }
        let half = table.len() / 2;
        let lo = self.build(&table[..half], var + 1);
        let hi = self.build(&table[half..], var + 1);
        self.mk(var, lo, hi)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len() - 2
    }

    /// Emits multiplexer gates for the given roots into `circuit`, reading BDD
    /// variable `i` from `inputs[i]`. Returns one wire per root.
    pub fn emit(&self, circuit: &mut BooleanCircuit, inputs: &[Wire], roots: &[u32]) -> Vec<Wire> {
        let mut reachable = vec![false; self.nodes.len()];
        let mut stack: Vec<u32> = roots.to_vec();
        while let Some(id) = stack.pop() {
            if id <= TRUE_NODE || std::mem::replace(&mut reachable[id as usize], true) {
                continue;
            }
            let (_, lo, hi) = self.nodes[id as usize];
            stack.push(lo);
            stack.push(hi);
        }
        let mut wire: HashMap<u32, Wire> = HashMap::new();
        wire.insert(FALSE_NODE, Wire::Const(false));
        wire.insert(TRUE_NODE, Wire::Const(true));
        // Children always precede parents in the store.
        for id in 2..self.nodes.len() as u32 {
            if !reachable[id as usize] {
                continue;
            }
            let (var, lo, hi) = self.nodes[id as usize];
            let w = mux(circuit, inputs[var as usize], wire[&hi], wire[&lo]);
            wire.insert(id, w);
        }
        roots.iter().map(|r| wire[r]).collect()
    }
}

/// `if s { hi } else { lo }`, folding constant operands.
pub fn mux(c: &mut BooleanCircuit, s: Wire, hi: Wire, lo: Wire) -> Wire {
    match (hi, lo) {
        (h, l) if h == l => h,
        (Wire::Const(true), Wire::Const(false)) => s,
        (Wire::Const(false), Wire::Const(true)) => c.push_gate(GateOp::NOT_A, s, s),
        (Wire::Const(true), l) => c.push_gate(GateOp::OR, s, l),
        (Wire::Const(false), l) => c.push_gate(GateOp::ANDNOT_A, s, l),
        (h, Wire::Const(false)) => c.push_gate(GateOp::AND, s, h),
        (h, Wire::Const(true)) => c.push_gate(GateOp::ORNOT_A, s, h),
        (h, l) => {
            let high = c.push_gate(GateOp::AND, s, h);
            let low = c.push_gate(GateOp::ANDNOT_A, s, l);
            c.push_gate(GateOp::OR, high, low)
        }
    }
}

/// Applies a two-input function, folding constant operands.
pub fn apply(c: &mut BooleanCircuit, op: GateOp, a: Wire, b: Wire) -> Wire {
    match (a, b) {
        (Wire::Const(x), Wire::Const(y)) => Wire::Const(op.apply(x, y)),
        (Wire::Const(x), _) => mux(c, b, Wire::Const(op.apply(x, true)), Wire::Const(op.apply(x, false))),
        (_, Wire::Const(y)) => mux(c, a, Wire::Const(op.apply(true, y)), Wire::Const(op.apply(false, y))),
        _ => c.push_gate(op, a, b),
    }
}

/// Largest arity synthesized from explicit truth tables.
pub const MAX_SYNTHESIS_ARITY: usize = 16;

fn check_synthesis_arity(m: usize) -> Result<()> {
    if m > MAX_SYNTHESIS_ARITY {
        return Err(Error::BudgetExceeded(format!(
            "synthesis over {m} inputs exceeds the cap of {MAX_SYNTHESIS_ARITY}"
        )));
    }
    Ok(())
}

/// A circuit computing `f` on `m` inputs, where `f` receives the point index
/// (input 0 is the most significant bit).
pub fn synthesize(m: usize, f: impl Fn(u64) -> bool) -> Result<BooleanCircuit> {
    check_synthesis_arity(m)?;
    let table: Vec<bool> = (0..1u64 << m).map(f).collect();
    let mut bdd = Bdd::new();
    let root = bdd.from_table(&table);
    let mut c = BooleanCircuit::builder(m);
    let inputs: Vec<Wire> = (0..m as u32).map(Wire::Input).collect();
    let out = bdd.emit(&mut c, &inputs, &[root])[0];
    c.set_output(out);
    Ok(c)
}

/// Emits several functions of `inputs` into `circuit`; `outputs[k]` is the truth
/// table of output `k` indexed like [`synthesize`].
pub fn synthesize_into(circuit: &mut BooleanCircuit, inputs: &[Wire], outputs: &[Vec<bool>]) -> Result<Vec<Wire>> {
    check_synthesis_arity(inputs.len())?;
    let mut bdd = Bdd::new();
    let roots: Vec<u32> = outputs.iter().map(|t| bdd.from_table(t)).collect();
    Ok(bdd.emit(circuit, inputs, &roots))
}

/// How a one-step self-reduction combines the values of the two restrictions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    Or,
    Xor,
}

impl Combine {
    pub fn op(self) -> GateOp {
        match self {
            Combine::Or => GateOp::OR,
            Combine::Xor => GateOp::XOR,
        }
    }

    pub fn apply(self, a: bool, b: bool) -> bool {
        self.op().apply(a, b)
    }
}

/// One restriction `x1 := b` of the formula encoded by the input string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchWires {
    /// 1 when the restriction is decided outright (no variables left or an emptied clause).
    pub constant: Wire,
    /// Its value in that case.
    pub value: Wire,
    /// Otherwise, the compact encoding of the restricted formula at the target length.
    pub encoding: Vec<Wire>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictionWiring {
    /// 1 iff the input decodes to a formula.
    pub valid: Wire,
    pub branches: [BranchWires; 2],
}

/// Restriction of a CNF string as an explicit value, shared with interpreters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchValue {
    Constant(bool),
    Encoded(BitString),
}

/// Restricts variable 1 of the formula encoded by `x` and re-encodes the
/// result at length `n`. `None` when `x` is not a formula.
pub fn restrict_string(x: &BitString, n: usize) -> Option<[BranchValue; 2]> {
    let f = match Codec::CNF.decode(x) {
        Decoded::Valid(Instance::Cnf(f)) => f,
        _ => return None,
    };
    let branch = |b: bool| match f.restrict_first(b) {
        Restriction::Constant(v) => BranchValue::Constant(v),
        Restriction::Instance(g) => BranchValue::Encoded(
            encode(&Instance::Cnf(g), Layout::Compact, n).expect("restrictions encode shorter than their source"),
        ),
    };
    Some([branch(false), branch(true)])
}

/// Emits the restriction maps for CNF strings read from `inputs` (the `m` bits
/// of a string), with encodings at length `n >= m`.
pub fn wire_restrictions(circuit: &mut BooleanCircuit, inputs: &[Wire], n: usize) -> Result<RestrictionWiring> {
    let m = inputs.len();
    check_synthesis_arity(m)?;
    if m > n {
        return Err(Error::Length { len: m, target: n });
    }
    // Output layout: valid, then per branch: constant, value, n encoding bits.
    let per_branch = 2 + n;
    let mut tables = vec![vec![false; 1 << m]; 1 + 2 * per_branch];
    for t in 0..1u64 << m {
        let x = BitString::from_u64(t, m);
        let Some(branches) = restrict_string(&x, n) else { continue };
        tables[0][t as usize] = true;
        for (b, branch) in branches.iter().enumerate() {
            let base = 1 + b * per_branch;
            match branch {
                BranchValue::Constant(v) => {
                    tables[base][t as usize] = true;
                    tables[base + 1][t as usize] = *v;
                }
                BranchValue::Encoded(y) => {
                    for (i, &bit) in y.bits().iter().enumerate() {
                        tables[base + 2 + i][t as usize] = bit;
                    }
                }
            }
        }
    }
    let wires = synthesize_into(circuit, inputs, &tables)?;
    let branch = |b: usize| {
        let base = 1 + b * per_branch;
        BranchWires { constant: wires[base], value: wires[base + 1], encoding: wires[base + 2..base + 2 + n].to_vec() }
    };
    Ok(RestrictionWiring { valid: wires[0], branches: [branch(0), branch(1)] })
}

/// The condition circuit over strings `x` of length `m`: outputs 1 iff the
/// decider's answer on `x` zero-padded to its arity `n` differs from the
/// one-step self-reduction of `x` evaluated with the decider (on padded
/// encodings of the two restrictions) as the oracle.
///
/// Invalid strings reduce to 0. Because padding is zero-extension, the circuit
/// at length `m` agrees with the circuit at any longer length on `x` followed by zeros.
pub fn build_condition_circuit(decider: &BooleanCircuit, combine: Combine, m: usize) -> Result<BooleanCircuit> {
    let n = decider.arity();
    if m > n {
        return Err(Error::Length { len: m, target: n });
    }
    let mut c = BooleanCircuit::builder(m);
    let xs: Vec<Wire> = (0..m as u32).map(Wire::Input).collect();
    let mut padded = xs.clone();
    padded.resize(n, Wire::Const(false));
    let direct = c.embed(decider, &padded);
    let wiring = wire_restrictions(&mut c, &xs, n)?;
    let mut values = Vec::with_capacity(2);
    for branch in &wiring.branches {
        let queried = c.embed(decider, &branch.encoding);
        values.push(mux(&mut c, branch.constant, branch.value, queried));
    }
    let reduced = apply(&mut c, combine.op(), values[0], values[1]);
    let reduced = apply(&mut c, GateOp::AND, wiring.valid, reduced);
    let out = apply(&mut c, GateOp::XOR, direct, reduced);
    c.set_output(out);
    Ok(c)
}
