//! Fan-in-two Boolean circuits over the full two-input basis.
//!
//! Gates are topologically ordered; operands refer to constants, inputs or
//! earlier gates. Size is the number of gates; constant and input leaves are free.
//!
//! Text format, one gate per line:
//!
//! ```text
//! inputs 2
//! g0 = xor(x0, x1)
//! g1 = and(g0, 1)
//! output g1
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, ParseError, Result};

/// A two-input Boolean function as a 4-bit truth table; bit `2a + b` is `f(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GateOp(u8);

const OP_NAMES: [&str; 16] = [
    "false", "nor", "andnot_a", "not_a", "andnot_b", "not_b", "xor", "nand", "and", "xnor", "b", "ornot_a", "a",
    "ornot_b", "or", "true",
];

impl GateOp {
    pub const FALSE: GateOp = GateOp(0);
    pub const NOR: GateOp = GateOp(1);
    pub const ANDNOT_A: GateOp = GateOp(2);
    pub const NOT_A: GateOp = GateOp(3);
    pub const ANDNOT_B: GateOp = GateOp(4);
    pub const XOR: GateOp = GateOp(6);
    pub const NAND: GateOp = GateOp(7);
    pub const AND: GateOp = GateOp(8);
    pub const XNOR: GateOp = GateOp(9);
    pub const ORNOT_A: GateOp = GateOp(11);
    pub const OR: GateOp = GateOp(14);
    pub const TRUE: GateOp = GateOp(15);

    pub fn new(table: u8) -> Self {
        assert!(table < 16, "gate truth table has four bits");
        GateOp(table)
    }

    pub fn all() -> impl Iterator<Item = GateOp> {
        (0..16).map(GateOp)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        OP_NAMES[self.0 as usize]
    }

    pub fn from_name(name: &str) -> Option<Self> {
        OP_NAMES.iter().position(|&n| n == name).map(|i| GateOp(i as u8))
    }

    pub fn apply(self, a: bool, b: bool) -> bool {
        (self.0 >> ((a as u8) << 1 | b as u8)) & 1 == 1
    }

    /// Bitwise application to packed truth tables.
    pub fn apply_word(self, a: u64, b: u64) -> u64 {
        let mut r = 0;
        if self.0 & 1 != 0 {
            r |= !a & !b;
        }
        if self.0 & 2 != 0 {
            r |= !a & b;
        }
        if self.0 & 4 != 0 {
            r |= a & !b;
        }
        if self.0 & 8 != 0 {
            r |= a & b;
        }
        r
    }

    /// Whether the output depends on both operands.
    pub fn is_binary(self) -> bool {
        let depends_a = (self.0 & 0b0011) != ((self.0 >> 2) & 0b0011);
        let depends_b = (self.0 & 0b0101) != ((self.0 >> 1) & 0b0101);
        depends_a && depends_b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Wire {
    Const(bool),
    Input(u32),
    Gate(u32),
}

impl Wire {
    /// Position in the canonical operand order: constants, inputs, gates.
    pub fn code(self, arity: usize) -> u64 {
        match self {
            Wire::Const(b) => b as u64,
            Wire::Input(i) => 2 + i as u64,
            Wire::Gate(j) => 2 + arity as u64 + j as u64,
        }
    }

    pub fn from_code(code: u64, arity: usize) -> Wire {
        match code {
            0 => Wire::Const(false),
            1 => Wire::Const(true),
            c if c < 2 + arity as u64 => Wire::Input((c - 2) as u32),
            c => Wire::Gate((c - 2 - arity as u64) as u32),
        }
    }
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wire::Const(b) => write!(f, "{}", *b as u8),
            Wire::Input(i) => write!(f, "x{i}"),
            Wire::Gate(j) => write!(f, "g{j}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub op: GateOp,
    pub a: Wire,
    pub b: Wire,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BooleanCircuit {
    arity: usize,
    gates: Vec<Gate>,
    output: Wire,
}

impl BooleanCircuit {
    /// Checks that operands refer to existing inputs and strictly earlier gates.
    pub fn new(arity: usize, gates: Vec<Gate>, output: Wire) -> Result<Self> {
        let check = |w: Wire, limit: usize| match w {
            Wire::Const(_) => true,
            Wire::Input(i) => (i as usize) < arity,
            Wire::Gate(j) => (j as usize) < limit,
        };
        for (j, g) in gates.iter().enumerate() {
            if !check(g.a, j) || !check(g.b, j) {
                return Err(Error::Config(format!("gate g{j} has a dangling or forward operand")));
            }
        }
        if !check(output, gates.len()) {
            return Err(Error::Config("output refers to a missing wire".into()));
        }
        Ok(Self { arity, gates, output })
    }

    pub fn constant(arity: usize, value: bool) -> Self {
        Self { arity, gates: Vec::new(), output: Wire::Const(value) }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> Wire {
        self.output
    }

    pub fn eval(&self, x: &BitString) -> Result<bool> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, actual: x.len() });
        }
        Ok(self.eval_bits(x.bits()))
    }

    pub fn eval_bits(&self, x: &[bool]) -> bool {
        self.eval_wires(x, &[self.output])[0]
    }

    /// Values of the given wires on input `x`.
    pub fn eval_wires(&self, x: &[bool], wires: &[Wire]) -> Vec<bool> {
        assert_eq!(x.len(), self.arity, "input length must match the arity");
        let mut values = Vec::with_capacity(self.gates.len());
        let read = |w: Wire, values: &Vec<bool>| match w {
            Wire::Const(b) => b,
            Wire::Input(i) => x[i as usize],
            Wire::Gate(j) => values[j as usize],
        };
        for g in &self.gates {
            let v = g.op.apply(read(g.a, &values), read(g.b, &values));
            values.push(v);
        }
        wires.iter().map(|&w| read(w, &values)).collect()
    }

    /// Evaluates on the integer point `t` (input 0 is the most significant bit).
    pub fn eval_index(&self, t: u64) -> bool {
        let bits: Vec<bool> = (0..self.arity).map(|i| (t >> (self.arity - 1 - i)) & 1 == 1).collect();
        self.eval_bits(&bits)
    }

    /// Packed truth table for arity <= 6; bit `t` is the value on point `t`.
    pub fn truth_word(&self) -> u64 {
        assert!(self.arity <= 6, "packed truth tables hold at most 64 entries");
        let inputs: Vec<u64> = (0..self.arity).map(|i| input_word(self.arity, i)).collect();
        let mask = table_mask(self.arity);
        let mut values: Vec<u64> = Vec::with_capacity(self.gates.len());
        let read = |w: Wire, values: &Vec<u64>| match w {
            Wire::Const(b) => {
                if b {
                    mask
                } else {
                    0
                }
            }
            Wire::Input(i) => inputs[i as usize],
            Wire::Gate(j) => values[j as usize],
        };
        for g in &self.gates {
            let v = g.op.apply_word(read(g.a, &values), read(g.b, &values)) & mask;
            values.push(v);
        }
        read(self.output, &values) & mask
    }

    /// Canonical description: `(op, a, b)` per gate followed by the output code.
    pub fn description(&self) -> Vec<u64> {
        let mut d = Vec::with_capacity(3 * self.gates.len() + 1);
        for g in &self.gates {
            d.extend([g.op.id() as u64, g.a.code(self.arity), g.b.code(self.arity)]);
        }
        d.push(self.output.code(self.arity));
        d
    }

    /// Appends `other`'s gates, feeding its inputs from `inputs`; returns the wire of its output.
    pub fn embed(&mut self, other: &BooleanCircuit, inputs: &[Wire]) -> Wire {
        assert_eq!(inputs.len(), other.arity, "embedding needs one wire per input");
        let offset = self.gates.len() as u32;
        let map = |w: Wire| match w {
            Wire::Const(b) => Wire::Const(b),
            Wire::Input(i) => inputs[i as usize],
            Wire::Gate(j) => Wire::Gate(j + offset),
        };
        for g in &other.gates {
            self.gates.push(Gate { op: g.op, a: map(g.a), b: map(g.b) });
        }
        map(other.output)
    }

    pub fn push_gate(&mut self, op: GateOp, a: Wire, b: Wire) -> Wire {
        self.gates.push(Gate { op, a, b });
        Wire::Gate(self.gates.len() as u32 - 1)
    }

    pub fn set_output(&mut self, output: Wire) {
        self.output = output;
    }

    /// An empty builder with `arity` inputs and a constant-0 output.
    pub fn builder(arity: usize) -> Self {
        Self::constant(arity, false)
    }
}

/// Packed truth table of input `i` among `n` inputs.
pub fn input_word(n: usize, i: usize) -> u64 {
    let shift = n - 1 - i;
    (0..1u64 << n).filter(|t| (t >> shift) & 1 == 1).fold(0, |acc, t| acc | (1 << t))
}

pub fn table_mask(n: usize) -> u64 {
    if n >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n)) - 1
    }
}

impl fmt::Display for BooleanCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.arity)?;
        for (j, g) in self.gates.iter().enumerate() {
            writeln!(f, "g{j} = {}({}, {})", g.op.name(), g.a, g.b)?;
        }
        writeln!(f, "output {}", self.output)
    }
}

fn parse_wire(s: &str) -> Result<Wire, ParseError> {
    let s = s.trim();
    let num = |t: &str| t.parse::<u32>().map_err(|_| ParseError::new(format!("bad wire {s:?}")));
    match s {
        "0" => Ok(Wire::Const(false)),
        "1" => Ok(Wire::Const(true)),
        _ if s.starts_with('x') => Ok(Wire::Input(num(&s[1..])?)),
        _ if s.starts_with('g') => Ok(Wire::Gate(num(&s[1..])?)),
        _ => Err(ParseError::new(format!("bad wire {s:?}"))),
    }
}

impl FromStr for BooleanCircuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut arity = None;
        let mut gates = Vec::new();
        let mut output = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if let Some(rest) = line.strip_prefix("inputs") {
                arity = Some(rest.trim().parse::<usize>().map_err(|_| ParseError::new("bad input count"))?);
            } else if let Some(rest) = line.strip_prefix("output") {
                output = Some(parse_wire(rest)?);
            } else {
                let (lhs, rhs) = line
                    .split_once('=')
                    .ok_or_else(|| ParseError::new(format!("expected gate definition: {line:?}")))?;
                if parse_wire(lhs)? != Wire::Gate(gates.len() as u32) {
                    return Err(ParseError::new(format!("gates must be numbered in order: {line:?}")).into());
                }
                let (name, args) = rhs
                    .trim()
                    .strip_suffix(')')
                    .and_then(|r| r.split_once('('))
                    .ok_or_else(|| ParseError::new(format!("expected op(a, b): {line:?}")))?;
                let op = GateOp::from_name(name.trim())
                    .ok_or_else(|| ParseError::new(format!("unknown gate function {name:?}")))?;
                let (a, b) =
                    args.split_once(',').ok_or_else(|| ParseError::new(format!("expected two operands: {line:?}")))?;
                gates.push(Gate { op, a: parse_wire(a)?, b: parse_wire(b)? });
            }
        }
        let arity = arity.ok_or_else(|| ParseError::new("missing `inputs` line"))?;
        let output = output.ok_or_else(|| ParseError::new("missing `output` line"))?;
        BooleanCircuit::new(arity, gates, output)
    }
}
