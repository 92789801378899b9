//! Hard-language instances and their bit-level encodings.
//!
//! Two layouts are supported. `Layout::Wide` uses fixed-width fields:
//!
//! ```text
//! num_vars:8 | num_clauses:8 | [quantifiers:v | threshold:v+1] | 3*c literals of (sign:1, index:8) | zeros
//! ```
//!
//! `Layout::Compact` is self-delimiting and short enough for exhaustive work on
//! strings of a dozen bits:
//!
//! ```text
//! 1^v 0 | [quantifiers:v | threshold:v+1] | 1^c 0 | 3*c literals of (sign:1, index:ceil(log2 v)) | 1 | zeros
//! ```
//!
//! Every string decodes to exactly one value; malformed strings decode to
//! `Decoded::Invalid`, which is a non-member of every language and has model
//! count zero. In the compact layout the trailing `1` terminates the encoding,
//! so appending zeros never changes what a string decodes to.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, ParseError, Result};

/// A literal over a 1-based variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lit {
    pub var: u32,
    pub negated: bool,
}

impl Lit {
    pub fn pos(var: u32) -> Self {
        Self { var, negated: false }
    }

    pub fn neg(var: u32) -> Self {
        Self { var, negated: true }
    }

    /// DIMACS integer form.
    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -(self.var as i64)
        } else {
            self.var as i64
        }
    }

    pub fn from_dimacs(v: i64) -> Self {
        Self { var: v.unsigned_abs() as u32, negated: v < 0 }
    }

    /// Truth value under an assignment indexed by `var - 1`.
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[(self.var - 1) as usize] != self.negated
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit { var: self.var, negated: !self.negated }
    }
}

pub type Clause = [Lit; 3];

/// A CNF formula whose clauses have exactly three (possibly repeated) literals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula3CNF {
    pub num_vars: u32,
    pub clauses: Vec<Clause>,
}

impl Formula3CNF {
    pub fn new(num_vars: u32, clauses: Vec<Clause>) -> Self {
        Self { num_vars, clauses }
    }

    /// Builds a formula from clauses of one to three literals, padding by repetition.
    pub fn from_short_clauses(num_vars: u32, clauses: &[Vec<Lit>]) -> Option<Self> {
        let clauses = clauses.iter().map(|c| pad_clause(c)).collect::<Option<Vec<_>>>()?;
        Some(Self { num_vars, clauses })
    }

    pub fn is_well_formed(&self) -> bool {
        self.num_vars >= 1 && self.clauses.iter().flatten().all(|l| l.var >= 1 && l.var <= self.num_vars)
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|l| l.eval(assignment)))
    }

    /// Sets variable 1 to `value` and renumbers the remaining variables down by one.
    pub fn restrict_first(&self, value: bool) -> Restriction<Formula3CNF> {
        let mut clauses = Vec::with_capacity(self.clauses.len());
        for clause in &self.clauses {
            if clause.iter().any(|l| l.var == 1 && (l.negated != value)) {
                continue;
            }
            let rest: Vec<Lit> =
                clause.iter().filter(|l| l.var != 1).map(|l| Lit { var: l.var - 1, negated: l.negated }).collect();
            match pad_clause(&rest) {
                Some(c) => clauses.push(c),
                None => return Restriction::Constant(false),
            }
        }
        if self.num_vars == 1 {
            // Every clause either vanished or became empty above.
            return Restriction::Constant(true);
        }
        Restriction::Instance(Formula3CNF { num_vars: self.num_vars - 1, clauses })
    }

    /// Restriction of variable 1 as a formula over `num_vars - 1 >= 1` variables;
    /// an emptied clause becomes the contradiction `(x1) & (!x1)`.
    pub fn restrict_first_formula(&self, value: bool) -> Option<Formula3CNF> {
        if self.num_vars < 2 {
            return None;
        }
        Some(match self.restrict_first(value) {
            Restriction::Instance(f) => f,
            Restriction::Constant(false) => Formula3CNF::contradiction(self.num_vars - 1),
            Restriction::Constant(true) => unreachable!("num_vars >= 2 leaves a formula"),
        })
    }

    /// `(x1 | x1 | x1) & (!x1 | !x1 | !x1)` over `num_vars` variables.
    pub fn contradiction(num_vars: u32) -> Self {
        Self { num_vars, clauses: vec![[Lit::pos(1); 3], [Lit::neg(1); 3]] }
    }

    pub fn tautology(num_vars: u32) -> Self {
        Self { num_vars, clauses: Vec::new() }
    }
}

fn pad_clause(lits: &[Lit]) -> Option<Clause> {
    match lits {
        [] => None,
        [a] => Some([*a, *a, *a]),
        [a, b] => Some([*a, *b, *b]),
        [a, b, c] => Some([*a, *b, *c]),
        _ => None,
    }
}

/// Outcome of fixing one variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Restriction<T> {
    /// The restricted instance is decided outright (no variables left or an emptied clause).
    Constant(bool),
    Instance(T),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// A closed prenex QBF: variable `i` is bound by `quantifiers[i - 1]`, outermost first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QBFormula {
    pub quantifiers: Vec<Quantifier>,
    pub matrix: Formula3CNF,
}

impl QBFormula {
    pub fn new(quantifiers: Vec<Quantifier>, matrix: Formula3CNF) -> Self {
        Self { quantifiers, matrix }
    }

    pub fn num_vars(&self) -> u32 {
        self.matrix.num_vars
    }

    pub fn is_well_formed(&self) -> bool {
        self.matrix.is_well_formed() && self.quantifiers.len() == self.matrix.num_vars as usize
    }

    /// Maximal runs of equal quantifiers as `(quantifier, variables)`.
    pub fn blocks(&self) -> Vec<(Quantifier, Vec<u32>)> {
        let mut blocks: Vec<(Quantifier, Vec<u32>)> = Vec::new();
        for (i, &q) in self.quantifiers.iter().enumerate() {
            match blocks.last_mut() {
                Some((last, vars)) if *last == q => vars.push(i as u32 + 1),
                _ => blocks.push((q, vec![i as u32 + 1])),
            }
        }
        blocks
    }

    pub fn restrict_first(&self, value: bool) -> Restriction<QBFormula> {
        match self.matrix.restrict_first(value) {
            Restriction::Constant(b) => Restriction::Constant(b),
            Restriction::Instance(matrix) => {
                Restriction::Instance(QBFormula { quantifiers: self.quantifiers[1..].to_vec(), matrix })
            }
        }
    }
}

/// The statement "#SAT(formula) >= threshold".
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdInstance {
    pub formula: Formula3CNF,
    pub threshold: u64,
}

impl ThresholdInstance {
    /// Largest representable threshold, `2^v + 1`; it is false for every formula.
    pub fn max_threshold(num_vars: u32) -> u64 {
        (1u64 << num_vars) + 1
    }

    /// Builds the instance, clamping thresholds above `2^v + 1` (all semantically false).
    pub fn clamped(formula: Formula3CNF, threshold: u64) -> Self {
        let cap = Self::max_threshold(formula.num_vars);
        Self { threshold: threshold.min(cap), formula }
    }

    pub fn is_well_formed(&self) -> bool {
        self.formula.is_well_formed()
            && self.formula.num_vars < 63
            && self.threshold <= Self::max_threshold(self.formula.num_vars)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Instance {
    Cnf(Formula3CNF),
    Qbf(QBFormula),
    Threshold(ThresholdInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Cnf(_) => InstanceKind::Cnf,
            Instance::Qbf(_) => InstanceKind::Qbf,
            Instance::Threshold(_) => InstanceKind::Threshold,
        }
    }

    pub fn formula(&self) -> &Formula3CNF {
        match self {
            Instance::Cnf(f) => f,
            Instance::Qbf(q) => &q.matrix,
            Instance::Threshold(t) => &t.formula,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Decoded {
    Valid(Instance),
    Invalid,
}

impl Decoded {
    pub fn is_valid(&self) -> bool {
        matches!(self, Decoded::Valid(_))
    }

    pub fn instance(&self) -> Option<&Instance> {
        match self {
            Decoded::Valid(i) => Some(i),
            Decoded::Invalid => None,
        }
    }

    pub fn cnf(&self) -> Option<&Formula3CNF> {
        match self {
            Decoded::Valid(Instance::Cnf(f)) => Some(f),
            _ => None,
        }
    }

    pub fn qbf(&self) -> Option<&QBFormula> {
        match self {
            Decoded::Valid(Instance::Qbf(q)) => Some(q),
            _ => None,
        }
    }

    pub fn threshold(&self) -> Option<&ThresholdInstance> {
        match self {
            Decoded::Valid(Instance::Threshold(t)) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Cnf,
    Qbf,
    Threshold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Wide,
    #[default]
    Compact,
}

/// Selects how a string is read: which instance kind, under which layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Codec {
    pub kind: InstanceKind,
    pub layout: Layout,
}

impl Codec {
    pub const CNF: Codec = Codec { kind: InstanceKind::Cnf, layout: Layout::Compact };
    pub const QBF: Codec = Codec { kind: InstanceKind::Qbf, layout: Layout::Compact };
    pub const THRESHOLD: Codec = Codec { kind: InstanceKind::Threshold, layout: Layout::Compact };

    pub fn new(kind: InstanceKind, layout: Layout) -> Self {
        Self { kind, layout }
    }

    pub fn decode(&self, x: &BitString) -> Decoded {
        decode(*self, x)
    }
}

/// Index bits per literal in the compact layout.
pub fn compact_index_width(num_vars: u32) -> usize {
    if num_vars <= 1 {
        0
    } else {
        (32 - (num_vars - 1).leading_zeros()) as usize
    }
}

const WIDE_FIELD: usize = 8;
const WIDE_INDEX: usize = 8;

/// Number of bits the instance occupies before the zero tail.
pub fn encoded_len(instance: &Instance, layout: Layout) -> usize {
    let f = instance.formula();
    let v = f.num_vars as usize;
    let c = f.clauses.len();
    let extra = match instance {
        Instance::Cnf(_) => 0,
        Instance::Qbf(_) => v,
        Instance::Threshold(_) => v + 1,
    };
    match layout {
        Layout::Wide => 2 * WIDE_FIELD + extra + 3 * c * (1 + WIDE_INDEX),
        Layout::Compact => (v + 1) + extra + (c + 1) + 3 * c * (1 + compact_index_width(f.num_vars)) + 1,
    }
}

fn check_well_formed(instance: &Instance) -> Result<()> {
    let ok = match instance {
        Instance::Cnf(f) => f.is_well_formed(),
        Instance::Qbf(q) => q.is_well_formed(),
        Instance::Threshold(t) => t.is_well_formed(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config("instance is not well formed".into()))
    }
}

struct Writer {
    bits: Vec<bool>,
}

impl Writer {
    fn uint(&mut self, value: u64, width: usize) {
        for i in (0..width).rev() {
            self.bits.push((value >> i) & 1 == 1);
        }
    }

    fn unary(&mut self, count: usize) {
        self.bits.extend(std::iter::repeat_n(true, count));
        self.bits.push(false);
    }
}

/// Encodes `instance` into exactly `target_len` bits.
pub fn encode(instance: &Instance, layout: Layout, target_len: usize) -> Result<BitString> {
    check_well_formed(instance)?;
    let f = instance.formula();
    let needed = encoded_len(instance, layout);
    if layout == Layout::Wide && (f.num_vars > 255 || f.clauses.len() > 255) {
        return Err(Error::Overflow { needed, target: target_len });
    }
    if needed > target_len {
        return Err(Error::Overflow { needed, target: target_len });
    }
    let mut w = Writer { bits: Vec::with_capacity(target_len) };
    let v = f.num_vars as usize;
    let (index_width, index_offset) = match layout {
        Layout::Wide => {
            w.uint(v as u64, WIDE_FIELD);
            w.uint(f.clauses.len() as u64, WIDE_FIELD);
            (WIDE_INDEX, 0)
        }
        Layout::Compact => {
            w.unary(v);
            (compact_index_width(f.num_vars), 1)
        }
    };
    match instance {
        Instance::Cnf(_) => {}
        Instance::Qbf(q) => {
            for &quant in &q.quantifiers {
                w.bits.push(quant == Quantifier::Forall);
            }
        }
        Instance::Threshold(t) => w.uint(t.threshold, v + 1),
    }
    if layout == Layout::Compact {
        w.unary(f.clauses.len());
    }
    for lit in f.clauses.iter().flatten() {
        w.bits.push(lit.negated);
        w.uint((lit.var - index_offset) as u64, index_width);
    }
    if layout == Layout::Compact {
        w.bits.push(true);
    }
    debug_assert_eq!(w.bits.len(), needed);
    w.bits.resize(target_len, false);
    Ok(BitString::from_bits(w.bits))
}

/// Encodes at the instance's natural length.
pub fn encode_natural(instance: &Instance, layout: Layout) -> BitString {
    let len = encoded_len(instance, layout);
    encode(instance, layout, len).expect("natural length always fits")
}

struct Reader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl Reader<'_> {
    fn bit(&mut self) -> Option<bool> {
        let b = self.bits.get(self.pos).copied();
        self.pos += 1;
        b
    }

    fn uint(&mut self, width: usize) -> Option<u64> {
        if width > 63 {
            return None;
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.bit()? as u64;
        }
        Some(v)
    }

    fn unary(&mut self, cap: usize) -> Option<usize> {
        let mut n = 0;
        while self.bit()? {
            n += 1;
            if n > cap {
                return None;
            }
        }
        Some(n)
    }

    fn rest_is_zero(&self) -> bool {
        self.bits.get(self.pos..).is_none_or(|rest| rest.iter().all(|&b| !b))
    }
}

/// Total decoding: every string maps to an instance of `codec.kind` or to `Invalid`.
pub fn decode(codec: Codec, x: &BitString) -> Decoded {
    decode_inner(codec, x.bits()).map_or(Decoded::Invalid, Decoded::Valid)
}

fn decode_inner(codec: Codec, bits: &[bool]) -> Option<Instance> {
    let mut r = Reader { bits, pos: 0 };
    let compact = codec.layout == Layout::Compact;
    let (v, wide_c) =
        if compact { (r.unary(bits.len())?, 0) } else { (r.uint(WIDE_FIELD)? as usize, r.uint(WIDE_FIELD)? as usize) };
    if v == 0 || v > u32::MAX as usize {
        return None;
    }
    let mut quantifiers = Vec::new();
    let mut threshold = 0;
    match codec.kind {
        InstanceKind::Cnf => {}
        InstanceKind::Qbf => {
            for _ in 0..v {
                quantifiers.push(if r.bit()? { Quantifier::Forall } else { Quantifier::Exists });
            }
        }
        InstanceKind::Threshold => {
            if v >= 63 {
                return None;
            }
            threshold = r.uint(v + 1)?;
            if threshold > ThresholdInstance::max_threshold(v as u32) {
                return None;
            }
        }
    }
    let c = if compact { r.unary(bits.len())? } else { wide_c };
    let (index_width, index_offset) = if compact { (compact_index_width(v as u32), 1u64) } else { (WIDE_INDEX, 0) };
    if bits.len() < r.pos + 3 * c * (1 + index_width) {
        return None;
    }
    let mut clauses = Vec::with_capacity(c);
    for _ in 0..c {
        let mut clause = [Lit::pos(1); 3];
        for lit in &mut clause {
            let negated = r.bit()?;
            let var = r.uint(index_width)? + index_offset;
            if var == 0 || var > v as u64 {
                return None;
            }
            *lit = Lit { var: var as u32, negated };
        }
        clauses.push(clause);
    }
    if compact && !r.bit()? {
        return None;
    }
    if !r.rest_is_zero() {
        return None;
    }
    let formula = Formula3CNF { num_vars: v as u32, clauses };
    Some(match codec.kind {
        InstanceKind::Cnf => Instance::Cnf(formula),
        InstanceKind::Qbf => Instance::Qbf(QBFormula { quantifiers, matrix: formula }),
        InstanceKind::Threshold => Instance::Threshold(ThresholdInstance { formula, threshold }),
    })
}

/// Extends `x` to length `n` without changing what it decodes to.
///
/// Valid strings are re-encoded at length `n`; invalid strings map to the
/// all-zero string, which is invalid in every codec.
pub fn pad_to_length(codec: Codec, x: &BitString, n: usize) -> Result<BitString> {
    if x.len() >= n {
        return Err(Error::Length { len: x.len(), target: n });
    }
    Ok(match decode(codec, x) {
        Decoded::Valid(instance) => encode(&instance, codec.layout, n)?,
        Decoded::Invalid => BitString::zeros(n),
    })
}

/// Truth table of an `n`-input Boolean function; entry `t` is the value on the
/// input whose big-endian bits spell `t` (input 0 is the most significant bit).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruthTable {
    n: usize,
    bits: BitString,
}

impl TruthTable {
    pub fn new(bits: BitString) -> Result<Self, ParseError> {
        let len = bits.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(ParseError::new(format!("truth table length {len} is not a power of two")));
        }
        Ok(Self { n: len.trailing_zeros() as usize, bits })
    }

    pub fn from_fn(n: usize, f: impl Fn(u64) -> bool) -> Self {
        Self { n, bits: (0..1u64 << n).map(f).collect() }
    }

    /// Accepts `len:hex` or a bare hex body of `4 * digits` bits.
    pub fn parse(s: &str) -> Result<Self, ParseError> {
        let s = s.trim();
        let bits = if s.contains(':') {
            s.parse::<BitString>()?
        } else if let Some(bin) = s.strip_prefix("0b") {
            BitString::from_binary(bin)?
        } else {
            BitString::from_hex_body(s, s.len() * 4)?
        };
        Self::new(bits)
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, index: u64) -> bool {
        self.bits.bit_or_zero(index as usize)
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    /// Packed form for arity <= 6; bit `t` of the word is entry `t`.
    pub fn to_word(&self) -> u64 {
        assert!(self.n <= 6, "packed truth tables hold at most 64 entries");
        self.bits.bits().iter().enumerate().fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn to_hex(&self) -> String {
        self.bits.to_hex_body()
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits)
    }
}

/// A strictly increasing polynomial length function `l(n) = sum c_i n^i` with `l(n) > n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PaddingScheme {
    coeffs: Vec<u64>,
}

impl PaddingScheme {
    pub fn new(coeffs: Vec<u64>) -> Result<Self> {
        let scheme = Self { coeffs };
        if !scheme.coeffs.iter().skip(1).any(|&c| c > 0) {
            return Err(Error::Config("padding polynomial must be non-constant".into()));
        }
        let mut prev = scheme.eval(0);
        for n in 1..=256 {
            let l = scheme.eval(n);
            if l <= n || l <= prev {
                return Err(Error::Config(format!("padding polynomial fails l(n) > n at n = {n}")));
            }
            prev = l;
        }
        Ok(scheme)
    }

    /// `l(n) = n + offset`.
    pub fn shift(offset: u64) -> Result<Self> {
        Self::new(vec![offset, 1])
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn eval(&self, n: usize) -> usize {
        self.coeffs.iter().rev().fold(0u64, |acc, &c| acc.saturating_mul(n as u64).saturating_add(c)) as usize
    }

    /// The `n` with `l(n) = len`, if any.
    pub fn preimage(&self, len: usize) -> Option<usize> {
        (0..=len).find(|&n| self.eval(n) == len)
    }
}

impl Default for PaddingScheme {
    fn default() -> Self {
        Self { coeffs: vec![16, 1] }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x1x1x1() -> Formula3CNF {
        Formula3CNF::new(1, vec![[Lit::pos(1); 3]])
    }

    #[test]
    fn wide_layout_matches_documented_bits() {
        let x = encode(&Instance::Cnf(x1x1x1()), Layout::Wide, 48).unwrap();
        let lit = "000000001";
        let expected = format!("00000001{}{}{}{}", "00000001", lit, lit, lit);
        let mut expected: Vec<bool> = expected.chars().map(|c| c == '1').collect();
        expected.resize(48, false);
        assert_eq!(x.bits(), &expected[..]);
    }

    #[test]
    fn wide_header_overflow() {
        let f = Formula3CNF::new(300, vec![]);
        assert!(matches!(encode(&Instance::Cnf(f), Layout::Wide, 32), Err(Error::Overflow { .. })));
        // Header fits but the clause does not.
        assert!(matches!(encode(&Instance::Cnf(x1x1x1()), Layout::Wide, 32), Err(Error::Overflow { .. })));
    }

    #[test]
    fn all_zero_strings_are_invalid() {
        for layout in [Layout::Wide, Layout::Compact] {
            for kind in [InstanceKind::Cnf, InstanceKind::Qbf, InstanceKind::Threshold] {
                assert_eq!(decode(Codec::new(kind, layout), &BitString::zeros(32)), Decoded::Invalid);
            }
        }
    }

    #[test]
    fn out_of_range_literal_is_invalid() {
        let f = Formula3CNF::new(2, vec![[Lit::pos(1), Lit::pos(2), Lit::pos(2)]]);
        let mut bits = encode(&Instance::Cnf(f), Layout::Wide, 64).unwrap().into_bits();
        // Second literal's index field: bits 16 + 9 + 1 .. 16 + 18; set it to 3.
        let start = 16 + 9 + 1;
        for (i, b) in [0, 0, 0, 0, 0, 0, 1, 1].iter().enumerate() {
            bits[start + i] = *b == 1;
        }
        assert_eq!(decode(Codec::new(InstanceKind::Cnf, Layout::Wide), &bits.into()), Decoded::Invalid);
    }

    #[test]
    fn compact_minimal_encodings() {
        let taut = Instance::Cnf(Formula3CNF::tautology(1));
        assert_eq!(encode_natural(&taut, Layout::Compact), BitString::from_binary("1001").unwrap());
        let one = Instance::Cnf(x1x1x1());
        assert_eq!(encode_natural(&one, Layout::Compact), BitString::from_binary("10100001").unwrap());
        let contra = Instance::Cnf(Formula3CNF::contradiction(1));
        assert_eq!(encoded_len(&contra, Layout::Compact), 12);
    }

    #[test]
    fn compact_truncation_is_invalid_even_after_zero_extension() {
        let full = encode_natural(&Instance::Cnf(x1x1x1()), Layout::Compact);
        for cut in 0..full.len() {
            let prefix: BitString = full.bits()[..cut].iter().copied().collect();
            assert_eq!(decode(Codec::CNF, &prefix), Decoded::Invalid);
            assert_eq!(decode(Codec::CNF, &prefix.zero_extended(40)), Decoded::Invalid);
        }
    }

    #[test]
    fn threshold_above_cap_is_invalid() {
        let t = ThresholdInstance { formula: Formula3CNF::tautology(1), threshold: 3 };
        let x = encode_natural(&Instance::Threshold(t), Layout::Compact);
        assert!(decode(Codec::THRESHOLD, &x).is_valid());
        let mut bits = x.into_bits();
        // unary v = "10", threshold field is the next two bits; no 2-bit value exceeds 3
        // with v = 1, so use v = 2 (cap 5) and write 6.
        bits.clear();
        bits.extend([true, true, false, true, true, false, false, true]);
        assert_eq!(decode(Codec::THRESHOLD, &bits.into()), Decoded::Invalid);
    }

    #[test]
    fn pad_errors_when_not_shorter() {
        let x = BitString::zeros(8);
        assert!(matches!(pad_to_length(Codec::CNF, &x, 8), Err(Error::Length { .. })));
        assert!(pad_to_length(Codec::CNF, &x, 9).is_ok());
    }

    #[test]
    fn restriction_shortens_compact_encodings() {
        let f =
            Formula3CNF::new(3, vec![[Lit::pos(1), Lit::neg(2), Lit::pos(3)], [Lit::neg(1), Lit::neg(1), Lit::pos(2)]]);
        let len = encoded_len(&Instance::Cnf(f.clone()), Layout::Compact);
        for b in [false, true] {
            if let Restriction::Instance(g) = f.restrict_first(b) {
                assert!(encoded_len(&Instance::Cnf(g), Layout::Compact) < len);
            }
        }
    }

    #[test]
    fn restriction_values() {
        let f = x1x1x1();
        assert_eq!(f.restrict_first(true), Restriction::Constant(true));
        assert_eq!(f.restrict_first(false), Restriction::Constant(false));
        let g = Formula3CNF::new(2, vec![[Lit::pos(1), Lit::pos(2), Lit::pos(2)]]);
        assert_eq!(g.restrict_first(false), Restriction::Instance(Formula3CNF::new(1, vec![[Lit::pos(1); 3]])));
        assert_eq!(g.restrict_first(true), Restriction::Instance(Formula3CNF::tautology(1)));
    }

    #[test]
    fn qbf_blocks() {
        use Quantifier::*;
        let q = QBFormula::new(vec![Exists, Exists, Forall, Exists], Formula3CNF::tautology(4));
        assert_eq!(q.blocks(), vec![(Exists, vec![1, 2]), (Forall, vec![3]), (Exists, vec![4])]);
    }

    #[test]
    fn padding_scheme_validation() {
        assert!(PaddingScheme::new(vec![0, 1]).is_err());
        assert!(PaddingScheme::new(vec![5]).is_err());
        let p = PaddingScheme::new(vec![1, 1, 1]).unwrap();
        assert_eq!(p.eval(3), 13);
        assert_eq!(p.preimage(13), Some(3));
        assert_eq!(p.preimage(12), None);
    }

    #[test]
    fn truth_table_parsing() {
        let t = TruthTable::parse("6").unwrap();
        assert_eq!(t.arity(), 2);
        assert_eq!(t.to_word(), 0b0110);
        assert!(TruthTable::parse("3:c0").is_err());
        assert_eq!(TruthTable::parse("0b0001").unwrap().to_word(), 0b1000);
    }

    pub(crate) fn arb_formula(max_vars: u32, max_clauses: usize) -> impl Strategy<Value = Formula3CNF> {
        (1..=max_vars).prop_flat_map(move |v| {
            let lit = (1..=v, any::<bool>()).prop_map(|(var, negated)| Lit { var, negated });
            let clause = [lit.clone(), lit.clone(), lit];
            proptest::collection::vec(clause, 0..=max_clauses).prop_map(move |clauses| Formula3CNF::new(v, clauses))
        })
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        arb_formula(12, 6).prop_flat_map(|f| {
            let v = f.num_vars;
            let quants =
                proptest::collection::vec(prop_oneof![Just(Quantifier::Exists), Just(Quantifier::Forall)], v as usize);
            let t = 0..=ThresholdInstance::max_threshold(v);
            (Just(f), quants, t, 0..3u8).prop_map(|(f, quantifiers, threshold, which)| match which {
                0 => Instance::Cnf(f),
                1 => Instance::Qbf(QBFormula::new(quantifiers, f)),
                _ => Instance::Threshold(ThresholdInstance { formula: f, threshold }),
            })
        })
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(inst in arb_instance(), extra in 0usize..20, wide in any::<bool>()) {
            let layout = if wide { Layout::Wide } else { Layout::Compact };
            let len = encoded_len(&inst, layout) + extra;
            let x = encode(&inst, layout, len).unwrap();
            prop_assert_eq!(x.len(), len);
            prop_assert_eq!(decode(Codec::new(inst.kind(), layout), &x), Decoded::Valid(inst));
        }

        #[test]
        fn compact_padding_is_zero_extension(bits in proptest::collection::vec(any::<bool>(), 0..24), extra in 1usize..8) {
            let x = BitString::from_bits(bits);
            for codec in [Codec::CNF, Codec::QBF, Codec::THRESHOLD] {
                let padded = pad_to_length(codec, &x, x.len() + extra).unwrap();
                prop_assert_eq!(decode(codec, &padded), decode(codec, &x));
                prop_assert_eq!(decode(codec, &x.zero_extended(x.len() + extra)), decode(codec, &x));
            }
        }
    }
}
