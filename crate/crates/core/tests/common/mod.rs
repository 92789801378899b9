//! Reference oracles for integration tests. They share only the decoder with
//! the library and evaluate membership by plain enumeration or naive search.

#![allow(dead_code)]

use refute_core::bits::BitString;
use refute_core::circuit::{BooleanCircuit, Wire};
use refute_core::decider::DeciderHandle;
use refute_core::instance::{Decoded, Formula3CNF, Instance, Lit, QBFormula, Quantifier};
use refute_core::oracle::Language;

fn lit_true(l: Lit, assignment: u64) -> bool {
    ((assignment >> (l.var - 1)) & 1 == 1) != l.negated
}

fn satisfied(f: &Formula3CNF, assignment: u64) -> bool {
    f.clauses.iter().all(|c| c.iter().any(|&l| lit_true(l, assignment)))
}

/// Model count by enumerating all `2^v` assignments (bit `i - 1` is variable `i`).
pub fn brute_count(f: &Formula3CNF) -> u64 {
    assert!(f.num_vars <= 24, "enumeration limited to 24 variables");
    (0..1u64 << f.num_vars).filter(|&a| satisfied(f, a)).count() as u64
}

/// All models as assignment masks, in increasing order.
pub fn brute_models(f: &Formula3CNF) -> Vec<u64> {
    (0..1u64 << f.num_vars).filter(|&a| satisfied(f, a)).collect()
}

/// Model count by naive splitting with unit propagation; handles formulas whose
/// extra variables are determined by the first few.
pub fn split_count(f: &Formula3CNF) -> u128 {
    split_count_up_to(f, u128::MAX)
}

/// Like [`split_count`] but stops once `limit` models are found.
pub fn split_count_up_to(f: &Formula3CNF, limit: u128) -> u128 {
    let clauses: Vec<Vec<i64>> = f.clauses.iter().map(|c| c.iter().map(|l| l.to_dimacs()).collect()).collect();
    count_rec(clauses, f.num_vars as usize, &mut vec![0i8; f.num_vars as usize + 1], limit)
}

fn count_rec(clauses: Vec<Vec<i64>>, n: usize, assign: &mut Vec<i8>, limit: u128) -> u128 {
    let mut clauses = clauses;
    let mut trail = Vec::new();
    loop {
        let mut next = Vec::with_capacity(clauses.len());
        let mut units = Vec::new();
        for c in &clauses {
            if c.iter().any(|&l| assign[l.unsigned_abs() as usize] == l.signum() as i8) {
                continue;
            }
            let open: Vec<i64> = c.iter().copied().filter(|&l| assign[l.unsigned_abs() as usize] == 0).collect();
            if open.len() == 1 {
                units.push(open[0]);
            }
            next.push(open);
        }
        clauses = next;
        let mut conflict = clauses.iter().any(|c| c.is_empty());
        for &l in &units {
            let v = l.unsigned_abs() as usize;
            match assign[v] {
                0 => {
                    assign[v] = l.signum() as i8;
                    trail.push(v);
                }
                a if a != l.signum() as i8 => conflict = true,
                _ => {}
            }
        }
        if conflict {
            for v in trail {
                assign[v] = 0;
            }
            return 0;
        }
        if units.is_empty() {
            break;
        }
    }
    let result = match (1..=n).find(|&v| assign[v] == 0) {
        None => 1,
        Some(v) if clauses.is_empty() => {
            let free = (v..=n).filter(|&u| assign[u] == 0).count();
            1u128.checked_shl(free as u32).unwrap_or(u128::MAX)
        }
        Some(v) => {
            let mut total = 0;
            for s in [-1i8, 1] {
                assign[v] = s;
                total += count_rec(clauses.clone(), n, assign, limit - total);
                assign[v] = 0;
                if total >= limit {
                    break;
                }
            }
            total
        }
    };
    for v in trail {
        assign[v] = 0;
    }
    result
}

pub fn brute_qbf(q: &QBFormula) -> bool {
    fn go(q: &QBFormula, i: usize, assignment: u64) -> bool {
        if i == q.quantifiers.len() {
            return satisfied(&q.matrix, assignment);
        }
        let branch = |b: u64| go(q, i + 1, assignment | (b << i));
        match q.quantifiers[i] {
            Quantifier::Exists => branch(0) || branch(1),
            Quantifier::Forall => branch(0) && branch(1),
        }
    }
    go(q, 0, 0)
}

/// Membership of a decoded instance; counts use [`split_count`] so formulas
/// with many determined variables stay cheap.
pub fn holds(language: Language, instance: &Instance) -> bool {
    match (language, instance) {
        (Language::Sat, Instance::Cnf(f)) => split_count_up_to(f, 1) > 0,
        (Language::Parity, Instance::Cnf(f)) => split_count(f) % 2 == 1,
        (Language::Qbf, Instance::Qbf(q)) => brute_qbf(q),
        (Language::Threshold, Instance::Threshold(t)) => {
            split_count_up_to(&t.formula, t.threshold as u128) >= t.threshold as u128
        }
        _ => false,
    }
}

pub fn member(language: Language, x: &BitString) -> bool {
    match language.codec().decode(x) {
        Decoded::Valid(instance) => holds(language, &instance),
        Decoded::Invalid => false,
    }
}

/// Whether `decider` answers wrongly on `x`.
pub fn is_error(decider: &mut DeciderHandle, language: Language, x: &BitString) -> bool {
    decider.decide(x) != member(language, x)
}

/// Whether `decider` errs somewhere on strings of length `n`.
pub fn errs_at(decider: &DeciderHandle, language: Language, n: usize) -> bool {
    let mut d = decider.fresh();
    d.set_recording(false);
    BitString::all_of_length(n).any(|x| is_error(&mut d, language, &x))
}

/// Circuit output on input index `t` (input 0 is the most significant bit), by wire walk.
pub fn circuit_value(c: &BooleanCircuit, t: u64) -> bool {
    let n = c.arity();
    let mut vals = Vec::with_capacity(c.size());
    let get = |w: Wire, vals: &Vec<bool>| match w {
        Wire::Const(b) => b,
        Wire::Input(i) => (t >> (n - 1 - i as usize)) & 1 == 1,
        Wire::Gate(j) => vals[j as usize],
    };
    for g in c.gates() {
        let v = g.op.apply(get(g.a, &vals), get(g.b, &vals));
        vals.push(v);
    }
    get(c.output(), &vals)
}
