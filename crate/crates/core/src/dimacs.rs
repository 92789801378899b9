//! DIMACS CNF and QDIMACS import/export for three-literal formulas.
//!
//! Clauses with one or two literals are padded to width three by repeating
//! literals; wider clauses are rejected.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::instance::{Formula3CNF, Lit, QBFormula, Quantifier};

pub fn write_dimacs(f: &Formula3CNF) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars, f.clauses.len());
    for clause in &f.clauses {
        for lit in clause {
            let _ = write!(out, "{} ", lit.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

pub fn write_qdimacs(q: &QBFormula) -> String {
    let mut out = format!("p cnf {} {}\n", q.matrix.num_vars, q.matrix.clauses.len());
    for (quant, vars) in q.blocks() {
        out.push(match quant {
            Quantifier::Exists => 'e',
            Quantifier::Forall => 'a',
        });
        for v in vars {
            let _ = write!(out, " {v}");
        }
        out.push_str(" 0\n");
    }
    for clause in &q.matrix.clauses {
        for lit in clause {
            let _ = write!(out, "{} ", lit.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}

struct Parsed {
    num_vars: u32,
    declared_clauses: usize,
    prefix: Vec<(Quantifier, Vec<u32>)>,
    clauses: Vec<Vec<Lit>>,
}

fn parse(text: &str) -> Result<Parsed, ParseError> {
    let mut header: Option<(u32, usize)> = None;
    let mut prefix = Vec::new();
    let mut clauses = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        let err = |msg: &str| ParseError::new(format!("line {}: {msg}", lineno + 1));
        if line.starts_with('p') {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(err("expected `p cnf <vars> <clauses>`"));
            }
            let v = fields[2].parse().map_err(|_| err("bad variable count"))?;
            let c = fields[3].parse().map_err(|_| err("bad clause count"))?;
            header = Some((v, c));
            continue;
        }
        let (num_vars, _) = header.ok_or_else(|| err("clause before header"))?;
        if line.starts_with('a') || line.starts_with('e') {
            if !clauses.is_empty() || !current.is_empty() {
                return Err(err("quantifier block after clauses"));
            }
            let quant = if line.starts_with('a') { Quantifier::Forall } else { Quantifier::Exists };
            let mut vars = Vec::new();
            for tok in line[1..].split_whitespace() {
                let v: u32 = tok.parse().map_err(|_| err("bad variable"))?;
                if v == 0 {
                    break;
                }
                if v > num_vars {
                    return Err(err("quantified variable out of range"));
                }
                vars.push(v);
            }
            prefix.push((quant, vars));
            continue;
        }
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| err("bad literal"))?;
            if v == 0 {
                if current.is_empty() {
                    return Err(err("empty clause"));
                }
                if current.len() > 3 {
                    return Err(err("clause wider than three literals"));
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                let lit = Lit::from_dimacs(v);
                if lit.var > num_vars {
                    return Err(err("literal out of range"));
                }
                current.push(lit);
            }
        }
    }
    if !current.is_empty() {
        return Err(ParseError::new("unterminated clause"));
    }
    let (num_vars, declared_clauses) = header.ok_or_else(|| ParseError::new("missing header"))?;
    if num_vars == 0 {
        return Err(ParseError::new("formula must have at least one variable"));
    }
    Ok(Parsed { num_vars, declared_clauses, prefix, clauses })
}

pub fn read_dimacs(text: &str) -> Result<Formula3CNF, ParseError> {
    let p = parse(text)?;
    if !p.prefix.is_empty() {
        return Err(ParseError::new("quantifier prefix in plain DIMACS input"));
    }
    if p.clauses.len() != p.declared_clauses {
        return Err(ParseError::new(format!(
            "header declares {} clauses, found {}",
            p.declared_clauses,
            p.clauses.len()
        )));
    }
    Ok(Formula3CNF::from_short_clauses(p.num_vars, &p.clauses).expect("widths checked"))
}

/// Reads a QDIMACS file. Variables are renumbered so that variable `i` is the
/// `i`-th bound variable in prefix order; free variables are bound
/// existentially in front of the prefix.
pub fn read_qdimacs(text: &str) -> Result<QBFormula, ParseError> {
    let p = parse(text)?;
    if p.clauses.len() != p.declared_clauses {
        return Err(ParseError::new("clause count does not match header"));
    }
    let mut seen = vec![false; p.num_vars as usize + 1];
    for (_, vars) in &p.prefix {
        for &v in vars {
            if std::mem::replace(&mut seen[v as usize], true) {
                return Err(ParseError::new(format!("variable {v} quantified twice")));
            }
        }
    }
    let mut order: Vec<(Quantifier, u32)> =
        (1..=p.num_vars).filter(|&v| !seen[v as usize]).map(|v| (Quantifier::Exists, v)).collect();
    for (q, vars) in &p.prefix {
        order.extend(vars.iter().map(|&v| (*q, v)));
    }
    let mut rename = vec![0u32; p.num_vars as usize + 1];
    for (i, &(_, v)) in order.iter().enumerate() {
        rename[v as usize] = i as u32 + 1;
    }
    let clauses: Vec<Vec<Lit>> = p
        .clauses
        .iter()
        .map(|c| c.iter().map(|l| Lit { var: rename[l.var as usize], negated: l.negated }).collect())
        .collect();
    let matrix = Formula3CNF::from_short_clauses(p.num_vars, &clauses).expect("widths checked");
    Ok(QBFormula::new(order.into_iter().map(|(q, _)| q).collect(), matrix))
}
