//! wasm-bindgen entry points for `www/index.html`. Every function returns a JSON
//! string so the page only needs `JSON.parse`.

use refute_core::counting::{vv_isolate_with, VVSeed};
use refute_core::dimacs::{read_dimacs, write_dimacs};
use refute_core::dsr::{Backend, DsrLanguage};
use refute_core::harness::{dsr_cell, mcsp_cell};
use refute_core::instance::TruthTable;
use refute_core::mcsp::MergeOracle;
use refute_core::oracle::{count_sat, min_circuit_size, CircuitBasis, OracleBudget};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest length the page may request from the self-reduction refuter.
pub const MAX_DEMO_LENGTH: usize = 12;

fn to_js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Runs the streaming search on a hex truth table with fault rate `faults`.
#[wasm_bindgen]
pub fn mcsp_stream(table: &str, s: usize, faults: f64, seed: u64) -> Result<String, JsError> {
    mcsp_stream_json(table, s, faults, seed).map_err(to_js)
}

pub fn mcsp_stream_json(table: &str, s: usize, faults: f64, seed: u64) -> Result<String, String> {
    if !(0.0..=1.0).contains(&faults) {
        return Err("fault rate must lie in [0, 1]".into());
    }
    let table = TruthTable::parse(table).map_err(|e| e.to_string())?;
    if table.arity() > 4 {
        return Err("the demo accepts tables on at most 4 inputs".into());
    }
    let budget = OracleBudget::default();
    let yes = min_circuit_size(&table, &CircuitBasis::full(), &budget).map(|m| m <= s).ok();
    let mut oracle = MergeOracle::faulty(faults, seed);
    let report = mcsp_cell(&table, s, &mut oracle, seed, yes).map_err(|e| e.to_string())?;
    Ok(report.to_json_line())
}

/// Runs the self-reduction refuter against a catalog decider.
#[wasm_bindgen]
pub fn dsr_refute(lang: &str, decider: &str, n: usize, backend: &str, seed: u64) -> Result<String, JsError> {
    dsr_refute_json(lang, decider, n, backend, seed).map_err(to_js)
}

pub fn dsr_refute_json(lang: &str, decider: &str, n: usize, backend: &str, seed: u64) -> Result<String, String> {
    if n > MAX_DEMO_LENGTH {
        return Err(format!("length must be at most {MAX_DEMO_LENGTH}"));
    }
    let lang = DsrLanguage::from_id(lang).map_err(|e| e.to_string())?;
    let backend = Backend::from_id(backend).map_err(|e| e.to_string())?;
    let report = dsr_cell(lang, decider, n, backend, seed, &OracleBudget::default()).map_err(|e| e.to_string())?;
    Ok(report.to_json_line())
}

/// Adds random affine constraints to a DIMACS formula and reports model counts.
#[wasm_bindgen]
pub fn isolate(dimacs: &str, seed: u64) -> Result<String, JsError> {
    isolate_json(dimacs, seed).map_err(to_js)
}

pub fn isolate_json(dimacs: &str, seed: u64) -> Result<String, String> {
    let f = read_dimacs(dimacs).map_err(|e| e.to_string())?;
    if f.num_vars > 10 {
        return Err("the demo accepts formulas on at most 10 variables".into());
    }
    let vv = VVSeed::sample(seed, f.num_vars);
    let g = vv_isolate_with(&f, &vv);
    // Auxiliary chain variables are determined by the originals, so counting stays cheap.
    let budget = OracleBudget { max_vars: 64, ..OracleBudget::default() };
    let before = count_sat(&f, &budget).map_err(|e| e.to_string())?;
    let after = count_sat(&g, &budget).map_err(|e| e.to_string())?;
    let constraints: Vec<_> = vv.constraints.iter().map(|c| json!({ "vars": c.vars, "rhs": c.rhs })).collect();
    Ok(json!({
        "seed": seed,
        "constraints": constraints,
        "models_before": before,
        "models_after": after,
        "isolated": after == 1,
        "odd": after % 2 == 1,
        "num_vars": g.num_vars,
        "num_clauses": g.clauses.len(),
        "dimacs": write_dimacs(&g),
    })
    .to_string())
}
