use refute_wasm_demo::{dsr_refute_json, isolate_json, mcsp_stream_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn stream_with_exact_oracle_returns_a_correct_circuit() {
    let r = parse(mcsp_stream_json("8:96", 2, 0.0, 1).unwrap());
    assert_eq!(r["case"], "circuit");
    assert_eq!(r["sound"], true);
}

#[test]
fn stream_never_releases_a_wrong_circuit_under_faults() {
    for seed in 0..40 {
        let r = parse(mcsp_stream_json("16:6996", 3, 0.4, seed).unwrap());
        assert_eq!(r["sound"], true, "{r}");
    }
}

#[test]
fn refuter_catches_constant_decider() {
    let r = parse(dsr_refute_json("sat", "const1", 8, "compiled", 0).unwrap());
    assert_eq!(r["counterexample_found"], true);
    assert!(dsr_refute_json("sat", "const1", 40, "exact", 0).is_err());
    assert!(dsr_refute_json("sat", "unknown", 4, "exact", 0).is_err());
}

#[test]
fn isolation_preserves_unsatisfiability_and_reports_counts() {
    let unsat = "p cnf 2 4\n1 2 2 0\n1 -2 -2 0\n-1 2 2 0\n-1 -2 -2 0\n";
    for seed in 0..50 {
        let r = parse(isolate_json(unsat, seed).unwrap());
        assert_eq!(r["models_after"], 0);
    }
    let free = "p cnf 6 1\n1 -1 2 0\n";
    let hits = (0..200).filter(|&s| parse(isolate_json(free, s).unwrap())["isolated"] == true).count();
    assert!(hits > 0);
    assert!(isolate_json("garbage", 0).is_err());
}
