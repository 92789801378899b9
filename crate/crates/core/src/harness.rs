//! Experiment runner: runs refuters against deciders, checks every emitted
//! string against the exact oracle and writes one JSON report per cell.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bits::BitString;
use crate::counting::{parity_refute, pp_refute, ParityBranch, PpSearch};
use crate::decider::{catalog_entry, derive_seed, DeciderHandle, CATALOG_IDS};
use crate::dimacs::{write_dimacs, write_qdimacs};
use crate::dsr::{refute_dsr, Backend, DsrLanguage};
use crate::error::{Error, Result};
use crate::instance::{Decoded, Instance, PaddingScheme, TruthTable};
use crate::list::{CounterexampleList, Verdict};
use crate::mcsp::{computes, stream_search_mcsp, MergeOracle};
use crate::oracle::{min_circuit_size, CircuitBasis, Language, OracleBudget};
use crate::prefix::{prefix_refute, ErrorTable, OracleReduction, DEFAULT_EXHAUSTIVE_CAP};

/// Ground truth against `decider`'s answer on `x` under `seed`.
pub fn verify_counterexample(
    x: &BitString,
    language: Language,
    decider: &mut DeciderHandle,
    seed: u64,
    budget: &OracleBudget,
) -> Result<Verdict> {
    let truth = language.member(x, budget)?;
    Ok(Verdict::new(truth, decider.decide_with_seed(x, seed)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub string: BitString,
    pub language: Language,
    pub role: String,
    pub ground_truth: bool,
    pub answer: bool,
    pub counterexample: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefutationReport {
    pub refuter: String,
    pub decider: String,
    pub language: Language,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nvars: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    pub entries: Vec<ReportEntry>,
    /// How the refuter terminated.
    pub case: String,
    /// Whether exhaustive checking found a decider error at the target length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_exists: Option<bool>,
    pub counterexample_found: bool,
    /// Decider queries made by the refuter itself (verification excluded).
    pub oracle_calls: u64,
    pub sound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub details: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

impl RefutationReport {
    fn new(refuter: &str, decider: &str, language: Language, seed: u64) -> Self {
        Self {
            refuter: refuter.to_string(),
            decider: decider.to_string(),
            language,
            n: None,
            nvars: None,
            seed,
            backend: None,
            entries: Vec::new(),
            case: String::new(),
            error_exists: None,
            counterexample_found: false,
            oracle_calls: 0,
            sound: true,
            violation: None,
            details: BTreeMap::new(),
            runtime_ms: None,
        }
    }

    /// Verifies every list entry and records it.
    fn take_list(
        &mut self,
        list: &CounterexampleList,
        decider: &mut DeciderHandle,
        budget: &OracleBudget,
    ) -> Result<()> {
        self.case = list.outcome.clone();
        for e in &list.entries {
            let v = verify_counterexample(&e.string, e.language, decider, decider.seed(), budget)?;
            self.entries.push(ReportEntry {
                string: e.string.clone(),
                language: e.language,
                role: e.role.clone(),
                ground_truth: v.ground_truth,
                answer: v.answer,
                counterexample: v.counterexample,
            });
        }
        self.counterexample_found = self.entries.iter().any(|e| e.counterexample);
        Ok(())
    }

    fn fail(&mut self, why: impl Into<String>) {
        self.sound = false;
        self.violation = Some(why.into());
    }

    /// The verdict invariant holds on every entry.
    pub fn consistent(&self) -> bool {
        self.entries.iter().all(|e| e.counterexample == (e.ground_truth != e.answer))
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lengths {
    Range { from: usize, to: usize },
    List(Vec<usize>),
}

impl Lengths {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Lengths::Range { from, to } => (*from..=*to).collect(),
            Lengths::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeciderSet {
    /// `"all"` for the whole catalog.
    All(String),
    Ids(Vec<String>),
}

impl DeciderSet {
    pub fn ids(&self) -> Result<Vec<String>> {
        match self {
            DeciderSet::All(s) if s == "all" => Ok(CATALOG_IDS.iter().map(|s| s.to_string()).collect()),
            DeciderSet::All(s) => Err(Error::Config(format!("decider set must be \"all\" or a list, got \"{s}\""))),
            DeciderSet::Ids(v) => Ok(v.clone()),
        }
    }
}

fn default_all() -> DeciderSet {
    DeciderSet::All("all".into())
}

fn default_backends() -> Vec<Backend> {
    vec![Backend::Exact]
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "refuter", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Dsr {
        language: DsrLanguage,
        #[serde(default = "default_all")]
        deciders: DeciderSet,
        lengths: Lengths,
        #[serde(default = "default_backends")]
        backends: Vec<Backend>,
    },
    Prefix {
        language: Language,
        #[serde(default = "default_all")]
        deciders: DeciderSet,
        lengths: Lengths,
        #[serde(default)]
        padding: Option<Vec<u64>>,
    },
    Pp {
        #[serde(default = "default_all")]
        deciders: DeciderSet,
        nvars: Lengths,
        #[serde(default = "default_max_clauses")]
        max_clauses: usize,
        /// Random formulas per run; 0 selects the exhaustive search.
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "one")]
        runs: u64,
    },
    Parity {
        #[serde(default = "default_all")]
        deciders: DeciderSet,
        nvars: Lengths,
        seed_budget: u64,
        #[serde(default = "one")]
        runs: u64,
    },
    Mcsp {
        tables: Vec<String>,
        s: usize,
        #[serde(default)]
        faults: f64,
        #[serde(default = "one")]
        runs: u64,
    },
}

fn default_max_clauses() -> usize {
    6
}

fn default_samples() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Option<OracleBudget>,
    /// Record wall-clock time per cell (breaks byte-identical replay).
    #[serde(default)]
    pub timing: bool,
    #[serde(rename = "experiment")]
    pub experiments: Vec<Experiment>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.experiments.is_empty() {
            return Err(Error::Config("config has no [[experiment]] entries".into()));
        }
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRun {
    pub reports: Vec<RefutationReport>,
}

impl ExperimentRun {
    pub fn violations(&self) -> usize {
        self.reports.iter().filter(|r| !r.sound).count()
    }

    pub fn to_jsonl(&self) -> String {
        self.reports.iter().map(|r| r.to_json_line() + "\n").collect()
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(self.to_jsonl().as_bytes())
    }
}

fn decider(language: Language, id: &str, seed: u64) -> Result<DeciderHandle> {
    Ok(catalog_entry(language, id)?.with_seed(seed))
}

/// Runs every cell of `config`, cell `i` seeded by `derive_seed(seed, i)`.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentRun> {
    let budget = config.budget.unwrap_or_default();
    let mut reports = Vec::new();
    let mut cell = 0u64;
    let mut next_seed = || {
        let s = derive_seed(seed, cell);
        cell += 1;
        s
    };
    for exp in &config.experiments {
        match exp {
            Experiment::Dsr { language, deciders, lengths, backends } => {
                for id in deciders.ids()? {
                    for n in lengths.values() {
                        for &backend in backends {
                            let s = next_seed();
                            reports.push(timed(config.timing, || dsr_cell(*language, &id, n, backend, s, &budget))?);
                        }
                    }
                }
            }
            Experiment::Prefix { language, deciders, lengths, padding } => {
                let padding = match padding {
                    Some(c) => PaddingScheme::new(c.clone())?,
                    None => PaddingScheme::default(),
                };
                for id in deciders.ids()? {
                    for n in lengths.values() {
                        let s = next_seed();
                        reports.push(timed(config.timing, || prefix_cell(*language, &id, n, &padding, s, &budget))?);
                    }
                }
            }
            Experiment::Pp { deciders, nvars, max_clauses, samples, runs } => {
                for id in deciders.ids()? {
                    for v in nvars.values() {
                        for _ in 0..*runs {
                            let s = next_seed();
                            let search = if *samples == 0 {
                                PpSearch::Exhaustive { max_clauses: *max_clauses }
                            } else {
                                PpSearch::Guided { max_clauses: *max_clauses, samples: *samples, seed: s }
                            };
                            reports.push(timed(config.timing, || pp_cell(&id, v as u32, &search, s, &budget))?);
                        }
                    }
                }
            }
            Experiment::Parity { deciders, nvars, seed_budget, runs } => {
                for id in deciders.ids()? {
                    for v in nvars.values() {
                        for _ in 0..*runs {
                            let s = next_seed();
                            reports.push(timed(config.timing, || parity_cell(&id, v, *seed_budget, s, &budget))?);
                        }
                    }
                }
            }
            Experiment::Mcsp { tables, s, faults, runs } => {
                let mut oracle = MergeOracle::faulty(*faults, 0);
                for table in tables {
                    let table = TruthTable::parse(table).map_err(Error::Parse)?;
                    let yes = min_circuit_size(&table, &CircuitBasis::full(), &budget).map(|m| m <= *s).ok();
                    for _ in 0..*runs {
                        let run_seed = next_seed();
                        reports.push(timed(config.timing, || mcsp_cell(&table, *s, &mut oracle, run_seed, yes))?);
                    }
                }
            }
        }
    }
    Ok(ExperimentRun { reports })
}

fn timed(on: bool, f: impl FnOnce() -> Result<RefutationReport>) -> Result<RefutationReport> {
    let start = Instant::now();
    let mut r = f()?;
    if on {
        r.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(r)
}

fn error_exists(language: Language, a: &DeciderHandle, n: usize, budget: &OracleBudget) -> Option<bool> {
    ErrorTable::build(language, a, n, DEFAULT_EXHAUSTIVE_CAP, budget).ok().map(|t| t.error_count() > 0)
}

pub fn dsr_cell(
    lang: DsrLanguage,
    id: &str,
    n: usize,
    backend: Backend,
    seed: u64,
    budget: &OracleBudget,
) -> Result<RefutationReport> {
    let language = lang.language();
    let mut a = decider(language, id, seed)?;
    let mut report = RefutationReport::new("dsr", id, language, seed);
    report.n = Some(n);
    report.backend = Some(format!("{backend:?}").to_lowercase());
    report.error_exists = error_exists(language, &a, n, budget);
    let list = match refute_dsr(lang, &mut a, n, backend) {
        Ok(list) => list,
        Err(Error::UnsupportedCapability { .. }) => {
            report.case = "unsupported".into();
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.oracle_calls = a.calls();
    report.take_list(&list, &mut a, budget)?;
    if report.error_exists == Some(true) && !report.counterexample_found {
        report.fail("decider errs at this length but no listed string is a counterexample");
    }
    if backend == Backend::Exact && report.error_exists == Some(false) && list.outcome != "no-violation" {
        report.fail("exact search reported a violation for a decider that is correct at this length");
    }
    Ok(report)
}

pub fn prefix_cell(
    language: Language,
    id: &str,
    n: usize,
    padding: &PaddingScheme,
    seed: u64,
    budget: &OracleBudget,
) -> Result<RefutationReport> {
    let mut a = decider(language, id, seed)?;
    let mut report = RefutationReport::new("prefix", id, language, seed);
    report.n = Some(n);
    let mut reduction = OracleReduction::new(language, padding.clone(), *budget);
    let run = prefix_refute(&mut a, n, &mut reduction)?;
    report.oracle_calls = a.calls();
    report.error_exists = Some(run.error_at_n);
    report.take_list(&run.list, &mut a, budget)?;
    report.details.insert("terminal_case".into(), json!(run.case.id()));
    report.details.insert("query_length".into(), json!(reduction.query_len(n)));
    if run.list.len() > crate::prefix::PREFIX_LIST_BOUND {
        report.fail("list exceeds six strings");
    }
    let touched_error = run.error_at_n || report.entries.iter().any(|e| e.counterexample);
    if touched_error && !report.counterexample_found {
        report.fail("an error exists at the touched lengths but the list has no counterexample");
    }
    Ok(report)
}

pub fn pp_cell(id: &str, nvars: u32, search: &PpSearch, seed: u64, budget: &OracleBudget) -> Result<RefutationReport> {
    let mut a = decider(Language::Threshold, id, seed)?;
    let mut report = RefutationReport::new("pp", id, Language::Threshold, seed);
    report.nvars = Some(nvars as usize);
    let run = pp_refute(&mut a, nvars, search)?;
    report.oracle_calls = a.calls();
    report.take_list(&run.list, &mut a, budget)?;
    report.details.insert("candidates".into(), json!(run.candidates));
    if let Some(f) = &run.formula {
        report.details.insert("formula".into(), json!(write_dimacs(f)));
    }
    if let Some(t) = &run.triple {
        let chains = t.rederive() && run.counts.as_ref().is_some_and(|c| t.matches(c));
        report.details.insert("chains_rederived".into(), json!(chains));
        if !chains {
            report.fail("the emitted triple does not re-derive a contradiction");
        }
    }
    if run.case.is_some() && !report.counterexample_found {
        report.fail("non-additive counter but no emitted threshold query is an error");
    }
    Ok(report)
}

pub fn parity_cell(
    id: &str,
    nvars: usize,
    seed_budget: u64,
    seed: u64,
    budget: &OracleBudget,
) -> Result<RefutationReport> {
    let mut a = decider(Language::Parity, id, seed)?;
    let mut report = RefutationReport::new("parity", id, Language::Parity, seed);
    report.nvars = Some(nvars);
    let mut one_sided = true;
    let mut unsatisfiable = None;
    let run = parity_refute(&mut a, nvars, seed_budget, seed, |d, list| {
        let mut list = list.clone();
        list.verify(d, budget)?;
        if unsatisfiable == Some(true)
            && list.outcome == "rejected"
            && list.entries[0].verdict.is_some_and(|v| v.ground_truth)
        {
            one_sided = false;
        }
        Ok(list.has_counterexample())
    });
    // The target formula is only known after the run; re-check one-sidedness from it.
    let run = run?;
    unsatisfiable = Some(!run.target_satisfiable);
    report.oracle_calls = a.calls();
    if let Some(last) = &run.last {
        report.take_list(&last.list, &mut a, budget)?;
        report.details.insert("vv_k".into(), json!(last.seed.k));
        if let ParityBranch::Extracted { witness } = &last.branch {
            report.details.insert("witness".into(), json!(witness));
        }
        if !matches!(last.branch, ParityBranch::Rejected) && !report.counterexample_found {
            report.fail("accepted isolated instance but the search list has no counterexample");
        }
        if unsatisfiable == Some(true)
            && last.list.outcome == "rejected"
            && report.entries.iter().any(|e| e.ground_truth)
        {
            one_sided = false;
        }
    }
    report.details.insert("seeds_used".into(), json!(run.seeds_used));
    report.details.insert("target_satisfiable".into(), json!(run.target_satisfiable));
    report.case = if run.exhausted { "seed-budget-exhausted".into() } else { report.case.clone() };
    if !one_sided {
        report.fail("isolation of an unsatisfiable target produced an odd instance");
    }
    Ok(report)
}

pub fn mcsp_cell(
    table: &TruthTable,
    s: usize,
    oracle: &mut MergeOracle,
    seed: u64,
    yes: Option<bool>,
) -> Result<RefutationReport> {
    let mut report = RefutationReport::new("mcsp-stream", "merge-oracle", Language::Sat, seed);
    report.n = Some(table.arity());
    let out = stream_search_mcsp(table, s, oracle, seed)?;
    report.oracle_calls = out.accounting.oracle_calls;
    report.case = if out.is_no() { "no".into() } else { "circuit".into() };
    report.details.insert("table".into(), json!(table.to_string()));
    report.details.insert("fault_rate".into(), json!(oracle.fault_rate()));
    report.details.insert("corruptions".into(), json!(out.corruptions));
    report.details.insert("accounting".into(), serde_json::to_value(&out.accounting).expect("plain data"));
    if let Some(c) = &out.circuit {
        report.details.insert("circuit".into(), json!(c.to_string()));
        if !computes(c, table, s) {
            report.fail("released a circuit that does not compute the table within size s");
        }
    }
    if yes == Some(false) && !out.is_no() {
        report.fail("answered with a circuit on a table outside the size bound");
    }
    if yes == Some(true) && oracle.fault_rate() == 0.0 && out.is_no() {
        report.fail("exact merge oracle answered NO on a table within the size bound");
    }
    if !out.accounting.within_bounds(table.arity()) {
        report.fail("merge accounting exceeds its bounds");
    }
    Ok(report)
}

/// Writes every counterexample of `reports` as DIMACS/QDIMACS into `dir`.
pub fn dump_instances(reports: &[RefutationReport], dir: &Path) -> Result<usize> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = 0;
    for (i, r) in reports.iter().enumerate() {
        for (j, e) in r.entries.iter().enumerate().filter(|(_, e)| e.counterexample) {
            let Decoded::Valid(instance) = e.language.codec().decode(&e.string) else { continue };
            let (ext, text) = match &instance {
                Instance::Cnf(f) => ("cnf", write_dimacs(f)),
                Instance::Qbf(q) => ("qdimacs", write_qdimacs(q)),
                Instance::Threshold(t) => ("cnf", format!("c threshold {}\n{}", t.threshold, write_dimacs(&t.formula))),
            };
            let name = format!("{i:04}-{j}-{}-{}-{}.{ext}", r.refuter, r.decider, e.language);
            std::fs::write(dir.join(name), text).map_err(|e| Error::Config(e.to_string()))?;
            written += 1;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{encode_natural, Formula3CNF, Layout, Lit};

    const CONFIG: &str = r#"
seed = 3

[[experiment]]
refuter = "dsr"
language = "sat"
deciders = ["const0", "exact", "clause-count-threshold"]
lengths = { from = 4, to = 9 }
backends = ["exact", "compiled"]

[[experiment]]
refuter = "prefix"
language = "qbf"
deciders = ["const1", "exact"]
lengths = [6, 8]

[[experiment]]
refuter = "pp"
deciders = ["sampling-threshold-counter", "exact"]
nvars = [4]
samples = 50

[[experiment]]
refuter = "parity"
deciders = ["const0"]
nvars = [8]
seed_budget = 64

[[experiment]]
refuter = "mcsp"
tables = ["8:96", "8:88"]
s = 2
faults = 0.3
runs = 3
"#;

    #[test]
    fn verdicts_on_trivial_cases() {
        let b = OracleBudget::default();
        let x = encode_natural(&Instance::Cnf(Formula3CNF::new(2, vec![[Lit::pos(1); 3]])), Layout::Compact);
        let mut zero = catalog_entry(Language::Sat, "const0").unwrap();
        assert!(verify_counterexample(&x, Language::Sat, &mut zero, 0, &b).unwrap().counterexample);
        let mut exact = catalog_entry(Language::Sat, "exact").unwrap();
        for y in BitString::all_of_length(10) {
            assert!(!verify_counterexample(&y, Language::Sat, &mut exact, 0, &b).unwrap().counterexample);
        }
    }

    #[test]
    fn config_runs_soundly_and_replays() {
        let config = ExperimentConfig::from_toml(CONFIG).unwrap();
        let a = run_experiment(&config, config.seed).unwrap();
        assert_eq!(a.violations(), 0, "{}", a.to_jsonl());
        assert!(a.reports.iter().all(RefutationReport::consistent));
        for r in a.reports.iter().filter(|r| r.decider == "exact") {
            assert!(!r.counterexample_found, "{r:?}");
        }
        let b = run_experiment(&config, config.seed).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml("seed = 1").is_err());
        assert!(ExperimentConfig::from_toml("[[experiment]]\nrefuter = \"nope\"").is_err());
        let c = ExperimentConfig::from_toml(
            "[[experiment]]\nrefuter = \"dsr\"\nlanguage = \"sat\"\ndeciders = \"some\"\nlengths = [3]",
        )
        .unwrap();
        assert!(matches!(run_experiment(&c, 0), Err(Error::Config(_))));
    }

    #[test]
    fn dumps_counterexamples() {
        let dir = std::env::temp_dir().join(format!("refute-dump-{}", std::process::id()));
        let r = dsr_cell(DsrLanguage::Sat, "const0", 8, Backend::Exact, 0, &OracleBudget::default()).unwrap();
        assert_eq!(dump_instances(&[r], &dir).unwrap(), 1);
        let file = std::fs::read_dir(&dir).unwrap().next().unwrap().unwrap().path();
        assert!(std::fs::read_to_string(&file).unwrap().starts_with("p cnf"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
