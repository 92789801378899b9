//! Argument handling for the `refute` and `mcsp` binaries.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use refute_core::bits::BitString;
use refute_core::counting::PpSearch;
use refute_core::decider::{catalog_entry, derive_seed, DeciderHandle};
use refute_core::dimacs::{read_dimacs, read_qdimacs, write_dimacs, write_qdimacs};
use refute_core::dsr::{refute_dsr, Backend, DsrLanguage};
use refute_core::harness::{
    dsr_cell, dump_instances, mcsp_cell, parity_cell, pp_cell, prefix_cell, run_experiment, ExperimentConfig,
    RefutationReport,
};
use refute_core::instance::{
    encode, encode_natural, Decoded, Instance, Layout, PaddingScheme, ThresholdInstance, TruthTable,
};
use refute_core::mcsp::MergeOracle;
use refute_core::oracle::{min_circuit_size, CircuitBasis, Language, OracleBudget};
use refute_core::prefix::lifted_prefix_refuters;

/// Exit status when a run finished but a soundness check failed.
pub const EXIT_VIOLATION: i32 = 1;
/// Exit status for usage or runtime errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "refute", version, about = "Construct and verify counterexamples against candidate deciders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Downward self-reducibility refuter.
    Dsr {
        #[arg(long, default_value = "sat")]
        lang: String,
        #[arg(long)]
        decider: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "exact")]
        backend: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the decider transcript as JSON lines.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Prefix-search refuter through the self-referential reduction.
    Prefix {
        #[arg(long, default_value = "sat")]
        lang: String,
        #[arg(long)]
        decider: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Threshold-counting refuter.
    Pp {
        #[arg(long)]
        decider: String,
        #[arg(long)]
        nvars: u32,
        #[arg(long, default_value_t = 6)]
        max_clauses: usize,
        /// Random formulas to try; 0 enumerates every formula.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parity refuter via random affine isolation.
    Parity {
        #[arg(long)]
        decider: String,
        #[arg(long)]
        nvars: usize,
        #[arg(long)]
        seed_budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a TOML experiment config and write JSON-lines reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Write every counterexample as DIMACS/QDIMACS into this directory.
        #[arg(long)]
        dump_instances: Option<PathBuf>,
    },
    /// Output of one lifted single-string refuter at one length.
    Emit {
        /// `<lang>/<decider>/<slot>`, e.g. `sat/const1/0`.
        #[arg(long)]
        refuter: String,
        #[arg(long)]
        len: usize,
    },
    /// Streaming search-MCSP.
    #[command(subcommand)]
    Mcsp(McspCommand),
    /// Encode a DIMACS/QDIMACS file as a compact bit string.
    Encode {
        #[arg(long, default_value = "sat")]
        lang: String,
        /// Input file; threshold instances carry a `c threshold <t>` line.
        input: PathBuf,
        /// Pad to this length.
        #[arg(long)]
        len: Option<usize>,
    },
    /// Decode a `len:hex` bit string and print it as DIMACS/QDIMACS.
    Decode {
        #[arg(long, default_value = "sat")]
        lang: String,
        string: String,
        /// Also print exact membership.
        #[arg(long)]
        check: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum McspCommand {
    /// Search a size-s circuit for a truth table with a possibly faulty merge oracle.
    Stream {
        /// Truth table as hex (`96`), `len:hex` (`8:96`) or `0b` binary.
        #[arg(long)]
        table: String,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0.0)]
        faults: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
}

/// Runs `cli` and maps the outcome to an exit status.
pub fn main_with(cli: Cli) -> i32 {
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(true) => 0,
        Ok(false) => EXIT_VIOLATION,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn print_report(out: &mut impl Write, r: &RefutationReport) -> Result<bool> {
    writeln!(out, "{}", r.to_json_line())?;
    if let Some(v) = &r.violation {
        eprintln!("violation: {v}");
    }
    Ok(r.sound)
}

/// Executes one command, writing results to `out`. `Ok(false)` signals a soundness violation.
pub fn execute(cli: Cli, out: &mut impl Write) -> Result<bool> {
    let budget = OracleBudget::default();
    match cli.command {
        Command::Dsr { lang, decider, n, backend, seed, transcript } => {
            let lang = DsrLanguage::from_id(&lang)?;
            let backend = Backend::from_id(&backend)?;
            if let Some(path) = transcript {
                let mut a = catalog_entry(lang.language(), &decider)?.with_seed(seed);
                refute_dsr(lang, &mut a, n, backend)?;
                a.transcript()
                    .write_jsonl(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?)?;
            }
            print_report(out, &dsr_cell(lang, &decider, n, backend, seed, &budget)?)
        }
        Command::Prefix { lang, decider, n, seed } => {
            let language = Language::from_id(&lang)?;
            if !matches!(language, Language::Sat | Language::Qbf) {
                bail!("prefix refuter supports sat and qbf, got {lang}");
            }
            print_report(out, &prefix_cell(language, &decider, n, &PaddingScheme::default(), seed, &budget)?)
        }
        Command::Pp { decider, nvars, max_clauses, samples, seed } => {
            let search = if samples == 0 {
                PpSearch::Exhaustive { max_clauses }
            } else {
                PpSearch::Guided { max_clauses, samples, seed }
            };
            print_report(out, &pp_cell(&decider, nvars, &search, seed, &budget)?)
        }
        Command::Parity { decider, nvars, seed_budget, seed } => {
            print_report(out, &parity_cell(&decider, nvars, seed_budget, seed, &budget)?)
        }
        Command::Run { config, out: path, seed, dump_instances: dump } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let config = ExperimentConfig::from_toml(&text)?;
            let run = run_experiment(&config, seed.unwrap_or(config.seed))?;
            match path {
                Some(p) => {
                    run.write_jsonl(fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?)?
                }
                None => run.write_jsonl(&mut *out)?,
            }
            if let Some(dir) = dump {
                let k = dump_instances(&run.reports, &dir)?;
                eprintln!("wrote {k} instances to {}", dir.display());
            }
            let bad = run.violations();
            eprintln!("{} cells, {} violations", run.reports.len(), bad);
            Ok(bad == 0)
        }
        Command::Emit { refuter, len } => {
            let parts: Vec<&str> = refuter.split('/').collect();
            let [lang, decider, slot] = parts[..] else {
                bail!("refuter id must look like <lang>/<decider>/<slot>, got {refuter}");
            };
            let a: DeciderHandle = catalog_entry(Language::from_id(lang)?, decider)?;
            let slot: usize = slot.parse().context("slot must be a number")?;
            let refuters = lifted_prefix_refuters(a, PaddingScheme::default(), budget);
            let r = refuters.get(slot).with_context(|| format!("slot must be below {}", refuters.len()))?;
            match r.emit(len)? {
                Some(x) => writeln!(out, "{x}")?,
                None => writeln!(out, "none")?,
            }
            Ok(true)
        }
        Command::Mcsp(McspCommand::Stream { table, s, faults, seed, runs }) => {
            if !(0.0..=1.0).contains(&faults) {
                bail!("--faults must be a probability");
            }
            let table = TruthTable::parse(&table)?;
            let yes = min_circuit_size(&table, &CircuitBasis::full(), &budget).map(|m| m <= s).ok();
            let mut oracle = MergeOracle::faulty(faults, seed);
            let mut sound = true;
            for i in 0..runs {
                let r = mcsp_cell(&table, s, &mut oracle, derive_seed(seed, i), yes)?;
                sound &= print_report(out, &r)?;
            }
            Ok(sound)
        }
        Command::Encode { lang, input, len } => {
            let language = Language::from_id(&lang)?;
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let instance = parse_instance(language, &text)?;
            let x = match len {
                Some(n) => encode(&instance, Layout::Compact, n)?,
                None => encode_natural(&instance, Layout::Compact),
            };
            writeln!(out, "{x}")?;
            Ok(true)
        }
        Command::Decode { lang, string, check } => {
            let language = Language::from_id(&lang)?;
            let x: BitString = string.parse()?;
            match language.codec().decode(&x) {
                Decoded::Invalid => writeln!(out, "c invalid encoding")?,
                Decoded::Valid(instance) => {
                    write!(out, "{}", render_instance(&instance))?;
                    if check {
                        writeln!(out, "c member {}", language.holds(&instance, &budget)?)?;
                    }
                }
            }
            Ok(true)
        }
    }
}

fn parse_instance(language: Language, text: &str) -> Result<Instance> {
    Ok(match language {
        Language::Sat | Language::Parity => Instance::Cnf(read_dimacs(text)?),
        Language::Qbf => Instance::Qbf(read_qdimacs(text)?),
        Language::Threshold => {
            let t = text
                .lines()
                .find_map(|l| l.trim().strip_prefix("c threshold "))
                .context("threshold input needs a `c threshold <t>` line")?
                .trim()
                .parse()
                .context("threshold must be a non-negative integer")?;
            Instance::Threshold(ThresholdInstance::clamped(read_dimacs(text)?, t))
        }
    })
}

fn render_instance(instance: &Instance) -> String {
    match instance {
        Instance::Cnf(f) => write_dimacs(f),
        Instance::Qbf(q) => write_qdimacs(q),
        Instance::Threshold(t) => format!("c threshold {}\n{}", t.threshold, write_dimacs(&t.formula)),
    }
}
