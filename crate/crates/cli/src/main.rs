//! Batch command-line front end: tape codecs, formula evaluation, realiser
//! synthesis and checking, extraction, the machine/host reference report,
//! glued verification, the acceptance suite, and corpus generation.
//!
//! Exit codes: 0 on success, 1 on semantic refusal (false sentence, failed
//! verification, failed criterion, ...), 2 on usage errors. Shared knobs
//! resolve as: command-line flag, then config file, then environment
//! (`OTMR_FUEL`, `OTMR_UNIVERSE_RANK`), then built-in default.

use std::fmt::Display;
use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use otmr_core::corpus::{corpus_text, generate_corpus};
use otmr_core::formula::{classify, parse_formula, Formula, Fragment};
use otmr_core::glued::{dp_extract, verify_glued, ProvabilityOracle, Tri};
use otmr_core::ordinal::OrdinalBound;
use otmr_core::otm::otm_reference_suite;
use otmr_core::realizer::{
    extract_disjunct, extract_witness, phi_universal, verify, verify_uniform, CodeUniverse,
    Realizer, DEFAULT_FUEL, DEFAULT_RANK, DEFAULT_SCRAMBLES,
};
use otmr_core::rsyntax::parse_realizer;
use otmr_core::suite::{run_all, run_criterion, SuiteConfig, CRITERION_COUNT};
use otmr_core::tape::{decode_ordset, encode_ordset, parse_ordset, parse_tape};
use otmr_core::truth::{eval_bruteforce, eval_delta0, sentence_universe, Assignment};
use otmr_core::code::decode_set;

// ---------------------------------------------------------------------------
// Argument structure
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "otmr",
    version,
    about = "Realisability toolkit for infinitary set theory at desk scale"
)]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GlobalOpts {
    /// Universe rank (sets come from the levels below this one).
    #[arg(long, global = true, value_name = "N")]
    rank: Option<usize>,

    /// Interpreter fuel budget per evaluation.
    #[arg(long, global = true, value_name = "N")]
    fuel: Option<u64>,

    /// Extra scrambled codes per set in the universe.
    #[arg(long, global = true, value_name = "N")]
    scrambles: Option<u64>,

    /// KEY=VALUE config file (keys: rank, fuel, scrambles); overrides the
    /// environment, is overridden by flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Omit timings so identical invocations print identical reports.
    #[arg(long, global = true)]
    stable: bool,
}

#[derive(Args)]
#[group(multiple = false)]
struct RealizerInput {
    /// Realiser text, as printed by `realize` (s-expression).
    #[arg(long, value_name = "TEXT")]
    realizer: Option<String>,

    /// Read the realiser from this file instead (stdin if neither is given).
    #[arg(long, value_name = "FILE")]
    realizer_file: Option<PathBuf>,
}

#[derive(Args)]
struct OracleInput {
    /// Provability database file: one formula per line, # comments.
    #[arg(long, value_name = "FILE")]
    oracle: Option<PathBuf>,

    /// Deductive-closure rounds applied to the database after loading.
    #[arg(long, default_value_t = 0, value_name = "N")]
    saturate: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode an ordinal-set literal as a characteristic-function tape.
    Encode {
        /// Ordinal-set literal, e.g. "{}", "{0}", "{0,2,w+1}", "{0..w}".
        #[arg(long, default_value = "{}")]
        set: String,
    },

    /// Decode a tape literal back to the ordinal set it codes.
    Decode {
        /// Tape literal, e.g. "01011" or "(01)^w011".
        #[arg(long)]
        tape: String,
    },

    /// Evaluate a closed formula over the configured universe; prints 1 or 0.
    Eval {
        /// Formula s-expression, e.g. "(eq {} {})".
        #[arg(long)]
        formula: String,
    },

    /// Synthesise a realiser for a true closed formula; prints it.
    Realize {
        #[arg(long)]
        formula: String,
    },

    /// Check a realiser against a formula; prints 1 or 0.
    Verify {
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        realizer: RealizerInput,
        /// Require the strong (uniform) reading as well.
        #[arg(long)]
        uniform: bool,
    },

    /// Extract the selected branch of a realised disjunction, or the witness
    /// of a realised existential. The last output line is the branch
    /// realiser, ready to pipe into `verify`.
    Extract {
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        realizer: RealizerInput,
    },

    /// Run the machine-level vs host-level reference agreement report.
    RunOtm,

    /// Three-valued verification against a provability database; prints
    /// 1, 0, or unknown, and succeeds only on 1.
    GluedVerify {
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        realizer: RealizerInput,
        #[command(flatten)]
        oracle: OracleInput,
    },

    /// Branch extraction whose result is re-verified against a provability
    /// database; succeeds only on a definite yes.
    DpExtract {
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        realizer: RealizerInput,
        #[command(flatten)]
        oracle: OracleInput,
    },

    /// Run acceptance criteria: one pass/fail line each, exit 0 iff all pass.
    Suite {
        /// Run a single criterion (1-9) instead of all nine.
        #[arg(long, value_name = "N")]
        criterion: Option<u32>,
        /// Also write a machine-readable JSON summary to this file.
        #[arg(long, value_name = "FILE")]
        summary: Option<PathBuf>,
    },

    /// Generate a deterministic labelled formula corpus (one "label formula"
    /// line each; constants drawn below the configured rank).
    Corpus {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long, default_value_t = 64)]
        count: usize,
        /// Write to this file instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------
// Failure plumbing
// ---------------------------------------------------------------------------

enum Failure {
    /// Exit 1: the command was well-formed but the system declines.
    Refusal(String),
    /// Exit 2: the invocation itself is wrong.
    Usage(String),
}

fn refuse(msg: impl Display) -> Failure {
    Failure::Refusal(msg.to_string())
}

fn usage(msg: impl Display) -> Failure {
    Failure::Usage(msg.to_string())
}

type CmdResult = Result<(), Failure>;

// ---------------------------------------------------------------------------
// Settings resolution: flag > config file > environment > default
// ---------------------------------------------------------------------------

struct Settings {
    rank: usize,
    fuel: u64,
    scrambles: u64,
    stable: bool,
}

impl Settings {
    fn universe(&self) -> CodeUniverse {
        CodeUniverse::new(self.rank, self.scrambles, self.fuel)
    }
}

fn env_parse<T: FromStr>(name: &str) -> Result<Option<T>, Failure>
where
    T::Err: Display,
{
    match std::env::var(name) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| usage(format!("{name}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(usage(format!("{name}: {e}"))),
    }
}

fn resolve_settings(opts: &GlobalOpts) -> Result<Settings, Failure> {
    let mut cfg_rank: Option<usize> = None;
    let mut cfg_fuel: Option<u64> = None;
    let mut cfg_scrambles: Option<u64> = None;
    if let Some(path) = &opts.config {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!("config line {}: expected KEY=VALUE", i + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn Display| usage(format!("config line {}: {key}: {e}", i + 1));
            match key {
                "rank" => cfg_rank = Some(value.parse().map_err(|e| bad(&e))?),
                "fuel" => cfg_fuel = Some(value.parse().map_err(|e| bad(&e))?),
                "scrambles" => cfg_scrambles = Some(value.parse().map_err(|e| bad(&e))?),
                _ => {
                    return Err(usage(format!(
                        "config line {}: unknown key {key} (expected rank, fuel, or scrambles)",
                        i + 1
                    )))
                }
            }
        }
    }
    Ok(Settings {
        rank: opts
            .rank
            .or(cfg_rank)
            .or(env_parse("OTMR_UNIVERSE_RANK")?)
            .unwrap_or(DEFAULT_RANK),
        fuel: opts
            .fuel
            .or(cfg_fuel)
            .or(env_parse("OTMR_FUEL")?)
            .unwrap_or(DEFAULT_FUEL),
        scrambles: opts.scrambles.or(cfg_scrambles).unwrap_or(DEFAULT_SCRAMBLES),
        stable: opts.stable,
    })
}

// ---------------------------------------------------------------------------
// Shared input helpers
// ---------------------------------------------------------------------------

fn formula_arg(text: &str) -> Result<Formula, Failure> {
    parse_formula(text).map_err(|e| usage(format!("formula: {e}")))
}

impl RealizerInput {
    fn read(&self) -> Result<Realizer, Failure> {
        let text = if let Some(t) = &self.realizer {
            t.clone()
        } else if let Some(p) = &self.realizer_file {
            fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read realiser {}: {e}", p.display())))?
        } else {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| usage(format!("cannot read realiser from stdin: {e}")))?;
            buf
        };
        parse_realizer(text.trim()).map_err(|e| usage(format!("realiser: {e}")))
    }
}

impl OracleInput {
    fn load(&self) -> Result<ProvabilityOracle, Failure> {
        let mut db = match &self.oracle {
            Some(p) => ProvabilityOracle::load(p)
                .map_err(|e| usage(format!("oracle {}: {e}", p.display())))?,
            None => ProvabilityOracle::new(),
        };
        db.saturate(self.saturate);
        Ok(db)
    }
}

/// Truth of a closed formula over the configured universe: the bounded
/// fragment needs no universe at all; anything else is searched over the
/// universe extended with the formula's own constants.
fn evaluate(f: &Formula, s: &Settings) -> Result<bool, Failure> {
    let empty = Assignment::new();
    match classify(f).fragment {
        Fragment::Delta0 => eval_delta0(f, &empty).map_err(refuse),
        _ => {
            let u = s.universe();
            let uni = sentence_universe(u.sets(), f);
            eval_bruteforce(f, &uni, &empty).map_err(refuse)
        }
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_encode(set: &str) -> CmdResult {
    let s = parse_ordset(set).map_err(|e| usage(format!("set: {e}")))?;
    let tape = encode_ordset(&s, &OrdinalBound::default()).map_err(refuse)?;
    println!("{}", tape.to_token_string().map_err(refuse)?);
    Ok(())
}

fn cmd_decode(tape: &str) -> CmdResult {
    let t = parse_tape(tape).map_err(|e| usage(format!("tape: {e}")))?;
    let s = decode_ordset(&t).map_err(refuse)?;
    println!("{s}");
    Ok(())
}

fn cmd_eval(formula: &str, s: &Settings) -> CmdResult {
    let f = formula_arg(formula)?;
    let truth = evaluate(&f, s)?;
    println!("{}", u8::from(truth));
    Ok(())
}

fn cmd_realize(formula: &str, s: &Settings) -> CmdResult {
    let f = formula_arg(formula)?;
    let u = s.universe();
    let r = phi_universal(&f, &Assignment::new(), &u).map_err(refuse)?;
    println!("{r}");
    Ok(())
}

fn cmd_verify(formula: &str, input: &RealizerInput, uniform: bool, s: &Settings) -> CmdResult {
    let f = formula_arg(formula)?;
    let r = input.read()?;
    let u = s.universe();
    let ok = if uniform {
        verify_uniform(&r, &f, &u)
    } else {
        verify(&r, &f, &u)
    }
    .map_err(refuse)?;
    println!("{}", u8::from(ok));
    if ok {
        Ok(())
    } else {
        Err(refuse("the realiser does not verify"))
    }
}

fn cmd_extract(formula: &str, input: &RealizerInput, s: &Settings) -> CmdResult {
    let f = formula_arg(formula)?;
    let r = input.read()?;
    let u = s.universe();
    match &f {
        Formula::Disj(_) => {
            let (idx, branch) = extract_disjunct(&r, &f, &u).map_err(refuse)?;
            println!("disjunct: {idx}");
            println!("{branch}");
        }
        Formula::Exists(..) => {
            let (code, branch) = extract_witness(&r, &f, &u).map_err(refuse)?;
            println!("witness: {code}");
            println!("decoded: {}", decode_set(&code));
            println!("{branch}");
        }
        _ => {
            return Err(usage(
                "extraction needs a disjunction or an existential formula",
            ))
        }
    }
    Ok(())
}

fn cmd_run_otm() -> CmdResult {
    let rep = otm_reference_suite();
    println!("{rep}");
    if rep.agreed() {
        Ok(())
    } else {
        Err(refuse("machine-level and host-level references disagree"))
    }
}

fn cmd_glued_verify(
    formula: &str,
    input: &RealizerInput,
    oracle: &OracleInput,
    s: &Settings,
) -> CmdResult {
    let f = formula_arg(formula)?;
    let r = input.read()?;
    let db = oracle.load()?;
    let u = s.universe();
    let verdict = verify_glued(&r, &f, &db, &u).map_err(refuse)?;
    println!("{verdict}");
    if verdict == Tri::Yes {
        Ok(())
    } else {
        Err(refuse("glued verification did not reach a definite yes"))
    }
}

fn cmd_dp_extract(
    formula: &str,
    input: &RealizerInput,
    oracle: &OracleInput,
    s: &Settings,
) -> CmdResult {
    let f = formula_arg(formula)?;
    let r = input.read()?;
    let db = oracle.load()?;
    let u = s.universe();
    let (idx, branch, verdict) = dp_extract(&r, &f, &db, &u).map_err(refuse)?;
    println!("disjunct: {idx}");
    println!("verdict: {verdict}");
    println!("{branch}");
    if verdict == Tri::Yes {
        Ok(())
    } else {
        Err(refuse(
            "the extracted branch did not re-verify to a definite yes",
        ))
    }
}

fn cmd_suite(criterion: Option<u32>, summary: Option<&PathBuf>, s: &Settings) -> CmdResult {
    let cfg = SuiteConfig {
        rank: s.rank,
        scrambles: s.scrambles,
        fuel: s.fuel,
    };
    let reports = match criterion {
        None => run_all(&cfg),
        Some(n) if (1..=CRITERION_COUNT).contains(&n) => vec![run_criterion(n, &cfg)],
        Some(n) => {
            return Err(usage(format!(
                "criterion {n} does not exist (valid: 1-{CRITERION_COUNT})"
            )))
        }
    };
    for rep in &reports {
        println!("{}", rep.line(s.stable));
    }
    if let Some(path) = summary {
        let criteria: Vec<serde_json::Value> = reports
            .iter()
            .map(|r| {
                let mut obj = serde_json::json!({
                    "number": r.number,
                    "name": r.name,
                    "passed": r.passed,
                    "detail": r.detail,
                    "budget_seconds": r.budget_seconds,
                });
                if !s.stable {
                    obj["seconds"] = serde_json::json!(r.seconds);
                }
                obj
            })
            .collect();
        let doc = serde_json::json!({
            "passed": reports.iter().all(|r| r.passed),
            "criteria": criteria,
        });
        let text = serde_json::to_string_pretty(&doc).expect("summary serialises");
        fs::write(path, text + "\n")
            .map_err(|e| refuse(format!("cannot write summary {}: {e}", path.display())))?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(refuse(format!(
            "{failed} of {} criteria failed",
            reports.len()
        )))
    }
}

fn cmd_corpus(
    seed: u64,
    depth: u32,
    count: usize,
    out: Option<&PathBuf>,
    s: &Settings,
) -> CmdResult {
    let entries = generate_corpus(seed, depth, s.rank, count);
    let text = corpus_text(&entries);
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| refuse(format!("cannot write corpus {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> CmdResult {
    let settings = resolve_settings(&cli.opts)?;
    // Universes built below this rank stay desk-sized; beyond it they blow
    // up combinatorially, so refuse early with a clear message.
    if settings.rank == 0 || settings.rank > 4 {
        return Err(usage(format!(
            "rank {} out of the supported range 1-4",
            settings.rank
        )));
    }
    match &cli.cmd {
        Cmd::Encode { set } => cmd_encode(set),
        Cmd::Decode { tape } => cmd_decode(tape),
        Cmd::Eval { formula } => cmd_eval(formula, &settings),
        Cmd::Realize { formula } => cmd_realize(formula, &settings),
        Cmd::Verify {
            formula,
            realizer,
            uniform,
        } => cmd_verify(formula, realizer, *uniform, &settings),
        Cmd::Extract { formula, realizer } => cmd_extract(formula, realizer, &settings),
        Cmd::RunOtm => cmd_run_otm(),
        Cmd::GluedVerify {
            formula,
            realizer,
            oracle,
        } => cmd_glued_verify(formula, realizer, oracle, &settings),
        Cmd::DpExtract {
            formula,
            realizer,
            oracle,
        } => cmd_dp_extract(formula, realizer, oracle, &settings),
        Cmd::Suite { criterion, summary } => cmd_suite(*criterion, summary.as_ref(), &settings),
        Cmd::Corpus {
            seed,
            depth,
            count,
            out,
        } => cmd_corpus(*seed, *depth, *count, out.as_ref(), &settings),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Refusal(msg)) => {
            eprintln!("otmr: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("otmr: {msg}");
            ExitCode::from(2)
        }
    }
}
