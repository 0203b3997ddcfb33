//! `treeprov` command-line tool.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde_json::Value;
use treeprov::automata::{materialize, Bnta};
use treeprov::circuits::{expand_polynomial, Fuzzy, Natural, PosBool, Security, Semiring, SemiringCircuit, Tropical};
use treeprov::encoding::{decode, encode, encoding_from_json, encoding_to_json, enumerate_alphabet, KFact};
use treeprov::prob::{count_matches, query_probability_bid, query_probability_pc, query_probability_pcc, BidInstance, PcInstance, PccInstance};
use treeprov::provcirc::query_provenance_circuit;
use treeprov::prxml::{fie_to_pc, muxind_to_binary, prxml_probability, to_fie, PrXmlDoc};
use treeprov::rational::{format_rational, parse_rational};
use treeprov::relational::{normalize_decomposition, tree_decomposition, Instance, Signature};
use treeprov::ucq::{compile_bool, nx_provenance, Ucq};
use treeprov::{prob, DEFAULT_STATE_CAP};

#[derive(Parser)]
#[command(name = "treeprov", version, about = "Provenance circuits and exact probabilities over treelike instances")]
struct Cli {
    /// Cap on explored automaton states (default: $TREEPROV_STATE_CAP or 65536).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    cap: Option<u64>,
    /// Write the result here instead of standard output.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Width {
    /// Treewidth bound k.
    #[arg(short = 'k', long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    width: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct QuerySource {
    /// UCQ file, or the query text itself.
    #[arg(short, long)]
    query: Option<String>,
    /// Automaton file over the k-fact alphabet.
    #[arg(short, long)]
    automaton: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Tree decomposition of an instance.
    Decompose {
        /// Instance JSON file.
        #[arg(short, long)]
        instance: PathBuf,
        #[command(flatten)]
        width: Width,
        /// Binary full, at most one fact per bag.
        #[arg(long)]
        normalize: bool,
    },
    /// Tree encoding of an instance.
    Encode {
        /// Instance JSON file.
        #[arg(short, long)]
        instance: PathBuf,
        #[command(flatten)]
        width: Width,
    },
    /// Instance represented by a tree encoding.
    Decode {
        /// Encoding JSON file, as written by `encode`.
        #[arg(short, long)]
        encoding: PathBuf,
    },
    /// Explicit automaton of a Boolean UCQ over the k-fact alphabet.
    Compile {
        /// UCQ file, or the query text itself.
        #[arg(short, long)]
        query: String,
        #[command(flatten)]
        width: Width,
    },
    /// Boolean or N[X] provenance circuit of a query on an instance.
    Provenance {
        #[command(flatten)]
        source: QuerySource,
        /// Instance JSON file.
        #[arg(short, long)]
        instance: PathBuf,
        #[command(flatten)]
        width: Width,
        #[arg(long, value_enum, default_value_t = Mode::Bool)]
        mode: Mode,
        /// Print the expanded polynomial (nx mode).
        #[arg(long)]
        expand: bool,
        /// Print the value in this semiring (nx mode).
        #[arg(long, value_enum)]
        semiring: Option<SemiringName>,
        /// JSON object from fact ids to values; missing facts get the
        /// semiring's one (or a variable for posbool).
        #[arg(long)]
        assign: Option<PathBuf>,
    },
    /// Probability that a Boolean query holds on a probabilistic input.
    Prob {
        #[command(flatten)]
        input: ProbInput,
        #[command(flatten)]
        source: QuerySource,
        #[command(flatten)]
        width: Width,
    },
    /// Number of answers of a query with free variables.
    Count {
        /// UCQ file, or the query text itself.
        #[arg(short, long)]
        query: String,
        /// Instance JSON file.
        #[arg(short, long)]
        instance: PathBuf,
        #[command(flatten)]
        width: Width,
    },
    /// Rewrites a probabilistic XML document.
    PrxmlConvert {
        /// Document JSON file.
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ProbInput {
    /// Instance with a circuit and input probabilities.
    #[arg(long)]
    pcc: Option<PathBuf>,
    /// Instance with event formulas and event probabilities.
    #[arg(long)]
    pc: Option<PathBuf>,
    /// Block-independent-disjoint instance.
    #[arg(long)]
    bid: Option<PathBuf>,
    /// Probabilistic XML document, queried through its weak encoding.
    #[arg(long)]
    prxml: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bool,
    Nx,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemiringName {
    #[value(name = "N")]
    N,
    Bool,
    Tropical,
    Posbool,
    Security,
    Fuzzy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Binary,
    Fie,
    Pc,
    Pcc,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => match emit(cli.output.as_deref(), &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use treeprov::Error::*;
    match e.downcast_ref::<treeprov::Error>() {
        Some(NoDecomposition(_) | Invalid(_) | InvalidDecomposition(_) | InvalidLabel(_)) => 2,
        _ => 1,
    }
}

fn emit(path: Option<&Path>, out: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{out}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{out}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn state_cap(cli: &Cli) -> anyhow::Result<usize> {
    if let Some(c) = cli.cap {
        return Ok(c as usize);
    }
    match std::env::var("TREEPROV_STATE_CAP") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(c) if c >= 1 => Ok(c),
            _ => bail!("TREEPROV_STATE_CAP must be a positive integer, got {v:?}"),
        },
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

fn read_json(path: &Path) -> anyhow::Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    Ok(Instance::from_json(&read_json(path)?)?)
}

/// A query argument names a file if one exists, otherwise it is the text.
fn read_query(arg: &str) -> anyhow::Result<Ucq> {
    let text = if Path::new(arg).is_file() { fs::read_to_string(arg)? } else { arg.to_string() };
    Ok(Ucq::parse(text.trim())?)
}

fn read_automaton(path: &Path) -> anyhow::Result<Bnta<KFact>> {
    Ok(Bnta::from_json(&read_json(path)?)?)
}

fn boolean_query(arg: &str) -> anyhow::Result<Ucq> {
    let q = read_query(arg)?;
    if !q.is_boolean() {
        bail!("expected a Boolean query, got free variables {}", q.free.join(", "));
    }
    Ok(q)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn run(cli: &Cli) -> anyhow::Result<String> {
    let cap = state_cap(cli)?;
    match &cli.command {
        Command::Decompose { instance, width, normalize } => {
            let i = read_instance(instance)?;
            let mut t = tree_decomposition(&i, width.width as usize)?;
            if *normalize {
                t = normalize_decomposition(&i, &t);
            }
            Ok(pretty(&t.to_instance_json(&i)))
        }
        Command::Encode { instance, width } => {
            let i = read_instance(instance)?;
            let k = width.width as usize;
            let enc = encode(&i, &tree_decomposition(&i, k)?)?;
            Ok(pretty(&encoding_to_json(&enc.tree, k, None)))
        }
        Command::Decode { encoding } => {
            let (tree, _, _) = encoding_from_json(&read_json(encoding)?)?;
            let d = decode(&tree).ok_or_else(|| treeprov::Error::Invalid("the encoding decodes to no instance".into()))?;
            Ok(pretty(&d.instance.to_json()))
        }
        Command::Compile { query, width } => {
            let q = boolean_query(query)?;
            let k = width.width as usize;
            let mut sig = Signature::new();
            for (rel, arity) in q.relations() {
                sig.add(&rel, arity)?;
            }
            let a = materialize(&compile_bool(&q, k)?, &enumerate_alphabet(k, &sig), cap)?;
            Ok(pretty(&a.to_json()))
        }
        Command::Provenance { source, instance, width, mode, expand, semiring, assign } => {
            let i = read_instance(instance)?;
            let k = width.width as usize;
            let assign = assign.as_deref().map(read_json).transpose()?;
            match mode {
                Mode::Bool => {
                    if *expand || semiring.is_some() {
                        bail!("--expand and --semiring need --mode nx");
                    }
                    let c = match (&source.query, &source.automaton) {
                        (Some(q), _) => query_provenance_circuit(&compile_bool(&boolean_query(q)?, k)?, &i, k, cap)?.0.circuit,
                        (_, Some(a)) => query_provenance_circuit(&read_automaton(a)?, &i, k, cap)?.0.circuit,
                        _ => unreachable!("clap requires a query source"),
                    };
                    match assign {
                        None => Ok(pretty(&c.to_json())),
                        Some(v) => {
                            let values = bool_assignment(&v)?;
                            Ok(c.eval(|g| values.get(c.input_name(g)).copied().unwrap_or(true)).to_string())
                        }
                    }
                }
                Mode::Nx => {
                    let Some(q) = &source.query else { bail!("N[X] provenance needs a UCQ") };
                    let c = nx_provenance(&boolean_query(q)?, &i, k, cap)?;
                    if *expand {
                        return Ok(expand_polynomial(&c, cap)?.to_string());
                    }
                    match semiring {
                        Some(s) => specialize(&c, *s, assign.as_ref()),
                        None => Ok(pretty(&c.to_json())),
                    }
                }
            }
        }
        Command::Prob { input, source, width } => {
            let k = width.width as usize;
            let automaton = source.automaton.as_deref().map(read_automaton).transpose()?;
            let query = source.query.as_deref().map(boolean_query).transpose()?;
            // Width of the labels the automaton must read.
            let compiled = |k: usize| -> anyhow::Result<_> { Ok(query.as_ref().map(|q| compile_bool(q, k)).transpose()?) };
            let p = if let Some(path) = &input.pcc {
                let j = PccInstance::from_json(&read_json(path)?)?;
                let t = j.decomposition(k)?;
                match (&automaton, compiled(k)?) {
                    (Some(a), _) => query_probability_pcc(a, &j, &t, cap)?.0,
                    (_, Some(a)) => query_probability_pcc(&a, &j, &t, cap)?.0,
                    _ => unreachable!(),
                }
            } else if let Some(path) = &input.pc {
                let j = PcInstance::from_json(&read_json(path)?)?;
                match (&automaton, compiled(k)?) {
                    (Some(a), _) => query_probability_pc(a, &j, k, cap)?,
                    (_, Some(a)) => query_probability_pc(&a, &j, k, cap)?,
                    _ => unreachable!(),
                }
            } else if let Some(path) = &input.bid {
                let b = BidInstance::from_json(&read_json(path)?)?;
                match (&automaton, compiled(k)?) {
                    (Some(a), _) => query_probability_bid(a, &b, k, cap)?,
                    (_, Some(a)) => query_probability_bid(&a, &b, k, cap)?,
                    _ => unreachable!(),
                }
            } else {
                let d = PrXmlDoc::from_json(&read_json(input.prxml.as_ref().expect("clap requires an input"))?)?;
                match (&automaton, compiled(1)?) {
                    (Some(a), _) => prxml_probability(a, &d, cap)?,
                    (_, Some(a)) => prxml_probability(&a, &d, cap)?,
                    _ => unreachable!(),
                }
            };
            Ok(format_rational(&p))
        }
        Command::Count { query, instance, width } => {
            let q = read_query(query)?;
            let i = read_instance(instance)?;
            Ok(count_matches(&q, &i, width.width as usize, cap)?.count.to_string())
        }
        Command::PrxmlConvert { input, to } => {
            let d = PrXmlDoc::from_json(&read_json(input)?)?;
            let out = match to {
                Target::Binary => muxind_to_binary(&d)?.to_json(),
                Target::Fie => to_fie(&d)?.to_json(),
                Target::Pc => fie_to_pc(&to_fie(&d)?)?.0.to_json(),
                Target::Pcc => {
                    let (j, t) = fie_to_pc(&to_fie(&d)?)?;
                    prob::pc_to_pcc_on(&j, &t)?.0.to_json()
                }
            };
            Ok(pretty(&out))
        }
    }
}

fn bool_assignment(v: &Value) -> anyhow::Result<HashMap<String, bool>> {
    let obj = v.as_object().ok_or_else(|| anyhow!("the assignment must be a JSON object"))?;
    obj.iter()
        .map(|(k, x)| {
            let b = match x {
                Value::Bool(b) => *b,
                Value::Number(n) if n.as_u64() == Some(0) => false,
                Value::Number(n) if n.as_u64() == Some(1) => true,
                _ => bail!("value of {k} is not a Boolean"),
            };
            Ok((k.clone(), b))
        })
        .collect()
}

fn value_text(x: &Value) -> String {
    match x {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Evaluates the circuit in the chosen semiring. Inputs absent from the
/// assignment get the semiring's one, or their own variable for posbool.
fn specialize(c: &SemiringCircuit, s: SemiringName, assign: Option<&Value>) -> anyhow::Result<String> {
    let empty = serde_json::Map::new();
    let obj = match assign {
        Some(v) => v.as_object().ok_or_else(|| anyhow!("the assignment must be a JSON object"))?,
        None => &empty,
    };
    fn eval<K: Semiring>(
        c: &SemiringCircuit,
        obj: &serde_json::Map<String, Value>,
        default: impl Fn(&str) -> K,
        parse: impl Fn(&str, &Value) -> anyhow::Result<K>,
    ) -> anyhow::Result<K> {
        let mut values = HashMap::new();
        for name in c.input_names() {
            let v = match obj.get(&name) {
                Some(x) => parse(&name, x)?,
                None => default(&name),
            };
            values.insert(name, v);
        }
        Ok(c.eval(|n| values[n].clone()))
    }
    let bad = |name: &str, x: &Value| anyhow!("invalid value {} for {name}", value_text(x));
    Ok(match s {
        SemiringName::N => {
            let v = eval(c, obj, |_| Natural::one(), |n, x| value_text(x).parse::<BigUint>().map(Natural).map_err(|_| bad(n, x)))?;
            v.0.to_string()
        }
        SemiringName::Bool => {
            let v = eval(c, obj, |_| treeprov::circuits::Boolean(true), |n, x| match x {
                Value::Bool(b) => Ok(treeprov::circuits::Boolean(*b)),
                _ => Err(bad(n, x)),
            })?;
            v.0.to_string()
        }
        SemiringName::Tropical => {
            let v = eval(c, obj, |_| Tropical::one(), |n, x| match value_text(x).as_str() {
                "inf" | "infinity" => Ok(Tropical(None)),
                t => t.parse::<BigInt>().map(|b| Tropical(Some(b))).map_err(|_| bad(n, x)),
            })?;
            v.0.map_or("inf".to_string(), |b| b.to_string())
        }
        SemiringName::Posbool => {
            let v = eval(c, obj, PosBool::var, |n, x| match x {
                Value::Bool(true) => Ok(PosBool::one()),
                Value::Bool(false) => Ok(PosBool::zero()),
                Value::String(s) => Ok(PosBool::var(s)),
                _ => Err(bad(n, x)),
            })?;
            v.to_string()
        }
        SemiringName::Security => {
            let v = eval(c, obj, |_| Security::one(), |n, x| Security::parse(&value_text(x)).ok_or_else(|| bad(n, x)))?;
            v.name().to_string()
        }
        SemiringName::Fuzzy => {
            let v = eval(c, obj, |_| Fuzzy::one(), |n, x| {
                let r: BigRational = parse_rational(&value_text(x)).map_err(|_| bad(n, x))?;
                if r < BigRational::from_integer(0.into()) || r > BigRational::from_integer(1.into()) {
                    return Err(bad(n, x));
                }
                Ok(Fuzzy(r))
            })?;
            format_rational(&v.0)
        }
    })
}
