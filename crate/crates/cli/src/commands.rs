use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context as _, Result};
use bitml_core::chain::{self, explain_incoherence};
use bitml_core::compiler::{
    commitment, compile_advertisement, graph_to_dot, graph_to_json, CompileEnv, Funding, Hash32, OutPoint,
};
use bitml_core::semantics::Trace;
use bitml_core::strategies::{
    monte_carlo, run_simulation, cfg_experiment, AlwaysConsent, CfgPlayer, Outcome, Passive, Scheduler, Strategies,
    Strategy,
};
use bitml_core::{check_wellformed, parse, Money, Name, Participant, Program, Semantics};

use crate::GraphFormat;

fn usage(msg: impl std::fmt::Display) -> Result<ExitCode> {
    eprintln!("error: {msg}");
    Ok(ExitCode::from(2))
}

fn load(file: &Path) -> Result<Program> {
    let text = fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    parse(&text).map_err(|e| anyhow!("{}:{e}", file.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn check(file: &Path) -> Result<ExitCode> {
    let program = load(file)?;
    let diagnostics = check_wellformed(&program);
    for d in &diagnostics {
        eprintln!("{}:{d}", file.display());
    }
    if diagnostics.is_empty() {
        println!("{}: ok", file.display());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

/// Signed satoshi amount shown in BTC.
pub fn btc(net: i64) -> String {
    let sign = if net < 0 { "-" } else { "+" };
    format!("{sign}{} BTC", Money(net.unsigned_abs()))
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
                .ok_or_else(|| anyhow!("expected name=value, found `{kv}`"))
        })
        .collect()
}

pub fn compile(file: &Path, deposits: &str, secrets: &str, format: GraphFormat, out: Option<&Path>) -> Result<ExitCode> {
    let program = load(file)?;
    let adv = &program.main;
    let mut env = CompileEnv::default();
    let values: BTreeMap<Name, Money> = adv.precondition.deposits().map(|(_, v, d)| (d.name().clone(), v)).collect();
    if deposits.trim() == "mock" {
        for (name, value) in &values {
            let outpoint = OutPoint::new(Hash32::digest(name.as_str().as_bytes()), 0);
            env.deposits.insert(name.clone(), Funding { outpoint, value: *value });
        }
    } else {
        let pairs = match parse_pairs(deposits) {
            Ok(p) => p,
            Err(e) => return usage(e),
        };
        for (name, op) in pairs {
            let name = Name::from(name.as_str());
            let Some(value) = values.get(&name) else {
                return usage(format!("`{name}` is not a deposit of the contract"));
            };
            let outpoint: OutPoint = match op.parse() {
                Ok(o) => o,
                Err(e) => return usage(format!("deposit `{name}`: {e}")),
            };
            env.deposits.insert(name, Funding { outpoint, value: *value });
        }
    }
    let payloads = match parse_pairs(secrets) {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    for (owner, s) in adv.precondition.secrets() {
        if let Some((_, v)) = payloads.iter().find(|(k, _)| k == s.as_str()) {
            let Ok(v) = v.parse::<u32>() else { return usage(format!("secret `{s}`: bad payload `{v}`")) };
            env.commitments.insert(s.clone(), commitment(owner, s, Some(v)));
        }
    }
    let graph = compile_advertisement(adv, &env, None, 0).map_err(|e| anyhow!("{e}"))?;
    let text = match format {
        GraphFormat::Json => graph_to_json(&graph) + "\n",
        GraphFormat::Dot => graph_to_dot(&graph),
    };
    write_or_print(out, &text)?;
    Ok(ExitCode::SUCCESS)
}

pub const STRATEGIES: &[&str] = &[
    "always-consent",
    "passive",
    "rational",
    "matcher",
    "staller",
    "non-revealer",
    "renegotiation-refuser",
    "always-0",
    "out-of-range",
];

/// A strategy by name, and whether its player counts as dishonest.
pub fn strategy(name: &str) -> Option<(Arc<dyn Strategy>, bool)> {
    match name {
        "always-consent" => Some((Arc::new(AlwaysConsent), false)),
        "passive" => Some((Arc::new(Passive), true)),
        _ => CfgPlayer::by_name(name).map(|p| {
            let dishonest = p != CfgPlayer::rational() && p != CfgPlayer::matcher();
            (Arc::new(p) as Arc<dyn Strategy>, dishonest)
        }),
    }
}

pub struct SimulateArgs {
    pub file: PathBuf,
    pub strategies: Vec<String>,
    pub scheduler: Scheduler,
    pub seed: u64,
    pub fuel: usize,
    pub trace: Option<PathBuf>,
    pub interactive: bool,
    pub deposit_ops: bool,
}

/// Semantics and strategies from `P=name` assignments.
fn profile(program: Program, specs: &[String], deposit_ops: bool) -> Result<(Semantics, Strategies), String> {
    let mut sem = Semantics::new(program);
    if !deposit_ops {
        sem = sem.without_deposit_ops();
    }
    let mut strategies: Strategies =
        sem.participants().into_iter().map(|p| (p, Arc::new(AlwaysConsent) as Arc<dyn Strategy>)).collect();
    for spec in specs {
        let (p, name) = spec.split_once('=').ok_or_else(|| format!("expected participant=strategy, found `{spec}`"))?;
        let p = Participant::from(p);
        if !strategies.contains_key(&p) {
            return Err(format!("unknown participant `{p}`"));
        }
        let (s, dishonest) =
            strategy(name).ok_or_else(|| format!("unknown strategy `{name}`; known: {}", STRATEGIES.join(", ")))?;
        if dishonest {
            sem = sem.with_dishonest(&p);
        }
        strategies.insert(p, s);
    }
    Ok((sem, strategies))
}

pub fn summary(outcome: &Outcome) -> String {
    let mut s = format!(
        "stop: {:?} after {} steps at time {}\n",
        outcome.stop,
        outcome.run.steps.len(),
        outcome.run.current().now
    );
    for p in &outcome.report.payoffs {
        s.push_str(&format!("{}: {} BTC -> {} BTC ({})\n", p.participant, p.initial, p.last, btc(p.net)));
    }
    s
}

pub fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let program = load(&args.file)?;
    let (sem, strategies) = match profile(program, &args.strategies, args.deposit_ops) {
        Ok(x) => x,
        Err(e) => return usage(e),
    };
    let outcome = if args.interactive {
        let stdin = std::io::stdin();
        crate::repl::session(&sem, &strategies, args.scheduler, args.fuel, args.seed, stdin.lock(), std::io::stdout())?
    } else {
        run_simulation(&sem, &strategies, args.scheduler, args.fuel, args.seed)
    };
    if let Some(path) = &args.trace {
        let trace = outcome.run.to_trace(&sem, Some(args.seed));
        let text = serde_json::to_string_pretty(&trace)? + "\n";
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    if !args.interactive {
        for s in &outcome.run.steps {
            println!("{:>5}  {}", s.config.now, s.mv);
        }
    }
    print!("{}", summary(&outcome));
    Ok(ExitCode::SUCCESS)
}

pub fn replay(path: &Path, check: bool, out: Option<&Path>, dot: Option<&Path>) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let trace: Trace = serde_json::from_str(&text).with_context(|| format!("{} is not a trace", path.display()))?;
    let sem = trace.semantics()?;
    let run = trace.replay(&sem)?;
    let (chain, map) = chain::replay(&sem, &run, true)?;
    for a in &chain.txs {
        let value: Money = a.tx.outputs.iter().map(|o| o.value).sum();
        println!(
            "{:>5}  {:<16} {}  {} in, {} out, {} BTC",
            a.at,
            a.tx.label,
            a.txid.short(),
            a.tx.inputs.len(),
            a.tx.outputs.len(),
            value
        );
    }
    println!("chain: {} transactions, clock {}, unspent {} BTC", chain.txs.len(), chain.clock, chain.total_unspent());
    if let Some(p) = out {
        fs::write(p, chain.to_json() + "\n").with_context(|| format!("cannot write {}", p.display()))?;
    }
    if let Some(p) = dot {
        fs::write(p, chain.to_dot()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    if check {
        match explain_incoherence(&run, &chain, &map) {
            None => println!("coherent: yes"),
            Some(why) => bail!("not coherent: {why}"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn experiment_cfg(
    runs: usize,
    seed: u64,
    adversary: &str,
    scheduler: Option<Scheduler>,
    csv: Option<&Path>,
) -> Result<ExitCode> {
    let Some(b) = CfgPlayer::by_name(adversary) else {
        let known: Vec<&str> = std::iter::once("rational").chain(CfgPlayer::adversaries().iter().map(|p| p.label)).collect();
        return usage(format!("unknown adversary `{adversary}`; known: {}", known.join(", ")));
    };
    let scheduler = scheduler.unwrap_or(if b == CfgPlayer::rational() { Scheduler::Random } else { Scheduler::Adversarial });
    let report = monte_carlo(&cfg_experiment(b.clone(), scheduler), seed, runs);
    println!("runs: {runs}  seed: {seed}  B: {}  scheduler: {scheduler:?}", b.label);
    for p in report.totals.keys() {
        let s = report.summary(p);
        println!(
            "{p}: mean {:+.4} BTC  99% CI [{:+.4}, {:+.4}]  sd {:.4}",
            s.mean,
            s.mean - s.half_width,
            s.mean + s.half_width,
            s.variance.sqrt()
        );
    }
    for (stop, n) in report.stops() {
        println!("stop {stop}: {n}");
    }
    if let Some(path) = csv {
        let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        report.write_csv(file)?;
    }
    Ok(ExitCode::SUCCESS)
}
