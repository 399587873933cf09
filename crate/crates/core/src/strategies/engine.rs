//! Running strategies against a scheduler.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::money::Money;
use crate::names::Participant;
use crate::semantics::{Configuration, Move, Run, Semantics};

/// What a strategy sees when asked for its consent.
pub struct Context<'a> {
    pub sem: &'a Semantics,
    pub run: &'a Run,
    pub enabled: &'a [Move],
}

impl Context<'_> {
    pub fn config(&self) -> &Configuration {
        self.run.current()
    }

    pub fn now(&self) -> u64 {
        self.config().now
    }

    pub fn is_enabled(&self, mv: &Move) -> bool {
        self.enabled.contains(mv) || self.run.is_enabled(self.sem, mv)
    }
}

/// A participant strategy: the moves it consents to, most preferred first.
/// A `Delay { delta }` entry means time may pass by up to `delta`.
pub trait Strategy: Send + Sync {
    fn name(&self) -> String;
    fn consent(&self, cx: &Context, me: &Participant, rng: &mut ChaCha8Rng) -> Vec<Move>;
}

pub type Strategies = BTreeMap<Participant, Arc<dyn Strategy>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduler {
    /// Takes each participant's first choices in turn; delays last.
    ProgressFirst,
    /// Picks uniformly among everything consented, including the delay.
    Random,
    /// Prefers dishonest participants' moves, then delays as long as the
    /// honest ones tolerate, then everything else.
    Adversarial,
}

impl std::str::FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "progress" | "progress-first" => Ok(Scheduler::ProgressFirst),
            "random" => Ok(Scheduler::Random),
            "adversarial" => Ok(Scheduler::Adversarial),
            _ => Err(format!("unknown scheduler `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Terminal,
    /// Nothing is consented and time may not pass.
    Quiescent,
    FuelExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payoff {
    pub participant: Participant,
    pub initial: Money,
    pub last: Money,
    /// Final minus initial holdings, in satoshi.
    pub net: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffReport {
    pub payoffs: Vec<Payoff>,
}

impl PayoffReport {
    pub fn of(sem: &Semantics, initial: &Configuration, last: &Configuration) -> Self {
        let before = sem.deposit_totals(initial);
        let after = sem.deposit_totals(last);
        let payoffs = before
            .iter()
            .map(|(p, i)| {
                let l = after.get(p).copied().unwrap_or(Money::ZERO);
                Payoff { participant: p.clone(), initial: *i, last: l, net: l.0 as i64 - i.0 as i64 }
            })
            .collect();
        Self { payoffs }
    }

    pub fn net(&self, p: &Participant) -> i64 {
        self.payoffs.iter().find(|x| &x.participant == p).map_or(0, |x| x.net)
    }

    pub fn total(&self) -> i64 {
        self.payoffs.iter().map(|x| x.net).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub run: Run,
    pub stop: StopReason,
    pub report: PayoffReport,
    pub seed: u64,
}

/// Consents of every participant, filtered to moves it may perform.
fn collect_consents(
    sem: &Semantics,
    run: &Run,
    enabled: &[Move],
    strategies: &Strategies,
    rngs: &mut [ChaCha8Rng],
) -> (Vec<(Participant, Vec<Move>)>, Option<u64>) {
    let cx = Context { sem, run, enabled };
    let mut lists = Vec::new();
    let mut delay: Option<u64> = None;
    let mut honest_without_delay = false;
    for (k, (p, s)) in strategies.iter().enumerate() {
        let mut seen = BTreeSet::new();
        let mut mine = Vec::new();
        let mut tolerance = None;
        for mv in s.consent(&cx, p, &mut rngs[k + 1]) {
            if let Move::Delay { delta } = mv {
                if delta > 0 {
                    tolerance = Some(tolerance.map_or(delta, |t: u64| t.min(delta)));
                }
                continue;
            }
            let allowed = mv.actor().is_none_or(|a| a == p);
            if allowed && cx.is_enabled(&mv) && seen.insert(format!("{mv:?}")) {
                mine.push(mv);
            }
        }
        if sem.is_honest(p) {
            match tolerance {
                Some(t) => delay = Some(delay.map_or(t, |d| d.min(t))),
                None => honest_without_delay = true,
            }
        }
        lists.push((p.clone(), mine));
    }
    (lists, if honest_without_delay { None } else { delay })
}

fn schedule(
    sem: &Semantics,
    kind: Scheduler,
    lists: &[(Participant, Vec<Move>)],
    delay: Option<u64>,
    rng: &mut ChaCha8Rng,
) -> Option<Move> {
    let delay_move = delay.map(|delta| Move::Delay { delta });
    match kind {
        Scheduler::ProgressFirst => {
            let depth = lists.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
            (0..depth)
                .flat_map(|r| lists.iter().filter_map(move |(_, l)| l.get(r)))
                .next()
                .cloned()
                .or(delay_move)
        }
        Scheduler::Random => {
            let mut all: Vec<&Move> = Vec::new();
            for m in lists.iter().flat_map(|(_, l)| l) {
                if !all.contains(&m) {
                    all.push(m);
                }
            }
            let n = all.len() + usize::from(delay_move.is_some());
            if n == 0 {
                return None;
            }
            let k = rng.random_range(0..n);
            all.get(k).map(|m| (*m).clone()).or(delay_move)
        }
        Scheduler::Adversarial => {
            let dishonest = lists.iter().filter(|(p, _)| !sem.is_honest(p)).flat_map(|(_, l)| l).next();
            let honest = lists.iter().filter(|(p, _)| sem.is_honest(p)).flat_map(|(_, l)| l).next();
            dishonest.cloned().or(delay_move).or(honest.cloned())
        }
    }
}

/// Runs the strategies from the initial configuration of `sem` until the
/// run is terminal, nothing is consented, or `fuel` steps were taken.
pub fn run_simulation(sem: &Semantics, strategies: &Strategies, scheduler: Scheduler, fuel: usize, seed: u64) -> Outcome {
    continue_simulation(sem, strategies, scheduler, fuel, seed, Run::from_program(sem))
}

/// Like [`run_simulation`], starting from the end of `run`; `fuel` counts
/// the steps already taken.
pub fn continue_simulation(
    sem: &Semantics,
    strategies: &Strategies,
    scheduler: Scheduler,
    fuel: usize,
    seed: u64,
    mut run: Run,
) -> Outcome {
    let mut rngs: Vec<ChaCha8Rng> = (0..=strategies.len() as u64)
        .map(|k| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        })
        .collect();
    let stop = loop {
        if sem.is_terminal(run.current(), run.supply()) {
            break StopReason::Terminal;
        }
        if run.steps.len() >= fuel {
            break StopReason::FuelExhausted;
        }
        let enabled = run.enabled_moves(sem);
        let (lists, delay) = collect_consents(sem, &run, &enabled, strategies, &mut rngs);
        let Some(mv) = schedule(sem, scheduler, &lists, delay, &mut rngs[0]) else {
            break StopReason::Quiescent;
        };
        run.push(sem, mv).expect("scheduled moves are enabled");
    };
    let report = PayoffReport::of(sem, &run.initial, run.current());
    Outcome { run, stop, report, seed }
}

/// Consents to every enabled move it may perform except deposit
/// operations; waits for the next deadline when it has nothing to do.
#[derive(Clone, Debug, Default)]
pub struct AlwaysConsent;

impl Strategy for AlwaysConsent {
    fn name(&self) -> String {
        "always-consent".into()
    }

    fn consent(&self, cx: &Context, me: &Participant, rng: &mut ChaCha8Rng) -> Vec<Move> {
        let mut out = Vec::new();
        let mut commits: BTreeMap<String, Vec<&Move>> = BTreeMap::new();
        for mv in cx.enabled {
            if mv.is_delay() || mv.is_deposit_op() || mv.actor().is_some_and(|a| a != me) {
                continue;
            }
            match mv {
                Move::AuthCommit { adv, .. } => commits.entry(adv.to_string()).or_default().push(mv),
                _ => out.push(mv.clone()),
            }
        }
        for (_, options) in commits {
            out.push(options[rng.random_range(0..options.len())].clone());
        }
        out.extend(patience(cx, !out.is_empty()));
        out
    }
}

/// Never consents to anything; lets time pass freely.
#[derive(Clone, Debug, Default)]
pub struct Passive;

impl Strategy for Passive {
    fn name(&self) -> String {
        "passive".into()
    }

    fn consent(&self, _: &Context, _: &Participant, _: &mut ChaCha8Rng) -> Vec<Move> {
        vec![Move::Delay { delta: u64::MAX / 4 }]
    }
}

/// The delay a player tolerates: up to one unit before the next deadline
/// while it still has moves to make, up to the deadline otherwise.
pub fn patience(cx: &Context, busy: bool) -> Option<Move> {
    let now = cx.now();
    let next = cx.sem.next_deadline(cx.config())?;
    let delta = if busy { next.saturating_sub(now + 1) } else { next - now };
    (delta > 0).then_some(Move::Delay { delta })
}
