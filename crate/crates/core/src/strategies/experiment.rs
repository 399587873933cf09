//! Seeded Monte Carlo experiments over strategy profiles.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cfg::CfgPlayer;
use super::engine::{run_simulation, Outcome, Scheduler, StopReason, Strategies, Strategy};
use super::stats::{Accumulator, Summary};
use crate::corpus;
use crate::money::SATS_PER_BTC;
use crate::names::Participant;
use crate::semantics::{Move, Semantics};

pub struct Experiment {
    pub sem: Semantics,
    pub strategies: Strategies,
    pub scheduler: Scheduler,
    pub fuel: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub stop: StopReason,
    pub steps: usize,
    /// Number of stipulated contracts.
    pub rounds: usize,
    /// The participant who gained, if anyone did.
    pub winner: Option<Participant>,
    pub payoffs: BTreeMap<Participant, i64>,
}

impl RunSummary {
    pub fn of(outcome: &Outcome) -> Self {
        let payoffs: BTreeMap<Participant, i64> =
            outcome.report.payoffs.iter().map(|p| (p.participant.clone(), p.net)).collect();
        let winner = payoffs.iter().filter(|(_, v)| **v > 0).max_by_key(|(_, v)| **v).map(|(p, _)| p.clone());
        Self {
            seed: outcome.seed,
            stop: outcome.stop,
            steps: outcome.run.steps.len(),
            rounds: outcome.run.steps.iter().filter(|s| matches!(s.mv, Move::Init { .. })).count(),
            winner,
            payoffs,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub master_seed: u64,
    pub runs: Vec<RunSummary>,
    pub totals: BTreeMap<Participant, Accumulator>,
}

impl ExperimentReport {
    /// Mean, variance and 99% half-width of a participant's net payoff, in BTC.
    pub fn summary(&self, p: &Participant) -> Summary<f64> {
        self.totals.get(p).copied().unwrap_or_default().summary(SATS_PER_BTC as f64)
    }

    pub fn stops(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in &self.runs {
            *out.entry(format!("{:?}", r.stop)).or_default() += 1;
        }
        out
    }

    /// One row per run: seed, stop reason, rounds, winner, then one payoff
    /// column per participant in satoshi.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let names: Vec<&Participant> = self.totals.keys().collect();
        let mut header = vec!["seed".to_owned(), "stop".into(), "steps".into(), "rounds".into(), "winner".into()];
        header.extend(names.iter().map(|p| format!("net_{p}")));
        out.write_record(&header)?;
        for r in &self.runs {
            let mut row = vec![
                r.seed.to_string(),
                format!("{:?}", r.stop),
                r.steps.to_string(),
                r.rounds.to_string(),
                r.winner.as_ref().map_or_else(String::new, ToString::to_string),
            ];
            row.extend(names.iter().map(|p| r.payoffs.get(*p).copied().unwrap_or(0).to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Per-run seeds drawn from one master seed.
pub fn run_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Runs `n` simulations in parallel; results come back in seed order.
pub fn monte_carlo(exp: &Experiment, master_seed: u64, n: usize) -> ExperimentReport {
    let runs: Vec<RunSummary> = run_seeds(master_seed, n)
        .into_par_iter()
        .map(|seed| RunSummary::of(&run_simulation(&exp.sem, &exp.strategies, exp.scheduler, exp.fuel, seed)))
        .collect();
    let mut totals: BTreeMap<Participant, Accumulator> =
        exp.sem.participants().into_iter().map(|p| (p, Accumulator::default())).collect();
    for r in &runs {
        for (p, v) in &r.payoffs {
            totals.entry(p.clone()).or_default().push(*v);
        }
    }
    ExperimentReport { master_seed, runs, totals }
}

pub const CFG_FUEL: usize = 2000;

/// Rational A against `b`. When `b` is not rational it is marked dishonest.
pub fn cfg_experiment(b: CfgPlayer, scheduler: Scheduler) -> Experiment {
    cfg_profile(CfgPlayer::rational(), b, scheduler)
}

pub fn cfg_profile(a: CfgPlayer, b: CfgPlayer, scheduler: Scheduler) -> Experiment {
    let mut sem = Semantics::new(corpus::cfg()).without_deposit_ops();
    let pb = Participant::from("B");
    if b != CfgPlayer::rational() {
        sem = sem.with_dishonest(&pb);
    }
    let pa = Participant::from("A");
    if a != CfgPlayer::rational() && a != CfgPlayer::matcher() {
        sem = sem.with_dishonest(&pa);
    }
    let strategies: Strategies = [
        (pa, Arc::new(a) as Arc<dyn Strategy>),
        (pb, Arc::new(b) as Arc<dyn Strategy>),
    ]
    .into();
    Experiment { sem, strategies, scheduler, fuel: CFG_FUEL }
}
