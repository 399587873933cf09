use std::sync::Arc;

use super::*;
use crate::corpus;
use crate::names::Participant;
use crate::semantics::{Move, Semantics};

const BTC: i64 = 100_000_000;

fn everyone_consents(sem: &Semantics) -> Strategies {
    sem.participants().into_iter().map(|p| (p, Arc::new(AlwaysConsent) as Arc<dyn Strategy>)).collect()
}

#[test]
fn zcb_runs_to_completion() {
    let sem = Semantics::new(corpus::zcb()).without_deposit_ops();
    for sched in [Scheduler::ProgressFirst, Scheduler::Random, Scheduler::Adversarial] {
        let out = run_simulation(&sem, &everyone_consents(&sem), sched, 100, 3);
        assert_eq!(out.stop, StopReason::Terminal, "{sched:?}");
        assert_eq!(out.report.net(&"A".into()), BTC);
        assert_eq!(out.report.net(&"B".into()), -BTC);
        assert_eq!(out.run.current().now, 2030);
    }
}

#[test]
fn zcb3_renegotiates_every_year() {
    let sem = Semantics::new(corpus::zcb3()).without_deposit_ops();
    let out = run_simulation(&sem, &everyone_consents(&sem), Scheduler::ProgressFirst, 1000, 1);
    assert_eq!(out.stop, StopReason::Terminal);
    let inits = out.run.steps.iter().filter(|s| matches!(s.mv, Move::Init { .. })).count();
    assert!(inits > 1);
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let exp = cfg_experiment(CfgPlayer::rational(), Scheduler::Random);
    let a = run_simulation(&exp.sem, &exp.strategies, exp.scheduler, exp.fuel, 11);
    let b = run_simulation(&exp.sem, &exp.strategies, exp.scheduler, exp.fuel, 11);
    assert_eq!(a.run.steps.len(), b.run.steps.len());
    assert!(a.run.steps.iter().zip(&b.run.steps).all(|(x, y)| x.mv == y.mv));
}

#[test]
fn rational_games_end_with_the_pot_taken() {
    for sched in [Scheduler::ProgressFirst, Scheduler::Random, Scheduler::Adversarial] {
        let exp = cfg_experiment(CfgPlayer::rational(), sched);
        for seed in 0..20 {
            let out = run_simulation(&exp.sem, &exp.strategies, exp.scheduler, exp.fuel, seed);
            assert_eq!(out.stop, StopReason::Terminal, "{sched:?} seed {seed}");
            assert_eq!(out.report.total(), 0);
            let a = out.report.net(&"A".into());
            assert!(a == 3 * BTC || a == -3 * BTC, "{sched:?} seed {seed}: {a}");
        }
    }
}

#[test]
fn scheduled_moves_respect_consent() {
    // A passive B never commits, so nothing is ever stipulated.
    let sem = Semantics::new(corpus::cfg()).without_deposit_ops().with_dishonest(&"B".into());
    let strategies: Strategies = [
        (Participant::from("A"), Arc::new(CfgPlayer::rational()) as Arc<dyn Strategy>),
        (Participant::from("B"), Arc::new(Passive) as Arc<dyn Strategy>),
    ]
    .into();
    let out = run_simulation(&sem, &strategies, Scheduler::Adversarial, 100, 0);
    assert!(out.run.steps.iter().all(|s| s.mv.actor().is_none_or(|a| a.as_str() == "A")));
    assert!(out.run.steps.iter().all(|s| !matches!(s.mv, Move::Init { .. })));
    assert_eq!(out.stop, StopReason::Quiescent);
    assert_eq!(out.report.total(), 0);
}

#[test]
fn adversaries_cannot_beat_rational_a() {
    for b in CfgPlayer::adversaries() {
        let exp = cfg_experiment(b.clone(), Scheduler::Adversarial);
        for seed in 0..10 {
            let out = run_simulation(&exp.sem, &exp.strategies, exp.scheduler, exp.fuel, seed);
            assert_eq!(out.report.total(), 0, "{} seed {seed}", b.label);
            assert_ne!(out.stop, StopReason::FuelExhausted, "{} seed {seed}", b.label);
        }
    }
}

#[test]
fn timeouts_decide_against_silent_players() {
    for b in [CfgPlayer::staller(), CfgPlayer::non_revealer(), CfgPlayer::out_of_range()] {
        let exp = cfg_experiment(b.clone(), Scheduler::Adversarial);
        for seed in 0..5 {
            let out = run_simulation(&exp.sem, &exp.strategies, exp.scheduler, exp.fuel, seed);
            assert_eq!(out.report.net(&"A".into()), 3 * BTC, "{}", b.label);
        }
    }
}

#[test]
fn refused_renegotiation_splits_the_pot() {
    let exp = cfg_experiment(CfgPlayer::renegotiation_refuser(), Scheduler::Adversarial);
    for seed in 0..10 {
        let out = run_simulation(&exp.sem, &exp.strategies, exp.scheduler, exp.fuel, seed);
        let a = out.report.net(&"A".into());
        assert!(a == BTC || a == -BTC, "seed {seed}: {a}");
        assert_eq!(out.run.steps.iter().filter(|s| matches!(s.mv, Move::Init { .. })).count(), 1);
    }
}

#[test]
fn biased_secrets_are_exploitable() {
    let exp = cfg_profile(CfgPlayer::matcher(), CfgPlayer::always_zero(), Scheduler::Random);
    // A wins every flip; a stalled renegotiation still leaves A the larger share.
    let report = monte_carlo(&exp, 5, 50);
    for r in &report.runs {
        let a = r.payoffs[&Participant::from("A")];
        assert!(a == 3 * BTC || a == BTC, "seed {}: {a}", r.seed);
    }
}

#[test]
fn monte_carlo_is_ordered_and_reproducible() {
    let exp = cfg_experiment(CfgPlayer::rational(), Scheduler::Random);
    let a = monte_carlo(&exp, 42, 40);
    let b = monte_carlo(&exp, 42, 40);
    assert_eq!(a.runs, b.runs);
    assert_eq!(a.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), run_seeds(42, 40));
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("seed,stop,steps,rounds,winner,net_A,net_B\n"));
    assert_eq!(text.lines().count(), 41);
}

