//! The line-oriented stepper behind `simulate --interactive`.

use std::io::{BufRead, Write};

use anyhow::Result;
use bitml_core::semantics::{Move, Run, Semantics};
use bitml_core::strategies::{continue_simulation, Outcome, PayoffReport, Scheduler, StopReason, Strategies};

const HELP: &str = "commands: move N | delay D | auto | quit";

/// Reads commands from `input` until `quit`, end of input, a terminal
/// configuration, or `auto`, which hands the rest of the run to the
/// strategies.
pub fn session<R: BufRead, W: Write>(
    sem: &Semantics,
    strategies: &Strategies,
    scheduler: Scheduler,
    fuel: usize,
    seed: u64,
    input: R,
    mut out: W,
) -> Result<Outcome> {
    let mut run = Run::from_program(sem);
    let mut lines = input.lines();
    loop {
        let c = run.current();
        if sem.is_terminal(c, run.supply()) {
            writeln!(out, "terminal at time {}", c.now)?;
            return Ok(finish(sem, run, StopReason::Terminal, seed));
        }
        let enabled = run.enabled_moves(sem);
        writeln!(out, "time {}, {} steps", c.now, run.steps.len())?;
        for (i, m) in enabled.iter().enumerate() {
            writeln!(out, "  [{i}] {m}")?;
        }
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = lines.next() else {
            writeln!(out)?;
            return Ok(finish(sem, run, StopReason::Quiescent, seed));
        };
        let line = line?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] => {}
            ["quit"] | ["q"] => return Ok(finish(sem, run, StopReason::Quiescent, seed)),
            ["auto"] => {
                let outcome = continue_simulation(sem, strategies, scheduler, fuel, seed, run);
                for s in &outcome.run.steps {
                    writeln!(out, "{:>5}  {}", s.config.now, s.mv)?;
                }
                return Ok(outcome);
            }
            ["move", n] => match n.parse::<usize>().ok().and_then(|i| enabled.get(i)) {
                Some(mv) => {
                    run.push(sem, mv.clone())?;
                    writeln!(out, "ok: {mv}")?;
                }
                None => writeln!(out, "error: no enabled move {n}")?,
            },
            ["delay", d] => match d.parse::<u64>() {
                Ok(delta) if delta > 0 => {
                    run.push(sem, Move::Delay { delta })?;
                    writeln!(out, "ok: delay {delta}")?;
                }
                _ => writeln!(out, "error: delay needs a positive integer")?,
            },
            _ => writeln!(out, "error: {HELP}")?,
        }
    }
}

fn finish(sem: &Semantics, run: Run, stop: StopReason, seed: u64) -> Outcome {
    let report = PayoffReport::of(sem, &run.initial, run.current());
    Outcome { run, stop, report, seed }
}
