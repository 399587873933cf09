//! Runs: sequences of moves from an initial configuration, and their JSON
//! traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{Configuration, ConfigurationRecord, Term};
use super::{Move, Semantics, SemanticsError, Transition};
use crate::names::{NameSupply, Participant};

pub const TRACE_FORMAT: &str = "bitml-trace/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub mv: Move,
    pub transition: Transition,
    /// The configuration reached by this step.
    pub config: Configuration,
}

#[derive(Clone, Debug)]
pub struct Run {
    pub initial: Configuration,
    pub steps: Vec<Step>,
    pub supply_start: u64,
    supply: NameSupply,
}

impl Run {
    pub fn new(initial: Configuration, supply_start: u64) -> Self {
        Self { initial, steps: Vec::new(), supply_start, supply: NameSupply::starting_at(supply_start) }
    }

    pub fn from_program(sem: &Semantics) -> Self {
        Self::new(sem.initial_configuration(), 0)
    }

    pub fn current(&self) -> &Configuration {
        self.steps.last().map_or(&self.initial, |s| &s.config)
    }

    pub fn supply(&self) -> &NameSupply {
        &self.supply
    }

    pub fn enabled_moves(&self, sem: &Semantics) -> Vec<Move> {
        sem.enabled_moves(self.current(), &self.supply)
    }

    pub fn is_enabled(&self, sem: &Semantics, mv: &Move) -> bool {
        sem.is_enabled(self.current(), mv, &self.supply)
    }

    pub fn push(&mut self, sem: &Semantics, mv: Move) -> Result<&Step, SemanticsError> {
        let current = self.steps.last().map_or(&self.initial, |s| &s.config);
        let (config, transition) = sem.apply(current, &mv, &mut self.supply)?;
        self.steps.push(Step { mv, transition, config });
        Ok(self.steps.last().unwrap())
    }

    /// The initial configuration followed by every reached configuration.
    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.config))
    }

    pub fn to_trace(&self, sem: &Semantics, seed: Option<u64>) -> Trace {
        Trace {
            format: TRACE_FORMAT.to_owned(),
            program: crate::parser::pretty(&sem.program),
            seed,
            honest: sem.honest.iter().cloned().collect(),
            supply_start: self.supply_start,
            initial: ConfigurationRecord::from(&self.initial),
            steps: self
                .steps
                .iter()
                .map(|s| TraceStep {
                    label: s.mv.to_string(),
                    mv: s.mv.clone(),
                    consumed: s.transition.consumed.clone(),
                    produced: s.transition.produced.clone(),
                    fresh: s.transition.fresh.clone(),
                    warnings: s.transition.warnings.clone(),
                    time: s.config.now,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub label: String,
    #[serde(rename = "move")]
    pub mv: Move,
    pub consumed: Vec<Term>,
    pub produced: Vec<Term>,
    pub fresh: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Time after the step.
    pub time: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub format: String,
    /// Source of the program, pretty-printed.
    pub program: String,
    pub seed: Option<u64>,
    pub honest: Vec<Participant>,
    pub supply_start: u64,
    pub initial: ConfigurationRecord,
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("unsupported trace format `{0}`")]
    Format(String),
    #[error("program does not parse: {0}")]
    Program(#[from] crate::parser::SyntaxError),
    #[error("initial configuration is malformed: {0}")]
    Initial(super::TermMismatch),
    #[error("step {index} ({label}) is not enabled: {source}")]
    Step { index: usize, label: String, source: SemanticsError },
    #[error("step {index} ({label}) does not match the recorded {what}")]
    Mismatch { index: usize, label: String, what: &'static str },
}

impl Trace {
    /// Rebuilds the semantics recorded in the trace.
    pub fn semantics(&self) -> Result<Semantics, ReplayError> {
        if self.format != TRACE_FORMAT {
            return Err(ReplayError::Format(self.format.clone()));
        }
        let program = crate::parser::parse(&self.program)?;
        let mut sem = Semantics::new(program);
        sem.honest = self.honest.iter().cloned().collect();
        Ok(sem)
    }

    /// Re-applies every recorded move and checks the recorded effects.
    pub fn replay(&self, sem: &Semantics) -> Result<Run, ReplayError> {
        let initial = Configuration::try_from(&self.initial).map_err(ReplayError::Initial)?;
        let mut run = Run::new(initial, self.supply_start);
        for (index, s) in self.steps.iter().enumerate() {
            let label = s.label.clone();
            let step = run
                .push(sem, s.mv.clone())
                .map_err(|source| ReplayError::Step { index, label: label.clone(), source })?;
            let t = &step.transition;
            let what = if t.consumed != s.consumed {
                Some("consumed terms")
            } else if t.produced != s.produced {
                Some("produced terms")
            } else if t.fresh != s.fresh {
                Some("fresh names")
            } else if step.config.now != s.time {
                Some("time")
            } else {
                None
            };
            if let Some(what) = what {
                return Err(ReplayError::Mismatch { index, label, what });
            }
        }
        Ok(run)
    }
}
