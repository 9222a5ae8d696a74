//! The Manager's decision table as a state machine.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saes::RunResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Parse,
    Generate,
    Simulate,
    Decide,
    Report,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    Iterate,
    BudgetExhausted,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Parsed,
    Generated,
    Simulated,
    /// Outcome of the decide phase.
    Decided {
        satisfied: bool,
        budget_left: bool,
    },
    /// A fault in any working phase; routed to the reporter.
    Failed(String),
    Reported,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Parsed => f.write_str("parsed"),
            Event::Generated => f.write_str("generated"),
            Event::Simulated => f.write_str("simulated"),
            Event::Decided {
                satisfied,
                budget_left,
            } => write!(
                f,
                "decided(satisfied={satisfied}, budget_left={budget_left})"
            ),
            Event::Failed(msg) => write!(f, "failed({msg})"),
            Event::Reported => f.write_str("reported"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelinePhase {
    pub phase: Phase,
    pub generation: usize,
    pub last_status: Option<Status>,
}

impl Default for PipelinePhase {
    fn default() -> Self {
        Self {
            phase: Phase::Parse,
            generation: 0,
            last_status: None,
        }
    }
}

impl PipelinePhase {
    pub fn is_terminated(&self) -> bool {
        self.phase == Phase::Terminated
    }
}

/// Applies one event. The decide phase routes back to generation only when
/// the status is `iterate` and budget remains; otherwise it reports.
pub fn step_pipeline(state: PipelinePhase, event: &Event) -> Result<PipelinePhase> {
    use Phase::*;
    let next = |phase, generation, last_status| PipelinePhase {
        phase,
        generation,
        last_status,
    };
    let g = state.generation;
    Ok(match (state.phase, event) {
        (Parse, Event::Parsed) => next(Generate, g, state.last_status),
        (Generate, Event::Generated) => next(Simulate, g, state.last_status),
        (Simulate, Event::Simulated) => next(Decide, g, state.last_status),
        (
            Decide,
            Event::Decided {
                satisfied,
                budget_left,
            },
        ) => match (satisfied, budget_left) {
            (true, _) => next(Report, g, Some(Status::Satisfied)),
            (false, true) => next(Generate, g + 1, Some(Status::Iterate)),
            (false, false) => next(Report, g, Some(Status::BudgetExhausted)),
        },
        (Parse | Generate | Simulate | Decide, Event::Failed(_)) => {
            next(Report, g, Some(Status::Error))
        }
        (Report, Event::Reported) => next(Terminated, g, state.last_status),
        (from, event) => {
            return Err(Error::IllegalTransition {
                from: format!("{from:?}").to_lowercase(),
                event: event.to_string(),
            })
        }
    })
}

/// Replays a finished run through the state machine: one generate,
/// simulate, decide cycle per generation present in the records.
pub fn replay(run: &RunResult) -> Result<(PipelinePhase, Vec<PipelinePhase>)> {
    let mut state = PipelinePhase::default();
    let mut trail = vec![state];
    let mut push = |state: &mut PipelinePhase, event: Event| -> Result<()> {
        *state = step_pipeline(*state, &event)?;
        trail.push(*state);
        Ok(())
    };
    push(&mut state, Event::Parsed)?;
    let last = run.records.iter().map(|r| r.generation).max().unwrap_or(0);
    for g in 0..=last {
        push(&mut state, Event::Generated)?;
        push(&mut state, Event::Simulated)?;
        let satisfied = run
            .records
            .iter()
            .filter(|r| r.generation <= g)
            .any(|r| r.is_fully_valid());
        let budget_left = g < last;
        push(
            &mut state,
            Event::Decided {
                satisfied,
                budget_left,
            },
        )?;
    }
    push(&mut state, Event::Reported)?;
    Ok((state, trail))
}

/// Decide-to-generate transitions in a trail.
pub fn iterations(trail: &[PipelinePhase]) -> usize {
    trail
        .windows(2)
        .filter(|w| w[0].phase == Phase::Decide && w[1].phase == Phase::Generate)
        .count()
}
