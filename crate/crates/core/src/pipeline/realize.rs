use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use crate::adapter::{call_parallel, AdapterRequest, Task};
use crate::amr::{linearize, parse_penman};
use crate::candidate::{NegativeCandidate, Realization};

use super::generate::with_jobs;
use super::PipelineError;

/// How perturbed graphs become text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Realizer {
    /// Deterministic linearization of the graph.
    Passthrough,
    /// AMR-to-text adapter command.
    Exec(String),
}

impl FromStr for Realizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "passthrough" {
            Ok(Realizer::Passthrough)
        } else if let Some(cmd) = s.strip_prefix("exec:").filter(|c| !c.trim().is_empty()) {
            Ok(Realizer::Exec(cmd.to_string()))
        } else {
            Err(format!("invalid realizer `{s}` (expected passthrough or exec:CMD)"))
        }
    }
}

impl fmt::Display for Realizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Realizer::Passthrough => f.write_str("passthrough"),
            Realizer::Exec(c) => write!(f, "exec:{c}"),
        }
    }
}

/// Fills `perturbed_text` for every candidate.
pub fn realize(
    candidates: &mut [NegativeCandidate],
    realizer: &Realizer,
    jobs: usize,
    timeout: Duration,
) -> Result<(), PipelineError> {
    if let Some(c) = candidates.iter().find(|c| c.perturbed_penman.trim().is_empty()) {
        return Err(PipelineError::Realize {
            candidate_id: c.candidate_id.clone(),
            message: "candidate has no perturbed graph".into(),
        });
    }
    match realizer {
        Realizer::Passthrough => with_jobs(jobs, || {
            candidates.par_iter_mut().try_for_each(|c| {
                let graph = parse_penman(&c.perturbed_penman).map_err(|e| PipelineError::Realize {
                    candidate_id: c.candidate_id.clone(),
                    message: e.to_string(),
                })?;
                c.perturbed_text = Some(linearize(&graph));
                c.realization = Some(Realization::Linearized);
                Ok(())
            })
        })?,
        Realizer::Exec(command) => {
            let requests: Vec<AdapterRequest> = candidates
                .iter()
                .map(|c| AdapterRequest::bridge(c.candidate_id.clone(), Task::Amr2text, &c.perturbed_penman))
                .collect();
            let replies = call_parallel(command, timeout, &requests, jobs)?;
            for (c, reply) in candidates.iter_mut().zip(replies) {
                c.perturbed_text = reply.into_output();
                c.realization = Some(Realization::Adapter);
            }
            Ok(())
        }
    }
}
