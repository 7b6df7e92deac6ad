//! Negative-sample generation for factual-consistency metrics by perturbing
//! AMR graphs of reference summaries, plus filtering, dataset assembly and
//! metric evaluation.

pub mod adapter;
pub mod amr;
pub mod candidate;
pub mod cli;
pub mod eval;
pub mod filter;
pub mod jsonl;
pub mod perturb;
pub mod pipeline;
pub mod rng;
pub mod text;
