//! Search engine: evaluation harness, runner bridge, prompt gateway,
//! competitive tree search and the two-phase orchestrator.

pub mod cmcts;
pub mod config;
pub mod gateway;
pub mod harness;
pub mod inproc;
pub mod numfmt;
pub mod orchestrator;
pub mod runlog;
pub mod runner;
pub mod session;
pub mod variants;
pub mod experiment;
pub mod report;
