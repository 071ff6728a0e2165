//! Orchestration around `forcing-lab`: instance corpora, the acceptance
//! suites, simulator driving, export and counterexample shrinking.

pub mod corpus;
pub mod export;
pub mod manifest;
pub mod report;
pub mod shrink;
pub mod suites;
