//! Checks that programs written in a small C subset call their HAL functions
//! in the order a dependency specification requires.
//!
//! The pipeline: [`lang`] parses programs, [`spec`] parses dependency
//! specifications, [`cfg`] lowers programs to control-flow graphs,
//! [`analysis`] and [`explore`] decide dependencies, and [`engine`] turns
//! their results into verdicts. [`instrument`] produces the equivalent
//! assertion encoding, [`workflow`] checks revision histories.

pub mod analysis;
pub mod cfg;
pub mod cli;
pub mod config;
pub mod engine;
pub mod explore;
pub mod instrument;
pub mod lang;
pub mod spec;
pub mod workflow;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/specifications.md")]
    mod specifications {}
    #[doc = include_str!("../../../book/src/checking.md")]
    mod checking {}
    #[doc = include_str!("../../../book/src/traces.md")]
    mod traces {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/instrumentation.md")]
    mod instrumentation {}
    #[doc = include_str!("../../../book/src/history.md")]
    mod history {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
