//! Static analyses over the main view.

mod constants;
mod must;

pub use constants::{prove_assertions, AssertionStatus};
pub use must::{check_must, must_called_before, MustResult, WorklistOrder};
