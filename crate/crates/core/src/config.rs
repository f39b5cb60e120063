//! Exploration bounds and per-check settings.

use std::time::Duration;

/// Limits for bounded path exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Maximum iterations of any loop per entry into the loop.
    pub loop_bound: u32,
    /// Maximum nodes executed along a single path.
    pub max_steps: u64,
    /// Maximum number of explored paths.
    pub max_paths: u64,
    pub timeout: Duration,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { loop_bound: 3, max_steps: 10_000, max_paths: 1_000_000, timeout: Duration::from_secs(60) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckConfig {
    pub bounds: Bounds,
    pub inline_depth: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { bounds: Bounds::default(), inline_depth: 8 }
    }
}

impl CheckConfig {
    pub fn cfg_config(&self) -> crate::cfg::CfgConfig {
        crate::cfg::CfgConfig { inline_depth: self.inline_depth }
    }
}
