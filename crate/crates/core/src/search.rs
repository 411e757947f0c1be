//! Pieces shared by both searcher families.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Why a simulated search stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetFound,
    BudgetReached,
    /// Every grid cell was visited (Bayesian searcher) or the attention map
    /// has no positive value left (greedy searcher).
    Exhausted,
}

/// Per-trial seed: the run seed mixed with a stable hash of the trial id, so
/// results do not depend on which worker runs which trial.
pub fn trial_seed(seed: u64, trial_id: &str) -> u64 {
    let digest = Sha256::digest(trial_id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(head)
}
