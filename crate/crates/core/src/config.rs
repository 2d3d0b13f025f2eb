//! Process-wide capacity limit for dense operators.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Default ceiling on the total number of qubits of any dense operator.
pub const DEFAULT_MAX_QUBITS: usize = 14;

/// Environment variable that overrides [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "QLC0_MAX_QUBITS";

// 0 = not set explicitly.
static MAX_QUBITS: AtomicUsize = AtomicUsize::new(0);

/// Current capacity limit: an explicit [`set_max_qubits`] value wins, then the
/// environment variable, then the default.
pub fn max_qubits() -> usize {
    match MAX_QUBITS.load(Ordering::Relaxed) {
        0 => std::env::var(MAX_QUBITS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v > 0)
            .unwrap_or(DEFAULT_MAX_QUBITS),
        v => v,
    }
}

/// Override the capacity limit for the whole process. Passing 0 restores the
/// environment/default lookup.
pub fn set_max_qubits(limit: usize) {
    MAX_QUBITS.store(limit, Ordering::Relaxed);
}

pub(crate) fn check_capacity(qubits: usize) -> Result<()> {
    let limit = max_qubits();
    // Hard ceiling from the packed Pauli representation.
    let limit = limit.min(31);
    if qubits > limit {
        return Err(Error::Capacity {
            requested: qubits,
            limit,
        });
    }
    Ok(())
}
