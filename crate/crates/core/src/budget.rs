//! Enumeration and dense-simulation budgets.
//!
//! Exact computations refuse to start when their enumeration size exceeds
//! these limits. The process-wide limits are read once from the
//! `AMPLICLONE_BUDGET` environment variable (an integer that replaces the
//! default enumeration budget of 2^24) unless [`set_limits`] was called
//! first.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Name of the environment variable overriding [`Limits::enumeration`].
pub const BUDGET_ENV: &str = "AMPLICLONE_BUDGET";

/// Default cap on enumerated configurations (input sequences, datasets,
/// codewords, group elements).
pub const DEFAULT_ENUMERATION: u128 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Enumerated configurations, e.g. the 2^(n*t) input sequences.
    pub enumeration: u128,
    /// Column subsets C(2^n, s) enumerated in subset mode.
    pub subsets: u128,
    /// Subspaces returned by `enumerate_subspaces`.
    pub subspaces: u128,
    /// Largest ambient dimension accepted by `enumerate_subspaces`.
    pub subspace_ambient: usize,
    /// Qubits for dense state vectors.
    pub state_qubits: usize,
    /// Qubits for dense operators.
    pub operator_qubits: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            enumeration: DEFAULT_ENUMERATION,
            subsets: 10_000_000,
            subspaces: 1 << 20,
            subspace_ambient: 8,
            state_qubits: 16,
            operator_qubits: 12,
        }
    }
}

impl Limits {
    /// Defaults with the enumeration budget taken from `AMPLICLONE_BUDGET`
    /// when it parses as an integer.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(value) = std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
        {
            limits.enumeration = value;
        }
        limits
    }
}

static LIMITS: OnceLock<Limits> = OnceLock::new();

/// Current process-wide limits.
pub fn limits() -> Limits {
    *LIMITS.get_or_init(Limits::from_env)
}

/// Installs process-wide limits. Returns `false` if limits were already
/// fixed (by an earlier call or an earlier read).
pub fn set_limits(limits: Limits) -> bool {
    LIMITS.set(limits).is_ok()
}

pub(crate) fn check(what: &'static str, requested: u128, limit: u128) -> Result<()> {
    if requested > limit {
        Err(Error::BudgetExceeded {
            what,
            requested,
            limit,
        })
    } else {
        Ok(())
    }
}

/// `2^bits` saturating at `u128::MAX`.
pub(crate) fn pow2(bits: usize) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    }
}
