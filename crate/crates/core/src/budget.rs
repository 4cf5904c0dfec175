//! Work limits shared by the brute-force engines.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_WORK_LIMIT: u64 = 100_000_000;
pub const DEFAULT_MAX_UNIVERSE: usize = 64;

/// A per-operation work limit plus a running counter of the work actually spent.
///
/// Every engine estimates its cost up front and refuses to start when the
/// estimate is above `limit`. The counter only feeds reports.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    spent: AtomicU64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget {
            limit,
            spent: AtomicU64::new(0),
        }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn spent(&self) -> u64 {
        self.spent.load(Ordering::Relaxed)
    }

    pub fn charge(&self, steps: u64) {
        self.spent.fetch_add(steps, Ordering::Relaxed);
    }

    pub fn admit(&self, estimate: u128) -> Result<()> {
        if estimate > self.limit as u128 {
            Err(Error::BudgetExceeded {
                estimate,
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_WORK_LIMIT)
    }
}

impl Clone for Budget {
    fn clone(&self) -> Self {
        Budget {
            limit: self.limit,
            spent: AtomicU64::new(self.spent()),
        }
    }
}

/// Saturating `base^exp` in `u128`.
pub(crate) fn pow_sat(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}
