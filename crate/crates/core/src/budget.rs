use thiserror::Error;

/// Default cap on expanded enumeration states.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("enumeration budget of {limit} expanded states exceeded")]
pub struct BudgetExceeded {
    pub limit: u64,
}

/// Counter of expanded search states shared across one enumeration.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self { limit, used: 0 }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    pub fn spend(&mut self, n: u64) -> Result<(), BudgetExceeded> {
        if n > self.limit - self.used {
            self.used = self.limit;
            return Err(BudgetExceeded { limit: self.limit });
        }
        self.used += n;
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(DEFAULT_BUDGET)
    }
}
