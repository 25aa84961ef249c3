/// Default resident size of one `lake build` worker.
pub const FALLBACK_WORKER_GB: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// One shared environment plus a private metavariable context per branch.
    Native { shared_env_gb: f64, per_branch_kb: f64 },
    /// Every running branch is a full process holding its own environment.
    Fallback { worker_gb: f64 },
}

/// Running memory account with a high-water mark.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryLedger {
    mode: Mode,
    active: usize,
    peak_gb: f64,
}

impl MemoryLedger {
    pub fn native(shared_env_gb: f64, per_branch_kb: f64) -> Self {
        Self {
            mode: Mode::Native {
                shared_env_gb,
                per_branch_kb,
            },
            active: 0,
            peak_gb: shared_env_gb,
        }
    }

    pub fn fallback(worker_gb: f64) -> Self {
        Self {
            mode: Mode::Fallback { worker_gb },
            active: 0,
            peak_gb: 0.0,
        }
    }

    pub fn active_branches(&self) -> usize {
        self.active
    }

    pub fn current_gb(&self) -> f64 {
        match self.mode {
            Mode::Native {
                shared_env_gb,
                per_branch_kb,
            } => shared_env_gb + self.active as f64 * per_branch_kb / 1e6,
            Mode::Fallback { worker_gb } => self.active as f64 * worker_gb,
        }
    }

    pub fn peak_gb(&self) -> f64 {
        self.peak_gb
    }

    pub fn fork(&mut self, branches: usize) {
        self.active += branches;
        self.peak_gb = self.peak_gb.max(self.current_gb());
    }

    pub fn release(&mut self, branches: usize) {
        debug_assert!(branches <= self.active, "releasing more branches than forked");
        self.active = self.active.saturating_sub(branches);
    }
}

/// Closed form of the fallback high-water mark: W workers, B branches.
pub fn fallback_peak_gb(workers: usize, branches: usize, worker_gb: f64) -> f64 {
    workers.min(branches) as f64 * worker_gb
}
