use serde::Serialize;

use crate::ledger::QueryLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    Approximate,
    Infeasible,
    /// Algorithm-1 failure output: the end scan found no feasible iterate.
    Bottom,
}

/// Per-run statistics attached to every solve.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunStats {
    pub iterations: usize,
    pub max_sublp: usize,
    pub mean_sublp: f64,
    pub classical_row_reads: u64,
    pub quantum_query_charge: u64,
    /// Largest per-constraint violation count accumulated over the run.
    pub max_violation_count: u32,
    /// The `3 mu' T` frequency bound the run was required to satisfy.
    pub violation_bound: f64,
}

impl RunStats {
    pub fn absorb_ledger(&mut self, ledger: &QueryLedger) {
        self.classical_row_reads = ledger.classical_row_reads;
        self.quantum_query_charge = ledger.quantum_query_charge;
    }

    pub fn record_sublp(&mut self, size: usize) {
        let k = self.iterations as f64;
        self.mean_sublp = (self.mean_sublp * k + size as f64) / (k + 1.0);
        self.max_sublp = self.max_sublp.max(size);
        self.iterations += 1;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub status: Status,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub stats: RunStats,
}

impl SolveOutcome {
    pub fn optimal(x: Vec<f64>, objective: f64, stats: RunStats) -> Self {
        Self {
            status: Status::Optimal,
            x: Some(x),
            objective: Some(objective),
            stats,
        }
    }

    pub fn approximate(x: Vec<f64>, objective: f64, stats: RunStats) -> Self {
        Self {
            status: Status::Approximate,
            x: Some(x),
            objective: Some(objective),
            stats,
        }
    }

    pub fn infeasible(stats: RunStats) -> Self {
        Self {
            status: Status::Infeasible,
            x: None,
            objective: None,
            stats,
        }
    }

    pub fn bottom(stats: RunStats) -> Self {
        Self {
            status: Status::Bottom,
            x: None,
            objective: None,
            stats,
        }
    }
}
