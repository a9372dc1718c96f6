use serde::Serialize;

/// One charged invocation of a modeled quantum procedure.
///
/// `units` is the output of the procedure's charge formula and `row_cost` is
/// the per-query row cost of the weight oracle it queried; the amount added
/// to the quantum counter is `units * row_cost`.
#[derive(Debug, Clone, Serialize)]
pub struct ChargeRecord {
    pub procedure: &'static str,
    pub iteration: usize,
    pub units: u64,
    pub row_cost: u64,
    pub charge: u64,
}

/// Twin counters for classical row reads and modeled quantum query charges.
///
/// Every constraint access in the classical solvers goes through
/// [`crate::instance::violation_vector`] or sub-LP extraction and bumps
/// `classical_row_reads`. The quantum simulators never charge classical
/// reads; they append [`ChargeRecord`]s instead, and `quantum_query_charge`
/// is always the sum of the recorded charges. `sim_row_reads` optionally
/// tracks the true classical work done by the simulation itself.
#[derive(Debug, Clone, Default, Serialize)]
pub struct QueryLedger {
    pub classical_row_reads: u64,
    pub quantum_query_charge: u64,
    pub sim_row_reads: u64,
    pub records: Vec<ChargeRecord>,
    #[serde(skip)]
    iteration: usize,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_classical(&mut self, rows: u64) {
        self.classical_row_reads += rows;
    }

    pub fn charge_sim(&mut self, rows: u64) {
        self.sim_row_reads += rows;
    }

    /// Stamp subsequent quantum records with the current iteration index.
    pub fn set_iteration(&mut self, t: usize) {
        self.iteration = t;
    }

    pub fn charge_quantum(&mut self, procedure: &'static str, units: u64, row_cost: u64) {
        let charge = units * row_cost;
        self.quantum_query_charge += charge;
        self.records.push(ChargeRecord {
            procedure,
            iteration: self.iteration,
            units,
            row_cost,
            charge,
        });
    }

    /// Conservation check: the quantum counter equals the sum of its records.
    pub fn is_conserved(&self) -> bool {
        self.records.iter().map(|r| r.charge).sum::<u64>() == self.quantum_query_charge
    }
}
