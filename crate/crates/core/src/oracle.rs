//! Low-violation oracle constructions: Bernoulli constraint sampling, the
//! exact-solver oracle, the bounded-output-set oracle, and the geometric
//! grid discretization for mixed packing/covering solutions.

use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{violation_vector, LpInstance, ViolationVector};
use crate::ledger::QueryLedger;
use crate::mwu::{weighted_violation, OracleOutput};
use crate::outcome::Status;
use crate::simplex::{simplex_solve, SubLp};

/// Include each index independently with probability `min(q_i, 1)`.
pub fn bernoulli_subset<R: Rng>(q: &[f64], rng: &mut R) -> Vec<usize> {
    let mut s = Vec::new();
    for (i, &qi) in q.iter().enumerate() {
        if qi >= 1.0 || (qi > 0.0 && rng.gen::<f64>() < qi) {
            s.push(i);
        }
    }
    s
}

/// Retry cap for the sample-solve-verify loop. The expected round count is 2;
/// exhausting the cap signals a generator or solver bug, not bad luck.
pub fn retry_budget(n: usize) -> usize {
    (64.0 * (n.max(2) as f64).ln()).ceil() as usize
}

/// Exact-solver low-violation oracle: sample row `i` with probability
/// `min(2d/mu * p_i, 1)`, solve the sub-LP exactly, verify, retry on failure.
///
/// An infeasible sub-LP certifies infeasibility of the full LP (the sub-LP is
/// a relaxation) and is surfaced as an error by the callers' convention.
pub fn exact_lvo<R: Rng>(
    inst: &LpInstance,
    p: &[f64],
    mu: f64,
    eps: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<ExactLvoOutput> {
    let d = inst.d() as f64;
    let rate = 2.0 * d / mu;
    let budget = retry_budget(inst.n());
    let mut q = vec![0.0; inst.n()];
    for round in 0..budget {
        for (qi, pi) in q.iter_mut().zip(p) {
            *qi = (rate * pi).min(1.0);
        }
        let rows = bernoulli_subset(&q, rng);
        ledger.charge_classical(rows.len() as u64);
        let sampled = rows.len();
        let sub = SubLp::new(inst, rows);
        let solved = simplex_solve(&sub)?;
        if solved.status == Status::Infeasible {
            return Ok(ExactLvoOutput::Infeasible);
        }
        let x = solved.x.expect("optimal solve carries a point");
        let v = violation_vector(inst, &x, eps, ledger)?;
        if weighted_violation(p, &v) <= mu {
            return Ok(ExactLvoOutput::Point {
                out: OracleOutput { x, v },
                sampled,
                rounds: round + 1,
            });
        }
    }
    Err(Error::RetryBudgetExceeded { rounds: budget })
}

pub enum ExactLvoOutput {
    Point {
        out: OracleOutput,
        /// Sampled row count of the final (accepted) round.
        sampled: usize,
        rounds: usize,
    },
    /// A sub-LP was infeasible, certifying the full instance infeasible.
    Infeasible,
}

/// Bounded-output-set low-violation oracle: for a deterministic solver whose
/// output set has at most `exp(ln_outputs)` elements, sampling row `i` with
/// probability `min(ln(N n)/mu * p_i, 1)` makes the first round succeed with
/// high probability.
///
/// `solver` maps a sampled index set to a candidate point (or None when the
/// sub-problem is infeasible); `violations` evaluates the candidate against
/// all rows at the caller's slack and charges the ledger.
pub fn approx_lvo<R, S, V>(
    n: usize,
    p: &[f64],
    mu: f64,
    ln_outputs: f64,
    mut solver: S,
    mut violations: V,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<ApproxLvoOutput>
where
    R: Rng,
    S: FnMut(&[usize]) -> Result<Option<Vec<f64>>>,
    V: FnMut(&[f64], &mut QueryLedger) -> Result<ViolationVector>,
{
    let rate = (ln_outputs + (n.max(2) as f64).ln()) / mu;
    let budget = retry_budget(n);
    let mut q = vec![0.0; n];
    for round in 0..budget {
        for (qi, pi) in q.iter_mut().zip(p) {
            *qi = (rate * pi).min(1.0);
        }
        let rows = bernoulli_subset(&q, rng);
        ledger.charge_classical(rows.len() as u64);
        let sampled = rows.len();
        let x = match solver(&rows)? {
            Some(x) => x,
            None => return Ok(ApproxLvoOutput::Infeasible),
        };
        let v = violations(&x, ledger)?;
        if weighted_violation(p, &v) <= mu {
            return Ok(ApproxLvoOutput::Point {
                out: OracleOutput { x, v },
                sampled,
                rounds: round + 1,
            });
        }
    }
    Err(Error::RetryBudgetExceeded { rounds: budget })
}

pub enum ApproxLvoOutput {
    Point {
        out: OracleOutput,
        sampled: usize,
        rounds: usize,
    },
    Infeasible,
}

/// Geometric grid for mixed packing/covering solutions: `0`, `eps/r_p`, then
/// `min(eps/r_p * (1+eps)^(k+1), 1)`.
#[derive(Debug, Clone)]
pub struct MpcGrid {
    pub eps: f64,
    pub r_p: usize,
}

impl MpcGrid {
    pub fn new(eps: f64, r_p: usize) -> Self {
        Self { eps, r_p: r_p.max(1) }
    }

    fn base(&self) -> f64 {
        self.eps / self.r_p as f64
    }

    /// Per-coordinate grid cardinality bound `ceil(2 + 4 ln(r_p/eps)/eps)`.
    pub fn points_per_coordinate(&self) -> usize {
        let ratio = (self.r_p as f64 / self.eps).max(1.0);
        (2.0 + 4.0 * ratio.ln() / self.eps).ceil().max(2.0) as usize
    }

    /// Natural log of the output-set cardinality over d coordinates.
    pub fn ln_outputs(&self, d: usize) -> f64 {
        d as f64 * (self.points_per_coordinate() as f64).ln()
    }

    fn round_coordinate(&self, x: f64) -> f64 {
        let b = self.base();
        if x <= 0.0 {
            return 0.0;
        }
        if x <= b {
            return b.min(1.0);
        }
        // smallest k >= 0 with x <= min(b (1+eps)^(k+1), 1)
        let mut level = b;
        loop {
            let next = (level * (1.0 + self.eps)).min(1.0);
            if x <= next || next >= 1.0 {
                return next;
            }
            level = next;
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        if x.abs() <= tol {
            return true;
        }
        let mut level = self.base().min(1.0);
        loop {
            if (x - level).abs() <= tol {
                return true;
            }
            if level >= 1.0 {
                return false;
            }
            level = (level * (1.0 + self.eps)).min(1.0);
        }
    }
}

/// Round `x` in `[0,1]^d` up to the grid: `x <= x~ <= 1` componentwise and
/// `x~_i <= (1+eps) x_i + eps/r_p`, so covering feasibility is preserved and
/// packing rows inflate by at most `(1+eps) P x + eps`.
pub fn discretize_mpc(x: &[f64], eps: f64, r_p: usize) -> Vec<f64> {
    let grid = MpcGrid::new(eps, r_p);
    x.iter().map(|&v| grid.round_coordinate(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bernoulli_empty_and_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(bernoulli_subset(&[0.0, 0.0, 0.0], &mut rng).is_empty());
        assert_eq!(bernoulli_subset(&[2.0, 5.0], &mut rng), vec![0, 1]);
    }

    #[test]
    fn bernoulli_mean_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let q = vec![0.3; n];
        let size = bernoulli_subset(&q, &mut rng).len() as f64;
        let mean = 3000.0;
        let sigma = (n as f64 * 0.3 * 0.7).sqrt();
        assert!((size - mean).abs() <= 3.0 * sigma, "size {size}");
    }

    #[test]
    fn discretize_examples() {
        // Zero stays zero.
        assert_eq!(discretize_mpc(&[0.0], 0.5, 2), vec![0.0]);
        // eps=1, r_p=1 collapses the grid to {0, 1}.
        assert_eq!(discretize_mpc(&[0.3], 1.0, 1), vec![1.0]);
        assert_eq!(discretize_mpc(&[1.0], 1.0, 1), vec![1.0]);
        // eps=0.5, r_p=2: 0.25 < 0.3 <= 0.375.
        let out = discretize_mpc(&[0.3], 0.5, 2);
        assert!((out[0] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn discretize_idempotent_and_dominating() {
        let grid = MpcGrid::new(0.5, 2);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let once = grid.round_coordinate(x);
            let twice = grid.round_coordinate(once);
            assert_eq!(once, twice, "idempotence at {x}");
            assert!(once >= x && once <= 1.0);
            assert!(once <= (1.0 + 0.5) * x + 0.5 / 2.0 + 1e-12);
            assert!(grid.contains(once, 1e-12));
        }
    }
}
