//! Multiplicative-weights core: weight bookkeeping over violation counts,
//! the softmax potential check, and the framework driver that turns a
//! low-violation oracle into a low-violation solution set.

use crate::error::{Error, Result};
use crate::instance::ViolationVector;

/// Per-constraint violation counts; the weight of constraint `i` is
/// `2^counts[i]`, materialized lazily through [`probabilities`].
#[derive(Debug, Clone)]
pub struct WeightState {
    pub violation_counts: Vec<u32>,
    pub t: usize,
}

impl WeightState {
    pub fn new(n: usize) -> Self {
        Self {
            violation_counts: vec![0; n],
            t: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.violation_counts.len()
    }

    pub fn update(&mut self, v: &ViolationVector) {
        debug_assert_eq!(v.len(), self.n());
        for (c, bit) in self.violation_counts.iter_mut().zip(&v.bits) {
            *c += u32::from(*bit == 1);
        }
        self.t += 1;
    }

    pub fn max_count(&self) -> u32 {
        self.violation_counts.iter().copied().max().unwrap_or(0)
    }
}

/// Sampling distribution `p_i = 2^counts_i / sum_k 2^counts_k`, computed with
/// shifted exponents so large counts cannot overflow.
pub fn probabilities(ws: &WeightState) -> Vec<f64> {
    let max = ws.max_count();
    let mut p: Vec<f64> = ws
        .violation_counts
        .iter()
        .map(|&c| (c as f64 - max as f64).exp2())
        .collect();
    let total: f64 = p.iter().sum();
    for v in &mut p {
        *v /= total;
    }
    p
}

/// `<p, v>`: total probability mass on violated constraints.
pub fn weighted_violation(p: &[f64], v: &ViolationVector) -> f64 {
    debug_assert_eq!(p.len(), v.len());
    p.iter()
        .zip(&v.bits)
        .map(|(pi, bit)| if *bit == 1 { *pi } else { 0.0 })
        .sum()
}

fn smax(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn smax_grad(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut g: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = g.iter().sum();
    for v in &mut g {
        *v /= total;
    }
    g
}

/// Potential growth check: `smax(x + delta) <= smax(x) + 2 <grad smax(x), delta>`
/// for `x >= 0` and `delta in [0,1]^n` (natural exponent), up to 1e-9.
pub fn smax_check(x: &[f64], delta: &[f64]) -> bool {
    debug_assert_eq!(x.len(), delta.len());
    let shifted: Vec<f64> = x.iter().zip(delta).map(|(a, b)| a + b).collect();
    let grad = smax_grad(x);
    let linear: f64 = grad.iter().zip(delta).map(|(g, d)| g * d).sum();
    smax(&shifted) <= smax(x) + 2.0 * linear + 1e-9
}

/// The solution set produced by a framework run.
#[derive(Debug, Clone)]
pub struct SolutionSet {
    pub xs: Vec<Vec<f64>>,
    pub eps: f64,
    /// Violation-frequency target: each constraint is violated by at most
    /// `mu * |xs|` of the solutions.
    pub mu: f64,
}

/// What a low-violation oracle hands back each iteration: the point and its
/// violation vector at the run's slack (already verified by the oracle).
pub struct OracleOutput {
    pub x: Vec<f64>,
    pub v: ViolationVector,
}

/// Per-iteration control flow for callers that can stop early.
pub enum Step {
    Continue,
    Stop,
}

/// Drive a `(eps, mu/3)`-low-violation oracle for `t_max` iterations,
/// doubling the weight of each violated constraint after every step.
///
/// The oracle verifies its output internally; the framework re-checks
/// `<p, v> <= mu/3` and treats a breach as a bug, not a retry.
pub fn framework_run<O>(
    n: usize,
    mut oracle: O,
    eps: f64,
    mu: f64,
    t_max: usize,
) -> Result<SolutionSet>
where
    O: FnMut(&[f64]) -> Result<OracleOutput>,
{
    let mut xs = Vec::with_capacity(t_max);
    framework_run_with(n, &mut oracle, mu, t_max, |out| {
        xs.push(out.x.clone());
        Ok(Step::Continue)
    })?;
    let set = SolutionSet { xs, eps, mu };
    Ok(set)
}

/// Framework loop with a per-iteration callback; used directly by solvers
/// that stop on the first fully feasible iterate. Returns the final weight
/// state so callers can assert the violation-frequency bound.
pub fn framework_run_with<O, F>(
    n: usize,
    oracle: &mut O,
    mu: f64,
    t_max: usize,
    mut on_step: F,
) -> Result<WeightState>
where
    O: FnMut(&[f64]) -> Result<OracleOutput>,
    F: FnMut(OracleOutput) -> Result<Step>,
{
    let target = mu / 3.0;
    let mut ws = WeightState::new(n);
    for _ in 0..t_max {
        let p = probabilities(&ws);
        let out = oracle(&p)?;
        let wv = weighted_violation(&p, &out.v);
        if wv > target + 1e-12 {
            return Err(Error::OracleContractBroken {
                violation: wv,
                target,
            });
        }
        ws.update(&out.v);
        match on_step(out)? {
            Step::Continue => {}
            Step::Stop => break,
        }
    }
    Ok(ws)
}

/// The potential bound behind every framework run: if each accepted step had
/// `<p_t, v_t> <= mu'` and `T >= ln n / mu'`, then no constraint is violated
/// more than `3 mu' T` times.
pub fn violation_frequency_bound(mu_prime: f64, t: usize) -> f64 {
    3.0 * mu_prime * t as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vv(bits: Vec<u8>) -> ViolationVector {
        ViolationVector { bits, slack: 0.0 }
    }

    #[test]
    fn probabilities_uniform_at_start() {
        let ws = WeightState::new(4);
        let p = probabilities(&ws);
        assert_eq!(p, vec![0.25; 4]);
    }

    #[test]
    fn probabilities_from_counts() {
        let ws = WeightState {
            violation_counts: vec![1, 0, 1, 0],
            t: 2,
        };
        let p = probabilities(&ws);
        let expect = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }

        let ws = WeightState {
            violation_counts: vec![2, 0],
            t: 2,
        };
        let p = probabilities(&ws);
        assert!((p[0] - 0.8).abs() < 1e-12 && (p[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one_with_large_counts() {
        let ws = WeightState {
            violation_counts: vec![4000, 3990, 0, 17],
            t: 4000,
        };
        let p = probabilities(&ws);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn weighted_violation_examples() {
        assert!((weighted_violation(&[0.25; 4], &vv(vec![1, 0, 0, 0])) - 0.25).abs() < 1e-15);
        assert_eq!(weighted_violation(&[0.25; 4], &vv(vec![0, 0, 0, 0])), 0.0);
        assert!((weighted_violation(&[0.8, 0.2], &vv(vec![0, 1])) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn smax_check_examples() {
        assert!(smax_check(&[0.0, 0.0], &[0.0, 0.0]));
        // smax([1,0]) = ln(e+1) ~ 1.3133 <= ln 2 + 2*0.5 ~ 1.6931
        assert!(smax_check(&[0.0, 0.0], &[1.0, 0.0]));
    }

    #[test]
    fn framework_feasible_oracle_keeps_weights_flat() {
        let n = 8;
        let mut oracle = |_p: &[f64]| {
            Ok(OracleOutput {
                x: vec![0.0],
                v: vv(vec![0; 8]),
            })
        };
        let ws = framework_run_with(n, &mut oracle, 0.3, 20, |_| Ok(Step::Continue)).unwrap();
        assert_eq!(ws.max_count(), 0);
        assert_eq!(ws.t, 20);
        assert_eq!(probabilities(&ws), vec![1.0 / 8.0; 8]);
    }

    #[test]
    fn framework_alternating_oracle_splits_counts() {
        // n=2, oracle alternates violating constraint 1 then 2; with
        // mu/3 >= 1/2 every step passes and counts stay balanced.
        let mut flip = false;
        let mut oracle = |_p: &[f64]| {
            flip = !flip;
            let bits = if flip { vec![1, 0] } else { vec![0, 1] };
            Ok(OracleOutput {
                x: vec![0.0],
                v: vv(bits),
            })
        };
        let ws = framework_run_with(2, &mut oracle, 1.5, 4, |_| Ok(Step::Continue)).unwrap();
        assert_eq!(ws.violation_counts, vec![2, 2]);
    }

    #[test]
    fn framework_flags_contract_breach() {
        let mut oracle = |_p: &[f64]| {
            Ok(OracleOutput {
                x: vec![0.0],
                v: vv(vec![1, 1]),
            })
        };
        let err = framework_run_with(2, &mut oracle, 0.3, 4, |_| Ok(Step::Continue)).unwrap_err();
        assert!(matches!(err, Error::OracleContractBroken { .. }));
    }
}
