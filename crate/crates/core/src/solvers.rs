//! End-to-end classical algorithms: exact Clarkson-style solve, low-precision
//! solve via one-sided width, and the width-reduced mixed packing/covering
//! solver.

use rand::Rng;

use crate::error::{Error, Result};
use crate::instance::{
    compute_widths, covering_violations, dot, LpInstance, Mat, MpcInstance, RetainedBlock, TAU,
};
use crate::ledger::QueryLedger;
use crate::mwu::{probabilities, violation_frequency_bound, WeightState};
use crate::oracle::{approx_lvo, discretize_mpc, exact_lvo, ApproxLvoOutput, ExactLvoOutput, MpcGrid};
use crate::outcome::{RunStats, SolveOutcome, Status};
use crate::simplex::mpc_inner_solve;

fn ln(n: usize) -> f64 {
    (n.max(2) as f64).ln()
}

/// Check the potential bound that every framework run must satisfy: no
/// constraint violated more than `3 mu' T` times for the oracle target `mu'`.
fn check_frequency_bound(ws: &WeightState, mu_prime: f64, stats: &mut RunStats) -> Result<()> {
    let bound = violation_frequency_bound(mu_prime, ws.t);
    stats.max_violation_count = ws.max_count();
    stats.violation_bound = bound;
    if f64::from(ws.max_count()) > bound + 1e-9 {
        return Err(Error::Internal(format!(
            "violation frequency {} exceeds 3*mu'*T = {bound}",
            ws.max_count()
        )));
    }
    Ok(())
}

/// Exact solve by adaptive sampling: mu = 1/d, slack 0, T = ceil(24 d ln n).
/// Returns the first fully feasible iterate, which is optimal because every
/// iterate maximizes the objective over a relaxation.
pub fn clarkson_solve<R: Rng>(
    inst: &LpInstance,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<SolveOutcome> {
    let d = inst.d();
    let mu_prime = 1.0 / (3.0 * d as f64);
    let t_max = (24.0 * d as f64 * ln(inst.n())).ceil() as usize;

    let mut stats = RunStats::default();
    let mut ws = WeightState::new(inst.n());
    for t in 0..t_max {
        let p = probabilities(&ws);
        match exact_lvo(inst, &p, mu_prime, 0.0, rng, ledger)? {
            ExactLvoOutput::Infeasible => {
                stats.iterations = t + 1;
                stats.absorb_ledger(ledger);
                return Ok(SolveOutcome::infeasible(stats));
            }
            ExactLvoOutput::Point { out, sampled, .. } => {
                stats.record_sublp(sampled);
                ws.update(&out.v);
                if out.v.is_zero() {
                    check_frequency_bound(&ws, mu_prime, &mut stats)?;
                    stats.absorb_ledger(ledger);
                    let objective = inst.objective(&out.x);
                    return Ok(SolveOutcome::optimal(out.x, objective, stats));
                }
            }
        }
    }
    check_frequency_bound(&ws, mu_prime, &mut stats)?;
    Err(Error::NoFeasibleIterate)
}

/// Low-precision solve: averages `T = ceil(24 (V_max/eps) ln n)` iterates of
/// the exact oracle run at slack eps/2 with target eps/(6 V_max). The average
/// satisfies `A x <= b + 2 eps` and its objective is at least OPT.
pub fn low_precision_solve<R: Rng>(
    inst: &LpInstance,
    eps: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<SolveOutcome> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInstance(format!("eps must be > 0, got {eps}")));
    }
    let widths = compute_widths(inst);
    let v_max = widths.v_max;
    let mut stats = RunStats::default();

    // Degenerate regime: every box point violates by at most v_max <= eps, so
    // any single relaxation optimum already meets the 2eps contract.
    if v_max <= eps {
        let p = vec![1.0 / inst.n() as f64; inst.n()];
        match exact_lvo(inst, &p, 1.0, eps / 2.0, rng, ledger)? {
            ExactLvoOutput::Infeasible => {
                stats.absorb_ledger(ledger);
                return Ok(SolveOutcome::infeasible(stats));
            }
            ExactLvoOutput::Point { out, sampled, .. } => {
                stats.record_sublp(sampled);
                stats.absorb_ledger(ledger);
                stats.violation_bound = 1.0;
                let objective = inst.objective(&out.x);
                return Ok(SolveOutcome::approximate(out.x, objective, stats));
            }
        }
    }

    let mu_prime = eps / (6.0 * v_max);
    let t_max = (24.0 * (v_max / eps) * ln(inst.n())).ceil() as usize;
    let slack = eps / 2.0;

    let d = inst.d();
    let mut sum = vec![0.0; d];
    let mut ws = WeightState::new(inst.n());
    for _ in 0..t_max {
        let p = probabilities(&ws);
        match exact_lvo(inst, &p, mu_prime, slack, rng, ledger)? {
            ExactLvoOutput::Infeasible => {
                stats.absorb_ledger(ledger);
                return Ok(SolveOutcome::infeasible(stats));
            }
            ExactLvoOutput::Point { out, sampled, .. } => {
                stats.record_sublp(sampled);
                ws.update(&out.v);
                for (s, xi) in sum.iter_mut().zip(&out.x) {
                    *s += xi;
                }
            }
        }
    }
    check_frequency_bound(&ws, mu_prime, &mut stats)?;
    stats.absorb_ledger(ledger);
    let x_bar: Vec<f64> = sum.iter().map(|s| s / t_max as f64).collect();
    let objective = inst.objective(&x_bar);
    Ok(SolveOutcome::approximate(x_bar, objective, stats))
}

/// Mixed packing/covering solve. Packing rows are retained in every
/// sub-problem; covering rows are sampled at rate `ln(N n_c) / (eps/3)` where
/// N is the discretization grid cardinality. The averaged iterate satisfies
/// `C x >= (1-eps) 1` and is scaled by `1/(1-eps)` before returning.
pub fn mpc_solve<R: Rng>(
    mpc: &MpcInstance,
    eps: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<SolveOutcome> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInstance(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    let d = mpc.d();
    let n_c = mpc.n_c();
    let grid = MpcGrid::new(eps, mpc.r_p);
    let ln_outputs = grid.ln_outputs(d);
    let mu_prime = eps / 3.0;
    let t_max = ((24.0 / eps) * ln(n_c)).ceil() as usize;

    let mut stats = RunStats::default();
    let mut ws = WeightState::new(n_c);
    let mut sum = vec![0.0; d];
    for _ in 0..t_max {
        let p = probabilities(&ws);
        let r_p = mpc.r_p;
        let packing = &mpc.packing;
        let covering = &mpc.covering;
        let solver = |rows: &[usize]| -> Result<Option<Vec<f64>>> {
            let mut sub = Mat::zeros(rows.len(), d);
            for (k, &i) in rows.iter().enumerate() {
                sub.data[k * d..(k + 1) * d].copy_from_slice(covering.row(i));
            }
            let solved = mpc_inner_solve(packing, &sub, eps)?;
            Ok(match solved.status {
                Status::Infeasible => None,
                _ => Some(discretize_mpc(&solved.x.unwrap(), eps, r_p)),
            })
        };
        let violations = |x: &[f64], ledger: &mut QueryLedger| covering_violations(mpc, x, eps, ledger);
        match approx_lvo(n_c, &p, mu_prime, ln_outputs, solver, violations, rng, ledger)? {
            ApproxLvoOutput::Infeasible => {
                stats.absorb_ledger(ledger);
                return Ok(SolveOutcome::infeasible(stats));
            }
            ApproxLvoOutput::Point { out, sampled, .. } => {
                stats.record_sublp(sampled + mpc.n_p());
                ws.update(&out.v);
                for (s, xi) in sum.iter_mut().zip(&out.x) {
                    *s += xi;
                }
            }
        }
    }
    check_frequency_bound(&ws, mu_prime, &mut stats)?;
    stats.absorb_ledger(ledger);
    let x = scale_mpc_average(&sum, t_max, eps);
    Ok(SolveOutcome::approximate(x, 0.0, stats))
}

/// Average the iterates, scale the covering slack away and clamp back into
/// the unit box.
pub(crate) fn scale_mpc_average(sum: &[f64], t: usize, eps: f64) -> Vec<f64> {
    sum.iter()
        .map(|s| (s / t as f64 / (1.0 - eps).max(TAU)).min(1.0))
        .collect()
}

/// Convenience wrapper used by tests and the CLI: an LP view of a mixed
/// instance's covering side (`-C x <= -1`) with the packing rows retained.
pub fn mpc_as_lp(mpc: &MpcInstance) -> LpInstance {
    let d = mpc.d();
    let n_c = mpc.n_c();
    let mut a = Mat::zeros(n_c, d);
    for i in 0..n_c {
        for j in 0..d {
            a.set(i, j, -mpc.covering.get(i, j));
        }
    }
    let retained = RetainedBlock {
        a: mpc.packing.clone(),
        b: vec![1.0; mpc.n_p()],
    };
    LpInstance::new(
        a,
        vec![-1.0; n_c],
        vec![0.0; d],
        crate::instance::BoxDomain::unit(d),
        Some(retained),
    )
    .expect("mpc lp view is well formed")
}

/// Componentwise feasibility report used by tests: max packing excess over 1
/// and min covering value.
pub fn mpc_quality(mpc: &MpcInstance, x: &[f64]) -> (f64, f64) {
    let max_packing = (0..mpc.n_p())
        .map(|i| dot(mpc.packing.row(i), x))
        .fold(f64::NEG_INFINITY, f64::max);
    let min_covering = (0..mpc.n_c())
        .map(|i| dot(mpc.covering.row(i), x))
        .fold(f64::INFINITY, f64::min);
    (max_packing, min_covering)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, Generated, InstanceKind};
    use crate::instance::{violation_vector, BoxDomain};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clarkson_one_dimensional_tight_row() {
        // 99 copies of x <= 5 and one x <= 3; optimum 3.
        let mut rows = vec![vec![1.0]; 100];
        rows[37] = vec![1.0];
        let mut b = vec![5.0; 100];
        b[37] = 3.0;
        let inst = LpInstance::new(
            Mat::from_rows(rows).unwrap(),
            b,
            vec![1.0],
            BoxDomain::new(vec![0.0], vec![10.0]).unwrap(),
            None,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ledger = QueryLedger::new();
        let out = clarkson_solve(&inst, &mut rng, &mut ledger).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x.unwrap()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn clarkson_certifies_padded_infeasible_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let gen = generate_instance(InstanceKind::Infeasible, 50, 2, 3).unwrap();
        let Generated::Lp(inst) = gen else { panic!() };
        let mut ledger = QueryLedger::new();
        let out = clarkson_solve(&inst, &mut rng, &mut ledger).unwrap();
        assert_eq!(out.status, Status::Infeasible);
    }

    #[test]
    fn low_precision_covering_contract() {
        // n copies of -x <= -1 (x >= 1), c = 0, box [0,1]: x_bar >= 0.8 at eps = 0.1.
        let n = 40;
        let inst = LpInstance::new(
            Mat::from_rows(vec![vec![-1.0]; n]).unwrap(),
            vec![-1.0; n],
            vec![0.0],
            BoxDomain::unit(1),
            None,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ledger = QueryLedger::new();
        let out = low_precision_solve(&inst, 0.1, &mut rng, &mut ledger).unwrap();
        assert_eq!(out.status, Status::Approximate);
        assert!(out.x.unwrap()[0] >= 0.8 - 1e-9);
    }

    #[test]
    fn low_precision_degenerate_when_eps_covers_width() {
        let inst = LpInstance::new(
            Mat::from_rows(vec![vec![0.2]]).unwrap(),
            vec![0.1],
            vec![1.0],
            BoxDomain::unit(1),
            None,
        )
        .unwrap();
        // v_max = 0.1 <= eps = 0.5: single-iteration success.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ledger = QueryLedger::new();
        let out = low_precision_solve(&inst, 0.5, &mut rng, &mut ledger).unwrap();
        assert_eq!(out.stats.iterations, 1);
        let x = out.x.unwrap();
        let mut check = QueryLedger::new();
        let v = violation_vector(&inst, &x, 0.5, &mut check).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn mpc_planted_instance_is_approximately_solved() {
        let gen = generate_instance(InstanceKind::Mixed, 400, 3, 9).unwrap();
        let Generated::Mpc(mpc) = gen else { panic!() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ledger = QueryLedger::new();
        let eps = 0.25;
        let out = mpc_solve(&mpc, eps, &mut rng, &mut ledger).unwrap();
        assert_eq!(out.status, Status::Approximate);
        let x = out.x.unwrap();
        let (max_p, min_c) = mpc_quality(&mpc, &x);
        assert!(min_c >= 1.0 - 1e-9, "covering shortfall: {min_c}");
        assert!(max_p <= 1.0 + 4.0 * eps + 1e-9, "packing excess: {max_p}");
    }

    #[test]
    fn mpc_infeasible_instance_is_certified() {
        let p = Mat::from_rows(vec![vec![1.0]]).unwrap();
        let c = Mat::from_rows(vec![vec![0.4]; 30]).unwrap();
        let mpc = MpcInstance::new(p, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ledger = QueryLedger::new();
        let out = mpc_solve(&mpc, 0.2, &mut rng, &mut ledger).unwrap();
        assert_eq!(out.status, Status::Infeasible);
    }

    #[test]
    fn solvers_are_reproducible() {
        let gen = generate_instance(InstanceKind::FeasibleNondegenerate, 60, 2, 21).unwrap();
        let Generated::Lp(inst) = gen else { panic!() };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(33);
            let mut ledger = QueryLedger::new();
            clarkson_solve(&inst, &mut rng, &mut ledger).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.x.unwrap(), b.x.unwrap());
        assert_eq!(a.stats.iterations, b.stats.iterations);
    }
}
