//! Exact solution of small dense LPs over constraint rows plus box bounds.
//!
//! The solver runs the simplex method in row-basis form: a vertex is the
//! intersection of `d` tight constraint rows, and a pivot exchanges one row
//! of that basis. Entering and leaving rows are chosen by lowest row index
//! (Bland's rule), which makes the solver a deterministic map from the row
//! set to its output and rules out cycling. Box bounds are always part of
//! the row set, so no sub-LP is ever unbounded.

use crate::error::{Error, Result};
use crate::instance::{dot, LpInstance, Mat};
use crate::outcome::{RunStats, SolveOutcome, Status};

const DUAL_TOL: f64 = 1e-9;
const DEN_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// A sampled sub-problem: row indices into the instance plus the always-on
/// retained block and box bounds.
#[derive(Debug, Clone)]
pub struct SubLp<'a> {
    pub instance: &'a LpInstance,
    /// Sorted, deduplicated indices into the instance's constraint rows.
    pub rows: Vec<usize>,
}

impl<'a> SubLp<'a> {
    pub fn new(instance: &'a LpInstance, mut rows: Vec<usize>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        Self { instance, rows }
    }

    /// Sampled plus retained rows (box bounds excluded).
    pub fn size(&self) -> usize {
        self.rows.len() + self.instance.retained.as_ref().map_or(0, |r| r.a.rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

/// Solve `G_B z = h_B` for a square basis. Returns None when the basis
/// matrix is numerically singular.
fn lu_solve(a: &[f64], rhs: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut b = rhs.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    for col in 0..k {
        let mut best = col;
        let mut best_abs = m[perm[col] * k + col].abs();
        for r in col + 1..k {
            let v = m[perm[r] * k + col].abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs < 1e-12 {
            return None;
        }
        perm.swap(col, best);
        let prow = perm[col];
        let pivot = m[prow * k + col];
        for r in col + 1..k {
            let row = perm[r];
            let factor = m[row * k + col] / pivot;
            if factor != 0.0 {
                for cc in col..k {
                    m[row * k + cc] -= factor * m[prow * k + cc];
                }
                b[row] -= factor * b[prow];
            }
        }
    }
    let mut z = vec![0.0; k];
    for col in (0..k).rev() {
        let row = perm[col];
        let mut acc = b[row];
        for cc in col + 1..k {
            acc -= m[row * k + cc] * z[cc];
        }
        z[col] = acc / m[row * k + col];
    }
    Some(z)
}

/// Transposed solve `G_B^T y = c`.
fn lu_solve_t(basis_rows: &[&[f64]], c: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut at = vec![0.0; k * k];
    for (j, row) in basis_rows.iter().enumerate() {
        for i in 0..k {
            at[i * k + j] = row[i];
        }
    }
    lu_solve(&at, c, k)
}

struct RowSystem {
    g: Mat,
    h: Vec<f64>,
}

impl RowSystem {
    fn m(&self) -> usize {
        self.g.rows
    }

    fn k(&self) -> usize {
        self.g.cols
    }

    fn slack(&self, i: usize, z: &[f64]) -> f64 {
        self.h[i] - dot(self.g.row(i), z)
    }

    fn basis_matrix(&self, basis: &[usize]) -> Vec<f64> {
        let k = self.k();
        let mut m = vec![0.0; k * k];
        for (r, &i) in basis.iter().enumerate() {
            m[r * k..(r + 1) * k].copy_from_slice(self.g.row(i));
        }
        m
    }

    fn vertex(&self, basis: &[usize]) -> Option<Vec<f64>> {
        let rhs: Vec<f64> = basis.iter().map(|&i| self.h[i]).collect();
        lu_solve(&self.basis_matrix(basis), &rhs, self.k())
    }
}

/// Maximize `<c, z>` from a feasible vertex given by `basis`. Bland's rule on
/// row indices for both the leaving and entering choice.
fn active_set_max(
    sys: &RowSystem,
    c: &[f64],
    mut basis: Vec<usize>,
    pivot_cap: usize,
    context: &str,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let k = sys.k();
    let mut z = sys
        .vertex(&basis)
        .ok_or_else(|| Error::Internal(format!("singular start basis in {context}")))?;
    let mut in_basis = vec![false; sys.m()];
    for &i in &basis {
        in_basis[i] = true;
    }

    for _pivot in 0..pivot_cap {
        let basis_rows: Vec<&[f64]> = basis.iter().map(|&i| sys.g.row(i)).collect();
        let y = lu_solve_t(&basis_rows, c, k)
            .ok_or_else(|| Error::Internal(format!("singular basis in {context}")))?;

        // Leaving row: lowest row index with a negative multiplier.
        let mut leave_pos: Option<usize> = None;
        let mut leave_row = usize::MAX;
        for (pos, &row) in basis.iter().enumerate() {
            if y[pos] < -DUAL_TOL && row < leave_row {
                leave_row = row;
                leave_pos = Some(pos);
            }
        }
        let leave_pos = match leave_pos {
            None => return Ok((z, basis)),
            Some(p) => p,
        };

        // Edge direction: keep every other basis row tight, relax the leaving row.
        let mut e = vec![0.0; k];
        e[leave_pos] = -1.0;
        let gb = sys.basis_matrix(&basis);
        let dir = lu_solve(&gb, &e, k)
            .ok_or_else(|| Error::Internal(format!("singular basis in {context}")))?;

        // Ratio test over non-basis rows; lowest index among the minima.
        let mut best_alpha = f64::INFINITY;
        let mut enter: Option<usize> = None;
        for i in 0..sys.m() {
            if in_basis[i] {
                continue;
            }
            let den = dot(sys.g.row(i), &dir);
            if den > DEN_TOL {
                let alpha = sys.slack(i, &z).max(0.0) / den;
                // Ascending scan keeps the lowest index among exact ties.
                if alpha < best_alpha {
                    best_alpha = alpha;
                    enter = Some(i);
                }
            }
        }
        let enter = enter.ok_or_else(|| {
            Error::Internal(format!("unbounded direction in {context}; box rows missing"))
        })?;

        in_basis[basis[leave_pos]] = false;
        in_basis[enter] = true;
        basis[leave_pos] = enter;
        z = sys
            .vertex(&basis)
            .ok_or_else(|| Error::Internal(format!("singular pivot basis in {context}")))?;
    }
    Err(Error::PivotCap {
        cap: pivot_cap,
        context: context.to_string(),
    })
}

/// Two-phase solve of `max <c, x>` subject to `rows x <= h` and box bounds.
///
/// The box is appended as explicit rows, so the system always has a bounded
/// feasible region (possibly empty). Fully deterministic.
pub fn solve_rows(
    rows: &Mat,
    h: &[f64],
    c: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<RawOutcome> {
    let d = rows.cols;
    let m = rows.rows;
    debug_assert_eq!(h.len(), m);
    debug_assert_eq!(c.len(), d);

    // Full row system: instance rows, then x_j <= u_j, then -x_j <= -l_j.
    let mut g = Mat::zeros(m + 2 * d, d);
    let mut hh = vec![0.0; m + 2 * d];
    for i in 0..m {
        g.data[i * d..(i + 1) * d].copy_from_slice(rows.row(i));
        hh[i] = h[i];
    }
    for j in 0..d {
        g.set(m + j, j, 1.0);
        hh[m + j] = upper[j];
        g.set(m + d + j, j, -1.0);
        hh[m + d + j] = -lower[j];
    }
    let sys = RowSystem { g, h: hh };
    let lower_basis: Vec<usize> = (0..d).map(|j| m + d + j).collect();
    let pivot_cap = 200 + 50 * (sys.m() + d);

    // Phase 1 from the lower box corner.
    let corner = lower.to_vec();
    let worst = (0..m)
        .map(|i| -sys.slack(i, &corner))
        .fold(f64::NEG_INFINITY, f64::max);
    let start_basis = if m == 0 || worst <= 0.0 {
        lower_basis
    } else {
        match phase_one(&sys, m, d, &corner, worst, pivot_cap)? {
            Some(basis) => basis,
            None => return Ok(RawOutcome::Infeasible),
        }
    };

    let (z, _basis) = active_set_max(&sys, c, start_basis, pivot_cap, "phase 2")?;
    let objective = dot(c, &z);
    Ok(RawOutcome::Optimal { x: z, objective })
}

/// Minimize the worst violation `t` of the non-box rows over the box. Returns
/// a feasible vertex basis of the original system, or None when infeasible.
fn phase_one(
    sys: &RowSystem,
    m: usize,
    d: usize,
    corner: &[f64],
    worst: f64,
    pivot_cap: usize,
) -> Result<Option<Vec<usize>>> {
    let k = d + 1;
    // Lifted rows: (g_i, -1) <= h_i for instance rows, box rows unchanged,
    // then the floor row -t <= 0.
    let mut g = Mat::zeros(sys.m() + 1, k);
    let mut h = vec![0.0; sys.m() + 1];
    for i in 0..sys.m() {
        g.data[i * k..i * k + d].copy_from_slice(sys.g.row(i));
        if i < m {
            g.set(i, d, -1.0);
        }
        h[i] = sys.h[i];
    }
    let floor_row = sys.m();
    g.set(floor_row, d, -1.0);
    let lifted = RowSystem { g, h };

    // Start vertex: box lower corner lifted to t = worst violation; tight on
    // the d lower-box rows plus the first row attaining the violation.
    let mut start = corner.to_vec();
    start.push(worst);
    let argmax = (0..m)
        .find(|&i| -sys.slack(i, corner) >= worst)
        .expect("worst violation row exists");
    let mut basis: Vec<usize> = (0..d).map(|j| m + d + j).collect();
    basis.push(argmax);

    let mut obj = vec![0.0; k];
    obj[d] = -1.0;
    let (zt, basis) = active_set_max(&lifted, &obj, basis, pivot_cap, "phase 1")?;
    let t_star = zt[d];
    if t_star > FEAS_TOL {
        return Ok(None);
    }

    // Recover a d-row basis of the original system from the lifted one.
    let original: Vec<usize> = basis.iter().copied().filter(|&i| i != floor_row).collect();
    if original.len() == d {
        if sys.vertex(&original).is_some() {
            return Ok(Some(original));
        }
    } else {
        // Floor row not in the terminal basis: d+1 tight original rows; drop
        // one (lowest index first) that keeps the basis nonsingular.
        for drop in 0..original.len() {
            let cand: Vec<usize> = original
                .iter()
                .enumerate()
                .filter_map(|(p, &i)| (p != drop).then_some(i))
                .collect();
            if sys.vertex(&cand).is_some() {
                return Ok(Some(cand));
            }
        }
    }
    Err(Error::Internal(
        "phase 1 ended without an invertible original basis".into(),
    ))
}

fn effective_rows(sub: &SubLp) -> (Mat, Vec<f64>) {
    let inst = sub.instance;
    let d = inst.d();
    let m_r = inst.retained.as_ref().map_or(0, |r| r.a.rows);
    let mut g = Mat::zeros(sub.rows.len() + m_r, d);
    let mut h = vec![0.0; sub.rows.len() + m_r];
    for (k, &i) in sub.rows.iter().enumerate() {
        g.data[k * d..(k + 1) * d].copy_from_slice(inst.a.row(i));
        h[k] = inst.b[i];
    }
    if let Some(r) = &inst.retained {
        for i in 0..r.a.rows {
            let k = sub.rows.len() + i;
            g.data[k * d..(k + 1) * d].copy_from_slice(r.a.row(i));
            h[k] = r.b[i];
        }
    }
    (g, h)
}

/// Exact solve of a sub-LP: sampled rows, retained block and box bounds.
pub fn simplex_solve(sub: &SubLp) -> Result<SolveOutcome> {
    let inst = sub.instance;
    let (g, h) = effective_rows(sub);
    match solve_rows(&g, &h, &inst.c, &inst.domain.lower, &inst.domain.upper)? {
        RawOutcome::Optimal { x, objective } => {
            Ok(SolveOutcome::optimal(x, objective, RunStats::default()))
        }
        RawOutcome::Infeasible => Ok(SolveOutcome::infeasible(RunStats::default())),
    }
}

fn binomial(m: usize, d: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..d {
        acc = acc * (m - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub const ENUMERATION_BUDGET: f64 = 1e6;

/// Independent test oracle: enumerate every d-subset of the effective rows
/// (including box rows), solve the d x d system, keep the best feasible
/// vertex. Exponential; guarded by `ENUMERATION_BUDGET`.
pub fn vertex_enumeration_solve(sub: &SubLp) -> Result<SolveOutcome> {
    let inst = sub.instance;
    let d = inst.d();
    let (g_rows, h_rows) = effective_rows(sub);
    let m = g_rows.rows;

    let mut g = Mat::zeros(m + 2 * d, d);
    let mut h = vec![0.0; m + 2 * d];
    for i in 0..m {
        g.data[i * d..(i + 1) * d].copy_from_slice(g_rows.row(i));
        h[i] = h_rows[i];
    }
    for j in 0..d {
        g.set(m + j, j, 1.0);
        h[m + j] = inst.domain.upper[j];
        g.set(m + d + j, j, -1.0);
        h[m + d + j] = -inst.domain.lower[j];
    }
    let m_total = g.rows;
    let combos = binomial(m_total, d);
    if combos > ENUMERATION_BUDGET {
        return Err(Error::CombinatorialBudget {
            m: m_total,
            d,
            combinations: combos,
            limit: ENUMERATION_BUDGET,
        });
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut subset: Vec<usize> = (0..d).collect();
    let mut mat = vec![0.0; d * d];
    let mut rhs = vec![0.0; d];
    let mut done = false;
    while !done {
        for (r, &i) in subset.iter().enumerate() {
            mat[r * d..(r + 1) * d].copy_from_slice(g.row(i));
            rhs[r] = h[i];
        }
        if let Some(z) = lu_solve(&mat, &rhs, d) {
            let feasible = (0..m_total).all(|i| dot(g.row(i), &z) <= h[i] + FEAS_TOL);
            if feasible {
                let obj = dot(&inst.c, &z);
                if best.as_ref().map_or(true, |(_, b)| obj > *b) {
                    best = Some((z, obj));
                }
            }
        }
        done = !next_combination(&mut subset, m_total);
    }
    Ok(match best {
        Some((x, objective)) => SolveOutcome::optimal(x, objective, RunStats::default()),
        None => SolveOutcome::infeasible(RunStats::default()),
    })
}

/// Advance to the next lexicographic k-combination of `0..m`. Returns false
/// when `subset` was the last one.
fn next_combination(subset: &mut [usize], m: usize) -> bool {
    let k = subset.len();
    let mut pos = k;
    while pos > 0 {
        pos -= 1;
        if subset[pos] != pos + m - k {
            subset[pos] += 1;
            for q in pos + 1..k {
                subset[q] = subset[q - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact feasibility solve for a mixed packing/covering sub-problem: find
/// `x in [0,1]^d` with `P x <= 1` and `C_sampled x >= 1`, by maximizing the
/// minimum covering slack. An exact feasible point is a valid (1+eps)
/// approximation for any eps, so the `eps` the caller tuned for is unused.
pub fn mpc_inner_solve(packing: &Mat, c_sampled: &Mat, _eps: f64) -> Result<SolveOutcome> {
    let d = packing.cols;
    if c_sampled.rows > 0 && c_sampled.cols != d {
        return Err(Error::Dimension {
            what: "mpc_inner_solve covering columns",
            expected: d,
            got: c_sampled.cols,
        });
    }
    let k = d + 1; // variables (x, tau)
    let m = packing.rows + c_sampled.rows;
    let mut g = Mat::zeros(m, k);
    let mut h = vec![0.0; m];
    for i in 0..packing.rows {
        g.data[i * k..i * k + d].copy_from_slice(packing.row(i));
        h[i] = 1.0;
    }
    for i in 0..c_sampled.rows {
        let r = packing.rows + i;
        for j in 0..d {
            g.set(r, j, -c_sampled.get(i, j));
        }
        g.set(r, d, 1.0);
        h[r] = -1.0;
    }
    let mut lower = vec![0.0; k];
    let mut upper = vec![1.0; k];
    lower[d] = -2.0;
    upper[d] = d as f64 + 1.0;
    let mut c = vec![0.0; k];
    c[d] = 1.0;

    match solve_rows(&g, &h, &c, &lower, &upper)? {
        RawOutcome::Optimal { x, objective } => {
            if objective >= 0.0 {
                Ok(SolveOutcome::optimal(
                    x[..d].to_vec(),
                    objective,
                    RunStats::default(),
                ))
            } else {
                Ok(SolveOutcome::infeasible(RunStats::default()))
            }
        }
        RawOutcome::Infeasible => Ok(SolveOutcome::infeasible(RunStats::default())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{BoxDomain, LpInstance};

    fn lp(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, lo: f64, hi: f64) -> LpInstance {
        let d = c.len();
        LpInstance::new(
            Mat::from_rows(a).unwrap(),
            b,
            c,
            BoxDomain::new(vec![lo; d], vec![hi; d]).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn one_dim_two_rows() {
        let inst = lp(
            vec![vec![1.0], vec![1.0]],
            vec![3.0, 5.0],
            vec![1.0],
            0.0,
            10.0,
        );
        let sub = SubLp::new(&inst, vec![0, 1]);
        let out = simplex_solve(&sub).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert!((out.x.unwrap()[0] - 3.0).abs() < 1e-12);
        assert!((out.objective.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_dim_diagonal_vertex() {
        let inst = lp(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![1.0, 1.0, 1.5],
            vec![2.0, 1.0],
            0.0,
            2.0,
        );
        let sub = SubLp::new(&inst, vec![0, 1, 2]);
        let out = simplex_solve(&sub).unwrap();
        let x = out.x.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 0.5).abs() < 1e-10);
        assert!((out.objective.unwrap() - 2.5).abs() < 1e-10);
    }

    #[test]
    fn empty_polytope_is_infeasible() {
        let inst = lp(
            vec![vec![1.0], vec![-1.0]],
            vec![-1.0, -2.0],
            vec![1.0],
            0.0,
            10.0,
        );
        let sub = SubLp::new(&inst, vec![0, 1]);
        assert_eq!(simplex_solve(&sub).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn enumeration_agrees_on_the_three_simplex_examples() {
        let cases = vec![
            (
                vec![vec![1.0], vec![1.0]],
                vec![3.0, 5.0],
                vec![1.0],
                0.0,
                10.0,
            ),
            (
                vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
                vec![1.0, 1.0, 1.5],
                vec![2.0, 1.0],
                0.0,
                2.0,
            ),
            (
                vec![vec![1.0], vec![-1.0]],
                vec![-1.0, -2.0],
                vec![1.0],
                0.0,
                10.0,
            ),
        ];
        for (a, b, c, lo, hi) in cases {
            let inst = lp(a, b, c, lo, hi);
            let rows: Vec<usize> = (0..inst.n()).collect();
            let sub = SubLp::new(&inst, rows);
            let s = simplex_solve(&sub).unwrap();
            let e = vertex_enumeration_solve(&sub).unwrap();
            assert_eq!(s.status, e.status);
            if s.status == Status::Optimal {
                assert!((s.objective.unwrap() - e.objective.unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn enumeration_single_constraint() {
        let inst = lp(vec![vec![1.0]], vec![0.5], vec![1.0], 0.0, 1.0);
        let sub = SubLp::new(&inst, vec![0]);
        let out = vertex_enumeration_solve(&sub).unwrap();
        assert!((out.x.unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn enumeration_zero_objective() {
        let inst = lp(vec![vec![1.0, 1.0]], vec![1.0], vec![0.0, 0.0], 0.0, 1.0);
        let sub = SubLp::new(&inst, vec![0]);
        let out = vertex_enumeration_solve(&sub).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert_eq!(out.objective.unwrap(), 0.0);
    }

    #[test]
    fn solver_is_deterministic() {
        let inst = lp(
            vec![
                vec![0.3, -0.7],
                vec![0.9, 0.2],
                vec![-0.5, 0.5],
                vec![0.1, 0.8],
            ],
            vec![0.2, 0.7, 0.3, 0.6],
            vec![1.0, 0.3],
            0.0,
            1.0,
        );
        let sub = SubLp::new(&inst, vec![0, 1, 2, 3]);
        let a = simplex_solve(&sub).unwrap();
        let b = simplex_solve(&sub).unwrap();
        assert_eq!(a.x.unwrap(), b.x.unwrap(), "bit-identical reruns");
    }

    #[test]
    fn mpc_inner_examples() {
        // P = [[1,1]], C = [[1,0]]: x = [1,0] works.
        let p = Mat::from_rows(vec![vec![1.0, 1.0]]).unwrap();
        let c = Mat::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        let out = mpc_inner_solve(&p, &c, 0.1).unwrap();
        assert_eq!(out.status, Status::Optimal);
        let x = out.x.unwrap();
        assert!(x[0] + x[1] <= 1.0 + 1e-9);
        assert!(x[0] >= 1.0 - 1e-9);

        // P = [[1]], C = [[0.4]]: would need x = 2.5 > 1.
        let p = Mat::from_rows(vec![vec![1.0]]).unwrap();
        let c = Mat::from_rows(vec![vec![0.4]]).unwrap();
        assert_eq!(
            mpc_inner_solve(&p, &c, 0.1).unwrap().status,
            Status::Infeasible
        );

        // No covering rows: x = 0 is feasible.
        let p = Mat::from_rows(vec![vec![1.0]]).unwrap();
        let c = Mat::zeros(0, 1);
        let out = mpc_inner_solve(&p, &c, 0.1).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert_eq!(out.x.unwrap(), vec![0.0]);
    }
}
