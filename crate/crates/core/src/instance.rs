use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::QueryLedger;

/// Comparison tolerance applied to every constraint test: row `i` counts as
/// violated only when `<a_i, x> - b_i - eps > TAU`. Keeps float noise from
/// flipping boundary constraints.
pub const TAU: f64 = 1e-9;

/// Dense row-major matrix. Desk scale (n <= 1e6, d <= 16) is served fine by
/// dense rows; no sparse kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * d);
        for r in &rows {
            if r.len() != d {
                return Err(Error::Dimension {
                    what: "matrix row",
                    expected: d,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: n,
            cols: d,
            data,
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Max number of nonzeros over the rows.
    pub fn row_sparsity(&self) -> usize {
        (0..self.rows)
            .map(|i| self.row(i).iter().filter(|v| **v != 0.0).count())
            .max()
            .unwrap_or(0)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Axis-aligned box domain, the "simple convex set" every solver optimizes
/// over. Always finite; guarantees bounded sub-LPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension {
                what: "box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "box bound {j} is not finite"
                )));
            }
            if l > u {
                return Err(Error::InvalidInstance(format!(
                    "box lower {l} > upper {u} at coordinate {j}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(d: usize) -> Self {
        Self {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }
}

/// Constraint block kept in every sub-problem regardless of sampling
/// (e.g. the packing rows of a mixed instance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetainedBlock {
    pub a: Mat,
    pub b: Vec<f64>,
}

/// A linear program `max <c, x>  s.t.  A x <= b, x in box`, plus an optional
/// retained block enforced in every sub-LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub a: Mat,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub domain: BoxDomain,
    pub retained: Option<RetainedBlock>,
}

impl LpInstance {
    pub fn new(
        a: Mat,
        b: Vec<f64>,
        c: Vec<f64>,
        domain: BoxDomain,
        retained: Option<RetainedBlock>,
    ) -> Result<Self> {
        let inst = Self {
            a,
            b,
            c,
            domain,
            retained,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = (self.a.rows, self.a.cols);
        if n == 0 || d == 0 {
            return Err(Error::InvalidInstance(format!(
                "need n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if self.b.len() != n {
            return Err(Error::Dimension {
                what: "rhs b",
                expected: n,
                got: self.b.len(),
            });
        }
        if self.c.len() != d {
            return Err(Error::Dimension {
                what: "objective c",
                expected: d,
                got: self.c.len(),
            });
        }
        if self.domain.dim() != d {
            return Err(Error::Dimension {
                what: "box domain",
                expected: d,
                got: self.domain.dim(),
            });
        }
        if !self.a.is_finite()
            || !self.b.iter().all(|v| v.is_finite())
            || !self.c.iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidInstance("non-finite entry".into()));
        }
        if let Some(r) = &self.retained {
            if r.a.cols != d {
                return Err(Error::Dimension {
                    what: "retained block columns",
                    expected: d,
                    got: r.a.cols,
                });
            }
            if r.b.len() != r.a.rows {
                return Err(Error::Dimension {
                    what: "retained rhs",
                    expected: r.a.rows,
                    got: r.b.len(),
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.rows
    }

    pub fn d(&self) -> usize {
        self.a.cols
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }
}

/// Mixed packing/covering feasibility instance:
/// find `x in [0,1]^d` with `P x <= 1` and `C x >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcInstance {
    pub packing: Mat,
    pub covering: Mat,
    pub r_p: usize,
    pub r_c: usize,
}

impl MpcInstance {
    pub fn new(packing: Mat, covering: Mat) -> Result<Self> {
        if packing.cols != covering.cols {
            return Err(Error::Dimension {
                what: "packing/covering columns",
                expected: packing.cols,
                got: covering.cols,
            });
        }
        for m in [&packing, &covering] {
            if !m.data.iter().all(|v| (0.0..=1.0).contains(v)) {
                return Err(Error::InvalidInstance(
                    "packing/covering entries must lie in [0,1]".into(),
                ));
            }
        }
        let r_p = packing.row_sparsity().max(1);
        let r_c = covering.row_sparsity().max(1);
        Ok(Self {
            packing,
            covering,
            r_p,
            r_c,
        })
    }

    pub fn d(&self) -> usize {
        self.packing.cols
    }

    pub fn n_p(&self) -> usize {
        self.packing.rows
    }

    pub fn n_c(&self) -> usize {
        self.covering.rows
    }

    /// `x` satisfies the instance up to a packing inflation factor.
    pub fn check(&self, x: &[f64], packing_limit: f64) -> bool {
        (0..self.n_p()).all(|i| dot(self.packing.row(i), x) <= packing_limit + TAU)
            && (0..self.n_c()).all(|i| dot(self.covering.row(i), x) >= 1.0 - TAU)
    }
}

/// Binary indicator of constraints violated beyond slack `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationVector {
    pub bits: Vec<u8>,
    pub slack: f64,
}

impl ViolationVector {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| *b == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b == 1).count()
    }

    pub fn violated_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, b)| (*b == 1).then_some(i))
            .collect()
    }
}

/// Evaluate `v^eps(x)`: bit `i` is 1 exactly when `<a_i, x> > b_i + eps + TAU`.
/// Charges `n` classical row reads.
pub fn violation_vector(
    inst: &LpInstance,
    x: &[f64],
    eps: f64,
    ledger: &mut QueryLedger,
) -> Result<ViolationVector> {
    if x.len() != inst.d() {
        return Err(Error::Dimension {
            what: "violation_vector x",
            expected: inst.d(),
            got: x.len(),
        });
    }
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidInstance(format!("slack eps={eps} invalid")));
    }
    ledger.charge_classical(inst.n() as u64);
    let bits = (0..inst.n())
        .map(|i| u8::from(dot(inst.a.row(i), x) - inst.b[i] - eps > TAU))
        .collect();
    Ok(ViolationVector { bits, slack: eps })
}

/// Covering-side violation indicator of a mixed instance: bit `i` is 1 when
/// `<c_i, x> < 1 - eps - TAU`. Charges `n_c` classical row reads.
pub fn covering_violations(
    mpc: &MpcInstance,
    x: &[f64],
    eps: f64,
    ledger: &mut QueryLedger,
) -> Result<ViolationVector> {
    if x.len() != mpc.d() {
        return Err(Error::Dimension {
            what: "covering_violations x",
            expected: mpc.d(),
            got: x.len(),
        });
    }
    ledger.charge_classical(mpc.n_c() as u64);
    let bits = (0..mpc.n_c())
        .map(|i| u8::from(dot(mpc.covering.row(i), x) < 1.0 - eps - TAU))
        .collect();
    Ok(ViolationVector { bits, slack: eps })
}

/// One-sided and two-sided width of the instance over its box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Widths {
    /// Largest violation achievable in the box: `max_i max_x (<a_i,x> - b_i)`
    /// (raw signed maximum, not clamped at zero).
    pub v_max: f64,
    /// `max_x ||A x - b||_inf`.
    pub rho: f64,
}

/// Row-wise extrema of `<a_i, x> - b_i` over the box are attained at corners:
/// take the upper bound where the coefficient is positive and the lower bound
/// otherwise (and the reverse for the minimum).
pub fn compute_widths(inst: &LpInstance) -> Widths {
    let box_ = &inst.domain;
    let mut v_max = f64::NEG_INFINITY;
    let mut rho: f64 = 0.0;
    for i in 0..inst.n() {
        let row = inst.a.row(i);
        let mut hi = -inst.b[i];
        let mut lo = -inst.b[i];
        for (j, &a) in row.iter().enumerate() {
            if a > 0.0 {
                hi += a * box_.upper[j];
                lo += a * box_.lower[j];
            } else {
                hi += a * box_.lower[j];
                lo += a * box_.upper[j];
            }
        }
        v_max = v_max.max(hi);
        rho = rho.max(hi.abs().max(lo.abs()));
    }
    Widths { v_max, rho }
}
