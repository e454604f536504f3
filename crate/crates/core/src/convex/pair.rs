//! Per-pair programs: given a base salience vector `s`, an attribute-gap
//! vector `delta`, and a support set `Q`, find perturbed vectors `s_hat` on
//! the simplex with `s_hat . delta <= 0` that stay proportional to `s` off
//! the support — either testing feasibility at a fixed radius or minimizing
//! the radius outright.
//!
//! For `p in {1, inf}` these are genuine LPs (the off-support proportionality
//! `s_hat_i = lambda * s_i` is linear because `lambda` is a scalar variable
//! against constants). For `p = 2` the minimum radius is the Euclidean
//! projection onto a polyhedron, solved exactly by enumerating active sets of
//! the `O(m)` linear constraints.

use super::simplex::{lp_solve, ConstraintSense, GeneralLP, LpStatus};
use crate::market::SalienceVector;
use crate::{Error, Norm, Radius, Result, LAMBDA_MIN, LP_TOL, TOL};

/// Dimension cap for the `p = 2` active-set enumeration.
const L2_DIM_CAP: usize = 8;

/// One feasibility/minimum-radius program for a candidate blocking pair.
#[derive(Clone, Debug)]
pub struct PairProgram {
    /// Base salience vector `s(b)`.
    pub base: SalienceVector,
    /// Attribute-gap vector `u(partner) - u(candidate)`, length `m`.
    pub gap: Vec<f64>,
    /// Support `Q`: coordinates free to move. Full support disables the
    /// proportionality constraints entirely.
    pub support: Vec<usize>,
    pub norm: Norm,
}

impl PairProgram {
    pub fn m(&self) -> usize {
        self.base.dim()
    }

    fn validate(&self) -> Result<()> {
        let m = self.m();
        if self.gap.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "gap length {} vs salience dim {m}",
                self.gap.len()
            )));
        }
        if self.support.iter().any(|&i| i >= m) {
            return Err(Error::InvalidInput("support index out of range".into()));
        }
        Ok(())
    }

    fn is_full_support(&self) -> bool {
        let mut seen = vec![false; self.m()];
        for &i in &self.support {
            seen[i] = true;
        }
        seen.iter().all(|&s| s)
    }

    fn off_support(&self) -> Vec<usize> {
        let mut in_q = vec![false; self.m()];
        for &i in &self.support {
            in_q[i] = true;
        }
        (0..self.m()).filter(|&i| !in_q[i]).collect()
    }
}

/// Feasibility outcome at a fixed radius.
#[derive(Clone, Debug)]
pub struct PairFeasibility {
    pub feasible: bool,
    /// Witness `(s_hat, lambda)` when feasible.
    pub witness: Option<(Vec<f64>, f64)>,
}

/// Minimum-radius outcome.
#[derive(Clone, Debug)]
pub struct PairSolution {
    /// `r_min` for this program, or `Unbounded` when no admissible vector on
    /// the simplex reaches `s_hat . delta <= 0`.
    pub radius: Radius,
    /// Attaining perturbed vector, when the radius is finite.
    pub witness: Option<Vec<f64>>,
    /// Off-support proportionality factor (1 when vacuous).
    pub lambda: f64,
}

/// Tests whether a perturbation of radius at most `r` can push the score
/// margin to zero or below.
pub fn pair_feasible(prog: &PairProgram, r: f64) -> Result<PairFeasibility> {
    prog.validate()?;
    if r < 0.0 {
        return Err(Error::InvalidInput(format!("radius must be >= 0, got {r}")));
    }
    match prog.norm {
        Norm::L1 | Norm::LInf => {
            let lp = build_lp(prog, Some(r));
            let res = lp_solve(&lp)?;
            match res.status {
                LpStatus::Optimal => {
                    let (s_hat, lambda) = extract_witness(prog, &res.witness);
                    Ok(PairFeasibility {
                        feasible: true,
                        witness: Some((s_hat, lambda)),
                    })
                }
                LpStatus::Infeasible => Ok(PairFeasibility {
                    feasible: false,
                    witness: None,
                }),
                LpStatus::Unbounded => unreachable!("feasibility program has no objective ray"),
            }
        }
        // The Euclidean case reduces to comparing against the exact
        // projection distance from the active-set enumeration.
        Norm::L2 => {
            let sol = pair_min_radius(prog)?;
            match sol.radius {
                Radius::Finite(rmin) if rmin <= r + LP_TOL => Ok(PairFeasibility {
                    feasible: true,
                    witness: sol.witness.map(|w| (w, sol.lambda)),
                }),
                _ => Ok(PairFeasibility {
                    feasible: false,
                    witness: None,
                }),
            }
        }
    }
}

/// Computes `r_min` for the program: the smallest post-normalized distance at
/// which the pair can start blocking.
pub fn pair_min_radius(prog: &PairProgram) -> Result<PairSolution> {
    prog.validate()?;
    match prog.norm {
        Norm::L1 | Norm::LInf => {
            let lp = build_lp(prog, None);
            let res = lp_solve(&lp)?;
            match res.status {
                LpStatus::Optimal => {
                    let (s_hat, lambda) = extract_witness(prog, &res.witness);
                    Ok(PairSolution {
                        radius: Radius::Finite(res.value.max(0.0)),
                        witness: Some(s_hat),
                        lambda,
                    })
                }
                LpStatus::Infeasible => Ok(PairSolution {
                    radius: Radius::Unbounded,
                    witness: None,
                    lambda: 1.0,
                }),
                LpStatus::Unbounded => unreachable!("radius is bounded below by 0"),
            }
        }
        Norm::L2 => min_radius_l2(prog),
    }
}

/// Shared LP for `p in {1, inf}`. Variables are laid out as
/// `[s_hat (m), lambda?, z (m, p=1 only), r?]`; `fixed_r == None` makes the
/// radius a decision variable and the objective.
fn build_lp(prog: &PairProgram, fixed_r: Option<f64>) -> GeneralLP {
    let m = prog.m();
    let s = prog.base.weights();
    let full = prog.is_full_support();
    let has_lambda = !full;

    let lambda_idx = m;
    let z_base = m + has_lambda as usize;
    let with_z = prog.norm == Norm::L1;
    let r_idx = z_base + if with_z { m } else { 0 };
    let nvars = r_idx + fixed_r.is_none() as usize;

    let mut lp = GeneralLP::new(nvars);
    if has_lambda {
        lp.bounds[lambda_idx] = (LAMBDA_MIN, f64::INFINITY);
    }
    let r_of = |row: &mut Vec<f64>, coeff: f64| {
        // contribution of the radius, whether variable or constant
        if let Some(r) = fixed_r {
            coeff * r
        } else {
            row[r_idx] += coeff;
            0.0
        }
    };

    // sum s_hat = 1
    let mut row = vec![0.0; nvars];
    for i in 0..m {
        row[i] = 1.0;
    }
    lp.constrain(row, ConstraintSense::Eq, 1.0);

    // off-support proportionality
    if has_lambda {
        for i in prog.off_support() {
            let mut row = vec![0.0; nvars];
            row[i] = 1.0;
            row[lambda_idx] = -s[i];
            lp.constrain(row, ConstraintSense::Eq, 0.0);
        }
    }

    // blocking condition s_hat . delta <= 0
    let mut row = vec![0.0; nvars];
    row[..m].copy_from_slice(&prog.gap);
    lp.constrain(row, ConstraintSense::Le, 0.0);

    match prog.norm {
        Norm::LInf => {
            // -r <= s_hat_i - s_i <= r
            for i in 0..m {
                let mut row = vec![0.0; nvars];
                row[i] = 1.0;
                let shift = r_of(&mut row, -1.0);
                lp.constrain(row, ConstraintSense::Le, s[i] - shift);
                let mut row = vec![0.0; nvars];
                row[i] = -1.0;
                let shift = r_of(&mut row, -1.0);
                lp.constrain(row, ConstraintSense::Le, -s[i] - shift);
            }
        }
        Norm::L1 => {
            // z_i >= |s_hat_i - s_i|, sum z <= r
            for i in 0..m {
                let mut row = vec![0.0; nvars];
                row[i] = 1.0;
                row[z_base + i] = -1.0;
                lp.constrain(row, ConstraintSense::Le, s[i]);
                let mut row = vec![0.0; nvars];
                row[i] = -1.0;
                row[z_base + i] = -1.0;
                lp.constrain(row, ConstraintSense::Le, -s[i]);
            }
            let mut row = vec![0.0; nvars];
            for i in 0..m {
                row[z_base + i] = 1.0;
            }
            let shift = r_of(&mut row, -1.0);
            lp.constrain(row, ConstraintSense::Le, -shift);
        }
        Norm::L2 => unreachable!(),
    }

    if fixed_r.is_none() {
        lp.objective[r_idx] = 1.0;
    }
    lp
}

fn extract_witness(prog: &PairProgram, x: &[f64]) -> (Vec<f64>, f64) {
    let m = prog.m();
    let s_hat: Vec<f64> = x[..m].iter().map(|v| v.max(0.0)).collect();
    let lambda = if prog.is_full_support() {
        1.0
    } else if prog.off_support().iter().all(|&i| prog.base.weights()[i] <= TOL) {
        // proportionality is vacuous off a zero base; record 1 by convention
        1.0
    } else {
        x[m]
    };
    (s_hat, lambda)
}

/// Exact Euclidean minimum radius by KKT face enumeration: every subset of
/// the inequality constraints is tried as the active set, the corresponding
/// equality-constrained least-distance system is solved in closed form, and
/// the best feasible candidate wins. The true projection's active set is
/// among the subsets, so this is exact.
fn min_radius_l2(prog: &PairProgram) -> Result<PairSolution> {
    let m = prog.m();
    if m > L2_DIM_CAP {
        return Err(Error::GuardExceeded {
            op: "pair_min_radius (p=2 active-set enumeration)",
            size: m,
            cap: L2_DIM_CAP,
        });
    }
    let s = prog.base.weights();
    let full = prog.is_full_support();
    let off = prog.off_support();
    let off_positive: Vec<usize> = off.iter().copied().filter(|&i| s[i] > TOL).collect();
    let off_zero: Vec<usize> = off.iter().copied().filter(|&i| s[i] <= TOL).collect();
    let has_lambda = !full && !off_positive.is_empty();
    let dim = m + has_lambda as usize;

    // Fixed equalities: normalization, proportionality, zero pins.
    let mut eq_rows: Vec<Vec<f64>> = Vec::new();
    let mut eq_rhs: Vec<f64> = Vec::new();
    let mut row = vec![0.0; dim];
    for v in row.iter_mut().take(m) {
        *v = 1.0;
    }
    eq_rows.push(row);
    eq_rhs.push(1.0);
    if has_lambda {
        for &i in &off_positive {
            let mut row = vec![0.0; dim];
            row[i] = 1.0;
            row[m] = -s[i];
            eq_rows.push(row);
            eq_rhs.push(0.0);
        }
    }
    for &i in &off_zero {
        let mut row = vec![0.0; dim];
        row[i] = 1.0;
        eq_rows.push(row);
        eq_rhs.push(0.0);
    }

    // Candidate-active inequalities, each as (row, rhs) meaning row.x >= rhs.
    let mut ineq_rows: Vec<Vec<f64>> = Vec::new();
    let mut ineq_rhs: Vec<f64> = Vec::new();
    for i in 0..m {
        if off_zero.contains(&i) {
            continue; // already pinned to zero
        }
        let mut row = vec![0.0; dim];
        row[i] = 1.0;
        ineq_rows.push(row);
        ineq_rhs.push(0.0);
    }
    let mut row = vec![0.0; dim];
    for i in 0..m {
        row[i] = -prog.gap[i];
    }
    ineq_rows.push(row);
    ineq_rhs.push(0.0);
    if has_lambda {
        let mut row = vec![0.0; dim];
        row[m] = 1.0;
        ineq_rows.push(row);
        ineq_rhs.push(LAMBDA_MIN);
    }

    let n_ineq = ineq_rows.len();
    let feasible = |x: &[f64]| {
        ineq_rows
            .iter()
            .zip(&ineq_rhs)
            .all(|(row, rhs)| dot(row, x) >= rhs - 1e-9)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n_ineq) {
        let mut rows = eq_rows.clone();
        let mut rhs = eq_rhs.clone();
        for j in 0..n_ineq {
            if mask & (1 << j) != 0 {
                rows.push(ineq_rows[j].clone());
                rhs.push(ineq_rhs[j]);
            }
        }
        let Some(x) = equality_constrained_projection(s, dim, m, &rows, &rhs) else {
            continue;
        };
        if !feasible(&x) {
            continue;
        }
        let obj = (0..m).map(|i| (x[i] - s[i]).powi(2)).sum::<f64>().sqrt();
        if best.as_ref().map_or(true, |(b, _)| obj < *b - 1e-12) {
            best = Some((obj, x));
        }
    }

    match best {
        Some((radius, x)) => {
            let lambda = if has_lambda { x[m] } else { 1.0 };
            let s_hat = x[..m].iter().map(|v| v.max(0.0)).collect();
            Ok(PairSolution {
                radius: Radius::Finite(radius),
                witness: Some(s_hat),
                lambda,
            })
        }
        None => Ok(PairSolution {
            radius: Radius::Unbounded,
            witness: None,
            lambda: 1.0,
        }),
    }
}

/// Minimizes `0.5 * ||s_hat - s||^2` over `C x = d` via the KKT system.
/// The Hessian is the identity on the `s_hat` block and zero on `lambda`;
/// singular systems (dependent constraint subsets) return `None`.
fn equality_constrained_projection(
    s: &[f64],
    dim: usize,
    m: usize,
    rows: &[Vec<f64>],
    rhs: &[f64],
) -> Option<Vec<f64>> {
    let e = rows.len();
    let size = dim + e;
    let mut a = vec![vec![0.0; size]; size];
    let mut b = vec![0.0; size];
    for i in 0..m {
        a[i][i] = 1.0;
        b[i] = s[i];
    }
    for (k, row) in rows.iter().enumerate() {
        for j in 0..dim {
            a[j][dim + k] = row[j];
            a[dim + k][j] = row[j];
        }
        b[dim + k] = rhs[k];
    }
    solve_dense(&mut a, &mut b).map(|x| x[..dim].to_vec())
}

/// Gaussian elimination with partial pivoting; `None` on a singular system.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut v = b[r];
        for c in r + 1..n {
            v -= a[r][c] * x[c];
        }
        x[r] = v / a[r][r];
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
