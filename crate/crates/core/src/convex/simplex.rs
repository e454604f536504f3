//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Sized for the desk-scale problems this crate produces (a few hundred rows
//! and columns); everything is kept dense and deterministic.

use crate::{Error, Result};

/// Pivot tolerance.
const EPS: f64 = 1e-9;
/// Phase-1 residual above which the program is declared infeasible.
const FEAS_EPS: f64 = 1e-7;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

/// A dense LP: minimize `objective . x` subject to row constraints and
/// per-variable bounds. Use `f64::NEG_INFINITY` / `f64::INFINITY` for free
/// bounds.
#[derive(Clone, Debug)]
pub struct GeneralLP {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, ConstraintSense, f64)>,
    pub bounds: Vec<(f64, f64)>,
}

impl GeneralLP {
    /// A minimization LP with all variables defaulting to `x >= 0`.
    pub fn new(num_vars: usize) -> Self {
        GeneralLP {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, sense: ConstraintSense, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push((coeffs, sense, rhs));
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch(
                "bounds length differs from objective length".into(),
            ));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective coefficient".into()));
        }
        for (coeffs, _, rhs) in &self.rows {
            if coeffs.len() != n {
                return Err(Error::DimensionMismatch(
                    "constraint row length differs from variable count".into(),
                ));
            }
            if coeffs.iter().any(|c| !c.is_finite()) || !rhs.is_finite() {
                return Err(Error::InvalidInput("non-finite constraint entry".into()));
            }
        }
        for (l, u) in &self.bounds {
            if l > u {
                return Err(Error::InvalidInput(format!("empty bound interval [{l}, {u}]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of an LP solve. `value` and `witness` are meaningful only when
/// `status == Optimal`.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: LpStatus,
    pub value: f64,
    pub witness: Vec<f64>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves a general LP (minimization) with the two-phase dense simplex.
pub fn lp_solve(lp: &GeneralLP) -> Result<SolveResult> {
    lp.validate()?;
    let std = Standardized::build(lp);
    let mut tab = Tableau::new(&std.a, &std.b, std.c.len());

    if !tab.phase_one() {
        return Ok(SolveResult {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            witness: Vec::new(),
        });
    }
    match tab.phase_two(&std.c) {
        PhaseOutcome::Optimal => {
            let x_std = tab.solution(std.c.len());
            let witness = std.recover(&x_std);
            let value: f64 = lp
                .objective
                .iter()
                .zip(&witness)
                .map(|(c, x)| c * x)
                .sum();
            Ok(SolveResult {
                status: LpStatus::Optimal,
                value,
                witness,
            })
        }
        PhaseOutcome::Unbounded => Ok(SolveResult {
            status: LpStatus::Unbounded,
            value: f64::NEG_INFINITY,
            witness: Vec::new(),
        }),
    }
}

/// How each original variable maps onto standard-form variables.
enum VarMap {
    /// `x = lower + x_std[idx]`
    Shifted { idx: usize, lower: f64 },
    /// `x = x_std[pos] - x_std[neg]` (free variable split)
    Split { pos: usize, neg: usize },
    /// Fixed by equal bounds.
    Fixed(f64),
}

/// Standard form `min c.x  s.t.  A x = b, x >= 0, b >= 0`.
struct Standardized {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    map: Vec<VarMap>,
    orig_vars: usize,
}

impl Standardized {
    fn build(lp: &GeneralLP) -> Standardized {
        let n = lp.num_vars();
        let mut map = Vec::with_capacity(n);
        let mut num_std = 0usize;
        // extra rows for finite upper bounds
        let mut ub_rows: Vec<(usize, f64)> = Vec::new(); // (orig var, shifted ub)

        for j in 0..n {
            let (l, u) = lp.bounds[j];
            if l.is_finite() && u.is_finite() && (u - l).abs() < 1e-15 {
                map.push(VarMap::Fixed(l));
                continue;
            }
            if l.is_finite() {
                map.push(VarMap::Shifted { idx: num_std, lower: l });
                if u.is_finite() {
                    ub_rows.push((j, u - l));
                }
                num_std += 1;
            } else {
                map.push(VarMap::Split {
                    pos: num_std,
                    neg: num_std + 1,
                });
                if u.is_finite() {
                    ub_rows.push((j, u));
                }
                num_std += 2;
            }
        }

        // One slack/surplus column per inequality row (including bound rows).
        let num_ineq = lp
            .rows
            .iter()
            .filter(|(_, s, _)| *s != ConstraintSense::Eq)
            .count()
            + ub_rows.len();
        let total = num_std + num_ineq;

        let expand = |coeffs: &dyn Fn(usize) -> f64, row: &mut [f64], rhs: &mut f64| {
            for j in 0..n {
                let cj = coeffs(j);
                if cj == 0.0 {
                    continue;
                }
                match &map[j] {
                    VarMap::Shifted { idx, lower } => {
                        row[*idx] += cj;
                        *rhs -= cj * lower;
                    }
                    VarMap::Split { pos, neg } => {
                        row[*pos] += cj;
                        row[*neg] -= cj;
                    }
                    VarMap::Fixed(v) => *rhs -= cj * v,
                }
            }
        };

        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut slack = num_std;
        for (coeffs, sense, rhs0) in &lp.rows {
            let mut row = vec![0.0; total];
            let mut rhs = *rhs0;
            expand(&|j| coeffs[j], &mut row, &mut rhs);
            match sense {
                ConstraintSense::Le => {
                    row[slack] = 1.0;
                    slack += 1;
                }
                ConstraintSense::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                }
                ConstraintSense::Eq => {}
            }
            if rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                rhs = -rhs;
            }
            a.push(row);
            b.push(rhs);
        }
        for (j, ub) in &ub_rows {
            let mut row = vec![0.0; total];
            let mut rhs = *ub;
            match &map[*j] {
                VarMap::Shifted { idx, .. } => row[*idx] = 1.0,
                VarMap::Split { pos, neg } => {
                    row[*pos] = 1.0;
                    row[*neg] = -1.0;
                }
                VarMap::Fixed(_) => unreachable!(),
            }
            row[slack] = 1.0;
            slack += 1;
            if rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                rhs = -rhs;
            }
            a.push(row);
            b.push(rhs);
        }

        let mut c = vec![0.0; total];
        for j in 0..n {
            let cj = lp.objective[j];
            if cj == 0.0 {
                continue;
            }
            match &map[j] {
                VarMap::Shifted { idx, .. } => c[*idx] += cj,
                VarMap::Split { pos, neg } => {
                    c[*pos] += cj;
                    c[*neg] -= cj;
                }
                VarMap::Fixed(_) => {}
            }
        }

        Standardized {
            a,
            b,
            c,
            map,
            orig_vars: n,
        }
    }

    fn recover(&self, x_std: &[f64]) -> Vec<f64> {
        (0..self.orig_vars)
            .map(|j| match &self.map[j] {
                VarMap::Shifted { idx, lower } => lower + x_std[*idx],
                VarMap::Split { pos, neg } => x_std[*pos] - x_std[*neg],
                VarMap::Fixed(v) => *v,
            })
            .collect()
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

/// Full tableau: `rows` structural rows plus one cost row. The cost row holds
/// reduced costs; its rhs cell holds minus the current objective value.
struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    n_struct: usize,
}

impl Tableau {
    fn new(a: &[Vec<f64>], b: &[f64], n: usize) -> Tableau {
        let m = a.len();
        // columns: structural + artificial + rhs
        let cols = n + m + 1;
        let mut t = Vec::with_capacity(m + 1);
        for i in 0..m {
            let mut row = vec![0.0; cols];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[cols - 1] = b[i];
            t.push(row);
        }
        t.push(vec![0.0; cols]);
        Tableau {
            t,
            basis: (n..n + m).collect(),
            cols,
            n_struct: n,
        }
    }

    fn rows(&self) -> usize {
        self.t.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor.abs() < 1e-13 {
                row[c] = 0.0;
                continue;
            }
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the current cost row with Bland's rule:
    /// smallest eligible entering column, ratio ties broken by smallest basis
    /// variable. Columns `>= limit` are never entered.
    fn iterate(&mut self, limit: usize) -> PhaseOutcome {
        let cost = self.rows();
        loop {
            let mut entering = None;
            for c in 0..limit {
                if self.t[cost][c] < -EPS {
                    entering = Some(c);
                    break;
                }
            }
            let Some(c) = entering else {
                return PhaseOutcome::Optimal;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows() {
                let coef = self.t[r][c];
                if coef > EPS {
                    let ratio = self.t[r][self.cols - 1] / coef;
                    match leaving {
                        None => leaving = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio < lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                leaving = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return PhaseOutcome::Unbounded;
            };
            self.pivot(r, c);
        }
    }

    /// Minimizes the sum of artificial variables; true on (near-)zero optimum.
    fn phase_one(&mut self) -> bool {
        let cost = self.rows();
        // Reduced costs for phase-1 objective (artificials have cost 1 and
        // form the starting basis).
        for c in 0..self.cols {
            let mut v = 0.0;
            for r in 0..self.rows() {
                v -= self.t[r][c];
            }
            self.t[cost][c] = v;
        }
        for c in self.n_struct..self.cols - 1 {
            self.t[cost][c] = 0.0;
        }
        match self.iterate(self.n_struct) {
            PhaseOutcome::Unbounded => unreachable!("phase-1 objective is bounded below by 0"),
            PhaseOutcome::Optimal => {}
        }
        let objective = -self.t[cost][self.cols - 1];
        if objective > FEAS_EPS {
            return false;
        }
        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut r = 0;
        while r < self.rows() {
            if self.basis[r] >= self.n_struct {
                let mut pivoted = false;
                for c in 0..self.n_struct {
                    if self.t[r][c].abs() > 1e-8 {
                        self.pivot(r, c);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    self.t.remove(r);
                    self.basis.remove(r);
                    continue;
                }
            }
            r += 1;
        }
        true
    }

    fn phase_two(&mut self, c: &[f64]) -> PhaseOutcome {
        let cost = self.rows();
        for j in 0..self.cols {
            self.t[cost][j] = if j < c.len() { c[j] } else { 0.0 };
        }
        let basis = self.basis.clone();
        for (r, &bv) in basis.iter().enumerate() {
            let cb = if bv < c.len() { c[bv] } else { 0.0 };
            if cb != 0.0 {
                let row = self.t[r].clone();
                for (v, p) in self.t[cost].iter_mut().zip(&row) {
                    *v -= cb * p;
                }
            }
        }
        self.iterate(self.n_struct)
    }

    fn solution(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (r, &bv) in self.basis.iter().enumerate() {
            if bv < n {
                x[bv] = self.t[r][self.cols - 1];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_maximum() {
        // max x s.t. x <= 3  ==  min -x
        let mut lp = GeneralLP::new(1);
        lp.objective = vec![-1.0];
        lp.constrain(vec![1.0], ConstraintSense::Le, 3.0);
        let res = lp_solve(&lp).unwrap();
        assert!(res.is_optimal());
        assert!((res.value + 3.0).abs() < 1e-9);
        assert!((res.witness[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_pair() {
        let mut lp = GeneralLP::new(1);
        lp.constrain(vec![1.0], ConstraintSense::Le, 0.0);
        lp.constrain(vec![1.0], ConstraintSense::Ge, 1.0);
        let res = lp_solve(&lp).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = GeneralLP::new(1);
        lp.objective = vec![-1.0];
        let res = lp_solve(&lp).unwrap();
        assert_eq!(res.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + y  s.t.  x + y = 2, x - y = 0, y free
        let mut lp = GeneralLP::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.bounds[1] = (f64::NEG_INFINITY, f64::INFINITY);
        lp.constrain(vec![1.0, 1.0], ConstraintSense::Eq, 2.0);
        lp.constrain(vec![1.0, -1.0], ConstraintSense::Eq, 0.0);
        let res = lp_solve(&lp).unwrap();
        assert!(res.is_optimal());
        assert!((res.witness[0] - 1.0).abs() < 1e-9);
        assert!((res.witness[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn upper_and_lower_bounds() {
        // min -x - 2y  s.t.  x in [0.5, 2], y in [-1, 1], x + y <= 2
        let mut lp = GeneralLP::new(2);
        lp.objective = vec![-1.0, -2.0];
        lp.bounds[0] = (0.5, 2.0);
        lp.bounds[1] = (-1.0, 1.0);
        lp.constrain(vec![1.0, 1.0], ConstraintSense::Le, 2.0);
        let res = lp_solve(&lp).unwrap();
        assert!(res.is_optimal());
        assert!((res.witness[0] - 1.0).abs() < 1e-9);
        assert!((res.witness[1] - 1.0).abs() < 1e-9);
        assert!((res.value + 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_rows_are_tolerated() {
        // Duplicate constraints exercise redundant-row removal in phase 1.
        let mut lp = GeneralLP::new(2);
        lp.objective = vec![1.0, 0.0];
        lp.constrain(vec![1.0, 1.0], ConstraintSense::Eq, 1.0);
        lp.constrain(vec![1.0, 1.0], ConstraintSense::Eq, 1.0);
        lp.constrain(vec![2.0, 2.0], ConstraintSense::Eq, 2.0);
        let res = lp_solve(&lp).unwrap();
        assert!(res.is_optimal());
        assert!(res.value.abs() < 1e-9);
    }

    #[test]
    fn reference_recomputation_small_random() {
        // Cross-check against brute-force vertex enumeration on a fixed
        // family of 2-variable LPs.
        let cases: Vec<(Vec<f64>, Vec<(Vec<f64>, f64)>)> = vec![
            (
                vec![-3.0, -5.0],
                vec![
                    (vec![1.0, 0.0], 4.0),
                    (vec![0.0, 2.0], 12.0),
                    (vec![3.0, 2.0], 18.0),
                ],
            ),
            (
                vec![1.0, -2.0],
                vec![(vec![1.0, 1.0], 3.0), (vec![-1.0, 1.0], 1.0)],
            ),
        ];
        for (obj, cons) in cases {
            let mut lp = GeneralLP::new(2);
            lp.objective = obj.clone();
            for (row, rhs) in &cons {
                lp.constrain(row.clone(), ConstraintSense::Le, *rhs);
            }
            let res = lp_solve(&lp).unwrap();
            assert!(res.is_optimal());
            // Enumerate candidate vertices: constraint/axis intersections.
            let mut lines: Vec<(Vec<f64>, f64)> = cons.clone();
            lines.push((vec![1.0, 0.0], 0.0));
            lines.push((vec![0.0, 1.0], 0.0));
            let feasible = |x: f64, y: f64| {
                x >= -1e-9
                    && y >= -1e-9
                    && cons.iter().all(|(r, rhs)| r[0] * x + r[1] * y <= rhs + 1e-9)
            };
            let mut best = f64::INFINITY;
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    let (r1, b1) = &lines[i];
                    let (r2, b2) = &lines[j];
                    let det = r1[0] * r2[1] - r1[1] * r2[0];
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let x = (b1 * r2[1] - r1[1] * b2) / det;
                    let y = (r1[0] * b2 - b1 * r2[0]) / det;
                    if feasible(x, y) {
                        best = best.min(obj[0] * x + obj[1] * y);
                    }
                }
            }
            assert!(
                (res.value - best).abs() < 1e-7,
                "simplex {} vs oracle {}",
                res.value,
                best
            );
        }
    }
}
