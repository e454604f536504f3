//! LP relaxations over the stable-marriage polytope: feasibility of a target
//! robustness radius for fractional matchings, the bisection upper bound on
//! the best achievable radius (globally and restricted to a sublattice), and
//! the cost lower bound with vulnerability cuts.
//!
//! The polytope is Rothblum's compact description: doubly stochastic `y` with
//! one stability inequality per pair. The robustness constraints compare the
//! salience margin of each pair against `r` times a per-pair loss-rate
//! coefficient derived from the exact pairwise thresholds; bisection on `r`
//! keeps each solve linear.

use crate::convex::{lp_solve, ConstraintSense, GeneralLP, LpStatus};
use crate::market::{AId, BId, Instance, Matching, SalienceProfile};
use crate::robustness::threshold_for_gap;
use crate::stable::Prefs;
use crate::{Error, Norm, Radius, Result, TOL};

/// Integrality detection tolerance for fractional solutions.
const INTEGRAL_TOL: f64 = 1e-6;

/// A point of the stable-marriage polytope, row-major over `(a, b)`.
#[derive(Clone, Debug)]
pub struct FractionalMatching {
    pub n: usize,
    pub y: Vec<f64>,
}

impl FractionalMatching {
    pub fn get(&self, a: AId, b: BId) -> f64 {
        self.y[a.0 * self.n + b.0]
    }

    /// Fractional partner attributes `sum_a y_ab u(a)`.
    pub fn fractional_attributes(&self, inst: &Instance, b: BId) -> Vec<f64> {
        let mut out = vec![0.0; inst.m()];
        for a in inst.a_ids() {
            let w = self.get(a, b);
            for (o, u) in out.iter_mut().zip(inst.attributes(a).values()) {
                *o += w * u;
            }
        }
        out
    }

    /// Decodes a 0/1 solution into a matching, if every entry is integral.
    pub fn as_integral(&self) -> Option<Matching> {
        let mut pairs = vec![None; self.n];
        for a in 0..self.n {
            for b in 0..self.n {
                let v = self.y[a * self.n + b];
                if (v - 1.0).abs() <= INTEGRAL_TOL {
                    if pairs[a].is_some() {
                        return None;
                    }
                    pairs[a] = Some(BId(b));
                } else if v.abs() > INTEGRAL_TOL {
                    return None;
                }
            }
        }
        let pairs: Option<Vec<BId>> = pairs.into_iter().collect();
        Matching::new(pairs?).ok()
    }
}

/// Extra linear constraint over the `y` variables.
#[derive(Clone, Debug)]
pub struct ExtraConstraint {
    pub terms: Vec<(AId, BId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

impl ExtraConstraint {
    pub fn fix(a: AId, b: BId, value: f64) -> ExtraConstraint {
        ExtraConstraint {
            terms: vec![(a, b, 1.0)],
            sense: ConstraintSense::Eq,
            rhs: value,
        }
    }
}

/// Outcome of an LP over the polytope.
#[derive(Clone, Debug)]
pub struct RothblumOutcome {
    pub feasible: bool,
    pub value: f64,
    pub solution: Option<FractionalMatching>,
}

fn y_idx(n: usize, a: AId, b: BId) -> usize {
    a.0 * n + b.0
}

/// Assignment and stability rows of the Rothblum polytope over `nvars`
/// variables whose first `n^2` entries are `y`.
fn polytope_rows(inst: &Instance, prefs: &Prefs, lp: &mut GeneralLP, nvars: usize) {
    let n = inst.n();
    for a in inst.a_ids() {
        let mut row = vec![0.0; nvars];
        for b in inst.b_ids() {
            row[y_idx(n, a, b)] = 1.0;
        }
        lp.constrain(row, ConstraintSense::Eq, 1.0);
    }
    for b in inst.b_ids() {
        let mut row = vec![0.0; nvars];
        for a in inst.a_ids() {
            row[y_idx(n, a, b)] = 1.0;
        }
        lp.constrain(row, ConstraintSense::Eq, 1.0);
    }
    for a in inst.a_ids() {
        for b in inst.b_ids() {
            let mut row = vec![0.0; nvars];
            // b' weakly preferred by a to b
            for &bp in prefs.a_list(a) {
                row[y_idx(n, a, bp)] += 1.0;
                if bp == b {
                    break;
                }
            }
            // a' strictly preferred by b to a
            for &ap in prefs.b_list(b) {
                if ap == a {
                    break;
                }
                row[y_idx(n, ap, b)] += 1.0;
            }
            lp.constrain(row, ConstraintSense::Ge, 1.0);
        }
    }
}

/// Optimizes `objective . y` (or pure feasibility) over the polytope plus
/// caller constraints.
pub fn rothblum_feasible(
    inst: &Instance,
    s: &SalienceProfile,
    objective: Option<&[Vec<f64>]>,
    extra: &[ExtraConstraint],
) -> Result<RothblumOutcome> {
    let n = inst.n();
    let prefs = Prefs::from_instance(inst, s)?;
    let nvars = n * n;
    let mut lp = GeneralLP::new(nvars);
    for bound in lp.bounds.iter_mut() {
        *bound = (0.0, 1.0);
    }
    polytope_rows(inst, &prefs, &mut lp, nvars);
    for c in extra {
        let mut row = vec![0.0; nvars];
        for (a, b, coeff) in &c.terms {
            row[y_idx(n, *a, *b)] += coeff;
        }
        lp.constrain(row, c.sense, c.rhs);
    }
    if let Some(costs) = objective {
        for a in 0..n {
            for b in 0..n {
                lp.objective[a * n + b] = costs[a][b];
            }
        }
    }
    let res = lp_solve(&lp)?;
    match res.status {
        LpStatus::Optimal => Ok(RothblumOutcome {
            feasible: true,
            value: res.value,
            solution: Some(FractionalMatching {
                n,
                y: res.witness[..nvars].to_vec(),
            }),
        }),
        LpStatus::Infeasible => Ok(RothblumOutcome {
            feasible: false,
            value: f64::NAN,
            solution: None,
        }),
        LpStatus::Unbounded => Err(Error::InvalidInput(
            "unbounded objective over a bounded polytope".into(),
        )),
    }
}

/// Per-pair loss-rate coefficients for the linearized robustness rows,
/// row-major over `(a, b)`; `None` drops the row.
///
/// For a pair `(a, b)` and a hypothetical partner `a'` that `b` score-prefers
/// to `a`, the exact pairwise threshold gives the smallest radius at which a
/// perturbation of `b` makes `(a, b)` block; the ratio margin / threshold is
/// the fastest per-radius margin loss any admissible perturbation achieves
/// against that partner. Taking the minimum over candidate partners yields a
/// coefficient `c` such that every stable matching `mu` satisfies
/// `margin(mu, a, b) >= r * c` for all `r <= r*(mu)` — so the integral
/// optimum stays feasible throughout the bisection and the bound is sound.
/// A candidate partner with an unbounded threshold forces `c = 0` (row
/// dropped): a matching pairing `b` with that partner sustains any radius,
/// and a positive coefficient would cut it off.
fn rate_coefficients(
    inst: &Instance,
    s: &SalienceProfile,
    k: usize,
    p: Norm,
) -> Result<Vec<Option<f64>>> {
    let n = inst.n();
    let mut out = vec![None; n * n];
    for b in inst.b_ids() {
        let sb = s.row(b);
        for a in inst.a_ids() {
            let ua = inst.attributes(a).values();
            let mut coef: Option<f64> = None;
            for ap in inst.a_ids() {
                if ap == a {
                    continue;
                }
                let gap: Vec<f64> = inst
                    .attributes(ap)
                    .values()
                    .iter()
                    .zip(ua)
                    .map(|(x, y)| x - y)
                    .collect();
                let margin: f64 = sb.weights().iter().zip(&gap).map(|(x, y)| x * y).sum();
                if margin <= TOL {
                    // a' cannot partner b at a stable point with (a, b) live
                    continue;
                }
                let rate = match threshold_for_gap(sb, &gap, k, p)? {
                    Radius::Finite(r) => margin / r.max(1e-12),
                    Radius::Unbounded => 0.0,
                };
                coef = Some(coef.map_or(rate, |c: f64| c.min(rate)));
            }
            if let Some(c) = coef {
                if c > TOL {
                    out[y_idx(n, a, b)] = Some(c);
                }
            }
        }
    }
    Ok(out)
}

/// One feasibility solve at fixed `r` with precomputed rate coefficients.
fn ub_solve(
    inst: &Instance,
    s: &SalienceProfile,
    r: f64,
    coefs: &[Option<f64>],
    extra: &[ExtraConstraint],
) -> Result<Option<FractionalMatching>> {
    let n = inst.n();
    let prefs = Prefs::from_instance(inst, s)?;
    let nvars = n * n;
    let mut lp = GeneralLP::new(nvars);
    for bound in lp.bounds.iter_mut() {
        *bound = (0.0, 1.0);
    }
    polytope_rows(inst, &prefs, &mut lp, nvars);
    for c in extra {
        let mut row = vec![0.0; nvars];
        for (a, b, coeff) in &c.terms {
            row[y_idx(n, *a, *b)] += coeff;
        }
        lp.constrain(row, c.sense, c.rhs);
    }

    // Deactivation constant: pairs where `a` keeps all its mass on partners
    // it weakly prefers to `b` can never block, so their margin constraint is
    // lifted by `big_m` times that mass (exactly off for integral blockers).
    let max_margin = inst
        .b_ids()
        .map(|b| {
            let sb = s.row(b).weights();
            inst.a_ids()
                .map(|a| {
                    sb.iter()
                        .zip(inst.attributes(a).values())
                        .map(|(x, y)| x * y)
                        .sum::<f64>()
                })
                .fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max);
    let max_coef = coefs
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &c| acc.max(c));
    let big_m = r * max_coef + 2.0 * max_margin + 1.0;

    for a in inst.a_ids() {
        for b in inst.b_ids() {
            let Some(coef) = coefs[y_idx(n, a, b)] else {
                continue;
            };
            let sb = s.row(b).weights();
            let ua = inst.attributes(a).values();
            // margin row: s(b) . ubar_b - s(b) . u(a)
            //             + big_m * (mass of a on b or better) >= r * coef
            let mut row = vec![0.0; nvars];
            for &bp in prefs.a_list(a) {
                row[y_idx(n, a, bp)] += big_m;
                if bp == b {
                    break;
                }
            }
            for ap in inst.a_ids() {
                let coeff: f64 = sb
                    .iter()
                    .zip(inst.attributes(ap).values())
                    .map(|(x, y)| x * y)
                    .sum();
                row[y_idx(n, ap, b)] += coeff;
            }
            let rhs: f64 = sb.iter().zip(ua).map(|(x, y)| x * y).sum::<f64>() + r * coef;
            lp.constrain(row, ConstraintSense::Ge, rhs);
        }
    }
    let res = lp_solve(&lp)?;
    Ok(match res.status {
        LpStatus::Optimal => Some(FractionalMatching {
            n,
            y: res.witness[..nvars].to_vec(),
        }),
        _ => None,
    })
}

/// The `l2` bound remains gated behind an explicit opt-in flag.
fn check_l2_flag(p: Norm, l2_norm_equivalence: bool) -> Result<()> {
    if p == Norm::L2 && !l2_norm_equivalence {
        return Err(Error::Unsupported(
            "the l2 relaxation must be enabled explicitly".into(),
        ));
    }
    Ok(())
}

/// True iff a fractional matching can sustain radius `r` under the linearized
/// robustness constraints.
pub fn ub_feasible(
    inst: &Instance,
    s: &SalienceProfile,
    r: f64,
    k: usize,
    p: Norm,
    l2_norm_equivalence: bool,
) -> Result<bool> {
    if r < 0.0 {
        return Err(Error::InvalidInput(format!("radius must be >= 0, got {r}")));
    }
    check_l2_flag(p, l2_norm_equivalence)?;
    let coefs = rate_coefficients(inst, s, k, p)?;
    Ok(ub_solve(inst, s, r, &coefs, &[])?.is_some())
}

/// Bisection upper bound on the maximum robustness radius.
#[derive(Clone, Debug)]
pub struct UpperBound {
    /// Largest radius (to additive `eps_ub`) still feasible, capped at the
    /// simplex diameter.
    pub value: f64,
    /// True when the relaxation stays feasible at the cap (the bound is
    /// effectively unbounded).
    pub capped: bool,
    /// Decoded matching when the optimizer at `value` is integral.
    pub integral: Option<Matching>,
}

impl UpperBound {
    /// The bound as a radius: capped runs dominate every finite value.
    pub fn radius(&self) -> Radius {
        if self.capped {
            Radius::Unbounded
        } else {
            Radius::Finite(self.value)
        }
    }
}

fn bisect_ub(
    inst: &Instance,
    s: &SalienceProfile,
    k: usize,
    p: Norm,
    eps_ub: f64,
    l2_norm_equivalence: bool,
    extra: &[ExtraConstraint],
) -> Result<UpperBound> {
    if eps_ub <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "eps_ub must be positive, got {eps_ub}"
        )));
    }
    check_l2_flag(p, l2_norm_equivalence)?;
    let coefs = rate_coefficients(inst, s, k, p)?;
    let solve = |r: f64| -> Result<Option<FractionalMatching>> { ub_solve(inst, s, r, &coefs, extra) };
    let cap = p.simplex_diameter();
    if let Some(y) = solve(cap)? {
        return Ok(UpperBound {
            value: cap,
            capped: true,
            integral: y.as_integral(),
        });
    }
    let Some(mut best) = solve(0.0)? else {
        return Err(Error::DegenerateInstance(
            "relaxation infeasible at radius 0; no stable matching exists".into(),
        ));
    };
    let (mut lo, mut hi) = (0.0, cap);
    while hi - lo > eps_ub {
        let mid = 0.5 * (lo + hi);
        match solve(mid)? {
            Some(y) => {
                best = y;
                lo = mid;
            }
            None => hi = mid,
        }
    }
    Ok(UpperBound {
        value: lo,
        capped: false,
        integral: best.as_integral(),
    })
}

/// Global upper bound: no stable matching has an exact radius above
/// `value + eps_ub` (unless capped, in which case the bound is vacuous).
pub fn global_ub(
    inst: &Instance,
    s: &SalienceProfile,
    k: usize,
    p: Norm,
    eps_ub: f64,
    l2_norm_equivalence: bool,
) -> Result<UpperBound> {
    bisect_ub(inst, s, k, p, eps_ub, l2_norm_equivalence, &[])
}

/// Upper bound over the sublattice above `mu_d`: every `b` must do weakly
/// better than in `mu_d`, enforced by zeroing the corresponding `y` entries.
pub fn restricted_ub(
    inst: &Instance,
    s: &SalienceProfile,
    mu_d: &Matching,
    k: usize,
    p: Norm,
    eps_ub: f64,
    l2_norm_equivalence: bool,
) -> Result<UpperBound> {
    let prefs = Prefs::from_instance(inst, s)?;
    let mut extra = Vec::new();
    for b in inst.b_ids() {
        let partner = mu_d.partner_of_b(b);
        for a in inst.a_ids() {
            if prefs.b_prefers(b, partner, a) {
                extra.push(ExtraConstraint::fix(a, b, 0.0));
            }
        }
    }
    bisect_ub(inst, s, k, p, eps_ub, l2_norm_equivalence, &extra)
}

/// Cost lower bound at robustness target `tau`: min-cost point of the
/// polytope intersected with one packing cut per vulnerable cross pair.
/// `None` when the cuts make the LP infeasible.
pub fn cost_lb(
    inst: &Instance,
    s: &SalienceProfile,
    costs: &[Vec<f64>],
    tau: f64,
    k: usize,
    p: Norm,
) -> Result<Option<f64>> {
    if tau < 0.0 {
        return Err(Error::InvalidInput(format!("tau must be >= 0, got {tau}")));
    }
    let mut cuts = Vec::new();
    if tau > 0.0 {
        for a in inst.a_ids() {
            for ap in inst.a_ids() {
                if a == ap {
                    continue;
                }
                // gap to flip b's preference from a' (hypothetical partner)
                // to a
                let gap: Vec<f64> = inst
                    .attributes(ap)
                    .values()
                    .iter()
                    .zip(inst.attributes(a).values())
                    .map(|(x, y)| x - y)
                    .collect();
                for b in inst.b_ids() {
                    let flip = threshold_for_gap(s.row(b), &gap, k, p)?;
                    let vulnerable = match flip {
                        Radius::Finite(r) => r < tau - 1e-9,
                        Radius::Unbounded => false,
                    };
                    if !vulnerable {
                        continue;
                    }
                    for bp in inst.b_ids() {
                        if bp == b || !inst.a_prefers(a, b, bp) {
                            continue;
                        }
                        cuts.push(ExtraConstraint {
                            terms: vec![(a, bp, 1.0), (ap, b, 1.0)],
                            sense: ConstraintSense::Le,
                            rhs: 1.0,
                        });
                    }
                }
            }
        }
    }
    let out = rothblum_feasible(inst, s, Some(costs), &cuts)?;
    Ok(out.feasible.then_some(out.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::fixtures;
    use crate::stable::{deferred_acceptance, Side};
    use crate::TOL;

    #[test]
    fn polytope_contains_stable_points() {
        for inst in [fixtures::appendix_a(), fixtures::two_sm()] {
            let out = rothblum_feasible(&inst, inst.salience(), None, &[]).unwrap();
            assert!(out.feasible);
            let y = out.solution.unwrap();
            for a in inst.a_ids() {
                let sum: f64 = inst.b_ids().map(|b| y.get(a, b)).sum();
                assert!((sum - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn two_sm_cost_objective_reaches_mu_b() {
        let inst = fixtures::two_sm();
        let costs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let out = rothblum_feasible(&inst, inst.salience(), Some(&costs), &[]).unwrap();
        assert!(out.feasible);
        assert!(out.value.abs() < 1e-6, "optimum {}", out.value);
        let mu = out.solution.unwrap().as_integral().unwrap();
        assert_eq!(mu.key(), vec![1, 0]);
    }

    #[test]
    fn forcing_constraint_pins_mu_a() {
        let inst = fixtures::two_sm();
        let extra = [ExtraConstraint::fix(AId(0), BId(0), 1.0)];
        let out = rothblum_feasible(&inst, inst.salience(), None, &extra).unwrap();
        assert!(out.feasible);
        let mu = out.solution.unwrap().as_integral().unwrap();
        assert_eq!(mu.key(), vec![0, 1]);
    }

    #[test]
    fn ub_feasibility_examples() {
        let two = fixtures::two_sm();
        assert!(ub_feasible(&two, two.salience(), 0.05, 2, Norm::LInf, false).unwrap());
        assert!(ub_feasible(&two, two.salience(), 0.0, 2, Norm::LInf, false).unwrap());

        let app = fixtures::appendix_a();
        assert!(!ub_feasible(&app, app.salience(), 0.5, 2, Norm::LInf, false).unwrap());
        assert!(ub_feasible(&app, app.salience(), 0.1, 2, Norm::LInf, false).unwrap());
    }

    #[test]
    fn l2_requires_the_approximation_flag() {
        let app = fixtures::appendix_a();
        assert!(matches!(
            ub_feasible(&app, app.salience(), 0.1, 2, Norm::L2, false),
            Err(Error::Unsupported(_))
        ));
        assert!(ub_feasible(&app, app.salience(), 0.1, 2, Norm::L2, true).is_ok());
    }

    #[test]
    fn global_ub_brackets_appendix_a() {
        // single stable matching with exact radius 0.2; the binding row is
        // (a2, b1) with margin 0.16 and loss rate 0.16 / 0.2 = 0.8, and with
        // a unique (hence integral) polytope point the bound is exact
        let app = fixtures::appendix_a();
        let ub = global_ub(&app, app.salience(), 2, Norm::LInf, 1e-4, false).unwrap();
        assert!(!ub.capped);
        assert!(ub.value >= 0.2 - 1e-4, "ub {} must dominate the exact radius", ub.value);
        assert!((ub.value - 0.2).abs() <= 2e-4, "ub {}", ub.value);
        let mu = ub.integral.expect("unique stable matching is integral");
        assert_eq!(mu.key(), vec![0, 1]);
    }

    #[test]
    fn global_ub_two_sm_capped() {
        let two = fixtures::two_sm();
        let ub = global_ub(&two, two.salience(), 2, Norm::LInf, 1e-4, false).unwrap();
        assert!(ub.capped);
        assert!((ub.value - 1.0).abs() < TOL);
        assert_eq!(ub.radius(), Radius::Unbounded);
    }

    #[test]
    fn restricted_ub_two_sm() {
        let two = fixtures::two_sm();
        let s = two.salience();
        let prefs = Prefs::from_instance(&two, s).unwrap();
        let mu_a = deferred_acceptance(&prefs, Side::A);
        let mu_b = deferred_acceptance(&prefs, Side::B);
        // empty down-set: same as the global bound
        let at_root = restricted_ub(&two, s, &mu_a, 2, Norm::LInf, 1e-4, false).unwrap();
        assert!(at_root.capped);
        // full down-set: sublattice is just mu_B (exact radius 0.1); both
        // blocker rows have margin 0.2 and loss rate 2, so the bound is tight
        let at_top = restricted_ub(&two, s, &mu_b, 2, Norm::LInf, 1e-4, false).unwrap();
        assert!(!at_top.capped);
        assert!(
            at_top.value >= 0.1 - 1e-4 && (at_top.value - 0.1).abs() <= 2e-4,
            "restricted ub {}",
            at_top.value
        );
        assert_eq!(at_top.integral.unwrap().key(), vec![1, 0]);
    }

    #[test]
    fn cost_lb_examples() {
        let two = fixtures::two_sm();
        let s = two.salience();
        let costs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let v0 = cost_lb(&two, s, &costs, 0.0, 2, Norm::LInf).unwrap().unwrap();
        assert!(v0.abs() < 1e-6);
        let v005 = cost_lb(&two, s, &costs, 0.05, 2, Norm::LInf)
            .unwrap()
            .unwrap();
        assert!(v005.abs() < 1e-6, "tau below r*(mu_B): {v005}");
        let v015 = cost_lb(&two, s, &costs, 0.15, 2, Norm::LInf)
            .unwrap()
            .unwrap();
        assert!(v015 <= 2.0 + 1e-6, "lower bound must stay below C*: {v015}");
    }

    #[test]
    fn rate_rows_keep_every_stable_point_feasible() {
        // soundness probe on a case where a positive-part right-hand side
        // underestimates the pairwise threshold: the bound must still
        // dominate the exact radius of every stable matching
        let inst = crate::experiments::random_salience_instance(3, 3, 0xACE0_0006).unwrap();
        let s = inst.salience();
        let prefs = Prefs::from_instance(&inst, s).unwrap();
        let k = 1;
        let p = Norm::L1;
        let ub = global_ub(&inst, s, k, p, 1e-4, false).unwrap();
        for mu in crate::stable::enumerate_stable_bruteforce(&prefs).unwrap() {
            let r = crate::robustness::robustness_radius(&inst, s, &mu, k, p)
                .unwrap()
                .radius;
            if let Radius::Finite(r) = r {
                assert!(
                    ub.capped || r <= ub.value + 1e-4,
                    "exact radius {r} above bound {}",
                    ub.value
                );
            }
        }
    }
}
