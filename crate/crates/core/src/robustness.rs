//! Robustness of a stable matching against salience perturbations:
//! verification at a fixed radius, pairwise thresholds, the exact radius
//! `r*(mu)`, the dual-norm attribute gap, and the closed-form base inner
//! radius.
//!
//! Throughout, one agent `b` deviates at a time: its salience vector moves to
//! a renormalized `s_hat` touching at most `k` coordinates (the support),
//! with off-support coordinates scaled proportionally. A matching is robust
//! at radius `r` when no such deviation within post-normalized distance `r`
//! creates a blocking pair.

use crate::convex::{pair_feasible, pair_min_radius, PairProgram};
use crate::market::{
    blockers, is_blocking_pair, is_stable, score, AId, BId, Instance, Matching, Perturbation,
    SalienceProfile, SalienceVector,
};
use crate::{Error, Norm, Radius, Result, LAMBDA_MIN, LP_TOL, TOL};

/// Threshold for one candidate blocking pair.
#[derive(Clone, Debug)]
pub struct PairThreshold {
    pub a: AId,
    pub b: BId,
    /// `r_min(b; a)`: minimum over admissible supports.
    pub radius: Radius,
    /// Argmin support (smallest size, then lexicographic).
    pub support: Vec<usize>,
    /// Attaining perturbed vector when finite.
    pub witness: Option<Vec<f64>>,
    pub lambda: f64,
}

/// Exact-radius report for a stable matching.
#[derive(Clone, Debug)]
pub struct RobustnessReport {
    pub radius: Radius,
    /// `(a, b, Q)` attaining the radius, canonical in `(b, a, Q)` order.
    pub critical_pair: Option<(AId, BId, Vec<usize>)>,
    /// Perturbation attaining the radius.
    pub witness: Option<Perturbation>,
    /// One entry per `(b, a in blockers(b))`, sorted by `(b, a)`.
    pub per_pair: Vec<PairThreshold>,
}

/// A deviation that creates a blocking pair.
#[derive(Clone, Debug)]
pub struct BlockingWitness {
    pub b: BId,
    pub a: AId,
    pub support: Vec<usize>,
    pub s_hat: SalienceVector,
    pub distance: f64,
    /// False when the pair already blocks under the unperturbed profile.
    pub perturbed: bool,
}

/// Verification outcome.
#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub robust: bool,
    pub witness: Option<BlockingWitness>,
}

fn check_budget(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::InvalidInput(format!(
            "support budget k={k} must satisfy 1 <= k <= m={m}"
        )));
    }
    Ok(())
}

/// Supports of size `1..=k` in canonical order: by size, then lexicographic.
fn supports(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        let start = cur.last().map_or(0, |&x| x + 1);
        for i in start..m {
            cur.push(i);
            extend(m, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=k {
        extend(m, size, &mut Vec::new(), &mut out);
    }
    out
}

/// Minimum radius over supports of size at most `k` at which `base` can be
/// perturbed to make `gap . s_hat <= 0`. Shared by pairwise thresholds and
/// the relaxation's vulnerability-cut trigger.
pub(crate) fn threshold_for_gap(
    base: &SalienceVector,
    gap: &[f64],
    k: usize,
    p: Norm,
) -> Result<Radius> {
    let mut best = Radius::Unbounded;
    for q in supports(base.dim(), k) {
        let sol = pair_min_radius(&PairProgram {
            base: base.clone(),
            gap: gap.to_vec(),
            support: q,
            norm: p,
        })?;
        best = best.min(sol.radius);
    }
    Ok(best)
}

fn gap_vector(inst: &Instance, mu: &Matching, b: BId, a: AId) -> Vec<f64> {
    let partner = mu.partner_of_b(b);
    inst.attributes(partner)
        .values()
        .iter()
        .zip(inst.attributes(a).values())
        .map(|(p, q)| p - q)
        .collect()
}

/// `U_{p*}(b)`: the largest dual-norm gap between `b`'s partner and any other
/// candidate's attribute vector.
pub fn dual_gap(inst: &Instance, mu: &Matching, b: BId, p: Norm) -> Result<f64> {
    if inst.n() < 2 {
        return Err(Error::Precondition(
            "dual gap needs at least two candidates".into(),
        ));
    }
    let dual = p.dual();
    let partner = mu.partner_of_b(b);
    let max = inst
        .a_ids()
        .filter(|&a| a != partner)
        .map(|a| dual.dist(inst.attributes(partner).values(), inst.attributes(a).values()))
        .fold(0.0f64, f64::max);
    if max <= TOL {
        return Err(Error::DegenerateInstance(
            "all attribute vectors coincide with the partner's".into(),
        ));
    }
    Ok(max)
}

/// Minimum radius at which `(a, b)` can start blocking, over all supports of
/// size at most `k`.
pub fn pair_threshold(
    inst: &Instance,
    s: &SalienceProfile,
    mu: &Matching,
    b: BId,
    a: AId,
    k: usize,
    p: Norm,
) -> Result<PairThreshold> {
    check_budget(k, inst.m())?;
    if !blockers(inst, mu, b).contains(&a) {
        return Err(Error::Precondition(format!(
            "a{} does not statically prefer b{} to its partner; the pair can never block",
            a.0, b.0
        )));
    }
    let gap = gap_vector(inst, mu, b, a);
    let base = s.row(b).clone();
    let mut best: Option<(Radius, Vec<usize>, Option<Vec<f64>>, f64)> = None;
    for q in supports(inst.m(), k) {
        let sol = pair_min_radius(&PairProgram {
            base: base.clone(),
            gap: gap.clone(),
            support: q.clone(),
            norm: p,
        })?;
        let better = match (&best, &sol.radius) {
            (None, _) => sol.radius.is_finite(),
            (Some((Radius::Finite(cur), ..)), Radius::Finite(new)) => *new < cur - 1e-12,
            (Some(_), _) => false,
        };
        if better {
            best = Some((sol.radius, q, sol.witness, sol.lambda));
        }
    }
    match best {
        Some((radius, support, witness, lambda)) => Ok(PairThreshold {
            a,
            b,
            radius,
            support,
            witness,
            lambda,
        }),
        None => Ok(PairThreshold {
            a,
            b,
            radius: Radius::Unbounded,
            support: Vec::new(),
            witness: None,
            lambda: 1.0,
        }),
    }
}

/// Exact robustness radius `r*(mu)`: the minimum pairwise threshold over all
/// `b` and `a in blockers(b)`.
pub fn robustness_radius(
    inst: &Instance,
    s: &SalienceProfile,
    mu: &Matching,
    k: usize,
    p: Norm,
) -> Result<RobustnessReport> {
    check_budget(k, inst.m())?;
    if !is_stable(inst, s, mu)? {
        return Err(Error::Precondition(
            "matching is unstable at the base profile; the radius is undefined".into(),
        ));
    }
    let mut per_pair = Vec::new();
    for b in inst.b_ids() {
        for a in blockers(inst, mu, b) {
            per_pair.push(pair_threshold(inst, s, mu, b, a, k, p)?);
        }
    }
    // canonical critical pair: smallest radius, ties by (b, a, Q-lex);
    // per_pair is already in (b, a) order and thresholds carry canonical Q
    let mut radius = Radius::Unbounded;
    let mut critical: Option<&PairThreshold> = None;
    for t in &per_pair {
        if let Radius::Finite(v) = t.radius {
            if radius.finite().map_or(true, |cur| v < cur - 1e-12) {
                radius = Radius::Finite(v);
                critical = Some(t);
            }
        }
    }
    let (critical_pair, witness) = match critical {
        Some(t) => (
            Some((t.a, t.b, t.support.clone())),
            t.witness.as_ref().map(|w| Perturbation {
                agent: t.b,
                support: t.support.clone(),
                new_vector: SalienceVector::new(w.clone())
                    .expect("threshold witness lies on the simplex"),
                scale: t.lambda,
            }),
        ),
        None => (None, None),
    };
    Ok(RobustnessReport {
        radius,
        critical_pair,
        witness,
        per_pair,
    })
}

/// Checks `(k, r, p)`-robustness; on failure returns a deviation witness
/// together with the blocking pair it creates.
pub fn verify_robust(
    inst: &Instance,
    s: &SalienceProfile,
    mu: &Matching,
    k: usize,
    r: f64,
    p: Norm,
) -> Result<VerifyOutcome> {
    check_budget(k, inst.m())?;
    if r < 0.0 {
        return Err(Error::InvalidInput(format!("radius must be >= 0, got {r}")));
    }
    if !is_stable(inst, s, mu)? {
        // robustness at any radius implies stability; report the unperturbed
        // blocking pair
        for b in inst.b_ids() {
            for a in blockers(inst, mu, b) {
                if is_blocking_pair(inst, s, mu, a, b)? {
                    return Ok(VerifyOutcome {
                        robust: false,
                        witness: Some(BlockingWitness {
                            b,
                            a,
                            support: Vec::new(),
                            s_hat: s.row(b).clone(),
                            distance: 0.0,
                            perturbed: false,
                        }),
                    });
                }
            }
        }
        unreachable!("unstable matching must have a blocking pair");
    }
    for b in inst.b_ids() {
        for a in blockers(inst, mu, b) {
            let gap = gap_vector(inst, mu, b, a);
            for q in supports(inst.m(), k) {
                let prog = PairProgram {
                    base: s.row(b).clone(),
                    gap: gap.clone(),
                    support: q.clone(),
                    norm: p,
                };
                let feas = pair_feasible(&prog, r)?;
                if feas.feasible {
                    let (s_hat_raw, lambda) = feas.witness.expect("feasible LP carries a witness");
                    let (s_hat, _) =
                        strengthen_witness(s.row(b), &s_hat_raw, lambda, &gap, r, p);
                    let s_hat = SalienceVector::new(s_hat)
                        .expect("strengthened witness lies on the simplex");
                    let distance = p.dist(s_hat.weights(), s.row(b).weights());
                    return Ok(VerifyOutcome {
                        robust: false,
                        witness: Some(BlockingWitness {
                            b,
                            a,
                            support: q,
                            s_hat,
                            distance,
                            perturbed: true,
                        }),
                    });
                }
            }
        }
    }
    Ok(VerifyOutcome {
        robust: true,
        witness: None,
    })
}

/// Pushes a boundary witness (margin exactly zero) further along the ray from
/// `s`, staying admissible within radius `r`, so the blocking margin becomes
/// strictly negative whenever the geometry allows it.
fn strengthen_witness(
    s: &SalienceVector,
    s_hat: &[f64],
    lambda: f64,
    gap: &[f64],
    r: f64,
    p: Norm,
) -> (Vec<f64>, f64) {
    let base = s.weights();
    let dir: Vec<f64> = s_hat.iter().zip(base).map(|(h, s)| h - s).collect();
    let dist = p.eval(&dir);
    if dist <= TOL {
        return (s_hat.to_vec(), lambda);
    }
    let mut t = r / dist;
    for (i, &d) in dir.iter().enumerate() {
        if d < -TOL {
            t = t.min(base[i] / -d);
        }
    }
    if lambda < 1.0 {
        t = t.min((1.0 - LAMBDA_MIN) / (1.0 - lambda));
    }
    t = t.max(1.0);
    let cand: Vec<f64> = base
        .iter()
        .zip(&dir)
        .map(|(s, d)| (s + t * d).max(0.0))
        .collect();
    let old_margin: f64 = s_hat.iter().zip(gap).map(|(x, g)| x * g).sum();
    let new_margin: f64 = cand.iter().zip(gap).map(|(x, g)| x * g).sum();
    if new_margin <= old_margin + TOL && p.dist(&cand, base) <= r + LP_TOL {
        (cand, 1.0 + t * (lambda - 1.0))
    } else {
        (s_hat.to_vec(), lambda)
    }
}

/// Closed-form base inner radius: `(1 - eps) * min_b min_a gamma(b; a) /
/// U_{p*}(b)`, the inner minimum running over every candidate ranked below
/// `b`'s partner in its induced list. `Unbounded` when the minimum is empty.
pub fn base_radius(
    inst: &Instance,
    s: &SalienceProfile,
    mu: &Matching,
    p: Norm,
    eps_base: f64,
) -> Result<Radius> {
    if !(0.0..1.0).contains(&eps_base) {
        return Err(Error::InvalidInput(format!(
            "eps_base must lie in [0, 1), got {eps_base}"
        )));
    }
    if !is_stable(inst, s, mu)? {
        return Err(Error::Precondition(
            "base radius requires a stable matching".into(),
        ));
    }
    if inst.n() < 2 {
        return Ok(Radius::Unbounded);
    }
    let mut min_ratio = f64::INFINITY;
    for b in inst.b_ids() {
        let u_dual = dual_gap(inst, mu, b, p)?;
        let partner = mu.partner_of_b(b);
        let ranking = inst.induced_ranking(s, b)?;
        let partner_pos = ranking.iter().position(|&x| x == partner).unwrap();
        let partner_score = score(s.row(b), inst.attributes(partner))?;
        for &a in &ranking[partner_pos + 1..] {
            let gamma = partner_score - score(s.row(b), inst.attributes(a))?;
            min_ratio = min_ratio.min(gamma / u_dual);
        }
    }
    if min_ratio.is_infinite() {
        return Ok(Radius::Unbounded);
    }
    Ok(Radius::Finite((1.0 - eps_base) * min_ratio.max(0.0)))
}
