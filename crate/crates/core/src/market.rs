//! Market model: instances, salience-induced rankings, stability predicates,
//! and the post-normalized perturbation semantics.

use crate::{Error, Norm, Result, TOL};
use serde::{Deserialize, Serialize};

/// Index of an agent on side `A`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct AId(pub usize);

/// Index of an agent on side `B`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct BId(pub usize);

/// Non-negative attribute scores of an `A`-agent, dimension `m >= 2`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct AttributeVector(Vec<f64>);

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "attribute dimension must be >= 2, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "attribute components must be finite and non-negative, got {v}"
            )));
        }
        Ok(AttributeVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// A point on the probability simplex: non-negative weights summing to 1.
///
/// Construction repairs drift up to [`TOL`] by renormalizing and rejects
/// anything larger.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SalienceVector(Vec<f64>);

impl SalienceVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "salience dimension must be >= 2, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < -TOL) {
            return Err(Error::InvalidInput(format!(
                "salience components must be finite and non-negative, got {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(Error::InvalidInput(format!(
                "salience weights must sum to 1 within {TOL:e} (row sum {sum})"
            )));
        }
        // repair drift only when present, so construction is idempotent and
        // serialized rows survive a parse round-trip bit-for-bit
        let repaired = if (sum - 1.0).abs() <= 1e-12 && weights.iter().all(|w| *w >= 0.0) {
            weights
        } else {
            weights.into_iter().map(|w| w.max(0.0) / sum).collect()
        };
        Ok(SalienceVector(repaired))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// One salience vector per `B`-agent.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SalienceProfile {
    rows: Vec<SalienceVector>,
}

impl SalienceProfile {
    pub fn new(rows: Vec<SalienceVector>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("empty salience profile".into()));
        }
        let m = rows[0].dim();
        if rows.iter().any(|r| r.dim() != m) {
            return Err(Error::DimensionMismatch(
                "salience rows have inconsistent dimensions".into(),
            ));
        }
        Ok(SalienceProfile { rows })
    }

    pub fn row(&self, b: BId) -> &SalienceVector {
        &self.rows[b.0]
    }

    pub fn rows(&self) -> &[SalienceVector] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Copy of the profile with one row replaced.
    pub fn with_row(&self, b: BId, s: SalienceVector) -> SalienceProfile {
        let mut rows = self.rows.clone();
        rows[b.0] = s;
        SalienceProfile { rows }
    }
}

/// A balanced market: `n` agents on each side, attributes and static strict
/// preferences for `A`, a baseline salience profile for `B`, and a public
/// tie-break order over `A`.
#[derive(Clone, Debug)]
pub struct Instance {
    a_names: Vec<String>,
    b_names: Vec<String>,
    attributes: Vec<AttributeVector>,
    a_prefs: Vec<Vec<BId>>,
    salience: SalienceProfile,
    tie_break: Vec<AId>,
    tie_break_pos: Vec<usize>,
}

impl Instance {
    pub fn new(
        a_names: Vec<String>,
        b_names: Vec<String>,
        attributes: Vec<AttributeVector>,
        a_prefs: Vec<Vec<BId>>,
        salience: SalienceProfile,
        tie_break: Vec<AId>,
    ) -> Result<Self> {
        let n = a_names.len();
        if n == 0 || b_names.len() != n {
            return Err(Error::InvalidInput(format!(
                "sides must be nonempty and balanced (|A|={}, |B|={})",
                n,
                b_names.len()
            )));
        }
        if attributes.len() != n {
            return Err(Error::InvalidInput(
                "one attribute vector required per A-agent".into(),
            ));
        }
        let m = attributes[0].dim();
        if attributes.iter().any(|u| u.dim() != m) {
            return Err(Error::DimensionMismatch(
                "attribute vectors have inconsistent dimensions".into(),
            ));
        }
        if salience.len() != n {
            return Err(Error::InvalidInput(
                "one salience row required per B-agent".into(),
            ));
        }
        if salience.rows()[0].dim() != m {
            return Err(Error::DimensionMismatch(format!(
                "salience dimension {} differs from attribute dimension {m}",
                salience.rows()[0].dim()
            )));
        }
        if a_prefs.len() != n {
            return Err(Error::InvalidInput(
                "one preference list required per A-agent".into(),
            ));
        }
        for (i, prefs) in a_prefs.iter().enumerate() {
            if !is_permutation(prefs.iter().map(|b| b.0), n) {
                return Err(Error::InvalidInput(format!(
                    "a_prefs row {i} is not a permutation of B"
                )));
            }
        }
        if !is_permutation(tie_break.iter().map(|a| a.0), n) {
            return Err(Error::InvalidInput(
                "tie_break is not a permutation of A".into(),
            ));
        }
        let mut tie_break_pos = vec![0; n];
        for (pos, a) in tie_break.iter().enumerate() {
            tie_break_pos[a.0] = pos;
        }
        Ok(Instance {
            a_names,
            b_names,
            attributes,
            a_prefs,
            salience,
            tie_break,
            tie_break_pos,
        })
    }

    pub fn n(&self) -> usize {
        self.a_names.len()
    }

    pub fn m(&self) -> usize {
        self.attributes[0].dim()
    }

    pub fn a_name(&self, a: AId) -> &str {
        &self.a_names[a.0]
    }

    pub fn b_name(&self, b: BId) -> &str {
        &self.b_names[b.0]
    }

    pub fn a_names(&self) -> &[String] {
        &self.a_names
    }

    pub fn b_names(&self) -> &[String] {
        &self.b_names
    }

    pub fn attributes(&self, a: AId) -> &AttributeVector {
        &self.attributes[a.0]
    }

    pub fn a_prefs(&self, a: AId) -> &[BId] {
        &self.a_prefs[a.0]
    }

    pub fn salience(&self) -> &SalienceProfile {
        &self.salience
    }

    pub fn tie_break(&self) -> &[AId] {
        &self.tie_break
    }

    pub fn a_ids(&self) -> impl Iterator<Item = AId> {
        (0..self.n()).map(AId)
    }

    pub fn b_ids(&self) -> impl Iterator<Item = BId> {
        (0..self.n()).map(BId)
    }

    /// Rank of `b` in `a`'s static list (0 = most preferred). Derived, not stored.
    pub fn rank_a(&self, a: AId, b: BId) -> usize {
        self.a_prefs[a.0].iter().position(|x| *x == b).unwrap()
    }

    /// True iff `a` strictly prefers `b` to `b2`.
    pub fn a_prefers(&self, a: AId, b: BId, b2: BId) -> bool {
        self.rank_a(a, b) < self.rank_a(a, b2)
    }

    /// The strict total order over `A` induced for `b` by a salience profile:
    /// decreasing score, ties broken by the public tie-break order.
    pub fn induced_ranking(&self, s: &SalienceProfile, b: BId) -> Result<Vec<AId>> {
        if b.0 >= self.n() {
            return Err(Error::InvalidInput(format!("unknown B-agent index {}", b.0)));
        }
        let sv = s.row(b);
        let mut scored: Vec<(AId, f64)> = self
            .a_ids()
            .map(|a| Ok((a, score(sv, &self.attributes[a.0])?)))
            .collect::<Result<_>>()?;
        scored.sort_by(|(a1, v1), (a2, v2)| {
            v2.partial_cmp(v1)
                .unwrap()
                .then(self.tie_break_pos[a1.0].cmp(&self.tie_break_pos[a2.0]))
        });
        Ok(scored.into_iter().map(|(a, _)| a).collect())
    }

    /// `rank[b][a]` positions for all induced rankings under `s`.
    pub fn induced_rank_table(&self, s: &SalienceProfile) -> Result<Vec<Vec<usize>>> {
        let n = self.n();
        let mut table = vec![vec![0; n]; n];
        for b in self.b_ids() {
            for (pos, a) in self.induced_ranking(s, b)?.into_iter().enumerate() {
                table[b.0][a.0] = pos;
            }
        }
        Ok(table)
    }
}

fn is_permutation(ids: impl Iterator<Item = usize>, n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut count = 0;
    for id in ids {
        if id >= n || seen[id] {
            return false;
        }
        seen[id] = true;
        count += 1;
    }
    count == n
}

/// A bijection `A -> B` with a cached inverse.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matching {
    pairs: Vec<BId>,
    inverse: Vec<AId>,
}

impl Matching {
    pub fn new(pairs: Vec<BId>) -> Result<Self> {
        let n = pairs.len();
        if !is_permutation(pairs.iter().map(|b| b.0), n) {
            return Err(Error::InvalidInput("matching is not a bijection".into()));
        }
        let mut inverse = vec![AId(0); n];
        for (a, b) in pairs.iter().enumerate() {
            inverse[b.0] = AId(a);
        }
        Ok(Matching { pairs, inverse })
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn partner_of_a(&self, a: AId) -> BId {
        self.pairs[a.0]
    }

    pub fn partner_of_b(&self, b: BId) -> AId {
        self.inverse[b.0]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (AId, BId)> + '_ {
        self.pairs.iter().enumerate().map(|(a, b)| (AId(a), *b))
    }

    /// Lexicographic key on the pair list, used for canonical ordering.
    pub fn key(&self) -> Vec<usize> {
        self.pairs.iter().map(|b| b.0).collect()
    }
}

/// A post-normalized perturbation of one agent's salience vector.
#[derive(Clone, Debug)]
pub struct Perturbation {
    pub agent: BId,
    /// Support `Q`: coordinates allowed to move freely.
    pub support: Vec<usize>,
    pub new_vector: SalienceVector,
    /// Off-support proportionality factor `lambda > 0`; recorded as 1 when
    /// every off-support coordinate of the base vector is zero.
    pub scale: f64,
}

/// Dot-product score `s . u`.
pub fn score(s: &SalienceVector, u: &AttributeVector) -> Result<f64> {
    if s.dim() != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "salience dim {} vs attribute dim {}",
            s.dim(),
            u.dim()
        )));
    }
    Ok(s.weights().iter().zip(u.values()).map(|(x, y)| x * y).sum())
}

/// True iff `(a, b)` blocks `mu` under profile `s`: `a` strictly prefers `b`
/// to its partner and `b` strictly prefers `a` (induced ranking) to its own.
pub fn is_blocking_pair(
    inst: &Instance,
    s: &SalienceProfile,
    mu: &Matching,
    a: AId,
    b: BId,
) -> Result<bool> {
    if mu.n() != inst.n() {
        return Err(Error::InvalidInput("matching size mismatch".into()));
    }
    let mu_a = mu.partner_of_a(a);
    if mu_a == b {
        return Ok(false);
    }
    if !inst.a_prefers(a, b, mu_a) {
        return Ok(false);
    }
    let ranking = inst.induced_ranking(s, b)?;
    let partner = mu.partner_of_b(b);
    let pos_a = ranking.iter().position(|x| *x == a).unwrap();
    let pos_partner = ranking.iter().position(|x| *x == partner).unwrap();
    Ok(pos_a < pos_partner)
}

/// Stability check: no pair blocks. `O(n^2)` given the rank table.
pub fn is_stable(inst: &Instance, s: &SalienceProfile, mu: &Matching) -> Result<bool> {
    if mu.n() != inst.n() {
        return Err(Error::InvalidInput("matching size mismatch".into()));
    }
    let rank_b = inst.induced_rank_table(s)?;
    for a in inst.a_ids() {
        let mu_a = mu.partner_of_a(a);
        let cutoff = inst.rank_a(a, mu_a);
        for &b in &inst.a_prefs(a)[..cutoff] {
            let partner = mu.partner_of_b(b);
            if rank_b[b.0][a.0] < rank_b[b.0][partner.0] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `H_mu(b)`: the `A`-agents who statically prefer `b` to their current
/// partner. Independent of `b`'s own preferences; never contains `b`'s partner.
pub fn blockers(inst: &Instance, mu: &Matching, b: BId) -> Vec<AId> {
    inst.a_ids()
        .filter(|&a| {
            let mu_a = mu.partner_of_a(a);
            mu_a != b && inst.a_prefers(a, b, mu_a)
        })
        .collect()
}

/// Applies an additive perturbation and renormalizes: `(s + delta) / T`.
pub fn apply_perturbation(s: &SalienceVector, delta: &[f64]) -> Result<SalienceVector> {
    if delta.len() != s.dim() {
        return Err(Error::DimensionMismatch(format!(
            "delta length {} vs salience dim {}",
            delta.len(),
            s.dim()
        )));
    }
    let perturbed: Vec<f64> = s.weights().iter().zip(delta).map(|(x, d)| x + d).collect();
    if let Some(v) = perturbed.iter().find(|v| **v < -TOL) {
        return Err(Error::InvalidInput(format!(
            "perturbed component {v} is negative"
        )));
    }
    let total: f64 = perturbed.iter().sum();
    if total <= 1e-12 {
        return Err(Error::DegeneratePerturbation(total));
    }
    SalienceVector::new(perturbed.into_iter().map(|v| v.max(0.0) / total).collect())
}

/// Post-normalized distance `||s_hat - s||_p`.
pub fn perturbation_distance(s: &SalienceVector, s_hat: &SalienceVector, p: Norm) -> f64 {
    p.dist(s_hat.weights(), s.weights())
}

/// Admissibility of a perturbation for budget `k`, radius `r`, norm `p`:
/// support small enough, off-support proportionality with positive scale,
/// and post-normalized distance within `r`.
pub fn is_admissible(s: &SalienceVector, pert: &Perturbation, k: usize, r: f64, p: Norm) -> bool {
    if pert.support.len() > k || pert.scale <= 0.0 {
        return false;
    }
    let in_support = |i: usize| pert.support.contains(&i);
    for i in 0..s.dim() {
        if !in_support(i) {
            let expected = pert.scale * s.weights()[i];
            if (pert.new_vector.weights()[i] - expected).abs() > TOL {
                return false;
            }
        }
    }
    perturbation_distance(s, &pert.new_vector, p) <= r + TOL
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The 2x2 college-admissions market with GPA/SAT attributes: a unique
    /// stable matching whose critical pair is (a2, b1).
    pub fn appendix_a() -> Instance {
        Instance::new(
            vec!["a1".into(), "a2".into()],
            vec!["b1".into(), "b2".into()],
            vec![
                AttributeVector::new(vec![0.8, 0.2]).unwrap(),
                AttributeVector::new(vec![0.4, 0.6]).unwrap(),
            ],
            vec![vec![BId(0), BId(1)], vec![BId(0), BId(1)]],
            SalienceProfile::new(vec![
                SalienceVector::new(vec![0.7, 0.3]).unwrap(),
                SalienceVector::new(vec![0.3, 0.7]).unwrap(),
            ])
            .unwrap(),
            vec![AId(0), AId(1)],
        )
        .unwrap()
    }

    /// A 2x2 market with opposing preferences: two stable matchings and a
    /// single rotation.
    pub fn two_sm() -> Instance {
        Instance::new(
            vec!["a1".into(), "a2".into()],
            vec!["b1".into(), "b2".into()],
            vec![
                AttributeVector::new(vec![1.0, 0.0]).unwrap(),
                AttributeVector::new(vec![0.0, 1.0]).unwrap(),
            ],
            vec![vec![BId(0), BId(1)], vec![BId(1), BId(0)]],
            SalienceProfile::new(vec![
                SalienceVector::new(vec![0.4, 0.6]).unwrap(),
                SalienceVector::new(vec![0.6, 0.4]).unwrap(),
            ])
            .unwrap(),
            vec![AId(0), AId(1)],
        )
        .unwrap()
    }

    pub fn matching(pairs: &[usize]) -> Matching {
        Matching::new(pairs.iter().map(|&b| BId(b)).collect()).unwrap()
    }
}
