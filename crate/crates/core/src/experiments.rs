//! Random-market generation and the one-swap robustness study: how often a
//! stable matching survives a single adjacent transposition in one `b`'s
//! preference list.
//!
//! The fast path rests on a local argument: an adjacent swap in `b`'s list
//! changes the relative order of exactly one pair of candidates, and a new
//! blocking pair for `mu` can only appear when `b`'s partner is demoted below
//! its immediate successor while that successor already prefers `b`. The
//! naive all-swaps recheck stays available and is cross-validated in tests.

use crate::market::{
    AId, AttributeVector, BId, Instance, Matching, SalienceProfile, SalienceVector,
};
use crate::stable::{
    build_rotation_poset, deferred_acceptance, is_stable_prefs, Prefs, Side,
};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A purely ordinal market: strict preference lists on both sides.
#[derive(Clone, Debug)]
pub struct OrdinalInstance {
    prefs: Prefs,
    pub seed: u64,
}

impl OrdinalInstance {
    pub fn prefs(&self) -> &Prefs {
        &self.prefs
    }

    pub fn n(&self) -> usize {
        self.prefs.n()
    }
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

/// Uniform i.i.d. preference lists on both sides, deterministic in `seed`.
pub fn random_ordinal_instance(n: usize, seed: u64) -> Result<OrdinalInstance> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_list = (0..n)
        .map(|_| random_permutation(&mut rng, n).into_iter().map(BId).collect())
        .collect();
    let b_list = (0..n)
        .map(|_| random_permutation(&mut rng, n).into_iter().map(AId).collect())
        .collect();
    Ok(OrdinalInstance {
        prefs: Prefs::new(a_list, b_list)?,
        seed,
    })
}

/// Random salience-model market: attributes uniform on `[0,1]^m`, salience
/// uniform on the simplex (flat Dirichlet), uniform `A`-side lists, identity
/// tie-break.
pub fn random_salience_instance(n: usize, m: usize, seed: u64) -> Result<Instance> {
    if n == 0 || m < 2 {
        return Err(Error::InvalidInput(format!(
            "need n >= 1 and m >= 2, got n={n}, m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attributes = (0..n)
        .map(|_| AttributeVector::new((0..m).map(|_| rng.gen::<f64>()).collect()))
        .collect::<Result<Vec<_>>>()?;
    let salience = (0..n)
        .map(|_| {
            // flat Dirichlet: normalized unit exponentials
            let mut v: Vec<f64> = (0..m)
                .map(|_| -(rng.gen_range(f64::MIN_POSITIVE..1.0)).ln())
                .collect();
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= t);
            SalienceVector::new(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let a_prefs = (0..n)
        .map(|_| random_permutation(&mut rng, n).into_iter().map(BId).collect())
        .collect();
    Instance::new(
        (1..=n).map(|i| format!("a{i}")).collect(),
        (1..=n).map(|i| format!("b{i}")).collect(),
        attributes,
        a_prefs,
        SalienceProfile::new(salience)?,
        (0..n).map(AId).collect(),
    )
}

/// Fast one-swap robustness check over `B`-side adjacent swaps: for each `b`,
/// the only dangerous swap demotes `b`'s partner below its immediate
/// successor, and it blocks iff that successor prefers `b` to its own match.
pub fn is_one_swap_robust(inst: &OrdinalInstance, mu: &Matching) -> Result<bool> {
    let prefs = &inst.prefs;
    if !is_stable_prefs(prefs, mu) {
        return Err(Error::Precondition(
            "one-swap robustness is defined for stable matchings".into(),
        ));
    }
    for b in 0..prefs.n() {
        let b = BId(b);
        let partner = mu.partner_of_b(b);
        let pos = prefs.b_rank(b, partner);
        if pos + 1 >= prefs.n() {
            continue; // partner ranked last: no demoting swap exists
        }
        let successor = prefs.b_list(b)[pos + 1];
        // successor in D_b(mu): it prefers b to its current partner
        if prefs.a_rank(successor, b) < prefs.a_rank(successor, mu.partner_of_a(successor)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `A`-side analogue of the fast path, exposed behind an explicit call (the
/// study itself only swaps `B`-side lists).
pub fn is_one_swap_robust_a_side(inst: &OrdinalInstance, mu: &Matching) -> Result<bool> {
    let prefs = &inst.prefs;
    if !is_stable_prefs(prefs, mu) {
        return Err(Error::Precondition(
            "one-swap robustness is defined for stable matchings".into(),
        ));
    }
    for a in 0..prefs.n() {
        let a = AId(a);
        let partner = mu.partner_of_a(a);
        let pos = prefs.a_rank(a, partner);
        if pos + 1 >= prefs.n() {
            continue;
        }
        let successor = prefs.a_list(a)[pos + 1];
        if prefs.b_rank(successor, a) < prefs.b_rank(successor, mu.partner_of_b(successor)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Oracle: re-checks stability after every adjacent transposition in every
/// `b`'s list. Quadratically slower than the fast path; kept for validation.
pub fn is_one_swap_robust_naive(inst: &OrdinalInstance, mu: &Matching) -> Result<bool> {
    let prefs = &inst.prefs;
    if !is_stable_prefs(prefs, mu) {
        return Err(Error::Precondition(
            "one-swap robustness is defined for stable matchings".into(),
        ));
    }
    let n = prefs.n();
    let a_list: Vec<Vec<BId>> = (0..n).map(|a| prefs.a_list(AId(a)).to_vec()).collect();
    for b in 0..n {
        for i in 0..n.saturating_sub(1) {
            let mut b_list: Vec<Vec<AId>> = (0..n).map(|x| prefs.b_list(BId(x)).to_vec()).collect();
            b_list[b].swap(i, i + 1);
            let swapped = Prefs::new(a_list.clone(), b_list)?;
            if !is_stable_prefs(&swapped, mu) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Which matchings the sweep tests per instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// At least one enumerated stable matching is one-swap robust.
    AnyStable,
    /// The B-optimal matching is one-swap robust.
    BOptimal,
}

impl std::fmt::Display for SweepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepMode::AnyStable => "any-stable",
            SweepMode::BOptimal => "b-optimal",
        })
    }
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any-stable" => Ok(SweepMode::AnyStable),
            "b-optimal" => Ok(SweepMode::BOptimal),
            other => Err(Error::InvalidInput(format!(
                "mode must be any-stable or b-optimal, got {other}"
            ))),
        }
    }
}

/// One sweep result row.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub n: usize,
    pub trials: usize,
    pub mode: SweepMode,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

fn derive_seed(base: u64, n: usize, trial: usize) -> u64 {
    // splitmix-style mixing keeps trials independent and order-free
    let mut z = base
        .wrapping_add((n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((trial as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const ANY_STABLE_N_CAP: usize = 10;

fn trial_hit(inst: &OrdinalInstance, mode: SweepMode) -> Result<bool> {
    match mode {
        SweepMode::BOptimal => {
            let mu = deferred_acceptance(inst.prefs(), Side::B);
            is_one_swap_robust(inst, &mu)
        }
        SweepMode::AnyStable => {
            let poset = build_rotation_poset(inst.prefs())?;
            for d in poset.all_down_sets()? {
                let mu = poset.matching_of(inst.prefs(), d)?;
                if is_one_swap_robust(inst, &mu)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Per-`n` fraction of random instances passing the mode's robustness event,
/// with normal-approximation 95% binomial confidence bounds.
pub fn one_swap_sweep(
    n_values: &[usize],
    trials: usize,
    seed: u64,
    mode: SweepMode,
) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if mode == SweepMode::AnyStable && n > ANY_STABLE_N_CAP {
            return Err(Error::GuardExceeded {
                op: "one_swap_sweep any-stable enumeration".into(),
                size: n,
                cap: ANY_STABLE_N_CAP,
            });
        }
        let mut hits = 0usize;
        for t in 0..trials {
            let inst = random_ordinal_instance(n, derive_seed(seed, n, t))?;
            if trial_hit(&inst, mode)? {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        let half = 1.96 * (p * (1.0 - p) / trials as f64).sqrt();
        rows.push(SweepRow {
            n,
            trials,
            mode,
            fraction: p,
            ci_low: (p - half).max(0.0),
            ci_high: (p + half).min(1.0),
            seed,
        });
    }
    Ok(rows)
}

/// Sweep rows as CSV with a header line.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,trials,mode,fraction,ci_low,ci_high,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.9},{:.9},{:.9},{}\n",
            r.n, r.trials, r.mode, r.fraction, r.ci_low, r.ci_high, r.seed
        ));
    }
    out
}
