//! Ordinal stable-matching machinery: deferred acceptance, brute-force
//! enumeration for small instances, and the rotation poset whose down-sets
//! index the full lattice of stable matchings.
//!
//! Everything here works on plain rank tables (`Prefs`), so it serves both
//! salience-induced markets and purely ordinal ones.

use crate::market::{AId, BId, Instance, Matching, SalienceProfile};
use crate::{Error, Result};
use std::collections::HashMap;

/// Guard for brute-force enumeration over all `n!` assignments.
const BRUTE_FORCE_CAP: usize = 8;

/// Guard for the number of rotations representable in a down-set bitmask.
const ROTATION_CAP: usize = 64;

/// Guard for explicit down-set enumeration.
pub const DOWNSET_CAP: usize = 1_000_000;

/// Complete strict preferences for both sides as lists and rank tables.
#[derive(Clone, Debug)]
pub struct Prefs {
    n: usize,
    a_list: Vec<Vec<BId>>,
    b_list: Vec<Vec<AId>>,
    a_rank: Vec<Vec<usize>>,
    b_rank: Vec<Vec<usize>>,
}

impl Prefs {
    pub fn new(a_list: Vec<Vec<BId>>, b_list: Vec<Vec<AId>>) -> Result<Self> {
        let n = a_list.len();
        if b_list.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} a-lists vs {} b-lists",
                n,
                b_list.len()
            )));
        }
        let mut a_rank = vec![vec![usize::MAX; n]; n];
        for (a, list) in a_list.iter().enumerate() {
            if list.len() != n {
                return Err(Error::InvalidInput(format!("a{a} list length != {n}")));
            }
            for (pos, b) in list.iter().enumerate() {
                if b.0 >= n || a_rank[a][b.0] != usize::MAX {
                    return Err(Error::InvalidInput(format!(
                        "a{a} preference list is not a permutation"
                    )));
                }
                a_rank[a][b.0] = pos;
            }
        }
        let mut b_rank = vec![vec![usize::MAX; n]; n];
        for (b, list) in b_list.iter().enumerate() {
            if list.len() != n {
                return Err(Error::InvalidInput(format!("b{b} list length != {n}")));
            }
            for (pos, a) in list.iter().enumerate() {
                if a.0 >= n || b_rank[b][a.0] != usize::MAX {
                    return Err(Error::InvalidInput(format!(
                        "b{b} preference list is not a permutation"
                    )));
                }
                b_rank[b][a.0] = pos;
            }
        }
        Ok(Prefs {
            n,
            a_list,
            b_list,
            a_rank,
            b_rank,
        })
    }

    /// Rank tables induced by a salience profile (B ranks A by weighted
    /// score, ties broken by the public order).
    pub fn from_instance(inst: &Instance, s: &SalienceProfile) -> Result<Self> {
        let a_list = inst.a_ids().map(|a| inst.a_prefs(a).to_vec()).collect();
        let b_list = inst
            .b_ids()
            .map(|b| inst.induced_ranking(s, b))
            .collect::<Result<Vec<_>>>()?;
        Prefs::new(a_list, b_list)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a_list(&self, a: AId) -> &[BId] {
        &self.a_list[a.0]
    }

    pub fn b_list(&self, b: BId) -> &[AId] {
        &self.b_list[b.0]
    }

    pub fn a_rank(&self, a: AId, b: BId) -> usize {
        self.a_rank[a.0][b.0]
    }

    pub fn b_rank(&self, b: BId, a: AId) -> usize {
        self.b_rank[b.0][a.0]
    }

    pub fn a_prefers(&self, a: AId, b: BId, over: BId) -> bool {
        self.a_rank[a.0][b.0] < self.a_rank[a.0][over.0]
    }

    pub fn b_prefers(&self, b: BId, a: AId, over: AId) -> bool {
        self.b_rank[b.0][a.0] < self.b_rank[b.0][over.0]
    }

    /// Preferences with the two sides swapped.
    fn transposed(&self) -> Prefs {
        Prefs {
            n: self.n,
            a_list: self
                .b_list
                .iter()
                .map(|l| l.iter().map(|a| BId(a.0)).collect())
                .collect(),
            b_list: self
                .a_list
                .iter()
                .map(|l| l.iter().map(|b| AId(b.0)).collect())
                .collect(),
            a_rank: self.b_rank.clone(),
            b_rank: self.a_rank.clone(),
        }
    }
}

/// Which side proposes in deferred acceptance.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    A,
    B,
}

/// Gale–Shapley deferred acceptance. The proposing side gets its optimal
/// stable matching; the receiving side its pessimal one.
pub fn deferred_acceptance(prefs: &Prefs, proposing: Side) -> Matching {
    match proposing {
        Side::A => da_a_proposing(prefs),
        Side::B => {
            let mu = da_a_proposing(&prefs.transposed());
            // invert: in the transposed run, "a" indices are the real b's
            let mut pairs = vec![BId(usize::MAX); prefs.n];
            for b in 0..prefs.n {
                let a = mu.partner_of_a(AId(b));
                pairs[a.0] = BId(b);
            }
            Matching::new(pairs).expect("permutation by construction")
        }
    }
}

fn da_a_proposing(prefs: &Prefs) -> Matching {
    let n = prefs.n;
    let mut next = vec![0usize; n];
    let mut b_holds: Vec<Option<AId>> = vec![None; n];
    let mut free: Vec<AId> = (0..n).rev().map(AId).collect();
    while let Some(a) = free.pop() {
        let b = prefs.a_list[a.0][next[a.0]];
        next[a.0] += 1;
        match b_holds[b.0] {
            None => b_holds[b.0] = Some(a),
            Some(held) => {
                if prefs.b_prefers(b, a, held) {
                    b_holds[b.0] = Some(a);
                    free.push(held);
                } else {
                    free.push(a);
                }
            }
        }
    }
    let mut pairs = vec![BId(usize::MAX); n];
    for (b, held) in b_holds.iter().enumerate() {
        pairs[held.unwrap().0] = BId(b);
    }
    Matching::new(pairs).expect("deferred acceptance yields a permutation")
}

/// Stability against plain rank tables.
pub fn is_stable_prefs(prefs: &Prefs, mu: &Matching) -> bool {
    for a in 0..prefs.n {
        let a = AId(a);
        let matched = mu.partner_of_a(a);
        for &b in prefs.a_list(a) {
            if b == matched {
                break;
            }
            if prefs.b_prefers(b, a, mu.partner_of_b(b)) {
                return false;
            }
        }
    }
    true
}

/// All stable matchings by checking every permutation; guarded at `n <= 8`.
/// Results are sorted by matching key for determinism.
pub fn enumerate_stable_bruteforce(prefs: &Prefs) -> Result<Vec<Matching>> {
    let n = prefs.n;
    if n > BRUTE_FORCE_CAP {
        return Err(Error::GuardExceeded {
            op: "enumerate_stable_bruteforce",
            size: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let mu = Matching::new(p.iter().map(|&b| BId(b)).collect()).unwrap();
        if is_stable_prefs(prefs, &mu) {
            out.push(mu);
        }
    });
    out.sort_by_key(|mu| mu.key());
    Ok(out)
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// A rotation: a cyclic list of matched pairs `(a_i, b_i)` such that
/// eliminating it reassigns each `b_i` to `a_{i+1}` (indices mod the cycle
/// length). Every B weakly improves and every A weakly worsens.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rotation {
    pub pairs: Vec<(AId, BId)>,
}

impl Rotation {
    /// Rotates the cycle so the smallest a-index leads; cyclic order is
    /// preserved, making equal rotations compare equal.
    fn canonical(mut pairs: Vec<(AId, BId)>) -> Rotation {
        let lead = pairs
            .iter()
            .enumerate()
            .min_by_key(|(_, (a, _))| a.0)
            .map(|(i, _)| i)
            .unwrap();
        pairs.rotate_left(lead);
        Rotation { pairs }
    }

    fn key(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|(a, b)| (a.0, b.0)).collect()
    }
}

/// Rotations exposed at `mu`: for each a, scan down a's list for the first b
/// below the current partner that would accept a; cycles of the induced
/// successor map are the exposed rotations.
pub fn exposed_rotations(prefs: &Prefs, mu: &Matching) -> Vec<Rotation> {
    let n = prefs.n;
    // next[a] = partner of the first b below mu(a) on a's list preferring a
    let mut next = vec![None; n];
    for a in 0..n {
        let a_id = AId(a);
        let start = prefs.a_rank(a_id, mu.partner_of_a(a_id)) + 1;
        for &b in &prefs.a_list[a][start..] {
            if prefs.b_prefers(b, a_id, mu.partner_of_b(b)) {
                next[a] = Some(mu.partner_of_b(b).0);
                break;
            }
        }
    }
    // cycles of the successor map, in GI orientation a_0 -> a_1 -> ...
    let mut state = vec![0u8; n]; // 0 unvisited, 1 on path, 2 done
    let mut rotations = Vec::new();
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            state[cur] = 1;
            path.push(cur);
            match next[cur] {
                Some(succ) if state[succ] == 0 => cur = succ,
                Some(succ) if state[succ] == 1 => {
                    let pos = path.iter().position(|&x| x == succ).unwrap();
                    let cycle = &path[pos..];
                    // spec orientation: reverse the tail so elimination maps
                    // b_i to a_{i+1}
                    let mut pairs = vec![(AId(cycle[0]), mu.partner_of_a(AId(cycle[0])))];
                    for &a in cycle[1..].iter().rev() {
                        pairs.push((AId(a), mu.partner_of_a(AId(a))));
                    }
                    rotations.push(Rotation::canonical(pairs));
                    break;
                }
                _ => break,
            }
        }
        for &a in &path {
            state[a] = 2;
        }
    }
    rotations.sort_by_key(|r| r.key());
    rotations
}

/// Applies an exposed rotation, moving each `b_i` to `a_{i+1}`.
pub fn eliminate(prefs: &Prefs, mu: &Matching, rho: &Rotation) -> Result<Matching> {
    for (a, b) in &rho.pairs {
        if mu.partner_of_a(*a) != *b {
            return Err(Error::Precondition(format!(
                "rotation pair (a{}, b{}) is not matched in the given matching",
                a.0, b.0
            )));
        }
    }
    if !exposed_rotations(prefs, mu).contains(rho) {
        return Err(Error::Precondition(
            "rotation is not exposed at the given matching".into(),
        ));
    }
    let l = rho.pairs.len();
    let mut pairs: Vec<BId> = (0..prefs.n).map(|a| mu.partner_of_a(AId(a))).collect();
    for i in 0..l {
        let (_, b) = rho.pairs[i];
        let (a_next, _) = rho.pairs[(i + 1) % l];
        pairs[a_next.0] = b;
    }
    Matching::new(pairs)
}

/// A down-set of the rotation poset, as a bitmask over rotation indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct DownSet(pub u64);

impl DownSet {
    pub fn empty() -> DownSet {
        DownSet(0)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn insert(self, i: usize) -> DownSet {
        DownSet(self.0 | (1 << i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self, total: usize) -> impl Iterator<Item = usize> {
        (0..total).filter(move |&i| self.contains(i))
    }
}

/// The rotation poset of a stable-matching instance. Down-sets are in
/// bijection with stable matchings; the empty set is the A-optimal matching
/// and the full set the B-optimal one.
#[derive(Clone, Debug)]
pub struct RotationPoset {
    pub rotations: Vec<Rotation>,
    /// `leq[i][j]` iff rotation i precedes (or equals) rotation j.
    pub leq: Vec<Vec<bool>>,
    /// Covering pairs `(i, j)`: i is an immediate predecessor of j.
    pub covers: Vec<(usize, usize)>,
    pub mu_a: Matching,
    pub mu_b: Matching,
}

impl RotationPoset {
    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// True when the mask is closed downward.
    pub fn is_down_set(&self, d: DownSet) -> bool {
        for j in d.iter(self.len()) {
            for i in 0..self.len() {
                if i != j && self.leq[i][j] && !d.contains(i) {
                    return false;
                }
            }
        }
        true
    }

    /// The stable matching reached by eliminating exactly the rotations in
    /// `d`, starting from the A-optimal matching.
    pub fn matching_of(&self, prefs: &Prefs, d: DownSet) -> Result<Matching> {
        if !self.is_down_set(d) {
            return Err(Error::Precondition(
                "rotation set is not downward closed".into(),
            ));
        }
        let index: HashMap<Vec<(usize, usize)>, usize> = self
            .rotations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.key(), i))
            .collect();
        let mut mu = self.mu_a.clone();
        let mut remaining = d;
        while !remaining.is_empty() {
            let mut progressed = false;
            for rho in exposed_rotations(prefs, &mu) {
                let Some(&i) = index.get(&rho.key()) else {
                    continue;
                };
                if remaining.contains(i) {
                    mu = eliminate(prefs, &mu, &rho)?;
                    remaining = DownSet(remaining.0 & !(1 << i));
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                return Err(Error::Precondition(
                    "down-set elimination stalled; poset and matching disagree".into(),
                ));
            }
        }
        Ok(mu)
    }

    /// Minimal elements not yet in `d` whose predecessors all lie in `d`.
    pub fn addable(&self, d: DownSet) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| {
                !d.contains(j)
                    && (0..self.len()).all(|i| i == j || !self.leq[i][j] || d.contains(i))
            })
            .collect()
    }

    /// Every down-set (hence every stable matching), capped at
    /// [`DOWNSET_CAP`]; sorted by mask for determinism.
    pub fn all_down_sets(&self) -> Result<Vec<DownSet>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![DownSet::empty()];
        seen.insert(DownSet::empty());
        while let Some(d) = stack.pop() {
            for j in self.addable(d) {
                let nd = d.insert(j);
                if seen.insert(nd) {
                    if seen.len() > DOWNSET_CAP {
                        return Err(Error::GuardExceeded {
                            op: "all_down_sets",
                            size: seen.len(),
                            cap: DOWNSET_CAP,
                        });
                    }
                    stack.push(nd);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }
}

/// Builds the rotation poset by eliminating one chain from the A-optimal to
/// the B-optimal matching (which meets every rotation exactly once), then
/// recovering precedence: the rotations reachable while avoiding `rho` are
/// exactly those not above it.
pub fn build_rotation_poset(prefs: &Prefs) -> Result<RotationPoset> {
    let mu_a = deferred_acceptance(prefs, Side::A);
    let mu_b = deferred_acceptance(prefs, Side::B);

    let mut rotations: Vec<Rotation> = Vec::new();
    let mut mu = mu_a.clone();
    loop {
        let exposed = exposed_rotations(prefs, &mu);
        let Some(rho) = exposed.into_iter().next() else {
            break;
        };
        mu = eliminate(prefs, &mu, &rho)?;
        rotations.push(rho);
    }
    debug_assert_eq!(mu.key(), mu_b.key());
    if rotations.len() > ROTATION_CAP {
        return Err(Error::GuardExceeded {
            op: "build_rotation_poset",
            size: rotations.len(),
            cap: ROTATION_CAP,
        });
    }
    rotations.sort_by_key(|r| r.key());
    let index: HashMap<Vec<(usize, usize)>, usize> = rotations
        .iter()
        .enumerate()
        .map(|(i, r)| (r.key(), i))
        .collect();

    let r = rotations.len();
    let mut leq = vec![vec![false; r]; r];
    for (i, leq_row) in leq.iter_mut().enumerate() {
        leq_row[i] = true;
    }
    for skip in 0..r {
        // eliminate greedily while avoiding rotation `skip`
        let mut reached = vec![false; r];
        let mut mu = mu_a.clone();
        loop {
            let mut progressed = false;
            for rho in exposed_rotations(prefs, &mu) {
                let i = *index.get(&rho.key()).ok_or_else(|| {
                    Error::Precondition("unknown rotation during poset construction".into())
                })?;
                if i == skip {
                    continue;
                }
                mu = eliminate(prefs, &mu, &rho)?;
                reached[i] = true;
                progressed = true;
                break;
            }
            if !progressed {
                break;
            }
        }
        // unreached rotations (besides `skip`) require `skip` first
        for (j, &got) in reached.iter().enumerate() {
            if j != skip && !got {
                leq[skip][j] = true;
            }
        }
    }

    // transitive reduction over the strict order
    let mut covers = Vec::new();
    for i in 0..r {
        for j in 0..r {
            if i == j || !leq[i][j] {
                continue;
            }
            let direct = !(0..r).any(|k| k != i && k != j && leq[i][k] && leq[k][j]);
            if direct {
                covers.push((i, j));
            }
        }
    }
    covers.sort_unstable();

    Ok(RotationPoset {
        rotations,
        leq,
        covers,
        mu_a,
        mu_b,
    })
}
