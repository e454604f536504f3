//! Anytime best-first search for the most robust stable matching.
//!
//! Nodes are down-sets of the rotation poset; each node carries the stable
//! matching reached by eliminating its rotations from the A-optimal matching
//! and a relaxation upper bound over the sublattice above it. The lower bound
//! is seeded with the exact radius of the B-optimal matching, the frontier is
//! expanded in descending upper-bound order, and nodes whose bound cannot beat
//! the incumbent are pruned. The search certifies optimality (at `eps_ub`
//! slack) when the frontier empties or the bounds meet.

use crate::market::{Instance, Matching, SalienceProfile};
use crate::relaxation::restricted_ub;
use crate::robustness::robustness_radius;
use crate::stable::{build_rotation_poset, deferred_acceptance, DownSet, Prefs, RotationPoset, Side};
use crate::{Norm, Radius, Result};
use serde::Serialize;
use std::collections::HashSet;

/// A frontier node: a down-set, its matching, and its sublattice bound.
#[derive(Clone, Debug)]
pub struct SearchNode {
    pub downset: DownSet,
    pub matching: Matching,
    /// Relaxation bound on every exact radius in the sublattice above
    /// `downset`.
    pub ub: Radius,
    /// Exact radius, filled in when the node is expanded.
    pub exact: Option<Radius>,
}

/// One line of the search trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    pub event: &'static str,
    pub lb: Radius,
    pub ub_frontier: Radius,
    /// Down-set bitmask of the node the event refers to.
    pub node: u64,
    pub expansions: usize,
}

/// Search result and residual frontier.
#[derive(Clone, Debug)]
pub struct SearchState {
    pub lb: Radius,
    pub best: Matching,
    pub frontier: Vec<SearchNode>,
    pub expansions: usize,
    /// True when `lb` is proven optimal within `eps_ub`.
    pub certified: bool,
    pub trace: Vec<TraceEvent>,
}

impl SearchState {
    /// Largest upper bound still on the frontier; `lb` when empty.
    pub fn ub_frontier(&self) -> Radius {
        self.frontier
            .iter()
            .fold(self.lb, |acc, n| if n.ub > acc { n.ub } else { acc })
    }
}

/// Lower-bound seed: the B-optimal matching and its exact radius.
pub fn lb_init(
    inst: &Instance,
    s: &SalienceProfile,
    k: usize,
    p: Norm,
) -> Result<(Matching, Radius)> {
    let prefs = Prefs::from_instance(inst, s)?;
    let mu_b = deferred_acceptance(&prefs, Side::B);
    let radius = robustness_radius(inst, s, &mu_b, k, p)?.radius;
    Ok((mu_b, radius))
}

fn better(candidate: Radius, cand_mu: &Matching, lb: Radius, best: &Matching) -> bool {
    match (candidate, lb) {
        (Radius::Unbounded, Radius::Unbounded) => cand_mu.key() < best.key(),
        (Radius::Unbounded, Radius::Finite(_)) => true,
        (Radius::Finite(_), Radius::Unbounded) => false,
        (Radius::Finite(c), Radius::Finite(l)) => {
            c > l + 1e-12 || ((c - l).abs() <= 1e-12 && cand_mu.key() < best.key())
        }
    }
}

/// Pop index of the frontier node with the largest ub; ties broken by smaller
/// down-set, then smaller bitmask.
fn pop_best(frontier: &mut Vec<SearchNode>) -> Option<SearchNode> {
    let idx = frontier.iter().enumerate().max_by(|(_, x), (_, y)| {
        x.ub
            .partial_cmp(&y.ub)
            .unwrap()
            .then(y.downset.len().cmp(&x.downset.len()))
            .then(y.downset.0.cmp(&x.downset.0))
    })?;
    let i = idx.0;
    Some(frontier.swap_remove(i))
}

/// Best-first search with an expansion budget. Always returns a valid lower
/// bound and its matching; `certified` marks proven optimality.
pub fn most_robust_anytime(
    inst: &Instance,
    s: &SalienceProfile,
    k: usize,
    p: Norm,
    budget: usize,
    eps_ub: f64,
) -> Result<SearchState> {
    let prefs = Prefs::from_instance(inst, s)?;
    let poset = build_rotation_poset(&prefs)?;
    // the l2 bound is only available through norm equivalence; it stays a
    // valid (looser) upper bound, so certification remains sound
    let l2_flag = p == Norm::L2;
    let node_ub = |mu: &Matching| -> Result<Radius> {
        Ok(restricted_ub(inst, s, mu, k, p, eps_ub, l2_flag)?.radius())
    };

    let (mu_b, mut lb) = lb_init(inst, s, k, p)?;
    let mut best = mu_b;
    let mut trace = Vec::new();
    let mut expansions = 0usize;

    let root = SearchNode {
        downset: DownSet::empty(),
        matching: poset.mu_a.clone(),
        ub: node_ub(&poset.mu_a)?,
        exact: None,
    };
    let mut frontier = vec![root];
    let mut seen: HashSet<DownSet> = HashSet::new();
    seen.insert(DownSet::empty());

    let frontier_max = |frontier: &Vec<SearchNode>, lb: Radius| -> Radius {
        frontier
            .iter()
            .fold(lb, |acc, n| if n.ub > acc { n.ub } else { acc })
    };
    let certified_now = |frontier: &Vec<SearchNode>, lb: Radius| -> bool {
        frontier.is_empty()
            || match (lb, frontier_max(frontier, lb)) {
                (Radius::Unbounded, _) => true,
                (Radius::Finite(l), Radius::Finite(u)) => l >= u - eps_ub,
                (Radius::Finite(_), Radius::Unbounded) => false,
            }
    };

    trace.push(TraceEvent {
        event: "init",
        lb,
        ub_frontier: frontier_max(&frontier, lb),
        node: 0,
        expansions,
    });

    let mut certified = certified_now(&frontier, lb);
    while !certified && expansions < budget {
        let Some(mut node) = pop_best(&mut frontier) else {
            break;
        };
        // prune against the incumbent
        if lb > node.ub {
            trace.push(TraceEvent {
                event: "prune",
                lb,
                ub_frontier: frontier_max(&frontier, lb),
                node: node.downset.0,
                expansions,
            });
            certified = certified_now(&frontier, lb);
            continue;
        }
        expansions += 1;
        let exact = robustness_radius(inst, s, &node.matching, k, p)?.radius;
        node.exact = Some(exact);
        if better(exact, &node.matching, lb, &best) {
            lb = exact;
            best = node.matching.clone();
            trace.push(TraceEvent {
                event: "improve",
                lb,
                ub_frontier: frontier_max(&frontier, lb),
                node: node.downset.0,
                expansions,
            });
        }
        for j in poset.addable(node.downset) {
            let nd = node.downset.insert(j);
            if !seen.insert(nd) {
                continue;
            }
            let mu = poset.matching_of(&prefs, nd)?;
            let ub = node_ub(&mu)?;
            if lb > ub {
                trace.push(TraceEvent {
                    event: "prune",
                    lb,
                    ub_frontier: frontier_max(&frontier, lb),
                    node: nd.0,
                    expansions,
                });
                continue;
            }
            frontier.push(SearchNode {
                downset: nd,
                matching: mu,
                ub,
                exact: None,
            });
        }
        trace.push(TraceEvent {
            event: "expand",
            lb,
            ub_frontier: frontier_max(&frontier, lb),
            node: node.downset.0,
            expansions,
        });
        certified = certified_now(&frontier, lb);
    }
    trace.push(TraceEvent {
        event: if certified { "certified" } else { "budget" },
        lb,
        ub_frontier: frontier_max(&frontier, lb),
        node: 0,
        expansions,
    });
    Ok(SearchState {
        lb,
        best,
        frontier,
        expansions,
        certified,
        trace,
    })
}

/// The rotation poset paired with its preference tables, for callers that
/// need both alongside a search.
pub fn poset_of(inst: &Instance, s: &SalienceProfile) -> Result<(Prefs, RotationPoset)> {
    let prefs = Prefs::from_instance(inst, s)?;
    let poset = build_rotation_poset(&prefs)?;
    Ok((prefs, poset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::fixtures;

    #[test]
    fn lb_init_examples() {
        let two = fixtures::two_sm();
        let (mu, r) = lb_init(&two, two.salience(), 2, Norm::LInf).unwrap();
        assert_eq!(mu.key(), vec![1, 0]);
        assert!((r.finite().unwrap() - 0.1).abs() < 1e-6);

        let app = fixtures::appendix_a();
        let (mu, r) = lb_init(&app, app.salience(), 2, Norm::LInf).unwrap();
        assert_eq!(mu.key(), vec![0, 1]);
        assert!((r.finite().unwrap() - 0.2).abs() < 1e-6);
    }

    #[test]
    fn two_sm_certifies_mu_a() {
        let two = fixtures::two_sm();
        let out = most_robust_anytime(&two, two.salience(), 2, Norm::LInf, 10, 1e-4).unwrap();
        assert!(out.certified);
        assert_eq!(out.lb, Radius::Unbounded);
        assert_eq!(out.best.key(), vec![0, 1]);
    }

    #[test]
    fn appendix_a_certifies_unique_matching() {
        let app = fixtures::appendix_a();
        for budget in [1, 5, 100] {
            let out =
                most_robust_anytime(&app, app.salience(), 2, Norm::LInf, budget, 1e-4).unwrap();
            assert!(out.certified, "budget {budget}");
            assert!((out.lb.finite().unwrap() - 0.2).abs() < 1e-6);
            assert_eq!(out.best.key(), vec![0, 1]);
        }
    }

    #[test]
    fn budget_zero_returns_seed() {
        let two = fixtures::two_sm();
        let out = most_robust_anytime(&two, two.salience(), 2, Norm::LInf, 0, 1e-4).unwrap();
        assert!(!out.certified);
        assert_eq!(out.expansions, 0);
        assert_eq!(out.frontier.len(), 1);
        assert_eq!(out.best.key(), vec![1, 0]);
        assert!((out.lb.finite().unwrap() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn bounds_are_monotone_in_trace() {
        let two = fixtures::two_sm();
        let out = most_robust_anytime(&two, two.salience(), 2, Norm::LInf, 10, 1e-4).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1].lb >= w[0].lb, "lb must not decrease");
        }
    }
}
