//! Shared oracles for the integration tests: an exhaustive grid search over
//! the salience simplex that independently reproduces robustness radii, plus
//! deterministic random case generation.

use salience_match::experiments::random_salience_instance;
use salience_match::market::{blockers, AId, Instance, Matching, SalienceProfile};
use salience_match::Norm;

pub const GRID_STEP: f64 = 1e-3;
pub const GRID_TOL: f64 = 2e-3;

/// One randomized oracle test case.
pub struct OracleCase {
    pub inst: Instance,
    pub k: usize,
    pub p: Norm,
    pub seed: u64,
}

/// Deterministic mixed sweep over n, m, p, and k.
pub fn oracle_cases(count: usize) -> Vec<OracleCase> {
    let norms = [Norm::L1, Norm::L2, Norm::LInf];
    (0..count as u64)
        .map(|seed| {
            let n = 2 + (seed % 5) as usize; // 2..=6
            let m = 2 + ((seed / 5) % 2) as usize; // 2 or 3
            let p = norms[(seed % 3) as usize];
            let k = 1 + (seed % m as u64) as usize;
            OracleCase {
                inst: random_salience_instance(n, m, 0xACE0_0000 + seed).unwrap(),
                k,
                p,
                seed,
            }
        })
        .collect()
}

fn tie_break_pos(inst: &Instance) -> Vec<usize> {
    let mut pos = vec![0; inst.n()];
    for (i, a) in inst.tie_break().iter().enumerate() {
        pos[a.0] = i;
    }
    pos
}

/// Whether the perturbed vector `s_hat` makes some statically willing agent
/// beat `b`'s partner on score (ties resolved by the public tie-break).
fn blocks(
    gaps: &[(AId, Vec<f64>)],
    s_hat: &[f64],
    partner: AId,
    tie_pos: &[usize],
) -> bool {
    for (a, g) in gaps {
        let margin: f64 = g.iter().zip(s_hat).map(|(x, y)| x * y).sum();
        if margin < -1e-12 || (margin.abs() <= 1e-12 && tie_pos[a.0] < tie_pos[partner.0]) {
            return true;
        }
    }
    false
}

/// Exhaustive grid-search radius: the smallest post-normalization distance
/// at which any single `b` can be perturbed (support size <= k, off-support
/// proportional) so that the matching acquires a blocking pair. `None` means
/// no grid point blocks (unbounded radius).
pub fn grid_radius(
    inst: &Instance,
    s: &SalienceProfile,
    mu: &Matching,
    k: usize,
    p: Norm,
) -> Option<f64> {
    let m = inst.m();
    let steps = (1.0 / GRID_STEP).round() as usize;
    let tie_pos = tie_break_pos(inst);
    let mut best: Option<f64> = None;
    let consider = |dist: f64, best: &mut Option<f64>| match best {
        Some(cur) if *cur <= dist => {}
        _ => *best = Some(dist),
    };
    for b in inst.b_ids() {
        let partner = mu.partner_of_b(b);
        let up = inst.attributes(partner).values();
        let gaps: Vec<(AId, Vec<f64>)> = blockers(inst, mu, b)
            .into_iter()
            .map(|a| {
                (
                    a,
                    up.iter()
                        .zip(inst.attributes(a).values())
                        .map(|(x, y)| x - y)
                        .collect(),
                )
            })
            .collect();
        if gaps.is_empty() {
            continue;
        }
        let base = s.row(b).weights();
        if k >= m - 1 {
            // every normalized vector is reachable with support size <= k
            match m {
                2 => {
                    for i in 0..=steps {
                        let s_hat = [i as f64 / steps as f64, 1.0 - i as f64 / steps as f64];
                        if blocks(&gaps, &s_hat, partner, &tie_pos) {
                            consider(p.dist(&s_hat, base), &mut best);
                        }
                    }
                }
                3 => {
                    for i in 0..=steps {
                        for j in 0..=(steps - i) {
                            let s_hat = [
                                i as f64 / steps as f64,
                                j as f64 / steps as f64,
                                (steps - i - j) as f64 / steps as f64,
                            ];
                            if blocks(&gaps, &s_hat, partner, &tie_pos) {
                                consider(p.dist(&s_hat, base), &mut best);
                            }
                        }
                    }
                }
                _ => panic!("grid oracle supports m <= 3"),
            }
        } else {
            // k = 1, m = 3: one free coordinate, the others keep their ratio
            for support in 0..m {
                let off_mass = 1.0 - base[support];
                if off_mass <= 1e-12 {
                    continue;
                }
                for i in 0..=steps {
                    let t = i as f64 / steps as f64;
                    let mut s_hat = vec![0.0; m];
                    for j in 0..m {
                        s_hat[j] = if j == support {
                            t
                        } else {
                            base[j] * (1.0 - t) / off_mass
                        };
                    }
                    if blocks(&gaps, &s_hat, partner, &tie_pos) {
                        consider(p.dist(&s_hat, base), &mut best);
                    }
                }
            }
        }
    }
    best
}
