//! Randomized invariant checks across modules: monotonicity of the exact
//! radius in the support budget and the norm, witness validity, lower-bound
//! dominance, lattice extremality, and serialization round-trips.

use proptest::prelude::*;
use salience_match::experiments::random_salience_instance;
use salience_match::io::{parse_instance_str, serialize_instance};
use salience_match::market::{is_stable, score, Instance};
use salience_match::robustness::{base_radius, robustness_radius, verify_robust};
use salience_match::stable::{deferred_acceptance, enumerate_stable_bruteforce, Prefs, Side};
use salience_match::{Norm, Radius};

fn case(n: usize, m: usize, seed: u64) -> Instance {
    random_salience_instance(n, m, seed).unwrap()
}

/// Orders radii with `Unbounded` as the top element.
fn le(x: Radius, y: Radius, slack: f64) -> bool {
    match (x, y) {
        (_, Radius::Unbounded) => true,
        (Radius::Unbounded, Radius::Finite(_)) => false,
        (Radius::Finite(a), Radius::Finite(b)) => a <= b + slack,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// A larger support budget can only make attacks easier.
    #[test]
    fn radius_weakly_decreases_in_budget(seed in 0u64..1_000_000, n in 2usize..=5, m in 2usize..=3) {
        let inst = case(n, m, seed);
        let s = inst.salience();
        let prefs = Prefs::from_instance(&inst, s).unwrap();
        let mu = deferred_acceptance(&prefs, Side::B);
        let mut prev: Option<Radius> = None;
        for k in 1..=m {
            let r = robustness_radius(&inst, s, &mu, k, Norm::LInf).unwrap().radius;
            if let Some(p) = prev {
                prop_assert!(le(r, p, 1e-9), "k={k}: {r:?} above {p:?}");
            }
            prev = Some(r);
        }
    }

    /// Pointwise `l1 >= l2 >= l_inf` distances order the radii the same way.
    #[test]
    fn radius_ordered_by_norm(seed in 0u64..1_000_000, n in 2usize..=5, m in 2usize..=3) {
        let inst = case(n, m, seed);
        let s = inst.salience();
        let prefs = Prefs::from_instance(&inst, s).unwrap();
        let mu = deferred_acceptance(&prefs, Side::B);
        let r1 = robustness_radius(&inst, s, &mu, m, Norm::L1).unwrap().radius;
        let r2 = robustness_radius(&inst, s, &mu, m, Norm::L2).unwrap().radius;
        let ri = robustness_radius(&inst, s, &mu, m, Norm::LInf).unwrap().radius;
        prop_assert!(le(ri, r2, 1e-9) && le(r2, r1, 1e-9), "{r1:?} >= {r2:?} >= {ri:?} violated");
    }

    /// The closed-form inner radius never exceeds the exact radius.
    #[test]
    fn base_radius_is_a_lower_bound(seed in 0u64..1_000_000, n in 2usize..=5, m in 2usize..=3) {
        let inst = case(n, m, seed);
        let s = inst.salience();
        let prefs = Prefs::from_instance(&inst, s).unwrap();
        let mu = deferred_acceptance(&prefs, Side::B);
        for p in [Norm::L1, Norm::L2, Norm::LInf] {
            let lb = base_radius(&inst, s, &mu, p, 0.01).unwrap();
            let exact = robustness_radius(&inst, s, &mu, m, p).unwrap().radius;
            prop_assert!(le(lb, exact, 1e-9), "p={p}: base {lb:?} above exact {exact:?}");
        }
    }

    /// A failed verification ships a valid attack: admissible support,
    /// within-budget distance, and a broken matching after substitution.
    #[test]
    fn failure_witness_is_a_valid_attack(seed in 0u64..1_000_000, n in 2usize..=5, m in 2usize..=3) {
        let inst = case(n, m, seed);
        let s = inst.salience();
        let prefs = Prefs::from_instance(&inst, s).unwrap();
        let mu = deferred_acceptance(&prefs, Side::B);
        let k = 1 + (seed % m as u64) as usize;
        let p = [Norm::L1, Norm::L2, Norm::LInf][(seed % 3) as usize];
        if let Radius::Finite(rstar) = robustness_radius(&inst, s, &mu, k, p).unwrap().radius {
            let r = 1.1 * rstar + 1e-6;
            let out = verify_robust(&inst, s, &mu, k, r, p).unwrap();
            prop_assert!(!out.robust);
            let w = out.witness.unwrap();
            prop_assert!(w.support.len() <= k);
            prop_assert!(w.distance <= r + 1e-9);
            prop_assert!(
                (p.dist(w.s_hat.weights(), s.row(w.b).weights()) - w.distance).abs() <= 1e-9
            );
            // the attack at least ties the blocking candidate with the
            // partner (the attained minimum can sit exactly on the boundary)
            let s2 = s.with_row(w.b, w.s_hat.clone());
            let partner = mu.partner_of_b(w.b);
            let margin = score(s2.row(w.b), inst.attributes(partner)).unwrap()
                - score(s2.row(w.b), inst.attributes(w.a)).unwrap();
            prop_assert!(margin <= 1e-9, "witness leaves margin {margin}");
        }
    }

    /// Both deferred-acceptance outputs are stable and extremal in the
    /// brute-force lattice.
    #[test]
    fn da_outputs_are_stable_extremes(seed in 0u64..1_000_000, n in 2usize..=5, m in 2usize..=3) {
        let inst = case(n, m, seed);
        let s = inst.salience();
        let prefs = Prefs::from_instance(&inst, s).unwrap();
        let mu_a = deferred_acceptance(&prefs, Side::A);
        let mu_b = deferred_acceptance(&prefs, Side::B);
        prop_assert!(is_stable(&inst, s, &mu_a).unwrap());
        prop_assert!(is_stable(&inst, s, &mu_b).unwrap());
        let all = enumerate_stable_bruteforce(&prefs).unwrap();
        prop_assert!(all.iter().any(|mu| mu.key() == mu_a.key()));
        prop_assert!(all.iter().any(|mu| mu.key() == mu_b.key()));
        for mu in &all {
            for b in inst.b_ids() {
                // b-optimal: every b weakly prefers its mu_B partner
                prop_assert!(!prefs.b_prefers(b, mu.partner_of_b(b), mu_b.partner_of_b(b)));
                // a-optimal is b-pessimal
                prop_assert!(!prefs.b_prefers(b, mu_a.partner_of_b(b), mu.partner_of_b(b)));
            }
        }
    }

    /// Serialize -> parse -> serialize is the identity on documents.
    #[test]
    fn serialization_round_trips(seed in 0u64..1_000_000, n in 2usize..=6, m in 2usize..=3) {
        let inst = case(n, m, seed);
        let doc = serialize_instance(&inst, None);
        let (again, costs) = parse_instance_str(&doc).unwrap();
        prop_assert!(costs.is_none());
        prop_assert_eq!(serialize_instance(&again, None), doc);
    }
}
