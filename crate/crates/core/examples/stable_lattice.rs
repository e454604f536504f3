//! Deferred acceptance from both sides, the rotation poset between the two
//! extreme matchings, and enumeration of every stable matching as a down-set.

use salience_match::io::parse_instance;
use salience_match::stable::{build_rotation_poset, deferred_acceptance, Prefs, Side};
use std::path::Path;

fn main() {
    let (inst, _) = parse_instance(Path::new("crates/core/testdata/two_sm.json"))
        .or_else(|_| parse_instance(Path::new("testdata/two_sm.json")))
        .expect("fixture file");
    let prefs = Prefs::from_instance(&inst, inst.salience()).unwrap();
    let mu_a = deferred_acceptance(&prefs, Side::A);
    let mu_b = deferred_acceptance(&prefs, Side::B);
    println!("A-optimal: {:?}", mu_a.key());
    println!("B-optimal: {:?}", mu_b.key());

    let poset = build_rotation_poset(&prefs).unwrap();
    println!("rotations: {}", poset.len());
    for d in poset.all_down_sets().unwrap() {
        let mu = poset.matching_of(&prefs, d).unwrap();
        println!("  down-set {:#b} -> matching {:?}", d.0, mu.key());
    }
}
