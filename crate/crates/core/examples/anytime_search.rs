//! Best-first anytime search for the most robust stable matching: seeds a
//! lower bound with the B-optimal matching, expands down-sets in descending
//! upper-bound order, and certifies when the bounds meet.

use salience_match::io::parse_instance;
use salience_match::search::most_robust_anytime;
use salience_match::Norm;
use std::path::Path;

fn main() {
    let (inst, _) = parse_instance(Path::new("crates/core/testdata/two_sm.json"))
        .or_else(|_| parse_instance(Path::new("testdata/two_sm.json")))
        .expect("fixture file");
    let state = most_robust_anytime(&inst, inst.salience(), 2, Norm::LInf, 1000, 1e-4).unwrap();
    println!(
        "best matching {:?}, radius lower bound {:?}, certified: {}",
        state.best.key(),
        state.lb,
        state.certified
    );
    println!("trace:");
    for e in &state.trace {
        println!(
            "  {:<9} lb={:?} ub_frontier={:?} expansions={}",
            e.event, e.lb, e.ub_frontier, e.expansions
        );
    }
}
