//! The closed-form base inner radius: a fast lower bound on the exact
//! robustness radius computed from score margins and dual-norm attribute
//! gaps, with a safety shrink factor.

use salience_match::io::parse_instance;
use salience_match::market::{BId, Matching};
use salience_match::robustness::{base_radius, robustness_radius};
use salience_match::Norm;
use std::path::Path;

fn main() {
    let (inst, _) = parse_instance(Path::new("crates/core/testdata/appendix_a.json"))
        .or_else(|_| parse_instance(Path::new("testdata/appendix_a.json")))
        .expect("fixture file");
    let mu = Matching::new(vec![BId(0), BId(1)]).unwrap();
    for eps in [0.0, 0.01] {
        let base = base_radius(&inst, inst.salience(), &mu, Norm::LInf, eps).unwrap();
        println!("eps = {eps}: base radius = {base:?}");
    }
    let exact = robustness_radius(&inst, inst.salience(), &mu, 2, Norm::LInf)
        .unwrap()
        .radius;
    println!("exact radius = {exact:?} (the base bound never exceeds it)");
}
