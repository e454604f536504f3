//! Computes the exact robustness radius of a stable matching: the smallest
//! perturbation of any single evaluator's salience that creates a blocking
//! pair, across every support of size at most k.

use salience_match::io::parse_instance;
use salience_match::market::Matching;
use salience_match::market::BId;
use salience_match::Norm;
use salience_match::robustness::robustness_radius;
use std::path::Path;

fn main() {
    let (inst, _) = parse_instance(Path::new("crates/core/testdata/appendix_a.json"))
        .or_else(|_| parse_instance(Path::new("testdata/appendix_a.json")))
        .expect("fixture file");
    let mu = Matching::new(vec![BId(0), BId(1)]).unwrap();
    for p in [Norm::L1, Norm::L2, Norm::LInf] {
        let report = robustness_radius(&inst, inst.salience(), &mu, 2, p).unwrap();
        println!("p = {p}: radius = {:?}", report.radius);
        if let Some((a, b, support)) = &report.critical_pair {
            println!(
                "  critical pair: ({}, {}), support {:?}",
                inst.a_name(*a),
                inst.b_name(*b),
                support
            );
        }
    }
}
