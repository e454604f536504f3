//! The robustness region of a matching in salience space: per-evaluator
//! polytope factors over the simplex, their vertices, and both exact and
//! Monte Carlo relative volumes.

use salience_match::geometry::{contains, region, vertices, volume_exact, volume_mc};
use salience_match::io::parse_instance;
use salience_match::market::{BId, Matching};
use std::path::Path;

fn main() {
    let (inst, _) = parse_instance(Path::new("crates/core/testdata/appendix_a.json"))
        .or_else(|_| parse_instance(Path::new("testdata/appendix_a.json")))
        .expect("fixture file");
    let mu = Matching::new(vec![BId(0), BId(1)]).unwrap();
    let reg = region(&inst, &mu).unwrap();
    for f in &reg.factors {
        println!(
            "factor {}: {} halfspace(s), vertices {:?}",
            inst.b_name(f.b),
            f.halfspaces.len(),
            vertices(f, inst.m()).unwrap()
        );
    }
    println!(
        "baseline salience inside region: {}",
        contains(&reg, inst.salience()).unwrap()
    );
    println!("exact volume: {}", volume_exact(&reg).unwrap());
    let mc = volume_mc(&reg, 100_000, 42).unwrap();
    println!("mc volume:    {} +/- {}", mc.estimate, mc.ci_half);
}
