//! The robustness-cost frontier: for each target base radius tau, the
//! cheapest stable matching clearing the target (closure/min-cut upper
//! bound) sandwiched against an LP lower bound with vulnerability cuts.

use salience_match::io::parse_instance;
use salience_match::tradeoff::frontier;
use salience_match::Norm;
use std::path::Path;

fn main() {
    let (inst, costs) = parse_instance(Path::new("crates/core/testdata/two_sm.json"))
        .or_else(|_| parse_instance(Path::new("testdata/two_sm.json")))
        .expect("fixture file");
    let costs = costs.expect("fixture carries a cost table");
    let points = frontier(&inst, inst.salience(), &costs, Norm::LInf, 2, 0.01).unwrap();
    println!("tau      c_lb     c_ub     matching");
    for p in &points {
        println!(
            "{:<8.4} {:<8} {:<8} {}",
            p.tau,
            p.c_lb.map_or("infeas".into(), |v| format!("{v:.4}")),
            p.c_ub.map_or("infeas".into(), |v| format!("{v:.4}")),
            p.matching
                .as_ref()
                .map_or("-".into(), |mu| format!("{:?}", mu.key())),
        );
    }
}
