//! Decides whether a stable matching survives every bounded salience
//! perturbation, and prints the blocking witness when it does not.

use salience_match::market::{
    AId, AttributeVector, BId, Instance, Matching, SalienceProfile, SalienceVector,
};
use salience_match::robustness::verify_robust;
use salience_match::Norm;

fn market() -> Instance {
    // two candidates, two evaluators, one sharply contested pair
    Instance::new(
        vec!["a1".into(), "a2".into()],
        vec!["b1".into(), "b2".into()],
        vec![
            AttributeVector::new(vec![0.8, 0.2]).unwrap(),
            AttributeVector::new(vec![0.4, 0.6]).unwrap(),
        ],
        vec![vec![BId(0), BId(1)], vec![BId(0), BId(1)]],
        SalienceProfile::new(vec![
            SalienceVector::new(vec![0.7, 0.3]).unwrap(),
            SalienceVector::new(vec![0.3, 0.7]).unwrap(),
        ])
        .unwrap(),
        vec![AId(0), AId(1)],
    )
    .unwrap()
}

fn main() {
    let inst = market();
    let mu = Matching::new(vec![BId(0), BId(1)]).unwrap();
    for r in [0.15, 0.25] {
        let out = verify_robust(&inst, inst.salience(), &mu, 2, r, Norm::LInf).unwrap();
        println!("r = {r}: robust = {}", out.robust);
        if let Some(w) = out.witness {
            println!(
                "  witness: b{} switches to {:?} (distance {:.4}), making a{} a blocker",
                w.b.0 + 1,
                w.s_hat.weights(),
                w.distance,
                w.a.0 + 1
            );
        }
    }
}
