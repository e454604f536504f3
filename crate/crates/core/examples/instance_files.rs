//! The instance file format: parsing with field-level validation errors and
//! exact serialization round-trips.

use salience_match::io::{parse_instance, parse_instance_str, serialize_instance};
use std::path::Path;

fn main() {
    let (inst, costs) = parse_instance(Path::new("crates/core/testdata/two_sm.json"))
        .or_else(|_| parse_instance(Path::new("testdata/two_sm.json")))
        .expect("fixture file");
    println!(
        "parsed market: n = {}, m = {}, costs: {}",
        inst.n(),
        inst.m(),
        costs.is_some()
    );
    let doc = serialize_instance(&inst, costs.as_ref());
    let (again, _) = parse_instance_str(&doc).unwrap();
    assert_eq!(serialize_instance(&again, costs.as_ref()), doc);
    println!("round-trip is byte-identical");

    let bad = doc.replace("0.4,", "0.5,");
    match parse_instance_str(&bad) {
        Err(e) => println!("validation catches a broken salience row: {e}"),
        Ok(_) => println!("unexpectedly parsed"),
    }
}
