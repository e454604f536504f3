//! Instance file format: a JSON document naming both sides, attribute
//! vectors, static preferences, baseline salience, a tie-break order, and
//! optional assignment costs. Parsing validates every market invariant and
//! reports errors by field; serialization round-trips exactly.

use crate::market::{AId, AttributeVector, BId, Instance, SalienceProfile, SalienceVector};
use crate::tradeoff::CostTable;
use crate::{Error, Result};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::Path;

/// Version tag carried by every CLI artifact.
pub const SCHEMA_VERSION: &str = "1";

fn parse_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        field: field.into(),
        message: message.into(),
    }
}

fn get<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a Value> {
    obj.get(field)
        .ok_or_else(|| parse_err(field, "missing field"))
}

fn as_string_list(v: &Value, field: &str) -> Result<Vec<String>> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err(field, "expected an array"))?;
    arr.iter()
        .map(|x| {
            x.as_str()
                .map(str::to_owned)
                .ok_or_else(|| parse_err(field, "expected string entries"))
        })
        .collect()
}

fn as_float_list(v: &Value, field: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| parse_err(field, "expected an array"))?;
    arr.iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| parse_err(field, "expected numeric entries"))
        })
        .collect()
}

fn index_of(names: &[String], name: &str, field: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| parse_err(field, format!("unknown agent {name:?}")))
}

/// Parses an instance document from a string. Returns the instance and the
/// optional cost table.
pub fn parse_instance_str(text: &str) -> Result<(Instance, Option<CostTable>)> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root
        .as_object()
        .ok_or_else(|| parse_err("(root)", "expected a JSON object"))?;

    let m = get(obj, "m")?
        .as_u64()
        .ok_or_else(|| parse_err("m", "expected a positive integer"))? as usize;
    if m < 2 {
        return Err(parse_err("m", format!("need m >= 2, got {m}")));
    }
    let a_agents = as_string_list(get(obj, "a_agents")?, "a_agents")?;
    let b_agents = as_string_list(get(obj, "b_agents")?, "b_agents")?;
    let n = a_agents.len();
    if n == 0 || b_agents.len() != n {
        return Err(parse_err(
            "b_agents",
            format!("sides must be nonempty and balanced ({n} vs {})", b_agents.len()),
        ));
    }

    let attr_map = get(obj, "attributes")?
        .as_object()
        .ok_or_else(|| parse_err("attributes", "expected an object keyed by a-agent"))?;
    let mut attributes = Vec::with_capacity(n);
    for name in &a_agents {
        let field = format!("attributes.{name}");
        let row = attr_map
            .get(name)
            .ok_or_else(|| parse_err(&field, "missing field"))?;
        let vals = as_float_list(row, &field)?;
        if vals.len() != m {
            return Err(parse_err(&field, format!("expected {m} coordinates")));
        }
        attributes
            .push(AttributeVector::new(vals).map_err(|e| parse_err(&field, e.to_string()))?);
    }

    let prefs_map = get(obj, "a_prefs")?
        .as_object()
        .ok_or_else(|| parse_err("a_prefs", "expected an object keyed by a-agent"))?;
    let mut a_prefs = Vec::with_capacity(n);
    for name in &a_agents {
        let field = format!("a_prefs.{name}");
        let row = prefs_map
            .get(name)
            .ok_or_else(|| parse_err(&field, "missing field"))?;
        let list = as_string_list(row, &field)?;
        let ids: Vec<BId> = list
            .iter()
            .map(|b| index_of(&b_agents, b, &field).map(BId))
            .collect::<Result<_>>()?;
        let mut seen = vec![false; n];
        for b in &ids {
            if seen[b.0] {
                return Err(parse_err(&field, "preference list is not a permutation"));
            }
            seen[b.0] = true;
        }
        if ids.len() != n {
            return Err(parse_err(&field, "preference list is not a permutation"));
        }
        a_prefs.push(ids);
    }

    let sal_map = get(obj, "salience")?
        .as_object()
        .ok_or_else(|| parse_err("salience", "expected an object keyed by b-agent"))?;
    let mut salience = Vec::with_capacity(n);
    for name in &b_agents {
        let field = format!("salience.{name}");
        let row = sal_map
            .get(name)
            .ok_or_else(|| parse_err(&field, "missing field"))?;
        let vals = as_float_list(row, &field)?;
        if vals.len() != m {
            return Err(parse_err(&field, format!("expected {m} weights")));
        }
        let sum: f64 = vals.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(parse_err(&field, format!("row sum {sum}")));
        }
        salience.push(SalienceVector::new(vals).map_err(|e| parse_err(&field, e.to_string()))?);
    }

    let tie_names = as_string_list(get(obj, "tie_break")?, "tie_break")?;
    let tie_break: Vec<AId> = tie_names
        .iter()
        .map(|a| index_of(&a_agents, a, "tie_break").map(AId))
        .collect::<Result<_>>()?;

    let costs = match obj.get("costs") {
        None => None,
        Some(v) => {
            let cost_map = v
                .as_object()
                .ok_or_else(|| parse_err("costs", "expected an object keyed by a-agent"))?;
            let mut table = vec![vec![0.0; n]; n];
            for (a_idx, a_name) in a_agents.iter().enumerate() {
                let field = format!("costs.{a_name}");
                let row = cost_map
                    .get(a_name)
                    .ok_or_else(|| parse_err(&field, "missing field"))?
                    .as_object()
                    .ok_or_else(|| parse_err(&field, "expected an object keyed by b-agent"))?;
                for (b_idx, b_name) in b_agents.iter().enumerate() {
                    let inner = format!("{field}.{b_name}");
                    let val = row
                        .get(b_name)
                        .ok_or_else(|| parse_err(&inner, "missing field"))?
                        .as_f64()
                        .ok_or_else(|| parse_err(&inner, "expected a number"))?;
                    table[a_idx][b_idx] = val;
                }
            }
            Some(CostTable::new(table, n).map_err(|e| parse_err("costs", e.to_string()))?)
        }
    };

    let inst = Instance::new(a_agents, b_agents, attributes, a_prefs, salience_profile(salience)?, tie_break)
        .map_err(|e| parse_err("(instance)", e.to_string()))?;
    Ok((inst, costs))
}

fn salience_profile(rows: Vec<SalienceVector>) -> Result<SalienceProfile> {
    SalienceProfile::new(rows)
}

/// Parses an instance document from a file.
pub fn parse_instance(path: &Path) -> Result<(Instance, Option<CostTable>)> {
    let text = std::fs::read_to_string(path)?;
    parse_instance_str(&text)
}

/// Serializes an instance (and optional costs) back to the document format;
/// `parse_instance_str(serialize_instance(..))` reproduces the input exactly.
pub fn serialize_instance(inst: &Instance, costs: Option<&CostTable>) -> String {
    let a_names = inst.a_names();
    let b_names = inst.b_names();
    let attributes: BTreeMap<&String, Vec<f64>> = inst
        .a_ids()
        .map(|a| (&a_names[a.0], inst.attributes(a).values().to_vec()))
        .collect();
    let a_prefs: BTreeMap<&String, Vec<&String>> = inst
        .a_ids()
        .map(|a| {
            (
                &a_names[a.0],
                inst.a_prefs(a).iter().map(|b| &b_names[b.0]).collect(),
            )
        })
        .collect();
    let salience: BTreeMap<&String, Vec<f64>> = inst
        .b_ids()
        .map(|b| (&b_names[b.0], inst.salience().row(b).weights().to_vec()))
        .collect();
    let tie_break: Vec<&String> = inst.tie_break().iter().map(|a| &a_names[a.0]).collect();
    let mut doc = json!({
        "m": inst.m(),
        "a_agents": a_names,
        "b_agents": b_names,
        "attributes": attributes,
        "a_prefs": a_prefs,
        "salience": salience,
        "tie_break": tie_break,
    });
    if let Some(c) = costs {
        let table: BTreeMap<&String, BTreeMap<&String, f64>> = inst
            .a_ids()
            .map(|a| {
                (
                    &a_names[a.0],
                    inst.b_ids().map(|b| (&b_names[b.0], c.get(a, b))).collect(),
                )
            })
            .collect();
        doc["costs"] = serde_json::to_value(table).unwrap();
    }
    serde_json::to_string_pretty(&doc).unwrap()
}

/// Rounds to 9 significant digits; used for all numeric CLI output so values
/// re-parse within `1e-9` of the computed quantity.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powf(8.0 - x.abs().log10().floor());
    (x * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::fixtures;

    fn appendix_doc() -> String {
        serialize_instance(&fixtures::appendix_a(), None)
    }

    #[test]
    fn round_trip_identical() {
        let doc = appendix_doc();
        let (inst, costs) = parse_instance_str(&doc).unwrap();
        assert!(costs.is_none());
        assert_eq!(serialize_instance(&inst, None), doc);
        let app = fixtures::appendix_a();
        assert_eq!(inst.n(), app.n());
        for a in inst.a_ids() {
            assert_eq!(inst.attributes(a).values(), app.attributes(a).values());
            assert_eq!(inst.a_prefs(a), app.a_prefs(a));
        }
        for b in inst.b_ids() {
            assert_eq!(
                inst.salience().row(b).weights(),
                app.salience().row(b).weights()
            );
        }
    }

    #[test]
    fn costs_round_trip() {
        let two = fixtures::two_sm();
        let costs = CostTable::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let doc = serialize_instance(&two, Some(&costs));
        let (_, parsed) = parse_instance_str(&doc).unwrap();
        let parsed = parsed.expect("costs present");
        for a in two.a_ids() {
            for b in two.b_ids() {
                assert_eq!(parsed.get(a, b), costs.get(a, b));
            }
        }
    }

    #[test]
    fn missing_field_named() {
        let doc = appendix_doc();
        let v: Value = serde_json::from_str(&doc).unwrap();
        let mut obj = v.as_object().unwrap().clone();
        obj.remove("salience");
        let text = serde_json::to_string(&obj).unwrap();
        match parse_instance_str(&text) {
            Err(Error::Parse { field, message }) => {
                assert_eq!(field, "salience");
                assert_eq!(message, "missing field");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_simplex_row_rejected() {
        let doc = appendix_doc().replace("0.7,", "0.8,");
        match parse_instance_str(&doc) {
            Err(Error::Parse { field, message }) => {
                assert!(field.starts_with("salience."), "{field}");
                assert!(message.contains("row sum"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_permutation_rejected() {
        let doc = appendix_doc();
        let mut v: Value = serde_json::from_str(&doc).unwrap();
        v["a_prefs"]["a1"] = json!(["b1", "b1"]);
        match parse_instance_str(&serde_json::to_string(&v).unwrap()) {
            Err(Error::Parse { field, message }) => {
                assert_eq!(field, "a_prefs.a1");
                assert!(message.contains("not a permutation"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_agent_rejected() {
        let doc = appendix_doc();
        let mut v: Value = serde_json::from_str(&doc).unwrap();
        v["tie_break"] = json!(["a1", "zz"]);
        assert!(matches!(
            parse_instance_str(&serde_json::to_string(&v).unwrap()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn sig9_round_trip() {
        for x in [0.2, 1.0 / 3.0, 123456.789, 1e-7, 0.0, -0.35355339059] {
            assert!((sig9(x) - x).abs() <= 1e-9 * x.abs().max(1.0) + 1e-12, "{x}");
        }
        assert_eq!(sig9(0.123456789123), 0.123456789);
    }
}
