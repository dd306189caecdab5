//! Ways to damage a valid instance document.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::Value;

/// Pointers to every scalar in the document.
fn leaves(v: &Value, path: String, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                leaves(x, format!("{path}/{k}"), out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                leaves(x, format!("{path}/{i}"), out);
            }
        }
        _ => out.push((path, v.clone())),
    }
}

const REQUIRED: [&str; 8] = [
    "trains",
    "objective",
    "min_duration",
    "successors",
    "resource",
    "type",
    "train",
    "operation",
];

/// Breaks one thing in a valid instance document. Returns `None` when the
/// document offers nothing of the chosen kind to break.
pub fn break_document(rng: &mut impl Rng, doc: &mut Value) -> Option<()> {
    let mut scalars = Vec::new();
    leaves(doc, String::new(), &mut scalars);
    match rng.random_range(0..3) {
        0 => {
            let numbers: Vec<&(String, Value)> = scalars.iter().filter(|(_, v)| v.is_number()).collect();
            let (path, _) = numbers.choose(rng)?;
            let bad = [
                Value::from(-1),
                Value::from(1.5),
                Value::from("7"),
                Value::from(1u64 << 53),
                Value::Bool(true),
            ];
            *doc.pointer_mut(path).unwrap() = bad.choose(rng).unwrap().clone();
        }
        1 => {
            let mut objects = Vec::new();
            leaves_objects(doc, String::new(), &mut objects);
            let candidates: Vec<(String, &str)> = objects
                .iter()
                .flat_map(|(p, keys)| {
                    keys.iter()
                        .filter_map(move |k| REQUIRED.iter().find(|r| **r == k).map(|r| (p.clone(), *r)))
                })
                .collect();
            let (path, key) = candidates.choose(rng)?;
            doc.pointer_mut(path)
                .unwrap()
                .as_object_mut()
                .unwrap()
                .remove(*key);
        }
        _ => {
            let strings: Vec<&(String, Value)> = scalars.iter().filter(|(_, v)| v.is_string()).collect();
            let (path, _) = strings.choose(rng)?;
            let bad = if path.ends_with("/type") {
                Value::from("late")
            } else {
                Value::from(3)
            };
            *doc.pointer_mut(path).unwrap() = bad;
        }
    }
    Some(())
}

fn leaves_objects(v: &Value, path: String, out: &mut Vec<(String, Vec<String>)>) {
    match v {
        Value::Object(map) => {
            out.push((path.clone(), map.keys().cloned().collect()));
            for (k, x) in map {
                leaves_objects(x, format!("{path}/{k}"), out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                leaves_objects(x, format!("{path}/{i}"), out);
            }
        }
        _ => {}
    }
}
