//! Reading and writing the JSON instance and solution files.
//!
//! Parsing goes through [`serde_json::Value`] rather than derived structs so
//! that every error carries a JSON-pointer location, integers can be checked
//! exactly, and unknown keys can be reported as warnings.

use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{
    build_instance, Event, Instance, ModelError, ObjectiveComponent, Operation, ResourceUsage, Solution,
    Train, UpperBound, MAX_VALUE,
};

/// The only objective component type currently defined.
pub const OP_DELAY: &str = "op_delay";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("{path}: malformed document: {message}")]
    MalformedDocument { path: String, message: String },
    #[error("{path}: missing required key {key:?}")]
    MissingKey { path: String, key: &'static str },
    #[error("{path}: expected an integer, found {found}")]
    NonIntegerNumber { path: String, found: String },
    #[error("{path}: negative number {value}")]
    NegativeNumber { path: String, value: i64 },
    #[error("{path}: number {value} exceeds the supported maximum {MAX_VALUE}")]
    NumberTooLarge { path: String, value: String },
    #[error("{path}: unknown objective type {found:?} (expected \"op_delay\")")]
    UnknownObjectiveType { path: String, found: String },
    #[error("{path}: unknown key {key:?}")]
    UnknownKey { path: String, key: String },
    #[error("{path}: {source}")]
    Model {
        path: String,
        #[source]
        source: ModelError,
    },
}

impl FormatError {
    /// JSON-pointer location of the problem ("" for the document root).
    pub fn path(&self) -> &str {
        match self {
            FormatError::MalformedDocument { path, .. }
            | FormatError::MissingKey { path, .. }
            | FormatError::NonIntegerNumber { path, .. }
            | FormatError::NegativeNumber { path, .. }
            | FormatError::NumberTooLarge { path, .. }
            | FormatError::UnknownObjectiveType { path, .. }
            | FormatError::UnknownKey { path, .. }
            | FormatError::Model { path, .. } => path,
        }
    }
}

impl From<ModelError> for FormatError {
    fn from(source: ModelError) -> Self {
        FormatError::Model {
            path: source.path(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseDiagnostics {
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Treat unknown keys as errors instead of warnings.
    pub strict: bool,
}

struct Reader<'o> {
    options: &'o ParseOptions,
    diagnostics: ParseDiagnostics,
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn malformed(path: &str, expected: &str, found: &Value) -> FormatError {
    FormatError::MalformedDocument {
        path: path.to_owned(),
        message: format!("expected {expected}, found {}", type_name(found)),
    }
}

impl Reader<'_> {
    fn object<'v>(
        &mut self,
        v: &'v Value,
        path: &str,
        known: &[&str],
    ) -> Result<&'v Map<String, Value>, FormatError> {
        let map = v.as_object().ok_or_else(|| malformed(path, "an object", v))?;
        for key in map.keys() {
            if !known.contains(&key.as_str()) {
                let key_path = format!("{path}/{key}");
                if self.options.strict {
                    return Err(FormatError::UnknownKey {
                        path: key_path,
                        key: key.clone(),
                    });
                }
                self.diagnostics.warnings.push(Warning {
                    path: key_path,
                    message: format!("unknown key {key:?} ignored"),
                });
            }
        }
        Ok(map)
    }
}

fn array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>, FormatError> {
    v.as_array().ok_or_else(|| malformed(path, "an array", v))
}

fn required<'v>(
    map: &'v Map<String, Value>,
    path: &str,
    key: &'static str,
) -> Result<&'v Value, FormatError> {
    map.get(key).ok_or_else(|| FormatError::MissingKey {
        path: path.to_owned(),
        key,
    })
}

/// A JSON integer in `0..=MAX_VALUE`.
fn integer(v: &Value, path: &str) -> Result<i64, FormatError> {
    let n = match v {
        Value::Number(n) => n,
        other => return Err(malformed(path, "an integer", other)),
    };
    if let Some(i) = n.as_i64() {
        if i < 0 {
            Err(FormatError::NegativeNumber {
                path: path.to_owned(),
                value: i,
            })
        } else if i > MAX_VALUE {
            Err(FormatError::NumberTooLarge {
                path: path.to_owned(),
                value: i.to_string(),
            })
        } else {
            Ok(i)
        }
    } else if n.is_u64() {
        Err(FormatError::NumberTooLarge {
            path: path.to_owned(),
            value: n.to_string(),
        })
    } else {
        Err(FormatError::NonIntegerNumber {
            path: path.to_owned(),
            found: n.to_string(),
        })
    }
}

fn optional_integer(map: &Map<String, Value>, path: &str, key: &str) -> Result<Option<i64>, FormatError> {
    map.get(key)
        .map(|v| integer(v, &format!("{path}/{key}")))
        .transpose()
}

fn index(v: &Value, path: &str) -> Result<usize, FormatError> {
    integer(v, path).map(|i| i as usize)
}

fn parse_json(text: &str) -> Result<Value, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::MalformedDocument {
        path: String::new(),
        message: e.to_string(),
    })
}

pub fn parse_instance(text: &str) -> Result<(Instance, ParseDiagnostics), FormatError> {
    parse_instance_with(text, &ParseOptions::default())
}

pub fn parse_instance_with(
    text: &str,
    options: &ParseOptions,
) -> Result<(Instance, ParseDiagnostics), FormatError> {
    let doc = parse_json(text)?;
    let mut reader = Reader {
        options,
        diagnostics: ParseDiagnostics::default(),
    };
    let root = reader.object(&doc, "", &["trains", "objective"])?;

    let mut trains = Vec::new();
    for (i, tv) in array(required(root, "", "trains")?, "/trains")?
        .iter()
        .enumerate()
    {
        let tpath = format!("/trains/{i}");
        let mut operations = Vec::new();
        for (a, ov) in array(tv, &tpath)?.iter().enumerate() {
            let opath = format!("{tpath}/{a}");
            operations.push(read_operation(&mut reader, ov, &opath)?);
        }
        trains.push(Train::new(operations));
    }

    let mut objective = Vec::new();
    for (c, cv) in array(required(root, "", "objective")?, "/objective")?
        .iter()
        .enumerate()
    {
        let cpath = format!("/objective/{c}");
        let map = reader.object(
            cv,
            &cpath,
            &["type", "train", "operation", "threshold", "increment", "coeff"],
        )?;
        let ty = required(map, &cpath, "type")?;
        let ty_path = format!("{cpath}/type");
        let ty = ty.as_str().ok_or_else(|| malformed(&ty_path, "a string", ty))?;
        if ty != OP_DELAY {
            return Err(FormatError::UnknownObjectiveType {
                path: ty_path,
                found: ty.to_owned(),
            });
        }
        objective.push(ObjectiveComponent {
            train: index(required(map, &cpath, "train")?, &format!("{cpath}/train"))?,
            operation: index(required(map, &cpath, "operation")?, &format!("{cpath}/operation"))?,
            threshold: optional_integer(map, &cpath, "threshold")?.unwrap_or(0),
            coeff: optional_integer(map, &cpath, "coeff")?.unwrap_or(0),
            increment: optional_integer(map, &cpath, "increment")?.unwrap_or(0),
        });
    }

    let instance = build_instance(trains, objective)?;
    Ok((instance, reader.diagnostics))
}

fn read_operation(reader: &mut Reader<'_>, v: &Value, path: &str) -> Result<Operation, FormatError> {
    let map = reader.object(
        v,
        path,
        &["start_lb", "start_ub", "min_duration", "resources", "successors"],
    )?;
    let min_duration = integer(
        required(map, path, "min_duration")?,
        &format!("{path}/min_duration"),
    )?;
    let start_lb = optional_integer(map, path, "start_lb")?.unwrap_or(0);
    let start_ub = match optional_integer(map, path, "start_ub")? {
        Some(ub) => UpperBound::Finite(ub),
        None => UpperBound::Unbounded,
    };

    let mut resources = Vec::new();
    if let Some(rv) = map.get("resources") {
        let rpath = format!("{path}/resources");
        for (k, uv) in array(rv, &rpath)?.iter().enumerate() {
            let upath = format!("{rpath}/{k}");
            let umap = reader.object(uv, &upath, &["resource", "release_time"])?;
            let name = required(umap, &upath, "resource")?;
            let name_path = format!("{upath}/resource");
            let name = name
                .as_str()
                .ok_or_else(|| malformed(&name_path, "a string", name))?;
            let release_time = optional_integer(umap, &upath, "release_time")?.unwrap_or(0);
            resources.push(ResourceUsage::new(name, release_time));
        }
    }

    let spath = format!("{path}/successors");
    let successors = array(required(map, path, "successors")?, &spath)?
        .iter()
        .enumerate()
        .map(|(k, s)| index(s, &format!("{spath}/{k}")))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Operation {
        start_lb,
        start_ub,
        min_duration,
        resources,
        successors,
    })
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Canonical text form of an instance: defaulted keys omitted, one operation
/// per line, keys in a fixed order.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::from("{\n  \"trains\": [");
    for (i, train) in instance.trains().iter().enumerate() {
        out.push_str(if i == 0 { "\n    [" } else { ",\n    [" });
        for (a, op) in train.operations.iter().enumerate() {
            out.push_str(if a == 0 { "\n      " } else { ",\n      " });
            write_operation(&mut out, op);
        }
        out.push_str("\n    ]");
    }
    if !instance.trains().is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("],\n  \"objective\": [");
    for (c, comp) in instance.objective().iter().enumerate() {
        out.push_str(if c == 0 { "\n    " } else { ",\n    " });
        let _ = write!(
            out,
            "{{\"type\": \"{OP_DELAY}\", \"train\": {}, \"operation\": {}",
            comp.train, comp.operation
        );
        if comp.threshold != 0 {
            let _ = write!(out, ", \"threshold\": {}", comp.threshold);
        }
        if comp.coeff != 0 {
            let _ = write!(out, ", \"coeff\": {}", comp.coeff);
        }
        if comp.increment != 0 {
            let _ = write!(out, ", \"increment\": {}", comp.increment);
        }
        out.push('}');
    }
    if !instance.objective().is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

fn write_operation(out: &mut String, op: &Operation) {
    out.push('{');
    if op.start_lb != 0 {
        let _ = write!(out, "\"start_lb\": {}, ", op.start_lb);
    }
    if let UpperBound::Finite(ub) = op.start_ub {
        let _ = write!(out, "\"start_ub\": {ub}, ");
    }
    let _ = write!(out, "\"min_duration\": {}", op.min_duration);
    if !op.resources.is_empty() {
        out.push_str(", \"resources\": [");
        for (k, u) in op.resources.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{{\"resource\": {}", json_str(&u.resource));
            if u.release_time != 0 {
                let _ = write!(out, ", \"release_time\": {}", u.release_time);
            }
            out.push('}');
        }
        out.push(']');
    }
    out.push_str(", \"successors\": [");
    for (k, s) in op.successors.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{s}");
    }
    out.push_str("]}");
}

/// Reads a solution file. Event order is preserved exactly; unknown keys are
/// ignored.
pub fn parse_solution(text: &str) -> Result<Solution, FormatError> {
    let doc = parse_json(text)?;
    let root = doc.as_object().ok_or_else(|| malformed("", "an object", &doc))?;
    let objective_value = integer(required(root, "", "objective_value")?, "/objective_value")?;
    let mut events = Vec::new();
    for (k, ev) in array(required(root, "", "events")?, "/events")?
        .iter()
        .enumerate()
    {
        let path = format!("/events/{k}");
        let map = ev.as_object().ok_or_else(|| malformed(&path, "an object", ev))?;
        events.push(Event {
            time: integer(required(map, &path, "time")?, &format!("{path}/time"))?,
            train: index(required(map, &path, "train")?, &format!("{path}/train"))?,
            operation: index(required(map, &path, "operation")?, &format!("{path}/operation"))?,
        });
    }
    Ok(Solution {
        objective_value,
        events,
    })
}

pub fn write_solution(solution: &Solution) -> String {
    let mut out = format!(
        "{{\n  \"objective_value\": {},\n  \"events\": [",
        solution.objective_value
    );
    for (k, e) in solution.events.iter().enumerate() {
        out.push_str(if k == 0 { "\n    " } else { ",\n    " });
        let _ = write!(
            out,
            "{{\"time\": {}, \"train\": {}, \"operation\": {}}}",
            e.time, e.train, e.operation
        );
    }
    if !solution.events.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_defaults() {
        let (inst, diag) =
            parse_instance(r#"{"trains": [[{"min_duration": 0, "successors": []}]], "objective": []}"#)
                .unwrap();
        assert!(diag.warnings.is_empty());
        let op = &inst.train(0).operations[0];
        assert_eq!(op.start_lb, 0);
        assert_eq!(op.start_ub, UpperBound::Unbounded);
        assert!(op.resources.is_empty());
    }

    #[test]
    fn negative_duration_reports_path() {
        let err = parse_instance(
            r#"{"trains": [[{"min_duration": 0, "successors": [1]}, {"min_duration": -1, "successors": []}]], "objective": []}"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            FormatError::NegativeNumber {
                path: "/trains/0/1/min_duration".into(),
                value: -1
            }
        );
    }

    #[test]
    fn floats_and_exponents_are_rejected() {
        for num in ["5.0", "1e3", "0.5"] {
            let text =
                format!(r#"{{"trains": [[{{"min_duration": {num}, "successors": []}}]], "objective": []}}"#);
            let err = parse_instance(&text).unwrap_err();
            assert!(
                matches!(err, FormatError::NonIntegerNumber { .. }),
                "{num}: {err}"
            );
        }
    }

    #[test]
    fn huge_numbers_are_rejected() {
        let text =
            r#"{"trains": [[{"min_duration": 18446744073709551615, "successors": []}]], "objective": []}"#;
        assert!(matches!(
            parse_instance(text).unwrap_err(),
            FormatError::NumberTooLarge { .. }
        ));
    }

    #[test]
    fn unknown_keys_warn_or_fail_in_strict_mode() {
        let text = r#"{"trains": [[{"min_duration": 0, "successors": [], "color": "red"}]], "objective": [], "version": 2}"#;
        let (_, diag) = parse_instance(text).unwrap();
        let paths: Vec<_> = diag.warnings.iter().map(|w| w.path.as_str()).collect();
        assert_eq!(paths, ["/version", "/trains/0/0/color"]);
        let strict = ParseOptions { strict: true };
        assert!(matches!(
            parse_instance_with(text, &strict).unwrap_err(),
            FormatError::UnknownKey { .. }
        ));
    }

    #[test]
    fn objective_type_is_checked() {
        let text = r#"{"trains": [[{"min_duration": 0, "successors": []}]], "objective": [{"type": "op_early", "train": 0, "operation": 0}]}"#;
        assert_eq!(parse_instance(text).unwrap_err().path(), "/objective/0/type");
    }

    #[test]
    fn model_errors_carry_paths() {
        let text = r#"{"trains": [[{"min_duration": 0, "successors": [0]}]], "objective": []}"#;
        let err = parse_instance(text).unwrap_err();
        assert_eq!(err.path(), "/trains/0/0/successors");
        assert!(matches!(
            err,
            FormatError::Model {
                source: ModelError::CyclicGraph { .. },
                ..
            }
        ));
    }

    #[test]
    fn syntax_errors_are_malformed() {
        assert!(matches!(
            parse_instance("{\"trains\": [").unwrap_err(),
            FormatError::MalformedDocument { .. }
        ));
        assert!(matches!(
            parse_instance("[]").unwrap_err(),
            FormatError::MalformedDocument { .. }
        ));
    }

    #[test]
    fn missing_train_in_event() {
        let err =
            parse_solution(r#"{"objective_value": 0, "events": [{"time": 0, "operation": 0}]}"#).unwrap_err();
        assert_eq!(
            err,
            FormatError::MissingKey {
                path: "/events/0".into(),
                key: "train"
            }
        );
    }

    #[test]
    fn empty_solution_round_trips() {
        let s = parse_solution(r#"{"objective_value": 0, "events": []}"#).unwrap();
        assert_eq!(s, Solution::default());
        assert_eq!(parse_solution(&write_solution(&s)).unwrap(), s);
    }

    #[test]
    fn defaults_are_omitted_on_write() {
        let (inst, _) = parse_instance(
            r#"{"trains": [[{"start_lb": 0, "min_duration": 3, "resources": [{"resource": "A", "release_time": 0}], "successors": []}]], "objective": [{"type": "op_delay", "train": 0, "operation": 0, "threshold": 0, "coeff": 2}]}"#,
        )
        .unwrap();
        let text = write_instance(&inst);
        assert!(!text.contains("start_lb"));
        assert!(!text.contains("start_ub"));
        assert!(!text.contains("release_time"));
        assert!(!text.contains("threshold"));
        assert!(text.contains("\"coeff\": 2"));
        assert_eq!(parse_instance(&text).unwrap().0, inst);
    }
}
