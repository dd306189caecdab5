use std::fmt::Display;
use std::io::{Read, Write};

/// A command that could not finish, with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    /// Short machine-readable tag, e.g. `CyclicGraph` or `Io`.
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn usage(kind: &str, message: impl Display) -> Self {
        Failure {
            code: 2,
            kind: kind.to_string(),
            message: message.to_string(),
        }
    }

    pub fn rejected(kind: &str, message: impl Display) -> Self {
        Failure {
            code: 1,
            kind: kind.to_string(),
            message: message.to_string(),
        }
    }

    pub fn internal(message: impl Display) -> Self {
        Failure {
            code: 3,
            kind: "Internal".to_string(),
            message: message.to_string(),
        }
    }

    pub fn report(&self, json: bool) {
        if json {
            let doc = serde_json::json!({
                "error": { "kind": self.kind, "message": self.message },
                "exit_code": self.code,
            });
            println!("{doc}");
        } else {
            eprintln!("error[{}]: {}", self.kind, self.message);
        }
    }
}

/// Name of an enum variant from its `Debug` rendering.
pub fn variant_name(value: &impl std::fmt::Debug) -> String {
    let text = format!("{value:?}");
    text.split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or_default()
        .to_string()
}

pub fn read_input(path: &str) -> Result<String, Failure> {
    let mut text = String::new();
    let result = if path == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    result.map_err(|e| Failure::usage("Io", format!("cannot read {path}: {e}")))?;
    Ok(text)
}

pub fn write_output(path: &str, text: &str) -> Result<(), Failure> {
    let result = if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes()).and_then(|_| out.flush())
    } else {
        std::fs::write(path, text)
    };
    result.map_err(|e| Failure::internal(format!("cannot write {path}: {e}")))
}

/// `n thing` or `n things`.
pub fn count(n: usize, thing: &str) -> String {
    if n == 1 {
        format!("{n} {thing}")
    } else {
        format!("{n} {thing}s")
    }
}
