//! Input plumbing: structured arguments accept inline JSON, `-` for
//! standard input, or a file path.

use std::fmt;
use std::io::Read;

pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl fmt::Display) -> CliError {
        CliError {
            code,
            message: message.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({"error": self.code, "message": self.message}).to_string()
    }
}

pub fn domain(err: impl fmt::Display) -> CliError {
    CliError::new("domain", err)
}

pub fn input(err: impl fmt::Display) -> CliError {
    CliError::new("input", err)
}

/// Resolves a structured argument to its JSON text.
pub fn read_payload(value: &str) -> Result<String, CliError> {
    let trimmed = value.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(value.to_string());
    }
    if value == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| input(format!("reading standard input: {e}")))?;
        return Ok(buf);
    }
    std::fs::read_to_string(value).map_err(|e| input(format!("reading {value}: {e}")))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(value: &str) -> Result<T, CliError> {
    let text = read_payload(value)?;
    serde_json::from_str(&text).map_err(|e| input(format!("bad JSON payload: {e}")))
}

/// Comma-separated floats, e.g. "0.5,-0.25".
pub fn parse_floats(value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| input(format!("bad number {p:?}: {e}")))
        })
        .collect()
}
