//! Deterministic JSON rendering and the run manifest.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Every float with 17 significant digits: positional notation for
/// moderate exponents, scientific otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-5..17).contains(&exp) {
        return format!("{mant}e{exp}");
    }
    let decimals = (16 - exp).max(1) as usize;
    format!("{x:.decimals$}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.push_str(&"  ".repeat(n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                out.push_str(&fmt_f64(n.as_f64().expect("finite float")));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            // arrays of scalars stay on one line
            if a.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

pub fn to_json<T: Serialize>(x: &T) -> String {
    let v = serde_json::to_value(x).expect("serializable output");
    let mut s = String::new();
    write_value(&mut s, &v, 0);
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: Value,
    /// sha256 of every input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub outputs: Vec<String>,
}

pub fn digest(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
