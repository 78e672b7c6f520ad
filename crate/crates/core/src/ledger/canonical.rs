//! Canonical JSON: sorted keys, no insignificant whitespace, floats in
//! fixed 8-decimal notation, byte strings as lowercase hex.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Canonical {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Bytes(Vec<u8>),
    Array(Vec<Canonical>),
    Object(BTreeMap<String, Canonical>),
}

/// Fixed 8-decimal rendering; negative zero renders as positive.
pub fn format_float(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("cannot serialize non-finite float {x}")));
    }
    let s = format!("{x:.8}");
    if s == "-0.00000000" {
        return Ok("0.00000000".into());
    }
    Ok(s)
}

/// Rounds `x` to the value its canonical rendering denotes.
pub fn round8(x: f64) -> Result<f64> {
    Ok(format_float(x)?.parse().expect("formatted float parses"))
}

impl Canonical {
    pub fn object<I, K>(fields: I) -> Self
    where
        I: IntoIterator<Item = (K, Canonical)>,
        K: Into<String>,
    {
        Canonical::Object(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn write(&self, out: &mut String) -> Result<()> {
        match self {
            Canonical::Null => out.push_str("null"),
            Canonical::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Canonical::Int(i) => out.push_str(&i.to_string()),
            Canonical::Float(f) => out.push_str(&format_float(*f)?),
            Canonical::Str(s) => out.push_str(&serde_json::to_string(s)?),
            Canonical::Bytes(b) => {
                out.push('"');
                out.push_str(&hex::encode(b));
                out.push('"');
            }
            Canonical::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out)?;
                }
                out.push(']');
            }
            Canonical::Object(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(k)?);
                    out.push(':');
                    v.write(out)?;
                }
                out.push('}');
            }
        }
        Ok(())
    }

    pub fn to_string(&self) -> Result<String> {
        let mut s = String::new();
        self.write(&mut s)?;
        Ok(s)
    }

    /// Parses JSON text into the canonical model. Numbers with a fraction
    /// or exponent are floats; integers stay integers. Byte strings cannot
    /// be distinguished from text and come back as `Str`.
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        Ok(match v {
            Value::Null => Canonical::Null,
            Value::Bool(b) => Canonical::Bool(*b),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Canonical::Int(i)
                } else if n.is_u64() {
                    return Err(Error::invalid(format!("integer {n} out of range")));
                } else {
                    Canonical::Float(n.as_f64().expect("json number"))
                }
            }
            Value::String(s) => Canonical::Str(s.clone()),
            Value::Array(a) => Canonical::Array(a.iter().map(Self::from_json).collect::<Result<_>>()?),
            Value::Object(m) => Canonical::Object(
                m.iter()
                    .map(|(k, v)| Ok((k.clone(), Self::from_json(v)?)))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub fn get(&self, key: &str) -> Option<&Canonical> {
        match self {
            Canonical::Object(m) => m.get(key),
            _ => None,
        }
    }
}
