//! Flat `key = value` text files. `#` starts a comment; blank lines are
//! ignored. Vectors are comma-separated.

use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(Error::BadValue {
                key: body.to_string(),
                line,
                reason: "expected `key = value`".into(),
            });
        };
        out.push(Entry {
            line,
            key: k.trim().to_string(),
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

impl Entry {
    fn bad(&self, reason: impl Into<String>) -> Error {
        Error::BadValue {
            key: self.key.clone(),
            line: self.line,
            reason: reason.into(),
        }
    }

    pub fn f64(&self) -> Result<f64> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.bad(format!("`{}` is not a number", self.value)))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad("value must be finite"))
        }
    }

    pub fn usize(&self) -> Result<usize> {
        self.value
            .parse()
            .map_err(|_| self.bad(format!("`{}` is not a non-negative integer", self.value)))
    }

    pub fn bool(&self) -> Result<bool> {
        match self.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            other => Err(self.bad(format!("`{other}` is not a boolean"))),
        }
    }

    pub fn floats(&self) -> Result<Vec<f64>> {
        self.value
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.bad(format!("`{s}` is not a number")))
            })
            .collect()
    }

    pub fn vec3(&self) -> Result<Vec3> {
        match self.floats()?.as_slice() {
            [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
            v => Err(self.bad(format!("expected 3 comma-separated numbers, got {}", v.len()))),
        }
    }

    pub fn err(&self, reason: impl Into<String>) -> Error {
        self.bad(reason)
    }
}
