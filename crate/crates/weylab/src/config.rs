//! Flat key-value config files: one `key = <JSON value>` per line, `#`
//! comments. Dotted keys namespace the scenarios; unknown keys are rejected
//! after each scenario has consumed its own.

use std::collections::BTreeMap;

use serde_json::Value;

#[derive(Debug)]
pub enum RunError {
    /// Schema violation: unparsable file, unknown key, wrong type or range.
    Config(String),
    /// A valid scenario failed while running (domain errors, I/O).
    Scenario(String),
    /// `--check` was requested and a criterion did not hold.
    CheckFailed(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Scenario(_) => 3,
            RunError::CheckFailed(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Scenario(m) | RunError::CheckFailed(m) => m,
        }
    }
}

impl From<crate::error::Error> for RunError {
    fn from(e: crate::error::Error) -> Self {
        RunError::Scenario(e.to_string())
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone)]
pub struct RawConfig {
    map: BTreeMap<String, Value>,
}

impl RawConfig {
    pub fn parse(text: &str) -> RunResult<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(RunError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-')
            {
                return Err(RunError::Config(format!("line {}: bad key `{key}`", lineno + 1)));
            }
            let value: Value = serde_json::from_str(value.trim()).map_err(|e| {
                RunError::Config(format!("line {}: value for `{key}` is not JSON: {e}", lineno + 1))
            })?;
            if map.insert(key.to_string(), value).is_some() {
                return Err(RunError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(RawConfig { map })
    }

    pub fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    pub fn take_str(&mut self, key: &str) -> RunResult<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(RunError::Config(format!("`{key}` must be a string, got {v}"))),
        }
    }

    pub fn take_f64(&mut self, key: &str) -> RunResult<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| RunError::Config(format!("`{key}` must be a number, got {v}")))
                .map(Some),
        }
    }

    pub fn take_u64(&mut self, key: &str) -> RunResult<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| {
                    RunError::Config(format!("`{key}` must be a non-negative integer, got {v}"))
                })
                .map(Some),
        }
    }

    pub fn take_i64(&mut self, key: &str) -> RunResult<Option<i64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .as_i64()
                .ok_or_else(|| RunError::Config(format!("`{key}` must be an integer, got {v}")))
                .map(Some),
        }
    }

    pub fn take_bool(&mut self, key: &str) -> RunResult<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(b)),
            Some(v) => Err(RunError::Config(format!("`{key}` must be a boolean, got {v}"))),
        }
    }

    pub fn take_vec3(&mut self, key: &str) -> RunResult<Option<[f64; 3]>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) if a.len() == 3 => {
                let mut out = [0.0; 3];
                for (i, v) in a.iter().enumerate() {
                    out[i] = v.as_f64().ok_or_else(|| {
                        RunError::Config(format!("`{key}` components must be numbers"))
                    })?;
                }
                Ok(Some(out))
            }
            Some(v) => Err(RunError::Config(format!("`{key}` must be a 3-vector, got {v}"))),
        }
    }

    pub fn take_array(&mut self, key: &str) -> RunResult<Option<Vec<Value>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a)),
            Some(v) => Err(RunError::Config(format!("`{key}` must be an array, got {v}"))),
        }
    }

    /// Every scenario calls this last: leftover keys are schema violations.
    pub fn finish(self) -> RunResult<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(RunError::Config(format!("unknown key `{key}`")));
        }
        Ok(())
    }
}
