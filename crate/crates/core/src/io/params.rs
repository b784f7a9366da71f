//! Learned model parameters as `key=value` lines.
//!
//! ```text
//! # comment
//! w0=-3.2
//! w1=-12.5
//! gamma=1,0.42,0.8
//! ```

use std::fs;
use std::path::Path;

use crate::error::{GbError, Result};
use crate::postprocess::LogisticParams;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    pub logistic: LogisticParams,
    /// Per-layer scales; empty means all ones.
    pub gamma: Vec<f64>,
}

impl ModelParams {
    pub fn to_text(&self) -> String {
        let mut s = format!("w0={:?}\nw1={:?}\n", self.logistic.w0, self.logistic.w1);
        if !self.gamma.is_empty() {
            let g: Vec<String> = self.gamma.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&format!("gamma={}\n", g.join(",")));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ModelParams::default();
        let num = |key: &str, v: &str| -> Result<f64> {
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| GbError::Parse(format!("{key}: invalid number '{}'", v.trim())))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(GbError::Parse(format!("{key}: non-finite value")))
            }
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GbError::Parse(format!("line {}: expected key=value", i + 1)))?;
            match key.trim() {
                "w0" => out.logistic.w0 = num("w0", value)?,
                "w1" => out.logistic.w1 = num("w1", value)?,
                "gamma" => {
                    out.gamma = value
                        .split(',')
                        .map(|v| num("gamma", v))
                        .collect::<Result<Vec<_>>>()?;
                    if out.gamma.iter().any(|&g| g <= 0.0) {
                        return Err(GbError::Parse("gamma: scales must be positive".into()));
                    }
                }
                other => return Err(GbError::Parse(format!("line {}: unknown key '{other}'", i + 1))),
            }
        }
        Ok(out)
    }
}

pub fn read_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    ModelParams::parse(&fs::read_to_string(path)?)
}

pub fn write_params(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    fs::write(path, params.to_text())?;
    Ok(())
}
