//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, repeated keys `s`, `M`, `K`
//! build the oscillator arrays positionally. Initial profiles are spelled as
//! `zero`, `gaussian(center, width, amplitude)` or
//! `bump(center, width, amplitude)`.

use pipewave::profiles::{Bump, Gaussian, Profile, Zero};
use pipewave::Medium;
use std::fmt;

pub const DEFAULT_SOUND_SPEED: f64 = 343.0;
pub const DEFAULT_DENSITY: f64 = 1.21;
pub const DEFAULT_SECTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, text: String },
    UnknownKey { line: usize, key: String },
    DuplicateKey { line: usize, key: String },
    MissingKey { key: &'static str },
    NonPositive { line: usize, key: String, value: f64 },
    Invalid { line: usize, key: String, message: String },
    ArrayLengths { s: usize, m: usize, k: usize },
    Empty,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, text } => {
                write!(f, "line {line}: expected `key = value`, got `{text}`")
            }
            ConfigError::UnknownKey { line, key } => {
                write!(f, "line {line}: unknown key `{key}` for this mode")
            }
            ConfigError::DuplicateKey { line, key } => {
                write!(f, "line {line}: key `{key}` given more than once")
            }
            ConfigError::MissingKey { key } => write!(f, "missing required key `{key}`"),
            ConfigError::NonPositive { line, key, value } => {
                write!(f, "line {line}: `{key}` must be positive, got {value}")
            }
            ConfigError::Invalid { line, key, message } => {
                write!(f, "line {line}: bad value for `{key}`: {message}")
            }
            ConfigError::ArrayLengths { s, m, k } => write!(
                f,
                "array keys differ in length: {s} positions `s`, {m} masses `M`, {k} stiffnesses `K`"
            ),
            ConfigError::Empty => write!(f, "config is empty"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw assignments in file order with their line numbers.
pub struct RawConfig {
    entries: Vec<(usize, String, String)>,
    consumed: Vec<bool>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: stripped.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: stripped.to_string(),
                });
            }
            entries.push((line, key, value));
        }
        if entries.is_empty() {
            return Err(ConfigError::Empty);
        }
        let consumed = vec![false; entries.len()];
        Ok(RawConfig { entries, consumed })
    }

    fn positions(&mut self, key: &str) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, (_, k, _)) in self.entries.iter().enumerate() {
            if k == key {
                self.consumed[i] = true;
                out.push(i);
            }
        }
        out
    }

    /// Single optional scalar.
    pub fn scalar(&mut self, key: &str) -> Result<Option<(usize, f64)>, ConfigError> {
        let pos = self.positions(key);
        match pos.len() {
            0 => Ok(None),
            1 => {
                let (line, _, value) = &self.entries[pos[0]];
                let v = value.parse::<f64>().map_err(|e| ConfigError::Invalid {
                    line: *line,
                    key: key.to_string(),
                    message: e.to_string(),
                })?;
                Ok(Some((*line, v)))
            }
            _ => {
                let (line, key, _) = &self.entries[pos[1]];
                Err(ConfigError::DuplicateKey {
                    line: *line,
                    key: key.clone(),
                })
            }
        }
    }

    pub fn require_scalar(&mut self, key: &'static str) -> Result<(usize, f64), ConfigError> {
        self.scalar(key)?.ok_or(ConfigError::MissingKey { key })
    }

    pub fn require_positive(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        let (line, v) = self.require_scalar(key)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError::NonPositive {
                line,
                key: key.to_string(),
                value: v,
            })
        }
    }

    pub fn positive_or(&mut self, key: &'static str, default: f64) -> Result<f64, ConfigError> {
        match self.scalar(key)? {
            None => Ok(default),
            Some((line, v)) => {
                if v > 0.0 && v.is_finite() {
                    Ok(v)
                } else {
                    Err(ConfigError::NonPositive {
                        line,
                        key: key.to_string(),
                        value: v,
                    })
                }
            }
        }
    }

    /// All values of a repeated key, in file order.
    pub fn list(&mut self, key: &str) -> Result<Vec<(usize, f64)>, ConfigError> {
        let pos = self.positions(key);
        let mut out = Vec::with_capacity(pos.len());
        for p in pos {
            let (line, _, value) = &self.entries[p];
            let v = value.parse::<f64>().map_err(|e| ConfigError::Invalid {
                line: *line,
                key: key.to_string(),
                message: e.to_string(),
            })?;
            out.push((*line, v));
        }
        Ok(out)
    }

    pub fn boolean_or(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        let pos = self.positions(key);
        match pos.last() {
            None => Ok(default),
            Some(&p) => {
                let (line, _, value) = &self.entries[p];
                match value.as_str() {
                    "true" | "1" | "yes" => Ok(true),
                    "false" | "0" | "no" => Ok(false),
                    other => Err(ConfigError::Invalid {
                        line: *line,
                        key: key.to_string(),
                        message: format!("expected true/false, got `{other}`"),
                    }),
                }
            }
        }
    }

    /// Named profile family, defaulting to `zero`.
    pub fn profile_or_zero(&mut self, key: &str) -> Result<Box<dyn Profile>, ConfigError> {
        let pos = self.positions(key);
        let Some(&p) = pos.last() else {
            return Ok(Box::new(Zero));
        };
        let (line, _, value) = self.entries[p].clone();
        parse_profile(&value).map_err(|message| ConfigError::Invalid {
            line,
            key: key.to_string(),
            message,
        })
    }

    /// Reject any assignment no accessor asked for.
    pub fn finish(&self) -> Result<(), ConfigError> {
        for (i, used) in self.consumed.iter().enumerate() {
            if !used {
                let (line, key, _) = &self.entries[i];
                return Err(ConfigError::UnknownKey {
                    line: *line,
                    key: key.clone(),
                });
            }
        }
        Ok(())
    }

    /// Medium from `a`, `rho0`, `S` with the documented defaults.
    pub fn medium(&mut self) -> Result<Medium, ConfigError> {
        let a = self.positive_or("a", DEFAULT_SOUND_SPEED)?;
        let rho0 = self.positive_or("rho0", DEFAULT_DENSITY)?;
        let section = self.positive_or("S", DEFAULT_SECTION)?;
        Ok(Medium::new(a, rho0, section).expect("validated positive"))
    }

    /// Oscillator arrays from repeated `s`, `M`, `K`.
    pub fn oscillator_array(&mut self) -> Result<pipewave::OscillatorArray, ConfigError> {
        let s = self.list("s")?;
        let m = self.list("M")?;
        let k = self.list("K")?;
        if s.len() != m.len() || s.len() != k.len() {
            return Err(ConfigError::ArrayLengths {
                s: s.len(),
                m: m.len(),
                k: k.len(),
            });
        }
        for (line, v) in m.iter().chain(k.iter()) {
            if !(*v > 0.0) {
                return Err(ConfigError::NonPositive {
                    line: *line,
                    key: "M/K".into(),
                    value: *v,
                });
            }
        }
        let first_line = s.first().map(|e| e.0).unwrap_or(1);
        pipewave::OscillatorArray::new(
            s.into_iter().map(|e| e.1).collect(),
            m.into_iter().map(|e| e.1).collect(),
            k.into_iter().map(|e| e.1).collect(),
        )
        .map_err(|e| ConfigError::Invalid {
            line: first_line,
            key: "s".into(),
            message: e.to_string(),
        })
    }
}

fn parse_profile(text: &str) -> Result<Box<dyn Profile>, String> {
    let text = text.trim();
    if text == "zero" {
        return Ok(Box::new(Zero));
    }
    let (name, rest) = text
        .split_once('(')
        .ok_or_else(|| format!("expected zero | gaussian(...) | bump(...), got `{text}`"))?;
    let inner = rest
        .strip_suffix(')')
        .ok_or_else(|| "missing closing parenthesis".to_string())?;
    let args: Vec<f64> = inner
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    if args.len() != 3 {
        return Err(format!("expected 3 arguments, got {}", args.len()));
    }
    let (center, width, amplitude) = (args[0], args[1], args[2]);
    if !(width > 0.0) {
        return Err(format!("width must be positive, got {width}"));
    }
    match name.trim() {
        "gaussian" => Ok(Box::new(Gaussian {
            center,
            width,
            amplitude,
        })),
        "bump" => Ok(Box::new(Bump {
            center,
            width,
            amplitude,
        })),
        other => Err(format!("unknown profile family `{other}`")),
    }
}
