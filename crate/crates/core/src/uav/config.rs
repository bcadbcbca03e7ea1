//! `key = value` configuration for the UAV twin model.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Which receive-control behaviour (and predictive model) the twin uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Commands older than the last accepted one are dropped on receipt.
    Fixed,
    /// Every delivered command overwrites the last accepted one.
    BuggyP8,
    /// The digital update ignores non-positive sensor readings.
    BrokenP3,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Fixed => "fixed",
            Variant::BuggyP8 => "buggy-p8",
            Variant::BrokenP3 => "broken-p3",
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(Variant::Fixed),
            "buggy-p8" => Ok(Variant::BuggyP8),
            "broken-p3" => Ok(Variant::BrokenP3),
            other => Err(format!("unknown variant `{other}` (fixed | buggy-p8 | broken-p3)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UavConfig {
    /// Number of independently transmitting sensors.
    pub sensors: usize,
    /// Delivery window: how far from the head a channel may deliver.
    pub eta: usize,
    pub c_max: u32,
    pub t_max: u32,
    pub s0: i64,
    pub d0: i64,
    pub delta: i64,
    pub d_min: i64,
    pub noise: i64,
    pub zeta2: i64,
    pub zeta3: i64,
    pub variant: Variant,
    /// Optional bound on `|d - s|` at non-failure termination, checked as
    /// part of the P2 consistency property.
    pub sync_tol: Option<i64>,
    /// Split execute-and-damage into two separately scheduled steps.
    pub split_damage: bool,
}

impl Default for UavConfig {
    fn default() -> Self {
        Self {
            sensors: 2,
            eta: 2,
            c_max: 3,
            t_max: 4,
            s0: 2,
            d0: 2,
            delta: 1,
            d_min: 3,
            noise: 1,
            zeta2: 1,
            zeta3: 5,
            variant: Variant::Fixed,
            sync_tol: None,
            split_damage: false,
        }
    }
}

const KEYS: &[&str] = &[
    "M",
    "eta",
    "c_max",
    "t_max",
    "s0",
    "d0",
    "delta",
    "d_min",
    "noise",
    "zeta2",
    "zeta3",
    "variant",
    "sync_tol",
    "split_damage",
];

impl UavConfig {
    pub fn baseline() -> Self {
        Self::default()
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: &str| Err(ConfigError::Invalid(msg.to_owned()));
        if !(1..=255).contains(&self.sensors) {
            return bad("M must be between 1 and 255");
        }
        if self.eta < 1 {
            return bad("eta must be at least 1");
        }
        if self.c_max < 1 || self.t_max < 1 {
            return bad("c_max and t_max must be at least 1");
        }
        if self.delta < 1 {
            return bad("delta must be at least 1");
        }
        for (name, v) in [("s0", self.s0), ("d0", self.d0), ("d_min", self.d_min)] {
            if !(0..=100).contains(&v) {
                return Err(ConfigError::Invalid(format!("{name} must lie in [0, 100]")));
            }
        }
        if self.noise < 0 || self.zeta2 < 0 || self.zeta3 < 0 {
            return bad("noise, zeta2 and zeta3 must be non-negative");
        }
        if self.sync_tol.is_some_and(|t| t < 0) {
            return bad("sync_tol must be non-negative");
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = UavConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, msg: "expected `key = value`".into() });
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            if !seen.insert(key.to_owned()) {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
            let bad = |msg: String| ConfigError::BadValue { line, key: key.into(), msg };
            let int = || value.parse::<i64>().map_err(|e| bad(e.to_string()));
            match key {
                "M" => cfg.sensors = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "eta" => cfg.eta = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "c_max" => cfg.c_max = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "t_max" => cfg.t_max = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "s0" => cfg.s0 = int()?,
                "d0" => cfg.d0 = int()?,
                "delta" => cfg.delta = int()?,
                "d_min" => cfg.d_min = int()?,
                "noise" => cfg.noise = int()?,
                "zeta2" => cfg.zeta2 = int()?,
                "zeta3" => cfg.zeta3 = int()?,
                "variant" => cfg.variant = value.parse().map_err(bad)?,
                "sync_tol" => cfg.sync_tol = if value == "none" { None } else { Some(int()?) },
                "split_damage" => {
                    cfg.split_damage = value.parse().map_err(|e: std::str::ParseBoolError| bad(e.to_string()))?
                }
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Every key, in canonical order; re-parses to the same configuration.
impl fmt::Display for UavConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M = {}", self.sensors)?;
        writeln!(f, "eta = {}", self.eta)?;
        writeln!(f, "c_max = {}", self.c_max)?;
        writeln!(f, "t_max = {}", self.t_max)?;
        writeln!(f, "s0 = {}", self.s0)?;
        writeln!(f, "d0 = {}", self.d0)?;
        writeln!(f, "delta = {}", self.delta)?;
        writeln!(f, "d_min = {}", self.d_min)?;
        writeln!(f, "noise = {}", self.noise)?;
        writeln!(f, "zeta2 = {}", self.zeta2)?;
        writeln!(f, "zeta3 = {}", self.zeta3)?;
        writeln!(f, "variant = {}", self.variant.as_str())?;
        match self.sync_tol {
            Some(t) => writeln!(f, "sync_tol = {t}")?,
            None => writeln!(f, "sync_tol = none")?,
        }
        writeln!(f, "split_damage = {}", self.split_damage)
    }
}
