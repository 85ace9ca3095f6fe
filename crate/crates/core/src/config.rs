//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! sane.shape = 1
//! sane.rate = 0.001
//! damage.rate = 0.0005
//! inspection.kind = deterministic   # or uniform, which also needs inspection.h
//! inspection.c = 1000
//! horizon = 50000000
//! seed = 1
//! confidence = 0.95
//! grid = 1e5:5e7:500                # or a comma list of times
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::formulas::Model;
use crate::laws::{DamageLaw, InspectionLaw, SaneLaw};
use crate::simulator::CountSnapshot;

/// Snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    List(Vec<f64>),
    /// `count` evenly spaced times from `start` to `end`, both included.
    Range { start: f64, end: f64, count: usize },
}

impl Default for Grid {
    fn default() -> Self {
        Grid::List(Vec::new())
    }
}

impl Grid {
    pub fn times(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { start, end, count } => match count {
                0 => Vec::new(),
                1 => vec![end],
                _ => (0..count)
                    .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
                    .collect(),
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.times().is_empty()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Grid::List(Vec::new()));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, n] = parts[..] else {
                return Err(format!("expected start:end:count, got {s:?}"));
            };
            let (start, end) = (num(a)?, num(b)?);
            let count = n.trim().parse::<usize>().map_err(|e| format!("{n:?}: {e}"))?;
            if !(start >= 0.0 && end >= start && end.is_finite()) {
                return Err(format!("need 0 <= start <= end, got {start}:{end}"));
            }
            return Ok(Grid::Range { start, end, count });
        }
        let times = s.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?;
        if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err("grid times must be finite and non-negative".into());
        }
        Ok(Grid::List(times))
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::List(v) => {
                let parts: Vec<String> = v.iter().map(|t| t.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
            Grid::Range { start, end, count } => write!(f, "{start}:{end}:{count}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub shape: u32,
    pub mu: f64,
    pub lambda: f64,
    pub inspection: InspectionLaw<f64>,
    pub horizon: f64,
    pub seed: Option<u64>,
    pub confidence: f64,
    pub grid: Grid,
}

impl Default for ModelConfig {
    /// Exponential time to damage at rate `10⁻³`, damage rate `5·10⁻⁴`, inspections
    /// every 1000 time units, observed for `5·10⁷`.
    fn default() -> Self {
        Self {
            shape: 1,
            mu: 1e-3,
            lambda: 5e-4,
            inspection: InspectionLaw::Deterministic { c: 1000.0 },
            horizon: 5e7,
            seed: None,
            confidence: 0.95,
            grid: Grid::default(),
        }
    }
}

pub const KEYS: [&str; 10] = [
    "sane.shape",
    "sane.rate",
    "damage.rate",
    "inspection.kind",
    "inspection.c",
    "inspection.h",
    "horizon",
    "seed",
    "confidence",
    "grid",
];

/// Raw inspection settings, assembled into a law once all keys are known.
#[derive(Debug, Clone, Copy)]
struct InspectionKeys {
    uniform: bool,
    c: f64,
    h: Option<f64>,
}

impl ModelConfig {
    pub fn model(&self) -> Result<Model<f64>> {
        Ok(Model::new(
            SaneLaw::new(self.shape, self.mu)?,
            DamageLaw::new(self.lambda)?,
            self.inspection,
        ))
    }

    /// Parses a configuration file; keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `key = value`, got {line:?}"),
                });
            };
            pairs.push((Some(i + 1), key.trim().to_string(), value.trim().to_string()));
        }
        Self::default().with_pairs(pairs)
    }

    /// Applies `(line, key, value)` overrides in order and validates the result.
    pub fn with_pairs(&self, pairs: Vec<(Option<usize>, String, String)>) -> Result<Self> {
        let mut cfg = self.clone();
        let mut insp = InspectionKeys {
            uniform: !cfg.inspection.is_deterministic(),
            c: cfg.inspection.c(),
            h: (!cfg.inspection.is_deterministic()).then(|| cfg.inspection.h()),
        };
        let mut last_inspection_line = None;
        for (line, key, value) in pairs {
            let err = |message: String| Error::Config {
                line,
                key: key.clone(),
                message,
            };
            fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
            where
                T::Err: fmt::Display,
            {
                v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
            }
            match key.as_str() {
                "sane.shape" => cfg.shape = num(&value).map_err(err)?,
                "sane.rate" => cfg.mu = num(&value).map_err(err)?,
                "damage.rate" => cfg.lambda = num(&value).map_err(err)?,
                "inspection.kind" => {
                    insp.uniform = match value.as_str() {
                        "deterministic" => false,
                        "uniform" => true,
                        other => {
                            return Err(err(format!(
                                "expected deterministic or uniform, got {other:?}"
                            )))
                        }
                    };
                    last_inspection_line = line;
                }
                "inspection.c" => insp.c = num(&value).map_err(err)?,
                "inspection.h" => insp.h = Some(num(&value).map_err(err)?),
                "horizon" => cfg.horizon = num(&value).map_err(err)?,
                "seed" => cfg.seed = Some(num(&value).map_err(err)?),
                "confidence" => cfg.confidence = num(&value).map_err(err)?,
                "grid" => cfg.grid = value.parse().map_err(err)?,
                _ => return Err(err(format!("unknown key; expected one of {}", KEYS.join(", ")))),
            }
        }
        let invalid = |key: &str, message: String| Error::Config {
            line: None,
            key: key.into(),
            message,
        };
        cfg.inspection = if insp.uniform {
            let h = insp.h.ok_or_else(|| Error::Config {
                line: last_inspection_line,
                key: "inspection.h".into(),
                message: "required for uniform inspections".into(),
            })?;
            InspectionLaw::uniform(insp.c, h)
        } else {
            InspectionLaw::deterministic(insp.c)
        }
        .map_err(|e| invalid("inspection", e.to_string()))?;
        SaneLaw::new(cfg.shape, cfg.mu).map_err(|e| invalid("sane", e.to_string()))?;
        DamageLaw::new(cfg.lambda).map_err(|e| invalid("damage.rate", e.to_string()))?;
        if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be positive, got {}", cfg.horizon)));
        }
        if !(0.0..1.0).contains(&cfg.confidence) {
            return Err(invalid("confidence", format!("must lie in [0, 1), got {}", cfg.confidence)));
        }
        Ok(cfg)
    }

    /// Renders the configuration in the format [`ModelConfig::parse`] reads.
    pub fn serialize(&self) -> String {
        let mut s = format!(
            "sane.shape = {}\nsane.rate = {}\ndamage.rate = {}\n",
            self.shape, self.mu, self.lambda
        );
        match self.inspection {
            InspectionLaw::Deterministic { c } => {
                s += &format!("inspection.kind = deterministic\ninspection.c = {c}\n")
            }
            InspectionLaw::Uniform { c, h } => {
                s += &format!("inspection.kind = uniform\ninspection.c = {c}\ninspection.h = {h}\n")
            }
        }
        s += &format!("horizon = {}\n", self.horizon);
        if let Some(seed) = self.seed {
            s += &format!("seed = {seed}\n");
        }
        s += &format!("confidence = {}\n", self.confidence);
        if !self.grid.is_empty() {
            s += &format!("grid = {}\n", self.grid);
        }
        s
    }
}

/// A published run: the setup it was simulated under and the counts it ended with.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub config: ModelConfig,
    pub counts: CountSnapshot,
}

pub const PRESET_NAMES: [&str; 4] = ["table1", "table2", "table3", "table4"];

/// Counts observed at `T ≈ 5·10⁷` for exponential or `Γ(2, μ)` times to damage, under
/// periodic or uniformly jittered inspections.
pub fn preset(name: &str) -> Option<Preset> {
    let (shape, uniform, t, n_r, n_i, n_f) = match name {
        "table1" => (1, false, 50001908.0, 33501, 53116, 8255),
        "table2" => (2, false, 50002058.0, 20668, 51503, 4369),
        "table3" => (1, true, 50001271.0, 33613, 53133, 8278),
        "table4" => (2, true, 50000355.0, 20470, 51522, 4452),
        _ => return None,
    };
    let inspection = if uniform {
        InspectionLaw::Uniform { c: 1000.0, h: 100.0 }
    } else {
        InspectionLaw::Deterministic { c: 1000.0 }
    };
    Some(Preset {
        name: PRESET_NAMES.iter().find(|n| **n == name)?,
        config: ModelConfig {
            shape,
            inspection,
            horizon: t,
            ..ModelConfig::default()
        },
        counts: CountSnapshot { t, n_r, n_i, n_f },
    })
}
