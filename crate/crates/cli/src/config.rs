//! Optional JSON configuration file. Command-line flags override it, and it
//! overrides the built-in defaults.
//!
//! ```json
//! {
//!   "threads": 4,
//!   "seed": 7,
//!   "train": { "loss": "f1", "c": 10.0, "h": "inf", "v": 1 },
//!   "oracle": { "trials": 500, "max_len": 6 }
//! }
//! ```

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::Context;
use serde::Deserialize;

use f1parse::lossdp::LossKind;

/// Horizontal markovization order: a number or `inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizontal(pub Option<usize>);

impl FromStr for Horizontal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inf" | "infinity" | "∞" => Ok(Horizontal(None)),
            _ => s
                .parse::<usize>()
                .map(|h| Horizontal(Some(h)))
                .map_err(|_| format!("expected a non-negative integer or `inf`, got {s:?}")),
        }
    }
}

impl fmt::Display for Horizontal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(h) => write!(f, "{h}"),
            None => f.write_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizontal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(h) => Ok(Horizontal(Some(h))),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub loss: Option<String>,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub qp_tolerance: Option<f64>,
    pub qp_max_passes: Option<usize>,
    pub batch_size: Option<usize>,
    pub h: Option<Horizontal>,
    pub v: Option<usize>,
    pub unk_threshold: Option<usize>,
    pub include_preterminals: Option<bool>,
}

impl TrainSection {
    pub fn loss_kind(&self) -> anyhow::Result<Option<LossKind>> {
        self.loss
            .as_deref()
            .map(|s| s.parse::<LossKind>().map_err(anyhow::Error::from))
            .transpose()
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub trials: Option<usize>,
    pub max_len: Option<usize>,
    pub max_productions: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
