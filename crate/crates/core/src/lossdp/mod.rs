//! Loss-augmented inference for slack rescaling.
//!
//! Finds `argmax_y Δ(y*, y) · (1 − w·Ψ(y*) + w·Ψ(y))` exactly for losses
//! that depend on a tree only through its true/false positive counts. The
//! chart keeps one best derivation per (span, symbol, tp, fp); the loss is
//! applied once at the root, where every reachable (tp, fp) is tried.
//!
//! Counts are taken either on the binarized trees themselves or, in
//! unbinarized mode, as the debinarized tree would give them: artificial
//! nodes contribute nothing and annotation is ignored when matching gold.

mod dp;
mod enumerate;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::treebank::{constituent_set, CountingConfig, CountingMode, GoldReference, Tree};

pub use dp::{
    fill_loss_chart, loss_augmented_infer, loss_augmented_infer_for_gold, ChartEntry, LaiResult, Layer, LossChart,
};
pub use enumerate::{enumerate_parses, DEFAULT_ENUMERATION_BOUND};

/// The training losses compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    /// 1 − F1 counted on the debinarized trees.
    #[serde(rename = "f1")]
    F1,
    /// 1 − F1 counted on the binarized trees.
    #[serde(rename = "f1-bin")]
    F1Bin,
    /// Number of false positives on the binarized trees.
    #[serde(rename = "fp-bin")]
    FpBin,
    /// 0/1 loss on the binarized counted sets.
    #[serde(rename = "zeroone-bin")]
    ZeroOneBin,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::ZeroOneBin, LossKind::FpBin, LossKind::F1Bin, LossKind::F1];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::F1 => "f1",
            LossKind::F1Bin => "f1-bin",
            LossKind::FpBin => "fp-bin",
            LossKind::ZeroOneBin => "zeroone-bin",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown loss {s:?} (expected f1, f1-bin, fp-bin or zeroone-bin)")))
    }
}

/// A loss together with the counting it implies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LossMode {
    pub kind: LossKind,
    pub exclude_preterminals: bool,
}

impl LossMode {
    pub fn new(kind: LossKind) -> Self {
        LossMode {
            kind,
            exclude_preterminals: true,
        }
    }

    pub fn counting(&self) -> CountingConfig {
        let mode = match self.kind {
            LossKind::F1 => CountingMode::Unbinarized,
            _ => CountingMode::Binarized,
        };
        CountingConfig {
            mode,
            exclude_preterminals: self.exclude_preterminals,
        }
    }

    /// Δ as a function of the counts. Callers guarantee `tp <= gold_size`.
    pub fn loss(&self, tp: usize, fp: usize, gold_size: usize) -> f64 {
        match self.kind {
            LossKind::F1 | LossKind::F1Bin => 1.0 - f1_score(tp, fp, gold_size),
            LossKind::FpBin => fp as f64,
            LossKind::ZeroOneBin => {
                if tp == gold_size && fp == 0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

impl From<LossKind> for LossMode {
    fn from(kind: LossKind) -> Self {
        LossMode::new(kind)
    }
}

fn f1_score(tp: usize, fp: usize, gold_size: usize) -> f64 {
    let denom = gold_size + tp + fp;
    if denom == 0 {
        1.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// `2·tp / (|y*| + tp + fp)`; two empty sets score 1.
pub fn f1(tp: usize, fp: usize, gold_size: usize) -> Result<f64> {
    if tp > gold_size {
        return Err(Error::Argument(format!(
            "{tp} true positives exceed gold size {gold_size}"
        )));
    }
    Ok(f1_score(tp, fp, gold_size))
}

/// Counts of `tree` against `gold` under the mode's counting.
pub fn counts(mode: LossMode, gold: &GoldReference, tree: &Tree) -> (usize, usize) {
    gold.score(&constituent_set(tree, 0, mode.counting()))
}

/// Δ(y*, y) for a binarized prediction; `gold` must have been built with
/// `mode.counting()`.
pub fn delta(mode: LossMode, gold: &GoldReference, tree: &Tree) -> f64 {
    let (tp, fp) = counts(mode, gold, tree);
    mode.loss(tp, fp, gold.size)
}
