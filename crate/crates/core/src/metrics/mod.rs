//! Corpus evaluation, paired comparison and loss-difference export.

mod wilcoxon;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::debinarize_tree;
use crate::lossdp::f1;
use crate::treebank::{constituent_set, constituents, CountingConfig, CountingMode, Tree};

pub use wilcoxon::{
    wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod, WilcoxonResult, EXACT_LIMIT, ZERO_TOLERANCE,
};

/// Root label of the flat tree written for sentences the grammar cannot parse.
pub const NOPARSE_LABEL: &str = "NOPARSE";

/// Flat `(NOPARSE tok …)` tree standing in for a failed parse.
pub fn noparse_tree<S: AsRef<str>>(tokens: &[S]) -> Tree {
    Tree::node(NOPARSE_LABEL, tokens.iter().map(|t| Tree::leaf(t.as_ref())).collect())
}

fn is_noparse(tree: &Tree) -> bool {
    tree.label().is_some_and(|l| l.base() == NOPARSE_LABEL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub tp: usize,
    pub fp: usize,
    pub gold_size: usize,
    /// `1 − F1` for this sentence.
    pub delta_f1: f64,
}

impl SentenceScore {
    pub fn exact(&self) -> bool {
        self.tp == self.gold_size && self.fp == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match: f64,
    pub n_sentences: usize,
    pub noparse: usize,
    #[serde(skip_serializing)]
    pub per_sentence: Vec<SentenceScore>,
}

fn ratio(num: usize, den: usize, both_empty: bool) -> f64 {
    if den == 0 {
        if both_empty {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

impl EvalResult {
    /// Micro-averaged aggregates of per-sentence counts.
    pub fn from_scores(per_sentence: Vec<SentenceScore>, noparse: usize) -> Self {
        let tp: usize = per_sentence.iter().map(|s| s.tp).sum();
        let predicted: usize = per_sentence.iter().map(|s| s.tp + s.fp).sum();
        let gold: usize = per_sentence.iter().map(|s| s.gold_size).sum();
        let both_empty = predicted == 0 && gold == 0;
        let precision = ratio(tp, predicted, both_empty);
        let recall = ratio(tp, gold, both_empty);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let exact = per_sentence.iter().filter(|s| s.exact()).count();
        EvalResult {
            precision,
            recall,
            f1,
            exact_match: ratio(exact, per_sentence.len(), true),
            n_sentences: per_sentence.len(),
            noparse,
            per_sentence,
        }
    }
}

fn prepare(tree: &Tree, config: CountingConfig) -> Result<Tree> {
    match config.mode {
        CountingMode::Unbinarized => debinarize_tree(tree),
        CountingMode::Binarized => Ok(tree.clone()),
    }
}

fn score_pair(index: usize, pred: &Tree, gold: &Tree, config: CountingConfig) -> Result<SentenceScore> {
    let (pred_tokens, gold_tokens) = (pred.tokens(), gold.tokens());
    if pred_tokens != gold_tokens {
        return Err(Error::Mismatch {
            index,
            message: format!(
                "prediction yields {} tokens {:?}, gold {} tokens {:?}",
                pred_tokens.len(),
                pred_tokens,
                gold_tokens.len(),
                gold_tokens
            ),
        });
    }
    let pred = prepare(pred, config)?;
    let gold = constituents(&prepare(gold, config)?, config);
    let (tp, fp) = gold.score(&constituent_set(&pred, 0, config));
    Ok(SentenceScore {
        tp,
        fp,
        gold_size: gold.size,
        delta_f1: 1.0 - f1(tp, fp, gold.size)?,
    })
}

fn score_all(pred: &[Tree], gold: &[Tree], config: CountingConfig) -> Result<Vec<SentenceScore>> {
    if pred.len() != gold.len() {
        return Err(Error::Mismatch {
            index: pred.len().min(gold.len()),
            message: format!("{} predictions for {} gold trees", pred.len(), gold.len()),
        });
    }
    pred.par_iter()
        .zip(gold)
        .enumerate()
        .map(|(i, (p, g))| score_pair(i, p, g, config))
        .collect()
}

/// Scores `pred` against `gold` sentence by sentence. Under unbinarized
/// counting both sides are debinarized first, which leaves plain trees
/// unchanged.
pub fn evaluate(pred: &[Tree], gold: &[Tree], config: CountingConfig) -> Result<EvalResult> {
    let scores = score_all(pred, gold, config)?;
    let noparse = pred.iter().filter(|t| is_noparse(t)).count();
    Ok(EvalResult::from_scores(scores, noparse))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossDiffRow {
    pub index: usize,
    pub delta_f1_a: f64,
    pub delta_f1_b: f64,
    /// `delta_f1_a − delta_f1_b`.
    pub difference: f64,
    /// Zero differences are left out of the signed-rank test.
    pub zero: bool,
}

/// Per-sentence `1 − F1` of two systems and their difference.
pub fn loss_difference_export(
    pred_a: &[Tree],
    pred_b: &[Tree],
    gold: &[Tree],
    config: CountingConfig,
) -> Result<Vec<LossDiffRow>> {
    let a = score_all(pred_a, gold, config)?;
    let b = score_all(pred_b, gold, config)?;
    Ok(a.iter()
        .zip(&b)
        .enumerate()
        .map(|(index, (sa, sb))| {
            let difference = sa.delta_f1 - sb.delta_f1;
            LossDiffRow {
                index,
                delta_f1_a: sa.delta_f1,
                delta_f1_b: sb.delta_f1,
                difference,
                zero: difference.abs() <= ZERO_TOLERANCE,
            }
        })
        .collect())
}

pub fn write_loss_differences<W: Write>(out: &mut W, rows: &[LossDiffRow]) -> io::Result<()> {
    writeln!(out, "index\tdelta_f1_a\tdelta_f1_b\tdifference\tzero")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.index, r.delta_f1_a, r.delta_f1_b, r.difference, r.zero as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::parse_bracketed;

    fn trees(texts: &[&str]) -> Vec<Tree> {
        texts.iter().map(|t| parse_bracketed(t).unwrap()).collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn identical_lists_score_one() {
        let g = trees(&["(S (NP (D the) (N dog)) (VP (V ran)))", "(S (A a) (B b) (C c))"]);
        let r = evaluate(&g, &g, CountingConfig::unbinarized()).unwrap();
        assert_eq!((r.precision, r.recall, r.f1, r.exact_match), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(r.n_sentences, 2);
    }

    #[test]
    fn micro_averaging() {
        let s = |tp, fp, gold_size| SentenceScore {
            tp,
            fp,
            gold_size,
            delta_f1: 1.0 - f1(tp, fp, gold_size).unwrap(),
        };
        let r = EvalResult::from_scores(vec![s(3, 1, 4)], 0);
        assert!(close(r.precision, 0.75) && close(r.recall, 0.75) && close(r.f1, 0.75));
        assert_eq!(r.exact_match, 0.0);
        let r = EvalResult::from_scores(vec![s(2, 0, 2), s(1, 3, 4)], 0);
        assert!(close(r.precision, 0.5) && close(r.recall, 0.5) && close(r.f1, 0.5));
        assert_eq!(r.exact_match, 0.5);
    }

    #[test]
    fn binarized_predictions_are_debinarized() {
        let gold = trees(&["(S (A a) (B b) (C c))"]);
        let pred = trees(&["(S (A a) (S|B-C (B b) (C c)))"]);
        let r = evaluate(&pred, &gold, CountingConfig::unbinarized()).unwrap();
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn mismatches_name_sentence() {
        let gold = trees(&["(S (A a) (B b))", "(S (A a) (B b))"]);
        let pred = trees(&["(S (A a) (B b))", "(S (A a) (B c))"]);
        match evaluate(&pred, &gold, CountingConfig::unbinarized()) {
            Err(Error::Mismatch { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(evaluate(&pred[..1], &gold, CountingConfig::unbinarized()).is_err());
    }

    #[test]
    fn noparse_placeholder_counts_one_false_positive() {
        let gold = trees(&["(S (NP (D the) (N dog)) (VP (V ran)))"]);
        let pred = vec![noparse_tree(&["the", "dog", "ran"])];
        let r = evaluate(&pred, &gold, CountingConfig::unbinarized()).unwrap();
        assert_eq!(r.noparse, 1);
        assert_eq!((r.per_sentence[0].tp, r.per_sentence[0].fp), (0, 1));
    }

    #[test]
    fn loss_differences() {
        let gold = trees(&["(X (X (X a) (X a)) (X a))", "(X (X (X a) (X a)) (X a))", "(X (X a) (X a))"]);
        let alt = parse_bracketed("(X (X a) (X (X a) (X a)))").unwrap();
        let same = loss_difference_export(&gold, &gold, &gold, CountingConfig::unbinarized()).unwrap();
        assert!(same.iter().all(|r| r.zero));
        let mut b = gold.clone();
        b[1] = alt;
        let rows = loss_difference_export(&gold, &b, &gold, CountingConfig::unbinarized()).unwrap();
        let live: Vec<_> = rows.iter().filter(|r| !r.zero).collect();
        assert_eq!(live.len(), 1);
        assert_eq!((live[0].index, live[0].difference), (1, -0.5));
        let mut buf = Vec::new();
        write_loss_differences(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
