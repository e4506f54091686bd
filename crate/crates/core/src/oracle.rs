//! Randomized cross-check of the charts against exhaustive enumeration.
//!
//! Each trial draws a gold tree over a tiny label and word inventory,
//! builds a grammar of at most a handful of productions that derives it
//! (plus random extra rules for ambiguity), and draws weights in [−2, 2].
//! Loss-augmented inference for every loss and plain CKY are then compared
//! with the maxima found by scoring every derivation.

use std::io::{self, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{cky_parse, Model};
use crate::error::{Error, Result};
use crate::grammar::GrammarBuilder;
use crate::lossdp::{delta, enumerate_parses, loss_augmented_infer_for_gold, LossKind, LossMode};
use crate::treebank::{constituents, Label, Tree};

/// Agreement tolerance between chart and enumeration.
pub const TOLERANCE: f64 = 1e-9;

const WORDS: [&str; 2] = ["a", "b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub trials: usize,
    pub max_len: usize,
    pub seed: u64,
    pub max_productions: usize,
    pub exclude_preterminals: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            trials: 200,
            max_len: 7,
            seed: 42,
            max_productions: 10,
            exclude_preterminals: true,
        }
    }
}

/// A weighted grammar together with a gold tree it derives.
#[derive(Debug, Clone)]
pub struct Instance {
    pub model: Model,
    pub gold: Tree,
}

fn random_label(rng: &mut impl Rng) -> Label {
    match rng.gen_range(0..7) {
        0 => Label::plain("A"),
        1 => Label::plain("B"),
        2 => Label::plain("C"),
        3 => Label::annotated("A", vec!["B".into()]),
        4 => Label::annotated("B", vec!["A".into()]),
        5 => Label::artificial("A", vec![], &["B"]),
        _ => Label::artificial("B", vec![], &["A", "C"]),
    }
}

fn random_tree(rng: &mut impl Rng, len: usize) -> Tree {
    let base = if len == 1 {
        Tree::preterminal(random_label(rng), *WORDS.choose(rng).expect("words"))
    } else {
        let split = rng.gen_range(1..len);
        Tree::Node {
            label: random_label(rng),
            children: vec![random_tree(rng, split), random_tree(rng, len - split)],
        }
    };
    if rng.gen_bool(0.2) {
        Tree::Node {
            label: random_label(rng),
            children: vec![base],
        }
    } else {
        base
    }
}

/// Draws an instance whose sentence has between 1 and `max_len` tokens and
/// whose grammar has at most `max_productions` rules.
pub fn random_instance(rng: &mut impl Rng, max_len: usize, max_productions: usize) -> Instance {
    loop {
        let len = rng.gen_range(1..=max_len.max(1));
        let mut gold = random_tree(rng, len);
        // an artificial start symbol would read as a root wrapper
        let wrapped = rng.gen_bool(0.3) || gold.label().is_some_and(Label::is_artificial);
        let start = if wrapped {
            gold = Tree::Node {
                label: Label::wrapper(),
                children: vec![gold],
            };
            Label::wrapper()
        } else {
            gold.label().expect("internal").clone()
        };
        let mut b = GrammarBuilder::new();
        b.add_tree(&gold).expect("generated trees are binary");
        if b.len() > max_productions {
            continue;
        }
        let target = rng.gen_range(b.len()..=max_productions);
        let mut attempts = 0;
        while b.len() < target && attempts < 100 {
            attempts += 1;
            match rng.gen_range(0..10) {
                0..=4 => {
                    b.binary(&random_label(rng), &random_label(rng), &random_label(rng));
                }
                5 | 6 => {
                    b.unary(&random_label(rng), &random_label(rng));
                }
                7 | 8 => {
                    b.lexical(&random_label(rng), WORDS.choose(rng).expect("words"));
                }
                _ if wrapped => {
                    b.unary(&start, &random_label(rng));
                }
                _ => {}
            }
        }
        let grammar = Arc::new(b.build(&start, 0).expect("valid generated grammar"));
        let weights = (0..grammar.num_productions()).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let model = Model::new(grammar, weights).expect("finite weights");
        return Instance { model, gold };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub trial: usize,
    pub mode: LossKind,
    pub dp_objective: f64,
    pub brute_objective: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkyRow {
    pub trial: usize,
    pub cky_score: f64,
    pub brute_score: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub cky: Vec<CkyRow>,
}

impl OracleReport {
    pub fn lai_mismatches(&self) -> usize {
        self.rows.iter().filter(|r| !r.matched).count()
    }

    pub fn cky_mismatches(&self) -> usize {
        self.cky.iter().filter(|r| !r.matched).count()
    }

    pub fn all_match(&self) -> bool {
        self.lai_mismatches() == 0 && self.cky_mismatches() == 0
    }
}

fn check_instance(trial: usize, inst: &Instance, exclude_preterminals: bool) -> Result<(Vec<OracleRow>, CkyRow)> {
    let model = &inst.model;
    let g = model.grammar();
    let tokens = inst.gold.tokens();
    let parses = enumerate_parses(g, &tokens, tokens.len())?;
    let scores: Vec<f64> = parses.iter().map(|t| model.score(t)).collect::<Result<_>>()?;
    let gold_score = model.score(&inst.gold)?;
    let constant = 1.0 - gold_score;

    let mut rows = Vec::new();
    for kind in LossKind::ALL {
        let mode = LossMode {
            kind,
            exclude_preterminals,
        };
        let reference = constituents(&inst.gold, mode.counting());
        let brute = parses
            .iter()
            .zip(&scores)
            .map(|(t, s)| delta(mode, &reference, t) * (constant + s))
            .fold(f64::NEG_INFINITY, f64::max);
        let found = loss_augmented_infer_for_gold(model, &inst.gold, mode)?
            .ok_or_else(|| Error::Argument(format!("trial {trial}: gold sentence has no parse")))?;
        let attained = delta(mode, &reference, &found.tree) * (constant + model.score(&found.tree)?);
        let matched = (found.objective - brute).abs() <= TOLERANCE && (attained - brute).abs() <= TOLERANCE;
        rows.push(OracleRow {
            trial,
            mode: kind,
            dp_objective: found.objective,
            brute_objective: brute,
            matched,
        });
    }

    let brute_score = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cky = match cky_parse(model, &tokens) {
        Some(p) => {
            let rescored = model.score(&p.tree)?;
            CkyRow {
                trial,
                cky_score: p.score,
                brute_score,
                matched: (p.score - brute_score).abs() <= TOLERANCE && (rescored - brute_score).abs() <= TOLERANCE,
            }
        }
        None => CkyRow {
            trial,
            cky_score: f64::NEG_INFINITY,
            brute_score,
            matched: false,
        },
    };
    Ok((rows, cky))
}

/// Runs `config.trials` independent trials; trial `k` draws from its own
/// stream of the seeded generator, so results do not depend on threading.
pub fn run_oracle_check(config: &OracleConfig) -> Result<OracleReport> {
    if config.max_len == 0 || config.max_len > crate::lossdp::DEFAULT_ENUMERATION_BOUND {
        return Err(Error::Argument(format!(
            "oracle sentence length must be between 1 and {}",
            crate::lossdp::DEFAULT_ENUMERATION_BOUND
        )));
    }
    let results: Vec<(Vec<OracleRow>, CkyRow)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let inst = random_instance(&mut rng, config.max_len, config.max_productions);
            check_instance(trial, &inst, config.exclude_preterminals)
        })
        .collect::<Result<_>>()?;
    let mut report = OracleReport::default();
    for (rows, cky) in results {
        report.rows.extend(rows);
        report.cky.push(cky);
    }
    Ok(report)
}

pub fn write_oracle_tsv<W: Write>(out: &mut W, rows: &[OracleRow]) -> io::Result<()> {
    writeln!(out, "trial\tmode\tdp_objective\tbrute_objective\tmatch")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.trial, r.mode, r.dp_objective, r.brute_objective, r.matched as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_respect_limits_and_derive_gold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let inst = random_instance(&mut rng, 7, 10);
            let g = inst.model.grammar();
            assert!(g.num_productions() <= 10);
            assert!((1..=7).contains(&inst.gold.num_tokens()));
            assert!(inst.model.score(&inst.gold).is_ok());
        }
    }

    #[test]
    fn small_run_matches() {
        for exclude in [true, false] {
            let cfg = OracleConfig {
                trials: 60,
                seed: 9,
                exclude_preterminals: exclude,
                ..OracleConfig::default()
            };
            let report = run_oracle_check(&cfg).unwrap();
            assert_eq!(report.rows.len(), 240);
            let bad: Vec<_> = report.rows.iter().filter(|r| !r.matched).collect();
            assert!(bad.is_empty(), "{bad:?}");
            assert_eq!(report.cky_mismatches(), 0);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = OracleConfig {
            trials: 10,
            ..OracleConfig::default()
        };
        assert_eq!(run_oracle_check(&cfg).unwrap(), run_oracle_check(&cfg).unwrap());
    }
}
