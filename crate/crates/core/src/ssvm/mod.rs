//! Slack-rescaling structural SVM trained with the n-slack cutting-plane
//! algorithm. Loss-augmented inference supplies the most violated output
//! per example; violated outputs enter a working set whose restricted QP is
//! re-solved in the dual.

mod qp;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{feature_vector, FeatureVector, Model};
use crate::error::{Error, Result};
use crate::grammar::Grammar;
use crate::lossdp::{loss_augmented_infer, LossKind, LossMode};
use crate::treebank::{constituents, GoldReference, Tree};

pub use qp::{solve_restricted_qp, violation_at, Constraint, QpSolution, WorkingSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Regularization constant `C`.
    pub c: f64,
    /// Violations at or below this are ignored.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    pub loss_mode: LossMode,
    pub qp_tolerance: f64,
    pub qp_max_passes: usize,
    /// Separation calls made against the same `w` before the QP is re-solved.
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            epsilon: 0.01,
            max_outer_iters: 100,
            loss_mode: LossMode::new(LossKind::F1),
            qp_tolerance: 1e-9,
            qp_max_passes: 10_000,
            batch_size: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("C", self.c)?;
        positive("epsilon", self.epsilon)?;
        positive("qp_tolerance", self.qp_tolerance)?;
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        if self.qp_max_passes == 0 {
            return Err(Error::Argument("qp_max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// A binarized gold tree prepared for training.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub tokens: Vec<String>,
    pub gold: Tree,
    pub reference: GoldReference,
    features: FeatureVector,
}

impl TrainExample {
    /// Fails when the gold tree uses a production outside `grammar`.
    pub fn new(gold: &Tree, grammar: &Grammar, mode: LossMode) -> Result<Self> {
        let gold = grammar.fit_root(gold.clone());
        let features = feature_vector(&gold, grammar)?;
        Ok(TrainExample {
            tokens: gold.tokens().into_iter().map(str::to_string).collect(),
            reference: constituents(&gold, mode.counting()),
            gold,
            features,
        })
    }

    pub fn features(&self) -> &FeatureVector {
        &self.features
    }
}

/// Signed violation `Δ · (1 − w·dpsi) − ξ`.
pub fn violation(model: &Model, constraint: &Constraint, slack: f64) -> f64 {
    violation_at(model.weights(), constraint, slack)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassStats {
    pub pass: usize,
    pub violations_found: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub pass: usize,
    pub example: usize,
    pub tp: usize,
    pub fp: usize,
    pub loss: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub loss: LossKind,
    pub passes: usize,
    pub constraints: usize,
    pub objective: f64,
    pub skipped_noparse: usize,
    pub wall_time_seconds: f64,
    pub per_pass: Vec<PassStats>,
    pub violations_remaining: usize,
    pub converged: bool,
    pub constraint_log: Vec<ConstraintRecord>,
}

struct Candidate {
    example: usize,
    constraint: Option<Constraint>,
    violation: f64,
}

fn separate(model: &Model, ex: &TrainExample, index: usize, mode: LossMode, slack: f64) -> Option<Candidate> {
    let constant = 1.0 - ex.features.dot(model.weights());
    let found = loss_augmented_infer(model, &ex.tokens, &ex.reference, mode, constant)?;
    if found.loss <= 0.0 {
        return Some(Candidate {
            example: index,
            constraint: None,
            violation: 0.0,
        });
    }
    let fv = feature_vector(&found.tree, model.grammar()).expect("decoded trees use grammar productions");
    let constraint = Constraint {
        example: index,
        dpsi: ex.features.difference(&fv),
        loss: found.loss,
        tp: found.tp,
        fp: found.fp,
    };
    let v = violation(model, &constraint, slack);
    Some(Candidate {
        example: index,
        constraint: Some(constraint),
        violation: v,
    })
}

/// Cutting-plane training from `w = 0`.
///
/// Each pass visits the examples in order, `batch_size` at a time; a batch's
/// separation calls run in parallel against the same weights, then every
/// constraint violated by more than `epsilon` joins the working set and the
/// restricted QP is re-solved. Training stops after a pass that adds nothing
/// or after `max_outer_iters` passes. Examples the grammar cannot parse are
/// skipped.
pub fn train(examples: &[TrainExample], grammar: Arc<Grammar>, config: &TrainConfig) -> Result<(Model, TrainReport)> {
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::Argument("no training examples".into()));
    }
    let started = Instant::now();
    let n = examples.len();
    let mode = config.loss_mode;
    let mut model = Model::zeros(Arc::clone(&grammar));
    let mut ws = WorkingSet::new(n, grammar.num_productions());
    let mut slacks = vec![0.0; n];
    let mut objective = 0.0;
    let mut noparse = BTreeSet::new();
    let mut per_pass = Vec::new();
    let mut log_entries = Vec::new();
    let mut converged = false;

    for pass in 1..=config.max_outer_iters {
        let mut added = 0;
        for batch in (0..n).collect::<Vec<_>>().chunks(config.batch_size) {
            let found: Vec<(usize, Option<Candidate>)> = batch
                .par_iter()
                .map(|&i| (i, separate(&model, &examples[i], i, mode, slacks[i])))
                .collect();
            let mut batch_added = 0;
            for (i, cand) in found {
                let Some(cand) = cand else {
                    if noparse.insert(i) {
                        warn!("example {i} has no parse under the grammar; skipped");
                    }
                    continue;
                };
                let Some(constraint) = cand.constraint else { continue };
                if cand.violation <= config.epsilon {
                    continue;
                }
                let record = ConstraintRecord {
                    pass,
                    example: cand.example,
                    tp: constraint.tp,
                    fp: constraint.fp,
                    loss: constraint.loss,
                    violation: cand.violation,
                };
                if ws.add(constraint) {
                    batch_added += 1;
                    log_entries.push(record);
                }
            }
            if batch_added > 0 {
                let sol = ws.solve(config.c, config.qp_tolerance, config.qp_max_passes);
                debug!("qp: {} constraints, objective {:.6}, {} passes", ws.len(), sol.objective, sol.passes);
                objective = sol.objective;
                slacks = sol.slacks;
                model.set_weights(sol.weights)?;
                added += batch_added;
            }
        }
        if noparse.len() == n {
            return Err(Error::Argument("no training example is parseable under the grammar".into()));
        }
        info!("pass {pass}: {added} constraints added, {} total, objective {objective:.6}", ws.len());
        per_pass.push(PassStats {
            pass,
            violations_found: added,
            objective,
        });
        if added == 0 {
            converged = true;
            break;
        }
    }

    let violations_remaining = if converged {
        0
    } else {
        (0..n)
            .into_par_iter()
            .filter_map(|i| separate(&model, &examples[i], i, mode, slacks[i]))
            .filter(|c| c.constraint.is_some() && c.violation > config.epsilon)
            .count()
    };
    let report = TrainReport {
        loss: mode.kind,
        passes: per_pass.len(),
        constraints: ws.len(),
        objective,
        skipped_noparse: noparse.len(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        per_pass,
        violations_remaining,
        converged,
        constraint_log: log_entries,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::cky_parse;
    use crate::grammar::{induce, GrammarBuilder};
    use crate::treebank::{parse_bracketed, write_bracketed, Label};

    fn g1() -> Arc<Grammar> {
        let mut b = GrammarBuilder::new();
        let x = Label::plain("X");
        b.binary(&x, &x, &x);
        b.lexical(&x, "a");
        Arc::new(b.build(&x, 2).unwrap())
    }

    #[test]
    fn unique_parse_converges_immediately() {
        let g = g1();
        let gold = parse_bracketed("(X (X a) (X a))").unwrap();
        let ex = TrainExample::new(&gold, &g, LossMode::new(LossKind::F1)).unwrap();
        let (model, report) = train(&[ex], g, &TrainConfig::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.passes, 1);
        assert_eq!(report.constraints, 0);
        assert!(model.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn g1_learns_left_branching() {
        let g = g1();
        let gold = parse_bracketed("(X (X (X a) (X a)) (X a))").unwrap();
        let mode = LossMode::new(LossKind::F1);
        let ex = TrainExample::new(&gold, &g, mode).unwrap();
        let cfg = TrainConfig {
            c: 100.0,
            ..TrainConfig::default()
        };
        let (model, report) = train(&[ex.clone(), ex], g, &cfg).unwrap();
        assert!(report.converged, "{report:?}");
        assert_eq!(report.violations_remaining, 0);
        let p = cky_parse(&model, &["a", "a", "a"]).unwrap();
        assert_eq!(write_bracketed(&p.tree), write_bracketed(&gold));
    }

    #[test]
    fn huge_epsilon_adds_nothing() {
        let g = g1();
        let gold = parse_bracketed("(X (X (X a) (X a)) (X a))").unwrap();
        let ex = TrainExample::new(&gold, &g, LossMode::new(LossKind::F1)).unwrap();
        let cfg = TrainConfig {
            epsilon: 1e6,
            ..TrainConfig::default()
        };
        let (_, report) = train(&[ex], g, &cfg).unwrap();
        assert_eq!(report.passes, 1);
        assert_eq!(report.constraints, 0);
    }

    #[test]
    fn config_validation() {
        for bad in [
            TrainConfig { c: -1.0, ..TrainConfig::default() },
            TrainConfig { epsilon: 0.0, ..TrainConfig::default() },
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn unscoreable_gold_is_an_error() {
        let g = g1();
        assert!(TrainExample::new(&parse_bracketed("(X (Y a) (X a))").unwrap(), &g, LossMode::new(LossKind::F1)).is_err());
    }

    #[test]
    fn unparseable_examples_are_skipped() {
        let trees: Vec<Tree> = ["(S (A a) (B b))", "(S (A a) (S (A a) (B b)))"]
            .iter()
            .map(|t| parse_bracketed(t).unwrap())
            .collect();
        let g = Arc::new(induce(&trees, 0).unwrap());
        let mode = LossMode::new(LossKind::F1Bin);
        let examples: Vec<_> = trees.iter().map(|t| TrainExample::new(t, &g, mode).unwrap()).collect();
        let mut broken = examples[0].clone();
        broken.tokens = vec!["zzz".into(), "qqq".into()];
        let (_, report) = train(&[examples[1].clone(), broken], Arc::clone(&g), &TrainConfig::default()).unwrap();
        assert_eq!(report.skipped_noparse, 1);
        let mut only = examples[0].clone();
        only.tokens = vec!["zzz".into()];
        assert!(train(&[only], g, &TrainConfig::default()).is_err());
    }
}
