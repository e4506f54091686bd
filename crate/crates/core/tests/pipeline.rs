use std::sync::Arc;

use f1parse::chart::{cky_parse, Model};
use f1parse::grammar::{binarize_tree, debinarize_tree, induce, BinConfig};
use f1parse::lossdp::{counts, enumerate_parses, loss_augmented_infer_for_gold, LossKind, LossMode};
use f1parse::metrics::evaluate;
use f1parse::ssvm::{train, TrainConfig, TrainExample};
use f1parse::synth;
use f1parse::treebank::{constituents, CountingConfig, Tree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fit(trees: &[Tree], kind: LossKind) -> (Model, f1parse::ssvm::TrainReport) {
    let config = BinConfig::new(None, 1).unwrap();
    let bin: Vec<Tree> = trees.iter().map(|t| binarize_tree(t, config).unwrap()).collect();
    let grammar = Arc::new(induce(&bin, 0).unwrap());
    let train_config = TrainConfig {
        loss_mode: LossMode::new(kind),
        ..TrainConfig::default()
    };
    let examples: Vec<TrainExample> = bin
        .iter()
        .map(|t| TrainExample::new(t, &grammar, train_config.loss_mode).unwrap())
        .collect();
    train(&examples, grammar, &train_config).unwrap()
}

fn parse_all(model: &Model, trees: &[Tree]) -> Vec<Tree> {
    trees
        .iter()
        .map(|t| debinarize_tree(&cky_parse(model, &t.tokens()).unwrap().tree).unwrap())
        .collect()
}

#[test]
fn separable_treebank_is_learned_by_every_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trees = synth::pp_attachment_treebank(&mut rng, 60, 12);
    for kind in LossKind::ALL {
        let (model, report) = fit(&trees, kind);
        assert!(report.converged, "{kind}");
        assert_eq!(report.violations_remaining, 0, "{kind}");
        let result = evaluate(&parse_all(&model, &trees), &trees, CountingConfig::unbinarized()).unwrap();
        assert_eq!(result.f1, 1.0, "{kind}");
        assert_eq!(result.exact_match, 1.0, "{kind}");
    }
}

#[test]
fn inference_beats_every_enumerated_parse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trees = synth::mode_difference_treebank(&mut rng, 6);
    let config = BinConfig::new(Some(1), 2).unwrap();
    let bin: Vec<Tree> = trees.iter().map(|t| binarize_tree(t, config).unwrap()).collect();
    let grammar = Arc::new(induce(&bin, 0).unwrap());
    for seed in 0..20u64 {
        let weights = (0..grammar.num_productions())
            .map(|k| ((seed * 31 + k as u64 * 17) % 13) as f64 / 6.0 - 1.0)
            .collect();
        let model = Model::new(Arc::clone(&grammar), weights).unwrap();
        for gold in &bin {
            let gold = grammar.fit_root(gold.clone());
            let constant = 1.0 - model.score(&gold).unwrap();
            let tokens = gold.tokens();
            let parses = enumerate_parses(&grammar, &tokens, 8).unwrap();
            for kind in LossKind::ALL {
                let mode = LossMode::new(kind);
                let reference = constituents(&gold, mode.counting());
                let found = loss_augmented_infer_for_gold(&model, &gold, mode).unwrap().unwrap();
                assert_eq!(counts(mode, &reference, &found.tree), (found.tp, found.fp));
                for y in &parses {
                    let (tp, fp) = counts(mode, &reference, y);
                    let value = mode.loss(tp, fp, reference.size) * (constant + model.score(y).unwrap());
                    assert!(value <= found.objective + 1e-9, "{kind}: {value} > {}", found.objective);
                }
            }
        }
    }
}

#[test]
fn model_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trees = synth::pp_attachment_treebank(&mut rng, 20, 10);
    let (model, _) = fit(&trees, LossKind::F1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.tsv");
    model.save(&path).unwrap();
    let loaded = Model::load(&path).unwrap();
    assert_eq!(loaded.weights(), model.weights());
    assert_eq!(parse_all(&loaded, &trees), parse_all(&model, &trees));
}
