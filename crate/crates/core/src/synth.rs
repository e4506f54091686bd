//! Synthetic treebanks and grammars for tests, benchmarks and demos.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::chart::{cky_parse, Model};
use crate::grammar::GrammarBuilder;
use crate::treebank::{Label, Tree};

const PHRASES: [&str; 7] = ["S", "NP", "VP", "PP", "ADJP", "SBAR", "QP"];
const TAGS: [&str; 9] = ["DT", "NN", "VB", "IN", "JJ", "PRP$", "-LRB-", "-RRB-", ","];

fn pick<'a>(rng: &mut impl Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty")
}

fn nary_node(rng: &mut impl Rng, depth: usize) -> Tree {
    if depth == 0 || rng.gen_bool(0.3) {
        let word = format!("w{}", rng.gen_range(0..50));
        return Tree::preterminal(pick(rng, &TAGS), word);
    }
    let arity = rng.gen_range(1..=5);
    let children = (0..arity).map(|_| nary_node(rng, depth - 1)).collect();
    Tree::node(pick(rng, &PHRASES), children)
}

/// Random n-ary trees (up to five children, unary chains included) over
/// treebank-like labels.
pub fn nary_treebank(rng: &mut impl Rng, count: usize) -> Vec<Tree> {
    (0..count)
        .map(|_| {
            let depth = rng.gen_range(1..=4);
            let children = (0..rng.gen_range(1..=4)).map(|_| nary_node(rng, depth)).collect();
            Tree::node(pick(rng, &PHRASES), children)
        })
        .collect()
}

const DETS: [&str; 3] = ["the", "a", "every"];
const NOUNS: [&str; 7] = ["dog", "cat", "man", "park", "telescope", "hill", "garden"];
const VERBS: [&str; 4] = ["saw", "liked", "chased", "watched"];
const PREPS: [&str; 4] = ["in", "with", "on", "near"];

fn simple_np(rng: &mut impl Rng) -> Tree {
    Tree::node(
        "NP",
        vec![
            Tree::preterminal("D", pick(rng, &DETS)),
            Tree::preterminal("N", pick(rng, &NOUNS)),
        ],
    )
}

fn pp(rng: &mut impl Rng) -> Tree {
    Tree::node("PP", vec![Tree::preterminal("P", pick(rng, &PREPS)), simple_np(rng)])
}

/// Sentences `NP V NP PP*` where every PP after the object attaches to the
/// verb phrase, while a subject may carry one PP of its own. The attachment
/// preference is consistent, so the treebank is separable by production
/// weights. Sentences have at most `max_len` tokens (at least 5).
pub fn pp_attachment_treebank(rng: &mut impl Rng, count: usize, max_len: usize) -> Vec<Tree> {
    let max_len = max_len.max(5);
    (0..count)
        .map(|_| {
            let subject_pp = max_len >= 8 && rng.gen_bool(0.3);
            let subject = if subject_pp {
                Tree::node("NP", vec![simple_np(rng), pp(rng)])
            } else {
                simple_np(rng)
            };
            let used = subject.num_tokens() + 3;
            let max_pps = ((max_len - used) / 3).min(2);
            let mut vp = Tree::node("VP", vec![Tree::preterminal("V", pick(rng, &VERBS)), simple_np(rng)]);
            for _ in 0..rng.gen_range(0..=max_pps) {
                vp = Tree::node("VP", vec![vp, pp(rng)]);
            }
            Tree::node("S", vec![subject, vp])
        })
        .collect()
}

/// Sentences `a b c` whose gold tree is either flat, `(T (A a) (B b) (C c))`,
/// or nested, `(T (U (A a) (B b)) (C c))`. Binarizing the flat tree yields
/// an artificial node over `b c`, so counts against the binarized and the
/// original trees differ. Both shapes occur whenever `count >= 2`.
pub fn mode_difference_treebank(rng: &mut impl Rng, count: usize) -> Vec<Tree> {
    let flat = || {
        Tree::node(
            "T",
            vec![Tree::preterminal("A", "a"), Tree::preterminal("B", "b"), Tree::preterminal("C", "c")],
        )
    };
    let nested = || {
        Tree::node(
            "T",
            vec![
                Tree::node("U", vec![Tree::preterminal("A", "a"), Tree::preterminal("B", "b")]),
                Tree::preterminal("C", "c"),
            ],
        )
    };
    (0..count)
        .map(|k| match k {
            0 => flat(),
            1 => nested(),
            _ if rng.gen_bool(0.5) => flat(),
            _ => nested(),
        })
        .collect()
}

/// A dense random grammar with `num_binary` binary rules over twelve
/// nonterminals (four of them artificial) and six words, each word
/// licensing four tags; returned with random weights in [−1, 1].
pub fn dense_model(rng: &mut impl Rng, num_binary: usize) -> Model {
    let mut symbols: Vec<Label> = (1..=7).map(|k| Label::plain(format!("N{k}"))).collect();
    symbols.extend((1..=4).map(|k| Label::artificial(format!("N{k}"), vec![], &["X"])));
    let start = Label::plain("S");
    let mut b = GrammarBuilder::new();
    let mut lhs_pool = symbols.clone();
    lhs_pool.push(start.clone());
    // a few rules that make S reachable over any split
    for _ in 0..4 {
        let (l, r) = (symbols.choose(rng).expect("symbols"), symbols.choose(rng).expect("symbols"));
        b.binary(&start, l, r);
    }
    while b.len() < num_binary {
        let lhs = lhs_pool.choose(rng).expect("symbols");
        let (l, r) = (symbols.choose(rng).expect("symbols"), symbols.choose(rng).expect("symbols"));
        b.binary(lhs, l, r);
    }
    let plain = &symbols[..7];
    for w in 0..6 {
        for tag in plain.choose_multiple(rng, 4) {
            b.lexical(tag, &format!("t{w}"));
        }
    }
    let grammar = Arc::new(b.build(&start, 0).expect("valid grammar"));
    let weights = (0..grammar.num_productions()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Model::new(grammar, weights).expect("finite weights")
}

/// Random sentence of `len` words over the [`dense_model`] vocabulary that
/// the model can parse, with its highest-scoring tree.
pub fn dense_sentence(rng: &mut impl Rng, model: &Model, len: usize) -> (Vec<String>, Tree) {
    loop {
        let tokens: Vec<String> = (0..len).map(|_| format!("t{}", rng.gen_range(0..6))).collect();
        if let Some(p) = cky_parse(model, &tokens) {
            return (tokens, p.tree);
        }
    }
}
