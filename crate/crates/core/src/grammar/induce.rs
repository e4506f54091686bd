use std::collections::{BTreeSet, HashMap};

use super::{signature, Grammar, GrammarBuilder};
use crate::error::{Error, Result};
use crate::treebank::{Label, Tree};

/// Reads off every production used by a set of binarized trees.
///
/// Words seen fewer than `unk_threshold` times also license their tag for
/// the word's signature class. When the trees disagree on the root label the
/// start symbol becomes a root wrapper with one root rule per root label;
/// trees must then be passed through [`Grammar::fit_root`] before scoring.
pub fn induce(trees: &[Tree], unk_threshold: usize) -> Result<Grammar> {
    if trees.is_empty() {
        return Err(Error::Argument("cannot induce a grammar from an empty treebank".into()));
    }
    let mut roots = BTreeSet::new();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for tree in trees {
        let label = tree
            .label()
            .ok_or_else(|| Error::MalformedTree("tree is a bare token".into()))?;
        roots.insert(label.clone());
        for tok in tree.tokens() {
            *freq.entry(tok).or_default() += 1;
        }
    }
    let start = if roots.len() == 1 {
        roots.into_iter().next().expect("one root")
    } else {
        Label::wrapper()
    };

    let mut builder = GrammarBuilder::new();
    for tree in trees {
        if start.is_artificial() && tree.label() != Some(&start) {
            builder.unary(&start, tree.label().expect("checked"));
        }
        builder.add_tree(tree)?;
    }
    for tree in trees {
        tree.for_each_node(0, &mut |node, _, _| {
            if let (Some(label), [Tree::Leaf(word)]) = (node.label(), node.children()) {
                if freq.get(word.as_str()).copied().unwrap_or(0) < unk_threshold {
                    builder.lexical(label, &signature(word));
                }
            }
        });
    }
    builder.build(&start, unk_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{binarize_tree, BinConfig, Production};
    use crate::treebank::parse_bracketed;

    fn trees(texts: &[&str]) -> Vec<Tree> {
        texts.iter().map(|t| parse_bracketed(t).unwrap()).collect()
    }

    #[test]
    fn g1_treebank() {
        let g = induce(&trees(&["(X (X a) (X a))", "(X (X (X a) (X a)) (X a))"]), 2).unwrap();
        assert_eq!(g.num_productions(), 2);
        assert_eq!(g.start_label(), &Label::plain("X"));
        assert!(!g.is_wrapped());
        let names: Vec<_> = (0..2).map(|i| g.display_production(i)).collect();
        assert_eq!(names, vec!["X -> X X", "X -> 'a'"]);
    }

    #[test]
    fn rare_word_adds_signature_rule() {
        let g = induce(
            &trees(&[
                "(S (NP (D the) (N dog)) (VP (V saw) (NP (D the) (N zygote))))",
                "(S (NP (D the) (N dog)) (VP (V saw) (NP (D the) (N dog))))",
            ]),
            2,
        )
        .unwrap();
        let n = g.symbol_id(&Label::plain("N")).unwrap();
        let unk = Production::Lexical {
            lhs: n,
            terminal: signature("zygote"),
        };
        assert!(g.production_id(&unk).is_some());
        let d = g.symbol_id(&Label::plain("D")).unwrap();
        assert!(g
            .production_id(&Production::Lexical {
                lhs: d,
                terminal: signature("the")
            })
            .is_none());
        // an unseen word sharing the suffix is covered
        assert!(!g.lexical_rules("anecdote").is_empty());
    }

    #[test]
    fn empty_treebank_rejected() {
        assert!(induce(&[], 2).is_err());
    }

    #[test]
    fn inconsistent_roots_get_wrapper() {
        let g = induce(&trees(&["(S (A a) (B b))", "(NP (A a) (B b))"]), 1).unwrap();
        assert!(g.is_wrapped());
        assert_eq!(g.root_rules().len(), 2);
        assert_eq!(g.display_production(0), "TOP| -> S");
    }

    #[test]
    fn every_production_is_realized() {
        let raw = trees(&["(A (B b) (C c) (D d))", "(A (B b) (C c))", "(A (B b) (A (C c) (D d) (B b)))"]);
        let bin: Vec<_> = raw
            .iter()
            .map(|t| binarize_tree(t, BinConfig::new(None, 2).unwrap()).unwrap())
            .collect();
        let g = induce(&bin, 1).unwrap();
        let mut seen = vec![false; g.num_productions()];
        for t in &bin {
            let mut b = GrammarBuilder::new();
            b.add_tree(t).unwrap();
            let sub = b.build(t.label().unwrap(), 1).unwrap();
            for p in sub.productions() {
                let mapped = remap(&sub, &g, p);
                seen[g.production_id(&mapped).unwrap()] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    fn remap(from: &Grammar, to: &Grammar, p: &Production) -> Production {
        let m = |s: usize| to.symbol_id(from.symbol(s)).unwrap();
        match p {
            Production::Binary { lhs, left, right } => Production::Binary {
                lhs: m(*lhs),
                left: m(*left),
                right: m(*right),
            },
            Production::Unary { lhs, child } => Production::Unary {
                lhs: m(*lhs),
                child: m(*child),
            },
            Production::Lexical { lhs, terminal } => Production::Lexical {
                lhs: m(*lhs),
                terminal: terminal.clone(),
            },
        }
    }

    #[test]
    fn smaller_horizontal_never_grows_rule_set() {
        let raw = trees(&[
            "(A (B b) (C c) (D d) (E e))",
            "(A (C c) (B b) (D d) (E e) (B b))",
            "(A (B b) (A (D d) (C c) (E e)) (B b))",
            "(A (E e) (D d) (C c) (B b))",
        ]);
        let count = |h: Option<usize>| {
            let bin: Vec<_> = raw
                .iter()
                .map(|t| binarize_tree(t, BinConfig::new(h, 1).unwrap()).unwrap())
                .collect();
            induce(&bin, 0).unwrap().num_productions()
        };
        let (h0, h1, h2, hinf) = (count(Some(0)), count(Some(1)), count(Some(2)), count(None));
        assert!(h0 <= h1 && h1 <= h2 && h2 <= hinf, "{h0} {h1} {h2} {hinf}");
        assert!(h0 < hinf);
    }
}
