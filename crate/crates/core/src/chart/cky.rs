use std::collections::HashMap;

use super::Model;
use crate::grammar::{Grammar, ProdId, Production, SymbolId};
use crate::treebank::Tree;

/// Best derivation and its score `w · Ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parse {
    pub tree: Tree,
    pub score: f64,
}

#[derive(Debug, Clone, Copy)]
enum Back {
    Lexical,
    Binary { prod: ProdId, split: usize },
    Unary(ProdId),
    FromBase,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    score: f64,
    // smaller wins among equal scores
    rank: (usize, usize),
    back: Back,
}

type CellMap = HashMap<SymbolId, Entry>;

fn offer(map: &mut CellMap, sym: SymbolId, candidate: Entry) {
    match map.get_mut(&sym) {
        Some(cur) if candidate.score < cur.score => {}
        Some(cur) if candidate.score == cur.score && candidate.rank >= cur.rank => {}
        Some(cur) => *cur = candidate,
        None => {
            map.insert(sym, candidate);
        }
    }
}

/// Triangular chart of half-open spans `[i, j)`. Each cell holds the best
/// derivations ending in a lexical or binary rule (`base`) and those that
/// may add one unary rule on top (`top`).
struct Chart {
    n: usize,
    base: Vec<CellMap>,
    top: Vec<CellMap>,
}

impl Chart {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }
}

/// Highest-scoring derivation of `tokens` rooted at the start symbol, or
/// `None` when the grammar derives no tree.
///
/// Ties prefer the larger split point (left-branching structure), then the
/// smaller production id.
pub fn cky_parse<S: AsRef<str>>(model: &Model, tokens: &[S]) -> Option<Parse> {
    let n = tokens.len();
    if n == 0 {
        return None;
    }
    let g = model.grammar();
    let w = model.weights();
    let size = (n + 1) * (n + 1);
    let mut chart = Chart {
        n,
        base: vec![CellMap::new(); size],
        top: vec![CellMap::new(); size],
    };

    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut base = CellMap::new();
            if len == 1 {
                for &prod in g.lexical_rules(tokens[i].as_ref()) {
                    let entry = Entry {
                        score: w[prod],
                        rank: (0, prod),
                        back: Back::Lexical,
                    };
                    offer(&mut base, g.production(prod).lhs(), entry);
                }
            } else {
                for split in i + 1..j {
                    let left_cell = &chart.top[chart.idx(i, split)];
                    let right_cell = &chart.top[chart.idx(split, j)];
                    if left_cell.is_empty() || right_cell.is_empty() {
                        continue;
                    }
                    for (&left, le) in left_cell {
                        for &prod in g.binary_rules_by_left(left) {
                            let Production::Binary { lhs, right, .. } = *g.production(prod) else {
                                unreachable!()
                            };
                            if let Some(re) = right_cell.get(&right) {
                                let entry = Entry {
                                    score: w[prod] + le.score + re.score,
                                    rank: (n - split, prod),
                                    back: Back::Binary { prod, split },
                                };
                                offer(&mut base, lhs, entry);
                            }
                        }
                    }
                }
            }
            let mut top: CellMap = base
                .iter()
                .map(|(&s, e)| {
                    (
                        s,
                        Entry {
                            score: e.score,
                            rank: (0, 0),
                            back: Back::FromBase,
                        },
                    )
                })
                .collect();
            for (&child, ce) in &base {
                for &prod in g.unary_rules_by_child(child) {
                    let entry = Entry {
                        score: w[prod] + ce.score,
                        rank: (1, prod),
                        back: Back::Unary(prod),
                    };
                    offer(&mut top, g.production(prod).lhs(), entry);
                }
            }
            let k = chart.idx(i, j);
            chart.base[k] = base;
            chart.top[k] = top;
        }
    }

    let root_cell = &chart.top[chart.idx(0, n)];
    if g.is_wrapped() {
        let mut best: Option<(f64, ProdId)> = None;
        for &prod in g.root_rules() {
            let Production::Unary { child, .. } = *g.production(prod) else {
                unreachable!()
            };
            if let Some(e) = root_cell.get(&child) {
                let s = w[prod] + e.score;
                if best.is_none_or(|(bs, _)| s > bs) {
                    best = Some((s, prod));
                }
            }
        }
        let (score, prod) = best?;
        let Production::Unary { child, .. } = *g.production(prod) else {
            unreachable!()
        };
        let tree = Tree::Node {
            label: g.start_label().clone(),
            children: vec![build(&chart, g, tokens, 0, n, child, true)],
        };
        Some(Parse { tree, score })
    } else {
        let e = root_cell.get(&g.start())?;
        Some(Parse {
            tree: build(&chart, g, tokens, 0, n, g.start(), true),
            score: e.score,
        })
    }
}

fn build<S: AsRef<str>>(chart: &Chart, g: &Grammar, tokens: &[S], i: usize, j: usize, sym: SymbolId, top: bool) -> Tree {
    let k = chart.idx(i, j);
    let entry = if top { &chart.top[k][&sym] } else { &chart.base[k][&sym] };
    let label = g.symbol(sym).clone();
    let children = match entry.back {
        Back::FromBase => return build(chart, g, tokens, i, j, sym, false),
        Back::Lexical => vec![Tree::Leaf(tokens[i].as_ref().to_string())],
        Back::Unary(prod) => {
            let Production::Unary { child, .. } = *g.production(prod) else {
                unreachable!()
            };
            vec![build(chart, g, tokens, i, j, child, false)]
        }
        Back::Binary { prod, split } => {
            let Production::Binary { left, right, .. } = *g.production(prod) else {
                unreachable!()
            };
            vec![
                build(chart, g, tokens, i, split, left, true),
                build(chart, g, tokens, split, j, right, true),
            ]
        }
    };
    Tree::Node { label, children }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::GrammarBuilder;
    use crate::treebank::{parse_bracketed, write_bracketed, Label};
    use std::sync::Arc;

    fn g1_model(w: Vec<f64>) -> Model {
        let mut b = GrammarBuilder::new();
        let x = Label::plain("X");
        b.binary(&x, &x, &x);
        b.lexical(&x, "a");
        Model::new(Arc::new(b.build(&x, 2).unwrap()), w).unwrap()
    }

    #[test]
    fn unique_parse() {
        let p = cky_parse(&g1_model(vec![0.0, 0.0]), &["a", "a"]).unwrap();
        assert_eq!(write_bracketed(&p.tree), "(X (X a) (X a))");
        assert_eq!(p.score, 0.0);
    }

    #[test]
    fn ties_prefer_left_branching() {
        let p = cky_parse(&g1_model(vec![1.0, 0.0]), &["a", "a", "a"]).unwrap();
        assert_eq!(write_bracketed(&p.tree), "(X (X (X a) (X a)) (X a))");
        assert_eq!(p.score, 2.0);
        let p = cky_parse(&g1_model(vec![0.0, 0.0]), &["a", "a", "a", "a"]).unwrap();
        assert_eq!(write_bracketed(&p.tree), "(X (X (X (X a) (X a)) (X a)) (X a))");
    }

    #[test]
    fn no_parse() {
        assert!(cky_parse(&g1_model(vec![0.0, 0.0]), &["q"]).is_none());
        assert!(cky_parse(&g1_model(vec![0.0, 0.0]), &[] as &[&str]).is_none());
    }

    #[test]
    fn unary_layer_and_root_wrapper() {
        let mut b = GrammarBuilder::new();
        let top = Label::wrapper();
        let (svp, v, np, n) = (Label::plain("S+VP"), Label::plain("V"), Label::plain("NP"), Label::plain("N"));
        b.unary(&top, &svp);
        b.unary(&top, &np);
        b.unary(&svp, &v);
        b.binary(&np, &n, &n);
        b.lexical(&v, "go");
        b.lexical(&n, "go");
        let g = Arc::new(b.build(&top, 2).unwrap());
        let m = Model::new(Arc::clone(&g), vec![0.0, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let p = cky_parse(&m, &["go"]).unwrap();
        assert_eq!(write_bracketed(&p.tree), "(TOP| (S+VP (V go)))");
        let p = cky_parse(&m, &["go", "go"]).unwrap();
        assert_eq!(write_bracketed(&p.tree), "(TOP| (NP (N go) (N go)))");
        assert!((p.score - 0.5).abs() < 1e-12);
        assert!((m.score(&p.tree).unwrap() - p.score).abs() < 1e-12);
    }

    #[test]
    fn weights_select_structure() {
        let trees = ["(S (A a) (B (A a) (A a)))", "(S (B (A a) (A a)) (A a))"];
        let mut b = GrammarBuilder::new();
        for t in trees {
            b.add_tree(&parse_bracketed(t).unwrap()).unwrap();
        }
        let g = Arc::new(b.build(&Label::plain("S"), 2).unwrap());
        let ids: Vec<_> = (0..g.num_productions()).map(|i| g.display_production(i)).collect();
        let mut w = vec![0.0; g.num_productions()];
        w[ids.iter().position(|s| s == "S -> A B").unwrap()] = 1.0;
        let p = cky_parse(&Model::new(g, w).unwrap(), &["a", "a", "a"]).unwrap();
        assert_eq!(write_bracketed(&p.tree), trees[0]);
    }
}
