use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::LossMode;
use crate::chart::Model;
use crate::error::Result;
use crate::grammar::{Grammar, ProdId, Production, SymbolId};
use crate::treebank::{constituents, CountingConfig, GoldReference, Tree};

/// Which part of a cell an entry lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    /// Derivations ending in a lexical or binary rule.
    Base,
    /// Base derivations plus those with one unary rule on top.
    Top,
    /// Complete derivations over the whole sentence.
    Root,
}

type Counts = (u32, u32);

#[derive(Debug, Clone, Copy)]
enum Back {
    Lexical,
    Binary {
        prod: ProdId,
        split: usize,
        left: Counts,
        right: Counts,
    },
    Unary {
        prod: ProdId,
        child: Counts,
    },
    FromBase,
}

#[derive(Debug, Clone, Copy)]
struct Stratum {
    tp: u32,
    fp: u32,
    score: f64,
    // smaller wins among equal scores
    rank: [usize; 4],
    back: Back,
}

type Strata = Vec<Stratum>;
type Cell = HashMap<SymbolId, Strata>;
type Acc = HashMap<SymbolId, HashMap<Counts, Stratum>>;

fn offer(acc: &mut Acc, sym: SymbolId, s: Stratum) {
    match acc.entry(sym).or_default().entry((s.tp, s.fp)) {
        Entry::Occupied(mut e) => {
            let cur = e.get_mut();
            if s.score > cur.score || (s.score == cur.score && s.rank < cur.rank) {
                *cur = s;
            }
        }
        Entry::Vacant(e) => {
            e.insert(s);
        }
    }
}

fn finish(acc: Acc) -> Cell {
    acc.into_iter()
        .map(|(sym, m)| {
            let mut v: Strata = m.into_values().collect();
            v.sort_by_key(|s| (s.tp, s.fp));
            (sym, v)
        })
        .collect()
}

fn find(strata: &[Stratum], tp: u32, fp: u32) -> Option<&Stratum> {
    strata
        .binary_search_by_key(&(tp, fp), |s| (s.tp, s.fp))
        .ok()
        .map(|k| &strata[k])
}

/// Per-node contribution to (tp, fp).
struct Counter {
    keys: Vec<Option<u32>>,
    gold: HashSet<(u32, usize, usize)>,
    exclude_preterminals: bool,
}

impl Counter {
    fn new(grammar: &Grammar, gold: &GoldReference, counting: CountingConfig) -> Self {
        let mut ids: HashMap<String, u32> = HashMap::new();
        let keys = grammar
            .symbols()
            .iter()
            .map(|l| {
                counting.count_label(l).map(|k| {
                    let next = ids.len() as u32;
                    *ids.entry(k).or_insert(next)
                })
            })
            .collect();
        let gold = gold
            .constituents
            .iter()
            .filter_map(|c| ids.get(&c.label).map(|&k| (k, c.start, c.end)))
            .collect();
        Counter {
            keys,
            gold,
            exclude_preterminals: counting.exclude_preterminals,
        }
    }

    fn node(&self, sym: SymbolId, i: usize, j: usize) -> Counts {
        match self.keys[sym] {
            None => (0, 0),
            Some(k) if self.gold.contains(&(k, i, j)) => (1, 0),
            Some(_) => (0, 1),
        }
    }

    fn preterminal(&self, sym: SymbolId, i: usize, j: usize) -> Counts {
        if self.exclude_preterminals {
            (0, 0)
        } else {
            self.node(sym, i, j)
        }
    }

    /// A node directly over `child` on the same span. When both would be
    /// counted under the same key the parent adds nothing: the counted set
    /// already holds that constituent.
    fn over(&self, sym: SymbolId, child: SymbolId, child_preterminal: bool, i: usize, j: usize) -> Counts {
        let child_counted = self.keys[child].is_some() && !(child_preterminal && self.exclude_preterminals);
        if child_counted && self.keys[sym] == self.keys[child] {
            (0, 0)
        } else {
            self.node(sym, i, j)
        }
    }
}

/// One chart item: the best derivation of `symbol` over `[start, end)`
/// among those with exactly `tp` true and `fp` false positives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartEntry {
    pub start: usize,
    pub end: usize,
    pub symbol: SymbolId,
    pub layer: Layer,
    pub tp: usize,
    pub fp: usize,
    pub score: f64,
}

/// Outcome of loss-augmented inference.
#[derive(Debug, Clone, PartialEq)]
pub struct LaiResult {
    pub tree: Tree,
    /// `Δ · (constant + score)`.
    pub objective: f64,
    pub tp: usize,
    pub fp: usize,
    pub loss: f64,
    /// `w · Ψ(tree)`.
    pub score: f64,
}

/// Chart stratified by true/false positive counts.
pub struct LossChart {
    grammar: Arc<Grammar>,
    tokens: Vec<String>,
    n: usize,
    gold_size: usize,
    base: Vec<Cell>,
    top: Vec<Cell>,
    root: Strata,
}

impl LossChart {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Total number of stored strata.
    pub fn num_entries(&self) -> usize {
        let cells = self.base.iter().chain(&self.top);
        cells.flat_map(|c| c.values()).map(Vec::len).sum::<usize>() + self.root.len()
    }

    pub fn entries(&self) -> Vec<ChartEntry> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..=self.n {
                let k = self.idx(i, j);
                for (layer, cell) in [(Layer::Base, &self.base[k]), (Layer::Top, &self.top[k])] {
                    for (&symbol, strata) in cell {
                        out.extend(strata.iter().map(|s| ChartEntry {
                            start: i,
                            end: j,
                            symbol,
                            layer,
                            tp: s.tp as usize,
                            fp: s.fp as usize,
                            score: s.score,
                        }));
                    }
                }
            }
        }
        out.extend(self.root.iter().map(|s| ChartEntry {
            start: 0,
            end: self.n,
            symbol: self.grammar.start(),
            layer: Layer::Root,
            tp: s.tp as usize,
            fp: s.fp as usize,
            score: s.score,
        }));
        out
    }

    /// Derivation stored for `entry`, or `None` if the chart has no such item.
    pub fn tree(&self, entry: &ChartEntry) -> Option<Tree> {
        let (tp, fp) = (u32::try_from(entry.tp).ok()?, u32::try_from(entry.fp).ok()?);
        if entry.end > self.n || entry.start >= entry.end {
            return None;
        }
        let strata = self.strata(entry.start, entry.end, entry.symbol, entry.layer)?;
        find(strata, tp, fp)?;
        Some(self.build(entry.start, entry.end, entry.symbol, entry.layer, tp, fp))
    }

    fn strata(&self, i: usize, j: usize, sym: SymbolId, layer: Layer) -> Option<&Strata> {
        match layer {
            Layer::Base => self.base[self.idx(i, j)].get(&sym),
            Layer::Top => self.top[self.idx(i, j)].get(&sym),
            Layer::Root => (i == 0 && j == self.n && sym == self.grammar.start()).then_some(&self.root),
        }
    }

    fn build(&self, i: usize, j: usize, sym: SymbolId, layer: Layer, tp: u32, fp: u32) -> Tree {
        let strata = self.strata(i, j, sym, layer).expect("backpointer to missing symbol");
        let st = find(strata, tp, fp).expect("backpointer to missing stratum");
        let g = &self.grammar;
        let children = match (layer, st.back) {
            (Layer::Root, Back::FromBase) => return self.build(i, j, sym, Layer::Top, tp, fp),
            (_, Back::FromBase) => return self.build(i, j, sym, Layer::Base, tp, fp),
            (_, Back::Lexical) => vec![Tree::Leaf(self.tokens[i].clone())],
            (_, Back::Unary { prod, child }) => {
                let Production::Unary { child: c, .. } = *g.production(prod) else {
                    unreachable!()
                };
                let below = if layer == Layer::Root { Layer::Top } else { Layer::Base };
                vec![self.build(i, j, c, below, child.0, child.1)]
            }
            (_, Back::Binary {
                prod,
                split,
                left,
                right,
            }) => {
                let Production::Binary { left: l, right: r, .. } = *g.production(prod) else {
                    unreachable!()
                };
                vec![
                    self.build(i, split, l, Layer::Top, left.0, left.1),
                    self.build(split, j, r, Layer::Top, right.0, right.1),
                ]
            }
        };
        Tree::Node {
            label: g.symbol(sym).clone(),
            children,
        }
    }

    /// Maximizes `Δ(tp, fp) · (constant + score)` over complete derivations.
    /// Ties go to fewer false positives, then more true positives.
    pub fn best(&self, mode: LossMode, constant: f64) -> Option<LaiResult> {
        let mut best: Option<(f64, &Stratum)> = None;
        for st in &self.root {
            let loss = mode.loss(st.tp as usize, st.fp as usize, self.gold_size);
            let obj = loss * (constant + st.score);
            let better = match best {
                None => true,
                Some((b, cur)) => obj > b || (obj == b && (st.fp, std::cmp::Reverse(st.tp)) < (cur.fp, std::cmp::Reverse(cur.tp))),
            };
            if better {
                best = Some((obj, st));
            }
        }
        let (objective, st) = best?;
        Some(LaiResult {
            tree: self.build(0, self.n, self.grammar.start(), Layer::Root, st.tp, st.fp),
            objective,
            tp: st.tp as usize,
            fp: st.fp as usize,
            loss: mode.loss(st.tp as usize, st.fp as usize, self.gold_size),
            score: st.score,
        })
    }
}

/// Fills the stratified chart for `tokens` with counts taken against `gold`
/// under `counting`.
pub fn fill_loss_chart<S: AsRef<str>>(
    model: &Model,
    tokens: &[S],
    gold: &GoldReference,
    counting: CountingConfig,
) -> LossChart {
    let g = model.grammar();
    let w = model.weights();
    let n = tokens.len();
    let counter = Counter::new(g, gold, counting);
    let size = (n + 1) * (n + 1);
    let mut chart = LossChart {
        grammar: Arc::clone(model.grammar_arc()),
        tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
        n,
        gold_size: gold.size,
        base: vec![Cell::new(); size],
        top: vec![Cell::new(); size],
        root: Vec::new(),
    };
    if n == 0 {
        return chart;
    }

    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut acc = Acc::new();
            if len == 1 {
                for &prod in g.lexical_rules(tokens[i].as_ref()) {
                    let lhs = g.production(prod).lhs();
                    let (tp, fp) = counter.preterminal(lhs, i, j);
                    let s = Stratum {
                        tp,
                        fp,
                        score: w[prod],
                        rank: [0, prod, 0, 0],
                        back: Back::Lexical,
                    };
                    offer(&mut acc, lhs, s);
                }
            } else {
                for split in i + 1..j {
                    let left_cell = &chart.top[chart.idx(i, split)];
                    let right_cell = &chart.top[chart.idx(split, j)];
                    if left_cell.is_empty() || right_cell.is_empty() {
                        continue;
                    }
                    for (&left, lstrata) in left_cell {
                        for &prod in g.binary_rules_by_left(left) {
                            let Production::Binary { lhs, right, .. } = *g.production(prod) else {
                                unreachable!()
                            };
                            let Some(rstrata) = right_cell.get(&right) else {
                                continue;
                            };
                            let (dtp, dfp) = counter.node(lhs, i, j);
                            let slot = acc.entry(lhs).or_default();
                            for l in lstrata {
                                for r in rstrata {
                                    let s = Stratum {
                                        tp: l.tp + r.tp + dtp,
                                        fp: l.fp + r.fp + dfp,
                                        score: w[prod] + l.score + r.score,
                                        rank: [n - split, prod, r.tp as usize, r.fp as usize],
                                        back: Back::Binary {
                                            prod,
                                            split,
                                            left: (l.tp, l.fp),
                                            right: (r.tp, r.fp),
                                        },
                                    };
                                    match slot.entry((s.tp, s.fp)) {
                                        Entry::Occupied(mut e) => {
                                            let cur = e.get_mut();
                                            if s.score > cur.score || (s.score == cur.score && s.rank < cur.rank) {
                                                *cur = s;
                                            }
                                        }
                                        Entry::Vacant(e) => {
                                            e.insert(s);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let base = finish(acc);

            let mut acc: Acc = base
                .iter()
                .map(|(&sym, strata)| {
                    let m = strata
                        .iter()
                        .map(|s| {
                            let lifted = Stratum {
                                rank: [0; 4],
                                back: Back::FromBase,
                                ..*s
                            };
                            ((s.tp, s.fp), lifted)
                        })
                        .collect();
                    (sym, m)
                })
                .collect();
            for (&child, strata) in &base {
                for &prod in g.unary_rules_by_child(child) {
                    let lhs = g.production(prod).lhs();
                    let (dtp, dfp) = counter.over(lhs, child, len == 1, i, j);
                    for c in strata {
                        let s = Stratum {
                            tp: c.tp + dtp,
                            fp: c.fp + dfp,
                            score: w[prod] + c.score,
                            rank: [1, prod, 0, 0],
                            back: Back::Unary {
                                prod,
                                child: (c.tp, c.fp),
                            },
                        };
                        offer(&mut acc, lhs, s);
                    }
                }
            }
            let k = chart.idx(i, j);
            chart.base[k] = base;
            chart.top[k] = finish(acc);
        }
    }

    let whole = chart.idx(0, n);
    if g.is_wrapped() {
        let start = g.start();
        let mut acc = Acc::new();
        for &prod in g.root_rules() {
            let Production::Unary { child, .. } = *g.production(prod) else {
                unreachable!()
            };
            let Some(strata) = chart.top[whole].get(&child) else {
                continue;
            };
            for c in strata {
                let child_preterminal = n == 1 && matches!(c.back, Back::FromBase);
                let (dtp, dfp) = counter.over(start, child, child_preterminal, 0, n);
                let s = Stratum {
                    tp: c.tp + dtp,
                    fp: c.fp + dfp,
                    score: w[prod] + c.score,
                    rank: [0, prod, 0, 0],
                    back: Back::Unary {
                        prod,
                        child: (c.tp, c.fp),
                    },
                };
                offer(&mut acc, start, s);
            }
        }
        chart.root = finish(acc).remove(&start).unwrap_or_default();
    } else if let Some(strata) = chart.top[whole].get(&g.start()) {
        chart.root = strata
            .iter()
            .map(|s| Stratum {
                back: Back::FromBase,
                ..*s
            })
            .collect();
    }
    chart
}

/// Exact loss-augmented inference: the derivation maximizing
/// `Δ(y*, y) · (constant + w·Ψ(y))`, where `gold` holds the counted
/// constituents of y* under `mode.counting()`.
pub fn loss_augmented_infer<S: AsRef<str>>(
    model: &Model,
    tokens: &[S],
    gold: &GoldReference,
    mode: LossMode,
    constant: f64,
) -> Option<LaiResult> {
    fill_loss_chart(model, tokens, gold, mode.counting()).best(mode, constant)
}

/// Loss-augmented inference against a binarized gold tree, with the
/// slack-rescaling constant `1 − w·Ψ(y*)`.
pub fn loss_augmented_infer_for_gold(model: &Model, gold: &Tree, mode: LossMode) -> Result<Option<LaiResult>> {
    let gold = model.grammar().fit_root(gold.clone());
    let reference = constituents(&gold, mode.counting());
    let constant = 1.0 - model.score(&gold)?;
    Ok(loss_augmented_infer(model, &gold.tokens(), &reference, mode, constant))
}
