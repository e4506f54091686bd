use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Production, SymbolId};
use crate::treebank::Tree;

/// Longest sentence [`enumerate_parses`] accepts by default.
pub const DEFAULT_ENUMERATION_BOUND: usize = 8;

/// Every derivation of `tokens` the decoder could return, in no particular
/// order. Walks the production list directly rather than the grammar's
/// indices so it can serve as a reference for the charts.
pub fn enumerate_parses<S: AsRef<str>>(grammar: &Grammar, tokens: &[S], bound: usize) -> Result<Vec<Tree>> {
    let n = tokens.len();
    if n > bound {
        return Err(Error::Argument(format!(
            "sentence of {n} tokens exceeds the enumeration bound of {bound}"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let wrapped = grammar.is_wrapped();
    let start = grammar.start();
    let is_root_rule = |p: &Production| wrapped && p.lhs() == start;

    type Forest = HashMap<SymbolId, Vec<Tree>>;
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    let mut top: Vec<Forest> = vec![Forest::new(); (n + 1) * (n + 1)];

    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut base = Forest::new();
            for p in grammar.productions() {
                match p {
                    Production::Lexical { lhs, .. } if len == 1 => {
                        let token = tokens[i].as_ref();
                        let licensed = grammar.lexical_rules(token).iter().any(|&id| grammar.production(id) == p);
                        if licensed {
                            base.entry(*lhs)
                                .or_default()
                                .push(Tree::preterminal(grammar.symbol(*lhs).clone(), token));
                        }
                    }
                    Production::Binary { lhs, left, right } if len > 1 => {
                        for split in i + 1..j {
                            let (Some(ls), Some(rs)) = (top[idx(i, split)].get(left), top[idx(split, j)].get(right))
                            else {
                                continue;
                            };
                            for l in ls {
                                for r in rs {
                                    base.entry(*lhs).or_default().push(Tree::Node {
                                        label: grammar.symbol(*lhs).clone(),
                                        children: vec![l.clone(), r.clone()],
                                    });
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
            let mut cell = base.clone();
            for p in grammar.productions() {
                if let Production::Unary { lhs, child } = p {
                    if is_root_rule(p) {
                        continue;
                    }
                    for c in base.get(child).into_iter().flatten() {
                        cell.entry(*lhs).or_default().push(Tree::Node {
                            label: grammar.symbol(*lhs).clone(),
                            children: vec![c.clone()],
                        });
                    }
                }
            }
            top[idx(i, j)] = cell;
        }
    }

    let whole = &top[idx(0, n)];
    if !wrapped {
        return Ok(whole.get(&start).cloned().unwrap_or_default());
    }
    let mut out = Vec::new();
    for p in grammar.productions() {
        if let Production::Unary { child, .. } = p {
            if is_root_rule(p) {
                for c in whole.get(child).into_iter().flatten() {
                    out.push(Tree::Node {
                        label: grammar.start_label().clone(),
                        children: vec![c.clone()],
                    });
                }
            }
        }
    }
    Ok(out)
}
