//! Binarized weighted-CFG rule sets: tree binarization with horizontal and
//! parent annotation, exact debinarization, and grammar induction.

mod binarize;
mod induce;
mod io;
mod unk;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::treebank::{Label, Tree};

pub use binarize::{binarize_tree, debinarize_tree, BinConfig};
pub use induce::induce;
pub use io::{read_grammar, write_grammar, GrammarFile};
pub use unk::{is_signature, signature};

pub type SymbolId = usize;
pub type ProdId = usize;

/// Default corpus frequency below which words also train their signature.
pub const DEFAULT_UNK_THRESHOLD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Production {
    Binary {
        lhs: SymbolId,
        left: SymbolId,
        right: SymbolId,
    },
    /// One-child rule. Applied at most once per span during decoding; when
    /// the start symbol is a root wrapper its unary rules only apply at the
    /// root.
    Unary { lhs: SymbolId, child: SymbolId },
    Lexical { lhs: SymbolId, terminal: String },
}

impl Production {
    pub fn lhs(&self) -> SymbolId {
        match *self {
            Production::Binary { lhs, .. } | Production::Unary { lhs, .. } | Production::Lexical { lhs, .. } => lhs,
        }
    }
}

/// Production set with dense ids `0..m`, plus the lookup tables decoding
/// needs.
#[derive(Debug, Clone)]
pub struct Grammar {
    symbols: Vec<Label>,
    symbol_ids: HashMap<Label, SymbolId>,
    productions: Vec<Production>,
    production_ids: HashMap<Production, ProdId>,
    start: SymbolId,
    unk_threshold: usize,
    lexicon: HashMap<String, Vec<ProdId>>,
    binary_by_left: Vec<Vec<ProdId>>,
    unary_by_child: Vec<Vec<ProdId>>,
    root_rules: Vec<ProdId>,
}

#[derive(Debug, Default, Clone)]
pub struct GrammarBuilder {
    symbols: Vec<Label>,
    symbol_ids: HashMap<Label, SymbolId>,
    productions: Vec<Production>,
    production_ids: HashMap<Production, ProdId>,
}

impl GrammarBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn symbol(&mut self, label: &Label) -> SymbolId {
        if let Some(&id) = self.symbol_ids.get(label) {
            return id;
        }
        let id = self.symbols.len();
        self.symbols.push(label.clone());
        self.symbol_ids.insert(label.clone(), id);
        id
    }

    fn add(&mut self, p: Production) -> ProdId {
        if let Some(&id) = self.production_ids.get(&p) {
            return id;
        }
        let id = self.productions.len();
        self.productions.push(p.clone());
        self.production_ids.insert(p, id);
        id
    }

    pub fn binary(&mut self, lhs: &Label, left: &Label, right: &Label) -> ProdId {
        let p = Production::Binary {
            lhs: self.symbol(lhs),
            left: self.symbol(left),
            right: self.symbol(right),
        };
        self.add(p)
    }

    pub fn unary(&mut self, lhs: &Label, child: &Label) -> ProdId {
        let p = Production::Unary {
            lhs: self.symbol(lhs),
            child: self.symbol(child),
        };
        self.add(p)
    }

    pub fn lexical(&mut self, lhs: &Label, terminal: &str) -> ProdId {
        let p = Production::Lexical {
            lhs: self.symbol(lhs),
            terminal: terminal.to_string(),
        };
        self.add(p)
    }

    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    /// Adds the productions realized by every node of a binarized tree.
    pub fn add_tree(&mut self, tree: &Tree) -> Result<()> {
        let Tree::Node { label, children } = tree else {
            return Err(Error::MalformedTree("bare leaf".into()));
        };
        match children.as_slice() {
            [Tree::Leaf(token)] => {
                self.lexical(label, token);
            }
            [child] => {
                self.unary(label, child.label().expect("internal"));
                self.add_tree(child)?;
            }
            [left, right] if !left.is_leaf() && !right.is_leaf() => {
                self.binary(label, left.label().expect("internal"), right.label().expect("internal"));
                self.add_tree(left)?;
                self.add_tree(right)?;
            }
            _ => {
                return Err(Error::MalformedTree(format!(
                    "node {label} with {} children is not binarized",
                    children.len()
                )))
            }
        }
        Ok(())
    }

    pub fn build(mut self, start: &Label, unk_threshold: usize) -> Result<Grammar> {
        let start = self.symbol(start);
        let n = self.symbols.len();
        let wrapped = self.symbols[start].is_artificial();
        let mut lexicon: HashMap<String, Vec<ProdId>> = HashMap::new();
        let mut binary_by_left = vec![Vec::new(); n];
        let mut unary_by_child = vec![Vec::new(); n];
        let mut root_rules = Vec::new();
        for (id, p) in self.productions.iter().enumerate() {
            if wrapped {
                let on_rhs = match p {
                    Production::Binary { left, right, .. } => *left == start || *right == start,
                    Production::Unary { child, .. } => *child == start,
                    Production::Lexical { .. } => false,
                };
                let bad_lhs = p.lhs() == start && !matches!(p, Production::Unary { .. });
                if on_rhs || bad_lhs {
                    return Err(Error::Grammar(format!(
                        "root wrapper {} may only appear as the left side of unary rules",
                        self.symbols[start]
                    )));
                }
            }
            match p {
                Production::Binary { left, .. } => binary_by_left[*left].push(id),
                Production::Unary { lhs, .. } if wrapped && *lhs == start => root_rules.push(id),
                Production::Unary { child, .. } => unary_by_child[*child].push(id),
                Production::Lexical { terminal, .. } => lexicon.entry(terminal.clone()).or_default().push(id),
            }
        }
        Ok(Grammar {
            symbols: self.symbols,
            symbol_ids: self.symbol_ids,
            productions: self.productions,
            production_ids: self.production_ids,
            start,
            unk_threshold,
            lexicon,
            binary_by_left,
            unary_by_child,
            root_rules,
        })
    }
}

impl Grammar {
    pub fn num_productions(&self) -> usize {
        self.productions.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, id: ProdId) -> &Production {
        &self.productions[id]
    }

    pub fn production_id(&self, p: &Production) -> Option<ProdId> {
        self.production_ids.get(p).copied()
    }

    pub fn symbol(&self, id: SymbolId) -> &Label {
        &self.symbols[id]
    }

    pub fn symbols(&self) -> &[Label] {
        &self.symbols
    }

    pub fn symbol_id(&self, label: &Label) -> Option<SymbolId> {
        self.symbol_ids.get(label).copied()
    }

    pub fn start(&self) -> SymbolId {
        self.start
    }

    pub fn start_label(&self) -> &Label {
        &self.symbols[self.start]
    }

    pub fn unk_threshold(&self) -> usize {
        self.unk_threshold
    }

    /// Whether the start symbol is a root wrapper reached only through
    /// root rules.
    pub fn is_wrapped(&self) -> bool {
        self.symbols[self.start].is_artificial()
    }

    /// Wraps `tree` in the start symbol when this grammar uses a root
    /// wrapper and the tree does not have one yet.
    pub fn fit_root(&self, tree: Tree) -> Tree {
        if self.is_wrapped() && tree.label() != Some(self.start_label()) {
            Tree::Node {
                label: self.start_label().clone(),
                children: vec![tree],
            }
        } else {
            tree
        }
    }

    pub fn terminals(&self) -> impl Iterator<Item = &str> {
        self.lexicon.keys().map(String::as_str)
    }

    pub fn is_known_word(&self, token: &str) -> bool {
        self.lexicon.contains_key(token)
    }

    /// Lexical rules for `token`: its own rules when the word is known,
    /// otherwise those of its unknown-word signature.
    pub fn lexical_rules(&self, token: &str) -> &[ProdId] {
        if let Some(rules) = self.lexicon.get(token) {
            return rules;
        }
        self.lexicon.get(&signature(token)).map_or(&[], Vec::as_slice)
    }

    /// Binary rules whose left child is `left`.
    pub fn binary_rules_by_left(&self, left: SymbolId) -> &[ProdId] {
        &self.binary_by_left[left]
    }

    /// Per-span unary rules over `child` (root rules excluded).
    pub fn unary_rules_by_child(&self, child: SymbolId) -> &[ProdId] {
        &self.unary_by_child[child]
    }

    pub fn root_rules(&self) -> &[ProdId] {
        &self.root_rules
    }

    /// Id of the lexical production for `(lhs, token)`, falling back to the
    /// token's signature class.
    pub fn lexical_id(&self, lhs: SymbolId, token: &str) -> Option<ProdId> {
        let direct = Production::Lexical {
            lhs,
            terminal: token.to_string(),
        };
        self.production_id(&direct).or_else(|| {
            self.production_id(&Production::Lexical {
                lhs,
                terminal: signature(token),
            })
        })
    }

    pub fn display_production(&self, id: ProdId) -> String {
        ProductionDisplay { grammar: self, id }.to_string()
    }
}

struct ProductionDisplay<'a> {
    grammar: &'a Grammar,
    id: ProdId,
}

impl fmt::Display for ProductionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.grammar;
        match g.production(self.id) {
            Production::Binary { lhs, left, right } => {
                write!(f, "{} -> {} {}", g.symbol(*lhs), g.symbol(*left), g.symbol(*right))
            }
            Production::Unary { lhs, child } => write!(f, "{} -> {}", g.symbol(*lhs), g.symbol(*child)),
            Production::Lexical { lhs, terminal } => write!(f, "{} -> '{}'", g.symbol(*lhs), terminal),
        }
    }
}
