//! Bracketed trees, their preprocessing, and the constituent sets on which
//! every loss and evaluation measure is defined.

mod bracketed;
mod label;
mod preprocess;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use bracketed::{parse_bracketed, read_treebank, write_bracketed, write_treebank, TreebankReader};
pub use label::{Label, ROOT_PARENT, WRAPPER_BASE};
pub use preprocess::{preprocess, PreprocessOptions};

/// Ordered labeled tree; leaves are tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tree {
    Leaf(String),
    Node { label: Label, children: Vec<Tree> },
}

impl Tree {
    pub fn leaf(token: impl Into<String>) -> Self {
        Tree::Leaf(token.into())
    }

    pub fn node(label: impl Into<Label>, children: Vec<Tree>) -> Self {
        Tree::Node {
            label: label.into(),
            children,
        }
    }

    /// `(label token)`
    pub fn preterminal(label: impl Into<Label>, token: impl Into<String>) -> Self {
        Tree::node(label, vec![Tree::leaf(token)])
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf(_))
    }

    /// Internal node whose only child is a leaf.
    pub fn is_preterminal(&self) -> bool {
        match self {
            Tree::Node { children, .. } => children.len() == 1 && children[0].is_leaf(),
            Tree::Leaf(_) => false,
        }
    }

    pub fn label(&self) -> Option<&Label> {
        match self {
            Tree::Node { label, .. } => Some(label),
            Tree::Leaf(_) => None,
        }
    }

    pub fn children(&self) -> &[Tree] {
        match self {
            Tree::Node { children, .. } => children,
            Tree::Leaf(_) => &[],
        }
    }

    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Tree::Leaf(t) => out.push(t),
            Tree::Node { children, .. } => children.iter().for_each(|c| c.collect_tokens(out)),
        }
    }

    pub fn num_tokens(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node { children, .. } => children.iter().map(Tree::num_tokens).sum(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        1 + self.children().iter().map(Tree::num_nodes).sum::<usize>()
    }

    /// Calls `f(node, start, end)` for every internal node in pre-order,
    /// with half-open token spans starting at `offset`.
    pub fn for_each_node<'a, F>(&'a self, offset: usize, f: &mut F) -> usize
    where
        F: FnMut(&'a Tree, usize, usize),
    {
        match self {
            Tree::Leaf(_) => offset + 1,
            Tree::Node { children, .. } => {
                let end = offset + self.num_tokens();
                f(self, offset, end);
                let mut pos = offset;
                for c in children {
                    pos = c.for_each_node(pos, f);
                }
                debug_assert_eq!(pos, end);
                end
            }
        }
    }
}

/// Labeled half-open span.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constituent {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CountingMode {
    /// Every node of the tree as given, labels with all annotation.
    Binarized,
    /// Artificial nodes skipped and annotation stripped: the counts the
    /// debinarized tree would give.
    Unbinarized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountingConfig {
    pub mode: CountingMode,
    pub exclude_preterminals: bool,
}

impl CountingConfig {
    pub fn binarized() -> Self {
        CountingConfig {
            mode: CountingMode::Binarized,
            exclude_preterminals: true,
        }
    }

    pub fn unbinarized() -> Self {
        CountingConfig {
            mode: CountingMode::Unbinarized,
            exclude_preterminals: true,
        }
    }

    pub fn with_preterminals(mut self, include: bool) -> Self {
        self.exclude_preterminals = !include;
        self
    }

    /// Label under which a node with `label` is counted, or `None` when the
    /// node does not count at all (preterminal exclusion is the caller's
    /// business since it depends on the node shape).
    pub fn count_label(&self, label: &Label) -> Option<String> {
        match self.mode {
            CountingMode::Binarized => Some(label.to_string()),
            CountingMode::Unbinarized if label.is_artificial() => None,
            CountingMode::Unbinarized => Some(label.base().to_string()),
        }
    }
}

impl Default for CountingConfig {
    fn default() -> Self {
        CountingConfig::unbinarized()
    }
}

/// Counted constituents of a gold tree; `size` is |y*|.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoldReference {
    pub constituents: BTreeSet<Constituent>,
    pub size: usize,
}

impl GoldReference {
    pub fn new(constituents: BTreeSet<Constituent>) -> Self {
        let size = constituents.len();
        GoldReference { constituents, size }
    }

    pub fn contains(&self, c: &Constituent) -> bool {
        self.constituents.contains(c)
    }

    /// True and false positives of `predicted` against this reference.
    pub fn score(&self, predicted: &BTreeSet<Constituent>) -> (usize, usize) {
        let tp = predicted.iter().filter(|c| self.contains(c)).count();
        (tp, predicted.len() - tp)
    }
}

/// Constituents of `tree` eligible for counting under `config`.
pub fn constituents(tree: &Tree, config: CountingConfig) -> GoldReference {
    GoldReference::new(constituent_set(tree, 0, config))
}

/// Like [`constituents`] for a subtree whose first token sits at `offset`.
pub fn constituent_set(tree: &Tree, offset: usize, config: CountingConfig) -> BTreeSet<Constituent> {
    let mut set = BTreeSet::new();
    tree.for_each_node(offset, &mut |node, start, end| {
        if config.exclude_preterminals && node.is_preterminal() {
            return;
        }
        if let Some(label) = node.label().and_then(|l| config.count_label(l)) {
            set.insert(Constituent { label, start, end });
        }
    });
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tree {
        parse_bracketed(s).unwrap()
    }

    fn c(label: &str, start: usize, end: usize) -> Constituent {
        Constituent {
            label: label.into(),
            start,
            end,
        }
    }

    #[test]
    fn spans_follow_leaves() {
        let tree = t("(S (NP (D the) (N dog)) (VP (V barked)))");
        let mut spans = Vec::new();
        tree.for_each_node(0, &mut |n, i, j| spans.push((n.label().unwrap().to_string(), i, j)));
        assert_eq!(
            spans,
            vec![
                ("S".into(), 0, 3),
                ("NP".into(), 0, 2),
                ("D".into(), 0, 1),
                ("N".into(), 1, 2),
                ("VP".into(), 2, 3),
                ("V".into(), 2, 3),
            ]
        );
    }

    #[test]
    fn unbinarized_constituents_of_plain_tree() {
        let tree = t("(S (NP (D the) (N dog)) (VP (V saw) (NP (D the) (N cat))))");
        let gold = constituents(&tree, CountingConfig::unbinarized());
        let expected: BTreeSet<_> = [c("S", 0, 5), c("NP", 0, 2), c("VP", 2, 5), c("NP", 3, 5)].into();
        assert_eq!(gold.constituents, expected);
        assert_eq!(gold.size, 4);
    }

    #[test]
    fn artificial_nodes_depend_on_mode() {
        let tree = t("(T (A a) (T|A-A (A a) (A a)))");
        let bin = constituents(&tree, CountingConfig::binarized());
        let unbin = constituents(&tree, CountingConfig::unbinarized());
        assert!(bin.contains(&c("T|A-A", 1, 3)));
        assert_eq!(bin.size, 2);
        assert!(!unbin.constituents.iter().any(|x| x.start == 1 && x.end == 3));
        assert_eq!(unbin.size, 1);
    }

    #[test]
    fn unbinarized_strips_parent_annotation() {
        let tree = t("(S^? (NP^S (D^NP the) (N^NP dog)) (VP^S (V^VP barked)))");
        let unbin = constituents(&tree, CountingConfig::unbinarized());
        assert!(unbin.contains(&c("NP", 0, 2)));
        assert!(unbin.contains(&c("VP", 2, 3)));
        let bin = constituents(&tree, CountingConfig::binarized());
        assert!(bin.contains(&c("NP^S", 0, 2)));
    }

    #[test]
    fn preterminals_counted_on_request() {
        let tree = t("(X (X a) (X a))");
        assert_eq!(constituents(&tree, CountingConfig::unbinarized()).size, 1);
        let with = CountingConfig::unbinarized().with_preterminals(true);
        assert_eq!(constituents(&tree, with).size, 3);
    }

    #[test]
    fn duplicate_triples_collapse() {
        // unary X over preterminal X on the same span
        let tree = t("(X (X a))");
        let with = CountingConfig::binarized().with_preterminals(true);
        assert_eq!(constituents(&tree, with).size, 1);
    }

    #[test]
    fn gold_scoring() {
        let gold = constituents(&t("(X (X (X a) (X a)) (X a))"), CountingConfig::unbinarized());
        let pred = constituent_set(&t("(X (X a) (X (X a) (X a)))"), 0, CountingConfig::unbinarized());
        assert_eq!(gold.score(&pred), (1, 1));
    }
}
