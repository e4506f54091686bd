use crate::error::{Error, Result};
use crate::treebank::{Label, Tree, ROOT_PARENT};

/// Markovization settings.
///
/// `horizontal` is the number of sibling labels an artificial node keeps
/// (`None` keeps all of them); `vertical` is the parent-annotation order,
/// 1 meaning no annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinConfig {
    pub horizontal: Option<usize>,
    pub vertical: usize,
}

impl Default for BinConfig {
    fn default() -> Self {
        BinConfig {
            horizontal: None,
            vertical: 1,
        }
    }
}

impl BinConfig {
    pub fn new(horizontal: Option<usize>, vertical: usize) -> Result<Self> {
        if vertical == 0 {
            return Err(Error::Argument("vertical annotation order must be at least 1".into()));
        }
        Ok(BinConfig { horizontal, vertical })
    }
}

/// Right-factors every node with three or more children:
/// `(A C1 C2 ... Ck)` becomes `(A C1 (A|C2-...-Ck C2 ...))`, recursively.
///
/// Original nodes gain their `vertical - 1` nearest ancestor labels as
/// parent annotation (`?` above the root); artificial nodes carry the
/// annotation of the node they factor.
pub fn binarize_tree(tree: &Tree, config: BinConfig) -> Result<Tree> {
    let mut ancestors = Vec::new();
    binarize_node(tree, &mut ancestors, config)
}

fn parent_context(ancestors: &[String], config: BinConfig) -> Vec<String> {
    (0..config.vertical - 1)
        .map(|k| {
            ancestors
                .iter()
                .rev()
                .nth(k)
                .cloned()
                .unwrap_or_else(|| ROOT_PARENT.to_string())
        })
        .collect()
}

// `ancestors` holds base labels from the root down (nearest last).
fn binarize_node(tree: &Tree, ancestors: &mut Vec<String>, config: BinConfig) -> Result<Tree> {
    let Tree::Node { label, children } = tree else {
        return Ok(tree.clone());
    };
    if children.len() > 1 && children.iter().any(Tree::is_leaf) {
        return Err(Error::MalformedTree(format!(
            "node {label} mixes tokens with {} children",
            children.len()
        )));
    }
    let parents = parent_context(ancestors, config);
    let base = label.base().to_string();
    ancestors.push(base.clone());
    let result = (|| {
        let out: Vec<Tree> = if children.len() <= 2 {
            children
                .iter()
                .map(|c| binarize_node(c, ancestors, config))
                .collect::<Result<_>>()?
        } else {
            vec![
                binarize_node(&children[0], ancestors, config)?,
                factor(&base, &parents, &children[1..], ancestors, config)?,
            ]
        };
        Ok(Tree::Node {
            label: Label::annotated(base.clone(), parents.clone()),
            children: out,
        })
    })();
    ancestors.pop();
    result
}

fn factor(
    base: &str,
    parents: &[String],
    rest: &[Tree],
    ancestors: &mut Vec<String>,
    config: BinConfig,
) -> Result<Tree> {
    let names: Vec<&str> = rest
        .iter()
        .map(|c| c.label().map_or("", Label::base))
        .collect();
    let keep = config.horizontal.map_or(names.len(), |h| h.min(names.len()));
    let label = Label::artificial(base, parents.to_vec(), &names[names.len() - keep..]);
    let right = if rest.len() == 2 {
        binarize_node(&rest[1], ancestors, config)?
    } else {
        factor(base, parents, &rest[1..], ancestors, config)?
    };
    Ok(Tree::Node {
        label,
        children: vec![binarize_node(&rest[0], ancestors, config)?, right],
    })
}

/// Inverse of [`binarize_tree`]: artificial nodes are spliced into their
/// parents and annotation is dropped. A single-child artificial root (the
/// root wrapper) is removed.
pub fn debinarize_tree(tree: &Tree) -> Result<Tree> {
    match tree {
        Tree::Leaf(_) => Ok(tree.clone()),
        Tree::Node { label, children } if label.is_artificial() => {
            if children.len() == 1 {
                debinarize_tree(&children[0])
            } else {
                Err(Error::MalformedTree(format!("artificial node {label} at the root")))
            }
        }
        Tree::Node { label, children } => {
            let mut out = Vec::with_capacity(children.len());
            splice(children, &mut out);
            Ok(Tree::Node {
                label: label.stripped(),
                children: out,
            })
        }
    }
}

fn splice(children: &[Tree], out: &mut Vec<Tree>) {
    for child in children {
        match child {
            Tree::Leaf(_) => out.push(child.clone()),
            Tree::Node { label, children } if label.is_artificial() => splice(children, out),
            Tree::Node { label, children } => {
                let mut inner = Vec::with_capacity(children.len());
                splice(children, &mut inner);
                out.push(Tree::Node {
                    label: label.stripped(),
                    children: inner,
                });
            }
        }
    }
}
