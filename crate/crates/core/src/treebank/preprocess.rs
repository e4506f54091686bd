use super::{Label, Tree};
use crate::error::{Error, Result};

const NULL_TAG: &str = "-NONE-";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessOptions {
    pub strip_functional: bool,
    pub remove_nulls: bool,
    pub collapse_unaries: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            strip_functional: true,
            remove_nulls: true,
            collapse_unaries: true,
        }
    }
}

/// Standard treebank cleanup: null elements are removed (with any ancestor
/// left empty), functional tags are cut from labels (`NP-SBJ-1` becomes
/// `NP`), and unary chains above the preterminal level are merged into one
/// node with a `+`-joined label (`S+VP`).
pub fn preprocess(tree: &Tree, opts: PreprocessOptions) -> Result<Tree> {
    let tree = if opts.remove_nulls {
        remove_nulls(tree).ok_or(Error::EmptyTree)?
    } else {
        tree.clone()
    };
    let tree = if opts.strip_functional {
        strip_functional(&tree)
    } else {
        tree
    };
    Ok(if opts.collapse_unaries {
        collapse_unaries(tree)
    } else {
        tree
    })
}

fn remove_nulls(tree: &Tree) -> Option<Tree> {
    match tree {
        Tree::Leaf(_) => Some(tree.clone()),
        Tree::Node { label, children } => {
            if label.to_string() == NULL_TAG {
                return None;
            }
            let children: Vec<Tree> = children.iter().filter_map(remove_nulls).collect();
            if children.is_empty() {
                None
            } else {
                Some(Tree::Node {
                    label: label.clone(),
                    children,
                })
            }
        }
    }
}

/// Bracket tags such as `-LRB-` or `-NONE-` are kept whole. Otherwise the
/// label is cut at the first `-`, `=` or `|` (PTB alternative labels such as
/// `ADVP|PRT` keep their first reading).
fn strip_label(raw: &str) -> &str {
    if raw.len() > 1 && raw.starts_with('-') && raw.ends_with('-') {
        return raw;
    }
    match raw.char_indices().skip(1).find(|(_, c)| matches!(c, '-' | '=' | '|')) {
        Some((pos, _)) => &raw[..pos],
        None => raw,
    }
}

fn strip_functional(tree: &Tree) -> Tree {
    match tree {
        Tree::Leaf(_) => tree.clone(),
        Tree::Node { label, children } => Tree::Node {
            label: Label::plain(strip_label(&label.to_string())),
            children: children.iter().map(strip_functional).collect(),
        },
    }
}

fn collapse_unaries(tree: Tree) -> Tree {
    match tree {
        Tree::Leaf(_) => tree,
        Tree::Node { label, children } => {
            let mut label = label.to_string();
            let mut children = children;
            while children.len() == 1 && !children[0].is_leaf() && !children[0].is_preterminal() {
                match children.pop() {
                    Some(Tree::Node {
                        label: inner,
                        children: grandchildren,
                    }) => {
                        label.push('+');
                        label.push_str(&inner.to_string());
                        children = grandchildren;
                    }
                    _ => unreachable!("checked non-leaf"),
                }
            }
            Tree::Node {
                label: Label::parse(&label),
                children: children.into_iter().map(collapse_unaries).collect(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{parse_bracketed, write_bracketed};

    fn run(text: &str) -> String {
        write_bracketed(&preprocess(&parse_bracketed(text).unwrap(), PreprocessOptions::default()).unwrap())
    }

    #[test]
    fn functional_tags_removed() {
        assert_eq!(run("(NP-SBJ (D the) (N dog))"), "(NP (D the) (N dog))");
        assert_eq!(run("(S (NP-SBJ-1 (N it)) (VP=2 (V is) (ADJP-PRD (J ok))))"), "(S (NP (N it)) (VP (V is) (ADJP (J ok))))");
    }

    #[test]
    fn bracket_tags_kept() {
        assert_eq!(run("(NP (-LRB- -LRB-) (N x) (-RRB- -RRB-))"), "(NP (-LRB- -LRB-) (N x) (-RRB- -RRB-))");
    }

    #[test]
    fn nulls_removed_and_unaries_collapsed() {
        assert_eq!(run("(S (NP (-NONE- *)) (VP (V barked)))"), "(S+VP (V barked))");
    }

    #[test]
    fn nested_null_ancestors_removed() {
        assert_eq!(
            run("(S (NP-SBJ (NP (-NONE- *T*)) (SBAR (-NONE- 0))) (VP (V ran) (ADV fast)))"),
            "(S+VP (V ran) (ADV fast))"
        );
    }

    #[test]
    fn clean_tree_unchanged() {
        let text = "(S (NP (D the) (N dog)) (VP (V saw) (NP (D a) (N cat))))";
        assert_eq!(run(text), text);
    }

    #[test]
    fn all_null_tree_is_an_error() {
        let tree = parse_bracketed("(S (NP (-NONE- *)))").unwrap();
        assert!(matches!(preprocess(&tree, PreprocessOptions::default()), Err(Error::EmptyTree)));
    }

    #[test]
    fn options_are_independent() {
        let tree = parse_bracketed("(S (NP-SBJ (N x)) (VP (V y)))").unwrap();
        let keep = PreprocessOptions {
            strip_functional: false,
            remove_nulls: true,
            collapse_unaries: false,
        };
        assert_eq!(write_bracketed(&preprocess(&tree, keep).unwrap()), "(S (NP-SBJ (N x)) (VP (V y)))");
    }

    #[test]
    fn idempotent_on_examples() {
        for text in [
            "(S (NP (-NONE- *)) (VP (V barked)))",
            "(ROOT (S (NP-SBJ (DT the) (NN cat)) (VP (VBD sat))))",
            "(X (Y (Z (W a))) (V b))",
        ] {
            let once = preprocess(&parse_bracketed(text).unwrap(), PreprocessOptions::default()).unwrap();
            let twice = preprocess(&once, PreprocessOptions::default()).unwrap();
            assert_eq!(once, twice);
        }
    }
}
