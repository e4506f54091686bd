//! Linear scoring of binarized trees and Viterbi CKY decoding.

mod cky;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grammar::{read_grammar, write_grammar, Grammar, ProdId, Production};
use crate::treebank::Tree;

pub use cky::{cky_parse, Parse};

/// Production counts of a tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector(BTreeMap<ProdId, u32>);

impl FeatureVector {
    pub fn get(&self, id: ProdId) -> u32 {
        self.0.get(&id).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProdId, u32)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of production occurrences, with multiplicity.
    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.iter().map(|(k, v)| weights[k] * f64::from(v)).sum()
    }

    /// `self - other` as a sparse integer vector without zero entries.
    pub fn difference(&self, other: &FeatureVector) -> Vec<(ProdId, i64)> {
        let mut diff: BTreeMap<ProdId, i64> = self.iter().map(|(k, v)| (k, i64::from(v))).collect();
        for (k, v) in other.iter() {
            *diff.entry(k).or_default() -= i64::from(v);
        }
        diff.into_iter().filter(|&(_, v)| v != 0).collect()
    }

    fn bump(&mut self, id: ProdId) {
        *self.0.entry(id).or_default() += 1;
    }
}

impl FromIterator<(ProdId, u32)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (ProdId, u32)>>(iter: I) -> Self {
        FeatureVector(iter.into_iter().filter(|&(_, v)| v > 0).collect())
    }
}

/// Counts how often each production of `grammar` occurs in `tree`.
///
/// Lexical nodes over words the grammar has no rule for fall back to the
/// word's signature class.
pub fn feature_vector(tree: &Tree, grammar: &Grammar) -> Result<FeatureVector> {
    let mut fv = FeatureVector::default();
    collect(tree, grammar, &mut fv)?;
    Ok(fv)
}

fn collect(tree: &Tree, grammar: &Grammar, fv: &mut FeatureVector) -> Result<()> {
    let Tree::Node { label, children } = tree else {
        return Err(Error::MalformedTree("bare token has no production".into()));
    };
    let unknown = |rhs: String| Error::UnknownProduction(format!("{label} -> {rhs}"));
    let sym = |t: &Tree| t.label().and_then(|l| grammar.symbol_id(l));
    let lhs = grammar.symbol_id(label);
    let id = match children.as_slice() {
        [Tree::Leaf(token)] => lhs
            .and_then(|lhs| grammar.lexical_id(lhs, token))
            .ok_or_else(|| unknown(format!("'{token}'")))?,
        [child] => lhs
            .zip(sym(child))
            .and_then(|(lhs, child)| grammar.production_id(&Production::Unary { lhs, child }))
            .ok_or_else(|| unknown(child.label().map(|l| l.to_string()).unwrap_or_default()))?,
        [left, right] if !left.is_leaf() && !right.is_leaf() => {
            let found = match (lhs, sym(left), sym(right)) {
                (Some(lhs), Some(left), Some(right)) => {
                    grammar.production_id(&Production::Binary { lhs, left, right })
                }
                _ => None,
            };
            found.ok_or_else(|| {
                unknown(format!(
                    "{} {}",
                    left.label().expect("internal"),
                    right.label().expect("internal")
                ))
            })?
        }
        _ => {
            return Err(Error::MalformedTree(format!(
                "node {label} with {} children is not binarized",
                children.len()
            )))
        }
    };
    fv.bump(id);
    children
        .iter()
        .filter(|c| !c.is_leaf())
        .try_for_each(|c| collect(c, grammar, fv))
}

/// A grammar together with one weight per production.
#[derive(Debug, Clone)]
pub struct Model {
    grammar: Arc<Grammar>,
    weights: Vec<f64>,
}

impl Model {
    pub fn new(grammar: Arc<Grammar>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grammar.num_productions() {
            return Err(Error::Argument(format!(
                "{} weights for {} productions",
                weights.len(),
                grammar.num_productions()
            )));
        }
        if let Some(pos) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::Argument(format!("weight {pos} is not finite")));
        }
        Ok(Model { grammar, weights })
    }

    pub fn zeros(grammar: Arc<Grammar>) -> Self {
        let weights = vec![0.0; grammar.num_productions()];
        Model { grammar, weights }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn grammar_arc(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, id: ProdId) -> f64 {
        self.weights[id]
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        *self = Model::new(Arc::clone(&self.grammar), weights)?;
        Ok(())
    }

    /// `w · Ψ(tree)`.
    pub fn score(&self, tree: &Tree) -> Result<f64> {
        Ok(feature_vector(tree, &self.grammar)?.dot(&self.weights))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        write_grammar(&mut buf, &self.grammar, Some(&self.weights))?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let file = read_grammar(&text, &path.display().to_string())?;
        let weights = file.weights.ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            line: 0,
            message: "model file has no weight column".into(),
        })?;
        Model::new(Arc::new(file.grammar), weights)
    }
}

/// Convenience wrapper for [`Model::score`].
pub fn score(model: &Model, tree: &Tree) -> Result<f64> {
    model.score(tree)
}
