//! Constituency parsing with weighted CFGs trained as a slack-rescaling
//! structural SVM.
//!
//! The pipeline is: read and clean bracketed trees ([`treebank`]), binarize
//! them and induce a grammar ([`grammar`]), decode with CKY ([`chart`]),
//! train the weights with a cutting-plane solver ([`ssvm`]) whose separation
//! oracle is an exact F1 loss-augmented inference ([`lossdp`]), and score the
//! result ([`metrics`]).
//!
//! Loss-augmented inference can count true and false positives either on the
//! binarized trees or on the trees they stand for once binarization is
//! reversed; the second mode is what the evaluation actually measures.

pub mod chart;
pub mod error;
pub mod grammar;
pub mod lossdp;
pub mod metrics;
pub mod oracle;
pub mod ssvm;
pub mod synth;
pub mod treebank;

pub use error::{Error, Result};
