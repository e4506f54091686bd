//! Tab-separated grammar and model files.
//!
//! ```text
//! #start  S
//! #unk_threshold  2
//! B  S  NP  VP  [weight]
//! U  S+VP  V  [weight]
//! L  N  dog  [weight]
//! ```
//! Line order defines production ids. Model files carry the trailing
//! weight column on every production line; grammar files on none.

use std::io::{self, Write};

use super::{Grammar, GrammarBuilder, Production, DEFAULT_UNK_THRESHOLD};
use crate::error::{Error, Result};
use crate::treebank::Label;

#[derive(Debug, Clone)]
pub struct GrammarFile {
    pub grammar: Grammar,
    pub weights: Option<Vec<f64>>,
}

pub fn write_grammar<W: Write>(out: &mut W, grammar: &Grammar, weights: Option<&[f64]>) -> io::Result<()> {
    writeln!(out, "#start\t{}", grammar.start_label())?;
    writeln!(out, "#unk_threshold\t{}", grammar.unk_threshold())?;
    for (id, p) in grammar.productions().iter().enumerate() {
        match p {
            Production::Binary { lhs, left, right } => write!(
                out,
                "B\t{}\t{}\t{}",
                grammar.symbol(*lhs),
                grammar.symbol(*left),
                grammar.symbol(*right)
            )?,
            Production::Unary { lhs, child } => {
                write!(out, "U\t{}\t{}", grammar.symbol(*lhs), grammar.symbol(*child))?
            }
            Production::Lexical { lhs, terminal } => write!(out, "L\t{}\t{}", grammar.symbol(*lhs), terminal)?,
        }
        if let Some(w) = weights {
            write!(out, "\t{}", w[id])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_grammar(text: &str, name: &str) -> Result<GrammarFile> {
    let err = |line: usize, message: String| Error::Format {
        path: name.to_string(),
        line,
        message,
    };
    let mut start = None;
    let mut unk_threshold = DEFAULT_UNK_THRESHOLD;
    let mut builder = GrammarBuilder::new();
    let mut weights = Vec::new();
    let mut weighted = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "#start" if fields.len() == 2 => start = Some(Label::parse(fields[1])),
            "#unk_threshold" if fields.len() == 2 => {
                unk_threshold = fields[1]
                    .parse()
                    .map_err(|e| err(line_no, format!("bad unk threshold: {e}")))?
            }
            kind @ ("B" | "U" | "L") => {
                let arity = if kind == "B" { 4 } else { 3 };
                let has_weight = match fields.len() {
                    n if n == arity => false,
                    n if n == arity + 1 => true,
                    n => return Err(err(line_no, format!("expected {arity} or {} fields, found {n}", arity + 1))),
                };
                if *weighted.get_or_insert(has_weight) != has_weight {
                    return Err(err(line_no, "weight column present on some lines only".into()));
                }
                let before = builder.len();
                match kind {
                    "B" => builder.binary(
                        &Label::parse(fields[1]),
                        &Label::parse(fields[2]),
                        &Label::parse(fields[3]),
                    ),
                    "U" => builder.unary(&Label::parse(fields[1]), &Label::parse(fields[2])),
                    _ => builder.lexical(&Label::parse(fields[1]), fields[2]),
                };
                if builder.len() == before {
                    return Err(err(line_no, "duplicate production".into()));
                }
                if has_weight {
                    let w: f64 = fields[arity]
                        .parse()
                        .map_err(|e| err(line_no, format!("bad weight: {e}")))?;
                    if !w.is_finite() {
                        return Err(err(line_no, "weight is not finite".into()));
                    }
                    weights.push(w);
                }
            }
            _ if fields[0].starts_with('#') => {}
            other => return Err(err(line_no, format!("unknown line kind {other:?}"))),
        }
    }
    let start = start.ok_or_else(|| err(0, "missing #start header".into()))?;
    let grammar = builder.build(&start, unk_threshold)?;
    Ok(GrammarFile {
        grammar,
        weights: weighted.unwrap_or(false).then_some(weights),
    })
}
