use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Label, Tree};
use crate::error::{Error, Result};

/// Parses one bracketed tree, e.g. `(S (NP (D the) (N dog)) (VP (V barked)))`.
///
/// An unlabeled outermost bracket around a single tree (the PTB `( (S ...) )`
/// convention) is dropped. Error offsets are 1-based character positions.
pub fn parse_bracketed(text: &str) -> Result<Tree> {
    let chars: Vec<char> = text.chars().collect();
    let mut parser = Parser { chars: &chars, pos: 0 };
    parser.skip_ws();
    if parser.at_end() {
        return Err(parser.error("empty input"));
    }
    let tree = parser.node(true)?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.error("trailing input after tree"));
    }
    Ok(tree)
}

struct Parser<'a> {
    chars: &'a [char],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            offset: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> String {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| !c.is_whitespace() && c != '(' && c != ')')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn node(&mut self, top: bool) -> Result<Tree> {
        if self.peek() != Some('(') {
            return Err(self.error("expected '('"));
        }
        self.pos += 1;
        self.skip_ws();
        let label = match self.peek() {
            None => return Err(self.error("unbalanced parentheses")),
            Some(')') => return Err(self.error("empty node")),
            Some('(') => None,
            Some(_) => Some(self.atom()),
        };
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.error("unbalanced parentheses")),
                Some(')') => break,
                Some('(') => children.push(self.node(false)?),
                Some(_) => children.push(Tree::Leaf(self.atom())),
            }
        }
        if children.is_empty() {
            return Err(self.error("internal node with zero children"));
        }
        let close = self.pos;
        self.pos += 1;
        match label {
            Some(label) => Ok(Tree::Node {
                label: Label::parse(&label),
                children,
            }),
            None if top && children.len() == 1 && !children[0].is_leaf() => {
                Ok(children.pop().expect("one child"))
            }
            None => Err(Error::Parse {
                offset: close + 1,
                message: "node without label".into(),
            }),
        }
    }
}

/// Single-line bracketed form. Literal parentheses in tokens are written as
/// `-LRB-` / `-RRB-`.
pub fn write_bracketed(tree: &Tree) -> String {
    let mut out = String::new();
    write_into(tree, &mut out);
    out
}

fn write_into(tree: &Tree, out: &mut String) {
    match tree {
        Tree::Leaf(token) => {
            if token.contains(['(', ')']) {
                out.push_str(&token.replace('(', "-LRB-").replace(')', "-RRB-"));
            } else {
                out.push_str(token);
            }
        }
        Tree::Node { label, children } => {
            out.push('(');
            out.push_str(&label.to_string());
            for c in children {
                out.push(' ');
                write_into(c, out);
            }
            out.push(')');
        }
    }
}

/// Streams trees from bracketed text. A tree may span several lines; lines
/// are joined until the brackets balance.
pub struct TreebankReader<R> {
    input: R,
    name: String,
    line_no: usize,
}

impl<R: BufRead> TreebankReader<R> {
    pub fn new(input: R, name: impl Into<String>) -> Self {
        TreebankReader {
            input,
            name: name.into(),
            line_no: 0,
        }
    }

    fn format_error(&self, line: usize, message: String) -> Error {
        Error::Format {
            path: self.name.clone(),
            line,
            message,
        }
    }
}

impl<R: BufRead> Iterator for TreebankReader<R> {
    type Item = Result<Tree>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = String::new();
        let mut depth: i64 = 0;
        let mut first_line = 0;
        loop {
            let mut line = String::new();
            match self.input.read_line(&mut line) {
                Err(e) => return Some(Err(e.into())),
                Ok(0) => {
                    if buf.trim().is_empty() {
                        return None;
                    }
                    let message = match parse_bracketed(buf.trim()) {
                        Err(e) => e.to_string(),
                        Ok(_) => "unbalanced parentheses at end of input".into(),
                    };
                    return Some(Err(self.format_error(first_line, message)));
                }
                Ok(_) => {}
            }
            self.line_no += 1;
            if buf.trim().is_empty() {
                if line.trim().is_empty() {
                    continue;
                }
                first_line = self.line_no;
            }
            for ch in line.chars() {
                match ch {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
            }
            buf.push_str(line.trim_end_matches(['\n', '\r']));
            buf.push(' ');
            if depth <= 0 {
                return Some(
                    parse_bracketed(buf.trim()).map_err(|e| self.format_error(first_line, e.to_string())),
                );
            }
        }
    }
}

pub fn read_treebank(path: impl AsRef<Path>) -> Result<Vec<Tree>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    TreebankReader::new(BufReader::new(file), path.display().to_string()).collect()
}

pub fn write_treebank<'a>(path: impl AsRef<Path>, trees: impl IntoIterator<Item = &'a Tree>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for tree in trees {
        writeln!(out, "{}", write_bracketed(tree))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_small_tree() {
        let tree = parse_bracketed("(X (X a) (X a))").unwrap();
        assert_eq!(tree.label().unwrap().to_string(), "X");
        assert_eq!(tree.children().len(), 2);
        assert!(tree.children().iter().all(Tree::is_preterminal));
        assert_eq!(tree.num_tokens(), 2);
    }

    #[test]
    fn reads_sentence() {
        let tree = parse_bracketed("(S (NP (D the) (N dog)) (VP (V barked)))").unwrap();
        assert_eq!(tree.tokens(), vec!["the", "dog", "barked"]);
        assert_eq!(tree.label().unwrap().base(), "S");
    }

    #[test]
    fn truncated_input_reports_offset() {
        match parse_bracketed("(S (NP") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        for bad in ["", "()", "(S)", "(S (NP a)) extra", "S a", "(S (NP a)))", "( (A a) (B b))"] {
            assert!(parse_bracketed(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn unlabeled_ptb_root_is_dropped() {
        let tree = parse_bracketed("( (S (NP (N it)) (VP (V works))) )").unwrap();
        assert_eq!(tree.label().unwrap().base(), "S");
    }

    #[test]
    fn writes_single_line() {
        let text = "(S (NP (D the) (N dog)) (VP (V barked)))";
        assert_eq!(write_bracketed(&parse_bracketed(text).unwrap()), text);
        assert_eq!(write_bracketed(&parse_bracketed("(X a)").unwrap()), "(X a)");
        let meta = "(A^? (B^A b) (A^?|C-D (C^A c) (D^A d)))";
        assert_eq!(write_bracketed(&parse_bracketed(meta).unwrap()), meta);
    }

    #[test]
    fn parens_in_tokens_are_escaped() {
        let tree = Tree::node("X", vec![Tree::preterminal("-LRB-", "("), Tree::preterminal("-RRB-", ")")]);
        assert_eq!(write_bracketed(&tree), "(X (-LRB- -LRB-) (-RRB- -RRB-))");
    }

    #[test]
    fn reader_joins_multiline_trees() {
        let text = "(S (NP (D the)\n       (N dog))\n   (VP (V barked)))\n\n(X (X a) (X a))\n";
        let trees: Vec<_> = TreebankReader::new(text.as_bytes(), "mem").collect::<Result<_>>().unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(trees[0].num_tokens(), 3);
    }

    #[test]
    fn reader_reports_line_of_bad_tree() {
        let text = "(X a)\n(X (Y b)\n";
        let results: Vec<_> = TreebankReader::new(text.as_bytes(), "mem").collect();
        assert!(results[0].is_ok());
        match &results[1] {
            Err(Error::Format { line, .. }) => assert_eq!(*line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_tree() -> impl Strategy<Value = Tree> {
        let label = prop::sample::select(vec!["S", "NP", "VP", "A^S", "A|B-C", "S+VP", "-LRB-", "PRP$"]);
        let token = prop::sample::select(vec!["a", "the", "dog", "(", "3.5", "n't"]);
        let leaf = (label.clone(), token).prop_map(|(l, t)| Tree::preterminal(l, t));
        leaf.prop_recursive(4, 32, 4, move |inner| {
            (label.clone(), prop::collection::vec(inner, 1..4)).prop_map(|(l, cs)| Tree::node(l, cs))
        })
    }

    fn unescape(tree: &Tree) -> Tree {
        match tree {
            Tree::Leaf(t) => Tree::Leaf(t.replace('(', "-LRB-").replace(')', "-RRB-")),
            Tree::Node { label, children } => Tree::Node {
                label: label.clone(),
                children: children.iter().map(unescape).collect(),
            },
        }
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(tree in arb_tree()) {
            let back = parse_bracketed(&write_bracketed(&tree)).unwrap();
            prop_assert_eq!(back, unescape(&tree));
        }
    }
}
