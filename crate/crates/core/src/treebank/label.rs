use std::fmt;

/// Parent sentinel used above the root when parent annotation is enabled.
pub const ROOT_PARENT: &str = "?";

/// Base label of the node inserted above inconsistent roots.
pub const WRAPPER_BASE: &str = "TOP";

/// Node label with the metadata introduced by binarization.
///
/// Plain treebank labels only use `base`. Binarization adds parent
/// annotation (`parents`, nearest ancestor first) to every original node and
/// creates artificial nodes, which carry the label of the node they factor
/// plus the hyphen-joined labels of the children they span.
///
/// Serialized as `base^P1^P2|C1-C2`; the `|` part is present exactly when the
/// node is artificial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    base: String,
    parents: Vec<String>,
    artificial: bool,
    siblings: String,
}

impl Label {
    pub fn plain(base: impl Into<String>) -> Self {
        Label {
            base: base.into(),
            parents: Vec::new(),
            artificial: false,
            siblings: String::new(),
        }
    }

    pub fn annotated(base: impl Into<String>, parents: Vec<String>) -> Self {
        Label {
            base: base.into(),
            parents,
            artificial: false,
            siblings: String::new(),
        }
    }

    pub fn artificial(base: impl Into<String>, parents: Vec<String>, siblings: &[&str]) -> Self {
        Label {
            base: base.into(),
            parents,
            artificial: true,
            siblings: siblings.join("-"),
        }
    }

    /// Label of the node wrapped around roots when a treebank has several
    /// root labels. It is artificial, so it never counts against the
    /// original trees and debinarization removes it.
    pub fn wrapper() -> Self {
        Label::artificial(WRAPPER_BASE, Vec::new(), &[])
    }

    /// Reads the serialized form back. Strings without `^` or `|` (and
    /// degenerate ones such as a lone `|`) become plain labels.
    pub fn parse(s: &str) -> Self {
        let (head, siblings) = match s.find('|') {
            Some(pos) => (&s[..pos], Some(&s[pos + 1..])),
            None => (s, None),
        };
        let mut parts = head.split('^');
        let base = parts.next().unwrap_or_default();
        if base.is_empty() {
            return Label::plain(s);
        }
        let parents: Vec<String> = parts.map(str::to_string).collect();
        Label {
            base: base.to_string(),
            parents,
            artificial: siblings.is_some(),
            siblings: siblings.unwrap_or_default().to_string(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn is_artificial(&self) -> bool {
        self.artificial
    }

    pub fn is_wrapper(&self) -> bool {
        self.artificial && self.base == WRAPPER_BASE && self.siblings.is_empty()
    }

    /// Raw hyphen-joined sibling context of an artificial label.
    pub fn sibling_context(&self) -> &str {
        &self.siblings
    }

    /// Splits the sibling context into labels. Labels of the form `-XYZ-`
    /// (PTB bracket tags) are recognised so that their hyphens are not taken
    /// as separators.
    pub fn siblings(&self) -> Vec<String> {
        split_siblings(&self.siblings)
    }

    /// The label with all binarization metadata removed.
    pub fn stripped(&self) -> Label {
        Label::plain(self.base.clone())
    }
}

fn split_siblings(s: &str) -> Vec<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let end = if bytes[pos] == b'-' {
            // -LRB- style: runs to the next hyphen inclusive
            match s[pos + 1..].find('-') {
                Some(off) => pos + 1 + off + 1,
                None => bytes.len(),
            }
        } else {
            match s[pos..].find('-') {
                Some(off) => pos + off,
                None => bytes.len(),
            }
        };
        out.push(s[pos..end].to_string());
        pos = end;
        if pos < bytes.len() && bytes[pos] == b'-' {
            pos += 1;
        }
    }
    out
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        for p in &self.parents {
            write!(f, "^{p}")?;
        }
        if self.artificial {
            write!(f, "|{}", self.siblings)?;
        }
        Ok(())
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_roundtrip() {
        let labels = [
            Label::plain("NP"),
            Label::annotated("NP", vec!["S".into()]),
            Label::annotated("A", vec![ROOT_PARENT.into()]),
            Label::artificial("A", vec![ROOT_PARENT.into()], &["C", "D"]),
            Label::artificial("VP", vec![], &["-LRB-", "NP", "-RRB-"]),
            Label::artificial("T", vec![], &[]),
            Label::wrapper(),
        ];
        for l in labels {
            assert_eq!(Label::parse(&l.to_string()), l, "{l}");
        }
    }

    #[test]
    fn figure_style_names() {
        let l = Label::artificial("A", vec!["?".into()], &["C", "D"]);
        assert_eq!(l.to_string(), "A^?|C-D");
        assert_eq!(l.siblings(), vec!["C", "D"]);
        assert!(Label::parse("T|A-A").is_artificial());
        assert_eq!(Label::parse("T|A-A").base(), "T");
    }

    #[test]
    fn bracket_tags_survive_sibling_split() {
        let l = Label::artificial("VP", vec![], &["NP", "-LRB-", "-RRB-", "PP"]);
        assert_eq!(l.siblings(), vec!["NP", "-LRB-", "-RRB-", "PP"]);
    }

    #[test]
    fn degenerate_strings_are_plain() {
        assert_eq!(Label::parse("|"), Label::plain("|"));
        assert_eq!(Label::parse("-LRB-"), Label::plain("-LRB-"));
        assert!(!Label::parse("S+VP").is_artificial());
    }
}
