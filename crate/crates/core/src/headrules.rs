//! Head-child selection and head propagation.
//!
//! Rule files are line oriented:
//!
//! ```text
//! # comment
//! strategy table|leftmost|rightmost
//! default left|right
//! <parent> left-to-right|right-to-left <label> <label> ...
//! ```
//!
//! Rule lines for the same parent are tried in file order. Within a line the
//! candidate labels are tried in priority order, each one scanning the
//! children in the line's direction. A line without labels picks the first
//! child in its direction. When nothing matches, the `default` end child is
//! taken.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::trees::{CNode, CTree, RawNode, RawTree};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("cannot read head rules: {0}")]
    Io(#[from] std::io::Error),
    #[error("head rules, line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexicalizeError {
    #[error("node {path} ({label}) has neither children nor a word")]
    EmptyNode { path: String, label: String },
    #[error("node {path} ({label}) points to word {position}, outside the sentence")]
    BadPosition {
        path: String,
        label: String,
        position: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Table,
    Leftmost,
    Rightmost,
}

/// Which end child to fall back to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Search {
    LeftToRight,
    RightToLeft,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeadRule {
    pub search: Search,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadRuleSet {
    pub strategy: Strategy,
    pub default_direction: Direction,
    pub rules: BTreeMap<String, Vec<HeadRule>>,
}

const COLLINS_ENGLISH: &str = include_str!("../data/headrules/collins-en.txt");

impl HeadRuleSet {
    pub fn leftmost() -> Self {
        HeadRuleSet {
            strategy: Strategy::Leftmost,
            default_direction: Direction::Left,
            rules: BTreeMap::new(),
        }
    }

    pub fn rightmost() -> Self {
        HeadRuleSet {
            strategy: Strategy::Rightmost,
            default_direction: Direction::Right,
            rules: BTreeMap::new(),
        }
    }

    /// The bundled Collins-style English table.
    pub fn collins_english() -> Self {
        Self::parse(COLLINS_ENGLISH).expect("bundled head rules parse")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RuleError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut set = HeadRuleSet {
            strategy: Strategy::Table,
            default_direction: Direction::Left,
            rules: BTreeMap::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let syntax = |message: String| RuleError::Syntax { line, message };
            let fields: Vec<&str> = strip_comment(raw).split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                ["strategy", value] => {
                    set.strategy = match *value {
                        "table" => Strategy::Table,
                        "leftmost" => Strategy::Leftmost,
                        "rightmost" => Strategy::Rightmost,
                        other => return Err(syntax(format!("unknown strategy {:?}", other))),
                    }
                }
                ["default", value] => {
                    set.default_direction = match *value {
                        "left" => Direction::Left,
                        "right" => Direction::Right,
                        other => return Err(syntax(format!("unknown default direction {:?}", other))),
                    }
                }
                [parent, dir, labels @ ..] => {
                    let search = match *dir {
                        "left-to-right" => Search::LeftToRight,
                        "right-to-left" => Search::RightToLeft,
                        other => return Err(syntax(format!("bad direction {:?}", other))),
                    };
                    set.rules.entry(parent.to_string()).or_default().push(HeadRule {
                        search,
                        labels: labels.iter().map(|s| s.to_string()).collect(),
                    });
                }
                [other] => return Err(syntax(format!("incomplete line {:?}", other))),
            }
        }
        Ok(set)
    }

    /// Canonical text form; parsing it gives back an equal rule set.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let strategy = match self.strategy {
            Strategy::Table => "table",
            Strategy::Leftmost => "leftmost",
            Strategy::Rightmost => "rightmost",
        };
        let default = match self.default_direction {
            Direction::Left => "left",
            Direction::Right => "right",
        };
        let _ = writeln!(out, "strategy {}\ndefault {}", strategy, default);
        for (parent, rules) in &self.rules {
            for r in rules {
                let dir = match r.search {
                    Search::LeftToRight => "left-to-right",
                    Search::RightToLeft => "right-to-left",
                };
                let _ = write!(out, "{} {}", parent, dir);
                for l in &r.labels {
                    let _ = write!(out, " {}", l);
                }
                out.push('\n');
            }
        }
        out
    }

    /// Index of the head-child among `children`. Total for non-empty
    /// inputs; returns 0 for an empty child list.
    pub fn find_head_child<S: AsRef<str>>(&self, parent: &str, children: &[S]) -> usize {
        let n = children.len();
        if n == 0 {
            return 0;
        }
        let endpoint = |d: Direction| match d {
            Direction::Left => 0,
            Direction::Right => n - 1,
        };
        match self.strategy {
            Strategy::Leftmost => return 0,
            Strategy::Rightmost => return n - 1,
            Strategy::Table => {}
        }
        let Some(rules) = self.rules.get(parent) else {
            return endpoint(self.default_direction);
        };
        for rule in rules {
            let order: Vec<usize> = match rule.search {
                Search::LeftToRight => (0..n).collect(),
                Search::RightToLeft => (0..n).rev().collect(),
            };
            if rule.labels.is_empty() {
                return order[0];
            }
            for cand in &rule.labels {
                if let Some(&i) = order.iter().find(|&&i| children[i].as_ref() == cand) {
                    return i;
                }
            }
        }
        endpoint(self.default_direction)
    }

    /// Annotates every node with its lexical head.
    pub fn lexicalize(&self, tree: &RawTree) -> Result<CTree, LexicalizeError> {
        let root = self.lexicalize_node(&tree.root, tree.sentence.len(), &mut Vec::new())?;
        Ok(CTree::new(tree.sentence.clone(), root))
    }

    fn lexicalize_node(
        &self,
        node: &RawNode,
        len: usize,
        path: &mut Vec<usize>,
    ) -> Result<CNode, LexicalizeError> {
        let path_str = |path: &[usize]| {
            let p: Vec<String> = path.iter().map(|i| i.to_string()).collect();
            format!("/{}", p.join("/"))
        };
        if node.children.is_empty() {
            return match node.word {
                Some(p) if p >= 1 && p <= len => Ok(CNode::preterminal(node.label.clone(), p)),
                Some(p) => Err(LexicalizeError::BadPosition {
                    path: path_str(path),
                    label: node.label.clone(),
                    position: p,
                }),
                None => Err(LexicalizeError::EmptyNode {
                    path: path_str(path),
                    label: node.label.clone(),
                }),
            };
        }
        let mut children = Vec::with_capacity(node.children.len());
        for (i, c) in node.children.iter().enumerate() {
            path.push(i);
            children.push(self.lexicalize_node(c, len, path)?);
            path.pop();
        }
        let labels: Vec<&str> = node.children.iter().map(|c| c.label.as_str()).collect();
        let head = children[self.find_head_child(&node.label, &labels)].head;
        Ok(CNode::proper(node.label.clone(), head, children))
    }
}

// Only a `#` at the start of a token opens a comment, so labels such as `$#`
// survive.
fn strip_comment(raw: &str) -> &str {
    let mut cut = raw.len();
    let mut prev_space = true;
    for (i, ch) in raw.char_indices() {
        if ch == '#' && prev_space {
            cut = i;
            break;
        }
        prev_space = ch.is_whitespace();
    }
    raw[..cut].trim()
}
