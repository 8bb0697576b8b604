//! Treebank formats.
//!
//! * **bracketed**: one tree per line, `(S (NP (DT The) (NN public)) ...)`.
//!   An outer unlabeled wrapper `( ... )` is removed. Continuous trees only.
//! * **export**: NEGRA export format 3 or 4, for discontinuous trees. A root
//!   node (by default `VROOT`) is put above the units attached to node 0.
//! * **conll**: CoNLL-X, ten tab-separated columns, one token per line and a
//!   blank line after each sentence. DEPREL holds the encoded label; the
//!   root word's DEPREL is the tree's root label.
//! * **json**: one [`CTree`] per line in its serde form (nodes with `label`,
//!   `head`, `yield` and `children`).
//!
//! Readers accept CRLF line endings; writers emit LF.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{EncodedArc, EncodedDTree};
use crate::trees::{CTree, RawNode, RawTree, Sentence, Token};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("tree {index}: discontinuous tree; write it in the export format")]
    Discontinuous { index: usize },
    #[error("tree {index}: {message}")]
    Invalid { index: usize, message: String },
}

fn syntax(line: usize, message: impl Into<String>) -> IoError {
    IoError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Bracketed,
    Export,
    Conll,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Bracketed => "bracketed",
            Format::Export => "export",
            Format::Conll => "conll",
            Format::Json => "json",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bracketed" | "ptb" => Ok(Format::Bracketed),
            "export" | "negra" => Ok(Format::Export),
            "conll" => Ok(Format::Conll),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {:?} (bracketed, export, conll, json)", other)),
        }
    }
}

// ---------------------------------------------------------------- bracketed

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok::Atom(&line[s..i]));
            }
            if ch == '(' {
                out.push(Tok::Open);
            } else if ch == ')' {
                out.push(Tok::Close);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok::Atom(&line[s..]));
    }
    out
}

struct BracketParser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
    line: usize,
    words: Vec<Token>,
}

impl<'a> BracketParser<'a> {
    fn next(&mut self) -> Option<&Tok<'a>> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn err(&self, message: &str) -> IoError {
        syntax(self.line, message)
    }

    /// Parses a node after its opening parenthesis. `label` is `None` for an
    /// unlabeled wrapper.
    fn node(&mut self) -> Result<RawNode, IoError> {
        let label = match self.toks.get(self.pos) {
            Some(Tok::Atom(a)) => {
                self.pos += 1;
                Some(a.to_string())
            }
            Some(Tok::Open) => None,
            Some(Tok::Close) => return Err(self.err("empty node")),
            None => return Err(self.err("unbalanced parentheses: missing ')'")),
        };
        let mut children = Vec::new();
        loop {
            match self.next() {
                Some(Tok::Close) => break,
                Some(Tok::Open) => children.push(self.node()?),
                Some(Tok::Atom(w)) => {
                    let w = w.to_string();
                    let Some(label) = label.clone() else {
                        return Err(self.err("word without a label"));
                    };
                    if !children.is_empty() {
                        return Err(self.err(&format!("word {:?} mixed with constituents", w)));
                    }
                    if self.next() != Some(&Tok::Close) {
                        return Err(self.err(&format!("expected ')' after word {:?}", w)));
                    }
                    self.words.push(Token::new(w, label.clone()));
                    return Ok(RawNode::preterminal(label, self.words.len()));
                }
                None => return Err(self.err("unbalanced parentheses: missing ')'")),
            }
        }
        match label {
            Some(l) if children.is_empty() => Err(self.err(&format!("node {:?} has no children", l))),
            Some(l) => Ok(RawNode::inner(l, children)),
            None if children.len() == 1 => Ok(children.pop().unwrap()),
            None => Err(self.err("empty label")),
        }
    }
}

/// Parses one bracketed tree; `line` is used in error messages.
pub fn parse_bracketed(text: &str, line: usize) -> Result<RawTree, IoError> {
    let mut p = BracketParser {
        toks: tokenize(text),
        pos: 0,
        line,
        words: Vec::new(),
    };
    if p.next() != Some(&Tok::Open) {
        return Err(p.err("expected '('"));
    }
    let root = p.node()?;
    if p.pos < p.toks.len() {
        return Err(p.err("unbalanced parentheses: text after the tree"));
    }
    Ok(RawTree {
        sentence: Sentence::new(p.words),
        root,
    })
}

pub fn read_bracketed(text: &str) -> Result<Vec<RawTree>, IoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_bracketed(l, i + 1))
        .collect()
}

fn is_continuous_raw(node: &RawNode) -> bool {
    let ps = node.positions();
    let ok = match (ps.first(), ps.last()) {
        (Some(a), Some(b)) => b - a + 1 == ps.len(),
        _ => true,
    };
    ok && node.children.iter().all(is_continuous_raw)
}

fn sorted_children(node: &RawNode) -> Vec<&RawNode> {
    let mut kids: Vec<(usize, &RawNode)> = node
        .children
        .iter()
        .map(|c| (c.positions().first().copied().unwrap_or(0), c))
        .collect();
    kids.sort_by_key(|(f, _)| *f);
    kids.into_iter().map(|(_, c)| c).collect()
}

fn write_node(out: &mut String, node: &RawNode, sentence: &Sentence) {
    out.push('(');
    out.push_str(&node.label);
    if let Some(w) = node.word {
        out.push(' ');
        out.push_str(&sentence.token(w).form);
    }
    for c in sorted_children(node) {
        out.push(' ');
        write_node(out, c, sentence);
    }
    out.push(')');
}

pub fn bracketed_string(tree: &RawTree) -> Option<String> {
    if !is_continuous_raw(&tree.root) {
        return None;
    }
    let mut out = String::new();
    write_node(&mut out, &tree.root, &tree.sentence);
    Some(out)
}

pub fn write_bracketed(trees: &[RawTree]) -> Result<String, IoError> {
    let mut out = String::new();
    for (index, t) in trees.iter().enumerate() {
        out.push_str(&bracketed_string(t).ok_or(IoError::Discontinuous { index })?);
        out.push('\n');
    }
    Ok(out)
}

// ---------------------------------------------------------------- export

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportOptions {
    /// Label of the node put above everything attached to node 0. With
    /// `None` a sentence must have exactly one such unit.
    pub root_label: Option<String>,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            root_label: Some("VROOT".to_string()),
        }
    }
}

fn dash(s: &str) -> Option<String> {
    (s != "--").then(|| s.to_string())
}

enum Unit {
    Word(usize),
    Node(usize),
}

struct Block {
    id: String,
    first_line: usize,
    tokens: Vec<Token>,
    token_parents: Vec<(usize, usize)>, // (parent, line)
    nodes: BTreeMap<usize, (String, usize, usize)>, // id -> (label, parent, line)
}

fn export_tree(block: Block, opts: &ExportOptions) -> Result<RawTree, IoError> {
    let fail = |line: usize, msg: String| syntax(line, format!("sentence {}: {}", block.id, msg));
    let mut kids: BTreeMap<usize, Vec<Unit>> = BTreeMap::new();
    for (i, &(parent, line)) in block.token_parents.iter().enumerate() {
        if parent != 0 && !block.nodes.contains_key(&parent) {
            return Err(fail(line, format!("parent {} is not declared", parent)));
        }
        kids.entry(parent).or_default().push(Unit::Word(i + 1));
    }
    for (&id, &(_, parent, line)) in &block.nodes {
        if parent != 0 && !block.nodes.contains_key(&parent) {
            return Err(fail(line, format!("parent {} is not declared", parent)));
        }
        kids.entry(parent).or_default().push(Unit::Node(id));
    }
    fn build(
        unit: &Unit,
        block: &Block,
        kids: &BTreeMap<usize, Vec<Unit>>,
        seen: &mut BTreeSet<usize>,
    ) -> Result<RawNode, String> {
        match *unit {
            Unit::Word(i) => Ok(RawNode::preterminal(block.tokens[i - 1].pos.clone(), i)),
            Unit::Node(id) => {
                if !seen.insert(id) {
                    return Err(format!("node {} is part of a cycle", id));
                }
                let Some(units) = kids.get(&id) else {
                    return Err(format!("node {} has no children", id));
                };
                let mut children = units
                    .iter()
                    .map(|u| build(u, block, kids, seen))
                    .collect::<Result<Vec<_>, _>>()?;
                children.sort_by_key(|c| c.positions().first().copied().unwrap_or(0));
                Ok(RawNode::inner(block.nodes[&id].0.clone(), children))
            }
        }
    }
    let mut seen = BTreeSet::new();
    let top = kids.get(&0).map(Vec::as_slice).unwrap_or(&[]);
    let mut units = top
        .iter()
        .map(|u| build(u, &block, &kids, &mut seen))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|m| fail(block.first_line, m))?;
    if seen.len() != block.nodes.len() {
        let lost = block.nodes.keys().find(|k| !seen.contains(k)).unwrap();
        return Err(fail(block.nodes[lost].2, format!("node {} is not reachable from the root", lost)));
    }
    units.sort_by_key(|c| c.positions().first().copied().unwrap_or(0));
    let root = match &opts.root_label {
        Some(label) => RawNode::inner(label.clone(), units),
        None if units.len() == 1 => units.pop().unwrap(),
        None => return Err(fail(block.first_line, format!("{} units attached to node 0", units.len()))),
    };
    Ok(RawTree {
        sentence: Sentence::new(block.tokens),
        root,
    })
}

/// Reads NEGRA export format 3 or 4. The version comes from a `#FORMAT`
/// line when present and otherwise from the number of columns (5 for format
/// 3, 6 for format 4, plus pairs of secondary-edge columns).
pub fn read_export(text: &str, opts: &ExportOptions) -> Result<Vec<RawTree>, IoError> {
    let mut out = Vec::new();
    let mut version: Option<u8> = None;
    let mut block: Option<Block> = None;
    let mut in_table = false;
    for (i, raw_line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw_line.trim_end();
        if line.is_empty() || line.starts_with("%%") {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let head = fields[0];
        if in_table {
            in_table = head != "#EOT";
            continue;
        }
        match head {
            "#FORMAT" => {
                version = match fields.get(1) {
                    Some(&"3") => Some(3),
                    Some(&"4") => Some(4),
                    _ => return Err(syntax(lineno, "unsupported #FORMAT")),
                };
                continue;
            }
            "#BOT" => {
                in_table = true;
                continue;
            }
            "#BOS" => {
                if block.is_some() {
                    return Err(syntax(lineno, "#BOS inside a sentence"));
                }
                block = Some(Block {
                    id: fields.get(1).unwrap_or(&"?").to_string(),
                    first_line: lineno,
                    tokens: Vec::new(),
                    token_parents: Vec::new(),
                    nodes: BTreeMap::new(),
                });
                continue;
            }
            "#EOS" => {
                let b = block.take().ok_or_else(|| syntax(lineno, "#EOS without #BOS"))?;
                out.push(export_tree(b, opts)?);
                continue;
            }
            _ => {}
        }
        let Some(b) = block.as_mut() else {
            return Err(syntax(lineno, "line outside a #BOS/#EOS block"));
        };
        let v = version.unwrap_or(if fields.len().is_multiple_of(2) { 4 } else { 3 });
        let need = if v == 3 { 5 } else { 6 };
        if fields.len() < need {
            return Err(syntax(lineno, format!("sentence {}: expected {} columns", b.id, need)));
        }
        let (lemma, tag, morph, parent) = if v == 3 {
            (None, fields[1], fields[2], fields[4])
        } else {
            (dash(fields[1]), fields[2], fields[3], fields[5])
        };
        let parent: usize = parent
            .parse()
            .map_err(|_| syntax(lineno, format!("sentence {}: bad parent {:?}", b.id, parent)))?;
        if parent != 0 && parent < 500 {
            return Err(syntax(lineno, format!("sentence {}: bad parent {}", b.id, parent)));
        }
        if let Some(id) = head.strip_prefix('#') {
            let id: usize = id
                .parse()
                .ok()
                .filter(|&n| n >= 500)
                .ok_or_else(|| syntax(lineno, format!("sentence {}: bad node id {:?}", b.id, head)))?;
            if tag.is_empty() || tag == "--" {
                return Err(syntax(lineno, format!("sentence {}: node {} has no label", b.id, id)));
            }
            if b.nodes.insert(id, (tag.to_string(), parent, lineno)).is_some() {
                return Err(syntax(lineno, format!("sentence {}: duplicate node id {}", b.id, id)));
            }
        } else {
            if !b.nodes.is_empty() {
                return Err(syntax(lineno, format!("sentence {}: word after node lines", b.id)));
            }
            let mut t = Token::new(head, tag);
            t.lemma = lemma;
            t.morph = dash(morph);
            b.tokens.push(t);
            b.token_parents.push((parent, lineno));
        }
    }
    if block.is_some() {
        return Err(syntax(text.lines().count(), "missing #EOS"));
    }
    Ok(out)
}

struct Slot {
    label: String,
    parent: Option<usize>,
    id: usize,
}

fn collect_slots(node: &RawNode, parent: Option<usize>, slots: &mut Vec<Slot>, word_parent: &mut [Option<usize>], next_id: &mut usize) {
    if let Some(w) = node.word {
        word_parent[w - 1] = parent;
        return;
    }
    let me = slots.len();
    slots.push(Slot {
        label: node.label.clone(),
        parent,
        id: 0,
    });
    for c in sorted_children(node) {
        collect_slots(c, Some(me), slots, word_parent, next_id);
    }
    slots[me].id = *next_id;
    *next_id += 1;
}

/// Writes export format 4. Nodes are numbered from 500 in post-order. A
/// root labeled with the configured root label is left implicit.
pub fn write_export(trees: &[RawTree], opts: &ExportOptions) -> String {
    let mut out = String::from("#FORMAT 4\n");
    for (index, tree) in trees.iter().enumerate() {
        let mut word_parent = vec![None; tree.sentence.len()];
        let mut slots = Vec::new();
        let mut next_id = 500;
        let implicit = tree.root.word.is_none() && opts.root_label.as_deref() == Some(tree.root.label.as_str());
        if implicit {
            for c in sorted_children(&tree.root) {
                collect_slots(c, None, &mut slots, &mut word_parent, &mut next_id);
            }
        } else {
            collect_slots(&tree.root, None, &mut slots, &mut word_parent, &mut next_id);
        }
        let resolve = |p: Option<usize>| p.map_or(0, |s| slots[s].id);
        let _ = writeln!(out, "#BOS {}", index + 1);
        for (i, t) in tree.sentence.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t--\t{}",
                t.form,
                t.lemma.as_deref().unwrap_or("--"),
                t.pos,
                t.morph.as_deref().unwrap_or("--"),
                resolve(word_parent[i])
            );
        }
        let mut order: Vec<&Slot> = slots.iter().collect();
        order.sort_by_key(|s| s.id);
        for s in order {
            let _ = writeln!(out, "#{}\t--\t{}\t--\t--\t{}", s.id, s.label, resolve(s.parent));
        }
        let _ = writeln!(out, "#EOS {}", index + 1);
    }
    out
}

// ---------------------------------------------------------------- conll

/// What to do with a sentence that has zero or several root words.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootPolicy {
    /// Keep the first root and attach the other roots to it; with no root,
    /// make the first word the root.
    #[default]
    Repair,
    Reject,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConllCorpus {
    pub trees: Vec<EncodedDTree>,
    /// Sentences whose roots had to be repaired.
    pub root_repairs: usize,
}

fn underscore(s: &str) -> Option<String> {
    (s != "_").then(|| s.to_string())
}

pub fn read_conll(text: &str, policy: RootPolicy) -> Result<ConllCorpus, IoError> {
    let mut corpus = ConllCorpus::default();
    let mut rows: Vec<(usize, Token, String, String)> = Vec::new(); // line, token, head, deprel
    let flush = |rows: &mut Vec<(usize, Token, String, String)>, corpus: &mut ConllCorpus| -> Result<(), IoError> {
        if rows.is_empty() {
            return Ok(());
        }
        let n = rows.len();
        let mut heads = Vec::with_capacity(n);
        for (line, _, head, _) in rows.iter() {
            let h: usize = head
                .parse()
                .map_err(|_| syntax(*line, format!("HEAD {:?} is not a number", head)))?;
            if h > n {
                return Err(syntax(*line, format!("HEAD {} is outside the sentence", h)));
            }
            heads.push(h);
        }
        let roots: Vec<usize> = (1..=n).filter(|&i| heads[i - 1] == 0).collect();
        if roots.len() != 1 {
            if policy == RootPolicy::Reject {
                return Err(syntax(rows[0].0, format!("sentence has {} root words", roots.len())));
            }
            corpus.root_repairs += 1;
            match roots.first() {
                Some(&r) => {
                    for &o in &roots[1..] {
                        heads[o - 1] = r;
                    }
                }
                None => heads[0] = 0,
            }
        }
        let root = (1..=n).find(|&i| heads[i - 1] == 0).unwrap();
        let mut arcs = Vec::with_capacity(n - 1);
        let mut root_label = String::new();
        let mut tokens = Vec::with_capacity(n);
        for (i, (_, tok, _, rel)) in rows.drain(..).enumerate() {
            if i + 1 == root {
                root_label = rel;
            } else {
                arcs.push(EncodedArc {
                    head: heads[i],
                    modifier: i + 1,
                    label: rel,
                });
            }
            tokens.push(tok);
        }
        corpus.trees.push(EncodedDTree::new(Sentence::new(tokens), root, root_label, arcs));
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            flush(&mut rows, &mut corpus)?;
            continue;
        }
        if line.starts_with('#') && rows.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(syntax(lineno, format!("expected 10 columns, found {}", cols.len())));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| syntax(lineno, format!("ID {:?} is not a number", cols[0])))?;
        if id != rows.len() + 1 {
            return Err(syntax(lineno, format!("expected ID {}, found {}", rows.len() + 1, id)));
        }
        let mut tok = Token::new(cols[1], cols[4]);
        tok.lemma = underscore(cols[2]);
        tok.morph = underscore(cols[5]);
        rows.push((lineno, tok, cols[6].to_string(), cols[7].to_string()));
    }
    flush(&mut rows, &mut corpus)?;
    Ok(corpus)
}

pub fn write_conll(trees: &[EncodedDTree]) -> String {
    let mut out = String::new();
    for t in trees {
        let (heads, labels) = (t.heads(), t.labels());
        for (i, tok) in t.sentence.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t_",
                i + 1,
                tok.form,
                tok.lemma.as_deref().unwrap_or("_"),
                tok.pos,
                tok.pos,
                tok.morph.as_deref().unwrap_or("_"),
                heads[i],
                labels[i]
            );
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- json

pub fn read_json(text: &str) -> Result<Vec<CTree>, IoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| syntax(i + 1, e.to_string())))
        .collect()
}

pub fn write_json(trees: &[CTree]) -> String {
    let mut out = String::new();
    for t in trees {
        out.push_str(&serde_json::to_string(t).expect("trees serialize"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::encode_direct;
    use crate::fixtures;
    use crate::headrules::HeadRuleSet;

    const ENGLISH: &str =
        "(S (NP (DT The) (NN public)) (VP (VBZ is) (ADVP (RB still)) (ADJP (JJ cautious))) (. .))";

    const GERMAN: &str = "#BOS 1
Es\tPPER\t--\tSB\t502
kam\tVVFIN\t--\tHD\t501
nichts\tPIAT\t--\tNK\t500
Interessantes\tNN\t--\tNK\t500
.\t$.\t--\t--\t0
#500\tNP\t--\tNK\t502
#502\tNP\t--\tSB\t501
#501\tS\t--\t--\t0
#EOS 1
";

    #[test]
    fn reads_english_example() {
        let t = read_bracketed(ENGLISH).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0], fixtures::english().to_raw());
        assert_eq!(write_bracketed(&t).unwrap(), format!("{}\n", ENGLISH));
        let crlf = read_bracketed(&format!("{}\r\n\r\n{}\r\n", ENGLISH, ENGLISH)).unwrap();
        assert_eq!(crlf.len(), 2);
    }

    #[test]
    fn wrapper_and_errors() {
        let t = read_bracketed("((X (T w)))").unwrap();
        assert_eq!(t[0].root, RawNode::inner("X", vec![RawNode::preterminal("T", 1)]));
        assert_eq!(read_bracketed("( (T w) )").unwrap()[0].root, RawNode::preterminal("T", 1));
        for bad in ["(S (NP", "(S (NP (DT a)))) ", "(S ()", "((A (B b)) (C c))", "(S)", "x", "(S (A a b))"] {
            let e = read_bracketed(bad).unwrap_err();
            assert!(matches!(e, IoError::Syntax { line: 1, .. }), "{}: {}", bad, e);
        }
        let e = read_bracketed("(A (B b))\n(S (NP").unwrap_err();
        assert!(e.to_string().starts_with("line 2:"));
    }

    #[test]
    fn german_export_example() {
        let t = read_export(GERMAN, &ExportOptions::default()).unwrap();
        let rules = HeadRuleSet::parse("NP right-to-left NN NP\nS left-to-right VVFIN\nVROOT left-to-right S").unwrap();
        assert_eq!(rules.lexicalize(&t[0]).unwrap(), fixtures::german());
        let np = t[0].root.children[0].children[0].positions();
        assert_eq!(np, [1, 3, 4]);
        assert!(matches!(write_bracketed(&t), Err(IoError::Discontinuous { index: 0 })));
        let again = read_export(&write_export(&t, &ExportOptions::default()), &ExportOptions::default()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn export_format_three_and_errors() {
        let v3 = "#BOS 7\nw\tT\t--\t--\t0\n#EOS 7\n";
        let t = read_export(v3, &ExportOptions::default()).unwrap();
        assert_eq!(t[0].root, RawNode::inner("VROOT", vec![RawNode::preterminal("T", 1)]));
        let none = ExportOptions { root_label: None };
        assert_eq!(read_export(v3, &none).unwrap()[0].root, RawNode::preterminal("T", 1));
        let dangling = "#BOS 9\nw\tT\t--\t--\t507\n#EOS 9\n";
        let e = read_export(dangling, &ExportOptions::default()).unwrap_err().to_string();
        assert!(e.contains("sentence 9") && e.contains("507"), "{}", e);
        let dup = "#BOS 3\nw\tT\t--\t--\t500\n#500\tA\t--\t--\t0\n#500\tB\t--\t--\t0\n#EOS 3\n";
        assert!(read_export(dup, &ExportOptions::default()).unwrap_err().to_string().contains("duplicate"));
        let cyc = "#BOS 4\nw\tT\t--\t--\t0\n#500\tA\t--\t--\t501\n#501\tB\t--\t--\t500\n#EOS 4\n";
        assert!(read_export(cyc, &ExportOptions::default()).is_err());
        assert!(read_export("#BOS 1\nw\tT\t--\t--\t0\n", &ExportOptions::default()).is_err());
    }

    #[test]
    fn conll_columns_of_english_example() {
        let e = encode_direct(&fixtures::english_dtree());
        let text = write_conll(std::slice::from_ref(&e));
        let cols: Vec<Vec<&str>> = text.lines().filter(|l| !l.is_empty()).map(|l| l.split('\t').collect()).collect();
        assert_eq!(cols.len(), 6);
        let rels: Vec<&str> = cols.iter().map(|c| c[7]).collect();
        let heads: Vec<&str> = cols.iter().map(|c| c[6]).collect();
        assert_eq!(rels, ["NP#1", "S#2", "_root_", "VP#1", "VP#1", "S#2"]);
        assert_eq!(heads, ["2", "3", "0", "3", "3", "3"]);
        let back = read_conll(&text, RootPolicy::Reject).unwrap();
        assert_eq!(back.trees, vec![e]);
        assert_eq!(read_conll("", RootPolicy::Reject).unwrap(), ConllCorpus::default());
    }

    #[test]
    fn conll_root_policies() {
        let two_roots = "1\ta\t_\tP\tP\t_\t0\tX\t_\t_\n2\tb\t_\tP\tP\t_\t0\tY\t_\t_\n\n";
        assert!(read_conll(two_roots, RootPolicy::Reject).is_err());
        let c = read_conll(two_roots, RootPolicy::Repair).unwrap();
        assert_eq!(c.root_repairs, 1);
        assert_eq!(c.trees[0].heads(), [0, 1]);
        let bad_head = "1\ta\t_\tP\tP\t_\tx\tX\t_\t_\n";
        assert!(matches!(read_conll(bad_head, RootPolicy::Repair), Err(IoError::Syntax { line: 1, .. })));
    }

    #[test]
    fn json_roundtrip() {
        let trees = vec![fixtures::english(), fixtures::german()];
        assert_eq!(read_json(&write_json(&trees)).unwrap(), trees);
    }
}
