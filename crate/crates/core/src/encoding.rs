//! Writing attachment order into dependency labels so that any labeled
//! dependency parser can learn it.
//!
//! Three schemes are supported:
//!
//! * **direct**: `<Z>#<j>`, the class label and the absolute event index;
//! * **delta**: `<Z>#<d>`, where for each head and side, walking outward from
//!   the head, the first modifier keeps its absolute index and every later
//!   one stores the difference to the previous index on that side (only for
//!   nested trees, so `d >= 0`);
//! * **hn**: `<X1>|<X2>|...#<j>`, the proper labels of the modifier's own
//!   spine (top first, `∅` when the modifier heads no proper node) and the
//!   position on the head's spine where it attaches. The root word's spine
//!   goes into the root label.
//!
//! `#` and `|` inside treebank labels are escaped as `\#` and `\|` (and `\`
//! as `\\`), so every encoded label has exactly one unescaped `#`.
//!
//! Decoding never fails: labels that do not parse are taken whole with index
//! 1 and counted as malformed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduction::{ctree_to_dtree, ReductionError};
use crate::trees::{Arc, CTree, DepTree, HeadOrderedDTree, Sentence};

/// DEPREL of the root word under the direct and delta schemes.
pub const ROOT_LABEL: &str = "_root_";
/// Spine marker for modifiers that head no proper node.
pub const EMPTY_SPINE: &str = "∅";
/// Class label used when a spine label cannot be recovered.
pub const FALLBACK_LABEL: &str = "X";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Direct,
    Delta,
    Hn,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Direct => "direct",
            Scheme::Delta => "delta",
            Scheme::Hn => "hn",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(Scheme::Direct),
            "delta" => Ok(Scheme::Delta),
            "hn" => Ok(Scheme::Hn),
            other => Err(format!("unknown encoding {:?} (direct, delta, hn)", other)),
        }
    }
}

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("delta encoding needs a nested tree")]
    NotNested,
    #[error("delta encoding needs a projective tree")]
    NotProjective,
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedArc {
    pub head: usize,
    pub modifier: usize,
    pub label: String,
}

/// A plain labeled dependency tree whose labels carry order information.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedDTree {
    pub sentence: Sentence,
    pub root: usize,
    pub root_label: String,
    /// One arc per non-root word, sorted by modifier.
    pub arcs: Vec<EncodedArc>,
}

impl EncodedDTree {
    pub fn new(sentence: Sentence, root: usize, root_label: impl Into<String>, mut arcs: Vec<EncodedArc>) -> Self {
        arcs.sort_by_key(|a| a.modifier);
        EncodedDTree {
            sentence,
            root,
            root_label: root_label.into(),
            arcs,
        }
    }

    pub fn len(&self) -> usize {
        self.sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence.is_empty()
    }

    pub fn heads(&self) -> Vec<usize> {
        let mut heads = vec![0; self.len()];
        for a in &self.arcs {
            if let Some(slot) = a.modifier.checked_sub(1).and_then(|i| heads.get_mut(i)) {
                *slot = a.head;
            }
        }
        heads
    }

    /// Label of every word in sentence order; the root word gets the root
    /// label.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = vec![String::new(); self.len()];
        if let Some(slot) = self.root.checked_sub(1).and_then(|i| labels.get_mut(i)) {
            *slot = self.root_label.clone();
        }
        for a in &self.arcs {
            if let Some(slot) = a.modifier.checked_sub(1).and_then(|i| labels.get_mut(i)) {
                *slot = a.label.clone();
            }
        }
        labels
    }

    pub fn unlabeled(&self) -> DepTree {
        DepTree::new(self.heads())
    }

    /// Builds a tree from per-word heads and labels (0 marks the root).
    pub fn from_heads(sentence: Sentence, heads: &[usize], labels: &[String]) -> Self {
        let mut root = 0;
        let mut root_label = ROOT_LABEL.to_string();
        let mut arcs = Vec::new();
        for (i, (&h, l)) in heads.iter().zip(labels).enumerate() {
            if h == 0 && root == 0 {
                root = i + 1;
                root_label = l.clone();
            } else {
                arcs.push(EncodedArc {
                    head: h,
                    modifier: i + 1,
                    label: l.clone(),
                });
            }
        }
        EncodedDTree::new(sentence, root, root_label, arcs)
    }
}

pub fn escape_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for ch in label.chars() {
        if matches!(ch, '\\' | '#' | '|') {
            out.push('\\');
        }
        out.push(ch);
    }
    out
}

pub fn unescape_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    let mut chars = label.chars();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            if let Some(next) = chars.next() {
                out.push(next);
                continue;
            }
        }
        out.push(ch);
    }
    out
}

/// Byte offsets of unescaped occurrences of `sep`.
fn unescaped_positions(s: &str, sep: char) -> Vec<usize> {
    let mut out = Vec::new();
    let mut escaped = false;
    for (i, ch) in s.char_indices() {
        if escaped {
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == sep {
            out.push(i);
        }
    }
    out
}

/// Splits `<escaped label>#<number>` at its unescaped `#`.
fn split_index(label: &str) -> Option<(&str, usize)> {
    let positions = unescaped_positions(label, '#');
    let [pos] = positions.as_slice() else {
        return None;
    };
    let (name, num) = (&label[..*pos], &label[pos + 1..]);
    if name.is_empty() || num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    // Cap indices so that sums of deltas stay far from overflow.
    let n: u32 = num.parse().ok()?;
    Some((name, n as usize))
}

fn encode_spine(labels: &[String]) -> String {
    if labels.is_empty() {
        return EMPTY_SPINE.to_string();
    }
    labels.iter().map(|l| escape_label(l)).collect::<Vec<_>>().join("|")
}

/// Empty spine levels, which only predicted labels can contain, become
/// the fallback label; the flag reports them.
fn decode_spine(s: &str) -> (Vec<String>, bool) {
    if s == EMPTY_SPINE || s.is_empty() {
        return (Vec::new(), false);
    }
    let mut out = Vec::new();
    let mut start = 0;
    for pos in unescaped_positions(s, '|').into_iter().chain([s.len()]) {
        out.push(unescape_label(&s[start..pos]));
        start = pos + 1;
    }
    let mut bad = false;
    for l in out.iter_mut().filter(|l| l.is_empty()) {
        *l = FALLBACK_LABEL.to_string();
        bad = true;
    }
    (out, bad)
}

pub fn encode_direct(tree: &HeadOrderedDTree) -> EncodedDTree {
    let arcs = tree
        .arcs
        .iter()
        .map(|a| EncodedArc {
            head: a.head,
            modifier: a.modifier,
            label: format!("{}#{}", escape_label(&a.label), a.order),
        })
        .collect();
    EncodedDTree::new(tree.sentence.clone(), tree.root, ROOT_LABEL, arcs)
}

/// Per head, the arc indices of each side ordered from the head outward.
fn sides(arcs: &[Arc]) -> Vec<Vec<usize>> {
    let mut by_head: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, a) in arcs.iter().enumerate() {
        by_head.entry(a.head).or_default().push(i);
    }
    let mut out = Vec::new();
    for (h, mut idx) in by_head {
        idx.sort_by_key(|&i| arcs[i].modifier);
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| arcs[i].modifier < h);
        out.push(left.into_iter().rev().collect());
        out.push(right);
    }
    out
}

pub fn encode_delta(tree: &HeadOrderedDTree) -> Result<EncodedDTree, EncodingError> {
    if !tree.is_projective() {
        return Err(EncodingError::NotProjective);
    }
    if !tree.is_nested() {
        return Err(EncodingError::NotNested);
    }
    let mut deltas = vec![0usize; tree.arcs.len()];
    for side in sides(&tree.arcs) {
        let mut prev = None;
        for i in side {
            let order = tree.arcs[i].order;
            deltas[i] = match prev {
                None => order,
                Some(p) => order - p,
            };
            prev = Some(order);
        }
    }
    let arcs = tree
        .arcs
        .iter()
        .zip(deltas)
        .map(|(a, d)| EncodedArc {
            head: a.head,
            modifier: a.modifier,
            label: format!("{}#{}", escape_label(&a.label), d),
        })
        .collect();
    Ok(EncodedDTree::new(tree.sentence.clone(), tree.root, ROOT_LABEL, arcs))
}

/// Proper spine labels of every word (top first), indexed by position - 1.
pub fn proper_spines(tree: &CTree) -> Vec<Vec<String>> {
    (1..=tree.len())
        .map(|h| {
            tree.spine(h)
                .into_iter()
                .filter(|n| !n.is_preterminal())
                .map(|n| n.label.clone())
                .collect()
        })
        .collect()
}

pub fn encode_hn(tree: &CTree) -> Result<EncodedDTree, EncodingError> {
    let d = ctree_to_dtree(tree)?;
    let spines = proper_spines(tree);
    let arcs = d
        .arcs
        .iter()
        .map(|a| EncodedArc {
            head: a.head,
            modifier: a.modifier,
            label: format!("{}#{}", encode_spine(&spines[a.modifier - 1]), a.order),
        })
        .collect();
    let root_label = encode_spine(&spines[d.root - 1]);
    Ok(EncodedDTree::new(tree.sentence.clone(), d.root, root_label, arcs))
}

/// Converts a constituent tree and encodes it in one step.
pub fn encode_ctree(tree: &CTree, scheme: Scheme) -> Result<EncodedDTree, EncodingError> {
    match scheme {
        Scheme::Direct => Ok(encode_direct(&ctree_to_dtree(tree)?)),
        Scheme::Delta => encode_delta(&ctree_to_dtree(tree)?),
        Scheme::Hn => encode_hn(tree),
    }
}

/// Result of decoding encoded labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    /// Arcs with `(label, index)` restored. Predicted input may violate the
    /// class-label invariant; see `reduction::recover_order`.
    pub tree: HeadOrderedDTree,
    /// For the hn scheme: the proper spine of every word, top first.
    pub spines: Option<Vec<Vec<String>>>,
    /// Labels that did not parse under the scheme or had to be clamped.
    pub malformed: usize,
}

pub fn decode(tree: &EncodedDTree, scheme: Scheme) -> Decoded {
    let mut malformed = 0;
    let mut parse = |label: &str| match split_index(label) {
        Some((name, n)) => (unescape_label(name), n, name.to_string()),
        None => {
            malformed += 1;
            let name = if label.is_empty() { FALLBACK_LABEL } else { label };
            (name.to_string(), 1, label.to_string())
        }
    };
    let parsed: Vec<(String, usize, String)> = tree.arcs.iter().map(|a| parse(&a.label)).collect();
    let mut arcs: Vec<Arc> = tree
        .arcs
        .iter()
        .zip(&parsed)
        .map(|(a, (label, n, _))| Arc::new(a.head, a.modifier, label.clone(), *n))
        .collect();

    let mut spines = None;
    match scheme {
        Scheme::Direct => {}
        Scheme::Delta => {
            for side in sides(&arcs) {
                let mut prev: Option<usize> = None;
                for i in side {
                    let mut abs = match prev {
                        None => arcs[i].order,
                        Some(p) => p.saturating_add(arcs[i].order),
                    };
                    if abs == 0 {
                        abs = 1;
                        malformed += 1;
                    }
                    arcs[i].order = abs;
                    prev = Some(abs);
                }
            }
        }
        Scheme::Hn => {
            let mut word_spines = vec![Vec::new(); tree.len()];
            for (a, (_, _, raw)) in tree.arcs.iter().zip(&parsed) {
                if let Some(slot) = a.modifier.checked_sub(1).and_then(|i| word_spines.get_mut(i)) {
                    let (spine, bad) = decode_spine(raw);
                    malformed += bad as usize;
                    *slot = spine;
                }
            }
            if let Some(slot) = tree.root.checked_sub(1).and_then(|i| word_spines.get_mut(i)) {
                *slot = if tree.root_label == ROOT_LABEL {
                    Vec::new()
                } else {
                    let (spine, bad) = decode_spine(&tree.root_label);
                    malformed += bad as usize;
                    spine
                };
            }
            for a in arcs.iter_mut() {
                let spine = a.head.checked_sub(1).and_then(|i| word_spines.get(i));
                let label = spine
                    .filter(|_| a.order >= 1)
                    .and_then(|s| s.len().checked_sub(a.order).map(|k| s[k].clone()));
                a.label = match label {
                    Some(l) => l,
                    _ => {
                        malformed += 1;
                        spine
                            .and_then(|s| s.first().cloned())
                            .unwrap_or_else(|| FALLBACK_LABEL.to_string())
                    }
                };
            }
            spines = Some(word_spines);
        }
    }
    for a in arcs.iter_mut() {
        if a.order == 0 {
            a.order = 1;
            malformed += 1;
        }
    }
    Decoded {
        tree: HeadOrderedDTree::new(tree.sentence.clone(), tree.root, arcs),
        spines,
        malformed,
    }
}

/// Distinct arc labels with their counts, sorted by label.
pub fn label_alphabet<'a>(corpus: impl IntoIterator<Item = &'a EncodedDTree>) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in corpus {
        for a in &t.arcs {
            *counts.entry(a.label.clone()).or_default() += 1;
        }
    }
    counts.into_iter().collect()
}
