//! Tree types: sentences, constituent trees with explicit yields, and
//! dependency trees with per-head attachment order.
//!
//! Positions are 1-based throughout. In head vectors, position 0 stands for
//! the (implicit) root: every dependency tree has exactly one root word.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A word with its POS tag and optional lemma/morphology.
///
/// The position of a token is its index in the owning [`Sentence`] plus one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub pos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morph: Option<String>,
}

impl Token {
    pub fn new(form: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            pos: pos.into(),
            lemma: None,
            morph: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence { tokens }
    }

    /// Builds a sentence from `(form, pos)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Sentence::new(pairs.into_iter().map(|(f, p)| Token::new(f, p)).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at 1-based `position`.
    ///
    /// Panics if the position is out of range.
    pub fn token(&self, position: usize) -> &Token {
        &self.tokens[position - 1]
    }

    pub fn get(&self, position: usize) -> Option<&Token> {
        position.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tokens_mut(&mut self) -> &mut [Token] {
        &mut self.tokens
    }

    pub fn iter(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter()
    }
}

/// A structural problem found by `validate`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl Violation {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// POS node directly above a word. Preterminals have no child nodes; the
    /// word is the sentence token at the node's head position.
    Preterminal,
    Proper,
}

/// A constituent `<label, head, yield>` with its children.
///
/// Yields are sorted position sets, so discontinuous constituents need no
/// special representation. Children are kept ordered by their first
/// position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CNode {
    pub label: String,
    pub head: usize,
    #[serde(rename = "yield")]
    pub positions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<CNode>,
}

impl CNode {
    pub fn preterminal(label: impl Into<String>, position: usize) -> Self {
        CNode {
            label: label.into(),
            head: position,
            positions: vec![position],
            children: Vec::new(),
        }
    }

    /// Creates a proper node. The yield is the union of the children's
    /// yields and the children are reordered by first position.
    pub fn proper(label: impl Into<String>, head: usize, mut children: Vec<CNode>) -> Self {
        children.sort_by_key(|c| c.first());
        let mut positions: Vec<usize> = children
            .iter()
            .flat_map(|c| c.positions.iter().copied())
            .collect();
        positions.sort_unstable();
        CNode {
            label: label.into(),
            head,
            positions,
            children,
        }
    }

    pub fn kind(&self) -> NodeKind {
        if self.children.is_empty() {
            NodeKind::Preterminal
        } else {
            NodeKind::Proper
        }
    }

    pub fn is_preterminal(&self) -> bool {
        self.children.is_empty()
    }

    /// A proper node with exactly one child.
    pub fn is_unary(&self) -> bool {
        self.children.len() == 1
    }

    pub fn first(&self) -> usize {
        self.positions.first().copied().unwrap_or(0)
    }

    pub fn last(&self) -> usize {
        self.positions.last().copied().unwrap_or(0)
    }

    pub fn is_contiguous(&self) -> bool {
        match (self.positions.first(), self.positions.last()) {
            (Some(&a), Some(&b)) => b - a + 1 == self.positions.len(),
            _ => true,
        }
    }

    pub fn head_child(&self) -> Option<&CNode> {
        self.children.iter().find(|c| c.head == self.head)
    }

    /// All nodes of the subtree in pre-order.
    pub fn preorder(&self) -> Vec<&CNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    /// All nodes of the subtree in post-order (children before parents).
    pub fn postorder(&self) -> Vec<&CNode> {
        fn go<'a>(n: &'a CNode, out: &mut Vec<&'a CNode>) {
            for c in &n.children {
                go(c, out);
            }
            out.push(n);
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(CNode::node_count).sum::<usize>()
    }

    /// Follows a path of child indices from this node.
    pub fn at_path(&self, path: &[usize]) -> Option<&CNode> {
        let mut node = self;
        for &i in path {
            node = node.children.get(i)?;
        }
        Some(node)
    }
}

/// A lexicalized constituent tree over a sentence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CTree {
    pub sentence: Sentence,
    pub root: CNode,
}

impl CTree {
    pub fn new(sentence: Sentence, root: CNode) -> Self {
        CTree { sentence, root }
    }

    pub fn len(&self) -> usize {
        self.sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence.is_empty()
    }

    /// True iff every node has a contiguous yield.
    pub fn is_continuous(&self) -> bool {
        self.root.preorder().iter().all(|n| n.is_contiguous())
    }

    pub fn is_unaryless(&self) -> bool {
        self.root.preorder().iter().all(|n| !n.is_unary())
    }

    /// True iff every proper node has exactly two children.
    pub fn is_binary(&self) -> bool {
        self.root
            .preorder()
            .iter()
            .all(|n| n.is_preterminal() || n.children.len() == 2)
    }

    /// The spine of `h`: the path from the highest node headed by `h` down to
    /// its preterminal, top first. Empty if `h` is out of range.
    pub fn spine(&self, h: usize) -> Vec<&CNode> {
        let Some(top) = self.root.preorder().into_iter().find(|n| n.head == h) else {
            return Vec::new();
        };
        let mut out = vec![top];
        let mut node = top;
        while let Some(c) = node.head_child() {
            out.push(c);
            node = c;
        }
        out
    }

    /// Removes every unary proper node, promoting its child. Preterminals
    /// are kept, so a sentence consisting of a chain of unaries over one
    /// word collapses to a bare preterminal.
    pub fn strip_unaries(&self) -> CTree {
        fn strip(node: &CNode) -> CNode {
            if node.is_unary() {
                return strip(&node.children[0]);
            }
            CNode {
                label: node.label.clone(),
                head: node.head,
                positions: node.positions.clone(),
                children: node.children.iter().map(strip).collect(),
            }
        }
        CTree::new(self.sentence.clone(), strip(&self.root))
    }

    /// Labels of all proper nodes, sorted.
    pub fn proper_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .root
            .preorder()
            .into_iter()
            .filter(|n| !n.is_preterminal())
            .map(|n| n.label.clone())
            .collect();
        labels.sort();
        labels
    }

    /// Returns an empty list iff all structural invariants hold.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let len = self.sentence.len();
        if len == 0 {
            out.push(Violation::new("sentence", "empty sentence"));
            return out;
        }
        let mut leaves = Vec::new();
        validate_node(&self.root, &self.sentence, &mut Vec::new(), &mut leaves, &mut out);
        let mut sorted = leaves.clone();
        sorted.sort_unstable();
        let expected: Vec<usize> = (1..=len).collect();
        if sorted != expected {
            out.push(Violation::new(
                "tree",
                format!("preterminals cover {:?}, expected positions 1..={}", sorted, len),
            ));
        }
        if self.root.positions != expected {
            out.push(Violation::new("node /", "root yield does not cover the sentence"));
        }
        out
    }
}

fn node_location(path: &[usize], node: &CNode) -> String {
    let p: Vec<String> = path.iter().map(|i| i.to_string()).collect();
    format!("node /{} ({})", p.join("/"), node.label)
}

fn validate_node(
    node: &CNode,
    sentence: &Sentence,
    path: &mut Vec<usize>,
    leaves: &mut Vec<usize>,
    out: &mut Vec<Violation>,
) {
    let loc = || node_location(path, node);
    let len = sentence.len();
    if node.head == 0 || node.head > len {
        out.push(Violation::new(loc(), format!("head {} out of range", node.head)));
    }
    if node.positions.windows(2).any(|w| w[0] >= w[1]) {
        out.push(Violation::new(loc(), "yield is not a sorted set"));
    }
    if node.label.is_empty() {
        out.push(Violation::new(loc(), "empty label"));
    }
    if node.is_preterminal() {
        leaves.push(node.head);
        if node.positions != [node.head] {
            out.push(Violation::new(loc(), "preterminal yield must be its own position"));
        }
        if let Some(tok) = sentence.get(node.head) {
            if tok.pos != node.label {
                out.push(Violation::new(
                    loc(),
                    format!("preterminal label {} differs from POS {}", node.label, tok.pos),
                ));
            }
        }
        return;
    }
    let mut union: Vec<usize> = node
        .children
        .iter()
        .flat_map(|c| c.positions.iter().copied())
        .collect();
    union.sort_unstable();
    if union.windows(2).any(|w| w[0] == w[1]) {
        out.push(Violation::new(loc(), "children yields overlap"));
        union.dedup();
    }
    if union != node.positions {
        out.push(Violation::new(loc(), "yield differs from the union of children yields"));
    }
    let head_children = node.children.iter().filter(|c| c.head == node.head).count();
    if head_children != 1 {
        out.push(Violation::new(
            loc(),
            format!("{} children share the head position, expected 1", head_children),
        ));
    }
    for (i, c) in node.children.iter().enumerate() {
        path.push(i);
        validate_node(c, sentence, path, leaves, out);
        path.pop();
    }
}

impl fmt::Display for CNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_preterminal() {
            return write!(f, "({} {})", self.label, self.head);
        }
        write!(f, "({}", self.label)?;
        for c in &self.children {
            write!(f, " {}", c)?;
        }
        write!(f, ")")
    }
}

/// Checks that `heads` (1-based modifiers, 0 for the root) is a tree with a
/// single root word.
pub fn check_heads(heads: &[usize]) -> Vec<Violation> {
    let mut out = Vec::new();
    let len = heads.len();
    if len == 0 {
        out.push(Violation::new("tree", "empty sentence"));
        return out;
    }
    for (i, &h) in heads.iter().enumerate() {
        if h > len {
            out.push(Violation::new(format!("token {}", i + 1), format!("head {} out of range", h)));
        }
        if h == i + 1 {
            out.push(Violation::new(format!("token {}", i + 1), "self loop"));
        }
    }
    let roots = heads.iter().filter(|&&h| h == 0).count();
    if roots == 0 {
        out.push(Violation::new("tree", "no root"));
    } else if roots > 1 {
        out.push(Violation::new("tree", "multiple roots"));
    }
    if !out.is_empty() {
        return out;
    }
    for m in 1..=len {
        let mut cur = m;
        let mut steps = 0;
        while cur != 0 {
            cur = heads[cur - 1];
            steps += 1;
            if steps > len {
                out.push(Violation::new(format!("token {}", m), "on a cycle"));
                break;
            }
        }
    }
    out
}

/// True iff `a` dominates `d` (reflexively) in the tree given by `heads`.
fn dominates(heads: &[usize], a: usize, mut d: usize) -> bool {
    let mut steps = 0;
    while d != 0 && steps <= heads.len() {
        if d == a {
            return true;
        }
        d = heads[d - 1];
        steps += 1;
    }
    false
}

/// True iff every word strictly between the two ends of an arc descends from
/// the arc's head.
pub fn is_projective(heads: &[usize]) -> bool {
    heads.iter().enumerate().all(|(i, &h)| {
        let m = i + 1;
        if h == 0 {
            return true;
        }
        let (lo, hi) = if h < m { (h, m) } else { (m, h) };
        (lo + 1..hi).all(|d| dominates(heads, h, d))
    })
}

/// Words in post-order over the dependency tree (modifiers before heads,
/// siblings left to right).
pub fn dependency_postorder(heads: &[usize]) -> Vec<usize> {
    let len = heads.len();
    let mut children = vec![Vec::new(); len + 1];
    for (i, &h) in heads.iter().enumerate() {
        if h <= len {
            children[h].push(i + 1);
        }
    }
    let mut out = Vec::with_capacity(len);
    // Iterative so deep chains cannot blow the stack.
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    while let Some((node, next)) = stack.pop() {
        if next < children[node].len() {
            stack.push((node, next + 1));
            stack.push((children[node][next], 0));
        } else if node != 0 {
            out.push(node);
        }
    }
    out
}

/// An unlabeled dependency tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DepTree {
    /// `heads[m - 1]` is the head of word `m`; 0 marks the root word.
    pub heads: Vec<usize>,
}

impl DepTree {
    pub fn new(heads: Vec<usize>) -> Self {
        DepTree { heads }
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.heads.iter().position(|&h| h == 0).map(|i| i + 1)
    }

    pub fn head(&self, m: usize) -> usize {
        self.heads[m - 1]
    }

    /// Modifiers of `h` in ascending position order.
    pub fn modifiers(&self, h: usize) -> Vec<usize> {
        (1..=self.len()).filter(|&m| self.heads[m - 1] == h).collect()
    }

    pub fn is_projective(&self) -> bool {
        is_projective(&self.heads)
    }

    pub fn validate(&self) -> Vec<Violation> {
        check_heads(&self.heads)
    }
}

/// A dependency arc `<head, modifier, label>` with its attachment event
/// index (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub head: usize,
    pub modifier: usize,
    pub label: String,
    pub order: usize,
}

impl Arc {
    pub fn new(head: usize, modifier: usize, label: impl Into<String>, order: usize) -> Self {
        Arc {
            head,
            modifier,
            label: label.into(),
            order,
        }
    }
}

/// A dependency tree whose heads attach their modifiers in a weak order:
/// arcs of the same head sharing an order index form one attachment event
/// and must carry the same label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeadOrderedDTree {
    pub sentence: Sentence,
    pub root: usize,
    /// One arc per non-root word, sorted by modifier.
    pub arcs: Vec<Arc>,
}

impl HeadOrderedDTree {
    /// Builds a tree, sorting the arcs by modifier.
    pub fn new(sentence: Sentence, root: usize, mut arcs: Vec<Arc>) -> Self {
        arcs.sort_by_key(|a| a.modifier);
        HeadOrderedDTree {
            sentence,
            root,
            arcs,
        }
    }

    pub fn len(&self) -> usize {
        self.sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence.is_empty()
    }

    /// Head vector with 0 at the root word. Words without an incoming arc
    /// (other than the root) are also given 0.
    pub fn heads(&self) -> Vec<usize> {
        let mut heads = vec![0; self.len()];
        for a in &self.arcs {
            if let Some(slot) = a.modifier.checked_sub(1).and_then(|i| heads.get_mut(i)) {
                *slot = a.head;
            }
        }
        heads
    }

    pub fn unlabeled(&self) -> DepTree {
        DepTree::new(self.heads())
    }

    /// Arcs headed by `h`, ascending by modifier position.
    pub fn modifiers(&self, h: usize) -> Vec<&Arc> {
        self.arcs.iter().filter(|a| a.head == h).collect()
    }

    /// Arcs grouped per head, each group ascending by modifier position.
    pub fn arcs_by_head(&self) -> BTreeMap<usize, Vec<&Arc>> {
        let mut map: BTreeMap<usize, Vec<&Arc>> = BTreeMap::new();
        for a in &self.arcs {
            map.entry(a.head).or_default().push(a);
        }
        map
    }

    /// The equivalence classes of `h`'s modifiers in attachment order.
    pub fn classes(&self, h: usize) -> Vec<(usize, Vec<&Arc>)> {
        let mut map: BTreeMap<usize, Vec<&Arc>> = BTreeMap::new();
        for a in self.arcs.iter().filter(|a| a.head == h) {
            map.entry(a.order).or_default().push(a);
        }
        map.into_iter().collect()
    }

    pub fn is_projective(&self) -> bool {
        is_projective(&self.heads())
    }

    /// Nesting: among same-side modifiers of a head, a closer one never
    /// attaches strictly later than a farther one.
    pub fn is_nested(&self) -> bool {
        self.arcs_by_head().iter().all(|(&h, arcs)| {
            let left: Vec<usize> = arcs
                .iter()
                .filter(|a| a.modifier < h)
                .rev()
                .map(|a| a.order)
                .collect();
            let right: Vec<usize> = arcs
                .iter()
                .filter(|a| a.modifier > h)
                .map(|a| a.order)
                .collect();
            left.windows(2).all(|w| w[0] <= w[1]) && right.windows(2).all(|w| w[0] <= w[1])
        })
    }

    /// Every equivalence class is a singleton.
    pub fn is_strictly_ordered(&self) -> bool {
        let heads: Vec<usize> = self.arcs_by_head().keys().copied().collect();
        heads
            .into_iter()
            .all(|h| self.classes(h).iter().all(|(_, c)| c.len() == 1))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let len = self.len();
        if len == 0 {
            return vec![Violation::new("tree", "empty sentence")];
        }
        let mut out = Vec::new();
        let mut incoming = vec![0usize; len + 1];
        for a in &self.arcs {
            let loc = format!("arc {}->{}", a.head, a.modifier);
            if a.modifier == 0 || a.modifier > len || a.head > len {
                out.push(Violation::new(loc, "position out of range"));
                continue;
            }
            if a.head == 0 {
                out.push(Violation::new(loc.clone(), "explicit arc from the root symbol"));
            }
            if a.order == 0 {
                out.push(Violation::new(loc, "order index must be at least 1"));
            }
            incoming[a.modifier] += 1;
        }
        for (m, &n) in incoming.iter().enumerate().skip(1) {
            if m == self.root {
                if n > 0 {
                    out.push(Violation::new(format!("token {}", m), "root word has a head"));
                }
            } else if n != 1 {
                out.push(Violation::new(
                    format!("token {}", m),
                    format!("{} incoming arcs, expected 1", n),
                ));
            }
        }
        if self.root == 0 || self.root > len {
            out.push(Violation::new("tree", "root out of range"));
        }
        if out.is_empty() {
            out.extend(check_heads(&self.heads()));
        }
        for (h, arcs) in self.arcs_by_head() {
            let mut by_order: BTreeMap<usize, &str> = BTreeMap::new();
            for a in arcs {
                if let Some(prev) = by_order.insert(a.order, &a.label) {
                    if prev != a.label {
                        out.push(Violation::new(
                            format!("head {} class #{}", h, a.order),
                            format!("inconsistent labels {} and {}", prev, a.label),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// A node of an unlexicalized constituent tree, as read from a treebank.
///
/// Preterminals carry the position of their word and no children.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawNode {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<RawNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<usize>,
}

impl RawNode {
    pub fn preterminal(label: impl Into<String>, position: usize) -> Self {
        RawNode {
            label: label.into(),
            children: Vec::new(),
            word: Some(position),
        }
    }

    pub fn inner(label: impl Into<String>, children: Vec<RawNode>) -> Self {
        RawNode {
            label: label.into(),
            children,
            word: None,
        }
    }

    /// Sorted word positions below this node.
    pub fn positions(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.extend(n.word);
            stack.extend(n.children.iter());
        }
        out.sort_unstable();
        out
    }
}

/// A constituent tree without head annotation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTree {
    pub sentence: Sentence,
    pub root: RawNode,
}

impl CNode {
    /// Drops head information; children keep their order.
    pub fn to_raw(&self) -> RawNode {
        if self.is_preterminal() {
            RawNode::preterminal(self.label.clone(), self.head)
        } else {
            RawNode::inner(self.label.clone(), self.children.iter().map(CNode::to_raw).collect())
        }
    }
}

impl CTree {
    pub fn to_raw(&self) -> RawTree {
        RawTree {
            sentence: self.sentence.clone(),
            root: self.root.to_raw(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn continuity_of_figure_one_trees() {
        assert!(fixtures::english().is_continuous());
        assert!(!fixtures::german().is_continuous());
        assert!(fixtures::single("X", "T", "w").is_continuous());
    }

    #[test]
    fn projectivity() {
        assert!(is_projective(&fixtures::english_dtree().heads()));
        assert!(!is_projective(&fixtures::german_dtree().heads()));
        // 1 <- 2 <- 3
        assert!(is_projective(&[2, 3, 0]));
    }

    #[test]
    fn nesting() {
        assert!(fixtures::german_dtree().is_nested());
        let s = Sentence::from_pairs(vec![("a", "A"), ("b", "B"), ("c", "C"), ("d", "D"), ("e", "E")]);
        let t = HeadOrderedDTree::new(
            s.clone(),
            3,
            vec![Arc::new(3, 1, "X", 1), Arc::new(3, 2, "X", 1), Arc::new(3, 4, "X", 2), Arc::new(3, 5, "X", 1)],
        );
        assert!(!t.is_nested());
        let t = HeadOrderedDTree::new(
            s,
            3,
            vec![Arc::new(3, 2, "X", 5), Arc::new(2, 1, "Y", 1), Arc::new(3, 4, "X", 2), Arc::new(4, 5, "Z", 9)],
        );
        assert!(t.is_nested());
    }

    #[test]
    fn spines() {
        let t = fixtures::english();
        let labels = |h| t.spine(h).iter().map(|n| n.label.clone()).collect::<Vec<_>>();
        assert_eq!(labels(3), ["S", "VP", "VBZ"]);
        assert_eq!(labels(1), ["DT"]);
        assert_eq!(labels(4), ["ADVP", "RB"]);
        let one = fixtures::single("X", "T", "w");
        assert_eq!(one.spine(1).len(), 2);
        assert_eq!(one.strip_unaries().spine(1)[0].label, "T");
    }

    #[test]
    fn strip_unaries_drops_advp_and_adjp() {
        let t = fixtures::english();
        let s = t.strip_unaries();
        assert_eq!(s, fixtures::english_unaryless());
        assert_eq!(s.strip_unaries(), s);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn unary_chain_over_a_word_collapses() {
        let s = Sentence::from_pairs(vec![("w", "T")]);
        let chain = CNode::proper(
            "X",
            1,
            vec![CNode::proper("Y", 1, vec![CNode::proper("Z", 1, vec![CNode::preterminal("T", 1)])])],
        );
        let t = CTree::new(s, chain);
        assert!(t.validate().is_empty());
        assert_eq!(t.strip_unaries().root, CNode::preterminal("T", 1));
    }

    #[test]
    fn validate_reports_violations() {
        assert!(fixtures::english().validate().is_empty());
        assert!(fixtures::german().validate().is_empty());
        let mut t = fixtures::english();
        t.root.children[0].positions = vec![1, 2, 3];
        let v = t.validate();
        assert_eq!(v.len(), 2, "{:?}", v);
        assert!(v.iter().any(|v| v.location.contains("/0 (NP)")));

        let mut d = fixtures::english_dtree();
        d.arcs.retain(|a| a.modifier != 2);
        d.arcs.push(Arc::new(0, 2, "S", 2));
        assert!(!d.validate().is_empty());
        assert!(check_heads(&[0, 0, 2]).iter().any(|v| v.message == "multiple roots"));
    }

    #[test]
    fn dtree_validation_catches_label_conflicts_and_cycles() {
        assert!(fixtures::english_dtree().validate().is_empty());
        let mut d = fixtures::english_dtree();
        d.arcs[3].label = "ADJP".into();
        assert_eq!(d.validate().len(), 1);
        assert!(!check_heads(&[2, 3, 1, 0]).is_empty());
    }

    #[test]
    fn postorder_visits_modifiers_first() {
        let heads = fixtures::english_dtree().heads();
        let order = dependency_postorder(&heads);
        assert_eq!(order, vec![1, 2, 4, 5, 6, 3]);
    }
}
