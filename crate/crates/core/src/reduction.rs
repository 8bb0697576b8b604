//! Conversion between constituent trees and head-ordered dependency trees,
//! and repair of predicted attachment orders.
//!
//! [`ctree_to_dtree`] walks the proper nodes bottom-up, keeping for every
//! word `h` a counter of how far up its spine the walk has gone. A node
//! `<Z, h, I>` attaches each non-head child's head `m` with label `Z` at the
//! current counter value, then advances the counter. Preterminals are not
//! counted, so the lowest proper node of a spine has index 1. Unary nodes
//! advance the counter without producing arcs, which is why their labels do
//! not survive the conversion.
//!
//! [`dtree_to_ctree`] inverts this: each word starts as its preterminal and,
//! class by class in attachment order, grows a new node on top of itself and
//! the subtrees of the modifiers in the class.

use std::fmt;

use thiserror::Error;

use crate::trees::{
    check_heads, dependency_postorder, Arc, CNode, CTree, HeadOrderedDTree, Violation,
};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("invalid tree: {}", join_violations(.0))]
    InvalidTree(Vec<Violation>),
    #[error("head {head}: attachment #{order} mixes labels {first} and {second}")]
    ClassLabelConflict {
        head: usize,
        order: usize,
        first: String,
        second: String,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Converts a lexicalized constituent tree to a head-ordered dependency tree.
pub fn ctree_to_dtree(tree: &CTree) -> Result<HeadOrderedDTree, ReductionError> {
    ctree_to_dtree_counted(tree).map(|(d, _)| d)
}

/// Like [`ctree_to_dtree`], also returning the number of nodes visited.
pub fn ctree_to_dtree_counted(tree: &CTree) -> Result<(HeadOrderedDTree, usize), ReductionError> {
    let violations = tree.validate();
    if !violations.is_empty() {
        return Err(ReductionError::InvalidTree(violations));
    }
    let mut next_order = vec![1usize; tree.len() + 1];
    let mut arcs = Vec::with_capacity(tree.len().saturating_sub(1));
    let mut visits = 0;
    for v in tree.root.postorder() {
        visits += 1;
        if v.is_preterminal() {
            continue;
        }
        let h = v.head;
        for u in &v.children {
            if u.head != h {
                arcs.push(Arc::new(h, u.head, v.label.clone(), next_order[h]));
            }
        }
        next_order[h] += 1;
    }
    Ok((
        HeadOrderedDTree::new(tree.sentence.clone(), tree.root.head, arcs),
        visits,
    ))
}

/// Per-head arcs, each list sorted by (order, modifier).
fn arcs_per_head(tree: &HeadOrderedDTree) -> Vec<Vec<&Arc>> {
    let mut per_head: Vec<Vec<&Arc>> = vec![Vec::new(); tree.len() + 1];
    for a in &tree.arcs {
        per_head[a.head].push(a);
    }
    for list in per_head.iter_mut() {
        list.sort_by_key(|a| (a.order, a.modifier));
    }
    per_head
}

fn check_structure(tree: &HeadOrderedDTree) -> Result<Vec<usize>, ReductionError> {
    let len = tree.len();
    let mut violations = Vec::new();
    if tree.arcs.iter().any(|a| a.head == 0 || a.head > len || a.modifier == 0 || a.modifier > len) {
        violations.push(Violation {
            location: "tree".into(),
            message: "arc position out of range".into(),
        });
    } else if tree.arcs.len() + 1 != len {
        violations.push(Violation {
            location: "tree".into(),
            message: format!("{} arcs for {} words", tree.arcs.len(), len),
        });
    }
    if violations.is_empty() {
        let heads = tree.heads();
        violations = check_heads(&heads);
        if violations.is_empty() && heads.get(tree.root.wrapping_sub(1)) != Some(&0) {
            violations.push(Violation {
                location: "tree".into(),
                message: format!("declared root {} has a head", tree.root),
            });
        }
        if violations.is_empty() {
            return Ok(heads);
        }
    }
    Err(ReductionError::InvalidTree(violations))
}

/// Converts a head-ordered dependency tree to a unaryless constituent tree.
///
/// Fails if the arcs do not form a single-rooted tree or if one attachment
/// event carries two different labels; run [`recover_order`] first on
/// predicted trees.
pub fn dtree_to_ctree(tree: &HeadOrderedDTree) -> Result<CTree, ReductionError> {
    dtree_to_ctree_counted(tree).map(|(c, _)| c)
}

/// Like [`dtree_to_ctree`], also returning the number of arcs and words
/// visited.
pub fn dtree_to_ctree_counted(tree: &HeadOrderedDTree) -> Result<(CTree, usize), ReductionError> {
    build_ctree(tree, None)
}

/// Inverse of the spine-carrying encoding: rebuilds the tree including
/// unary nodes. `spines[h - 1]` lists the proper labels on the spine of `h`,
/// top first. Spine levels at which no modifier attaches become unary
/// nodes; attachment indices beyond the spine fall back to plain classes.
pub fn dtree_to_ctree_with_spines(
    tree: &HeadOrderedDTree,
    spines: &[Vec<String>],
) -> Result<CTree, ReductionError> {
    build_ctree(tree, Some(spines)).map(|(c, _)| c)
}

fn build_ctree(
    tree: &HeadOrderedDTree,
    spines: Option<&[Vec<String>]>,
) -> Result<(CTree, usize), ReductionError> {
    let heads = check_structure(tree)?;
    let per_head = arcs_per_head(tree);
    let mut psi: Vec<Option<CNode>> = vec![None; tree.len() + 1];
    let mut visits = 0;
    for h in dependency_postorder(&heads) {
        visits += 1;
        let mut node = CNode::preterminal(tree.sentence.token(h).pos.clone(), h);
        let arcs = &per_head[h];
        let spine_bottom_up: Vec<&String> = spines
            .and_then(|s| s.get(h - 1))
            .map(|s| s.iter().rev().collect())
            .unwrap_or_default();
        let mut i = 0;
        let mut level = 1;
        while i < arcs.len() || level <= spine_bottom_up.len() {
            let order = arcs.get(i).map(|a| a.order);
            if level <= spine_bottom_up.len() && order.is_none_or(|o| o > level) {
                // Nothing attaches at this spine level: a unary node.
                node = CNode::proper(spine_bottom_up[level - 1].clone(), h, vec![node]);
                level += 1;
                continue;
            }
            let order = order.expect("loop condition");
            let mut end = i;
            while end < arcs.len() && arcs[end].order == order {
                end += 1;
            }
            let class = &arcs[i..end];
            let label = class[0].label.clone();
            if let Some(other) = class.iter().find(|a| a.label != label) {
                return Err(ReductionError::ClassLabelConflict {
                    head: h,
                    order,
                    first: label,
                    second: other.label.clone(),
                });
            }
            let mut children = Vec::with_capacity(class.len() + 1);
            children.push(node);
            for a in class {
                visits += 1;
                children.push(psi[a.modifier].take().expect("modifier built before its head"));
            }
            node = CNode::proper(label, h, children);
            i = end;
            if order >= level {
                level = order + 1;
            }
        }
        psi[h] = Some(node);
    }
    let root = psi[tree.root].take().expect("root built last");
    Ok((CTree::new(tree.sentence.clone(), root), visits))
}

/// Counts of corrections made by [`recover_order`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RepairStats {
    /// Modifiers whose index was lowered to restore nesting.
    pub index_repairs: usize,
    /// Modifiers relabeled to agree with their attachment event.
    pub label_repairs: usize,
}

impl RepairStats {
    pub fn tokens_repaired(&self) -> usize {
        self.index_repairs + self.label_repairs
    }
}

impl std::ops::AddAssign for RepairStats {
    fn add_assign(&mut self, o: Self) {
        self.index_repairs += o.index_repairs;
        self.label_repairs += o.label_repairs;
    }
}

/// Turns predicted `(label, index)` arcs into a well-formed head-ordered
/// tree.
///
/// With `continuous`, the index of a closer same-side modifier is lowered to
/// that of the next farther one whenever it is larger, so the result is
/// nested. Modifiers sharing an index then take the label of the one closest
/// to the head (the left one on a tie). Finally the indices of each head are
/// renumbered 1..J.
///
/// The arcs must already form a single-rooted spanning tree.
pub fn recover_order(tree: &HeadOrderedDTree, continuous: bool) -> (HeadOrderedDTree, RepairStats) {
    let mut stats = RepairStats::default();
    let mut arcs = tree.arcs.clone();
    arcs.sort_by_key(|a| (a.head, a.modifier));
    let mut start = 0;
    while start < arcs.len() {
        let h = arcs[start].head;
        let mut end = start;
        while end < arcs.len() && arcs[end].head == h {
            end += 1;
        }
        stats += repair_head(h, &mut arcs[start..end], continuous);
        start = end;
    }
    (HeadOrderedDTree::new(tree.sentence.clone(), tree.root, arcs), stats)
}

fn repair_head(h: usize, arcs: &mut [Arc], continuous: bool) -> RepairStats {
    let mut stats = RepairStats::default();
    if continuous {
        // `arcs` is sorted by modifier: left side closest-first is the
        // reversed prefix, right side closest-first is the suffix.
        let split = arcs.iter().position(|a| a.modifier > h).unwrap_or(arcs.len());
        let mut left: Vec<usize> = (0..split).rev().collect();
        let mut right: Vec<usize> = (split..arcs.len()).collect();
        for side in [&mut left, &mut right] {
            for k in (0..side.len().saturating_sub(1)).rev() {
                let (near, far) = (side[k], side[k + 1]);
                if arcs[near].order > arcs[far].order {
                    arcs[near].order = arcs[far].order;
                    stats.index_repairs += 1;
                }
            }
        }
    }
    let mut orders: Vec<usize> = arcs.iter().map(|a| a.order).collect();
    orders.sort_unstable();
    orders.dedup();
    for &o in &orders {
        let winner = arcs
            .iter()
            .filter(|a| a.order == o)
            .min_by_key(|a| (a.modifier.abs_diff(h), a.modifier))
            .map(|a| a.label.clone())
            .expect("class is non-empty");
        for a in arcs.iter_mut().filter(|a| a.order == o) {
            if a.label != winner {
                a.label = winner.clone();
                stats.label_repairs += 1;
            }
        }
    }
    for a in arcs.iter_mut() {
        a.order = orders.binary_search(&a.order).expect("order present") + 1;
    }
    stats
}

/// Outcome of checking the conversion properties on one tree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundtripReport {
    /// Converting to dependencies and back gives the unaryless input.
    pub roundtrip: bool,
    pub continuous: bool,
    pub projective: bool,
    pub nested: bool,
    /// `continuous == (projective && nested)`.
    pub equivalence: bool,
    pub binary: bool,
    pub strictly_ordered: bool,
    /// The proper labels of the unaryless input equal the class labels.
    pub labels_preserved: bool,
    pub error: Option<String>,
}

impl RoundtripReport {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.roundtrip
            && self.equivalence
            && (!self.binary || self.strictly_ordered)
            && self.labels_preserved
    }
}

impl fmt::Display for RoundtripReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = &self.error {
            return write!(f, "error: {}", e);
        }
        write!(
            f,
            "roundtrip={} continuous={} projective={} nested={} equivalence={} binary={} strict={} labels={}",
            self.roundtrip,
            self.continuous,
            self.projective,
            self.nested,
            self.equivalence,
            self.binary,
            self.strictly_ordered,
            self.labels_preserved
        )
    }
}

/// Class labels of a head-ordered tree, one per attachment event, sorted.
pub fn class_labels(tree: &HeadOrderedDTree) -> Vec<String> {
    let mut labels: Vec<String> = tree
        .arcs_by_head().into_values().flat_map(|arcs| {
            let mut seen: Vec<(usize, String)> = arcs.iter().map(|a| (a.order, a.label.clone())).collect();
            seen.sort();
            seen.dedup_by_key(|(o, _)| *o);
            seen.into_iter().map(|(_, l)| l)
        })
        .collect();
    labels.sort();
    labels
}

pub fn roundtrip_check(tree: &CTree) -> RoundtripReport {
    let mut report = RoundtripReport::default();
    let stripped = tree.strip_unaries();
    let mut run = || -> Result<(), ReductionError> {
        let d = ctree_to_dtree(tree)?;
        let back = dtree_to_ctree(&d)?;
        report.roundtrip = back == stripped;
        let ds = ctree_to_dtree(&stripped)?;
        report.continuous = tree.is_continuous();
        report.projective = ds.is_projective();
        report.nested = ds.is_nested();
        report.equivalence = report.continuous == (report.projective && report.nested);
        report.binary = stripped.is_binary();
        report.strictly_ordered = ds.is_strictly_ordered();
        report.labels_preserved = stripped.proper_labels() == class_labels(&d);
        Ok(())
    };
    if let Err(e) = run() {
        report.error = Some(e.to_string());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::trees::Sentence;

    fn arcs(t: &HeadOrderedDTree) -> Vec<(usize, usize, String, usize)> {
        t.arcs
            .iter()
            .map(|a| (a.head, a.modifier, a.label.clone(), a.order))
            .collect()
    }

    #[test]
    fn english_example_converts_to_printed_arcs() {
        let d = ctree_to_dtree(&fixtures::english()).unwrap();
        assert_eq!(d, fixtures::english_dtree());
        assert_eq!(d.root, 3);
    }

    #[test]
    fn german_example_converts_to_printed_arcs() {
        let d = ctree_to_dtree(&fixtures::german()).unwrap();
        assert_eq!(d, fixtures::german_dtree());
    }

    #[test]
    fn figure_two_bracketings_differ_in_order() {
        let [flat, right, left] = fixtures::really_needs_caution();
        let d = ctree_to_dtree(&flat).unwrap();
        assert_eq!(arcs(&d), vec![(2, 1, "VP".into(), 1), (2, 3, "VP".into(), 1)]);
        let d = ctree_to_dtree(&right).unwrap();
        assert_eq!(arcs(&d), vec![(2, 1, "VP".into(), 2), (2, 3, "VP".into(), 1)]);
        let d = ctree_to_dtree(&left).unwrap();
        assert_eq!(arcs(&d), vec![(2, 1, "VP".into(), 1), (2, 3, "VP".into(), 2)]);
    }

    #[test]
    fn decoding_gives_unaryless_trees() {
        let back = dtree_to_ctree(&fixtures::english_dtree()).unwrap();
        assert_eq!(back, fixtures::english_unaryless());
        let back = dtree_to_ctree(&fixtures::german_dtree()).unwrap();
        assert_eq!(back, fixtures::german());
        assert_eq!(back.root.children[0].children[0].positions, vec![1, 3, 4]);
    }

    #[test]
    fn single_word_tree() {
        let d = HeadOrderedDTree::new(Sentence::from_pairs(vec![("w", "T")]), 1, vec![]);
        let c = dtree_to_ctree(&d).unwrap();
        assert_eq!(c.root, CNode::preterminal("T", 1));
    }

    #[test]
    fn label_conflicts_are_rejected() {
        let mut d = fixtures::english_dtree();
        d.arcs[3].label = "ADJP".into();
        assert!(matches!(
            dtree_to_ctree(&d),
            Err(ReductionError::ClassLabelConflict { head: 3, order: 1, .. })
        ));
    }

    #[test]
    fn cyclic_trees_are_rejected() {
        let mut d = fixtures::english_dtree();
        d.arcs[1].head = 1; // 1 -> 2 and 2 -> 1
        assert!(matches!(dtree_to_ctree(&d), Err(ReductionError::InvalidTree(_))));
    }

    fn five_words() -> Sentence {
        Sentence::from_pairs(vec![("a", "A"), ("b", "B"), ("c", "C"), ("d", "D"), ("e", "E")])
    }

    #[test]
    fn recover_order_takes_closest_label() {
        let t = HeadOrderedDTree::new(
            five_words(),
            3,
            vec![
                Arc::new(3, 1, "S", 2),
                Arc::new(3, 2, "S", 2),
                Arc::new(3, 4, "VP", 1),
                Arc::new(3, 5, "ADJP", 1),
            ],
        );
        let (r, stats) = recover_order(&t, false);
        assert_eq!(r.arcs[3].label, "VP");
        assert_eq!(r.arcs[2].label, "VP");
        assert_eq!(stats.label_repairs, 1);
        assert!(r.validate().is_empty());
    }

    #[test]
    fn recover_order_tie_prefers_left() {
        let t = HeadOrderedDTree::new(
            five_words(),
            3,
            vec![
                Arc::new(3, 1, "A", 2),
                Arc::new(3, 2, "L", 1),
                Arc::new(3, 4, "R", 1),
                Arc::new(3, 5, "B", 2),
            ],
        );
        let (r, _) = recover_order(&t, false);
        assert_eq!(r.arcs[1].label, "L");
        assert_eq!(r.arcs[2].label, "L");
        assert_eq!(r.arcs[0].label, "A");
        assert_eq!(r.arcs[3].label, "A");
    }

    #[test]
    fn recover_order_restores_nesting() {
        let t = HeadOrderedDTree::new(
            five_words(),
            3,
            vec![
                Arc::new(3, 1, "S", 3),
                Arc::new(3, 2, "S", 3),
                Arc::new(3, 4, "VP", 2),
                Arc::new(3, 5, "VP", 1),
            ],
        );
        assert!(!t.is_nested());
        let (r, stats) = recover_order(&t, true);
        assert!(r.is_nested());
        assert_eq!(stats.index_repairs, 1);
        assert_eq!(r.arcs[2].order, 1);
        assert_eq!(r.arcs[3].order, 1);
        assert_eq!(r.arcs[2].label, "VP");
        // compacted: S moves from 3 to 2
        assert_eq!(r.arcs[0].order, 2);
        let (again, s2) = recover_order(&r, true);
        assert_eq!(again, r);
        assert_eq!(s2, RepairStats::default());
    }

    #[test]
    fn recover_order_fixpoint_on_gold() {
        let gold = fixtures::english_dtree();
        let (r, stats) = recover_order(&gold, true);
        assert_eq!(r, gold);
        assert_eq!(stats.tokens_repaired(), 0);
    }

    #[test]
    fn roundtrip_reports() {
        let r = roundtrip_check(&fixtures::english());
        assert!(r.passed(), "{}", r);
        assert!(r.continuous && r.projective && r.nested);
        let r = roundtrip_check(&fixtures::german());
        assert!(r.passed(), "{}", r);
        assert!(!r.continuous && !r.projective && r.nested);
    }

    #[test]
    fn spines_restore_unaries() {
        let t = fixtures::english();
        let d = ctree_to_dtree(&t).unwrap();
        let spines: Vec<Vec<String>> = (1..=t.len())
            .map(|h| {
                t.spine(h)
                    .iter()
                    .filter(|n| !n.is_preterminal())
                    .map(|n| n.label.clone())
                    .collect()
            })
            .collect();
        assert_eq!(dtree_to_ctree_with_spines(&d, &spines).unwrap(), t);
    }

    #[test]
    fn conversions_visit_linearly_many_nodes() {
        let t = fixtures::english_unaryless();
        let (d, v1) = ctree_to_dtree_counted(&t).unwrap();
        let (_, v2) = dtree_to_ctree_counted(&d).unwrap();
        assert!(v1 <= 2 * t.len());
        assert!(v2 <= 2 * t.len());
    }
}
