//! Small hand-built trees used in the documentation and tests.
//!
//! `english` is "The public is still cautious ." with unary ADVP/ADJP nodes;
//! `german` is the discontinuous "Es kam nichts Interessantes ." where the
//! outer NP covers positions {1, 3, 4}.

use crate::trees::{Arc, CNode, CTree, HeadOrderedDTree, Sentence};

fn pt(label: &str, position: usize) -> CNode {
    CNode::preterminal(label, position)
}

fn node(label: &str, head: usize, children: Vec<CNode>) -> CNode {
    CNode::proper(label, head, children)
}

pub fn english_sentence() -> Sentence {
    Sentence::from_pairs(vec![
        ("The", "DT"),
        ("public", "NN"),
        ("is", "VBZ"),
        ("still", "RB"),
        ("cautious", "JJ"),
        (".", "."),
    ])
}

pub fn english() -> CTree {
    let root = node(
        "S",
        3,
        vec![
            node("NP", 2, vec![pt("DT", 1), pt("NN", 2)]),
            node(
                "VP",
                3,
                vec![
                    pt("VBZ", 3),
                    node("ADVP", 4, vec![pt("RB", 4)]),
                    node("ADJP", 5, vec![pt("JJ", 5)]),
                ],
            ),
            pt(".", 6),
        ],
    );
    CTree::new(english_sentence(), root)
}

/// `english` with the unary ADVP and ADJP removed.
pub fn english_unaryless() -> CTree {
    let root = node(
        "S",
        3,
        vec![
            node("NP", 2, vec![pt("DT", 1), pt("NN", 2)]),
            node("VP", 3, vec![pt("VBZ", 3), pt("RB", 4), pt("JJ", 5)]),
            pt(".", 6),
        ],
    );
    CTree::new(english_sentence(), root)
}

pub fn english_dtree() -> HeadOrderedDTree {
    HeadOrderedDTree::new(
        english_sentence(),
        3,
        vec![
            Arc::new(2, 1, "NP", 1),
            Arc::new(3, 2, "S", 2),
            Arc::new(3, 4, "VP", 1),
            Arc::new(3, 5, "VP", 1),
            Arc::new(3, 6, "S", 2),
        ],
    )
}

pub fn german_sentence() -> Sentence {
    Sentence::from_pairs(vec![
        ("Es", "PPER"),
        ("kam", "VVFIN"),
        ("nichts", "PIAT"),
        ("Interessantes", "NN"),
        (".", "$."),
    ])
}

pub fn german() -> CTree {
    let np_inner = node("NP", 4, vec![pt("PIAT", 3), pt("NN", 4)]);
    let np = node("NP", 4, vec![pt("PPER", 1), np_inner]);
    let s = node("S", 2, vec![np, pt("VVFIN", 2)]);
    let root = node("VROOT", 2, vec![s, pt("$.", 5)]);
    CTree::new(german_sentence(), root)
}

/// The conversion of `german`. The VROOT node sits above S on the spine of
/// "kam", so its attachment is the second event of that word.
pub fn german_dtree() -> HeadOrderedDTree {
    HeadOrderedDTree::new(
        german_sentence(),
        2,
        vec![
            Arc::new(4, 1, "NP", 2),
            Arc::new(4, 3, "NP", 1),
            Arc::new(2, 4, "S", 1),
            Arc::new(2, 5, "VROOT", 2),
        ],
    )
}

/// The three bracketings of "really needs caution": flat, right-branching
/// and left-branching, all headed by "needs".
pub fn really_needs_caution() -> [CTree; 3] {
    let s = Sentence::from_pairs(vec![("really", "RB"), ("needs", "VBZ"), ("caution", "NN")]);
    let flat = node("VP", 2, vec![pt("RB", 1), pt("VBZ", 2), pt("NN", 3)]);
    let right = node("VP", 2, vec![pt("RB", 1), node("VP", 2, vec![pt("VBZ", 2), pt("NN", 3)])]);
    let left = node("VP", 2, vec![node("VP", 2, vec![pt("RB", 1), pt("VBZ", 2)]), pt("NN", 3)]);
    [
        CTree::new(s.clone(), flat),
        CTree::new(s.clone(), right),
        CTree::new(s, left),
    ]
}

/// `(label (pos form))`: one word under one unary node.
pub fn single(label: &str, pos: &str, form: &str) -> CTree {
    CTree::new(
        Sentence::from_pairs(vec![(form, pos)]),
        node(label, 1, vec![pt(pos, 1)]),
    )
}
