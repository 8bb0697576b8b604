//! A small arc-factored dependency parser: first-order features, averaged
//! perceptron training, Eisner decoding for projective trees and
//! Chu-Liu-Edmonds for non-projective ones. Both decoders return trees with
//! exactly one root word.
//!
//! # Arc features
//!
//! For an arc `h -> m` (`h = 0` is the artificial root, whose form and POS are
//! `<ROOT>`; positions outside the sentence read `<BOS>`/`<EOS>`), with `w`
//! the form and `p` the POS:
//!
//! | template | parts |
//! |---|---|
//! | `a01`..`a03` | `hw hp`, `hw`, `hp` |
//! | `a04`..`a06` | `mw mp`, `mw`, `mp` |
//! | `a07`..`a13` | `hw hp mw mp`, `hp mw mp`, `hw mw mp`, `hw hp mp`, `hw hp mw`, `hw mw`, `hp mp` |
//! | `a14`..`a17` | `hp p(h+1) p(m-1) mp`, `p(h-1) hp p(m-1) mp`, `hp p(h+1) mp p(m+1)`, `p(h-1) hp mp p(m+1)` |
//! | `a18` | `hp`, the sorted set of POS strictly between `h` and `m`, `mp` |
//!
//! Every template is emitted twice: alone, and with the direction (`L`/`R`)
//! and binned distance (1, 2, 3, 4, 5, 6-10, 11+) appended. Two bias
//! features (plain and with direction and distance) complete the list, so
//! every arc has [`ARC_FEATURES`] features.

use std::collections::BTreeSet;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{epoch_order, feature_id, LinearModel, Perceptron, Weights};
use crate::trees::{DepTree, Sentence};

pub const ARC_TEMPLATES: usize = 18;
pub const ARC_FEATURES: usize = 2 * ARC_TEMPLATES + 2;

const ROOT: &str = "<ROOT>";
const BOS: &str = "<BOS>";
const EOS: &str = "<EOS>";

#[derive(Debug, Error)]
pub enum ParserError {
    #[error("empty treebank")]
    EmptyTreebank,
    #[error("sentence {index}: {sentence} tokens but the tree has {tree} heads")]
    LengthMismatch { index: usize, sentence: usize, tree: usize },
    #[error("sentence {index}: invalid tree: {message}")]
    InvalidTree { index: usize, message: String },
}

fn dist_bin(d: usize) -> &'static str {
    match d {
        0 | 1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        5 => "5",
        6..=10 => "6-10",
        _ => "11+",
    }
}

fn word(sentence: &Sentence, i: isize) -> (&str, &str) {
    if i == 0 {
        (ROOT, ROOT)
    } else if i < 0 {
        (BOS, BOS)
    } else if i as usize > sentence.len() {
        (EOS, EOS)
    } else {
        let t = sentence.token(i as usize);
        (t.form.as_str(), t.pos.as_str())
    }
}

/// Feature ids of the arc `h -> m`; see the module docs for the templates.
pub fn featurize_arc(sentence: &Sentence, h: usize, m: usize) -> Vec<u32> {
    let (hi, mi) = (h as isize, m as isize);
    let (hw, hp) = word(sentence, hi);
    let (mw, mp) = word(sentence, mi);
    let hp_l = word(sentence, hi - 1).1;
    let hp_r = word(sentence, hi + 1).1;
    let mp_l = word(sentence, mi - 1).1;
    let mp_r = word(sentence, mi + 1).1;
    let (lo, hi_pos) = (h.min(m), h.max(m));
    let between: BTreeSet<&str> = (lo + 1..hi_pos).map(|i| sentence.token(i).pos.as_str()).collect();
    let between = between.into_iter().collect::<Vec<_>>().join(" ");
    let dir = if h < m { "R" } else { "L" };
    let dd = format!("{}{}", dir, dist_bin(h.abs_diff(m)));

    let templates: [(&str, &[&str]); ARC_TEMPLATES] = [
        ("a01", &[hw, hp]),
        ("a02", &[hw]),
        ("a03", &[hp]),
        ("a04", &[mw, mp]),
        ("a05", &[mw]),
        ("a06", &[mp]),
        ("a07", &[hw, hp, mw, mp]),
        ("a08", &[hp, mw, mp]),
        ("a09", &[hw, mw, mp]),
        ("a10", &[hw, hp, mp]),
        ("a11", &[hw, hp, mw]),
        ("a12", &[hw, mw]),
        ("a13", &[hp, mp]),
        ("a14", &[hp, hp_r, mp_l, mp]),
        ("a15", &[hp_l, hp, mp_l, mp]),
        ("a16", &[hp, hp_r, mp, mp_r]),
        ("a17", &[hp_l, hp, mp, mp_r]),
        ("a18", &[hp, &between, mp]),
    ];
    let mut out = Vec::with_capacity(ARC_FEATURES);
    let mut parts: Vec<&str> = Vec::with_capacity(6);
    for (name, values) in templates {
        parts.clear();
        parts.push(name);
        parts.extend_from_slice(values);
        out.push(feature_id(&parts));
        parts.push(&dd);
        out.push(feature_id(&parts));
    }
    out.push(feature_id(&["bias"]));
    out.push(feature_id(&["bias", &dd]));
    out
}

/// Arc scores `s[h][m]` for `h` in `0..=n` and `m` in `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    s: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(n: usize) -> Self {
        ScoreMatrix {
            n,
            s: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = ScoreMatrix::zeros(n);
        for h in 0..=n {
            for d in 1..=n {
                if h != d {
                    m.set(h, d, f(h, d));
                }
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, h: usize, m: usize) -> f64 {
        self.s[h * (self.n + 1) + m]
    }

    pub fn set(&mut self, h: usize, m: usize, v: f64) {
        assert!(v.is_finite(), "scores must be finite");
        self.s[h * (self.n + 1) + m] = v;
    }

    pub fn tree_score(&self, tree: &DepTree) -> f64 {
        tree.heads.iter().enumerate().map(|(i, &h)| self.get(h, i + 1)).sum()
    }
}

pub fn score_matrix(sentence: &Sentence, weights: &impl Weights) -> ScoreMatrix {
    ScoreMatrix::from_fn(sentence.len(), |h, m| weights.sum(&featurize_arc(sentence, h, m)))
}

#[derive(Clone, Copy)]
enum Span {
    RightComplete(usize, usize),
    LeftComplete(usize, usize),
    RightIncomplete(usize, usize),
    LeftIncomplete(usize, usize),
}

/// Best projective tree with a single root word (Eisner's algorithm).
/// Ties go to the first maximum in scan order (smaller split points and
/// smaller root positions first).
pub fn decode_projective(scores: &ScoreMatrix) -> DepTree {
    let n = scores.len();
    if n == 0 {
        return DepTree::new(Vec::new());
    }
    let w = n + 1;
    let at = |i: usize, j: usize| i * w + j;
    let neg = f64::NEG_INFINITY;
    let mut cr = vec![neg; w * w];
    let mut cl = vec![neg; w * w];
    let mut ir = vec![neg; w * w];
    let mut il = vec![neg; w * w];
    let mut bcr = vec![0; w * w];
    let mut bcl = vec![0; w * w];
    let mut bi = vec![0; w * w];
    for i in 1..=n {
        cr[at(i, i)] = 0.0;
        cl[at(i, i)] = 0.0;
    }
    for len in 1..n {
        for i in 1..=n - len {
            let j = i + len;
            let (mut best, mut bk) = (neg, i);
            for k in i..j {
                let v = cr[at(i, k)] + cl[at(k + 1, j)];
                if v > best {
                    best = v;
                    bk = k;
                }
            }
            ir[at(i, j)] = best + scores.get(i, j);
            il[at(i, j)] = best + scores.get(j, i);
            bi[at(i, j)] = bk;

            let (mut best, mut bk) = (neg, i + 1);
            for k in i + 1..=j {
                let v = ir[at(i, k)] + cr[at(k, j)];
                if v > best {
                    best = v;
                    bk = k;
                }
            }
            cr[at(i, j)] = best;
            bcr[at(i, j)] = bk;

            let (mut best, mut bk) = (neg, i);
            for k in i..j {
                let v = cl[at(i, k)] + il[at(k, j)];
                if v > best {
                    best = v;
                    bk = k;
                }
            }
            cl[at(i, j)] = best;
            bcl[at(i, j)] = bk;
        }
    }
    let (mut best, mut root) = (neg, 1);
    for r in 1..=n {
        let v = scores.get(0, r) + cl[at(1, r)] + cr[at(r, n)];
        if v > best {
            best = v;
            root = r;
        }
    }
    let mut heads = vec![0; n];
    let mut stack = vec![Span::LeftComplete(1, root), Span::RightComplete(root, n)];
    while let Some(span) = stack.pop() {
        match span {
            Span::RightComplete(i, j) if i < j => {
                let k = bcr[at(i, j)];
                stack.push(Span::RightIncomplete(i, k));
                stack.push(Span::RightComplete(k, j));
            }
            Span::LeftComplete(i, j) if i < j => {
                let k = bcl[at(i, j)];
                stack.push(Span::LeftComplete(i, k));
                stack.push(Span::LeftIncomplete(k, j));
            }
            Span::RightIncomplete(i, j) => {
                heads[j - 1] = i;
                let k = bi[at(i, j)];
                stack.push(Span::RightComplete(i, k));
                stack.push(Span::LeftComplete(k + 1, j));
            }
            Span::LeftIncomplete(i, j) => {
                heads[i - 1] = j;
                let k = bi[at(i, j)];
                stack.push(Span::RightComplete(i, k));
                stack.push(Span::LeftComplete(k + 1, j));
            }
            _ => {}
        }
    }
    DepTree::new(heads)
}

/// Maximum spanning arborescence of the dense graph `w` rooted at `root`
/// (Chu-Liu-Edmonds). `w[u][v]` is the weight of the edge `u -> v`;
/// `NEG_INFINITY` marks missing edges. Returns the parent of every node
/// (`root` maps to itself).
fn arborescence(w: &[Vec<f64>], root: usize) -> Vec<usize> {
    let n = w.len();
    let mut parent = vec![root; n];
    for v in 0..n {
        if v == root {
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        for u in 0..n {
            if u != v && w[u][v] > best {
                best = w[u][v];
                parent[v] = u;
            }
        }
    }
    let Some(cycle) = find_cycle(&parent, root) else {
        return parent;
    };
    let in_cycle: Vec<bool> = (0..n).map(|v| cycle.contains(&v)).collect();
    // Contract the cycle into one new node `c`.
    let mut map = vec![usize::MAX; n];
    let mut back = Vec::new();
    for v in 0..n {
        if !in_cycle[v] {
            map[v] = back.len();
            back.push(v);
        }
    }
    let c = back.len();
    let m = c + 1;
    let neg = f64::NEG_INFINITY;
    let mut w2 = vec![vec![neg; m]; m];
    let mut enter = vec![usize::MAX; m]; // cycle node entered from each outside node
    let mut leave = vec![usize::MAX; m]; // cycle node leaving towards each outside node
    for u in 0..n {
        for v in 0..n {
            if u == v || w[u][v] == neg {
                continue;
            }
            match (in_cycle[u], in_cycle[v]) {
                (false, false) => w2[map[u]][map[v]] = w[u][v],
                (false, true) => {
                    let gain = w[u][v] - w[parent[v]][v];
                    if gain > w2[map[u]][c] {
                        w2[map[u]][c] = gain;
                        enter[map[u]] = v;
                    }
                }
                (true, false) => {
                    if w[u][v] > w2[c][map[v]] {
                        w2[c][map[v]] = w[u][v];
                        leave[map[v]] = u;
                    }
                }
                (true, true) => {}
            }
        }
    }
    let sub = arborescence(&w2, map[root]);
    let mut out = parent.clone();
    for (v2, &u2) in sub.iter().enumerate() {
        if v2 == map[root] {
            continue;
        }
        if v2 == c {
            let v = enter[u2];
            out[v] = back[u2];
        } else if u2 == c {
            out[back[v2]] = leave[v2];
        } else {
            out[back[v2]] = back[u2];
        }
    }
    out
}

fn find_cycle(parent: &[usize], root: usize) -> Option<Vec<usize>> {
    let n = parent.len();
    let mut state = vec![0u8; n]; // 0 new, 1 on current path, 2 done
    for start in 0..n {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 && v != root {
            state[v] = 1;
            path.push(v);
            v = parent[v];
        }
        if v != root && state[v] == 1 {
            let pos = path.iter().position(|&x| x == v).unwrap();
            return Some(path[pos..].to_vec());
        }
        for x in path {
            state[x] = 2;
        }
    }
    None
}

/// Best dependency tree with a single root word, projective or not.
/// Each word is tried as the root; ties go to the leftmost root.
pub fn decode_nonprojective(scores: &ScoreMatrix) -> DepTree {
    let n = scores.len();
    if n == 0 {
        return DepTree::new(Vec::new());
    }
    let neg = f64::NEG_INFINITY;
    // nodes 0..n are words 1..=n
    let mut w = vec![vec![neg; n]; n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                w[u][v] = scores.get(u + 1, v + 1);
            }
        }
    }
    let mut best: Option<(f64, DepTree)> = None;
    for r in 0..n {
        let parent = arborescence(&w, r);
        let heads: Vec<usize> = (0..n).map(|v| if v == r { 0 } else { parent[v] + 1 }).collect();
        let tree = DepTree::new(heads);
        let total = scores.tree_score(&tree);
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, tree));
        }
    }
    best.unwrap().1
}

pub fn decode(scores: &ScoreMatrix, projective: bool) -> DepTree {
    if projective {
        decode_projective(scores)
    } else {
        decode_nonprojective(scores)
    }
}

pub fn parse(sentence: &Sentence, model: &LinearModel, projective: bool) -> DepTree {
    decode(&score_matrix(sentence, model), projective)
}

/// Averaged structured perceptron over whole trees. Sentences are visited in
/// a fresh seeded shuffle every epoch.
pub fn train_unlabeled(
    treebank: &[(Sentence, DepTree)],
    epochs: usize,
    seed: u64,
    projective: bool,
) -> Result<LinearModel, ParserError> {
    if treebank.is_empty() {
        return Err(ParserError::EmptyTreebank);
    }
    for (index, (s, t)) in treebank.iter().enumerate() {
        if s.len() != t.len() {
            return Err(ParserError::LengthMismatch {
                index,
                sentence: s.len(),
                tree: t.len(),
            });
        }
        let v = t.validate();
        if !v.is_empty() {
            let message = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
            return Err(ParserError::InvalidTree { index, message });
        }
    }
    let mut p = Perceptron::new();
    for epoch in 0..epochs {
        for i in epoch_order(treebank.len(), seed, epoch) {
            let (sentence, gold) = &treebank[i];
            let pred = decode(&score_matrix(sentence, &p), projective);
            for m in 1..=sentence.len() {
                let (g, q) = (gold.head(m), pred.head(m));
                if g != q {
                    p.update(featurize_arc(sentence, g, m), 1.0);
                    p.update(featurize_arc(sentence, q, m), -1.0);
                }
            }
            p.tick();
        }
    }
    let meta = BTreeMap::from([
        ("kind".to_string(), "parser".to_string()),
        ("epochs".to_string(), epochs.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("projective".to_string(), projective.to_string()),
        ("arc_features".to_string(), ARC_FEATURES.to_string()),
        ("collisions".to_string(), "accepted".to_string()),
    ]);
    Ok(p.finish(Vec::new(), meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::trees::{check_heads, is_projective};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Every head vector with exactly one root word and no cycle.
    fn all_trees(n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut heads = vec![0; n];
        loop {
            if check_heads(&heads).is_empty() {
                out.push(heads.clone());
            }
            let mut i = 0;
            loop {
                if i == n {
                    return out;
                }
                heads[i] += 1;
                if heads[i] <= n {
                    break;
                }
                heads[i] = 0;
                i += 1;
            }
        }
    }

    fn brute_best(s: &ScoreMatrix, projective: bool) -> f64 {
        all_trees(s.len())
            .into_iter()
            .filter(|h| !projective || is_projective(h))
            .map(|h| s.tree_score(&DepTree::new(h)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ScoreMatrix {
        ScoreMatrix::from_fn(n, |_, _| rng.random_range(-5..=5) as f64)
    }

    #[test]
    fn tree_counts() {
        // Cayley: n^(n-1) rooted trees on n labelled words.
        assert_eq!(all_trees(3).len(), 9);
        assert_eq!(all_trees(4).len(), 64);
        // single-root projective trees: 1, 2, 7, 30
        let proj = |n| all_trees(n).into_iter().filter(|h| is_projective(h)).count();
        assert_eq!([proj(1), proj(2), proj(3), proj(4)], [1, 2, 7, 30]);
    }

    #[test]
    fn two_word_example() {
        let mut s = ScoreMatrix::zeros(2);
        s.set(1, 2, 1.0);
        assert_eq!(decode_projective(&s).heads, [0, 1]);
        assert_eq!(decode_nonprojective(&s).heads, [0, 1]);
        assert_eq!(decode_projective(&ScoreMatrix::zeros(1)).heads, [0]);
        assert_eq!(decode_nonprojective(&ScoreMatrix::zeros(1)).heads, [0]);
    }

    #[test]
    fn eisner_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..400 {
            let n = 1 + round % 5;
            let s = random_matrix(&mut rng, n);
            let t = decode_projective(&s);
            assert!(t.validate().is_empty());
            assert!(t.is_projective());
            assert_eq!(s.tree_score(&t), brute_best(&s, true), "{:?}", s);
        }
    }

    #[test]
    fn chu_liu_edmonds_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for round in 0..400 {
            let n = 1 + round % 5;
            let s = random_matrix(&mut rng, n);
            let t = decode_nonprojective(&s);
            assert!(t.validate().is_empty());
            assert_eq!(s.tree_score(&t), brute_best(&s, false), "{:?}", s);
        }
    }

    #[test]
    fn single_root_is_enforced() {
        // Unrestricted, both words would hang from the root.
        let mut s = ScoreMatrix::zeros(3);
        s.set(0, 1, 10.0);
        s.set(0, 3, 10.0);
        s.set(1, 2, 1.0);
        s.set(1, 3, -4.0);
        let t = decode_nonprojective(&s);
        assert_eq!(t.heads.iter().filter(|&&h| h == 0).count(), 1);
        assert_eq!(s.tree_score(&t), 11.0);
        assert_eq!(s.tree_score(&decode_projective(&s)), 11.0);
    }

    #[test]
    fn decoding_is_deterministic_under_ties() {
        let s = ScoreMatrix::zeros(5);
        assert_eq!(decode_projective(&s), decode_projective(&s));
        assert_eq!(decode_nonprojective(&s), decode_nonprojective(&s));
    }

    #[test]
    fn feature_counts_and_direction() {
        let e = fixtures::english_sentence();
        for h in 0..=6 {
            for m in 1..=6 {
                if h != m {
                    assert_eq!(featurize_arc(&e, h, m).len(), ARC_FEATURES);
                }
            }
        }
        assert_eq!(featurize_arc(&e, 3, 2), featurize_arc(&e, 3, 2));
        let flat = Sentence::from_pairs((0..8).map(|_| ("a", "P")));
        let (f, b) = (featurize_arc(&flat, 3, 5), featurize_arc(&flat, 5, 3));
        for i in 0..ARC_FEATURES {
            assert_eq!(f[i] == b[i], i % 2 == 0, "feature {}", i);
        }
    }

    #[test]
    fn memorizes_one_sentence() {
        let d = fixtures::english_dtree();
        let bank = vec![(d.sentence.clone(), d.unlabeled())];
        for projective in [true, false] {
            let m = train_unlabeled(&bank, 5, 1, projective).unwrap();
            assert_eq!(parse(&d.sentence, &m, projective), d.unlabeled());
        }
        let g = fixtures::german_dtree();
        let bank = vec![(g.sentence.clone(), g.unlabeled())];
        let m = train_unlabeled(&bank, 5, 1, false).unwrap();
        assert_eq!(parse(&g.sentence, &m, false), g.unlabeled());
    }

    #[test]
    fn zero_epochs_and_determinism() {
        let d = fixtures::english_dtree();
        let bank = vec![(d.sentence.clone(), d.unlabeled())];
        let m = train_unlabeled(&bank, 0, 1, true).unwrap();
        assert!(m.is_zero());
        let a = serde_json::to_string(&train_unlabeled(&bank, 3, 9, true).unwrap()).unwrap();
        let b = serde_json::to_string(&train_unlabeled(&bank, 3, 9, true).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(matches!(train_unlabeled(&[], 1, 1, true), Err(ParserError::EmptyTreebank)));
        let bad = vec![(d.sentence.clone(), DepTree::new(vec![0, 1]))];
        assert!(matches!(
            train_unlabeled(&bad, 1, 1, true),
            Err(ParserError::LengthMismatch { .. })
        ));
    }
}
