//! Second stage of labeled parsing: given an unlabeled tree, predict the
//! encoded label of every arc.
//!
//! The modifiers of each head, in sentence order, form a chain; a first-order
//! sequence model over that chain is decoded exactly with Viterbi, one head
//! at a time. The root word is the single modifier of the virtual head 0, so
//! its label (the root label of the encoding) is predicted the same way.
//!
//! Unary scores use the parser's arc templates conjoined with the label.
//! Pairwise scores between consecutive modifiers `m < m'` use the POS
//! triplet `<p_h, p_m, p_m'>` and its three variants with one POS replaced by
//! the word form, conjoined with the label pair.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::EncodedDTree;
use crate::model::{conjoin, epoch_order, feature_id, LinearModel, Perceptron, Weights};
use crate::parser::featurize_arc;
use crate::trees::{DepTree, Sentence};

#[derive(Debug, Error)]
pub enum LabelerError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("tree {index}: {message}")]
    InvalidTree { index: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelerModel {
    /// Encoded labels, sorted; ties are broken towards the smaller index.
    pub alphabet: Vec<String>,
    /// Labels seen per `(head POS, direction)`, used when pruning is on.
    pub observed: BTreeMap<String, Vec<u32>>,
    pub prune: bool,
    pub model: LinearModel,
}

fn pos_of(sentence: &Sentence, i: usize) -> (&str, &str) {
    if i == 0 {
        ("<ROOT>", "<ROOT>")
    } else {
        let t = sentence.token(i);
        (t.form.as_str(), t.pos.as_str())
    }
}

/// The four pairwise feature ids of consecutive modifiers `m < m2` of `h`.
pub fn featurize_pairwise(sentence: &Sentence, h: usize, m: usize, m2: usize) -> Vec<u32> {
    let (hw, hp) = pos_of(sentence, h);
    let (mw, mp) = pos_of(sentence, m);
    let (m2w, m2p) = pos_of(sentence, m2);
    vec![
        feature_id(&["p1", hp, mp, m2p]),
        feature_id(&["p2", hw, mp, m2p]),
        feature_id(&["p3", hp, mw, m2p]),
        feature_id(&["p4", hp, mp, m2w]),
    ]
}

fn prune_key(sentence: &Sentence, h: usize, m: usize) -> String {
    let dir = if h < m { "R" } else { "L" };
    format!("{}\u{1F}{}", pos_of(sentence, h).1, dir)
}

/// Exact argmax of `sum unary[i][y_i] + sum pair[i][y_{i-1}][y_i]` over label
/// sequences with `y_i` drawn from `cands[i]`. `pair[0]` is ignored. Ties
/// prefer earlier candidates.
pub fn viterbi(
    cands: &[Vec<usize>],
    unary: impl Fn(usize, usize) -> f64,
    pair: impl Fn(usize, usize, usize) -> f64,
) -> Vec<usize> {
    let n = cands.len();
    if n == 0 {
        return Vec::new();
    }
    let mut score: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n);
    score.push(cands[0].iter().map(|&y| unary(0, y)).collect());
    back.push(vec![0; cands[0].len()]);
    for i in 1..n {
        let mut row = Vec::with_capacity(cands[i].len());
        let mut brow = Vec::with_capacity(cands[i].len());
        for &y in &cands[i] {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for (k, &yp) in cands[i - 1].iter().enumerate() {
                let v = score[i - 1][k] + pair(i, yp, y);
                if v > best {
                    best = v;
                    arg = k;
                }
            }
            row.push(best + unary(i, y));
            brow.push(arg);
        }
        score.push(row);
        back.push(brow);
    }
    let mut k = 0;
    for (j, &v) in score[n - 1].iter().enumerate() {
        if v > score[n - 1][k] {
            k = j;
        }
    }
    let mut out = vec![0; n];
    for i in (0..n).rev() {
        out[i] = cands[i][k];
        k = back[i][k];
    }
    out
}

/// Modifier chains: `(h, modifiers ascending)` for every head with
/// modifiers, plus `(0, [root])`.
fn chains(heads: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let mut by_head: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &h) in heads.iter().enumerate() {
        by_head.entry(h).or_default().push(i + 1);
    }
    by_head.into_iter().collect()
}

struct Chain {
    h: usize,
    ms: Vec<usize>,
    arc: Vec<Vec<u32>>,
    pairs: Vec<Vec<u32>>, // pairs[i] links ms[i-1] and ms[i]; pairs[0] empty
}

impl Chain {
    fn new(sentence: &Sentence, h: usize, ms: Vec<usize>) -> Self {
        let arc = ms.iter().map(|&m| featurize_arc(sentence, h, m)).collect();
        let mut pairs = vec![Vec::new()];
        for w in ms.windows(2) {
            pairs.push(featurize_pairwise(sentence, h, w[0], w[1]));
        }
        Chain { h, ms, arc, pairs }
    }

    fn decode(&self, w: &impl Weights, cands: &[Vec<usize>], k: usize) -> Vec<usize> {
        viterbi(
            cands,
            |i, y| w.sum_class(&self.arc[i], y as u32),
            |i, yp, y| w.sum_class(&self.pairs[i], (yp * k + y) as u32),
        )
    }

    fn update(&self, p: &mut Perceptron, labels: &[usize], k: usize, delta: f64) {
        for (i, &y) in labels.iter().enumerate() {
            p.update(self.arc[i].iter().map(|&f| conjoin(f, y as u32)), delta);
            if i > 0 {
                let c = (labels[i - 1] * k + y) as u32;
                p.update(self.pairs[i].iter().map(|&f| conjoin(f, c)), delta);
            }
        }
    }
}

impl LabelerModel {
    fn candidates(&self, sentence: &Sentence, h: usize, ms: &[usize]) -> Vec<Vec<usize>> {
        let all: Vec<usize> = (0..self.alphabet.len()).collect();
        ms.iter()
            .map(|&m| {
                if !self.prune {
                    return all.clone();
                }
                match self.observed.get(&prune_key(sentence, h, m)) {
                    Some(v) if !v.is_empty() => v.iter().map(|&y| y as usize).collect(),
                    _ => all.clone(),
                }
            })
            .collect()
    }
}

/// Labels every arc of `tree` (and the root word) with `model`.
pub fn label_tree(sentence: &Sentence, tree: &DepTree, model: &LabelerModel) -> EncodedDTree {
    let k = model.alphabet.len().max(1);
    let mut labels = vec![String::new(); tree.len()];
    for (h, ms) in chains(&tree.heads) {
        let chain = Chain::new(sentence, h, ms);
        let cands = model.candidates(sentence, h, &chain.ms);
        let ys = chain.decode(&model.model, &cands, k);
        for (&m, y) in chain.ms.iter().zip(ys) {
            labels[m - 1] = model.alphabet.get(y).cloned().unwrap_or_default();
        }
    }
    EncodedDTree::from_heads(sentence.clone(), &tree.heads, &labels)
}

/// Averaged perceptron over modifier chains with the gold tree fixed.
pub fn train_labeler(corpus: &[EncodedDTree], epochs: usize, seed: u64, prune: bool) -> Result<LabelerModel, LabelerError> {
    if corpus.is_empty() {
        return Err(LabelerError::EmptyCorpus);
    }
    let mut names = BTreeSet::new();
    for (index, t) in corpus.iter().enumerate() {
        let v = t.unlabeled().validate();
        if !v.is_empty() || t.root == 0 {
            let message = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
            return Err(LabelerError::InvalidTree { index, message });
        }
        names.extend(t.labels());
    }
    let alphabet: Vec<String> = names.into_iter().collect();
    let index: BTreeMap<&str, usize> = alphabet.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let k = alphabet.len();

    let mut observed: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    let mut gold: Vec<Vec<(Chain, Vec<usize>)>> = Vec::with_capacity(corpus.len());
    for t in corpus {
        let heads = t.heads();
        let labels = t.labels();
        let mut cs = Vec::new();
        for (h, ms) in chains(&heads) {
            let ys: Vec<usize> = ms.iter().map(|&m| index[labels[m - 1].as_str()]).collect();
            for (&m, &y) in ms.iter().zip(&ys) {
                observed.entry(prune_key(&t.sentence, h, m)).or_default().insert(y as u32);
            }
            cs.push((Chain::new(&t.sentence, h, ms), ys));
        }
        gold.push(cs);
    }
    let mut model = LabelerModel {
        alphabet,
        observed: observed.into_iter().map(|(key, v)| (key, v.into_iter().collect())).collect(),
        prune,
        model: LinearModel::default(),
    };

    let mut p = Perceptron::new();
    for epoch in 0..epochs {
        for i in epoch_order(corpus.len(), seed, epoch) {
            for (chain, ys) in &gold[i] {
                let cands = model.candidates(&corpus[i].sentence, chain.h, &chain.ms);
                let pred = chain.decode(&p, &cands, k);
                if &pred != ys {
                    chain.update(&mut p, ys, k, 1.0);
                    chain.update(&mut p, &pred, k, -1.0);
                }
            }
            p.tick();
        }
    }
    let meta = BTreeMap::from([
        ("kind".to_string(), "labeler".to_string()),
        ("epochs".to_string(), epochs.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("collisions".to_string(), "accepted".to_string()),
    ]);
    model.model = p.finish(model.alphabet.clone(), meta);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{encode_ctree, encode_direct, Scheme};
    use crate::fixtures;
    use crate::model::feature_id;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pairwise_templates_of_english_example() {
        let s = fixtures::english_sentence();
        let f = featurize_pairwise(&s, 3, 2, 4);
        assert_eq!(f.len(), 4);
        assert_eq!(f[0], feature_id(&["p1", "VBZ", "NN", "RB"]));
        assert_eq!(f[1], feature_id(&["p2", "is", "NN", "RB"]));
        assert_eq!(f[2], feature_id(&["p3", "VBZ", "public", "RB"]));
        assert_eq!(f[3], feature_id(&["p4", "VBZ", "NN", "still"]));
        assert_eq!(f, featurize_pairwise(&s, 3, 2, 4));
    }

    fn brute(cands: &[Vec<usize>], unary: &dyn Fn(usize, usize) -> f64, pair: &dyn Fn(usize, usize, usize) -> f64) -> f64 {
        fn go(i: usize, prev: Option<usize>, acc: f64, c: &[Vec<usize>], u: &dyn Fn(usize, usize) -> f64, p: &dyn Fn(usize, usize, usize) -> f64) -> f64 {
            if i == c.len() {
                return acc;
            }
            c[i].iter()
                .map(|&y| {
                    let s = u(i, y) + prev.map_or(0.0, |yp| p(i, yp, y));
                    go(i + 1, Some(y), acc + s, c, u, p)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        }
        go(0, None, 0.0, cands, unary, pair)
    }

    fn path_score(ys: &[usize], unary: &dyn Fn(usize, usize) -> f64, pair: &dyn Fn(usize, usize, usize) -> f64) -> f64 {
        ys.iter()
            .enumerate()
            .map(|(i, &y)| unary(i, y) + if i > 0 { pair(i, ys[i - 1], y) } else { 0.0 })
            .sum()
    }

    #[test]
    fn viterbi_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n = rng.random_range(1..=4);
            let k = rng.random_range(1..=5);
            let u: Vec<Vec<f64>> = (0..n).map(|_| (0..k).map(|_| rng.random_range(-4..=4) as f64).collect()).collect();
            let p: Vec<Vec<Vec<f64>>> = (0..n)
                .map(|_| (0..k).map(|_| (0..k).map(|_| rng.random_range(-4..=4) as f64).collect()).collect())
                .collect();
            let cands = vec![(0..k).collect::<Vec<_>>(); n];
            let uf = |i: usize, y: usize| u[i][y];
            let pf = |i: usize, a: usize, b: usize| p[i][a][b];
            let ys = viterbi(&cands, uf, pf);
            assert_eq!(path_score(&ys, &uf, &pf), brute(&cands, &uf, &pf));
        }
    }

    /// Pseudo-random weights keyed by feature id.
    struct Hashed(u64);

    impl Weights for Hashed {
        fn weight(&self, id: u32) -> f64 {
            let mut z = (id as u64 ^ self.0).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            z ^= z >> 29;
            (z % 9) as f64 - 4.0
        }
    }

    #[test]
    fn chain_decoding_with_model_weights_is_exact() {
        let s = Sentence::from_pairs(vec![("a", "A"), ("b", "B"), ("c", "C"), ("d", "D"), ("e", "E")]);
        for seed in 0..200u64 {
            let w = Hashed(seed);
            let k = 1 + (seed % 5) as usize;
            let ms: Vec<usize> = [1, 2, 4, 5][..1 + (seed % 4) as usize].to_vec();
            let chain = Chain::new(&s, 3, ms.clone());
            let cands = vec![(0..k).collect::<Vec<_>>(); ms.len()];
            let ys = chain.decode(&w, &cands, k);
            let uf = |i: usize, y: usize| w.sum_class(&chain.arc[i], y as u32);
            let pf = |i: usize, a: usize, b: usize| w.sum_class(&chain.pairs[i], (a * k + b) as u32);
            assert_eq!(path_score(&ys, &uf, &pf), brute(&cands, &uf, &pf));
        }
    }

    #[test]
    fn memorizes_one_tree() {
        for scheme in [Scheme::Direct, Scheme::Delta, Scheme::Hn] {
            let e = encode_ctree(&fixtures::english(), scheme).unwrap();
            let m = train_labeler(std::slice::from_ref(&e), 5, 1, false).unwrap();
            assert_eq!(label_tree(&e.sentence, &e.unlabeled(), &m), e, "{}", scheme);
        }
    }

    #[test]
    fn zero_epochs_give_first_label() {
        let e = encode_direct(&fixtures::english_dtree());
        let m = train_labeler(std::slice::from_ref(&e), 0, 1, false).unwrap();
        let out = label_tree(&e.sentence, &e.unlabeled(), &m);
        assert!(out.labels().iter().all(|l| l == &m.alphabet[0]));
    }

    #[test]
    fn training_is_deterministic_and_heads_are_independent() {
        let corpus = vec![
            encode_direct(&fixtures::english_dtree()),
            encode_direct(&fixtures::german_dtree()),
        ];
        let a = train_labeler(&corpus, 3, 4, true).unwrap();
        let b = train_labeler(&corpus, 3, 4, true).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        // Moving one modifier to another head leaves other chains alone.
        let t = corpus[0].unlabeled();
        let base = label_tree(&corpus[0].sentence, &t, &a);
        let mut moved = t.clone();
        moved.heads[0] = 3; // "The" now hangs from "is"
        let other = label_tree(&corpus[0].sentence, &moved, &a);
        assert_eq!(base.labels()[2], other.labels()[2]); // root chain untouched
        assert!(train_labeler(&[], 1, 1, false).is_err());
    }
}
