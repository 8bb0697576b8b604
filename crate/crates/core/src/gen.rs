//! Deterministic random trees and a small synthetic treebank.
//!
//! Randomness comes from ChaCha8 keyed by a 32-byte seed: the generator seed,
//! the item index and a stream tag as little-endian `u64`s, followed by zeros.
//! Integers in `0..n` are `(x * n) >> 64` for the next 64-bit output `x`, and
//! probabilities compare `x >> 11` scaled by `2^-53` against the threshold.
//! The same stream can be reproduced in any language with a ChaCha8
//! implementation.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::headrules::HeadRuleSet;
use crate::trees::{CNode, CTree, RawNode, RawTree, Sentence, Token};

pub const ENUM_LABEL: &str = "X";
pub const ENUM_POS: &str = "P";
pub const MAX_ENUM_BINARY: usize = 6;
pub const MAX_ENUM_GENERAL: usize = 5;

const TAG_TREE: u64 = 1;
const TAG_TOY: u64 = 2;

/// Seeded stream of draws.
pub struct Draws(ChaCha8Rng);

impl Draws {
    pub fn new(seed: u64, index: u64, tag: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&index.to_le_bytes());
        key[16..24].copy_from_slice(&tag.to_le_bytes());
        Draws(ChaCha8Rng::from_seed(key))
    }

    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "empty range");
        ((self.0.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        ((self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64) < p
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_len: usize,
    pub labels: usize,
    pub pos_tags: usize,
    /// Largest number of children of a proper node (at least 2).
    pub max_branching: usize,
    pub discontinuity: f64,
    pub binary: bool,
    pub unary: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 1,
            max_len: 8,
            labels: 3,
            pos_tags: 3,
            max_branching: 4,
            discontinuity: 0.0,
            binary: false,
            unary: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("enumeration is limited to {max} words (asked for {len})")]
    TooLong { len: usize, max: usize },
}

fn name(prefix: &str, k: usize, size: usize) -> String {
    if size <= 1 {
        prefix.to_string()
    } else {
        format!("{}{}", prefix, k)
    }
}

/// Tree shape over `n` slots; no children means a leaf.
struct Shape(Vec<Shape>);

fn shape(d: &mut Draws, n: usize, cfg: &GenConfig, flat_ok: bool) -> Shape {
    if n == 1 {
        return Shape(Vec::new());
    }
    let max_k = if cfg.binary { 2 } else { cfg.max_branching.max(2).min(n) };
    let mut k = if cfg.binary { 2 } else { d.range(2, max_k) };
    if !flat_ok && k == n && n > 2 {
        k = n - 1;
    }
    // k - 1 distinct cut points in 1..n
    let mut cuts: Vec<usize> = (1..n).collect();
    d.shuffle(&mut cuts);
    let mut cuts = cuts[..k - 1].to_vec();
    cuts.sort_unstable();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(n);
    Shape(bounds.windows(2).map(|w| shape(d, w[1] - w[0], cfg, true)).collect())
}

fn realize(s: &Shape, next: &mut usize, perm: &[usize], d: &mut Draws, cfg: &GenConfig, sentence: &Sentence) -> CNode {
    let mut node = if s.0.is_empty() {
        let p = perm[*next];
        *next += 1;
        CNode::preterminal(sentence.token(p).pos.clone(), p)
    } else {
        let children: Vec<CNode> = s.0.iter().map(|c| realize(c, next, perm, d, cfg, sentence)).collect();
        let head = children[d.below(children.len())].head;
        CNode::proper(name("X", d.below(cfg.labels.max(1)), cfg.labels), head, children)
    };
    while cfg.unary > 0.0 && d.chance(cfg.unary) {
        let label = name("X", d.below(cfg.labels.max(1)), cfg.labels);
        node = CNode::proper(label, node.head, vec![node]);
        if d.chance(0.5) {
            break;
        }
    }
    node
}

/// A random valid tree over `len` words, a pure function of
/// `(cfg.seed, len, index)` and the other settings.
pub fn gen_ctree(cfg: &GenConfig, len: usize, index: u64) -> CTree {
    assert!(len >= 1, "trees need at least one word");
    let mut d = Draws::new(cfg.seed, index.wrapping_mul(1 << 16) ^ len as u64, TAG_TREE);
    let sentence = Sentence::new(
        (1..=len)
            .map(|i| Token::new(format!("w{}", i), name("P", d.below(cfg.pos_tags.max(1)), cfg.pos_tags)))
            .collect(),
    );
    let want_disc = len >= 3 && cfg.discontinuity > 0.0 && d.chance(cfg.discontinuity);
    let sh = shape(&mut d, len, cfg, !want_disc);
    let identity: Vec<usize> = (1..=len).collect();
    let mut perm = identity.clone();
    if want_disc {
        for _ in 0..64 {
            d.shuffle(&mut perm);
            let mut probe_draws = Draws::new(0, 0, 0);
            let probe = realize(&sh, &mut 0, &perm, &mut probe_draws, &GenConfig { unary: 0.0, ..cfg.clone() }, &sentence);
            if !probe.preorder().iter().all(|n| n.is_contiguous()) {
                break;
            }
        }
    }
    let root = realize(&sh, &mut 0, &perm, &mut d, cfg, &sentence);
    CTree::new(sentence, root)
}

/// Random trees for lengths cycling through `1..=cfg.max_len`.
pub fn gen_corpus(cfg: &GenConfig, n: usize) -> Vec<CTree> {
    (0..n).map(|i| gen_ctree(cfg, 1 + i % cfg.max_len.max(1), i as u64)).collect()
}

// ---------------------------------------------------------------- enumeration

/// Set partitions of `items` into at least two blocks (exactly two when
/// `binary`), each listed once. With `contiguous`, blocks are runs.
fn partitions(items: &[usize], binary: bool, contiguous: bool) -> Vec<Vec<Vec<usize>>> {
    let n = items.len();
    let mut out = Vec::new();
    if contiguous {
        // compositions: a cut after position i for every set bit
        for mask in 1u32..(1 << (n - 1)) {
            let k = mask.count_ones() as usize + 1;
            if binary && k != 2 {
                continue;
            }
            let mut blocks = vec![vec![items[0]]];
            for i in 1..n {
                if mask & (1 << (i - 1)) != 0 {
                    blocks.push(Vec::new());
                }
                blocks.last_mut().unwrap().push(items[i]);
            }
            out.push(blocks);
        }
        return out;
    }
    // restricted growth strings
    let mut a = vec![0usize; n];
    loop {
        let k = a.iter().max().unwrap() + 1;
        if k >= 2 && (!binary || k == 2) {
            let mut blocks = vec![Vec::new(); k];
            for (i, &b) in a.iter().enumerate() {
                blocks[b].push(items[i]);
            }
            out.push(blocks);
        }
        // next string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let max_prefix = a[..i].iter().max().copied().unwrap_or(0);
            if a[i] <= max_prefix {
                a[i] += 1;
                for x in a.iter_mut().skip(i + 1) {
                    *x = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

fn enum_nodes(items: &[usize], binary: bool, contiguous: bool) -> Vec<CNode> {
    if items.len() == 1 {
        return vec![CNode::preterminal(ENUM_POS, items[0])];
    }
    let mut out = Vec::new();
    for blocks in partitions(items, binary, contiguous) {
        let options: Vec<Vec<CNode>> = blocks.iter().map(|b| enum_nodes(b, binary, contiguous)).collect();
        let mut combo = vec![0usize; options.len()];
        loop {
            let children: Vec<CNode> = combo.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect();
            for h in 0..children.len() {
                out.push(CNode::proper(ENUM_LABEL, children[h].head, children.clone()));
            }
            let mut j = 0;
            loop {
                if j == combo.len() {
                    break;
                }
                combo[j] += 1;
                if combo[j] < options[j].len() {
                    break;
                }
                combo[j] = 0;
                j += 1;
            }
            if j == combo.len() {
                break;
            }
        }
    }
    out
}

/// Every unaryless tree over `len` words with label `X`, POS `P` and every
/// choice of heads. `binary` restricts to binary trees and `continuous_only`
/// to continuous ones.
pub fn enumerate_ctrees(len: usize, binary: bool, continuous_only: bool) -> Result<Vec<CTree>, GenError> {
    let max = if binary { MAX_ENUM_BINARY } else { MAX_ENUM_GENERAL };
    if len > max {
        return Err(GenError::TooLong { len, max });
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    let sentence = Sentence::new((1..=len).map(|i| Token::new(format!("w{}", i), ENUM_POS)).collect());
    let items: Vec<usize> = (1..=len).collect();
    Ok(enum_nodes(&items, binary, continuous_only)
        .into_iter()
        .map(|root| CTree::new(sentence.clone(), root))
        .collect())
}

// ---------------------------------------------------------------- toy treebank

const DET: &[&str] = &["the", "a"];
const ADJ: &[&str] = &["big", "small", "old", "red", "happy"];
const NOUN: &[&str] = &["dog", "cat", "man", "woman", "park", "telescope", "house", "book", "city", "friend"];
const PRON: &[&str] = &["he", "she", "it"];
const NAME: &[&str] = &["John", "Mary", "Paris"];
const VERB_PRES: &[&str] = &["sees", "likes", "finds"];
const VERB_PAST: &[&str] = &["saw", "liked", "found"];
const ADV: &[&str] = &["still", "often", "never"];
const PREP_VP: &[&str] = &["with", "in", "on"];

struct Toy<'a> {
    d: &'a mut Draws,
    words: Vec<Token>,
}

impl Toy<'_> {
    fn leaf(&mut self, pos: &str, form: &str) -> RawNode {
        let mut t = Token::new(form, pos);
        t.lemma = Some(form.to_lowercase());
        self.words.push(t);
        RawNode::preterminal(pos, self.words.len())
    }

    fn pick_leaf(&mut self, pos: &str, forms: &[&str]) -> RawNode {
        let w = *self.d.pick(forms);
        self.leaf(pos, w)
    }

    fn np(&mut self, allow_of: bool) -> RawNode {
        match self.d.below(10) {
            0 => RawNode::inner("NP", vec![self.pick_leaf("PRP", PRON)]),
            1 => RawNode::inner("NP", vec![self.pick_leaf("NNP", NAME)]),
            _ => {
                let mut kids = vec![self.pick_leaf("DT", DET)];
                for _ in 0..self.d.range(0, 2) {
                    kids.push(self.pick_leaf("JJ", ADJ));
                }
                kids.push(self.pick_leaf("NN", NOUN));
                let base = RawNode::inner("NP", kids);
                if allow_of && self.d.chance(0.25) {
                    let of = self.leaf("IN", "of");
                    let obj = self.np(false);
                    RawNode::inner("NP", vec![base, RawNode::inner("PP", vec![of, obj])])
                } else {
                    base
                }
            }
        }
    }

    fn pp(&mut self) -> RawNode {
        let p = self.pick_leaf("IN", PREP_VP);
        let obj = self.np(false);
        RawNode::inner("PP", vec![p, obj])
    }

    fn sentence(&mut self) -> RawNode {
        let mut s = Vec::new();
        if self.d.chance(0.2) {
            s.push(self.pp());
            s.push(self.leaf(",", ","));
        }
        s.push(self.np(true));
        let vp = if self.d.chance(0.3) {
            let mut kids = vec![self.leaf("VBZ", "is")];
            if self.d.chance(0.4) {
                kids.push(RawNode::inner("ADVP", vec![self.pick_leaf("RB", ADV)]));
            }
            kids.push(RawNode::inner("ADJP", vec![self.pick_leaf("JJ", ADJ)]));
            RawNode::inner("VP", kids)
        } else {
            let mut kids = Vec::new();
            if self.d.chance(0.3) {
                kids.push(RawNode::inner("ADVP", vec![self.pick_leaf("RB", ADV)]));
            }
            if self.d.chance(0.5) {
                kids.push(self.pick_leaf("VBZ", VERB_PRES));
            } else {
                kids.push(self.pick_leaf("VBD", VERB_PAST));
            }
            kids.push(self.np(true));
            let mut vp = RawNode::inner("VP", kids);
            for _ in 0..self.d.range(0, 5) {
                let pp = self.pp();
                vp = RawNode::inner("VP", vec![vp, pp]);
            }
            vp
        };
        s.push(vp);
        s.push(self.leaf(".", "."));
        RawNode::inner("TOP", vec![RawNode::inner("S", s)])
    }
}

/// A toy English treebank from a fixed grammar, lexicalized with the
/// Collins-style head table. Attachment and unary placement are functions of
/// the words and local context: `of`-PPs attach to nouns and other PPs
/// stack on the verb phrase, RB always sits under ADVP, a predicative JJ
/// under ADJP, pronouns and names under NP, and TOP tops every tree.
pub fn gen_toy_treebank(cfg: &GenConfig, n: usize) -> Vec<CTree> {
    let rules = HeadRuleSet::collins_english();
    (0..n)
        .map(|i| {
            let mut d = Draws::new(cfg.seed, i as u64, TAG_TOY);
            let mut toy = Toy {
                d: &mut d,
                words: Vec::new(),
            };
            let root = toy.sentence();
            let raw = RawTree {
                sentence: Sentence::new(toy.words),
                root,
            };
            rules.lexicalize(&raw).expect("toy trees lexicalize")
        })
        .collect()
}
