//! EVALB-style scoring of constituent trees and attachment scores for
//! dependency trees.
//!
//! A bracket is a label with a yield, and yields are position sets, so
//! discontinuous constituents are compared the same way as continuous ones.
//! Brackets are matched as multisets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::EncodedDTree;
use crate::trees::CTree;

/// Punctuation tags deleted by the usual EVALB parameter file for the PTB.
pub const PTB_PUNCT: &[&str] = &[",", ":", "``", "''", "."];
/// Punctuation tags of the NEGRA/TIGER tag set.
pub const NEGRA_PUNCT: &[&str] = &["$.", "$,", "$("];

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Labels dropped when they occur at the root (e.g. `TOP`, `VROOT`).
    pub ignore_root_labels: BTreeSet<String>,
    /// POS tags whose positions are removed from every yield.
    pub punctuation_pos: BTreeSet<String>,
    pub include_preterminals: bool,
    /// Extra breakdowns for sentences of at most this many words.
    pub length_cutoffs: Vec<usize>,
}

impl EvalConfig {
    pub fn new<'a>(ignore_root: impl IntoIterator<Item = &'a str>, punct: impl IntoIterator<Item = &'a str>) -> Self {
        EvalConfig {
            ignore_root_labels: ignore_root.into_iter().map(str::to_string).collect(),
            punctuation_pos: punct.into_iter().map(str::to_string).collect(),
            ..EvalConfig::default()
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} sentences but prediction has {pred}")]
    CountMismatch { gold: usize, pred: usize },
    #[error("sentence {index}: gold has {gold} words but prediction has {pred}")]
    LengthMismatch { index: usize, gold: usize, pred: usize },
}

pub type Bracket = (String, Vec<usize>);

/// The brackets of `tree`, sorted (a multiset).
pub fn brackets(tree: &CTree, cfg: &EvalConfig) -> Vec<Bracket> {
    let punct: BTreeSet<usize> = (1..=tree.len())
        .filter(|&i| cfg.punctuation_pos.contains(&tree.sentence.token(i).pos))
        .collect();
    let mut out = Vec::new();
    for node in tree.root.preorder() {
        if node.is_preterminal() && !cfg.include_preterminals {
            continue;
        }
        if std::ptr::eq(node, &tree.root) && cfg.ignore_root_labels.contains(&node.label) {
            continue;
        }
        let positions: Vec<usize> = node.positions.iter().copied().filter(|p| !punct.contains(p)).collect();
        if positions.is_empty() {
            continue;
        }
        out.push((node.label.clone(), positions));
    }
    out.sort();
    out
}

fn multiset_overlap(a: &[Bracket], b: &[Bracket]) -> usize {
    let mut counts: BTreeMap<&Bracket, usize> = BTreeMap::new();
    for x in a {
        *counts.entry(x).or_default() += 1;
    }
    let mut matched = 0;
    for y in b {
        if let Some(c) = counts.get_mut(y) {
            if *c > 0 {
                *c -= 1;
                matched += 1;
            }
        }
    }
    matched
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub sentences: usize,
    pub gold: usize,
    pub pred: usize,
    pub matched: usize,
    pub exact: usize,
}

impl Counts {
    fn add(&mut self, gold: usize, pred: usize, matched: usize, exact: bool) {
        self.sentences += 1;
        self.gold += gold;
        self.pred += pred;
        self.matched += matched;
        self.exact += exact as usize;
    }

    /// Matched over predicted; 1 when nothing was predicted and nothing was
    /// expected.
    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.pred, self.gold == 0)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.gold, self.pred == 0)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn exact_match(&self) -> f64 {
        ratio(self.exact, self.sentences, true)
    }
}

fn ratio(num: usize, den: usize, empty_ok: bool) -> f64 {
    if den == 0 {
        if empty_ok {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub lp: f64,
    pub lr: f64,
    pub f1: f64,
    pub ex: f64,
    #[serde(flatten)]
    pub counts: Counts,
}

impl From<&Counts> for Scores {
    fn from(c: &Counts) -> Self {
        Scores {
            lp: c.precision(),
            lr: c.recall(),
            f1: c.f1(),
            ex: c.exact_match(),
            counts: c.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub all: Scores,
    /// `(cutoff, scores over sentences with at most that many words)`.
    pub cutoffs: Vec<(usize, Scores)>,
}

impl ScoreReport {
    pub fn lp(&self) -> f64 {
        self.all.lp
    }

    pub fn lr(&self) -> f64 {
        self.all.lr
    }

    pub fn f1(&self) -> f64 {
        self.all.f1
    }

    pub fn ex(&self) -> f64 {
        self.all.ex
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut row = |name: &str, s: &Scores| {
            let _ = writeln!(
                out,
                "{:<8} sents {:>6}  gold {:>7}  test {:>7}  match {:>7}  LP {:.4}  LR {:.4}  F1 {:.4}  EX {:.4}",
                name, s.counts.sentences, s.counts.gold, s.counts.pred, s.counts.matched, s.lp, s.lr, s.f1, s.ex
            );
        };
        row("all", &self.all);
        for (c, s) in &self.cutoffs {
            row(&format!("len<={}", c), s);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Micro-averaged labeled bracket scores and exact match.
pub fn evalb(gold: &[CTree], pred: &[CTree], cfg: &EvalConfig) -> Result<ScoreReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::CountMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let mut all = Counts::default();
    let mut cut = vec![Counts::default(); cfg.length_cutoffs.len()];
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::LengthMismatch {
                index,
                gold: g.len(),
                pred: p.len(),
            });
        }
        let (gb, pb) = (brackets(g, cfg), brackets(p, cfg));
        let matched = multiset_overlap(&gb, &pb);
        let exact = gb == pb;
        all.add(gb.len(), pb.len(), matched, exact);
        for (c, counts) in cfg.length_cutoffs.iter().zip(cut.iter_mut()) {
            if g.len() <= *c {
                counts.add(gb.len(), pb.len(), matched, exact);
            }
        }
    }
    Ok(ScoreReport {
        all: Scores::from(&all),
        cutoffs: cfg.length_cutoffs.iter().copied().zip(cut.iter().map(Scores::from)).collect(),
    })
}

/// `(UAS, LAS)` over tokens whose gold POS is not punctuation. The root
/// word counts; its label is the root label.
pub fn attachment_scores(
    gold: &[EncodedDTree],
    pred: &[EncodedDTree],
    punctuation_pos: &BTreeSet<String>,
) -> Result<(f64, f64), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::CountMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let (mut total, mut heads, mut labeled) = (0usize, 0usize, 0usize);
    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::LengthMismatch {
                index,
                gold: g.len(),
                pred: p.len(),
            });
        }
        let (gh, ph, gl, pl) = (g.heads(), p.heads(), g.labels(), p.labels());
        for i in 0..g.len() {
            if punctuation_pos.contains(&g.sentence.tokens()[i].pos) {
                continue;
            }
            total += 1;
            if gh[i] == ph[i] {
                heads += 1;
                if gl[i] == pl[i] {
                    labeled += 1;
                }
            }
        }
    }
    Ok((ratio(heads, total, true), ratio(labeled, total, true)))
}
