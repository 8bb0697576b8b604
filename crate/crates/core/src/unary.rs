//! Unary recovery: a classifier at every node of a unaryless tree decides
//! which chain of unary nodes, if any, to put back above it.
//!
//! Classes are `NULL` or chains of labels written topmost first and joined
//! by `->`, so `S->ADJP` at a JJ preterminal yields `(S (ADJP (JJ ..)))`. A
//! node only considers `NULL` and the classes seen above nodes with its
//! label in training.
//!
//! Node features: the production above and the one beneath the node, its
//! label alone and with the parent label and each sibling label, the first
//! and last word of the yield (form, lemma, POS, morphology), and form,
//! lemma and morphology of an adjacent sibling that is a preterminal. Every
//! feature is conjoined with the class and with a preterminal flag when it
//! is scored. Missing context reads `NONE`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{conjoin, epoch_order, feature_id, LinearModel, Perceptron, Weights};
use crate::trees::{CNode, CTree, Token};

pub const NULL_CLASS: &str = "NULL";
pub const CHAIN_SEPARATOR: &str = "->";
const NONE: &str = "NONE";

#[derive(Debug, Error)]
pub enum UnaryError {
    #[error("no training instances")]
    NoInstances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnaryInstance {
    pub symbol: String,
    pub preterminal: bool,
    pub features: Vec<u32>,
    /// Index into the class inventory.
    pub gold: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnaryData {
    pub instances: Vec<UnaryInstance>,
    /// `NULL` first, then the chains in sorted order.
    pub classes: Vec<String>,
    /// Non-NULL classes observed above each symbol.
    pub allowed: BTreeMap<String, Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnaryStats {
    pub classes: usize,
    pub nodes: usize,
    pub nodes_with_unaries: usize,
    /// Mean number of candidate classes per node, `NULL` included.
    pub mean_candidates: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnaryModel {
    pub classes: Vec<String>,
    pub allowed: BTreeMap<String, Vec<u32>>,
    pub model: LinearModel,
}

fn class_key(class: u32, preterminal: bool) -> u32 {
    class * 2 + preterminal as u32
}

fn candidates<'a>(allowed: &'a BTreeMap<String, Vec<u32>>, symbol: &str) -> impl Iterator<Item = u32> + 'a {
    std::iter::once(0).chain(allowed.get(symbol).into_iter().flatten().copied())
}

fn argmax(w: &impl Weights, allowed: &BTreeMap<String, Vec<u32>>, symbol: &str, preterminal: bool, features: &[u32]) -> u32 {
    let mut best = (f64::NEG_INFINITY, 0);
    for c in candidates(allowed, symbol) {
        let v = w.sum_class(features, class_key(c, preterminal));
        if v > best.0 {
            best = (v, c);
        }
    }
    best.1
}

fn production(node: &CNode, sentence: &crate::trees::Sentence) -> String {
    if node.is_preterminal() {
        return format!("{}{}{}", node.label, CHAIN_SEPARATOR, sentence.token(node.head).form);
    }
    let kids: Vec<&str> = node.children.iter().map(|c| c.label.as_str()).collect();
    format!("{}{}{}", node.label, CHAIN_SEPARATOR, kids.join(" "))
}

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("_")
}

/// Feature ids of the node at `path` (child indices from the root).
pub fn featurize_node(tree: &CTree, path: &[usize]) -> Vec<u32> {
    let node = tree.root.at_path(path).expect("path inside the tree");
    let parent = path.split_last().map(|(_, p)| tree.root.at_path(p).expect("parent"));
    let idx = path.last().copied();
    let sibling = |offset: isize| -> Option<&CNode> {
        let (p, i) = (parent?, idx? as isize + offset);
        if i < 0 {
            return None;
        }
        p.children.get(i as usize)
    };
    let (left, right) = (sibling(-1), sibling(1));
    let label = node.label.as_str();
    let above = parent.map_or(NONE.to_string(), |p| production(p, &tree.sentence));
    let beneath = production(node, &tree.sentence);
    let plabel = parent.map_or(NONE, |p| p.label.as_str());
    let llabel = left.map_or(NONE, |n| n.label.as_str());
    let rlabel = right.map_or(NONE, |n| n.label.as_str());
    let first: &Token = tree.sentence.token(node.first());
    let last: &Token = tree.sentence.token(node.last());

    let mut f = vec![
        feature_id(&["bias"]),
        feature_id(&["above", &above]),
        feature_id(&["beneath", &beneath]),
        feature_id(&["label", label]),
        feature_id(&["label+parent", label, plabel]),
        feature_id(&["label+left", label, llabel]),
        feature_id(&["label+right", label, rlabel]),
        feature_id(&["first.form", &first.form]),
        feature_id(&["first.lemma", opt(&first.lemma)]),
        feature_id(&["first.pos", &first.pos]),
        feature_id(&["first.morph", opt(&first.morph)]),
        feature_id(&["last.form", &last.form]),
        feature_id(&["last.lemma", opt(&last.lemma)]),
        feature_id(&["last.pos", &last.pos]),
        feature_id(&["last.morph", opt(&last.morph)]),
    ];
    for (side, n) in [("left", left), ("right", right)] {
        if let Some(n) = n.filter(|n| n.is_preterminal()) {
            let t = tree.sentence.token(n.head);
            f.push(feature_id(&[side, "form", &t.form]));
            f.push(feature_id(&[side, "lemma", opt(&t.lemma)]));
            f.push(feature_id(&[side, "morph", opt(&t.morph)]));
        }
    }
    f
}

/// Unary chains above every non-unary node, in pre-order of the stripped
/// tree; each chain is listed topmost first.
pub fn unary_chains(tree: &CTree) -> Vec<Vec<String>> {
    fn go(node: &CNode, chain: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if node.is_unary() {
            chain.push(node.label.clone());
            go(&node.children[0], chain, out);
            return;
        }
        out.push(std::mem::take(chain));
        for c in &node.children {
            go(c, &mut Vec::new(), out);
        }
    }
    let mut out = Vec::new();
    go(&tree.root, &mut Vec::new(), &mut out);
    out
}

fn paths(node: &CNode) -> Vec<Vec<usize>> {
    fn go(node: &CNode, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        for (i, c) in node.children.iter().enumerate() {
            path.push(i);
            go(c, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(node, &mut Vec::new(), &mut out);
    out
}

/// One instance per node of every stripped tree, with the inventory of
/// classes and the per-symbol allowed classes.
pub fn extract_instances<'a>(treebank: impl IntoIterator<Item = &'a CTree>) -> UnaryData {
    let mut raw = Vec::new();
    let mut names = BTreeSet::new();
    for tree in treebank {
        let stripped = tree.strip_unaries();
        let chains = unary_chains(tree);
        for (path, chain) in paths(&stripped.root).into_iter().zip(chains) {
            let node = stripped.root.at_path(&path).unwrap();
            let class = chain.join(CHAIN_SEPARATOR);
            if !class.is_empty() {
                names.insert(class.clone());
            }
            raw.push((node.label.clone(), node.is_preterminal(), featurize_node(&stripped, &path), class));
        }
    }
    let mut classes = vec![NULL_CLASS.to_string()];
    classes.extend(names);
    let index: BTreeMap<&str, u32> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
    let mut allowed: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    let instances = raw
        .into_iter()
        .map(|(symbol, preterminal, features, class)| {
            let gold = if class.is_empty() { 0 } else { index[class.as_str()] };
            if gold != 0 {
                allowed.entry(symbol.clone()).or_default().insert(gold);
            }
            UnaryInstance {
                symbol,
                preterminal,
                features,
                gold,
            }
        })
        .collect();
    UnaryData {
        instances,
        classes,
        allowed: allowed.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
    }
}

impl UnaryData {
    pub fn stats(&self) -> UnaryStats {
        let nodes = self.instances.len();
        let cands: usize = self
            .instances
            .iter()
            .map(|i| 1 + self.allowed.get(&i.symbol).map_or(0, Vec::len))
            .sum();
        UnaryStats {
            classes: self.classes.len() - 1,
            nodes,
            nodes_with_unaries: self.instances.iter().filter(|i| i.gold != 0).count(),
            mean_candidates: if nodes == 0 { 0.0 } else { cands as f64 / nodes as f64 },
        }
    }
}

/// Averaged multi-class perceptron, restricted per instance to the classes
/// allowed for its symbol.
pub fn train_unary(data: &UnaryData, epochs: usize, seed: u64) -> Result<UnaryModel, UnaryError> {
    if data.instances.is_empty() {
        return Err(UnaryError::NoInstances);
    }
    let mut p = Perceptron::new();
    for epoch in 0..epochs {
        for i in epoch_order(data.instances.len(), seed, epoch) {
            let x = &data.instances[i];
            let pred = argmax(&p, &data.allowed, &x.symbol, x.preterminal, &x.features);
            if pred != x.gold {
                let (g, q) = (class_key(x.gold, x.preterminal), class_key(pred, x.preterminal));
                p.update(x.features.iter().map(|&f| conjoin(f, g)), 1.0);
                p.update(x.features.iter().map(|&f| conjoin(f, q)), -1.0);
            }
            p.tick();
        }
    }
    let meta = BTreeMap::from([
        ("kind".to_string(), "unary".to_string()),
        ("epochs".to_string(), epochs.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("collisions".to_string(), "accepted".to_string()),
    ]);
    Ok(UnaryModel {
        classes: data.classes.clone(),
        allowed: data.allowed.clone(),
        model: p.finish(data.classes.clone(), meta),
    })
}

impl UnaryModel {
    pub fn predict(&self, instance: &UnaryInstance) -> u32 {
        argmax(&self.model, &self.allowed, &instance.symbol, instance.preterminal, &instance.features)
    }

    /// Fraction of instances classified correctly.
    pub fn accuracy(&self, data: &UnaryData) -> f64 {
        if data.instances.is_empty() {
            return 1.0;
        }
        let translate = |gold: u32| -> Option<u32> {
            let name = &data.classes[gold as usize];
            self.classes.iter().position(|c| c == name).map(|i| i as u32)
        };
        let ok = data
            .instances
            .iter()
            .filter(|x| translate(x.gold) == Some(self.predict(x)))
            .count();
        ok as f64 / data.instances.len() as f64
    }
}

/// Puts predicted unary chains back into a unaryless tree.
pub fn recover(tree: &CTree, model: &UnaryModel) -> CTree {
    fn go(tree: &CTree, node: &CNode, path: &mut Vec<usize>, model: &UnaryModel) -> CNode {
        let mut children = Vec::with_capacity(node.children.len());
        for (i, c) in node.children.iter().enumerate() {
            path.push(i);
            children.push(go(tree, c, path, model));
            path.pop();
        }
        let mut out = CNode {
            label: node.label.clone(),
            head: node.head,
            positions: node.positions.clone(),
            children,
        };
        let features = featurize_node(tree, path);
        let class = argmax(&model.model, &model.allowed, &node.label, node.is_preterminal(), &features);
        if class != 0 {
            if let Some(name) = model.classes.get(class as usize) {
                for label in name.split(CHAIN_SEPARATOR).collect::<Vec<_>>().into_iter().rev() {
                    out = CNode {
                        label: label.to_string(),
                        head: out.head,
                        positions: out.positions.clone(),
                        children: vec![out],
                    };
                }
            }
        }
        out
    }
    CTree::new(tree.sentence.clone(), go(tree, &tree.root, &mut Vec::new(), model))
}
