//! Hashed sparse linear models and the averaged perceptron.
//!
//! A feature is a sequence of string parts (a template name followed by the
//! values it reads). Its id is the 64-bit FNV-1a hash of the parts joined by
//! the unit separator `0x1F`, reduced modulo [`FEATURE_SPACE`] (2^22).
//! Collisions are accepted. Class-specific weights are addressed by
//! [`conjoin`], which mixes a feature id with a class index.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hasher;

use fnv::FnvHasher;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const FEATURE_SPACE: u32 = 1 << 22;
pub const HASH_NAME: &str = "fnv1a-64";
pub const MODEL_VERSION: u32 = 1;

pub fn feature_id(parts: &[&str]) -> u32 {
    let mut h = FnvHasher::default();
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h.write_u8(0x1F);
        }
        h.write(p.as_bytes());
    }
    (h.finish() % FEATURE_SPACE as u64) as u32
}

/// Id of feature `f` conjoined with class `k`.
pub fn conjoin(f: u32, k: u32) -> u32 {
    let mut z = ((f as u64) << 32 | k as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ((z ^ (z >> 31)) % FEATURE_SPACE as u64) as u32
}

/// Deterministic shuffled visiting order for one training epoch.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    order.shuffle(&mut rng);
    order
}

mod sorted_table {
    use std::collections::{BTreeMap, HashMap};

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &HashMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        let sorted: BTreeMap<u32, f64> = map.iter().map(|(&k, &v)| (k, v)).collect();
        sorted.into_iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<HashMap<u32, f64>, D::Error> {
        Ok(Vec::<(u32, f64)>::deserialize(d)?.into_iter().collect())
    }
}

/// A trained linear model. Scoring uses the averaged weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub version: u32,
    pub hash: String,
    pub modulus: u32,
    /// Free-form metadata (trainer settings, encoding, ...).
    pub meta: BTreeMap<String, String>,
    /// Class names, for models that score classes.
    pub labels: Vec<String>,
    #[serde(with = "sorted_table")]
    pub weights: HashMap<u32, f64>,
    #[serde(with = "sorted_table")]
    pub averaged_weights: HashMap<u32, f64>,
}

impl Default for LinearModel {
    fn default() -> Self {
        LinearModel {
            version: MODEL_VERSION,
            hash: HASH_NAME.to_string(),
            modulus: FEATURE_SPACE,
            meta: BTreeMap::new(),
            labels: Vec::new(),
            weights: HashMap::new(),
            averaged_weights: HashMap::new(),
        }
    }
}

impl LinearModel {
    pub fn weight(&self, id: u32) -> f64 {
        self.averaged_weights.get(&id).copied().unwrap_or(0.0)
    }

    pub fn score(&self, features: &[u32]) -> f64 {
        features.iter().map(|&f| self.weight(f)).sum()
    }

    pub fn score_class(&self, features: &[u32], class: u32) -> f64 {
        features.iter().map(|&f| self.weight(conjoin(f, class))).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.averaged_weights.values().all(|&w| w == 0.0)
    }
}

/// Averaged perceptron bookkeeping: alongside the current weights `w` it
/// keeps `u`, the sum of `c * delta` over all updates made during example
/// `c` (counted from 1). After `T` examples the mean of the per-example weight
/// vectors is `w + (w - u) / T`.
#[derive(Clone, Debug, Default)]
pub struct Perceptron {
    weights: HashMap<u32, f64>,
    accum: HashMap<u32, f64>,
    step: u64,
}

impl Perceptron {
    pub fn new() -> Self {
        Perceptron {
            step: 1,
            ..Default::default()
        }
    }

    pub fn weight(&self, id: u32) -> f64 {
        self.weights.get(&id).copied().unwrap_or(0.0)
    }

    pub fn update(&mut self, features: impl IntoIterator<Item = u32>, delta: f64) {
        let c = self.step as f64;
        for f in features {
            *self.weights.entry(f).or_default() += delta;
            *self.accum.entry(f).or_default() += c * delta;
        }
    }

    /// Marks the end of one training example.
    pub fn tick(&mut self) {
        self.step += 1;
    }

    pub fn finish(self, labels: Vec<String>, meta: BTreeMap<String, String>) -> LinearModel {
        let t = (self.step - 1).max(1) as f64;
        let averaged_weights = self
            .weights
            .iter()
            .map(|(&f, &w)| (f, w + (w - self.accum.get(&f).copied().unwrap_or(0.0)) / t))
            .collect();
        LinearModel {
            meta,
            labels,
            weights: self.weights,
            averaged_weights,
            ..LinearModel::default()
        }
    }
}

/// Trait for a scorer that reads weights by id, so decoders can run on a
/// model being trained as well as on a finished one.
pub trait Weights {
    fn weight(&self, id: u32) -> f64;

    fn sum(&self, features: &[u32]) -> f64 {
        features.iter().map(|&f| self.weight(f)).sum()
    }

    fn sum_class(&self, features: &[u32], class: u32) -> f64 {
        features.iter().map(|&f| self.weight(conjoin(f, class))).sum()
    }
}

impl Weights for LinearModel {
    fn weight(&self, id: u32) -> f64 {
        LinearModel::weight(self, id)
    }
}

impl Weights for Perceptron {
    fn weight(&self, id: u32) -> f64 {
        Perceptron::weight(self, id)
    }
}
