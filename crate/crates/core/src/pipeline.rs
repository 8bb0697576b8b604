//! End-to-end parsing as dependency parsing: convert, train, parse, decode.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{decode, encode_ctree, label_alphabet, EncodedDTree, EncodingError, Scheme};
use crate::headrules::{HeadRuleSet, LexicalizeError};
use crate::labeler::{label_tree, train_labeler, LabelerError, LabelerModel};
use crate::model::{LinearModel, MODEL_VERSION};
use crate::parser::{parse, train_unlabeled, ParserError};
use crate::reduction::{dtree_to_ctree, dtree_to_ctree_with_spines, recover_order, roundtrip_check, RepairStats};
use crate::trees::{CNode, CTree, RawTree, Sentence};
use crate::unary::{extract_instances, recover, train_unary, UnaryError, UnaryModel};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARSER_FILE: &str = "parser.json";
pub const LABELER_FILE: &str = "labeler.json";
pub const UNARY_FILE: &str = "unary.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Continuous,
    Discontinuous,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Continuous => "continuous",
            Mode::Discontinuous => "discontinuous",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "continuous" => Ok(Mode::Continuous),
            "discontinuous" => Ok(Mode::Discontinuous),
            _ => Err(format!("unknown mode `{}` (expected continuous or discontinuous)", s)),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("the delta encoding needs continuous mode")]
    DeltaNeedsContinuous,
    #[error("tree {index}: {source}")]
    Lexicalize { index: usize, source: LexicalizeError },
    #[error("tree {index}: {source}")]
    Encoding { index: usize, source: EncodingError },
    #[error("tree {index} is discontinuous but the mode is continuous")]
    Discontinuous { index: usize },
    #[error(transparent)]
    Parser(#[from] ParserError),
    #[error(transparent)]
    Labeler(#[from] LabelerError),
    #[error(transparent)]
    Unary(#[from] UnaryError),
    #[error("bundle {what}: expected {expected}, found {found}")]
    Mismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub encoding: Scheme,
    pub rules: HeadRuleSet,
    pub unaries: bool,
    pub seed: u64,
    pub epochs: usize,
    /// Restrict labeler candidates to labels seen with the head POS and direction.
    pub prune_labels: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Continuous,
            encoding: Scheme::Direct,
            rules: HeadRuleSet::collins_english(),
            unaries: true,
            seed: 1,
            epochs: 10,
            prune_labels: false,
        }
    }
}

impl PipelineConfig {
    pub fn check(&self) -> Result<(), PipelineError> {
        if self.encoding == Scheme::Delta && self.mode == Mode::Discontinuous {
            return Err(PipelineError::DeltaNeedsContinuous);
        }
        Ok(())
    }

    pub fn projective(&self) -> bool {
        self.mode == Mode::Continuous
    }

    /// Whether a separate unary model is trained and applied. The hn
    /// encoding carries unaries in its labels.
    pub fn unary_model(&self) -> bool {
        self.unaries && self.encoding != Scheme::Hn
    }
}

/// Hex FNV-1a 64 of the normalized rule text.
pub fn rules_hash(rules: &HeadRuleSet) -> String {
    use std::hash::Hasher;
    let mut h = fnv::FnvHasher::default();
    h.write(rules.to_text().as_bytes());
    format!("{:016x}", h.finish())
}

pub fn lexicalize_all(raw: &[RawTree], rules: &HeadRuleSet) -> Result<Vec<CTree>, PipelineError> {
    raw.iter()
        .enumerate()
        .map(|(index, t)| rules.lexicalize(t).map_err(|source| PipelineError::Lexicalize { index, source }))
        .collect()
}

/// The tree the encoder sees: unaryless unless the scheme stores spines.
pub fn encoder_input(tree: &CTree, scheme: Scheme) -> CTree {
    if scheme == Scheme::Hn {
        tree.clone()
    } else {
        tree.strip_unaries()
    }
}

/// Label alphabet sizes and counts gathered during conversion.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvertStats {
    pub trees: usize,
    pub tokens: usize,
    pub alphabet: Vec<(String, usize)>,
}

impl ConvertStats {
    pub fn to_text(&self) -> String {
        format!(
            "trees {}\ntokens {}\nlabels {}\n",
            self.trees,
            self.tokens,
            self.alphabet.len()
        )
    }
}

pub fn convert(trees: &[CTree], scheme: Scheme) -> Result<(Vec<EncodedDTree>, ConvertStats), PipelineError> {
    let encoded = trees
        .iter()
        .enumerate()
        .map(|(index, t)| {
            encode_ctree(&encoder_input(t, scheme), scheme).map_err(|source| PipelineError::Encoding { index, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let stats = ConvertStats {
        trees: encoded.len(),
        tokens: encoded.iter().map(|e| e.len()).sum(),
        alphabet: label_alphabet(&encoded),
    };
    Ok((encoded, stats))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub encoding: Scheme,
    pub mode: Mode,
    pub head_rules: String,
    pub seed: u64,
    pub epochs: usize,
    pub unaries: bool,
    pub prune_labels: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub manifest: Manifest,
    pub parser: LinearModel,
    pub labeler: LabelerModel,
    pub unary: Option<UnaryModel>,
}

pub fn train(trees: &[CTree], cfg: &PipelineConfig) -> Result<Bundle, PipelineError> {
    cfg.check()?;
    if cfg.mode == Mode::Continuous {
        if let Some(index) = trees.iter().position(|t| !t.is_continuous()) {
            return Err(PipelineError::Discontinuous { index });
        }
    }
    let (encoded, _) = convert(trees, cfg.encoding)?;
    let deps: Vec<(Sentence, _)> = encoded.iter().map(|e| (e.sentence.clone(), e.unlabeled())).collect();
    let parser = train_unlabeled(&deps, cfg.epochs, cfg.seed, cfg.projective())?;
    let labeler = train_labeler(&encoded, cfg.epochs, cfg.seed.wrapping_add(1), cfg.prune_labels)?;
    let unary = if cfg.unary_model() {
        Some(train_unary(&extract_instances(trees), cfg.epochs, cfg.seed.wrapping_add(2))?)
    } else {
        None
    };
    Ok(Bundle {
        manifest: Manifest {
            version: MODEL_VERSION,
            encoding: cfg.encoding,
            mode: cfg.mode,
            head_rules: rules_hash(&cfg.rules),
            seed: cfg.seed,
            epochs: cfg.epochs,
            unaries: unary.is_some(),
            prune_labels: cfg.prune_labels,
        },
        parser,
        labeler,
        unary,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("models serialize");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json {
        path: path.display().to_string(),
        source,
    })
}

impl Bundle {
    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        let io = |path: &Path| {
            let p = path.display().to_string();
            move |source| PipelineError::Io { path: p, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut files = vec![
            (MANIFEST_FILE, to_json(&self.manifest)),
            (PARSER_FILE, to_json(&self.parser)),
            (LABELER_FILE, to_json(&self.labeler)),
        ];
        if let Some(u) = &self.unary {
            files.push((UNARY_FILE, to_json(u)));
        }
        for (name, text) in files {
            let path = dir.join(name);
            fs::write(&path, text).map_err(io(&path))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Bundle, PipelineError> {
        let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
        if manifest.version != MODEL_VERSION {
            return Err(PipelineError::Mismatch {
                what: "version",
                expected: MODEL_VERSION.to_string(),
                found: manifest.version.to_string(),
            });
        }
        let unary = if manifest.unaries {
            Some(read_json(&dir.join(UNARY_FILE))?)
        } else {
            None
        };
        Ok(Bundle {
            parser: read_json(&dir.join(PARSER_FILE))?,
            labeler: read_json(&dir.join(LABELER_FILE))?,
            unary,
            manifest,
        })
    }

    /// Fails when a requested setting disagrees with what the bundle was
    /// trained with.
    pub fn expect(&self, mode: Option<Mode>, encoding: Option<Scheme>, rules: Option<&HeadRuleSet>) -> Result<(), PipelineError> {
        if let Some(m) = mode.filter(|m| *m != self.manifest.mode) {
            return Err(PipelineError::Mismatch {
                what: "mode",
                expected: m.to_string(),
                found: self.manifest.mode.to_string(),
            });
        }
        if let Some(e) = encoding.filter(|e| *e != self.manifest.encoding) {
            return Err(PipelineError::Mismatch {
                what: "encoding",
                expected: e.to_string(),
                found: self.manifest.encoding.to_string(),
            });
        }
        if let Some(h) = rules.map(rules_hash).filter(|h| *h != self.manifest.head_rules) {
            return Err(PipelineError::Mismatch {
                what: "head rules",
                expected: h,
                found: self.manifest.head_rules.clone(),
            });
        }
        Ok(())
    }
}

/// What had to be corrected to turn a prediction into a tree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecodeStats {
    pub malformed: usize,
    pub repairs: RepairStats,
    /// Trees that needed the flat fallback.
    pub fallbacks: usize,
}

impl std::ops::AddAssign for DecodeStats {
    fn add_assign(&mut self, o: Self) {
        self.malformed += o.malformed;
        self.repairs += o.repairs;
        self.fallbacks += o.fallbacks;
    }
}

fn flat(sentence: &Sentence, root: usize, label: &str) -> CTree {
    let kids = (1..=sentence.len())
        .map(|p| CNode::preterminal(sentence.token(p).pos.clone(), p))
        .collect();
    CTree::new(sentence.clone(), CNode::proper(label, root, kids))
}

/// Turns an encoded dependency tree, possibly predicted and inconsistent,
/// into a valid constituent tree. Never fails as long as the arcs span the
/// sentence with a single root.
pub fn decode_to_ctree(tree: &EncodedDTree, scheme: Scheme, mode: Mode) -> (CTree, DecodeStats) {
    let mut stats = DecodeStats::default();
    let decoded = decode(tree, scheme);
    stats.malformed = decoded.malformed;
    let (repaired, repairs) = recover_order(&decoded.tree, mode == Mode::Continuous);
    stats.repairs = repairs;
    let built = match &decoded.spines {
        Some(spines) => dtree_to_ctree_with_spines(&repaired, spines).or_else(|_| dtree_to_ctree(&repaired)),
        None => dtree_to_ctree(&repaired),
    };
    let ok = |t: &CTree| t.validate().is_empty() && (mode == Mode::Discontinuous || t.is_continuous());
    match built {
        Ok(t) if ok(&t) => (t, stats),
        _ => {
            stats.fallbacks += 1;
            let label = repaired
                .arcs
                .iter()
                .find(|a| a.head == repaired.root)
                .map(|a| a.label.clone())
                .unwrap_or_else(|| crate::encoding::FALLBACK_LABEL.to_string());
            (flat(&tree.sentence, tree.root, &label), stats)
        }
    }
}

/// Parses one POS-tagged sentence with a trained bundle.
pub fn parse_sentence(sentence: &Sentence, bundle: &Bundle) -> (CTree, DecodeStats) {
    let m = &bundle.manifest;
    if sentence.is_empty() {
        return (CTree::new(sentence.clone(), CNode::proper(crate::encoding::FALLBACK_LABEL, 0, Vec::new())), DecodeStats::default());
    }
    let deps = parse(sentence, &bundle.parser, m.mode == Mode::Continuous);
    let labeled = label_tree(sentence, &deps, &bundle.labeler);
    let (tree, stats) = decode_to_ctree(&labeled, m.encoding, m.mode);
    let tree = match &bundle.unary {
        Some(u) => {
            let with = recover(&tree, u);
            if with.validate().is_empty() {
                with
            } else {
                tree
            }
        }
        None => tree,
    };
    (tree, stats)
}

/// Per-tree roundtrip violations over a treebank.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub trees: usize,
    pub continuous: usize,
    pub violations: BTreeMap<usize, String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "trees {}\ncontinuous {}\nviolations {}\n",
            self.trees,
            self.continuous,
            self.violations.len()
        );
        for (i, v) in &self.violations {
            s.push_str(&format!("tree {}: {}\n", i, v));
        }
        s
    }
}

pub fn check(trees: &[CTree]) -> CheckReport {
    let mut report = CheckReport {
        trees: trees.len(),
        ..CheckReport::default()
    };
    for (i, t) in trees.iter().enumerate() {
        if t.is_continuous() {
            report.continuous += 1;
        }
        let r = roundtrip_check(t);
        if !r.passed() {
            report.violations.insert(i, r.to_string());
        }
    }
    report
}
