//! Acceptance run: one PASS/FAIL line per criterion.

use std::fs;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use headorder::encoding::{decode, encode_delta, encode_direct, label_alphabet, EncodedArc, EncodedDTree, Scheme};
use headorder::eval::{evalb, EvalConfig, PTB_PUNCT};
use headorder::fixtures;
use headorder::gen::{enumerate_ctrees, gen_ctree, gen_toy_treebank, GenConfig};
use headorder::io::write_conll;
use headorder::labeler::viterbi;
use headorder::parser::{decode_nonprojective, decode_projective, ScoreMatrix};
use headorder::pipeline::{self, decode_to_ctree, parse_sentence, Mode, PipelineConfig};
use headorder::reduction::{ctree_to_dtree, dtree_to_ctree};
use headorder::trees::{check_heads, is_projective, Arc, CTree, DepTree, HeadOrderedDTree, Sentence};
use headorder::unary::extract_instances;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn labels_by_modifier(d: &HeadOrderedDTree) -> Vec<String> {
    let mut arcs: Vec<&Arc> = d.arcs.iter().collect();
    arcs.sort_by_key(|a| a.modifier);
    arcs.iter().map(|a| format!("{}#{}", a.label, a.order)).collect()
}

fn figure_one() -> Outcome {
    let en = ctree_to_dtree(&fixtures::english()).unwrap();
    let de = ctree_to_dtree(&fixtures::german()).unwrap();
    let (en_l, de_l) = (labels_by_modifier(&en), labels_by_modifier(&de));
    let en_ok = en_l == ["NP#1", "S#2", "VP#1", "VP#1", "S#2"];
    let de_ok = de_l == ["NP#2", "NP#1", "S#1", "VROOT#1"];
    let back_en = dtree_to_ctree(&en).unwrap() == fixtures::english_unaryless();
    let back_de = dtree_to_ctree(&de).unwrap() == fixtures::german().strip_unaries();
    outcome(
        en_ok && de_ok && back_en && back_de,
        format!(
            "english {} ({}), german {} ({}), decode english {}, german {}",
            en_ok,
            en_l.join(" "),
            de_ok,
            de_l.join(" "),
            back_en,
            back_de
        ),
    )
}

/// Exhaustive trees up to five words and 10^4 random ones up to eight.
fn bijection_corpus() -> Vec<CTree> {
    let mut trees = Vec::new();
    for len in 1..=5 {
        trees.extend(enumerate_ctrees(len, false, false).unwrap());
    }
    for i in 0..10_000u64 {
        let cfg = GenConfig {
            seed: 7,
            labels: 1 + (i % 3) as usize,
            discontinuity: 0.5,
            binary: i % 3 == 0,
            ..GenConfig::default()
        };
        trees.push(gen_ctree(&cfg, 1 + (i % 8) as usize, i));
    }
    trees
}

fn bijection(corpus: &[CTree]) -> Outcome {
    let failures = corpus
        .iter()
        .filter(|t| ctree_to_dtree(t).and_then(|d| dtree_to_ctree(&d)).ok().as_ref() != Some(*t))
        .count();
    outcome(failures == 0, format!("{} trees, {} failures", corpus.len(), failures))
}

fn strict_order(corpus: &[CTree]) -> Outcome {
    let binary: Vec<&CTree> = corpus.iter().filter(|t| t.is_binary()).collect();
    let failures = binary
        .iter()
        .filter(|t| match ctree_to_dtree(t) {
            Ok(d) => !d.is_strictly_ordered() || dtree_to_ctree(&d).ok().as_ref() != Some(**t),
            Err(_) => true,
        })
        .count();
    outcome(failures == 0, format!("{} binary trees, {} failures", binary.len(), failures))
}

fn continuity(corpus: &[CTree]) -> Outcome {
    let with_unaries = (0..2_000u64).map(|i| {
        let cfg = GenConfig {
            seed: 11,
            unary: 0.3,
            discontinuity: 0.5,
            ..GenConfig::default()
        };
        gen_ctree(&cfg, 1 + (i % 8) as usize, i)
    });
    let all: Vec<CTree> = corpus.iter().cloned().chain(with_unaries).collect();
    let mut counter = 0;
    let mut continuous = 0;
    for t in &all {
        let d = ctree_to_dtree(&t.strip_unaries()).unwrap();
        if t.is_continuous() {
            continuous += 1;
        }
        if t.is_continuous() != (d.is_projective() && d.is_nested()) {
            counter += 1;
        }
    }
    outcome(
        counter == 0,
        format!("{} trees ({} continuous), {} counterexamples", all.len(), continuous, counter),
    )
}

fn one_head(left: &[usize], right: &[usize]) -> HeadOrderedDTree {
    let n = left.len() + right.len() + 1;
    let h = left.len() + 1;
    let s = Sentence::from_pairs((0..n).map(|_| ("w", "P")));
    let mut arcs = Vec::new();
    for (k, &o) in left.iter().enumerate() {
        arcs.push(Arc::new(h, h - 1 - k, "Z", o));
    }
    for (k, &o) in right.iter().enumerate() {
        arcs.push(Arc::new(h, h + 1 + k, "Z", o));
    }
    HeadOrderedDTree::new(s, h, arcs)
}

fn encoding_roundtrips(corpus: &[CTree]) -> Outcome {
    let (mut direct_fail, mut delta_fail, mut delta_n) = (0, 0, 0);
    for t in corpus {
        let d = ctree_to_dtree(t).unwrap();
        let back = decode(&encode_direct(&d), Scheme::Direct).tree;
        if back != d || dtree_to_ctree(&back).ok().as_ref() != Some(t) {
            direct_fail += 1;
        }
        if d.is_nested() && d.is_projective() {
            delta_n += 1;
            let ok = encode_delta(&d).map(|e| decode(&e, Scheme::Delta).tree == d).unwrap_or(false);
            if !ok {
                delta_fail += 1;
            }
        }
    }
    // left indices head-outward #1 #3 #4, right #2 #3 #3 #5
    let foot = encode_delta(&one_head(&[1, 3, 4], &[2, 3, 3, 5])).unwrap();
    let mut arcs: Vec<&EncodedArc> = foot.arcs.iter().collect();
    arcs.sort_by_key(|a| a.modifier);
    let idx: Vec<&str> = arcs.iter().map(|a| &a.label[1..]).collect();
    // modifiers 1..3 are the left side, farthest first
    let left: Vec<&str> = idx[..3].iter().rev().copied().collect();
    let right = &idx[3..];
    let foot_ok = left == ["#1", "#2", "#1"] && right == ["#2", "#1", "#0", "#2"];
    outcome(
        direct_fail == 0 && delta_fail == 0 && foot_ok,
        format!(
            "direct {} trees {} failures, delta {} trees {} failures, footnote {}",
            corpus.len(),
            direct_fail,
            delta_n,
            delta_fail,
            foot_ok
        ),
    )
}

fn alphabets() -> Outcome {
    let mut delta_ok = 0;
    let mut hn_checked = 0;
    let mut hn_ok = 0;
    let mut sizes = Vec::new();
    for seed in 1..=20 {
        let trees = gen_toy_treebank(&GenConfig { seed, ..GenConfig::default() }, 200);
        let size = |scheme| {
            let (enc, _) = pipeline::convert(&trees, scheme).unwrap();
            label_alphabet(&enc).len()
        };
        let (di, de, hn) = (size(Scheme::Direct), size(Scheme::Delta), size(Scheme::Hn));
        sizes.push(format!("{}/{}/{}", de, di, hn));
        if de <= di {
            delta_ok += 1;
        }
        let tall = trees
            .iter()
            .any(|t| headorder::encoding::proper_spines(t).iter().any(|s| s.len() >= 2));
        if tall {
            hn_checked += 1;
            if hn > di {
                hn_ok += 1;
            }
        }
    }
    outcome(
        delta_ok == 20 && hn_ok == hn_checked,
        format!(
            "delta <= direct on {}/20, hn > direct on {}/{} (delta/direct/hn: {})",
            delta_ok,
            hn_ok,
            hn_checked,
            sizes.join(" ")
        ),
    )
}

fn all_heads(n: usize) -> Vec<Vec<usize>> {
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

fn decoder_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trees: Vec<Vec<Vec<usize>>> = (0..=5).map(all_heads).collect();
    let (mut eisner_bad, mut cle_bad, mut vit_bad) = (0, 0, 0);
    for k in 0..250 {
        let n = 1 + k % 5;
        let s = ScoreMatrix::from_fn(n, |_, _| rng.random_range(-20..=20) as f64 / 4.0);
        let best = |proj: bool| {
            trees[n]
                .iter()
                .filter(|h| !proj || is_projective(h))
                .map(|h| s.tree_score(&DepTree::new(h.clone())))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let e = decode_projective(&s);
        if !e.validate().is_empty() || !e.is_projective() || s.tree_score(&e) != best(true) {
            eisner_bad += 1;
        }
        let c = decode_nonprojective(&s);
        if !c.validate().is_empty() || s.tree_score(&c) != best(false) {
            cle_bad += 1;
        }
    }
    for _ in 0..250 {
        let n = rng.random_range(1..=4usize);
        let labels = rng.random_range(1..=5usize);
        let cands: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mut c: Vec<usize> = (0..labels).filter(|_| rng.random_bool(0.7)).collect();
                if c.is_empty() {
                    c.push(rng.random_range(0..labels));
                }
                c
            })
            .collect();
        let un: Vec<Vec<f64>> = (0..n).map(|_| (0..labels).map(|_| rng.random_range(-8..=8) as f64).collect()).collect();
        let pw: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|_| (0..labels).map(|_| (0..labels).map(|_| rng.random_range(-8..=8) as f64).collect()).collect())
            .collect();
        let score = |ys: &[usize]| {
            (0..n).map(|i| un[i][ys[i]] + if i > 0 { pw[i][ys[i - 1]][ys[i]] } else { 0.0 }).sum::<f64>()
        };
        let mut best = f64::NEG_INFINITY;
        let mut idx = vec![0usize; n];
        loop {
            let ys: Vec<usize> = idx.iter().zip(&cands).map(|(&i, c)| c[i]).collect();
            best = best.max(score(&ys));
            let mut j = 0;
            while j < n {
                idx[j] += 1;
                if idx[j] < cands[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == n {
                break;
            }
        }
        let got = viterbi(&cands, |i, y| un[i][y], |i, a, b| pw[i][a][b]);
        let legal = got.iter().zip(&cands).all(|(y, c)| c.contains(y));
        if !legal || score(&got) != best {
            vit_bad += 1;
        }
    }
    outcome(
        eisner_bad + cle_bad + vit_bad == 0,
        format!(
            "250 matrices: eisner {} mismatches, arborescence {} mismatches; 250 chains: viterbi {} mismatches",
            eisner_bad, cle_bad, vit_bad
        ),
    )
}

/// Random projective tree: every span picks a head and splits its left and
/// right remainders into runs headed by its modifiers.
fn random_projective(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    fn span(rng: &mut ChaCha8Rng, lo: usize, hi: usize, parent: usize, heads: &mut [usize]) {
        let h = rng.random_range(lo..=hi);
        heads[h - 1] = parent;
        for (a, b) in [(lo, h.wrapping_sub(1)), (h + 1, hi)] {
            if a > b || b == usize::MAX {
                continue;
            }
            let mut start = a;
            while start <= b {
                let end = rng.random_range(start..=b);
                span(rng, start, end, h, heads);
                start = end + 1;
            }
        }
    }
    let mut heads = vec![0; n];
    span(rng, 1, n, 0, &mut heads);
    heads
}

fn random_label(rng: &mut ChaCha8Rng) -> String {
    const NAMES: &[&str] = &["NP", "VP", "S", "PP", "X|Y", "A\\#B", "SBAR"];
    const JUNK: &[&str] = &["", "#", "##", "NP#", "#3", "VP#x", "S#-1", "S#99999999999999999999", "\\", "∅#1", "A|B#2", "|#1"];
    match rng.random_range(0..10) {
        0 | 1 => JUNK[rng.random_range(0..JUNK.len())].to_string(),
        _ => format!("{}#{}", NAMES[rng.random_range(0..NAMES.len())], rng.random_range(0..=5)),
    }
}

fn repair_totality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut bad = 0;
    let mut fallbacks = 0;
    let mut malformed = 0;
    let schemes = [Scheme::Direct, Scheme::Delta, Scheme::Hn];
    for i in 0..10_000 {
        let n = rng.random_range(1..=10usize);
        let heads = random_projective(&mut rng, n);
        assert!(check_heads(&heads).is_empty() && is_projective(&heads));
        let sentence = Sentence::from_pairs((0..n).map(|k| ("w", ["A", "B", "C"][k % 3])));
        let labels: Vec<String> = (0..n).map(|_| random_label(&mut rng)).collect();
        let enc = EncodedDTree::from_heads(sentence, &heads, &labels);
        let (t, stats) = decode_to_ctree(&enc, schemes[i % 3], Mode::Continuous);
        fallbacks += stats.fallbacks;
        malformed += stats.malformed;
        if !t.validate().is_empty() || !t.is_continuous() {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!(
            "10000 trees, {} invalid outputs ({} malformed labels, {} flat fallbacks)",
            bad, malformed, fallbacks
        ),
    )
}

fn memorization() -> Outcome {
    let trees = gen_toy_treebank(&GenConfig::default(), 200);
    let cfg = PipelineConfig::default();
    let bundle = pipeline::train(&trees, &cfg).unwrap();
    let pred: Vec<CTree> = trees.iter().map(|t| parse_sentence(&t.sentence, &bundle).0).collect();
    let eval = EvalConfig::new([], PTB_PUNCT.iter().copied());
    let f1 = evalb(&trees, &pred, &eval).unwrap().f1();
    let acc = bundle.unary.as_ref().unwrap().accuracy(&extract_instances(&trees));
    outcome(
        f1 >= 0.95 && acc >= 0.99,
        format!("{} epochs: self-parse F1 {:.4}, unary oracle accuracy {:.4}", cfg.epochs, f1, acc),
    )
}

fn scorer() -> Outcome {
    let eval = EvalConfig::new([], ["."]);
    let s = fixtures::english_sentence();
    use headorder::trees::CNode;
    let pred = CTree::new(
        s,
        CNode::proper(
            "S",
            3,
            vec![
                CNode::proper("NP", 2, vec![CNode::preterminal("DT", 1), CNode::preterminal("NN", 2)]),
                CNode::proper("VP", 3, vec![CNode::preterminal("VBZ", 3), CNode::preterminal("RB", 4)]),
                CNode::preterminal("JJ", 5),
                CNode::preterminal(".", 6),
            ],
        ),
    );
    let gold = fixtures::english_unaryless();
    let r = evalb(&[gold.clone()], &[pred], &eval).unwrap();
    let third = 2.0 / 3.0;
    let example = (r.lp() - third).abs() < 1e-9 && (r.lr() - third).abs() < 1e-9 && (r.f1() - third).abs() < 1e-9;
    let same = evalb(&[gold.clone()], &[gold], &eval).unwrap();
    let identity = same.lp() == 1.0 && same.lr() == 1.0 && same.f1() == 1.0;
    let cfg = GenConfig {
        labels: 2,
        discontinuity: 0.3,
        unary: 0.2,
        ..GenConfig::default()
    };
    let mut asym = 0;
    for i in 0..100u64 {
        let len = 2 + (i % 7) as usize;
        let a = gen_ctree(&cfg, len, i);
        let mut b = gen_ctree(&cfg, len, i + 1000);
        b.sentence = a.sentence.clone();
        let ab = evalb(&[a.clone()], &[b.clone()], &eval).unwrap();
        let ba = evalb(&[b], &[a], &eval).unwrap();
        if (ab.lp() - ba.lr()).abs() > 1e-12 || (ab.lr() - ba.lp()).abs() > 1e-12 {
            asym += 1;
        }
    }
    outcome(
        example && identity && asym == 0,
        format!(
            "example LP {:.4} LR {:.4} F1 {:.4}, identity {}, {} asymmetric of 100",
            r.lp(),
            r.lr(),
            r.f1(),
            identity,
            asym
        ),
    )
}

fn run_once(dir: &std::path::Path) -> (String, Vec<(String, Vec<u8>)>, String) {
    let trees = gen_toy_treebank(&GenConfig { seed: 3, ..GenConfig::default() }, 60);
    let (enc, _) = pipeline::convert(&trees, Scheme::Delta).unwrap();
    let conll = write_conll(&enc);
    let cfg = PipelineConfig {
        encoding: Scheme::Delta,
        epochs: 3,
        seed: 5,
        ..PipelineConfig::default()
    };
    let bundle = pipeline::train(&trees, &cfg).unwrap();
    bundle.save(dir).unwrap();
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    let pred: Vec<CTree> = trees.iter().map(|t| parse_sentence(&t.sentence, &bundle).0).collect();
    let report = evalb(&trees, &pred, &EvalConfig::new([], PTB_PUNCT.iter().copied())).unwrap();
    (conll, files, report.to_json())
}

fn determinism() -> Outcome {
    let base = std::env::temp_dir().join(format!("headorder-acceptance-{}", std::process::id()));
    let a = run_once(&base.join("a"));
    let b = run_once(&base.join("b"));
    let _ = fs::remove_dir_all(&base);
    let (c, m, r) = (a.0 == b.0, a.1 == b.1, a.2 == b.2);
    outcome(
        c && m && r && a.1.len() == 4,
        format!("conll {}, bundle ({} files) {}, report {}", c, a.1.len(), m, r),
    )
}

fn main() {
    let corpus = bijection_corpus();
    let checks: Vec<(u32, &str, Box<dyn Fn() -> Outcome>)> = vec![
        (1, "figure 1 conversions", Box::new(figure_one)),
        (2, "c-tree/d-tree bijection", Box::new(|| bijection(&corpus))),
        (3, "binary trees are strictly ordered", Box::new(|| strict_order(&corpus))),
        (4, "continuity iff projective and nested", Box::new(|| continuity(&corpus))),
        (5, "encoding roundtrips", Box::new(|| encoding_roundtrips(&corpus))),
        (6, "label alphabet sizes", Box::new(alphabets)),
        (7, "decoder oracles", Box::new(decoder_oracles)),
        (8, "repair totality", Box::new(repair_totality)),
        (9, "end-to-end memorization", Box::new(memorization)),
        (10, "scorer", Box::new(scorer)),
        (11, "determinism", Box::new(determinism)),
    ];
    let mut failed = Vec::new();
    for (n, name, check) in &checks {
        let start = Instant::now();
        let o = check();
        println!(
            "criterion {:>2} {}: {} [{:.1}s] {}",
            n,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(*n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", failed);
        std::process::exit(1);
    }
}
