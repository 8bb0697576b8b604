use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use headorder::encoding::{encode_ctree, label_alphabet, Scheme};
use headorder::eval::{evalb, EvalConfig, NEGRA_PUNCT, PTB_PUNCT};
use headorder::gen::{gen_corpus, gen_toy_treebank, GenConfig};
use headorder::headrules::HeadRuleSet;
use headorder::io::{
    bracketed_string, read_bracketed, read_conll, read_export, read_json, write_conll, write_export, write_json,
    ExportOptions, Format, RootPolicy,
};
use headorder::pipeline::{self, decode_to_ctree, parse_sentence, Bundle, ConvertStats, DecodeStats, Mode, PipelineConfig};
use headorder::trees::{CTree, Sentence, Token};
use headorder::unary::recover;

#[derive(Parser)]
#[command(name = "headorder", version, about = "Constituent parsing through head-ordered dependency trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a constituent treebank to encoded dependencies (CoNLL-X).
    Convert(ConvertArgs),
    /// Train parser, labeler and unary models into a bundle directory.
    Train(TrainArgs),
    /// Parse POS-tagged sentences with a bundle.
    Parse(ParseArgs),
    /// Turn encoded dependencies (CoNLL-X) back into constituent trees.
    Decode(DecodeArgs),
    /// Put unary nodes back into unaryless trees.
    Recover(RecoverArgs),
    /// Score predicted trees against gold trees.
    Eval(EvalArgs),
    /// Check the conversion roundtrip on every tree of a treebank.
    Check(CheckArgs),
    /// Write a synthetic treebank.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct TreebankArgs {
    /// Input file; stdin when absent or `-`.
    input: Option<PathBuf>,
    /// Input format: bracketed, export or json.
    #[arg(long, default_value = "bracketed")]
    format: Format,
    /// `collins`, `leftmost`, `rightmost` or a rule file.
    #[arg(long, default_value = "collins")]
    head_rules: String,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; stdout when absent or `-`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    src: TreebankArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, default_value = "direct")]
    encoding: Scheme,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    src: TreebankArgs,
    /// Bundle directory to write.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "continuous")]
    mode: Mode,
    #[arg(long, default_value = "direct")]
    encoding: Scheme,
    #[arg(long)]
    no_unaries: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Only consider labels seen with the head's POS and direction.
    #[arg(long)]
    prune_labels: bool,
}

#[derive(Args)]
struct ParseArgs {
    /// Input file; stdin when absent or `-`.
    input: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    model: PathBuf,
    /// `tagged` (form_POS tokens, one sentence per line), `conll`, or a
    /// treebank format whose words and tags are reparsed.
    #[arg(long, default_value = "tagged")]
    input_format: String,
    /// Output format: bracketed, export or json.
    #[arg(long, default_value = "bracketed")]
    format: Format,
    /// Expected mode; fails if the bundle differs.
    #[arg(long)]
    mode: Option<Mode>,
    /// Expected encoding; fails if the bundle differs.
    #[arg(long)]
    encoding: Option<Scheme>,
    /// Expected head rules; fails if the bundle differs.
    #[arg(long)]
    head_rules: Option<String>,
    #[arg(long)]
    no_unaries: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct DecodeArgs {
    input: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, default_value = "direct")]
    encoding: Scheme,
    #[arg(long, default_value = "continuous")]
    mode: Mode,
    #[arg(long, default_value = "bracketed")]
    format: Format,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    src: TreebankArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    gold: PathBuf,
    pred: PathBuf,
    #[arg(long, default_value = "bracketed")]
    format: Format,
    /// Comma-separated punctuation tags, or `ptb` / `negra`.
    #[arg(long, default_value = "ptb")]
    punct_pos: String,
    /// Comma-separated labels not scored at the root.
    #[arg(long, default_value = "")]
    ignore_root: String,
    /// Also score sentences up to these lengths (comma-separated).
    #[arg(long, default_value = "")]
    cutoffs: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    src: TreebankArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    out: OutArgs,
    /// `toy` for the small English grammar, `random` for random trees.
    #[arg(long, default_value = "toy")]
    kind: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    #[arg(long, default_value_t = 0.0)]
    discontinuity: f64,
    #[arg(long, default_value_t = 0.0)]
    unary: f64,
    #[arg(long)]
    binary: bool,
    #[arg(long, default_value = "bracketed")]
    format: Format,
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
    }
}

fn write_output(out: &OutArgs, text: &str) -> Result<()> {
    match &out.output {
        Some(p) if p != Path::new("-") => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        _ => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn head_rules(spec: &str) -> Result<HeadRuleSet> {
    Ok(match spec {
        "collins" => HeadRuleSet::collins_english(),
        "leftmost" => HeadRuleSet::leftmost(),
        "rightmost" => HeadRuleSet::rightmost(),
        path => HeadRuleSet::load(path)?,
    })
}

fn read_trees(text: &str, format: Format, rules: &HeadRuleSet) -> Result<Vec<CTree>> {
    let raw = match format {
        Format::Bracketed => read_bracketed(text)?,
        Format::Export => read_export(text, &ExportOptions::default())?,
        Format::Json => return Ok(read_json(text)?),
        Format::Conll => bail!("conll holds dependency trees; use `decode`"),
    };
    Ok(pipeline::lexicalize_all(&raw, rules)?)
}

fn load_treebank(args: &TreebankArgs) -> Result<Vec<CTree>> {
    let rules = head_rules(&args.head_rules)?;
    read_trees(&read_input(args.input.as_deref())?, args.format, &rules)
}

fn write_trees(trees: &[CTree], format: Format) -> Result<String> {
    match format {
        Format::Bracketed => {
            let mut s = String::new();
            for (i, t) in trees.iter().enumerate() {
                let line = bracketed_string(&t.to_raw())
                    .ok_or_else(|| anyhow!("tree {} is discontinuous; write it as export or json", i))?;
                s.push_str(&line);
                s.push('\n');
            }
            Ok(s)
        }
        Format::Export => {
            let raw: Vec<_> = trees.iter().map(|t| t.to_raw()).collect();
            Ok(write_export(&raw, &ExportOptions::default()))
        }
        Format::Json => Ok(write_json(trees)),
        Format::Conll => bail!("conll output holds dependency trees; use `convert`"),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?)
}

fn read_sentences(text: &str, format: &str) -> Result<Vec<Sentence>> {
    match format {
        "tagged" => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, line)| {
                line.split_whitespace()
                    .map(|tok| {
                        tok.rsplit_once('_')
                            .filter(|(f, p)| !f.is_empty() && !p.is_empty())
                            .map(|(f, p)| Token::new(f, p))
                            .ok_or_else(|| anyhow!("line {}: token {:?} is not form_POS", n + 1, tok))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Sentence::new)
            })
            .collect(),
        "conll" => Ok(read_conll(text, RootPolicy::Repair)?.trees.into_iter().map(|t| t.sentence).collect()),
        other => {
            let f: Format = other.parse().map_err(|e: String| anyhow!(e))?;
            Ok(read_trees(text, f, &HeadRuleSet::leftmost())?.into_iter().map(|t| t.sentence).collect())
        }
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn report_decode(stats: &DecodeStats) {
    eprintln!(
        "malformed labels {}, index repairs {}, label repairs {}, flat fallbacks {}",
        stats.malformed, stats.repairs.index_repairs, stats.repairs.label_repairs, stats.fallbacks
    );
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Convert(a) => {
            let trees = load_treebank(&a.src)?;
            let encoded = pool(a.jobs)?.install(|| {
                trees
                    .par_iter()
                    .map(|t| encode_ctree(&pipeline::encoder_input(t, a.encoding), a.encoding))
                    .collect::<Vec<_>>()
            });
            let mut all = Vec::with_capacity(encoded.len());
            for (i, r) in encoded.into_iter().enumerate() {
                all.push(r.with_context(|| format!("tree {}", i))?);
            }
            let stats = ConvertStats {
                trees: all.len(),
                tokens: all.iter().map(|e| e.len()).sum(),
                alphabet: label_alphabet(&all),
            };
            write_output(&a.out, &write_conll(&all))?;
            eprint!("{}", stats.to_text());
        }
        Command::Train(a) => {
            let trees = load_treebank(&a.src)?;
            let cfg = PipelineConfig {
                mode: a.mode,
                encoding: a.encoding,
                rules: head_rules(&a.src.head_rules)?,
                unaries: !a.no_unaries,
                seed: a.seed,
                epochs: a.epochs,
                prune_labels: a.prune_labels,
            };
            let bundle = pipeline::train(&trees, &cfg)?;
            bundle.save(&a.model)?;
            eprintln!(
                "trained on {} trees: {} labels, unary model {}",
                trees.len(),
                bundle.labeler.alphabet.len(),
                if bundle.unary.is_some() { "on" } else { "off" }
            );
        }
        Command::Parse(a) => {
            let mut bundle = Bundle::load(&a.model)?;
            let rules = a.head_rules.as_deref().map(head_rules).transpose()?;
            bundle.expect(a.mode, a.encoding, rules.as_ref())?;
            if a.no_unaries {
                bundle.unary = None;
            }
            let sentences = read_sentences(&read_input(a.input.as_deref())?, &a.input_format)?;
            let parsed: Vec<(CTree, DecodeStats)> =
                pool(a.jobs)?.install(|| sentences.par_iter().map(|s| parse_sentence(s, &bundle)).collect());
            let mut stats = DecodeStats::default();
            let mut trees = Vec::with_capacity(parsed.len());
            for (i, (t, s)) in parsed.into_iter().enumerate() {
                let v = t.validate();
                if !v.is_empty() {
                    bail!("sentence {}: invalid output tree: {}", i, v[0]);
                }
                stats += s;
                trees.push(t);
            }
            write_output(&a.out, &write_trees(&trees, a.format)?)?;
            report_decode(&stats);
        }
        Command::Decode(a) => {
            if a.encoding == Scheme::Delta && a.mode == Mode::Discontinuous {
                bail!("the delta encoding needs continuous mode");
            }
            let corpus = read_conll(&read_input(a.input.as_deref())?, RootPolicy::Repair)?;
            let mut stats = DecodeStats::default();
            let trees: Vec<CTree> = corpus
                .trees
                .iter()
                .map(|e| {
                    let (t, s) = decode_to_ctree(e, a.encoding, a.mode);
                    stats += s;
                    t
                })
                .collect();
            write_output(&a.out, &write_trees(&trees, a.format)?)?;
            report_decode(&stats);
        }
        Command::Recover(a) => {
            let bundle = Bundle::load(&a.model)?;
            let model = bundle.unary.ok_or_else(|| anyhow!("the bundle has no unary model"))?;
            let trees: Vec<CTree> = load_treebank(&a.src)?.iter().map(|t| recover(t, &model)).collect();
            write_output(&a.out, &write_trees(&trees, a.src.format)?)?;
        }
        Command::Eval(a) => {
            let rules = HeadRuleSet::leftmost();
            let gold = read_trees(&read_input(Some(&a.gold))?, a.format, &rules)?;
            let pred = read_trees(&read_input(Some(&a.pred))?, a.format, &rules)?;
            let punct: Vec<&str> = match a.punct_pos.as_str() {
                "ptb" => PTB_PUNCT.to_vec(),
                "negra" => NEGRA_PUNCT.to_vec(),
                list => split_list(list),
            };
            let mut cfg = EvalConfig::new(split_list(&a.ignore_root), punct);
            cfg.length_cutoffs = split_list(&a.cutoffs)
                .into_iter()
                .map(|c| c.parse().with_context(|| format!("bad cutoff {:?}", c)))
                .collect::<Result<_>>()?;
            let report = evalb(&gold, &pred, &cfg)?;
            let text = if a.json {
                format!("{}\n", report.to_json())
            } else {
                report.to_text()
            };
            io::stdout().write_all(text.as_bytes())?;
        }
        Command::Check(a) => {
            let trees = load_treebank(&a.src)?;
            let report = pipeline::check(&trees);
            let text = if a.json {
                format!("{}\n", serde_json::to_string(&report)?)
            } else {
                report.to_text()
            };
            io::stdout().write_all(text.as_bytes())?;
            return Ok(report.passed());
        }
        Command::Generate(a) => {
            let cfg = GenConfig {
                seed: a.seed,
                max_len: a.max_len,
                discontinuity: a.discontinuity,
                unary: a.unary,
                binary: a.binary,
                ..GenConfig::default()
            };
            let trees = match a.kind.as_str() {
                "toy" => gen_toy_treebank(&cfg, a.n),
                "random" => gen_corpus(&cfg, a.n),
                other => bail!("unknown kind {:?} (toy, random)", other),
            };
            write_output(&a.out, &write_trees(&trees, a.format)?)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
