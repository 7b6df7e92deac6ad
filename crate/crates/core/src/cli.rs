//! The `amrfact` command line.
//!
//! Exit codes: 0 on success, 1 on data or validation errors, 2 on usage
//! errors (bad flags, missing required settings, unreadable config).

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapter::DEFAULT_TIMEOUT;
use crate::amr::{parse_penman_many, serialize_penman, serialize_penman_pretty, AmrGraph};
use crate::candidate::NegativeCandidate;
use crate::eval::{read_eval_file, run_evaluation, BootstrapConfig, EvalOptions, Split};
use crate::filter::{filter_batch, score_candidates, FilterConfig, RejectReason, ScoreRecord, ScorerSpec};
use crate::jsonl::{read_jsonl, read_lines, write_jsonl};
use crate::perturb::{apply_all, ErrorFamily, PerturbConfig, PerturbationContext, ValuePools};
use crate::pipeline::{
    build_dataset, load_lexicon, realize, BuildOptions, LabeledExample, Label, Provenance, Realizer, StatsReport,
    DEFAULT_SPLIT_RATIO,
};

#[derive(Debug, Parser)]
#[command(
    name = "amrfact",
    version,
    about = "Generate, filter and evaluate factually inconsistent summaries via AMR graph perturbation"
)]
struct Cli {
    /// TOML file with default settings; command-line flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse PENMAN graphs and print their canonical form
    Parse(ParseArgs),
    /// Apply every applicable perturbation to PENMAN graphs
    Perturb(PerturbArgs),
    /// Score negative candidates and split them into valid and rejected
    Filter(FilterArgs),
    /// Build a balanced entailment/contradiction dataset from a corpus
    BuildDataset(BuildArgs),
    /// Tune per-origin thresholds and report balanced accuracy
    Evaluate(EvalArgs),
    /// Report per-family composition of candidates or a dataset
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct FormatArg {
    /// Output format for reports
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct LexiconArgs {
    /// Antonym lexicon TSV (concept, relation, replacement); defaults to the bundled lexicon
    #[arg(long, value_name = "FILE")]
    lexicon: Option<PathBuf>,
    /// Modality map TSV (concept, stronger concept); defaults to the bundled map
    #[arg(long, value_name = "FILE")]
    modality_map: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PerturbSelection {
    /// Comma-separated error families to enable (default: all five)
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    families: Option<Vec<ErrorFamily>>,
    /// Per-family cap on sites per graph, as FAMILY=N; repeatable
    #[arg(long = "max-sites", value_name = "FAMILY=N", value_parser = parse_cap)]
    max_sites: Vec<(ErrorFamily, usize)>,
    /// Keep one randomly chosen site per variant instead of every site
    #[arg(long)]
    no_exhaustive: bool,
}

#[derive(Debug, Args)]
struct ParseArgs {
    /// PENMAN file (one or more blank-line-separated graphs)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Indent nested nodes
    #[arg(long)]
    pretty: bool,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct PerturbArgs {
    /// PENMAN file (one or more blank-line-separated graphs)
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[command(flatten)]
    selection: PerturbSelection,
    #[command(flatten)]
    lexicon: LexiconArgs,
    /// Source document text, used to decide which values are foreign to it
    #[arg(long, value_name = "FILE")]
    document: Option<PathBuf>,
    /// Extra PENMAN graphs whose values feed out-of-article substitution
    #[arg(long, value_name = "FILE")]
    pool: Option<PathBuf>,
    /// Random seed for site choices (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default 1); output does not depend on it
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// Entailment ceiling: candidates need entailment < tau1 (default 0.9)
    #[arg(long, allow_negative_numbers = true)]
    tau1: Option<f64>,
    /// Relevance floor: candidates need relevance > tau2 (default -1.8)
    #[arg(long, allow_negative_numbers = true)]
    tau2: Option<f64>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// Candidates JSONL, as written by build-dataset
    #[arg(long, value_name = "FILE")]
    candidates: PathBuf,
    /// Precomputed score JSONL (candidate_id, entailment, relevance)
    #[arg(long, value_name = "FILE", conflicts_with = "scorer")]
    scores: Option<PathBuf>,
    /// Scorer: builtin, file:PATH or exec:CMD
    #[arg(long, value_name = "SPEC")]
    scorer: Option<String>,
    /// Corpus JSONL providing document texts (needed by builtin and exec scorers)
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Realizer for candidates without text: passthrough or exec:CMD
    #[arg(long, value_name = "SPEC")]
    realizer: Option<String>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Directory for valid.jsonl and rejected.jsonl
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Parallel adapter streams (default 1)
    #[arg(long)]
    jobs: Option<usize>,
    /// Seconds to wait for each adapter response
    #[arg(long, value_name = "SECS")]
    adapter_timeout: Option<u64>,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Corpus JSONL: {doc_id, document_text, summary_sentences: [{text, penman}]}
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    lexicon: LexiconArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Keep every candidate; skip scoring and filtering
    #[arg(long)]
    no_filter: bool,
    /// Random seed (required, here or in the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Scorer: builtin, file:PATH or exec:CMD (default builtin)
    #[arg(long, value_name = "SPEC")]
    scorer: Option<String>,
    /// Realizer: passthrough or exec:CMD (default passthrough)
    #[arg(long, value_name = "SPEC")]
    realizer: Option<String>,
    #[command(flatten)]
    selection: PerturbSelection,
    /// Share of documents in the training split (default 0.874)
    #[arg(long, value_name = "RATIO")]
    split_ratio: Option<f64>,
    /// Write a single dataset.jsonl instead of train/validation files
    #[arg(long, conflicts_with = "split_ratio")]
    no_split: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads and adapter streams (default 1); output does not depend on it
    #[arg(long)]
    jobs: Option<usize>,
    /// Seconds to wait for each adapter response
    #[arg(long, value_name = "SECS")]
    adapter_timeout: Option<u64>,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Validation records JSONL: {dataset_name, origin, split, score, gold}
    #[arg(long, value_name = "FILE")]
    val: PathBuf,
    /// Test records JSONL (may be the same file as --val)
    #[arg(long, value_name = "FILE")]
    test: PathBuf,
    /// Bootstrap resamples for confidence intervals; 0 disables them (default 1000)
    #[arg(long, value_name = "N")]
    ci_resamples: Option<usize>,
    /// Confidence level (default 0.95)
    #[arg(long)]
    level: Option<f64>,
    /// Random seed for bootstrap resampling (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Treat higher scores as more faithful
    #[arg(long)]
    invert_scores: bool,
    /// Also write the JSON report to this file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Candidates JSONL or labeled dataset JSONL
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Score JSONL for candidates; adds the filter acceptance rate
    #[arg(long, value_name = "FILE")]
    scores: Option<PathBuf>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    format: FormatArg,
}

fn parse_cap(s: &str) -> Result<(ErrorFamily, usize), String> {
    let (fam, n) = s.split_once('=').ok_or_else(|| format!("expected FAMILY=N, got `{s}`"))?;
    let n = n.trim().parse().map_err(|e| format!("bad count in `{s}`: {e}"))?;
    Ok((fam.parse()?, n))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterSection {
    tau1: Option<f64>,
    tau2: Option<f64>,
    enabled: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbSection {
    families: Option<Vec<ErrorFamily>>,
    max_sites: Option<BTreeMap<ErrorFamily, usize>>,
    exhaustive: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateSection {
    ci_resamples: Option<usize>,
    level: Option<f64>,
    invert_scores: Option<bool>,
}

/// Settings shared across subcommands. Relative paths are resolved against
/// the directory holding the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    corpus: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    modality_map: Option<PathBuf>,
    out: Option<PathBuf>,
    scorer: Option<String>,
    realizer: Option<String>,
    split_ratio: Option<f64>,
    split: Option<bool>,
    jobs: Option<usize>,
    adapter_timeout: Option<u64>,
    #[serde(default)]
    filter: FilterSection,
    #[serde(default)]
    perturb: PerturbSection,
    #[serde(default)]
    evaluate: EvaluateSection,
}

impl RunConfig {
    fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.corpus, &mut cfg.lexicon, &mut cfg.modality_map, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_spec<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, Failure> {
    s.parse().map_err(Failure::Usage)
}

fn json_line(out: &mut dyn Write, value: &impl Serialize) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn timeout(flag: Option<u64>, cfg: &RunConfig) -> Duration {
    flag.or(cfg.adapter_timeout).map_or(DEFAULT_TIMEOUT, Duration::from_secs)
}

fn thresholds(args: &ThresholdArgs, cfg: &RunConfig) -> Result<FilterConfig, Failure> {
    let d = FilterConfig::default();
    FilterConfig::new(
        args.tau1.or(cfg.filter.tau1).unwrap_or(d.tau1),
        args.tau2.or(cfg.filter.tau2).unwrap_or(d.tau2),
    )
    .map_err(|e| usage(e.to_string()))
}

fn perturb_config(sel: &PerturbSelection, cfg: &RunConfig, seed: u64) -> PerturbConfig {
    let mut pc = PerturbConfig::with_seed(seed);
    if let Some(f) = sel.families.clone().or_else(|| cfg.perturb.families.clone()) {
        pc.families = f.into_iter().collect();
    }
    if let Some(m) = &cfg.perturb.max_sites {
        pc.max_sites = m.clone();
    }
    pc.max_sites.extend(sel.max_sites.iter().copied());
    pc.exhaustive = !sel.no_exhaustive && cfg.perturb.exhaustive.unwrap_or(true);
    pc
}

fn read_graphs(path: &Path) -> anyhow::Result<Vec<AmrGraph>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let graphs = parse_penman_many(&text).with_context(|| format!("{}", path.display()))?;
    if graphs.is_empty() {
        bail!("{}: no graphs found", path.display());
    }
    Ok(graphs)
}

fn cmd_parse(args: ParseArgs, out: &mut dyn Write) -> Outcome {
    let graphs = read_graphs(&args.input)?;
    let render = |g: &AmrGraph| if args.pretty { serialize_penman_pretty(g) } else { serialize_penman(g) };
    match args.format.format {
        Format::Text => {
            for (i, g) in graphs.iter().enumerate() {
                if i > 0 {
                    writeln!(out).map_err(anyhow::Error::from)?;
                }
                writeln!(out, "{}", render(g).map_err(anyhow::Error::from)?).map_err(anyhow::Error::from)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Parsed<'a> {
                penman: String,
                graph: &'a AmrGraph,
            }
            let items = graphs
                .iter()
                .map(|g| Ok(Parsed { penman: render(g)?, graph: g }))
                .collect::<Result<Vec<_>, crate::amr::GraphError>>()
                .map_err(anyhow::Error::from)?;
            json_line(out, &items)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PerturbedItem {
    source_id: String,
    family: ErrorFamily,
    variant: crate::perturb::Variant,
    site: String,
    penman: String,
}

fn cmd_perturb(args: PerturbArgs, cfg: &RunConfig, out: &mut dyn Write) -> Outcome {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let config = perturb_config(&args.selection, cfg, seed);
    let lex_path = args.lexicon.lexicon.as_deref().or(cfg.lexicon.as_deref());
    let mod_path = args.lexicon.modality_map.as_deref().or(cfg.modality_map.as_deref());
    let lexicon = Arc::new(load_lexicon(lex_path, mod_path).map_err(anyhow::Error::from)?);
    let mut graphs = read_graphs(&args.input)?;
    for (i, g) in graphs.iter_mut().enumerate() {
        if !g.metadata().contains_key("id") {
            g.metadata_mut().insert("id".into(), format!("g{i}"));
        }
    }
    let mut global = ValuePools::harvest(&graphs);
    if let Some(pool) = &args.pool {
        global.extend(&ValuePools::harvest(&read_graphs(pool)?));
    }
    let mut ctx = PerturbationContext::new(lexicon)
        .with_same_doc(ValuePools::harvest(&graphs))
        .with_global(Arc::new(global))
        .with_document_graphs(&graphs);
    match &args.document {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            ctx = ctx.with_document_text(&text);
        }
        None => {
            for g in &graphs {
                if let Some(snt) = g.metadata().get("snt") {
                    ctx = ctx.with_document_text(snt);
                }
            }
        }
    }
    let jobs = args.jobs.or(cfg.jobs).unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(anyhow::Error::from)?;
    let results: Vec<Vec<(crate::perturb::PerturbationSite, AmrGraph)>> =
        pool.install(|| graphs.par_iter().map(|g| apply_all(g, &ctx, &config)).collect());

    let mut items = Vec::new();
    for (g, edits) in graphs.iter().zip(results) {
        let source_id = g.metadata()["id"].clone();
        for (site, mut perturbed) in edits {
            perturbed.metadata_mut().clear();
            items.push(PerturbedItem {
                source_id: source_id.clone(),
                family: site.family(),
                variant: site.variant,
                site: site.to_string(),
                penman: serialize_penman(&perturbed).map_err(anyhow::Error::from)?,
            });
        }
    }
    match args.format.format {
        Format::Json => json_line(out, &items)?,
        Format::Text => {
            let mut counters: HashMap<&str, usize> = HashMap::new();
            for item in &items {
                let k = counters.entry(&item.source_id).or_default();
                writeln!(
                    out,
                    "# ::id {}.{}\n# ::family {}\n# ::variant {}\n# ::site {}\n{}\n",
                    item.source_id, k, item.family, item.variant, item.site, item.penman
                )
                .map_err(anyhow::Error::from)?;
                *k += 1;
            }
        }
    }
    Ok(())
}

fn document_texts(corpus: &Path) -> anyhow::Result<HashMap<String, String>> {
    let parsed = crate::pipeline::ingest(corpus)?;
    Ok(parsed
        .documents
        .into_iter()
        .map(|d| (d.record.doc_id, d.record.document_text))
        .collect())
}

#[derive(Serialize)]
struct RejectedLine<'a> {
    #[serde(flatten)]
    candidate: &'a NegativeCandidate,
    reason: RejectReason,
    entailment: f64,
    relevance: f64,
}

#[derive(Serialize)]
struct FilterReport {
    total: usize,
    valid: usize,
    rejected: BTreeMap<RejectReason, usize>,
    tau1: f64,
    tau2: f64,
}

fn cmd_filter(args: FilterArgs, cfg: &RunConfig, out: &mut dyn Write) -> Outcome {
    let fc = thresholds(&args.thresholds, cfg)?;
    let scorer = match (&args.scores, &args.scorer) {
        (Some(path), _) => ScorerSpec::File(path.clone()),
        (None, Some(spec)) => parse_spec(spec)?,
        (None, None) => match &cfg.scorer {
            Some(spec) => parse_spec(spec)?,
            None => return Err(usage("filter needs --scores FILE or --scorer SPEC")),
        },
    };
    let corpus = args.corpus.clone().or_else(|| cfg.corpus.clone());
    if corpus.is_none() && !matches!(scorer, ScorerSpec::File(_)) {
        return Err(usage("--corpus is required with the builtin and exec scorers"));
    }
    let realizer: Realizer = parse_spec(args.realizer.as_deref().or(cfg.realizer.as_deref()).unwrap_or("passthrough"))?;
    let jobs = args.jobs.or(cfg.jobs).unwrap_or(1).max(1);
    let timeout = timeout(args.adapter_timeout, cfg);

    let mut candidates: Vec<NegativeCandidate> = read_jsonl(&args.candidates).map_err(anyhow::Error::from)?;
    let missing: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].perturbed_text.is_none())
        .collect();
    if !missing.is_empty() {
        let mut todo: Vec<NegativeCandidate> = missing.iter().map(|&i| candidates[i].clone()).collect();
        realize(&mut todo, &realizer, jobs, timeout).map_err(anyhow::Error::from)?;
        for (i, c) in missing.into_iter().zip(todo) {
            candidates[i] = c;
        }
    }
    let documents = match &corpus {
        Some(path) => document_texts(path)?,
        None => HashMap::new(),
    };
    let scores = score_candidates(&candidates, &documents, &scorer, jobs, timeout).map_err(anyhow::Error::from)?;
    let outcome = filter_batch(candidates, &scores, &fc).map_err(anyhow::Error::from)?;

    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let write = |name: &str, f: &dyn Fn(&mut fs::File) -> std::io::Result<()>| -> anyhow::Result<()> {
        let path = args.out.join(name);
        let mut file = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        f(&mut file).with_context(|| format!("cannot write {}", path.display()))
    };
    write("valid.jsonl", &|f| write_jsonl(f, &outcome.valid))?;
    write("rejected.jsonl", &|f| {
        write_jsonl(
            f,
            outcome.rejected.iter().map(|r| RejectedLine {
                candidate: &r.candidate,
                reason: r.reason,
                entailment: r.score.entailment,
                relevance: r.score.relevance,
            }),
        )
    })?;
    write("scores.jsonl", &|f| write_jsonl(f, &scores))?;

    let mut rejected = BTreeMap::new();
    for r in &outcome.rejected {
        *rejected.entry(r.reason).or_default() += 1;
    }
    let report = FilterReport {
        total: outcome.len(),
        valid: outcome.valid.len(),
        rejected,
        tau1: fc.tau1,
        tau2: fc.tau2,
    };
    match args.format.format {
        Format::Json => json_line(out, &report)?,
        Format::Text => {
            let mut text = format!("candidates: {}\nvalid: {}\n", report.total, report.valid);
            for (reason, n) in &report.rejected {
                text.push_str(&format!("rejected ({reason}): {n}\n"));
            }
            out.write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

fn cmd_build(args: BuildArgs, cfg: &RunConfig, out: &mut dyn Write) -> Outcome {
    let seed = args
        .seed
        .or(cfg.seed)
        .ok_or_else(|| usage("build-dataset requires --seed N (or `seed` in the config file)"))?;
    let corpus = args
        .corpus
        .clone()
        .or_else(|| cfg.corpus.clone())
        .ok_or_else(|| usage("build-dataset requires --corpus FILE"))?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| usage("build-dataset requires --out DIR"))?;
    let filter_on = !args.no_filter && cfg.filter.enabled.unwrap_or(true);
    let split_ratio = if args.no_split || cfg.split == Some(false) {
        None
    } else {
        Some(args.split_ratio.or(cfg.split_ratio).unwrap_or(DEFAULT_SPLIT_RATIO))
    };
    if let Some(r) = split_ratio {
        if !(r > 0.0 && r < 1.0) {
            return Err(usage(format!("--split-ratio must lie strictly between 0 and 1, got {r}")));
        }
    }
    let opts = BuildOptions {
        corpus,
        lexicon: args.lexicon.lexicon.clone().or_else(|| cfg.lexicon.clone()),
        modality_map: args.lexicon.modality_map.clone().or_else(|| cfg.modality_map.clone()),
        out_dir: out_dir.clone(),
        seed,
        filter: if filter_on { Some(thresholds(&args.thresholds, cfg)?) } else { None },
        perturb: perturb_config(&args.selection, cfg, seed),
        scorer: parse_spec(args.scorer.as_deref().or(cfg.scorer.as_deref()).unwrap_or("builtin"))?,
        realizer: parse_spec(args.realizer.as_deref().or(cfg.realizer.as_deref()).unwrap_or("passthrough"))?,
        split_ratio,
        jobs: args.jobs.or(cfg.jobs).unwrap_or(1).max(1),
        adapter_timeout: timeout(args.adapter_timeout, cfg),
    };
    let summary = build_dataset(&opts).map_err(anyhow::Error::from)?;
    let m = &summary.manifest;
    match args.format.format {
        Format::Json => json_line(out, m)?,
        Format::Text => {
            let mut text = format!(
                "documents: {} ({} skipped lines)\npositives: {}\ncandidates: {}\nvalid negatives: {}\n",
                m.counts.documents, m.counts.skipped_lines, m.counts.positives, m.counts.candidates, m.counts.valid_negatives
            );
            for (name, s) in &m.splits {
                text.push_str(&format!(
                    "{name}: {} entailment + {} contradiction from {} documents -> {}\n",
                    s.entailment,
                    s.contradiction,
                    s.documents,
                    out_dir.join(&s.file).display()
                ));
            }
            text.push_str(&format!("config hash: {}\n", m.config_hash));
            text.push('\n');
            text.push_str(&summary.stats.render_table());
            out.write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

fn cmd_evaluate(args: EvalArgs, cfg: &RunConfig, out: &mut dyn Write) -> Outcome {
    let resamples = args.ci_resamples.or(cfg.evaluate.ci_resamples).unwrap_or(1000);
    let level = args.level.or(cfg.evaluate.level).unwrap_or(0.95);
    if !(level > 0.0 && level < 1.0) {
        return Err(usage(format!("--level must lie strictly between 0 and 1, got {level}")));
    }
    if resamples != 0 && resamples < 100 {
        return Err(usage("--ci-resamples must be 0 or at least 100"));
    }
    let options = EvalOptions {
        bootstrap: (resamples > 0).then_some(BootstrapConfig {
            n_resamples: resamples,
            seed: args.seed.or(cfg.seed).unwrap_or(0),
            level,
        }),
        invert_scores: args.invert_scores || cfg.evaluate.invert_scores.unwrap_or(false),
    };
    let select = |path: &Path, split: Split| -> anyhow::Result<Vec<_>> {
        let records: Vec<_> = read_eval_file(path)?.into_iter().filter(|r| r.split == split).collect();
        if records.is_empty() {
            bail!("{}: no records with split {:?}", path.display(), split);
        }
        Ok(records)
    };
    let val = select(&args.val, Split::Val)?;
    let test = select(&args.test, Split::Test)?;
    let report = run_evaluation(&val, &test, &options).map_err(anyhow::Error::from)?;
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
        fs::write(path, json + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    }
    match args.format.format {
        Format::Json => json_line(out, &report)?,
        Format::Text => out.write_all(report.render_table().as_bytes()).map_err(anyhow::Error::from)?,
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StatsLine {
    Candidate(Box<NegativeCandidate>),
    Example(LabeledExample),
}

fn cmd_stats(args: StatsArgs, cfg: &RunConfig, out: &mut dyn Write) -> Outcome {
    let mut items: Vec<(String, ErrorFamily)> = Vec::new();
    let mut ids = Vec::new();
    for (line, text) in read_lines(&args.input).map_err(anyhow::Error::from)? {
        let parsed: StatsLine = serde_json::from_str(&text)
            .with_context(|| format!("{}:{line}: neither a candidate nor a labeled example", args.input.display()))?;
        match parsed {
            StatsLine::Candidate(c) => {
                ids.push(c.candidate_id.clone());
                items.push((c.doc_id, c.family));
            }
            StatsLine::Example(e) => {
                if let (Label::Contradiction, Provenance::Family(f)) = (e.label, e.provenance) {
                    items.push((e.doc_id, f));
                }
            }
        }
    }
    let acceptance = match &args.scores {
        Some(path) => {
            let fc = thresholds(&args.thresholds, cfg)?;
            let scores: Vec<ScoreRecord> = crate::filter::read_score_file(path).map_err(anyhow::Error::from)?;
            let outcome = filter_batch(ids, &scores, &fc).map_err(anyhow::Error::from)?;
            Some((outcome.valid.len() as u64, outcome.len() as u64))
        }
        None => None,
    };
    let report = StatsReport::from_items(items.iter().map(|(d, f)| (d.as_str(), *f)), acceptance)
        .map_err(anyhow::Error::from)?;
    match args.format.format {
        Format::Json => json_line(out, &report)?,
        Format::Text => out.write_all(report.render_table().as_bytes()).map_err(anyhow::Error::from)?,
    }
    Ok(())
}

/// Runs the command line, writing data to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(cfg) => cfg,
            Err(msg) => {
                let _ = writeln!(err, "error: {msg}");
                return 2;
            }
        },
        None => RunConfig::default(),
    };
    let result = match cli.command {
        Command::Parse(a) => cmd_parse(a, out),
        Command::Perturb(a) => cmd_perturb(a, &cfg, out),
        Command::Filter(a) => cmd_filter(a, &cfg, out),
        Command::BuildDataset(a) => cmd_build(a, &cfg, out),
        Command::Evaluate(a) => cmd_evaluate(a, &cfg, out),
        Command::Stats(a) => cmd_stats(a, &cfg, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

/// Runs the command line against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run_with(argv, &mut out, &mut err);
    let _ = out.flush();
    code
}
