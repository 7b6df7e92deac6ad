//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Runs without the libtest harness so the lines are
//! always shown.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use amrfact_core::amr::{parse_penman, parse_penman_many, serialize_penman, GraphError, PenmanError};
use amrfact_core::eval::{balanced_accuracy, bootstrap_ci, predict, tune_threshold, BootstrapConfig};
use amrfact_core::filter::{decide, filter_batch, FilterConfig, ScoreRecord};
use amrfact_core::perturb::{
    apply_site, enumerate_sites, ErrorFamily, PerturbConfig, PerturbationContext, SiteTarget, ValuePools, Variant,
};
use amrfact_core::pipeline::{generate, ingest, load_lexicon};

use common::{data_path, is_single_edit, oracle_balanced_accuracy, oracle_best_threshold, oracle_predict, shape};

const BA_TOL: f64 = 1e-12;
const STATS_SUM_TOL: f64 = 0.02;
const BOOTSTRAP_REL_TOL: f64 = 0.10;

type Check = Result<String, String>;

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn roundtrip() -> Check {
    let text = fs::read_to_string(data_path("data/roundtrip.penman")).map_err(|e| e.to_string())?;
    let graphs = parse_penman_many(&text).map_err(|e| e.to_string())?;
    if graphs.len() < 50 {
        return Err(format!("only {} graphs in the round-trip set", graphs.len()));
    }
    let slashes = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.matches(" / ").count())
        .sum::<usize>();
    let nodes: usize = graphs.iter().map(|g| g.node_count()).sum();
    if slashes != nodes {
        return Err(format!("{nodes} nodes parsed but {slashes} concept slashes in the source"));
    }
    for g in &graphs {
        let once = serialize_penman(g).map_err(|e| e.to_string())?;
        let back = parse_penman(&once).map_err(|e| format!("{once}: {e}"))?;
        if shape(&back) != shape(g) {
            return Err(format!("graph changed after round trip: {once}"));
        }
        if serialize_penman(&back).map_err(|e| e.to_string())? != once {
            return Err(format!("serialization not stable: {once}"));
        }
    }
    let cycles = [
        "(a / x :ARG0 (b / y :ARG0 a))",
        "(a / x :ARG0 a)",
        "(a / x :ARG1-of (b / y :ARG1-of a))",
        "(a / x :ARG0 (b / y :ARG1 (c / z :ARG2 a)))",
    ];
    for src in cycles {
        match parse_penman(src) {
            Err(PenmanError::Graph(GraphError::Cycle(_))) => {}
            other => return Err(format!("cycle not rejected: {src} -> {other:?}")),
        }
    }
    let undefined = ["(a / x :ARG0 b)", "(a / x :ARG0 (b / y :ARG1 c2))"];
    for src in undefined {
        match parse_penman(src) {
            Err(PenmanError::UndefinedVariable { .. }) => {}
            other => return Err(format!("undefined variable not rejected: {src} -> {other:?}")),
        }
    }
    Ok(format!(
        "{} graphs round-tripped; {} cycles and {} undefined-variable inputs rejected",
        graphs.len(),
        cycles.len(),
        undefined.len()
    ))
}

fn involution_partner(v: Variant) -> Option<Variant> {
    match v {
        Variant::PolarityAdd => Some(Variant::PolarityRemove),
        Variant::PolarityRemove => Some(Variant::PolarityAdd),
        Variant::AgentPatientSwap | Variant::CausalityReverse | Variant::TemporalFlip => Some(v),
        _ => None,
    }
}

fn perturbation() -> Check {
    let corpus = ingest(&data_path("data/synthetic_corpus.jsonl")).map_err(|e| e.to_string())?;
    if corpus.documents.len() != 20 {
        return Err(format!("expected 20 documents, got {}", corpus.documents.len()));
    }
    let lexicon = Arc::new(load_lexicon(None, None).map_err(|e| e.to_string())?);
    let config = PerturbConfig::with_seed(0);
    let candidates = generate(&corpus.documents, lexicon.clone(), &config, 1).map_err(|e| e.to_string())?;

    let docs: BTreeMap<&str, _> = corpus.documents.iter().map(|d| (d.record.doc_id.as_str(), d)).collect();
    let mut families = BTreeSet::new();
    for c in &candidates {
        let after = parse_penman(&c.perturbed_penman).map_err(|e| format!("{}: invalid output: {e}", c.candidate_id))?;
        after.validate().map_err(|e| format!("{}: invalid output: {e}", c.candidate_id))?;
        let before = &docs[c.doc_id.as_str()].graphs[c.sentence_index];
        if c.variant.family() != c.family {
            return Err(format!("{}: variant {} is not in family {}", c.candidate_id, c.variant, c.family));
        }
        if !is_single_edit(c.variant, before, &after) {
            return Err(format!("{}: not a single {} edit ({})", c.candidate_id, c.variant, c.site));
        }
        families.insert(c.family);
    }
    let missing: Vec<_> = ErrorFamily::ALL.iter().filter(|f| !families.contains(f)).collect();
    if !missing.is_empty() {
        return Err(format!("families with no output: {missing:?}"));
    }

    let global = Arc::new(ValuePools::harvest(corpus.documents.iter().flat_map(|d| &d.graphs)));
    let mut exercised: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &corpus.documents {
        let ctx = PerturbationContext::new(lexicon.clone())
            .with_same_doc(ValuePools::harvest(&doc.graphs))
            .with_global(global.clone())
            .with_document_text(&doc.record.document_text);
        for g in &doc.graphs {
            for site in enumerate_sites(g, &ctx, &config) {
                let Some(partner) = involution_partner(site.variant) else { continue };
                let label = match site.variant {
                    Variant::PolarityAdd | Variant::PolarityRemove => "double polarity",
                    Variant::AgentPatientSwap => "double swap",
                    Variant::CausalityReverse => "double causality",
                    _ => {
                        let SiteTarget::Node { var } = &site.target else { continue };
                        if g.concept(var) != Some("before") {
                            continue;
                        }
                        "before-after-before"
                    }
                };
                let once = apply_site(g, &site, &ctx).map_err(|e| format!("{site}: {e}"))?;
                let restored = enumerate_sites(&once, &ctx, &config)
                    .into_iter()
                    .filter(|s| s.variant == partner)
                    .filter_map(|s| apply_site(&once, &s, &ctx).ok())
                    .any(|twice| shape(&twice) == shape(g));
                if !restored {
                    return Err(format!("{label} does not restore the graph at {site}"));
                }
                *exercised.entry(label).or_default() += 1;
            }
        }
    }
    for label in ["double polarity", "double swap", "double causality", "before-after-before"] {
        if !exercised.contains_key(label) {
            return Err(format!("involution `{label}` never exercised"));
        }
    }
    let summary: Vec<String> = exercised.iter().map(|(k, n)| format!("{k} x{n}")).collect();
    Ok(format!(
        "{} candidates, all valid single edits, {} families; involutions: {}",
        candidates.len(),
        families.len(),
        summary.join(", ")
    ))
}

fn filter() -> Check {
    let cfg = FilterConfig::new(0.9, -1.8).map_err(|e| e.to_string())?;
    let mut cells = 0;
    for n in 0..=10i32 {
        for b in -30..=0i32 {
            let expected = n < 9 && b > -18;
            let record = ScoreRecord::new("x", n as f64 / 10.0, b as f64 / 10.0);
            if decide(&record, &cfg) != expected {
                return Err(format!("decide disagrees at N={} B={}", n as f64 / 10.0, b as f64 / 10.0));
            }
            cells += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let ids: Vec<String> = (0..1000).map(|i| format!("cand-{i:04}")).collect();
    let mut scores: Vec<ScoreRecord> = ids
        .iter()
        .map(|id| {
            let (n, b) = if rng.random_bool(0.2) {
                (rng.random_range(0..=10) as f64 / 10.0, rng.random_range(-30..=0) as f64 / 10.0)
            } else {
                (rng.random::<f64>(), -3.0 * rng.random::<f64>())
            };
            ScoreRecord::new(id.clone(), n, b)
        })
        .collect();
    let expected: BTreeMap<String, bool> = scores
        .iter()
        .map(|s| (s.candidate_id.clone(), s.entailment < 0.9 && s.relevance > -1.8))
        .collect();
    scores.shuffle(&mut rng);
    let outcome = filter_batch(ids.clone(), &scores, &cfg).map_err(|e| e.to_string())?;
    let rejected: Vec<String> = outcome.rejected.iter().map(|r| r.candidate.clone()).collect();
    let want_valid: Vec<&String> = ids.iter().filter(|id| expected[*id]).collect();
    let want_rejected: Vec<&String> = ids.iter().filter(|id| !expected[*id]).collect();
    if outcome.valid.iter().collect::<Vec<_>>() != want_valid {
        return Err("valid partition differs from the oracle".into());
    }
    if rejected.iter().collect::<Vec<_>>() != want_rejected {
        return Err("rejected partition differs from the oracle".into());
    }
    Ok(format!(
        "{cells} grid cells agree; 1000 candidates -> {} valid + {} rejected",
        outcome.valid.len(),
        rejected.len()
    ))
}

fn random_instance(rng: &mut ChaCha8Rng, len: usize, coarse: bool) -> (Vec<f64>, Vec<bool>) {
    let mut golds: Vec<bool> = (0..len).map(|_| rng.random_bool(0.4)).collect();
    golds[0] = true;
    golds[1] = false;
    let scores = golds
        .iter()
        .map(|&g| {
            let x = 0.3 * g as u8 as f64 + 0.7 * rng.random::<f64>();
            if coarse {
                (x * 10.0).round() / 10.0
            } else {
                x
            }
        })
        .collect();
    (scores, golds)
}

fn threshold_tuning() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for i in 0..200 {
        let len = rng.random_range(2..=200);
        let (scores, golds) = random_instance(&mut rng, len, i % 2 == 1);
        let preds: Vec<bool> = (0..len).map(|_| rng.random_bool(0.5)).collect();
        let got = balanced_accuracy(&preds, &golds).map_err(|e| e.to_string())?;
        let want = oracle_balanced_accuracy(&preds, &golds);
        if (got - want).abs() > BA_TOL {
            return Err(format!("instance {i}: balanced accuracy {got} vs oracle {want}"));
        }

        let tuned = tune_threshold(&scores, &golds).map_err(|e| e.to_string())?;
        let (best, distinct) = oracle_best_threshold(&scores, &golds);
        let achieved = oracle_balanced_accuracy(&oracle_predict(&scores, tuned.threshold), &golds);
        if (tuned.balanced_accuracy - best).abs() > BA_TOL || (achieved - best).abs() > BA_TOL {
            return Err(format!(
                "instance {i}: tuned {} (reported {}, achieved {achieved}) vs sweep best {best}",
                tuned.threshold, tuned.balanced_accuracy
            ));
        }
        let t = tuned.threshold;
        let in_gap = t.is_infinite() || distinct.windows(2).any(|w| w[0] < t && t < w[1]);
        if !in_gap {
            return Err(format!("instance {i}: threshold {t} is not a midpoint between distinct scores"));
        }
    }

    let transform = |x: f64| (3.0 * x).exp();
    let mut broken = Vec::new();
    for i in 0..50 {
        let n_val = rng.random_range(50..=200);
        let n_test = rng.random_range(50..=200);
        let (val, val_gold) = random_instance(&mut rng, n_val, false);
        let (test, _) = random_instance(&mut rng, n_test, false);
        let t = tune_threshold(&val, &val_gold).map_err(|e| e.to_string())?.threshold;
        let val_f: Vec<f64> = val.iter().copied().map(transform).collect();
        let test_f: Vec<f64> = test.iter().copied().map(transform).collect();
        let t_f = tune_threshold(&val_f, &val_gold).map_err(|e| e.to_string())?.threshold;
        let (p, p_f) = (predict(&test, t), predict(&test_f, t_f));
        if p != p_f {
            let below = val.iter().copied().filter(|&v| v < t).fold(f64::NEG_INFINITY, f64::max);
            let above = val.iter().copied().filter(|&v| v > t).fold(f64::INFINITY, f64::min);
            let flipped: Vec<f64> = (0..n_test).filter(|&j| p[j] != p_f[j]).map(|j| test[j]).collect();
            let all_in_gap = flipped.iter().all(|&x| below < x && x < above);
            broken.push(format!(
                "#{i}: {} held-out score(s) {flipped:?} flip, {} inside the selected gap ({below}, {above})",
                flipped.len(),
                if all_in_gap { "all" } else { "not all" }
            ));
        }
    }
    if !broken.is_empty() {
        return Err(format!(
            "BA and tuning agree with the oracles on 200 instances, but test predictions change under x -> exp(3x) on {}/50 instances: {}",
            broken.len(),
            broken.join("; ")
        ));
    }
    Ok("200 instances match the counting oracle and the midpoint sweep; 50 transformed instances predict identically".into())
}

fn read_labels(path: &Path) -> Result<(usize, usize), String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut counts = (0, 0);
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        match v["label"].as_str() {
            Some("entailment") => counts.0 += 1,
            Some("contradiction") => counts.1 += 1,
            other => return Err(format!("{}: unexpected label {other:?}", path.display())),
        }
    }
    Ok(counts)
}

fn dir_bytes(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        out.insert(name, fs::read(entry.path()).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn build_dataset() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = data_path("data/synthetic_corpus.jsonl");
    let mut outputs = Vec::new();
    for (run, jobs) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_amrfact"))
            .args(["build-dataset", "--seed", "7", "--jobs", jobs, "--format", "json"])
            .arg("--corpus")
            .arg(&corpus)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("build-dataset failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        outputs.push((out.clone(), dir_bytes(&out)?));
    }
    if outputs[0].1 != outputs[1].1 {
        return Err("two runs with the same seed differ".into());
    }
    if outputs[0].1 != outputs[2].1 {
        return Err("--jobs 1 and --jobs 4 outputs differ".into());
    }
    let dir = &outputs[0].0;
    let mut split_summary = Vec::new();
    for split in ["train.jsonl", "validation.jsonl"] {
        let (pos, neg) = read_labels(&dir.join(split))?;
        if pos != neg || pos == 0 {
            return Err(format!("{split}: {pos} entailment vs {neg} contradiction"));
        }
        split_summary.push(format!("{split} {pos}+{neg}"));
    }
    let stats: serde_json::Value =
        serde_json::from_slice(&outputs[0].1["stats.json"]).map_err(|e| e.to_string())?;
    let rows = stats["families"].as_array().ok_or("stats.json has no families list")?;
    let names: BTreeSet<&str> = rows.iter().filter_map(|r| r["family"].as_str()).collect();
    let want: BTreeSet<&str> = ErrorFamily::ALL.iter().map(|f| f.name()).collect();
    if names != want || rows.len() != 5 {
        return Err(format!("stats families {names:?}"));
    }
    let sum: f64 = rows.iter().filter_map(|r| r["percent"].as_f64()).sum();
    if (sum - 100.0).abs() > STATS_SUM_TOL {
        return Err(format!("family percentages sum to {sum}"));
    }
    Ok(format!(
        "3 runs byte-identical ({} files); {}; family percentages sum to {sum:.2}",
        outputs[0].1.len(),
        split_summary.join(", ")
    ))
}

/// Percentile bootstrap written from scratch: sequential resampling from a
/// single generator and nearest-rank quantiles.
fn independent_half_width(scores: &[f64], golds: &[bool], t: f64, resamples: usize, level: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb007);
    let preds = oracle_predict(scores, t);
    let n = scores.len();
    let mut stats = Vec::with_capacity(resamples);
    while stats.len() < resamples {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let p: Vec<bool> = idx.iter().map(|&i| preds[i]).collect();
        let g: Vec<bool> = idx.iter().map(|&i| golds[i]).collect();
        if g.iter().all(|&x| x) || g.iter().all(|&x| !x) {
            continue;
        }
        stats.push(oracle_balanced_accuracy(&p, &g));
    }
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let lo = stats[(tail * resamples as f64).floor() as usize];
    let hi = stats[((1.0 - tail) * resamples as f64).ceil() as usize - 1];
    (hi - lo) / 2.0
}

fn bootstrap() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let (scores, golds) = random_instance(&mut rng, 2000, false);
    let t = tune_threshold(&scores, &golds).map_err(|e| e.to_string())?.threshold;
    let cfg = BootstrapConfig {
        n_resamples: 1000,
        seed: 11,
        level: 0.95,
    };
    let small = bootstrap_ci(&scores[..500], &golds[..500], t, &cfg).map_err(|e| e.to_string())?;
    let again = bootstrap_ci(&scores[..500], &golds[..500], t, &cfg).map_err(|e| e.to_string())?;
    if small.to_bits() != again.to_bits() {
        return Err(format!("same seed gave {small} then {again}"));
    }
    let large = bootstrap_ci(&scores, &golds, t, &cfg).map_err(|e| e.to_string())?;
    if small <= large {
        return Err(format!("half-width for 500 records ({small}) is not larger than for 2000 ({large})"));
    }
    for (n, ours) in [(500, small), (2000, large)] {
        let theirs = independent_half_width(&scores[..n], &golds[..n], t, 1000, 0.95);
        if (ours / theirs - 1.0).abs() > BOOTSTRAP_REL_TOL {
            return Err(format!("n={n}: half-width {ours} vs independent {theirs}"));
        }
    }
    Ok(format!("deterministic; half-width n=500 {small:.4} > n=2000 {large:.4}; both within 10% of an independent bootstrap"))
}

fn main() {
    let criteria = [
        Criterion {
            id: "AC1",
            name: "penman round trip",
            limit: Duration::from_secs(1),
            run: roundtrip,
        },
        Criterion {
            id: "AC2",
            name: "perturbation engine",
            limit: Duration::from_secs(5),
            run: perturbation,
        },
        Criterion {
            id: "AC3",
            name: "consistency filter",
            limit: Duration::from_secs(1),
            run: filter,
        },
        Criterion {
            id: "AC4",
            name: "balanced accuracy and threshold tuning",
            limit: Duration::from_secs(10),
            run: threshold_tuning,
        },
        Criterion {
            id: "AC5",
            name: "build-dataset determinism and balance",
            limit: Duration::from_secs(10),
            run: build_dataset,
        },
        Criterion {
            id: "AC6",
            name: "bootstrap confidence intervals",
            limit: Duration::from_secs(30),
            run: bootstrap,
        },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > c.limit => Err(format!("{detail}; but took {elapsed:.2?} (limit {:?})", c.limit)),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS {} {}: {detail} [{elapsed:.2?} < {:?}]", c.id, c.name, c.limit),
            Err(reason) => {
                failed += 1;
                println!("FAIL {} {}: {reason} [{elapsed:.2?}]", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
