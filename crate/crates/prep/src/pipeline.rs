//! File-level steps behind each subcommand. Every step can also be called
//! in-process.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use prep_core::baselines::{baseline_table, Heuristic, Measure};
use prep_core::eval::{
    build_entity_resolution_tasks, evaluate_baseline, evaluate_table, merge_nodes, tasks_from_labels,
    EvaluationReport, SubTask,
};
use prep_core::metrics::Scheme;
use prep_core::synth::{generate, SynthConfig};
use prep_core::{
    count_paths, fit_variant, node_total_counts, prep_scores, CompositeScoreTable, FitResult, HeterogeneousGraph,
    PathCountTable, PrepHyperparams, Variant,
};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::io::{self, CheckpointHeader, LabelRow};

pub const SWEEP_BETAS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

pub fn parse_variant(s: &str) -> Option<Variant> {
    [
        Variant::Full,
        Variant::NoNodeVisibility,
        Variant::NoPathSelectivity,
        Variant::NoCrossSynergy,
    ]
    .into_iter()
    .find(|v| v.label() == s)
}

/// Counts paths for the graph and meta-path files into `out`. Returns false
/// when `out` already holds counts for identical inputs and was left alone.
pub fn count_files(nodes: &Path, edges: &Path, metapaths: &Path, out: &Path, force: bool) -> Result<bool> {
    let texts = [io::read_text(nodes)?, io::read_text(edges)?, io::read_text(metapaths)?];
    let hash = io::combined_hash(&[&texts[0], &texts[1], &texts[2]]);
    if !force {
        if let Ok(old) = std::fs::read_to_string(out) {
            if io::header_value(&old, "input").as_deref() == Some(hash.as_str()) {
                log::info!("{} is up to date", out.display());
                return Ok(false);
            }
        }
    }
    let g = io::parse_graph(&texts[0], &texts[1], &nodes.display().to_string(), &edges.display().to_string())?;
    let mps = io::parse_metapaths(&texts[2], &metapaths.display().to_string())?;
    let pc = count_paths(&g, &mps)?;
    if pc.is_empty() {
        bail!("no node pair is connected by any meta-path");
    }
    io::write_text(out, &io::format_counts(&pc, &hash))?;
    Ok(true)
}

pub struct FitOutput {
    pub fit: FitResult,
    pub hyper: PrepHyperparams,
    pub checkpoint: String,
    pub trace: String,
}

/// Fits one model variant to a loaded table.
pub fn fit_table(pc: &PathCountTable, counts_text: &str, cfg: &RunConfig, variant: Variant) -> Result<FitOutput> {
    let totals = node_total_counts(pc)?;
    let hyper = cfg.hyperparams(pc.metapath_count(), &totals)?;
    if hyper.k < pc.metapath_count() {
        log::warn!(
            "K = {} is below the meta-path count {}; some meta-paths start without a pattern",
            hyper.k,
            pc.metapath_count()
        );
    }
    let fit = fit_variant(pc, &hyper, variant)?;
    if !fit.converged {
        log::warn!("stopped after {} iterations without converging", fit.iterations());
    }
    let head = CheckpointHeader {
        counts_hash: io::sha256_hex(counts_text.as_bytes()),
        variant: variant.label().to_string(),
        k: hyper.k,
        alpha: hyper.alpha,
        beta: hyper.beta,
        delta: hyper.delta,
        seed: hyper.seed,
        iterations: fit.iterations(),
        converged: fit.converged,
        objective: fit.objective(),
    };
    let checkpoint = io::format_checkpoint(pc, &fit.params, &head);
    let trace = format_trace(&fit, &cfg.fingerprint());
    Ok(FitOutput {
        fit,
        hyper,
        checkpoint,
        trace,
    })
}

pub fn format_trace(fit: &FitResult, config_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool {}", io::TOOL);
    let _ = writeln!(out, "# config {config_hash}");
    out.push_str("iteration\tobjective\td_eta\td_rho\td_phi\td_theta\n");
    for r in &fit.trace {
        let _ = writeln!(
            out,
            "{}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}",
            r.iteration, r.objective, r.d_eta, r.d_rho, r.d_phi, r.d_theta
        );
    }
    out
}

/// Scores every table pair from a checkpoint.
pub fn score_checkpoint(pc: &PathCountTable, checkpoint: &str, src: &str) -> Result<CompositeScoreTable> {
    let (params, head) = io::parse_checkpoint(checkpoint, src, pc)?;
    let mut h = PrepHyperparams::new(head.k);
    h.alpha = head.alpha;
    h.beta = head.beta;
    h.delta = head.delta;
    h.seed = head.seed;
    let mut table = prep_scores(pc, &params, &h)?;
    table.measure = head.variant;
    Ok(table)
}

pub fn parse_measure(s: &str) -> Result<Measure> {
    Measure::parse(s).with_context(|| format!("unknown measure `{s}` (pathcount, pathsim, joinsim, simrank)"))
}

pub fn parse_heuristic(s: &str) -> Result<Heuristic> {
    Heuristic::parse(s).with_context(|| format!("unknown weighting `{s}` (mean, sd)"))
}

pub fn baseline_scores(pc: &PathCountTable, measure: Measure, heuristic: Heuristic, cfg: &RunConfig) -> Result<CompositeScoreTable> {
    cfg.simrank.validate()?;
    Ok(baseline_table(pc, measure, heuristic, &cfg.simrank)?)
}

pub fn load_tasks(labels: &Path) -> Result<Vec<SubTask>> {
    let rows = io::parse_labels(&io::read_text(labels)?, &labels.display().to_string())?;
    Ok(tasks_from_labels(&rows, "all")?)
}

pub fn evaluate_scores(tasks: &[SubTask], table: &CompositeScoreTable) -> Result<EvaluationReport> {
    Ok(evaluate_table(tasks, table)?)
}

pub fn evaluate_baseline_tasks(
    pc: &PathCountTable,
    tasks: &[SubTask],
    measure: Measure,
    heuristic: Heuristic,
    cfg: &RunConfig,
) -> Result<EvaluationReport> {
    cfg.simrank.validate()?;
    Ok(evaluate_baseline(pc, tasks, measure, heuristic, cfg.weight_scope, &cfg.simrank)?)
}

fn averages_json(a: &Option<prep_core::eval::Averages>) -> Value {
    match a {
        None => Value::Null,
        Some(a) => {
            let mut m = serde_json::Map::new();
            for s in Scheme::ALL {
                m.insert(s.label().to_string(), json!(a.get(s)));
            }
            Value::Object(m)
        }
    }
}

pub fn report_json(r: &EvaluationReport) -> Value {
    let tasks: Vec<Value> = r
        .tasks
        .iter()
        .map(|t| {
            json!({
                "id": t.id,
                "relevant": t.relevant,
                "total": t.total,
                "roc_auc": t.roc_auc,
                "auprc": t.auprc,
                "reciprocal_rank": t.reciprocal_rank,
            })
        })
        .collect();
    let meta: serde_json::Map<String, Value> = r.metadata.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "measure": r.measure,
        "roc_auc": averages_json(&r.roc_auc),
        "auprc": averages_json(&r.auprc),
        "mrr": averages_json(&r.mrr),
        "tasks": tasks,
        "metadata": meta,
    })
}

/// Entity-resolution inputs: the mention graph with mentions merged into
/// entity nodes, plus labelled candidate pairs (sub-task = name).
pub fn resolve_mentions(g: &HeterogeneousGraph, mentions: &[prep_core::eval::Mention]) -> Result<(HeterogeneousGraph, Vec<LabelRow>)> {
    let er = build_entity_resolution_tasks(mentions)?;
    if er.tasks.is_empty() {
        bail!("no name has an entity with two or more mentions");
    }
    let merged = merge_nodes(g, &er.node_of)?;
    let mut rows = Vec::new();
    for t in &er.tasks {
        for ((u, v), &l) in t.pairs.iter().zip(&t.labels) {
            rows.push((u.clone(), v.clone(), l, Some(t.id.clone())));
        }
    }
    Ok((merged, rows))
}

pub fn format_graph(g: &HeterogeneousGraph) -> (String, String) {
    let mut nodes = String::new();
    for i in 0..g.node_count() {
        let _ = writeln!(nodes, "{}\t{}", g.node_id(i), g.node_type(i));
    }
    let mut edges = String::new();
    for e in g.edges() {
        let _ = writeln!(edges, "{}\t{}\t{}", g.node_id(e.src), g.node_id(e.dst), g.edge_type(e));
    }
    (nodes, edges)
}

/// Synthetic benchmark files: counts and labels.
pub fn synth_files(cfg: &SynthConfig) -> Result<(String, String)> {
    let b = generate(cfg)?;
    let hash = io::sha256_hex(format!("{cfg:?}").as_bytes());
    let counts = io::format_counts(&b.table, &hash);
    let mut rows = Vec::new();
    for t in &b.tasks {
        for ((u, v), &l) in t.pairs.iter().zip(&t.labels) {
            rows.push((u.clone(), v.clone(), l, Some(t.id.clone())));
        }
    }
    Ok((counts, io::format_labels(&rows)))
}

pub struct SweepPoint {
    pub beta: f64,
    pub objective: f64,
    pub report: EvaluationReport,
}

/// Fits and evaluates the full model for each concentration in `betas`.
pub fn beta_sweep(pc: &PathCountTable, counts_text: &str, tasks: &[SubTask], cfg: &RunConfig, betas: &[f64]) -> Result<Vec<SweepPoint>> {
    betas
        .iter()
        .map(|&beta| {
            let mut c = cfg.clone();
            c.beta = beta;
            let out = fit_table(pc, counts_text, &c, Variant::Full)
                .with_context(|| format!("beta = {beta:e}"))?;
            let table = prep_scores(pc, &out.fit.params, &out.hyper)?;
            let mut report = evaluate_table(tasks, &table)?;
            report.measure = format!("prep beta={beta:e}");
            Ok(SweepPoint {
                beta,
                objective: out.fit.objective(),
                report,
            })
        })
        .collect()
}
