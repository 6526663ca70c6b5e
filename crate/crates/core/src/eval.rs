//! Sub-task construction, per-sub-task metrics and averaged reports.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::{baseline_label, candidate_base_scores, composite, heuristic_weights, Heuristic, Measure, SimRankConfig};
use crate::count::PathCountTable;
use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, HeterogeneousGraph};
use crate::metrics::{aggregate, auprc, reciprocal_rank, roc_auc, Scheme};
use crate::relevance::CompositeScoreTable;

/// A ranked evaluation unit: candidate pairs and their relevance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTask {
    pub id: String,
    pub pairs: Vec<(String, String)>,
    pub labels: Vec<bool>,
}

impl SubTask {
    pub fn new(id: impl Into<String>, pairs: Vec<(String, String)>, labels: Vec<bool>) -> Result<Self> {
        let id = id.into();
        if pairs.len() != labels.len() {
            return Err(Error::Dimension(format!("sub-task {id}: {} pairs, {} labels", pairs.len(), labels.len())));
        }
        if !labels.iter().any(|&l| l) {
            return Err(Error::Metric(format!("sub-task {id} has no relevant pair")));
        }
        let mut seen = BTreeSet::new();
        for (a, b) in &pairs {
            if a == b {
                return Err(Error::InvalidParameter(format!("sub-task {id}: self pair ({a}, {a})")));
            }
            let k = if a < b { (a, b) } else { (b, a) };
            if !seen.insert(k) {
                return Err(Error::InvalidParameter(format!("sub-task {id}: duplicate pair ({a}, {b})")));
            }
        }
        Ok(SubTask { id, pairs, labels })
    }

    pub fn relevant_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn total_count(&self) -> usize {
        self.pairs.len()
    }
}

type Group = (Vec<(String, String)>, Vec<bool>);

/// Groups labelled rows `(u, v, relevant, sub-task)` into sub-tasks, in
/// order of first appearance. Rows without a sub-task id join `default_id`.
/// Groups with no relevant pair are skipped with a warning.
pub fn tasks_from_labels(rows: &[(String, String, bool, Option<String>)], default_id: &str) -> Result<Vec<SubTask>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    for (u, v, l, id) in rows {
        let id = id.clone().unwrap_or_else(|| default_id.to_string());
        let g = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            (Vec::new(), Vec::new())
        });
        g.0.push((u.clone(), v.clone()));
        g.1.push(*l);
    }
    let mut out = Vec::new();
    for id in order {
        let (pairs, labels) = groups.remove(&id).unwrap();
        if !labels.iter().any(|&l| l) {
            log::warn!("sub-task {id} has no relevant pair; skipped");
            continue;
        }
        out.push(SubTask::new(id, pairs, labels)?);
    }
    Ok(out)
}

/// Metrics of one sub-task; `None` where a metric is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskMetrics {
    pub id: String,
    pub relevant: usize,
    pub total: usize,
    pub roc_auc: Option<f64>,
    pub auprc: Option<f64>,
    pub reciprocal_rank: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub uni: f64,
    pub rel: f64,
    pub tot: f64,
}

impl Averages {
    pub fn get(&self, s: Scheme) -> f64 {
        match s {
            Scheme::Uniform => self.uni,
            Scheme::Relevant => self.rel,
            Scheme::Total => self.tot,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub measure: String,
    pub tasks: Vec<TaskMetrics>,
    pub roc_auc: Option<Averages>,
    pub auprc: Option<Averages>,
    /// Mean reciprocal rank over sub-tasks with a single relevant pair.
    pub mrr: Option<Averages>,
    /// Free-form run details (seed, config fingerprint, ...).
    pub metadata: Vec<(String, String)>,
}

/// Metrics from scores on a higher-is-more-relevant scale.
pub fn evaluate_task(task: &SubTask, scores: &[f64]) -> Result<TaskMetrics> {
    if scores.len() != task.pairs.len() {
        return Err(Error::Dimension(format!(
            "sub-task {}: {} scores for {} pairs",
            task.id,
            scores.len(),
            task.pairs.len()
        )));
    }
    let auc = match roc_auc(scores, &task.labels) {
        Ok(v) => Some(v),
        Err(Error::Metric(m)) => {
            log::warn!("sub-task {} excluded from ROC-AUC: {m}", task.id);
            None
        }
        Err(e) => return Err(e),
    };
    let rr = if task.relevant_count() == 1 {
        Some(reciprocal_rank(scores, &task.labels)?)
    } else {
        None
    };
    Ok(TaskMetrics {
        id: task.id.clone(),
        relevant: task.relevant_count(),
        total: task.total_count(),
        roc_auc: auc,
        auprc: Some(auprc(scores, &task.labels)?),
        reciprocal_rank: rr,
    })
}

fn averages(tasks: &[TaskMetrics], pick: impl Fn(&TaskMetrics) -> Option<f64>) -> Result<Option<Averages>> {
    let (mut v, mut r, mut t) = (Vec::new(), Vec::new(), Vec::new());
    for m in tasks {
        if let Some(x) = pick(m) {
            v.push(x);
            r.push(m.relevant);
            t.push(m.total);
        }
    }
    if v.is_empty() {
        return Ok(None);
    }
    Ok(Some(Averages {
        uni: aggregate(&v, &r, &t, Scheme::Uniform)?,
        rel: aggregate(&v, &r, &t, Scheme::Relevant)?,
        tot: aggregate(&v, &r, &t, Scheme::Total)?,
    }))
}

/// Evaluates oriented per-task scores (`scores[i]` aligned with `tasks[i]`).
pub fn evaluate(measure: &str, tasks: &[SubTask], scores: &[Vec<f64>]) -> Result<EvaluationReport> {
    if tasks.is_empty() {
        return Err(Error::Empty("no sub-tasks"));
    }
    if tasks.len() != scores.len() {
        return Err(Error::Dimension(format!("{} score lists for {} sub-tasks", scores.len(), tasks.len())));
    }
    let rows = tasks
        .iter()
        .zip(scores)
        .map(|(t, s)| evaluate_task(t, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        measure: measure.to_string(),
        roc_auc: averages(&rows, |m| m.roc_auc)?,
        auprc: averages(&rows, |m| m.auprc)?,
        mrr: if rows.iter().all(|m| m.reciprocal_rank.is_some()) {
            averages(&rows, |m| m.reciprocal_rank)?
        } else {
            None
        },
        tasks: rows,
        metadata: Vec::new(),
    })
}

/// Oriented scores of a task's candidates; pairs missing from the table
/// get `-inf`.
pub fn table_task_scores(task: &SubTask, table: &CompositeScoreTable) -> Vec<f64> {
    let f = table.oriented_lookup();
    task.pairs.iter().map(|(a, b)| f(a, b)).collect()
}

pub fn evaluate_table(tasks: &[SubTask], table: &CompositeScoreTable) -> Result<EvaluationReport> {
    let f = table.oriented_lookup();
    let scores: Vec<Vec<f64>> = tasks
        .iter()
        .map(|t| t.pairs.iter().map(|(a, b)| f(a, b)).collect())
        .collect();
    evaluate(&table.measure, tasks, &scores)
}

/// Population over which baseline weight statistics are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScope {
    /// Each sub-task's own candidate pairs.
    #[default]
    PerSubTask,
    /// The candidate pairs of all sub-tasks pooled.
    Global,
}

impl WeightScope {
    pub fn label(self) -> &'static str {
        match self {
            WeightScope::PerSubTask => "subtask",
            WeightScope::Global => "global",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "subtask" => Some(WeightScope::PerSubTask),
            "global" => Some(WeightScope::Global),
            _ => None,
        }
    }
}

fn map_tasks<T: Send>(tasks: &[SubTask], f: impl Fn(&SubTask) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        tasks.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        tasks.iter().map(f).collect()
    }
}

/// Composite baseline scores per sub-task, oriented, with trivial pairs at
/// `-inf`. Trivial pairs count as 0 in the weight statistics.
pub fn baseline_task_scores(
    pc: &PathCountTable,
    tasks: &[SubTask],
    measure: Measure,
    heuristic: Heuristic,
    scope: WeightScope,
    cfg: &SimRankConfig,
) -> Result<Vec<Vec<f64>>> {
    let base = map_tasks(tasks, |t| candidate_base_scores(pc, measure, &t.pairs, cfg))?;
    let global = match scope {
        WeightScope::PerSubTask => None,
        WeightScope::Global => {
            let mut pooled = vec![Vec::new(); pc.metapath_count()];
            for b in &base {
                for (p, col) in pooled.iter_mut().zip(b) {
                    p.extend_from_slice(col);
                }
            }
            Some(heuristic_weights(&pooled, heuristic)?)
        }
    };
    tasks
        .iter()
        .zip(&base)
        .map(|(task, b)| {
            let w = match &global {
                Some(w) => w.clone(),
                None => heuristic_weights(b, heuristic)?,
            };
            let mut scores = composite(b, &w)?;
            for (x, (u, v)) in scores.iter_mut().zip(&task.pairs) {
                if pc.find_by_id(u, v).is_none() {
                    *x = f64::NEG_INFINITY;
                }
            }
            Ok(scores)
        })
        .collect()
}

pub fn evaluate_baseline(
    pc: &PathCountTable,
    tasks: &[SubTask],
    measure: Measure,
    heuristic: Heuristic,
    scope: WeightScope,
    cfg: &SimRankConfig,
) -> Result<EvaluationReport> {
    let scores = baseline_task_scores(pc, tasks, measure, heuristic, scope, cfg)?;
    evaluate(&baseline_label(measure, heuristic), tasks, &scores)
}

/// One row of a mention file. `name` groups entities into sub-tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub id: String,
    pub entity: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityResolution {
    /// One sub-task per name with a splittable entity.
    pub tasks: Vec<SubTask>,
    /// Node id each mention collapses into.
    pub node_of: BTreeMap<String, String>,
}

/// For every name, merges mentions into entity nodes and splits the largest
/// entity (ties: lowest entity id) into `<entity>#a` and `<entity>#b`, the
/// first half of its mentions in input order going to `#a`. The split pair is
/// the only relevant candidate; candidates are all pairs of the name's nodes.
pub fn build_entity_resolution_tasks(mentions: &[Mention]) -> Result<EntityResolution> {
    if mentions.is_empty() {
        return Err(Error::Empty("no mentions"));
    }
    // name -> entity -> mentions in input order
    let mut names: BTreeMap<&str, BTreeMap<&str, Vec<&str>>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for m in mentions {
        if !seen.insert(m.id.as_str()) {
            return Err(Error::DuplicateNode(m.id.clone()));
        }
        names
            .entry(m.name.as_str())
            .or_default()
            .entry(m.entity.as_str())
            .or_default()
            .push(m.id.as_str());
    }
    let mut node_of = BTreeMap::new();
    let mut tasks = Vec::new();
    for (name, entities) in &names {
        let mut largest: Option<(&str, usize)> = None;
        for (&e, ms) in entities {
            if largest.is_none_or(|(_, n)| ms.len() > n) {
                largest = Some((e, ms.len()));
            }
        }
        let (split, size) = largest.unwrap();
        let mut nodes = Vec::new();
        if size < 2 {
            log::warn!("name `{name}`: largest entity has a single mention; no sub-task");
            for (&e, ms) in entities {
                for &m in ms {
                    node_of.insert(m.to_string(), e.to_string());
                }
            }
            continue;
        }
        for (&e, ms) in entities {
            if e == split {
                let (a, b) = (format!("{e}#a"), format!("{e}#b"));
                let half = ms.len().div_ceil(2);
                for (i, &m) in ms.iter().enumerate() {
                    node_of.insert(m.to_string(), if i < half { a.clone() } else { b.clone() });
                }
                nodes.push(a);
                nodes.push(b);
            } else {
                for &m in ms {
                    node_of.insert(m.to_string(), e.to_string());
                }
                nodes.push(e.to_string());
            }
        }
        nodes.sort();
        let (a, b) = (format!("{split}#a"), format!("{split}#b"));
        let mut pairs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                labels.push(nodes[i] == a && nodes[j] == b);
                pairs.push((nodes[i].clone(), nodes[j].clone()));
            }
        }
        tasks.push(SubTask::new(name.to_string(), pairs, labels)?);
    }
    Ok(EntityResolution { tasks, node_of })
}

/// Rebuilds `g` with nodes renamed through `node_of`; nodes mapped to the
/// same id merge and keep all their edges. Merged nodes must share a type.
pub fn merge_nodes(g: &HeterogeneousGraph, node_of: &BTreeMap<String, String>) -> Result<HeterogeneousGraph> {
    let rename = |id: &str| node_of.get(id).map_or(id, String::as_str).to_string();
    let mut b = GraphBuilder::new();
    let mut types: BTreeMap<String, &str> = BTreeMap::new();
    for i in 0..g.node_count() {
        let id = rename(g.node_id(i));
        let ty = g.node_type(i);
        match types.get(&id) {
            Some(&prev) if prev != ty => {
                return Err(Error::InvalidParameter(format!(
                    "node `{id}` merges types `{prev}` and `{ty}`"
                )));
            }
            Some(_) => {}
            None => {
                b.add_node(&id, ty)?;
                types.insert(id, ty);
            }
        }
    }
    for e in g.edges() {
        b.add_edge(&rename(g.node_id(e.src)), &rename(g.node_id(e.dst)), g.edge_type(e));
    }
    b.build()
}
