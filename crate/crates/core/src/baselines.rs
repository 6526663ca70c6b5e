//! Classic meta-path measures, their weighted composites, and the model
//! ablations used as comparison points.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::count::PathCountTable;
use crate::error::{Error, Result};
use crate::infer::{fit_variant, FitResult, Variant};
use crate::math::{mean_var, sqrt, Fnv64};
use crate::matrix::Matrix;
use crate::model::PrepHyperparams;
use crate::relevance::{CompositeScoreTable, Direction, ScoreEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Measure {
    PathCount,
    PathSim,
    JoinSim,
    SimRank,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::PathCount, Measure::PathSim, Measure::JoinSim, Measure::SimRank];

    pub fn label(self) -> &'static str {
        match self {
            Measure::PathCount => "pathcount",
            Measure::PathSim => "pathsim",
            Measure::JoinSim => "joinsim",
            Measure::SimRank => "simrank",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Measure::ALL.into_iter().find(|m| m.label() == s)
    }
}

/// How per-meta-path scores are weighted into a composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Heuristic {
    /// `w_t = 1 / mean`.
    Mean,
    /// `w_t = 1 / population sd`.
    Sd,
}

impl Heuristic {
    pub const ALL: [Heuristic; 2] = [Heuristic::Mean, Heuristic::Sd];

    pub fn label(self) -> &'static str {
        match self {
            Heuristic::Mean => "mean",
            Heuristic::Sd => "sd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Heuristic::ALL.into_iter().find(|h| h.label() == s)
    }
}

/// Name such as `pathsim-sd`.
pub fn baseline_label(m: Measure, h: Heuristic) -> String {
    format!("{}-{}", m.label(), h.label())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineWeights {
    pub w: Vec<f64>,
    pub heuristic: Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRankConfig {
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimRankConfig {
    fn default() -> Self {
        SimRankConfig {
            c: 0.8,
            tolerance: 1e-4,
            max_iterations: 100,
        }
    }
}

impl SimRankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0 && self.c < 1.0) {
            return Err(Error::InvalidParameter(format!("SimRank decay {} must lie in [0, 1)", self.c)));
        }
        Ok(())
    }
}

/// Score of pair `s` on meta-path `t` for a closed-form measure.
/// A zero normalizer gives 0 with a warning.
pub fn pair_base_score(pc: &PathCountTable, measure: Measure, s: usize, t: usize) -> Result<f64> {
    let p = pc.count(s, t);
    let (u, v) = pc.pair(s);
    let cycles = || -> Result<(f64, f64)> {
        match (pc.cycle(u, t), pc.cycle(v, t)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::MissingCycles(t)),
        }
    };
    let (num, den) = match measure {
        Measure::PathCount => return Ok(p),
        Measure::PathSim => {
            let (a, b) = cycles()?;
            (2.0 * p, a + b)
        }
        Measure::JoinSim => {
            let (a, b) = cycles()?;
            (p, sqrt(a * b))
        }
        Measure::SimRank => {
            return Err(Error::InvalidParameter("SimRank scores come from simrank_metapath".into()));
        }
    };
    if den > 0.0 {
        Ok(num / den)
    } else {
        let (a, b) = pc.pair_names(s);
        log::warn!("{}: zero denominator for ({a}, {b}) on meta-path {t}; scored 0", measure.label());
        Ok(0.0)
    }
}

/// Per-pair scores on meta-path `t` for every pair of the table.
pub fn base_scores(pc: &PathCountTable, measure: Measure, t: usize) -> Result<Vec<f64>> {
    if t >= pc.metapath_count() {
        return Err(Error::Dimension(format!("meta-path index {t} out of range")));
    }
    (0..pc.pair_count()).map(|s| pair_base_score(pc, measure, s, t)).collect()
}

/// SimRank over a node subset on one meta-path.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRankResult {
    /// Table node indices, in the order of `scores` rows and columns.
    pub nodes: Vec<usize>,
    pub scores: Matrix,
    pub iterations: usize,
    pub converged: bool,
    /// Largest entry change of each sweep.
    pub deltas: Vec<f64>,
    local: BTreeMap<usize, usize>,
}

impl SimRankResult {
    /// `S[a, b]` for table node indices, if both are in the subset.
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        Some(self.scores.get(*self.local.get(&a)?, *self.local.get(&b)?))
    }
}

/// Iterates `S <- max(C A^T S A, I)` from `S = I`, where `A` is the
/// column-normalized pair-count matrix of meta-path `t` restricted to
/// `nodes`. Self counts are not part of `A`. Zero columns stay zero.
pub fn simrank_metapath(pc: &PathCountTable, t: usize, nodes: &[usize], cfg: &SimRankConfig) -> Result<SimRankResult> {
    cfg.validate()?;
    if t >= pc.metapath_count() {
        return Err(Error::Dimension(format!("meta-path index {t} out of range")));
    }
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n = sorted.len();
    let local: BTreeMap<usize, usize> = sorted.iter().enumerate().map(|(i, &z)| (z, i)).collect();

    // Column b lists (a, A[a, b]).
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (b, &z) in sorted.iter().enumerate() {
        for &s in pc.pairs_of(z) {
            let (u, v) = pc.pair(s);
            let other = if u == z { v } else { u };
            let c = pc.count(s, t);
            if c > 0.0 {
                if let Some(&a) = local.get(&other) {
                    cols[b].push((a, c));
                }
            }
        }
        let sum: f64 = cols[b].iter().map(|&(_, c)| c).sum();
        for e in &mut cols[b] {
            e.1 /= sum;
        }
    }

    let mut s = identity(n);
    let mut m = Matrix::zeros(n, n);
    let mut next = Matrix::zeros(n, n);
    let mut deltas = Vec::new();
    let mut converged = n == 0 || cfg.c == 0.0;
    let mut iterations = 0;
    while !converged && iterations < cfg.max_iterations {
        // m = S A
        for i in 0..n {
            let srow = s.row(i);
            let mrow = m.row_mut(i);
            for (b, col) in cols.iter().enumerate() {
                mrow[b] = col.iter().map(|&(a, w)| srow[a] * w).sum();
            }
        }
        // next = C A^T m, then max with I
        for (bp, col) in cols.iter().enumerate() {
            let out = next.row_mut(bp);
            out.fill(0.0);
            for &(a, w) in col {
                for (o, &x) in out.iter_mut().zip(m.row(a)) {
                    *o += w * x;
                }
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = if j == bp { 1.0 } else { (cfg.c * *o).max(0.0) };
            }
        }
        let delta = s
            .as_slice()
            .iter()
            .zip(next.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        core::mem::swap(&mut s, &mut next);
        iterations += 1;
        deltas.push(delta);
        converged = delta < cfg.tolerance;
    }
    if !converged {
        log::warn!("SimRank on meta-path {t} stopped at {iterations} sweeps without converging");
    }
    Ok(SimRankResult {
        nodes: sorted,
        scores: s,
        iterations,
        converged,
        deltas,
        local,
    })
}

fn identity(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m.set(i, i, 1.0);
    }
    m
}

/// Weights from per-meta-path score vectors (`tables[t][i]`). A zero
/// statistic gives `w_t = 0` with a warning.
pub fn heuristic_weights(tables: &[Vec<f64>], heuristic: Heuristic) -> Result<BaselineWeights> {
    let mut w = Vec::with_capacity(tables.len());
    for (t, scores) in tables.iter().enumerate() {
        if scores.is_empty() {
            return Err(Error::Empty("meta-path with no scored pairs"));
        }
        let (mean, var) = mean_var(scores);
        let stat = match heuristic {
            Heuristic::Mean => mean,
            Heuristic::Sd => sqrt(var),
        };
        if stat > 0.0 && stat.is_finite() {
            w.push(1.0 / stat);
        } else {
            log::warn!("meta-path {t}: {} of scores is {stat}; weight set to 0", heuristic.label());
            w.push(0.0);
        }
    }
    Ok(BaselineWeights { w, heuristic })
}

/// `sum_t w_t score_t(i)` for each item.
pub fn composite(tables: &[Vec<f64>], w: &BaselineWeights) -> Result<Vec<f64>> {
    if tables.len() != w.w.len() {
        return Err(Error::Dimension(format!("{} score tables for {} weights", tables.len(), w.w.len())));
    }
    let n = tables.first().map_or(0, Vec::len);
    if tables.iter().any(|t| t.len() != n) {
        return Err(Error::Dimension("score tables differ in length".into()));
    }
    Ok((0..n)
        .map(|i| tables.iter().zip(&w.w).map(|(tab, &wt)| wt * tab[i]).sum())
        .collect())
}

/// Per-meta-path scores (`out[t][i]`) for arbitrary candidate pairs given by
/// id. Pairs outside the table score 0. SimRank runs on the candidates'
/// endpoints only.
pub fn candidate_base_scores(
    pc: &PathCountTable,
    measure: Measure,
    pairs: &[(String, String)],
    cfg: &SimRankConfig,
) -> Result<Vec<Vec<f64>>> {
    let t_n = pc.metapath_count();
    let mut out = vec![vec![0.0; pairs.len()]; t_n];
    if measure == Measure::SimRank {
        let mut nodes: Vec<usize> = pairs
            .iter()
            .flat_map(|(a, b)| [pc.node_index(a), pc.node_index(b)])
            .flatten()
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        for (t, col) in out.iter_mut().enumerate() {
            let sr = simrank_metapath(pc, t, &nodes, cfg)?;
            for (i, (a, b)) in pairs.iter().enumerate() {
                if pc.find_by_id(a, b).is_some() {
                    let (x, y) = (pc.node_index(a).unwrap(), pc.node_index(b).unwrap());
                    col[i] = sr.get(x, y).unwrap_or(0.0);
                }
            }
        }
    } else {
        for (i, (a, b)) in pairs.iter().enumerate() {
            if let Some(s) = pc.find_by_id(a, b) {
                for (t, col) in out.iter_mut().enumerate() {
                    col[i] = pair_base_score(pc, measure, s, t)?;
                }
            }
        }
    }
    Ok(out)
}

/// Composite baseline over every pair of the table, weights computed from
/// all of its pairs.
pub fn baseline_table(
    pc: &PathCountTable,
    measure: Measure,
    heuristic: Heuristic,
    cfg: &SimRankConfig,
) -> Result<CompositeScoreTable> {
    let pairs: Vec<(String, String)> = (0..pc.pair_count())
        .map(|s| {
            let (a, b) = pc.pair_names(s);
            (a.to_string(), b.to_string())
        })
        .collect();
    let tables = candidate_base_scores(pc, measure, &pairs, cfg)?;
    let w = heuristic_weights(&tables, heuristic)?;
    let scores = composite(&tables, &w)?;
    let mut fp = Fnv64::default();
    fp.write(baseline_label(measure, heuristic).as_bytes());
    fp.write_f64s(&w.w);
    Ok(CompositeScoreTable {
        measure: baseline_label(measure, heuristic),
        fingerprint: fp.finish(),
        direction: Direction::HigherIsMoreRelevant,
        entries: pairs
            .into_iter()
            .zip(scores)
            .map(|((u, v), score)| ScoreEntry { u, v, score })
            .collect(),
    })
}

/// Fits the model with one block frozen at its constant.
pub fn prep_ablation(pc: &PathCountTable, h: &PrepHyperparams, variant: Variant) -> Result<FitResult> {
    fit_variant(pc, h, variant)
}
