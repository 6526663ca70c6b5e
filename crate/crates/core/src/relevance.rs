//! Relevance scores over nontrivial pairs: the fitted-model score and the
//! closed-form special cases it reduces to.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::count::PathCountTable;
use crate::error::{Error, Result};
use crate::math::{ln, sqrt, Fnv64};
use crate::model::{PrepHyperparams, PrepParameters};

/// Which end of a score scale means "more relevant".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsMoreRelevant,
    LowerIsMoreRelevant,
}

impl Direction {
    /// Maps a raw score onto a higher-is-more-relevant scale.
    #[inline]
    pub fn orient(self, score: f64) -> f64 {
        match self {
            Direction::HigherIsMoreRelevant => score,
            Direction::LowerIsMoreRelevant => -score,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::HigherIsMoreRelevant => "higher",
            Direction::LowerIsMoreRelevant => "lower",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "higher" => Some(Direction::HigherIsMoreRelevant),
            "lower" => Some(Direction::LowerIsMoreRelevant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub u: String,
    pub v: String,
    pub score: f64,
}

/// Scores for a set of node pairs under one measure. Pairs not listed are
/// trivial and rank below every listed pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeScoreTable {
    pub measure: String,
    pub fingerprint: u64,
    pub direction: Direction,
    pub entries: Vec<ScoreEntry>,
}

impl CompositeScoreTable {
    /// Score on the higher-is-more-relevant scale, `-inf` for unlisted pairs.
    pub fn oriented_lookup(&self) -> impl Fn(&str, &str) -> f64 + '_ {
        let map: BTreeMap<(&str, &str), f64> = self
            .entries
            .iter()
            .map(|e| (key(&e.u, &e.v), self.direction.orient(e.score)))
            .collect();
        move |a, b| map.get(&key(a, b)).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Entries ordered from most to least relevant; ties keep pair order.
    pub fn ranked(&self) -> Vec<&ScoreEntry> {
        let mut out: Vec<&ScoreEntry> = self.entries.iter().collect();
        out.sort_by(|a, b| {
            let (x, y) = (self.direction.orient(a.score), self.direction.orient(b.score));
            y.total_cmp(&x).then_with(|| (&a.u, &a.v).cmp(&(&b.u, &b.v)))
        });
        out
    }
}

fn key<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The two terms of `r(s)`, the negative log-likelihood of pair `s` without
/// its log-normalizer: the rate-weighted count sum
/// `sum_t eta_t P[s,t] / (rho_u rho_v psi[s,t])` and the pattern term
/// `(1 - beta) sum_k log phi[s,k]`.
pub fn prep_score_parts(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams, s: usize) -> (f64, f64) {
    let tau = p.tau(pc, s);
    let psi = p.psi_row(s);
    let data = pc
        .row(s)
        .iter()
        .zip(&p.eta)
        .zip(&psi)
        .map(|((&c, &e), &ps)| e * c / (tau * ps))
        .sum();
    let prior = (1.0 - h.beta) * p.phi.row(s).iter().map(|&f| ln(f)).sum::<f64>();
    (data, prior)
}

/// `r(s)`; larger means more relevant.
pub fn prep_score(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams, s: usize) -> Result<f64> {
    if s >= pc.pair_count() {
        return Err(Error::Dimension(alloc::format!("pair index {s} out of range")));
    }
    let (a, b) = prep_score_parts(pc, p, h, s);
    let r = a + b;
    if !r.is_finite() {
        return Err(Error::NonFinite {
            context: "relevance score",
            pair: Some(s),
        });
    }
    Ok(r)
}

/// `r(s)` for a pair given by node ids.
pub fn prep_score_by_id(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams, u: &str, v: &str) -> Result<f64> {
    let s = pc
        .find_by_id(u, v)
        .ok_or_else(|| Error::UnknownPair(u.to_string(), v.to_string()))?;
    prep_score(pc, p, h, s)
}

/// Scores every pair of the table.
pub fn prep_scores(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams) -> Result<CompositeScoreTable> {
    p.check_shape(pc)?;
    let mut entries = Vec::with_capacity(pc.pair_count());
    for s in 0..pc.pair_count() {
        let (u, v) = pc.pair_names(s);
        entries.push(ScoreEntry {
            u: u.to_string(),
            v: v.to_string(),
            score: prep_score(pc, p, h, s)?,
        });
    }
    Ok(CompositeScoreTable {
        measure: "prep".to_string(),
        fingerprint: parameter_fingerprint(p, h),
        direction: Direction::HigherIsMoreRelevant,
        entries,
    })
}

pub fn parameter_fingerprint(p: &PrepParameters, h: &PrepHyperparams) -> u64 {
    let mut f = Fnv64::default();
    f.write_f64s(&p.eta);
    f.write_f64s(&p.rho);
    f.write_f64s(p.phi.as_slice());
    f.write_f64s(p.theta.as_slice());
    f.write_f64s(&[h.alpha, h.beta, h.delta]);
    f.finish()
}

/// Heuristic parameter choices under which the model score becomes a classic
/// measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Rate `w_t`, no normalization.
    PathCount,
    /// Normalizer: arithmetic mean of the endpoint cycle counts.
    PathSimLike,
    /// Normalizer: geometric mean of the endpoint cycle counts.
    JoinSimLike,
}

impl Reduction {
    pub fn label(self) -> &'static str {
        match self {
            Reduction::PathCount => "pathcount",
            Reduction::PathSimLike => "pathsim-like",
            Reduction::JoinSimLike => "joinsim-like",
        }
    }
}

/// `sum_t w_t P[s,t] / kappa_s` for every pair.
///
/// A zero normalizer skips that meta-path's term for the pair.
pub fn reduction_score(pc: &PathCountTable, mode: Reduction, weights: &[f64]) -> Result<CompositeScoreTable> {
    if weights.len() != pc.metapath_count() {
        return Err(Error::Dimension(alloc::format!(
            "{} weights for {} meta-paths",
            weights.len(),
            pc.metapath_count()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter("reduction weights must be positive".into()));
    }
    if mode != Reduction::PathCount {
        if let Some(t) = (0..pc.metapath_count()).find(|&t| !pc.has_cycles(t)) {
            return Err(Error::MissingCycles(t));
        }
    }
    let mut fp = Fnv64::default();
    fp.write(mode.label().as_bytes());
    fp.write_f64s(weights);
    let mut entries = Vec::with_capacity(pc.pair_count());
    for s in 0..pc.pair_count() {
        let (u, v) = pc.pair(s);
        let mut score = 0.0;
        for (t, &w) in weights.iter().enumerate() {
            let kappa = match mode {
                Reduction::PathCount => 1.0,
                Reduction::PathSimLike => 0.5 * (cycle(pc, u, t) + cycle(pc, v, t)),
                Reduction::JoinSimLike => sqrt(cycle(pc, u, t) * cycle(pc, v, t)),
            };
            if kappa > 0.0 {
                score += w * pc.count(s, t) / kappa;
            } else {
                let (a, b) = pc.pair_names(s);
                log::warn!("zero cycle count for ({a}, {b}) on meta-path {t}; term skipped");
            }
        }
        let (a, b) = pc.pair_names(s);
        entries.push(ScoreEntry {
            u: a.to_string(),
            v: b.to_string(),
            score,
        });
    }
    Ok(CompositeScoreTable {
        measure: mode.label().to_string(),
        fingerprint: fp.finish(),
        direction: Direction::HigherIsMoreRelevant,
        entries,
    })
}

fn cycle(pc: &PathCountTable, z: usize, t: usize) -> f64 {
    pc.cycle(z, t).unwrap_or(0.0)
}
