//! Synthetic count tables with planted relevant pairs.
//!
//! Nodes are split into groups; each group is one sub-task whose candidates
//! are all of its node pairs. Counts follow the generative model with
//! Gamma visibilities and per-meta-path selectivities. Ordinary pairs draw
//! their pattern mix from a sparse Dirichlet and appear only with
//! probability `density`; planted pairs mix all patterns evenly and have
//! their expected counts multiplied by `boost`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::count::{PathCountTable, TableBuilder};
use crate::error::{Error, Result};
use crate::eval::SubTask;
use crate::math::{exp, floor};
use crate::matrix::Matrix;
use crate::model::PrepParameters;
use crate::sample::draw_counts;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub groups: usize,
    pub group_size: usize,
    pub metapaths: usize,
    pub patterns: usize,
    /// Gamma shape of node visibility.
    pub alpha: f64,
    /// Dirichlet concentration of ordinary pairs' pattern mix.
    pub mix_concentration: f64,
    /// Share of each pattern's mass on meta-paths outside its block.
    pub leak: f64,
    /// Log-selectivities are uniform on `[-spread, spread]`.
    pub selectivity_spread: f64,
    /// Probability that an ordinary pair has any paths.
    pub density: f64,
    /// Planted pairs per group.
    pub planted: usize,
    pub boost: f64,
    /// Multiplier on every expected count.
    pub scale: f64,
    /// Round counts down to integers.
    pub integer: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            groups: 10,
            group_size: 50,
            metapaths: 4,
            patterns: 2,
            alpha: 1.0,
            mix_concentration: 0.1,
            leak: 0.01,
            selectivity_spread: 1.0,
            density: 0.5,
            planted: 25,
            boost: 2.0,
            scale: 20.0,
            integer: true,
            seed: 0,
        }
    }
}

/// A generated benchmark: the count table (with cycle counts), the
/// evaluation sub-tasks, and the generating parameters indexed by
/// `nodes` and `pairs`.
#[derive(Debug, Clone)]
pub struct SynthBenchmark {
    pub table: PathCountTable,
    pub tasks: Vec<SubTask>,
    pub nodes: Vec<String>,
    pub pairs: Vec<(usize, usize)>,
    pub planted: Vec<bool>,
    pub truth: PrepParameters,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthBenchmark> {
    let (t_n, k_n) = (cfg.metapaths, cfg.patterns);
    if cfg.groups == 0 || cfg.group_size < 2 || t_n == 0 || k_n == 0 {
        return Err(Error::InvalidParameter("synthetic benchmark needs groups, nodes, meta-paths and patterns".into()));
    }
    if 2 * cfg.planted > cfg.group_size {
        return Err(Error::InvalidParameter(format!(
            "{} planted pairs do not fit a group of {}",
            cfg.planted, cfg.group_size
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.mix_concentration > 0.0 && cfg.boost > 0.0 && cfg.scale > 0.0) {
        return Err(Error::InvalidParameter("synthetic shape parameters must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = 1 + floor(libm::log10((cfg.groups * cfg.group_size) as f64)) as usize;
    let nodes: Vec<String> = (0..cfg.groups * cfg.group_size)
        .map(|i| format!("n{i:0width$}"))
        .collect();
    let gamma = Gamma::new(cfg.alpha, 1.0).map_err(|e| Error::InvalidParameter(format!("{e}")))?;
    let rho: Vec<f64> = (0..nodes.len()).map(|_| gamma.sample(&mut rng)).collect();
    let eta: Vec<f64> = (0..t_n)
        .map(|_| exp(rng.random_range(-1.0..=1.0) * cfg.selectivity_spread))
        .collect();

    // Pattern k puts most of its mass on a contiguous block of meta-paths.
    let mut theta = Matrix::zeros(k_n, t_n);
    for k in 0..k_n {
        let block: Vec<usize> = (0..t_n).filter(|t| t * k_n / t_n == k).collect();
        let block = if block.is_empty() { vec![k % t_n] } else { block };
        let outside = t_n - block.len();
        for t in 0..t_n {
            let v = if block.contains(&t) {
                (1.0 - if outside > 0 { cfg.leak } else { 0.0 }) / block.len() as f64
            } else {
                cfg.leak / outside as f64
            };
            theta.set(k, t, v);
        }
    }

    let mix = Gamma::new(cfg.mix_concentration, 1.0).map_err(|e| Error::InvalidParameter(format!("{e}")))?;
    let mut pairs = Vec::new();
    let mut planted = Vec::new();
    let mut phi_rows: Vec<f64> = Vec::new();
    let mut tasks = Vec::new();
    for g in 0..cfg.groups {
        let members: Vec<usize> = (g * cfg.group_size..(g + 1) * cfg.group_size).collect();
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let partners: Vec<(usize, usize)> = shuffled
            .chunks(2)
            .take(cfg.planted)
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        let mut cand = Vec::new();
        let mut labels = Vec::new();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                let is_planted = partners.contains(&(a, b));
                cand.push((nodes[a].clone(), nodes[b].clone()));
                labels.push(is_planted);
                if !is_planted && !rng.random_bool(cfg.density) {
                    continue;
                }
                pairs.push((a, b));
                planted.push(is_planted);
                if is_planted {
                    phi_rows.extend(core::iter::repeat_n(1.0 / k_n as f64, k_n));
                } else {
                    let draws: Vec<f64> = (0..k_n).map(|_| mix.sample(&mut rng) + 1e-300).collect();
                    let sum: f64 = draws.iter().sum();
                    phi_rows.extend(draws.iter().map(|d| d / sum));
                }
            }
        }
        tasks.push(SubTask::new(format!("g{g}"), cand, labels)?);
    }
    let truth = PrepParameters {
        eta,
        rho,
        phi: Matrix::from_vec(pairs.len(), k_n, phi_rows),
        theta,
    };
    let boost: Vec<f64> = planted
        .iter()
        .map(|&p| cfg.scale * if p { cfg.boost } else { 1.0 })
        .collect();
    let mut counts = draw_counts(&truth, &pairs, &mut rng, &boost)?;
    if cfg.integer {
        for c in counts.as_mut_slice() {
            *c = floor(*c);
        }
    }

    let metapaths: Vec<String> = (0..t_n).map(|t| format!("m{t}")).collect();
    let mut b = TableBuilder::new(metapaths);
    let mut totals = Matrix::zeros(nodes.len(), t_n);
    for (s, &(u, v)) in pairs.iter().enumerate() {
        for t in 0..t_n {
            let c = counts.get(s, t);
            b.set(&nodes[u], &nodes[v], t, c)?;
            totals.set(u, t, totals.get(u, t) + c);
            totals.set(v, t, totals.get(v, t) + c);
        }
    }
    // A node's cycle count is at least every pair count it takes part in,
    // as with shared-neighbour meta-paths.
    for (z, id) in nodes.iter().enumerate() {
        for t in 0..t_n {
            b.set_cycle(id, t, totals.get(z, t) + 1.0)?;
        }
    }
    let table = b.build()?;
    Ok(SynthBenchmark {
        table,
        tasks,
        nodes,
        pairs,
        planted,
        truth,
    })
}
