//! Meta-path instance counting and the observed count table.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{HeterogeneousGraph, MetaPath, ResolvedMetaPath};
use crate::matrix::Matrix;

/// Observed path counts over nontrivial unordered node pairs.
///
/// Nodes are the endpoints of at least one nontrivial pair, ordered by id.
/// Each pair `(u, v)` has `u < v` in that order and at least one positive
/// count. Cycle counts `P<zz>t` are kept per meta-path when available.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCountTable {
    nodes: Vec<String>,
    metapaths: Vec<String>,
    pairs: Vec<(usize, usize)>,
    counts: Matrix,
    cycles: Vec<Option<Vec<f64>>>,
    by_pair: BTreeMap<(usize, usize), usize>,
    by_node: Vec<Vec<usize>>,
    lookup: BTreeMap<String, usize>,
}

impl PathCountTable {
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn metapath_count(&self) -> usize {
        self.metapaths.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn metapaths(&self) -> &[String] {
        &self.metapaths
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, s: usize) -> (usize, usize) {
        self.pairs[s]
    }

    pub fn pair_names(&self, s: usize) -> (&str, &str) {
        let (u, v) = self.pairs[s];
        (&self.nodes[u], &self.nodes[v])
    }

    /// `P[s, t]`.
    #[inline]
    pub fn count(&self, s: usize, t: usize) -> f64 {
        self.counts.get(s, t)
    }

    pub fn row(&self, s: usize) -> &[f64] {
        self.counts.row(s)
    }

    pub fn counts(&self) -> &Matrix {
        &self.counts
    }

    /// Pair index for node indices given in either order.
    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.by_pair.get(&key).copied()
    }

    /// Pair index for node ids given in either order.
    pub fn find_by_id(&self, a: &str, b: &str) -> Option<usize> {
        self.find(self.node_index(a)?, self.node_index(b)?)
    }

    /// Pairs that contain `node`, in ascending pair order.
    pub fn pairs_of(&self, node: usize) -> &[usize] {
        &self.by_node[node]
    }

    pub fn has_cycles(&self, t: usize) -> bool {
        self.cycles[t].is_some()
    }

    /// `P<zz>t`, or `None` when meta-path `t` carries no cycle counts.
    pub fn cycle(&self, z: usize, t: usize) -> Option<f64> {
        self.cycles[t].as_ref().map(|c| c[z])
    }

    /// Sum of every count.
    pub fn total(&self) -> f64 {
        self.counts.as_slice().iter().sum()
    }

    /// Rows restricted to the meta-path subset `keep`, dropping pairs that
    /// become trivial.
    pub fn select_metapaths(&self, keep: &[usize]) -> Result<PathCountTable> {
        let mut b = TableBuilder::new(keep.iter().map(|&t| self.metapaths[t].clone()).collect());
        for (j, &t) in keep.iter().enumerate() {
            b.set_cycle_available(j, self.has_cycles(t));
        }
        for (s, &(u, v)) in self.pairs.iter().enumerate() {
            for (j, &t) in keep.iter().enumerate() {
                b.set(&self.nodes[u], &self.nodes[v], j, self.count(s, t))?;
            }
        }
        for (z, id) in self.nodes.iter().enumerate() {
            for (j, &t) in keep.iter().enumerate() {
                if let Some(c) = self.cycle(z, t) {
                    b.set_cycle(id, j, c)?;
                }
            }
        }
        b.build()
    }
}

/// Collects named counts and canonicalises them into a [`PathCountTable`].
#[derive(Debug, Clone)]
pub struct TableBuilder {
    metapaths: Vec<String>,
    cycles_available: Vec<bool>,
    rows: BTreeMap<(String, String), Vec<f64>>,
    cycles: BTreeMap<String, Vec<f64>>,
}

impl TableBuilder {
    pub fn new(metapaths: Vec<String>) -> Self {
        let t = metapaths.len();
        TableBuilder {
            metapaths,
            cycles_available: vec![false; t],
            rows: BTreeMap::new(),
            cycles: BTreeMap::new(),
        }
    }

    pub fn set_cycle_available(&mut self, t: usize, available: bool) {
        self.cycles_available[t] = available;
    }

    fn check(&self, t: usize, count: f64) -> Result<()> {
        if t >= self.metapaths.len() {
            return Err(Error::Dimension(format!(
                "meta-path index {t} out of range for {} meta-paths",
                self.metapaths.len()
            )));
        }
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::InvalidParameter(format!("count {count} must be finite and nonnegative")));
        }
        Ok(())
    }

    /// Sets `P<uv>t`; the pair is unordered.
    pub fn set(&mut self, u: &str, v: &str, t: usize, count: f64) -> Result<()> {
        self.check(t, count)?;
        if u == v {
            return Err(Error::InvalidParameter(format!("self pair ({u}, {u}); use set_cycle")));
        }
        let key = if u < v { (u.to_owned(), v.to_owned()) } else { (v.to_owned(), u.to_owned()) };
        let tn = self.metapaths.len();
        self.rows.entry(key).or_insert_with(|| vec![0.0; tn])[t] = count;
        Ok(())
    }

    pub fn add(&mut self, u: &str, v: &str, t: usize, count: f64) -> Result<()> {
        let key = if u < v { (u, v) } else { (v, u) };
        let prev = self
            .rows
            .get(&(key.0.to_owned(), key.1.to_owned()))
            .map_or(0.0, |r| r[t]);
        self.set(u, v, t, prev + count)
    }

    /// Sets `P<zz>t` and marks meta-path `t` as carrying cycle counts.
    pub fn set_cycle(&mut self, z: &str, t: usize, count: f64) -> Result<()> {
        self.check(t, count)?;
        self.cycles_available[t] = true;
        let tn = self.metapaths.len();
        self.cycles.entry(z.to_owned()).or_insert_with(|| vec![0.0; tn])[t] = count;
        Ok(())
    }

    pub fn build(self) -> Result<PathCountTable> {
        let t = self.metapaths.len();
        if t == 0 {
            return Err(Error::Empty("no meta-paths"));
        }
        let rows: Vec<_> = self
            .rows
            .into_iter()
            .filter(|(_, r)| r.iter().any(|&c| c > 0.0))
            .collect();
        let mut lookup = BTreeMap::new();
        for ((u, v), _) in &rows {
            lookup.entry(u.clone()).or_insert(0usize);
            lookup.entry(v.clone()).or_insert(0usize);
        }
        let nodes: Vec<String> = lookup.keys().cloned().collect();
        for (i, id) in nodes.iter().enumerate() {
            *lookup.get_mut(id).unwrap() = i;
        }
        let mut pairs = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * t);
        let mut by_pair = BTreeMap::new();
        let mut by_node = vec![Vec::new(); nodes.len()];
        // Name order of the keys matches node index order, so pairs come out sorted.
        for (s, ((u, v), r)) in rows.into_iter().enumerate() {
            let (ui, vi) = (lookup[&u], lookup[&v]);
            pairs.push((ui, vi));
            by_pair.insert((ui, vi), s);
            by_node[ui].push(s);
            by_node[vi].push(s);
            data.extend_from_slice(&r);
        }
        let cycles = (0..t)
            .map(|tt| {
                self.cycles_available[tt].then(|| {
                    nodes
                        .iter()
                        .map(|z| self.cycles.get(z).map_or(0.0, |c| c[tt]))
                        .collect()
                })
            })
            .collect();
        Ok(PathCountTable {
            counts: Matrix::from_vec(pairs.len(), t, data),
            nodes,
            metapaths: self.metapaths,
            pairs,
            cycles,
            by_pair,
            by_node,
            lookup,
        })
    }
}

/// Row-compressed adjacency for one resolved step.
struct StepAdjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl StepAdjacency {
    fn new(g: &HeterogeneousGraph, step: &crate::graph::ResolvedStep) -> Self {
        let n = g.node_count();
        let mut lists = vec![Vec::new(); n];
        for e in g.edges() {
            if e.kind != step.edge_kind {
                continue;
            }
            let (a, b) = if step.inverse { (e.dst, e.src) } else { (e.src, e.dst) };
            if g.kind_of(a) == step.from && g.kind_of(b) == step.to {
                lists[a].push(b);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for l in lists {
            targets.extend(l);
            offsets.push(targets.len());
        }
        StepAdjacency { offsets, targets }
    }

    #[inline]
    fn neighbours(&self, a: usize) -> &[usize] {
        &self.targets[self.offsets[a]..self.offsets[a + 1]]
    }
}

/// Per-start-node sparse rows of the chained product `A_1 A_2 ... A_L`.
fn metapath_products(g: &HeterogeneousGraph, mp: &ResolvedMetaPath) -> Vec<(usize, Vec<(usize, f64)>)> {
    let adj: Vec<StepAdjacency> = mp.steps.iter().map(|s| StepAdjacency::new(g, s)).collect();
    let n = g.node_count();
    let mut acc = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for start in 0..n {
        if g.kind_of(start) != mp.start {
            continue;
        }
        let mut frontier: Vec<(usize, f64)> = vec![(start, 1.0)];
        for a in &adj {
            for &(x, c) in &frontier {
                for &y in a.neighbours(x) {
                    if acc[y] == 0.0 {
                        touched.push(y);
                    }
                    acc[y] += c;
                }
            }
            touched.sort_unstable();
            frontier.clear();
            for &y in &touched {
                frontier.push((y, acc[y]));
                acc[y] = 0.0;
            }
            touched.clear();
            if frontier.is_empty() {
                break;
            }
        }
        if !frontier.is_empty() {
            out.push((start, frontier));
        }
    }
    out
}

/// Counts meta-path instances between every node pair.
///
/// Counts are walks conforming to the meta-path (nodes may repeat), found by
/// chained sparse products per edge-type step. For same-type endpoints the
/// count of unordered pair `(u, v)` comes from the `u -> v` direction with
/// `u < v` by id; otherwise from the start-type endpoint. Cycle counts are
/// recorded for symmetric meta-paths.
pub fn count_paths(g: &HeterogeneousGraph, metapaths: &[MetaPath]) -> Result<PathCountTable> {
    let resolved = metapaths.iter().map(|m| m.resolve(g)).collect::<Result<Vec<_>>>()?;
    #[cfg(feature = "parallel")]
    let products: Vec<_> = {
        use rayon::prelude::*;
        resolved.par_iter().map(|r| metapath_products(g, r)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let products: Vec<_> = resolved.iter().map(|r| metapath_products(g, r)).collect();

    let mut b = TableBuilder::new(metapaths.iter().map(|m| m.name.clone()).collect());
    for (t, (mp, rows)) in resolved.iter().zip(products).enumerate() {
        b.set_cycle_available(t, mp.symmetric);
        let same_type = mp.start == mp.end;
        for (a, row) in rows {
            let a_id = g.node_id(a);
            for (z, c) in row {
                let z_id = g.node_id(z);
                if a == z {
                    if mp.symmetric {
                        b.set_cycle(a_id, t, c)?;
                    }
                } else if !same_type || a_id < z_id {
                    b.set(a_id, z_id, t, c)?;
                }
            }
        }
    }
    b.build()
}

/// `sum_t sum_z' P<z z'>t` for every node `z` of the table.
pub fn node_total_counts(pc: &PathCountTable) -> Result<Vec<f64>> {
    if pc.is_empty() {
        return Err(Error::Empty("count table has no pairs"));
    }
    let mut totals = vec![0.0; pc.node_count()];
    for (s, &(u, v)) in pc.pairs().iter().enumerate() {
        let row: f64 = pc.row(s).iter().sum();
        totals[u] += row;
        totals[v] += row;
    }
    Ok(totals)
}
