//! Forward sampling of path counts from given model parameters.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::count::{PathCountTable, TableBuilder};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::PrepParameters;

/// Draws `P[s,t] ~ Exp(eta_t / (tau_s psi[s,t]))` for every listed pair.
///
/// `p.rho` is indexed like `nodes` and `p.phi` rows like `pairs`. Returns the
/// table together with the parameters re-indexed to the table's canonical
/// node and pair order, so the generating state can be scored against the
/// sample directly.
pub fn sample_from_model(
    p: &PrepParameters,
    nodes: &[String],
    pairs: &[(usize, usize)],
    metapaths: &[String],
    seed: u64,
) -> Result<(PathCountTable, PrepParameters)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = draw_counts(p, pairs, &mut rng, &vec![1.0; pairs.len()])?;
    let mut b = TableBuilder::new(metapaths.to_vec());
    for (s, &(u, v)) in pairs.iter().enumerate() {
        for t in 0..p.t() {
            b.set(&nodes[u], &nodes[v], t, counts.get(s, t))?;
        }
    }
    let table = b.build()?;
    let aligned = align_parameters(p, nodes, pairs, &table)?;
    Ok((table, aligned))
}

/// Exponential draws with per-pair mean multipliers (`boost[s] = 1` is the
/// model itself).
pub(crate) fn draw_counts<R: rand::Rng>(
    p: &PrepParameters,
    pairs: &[(usize, usize)],
    rng: &mut R,
    boost: &[f64],
) -> Result<Matrix> {
    if p.phi.rows() != pairs.len() || p.eta.len() != p.t() {
        return Err(Error::Dimension(format!(
            "{} pattern-choice rows for {} pairs",
            p.phi.rows(),
            pairs.len()
        )));
    }
    let t_n = p.t();
    let mut out = Matrix::zeros(pairs.len(), t_n);
    let mut psi = vec![0.0; t_n];
    for (s, &(u, v)) in pairs.iter().enumerate() {
        let tau = p.rho[u] * p.rho[v];
        p.psi_row_into(s, &mut psi);
        for (t, (&ps, &eta)) in psi.iter().zip(&p.eta).enumerate() {
            let mean = boost[s] * tau * ps / eta;
            let e: f64 = Exp1.sample(rng);
            out.set(s, t, e * mean);
        }
    }
    Ok(out)
}

/// Re-indexes `rho` and `phi` from (`nodes`, `pairs`) order to `table` order.
/// Pairs absent from the table (all-zero rows) are dropped.
pub fn align_parameters(
    p: &PrepParameters,
    nodes: &[String],
    pairs: &[(usize, usize)],
    table: &PathCountTable,
) -> Result<PrepParameters> {
    let mut rho = vec![0.0; table.node_count()];
    for (i, id) in nodes.iter().enumerate() {
        if let Some(j) = table.node_index(id) {
            rho[j] = p.rho[i];
        }
    }
    let mut phi = Matrix::zeros(table.pair_count(), p.k());
    for (s, &(u, v)) in pairs.iter().enumerate() {
        if let Some(j) = table.find_by_id(&nodes[u], &nodes[v]) {
            phi.row_mut(j).copy_from_slice(p.phi.row(s));
        }
    }
    Ok(PrepParameters {
        eta: p.eta.clone(),
        rho,
        phi,
        theta: p.theta.clone(),
    })
}
