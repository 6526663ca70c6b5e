//! MAP inference by block-coordinate descent.
//!
//! Each outer iteration updates `eta` in closed form, sweeps `rho` with the
//! positive root of each node's stationarity quadratic until the sweep
//! settles, then runs projected gradient descent on every row of `Phi`
//! (rows are independent) and finally on `Theta`. Every block update leaves
//! the objective no larger than before.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use crate::count::PathCountTable;
use crate::error::{Error, Result};
use crate::math::{mean_var, sqrt};
use crate::matrix::Matrix;
use crate::model::{
    objective, row_gradient, row_objective, xi, PrepHyperparams, PrepParameters, Stopping,
};
use crate::simplex::project_unchecked;

/// Lower bound for node visibilities.
pub const RHO_FLOOR: f64 = 1e-12;
/// Selectivity assigned to a meta-path with no observed instances.
pub const ETA_CLAMP: f64 = 1e6;

/// Closed-form minimiser of the objective in `eta`:
/// `eta_t = ( (1/|S|) sum_s P[s,t] / (tau_s psi[s,t]) )^-1`.
///
/// A meta-path whose column is all zero would send `eta_t` to infinity; it is
/// clamped to [`ETA_CLAMP`].
pub fn update_eta(pc: &PathCountTable, p: &PrepParameters) -> Vec<f64> {
    let t_n = pc.metapath_count();
    let mut sums = vec![0.0; t_n];
    let mut psi = vec![0.0; t_n];
    for s in 0..pc.pair_count() {
        let tau = p.tau(pc, s);
        p.psi_row_into(s, &mut psi);
        for t in 0..t_n {
            sums[t] += pc.count(s, t) / (tau * psi[t]);
        }
    }
    let n = pc.pair_count() as f64;
    sums.into_iter()
        .map(|x| if x > 0.0 { n / x } else { ETA_CLAMP })
        .collect()
}

/// Positive root of `x^2 + b x - c = 0` for `c >= 0`; when `c = 0` and
/// `b >= 0` the root is zero.
pub fn solve_rho_quadratic(b: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return (-b).max(0.0);
    }
    let disc = sqrt(b * b + 4.0 * c);
    if b >= 0.0 {
        2.0 * c / (b + disc)
    } else {
        (disc - b) / 2.0
    }
}

/// Coefficients `(b, c)` of node `u`'s stationarity quadratic
/// `rho_u^2 + b rho_u - c = 0`, with `b = n_u T - (alpha - 1)` where `n_u` is
/// the number of pairs containing `u`, and `c = sum_{s=(u,v)} xi_s / rho_v`.
pub fn rho_quadratic(pc: &PathCountTable, rho: &[f64], xi: &[f64], alpha: f64, u: usize) -> (f64, f64) {
    let pairs = pc.pairs_of(u);
    let b = (pairs.len() * pc.metapath_count()) as f64 - (alpha - 1.0);
    let c = pairs
        .iter()
        .map(|&s| {
            let (a, z) = pc.pair(s);
            let other = if a == u { z } else { a };
            xi[s] / rho[other]
        })
        .sum();
    (b, c)
}

/// Coordinate sweeps over nodes, each setting `rho_u` to the exact
/// minimiser with the others fixed. Returns the new vector and the sweep
/// count.
pub fn update_rho(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams) -> (Vec<f64>, usize) {
    let xi = xi(pc, p);
    let mut rho = p.rho.clone();
    let mut sweeps = 0;
    while sweeps < h.stopping.max_rho_sweeps {
        sweeps += 1;
        let mut max_rel = 0.0f64;
        for u in 0..rho.len() {
            let (b, c) = rho_quadratic(pc, &rho, &xi, h.alpha, u);
            let new = solve_rho_quadratic(b, c).max(RHO_FLOOR);
            max_rel = max_rel.max((new - rho[u]).abs() / rho[u]);
            rho[u] = new;
        }
        if max_rel < h.stopping.rho_tol {
            break;
        }
    }
    (rho, sweeps)
}

/// Result of one projected-gradient block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdOutcome {
    pub steps: usize,
    /// The line search ran out of halvings.
    pub stalled: bool,
    pub start: f64,
    pub end: f64,
}

/// Projected gradient descent with Armijo backtracking on `x`, treated as
/// consecutive blocks of `width` entries each projected onto the shrunken
/// simplex.
fn projected_descent<F, G>(x: &mut [f64], width: usize, delta: f64, stop: &Stopping, mut f: F, mut grad: G) -> PgdOutcome
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64], &mut [f64]),
{
    let mut g = vec![0.0; x.len()];
    let mut cand = vec![0.0; x.len()];
    let mut scratch = Vec::with_capacity(width);
    let mut fx = f(x);
    let start = fx;
    let mut out = PgdOutcome {
        steps: 0,
        stalled: false,
        start,
        end: fx,
    };
    if width <= 1 {
        return out;
    }
    for _ in 0..stop.pgd_steps {
        grad(x, &mut g);
        if g.iter().any(|v| !v.is_finite()) {
            out.stalled = true;
            break;
        }
        let mut step = stop.initial_step;
        let mut accepted = None;
        let mut stationary = false;
        for _ in 0..=stop.max_halvings {
            for ((c, &xi), &gi) in cand.iter_mut().zip(x.iter()).zip(&g) {
                *c = xi - step * gi;
            }
            for block in cand.chunks_mut(width) {
                project_unchecked(block, delta, &mut scratch);
            }
            let decrease: f64 = g.iter().zip(&cand).zip(x.iter()).map(|((gi, c), xi)| gi * (c - xi)).sum();
            // NaN counts as no descent
            if decrease.partial_cmp(&0.0) != Some(core::cmp::Ordering::Less) {
                stationary = true;
                break;
            }
            let fc = f(&cand);
            if fc <= fx + stop.armijo * decrease {
                accepted = Some(fc);
                break;
            }
            step *= 0.5;
        }
        if stationary {
            break;
        }
        let Some(fc) = accepted else {
            log::debug!("projected gradient line search stalled at objective {fx}");
            out.stalled = true;
            break;
        };
        x.copy_from_slice(&cand);
        out.steps += 1;
        let gain = fx - fc;
        fx = fc;
        if gain <= 1e-15 * fx.abs() {
            break;
        }
    }
    out.end = fx;
    out
}

/// `c[s,t] = eta_t P[s,t] / tau_s`.
fn scaled_counts(pc: &PathCountTable, p: &PrepParameters) -> Matrix {
    let t_n = pc.metapath_count();
    let mut c = Matrix::zeros(pc.pair_count(), t_n);
    for s in 0..pc.pair_count() {
        let tau = p.tau(pc, s);
        for t in 0..t_n {
            c.set(s, t, p.eta[t] * pc.count(s, t) / tau);
        }
    }
    c
}

fn theta_psi(phi_row: &[f64], theta: &[f64], t_n: usize, psi: &mut [f64]) {
    psi.iter_mut().for_each(|x| *x = 0.0);
    for (k, &ph) in phi_row.iter().enumerate() {
        for (o, &th) in psi.iter_mut().zip(&theta[k * t_n..(k + 1) * t_n]) {
            *o += ph * th;
        }
    }
}

fn theta_objective(phi: &Matrix, theta: &[f64], c: &Matrix, psi: &mut [f64]) -> f64 {
    let t_n = c.cols();
    let mut total = 0.0;
    for s in 0..phi.rows() {
        theta_psi(phi.row(s), theta, t_n, psi);
        total += psi
            .iter()
            .zip(c.row(s))
            .map(|(&ps, &ct)| crate::math::ln(ps) + ct / ps)
            .sum::<f64>();
    }
    if total.is_nan() {
        f64::INFINITY
    } else {
        total
    }
}

fn theta_gradient(phi: &Matrix, theta: &[f64], c: &Matrix, psi: &mut [f64], inner: &mut [f64], g: &mut [f64]) {
    g.iter_mut().for_each(|x| *x = 0.0);
    let t_n = c.cols();
    for s in 0..phi.rows() {
        theta_psi(phi.row(s), theta, t_n, psi);
        for t in 0..t_n {
            inner[t] = 1.0 / psi[t] - c.get(s, t) / (psi[t] * psi[t]);
        }
        for (k, &ph) in phi.row(s).iter().enumerate() {
            for (gk, &v) in g[k * t_n..(k + 1) * t_n].iter_mut().zip(inner.iter()) {
                *gk += ph * v;
            }
        }
    }
}

/// One projected-gradient block on `Theta` with the other blocks fixed.
pub fn pgd_update_theta(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams) -> (Matrix, PgdOutcome) {
    let c = scaled_counts(pc, p);
    let t_n = p.t();
    let mut theta = p.theta.clone();
    let phi = &p.phi;
    let mut psi = vec![0.0; t_n];
    let mut psi_g = vec![0.0; t_n];
    let mut inner = vec![0.0; t_n];
    let outcome = projected_descent(
        theta.as_mut_slice(),
        t_n,
        h.delta,
        &h.stopping,
        |x| theta_objective(phi, x, &c, &mut psi),
        |x, g| theta_gradient(phi, x, &c, &mut psi_g, &mut inner, g),
    );
    (theta, outcome)
}

/// Projected gradient descent on a single row of `Phi`; `c` is the row of
/// `eta_t P[s,t] / tau_s`.
pub fn pgd_phi_row(row: &mut [f64], theta: &Matrix, c: &[f64], beta: f64, delta: f64, stop: &Stopping) -> PgdOutcome {
    let t_n = theta.cols();
    let mut psi = vec![0.0; t_n];
    let mut psi_g = vec![0.0; t_n];
    projected_descent(
        row,
        theta.rows(),
        delta,
        stop,
        |x| {
            let v = row_objective(x, theta, c, beta, &mut psi);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        },
        |x, g| row_gradient(x, theta, c, beta, &mut psi_g, g),
    )
}

/// Row-wise projected-gradient update of `Phi`; rows run in parallel with
/// the `parallel` feature.
pub fn pgd_update_phi(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams) -> (Matrix, Vec<PgdOutcome>) {
    let c = scaled_counts(pc, p);
    let mut phi = p.phi.clone();
    let k_n = p.k();
    let theta = &p.theta;
    let run = |(s, row): (usize, &mut [f64])| pgd_phi_row(row, theta, c.row(s), h.beta, h.delta, &h.stopping);
    #[cfg(feature = "parallel")]
    let outcomes = {
        use rayon::prelude::*;
        phi.as_mut_slice().par_chunks_mut(k_n).enumerate().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes = phi.as_mut_slice().chunks_mut(k_n).enumerate().map(run).collect();
    (phi, outcomes)
}

/// Which blocks are frozen during fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Full,
    /// `rho = 1`, not updated.
    NoNodeVisibility,
    /// `eta = 1`, not updated.
    NoPathSelectivity,
    /// `Phi = 1/K`, `Theta = 1/T`, neither updated.
    NoCrossSynergy,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Full => "prep",
            Variant::NoNodeVisibility => "prep-no-nv",
            Variant::NoPathSelectivity => "prep-no-ps",
            Variant::NoCrossSynergy => "prep-no-cs",
        }
    }

    fn updates_eta(self) -> bool {
        self != Variant::NoPathSelectivity
    }

    fn updates_rho(self) -> bool {
        self != Variant::NoNodeVisibility
    }

    fn updates_patterns(self) -> bool {
        self != Variant::NoCrossSynergy
    }
}

/// One line of the objective trace: the objective after a full outer
/// iteration and the change contributed by each block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub d_eta: f64,
    pub d_rho: f64,
    pub d_phi: f64,
    pub d_theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: PrepParameters,
    /// Row 0 is the initial state (block deltas zero).
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

impl FitResult {
    pub fn objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }
}

fn random_simplex_row(rng: &mut ChaCha8Rng, row: &mut [f64], delta: f64, scratch: &mut Vec<f64>) {
    for x in row.iter_mut() {
        let e: f64 = Exp1.sample(rng);
        *x = e;
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= sum);
    project_unchecked(row, delta, scratch);
}

/// Initial state: `rho` drawn from the gamma prior, `Phi` rows uniform on
/// the simplex, the first `min(K, T)` rows of `Theta` one-hot and the rest
/// uniform, all rows projected into the shrunken simplex. `eta` is set by
/// its closed form.
pub fn initialize(pc: &PathCountTable, h: &PrepHyperparams, variant: Variant) -> Result<PrepParameters> {
    let (s_n, t_n, k_n) = (pc.pair_count(), pc.metapath_count(), h.k);
    let mut rng = ChaCha8Rng::seed_from_u64(h.seed);
    let mut scratch = Vec::new();
    let rho = if variant.updates_rho() {
        let gamma = Gamma::new(h.alpha, 1.0).map_err(|e| Error::InvalidParameter(alloc::format!("{e}")))?;
        (0..pc.node_count()).map(|_| gamma.sample(&mut rng).max(RHO_FLOOR)).collect()
    } else {
        vec![1.0; pc.node_count()]
    };
    let (phi, theta) = if variant.updates_patterns() {
        let mut phi = Matrix::zeros(s_n, k_n);
        for s in 0..s_n {
            random_simplex_row(&mut rng, phi.row_mut(s), h.delta, &mut scratch);
        }
        let mut theta = Matrix::zeros(k_n, t_n);
        for k in 0..k_n {
            let row = theta.row_mut(k);
            if k < t_n {
                row[k] = 1.0;
                project_unchecked(row, h.delta, &mut scratch);
            } else {
                random_simplex_row(&mut rng, row, h.delta, &mut scratch);
            }
        }
        (phi, theta)
    } else {
        (
            Matrix::filled(s_n, k_n, 1.0 / k_n as f64),
            Matrix::filled(k_n, t_n, 1.0 / t_n as f64),
        )
    };
    let mut p = PrepParameters {
        eta: vec![1.0; t_n],
        rho,
        phi,
        theta,
    };
    if variant.updates_eta() {
        p.eta = update_eta(pc, &p);
    }
    Ok(p)
}

fn max_relative_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn parameter_change(a: &PrepParameters, b: &PrepParameters) -> f64 {
    max_relative_change(&a.eta, &b.eta)
        .max(max_relative_change(&a.rho, &b.rho))
        .max(max_relative_change(a.phi.as_slice(), b.phi.as_slice()))
        .max(max_relative_change(a.theta.as_slice(), b.theta.as_slice()))
}

/// Overflowing counts can push `eta` or `rho` to 0 or infinity.
fn scales_finite(p: &PrepParameters, context: &'static str) -> Result<()> {
    if p.eta.iter().chain(&p.rho).all(|&x| x > 0.0 && x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { context, pair: None })
    }
}

/// Fits the full model.
pub fn fit(pc: &PathCountTable, h: &PrepHyperparams) -> Result<FitResult> {
    fit_variant(pc, h, Variant::Full)
}

/// Fits the model with the blocks named by `variant` frozen.
pub fn fit_variant(pc: &PathCountTable, h: &PrepHyperparams, variant: Variant) -> Result<FitResult> {
    if pc.is_empty() {
        return Err(Error::Empty("count table has no pairs"));
    }
    h.validate(pc.metapath_count())?;
    let mut p = initialize(pc, h, variant)?;
    fit_from(pc, h, variant, &mut p)
}

/// Runs the block-coordinate loop from the given state.
pub fn fit_from(pc: &PathCountTable, h: &PrepHyperparams, variant: Variant, p: &mut PrepParameters) -> Result<FitResult> {
    let at = |iteration: usize| move |e: Error| Error::AtIteration {
        iteration,
        source: Box::new(e),
    };
    let stop = &h.stopping;
    scales_finite(p, "initial selectivity or visibility").map_err(at(0))?;
    let mut current = objective(pc, p, h).map_err(at(0))?;
    let mut trace = vec![TraceRow {
        iteration: 0,
        objective: current,
        d_eta: 0.0,
        d_rho: 0.0,
        d_phi: 0.0,
        d_theta: 0.0,
    }];
    let mut converged = false;
    for iteration in 1..=stop.max_outer {
        let before = p.clone();
        let start = current;
        let mut row = TraceRow {
            iteration,
            objective: current,
            d_eta: 0.0,
            d_rho: 0.0,
            d_phi: 0.0,
            d_theta: 0.0,
        };
        if variant.updates_eta() {
            p.eta = update_eta(pc, p);
            scales_finite(p, "selectivity update").map_err(at(iteration))?;
            let o = objective(pc, p, h).map_err(at(iteration))?;
            row.d_eta = o - current;
            current = o;
        }
        if variant.updates_rho() {
            p.rho = update_rho(pc, p, h).0;
            scales_finite(p, "visibility update").map_err(at(iteration))?;
            let o = objective(pc, p, h).map_err(at(iteration))?;
            row.d_rho = o - current;
            current = o;
        }
        if variant.updates_patterns() {
            let (phi, outcomes) = pgd_update_phi(pc, p, h);
            let stalls = outcomes.iter().filter(|o| o.stalled).count();
            if stalls > 0 {
                log::debug!("iteration {iteration}: {stalls} phi rows stalled in line search");
            }
            p.phi = phi;
            let o = objective(pc, p, h).map_err(at(iteration))?;
            row.d_phi = o - current;
            current = o;

            let (theta, outcome) = pgd_update_theta(pc, p, h);
            if outcome.stalled {
                log::debug!("iteration {iteration}: theta line search stalled");
            }
            p.theta = theta;
            let o = objective(pc, p, h).map_err(at(iteration))?;
            row.d_theta = o - current;
            current = o;
        }
        row.objective = current;
        trace.push(row);
        let settled = match stop.criterion {
            crate::model::Convergence::Objective => (start - current).abs() <= stop.outer_tol * start.abs().max(1.0),
            crate::model::Convergence::Parameters => parameter_change(&before, p) < stop.outer_tol,
        };
        if settled {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        params: p.clone(),
        trace,
        converged,
    })
}

/// Method-of-moments shape of a unit-rate gamma fitted to per-node totals:
/// `mean^2 / variance`, clamped to `[0.1, 1e4]`. Equal totals fall back to
/// the (clamped) mean.
pub fn estimate_alpha(totals: &[f64]) -> Result<f64> {
    let positive: Vec<f64> = totals.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    if positive.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two nodes with positive totals to estimate alpha".into(),
        ));
    }
    let (mean, var) = mean_var(&positive);
    let alpha = if var > 0.0 { mean * mean / var } else { mean };
    Ok(alpha.clamp(0.1, 1e4))
}
