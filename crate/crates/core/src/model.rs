//! Model state, hyperparameters and the MAP objective.
//!
//! Path counts are exponential, `P[s,t] ~ Exp(eta_t / (tau_s * psi[s,t]))`,
//! with pair visibility `tau_(u,v) = rho_u * rho_v` and meta-path mixture
//! `psi_s = phi_s Theta`. Node visibilities carry a `Gamma(alpha, 1)` prior
//! and pattern choices `phi_s` a symmetric `Dirichlet_K(beta)` prior.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::count::PathCountTable;
use crate::error::{Error, Result};
use crate::math::ln;
use crate::matrix::Matrix;

/// Which quantity the outer loop watches for convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Convergence {
    /// Relative change of the objective.
    #[default]
    Objective,
    /// Largest relative change over all parameter entries.
    Parameters,
}

/// Iteration caps, tolerances and line-search settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stopping {
    pub outer_tol: f64,
    pub max_outer: usize,
    pub rho_tol: f64,
    pub max_rho_sweeps: usize,
    pub pgd_steps: usize,
    pub initial_step: f64,
    pub armijo: f64,
    pub max_halvings: usize,
    pub criterion: Convergence,
}

impl Default for Stopping {
    fn default() -> Self {
        Stopping {
            outer_tol: 1e-6,
            max_outer: 500,
            rho_tol: 1e-6,
            max_rho_sweeps: 100,
            pgd_steps: 50,
            initial_step: 1.0,
            armijo: 1e-4,
            max_halvings: 30,
            criterion: Convergence::Objective,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepHyperparams {
    /// Number of generating patterns.
    pub k: usize,
    /// Shape of the gamma prior on node visibility (rate fixed at 1).
    pub alpha: f64,
    /// Dirichlet concentration on pattern choices, in `(0, 1)`.
    pub beta: f64,
    /// Lower bound on every entry of `Phi` and `Theta`.
    pub delta: f64,
    pub seed: u64,
    pub stopping: Stopping,
}

pub const DEFAULT_DELTA: f64 = 1e-50;

impl PrepHyperparams {
    pub fn new(k: usize) -> Self {
        PrepHyperparams {
            k,
            alpha: 1.0,
            beta: 1e-2,
            delta: DEFAULT_DELTA,
            seed: 0,
            stopping: Stopping::default(),
        }
    }

    /// Checks bounds; `t` is the meta-path count, needed because `delta`
    /// also bounds the rows of `Theta`.
    pub fn validate(&self, t: usize) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidParameter(m));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} must be positive", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} must lie in (0, 1)", self.beta));
        }
        let width = self.k.max(t) as f64;
        if !(self.delta > 0.0 && self.delta * width < 1.0) {
            return bad(format!("delta = {} must lie in (0, 1/max(K, T))", self.delta));
        }
        let s = &self.stopping;
        if !(s.initial_step > 0.0 && s.armijo > 0.0 && s.armijo < 1.0) {
            return bad("line search needs a positive step and an Armijo constant in (0, 1)".into());
        }
        if !(s.outer_tol >= 0.0 && s.rho_tol >= 0.0) {
            return bad("tolerances must be nonnegative".into());
        }
        Ok(())
    }
}

/// `eta` (path selectivity, length T), `rho` (node visibility, one per table
/// node), `phi` (|S| x K pattern choices) and `theta` (K x T patterns).
#[derive(Debug, Clone, PartialEq)]
pub struct PrepParameters {
    pub eta: Vec<f64>,
    pub rho: Vec<f64>,
    pub phi: Matrix,
    pub theta: Matrix,
}

impl PrepParameters {
    pub fn k(&self) -> usize {
        self.theta.rows()
    }

    pub fn t(&self) -> usize {
        self.theta.cols()
    }

    /// `tau_s = rho_u rho_v`.
    #[inline]
    pub fn tau(&self, pc: &PathCountTable, s: usize) -> f64 {
        let (u, v) = pc.pair(s);
        self.rho[u] * self.rho[v]
    }

    /// `psi[s, :] = phi[s, :] Theta`, written into `out`.
    pub fn psi_row_into(&self, s: usize, out: &mut [f64]) {
        psi_of(self.phi.row(s), &self.theta, out);
    }

    pub fn psi_row(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.t()];
        self.psi_row_into(s, &mut out);
        out
    }

    /// `lambda[s, t] = eta_t / (tau_s psi[s, t])`.
    pub fn rate(&self, pc: &PathCountTable, s: usize, t: usize) -> f64 {
        self.eta[t] / (self.tau(pc, s) * self.psi_row(s)[t])
    }

    /// Dimension and positivity checks against a count table.
    pub fn check_shape(&self, pc: &PathCountTable) -> Result<()> {
        let (s, t, n) = (pc.pair_count(), pc.metapath_count(), pc.node_count());
        if self.eta.len() != t || self.rho.len() != n || self.phi.rows() != s || self.theta.cols() != t {
            return Err(Error::Dimension(format!(
                "parameters (eta {}, rho {}, phi {}x{}, theta {}x{}) do not fit table (|S| {s}, T {t}, |V| {n})",
                self.eta.len(),
                self.rho.len(),
                self.phi.rows(),
                self.phi.cols(),
                self.theta.rows(),
                self.theta.cols()
            )));
        }
        if self.phi.cols() != self.theta.rows() {
            return Err(Error::Dimension("phi columns must equal theta rows".into()));
        }
        let positive = |xs: &[f64]| xs.iter().all(|&x| x > 0.0 && x.is_finite());
        if !positive(&self.eta) || !positive(&self.rho) {
            return Err(Error::InvalidParameter("eta and rho must be positive".into()));
        }
        if !positive(self.phi.as_slice()) || !positive(self.theta.as_slice()) {
            return Err(Error::InvalidParameter(
                "phi and theta entries must be strictly positive (delta bound)".into(),
            ));
        }
        Ok(())
    }

    /// Fitted-state invariants: rows of `phi` and `theta` are in the
    /// `delta`-shrunken simplex.
    pub fn check_invariants(&self, pc: &PathCountTable, delta: f64) -> Result<()> {
        self.check_shape(pc)?;
        for (name, m) in [("phi", &self.phi), ("theta", &self.theta)] {
            for (i, row) in m.iter_rows().enumerate() {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 || row.iter().any(|&x| x < delta) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} row {i} is outside the shrunken simplex (sum {sum})"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn psi_of(phi_row: &[f64], theta: &Matrix, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (k, &p) in phi_row.iter().enumerate() {
        for (o, &th) in out.iter_mut().zip(theta.row(k)) {
            *o += p * th;
        }
    }
}

/// The objective split into its prior and likelihood parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    /// `sum_u rho_u - (alpha - 1) log rho_u`.
    pub rho_prior: f64,
    /// `-(beta - 1) sum_s sum_k log phi[s,k]`.
    pub phi_prior: f64,
    /// `T sum_(u,v) (log rho_u + log rho_v) - |S| sum_t log eta_t`.
    pub scale: f64,
    /// `sum_(s,t) log psi[s,t]`.
    pub log_psi: f64,
    /// `sum_(s,t) eta_t P[s,t] / (tau_s psi[s,t])`.
    pub data: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.rho_prior + self.phi_prior + self.scale + self.log_psi + self.data
    }

    /// Everything except the gamma prior on `rho`.
    pub fn likelihood(&self) -> f64 {
        self.phi_prior + self.scale + self.log_psi + self.data
    }
}

pub fn objective_parts(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams) -> Result<ObjectiveParts> {
    if pc.is_empty() {
        return Err(Error::Empty("count table has no pairs"));
    }
    p.check_shape(pc)?;
    let t_n = pc.metapath_count();
    let rho_prior: f64 = p.rho.iter().map(|&r| r - (h.alpha - 1.0) * ln(r)).sum();
    let log_eta: f64 = p.eta.iter().map(|&e| ln(e)).sum();
    let mut phi_prior = 0.0;
    let mut scale = -(pc.pair_count() as f64) * log_eta;
    let mut log_psi = 0.0;
    let mut data = 0.0;
    let mut psi = vec![0.0; t_n];
    for s in 0..pc.pair_count() {
        let (u, v) = pc.pair(s);
        let tau = p.rho[u] * p.rho[v];
        let lp: f64 = p.phi.row(s).iter().map(|&x| ln(x)).sum();
        phi_prior -= (h.beta - 1.0) * lp;
        scale += t_n as f64 * (ln(p.rho[u]) + ln(p.rho[v]));
        p.psi_row_into(s, &mut psi);
        let mut row_log = 0.0;
        let mut row_data = 0.0;
        for (t, &ps) in psi.iter().enumerate() {
            row_log += ln(ps);
            row_data += p.eta[t] * pc.count(s, t) / (tau * ps);
        }
        if !(row_log.is_finite() && row_data.is_finite() && lp.is_finite()) {
            return Err(Error::NonFinite {
                context: "objective",
                pair: Some(s),
            });
        }
        log_psi += row_log;
        data += row_data;
    }
    let parts = ObjectiveParts {
        rho_prior,
        phi_prior,
        scale,
        log_psi,
        data,
    };
    if !parts.total().is_finite() {
        return Err(Error::NonFinite {
            context: "objective",
            pair: None,
        });
    }
    Ok(parts)
}

/// Negative log posterior (up to a constant) of the parameters given the
/// observed counts.
pub fn objective(pc: &PathCountTable, p: &PrepParameters, h: &PrepHyperparams) -> Result<f64> {
    objective_parts(pc, p, h).map(|o| o.total())
}

/// `xi_s = sum_t eta_t P[s,t] / psi[s,t]`, fixed while `rho` is updated.
pub fn xi(pc: &PathCountTable, p: &PrepParameters) -> Vec<f64> {
    let mut psi = vec![0.0; pc.metapath_count()];
    (0..pc.pair_count())
        .map(|s| {
            p.psi_row_into(s, &mut psi);
            psi.iter()
                .enumerate()
                .map(|(t, &ps)| p.eta[t] * pc.count(s, t) / ps)
                .sum()
        })
        .collect()
}

/// `dO/dTheta = Phi^T [1/(Phi Theta) - P / ((tau eta^-1^T) o (Phi Theta)^2)]`.
pub fn grad_theta(pc: &PathCountTable, p: &PrepParameters) -> Result<Matrix> {
    p.check_shape(pc)?;
    let (k_n, t_n) = (p.k(), p.t());
    let mut g = Matrix::zeros(k_n, t_n);
    let mut psi = vec![0.0; t_n];
    let mut inner = vec![0.0; t_n];
    for s in 0..pc.pair_count() {
        let tau = p.tau(pc, s);
        p.psi_row_into(s, &mut psi);
        for t in 0..t_n {
            inner[t] = 1.0 / psi[t] - p.eta[t] * pc.count(s, t) / (tau * psi[t] * psi[t]);
        }
        for (k, &ph) in p.phi.row(s).iter().enumerate() {
            for (gk, &x) in g.row_mut(k).iter_mut().zip(&inner) {
                *gk += ph * x;
            }
        }
    }
    if g.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "theta gradient",
            pair: None,
        });
    }
    Ok(g)
}

/// Row `s` of `dO/dPhi`:
/// `[1/(phi_s Theta) - P_s / ((tau_s eta^-1) o (phi_s Theta)^2)] Theta^T - (beta - 1)/phi_s`.
pub fn grad_phi_row(pc: &PathCountTable, p: &PrepParameters, beta: f64, s: usize) -> Result<Vec<f64>> {
    p.check_shape(pc)?;
    if s >= pc.pair_count() {
        return Err(Error::Dimension(format!("pair index {s} out of range")));
    }
    let tau = p.tau(pc, s);
    let weights: Vec<f64> = (0..pc.metapath_count()).map(|t| p.eta[t] * pc.count(s, t) / tau).collect();
    let mut g = vec![0.0; p.k()];
    let mut psi = vec![0.0; p.t()];
    row_gradient(p.phi.row(s), &p.theta, &weights, beta, &mut psi, &mut g);
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "phi gradient",
            pair: Some(s),
        });
    }
    Ok(g)
}

/// Objective restricted to one row of `Phi`, with `c_t = eta_t P[s,t] / tau_s`:
/// `sum_t [log psi_t + c_t / psi_t] + (1 - beta) sum_k log phi_k`.
pub(crate) fn row_objective(phi: &[f64], theta: &Matrix, c: &[f64], beta: f64, psi: &mut [f64]) -> f64 {
    psi_of(phi, theta, psi);
    let lik: f64 = psi.iter().zip(c).map(|(&ps, &ct)| ln(ps) + ct / ps).sum();
    let prior: f64 = phi.iter().map(|&x| ln(x)).sum();
    lik + (1.0 - beta) * prior
}

pub(crate) fn row_gradient(phi: &[f64], theta: &Matrix, c: &[f64], beta: f64, psi: &mut [f64], g: &mut [f64]) {
    psi_of(phi, theta, psi);
    for (k, gk) in g.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (t, &th) in theta.row(k).iter().enumerate() {
            acc += th * (1.0 / psi[t] - c[t] / (psi[t] * psi[t]));
        }
        *gk = acc - (beta - 1.0) / phi[k];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::count::TableBuilder;

    fn one_pair(p: f64) -> PathCountTable {
        let mut b = TableBuilder::new(alloc::vec!["m".into()]);
        b.set("u", "v", 0, p).unwrap();
        b.build().unwrap()
    }

    fn unit_params() -> PrepParameters {
        PrepParameters {
            eta: vec![1.0],
            rho: vec![1.0, 1.0],
            phi: Matrix::filled(1, 1, 1.0),
            theta: Matrix::filled(1, 1, 1.0),
        }
    }

    #[test]
    fn hand_evaluated_objective() {
        let mut h = PrepHyperparams::new(1);
        h.alpha = 1.0;
        h.beta = 0.5;
        let o = objective(&one_pair(1.0), &unit_params(), &h).unwrap();
        assert_eq!(o, 3.0);
    }

    #[test]
    fn doubling_eta_matches_hand_formula() {
        let h = PrepHyperparams::new(1);
        let pc = one_pair(2.5);
        let p = unit_params();
        let mut q = p.clone();
        q.eta[0] = 2.0;
        let base = objective(&pc, &p, &h).unwrap();
        let doubled = objective(&pc, &q, &h).unwrap();
        // -|S| log eta and eta * P / (tau psi) are the only eta terms
        let expected = base - ln(2.0) + 2.5;
        assert!((doubled - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_phi_rejected() {
        let mut p = PrepParameters {
            eta: vec![1.0],
            rho: vec![1.0, 1.0],
            phi: Matrix::from_rows(&[vec![1.0, 0.0]]),
            theta: Matrix::filled(2, 1, 1.0),
        };
        let h = PrepHyperparams::new(2);
        assert!(matches!(objective(&one_pair(1.0), &p, &h), Err(Error::InvalidParameter(_))));
        p.phi.set(0, 1, 1e-50);
        assert!(objective(&one_pair(1.0), &p, &h).is_ok());
    }

    #[test]
    fn zeroed_column_gradient() {
        let mut b = TableBuilder::new(alloc::vec!["a".into(), "b".into()]);
        b.set("u", "v", 0, 3.0).unwrap();
        b.set("u", "w", 0, 1.0).unwrap();
        let pc = b.build().unwrap();
        let p = PrepParameters {
            eta: vec![1.3, 0.7],
            rho: vec![0.9, 1.1, 2.0],
            phi: Matrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]]),
            theta: Matrix::from_rows(&[vec![0.2, 0.8], vec![0.5, 0.5]]),
        };
        let g = grad_theta(&pc, &p).unwrap();
        for k in 0..2 {
            let expected: f64 = (0..2).map(|s| p.phi.get(s, k) * (1.0 / p.psi_row(s)[1])).sum();
            assert_eq!(g.get(k, 1), expected);
        }
    }

    #[test]
    fn hyperparameter_bounds() {
        let mut h = PrepHyperparams::new(3);
        assert!(h.validate(3).is_ok());
        h.beta = 1.0;
        assert!(h.validate(3).is_err());
        h.beta = 0.5;
        h.delta = 0.5;
        assert!(h.validate(3).is_err());
        h.delta = 0.0;
        assert!(h.validate(3).is_err());
        h.delta = 1e-3;
        h.k = 0;
        assert!(h.validate(3).is_err());
    }
}
