#![allow(dead_code, clippy::needless_range_loop)]

use prep_core::{Matrix, PathCountTable, PrepParameters, TableBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random table with `s_n` distinct pairs over about `s_n / 2 + 2` nodes,
/// `t_n` meta-paths, counts in `[lo, hi]` with some zeros (never a whole
/// row), and positive cycle counts.
pub fn random_table(r: &mut ChaCha8Rng, s_n: usize, t_n: usize, lo: f64, hi: f64) -> PathCountTable {
    let n = (s_n / 2 + 2).max(3);
    let n = if n * (n - 1) / 2 < s_n { s_n + 1 } else { n };
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    for i in (1..all.len()).rev() {
        all.swap(i, r.random_range(0..=i));
    }
    let name = |i: usize| format!("n{i:03}");
    let mut b = TableBuilder::new((0..t_n).map(|t| format!("m{t}")).collect());
    for &(u, v) in all.iter().take(s_n) {
        let keep = r.random_range(0..t_n);
        for t in 0..t_n {
            let c = if t != keep && r.random_bool(0.25) { 0.0 } else { r.random_range(lo..=hi) };
            b.set(&name(u), &name(v), t, c).unwrap();
        }
    }
    for z in 0..n {
        for t in 0..t_n {
            b.set_cycle(&name(z), t, r.random_range(lo..=hi) + hi).unwrap();
        }
    }
    b.build().unwrap()
}

/// Rows drawn uniformly from the simplex, then floored at `floor` and
/// renormalized.
pub fn simplex_rows(r: &mut ChaCha8Rng, rows: usize, cols: usize, floor: f64) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let row = m.row_mut(i);
        for x in row.iter_mut() {
            *x = -r.random_range(1e-12f64..1.0).ln() + floor;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }
    m
}

/// Parameters with `eta`, `rho` in `[lo, hi]` and simplex rows for `Phi`
/// and `Theta`.
pub fn random_params(r: &mut ChaCha8Rng, pc: &PathCountTable, k: usize, lo: f64, hi: f64) -> PrepParameters {
    PrepParameters {
        eta: (0..pc.metapath_count()).map(|_| r.random_range(lo..=hi)).collect(),
        rho: (0..pc.node_count()).map(|_| r.random_range(lo..=hi)).collect(),
        phi: simplex_rows(r, pc.pair_count(), k, 0.05),
        theta: simplex_rows(r, k, pc.metapath_count(), 0.05),
    }
}

/// Parameters with every entry, including `Phi` and `Theta`, in `[lo, hi]`
/// (off the simplex).
pub fn box_params(r: &mut ChaCha8Rng, pc: &PathCountTable, k: usize, lo: f64, hi: f64) -> PrepParameters {
    let mut fill = |rows: usize, cols: usize| {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| r.random_range(lo..=hi)).collect())
    };
    let phi = fill(pc.pair_count(), k);
    let theta = fill(k, pc.metapath_count());
    PrepParameters {
        eta: (0..pc.metapath_count()).map(|_| r.random_range(lo..=hi)).collect(),
        rho: (0..pc.node_count()).map(|_| r.random_range(lo..=hi)).collect(),
        phi,
        theta,
    }
}

/// Minimiser of a smooth convex `f` on `[a, b]`, found by bisection on a
/// Richardson-extrapolated central difference with fixed step `h`. Far more
/// precise than comparing function values when `f` carries large constant
/// terms.
pub fn derivative_root_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, h: f64) -> f64 {
    let d = |x: f64| {
        let c = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        (4.0 * c(h / 2.0) - c(h)) / 3.0
    };
    assert!(d(a) < 0.0 && d(b) > 0.0, "minimiser not bracketed");
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if d(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-14 * (1.0 + m.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Central difference of `f` at `x` with one Richardson step.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-4 * x.abs().max(1e-3);
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest relative error between the analytic `Theta` and `Phi` gradients
/// and finite differences of the objective.
pub fn gradient_error(pc: &PathCountTable, p: &PrepParameters, h: &prep_core::PrepHyperparams) -> f64 {
    use prep_core::model::{grad_phi_row, grad_theta};
    let obj = |q: &PrepParameters| prep_core::objective(pc, q, h).unwrap();
    let mut worst = 0.0f64;
    let gt = grad_theta(pc, p).unwrap();
    for k in 0..p.k() {
        for t in 0..p.t() {
            let fd = derivative(
                |x| {
                    let mut q = p.clone();
                    q.theta.set(k, t, x);
                    obj(&q)
                },
                p.theta.get(k, t),
            );
            worst = worst.max(rel_err(gt.get(k, t), fd));
        }
    }
    for s in 0..pc.pair_count() {
        let g = grad_phi_row(pc, p, h.beta, s).unwrap();
        for k in 0..p.k() {
            let fd = derivative(
                |x| {
                    let mut q = p.clone();
                    q.phi.set(s, k, x);
                    obj(&q)
                },
                p.phi.get(s, k),
            );
            worst = worst.max(rel_err(g[k], fd));
        }
    }
    worst
}

/// Worst relative gap between the closed-form `eta` and a golden-section
/// minimiser of the objective in each `eta_t` alone.
pub fn eta_block_error(pc: &PathCountTable, p: &PrepParameters, h: &prep_core::PrepHyperparams) -> f64 {
    let closed = prep_core::infer::update_eta(pc, p);
    let mut worst = 0.0f64;
    for t in 0..pc.metapath_count() {
        let f = |log_e: f64| {
            let mut q = p.clone();
            q.eta[t] = log_e.exp();
            prep_core::objective(pc, &q, h).unwrap()
        };
        let c = closed[t].ln();
        let found = derivative_root_min(f, c - 5.0, c + 5.0, 1e-3).exp();
        worst = worst.max(rel_err(closed[t], found));
    }
    worst
}

/// For every node: (relative gap to a golden-section minimiser of the
/// objective in `rho_u` alone, quadratic residual of the root, second
/// difference of the objective at the root).
pub fn rho_block_checks(pc: &PathCountTable, p: &PrepParameters, h: &prep_core::PrepHyperparams) -> Vec<(f64, f64, f64)> {
    use prep_core::infer::{rho_quadratic, solve_rho_quadratic};
    let xi = prep_core::model::xi(pc, p);
    (0..pc.node_count())
        .map(|u| {
            let (b, c) = rho_quadratic(pc, &p.rho, &xi, h.alpha, u);
            let root = solve_rho_quadratic(b, c);
            let residual = (root * root + b * root - c).abs() / (root * root).max(b.abs() * root).max(c).max(1e-300);
            let at = |x: f64| {
                let mut q = p.clone();
                q.rho[u] = x;
                prep_core::objective(pc, &q, h).unwrap()
            };
            let found = derivative_root_min(|l: f64| at(l.exp()), root.ln() - 5.0, root.ln() + 5.0, 1e-3).exp();
            let d = 1e-3 * root;
            let second = at(root + d) - 2.0 * at(root) + at(root - d);
            (rel_err(root, found), residual, second)
        })
        .collect()
}

/// Largest relative increase of the objective between consecutive trace
/// rows (negative or zero when the trace never goes up).
pub fn worst_ascent(trace: &[prep_core::TraceRow]) -> f64 {
    trace
        .windows(2)
        .map(|w| (w[1].objective - w[0].objective) / w[0].objective.abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Like [`worst_ascent`] but per block update within each outer iteration.
pub fn worst_block_ascent(trace: &[prep_core::TraceRow]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for w in trace.windows(2) {
        let mut o = w[0].objective;
        for d in [w[1].d_eta, w[1].d_rho, w[1].d_phi, w[1].d_theta] {
            worst = worst.max(d / o.abs());
            o += d;
        }
    }
    worst
}

/// K = 1, T = 1: samples from known parameters and refits. Returns the
/// relative error of `eta`, the fitted objective and the objective at the
/// generating parameters.
///
/// Rates only fix `eta / (rho_u rho_v)`, so the absolute scale of `eta` is
/// set by the gamma prior, whose stationary scale puts the mean of `rho` at
/// `alpha - 1`. The generating `rho` is drawn from the prior and then moved
/// to that scale, with `eta` following, so it is comparable with the fit.
pub fn round_trip(seed: u64, pairs: usize) -> (f64, f64, f64) {
    let (alpha, n) = (8.0, 70);
    let mut r = rng(seed ^ 0x5eed);
    let gamma = rand_distr::Gamma::new(alpha, 1.0).unwrap();
    let nodes: Vec<String> = (0..n).map(|i| format!("v{i:03}")).collect();
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    for i in (1..all.len()).rev() {
        all.swap(i, rand::Rng::random_range(&mut r, 0..=i));
    }
    all.truncate(pairs);
    let mut rho: Vec<f64> = (0..n).map(|_| rand_distr::Distribution::sample(&gamma, &mut r)).collect();
    let c = (alpha - 1.0) / (rho.iter().sum::<f64>() / n as f64);
    rho.iter_mut().for_each(|x| *x *= c);
    let eta = 2.5;
    let truth = PrepParameters {
        eta: vec![eta],
        rho,
        phi: prep_core::Matrix::filled(pairs, 1, 1.0),
        theta: prep_core::Matrix::filled(1, 1, 1.0),
    };
    let (pc, aligned) = prep_core::sample::sample_from_model(&truth, &nodes, &all, &["m".to_string()], seed).unwrap();
    let mut h = prep_core::PrepHyperparams::new(1);
    h.alpha = alpha;
    h.beta = 0.5;
    h.seed = seed;
    let f = prep_core::fit(&pc, &h).unwrap();
    let eta_err = (f.params.eta[0] - eta).abs() / eta;
    (eta_err, f.objective(), prep_core::objective(&pc, &aligned, &h).unwrap())
}

/// `K = 1`, `rho = 1`, `eta = c`, uniform `Theta`: returns
/// `(r(s), PathCount(s))` for every pair of a random table.
pub fn pathcount_reduction(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let s_n = r.random_range(5..60);
    let t_n = r.random_range(1..5);
    let pc = random_table(&mut r, s_n, t_n, 0.0, 50.0);
    let c = r.random_range(0.1..10.0);
    let p = PrepParameters {
        eta: vec![c; t_n],
        rho: vec![1.0; pc.node_count()],
        phi: Matrix::filled(s_n, 1, 1.0),
        theta: Matrix::filled(1, t_n, 1.0 / t_n as f64),
    };
    let mut h = prep_core::PrepHyperparams::new(1);
    h.beta = 0.3;
    let r_s = (0..s_n).map(|s| prep_core::prep_score(&pc, &p, &h, s).unwrap()).collect();
    let counts = (0..s_n).map(|s| pc.row(s).iter().sum()).collect();
    (r_s, counts)
}

/// Single meta-path, `K = 1`, `eta = 1`, `rho_z = sqrt(P<zz>)`: returns
/// `(r(s), JoinSim(s))`.
pub fn joinsim_reduction(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let s_n = r.random_range(5..60);
    let pc = random_table(&mut r, s_n, 1, 0.1, 50.0);
    let rho: Vec<f64> = (0..pc.node_count()).map(|z| pc.cycle(z, 0).unwrap().sqrt()).collect();
    let p = PrepParameters {
        eta: vec![1.0],
        rho,
        phi: Matrix::filled(s_n, 1, 1.0),
        theta: Matrix::filled(1, 1, 1.0),
    };
    let mut h = prep_core::PrepHyperparams::new(1);
    h.beta = 0.3;
    let r_s = (0..s_n).map(|s| prep_core::prep_score(&pc, &p, &h, s).unwrap()).collect();
    let js = prep_core::baselines::base_scores(&pc, prep_core::baselines::Measure::JoinSim, 0).unwrap();
    (r_s, js)
}

/// Pairwise-comparison AUC.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut n = 0.0;
    for (i, &a) in scores.iter().enumerate() {
        for (j, &b) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                n += 1.0;
                wins += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / n
}

/// Exhaustive active-set solution of `min ||x - z||^2` s.t. `x >= delta`,
/// `sum x = 1`: for every subset `A` of coordinates pinned at `delta`, the
/// free ones are `z_i + lambda`; keep the subset satisfying all KKT
/// conditions.
pub fn active_set_oracle(z: &[f64], delta: f64) -> Vec<f64> {
    let k = z.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let free: Vec<usize> = (0..k).filter(|i| mask & (1 << i) == 0).collect();
        if free.is_empty() {
            continue;
        }
        let pinned = (k - free.len()) as f64 * delta;
        let lambda = (1.0 - pinned - free.iter().map(|&i| z[i]).sum::<f64>()) / free.len() as f64;
        let x: Vec<f64> = (0..k)
            .map(|i| if mask & (1 << i) == 0 { z[i] + lambda } else { delta })
            .collect();
        let primal = free.iter().all(|&i| x[i] >= delta - 1e-12);
        // multiplier of a pinned coordinate: delta - z_i - lambda >= 0
        let dual = (0..k)
            .filter(|i| mask & (1 << i) != 0)
            .all(|i| delta - z[i] - lambda >= -1e-12);
        if primal && dual {
            let d: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, x));
            }
        }
    }
    best.expect("a KKT point always exists").1
}
