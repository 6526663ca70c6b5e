//! One line per acceptance criterion. Exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use prep::{io, pipeline, RunConfig};
use prep_core::baselines::{base_scores, composite, BaselineWeights, Heuristic, Measure};
use prep_core::eval::evaluate_table;
use prep_core::metrics::{aggregate, mrr, reciprocal_rank, roc_auc, spearman, Scheme};
use prep_core::synth::{generate, SynthConfig};
use prep_core::{project_shrunken_simplex, PrepHyperparams, Variant};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut r = rng(100);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s_n = r.random_range(4..=50);
        let t_n = r.random_range(2..=6);
        let k = r.random_range(1..=4);
        let pc = random_table(&mut r, s_n, t_n, 0.1, 10.0);
        let p = box_params(&mut r, &pc, k, 0.1, 10.0);
        let mut h = PrepHyperparams::new(k);
        h.beta = r.random_range(0.01..0.99);
        h.alpha = 2.0;
        worst = worst.max(gradient_error(&pc, &p, &h));
    }
    let took = start.elapsed();
    outcome(
        worst < 1e-5 && took < Duration::from_secs(10),
        format!("worst relative error {worst:.2e}, {took:.2?}"),
    )
}

fn block_optimality() -> Outcome {
    let mut r = rng(200);
    let (mut eta_gap, mut rho_gap, mut residual, mut convex) = (0.0f64, 0.0f64, 0.0f64, true);
    for _ in 0..100 {
        let s_n = r.random_range(4..40);
        let t_n = r.random_range(1..5);
        let k = r.random_range(1..4);
        let pc = random_table(&mut r, s_n, t_n, 0.1, 10.0);
        let p = random_params(&mut r, &pc, k, 0.1, 10.0);
        let mut h = PrepHyperparams::new(k);
        h.alpha = r.random_range(0.2..5.0);
        h.beta = 0.5;
        eta_gap = eta_gap.max(eta_block_error(&pc, &p, &h));
        for (g, res, second) in rho_block_checks(&pc, &p, &h) {
            rho_gap = rho_gap.max(g);
            residual = residual.max(res);
            convex &= second >= 0.0;
        }
    }
    outcome(
        eta_gap < 1e-6 && rho_gap < 1e-6 && residual < 1e-10 && convex,
        format!("eta gap {eta_gap:.2e}, rho gap {rho_gap:.2e}, rho residual {residual:.2e}"),
    )
}

fn projection() -> Outcome {
    let mut r = rng(300);
    let (mut worst, mut feasible, mut n) = (0.0f64, true, 0);
    while n < 1000 {
        let k = r.random_range(1..=6);
        let d = [0.0, 1e-3, 0.1][r.random_range(0..3)];
        if d * k as f64 >= 1.0 {
            continue;
        }
        let z: Vec<f64> = (0..k).map(|_| r.random_range(-3.0..3.0)).collect();
        let x = project_shrunken_simplex(&z, d).unwrap();
        let o = active_set_oracle(&z, d);
        let dist = x.iter().zip(&o).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        worst = worst.max(dist);
        feasible &= x.iter().all(|&v| v >= d) && (x.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        n += 1;
    }
    outcome(worst < 1e-9 && feasible, format!("worst distance {worst:.2e} over {n} inputs"))
}

fn monotone_descent() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..20 {
        let b = generate(&SynthConfig {
            groups: 3,
            group_size: 20,
            planted: 5,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        let text = io::format_counts(&b.table, "synth");
        let fit = pipeline::fit_table(&b.table, &text, &RunConfig::default(), Variant::Full).unwrap();
        worst = worst.max(worst_ascent(&fit.fit.trace));
    }
    outcome(worst <= 1e-9, format!("largest relative step {worst:.2e} over 20 fits"))
}

fn rank_equivalence() -> Outcome {
    let mut bad = Vec::new();
    for seed in 0..50 {
        let (r, pc) = pathcount_reduction(seed);
        let neg: Vec<f64> = pc.iter().map(|x| -x).collect();
        if spearman(&r, &neg).unwrap() != -1.0 {
            bad.push(format!("pathcount {seed}"));
        }
        let (r, js) = joinsim_reduction(seed);
        let neg: Vec<f64> = js.iter().map(|x| -x).collect();
        if spearman(&r, &neg).unwrap() != -1.0 {
            bad.push(format!("joinsim {seed}"));
        }
    }
    outcome(bad.is_empty(), format!("50 + 50 instances, mismatches {bad:?}"))
}

fn round_trip_criterion() -> Outcome {
    let (mut worst, mut map_ok) = (0.0f64, true);
    for seed in 0..10 {
        let (err, fitted, truth) = round_trip(seed, 2000);
        worst = worst.max(err);
        map_ok &= fitted <= truth;
    }
    outcome(
        worst < 0.15 && map_ok,
        format!("worst eta error {:.1}%, fitted objective below truth: {map_ok}", 100.0 * worst),
    )
}

fn toy_table() -> Outcome {
    let start = Instant::now();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let g = io::load_graph(&dir.join("nodes.tsv"), &dir.join("edges.tsv")).unwrap();
    let mps = io::load_metapaths(&dir.join("metapaths.tsv")).unwrap();
    let pc = prep_core::count_paths(&g, &mps).unwrap();
    let tables: Vec<Vec<f64>> = (0..3).map(|t| base_scores(&pc, Measure::PathCount, t).unwrap()).collect();
    let w = vec![0.3, 1.7, 2.9];
    let c = composite(
        &tables,
        &BaselineWeights {
            w: w.clone(),
            heuristic: Heuristic::Mean,
        },
    )
    .unwrap();
    let ms = pc.find_by_id("mordo", "stephen").unwrap();
    let mw = pc.find_by_id("mordo", "wong").unwrap();
    let pathcount_ok = c[mw] == w[0] + w[1] && c[ms] == w[0] + w[2];
    let ps: Vec<Vec<f64>> = (0..3).map(|t| base_scores(&pc, Measure::PathSim, t).unwrap()).collect();
    let row = |s: usize| ps.iter().map(|x| format!("{:.2}", x[s])).collect::<Vec<_>>().join(" ");
    let (wong, stephen) = (row(mw), row(ms));
    let took = start.elapsed();
    outcome(
        pathcount_ok && wong == "0.67 1.00 0.00" && stephen == "0.67 0.00 1.00" && took < Duration::from_secs(1),
        format!(
            "pathcount composites {:?}, pathsim terms mordo-wong [{wong}] mordo-stephen [{stephen}], {took:.2?}",
            [c[mw], c[ms]]
        ),
    )
}

fn metric_oracles() -> Outcome {
    let mut r = rng(400);
    let mut auc_ok = true;
    for _ in 0..500 {
        let n = r.random_range(2..=200);
        let scores: Vec<f64> = (0..n)
            .map(|_| if r.random_bool(0.5) { f64::from(r.random_range(0..8)) } else { r.random_range(-5.0..5.0) })
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.3)).collect();
        labels[0] = true;
        labels[n - 1] = false;
        auc_ok &= roc_auc(&scores, &labels).unwrap() == brute_auc(&scores, &labels);
    }
    let rr = [
        reciprocal_rank(&[0.9, 0.5, 0.1], &[true, false, false]).unwrap(),
        reciprocal_rank(&[0.9, 0.5, 0.1], &[false, true, false]).unwrap(),
        reciprocal_rank(&[0.4, 0.3, 0.2, 0.1], &[false, false, false, true]).unwrap(),
    ];
    let mrr_ok = rr == [1.0, 0.5, 0.25] && mrr(&[1.0, 2.0, 4.0]).unwrap() == 1.75 / 3.0;
    let v = [0.75, 0.25];
    let agg_ok = aggregate(&v, &[1, 1], &[3, 1], Scheme::Uniform).unwrap() == 0.5
        && aggregate(&v, &[3, 1], &[3, 1], Scheme::Relevant).unwrap() == 0.625
        && aggregate(&v, &[1, 1], &[1, 3], Scheme::Total).unwrap() == 0.375;
    let mut identity_ok = true;
    for _ in 0..200 {
        let m = r.random_range(1..30);
        let vals: Vec<f64> = (0..m).map(|_| r.random_range(0.0..1.0)).collect();
        let tot: Vec<usize> = (0..m).map(|_| r.random_range(2..50)).collect();
        let one = vec![1; m];
        identity_ok &= aggregate(&vals, &one, &tot, Scheme::Uniform).unwrap()
            == aggregate(&vals, &one, &tot, Scheme::Relevant).unwrap();
    }
    outcome(
        auc_ok && mrr_ok && agg_ok && identity_ok,
        format!("auc {auc_ok}, mrr {mrr_ok}, aggregation {agg_ok}, uni = rel {identity_ok}"),
    )
}

fn synthetic_benchmark() -> Outcome {
    let start = Instant::now();
    let measures = [Measure::PathCount, Measure::PathSim, Measure::JoinSim, Measure::SimRank];
    let heuristics = [Heuristic::Mean, Heuristic::Sd];
    let mut prep_sum = 0.0;
    let mut base_sum = [0.0f64; 8];
    let seeds = 10;
    let mut nodes = 0;
    for seed in 0..seeds {
        let b = generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        nodes = b.nodes.len();
        let text = io::format_counts(&b.table, "synth");
        let cfg = RunConfig {
            k: Some(b.table.metapath_count()),
            beta: 0.01,
            ..RunConfig::default()
        };
        let fit = pipeline::fit_table(&b.table, &text, &cfg, Variant::Full).unwrap();
        let table = pipeline::score_checkpoint(&b.table, &fit.checkpoint, "checkpoint").unwrap();
        prep_sum += evaluate_table(&b.tasks, &table).unwrap().roc_auc.unwrap().uni;
        for (i, (m, h)) in measures.iter().flat_map(|m| heuristics.iter().map(move |h| (*m, *h))).enumerate() {
            let rep = pipeline::evaluate_baseline_tasks(&b.table, &b.tasks, m, h, &cfg).unwrap();
            base_sum[i] += rep.roc_auc.unwrap().uni;
        }
    }
    let n = seeds as f64;
    let prep = prep_sum / n;
    let best = base_sum.iter().map(|s| s / n).fold(f64::NEG_INFINITY, f64::max);
    let took = start.elapsed();
    outcome(
        prep - best >= 0.02 && took < Duration::from_secs(300),
        format!(
            "|V| = {nodes}, ROC-AUC {prep:.4} vs best baseline {best:.4} (margin {:+.4}), {took:.2?}",
            prep - best
        ),
    )
}

fn beta_sweep() -> Outcome {
    let b = generate(&SynthConfig {
        groups: 4,
        group_size: 20,
        planted: 5,
        seed: 1,
        ..SynthConfig::default()
    })
    .unwrap();
    let text = io::format_counts(&b.table, "synth");
    let points = pipeline::beta_sweep(&b.table, &text, &b.tasks, &RunConfig::default(), &pipeline::SWEEP_BETAS).unwrap();
    let finite = points.len() == pipeline::SWEEP_BETAS.len()
        && points.iter().all(|p| {
            let roc = p.report.roc_auc.as_ref().unwrap();
            let pr = p.report.auprc.as_ref().unwrap();
            p.objective.is_finite()
                && Scheme::ALL.iter().all(|&s| roc.get(s).is_finite() && pr.get(s).is_finite())
        });
    outcome(finite, format!("{} beta values, all metrics finite: {finite}", points.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradients),
        ("closed-form block optimality", block_optimality),
        ("projection oracle", projection),
        ("monotone descent", monotone_descent),
        ("special-case rank equivalence", rank_equivalence),
        ("generative round trip", round_trip_criterion),
        ("toy network table", toy_table),
        ("metric oracles", metric_oracles),
        ("synthetic benchmark", synthetic_benchmark),
        ("beta sensitivity sweep", beta_sweep),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
