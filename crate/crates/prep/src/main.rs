use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use prep::io;
use prep::pipeline::{self, SWEEP_BETAS};
use prep::RunConfig;
use prep_core::synth::SynthConfig;
use serde_json::json;

#[derive(Parser)]
#[command(name = "prep", version, about = "Meta-path relevance for heterogeneous networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Overrides {
    /// Number of patterns (default: the meta-path count).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Gamma shape, or `auto`.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count meta-path instances between node pairs.
    Count {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        metapaths: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Recount even when the output matches the inputs.
        #[arg(long)]
        force: bool,
    },
    /// Fit the model to a count table.
    Fit {
        #[arg(long)]
        counts: PathBuf,
        /// Checkpoint file to write.
        #[arg(long)]
        out: PathBuf,
        /// Objective trace file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// prep, prep-no-nv, prep-no-ps or prep-no-cs.
        #[arg(long, default_value = "prep")]
        variant: String,
        #[command(flatten)]
        over: Overrides,
    },
    /// Score every pair of a count table from a checkpoint.
    Score {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every pair with a weighted meta-path baseline.
    Baseline {
        #[arg(long)]
        counts: PathBuf,
        /// pathcount, pathsim, joinsim or simrank.
        #[arg(long)]
        measure: String,
        /// mean or sd.
        #[arg(long, default_value = "sd")]
        weighting: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a score file, or a baseline, against labelled pairs.
    Eval {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, conflicts_with_all = ["measure"], required_unless_present = "measure")]
        scores: Option<PathBuf>,
        /// Baseline to evaluate with per-sub-task weights (needs --counts).
        #[arg(long, requires = "counts")]
        measure: Option<String>,
        #[arg(long, default_value = "sd")]
        weighting: String,
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Report file (JSON); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build entity-resolution inputs from a mention graph.
    Resolve {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        mentions: PathBuf,
        /// Receives nodes.tsv, edges.tsv and labels.tsv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a synthetic count table and labels.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        groups: Option<usize>,
        #[arg(long)]
        group_size: Option<usize>,
        #[arg(long)]
        metapaths: Option<usize>,
        #[arg(long)]
        planted: Option<usize>,
    },
    /// Fit and evaluate over a range of Dirichlet concentrations.
    Sweep {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        over: Overrides,
    },
}

fn load_config(path: Option<&Path>, over: Option<&Overrides>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = over {
        if let Some(k) = o.k {
            cfg.k = Some(k);
        }
        if let Some(b) = o.beta {
            cfg.beta = b;
        }
        if let Some(a) = &o.alpha {
            cfg.set("alpha", a)?;
        }
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => io::write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start the thread pool")?;
    }
    let config = cli.config.as_deref();
    match cli.cmd {
        Cmd::Count {
            nodes,
            edges,
            metapaths,
            out,
            force,
        } => {
            if pipeline::count_files(&nodes, &edges, &metapaths, &out, force)? {
                log::info!("wrote {}", out.display());
            }
        }
        Cmd::Fit {
            counts,
            out,
            trace,
            variant,
            over,
        } => {
            let cfg = load_config(config, Some(&over))?;
            let variant = pipeline::parse_variant(&variant).with_context(|| format!("unknown variant `{variant}`"))?;
            let (pc, text) = io::load_counts(&counts)?;
            let fit = pipeline::fit_table(&pc, &text, &cfg, variant)?;
            io::write_text(&out, &fit.checkpoint)?;
            if let Some(t) = trace {
                io::write_text(&t, &fit.trace)?;
            }
            log::info!(
                "objective {:e} after {} iterations (converged: {})",
                fit.fit.objective(),
                fit.fit.iterations(),
                fit.fit.converged
            );
        }
        Cmd::Score { counts, checkpoint, out } => {
            let (pc, text) = io::load_counts(&counts)?;
            let ck = io::read_text(&checkpoint)?;
            let expected = io::header_value(&ck, "counts");
            if expected.as_deref() != Some(io::sha256_hex(text.as_bytes()).as_str()) {
                log::warn!("{} was fitted on a different count file", checkpoint.display());
            }
            let table = pipeline::score_checkpoint(&pc, &ck, &checkpoint.display().to_string())?;
            io::write_text(&out, &io::format_scores(&table, &io::sha256_hex(text.as_bytes())))?;
        }
        Cmd::Baseline {
            counts,
            measure,
            weighting,
            out,
        } => {
            let cfg = load_config(config, None)?;
            let (pc, text) = io::load_counts(&counts)?;
            let m = pipeline::parse_measure(&measure)?;
            let h = pipeline::parse_heuristic(&weighting)?;
            let table = pipeline::baseline_scores(&pc, m, h, &cfg)?;
            io::write_text(&out, &io::format_scores(&table, &io::sha256_hex(text.as_bytes())))?;
        }
        Cmd::Eval {
            labels,
            scores,
            measure,
            weighting,
            counts,
            out,
        } => {
            let cfg = load_config(config, None)?;
            let tasks = pipeline::load_tasks(&labels)?;
            let mut report = match (scores, measure, counts) {
                (Some(s), _, _) => {
                    let table = io::parse_scores(&io::read_text(&s)?, &s.display().to_string())?;
                    pipeline::evaluate_scores(&tasks, &table)?
                }
                (None, Some(m), Some(c)) => {
                    let (pc, _) = io::load_counts(&c)?;
                    let m = pipeline::parse_measure(&m)?;
                    let h = pipeline::parse_heuristic(&weighting)?;
                    pipeline::evaluate_baseline_tasks(&pc, &tasks, m, h, &cfg)?
                }
                _ => bail!("pass --scores, or --measure with --counts"),
            };
            report.metadata.push(("config".into(), cfg.fingerprint()));
            let text = serde_json::to_string_pretty(&pipeline::report_json(&report))? + "\n";
            emit(out.as_deref(), &text)?;
        }
        Cmd::Resolve {
            nodes,
            edges,
            mentions,
            out_dir,
        } => {
            let g = io::load_graph(&nodes, &edges)?;
            let ms = io::parse_mentions(&io::read_text(&mentions)?, &mentions.display().to_string())?;
            let (merged, rows) = pipeline::resolve_mentions(&g, &ms)?;
            let (n, e) = pipeline::format_graph(&merged);
            io::write_text(&out_dir.join("nodes.tsv"), &n)?;
            io::write_text(&out_dir.join("edges.tsv"), &e)?;
            io::write_text(&out_dir.join("labels.tsv"), &io::format_labels(&rows))?;
        }
        Cmd::Synth {
            out_dir,
            seed,
            groups,
            group_size,
            metapaths,
            planted,
        } => {
            let d = SynthConfig::default();
            let cfg = SynthConfig {
                seed,
                groups: groups.unwrap_or(d.groups),
                group_size: group_size.unwrap_or(d.group_size),
                metapaths: metapaths.unwrap_or(d.metapaths),
                planted: planted.unwrap_or(d.planted),
                ..d
            };
            let (counts, labels) = pipeline::synth_files(&cfg)?;
            io::write_text(&out_dir.join("counts.tsv"), &counts)?;
            io::write_text(&out_dir.join("labels.tsv"), &labels)?;
        }
        Cmd::Sweep {
            counts,
            labels,
            out,
            over,
        } => {
            let cfg = load_config(config, Some(&over))?;
            let (pc, text) = io::load_counts(&counts)?;
            let tasks = pipeline::load_tasks(&labels)?;
            let points = pipeline::beta_sweep(&pc, &text, &tasks, &cfg, &SWEEP_BETAS)?;
            let rows: Vec<_> = points
                .iter()
                .map(|p| {
                    json!({
                        "beta": p.beta,
                        "objective": p.objective,
                        "report": pipeline::report_json(&p.report),
                    })
                })
                .collect();
            let text = serde_json::to_string_pretty(&json!({ "config": cfg.fingerprint(), "points": rows }))? + "\n";
            emit(out.as_deref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(prep::exit_code(&e) as u8)
        }
    }
}
