//! Run configuration: a `key = value` file, one setting per line.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use prep_core::baselines::SimRankConfig;
use prep_core::eval::WeightScope;
use prep_core::model::DEFAULT_DELTA;
use prep_core::{Convergence, PrepHyperparams, Stopping};

use crate::io::{read_text, sha256_hex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    /// Method of moments on per-node path totals.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of patterns; `None` uses the meta-path count.
    pub k: Option<usize>,
    pub alpha: Alpha,
    pub beta: f64,
    pub delta: f64,
    pub seed: u64,
    pub stopping: Stopping,
    pub simrank: SimRankConfig,
    pub weight_scope: WeightScope,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: None,
            alpha: Alpha::Auto,
            beta: 1e-2,
            delta: DEFAULT_DELTA,
            seed: 0,
            stopping: Stopping::default(),
            simrank: SimRankConfig::default(),
            weight_scope: WeightScope::default(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("`{key}` has bad value `{v}`"))
}

impl RunConfig {
    pub fn parse(text: &str, src: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            let (key, v) = l
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| anyhow!("{src}:{}: expected key = value", i + 1))?;
            c.set(key, v).with_context(|| format!("{src}:{}", i + 1))?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let s = &mut self.stopping;
        match key {
            "k" => self.k = Some(parse_value(key, v)?),
            "alpha" => {
                self.alpha = if v == "auto" {
                    Alpha::Auto
                } else {
                    Alpha::Fixed(parse_value(key, v)?)
                }
            }
            "beta" => self.beta = parse_value(key, v)?,
            "delta" => self.delta = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "outer_tol" => s.outer_tol = parse_value(key, v)?,
            "max_outer" => s.max_outer = parse_value(key, v)?,
            "rho_tol" => s.rho_tol = parse_value(key, v)?,
            "max_rho_sweeps" => s.max_rho_sweeps = parse_value(key, v)?,
            "pgd_steps" => s.pgd_steps = parse_value(key, v)?,
            "initial_step" => s.initial_step = parse_value(key, v)?,
            "armijo" => s.armijo = parse_value(key, v)?,
            "max_halvings" => s.max_halvings = parse_value(key, v)?,
            "convergence" => {
                s.criterion = match v {
                    "objective" => Convergence::Objective,
                    "parameters" => Convergence::Parameters,
                    _ => bail!("`convergence` must be objective or parameters"),
                }
            }
            "simrank_c" => self.simrank.c = parse_value(key, v)?,
            "simrank_tol" => self.simrank.tolerance = parse_value(key, v)?,
            "simrank_max_iter" => self.simrank.max_iterations = parse_value(key, v)?,
            "weight_scope" => {
                self.weight_scope =
                    WeightScope::parse(v).ok_or_else(|| anyhow!("`weight_scope` must be subtask or global"))?
            }
            _ => bail!("unknown setting `{key}`"),
        }
        Ok(())
    }

    /// Canonical text of every setting; the fingerprint hashes this.
    pub fn canonical(&self) -> String {
        let s = &self.stopping;
        let mut out = String::new();
        let k = self.k.map_or("auto".to_string(), |k| k.to_string());
        let alpha = match self.alpha {
            Alpha::Auto => "auto".to_string(),
            Alpha::Fixed(a) => format!("{a:e}"),
        };
        let conv = match s.criterion {
            Convergence::Objective => "objective",
            Convergence::Parameters => "parameters",
        };
        let _ = writeln!(out, "k = {k}");
        let _ = writeln!(out, "alpha = {alpha}");
        let _ = writeln!(out, "beta = {:e}", self.beta);
        let _ = writeln!(out, "delta = {:e}", self.delta);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "outer_tol = {:e}", s.outer_tol);
        let _ = writeln!(out, "max_outer = {}", s.max_outer);
        let _ = writeln!(out, "rho_tol = {:e}", s.rho_tol);
        let _ = writeln!(out, "max_rho_sweeps = {}", s.max_rho_sweeps);
        let _ = writeln!(out, "pgd_steps = {}", s.pgd_steps);
        let _ = writeln!(out, "initial_step = {:e}", s.initial_step);
        let _ = writeln!(out, "armijo = {:e}", s.armijo);
        let _ = writeln!(out, "max_halvings = {}", s.max_halvings);
        let _ = writeln!(out, "convergence = {conv}");
        let _ = writeln!(out, "simrank_c = {:e}", self.simrank.c);
        let _ = writeln!(out, "simrank_tol = {:e}", self.simrank.tolerance);
        let _ = writeln!(out, "simrank_max_iter = {}", self.simrank.max_iterations);
        let _ = writeln!(out, "weight_scope = {}", self.weight_scope.label());
        out
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }

    /// Hyperparameters for a table with `t` meta-paths; `totals` feeds the
    /// alpha estimate when it is automatic.
    pub fn hyperparams(&self, t: usize, totals: &[f64]) -> Result<PrepHyperparams> {
        let alpha = match self.alpha {
            Alpha::Fixed(a) => a,
            Alpha::Auto => {
                let a = prep_core::estimate_alpha(totals)?;
                log::info!("alpha estimated from node totals: {a}");
                a
            }
        };
        let h = PrepHyperparams {
            k: self.k.unwrap_or(t),
            alpha,
            beta: self.beta,
            delta: self.delta,
            seed: self.seed,
            stopping: self.stopping,
        };
        h.validate(t)?;
        Ok(h)
    }
}
