//! Tab-separated file formats.
//!
//! Every writer emits `#` header lines first (tool version, input hashes,
//! run settings); readers skip `#` lines except where a header value is
//! needed. Floats are printed in Rust's shortest round-trip form, so files
//! reload bit-exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use prep_core::count::TableBuilder;
use prep_core::eval::Mention;
use prep_core::{Direction, GraphBuilder, HeterogeneousGraph, Matrix, MetaPath, PathCountTable, PrepParameters};
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("prep ", env!("CARGO_PKG_VERSION"));

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Hash of several inputs, each contributing its own digest.
pub fn combined_hash(texts: &[&str]) -> String {
    let joined: Vec<String> = texts.iter().map(|t| sha256_hex(t.as_bytes())).collect();
    sha256_hex(joined.join("\n").as_bytes())
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn fields<'a>(src: &str, line: usize, l: &'a str, min: usize, max: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = l.split('\t').collect();
    if f.len() < min || f.len() > max {
        let want = if min == max { format!("{min}") } else { format!("{min} to {max}") };
        bail!("{src}:{line}: expected {want} tab-separated fields, found {}", f.len());
    }
    if f.iter().take(min).any(|x| x.is_empty()) {
        bail!("{src}:{line}: empty field");
    }
    Ok(f)
}

fn number(src: &str, line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| anyhow!("{src}:{line}: `{s}` is not a number"))
}

/// Node lines `id<TAB>type`; edge lines `src<TAB>dst<TAB>type`, with an
/// optional fourth field `undirected` to add both directions.
pub fn parse_graph(nodes: &str, edges: &str, node_src: &str, edge_src: &str) -> Result<HeterogeneousGraph> {
    let mut b = GraphBuilder::new();
    for (line, l) in data_lines(nodes) {
        let f = fields(node_src, line, l, 2, 2)?;
        b.add_node(f[0], f[1]).with_context(|| format!("{node_src}:{line}"))?;
    }
    for (line, l) in data_lines(edges) {
        let f = fields(edge_src, line, l, 3, 4)?;
        match f.get(3).copied() {
            None | Some("directed") => b.add_edge(f[0], f[1], f[2]),
            Some("undirected") => b.add_undirected(f[0], f[1], f[2]),
            Some(other) => bail!("{edge_src}:{line}: unknown edge flag `{other}`"),
        }
    }
    Ok(b.build()?)
}

pub fn load_graph(node_file: &Path, edge_file: &Path) -> Result<HeterogeneousGraph> {
    parse_graph(
        &read_text(node_file)?,
        &read_text(edge_file)?,
        &node_file.display().to_string(),
        &edge_file.display().to_string(),
    )
}

/// One meta-path per line: `pattern[<TAB>symmetric|asymmetric]`.
pub fn parse_metapaths(text: &str, src: &str) -> Result<Vec<MetaPath>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        let mp: MetaPath = l.parse().with_context(|| format!("{src}:{line}"))?;
        out.push(mp);
    }
    if out.is_empty() {
        bail!("{src}: no meta-paths declared");
    }
    Ok(out)
}

pub fn load_metapaths(path: &Path) -> Result<Vec<MetaPath>> {
    parse_metapaths(&read_text(path)?, &path.display().to_string())
}

/// Header values of a file: `# key value` lines.
pub fn header(text: &str) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for l in text.lines().take_while(|l| l.starts_with('#')) {
        let body = l.trim_start_matches('#').trim();
        let (k, v) = body.split_once(' ').unwrap_or((body, ""));
        out.entry(k.to_string()).or_default().push(v.to_string());
    }
    out
}

pub fn header_value(text: &str, key: &str) -> Option<String> {
    header(text).remove(key).and_then(|v| v.into_iter().next())
}

/// Count export: rows `u<TAB>v<TAB>t<TAB>count` sorted by `(u, v, t)`,
/// positive counts only, cycle counts as `z<TAB>z` rows.
pub fn format_counts(pc: &PathCountTable, input_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool {TOOL}");
    let _ = writeln!(out, "# input {input_hash}");
    for (t, name) in pc.metapaths().iter().enumerate() {
        let cycles = if pc.has_cycles(t) { "cycles" } else { "nocycles" };
        let _ = writeln!(out, "# metapath {t} {cycles} {name}");
    }
    let mut rows: Vec<(&str, &str, usize, f64)> = Vec::new();
    for s in 0..pc.pair_count() {
        let (u, v) = pc.pair_names(s);
        for t in 0..pc.metapath_count() {
            let c = pc.count(s, t);
            if c > 0.0 {
                rows.push((u, v, t, c));
            }
        }
    }
    for z in 0..pc.node_count() {
        for t in 0..pc.metapath_count() {
            if let Some(c) = pc.cycle(z, t).filter(|&c| c > 0.0) {
                rows.push((pc.node(z), pc.node(z), t, c));
            }
        }
    }
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    for (u, v, t, c) in rows {
        let _ = writeln!(out, "{u}\t{v}\t{t}\t{c}");
    }
    out
}

pub fn parse_counts(text: &str, src: &str) -> Result<PathCountTable> {
    let mut names: BTreeMap<usize, (String, bool)> = BTreeMap::new();
    for v in header(text).remove("metapath").unwrap_or_default() {
        let mut it = v.splitn(3, ' ');
        let (Some(t), Some(flag), Some(name)) = (it.next(), it.next(), it.next()) else {
            bail!("{src}: malformed meta-path header `{v}`");
        };
        let t: usize = t.parse().with_context(|| format!("{src}: meta-path index `{t}`"))?;
        names.insert(t, (name.to_string(), flag == "cycles"));
    }
    if names.is_empty() || names.keys().copied().ne(0..names.len()) {
        bail!("{src}: meta-path header lines missing or not numbered 0..T");
    }
    let mut b = TableBuilder::new(names.values().map(|(n, _)| n.clone()).collect());
    for (&t, &(_, cycles)) in &names {
        b.set_cycle_available(t, cycles);
    }
    for (line, l) in data_lines(text) {
        let f = fields(src, line, l, 4, 4)?;
        let t: usize = f[2].parse().map_err(|_| anyhow!("{src}:{line}: bad meta-path index `{}`", f[2]))?;
        if t >= names.len() {
            bail!("{src}:{line}: meta-path index {t} out of range");
        }
        let c = number(src, line, f[3])?;
        if f[0] == f[1] {
            b.set_cycle(f[0], t, c).with_context(|| format!("{src}:{line}"))?;
        } else {
            b.set(f[0], f[1], t, c).with_context(|| format!("{src}:{line}"))?;
        }
    }
    let pc = b.build()?;
    if pc.is_empty() {
        bail!("{src}: count table has no nontrivial pairs");
    }
    Ok(pc)
}

pub fn load_counts(path: &Path) -> Result<(PathCountTable, String)> {
    let text = read_text(path)?;
    Ok((parse_counts(&text, &path.display().to_string())?, text))
}

/// Settings recorded alongside fitted parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointHeader {
    pub counts_hash: String,
    pub variant: String,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
}

/// Sections `[eta]` (meta-path keyed), `[rho]` (node keyed), `[phi]` (pair
/// keyed) and `[theta]` (one row per pattern).
pub fn format_checkpoint(pc: &PathCountTable, p: &PrepParameters, h: &CheckpointHeader) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool {TOOL}");
    let _ = writeln!(out, "# counts {}", h.counts_hash);
    let _ = writeln!(out, "# variant {}", h.variant);
    let _ = writeln!(out, "# k {}", h.k);
    let _ = writeln!(out, "# alpha {:e}", h.alpha);
    let _ = writeln!(out, "# beta {:e}", h.beta);
    let _ = writeln!(out, "# delta {:e}", h.delta);
    let _ = writeln!(out, "# seed {}", h.seed);
    let _ = writeln!(out, "# iterations {}", h.iterations);
    let _ = writeln!(out, "# converged {}", h.converged);
    let _ = writeln!(out, "# objective {:e}", h.objective);
    out.push_str("[eta]\n");
    for (name, e) in pc.metapaths().iter().zip(&p.eta) {
        let _ = writeln!(out, "{name}\t{e:e}");
    }
    out.push_str("[rho]\n");
    for (z, r) in p.rho.iter().enumerate() {
        let _ = writeln!(out, "{}\t{r:e}", pc.node(z));
    }
    out.push_str("[phi]\n");
    for s in 0..pc.pair_count() {
        let (u, v) = pc.pair_names(s);
        let _ = write!(out, "{u}\t{v}");
        for x in p.phi.row(s) {
            let _ = write!(out, "\t{x:e}");
        }
        out.push('\n');
    }
    out.push_str("[theta]\n");
    for row in p.theta.iter_rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(out, "{}", line.join("\t"));
    }
    out
}

fn header_field<T: std::str::FromStr>(h: &BTreeMap<String, Vec<String>>, key: &str, src: &str) -> Result<T> {
    let v = h
        .get(key)
        .and_then(|v| v.first())
        .ok_or_else(|| anyhow!("{src}: header `{key}` missing"))?;
    v.parse()
        .map_err(|_| anyhow!("{src}: header `{key}` has bad value `{v}`"))
}

/// Reads a checkpoint against the count table it was fitted on.
pub fn parse_checkpoint(text: &str, src: &str, pc: &PathCountTable) -> Result<(PrepParameters, CheckpointHeader)> {
    let h = header(text);
    let head = CheckpointHeader {
        counts_hash: header_field(&h, "counts", src)?,
        variant: header_field(&h, "variant", src)?,
        k: header_field(&h, "k", src)?,
        alpha: header_field(&h, "alpha", src)?,
        beta: header_field(&h, "beta", src)?,
        delta: header_field(&h, "delta", src)?,
        seed: header_field(&h, "seed", src)?,
        iterations: header_field(&h, "iterations", src)?,
        converged: header_field(&h, "converged", src)?,
        objective: header_field(&h, "objective", src)?,
    };
    let (t_n, k) = (pc.metapath_count(), head.k);
    let mut eta = vec![f64::NAN; t_n];
    let mut rho = vec![f64::NAN; pc.node_count()];
    let mut phi = Matrix::filled(pc.pair_count(), k, f64::NAN);
    let mut theta = Vec::new();
    let mut section = "";
    for (line, l) in data_lines(text) {
        if l.starts_with('[') {
            section = match l {
                "[eta]" | "[rho]" | "[phi]" | "[theta]" => l,
                _ => bail!("{src}:{line}: unknown section `{l}`"),
            };
            continue;
        }
        match section {
            "[eta]" => {
                let (name, v) = l
                    .rsplit_once('\t')
                    .ok_or_else(|| anyhow!("{src}:{line}: expected name and value"))?;
                let t = pc
                    .metapaths()
                    .iter()
                    .position(|m| m == name)
                    .ok_or_else(|| anyhow!("{src}:{line}: meta-path `{name}` not in the count table"))?;
                eta[t] = number(src, line, v)?;
            }
            "[rho]" => {
                let f = fields(src, line, l, 2, 2)?;
                let z = pc
                    .node_index(f[0])
                    .ok_or_else(|| anyhow!("{src}:{line}: node `{}` not in the count table", f[0]))?;
                rho[z] = number(src, line, f[1])?;
            }
            "[phi]" => {
                let f = fields(src, line, l, 2 + k, 2 + k)?;
                let s = pc
                    .find_by_id(f[0], f[1])
                    .ok_or_else(|| anyhow!("{src}:{line}: pair ({}, {}) not in the count table", f[0], f[1]))?;
                for (j, x) in f[2..].iter().enumerate() {
                    phi.set(s, j, number(src, line, x)?);
                }
            }
            "[theta]" => {
                let f = fields(src, line, l, t_n, t_n)?;
                for x in f {
                    theta.push(number(src, line, x)?);
                }
            }
            _ => bail!("{src}:{line}: data before the first section"),
        }
    }
    if theta.len() != k * t_n {
        bail!("{src}: [theta] has {} values, expected {k} x {t_n}", theta.len());
    }
    if eta.iter().chain(&rho).chain(phi.as_slice()).any(|x| x.is_nan()) {
        bail!("{src}: checkpoint does not cover every meta-path, node and pair of the count table");
    }
    let p = PrepParameters {
        eta,
        rho,
        phi,
        theta: Matrix::from_vec(k, t_n, theta),
    };
    p.check_shape(pc)?;
    Ok((p, head))
}

/// Score export: `u<TAB>v<TAB>score<TAB>direction`, most relevant first.
pub fn format_scores(table: &prep_core::CompositeScoreTable, input_hash: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# tool {TOOL}");
    let _ = writeln!(out, "# input {input_hash}");
    let _ = writeln!(out, "# measure {}", table.measure);
    let _ = writeln!(out, "# fingerprint {:016x}", table.fingerprint);
    for e in table.ranked() {
        let _ = writeln!(out, "{}\t{}\t{:e}\t{}", e.u, e.v, e.score, table.direction.as_str());
    }
    out
}

pub fn parse_scores(text: &str, src: &str) -> Result<prep_core::CompositeScoreTable> {
    let measure = header_value(text, "measure").ok_or_else(|| anyhow!("{src}: header `measure` missing"))?;
    let fingerprint = header_value(text, "fingerprint")
        .and_then(|f| u64::from_str_radix(&f, 16).ok())
        .ok_or_else(|| anyhow!("{src}: header `fingerprint` missing or malformed"))?;
    let mut direction = None;
    let mut entries = Vec::new();
    for (line, l) in data_lines(text) {
        let f = fields(src, line, l, 4, 4)?;
        let d = Direction::parse(f[3]).ok_or_else(|| anyhow!("{src}:{line}: unknown direction `{}`", f[3]))?;
        match direction {
            None => direction = Some(d),
            Some(prev) if prev != d => bail!("{src}:{line}: direction `{}` differs from earlier rows", f[3]),
            _ => {}
        }
        let score = number(src, line, f[2])?;
        if !score.is_finite() {
            bail!("{src}:{line}: score must be finite");
        }
        entries.push(prep_core::ScoreEntry {
            u: f[0].to_string(),
            v: f[1].to_string(),
            score,
        });
    }
    Ok(prep_core::CompositeScoreTable {
        measure,
        fingerprint,
        direction: direction.unwrap_or(Direction::HigherIsMoreRelevant),
        entries,
    })
}

/// Label rows `u<TAB>v<TAB>{0|1}[<TAB>subtask]`.
pub type LabelRow = (String, String, bool, Option<String>);

pub fn parse_labels(text: &str, src: &str) -> Result<Vec<LabelRow>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        let f = fields(src, line, l, 3, 4)?;
        let rel = match f[2] {
            "1" => true,
            "0" => false,
            other => bail!("{src}:{line}: label must be 0 or 1, found `{other}`"),
        };
        out.push((f[0].to_string(), f[1].to_string(), rel, f.get(3).map(|s| s.to_string())));
    }
    if out.is_empty() {
        bail!("{src}: no labelled pairs");
    }
    Ok(out)
}

pub fn format_labels(rows: &[LabelRow]) -> String {
    let mut out = String::new();
    for (u, v, l, task) in rows {
        let _ = write!(out, "{u}\t{v}\t{}", u8::from(*l));
        if let Some(t) = task {
            let _ = write!(out, "\t{t}");
        }
        out.push('\n');
    }
    out
}

/// Mention rows `mention<TAB>entity[<TAB>name]`. Without a name column all
/// mentions form one group.
pub fn parse_mentions(text: &str, src: &str) -> Result<Vec<Mention>> {
    let mut out = Vec::new();
    for (line, l) in data_lines(text) {
        let f = fields(src, line, l, 2, 3)?;
        out.push(Mention {
            id: f[0].to_string(),
            entity: f[1].to_string(),
            name: f.get(2).map_or(String::new(), |s| s.to_string()),
        });
    }
    if out.is_empty() {
        bail!("{src}: no mentions");
    }
    Ok(out)
}
