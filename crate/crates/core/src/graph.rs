//! Typed directed graphs and meta-path templates.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub kind: usize,
}

/// A directed graph with a node-type mapping and an edge-type mapping.
///
/// Node ids are unique and every edge endpoint is a known node. Multi-edges
/// are kept: each one is a separate path step.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousGraph {
    node_ids: Vec<String>,
    node_kind: Vec<usize>,
    node_types: Vec<String>,
    edge_types: Vec<String>,
    edges: Vec<Edge>,
    lookup: BTreeMap<String, usize>,
}

impl HeterogeneousGraph {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.node_ids[idx]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn node_type(&self, idx: usize) -> &str {
        &self.node_types[self.node_kind[idx]]
    }

    pub fn node_types(&self) -> &[String] {
        &self.node_types
    }

    pub fn edge_types(&self) -> &[String] {
        &self.edge_types
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_type(&self, edge: &Edge) -> &str {
        &self.edge_types[edge.kind]
    }

    fn node_type_index(&self, label: &str) -> Option<usize> {
        self.node_types.iter().position(|t| t == label)
    }

    fn edge_type_index(&self, label: &str) -> Option<usize> {
        self.edge_types.iter().position(|t| t == label)
    }

    /// Distinct `(source type, edge type, target type)` triples present.
    pub fn schema(&self) -> BTreeSet<(usize, usize, usize)> {
        self.edges
            .iter()
            .map(|e| (self.node_kind[e.src], e.kind, self.node_kind[e.dst]))
            .collect()
    }

    pub(crate) fn kind_of(&self, idx: usize) -> usize {
        self.node_kind[idx]
    }
}

/// Incremental, validating graph construction.
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    node_ids: Vec<String>,
    node_kind: Vec<usize>,
    node_types: Vec<String>,
    edge_types: Vec<String>,
    lookup: BTreeMap<String, usize>,
    pending: Vec<(String, String, usize)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &str, node_type: &str) -> Result<usize> {
        if self.lookup.contains_key(id) {
            return Err(Error::DuplicateNode(id.to_owned()));
        }
        let kind = intern(&mut self.node_types, node_type);
        let idx = self.node_ids.len();
        self.node_ids.push(id.to_owned());
        self.node_kind.push(kind);
        self.lookup.insert(id.to_owned(), idx);
        Ok(idx)
    }

    /// Endpoints are resolved in [`GraphBuilder::build`], so edges may be
    /// added before their nodes.
    pub fn add_edge(&mut self, src: &str, dst: &str, edge_type: &str) {
        let kind = intern(&mut self.edge_types, edge_type);
        self.pending.push((src.to_owned(), dst.to_owned(), kind));
    }

    /// Adds `a -> b` and `b -> a`.
    pub fn add_undirected(&mut self, a: &str, b: &str, edge_type: &str) {
        self.add_edge(a, b, edge_type);
        self.add_edge(b, a, edge_type);
    }

    pub fn build(self) -> Result<HeterogeneousGraph> {
        let mut missing = BTreeSet::new();
        let mut edges = Vec::with_capacity(self.pending.len());
        for (src, dst, kind) in &self.pending {
            match (self.lookup.get(src), self.lookup.get(dst)) {
                (Some(&s), Some(&d)) => edges.push(Edge { src: s, dst: d, kind: *kind }),
                (s, d) => {
                    if s.is_none() {
                        missing.insert(src.clone());
                    }
                    if d.is_none() {
                        missing.insert(dst.clone());
                    }
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::DanglingEndpoints(missing.into_iter().collect()));
        }
        Ok(HeterogeneousGraph {
            node_ids: self.node_ids,
            node_kind: self.node_kind,
            node_types: self.node_types,
            edge_types: self.edge_types,
            edges,
            lookup: self.lookup,
        })
    }
}

fn intern(labels: &mut Vec<String>, label: &str) -> usize {
    match labels.iter().position(|l| l == label) {
        Some(i) => i,
        None => {
            labels.push(label.to_owned());
            labels.len() - 1
        }
    }
}

/// How a meta-path step walks its edge type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Follow edges forward when the schema allows it, otherwise backward.
    Auto,
    Forward,
    /// Written `edge^-1`.
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub edge_type: String,
    pub orientation: Orientation,
}

/// A typed path template, e.g. `author:writes:paper:writes^-1:author`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPath {
    pub name: String,
    pub node_types: Vec<String>,
    pub steps: Vec<Step>,
    pub symmetric: bool,
}

impl MetaPath {
    /// Parses the colon-separated form; the name defaults to the pattern.
    pub fn parse(pattern: &str, symmetric: bool) -> Result<Self> {
        let parts: Vec<&str> = pattern.split(':').map(str::trim).collect();
        let schema_err = |reason: &str| Error::Schema {
            path: pattern.to_owned(),
            reason: reason.to_owned(),
        };
        if parts.len() < 3 || parts.len().is_multiple_of(2) {
            return Err(schema_err(
                "expected node_type:edge_type:node_type[:edge_type:node_type...]",
            ));
        }
        if parts.iter().any(|p| p.is_empty()) {
            return Err(schema_err("empty type label"));
        }
        let node_types = parts.iter().step_by(2).map(|s| (*s).to_owned()).collect();
        let steps = parts
            .iter()
            .skip(1)
            .step_by(2)
            .map(|s| match s.strip_suffix("^-1") {
                Some(base) => Step {
                    edge_type: base.to_owned(),
                    orientation: Orientation::Inverse,
                },
                None => match s.strip_suffix("^+1") {
                    Some(base) => Step {
                        edge_type: base.to_owned(),
                        orientation: Orientation::Forward,
                    },
                    None => Step {
                        edge_type: (*s).to_owned(),
                        orientation: Orientation::Auto,
                    },
                },
            })
            .collect();
        let mp = MetaPath {
            name: pattern.to_owned(),
            node_types,
            steps,
            symmetric,
        };
        if symmetric && !mp.is_palindrome() {
            return Err(schema_err("declared symmetric but does not read the same reversed"));
        }
        Ok(mp)
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_owned();
        self
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn is_palindrome(&self) -> bool {
        let n = &self.node_types;
        let s = &self.steps;
        n.iter().eq(n.iter().rev()) && s.iter().map(|x| &x.edge_type).eq(s.iter().rev().map(|x| &x.edge_type))
    }

    /// Type-checks every step against the graph schema.
    pub fn resolve(&self, g: &HeterogeneousGraph) -> Result<ResolvedMetaPath> {
        let err = |reason: String| Error::Schema {
            path: self.name.clone(),
            reason,
        };
        let schema = g.schema();
        let mut kinds = Vec::with_capacity(self.node_types.len());
        for t in &self.node_types {
            kinds.push(g.node_type_index(t).ok_or_else(|| err(format!("unknown node type `{t}`")))?);
        }
        let mut steps = Vec::with_capacity(self.steps.len());
        for (i, step) in self.steps.iter().enumerate() {
            let e = g
                .edge_type_index(&step.edge_type)
                .ok_or_else(|| err(format!("unknown edge type `{}`", step.edge_type)))?;
            let (from, to) = (kinds[i], kinds[i + 1]);
            let forward = schema.contains(&(from, e, to));
            let backward = schema.contains(&(to, e, from));
            let inverse = match step.orientation {
                Orientation::Forward if forward => false,
                Orientation::Inverse if backward => true,
                Orientation::Auto if forward => false,
                Orientation::Auto if backward => true,
                _ => {
                    return Err(err(format!(
                        "no `{}` edges between `{}` and `{}` in the required direction",
                        step.edge_type, self.node_types[i], self.node_types[i + 1]
                    )))
                }
            };
            steps.push(ResolvedStep {
                from,
                edge_kind: e,
                to,
                inverse,
            });
        }
        Ok(ResolvedMetaPath {
            name: self.name.clone(),
            start: kinds[0],
            end: kinds[kinds.len() - 1],
            steps,
            symmetric: self.symmetric,
        })
    }
}

impl fmt::Display for MetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.node_types[0])?;
        for (step, to) in self.steps.iter().zip(&self.node_types[1..]) {
            let suffix = match step.orientation {
                Orientation::Auto => "",
                Orientation::Forward => "^+1",
                Orientation::Inverse => "^-1",
            };
            write!(f, ":{}{}:{}", step.edge_type, suffix, to)?;
        }
        Ok(())
    }
}

impl FromStr for MetaPath {
    type Err = Error;

    /// Accepts `pattern` or `pattern<TAB>symmetric|asymmetric`.
    fn from_str(s: &str) -> Result<Self> {
        let mut cols = s.split('\t');
        let pattern = cols.next().unwrap_or_default();
        let symmetric = match cols.next().map(str::trim) {
            None | Some("") | Some("symmetric") | Some("1") | Some("true") => true,
            Some("asymmetric") | Some("0") | Some("false") => false,
            Some(other) => {
                return Err(Error::Schema {
                    path: pattern.to_string(),
                    reason: format!("unrecognised symmetry flag `{other}`"),
                })
            }
        };
        MetaPath::parse(pattern, symmetric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedStep {
    pub from: usize,
    pub edge_kind: usize,
    pub to: usize,
    pub inverse: bool,
}

/// A meta-path bound to a particular graph's type indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedMetaPath {
    pub name: String,
    pub start: usize,
    pub end: usize,
    pub steps: Vec<ResolvedStep>,
    pub symmetric: bool,
}
