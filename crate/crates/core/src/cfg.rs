//! Control-flow multigraphs decorated with memory accesses.
//!
//! A graph has program locations as vertices and one labelled edge per
//! possible step. A label is either an access to a memory block or `ε`
//! (no access). Start vertices carry the assumed initial cache contents.
//!
//! The module also contains the line-oriented text format used by the CLI:
//!
//! ```text
//! cache assoc=4 sets=1 linesize=1
//! start s0 empty
//! edge s0 s1 a
//! edge s1 s2 @0x40 id=7
//! edge s2 s3 -
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A memory block (cache line) identifier.
///
/// Numeric addresses are reduced to their line number, so two addresses in
/// the same line denote the same block. Symbolic names denote distinct
/// blocks of the single cache set of a one-set configuration.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockId {
    Line(u64),
    Named(Arc<str>),
}

impl BlockId {
    pub fn named(name: &str) -> Self {
        BlockId::Named(Arc::from(name))
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockId::Line(n) => write!(f, "line{n}"),
            BlockId::Named(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Access(BlockId),
    Epsilon,
}

impl Label {
    pub fn block(&self) -> Option<&BlockId> {
        match self {
            Label::Access(b) => Some(b),
            Label::Epsilon => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StartKind {
    /// Execution starts with an empty cache (`∅`).
    EmptyCache,
    /// Execution may start with any cache content (`⊤`).
    TopCache,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: VertexId,
    pub dst: VertexId,
    pub label: Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CacheConfig {
    /// Number of ways `N`.
    pub associativity: usize,
    pub num_sets: usize,
    /// Line size in bytes; a power of two.
    pub line_size: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("associativity must be at least 1")]
    ZeroAssociativity,
    #[error("number of sets must be at least 1")]
    ZeroSets,
    #[error("line size {0} is not a positive power of two")]
    BadLineSize(u64),
}

impl CacheConfig {
    pub fn new(associativity: usize, num_sets: usize, line_size: u64) -> Result<Self, ConfigError> {
        if associativity == 0 {
            return Err(ConfigError::ZeroAssociativity);
        }
        if num_sets == 0 {
            return Err(ConfigError::ZeroSets);
        }
        if !line_size.is_power_of_two() {
            return Err(ConfigError::BadLineSize(line_size));
        }
        Ok(CacheConfig { associativity, num_sets, line_size })
    }

    /// Fully associative single-set configuration, as used with symbolic labels.
    pub fn single_set(associativity: usize) -> Self {
        CacheConfig { associativity, num_sets: 1, line_size: 1 }
    }

    /// Maps a byte address to its block and cache set (modulo placement).
    pub fn map_address(&self, addr: u64) -> (BlockId, usize) {
        let line = addr / self.line_size;
        (BlockId::Line(line), (line % self.num_sets as u64) as usize)
    }

    pub fn set_of(&self, block: &BlockId) -> usize {
        match block {
            BlockId::Line(n) => (n % self.num_sets as u64) as usize,
            BlockId::Named(_) => 0,
        }
    }

    /// Human-readable rendering of a block: the base address of a line, or the symbol.
    pub fn block_name(&self, block: &BlockId) -> String {
        match block {
            BlockId::Line(n) => format!("@{:#x}", n * self.line_size),
            BlockId::Named(s) => s.to_string(),
        }
    }
}

/// Structural problems detected while assembling a graph.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex `{0}` is declared as a start vertex twice")]
    DuplicateStart(String),
    #[error("edge {edge} enters start vertex `{vertex}`")]
    EdgeIntoStart { edge: EdgeId, vertex: String },
    #[error("edge id {0} is used twice")]
    DuplicateEdgeId(EdgeId),
}

/// An immutable control-flow multigraph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlFlowGraph {
    names: Vec<String>,
    starts: BTreeMap<VertexId, StartKind>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl ControlFlowGraph {
    fn from_parts(names: Vec<String>, starts: BTreeMap<VertexId, StartKind>, edges: Vec<Edge>) -> Self {
        let mut out = vec![Vec::new(); names.len()];
        for (i, e) in edges.iter().enumerate() {
            out[e.src.index()].push(i);
        }
        ControlFlowGraph { names, starts, edges, out }
    }

    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.names.len() as u32).map(VertexId)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.names[v.index()]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name).map(|i| VertexId(i as u32))
    }

    pub fn starts(&self) -> &BTreeMap<VertexId, StartKind> {
        &self.starts
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> {
        self.out[v.index()].iter().map(move |&i| &self.edges[i])
    }

    /// Accessed blocks, ordered by first occurrence along the edge list.
    pub fn blocks(&self) -> Vec<BlockId> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        for e in &self.edges {
            if let Label::Access(b) = &e.label {
                if seen.insert(b.clone()) {
                    order.push(b.clone());
                }
            }
        }
        order
    }

    /// Replaces every access to a block outside `set` by `ε`.
    pub fn slice_for_set(&self, set: usize, config: &CacheConfig) -> ControlFlowGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let label = match &e.label {
                    Label::Access(b) if config.set_of(b) == set => e.label.clone(),
                    _ => Label::Epsilon,
                };
                Edge { label, ..e.clone() }
            })
            .collect();
        ControlFlowGraph::from_parts(self.names.clone(), self.starts.clone(), edges)
    }

    /// Forward-reachable part of the graph from its start vertices.
    ///
    /// Vertex ids are renumbered; edge ids and vertex names are kept.
    pub fn prune_unreachable(&self) -> ControlFlowGraph {
        let reached = self.reachable();
        if reached.iter().all(|&r| r) {
            return self.clone();
        }
        let mut remap = vec![None; self.names.len()];
        let mut names = Vec::new();
        for (i, name) in self.names.iter().enumerate() {
            if reached[i] {
                remap[i] = Some(VertexId(names.len() as u32));
                names.push(name.clone());
            }
        }
        let starts = self.starts.iter().map(|(v, k)| (remap[v.index()].expect("starts are reachable"), *k)).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| reached[e.src.index()])
            .map(|e| Edge {
                id: e.id,
                src: remap[e.src.index()].unwrap(),
                dst: remap[e.dst.index()].unwrap(),
                label: e.label.clone(),
            })
            .collect();
        ControlFlowGraph::from_parts(names, starts, edges)
    }

    /// Per-vertex reachability from the start vertices.
    pub fn reachable(&self) -> Vec<bool> {
        let mut reached = vec![false; self.names.len()];
        let mut queue: VecDeque<VertexId> = self.starts.keys().copied().collect();
        for v in &queue {
            reached[v.index()] = true;
        }
        while let Some(v) = queue.pop_front() {
            for e in self.out_edges(v) {
                if !reached[e.dst.index()] {
                    reached[e.dst.index()] = true;
                    queue.push_back(e.dst);
                }
            }
        }
        reached
    }

    /// Removes vertices and edges that only make `ε` transitions.
    ///
    /// Strongly connected `ε`-components are merged into one vertex, then
    /// `ε` edges are contracted whenever the target has no other incoming
    /// edge or the source has no other outgoing edge. Every access edge
    /// keeps its id and label; `ε` edges may disappear.
    pub fn collapse_epsilon(&self) -> ControlFlowGraph {
        let n = self.names.len();
        let mut rep = UnionFind::new(n);

        // ε-SCCs: u and v are merged when each reaches the other through ε edges.
        let eps_succ: Vec<Vec<usize>> = {
            let mut succ = vec![Vec::new(); n];
            for e in &self.edges {
                if e.label == Label::Epsilon {
                    succ[e.src.index()].push(e.dst.index());
                }
            }
            succ
        };
        for comp in tarjan_scc(&eps_succ) {
            for w in &comp[1..] {
                rep.union_into(comp[0], *w);
            }
        }

        let is_start = |v: usize| self.starts.contains_key(&VertexId(v as u32));
        let mut edges: Vec<Option<(usize, usize, &Edge)>> =
            self.edges.iter().map(|e| Some((rep.find(e.src.index()), rep.find(e.dst.index()), e))).collect();
        drop_epsilon_loops(&mut edges);

        loop {
            let mut in_deg = vec![0usize; n];
            let mut out_deg = vec![0usize; n];
            for (s, d, _) in edges.iter().flatten() {
                out_deg[*s] += 1;
                in_deg[*d] += 1;
            }
            let mut merged = false;
            for slot in edges.iter_mut() {
                let Some((s, d, e)) = *slot else { continue };
                if e.label != Label::Epsilon {
                    continue;
                }
                if !is_start(d) && in_deg[d] == 1 {
                    rep.union_into(s, d);
                } else if !is_start(s) && out_deg[s] == 1 {
                    rep.union_into(d, s);
                } else {
                    continue;
                }
                *slot = None;
                merged = true;
                break;
            }
            if !merged {
                break;
            }
            for (s, d, _) in edges.iter_mut().flatten() {
                *s = rep.find(*s);
                *d = rep.find(*d);
            }
            drop_epsilon_loops(&mut edges);
        }

        // Parallel ε edges between the same pair carry no information.
        let mut seen_eps = BTreeSet::new();
        let kept: Vec<(usize, usize, &Edge)> = edges
            .into_iter()
            .flatten()
            .filter(|(s, d, e)| e.label != Label::Epsilon || seen_eps.insert((*s, *d)))
            .collect();

        let mut remap: HashMap<usize, VertexId> = HashMap::new();
        let mut names = Vec::new();
        let mut id_of = |v: usize, names: &mut Vec<String>| {
            *remap.entry(v).or_insert_with(|| {
                names.push(self.names[v].clone());
                VertexId(names.len() as u32 - 1)
            })
        };
        let mut starts = BTreeMap::new();
        for (v, k) in &self.starts {
            starts.insert(id_of(rep.find(v.index()), &mut names), *k);
        }
        let mut new_edges = Vec::with_capacity(kept.len());
        for (s, d, e) in kept {
            let src = id_of(s, &mut names);
            let dst = id_of(d, &mut names);
            new_edges.push(Edge { id: e.id, src, dst, label: e.label.clone() });
        }
        ControlFlowGraph::from_parts(names, starts, new_edges)
    }
}

fn drop_epsilon_loops(edges: &mut [Option<(usize, usize, &Edge)>]) {
    for slot in edges.iter_mut() {
        if let Some((s, d, e)) = slot {
            if s == d && e.label == Label::Epsilon {
                *slot = None;
            }
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the class of `other` into the class of `keep`, keeping `keep`'s representative.
    fn union_into(&mut self, keep: usize, other: usize) {
        let k = self.find(keep);
        let o = self.find(other);
        if k != o {
            self.parent[o] = k;
        }
    }
}

/// Iterative Tarjan SCC; returns only components with more than one vertex.
fn tarjan_scc(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut comps = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 {
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                }
            }
        }
    }
    comps
}

/// Incremental construction of a [`ControlFlowGraph`].
#[derive(Default)]
pub struct GraphBuilder {
    names: Vec<String>,
    by_name: HashMap<String, VertexId>,
    starts: BTreeMap<VertexId, StartKind>,
    edges: Vec<Edge>,
    duplicate_start: Option<String>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the vertex with this name, creating it on first mention.
    pub fn vertex(&mut self, name: &str) -> VertexId {
        if let Some(&v) = self.by_name.get(name) {
            return v;
        }
        let v = VertexId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.by_name.insert(name.to_string(), v);
        v
    }

    pub fn start(&mut self, name: &str, kind: StartKind) -> VertexId {
        let v = self.vertex(name);
        if self.starts.insert(v, kind).is_some() && self.duplicate_start.is_none() {
            self.duplicate_start = Some(name.to_string());
        }
        v
    }

    /// Adds an edge whose id is its declaration index.
    pub fn edge(&mut self, src: &str, dst: &str, label: Label) -> EdgeId {
        let id = EdgeId(self.edges.len() as u32);
        self.edge_with_id(src, dst, label, id);
        id
    }

    pub fn edge_with_id(&mut self, src: &str, dst: &str, label: Label, id: EdgeId) {
        let src = self.vertex(src);
        let dst = self.vertex(dst);
        self.edges.push(Edge { id, src, dst, label });
    }

    pub fn build(self) -> Result<ControlFlowGraph, GraphError> {
        if let Some(name) = self.duplicate_start {
            return Err(GraphError::DuplicateStart(name));
        }
        let mut ids = BTreeSet::new();
        for e in &self.edges {
            if !ids.insert(e.id) {
                return Err(GraphError::DuplicateEdgeId(e.id));
            }
            if self.starts.contains_key(&e.dst) {
                return Err(GraphError::EdgeIntoStart { edge: e.id, vertex: self.names[e.dst.index()].clone() });
            }
        }
        Ok(ControlFlowGraph::from_parts(self.names, self.starts, self.edges))
    }
}

/// A graph together with the cache geometry it is analysed for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub config: CacheConfig,
    pub graph: ControlFlowGraph,
}

impl Program {
    /// Cache sets that receive at least one access, in increasing order.
    pub fn used_sets(&self) -> Vec<usize> {
        let sets: BTreeSet<usize> =
            self.graph.edges().iter().filter_map(|e| e.label.block()).map(|b| self.config.set_of(b)).collect();
        sets.into_iter().collect()
    }
}

/// Values from the command line that take precedence over the `cache` header.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConfigOverride {
    pub associativity: Option<usize>,
    pub num_sets: Option<usize>,
    pub line_size: Option<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: vertex `{vertex}` is declared as a start vertex twice")]
    DuplicateStart { line: usize, vertex: String },
    #[error("line {line}: edge enters start vertex `{vertex}`")]
    EdgeIntoStart { line: usize, vertex: String },
    #[error("line {line}: edge id {id} is used twice")]
    DuplicateEdgeId { line: usize, id: u32 },
    #[error("line {line}, column {column}: symbolic label `{label}` requires sets=1")]
    SymbolicLabelWithSets { line: usize, column: usize, label: String },
    #[error("missing `cache assoc=<N> sets=<S> linesize=<L>` header")]
    MissingCacheHeader,
    #[error("invalid cache configuration: {0}")]
    Config(#[from] ConfigError),
}

enum RawLabel {
    Epsilon,
    Address(u64),
    Symbol(String),
}

struct RawEdge {
    line: usize,
    label_column: usize,
    src: String,
    dst: String,
    label: RawLabel,
    id: Option<u32>,
}

fn is_identifier(tok: &str) -> bool {
    tok != "-"
        && !tok.starts_with('@')
        && tok.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '.' | '$' | '~' | '\'' | '-' | ':'))
}

fn parse_number(tok: &str) -> Option<u64> {
    if let Some(hex) = tok.strip_prefix("0x").or_else(|| tok.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else {
        tok.parse().ok()
    }
}

/// Splits a line into tokens with their 1-based starting columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

pub fn parse_cfg(text: &str) -> Result<Program, ParseError> {
    parse_cfg_with(text, &ConfigOverride::default())
}

/// Parses the text format, letting `overrides` replace header fields.
pub fn parse_cfg_with(text: &str, overrides: &ConfigOverride) -> Result<Program, ParseError> {
    let syntax = |line: usize, column: usize, message: String| ParseError::Syntax { line, column, message };

    let mut header: Option<(usize, u64, usize)> = None;
    let mut starts: Vec<(usize, String, StartKind)> = Vec::new();
    let mut raw_edges: Vec<RawEdge> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("");
        let toks = tokens(line);
        let Some(&(kw_col, kw)) = toks.first() else { continue };
        match kw {
            "cache" => {
                if header.is_some() {
                    return Err(syntax(lineno, kw_col, "duplicate `cache` header".into()));
                }
                let (mut assoc, mut sets, mut linesize) = (None, None, None);
                for &(col, tok) in &toks[1..] {
                    let Some((key, value)) = tok.split_once('=') else {
                        return Err(syntax(lineno, col, format!("expected key=value, found `{tok}`")));
                    };
                    let value =
                        parse_number(value).ok_or_else(|| syntax(lineno, col, format!("invalid number in `{tok}`")))?;
                    match key {
                        "assoc" => assoc = Some(value as usize),
                        "sets" => sets = Some(value as usize),
                        "linesize" => linesize = Some(value),
                        _ => return Err(syntax(lineno, col, format!("unknown cache parameter `{key}`"))),
                    }
                }
                match (assoc, sets, linesize) {
                    (Some(a), Some(s), Some(l)) => header = Some((a, l, s)),
                    _ => return Err(syntax(lineno, kw_col, "cache header needs assoc=, sets= and linesize=".into())),
                }
            }
            "start" => {
                if toks.len() != 3 {
                    return Err(syntax(lineno, kw_col, "expected `start <vertex> empty|top`".into()));
                }
                let (vcol, vertex) = toks[1];
                if !is_identifier(vertex) {
                    return Err(syntax(lineno, vcol, format!("invalid vertex name `{vertex}`")));
                }
                let kind = match toks[2].1 {
                    "empty" => StartKind::EmptyCache,
                    "top" => StartKind::TopCache,
                    other => {
                        return Err(syntax(
                            lineno,
                            toks[2].0,
                            format!("start kind must be `empty` or `top`, found `{other}`"),
                        ))
                    }
                };
                starts.push((lineno, vertex.to_string(), kind));
            }
            "edge" => {
                if toks.len() != 4 && toks.len() != 5 {
                    return Err(syntax(lineno, kw_col, "expected `edge <src> <dst> <label> [id=<n>]`".into()));
                }
                for &(col, v) in &toks[1..3] {
                    if !is_identifier(v) {
                        return Err(syntax(lineno, col, format!("invalid vertex name `{v}`")));
                    }
                }
                let (lcol, ltok) = toks[3];
                let label = if ltok == "-" {
                    RawLabel::Epsilon
                } else if let Some(addr) = ltok.strip_prefix('@') {
                    RawLabel::Address(
                        parse_number(addr).ok_or_else(|| syntax(lineno, lcol, format!("invalid address `{ltok}`")))?,
                    )
                } else if is_identifier(ltok) {
                    RawLabel::Symbol(ltok.to_string())
                } else {
                    return Err(syntax(lineno, lcol, format!("invalid label `{ltok}`")));
                };
                let id = match toks.get(4) {
                    None => None,
                    Some(&(col, tok)) => {
                        let n = tok
                            .strip_prefix("id=")
                            .and_then(|v| v.parse::<u32>().ok())
                            .ok_or_else(|| syntax(lineno, col, format!("expected id=<n>, found `{tok}`")))?;
                        Some(n)
                    }
                };
                raw_edges.push(RawEdge {
                    line: lineno,
                    label_column: lcol,
                    src: toks[1].1.to_string(),
                    dst: toks[2].1.to_string(),
                    label,
                    id,
                });
            }
            other => return Err(syntax(lineno, kw_col, format!("unknown directive `{other}`"))),
        }
    }

    let (h_assoc, h_line, h_sets) = match header {
        Some((a, l, s)) => (Some(a), Some(l), Some(s)),
        None => (None, None, None),
    };
    let config =
        match (overrides.associativity.or(h_assoc), overrides.num_sets.or(h_sets), overrides.line_size.or(h_line)) {
            (Some(a), Some(s), Some(l)) => CacheConfig::new(a, s, l)?,
            _ => return Err(ParseError::MissingCacheHeader),
        };

    let mut builder = GraphBuilder::new();
    let mut start_lines = HashMap::new();
    for (line, vertex, _) in &starts {
        if start_lines.insert(vertex.clone(), *line).is_some() {
            return Err(ParseError::DuplicateStart { line: *line, vertex: vertex.clone() });
        }
    }
    // Vertices are numbered by first mention in the file.
    let mut mentions: Vec<(usize, usize, &str)> = Vec::new();
    for (line, vertex, _) in &starts {
        mentions.push((*line, 0, vertex));
    }
    for e in &raw_edges {
        mentions.push((e.line, 1, &e.src));
        mentions.push((e.line, 2, &e.dst));
    }
    mentions.sort_by_key(|(l, k, _)| (*l, *k));
    for (_, _, name) in mentions {
        builder.vertex(name);
    }
    for (_, vertex, kind) in &starts {
        builder.start(vertex, *kind);
    }

    let mut used_ids = BTreeSet::new();
    for (idx, e) in raw_edges.iter().enumerate() {
        let label = match &e.label {
            RawLabel::Epsilon => Label::Epsilon,
            RawLabel::Address(addr) => Label::Access(config.map_address(*addr).0),
            RawLabel::Symbol(s) => {
                if config.num_sets != 1 {
                    return Err(ParseError::SymbolicLabelWithSets {
                        line: e.line,
                        column: e.label_column,
                        label: s.clone(),
                    });
                }
                Label::Access(BlockId::named(s))
            }
        };
        if start_lines.contains_key(&e.dst) {
            return Err(ParseError::EdgeIntoStart { line: e.line, vertex: e.dst.clone() });
        }
        let id = e.id.unwrap_or(idx as u32);
        if !used_ids.insert(id) {
            return Err(ParseError::DuplicateEdgeId { line: e.line, id });
        }
        builder.edge_with_id(&e.src, &e.dst, label, EdgeId(id));
    }
    let graph = builder.build().expect("validated while parsing");
    Ok(Program { config, graph })
}

/// Renders a program in the text format accepted by [`parse_cfg`].
pub fn write_cfg(program: &Program) -> String {
    use std::fmt::Write;
    let c = &program.config;
    let g = &program.graph;
    let mut out = String::new();
    writeln!(out, "cache assoc={} sets={} linesize={}", c.associativity, c.num_sets, c.line_size).unwrap();
    for (v, kind) in g.starts() {
        let kind = match kind {
            StartKind::EmptyCache => "empty",
            StartKind::TopCache => "top",
        };
        writeln!(out, "start {} {kind}", g.vertex_name(*v)).unwrap();
    }
    for e in g.edges() {
        let label = match &e.label {
            Label::Epsilon => "-".to_string(),
            Label::Access(BlockId::Line(n)) => format!("@{:#x}", n * c.line_size),
            Label::Access(BlockId::Named(s)) => s.to_string(),
        };
        writeln!(out, "edge {} {} {label} id={}", g.vertex_name(e.src), g.vertex_name(e.dst), e.id).unwrap();
    }
    out
}
