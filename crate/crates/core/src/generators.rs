//! Benchmark graphs with known answers.
//!
//! * [`sat_to_cfg`]: a may-hit question that is true iff a CNF formula is satisfiable.
//! * [`hamiltonian_to_cfg`]: a may-miss question that is true iff a graph has a Hamiltonian circuit.
//! * [`diamond_chain`]: exponentially many concrete states, tiny antichains.
//! * [`random_cfg`]: seeded random graphs for differential testing.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cfg::{BlockId, CacheConfig, ControlFlowGraph, EdgeId, GraphBuilder, Label, Program, StartKind};

/// Largest formula the truth-table check accepts.
pub const MAX_SAT_VARS: usize = 20;
/// Largest graph the permutation check accepts.
pub const MAX_HAM_VERTICES: usize = 9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("{what} exceeds the brute-force bound of {limit}")]
    TooLarge { what: &'static str, limit: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: usize,
    /// Literals are `±v` with `v` in `1..=num_vars`.
    pub clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, GenError> {
        for c in &clauses {
            if c.is_empty() {
                return Err(GenError::Invalid("empty clause".into()));
            }
            for &l in c {
                if l == 0 || l.unsigned_abs() as usize > num_vars {
                    return Err(GenError::Invalid(format!("literal {l} out of range 1..={num_vars}")));
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Reads DIMACS CNF (`p cnf <vars> <clauses>`, zero-terminated clauses).
    pub fn parse_dimacs(text: &str) -> Result<Self, GenError> {
        let mut num_vars = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                match parts.as_slice() {
                    ["cnf", v, _] => {
                        num_vars = Some(v.parse::<usize>().map_err(|_| GenError::Parse {
                            line: i + 1,
                            message: format!("bad variable count `{v}`"),
                        })?)
                    }
                    _ => {
                        return Err(GenError::Parse {
                            line: i + 1,
                            message: "expected `p cnf <vars> <clauses>`".into(),
                        })
                    }
                }
                continue;
            }
            if num_vars.is_none() {
                return Err(GenError::Parse { line: i + 1, message: "clause before problem line".into() });
            }
            for tok in line.split_whitespace() {
                let l: i32 = tok
                    .parse()
                    .map_err(|_| GenError::Parse { line: i + 1, message: format!("bad literal `{tok}`") })?;
                if l == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(l);
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        let num_vars = num_vars.ok_or(GenError::Parse { line: 0, message: "missing problem line".into() })?;
        CnfFormula::new(num_vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&format!("{l} "));
            }
            out.push_str("0\n");
        }
        out
    }

    /// Truth-table satisfiability check.
    pub fn is_satisfiable(&self) -> Result<bool, GenError> {
        if self.num_vars > MAX_SAT_VARS {
            return Err(GenError::TooLarge { what: "variable count", limit: MAX_SAT_VARS });
        }
        let holds = |assign: u32, l: i32| {
            let bit = assign >> (l.unsigned_abs() - 1) & 1 == 1;
            bit == (l > 0)
        };
        Ok((0..1u32 << self.num_vars).any(|assign| self.clauses.iter().all(|c| c.iter().any(|&l| holds(assign, l)))))
    }

    /// A random formula with 1..=`max_vars` variables and up to `max_clauses` clauses of width 1 to 3.
    pub fn random<R: Rng>(rng: &mut R, max_vars: usize, max_clauses: usize) -> Self {
        let num_vars = rng.gen_range(1..=max_vars);
        let n_clauses = rng.gen_range(1..=max_clauses);
        let clauses = (0..n_clauses)
            .map(|_| {
                let width = rng.gen_range(1..=3usize.min(num_vars));
                let mut vars: Vec<i32> = (1..=num_vars as i32).collect();
                vars.shuffle(rng);
                vars.truncate(width);
                vars.into_iter().map(|v| if rng.gen_bool(0.5) { v } else { -v }).collect()
            })
            .collect();
        CnfFormula { num_vars, clauses }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    pub num_vertices: usize,
    /// Normalised as `(min, max)`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(num_vertices: usize) -> Self {
        UndirectedGraph { num_vertices, edges: BTreeSet::new() }
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), GenError> {
        if u == v {
            return Err(GenError::Invalid(format!("self-loop on vertex {u}")));
        }
        if u >= self.num_vertices || v >= self.num_vertices {
            return Err(GenError::Invalid(format!("edge {u}-{v} out of range")));
        }
        self.edges.insert((u.min(v), u.max(v)));
        Ok(())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    /// First line: vertex count. Then one `u v` pair per line. `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self, GenError> {
        let mut graph: Option<UndirectedGraph> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| GenError::Parse { line: i + 1, message };
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(format!("bad number `{t}`"))))
                .collect::<Result<_, _>>()?;
            match (&mut graph, nums.as_slice()) {
                (None, [n]) => graph = Some(UndirectedGraph::new(*n)),
                (None, _) => return Err(err("expected the vertex count".into())),
                (Some(g), [u, v]) => g.add_edge(*u, *v).map_err(|e| err(e.to_string()))?,
                (Some(_), _) => return Err(err("expected `u v`".into())),
            }
        }
        graph.ok_or(GenError::Parse { line: 0, message: "empty graph file".into() })
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.num_vertices);
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Whether a cycle visits every vertex exactly once, by permutation enumeration.
    /// Two vertices joined by an edge count as a circuit.
    pub fn has_hamiltonian_circuit(&self) -> Result<bool, GenError> {
        let n = self.num_vertices;
        if n > MAX_HAM_VERTICES {
            return Err(GenError::TooLarge { what: "vertex count", limit: MAX_HAM_VERTICES });
        }
        if n < 2 {
            return Ok(false);
        }
        let mut rest: Vec<usize> = (1..n).collect();
        Ok(self.permute(&mut rest, 0))
    }

    fn permute(&self, p: &mut Vec<usize>, k: usize) -> bool {
        let prev = if k == 0 { 0 } else { p[k - 1] };
        if k == p.len() {
            return self.has_edge(prev, 0);
        }
        for i in k..p.len() {
            p.swap(k, i);
            if self.has_edge(prev, p[k]) && self.permute(p, k + 1) {
                p.swap(k, i);
                return true;
            }
            p.swap(k, i);
        }
        false
    }

    /// Erdős–Rényi graph on `n` vertices with edge probability `p`.
    pub fn random<R: Rng>(rng: &mut R, n: usize, p: f64) -> Self {
        let mut g = UndirectedGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    g.edges.insert((u, v));
                }
            }
        }
        g
    }
}

/// What the designated edge is asked about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Question {
    MayHit,
    MayMiss,
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub program: Program,
    pub designated: EdgeId,
    pub question: Question,
    pub ground_truth: bool,
}

impl GeneratedInstance {
    pub fn associativity(&self) -> usize {
        self.program.config.associativity
    }
}

fn named(s: &str) -> Label {
    Label::Access(BlockId::named(s))
}

/// Sequence of switches: one per variable (`x<i>` / `nx<i>`), one per clause,
/// framed by two accesses to a fresh block `w`.
pub fn sat_to_cfg(f: &CnfFormula) -> Result<GeneratedInstance, GenError> {
    let ground_truth = f.is_satisfiable()?;
    let lit = |l: i32| if l > 0 { format!("x{l}") } else { format!("nx{}", -l) };
    let mut b = GraphBuilder::new();
    b.start("start", StartKind::EmptyCache);
    b.edge("start", "s0", named("w"));
    let mut k = 0;
    for v in 1..=f.num_vars as i32 {
        let (from, to) = (format!("s{k}"), format!("s{}", k + 1));
        b.edge(&from, &to, named(&lit(v)));
        b.edge(&from, &to, named(&lit(-v)));
        k += 1;
    }
    for c in &f.clauses {
        let (from, to) = (format!("s{k}"), format!("s{}", k + 1));
        for &l in c {
            b.edge(&from, &to, named(&lit(l)));
        }
        k += 1;
    }
    let designated = b.edge(&format!("s{k}"), "end", named("w"));
    let graph = b.build().expect("generated graph is valid");
    Ok(GeneratedInstance {
        program: Program { config: CacheConfig::single_set(f.num_vars + 1), graph },
        designated,
        question: Question::MayHit,
        ground_truth,
    })
}

/// Layered graph where each layer holds a copy of every vertex but `v0`;
/// edges follow the input graph and are labelled by the entered vertex.
pub fn hamiltonian_to_cfg(g: &UndirectedGraph) -> Result<GeneratedInstance, GenError> {
    let n = g.num_vertices;
    if n == 0 {
        return Err(GenError::Invalid("graph has no vertices".into()));
    }
    let ground_truth = g.has_hamiltonian_circuit()?;
    let name = |i: usize, j: usize| format!("v{i}_{j}");
    let layer = |j: usize| -> Vec<usize> {
        if j == 0 || j == n {
            vec![0]
        } else {
            (1..n).collect()
        }
    };
    let mut b = GraphBuilder::new();
    b.start("start", StartKind::EmptyCache);
    b.edge("start", &name(0, 0), named("w"));
    b.vertex(&name(0, n));
    for j in 0..n {
        for &i in &layer(j) {
            for &i2 in &layer(j + 1) {
                if g.has_edge(i, i2) {
                    b.edge(&name(i, j), &name(i2, j + 1), named(&format!("h{i2}")));
                }
            }
        }
    }
    let designated = b.edge(&name(0, n), "end", named("w"));
    let graph = b.build().expect("generated graph is valid");
    Ok(GeneratedInstance {
        program: Program { config: CacheConfig::single_set(n), graph },
        designated,
        question: Question::MayMiss,
        ground_truth,
    })
}

/// `s0 –a→ s1`, then `n` diamonds `s_i –b_i→ s_{i+1}` / `s_i –ε→ s_{i+1}`.
pub fn diamond_chain(n: usize, assoc: usize) -> Program {
    let mut b = GraphBuilder::new();
    b.start("s0", StartKind::EmptyCache);
    b.edge("s0", "s1", named("a"));
    for i in 1..=n {
        let (from, to) = (format!("s{i}"), format!("s{}", i + 1));
        b.edge(&from, &to, named(&format!("b{i}")));
        b.edge(&from, &to, Label::Epsilon);
    }
    Program { config: CacheConfig::single_set(assoc), graph: b.build().expect("generated graph is valid") }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomCfgParams {
    pub vertices: usize,
    pub blocks: usize,
    /// Probability of each extra edge between an ordered vertex pair.
    pub edge_density: f64,
    /// Probability that a start vertex assumes an unknown (`⊤`) cache.
    pub top_bias: f64,
    /// Number of start vertices, at least one.
    pub starts: usize,
}

impl Default for RandomCfgParams {
    fn default() -> Self {
        RandomCfgParams { vertices: 8, blocks: 4, edge_density: 0.15, top_bias: 0.5, starts: 1 }
    }
}

/// Seeded random graph in which every vertex is reachable from a start.
/// Labels are blocks `b0..` or, with probability 1/5, `ε`.
pub fn random_cfg(params: &RandomCfgParams, seed: u64) -> ControlFlowGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.vertices.max(1);
    let starts = params.starts.clamp(1, n);
    let blocks = params.blocks.max(1);
    let label = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.2) {
            Label::Epsilon
        } else {
            named(&format!("b{}", rng.gen_range(0..blocks)))
        }
    };
    let name = |i: usize| format!("v{i}");
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.vertex(&name(i));
    }
    for i in 0..starts {
        let kind = if rng.gen_bool(params.top_bias) { StartKind::TopCache } else { StartKind::EmptyCache };
        b.start(&name(i), kind);
    }
    for i in starts..n {
        let parent = rng.gen_range(0..i);
        let l = label(&mut rng);
        b.edge(&name(parent), &name(i), l);
    }
    for u in 0..n {
        for v in starts..n {
            if rng.gen_bool(params.edge_density) {
                let l = label(&mut rng);
                b.edge(&name(u), &name(v), l);
            }
        }
    }
    b.build().expect("generated graph is valid")
}

/// Whether the graph has no directed cycle.
pub fn is_acyclic(g: &ControlFlowGraph) -> bool {
    let n = g.num_vertices();
    let mut indeg = vec![0usize; n];
    for e in g.edges() {
        indeg[e.dst.index()] += 1;
    }
    let mut stack: Vec<_> = g.vertices().filter(|v| indeg[v.index()] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for e in g.out_edges(v) {
            indeg[e.dst.index()] -= 1;
            if indeg[e.dst.index()] == 0 {
                stack.push(e.dst);
            }
        }
    }
    seen == n
}
