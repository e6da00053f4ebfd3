//! Exact may-hit / may-miss analyses and the classification pipeline.
//!
//! For a focus block `a`, each vertex carries two families of "blocks
//! younger than `a`" sets. The may-hit value keeps the minimal sets of
//! states where `a` is cached; the may-miss value keeps the maximal ones,
//! or `Top` once some execution may have evicted `a`. Both families live in
//! a private ZDD [`Manager`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::age::age_fixpoint;
use crate::cfg::{BlockId, ControlFlowGraph, EdgeId, Label, Program, StartKind, VertexId};
use crate::zdd::{Manager, Var, Zdd};
use crate::Classification;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MissValue {
    /// Not reached yet.
    Bottom,
    /// A miss is possible.
    Top,
    /// Maximal younger-sets; the focus block is cached in every state.
    Antichain(Zdd),
}

/// Iteration discipline of the worklist.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WorklistOrder {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("analysis exceeded its time budget")]
    Timeout,
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

/// Explicit rendering of a may-miss value, comparable across managers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MissSets {
    Bottom,
    Top,
    Sets(BTreeSet<BTreeSet<BlockId>>),
}

/// Both fixpoints for one focus block on one single-set graph.
pub struct BlockResult {
    pub block: BlockId,
    manager: Manager,
    vars: Vec<BlockId>,
    hit: Vec<Zdd>,
    miss: Vec<MissValue>,
    updates: Vec<u32>,
    verdicts: BTreeMap<EdgeId, (bool, bool)>,
}

impl BlockResult {
    pub fn manager(&self) -> &Manager {
        &self.manager
    }

    pub fn hit(&self, v: VertexId) -> Zdd {
        self.hit[v.index()]
    }

    pub fn miss(&self, v: VertexId) -> MissValue {
        self.miss[v.index()]
    }

    /// Block denoted by ZDD variable `v`.
    pub fn var_block(&self, v: Var) -> &BlockId {
        &self.vars[v as usize]
    }

    fn resolve(&self, z: Zdd) -> BTreeSet<BTreeSet<BlockId>> {
        self.manager
            .enumerate(z, usize::MAX)
            .into_iter()
            .map(|s| s.into_iter().map(|v| self.var_block(v).clone()).collect())
            .collect()
    }

    pub fn hit_sets(&self, v: VertexId) -> BTreeSet<BTreeSet<BlockId>> {
        self.resolve(self.hit(v))
    }

    pub fn miss_sets(&self, v: VertexId) -> MissSets {
        match self.miss(v) {
            MissValue::Bottom => MissSets::Bottom,
            MissValue::Top => MissSets::Top,
            MissValue::Antichain(z) => MissSets::Sets(self.resolve(z)),
        }
    }

    /// `(may_hit, may_miss)` for each reachable edge accessing the focus block.
    pub fn verdicts(&self) -> &BTreeMap<EdgeId, (bool, bool)> {
        &self.verdicts
    }

    pub fn classification(&self, e: EdgeId) -> Option<Classification> {
        self.verdicts.get(&e).map(|&(h, m)| Classification::from_may(h, m))
    }

    /// Number of strict value changes recorded at `v`.
    pub fn updates(&self, v: VertexId) -> u32 {
        self.updates[v.index()]
    }

    /// Largest number of sets stored in any vertex value.
    pub fn max_antichain(&self) -> u128 {
        let hits = self.hit.iter().map(|&z| self.manager.count(z));
        let misses = self.miss.iter().map(|m| match m {
            MissValue::Antichain(z) => self.manager.count(*z),
            _ => 0,
        });
        hits.chain(misses).max().unwrap_or(0)
    }
}

struct Worklist {
    queue: VecDeque<VertexId>,
    queued: Vec<bool>,
    order: WorklistOrder,
}

impl Worklist {
    fn new(n: usize, order: WorklistOrder) -> Self {
        Worklist { queue: VecDeque::new(), queued: vec![false; n], order }
    }

    fn push(&mut self, v: VertexId) {
        if !self.queued[v.index()] {
            self.queued[v.index()] = true;
            self.queue.push_back(v);
        }
    }

    fn pop(&mut self) -> Option<VertexId> {
        let v = match self.order {
            WorklistOrder::Fifo => self.queue.pop_front(),
            WorklistOrder::Lifo => self.queue.pop_back(),
        }?;
        self.queued[v.index()] = false;
        Some(v)
    }
}

fn miss_join(m: &mut Manager, x: MissValue, y: MissValue) -> MissValue {
    match (x, y) {
        (MissValue::Bottom, v) | (v, MissValue::Bottom) => v,
        (MissValue::Top, _) | (_, MissValue::Top) => MissValue::Top,
        (MissValue::Antichain(s), MissValue::Antichain(t)) => MissValue::Antichain(m.max_union(s, t)),
    }
}

/// Runs both analyses for focus block `a` on a sliced, pruned graph.
pub fn analyze_block(
    g: &ControlFlowGraph,
    a: &BlockId,
    assoc: usize,
    order: WorklistOrder,
    deadline: Option<Instant>,
) -> Result<BlockResult, AnalysisError> {
    let mut m = Manager::new();
    let vars = g.blocks();
    let var_of: HashMap<&BlockId, Var> = vars.iter().enumerate().map(|(i, b)| (b, i as Var)).collect();
    let n = g.num_vertices();
    let limit = (assoc - 1) as u32;

    let mut hit = vec![m.bottom(); n];
    let mut miss = vec![MissValue::Bottom; n];
    let mut updates = vec![0u32; n];
    let mut work = Worklist::new(n, order);
    for (&v, &kind) in g.starts() {
        hit[v.index()] = match kind {
            StartKind::EmptyCache => m.bottom(),
            StartKind::TopCache => m.unit(),
        };
        miss[v.index()] = MissValue::Top;
        work.push(v);
    }

    let mut steps = 0u64;
    while let Some(v) = work.pop() {
        steps += 1;
        if steps.is_multiple_of(64) {
            if let Some(d) = deadline {
                if Instant::now() >= d {
                    return Err(AnalysisError::Timeout);
                }
            }
        }
        let (h, mv) = (hit[v.index()], miss[v.index()]);
        for e in g.out_edges(v) {
            let (h2, m2) = match &e.label {
                Label::Epsilon => (h, mv),
                Label::Access(b) if b == a => (m.unit(), MissValue::Antichain(m.unit())),
                Label::Access(b) => {
                    let x = var_of[b];
                    let grown = m.add_element_min(h, x);
                    let h2 = m.truncate(grown, limit);
                    let m2 = match mv {
                        MissValue::Antichain(s) => {
                            let s2 = m.add_element_max(s, x);
                            if m.has_set_of_size_at_least(s2, assoc as u32) {
                                MissValue::Top
                            } else {
                                MissValue::Antichain(s2)
                            }
                        }
                        other => other,
                    };
                    (h2, m2)
                }
            };
            let d = e.dst.index();
            let nh = m.min_union(hit[d], h2);
            let nm = miss_join(&mut m, miss[d], m2);
            if nh != hit[d] || nm != miss[d] {
                hit[d] = nh;
                miss[d] = nm;
                updates[d] += 1;
                work.push(e.dst);
            }
        }
    }

    let mut verdicts = BTreeMap::new();
    for e in g.edges() {
        if e.label.block() == Some(a) && miss[e.src.index()] != MissValue::Bottom {
            let may_hit = !hit[e.src.index()].is_bottom();
            let may_miss = miss[e.src.index()] == MissValue::Top;
            verdicts.insert(e.id, (may_hit, may_miss));
        }
    }
    Ok(BlockResult { block: a.clone(), manager: m, vars, hit, miss, updates, verdicts })
}

/// Which engines produce the final verdicts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Age intervals only; may answer `Unknown`.
    Age,
    /// Exact analysis of every block.
    Zdd,
    /// Age intervals first, exact analysis for blocks with undecided accesses.
    #[default]
    AgePlusZdd,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Age => "age",
            Mode::Zdd => "zdd",
            Mode::AgePlusZdd => "age+zdd",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "age" => Ok(Mode::Age),
            "zdd" => Ok(Mode::Zdd),
            "age+zdd" => Ok(Mode::AgePlusZdd),
            other => Err(format!("unknown mode `{other}` (expected age, zdd or age+zdd)")),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub mode: Mode,
    /// Worker threads for per-block analyses; 0 lets the pool decide.
    pub jobs: usize,
    /// Restrict the report to accesses of one block.
    pub focus: Option<BlockId>,
    pub deadline: Option<Instant>,
    pub order: WorklistOrder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeVerdict {
    pub edge: EdgeId,
    pub set: usize,
    pub block: BlockId,
    pub classification: Classification,
    pub by_age: Option<Classification>,
    pub by_exact: Option<Classification>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stats {
    /// (set, block) pairs given to the exact analysis.
    pub blocks_analyzed: usize,
    pub max_antichain: u128,
    pub zdd_nodes: usize,
    pub age_ms: f64,
    pub exact_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalysisReport {
    /// One entry per reachable access edge.
    pub edges: BTreeMap<EdgeId, EdgeVerdict>,
    /// Access edges no start vertex reaches.
    pub unreachable: Vec<EdgeId>,
    pub stats: Stats,
}

struct Task {
    graph: usize,
    block: BlockId,
}

/// Classifies every access edge of `program`.
pub fn classify(program: &Program, opts: &Options) -> Result<AnalysisReport, AnalysisError> {
    let config = &program.config;
    let assoc = config.associativity;
    let reachable = program.graph.reachable();
    let mut report = AnalysisReport::default();

    let wanted = |b: &BlockId| opts.focus.as_ref().is_none_or(|f| f == b);

    let mut slices = Vec::new();
    let mut age_verdicts: BTreeMap<EdgeId, Classification> = BTreeMap::new();
    let mut tasks = Vec::new();
    let t_age = Instant::now();
    for set in program.used_sets() {
        let g = program.graph.slice_for_set(set, config).prune_unreachable();
        let idx = slices.len();
        let mut undecided = BTreeSet::new();
        if opts.mode != Mode::Zdd {
            let fix = age_fixpoint(&g, assoc);
            for (id, c) in fix.classify(&g) {
                if c == Classification::Unknown {
                    undecided.insert(g.edge(id).and_then(|e| e.label.block()).cloned().unwrap());
                }
                age_verdicts.insert(id, c);
            }
        }
        let candidates: Vec<BlockId> = match opts.mode {
            Mode::Age => Vec::new(),
            Mode::Zdd => g.blocks(),
            Mode::AgePlusZdd => g.blocks().into_iter().filter(|b| undecided.contains(b)).collect(),
        };
        for block in candidates.into_iter().filter(|b| wanted(b)) {
            tasks.push(Task { graph: idx, block });
        }
        slices.push(g);
    }
    report.stats.age_ms = t_age.elapsed().as_secs_f64() * 1e3;

    let t_exact = Instant::now();
    let run = |t: &Task| -> Result<(BTreeMap<EdgeId, Classification>, u128, usize), AnalysisError> {
        let r = analyze_block(&slices[t.graph], &t.block, assoc, opts.order, opts.deadline)?;
        let verdicts = r.verdicts().keys().map(|&e| (e, r.classification(e).unwrap())).collect();
        Ok((verdicts, r.max_antichain(), r.manager().node_count()))
    };
    let results: Vec<_> = if opts.jobs == 1 || tasks.len() <= 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| AnalysisError::ThreadPool(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    };
    let mut exact_verdicts = BTreeMap::new();
    for r in results {
        let (v, max, nodes) = r?;
        exact_verdicts.extend(v);
        report.stats.max_antichain = report.stats.max_antichain.max(max);
        report.stats.zdd_nodes += nodes;
    }
    report.stats.blocks_analyzed = tasks.len();
    report.stats.exact_ms = t_exact.elapsed().as_secs_f64() * 1e3;

    for e in program.graph.edges() {
        let Some(block) = e.label.block() else { continue };
        if !wanted(block) {
            continue;
        }
        if !reachable[e.src.index()] {
            report.unreachable.push(e.id);
            continue;
        }
        let by_age = age_verdicts.get(&e.id).copied();
        let by_exact = exact_verdicts.get(&e.id).copied();
        let classification = by_exact.or(by_age).expect("every reachable access edge is classified");
        report.edges.insert(
            e.id,
            EdgeVerdict {
                edge: e.id,
                set: config.set_of(block),
                block: block.clone(),
                classification,
                by_age,
                by_exact,
            },
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::parse_cfg;

    fn named(xs: &[&str]) -> BTreeSet<BlockId> {
        xs.iter().map(|x| BlockId::named(x)).collect()
    }

    #[test]
    fn hit_family_truncates_at_associativity() {
        let p = parse_cfg("cache assoc=2 sets=1 linesize=1\nstart s top\nedge s t b\nedge t u c\n").unwrap();
        let r = analyze_block(&p.graph, &BlockId::named("a"), 2, WorklistOrder::Fifo, None).unwrap();
        let t = p.graph.vertex_by_name("t").unwrap();
        let u = p.graph.vertex_by_name("u").unwrap();
        assert_eq!(r.hit_sets(t), BTreeSet::from([named(&["b"])]));
        assert!(r.hit_sets(u).is_empty());
    }

    #[test]
    fn miss_value_becomes_top_on_eviction() {
        let p = parse_cfg(
            "cache assoc=4 sets=1 linesize=1\nstart s empty\nedge s p a\nedge p q x\nedge q r y\nedge r t z\nedge t u w\n",
        )
        .unwrap();
        let r = analyze_block(&p.graph, &BlockId::named("a"), 4, WorklistOrder::Fifo, None).unwrap();
        let t = p.graph.vertex_by_name("t").unwrap();
        let u = p.graph.vertex_by_name("u").unwrap();
        assert_eq!(r.miss_sets(t), MissSets::Sets(BTreeSet::from([named(&["x", "y", "z"])])));
        assert_eq!(r.miss_sets(u), MissSets::Top);
    }

    #[test]
    fn direct_mapped_cache() {
        let p =
            parse_cfg("cache assoc=1 sets=1 linesize=1\nstart s top\nedge s t a\nedge t u b\nedge u v a\nedge t w a\n")
                .unwrap();
        let rep = classify(&p, &Options { mode: Mode::Zdd, ..Default::default() }).unwrap();
        let got: Vec<_> = rep.edges.values().map(|e| e.classification).collect();
        use Classification::*;
        assert_eq!(got, vec![HitAndMiss, AlwaysMiss, AlwaysMiss, AlwaysHit]);
    }

    #[test]
    fn single_access_after_empty_start() {
        let p = parse_cfg("cache assoc=4 sets=1 linesize=1\nstart s empty\nedge s t a\n").unwrap();
        for mode in [Mode::Age, Mode::Zdd, Mode::AgePlusZdd] {
            let rep = classify(&p, &Options { mode, ..Default::default() }).unwrap();
            assert_eq!(rep.edges[&EdgeId(0)].classification, Classification::AlwaysMiss);
        }
    }

    #[test]
    fn unreachable_access_is_reported_separately() {
        let p = parse_cfg("cache assoc=2 sets=1 linesize=1\nstart s empty\nedge s t a\nedge x y b\n").unwrap();
        let rep = classify(&p, &Options::default()).unwrap();
        assert_eq!(rep.edges.len(), 1);
        assert_eq!(rep.unreachable, vec![EdgeId(1)]);
    }

    #[test]
    fn focus_restricts_report() {
        let p =
            parse_cfg("cache assoc=2 sets=1 linesize=1\nstart s empty\nedge s t a\nedge t u b\nedge u v a\n").unwrap();
        let opts = Options { mode: Mode::Zdd, focus: Some(BlockId::named("a")), ..Default::default() };
        let rep = classify(&p, &opts).unwrap();
        assert_eq!(rep.edges.keys().copied().collect::<Vec<_>>(), vec![EdgeId(0), EdgeId(2)]);
        assert_eq!(rep.stats.blocks_analyzed, 1);
    }

    #[test]
    fn expired_deadline_times_out() {
        let mut text = String::from("cache assoc=4 sets=1 linesize=1\nstart s0 empty\n");
        for i in 0..200 {
            text.push_str(&format!("edge s{i} s{} b{}\n", i + 1, i % 7));
        }
        let p = parse_cfg(&text).unwrap();
        let opts = Options { mode: Mode::Zdd, deadline: Some(Instant::now()), jobs: 1, ..Default::default() };
        assert_eq!(classify(&p, &opts).unwrap_err(), AnalysisError::Timeout);
    }
}
