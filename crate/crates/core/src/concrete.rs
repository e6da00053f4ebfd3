//! Reference LRU semantics by explicit state enumeration.
//!
//! Everything here is exponential and meant for validating the abstract
//! analyses on small graphs. All functions expect a graph whose labels all
//! belong to one cache set (see [`ControlFlowGraph::slice_for_set`]).

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::cfg::{BlockId, ControlFlowGraph, EdgeId, Label, Program, StartKind, VertexId};
use crate::Classification;

/// Default bound on explored (vertex, state) pairs.
pub const DEFAULT_GUARD: usize = 1_000_000;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("state explosion: more than {limit} (vertex, state) pairs")]
    GuardExceeded { limit: usize },
}

/// One LRU access on a youngest-first line sequence. Empty lines are implicit
/// after the last element. Returns the new sequence and whether `b` was cached.
pub fn access_concrete<T: PartialEq + Clone>(state: &[T], b: &T, assoc: usize) -> (Vec<T>, bool) {
    let mut next = Vec::with_capacity(assoc);
    next.push(b.clone());
    let hit = state.contains(b);
    next.extend(state.iter().filter(|x| *x != b).cloned());
    next.truncate(assoc);
    (next, hit)
}

/// Anything that can occupy a cache line in the reference semantics.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Content {
    Block(BlockId),
    /// Stand-in for a block never mentioned by the graph, used in `⊤` states.
    Filler(u32),
}

/// Dense numbering of the blocks of a graph plus `assoc - 1` fillers.
#[derive(Clone, Debug)]
pub struct Universe {
    items: Vec<Content>,
    blocks: usize,
}

impl Universe {
    pub fn new(g: &ControlFlowGraph, assoc: usize, extra: Option<&BlockId>) -> Self {
        let mut blocks = g.blocks();
        if let Some(x) = extra {
            if !blocks.contains(x) {
                blocks.push(x.clone());
            }
        }
        let n = blocks.len();
        let mut items: Vec<Content> = blocks.into_iter().map(Content::Block).collect();
        items.extend((0..assoc.saturating_sub(1) as u32).map(Content::Filler));
        Universe { items, blocks: n }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: u32) -> &Content {
        &self.items[i as usize]
    }

    pub fn index_of(&self, b: &BlockId) -> Option<u32> {
        self.items[..self.blocks].iter().position(|c| matches!(c, Content::Block(x) if x == b)).map(|i| i as u32)
    }

    /// The block of universe entry `i`, or `None` for fillers.
    pub fn block(&self, i: u32) -> Option<&BlockId> {
        match self.get(i) {
            Content::Block(b) => Some(b),
            Content::Filler(_) => None,
        }
    }

    fn label_index(&self, label: &Label) -> Option<u32> {
        label.block().map(|b| self.index_of(b).expect("graph blocks are in the universe"))
    }
}

/// Every duplicate-free sequence over `0..universe` of length at most `assoc`.
fn all_states(universe: u32, assoc: usize, out: &mut Vec<Vec<u32>>, guard: usize) -> Result<(), OracleError> {
    fn rec(
        prefix: &mut Vec<u32>,
        universe: u32,
        assoc: usize,
        out: &mut Vec<Vec<u32>>,
        guard: usize,
    ) -> Result<(), OracleError> {
        if out.len() >= guard {
            return Err(OracleError::GuardExceeded { limit: guard });
        }
        out.push(prefix.clone());
        if prefix.len() == assoc {
            return Ok(());
        }
        for x in 0..universe {
            if !prefix.contains(&x) {
                prefix.push(x);
                rec(prefix, universe, assoc, out, guard)?;
                prefix.pop();
            }
        }
        Ok(())
    }
    rec(&mut Vec::new(), universe, assoc, out, guard)
}

/// Generic least-fixpoint exploration of a finite transition system attached
/// to the graph edges.
fn explore<S, F>(
    g: &ControlFlowGraph,
    seeds: impl Fn(StartKind) -> Result<Vec<S>, OracleError>,
    step: F,
    guard: usize,
) -> Result<Vec<BTreeSet<S>>, OracleError>
where
    S: Ord + Clone,
    F: Fn(&S, &Label) -> S,
{
    let mut states: Vec<BTreeSet<S>> = vec![BTreeSet::new(); g.num_vertices()];
    let mut queue = VecDeque::new();
    let mut total = 0usize;
    for (&v, &kind) in g.starts() {
        for s in seeds(kind)? {
            if states[v.index()].insert(s.clone()) {
                total += 1;
                queue.push_back((v, s));
            }
        }
    }
    if total > guard {
        return Err(OracleError::GuardExceeded { limit: guard });
    }
    while let Some((v, s)) = queue.pop_front() {
        for e in g.out_edges(v) {
            let t = step(&s, &e.label);
            if states[e.dst.index()].insert(t.clone()) {
                total += 1;
                if total > guard {
                    return Err(OracleError::GuardExceeded { limit: guard });
                }
                queue.push_back((e.dst, t));
            }
        }
    }
    Ok(states)
}

/// Reachable concrete cache states per vertex.
#[derive(Clone, Debug)]
pub struct Collecting {
    universe: Universe,
    states: Vec<BTreeSet<Vec<u32>>>,
    label_index: BTreeMap<EdgeId, Option<u32>>,
}

/// Least fixpoint of the concrete LRU semantics.
pub fn collecting_semantics(g: &ControlFlowGraph, assoc: usize, guard: usize) -> Result<Collecting, OracleError> {
    let universe = Universe::new(g, assoc, None);
    let u = universe.len() as u32;
    let labels: Vec<Option<u32>> = g.edges().iter().map(|e| universe.label_index(&e.label)).collect();
    let label_index = g.edges().iter().zip(&labels).map(|(e, l)| (e.id, *l)).collect();
    let states = explore(
        g,
        |kind| match kind {
            StartKind::EmptyCache => Ok(vec![Vec::new()]),
            StartKind::TopCache => {
                let mut out = Vec::new();
                all_states(u, assoc, &mut out, guard)?;
                Ok(out)
            }
        },
        |s: &Vec<u32>, label| match universe.label_index(label) {
            None => s.clone(),
            Some(b) => access_concrete(s, &b, assoc).0,
        },
        guard,
    )?;
    Ok(Collecting { universe, states, label_index })
}

impl Collecting {
    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    /// Youngest-first states at `v`, as universe indices.
    pub fn states(&self, v: VertexId) -> &BTreeSet<Vec<u32>> {
        &self.states[v.index()]
    }

    /// States at `v` with universe indices resolved.
    pub fn states_resolved(&self, v: VertexId) -> Vec<Vec<Content>> {
        self.states(v).iter().map(|s| s.iter().map(|&i| self.universe.get(i).clone()).collect()).collect()
    }

    pub fn total_states(&self) -> usize {
        self.states.iter().map(BTreeSet::len).sum()
    }

    /// Verdict for an access edge; `None` for `ε` edges and unreachable sources.
    pub fn classify_edge(&self, g: &ControlFlowGraph, edge: EdgeId) -> Option<Classification> {
        let e = g.edge(edge)?;
        let b = (*self.label_index.get(&edge)?)?;
        let states = &self.states[e.src.index()];
        if states.is_empty() {
            return None;
        }
        let may_hit = states.iter().any(|s| s.contains(&b));
        let may_miss = states.iter().any(|s| !s.contains(&b));
        Some(Classification::from_may(may_hit, may_miss))
    }

    /// Focused view of every state, per vertex.
    pub fn focus(&self, a: &BlockId) -> Vec<BTreeSet<FocusedState>> {
        let Some(ai) = self.universe.index_of(a) else {
            return self
                .states
                .iter()
                .map(|s| if s.is_empty() { BTreeSet::new() } else { BTreeSet::from([FocusedState::Absent]) })
                .collect();
        };
        self.states.iter().map(|set| set.iter().map(|s| focus_concrete(s, &ai)).collect()).collect()
    }

    /// Age of universe entry `x` in every state at `v` (`None` = not cached).
    pub fn ages(&self, v: VertexId, x: u32) -> BTreeSet<Option<usize>> {
        self.states(v).iter().map(|s| s.iter().position(|&y| y == x)).collect()
    }
}

/// A cache state seen from one focus block: absent, or the set of blocks younger than it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FocusedStateOf<T: Ord> {
    Absent,
    Younger(BTreeSet<T>),
}

/// Focused state over universe indices.
pub type FocusedState = FocusedStateOf<u32>;

pub fn focus_concrete<T: PartialEq + Ord + Clone>(state: &[T], a: &T) -> FocusedStateOf<T> {
    match state.iter().position(|x| x == a) {
        None => FocusedStateOf::Absent,
        Some(i) => FocusedStateOf::Younger(state[..i].iter().cloned().collect()),
    }
}

/// Result of the focused semantics for one block.
#[derive(Clone, Debug)]
pub struct Focused {
    universe: Universe,
    focus: u32,
    states: Vec<BTreeSet<FocusedState>>,
}

impl Focused {
    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn focus_index(&self) -> u32 {
        self.focus
    }

    pub fn states(&self, v: VertexId) -> &BTreeSet<FocusedState> {
        &self.states[v.index()]
    }

    pub fn all_states(&self) -> &[BTreeSet<FocusedState>] {
        &self.states
    }
}

/// Least fixpoint of the focused semantics for block `a`.
pub fn focused_semantics(
    g: &ControlFlowGraph,
    a: &BlockId,
    assoc: usize,
    guard: usize,
) -> Result<Focused, OracleError> {
    let universe = Universe::new(g, assoc, Some(a));
    let ai = universe.index_of(a).unwrap();
    let others: Vec<u32> = (0..universe.len() as u32).filter(|&x| x != ai).collect();
    let states = explore(
        g,
        |kind| {
            let mut seeds = vec![FocusedState::Absent];
            if kind == StartKind::TopCache {
                let mut count = 1usize;
                let mut subsets = Vec::new();
                bounded_subsets(&others, assoc - 1, &mut Vec::new(), 0, &mut subsets, &mut count, guard)?;
                seeds.extend(subsets.into_iter().map(|s| FocusedState::Younger(s.into_iter().collect())));
            }
            Ok(seeds)
        },
        |s, label| match universe.label_index(label) {
            None => s.clone(),
            Some(b) if b == ai => FocusedState::Younger(BTreeSet::new()),
            Some(b) => match s {
                FocusedState::Absent => FocusedState::Absent,
                FocusedState::Younger(y) => {
                    let mut y = y.clone();
                    y.insert(b);
                    if y.len() >= assoc {
                        FocusedState::Absent
                    } else {
                        FocusedState::Younger(y)
                    }
                }
            },
        },
        guard,
    )?;
    Ok(Focused { universe, focus: ai, states })
}

fn bounded_subsets(
    items: &[u32],
    max: usize,
    prefix: &mut Vec<u32>,
    from: usize,
    out: &mut Vec<Vec<u32>>,
    count: &mut usize,
    guard: usize,
) -> Result<(), OracleError> {
    *count += 1;
    if *count > guard {
        return Err(OracleError::GuardExceeded { limit: guard });
    }
    out.push(prefix.clone());
    if prefix.len() == max {
        return Ok(());
    }
    for i in from..items.len() {
        prefix.push(items[i]);
        bounded_subsets(items, max, prefix, i + 1, out, count, guard)?;
        prefix.pop();
    }
    Ok(())
}

/// Reference classification of every reachable access edge of a program.
pub fn classify_by_oracle(program: &Program, guard: usize) -> Result<BTreeMap<EdgeId, Classification>, OracleError> {
    let mut out = BTreeMap::new();
    for set in program.used_sets() {
        let sliced = program.graph.slice_for_set(set, &program.config);
        let coll = collecting_semantics(&sliced, program.config.associativity, guard)?;
        for e in sliced.edges() {
            if let Some(c) = coll.classify_edge(&sliced, e.id) {
                out.insert(e.id, c);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::parse_cfg;

    fn s(v: &[char]) -> Vec<char> {
        v.to_vec()
    }

    #[test]
    fn access_examples() {
        assert_eq!(access_concrete(&s(&['a', 'b', 'c', 'd']), &'b', 4), (s(&['b', 'a', 'c', 'd']), true));
        assert_eq!(access_concrete(&s(&['w', 'x', 'y', 'z']), &'e', 4), (s(&['e', 'w', 'x', 'y']), false));
        assert_eq!(access_concrete(&s(&[]), &'a', 4), (s(&['a']), false));
    }

    #[test]
    fn focus_examples() {
        assert_eq!(focus_concrete(&s(&['c', 'b', 'a']), &'a'), FocusedStateOf::Younger(BTreeSet::from(['b', 'c'])));
        assert_eq!(focus_concrete(&s(&['a', 'x', 'y', 'z']), &'a'), FocusedStateOf::Younger(BTreeSet::new()));
        assert_eq!(focus_concrete(&s(&['c', 'b', 'e']), &'a'), FocusedStateOf::Absent);
    }

    const JOIN_POINT: &str = "cache assoc=4 sets=1 linesize=1
start s empty
edge s q1 a
edge q1 v2 b
edge q1 v2 c
edge v2 x a
edge v2 y b
edge v2 z d
";

    #[test]
    fn join_point_verdicts() {
        let p = parse_cfg(JOIN_POINT).unwrap();
        let got = classify_by_oracle(&p, DEFAULT_GUARD).unwrap();
        let v: Vec<Classification> = got.values().copied().collect();
        use Classification::*;
        assert_eq!(v, vec![AlwaysMiss, AlwaysMiss, AlwaysMiss, AlwaysHit, HitAndMiss, AlwaysMiss]);
    }

    #[test]
    fn start_only_graph_keeps_seed() {
        let p = parse_cfg("cache assoc=2 sets=1 linesize=1\nstart s top\n").unwrap();
        let c = collecting_semantics(&p.graph, 2, DEFAULT_GUARD).unwrap();
        // Universe is one filler: states (), (f).
        assert_eq!(c.states(VertexId(0)).len(), 2);
    }

    #[test]
    fn top_seed_covers_eviction_distance() {
        // With ⊤, a single access to b may evict a; a second access to a can miss.
        let p =
            parse_cfg("cache assoc=2 sets=1 linesize=1\nstart s top\nedge s t a\nedge t u b\nedge u v a\n").unwrap();
        let got = classify_by_oracle(&p, DEFAULT_GUARD).unwrap();
        assert_eq!(got[&EdgeId(0)], Classification::HitAndMiss);
        assert_eq!(got[&EdgeId(2)], Classification::AlwaysHit);
    }

    #[test]
    fn guard_trips() {
        let p = parse_cfg("cache assoc=3 sets=1 linesize=1\nstart s top\nedge s t a\n").unwrap();
        assert_eq!(collecting_semantics(&p.graph, 3, 5).unwrap_err(), OracleError::GuardExceeded { limit: 5 });
    }

    #[test]
    fn focused_matches_abstraction_of_collecting() {
        let p =
            parse_cfg("cache assoc=2 sets=1 linesize=1\nstart s top\nedge s t a\nedge t u b\nedge u t c\nedge t w -\n")
                .unwrap();
        let coll = collecting_semantics(&p.graph, 2, DEFAULT_GUARD).unwrap();
        for a in p.graph.blocks() {
            let foc = focused_semantics(&p.graph, &a, 2, DEFAULT_GUARD).unwrap();
            assert_eq!(coll.focus(&a), foc.all_states());
        }
    }
}
