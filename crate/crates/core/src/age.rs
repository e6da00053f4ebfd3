//! Age-interval analysis: every block gets a range of possible LRU ages.
//!
//! This is the classic must/may cache analysis in interval form. It is
//! sound but may answer [`Classification::Unknown`]; the exact analyses
//! only need to look at blocks it leaves undecided.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::cfg::{BlockId, ControlFlowGraph, EdgeId, Label, StartKind};
use crate::Classification;

/// An age in `0..N` or `∞` (not cached).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Age(u32);

impl Age {
    pub const INFINITE: Age = Age(u32::MAX);

    pub fn finite(v: u32) -> Age {
        assert!(v != u32::MAX);
        Age(v)
    }

    pub fn is_infinite(self) -> bool {
        self == Age::INFINITE
    }

    pub fn value(self) -> Option<u32> {
        (!self.is_infinite()).then_some(self.0)
    }

    /// `self + 1`, saturating to `∞` past the oldest line.
    fn succ(self, assoc: usize) -> Age {
        if self.is_infinite() || self.0 as usize + 1 >= assoc {
            Age::INFINITE
        } else {
            Age(self.0 + 1)
        }
    }

    /// `self - 1`, with `∞ - 1 = ∞`.
    fn pred(self) -> Age {
        if self.is_infinite() {
            self
        } else {
            Age(self.0.saturating_sub(1))
        }
    }
}

impl fmt::Display for Age {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("∞"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Age,
    pub hi: Age,
}

impl Interval {
    pub const ABSENT: Interval = Interval { lo: Age::INFINITE, hi: Age::INFINITE };

    pub fn new(lo: Age, hi: Age) -> Self {
        assert!(lo <= hi, "empty age interval");
        Interval { lo, hi }
    }

    pub fn point(a: Age) -> Self {
        Interval { lo: a, hi: a }
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn contains(self, a: Age) -> bool {
        self.lo <= a && a <= self.hi
    }
}

/// Renders `[lo,hi]`, or a single age when both bounds agree.
impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

/// Age intervals of all blocks that may be cached; other blocks are `[∞,∞]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AgeState {
    ages: BTreeMap<BlockId, Interval>,
}

impl AgeState {
    pub fn empty_cache() -> Self {
        AgeState::default()
    }

    /// Every block in `blocks` may have any age or be absent.
    pub fn unknown_cache<'a>(blocks: impl IntoIterator<Item = &'a BlockId>) -> Self {
        let full = Interval { lo: Age(0), hi: Age::INFINITE };
        AgeState { ages: blocks.into_iter().map(|b| (b.clone(), full)).collect() }
    }

    pub fn get(&self, b: &BlockId) -> Interval {
        self.ages.get(b).copied().unwrap_or(Interval::ABSENT)
    }

    pub fn set(&mut self, b: BlockId, i: Interval) {
        if i == Interval::ABSENT {
            self.ages.remove(&b);
        } else {
            self.ages.insert(b, i);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BlockId, &Interval)> {
        self.ages.iter()
    }

    /// Effect of an access to `b` with associativity `assoc`.
    pub fn update(&self, b: &BlockId, assoc: usize) -> AgeState {
        let ib = self.get(b);
        let mut next = AgeState::default();
        for (x, &ix) in &self.ages {
            if x == b {
                continue;
            }
            let younger = ix.lo < ib.hi;
            let older = ix.hi > ib.lo;
            let young = Interval { lo: ix.lo.succ(assoc), hi: ix.hi.min(ib.hi.pred()).succ(assoc) };
            let old = Interval { lo: ix.lo.max(ib.lo.succ(assoc)), hi: ix.hi };
            let r = match (younger, older) {
                (true, true) => young.hull(old),
                (true, false) => young,
                (false, true) => old,
                (false, false) => ix,
            };
            next.set(x.clone(), r);
        }
        next.set(b.clone(), Interval::point(Age(0)));
        next
    }

    pub fn join(&self, other: &AgeState) -> AgeState {
        let mut out = self.clone();
        for (b, &i) in &other.ages {
            let j = self.get(b).hull(i);
            out.ages.insert(b.clone(), j);
        }
        for (b, i) in out.ages.iter_mut() {
            if !other.ages.contains_key(b) {
                *i = i.hull(Interval::ABSENT);
            }
        }
        out
    }

    pub fn classify(&self, a: &BlockId) -> Classification {
        let i = self.get(a);
        if !i.hi.is_infinite() {
            Classification::AlwaysHit
        } else if i.lo.is_infinite() {
            Classification::AlwaysMiss
        } else {
            Classification::Unknown
        }
    }
}

fn transfer(s: &AgeState, label: &Label, assoc: usize) -> AgeState {
    match label {
        Label::Epsilon => s.clone(),
        Label::Access(b) => s.update(b, assoc),
    }
}

/// Age states per vertex; `None` for vertices no start reaches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgeFixpoint {
    pub states: Vec<Option<AgeState>>,
}

/// Least fixpoint of the age analysis on a single-set graph.
pub fn age_fixpoint(g: &ControlFlowGraph, assoc: usize) -> AgeFixpoint {
    let blocks = g.blocks();
    let mut states: Vec<Option<AgeState>> = vec![None; g.num_vertices()];
    let mut queue = VecDeque::new();
    let mut queued = vec![false; g.num_vertices()];
    for (&v, &kind) in g.starts() {
        states[v.index()] = Some(match kind {
            StartKind::EmptyCache => AgeState::empty_cache(),
            StartKind::TopCache => AgeState::unknown_cache(&blocks),
        });
        queue.push_back(v);
        queued[v.index()] = true;
    }
    while let Some(v) = queue.pop_front() {
        queued[v.index()] = false;
        let Some(s) = states[v.index()].clone() else { continue };
        for e in g.out_edges(v) {
            let t = transfer(&s, &e.label, assoc);
            let slot = &mut states[e.dst.index()];
            let joined = match slot {
                None => t,
                Some(old) => old.join(&t),
            };
            if slot.as_ref() != Some(&joined) {
                *slot = Some(joined);
                if !queued[e.dst.index()] {
                    queued[e.dst.index()] = true;
                    queue.push_back(e.dst);
                }
            }
        }
    }
    AgeFixpoint { states }
}

impl AgeFixpoint {
    /// Verdict for every reachable access edge.
    pub fn classify(&self, g: &ControlFlowGraph) -> BTreeMap<EdgeId, Classification> {
        g.edges()
            .iter()
            .filter_map(|e| {
                let a = e.label.block()?;
                let s = self.states[e.src.index()].as_ref()?;
                Some((e.id, s.classify(a)))
            })
            .collect()
    }
}
