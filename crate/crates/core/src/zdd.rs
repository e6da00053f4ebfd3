//! Zero-suppressed decision diagrams for families of finite sets, with the
//! antichain operations needed by the exact cache analyses.
//!
//! A node `(v, hi, lo)` denotes `lo ∪ { s ∪ {v} | s ∈ hi }`. Nodes are
//! hash-consed, so two handles from the same manager are equal iff they
//! denote the same family. Variables closer to the root are smaller.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU32, Ordering};

use rustc_hash::FxHashMap;

/// Variable index inside one manager.
pub type Var = u32;

const BOTTOM: u32 = 0;
const UNIT: u32 = 1;
const TERMINAL_VAR: Var = Var::MAX;

static NEXT_MANAGER: AtomicU32 = AtomicU32::new(0);

/// Handle to a family stored in a [`Manager`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Zdd {
    manager: u32,
    node: u32,
}

impl Zdd {
    pub fn is_bottom(self) -> bool {
        self.node == BOTTOM
    }

    pub fn is_unit(self) -> bool {
        self.node == UNIT
    }

    /// Raw node index; stable for the lifetime of the manager.
    pub fn node_index(self) -> u32 {
        self.node
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    var: Var,
    hi: u32,
    lo: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Union,
    Intersect,
    Diff,
    Offset,
    Onset,
    Insert,
    Minimal,
    Maximal,
    NoSup,
    NoSub,
    Truncate,
    HasSize,
}

/// Default bound on the number of memoised operation results.
pub const DEFAULT_MEMO_CAPACITY: usize = 1 << 20;

/// Owner of the node store, unique table and operation memo.
pub struct Manager {
    id: u32,
    nodes: Vec<Node>,
    unique: FxHashMap<(Var, u32, u32), u32>,
    memo: FxHashMap<(Op, u32, u32, u32), u32>,
    memo_capacity: usize,
}

impl Default for Manager {
    fn default() -> Self {
        Self::new()
    }
}

impl Manager {
    pub fn new() -> Self {
        Self::with_memo_capacity(DEFAULT_MEMO_CAPACITY)
    }

    /// A capacity of zero disables memoisation; the table is flushed whenever it fills up.
    pub fn with_memo_capacity(memo_capacity: usize) -> Self {
        let terminal = Node { var: TERMINAL_VAR, hi: 0, lo: 0 };
        Manager {
            id: NEXT_MANAGER.fetch_add(1, Ordering::Relaxed),
            nodes: vec![terminal, terminal],
            unique: FxHashMap::default(),
            memo: FxHashMap::default(),
            memo_capacity,
        }
    }

    /// Number of nodes allocated so far, terminals included.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    fn wrap(&self, node: u32) -> Zdd {
        Zdd { manager: self.id, node }
    }

    #[inline]
    fn own(&self, z: Zdd) -> u32 {
        assert_eq!(z.manager, self.id, "ZDD handle used with a foreign manager");
        z.node
    }

    /// The empty family `∅`.
    pub fn bottom(&self) -> Zdd {
        self.wrap(BOTTOM)
    }

    /// The family `{∅}`.
    pub fn unit(&self) -> Zdd {
        self.wrap(UNIT)
    }

    /// The family `{{v}}`.
    pub fn singleton(&mut self, v: Var) -> Zdd {
        let n = self.mk(v, UNIT, BOTTOM);
        self.wrap(n)
    }

    /// The family `{s}` for one set `s`.
    pub fn set(&mut self, vars: &[Var]) -> Zdd {
        let mut sorted: Vec<Var> = vars.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut n = UNIT;
        for &v in sorted.iter().rev() {
            n = self.mk(v, n, BOTTOM);
        }
        self.wrap(n)
    }

    pub fn from_sets<I, S>(&mut self, sets: I) -> Zdd
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[Var]>,
    {
        let mut acc = self.bottom();
        for s in sets {
            let one = self.set(s.as_ref());
            acc = self.union(acc, one);
        }
        acc
    }

    fn mk(&mut self, var: Var, hi: u32, lo: u32) -> u32 {
        if hi == BOTTOM {
            return lo;
        }
        debug_assert!(var < self.top(hi) && var < self.top(lo));
        if let Some(&n) = self.unique.get(&(var, hi, lo)) {
            return n;
        }
        let n = self.nodes.len() as u32;
        self.nodes.push(Node { var, hi, lo });
        self.unique.insert((var, hi, lo), n);
        n
    }

    #[inline]
    fn top(&self, n: u32) -> Var {
        self.nodes[n as usize].var
    }

    #[inline]
    fn node(&self, n: u32) -> Node {
        self.nodes[n as usize]
    }

    #[inline]
    fn lookup(&self, op: Op, a: u32, b: u32, n: u32) -> Option<u32> {
        if self.memo_capacity == 0 {
            return None;
        }
        self.memo.get(&(op, a, b, n)).copied()
    }

    #[inline]
    fn remember(&mut self, op: Op, a: u32, b: u32, n: u32, result: u32) -> u32 {
        if self.memo_capacity != 0 {
            if self.memo.len() >= self.memo_capacity {
                self.memo.clear();
            }
            self.memo.insert((op, a, b, n), result);
        }
        result
    }

    pub fn union(&mut self, a: Zdd, b: Zdd) -> Zdd {
        let (a, b) = (self.own(a), self.own(b));
        let r = self.union_rec(a, b);
        self.wrap(r)
    }

    fn union_rec(&mut self, p: u32, q: u32) -> u32 {
        if p == BOTTOM || p == q {
            return q;
        }
        if q == BOTTOM {
            return p;
        }
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        if let Some(r) = self.lookup(Op::Union, p, q, 0) {
            return r;
        }
        let (np, nq) = (self.node(p), self.node(q));
        let r = if np.var < nq.var {
            let lo = self.union_rec(np.lo, q);
            self.mk(np.var, np.hi, lo)
        } else if nq.var < np.var {
            let lo = self.union_rec(p, nq.lo);
            self.mk(nq.var, nq.hi, lo)
        } else {
            let hi = self.union_rec(np.hi, nq.hi);
            let lo = self.union_rec(np.lo, nq.lo);
            self.mk(np.var, hi, lo)
        };
        self.remember(Op::Union, p, q, 0, r)
    }

    pub fn intersect(&mut self, a: Zdd, b: Zdd) -> Zdd {
        let (a, b) = (self.own(a), self.own(b));
        let r = self.intersect_rec(a, b);
        self.wrap(r)
    }

    fn intersect_rec(&mut self, p: u32, q: u32) -> u32 {
        if p == BOTTOM || q == BOTTOM {
            return BOTTOM;
        }
        if p == q {
            return p;
        }
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        if let Some(r) = self.lookup(Op::Intersect, p, q, 0) {
            return r;
        }
        let (np, nq) = (self.node(p), self.node(q));
        let r = if np.var < nq.var {
            self.intersect_rec(np.lo, q)
        } else if nq.var < np.var {
            self.intersect_rec(p, nq.lo)
        } else {
            let hi = self.intersect_rec(np.hi, nq.hi);
            let lo = self.intersect_rec(np.lo, nq.lo);
            self.mk(np.var, hi, lo)
        };
        self.remember(Op::Intersect, p, q, 0, r)
    }

    /// Sets of `a` that are not in `b`.
    pub fn difference(&mut self, a: Zdd, b: Zdd) -> Zdd {
        let (a, b) = (self.own(a), self.own(b));
        let r = self.diff_rec(a, b);
        self.wrap(r)
    }

    fn diff_rec(&mut self, p: u32, q: u32) -> u32 {
        if p == BOTTOM || p == q {
            return BOTTOM;
        }
        if q == BOTTOM {
            return p;
        }
        if let Some(r) = self.lookup(Op::Diff, p, q, 0) {
            return r;
        }
        let (np, nq) = (self.node(p), self.node(q));
        let r = if np.var < nq.var {
            let lo = self.diff_rec(np.lo, q);
            self.mk(np.var, np.hi, lo)
        } else if nq.var < np.var {
            self.diff_rec(p, nq.lo)
        } else {
            let hi = self.diff_rec(np.hi, nq.hi);
            let lo = self.diff_rec(np.lo, nq.lo);
            self.mk(np.var, hi, lo)
        };
        self.remember(Op::Diff, p, q, 0, r)
    }

    /// Sets not containing `v`.
    pub fn offset(&mut self, a: Zdd, v: Var) -> Zdd {
        let a = self.own(a);
        let r = self.offset_rec(a, v);
        self.wrap(r)
    }

    fn offset_rec(&mut self, p: u32, v: Var) -> u32 {
        let np = self.node(p);
        if np.var > v {
            return p;
        }
        if np.var == v {
            return np.lo;
        }
        if let Some(r) = self.lookup(Op::Offset, p, v, 0) {
            return r;
        }
        let hi = self.offset_rec(np.hi, v);
        let lo = self.offset_rec(np.lo, v);
        let r = self.mk(np.var, hi, lo);
        self.remember(Op::Offset, p, v, 0, r)
    }

    /// Sets containing `v`, with `v` removed.
    pub fn onset(&mut self, a: Zdd, v: Var) -> Zdd {
        let a = self.own(a);
        let r = self.onset_rec(a, v);
        self.wrap(r)
    }

    fn onset_rec(&mut self, p: u32, v: Var) -> u32 {
        let np = self.node(p);
        if np.var > v {
            return BOTTOM;
        }
        if np.var == v {
            return np.hi;
        }
        if let Some(r) = self.lookup(Op::Onset, p, v, 0) {
            return r;
        }
        let hi = self.onset_rec(np.hi, v);
        let lo = self.onset_rec(np.lo, v);
        let r = self.mk(np.var, hi, lo);
        self.remember(Op::Onset, p, v, 0, r)
    }

    /// `{ s ∪ {v} | s ∈ a }`.
    pub fn insert(&mut self, a: Zdd, v: Var) -> Zdd {
        let a = self.own(a);
        let r = self.insert_rec(a, v);
        self.wrap(r)
    }

    fn insert_rec(&mut self, p: u32, v: Var) -> u32 {
        if p == BOTTOM {
            return BOTTOM;
        }
        let np = self.node(p);
        if np.var > v {
            return self.mk(v, p, BOTTOM);
        }
        if let Some(r) = self.lookup(Op::Insert, p, v, 0) {
            return r;
        }
        let r = if np.var == v {
            let both = self.union_rec(np.hi, np.lo);
            self.mk(v, both, BOTTOM)
        } else {
            let hi = self.insert_rec(np.hi, v);
            let lo = self.insert_rec(np.lo, v);
            self.mk(np.var, hi, lo)
        };
        self.remember(Op::Insert, p, v, 0, r)
    }

    /// Inclusion-minimal sets of `a`.
    pub fn minimal(&mut self, a: Zdd) -> Zdd {
        let a = self.own(a);
        let r = self.minimal_rec(a);
        self.wrap(r)
    }

    fn minimal_rec(&mut self, p: u32) -> u32 {
        if p <= UNIT {
            return p;
        }
        if let Some(r) = self.lookup(Op::Minimal, p, 0, 0) {
            return r;
        }
        let np = self.node(p);
        let lo = self.minimal_rec(np.lo);
        let hi = self.minimal_rec(np.hi);
        let hi = self.nosup_rec(hi, lo);
        let r = self.mk(np.var, hi, lo);
        self.remember(Op::Minimal, p, 0, 0, r)
    }

    /// Inclusion-maximal sets of `a`.
    pub fn maximal(&mut self, a: Zdd) -> Zdd {
        let a = self.own(a);
        let r = self.maximal_rec(a);
        self.wrap(r)
    }

    fn maximal_rec(&mut self, p: u32) -> u32 {
        if p <= UNIT {
            return p;
        }
        if let Some(r) = self.lookup(Op::Maximal, p, 0, 0) {
            return r;
        }
        let np = self.node(p);
        let hi = self.maximal_rec(np.hi);
        let lo = self.maximal_rec(np.lo);
        let lo = self.nosub_rec(lo, hi);
        let r = self.mk(np.var, hi, lo);
        self.remember(Op::Maximal, p, 0, 0, r)
    }

    /// Sets of `a` that include no set of `b`.
    pub fn nosup(&mut self, a: Zdd, b: Zdd) -> Zdd {
        let (a, b) = (self.own(a), self.own(b));
        let r = self.nosup_rec(a, b);
        self.wrap(r)
    }

    fn nosup_rec(&mut self, p: u32, q: u32) -> u32 {
        if q == BOTTOM {
            return p;
        }
        if p == BOTTOM || q == UNIT || p == q {
            return BOTTOM;
        }
        if let Some(r) = self.lookup(Op::NoSup, p, q, 0) {
            return r;
        }
        let (np, nq) = (self.node(p), self.node(q));
        let r = if np.var == nq.var {
            let t = self.nosup_rec(np.hi, nq.hi);
            let hi = self.nosup_rec(t, nq.lo);
            let lo = self.nosup_rec(np.lo, nq.lo);
            self.mk(np.var, hi, lo)
        } else if np.var < nq.var {
            let hi = self.nosup_rec(np.hi, q);
            let lo = self.nosup_rec(np.lo, q);
            self.mk(np.var, hi, lo)
        } else {
            self.nosup_rec(p, nq.lo)
        };
        self.remember(Op::NoSup, p, q, 0, r)
    }

    /// Sets of `a` that are included in no set of `b`.
    pub fn nosub(&mut self, a: Zdd, b: Zdd) -> Zdd {
        let (a, b) = (self.own(a), self.own(b));
        let r = self.nosub_rec(a, b);
        self.wrap(r)
    }

    fn nosub_rec(&mut self, p: u32, q: u32) -> u32 {
        if q == BOTTOM {
            return p;
        }
        if p == BOTTOM || p == UNIT || p == q {
            return BOTTOM;
        }
        if let Some(r) = self.lookup(Op::NoSub, p, q, 0) {
            return r;
        }
        let (np, nq) = (self.node(p), self.node(q));
        let r = if np.var == nq.var {
            let hi = self.nosub_rec(np.hi, nq.hi);
            let t = self.nosub_rec(np.lo, nq.lo);
            let lo = self.nosub_rec(t, nq.hi);
            self.mk(np.var, hi, lo)
        } else if np.var < nq.var {
            let lo = self.nosub_rec(np.lo, q);
            self.mk(np.var, np.hi, lo)
        } else {
            let t = self.nosub_rec(p, nq.lo);
            self.nosub_rec(t, nq.hi)
        };
        self.remember(Op::NoSub, p, q, 0, r)
    }

    /// Minimal sets of `a ∪ b`, for antichains `a` and `b`.
    pub fn min_union(&mut self, a: Zdd, b: Zdd) -> Zdd {
        let (p, q) = (self.own(a), self.own(b));
        let q2 = self.nosup_rec(q, p);
        let p2 = self.nosup_rec(p, q2);
        let r = self.union_rec(p2, q2);
        self.wrap(r)
    }

    /// Maximal sets of `a ∪ b`, for antichains `a` and `b`.
    pub fn max_union(&mut self, a: Zdd, b: Zdd) -> Zdd {
        let (p, q) = (self.own(a), self.own(b));
        let q2 = self.nosub_rec(q, p);
        let p2 = self.nosub_rec(p, q2);
        let r = self.union_rec(p2, q2);
        self.wrap(r)
    }

    fn strip(&mut self, p: u32, v: Var) -> u32 {
        let off = self.offset_rec(p, v);
        let on = self.onset_rec(p, v);
        self.union_rec(off, on)
    }

    /// Minimal sets of `{ s ∪ {v} | s ∈ a }`.
    pub fn add_element_min(&mut self, a: Zdd, v: Var) -> Zdd {
        let p = self.own(a);
        let s = self.strip(p, v);
        let m = self.minimal_rec(s);
        let r = self.insert_rec(m, v);
        self.wrap(r)
    }

    /// Maximal sets of `{ s ∪ {v} | s ∈ a }`.
    pub fn add_element_max(&mut self, a: Zdd, v: Var) -> Zdd {
        let p = self.own(a);
        let s = self.strip(p, v);
        let m = self.maximal_rec(s);
        let r = self.insert_rec(m, v);
        self.wrap(r)
    }

    /// Sets of `a` with at most `n` elements.
    pub fn truncate(&mut self, a: Zdd, n: u32) -> Zdd {
        let p = self.own(a);
        let r = self.truncate_rec(p, n);
        self.wrap(r)
    }

    fn truncate_rec(&mut self, p: u32, n: u32) -> u32 {
        if p <= UNIT {
            return p;
        }
        if let Some(r) = self.lookup(Op::Truncate, p, 0, n) {
            return r;
        }
        let np = self.node(p);
        let r = if n == 0 {
            self.truncate_rec(np.lo, 0)
        } else {
            let hi = self.truncate_rec(np.hi, n - 1);
            let lo = self.truncate_rec(np.lo, n);
            self.mk(np.var, hi, lo)
        };
        self.remember(Op::Truncate, p, 0, n, r)
    }

    /// Whether `a` contains a set with at least `n` elements.
    pub fn has_set_of_size_at_least(&mut self, a: Zdd, n: u32) -> bool {
        let p = self.own(a);
        self.has_size_rec(p, n)
    }

    fn has_size_rec(&mut self, p: u32, n: u32) -> bool {
        if n == 0 {
            return p != BOTTOM;
        }
        if p <= UNIT {
            return false;
        }
        if let Some(r) = self.lookup(Op::HasSize, p, 0, n) {
            return r != 0;
        }
        let np = self.node(p);
        let r = self.has_size_rec(np.hi, n - 1) || self.has_size_rec(np.lo, n);
        self.remember(Op::HasSize, p, 0, n, r as u32);
        r
    }

    pub fn contains_empty(&self, a: Zdd) -> bool {
        let mut p = self.own(a);
        while p > UNIT {
            p = self.node(p).lo;
        }
        p == UNIT
    }

    pub fn contains(&self, a: Zdd, set: &[Var]) -> bool {
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut p = self.own(a);
        let mut i = 0;
        while p > UNIT {
            let np = self.node(p);
            match sorted.get(i) {
                Some(&v) if v == np.var => {
                    p = np.hi;
                    i += 1;
                }
                Some(&v) if v < np.var => return false,
                _ => p = np.lo,
            }
        }
        p == UNIT && i == sorted.len()
    }

    /// Number of sets in the family.
    pub fn count(&self, a: Zdd) -> u128 {
        let p = self.own(a);
        let mut memo = FxHashMap::default();
        self.count_rec(p, &mut memo)
    }

    fn count_rec(&self, p: u32, memo: &mut FxHashMap<u32, u128>) -> u128 {
        if p <= UNIT {
            return p as u128;
        }
        if let Some(&c) = memo.get(&p) {
            return c;
        }
        let np = self.node(p);
        let c = self.count_rec(np.hi, memo).saturating_add(self.count_rec(np.lo, memo));
        memo.insert(p, c);
        c
    }

    /// Number of distinct internal nodes reachable from `a`.
    pub fn size(&self, a: Zdd) -> usize {
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.own(a)];
        while let Some(p) = stack.pop() {
            if p > UNIT && seen.insert(p) {
                let np = self.node(p);
                stack.push(np.hi);
                stack.push(np.lo);
            }
        }
        seen.len()
    }

    /// At most `cap` sets of the family, each sorted ascending.
    pub fn enumerate(&self, a: Zdd, cap: usize) -> Vec<Vec<Var>> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.enumerate_rec(self.own(a), &mut prefix, &mut out, cap);
        out
    }

    fn enumerate_rec(&self, p: u32, prefix: &mut Vec<Var>, out: &mut Vec<Vec<Var>>, cap: usize) {
        if out.len() >= cap || p == BOTTOM {
            return;
        }
        if p == UNIT {
            out.push(prefix.clone());
            return;
        }
        let np = self.node(p);
        self.enumerate_rec(np.lo, prefix, out, cap);
        prefix.push(np.var);
        self.enumerate_rec(np.hi, prefix, out, cap);
        prefix.pop();
    }

    /// One line per reachable node: `id: var then else`.
    pub fn dump(&self, a: Zdd) -> String {
        let root = self.own(a);
        let mut out = String::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![root];
        writeln!(out, "root {root}").unwrap();
        while let Some(p) = stack.pop() {
            if p <= UNIT || !seen.insert(p) {
                continue;
            }
            let np = self.node(p);
            writeln!(out, "{p}: v{} then={} else={}", np.var, np.hi, np.lo).unwrap();
            stack.push(np.lo);
            stack.push(np.hi);
        }
        out
    }
}
