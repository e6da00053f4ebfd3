//! Brute-force references shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use lru_antichain::age::{age_fixpoint, Age};
use lru_antichain::cfg::{BlockId, CacheConfig, ControlFlowGraph, Program};
use lru_antichain::concrete::{
    classify_by_oracle, collecting_semantics, focused_semantics, Content, FocusedState, OracleError, DEFAULT_GUARD,
};
use lru_antichain::exact::{analyze_block, classify, MissSets, Mode, Options, WorklistOrder};
use lru_antichain::generators::{random_cfg, RandomCfgParams};
use lru_antichain::Classification;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Set = BTreeSet<u32>;
pub type Family = BTreeSet<Set>;

pub mod naive {
    use super::{Family, Set};

    pub fn minimal(f: &Family) -> Family {
        f.iter().filter(|s| !f.iter().any(|t| t != *s && t.is_subset(s))).cloned().collect()
    }

    pub fn maximal(f: &Family) -> Family {
        f.iter().filter(|s| !f.iter().any(|t| t != *s && t.is_superset(s))).cloned().collect()
    }

    pub fn union(a: &Family, b: &Family) -> Family {
        a.union(b).cloned().collect()
    }

    pub fn intersect(a: &Family, b: &Family) -> Family {
        a.intersection(b).cloned().collect()
    }

    pub fn difference(a: &Family, b: &Family) -> Family {
        a.difference(b).cloned().collect()
    }

    pub fn nosup(a: &Family, b: &Family) -> Family {
        a.iter().filter(|p| !b.iter().any(|q| q.is_subset(p))).cloned().collect()
    }

    pub fn nosub(a: &Family, b: &Family) -> Family {
        a.iter().filter(|p| !b.iter().any(|q| q.is_superset(p))).cloned().collect()
    }

    pub fn offset(a: &Family, v: u32) -> Family {
        a.iter().filter(|s| !s.contains(&v)).cloned().collect()
    }

    pub fn onset(a: &Family, v: u32) -> Family {
        a.iter().filter(|s| s.contains(&v)).map(|s| s.iter().copied().filter(|&x| x != v).collect()).collect()
    }

    pub fn insert(a: &Family, v: u32) -> Family {
        a.iter()
            .map(|s| {
                let mut s = s.clone();
                s.insert(v);
                s
            })
            .collect()
    }

    pub fn truncate(a: &Family, n: usize) -> Family {
        a.iter().filter(|s| s.len() <= n).cloned().collect()
    }

    pub fn has_size_at_least(a: &Family, n: usize) -> bool {
        a.iter().any(|s| s.len() >= n)
    }

    pub fn is_antichain(a: &Family) -> bool {
        minimal(a) == *a && maximal(a) == *a
    }

    pub fn contains(a: &Family, s: &Set) -> bool {
        a.contains(s)
    }
}

pub fn to_family(sets: Vec<Vec<u32>>) -> Family {
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Random family over `vars` variables with up to `max_members` members.
pub fn random_family<R: Rng>(rng: &mut R, vars: u32, max_members: usize) -> Family {
    let members = rng.gen_range(0..=max_members);
    let density = rng.gen_range(0.1..0.6);
    (0..members).map(|_| (0..vars).filter(|_| rng.gen_bool(density)).collect()).collect()
}

// ---------------------------------------------------------------------------
// Expected values for fixtures/age_imprecision.cfg at associativity 4.

pub const AGE_IMPRECISION: &str = include_str!("../../../../fixtures/age_imprecision.cfg");
pub const AGE_IMPRECISION_ASSOC: usize = 4;
pub const TABLE_BLOCKS: [&str; 4] = ["a", "b", "c", "d"];

pub struct TableRow {
    pub vertex: &'static str,
    pub states: &'static [&'static str],
    pub ages: [&'static str; 4],
    pub focused: [&'static [&'static str]; 4],
}

const A: &str = "𝒜";

/// Column `c` of row `s11` is `∅`: `c` is the block accessed on the way in.
pub const EXPECTED_ROWS: [TableRow; 12] = [
    TableRow {
        vertex: "s0", states: &["(ε,ε,ε,ε)"], ages: ["∞", "∞", "∞", "∞"], focused: [&[A], &[A], &[A], &[A]]
    },
    TableRow {
        vertex: "s1", states: &["(a,ε,ε,ε)"], ages: ["0", "∞", "∞", "∞"], focused: [&["∅"], &[A], &[A], &[A]]
    },
    TableRow {
        vertex: "s2",
        states: &["(c,a,ε,ε)"],
        ages: ["1", "∞", "0", "∞"],
        focused: [&["{c}"], &[A], &["∅"], &[A]],
    },
    TableRow {
        vertex: "s3",
        states: &["(b,c,a,ε)"],
        ages: ["2", "0", "1", "∞"],
        focused: [&["{b,c}"], &["∅"], &["{b}"], &[A]],
    },
    TableRow {
        vertex: "s4",
        states: &["(d,b,c,a)"],
        ages: ["3", "1", "2", "0"],
        focused: [&["{b,c,d}"], &["{d}"], &["{b,d}"], &["∅"]],
    },
    TableRow {
        vertex: "s5",
        states: &["(b,a,ε,ε)"],
        ages: ["1", "0", "∞", "∞"],
        focused: [&["{b}"], &["∅"], &[A], &[A]],
    },
    TableRow {
        vertex: "s6",
        states: &["(d,b,c,a)", "(b,a,ε,ε)"],
        ages: ["[1,3]", "[0,1]", "[2,∞]", "[0,∞]"],
        focused: [&["{b,c,d}", "{b}"], &["{d}", "∅"], &["{b,d}", A], &["∅", A]],
    },
    TableRow {
        vertex: "s7",
        states: &["(c,d,b,a)", "(c,b,a,ε)"],
        ages: ["[2,∞]", "[1,2]", "0", "[1,∞]"],
        focused: [&["{b,c,d}", "{b,c}"], &["{c,d}", "{c}"], &["∅"], &["{c}", A]],
    },
    TableRow {
        vertex: "s8",
        states: &["(a,c,d,b)", "(a,c,b,ε)"],
        ages: ["0", "[2,3]", "1", "[2,∞]"],
        focused: [&["∅"], &["{a,c,d}", "{a,c}"], &["{a}"], &["{a,c}", A]],
    },
    TableRow {
        vertex: "s9",
        states: &["(a,d,b,c)", "(a,b,ε,ε)"],
        ages: ["0", "[1,2]", "[2,∞]", "[1,∞]"],
        focused: [&["∅"], &["{a,d}", "{a}"], &["{a,b,d}", A], &["{a}", A]],
    },
    TableRow {
        vertex: "s10",
        states: &["(e,a,d,b)", "(e,a,b,ε)"],
        ages: ["1", "[2,3]", "[3,∞]", "[2,∞]"],
        focused: [&["{e}"], &["{a,d,e}", "{a,e}"], &[A], &["{a,e}", A]],
    },
    TableRow {
        vertex: "s11",
        states: &["(c,e,a,d)", "(c,e,a,b)"],
        ages: ["2", "[3,∞]", "0", "[3,∞]"],
        focused: [&["{c,e}"], &[A, "{a,c,e}"], &["∅"], &["{a,c,e}", A]],
    },
];

pub fn canonical(items: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = items.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

pub fn render_set<'a>(blocks: impl IntoIterator<Item = &'a BlockId>) -> String {
    let mut names: Vec<String> = blocks.into_iter().map(|b| b.to_string()).collect();
    names.sort();
    if names.is_empty() {
        "∅".into()
    } else {
        format!("{{{}}}", names.join(","))
    }
}

pub fn render_content(c: &Content) -> String {
    match c {
        Content::Block(b) => b.to_string(),
        Content::Filler(i) => format!("#{i}"),
    }
}

/// Parses `{b,c}` / `∅` back into block names; `None` for `𝒜`.
pub fn parse_focused(item: &str) -> Option<BTreeSet<BlockId>> {
    match item {
        "𝒜" => None,
        "∅" => Some(BTreeSet::new()),
        s => Some(s.trim_matches(|c| c == '{' || c == '}').split(',').map(BlockId::named).collect()),
    }
}

fn minimal_blocks(f: &BTreeSet<BTreeSet<BlockId>>) -> BTreeSet<BTreeSet<BlockId>> {
    f.iter().filter(|s| !f.iter().any(|t| t != *s && t.is_subset(s))).cloned().collect()
}

fn maximal_blocks(f: &BTreeSet<BTreeSet<BlockId>>) -> BTreeSet<BTreeSet<BlockId>> {
    f.iter().filter(|s| !f.iter().any(|t| t != *s && t.is_superset(s))).cloned().collect()
}

/// Expected exact-analysis values from an explicit focused family.
pub fn expected_antichains(focused: &[Option<BTreeSet<BlockId>>]) -> (BTreeSet<BTreeSet<BlockId>>, MissSets) {
    let present: BTreeSet<BTreeSet<BlockId>> = focused.iter().flatten().cloned().collect();
    let hit = minimal_blocks(&present);
    let miss = if focused.is_empty() {
        MissSets::Bottom
    } else if focused.iter().any(Option::is_none) {
        MissSets::Top
    } else {
        MissSets::Sets(maximal_blocks(&present))
    };
    (hit, miss)
}

/// Compares every cell of the table with the engines. Returns the list of mismatches.
pub fn check_worked_example() -> Vec<String> {
    let p = lru_antichain::cfg::parse_cfg(AGE_IMPRECISION).unwrap();
    let g = &p.graph;
    let n = AGE_IMPRECISION_ASSOC;
    let mut errors = Vec::new();
    let coll = collecting_semantics(g, n, DEFAULT_GUARD).unwrap();
    let ages = age_fixpoint(g, n);
    let blocks: Vec<BlockId> = TABLE_BLOCKS.iter().map(|b| BlockId::named(b)).collect();
    let exact: Vec<_> = blocks.iter().map(|b| analyze_block(g, b, n, WorklistOrder::Fifo, None).unwrap()).collect();
    let focused: Vec<_> = blocks.iter().map(|b| focused_semantics(g, b, n, DEFAULT_GUARD).unwrap()).collect();

    for row in &EXPECTED_ROWS {
        let v = g.vertex_by_name(row.vertex).unwrap();
        let states: Vec<String> = coll
            .states_resolved(v)
            .iter()
            .map(|s| {
                let mut cells: Vec<String> = s.iter().map(render_content).collect();
                cells.resize(n, "ε".into());
                format!("({})", cells.join(","))
            })
            .collect();
        let mut states = states;
        states.sort();
        if states != canonical(row.states) {
            errors.push(format!("{}: states {:?} != {:?}", row.vertex, states, row.states));
        }
        let age_state = ages.states[v.index()].as_ref().unwrap();
        for (i, b) in blocks.iter().enumerate() {
            let got = age_state.get(b).to_string();
            if got != row.ages[i] {
                errors.push(format!("{}: age of {b} is {got}, expected {}", row.vertex, row.ages[i]));
            }
            let foc = &focused[i];
            let got: Vec<String> = foc
                .states(v)
                .iter()
                .map(|s| match s {
                    FocusedState::Absent => "𝒜".to_string(),
                    FocusedState::Younger(y) => {
                        render_set(y.iter().map(|&x| foc.universe().block(x).expect("no fillers under ∅")))
                    }
                })
                .collect();
            let mut got = got;
            got.sort();
            if got != canonical(row.focused[i]) {
                errors.push(format!("{}: focused {b} is {got:?}, expected {:?}", row.vertex, row.focused[i]));
            }
            let parsed: Vec<Option<BTreeSet<BlockId>>> = row.focused[i].iter().map(|s| parse_focused(s)).collect();
            let (hit, miss) = expected_antichains(&parsed);
            if exact[i].hit_sets(v) != hit {
                errors.push(format!("{}: may-hit antichain of {b} is {:?}", row.vertex, exact[i].hit_sets(v)));
            }
            if exact[i].miss_sets(v) != miss {
                errors.push(format!("{}: may-miss value of {b} is {:?}", row.vertex, exact[i].miss_sets(v)));
            }
        }
    }
    errors
}

// ---------------------------------------------------------------------------
// Random programs and differential checks.

pub struct Case {
    pub seed: u64,
    pub program: Program,
}

/// Small single-set program derived deterministically from `seed`.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_cafe);
    let params = RandomCfgParams {
        vertices: rng.gen_range(1..=12),
        blocks: rng.gen_range(1..=6),
        edge_density: rng.gen_range(0.03..0.25),
        top_bias: 0.5,
        starts: rng.gen_range(1..=2),
    };
    let assoc = [1, 2, 4][rng.gen_range(0..3)];
    let graph = random_cfg(&params, seed);
    Case { seed, program: Program { config: CacheConfig::single_set(assoc), graph } }
}

fn verdicts(p: &Program, mode: Mode, order: WorklistOrder) -> BTreeMap<u32, Classification> {
    let opts = Options { mode, order, jobs: 1, ..Default::default() };
    classify(p, &opts).unwrap().edges.into_iter().map(|(id, e)| (id.0, e.classification)).collect()
}

/// Exact classification in both pipeline modes equals the oracle.
pub fn check_exact_vs_oracle(p: &Program) -> Result<(), String> {
    let oracle: BTreeMap<u32, Classification> = match classify_by_oracle(p, DEFAULT_GUARD) {
        Ok(m) => m.into_iter().map(|(id, c)| (id.0, c)).collect(),
        Err(OracleError::GuardExceeded { .. }) => return Err("oracle guard exceeded".into()),
    };
    for mode in [Mode::Zdd, Mode::AgePlusZdd] {
        let got = verdicts(p, mode, WorklistOrder::Fifo);
        if got != oracle {
            return Err(format!("{mode}: {got:?} != oracle {oracle:?}"));
        }
    }
    Ok(())
}

/// Per-vertex antichains equal the minimal/maximal elements of the focused semantics.
pub fn check_focused_agreement(p: &Program) -> Result<(), String> {
    let g = p.graph.prune_unreachable();
    let n = p.config.associativity;
    for a in g.blocks() {
        let foc = focused_semantics(&g, &a, n, DEFAULT_GUARD).map_err(|e| e.to_string())?;
        let exact = analyze_block(&g, &a, n, WorklistOrder::Fifo, None).unwrap();
        for v in g.vertices() {
            let mut fam = Vec::new();
            for s in foc.states(v) {
                fam.push(match s {
                    FocusedState::Absent => None,
                    FocusedState::Younger(y) => {
                        let mut blocks = BTreeSet::new();
                        for &x in y {
                            match foc.universe().block(x) {
                                Some(b) => {
                                    blocks.insert(b.clone());
                                }
                                // Filler blocks stand for "anything else"; they
                                // may only occur in non-extremal sets.
                                None => {
                                    blocks.insert(BlockId::named(&format!("#filler{x}")));
                                }
                            }
                        }
                        Some(blocks)
                    }
                });
            }
            let (hit, miss) = expected_antichains(&fam);
            if exact.hit_sets(v) != hit {
                return Err(format!("block {a} vertex {}: hit {:?} != {:?}", g.vertex_name(v), exact.hit_sets(v), hit));
            }
            if exact.miss_sets(v) != miss {
                return Err(format!(
                    "block {a} vertex {}: miss {:?} != {:?}",
                    g.vertex_name(v),
                    exact.miss_sets(v),
                    miss
                ));
            }
        }
    }
    Ok(())
}

/// Age intervals contain every concrete age and age verdicts never contradict the oracle.
pub fn check_age_soundness(p: &Program) -> Result<(), String> {
    let g = &p.graph;
    let n = p.config.associativity;
    let coll = collecting_semantics(g, n, DEFAULT_GUARD).map_err(|e| e.to_string())?;
    let fix = age_fixpoint(g, n);
    for v in g.vertices() {
        if coll.states(v).is_empty() {
            continue;
        }
        let Some(st) = &fix.states[v.index()] else {
            return Err(format!("vertex {} reached concretely but not by the age analysis", g.vertex_name(v)));
        };
        for b in g.blocks() {
            let x = coll.universe().index_of(&b).unwrap();
            let interval = st.get(&b);
            for age in coll.ages(v, x) {
                let age = age.map(|a| Age::finite(a as u32)).unwrap_or(Age::INFINITE);
                if !interval.contains(age) {
                    return Err(format!("vertex {}: age {age} of {b} outside {interval}", g.vertex_name(v)));
                }
            }
        }
    }
    let oracle = classify_by_oracle(p, DEFAULT_GUARD).map_err(|e| e.to_string())?;
    for (id, c) in fix.classify(g) {
        let exact = oracle[&id];
        if !c.is_consistent_with(exact) {
            return Err(format!("edge {id}: age says {c}, oracle says {exact}"));
        }
    }
    Ok(())
}

/// FIFO and LIFO worklists reach the same fixpoint and the same report.
pub fn check_order_independence(p: &Program) -> Result<(), String> {
    let g = p.graph.prune_unreachable();
    let n = p.config.associativity;
    for a in g.blocks() {
        let x = analyze_block(&g, &a, n, WorklistOrder::Fifo, None).unwrap();
        let y = analyze_block(&g, &a, n, WorklistOrder::Lifo, None).unwrap();
        for v in g.vertices() {
            if x.hit_sets(v) != y.hit_sets(v) || x.miss_sets(v) != y.miss_sets(v) {
                return Err(format!("block {a} vertex {}: fixpoints differ", g.vertex_name(v)));
            }
        }
        if x.verdicts() != y.verdicts() {
            return Err(format!("block {a}: verdicts differ"));
        }
    }
    for mode in [Mode::Zdd, Mode::AgePlusZdd] {
        if verdicts(p, mode, WorklistOrder::Fifo) != verdicts(p, mode, WorklistOrder::Lifo) {
            return Err(format!("{mode}: reports differ"));
        }
    }
    Ok(())
}

pub fn graph_is_reachable(g: &ControlFlowGraph) -> bool {
    g.reachable().iter().all(|&r| r)
}
