//! Machine-readable analysis reports (JSON and CSV).

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use lru_antichain::exact::AnalysisReport;
use lru_antichain::{BlockId, Classification, EdgeId, Program};
use serde::{Deserialize, Serialize};

/// Column order of the CSV rendering.
pub const CSV_COLUMNS: [&str; 8] = ["edge_id", "src", "dst", "block", "set", "classification", "by_age", "by_exact"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub associativity: usize,
    pub num_sets: usize,
    pub line_size: u64,
    /// `age`, `zdd`, `age+zdd` or `oracle`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub edge_id: u32,
    pub src: String,
    pub dst: String,
    pub block: String,
    pub set: usize,
    #[serde(with = "class")]
    pub classification: Classification,
    #[serde(default, with = "opt_class", skip_serializing_if = "Option::is_none")]
    pub by_age: Option<Classification>,
    #[serde(default, with = "opt_class", skip_serializing_if = "Option::is_none")]
    pub by_exact: Option<Classification>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub always_hit: usize,
    pub always_miss: usize,
    pub hit_and_miss: usize,
    pub unknown: usize,
}

impl Summary {
    pub fn tally<'a>(classes: impl IntoIterator<Item = &'a Classification>) -> Summary {
        let mut s = Summary::default();
        for c in classes {
            match c {
                Classification::AlwaysHit => s.always_hit += 1,
                Classification::AlwaysMiss => s.always_miss += 1,
                Classification::HitAndMiss => s.hit_and_miss += 1,
                Classification::Unknown => s.unknown += 1,
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub parse: f64,
    pub age: f64,
    pub exact: f64,
    pub oracle: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ConfigEcho,
    /// Classified access edges in increasing id order.
    pub edges: Vec<EdgeRecord>,
    /// Access edges that no start vertex reaches.
    pub unreachable: Vec<u32>,
    pub summary: Summary,
    pub timings_ms: Timings,
}

fn record(program: &Program, id: EdgeId, block: &BlockId, classification: Classification) -> EdgeRecord {
    let g = &program.graph;
    let e = g.edge(id).expect("report edge exists in the graph");
    EdgeRecord {
        edge_id: id.0,
        src: g.vertex_name(e.src).to_string(),
        dst: g.vertex_name(e.dst).to_string(),
        block: program.config.block_name(block),
        set: program.config.set_of(block),
        classification,
        by_age: None,
        by_exact: None,
    }
}

fn echo(program: &Program, mode: &str, focus: Option<&BlockId>) -> ConfigEcho {
    let c = &program.config;
    ConfigEcho {
        associativity: c.associativity,
        num_sets: c.num_sets,
        line_size: c.line_size,
        mode: mode.to_string(),
        focus: focus.map(|b| c.block_name(b)),
    }
}

impl Report {
    pub fn from_analysis(program: &Program, mode: &str, focus: Option<&BlockId>, analysis: &AnalysisReport) -> Report {
        let edges: Vec<EdgeRecord> = analysis
            .edges
            .values()
            .map(|v| EdgeRecord {
                by_age: v.by_age,
                by_exact: v.by_exact,
                ..record(program, v.edge, &v.block, v.classification)
            })
            .collect();
        Report {
            config: echo(program, mode, focus),
            summary: Summary::tally(edges.iter().map(|e| &e.classification)),
            edges,
            unreachable: analysis.unreachable.iter().map(|e| e.0).collect(),
            timings_ms: Timings { age: analysis.stats.age_ms, exact: analysis.stats.exact_ms, ..Timings::default() },
        }
    }

    /// Report for verdicts computed by the brute-force semantics.
    pub fn from_oracle(
        program: &Program,
        focus: Option<&BlockId>,
        verdicts: &BTreeMap<EdgeId, Classification>,
    ) -> Report {
        let mut edges = Vec::new();
        let mut unreachable = Vec::new();
        for e in program.graph.edges() {
            let Some(block) = e.label.block() else { continue };
            if focus.is_some_and(|f| f != block) {
                continue;
            }
            match verdicts.get(&e.id) {
                Some(&c) => edges.push(record(program, e.id, block, c)),
                None => unreachable.push(e.id.0),
            }
        }
        edges.sort_by_key(|e| e.edge_id);
        Report {
            config: echo(program, "oracle", focus),
            summary: Summary::tally(edges.iter().map(|e| &e.classification)),
            edges,
            unreachable,
            timings_ms: Timings::default(),
        }
    }

    /// Verifies that every access edge of `program` (restricted to the
    /// focus block, if any) is reported exactly once and that the summary
    /// matches the records.
    pub fn check(&self, program: &Program, focus: Option<&BlockId>) -> Result<(), String> {
        let expected: BTreeSet<u32> = program
            .graph
            .edges()
            .iter()
            .filter(|e| e.label.block().is_some_and(|b| focus.is_none_or(|f| f == b)))
            .map(|e| e.id.0)
            .collect();
        let mut seen = BTreeSet::new();
        for id in self.edges.iter().map(|e| e.edge_id).chain(self.unreachable.iter().copied()) {
            if !seen.insert(id) {
                return Err(format!("edge {id} reported twice"));
            }
        }
        if seen != expected {
            let missing: Vec<_> = expected.difference(&seen).collect();
            let extra: Vec<_> = seen.difference(&expected).collect();
            return Err(format!("edge coverage mismatch: missing {missing:?}, unexpected {extra:?}"));
        }
        if self.summary != Summary::tally(self.edges.iter().map(|e| &e.classification)) {
            return Err("summary does not match edge records".into());
        }
        if self.config.mode != "age" && self.edges.iter().any(|e| e.classification == Classification::Unknown) {
            return Err("exact report contains Unknown".into());
        }
        Ok(())
    }

    /// Edge-by-edge disagreements with `other`, one line each.
    pub fn diff(&self, other: &Report) -> Vec<String> {
        let mine: BTreeMap<u32, Classification> = self.edges.iter().map(|e| (e.edge_id, e.classification)).collect();
        let theirs: BTreeMap<u32, Classification> = other.edges.iter().map(|e| (e.edge_id, e.classification)).collect();
        let mut out = Vec::new();
        for id in mine.keys().chain(theirs.keys()).collect::<BTreeSet<_>>() {
            match (mine.get(id), theirs.get(id)) {
                (Some(a), Some(b)) if a == b => {}
                (Some(a), Some(b)) => out.push(format!("edge {id}: {a} vs {b}")),
                (Some(a), None) => out.push(format!("edge {id}: {a} vs missing")),
                (None, Some(b)) => out.push(format!("edge {id}: missing vs {b}")),
                (None, None) => unreachable!(),
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    /// One row per classified edge, then one `Unreachable` row per
    /// unreachable access edge (empty block/set columns).
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        let opt = |c: Option<Classification>| c.map(|c| c.as_str()).unwrap_or("");
        for e in &self.edges {
            w.write_record([
                e.edge_id.to_string().as_str(),
                &e.src,
                &e.dst,
                &e.block,
                &e.set.to_string(),
                e.classification.as_str(),
                opt(e.by_age),
                opt(e.by_exact),
            ])?;
        }
        for id in &self.unreachable {
            w.write_record([id.to_string().as_str(), "", "", "", "", "Unreachable", "", ""])?;
        }
        w.flush()?;
        Ok(())
    }
}

mod class {
    use lru_antichain::Classification;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Classification, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(c.as_str())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Classification, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

mod opt_class {
    use lru_antichain::Classification;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Option<Classification>, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Some(c) => s.serialize_str(c.as_str()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Classification>, D::Error> {
        Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(D::Error::custom)).transpose()
    }
}
