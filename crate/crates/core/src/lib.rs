//! Exact hit/miss classification of memory accesses for LRU caches.
//!
//! The crate contains a control-flow graph model with a small text format
//! ([`cfg`]), a brute-force reference semantics ([`concrete`]), the classic
//! age-interval analysis ([`age`]), a zero-suppressed decision diagram
//! engine ([`zdd`]) and the exact may-hit / may-miss analyses built on it
//! ([`exact`]). [`generators`] produces benchmark graphs with known answers.
//!
//! ```
//! use lru_antichain::{cfg::parse_cfg, exact::{classify, Options}, Classification};
//!
//! let program = parse_cfg(
//!     "cache assoc=2 sets=1 linesize=1\n\
//!      start s empty\n\
//!      edge s t a\n\
//!      edge t u a\n",
//! )
//! .unwrap();
//! let report = classify(&program, &Options::default()).unwrap();
//! let verdicts: Vec<_> = report.edges.values().map(|e| e.classification).collect();
//! assert_eq!(verdicts, [Classification::AlwaysMiss, Classification::AlwaysHit]);
//! ```

pub mod age;
pub mod cfg;
pub mod concrete;
pub mod exact;
pub mod generators;
pub mod zdd;

use std::fmt;
use std::str::FromStr;

pub use cfg::{BlockId, CacheConfig, ControlFlowGraph, EdgeId, Label, Program, StartKind, VertexId};

/// Outcome of an access edge over all executions reaching it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    AlwaysHit,
    AlwaysMiss,
    HitAndMiss,
    Unknown,
}

impl Classification {
    /// Builds the verdict from the two existential questions.
    pub fn from_may(may_hit: bool, may_miss: bool) -> Self {
        match (may_hit, may_miss) {
            (true, false) => Classification::AlwaysHit,
            (false, true) => Classification::AlwaysMiss,
            (true, true) => Classification::HitAndMiss,
            // Only possible on edges no execution reaches.
            (false, false) => Classification::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::AlwaysHit => "AlwaysHit",
            Classification::AlwaysMiss => "AlwaysMiss",
            Classification::HitAndMiss => "HitAndMiss",
            Classification::Unknown => "Unknown",
        }
    }

    /// Whether `self` is a sound over-approximation of the exact verdict `exact`.
    pub fn is_consistent_with(self, exact: Classification) -> bool {
        self == Classification::Unknown || self == exact
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "AlwaysHit" => Ok(Classification::AlwaysHit),
            "AlwaysMiss" => Ok(Classification::AlwaysMiss),
            "HitAndMiss" => Ok(Classification::HitAndMiss),
            "Unknown" => Ok(Classification::Unknown),
            other => Err(format!("unknown classification `{other}`")),
        }
    }
}
