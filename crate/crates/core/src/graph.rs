//! The directed, typed, weighted user-interaction graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::UserId;
use crate::opinion::OpinionLabel;

/// Interaction type carried by an edge. Serialized as the lowercase name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Retweet,
    Quote,
    Reply,
    Mention,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 4] = [EdgeKind::Retweet, EdgeKind::Quote, EdgeKind::Reply, EdgeKind::Mention];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Retweet => "retweet",
            EdgeKind::Quote => "quote",
            EdgeKind::Reply => "reply",
            EdgeKind::Mention => "mention",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EdgeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownEdgeKind(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodeAttrs {
    pub username: String,
    #[serde(default)]
    pub display_name: String,
    #[serde(default)]
    pub followers_count: u64,
    #[serde(default)]
    pub tweets_in_discussion: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opinion: Option<OpinionLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub source: UserId,
    pub target: UserId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub query: String,
    pub collected_from: Option<DateTime<Utc>>,
    pub collected_to: Option<DateTime<Utc>>,
    pub unresolved_references: u64,
}

/// Nodes and edges are kept in ordered maps so iteration (and therefore
/// every serialization) is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiscussionGraph {
    pub nodes: BTreeMap<UserId, NodeAttrs>,
    pub edges: BTreeMap<EdgeKey, u64>,
    pub metadata: GraphMetadata,
}

impl DiscussionGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of incident edge weights over all kinds, both directions.
    pub fn strength(&self) -> BTreeMap<UserId, u64> {
        let mut out: BTreeMap<UserId, u64> = self.nodes.keys().map(|id| (*id, 0)).collect();
        for (key, w) in &self.edges {
            *out.entry(key.source).or_default() += w;
            *out.entry(key.target).or_default() += w;
        }
        out
    }

    pub fn total_weight(&self, kind: EdgeKind) -> u64 {
        self.edges.iter().filter(|(k, _)| k.kind == kind).map(|(_, w)| *w).sum()
    }

    /// Checks the structural invariants: endpoints exist, weights are
    /// positive and there are no self-loops.
    pub fn is_well_formed(&self) -> bool {
        self.edges.iter().all(|(k, w)| {
            *w >= 1 && k.source != k.target && self.nodes.contains_key(&k.source) && self.nodes.contains_key(&k.target)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOptions {
    pub edge_kinds: BTreeSet<EdgeKind>,
    pub min_weight: u64,
    pub drop_isolated: bool,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self { edge_kinds: EdgeKind::ALL.into_iter().collect(), min_weight: 1, drop_isolated: false }
    }
}

impl GraphOptions {
    pub fn with_kinds(kinds: impl IntoIterator<Item = EdgeKind>) -> Self {
        Self { edge_kinds: kinds.into_iter().collect(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.edge_kinds.is_empty() {
            return Err(Error::NoEdgeKinds);
        }
        if self.min_weight == 0 {
            return Err(Error::InvalidMinWeight);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_kind_names_are_exact() {
        for kind in EdgeKind::ALL {
            assert_eq!(kind.as_str().parse::<EdgeKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, alloc::format!("\"{}\"", kind.as_str()));
        }
        assert!("comment".parse::<EdgeKind>().is_err());
    }

    #[test]
    fn empty_kinds_rejected() {
        let opts = GraphOptions::with_kinds([]);
        assert_eq!(opts.validate(), Err(Error::NoEdgeKinds));
    }
}
