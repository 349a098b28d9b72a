//! Opinion attribution from seed-account followership.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::DiscussionGraph;
use crate::ids::UserId;

/// Node label derived from which seed accounts a user follows.
///
/// Rendered as `"Group <i>"`, `"Ambiguous"` or `"Unlabeled"` in files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpinionLabel {
    Group(usize),
    Ambiguous,
    Unlabeled,
}

impl fmt::Display for OpinionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpinionLabel::Group(i) => write!(f, "Group {i}"),
            OpinionLabel::Ambiguous => f.write_str("Ambiguous"),
            OpinionLabel::Unlabeled => f.write_str("Unlabeled"),
        }
    }
}

impl FromStr for OpinionLabel {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "Ambiguous" => Ok(OpinionLabel::Ambiguous),
            "Unlabeled" => Ok(OpinionLabel::Unlabeled),
            _ => s
                .strip_prefix("Group ")
                .and_then(|i| i.parse().ok())
                .map(OpinionLabel::Group)
                .ok_or_else(|| format!("invalid opinion label {s:?}")),
        }
    }
}

impl Serialize for OpinionLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OpinionLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(de::Error::custom)
    }
}

/// Followers of one seed account.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FollowerSet {
    pub account: String,
    pub followers: BTreeSet<UserId>,
}

impl FollowerSet {
    pub fn new(account: impl Into<String>, followers: impl IntoIterator<Item = UserId>) -> Self {
        Self { account: account.into(), followers: followers.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelStats {
    /// Node count per seed, in seed order.
    pub groups: Vec<usize>,
    pub ambiguous: usize,
    pub unlabeled: usize,
}

impl LabelStats {
    pub fn total(&self) -> usize {
        self.groups.iter().sum::<usize>() + self.ambiguous + self.unlabeled
    }
}

/// Labels every node: followers of exactly one seed get that seed's group,
/// followers of several are ambiguous, everyone else is unlabeled.
pub fn label_nodes(graph: &mut DiscussionGraph, follower_sets: &[FollowerSet]) -> Result<LabelStats> {
    if follower_sets.len() < 2 {
        return Err(Error::TooFewFollowerSets(follower_sets.len()));
    }
    let mut stats = LabelStats { groups: vec![0; follower_sets.len()], ..LabelStats::default() };
    for (id, attrs) in graph.nodes.iter_mut() {
        let mut hits = follower_sets.iter().enumerate().filter(|(_, set)| set.followers.contains(id));
        let label = match (hits.next(), hits.next()) {
            (None, _) => OpinionLabel::Unlabeled,
            (Some((i, _)), None) => OpinionLabel::Group(i),
            (Some(_), Some(_)) => OpinionLabel::Ambiguous,
        };
        match label {
            OpinionLabel::Group(i) => stats.groups[i] += 1,
            OpinionLabel::Ambiguous => stats.ambiguous += 1,
            OpinionLabel::Unlabeled => stats.unlabeled += 1,
        }
        attrs.opinion = Some(label);
    }
    Ok(stats)
}

/// Innate opinions in `[-1, 1]`, one per node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OpinionVector(pub BTreeMap<UserId, f64>);

impl OpinionVector {
    pub fn get(&self, id: UserId) -> Option<f64> {
        self.0.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Group 0 maps to +1, Group 1 to −1, anything else to 0. Nodes that were
/// never labelled count as unlabeled.
pub fn opinion_vector(graph: &DiscussionGraph) -> Result<OpinionVector> {
    let mut values = BTreeMap::new();
    for (id, attrs) in &graph.nodes {
        let s = match attrs.opinion {
            Some(OpinionLabel::Group(0)) => 1.0,
            Some(OpinionLabel::Group(1)) => -1.0,
            Some(OpinionLabel::Group(i)) => return Err(Error::MoreThanTwoGroups(i)),
            _ => 0.0,
        };
        values.insert(*id, s);
    }
    Ok(OpinionVector(values))
}
