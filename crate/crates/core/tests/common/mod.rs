#![allow(dead_code)]

pub mod oracle;

use agora_core::{DiscussionGraph, EdgeKey, EdgeKind, NodeAttrs, OpinionLabel, UserId};
use proptest::prelude::*;

pub fn kind_of(i: u8) -> EdgeKind {
    EdgeKind::ALL[i as usize % EdgeKind::ALL.len()]
}

/// Graph on ids `1..=n` with the given directed edges (self-loops skipped,
/// repeated keys summed).
pub fn graph_from(n: u64, edges: &[(u64, u64, EdgeKind, u64)]) -> DiscussionGraph {
    let mut g = DiscussionGraph::default();
    for id in 1..=n {
        g.nodes.insert(UserId(id), NodeAttrs { username: format!("u{id}"), ..NodeAttrs::default() });
    }
    for &(a, b, kind, w) in edges {
        if a != b {
            *g.edges.entry(EdgeKey { source: UserId(a), target: UserId(b), kind }).or_default() += w;
        }
    }
    g
}

/// Random weighted graphs with `1..=max_n` nodes.
pub fn arb_graph(max_n: u64) -> impl Strategy<Value = DiscussionGraph> {
    (1..=max_n)
        .prop_flat_map(|n| {
            let edge = (1..=n, 1..=n, any::<u8>(), 1u64..6);
            (Just(n), prop::collection::vec(edge, 0..(3 * n as usize + 1)))
        })
        .prop_map(|(n, edges)| {
            let edges: Vec<_> = edges.into_iter().map(|(a, b, k, w)| (a, b, kind_of(k), w)).collect();
            graph_from(n, &edges)
        })
}

/// Assigns labels by a per-node code: 0 → Group 0, 1 → Group 1,
/// 2 → Ambiguous, 3 → Unlabeled.
pub fn apply_labels(g: &mut DiscussionGraph, codes: &[u8]) {
    for (attrs, code) in g.nodes.values_mut().zip(codes.iter().cycle()) {
        attrs.opinion = Some(match code % 4 {
            0 => OpinionLabel::Group(0),
            1 => OpinionLabel::Group(1),
            2 => OpinionLabel::Ambiguous,
            _ => OpinionLabel::Unlabeled,
        });
    }
}
