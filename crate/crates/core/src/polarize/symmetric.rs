use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{DiscussionGraph, EdgeKind};
use crate::ids::UserId;

/// Undirected weighted view of a graph: `W` as sorted adjacency lists,
/// `D` as the strength vector, and `L = D - W` applied matrix-free.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricWeightedGraph {
    ids: Vec<UserId>,
    adjacency: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
}

impl SymmetricWeightedGraph {
    /// Builds from undirected weighted pairs; repeated pairs accumulate,
    /// self-pairs and non-positive weights are ignored. Every id in `ids`
    /// becomes a node; pairs naming unknown ids add them.
    pub fn from_pairs(ids: impl IntoIterator<Item = UserId>, pairs: impl IntoIterator<Item = (UserId, UserId, f64)>) -> Self {
        let mut node_set: BTreeSet<UserId> = ids.into_iter().collect();
        let mut weights: BTreeMap<(UserId, UserId), f64> = BTreeMap::new();
        for (a, b, w) in pairs {
            node_set.insert(a);
            node_set.insert(b);
            if a == b || w.is_nan() || w <= 0.0 {
                continue;
            }
            let key = if a < b { (a, b) } else { (b, a) };
            *weights.entry(key).or_default() += w;
        }
        let ids: Vec<UserId> = node_set.into_iter().collect();
        let index: BTreeMap<UserId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut adjacency = vec![Vec::new(); ids.len()];
        for ((a, b), w) in weights {
            let (i, j) = (index[&a], index[&b]);
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|(j, _)| *j);
        }
        let strength = adjacency.iter().map(|l| l.iter().map(|(_, w)| w).sum()).collect();
        Self { ids, adjacency, strength }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Node ids in ascending order; positions in this slice index every
    /// other per-node vector.
    pub fn ids(&self) -> &[UserId] {
        &self.ids
    }

    pub fn index_of(&self, id: UserId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn strength(&self) -> &[f64] {
        &self.strength
    }

    pub fn weight(&self, a: UserId, b: UserId) -> f64 {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.adjacency[i]
                .binary_search_by_key(&j, |(k, _)| *k)
                .map(|pos| self.adjacency[i][pos].1)
                .unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// `out = L v`.
    pub fn laplacian_apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, list) in self.adjacency.iter().enumerate() {
            let mut acc = self.strength[i] * v[i];
            for &(j, w) in list {
                acc -= w * v[j];
            }
            out[i] = acc;
        }
    }

    /// Subgraph induced by the nodes where `keep` is true.
    pub fn induced(&self, keep: &[bool]) -> Self {
        let ids = self.ids.iter().zip(keep).filter(|(_, k)| **k).map(|(id, _)| *id);
        let pairs = self.adjacency.iter().enumerate().filter(|(i, _)| keep[*i]).flat_map(|(i, list)| {
            list.iter()
                .filter(move |(j, _)| keep[*j] && i < *j)
                .map(move |&(j, w)| (self.ids[i], self.ids[j], w))
        });
        Self::from_pairs(ids, pairs)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for list in &mut out.adjacency {
            for (_, w) in list.iter_mut() {
                *w *= c;
            }
        }
        for s in &mut out.strength {
            *s *= c;
        }
        out
    }
}

/// Collapses directed edges of the selected kinds into undirected weights:
/// `W(u,v)` is the sum of `u→v` and `v→u` weights. Every graph node is kept.
pub fn symmetrize(graph: &DiscussionGraph, kinds: &BTreeSet<EdgeKind>) -> SymmetricWeightedGraph {
    let pairs = graph
        .edges
        .iter()
        .filter(|(k, _)| kinds.contains(&k.kind))
        .map(|(k, w)| (k.source, k.target, *w as f64));
    SymmetricWeightedGraph::from_pairs(graph.nodes.keys().copied(), pairs)
}
