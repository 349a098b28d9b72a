//! Dense reference implementations used to check the sparse solvers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use agora_core::{DiscussionGraph, EdgeKind, OpinionLabel, UserId};

/// Symmetric weight matrix over the graph nodes in id order.
pub fn dense_weights(graph: &DiscussionGraph, kinds: &BTreeSet<EdgeKind>) -> (Vec<UserId>, Vec<Vec<f64>>) {
    let ids: Vec<UserId> = graph.nodes.keys().copied().collect();
    let index: BTreeMap<UserId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let n = ids.len();
    let mut w = vec![vec![0.0; n]; n];
    for (k, weight) in &graph.edges {
        if !kinds.contains(&k.kind) || k.source == k.target {
            continue;
        }
        let (a, b) = (index[&k.source], index[&k.target]);
        w[a][b] += *weight as f64;
        w[b][a] += *weight as f64;
    }
    (ids, w)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("nonempty");
        assert!(a[pivot][col].abs() > 1e-300, "singular matrix");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row != col && a[row][col] != 0.0 {
                let f = a[row][col];
                for j in 0..n {
                    a[row][j] -= f * a[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: Vec<Vec<f64>>, b: &[f64]) -> Vec<f64> {
    let inv = invert(a);
    inv.iter().map(|row| row.iter().zip(b).map(|(x, y)| x * y).sum()).collect()
}

/// Friedkin–Johnsen index from the explicit inverse of `I + L`.
pub fn fj_dense(w: &[Vec<f64>], s: &[f64]) -> f64 {
    let n = w.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let strength: f64 = w[i].iter().sum();
        for j in 0..n {
            m[i][j] = if i == j { 1.0 + strength - w[i][i] } else { -w[i][j] };
        }
    }
    let inv = invert(m);
    let z: Vec<f64> = inv.iter().map(|row| row.iter().zip(s).map(|(a, b)| a * b).sum()).collect();
    z.iter().map(|v| v * v).sum::<f64>() / n as f64
}

/// `[P_XX, P_XY, P_YX, P_YY]` from the absorbing-chain equations
/// `(I − Q) F = R`, built densely on the eligible subgraph.
pub fn rwc_dense(
    ids: &[UserId],
    w: &[Vec<f64>],
    labels: &BTreeMap<UserId, OpinionLabel>,
    k_top: [usize; 2],
) -> Option<[f64; 4]> {
    let side_of = |id: &UserId| match labels.get(id) {
        Some(OpinionLabel::Group(0)) => Some(0usize),
        Some(OpinionLabel::Group(1)) => Some(1),
        _ => None,
    };
    let labelled: Vec<usize> = (0..ids.len()).filter(|&i| side_of(&ids[i]).is_some()).collect();
    let sub_strength = |i: usize| labelled.iter().map(|&j| w[i][j]).sum::<f64>();
    let nodes: Vec<usize> = labelled.iter().copied().filter(|&i| sub_strength(i) > 0.0).collect();
    let n = nodes.len();
    let ww: Vec<Vec<f64>> = nodes.iter().map(|&i| nodes.iter().map(|&j| w[i][j]).collect()).collect();
    let strength: Vec<f64> = ww.iter().map(|r| r.iter().sum()).collect();
    let side: Vec<usize> = nodes.iter().map(|&i| side_of(&ids[i]).expect("labelled")).collect();
    let members: [Vec<usize>; 2] = [0, 1].map(|s| (0..n).filter(|&i| side[i] == s).collect());
    if members.iter().any(Vec::is_empty) {
        return None;
    }

    let mut absorbing = vec![false; n];
    for s in 0..2 {
        let mut ranked = members[s].clone();
        ranked.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]).then(a.cmp(&b)));
        for &i in ranked.iter().take(k_top[s].min(ranked.len())) {
            absorbing[i] = true;
        }
    }

    // Transient nodes that can reach an absorber without crossing one.
    let mut reach = absorbing.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| absorbing[i]).collect();
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if ww[u][v] > 0.0 && !reach[v] {
                reach[v] = true;
                queue.push_back(v);
            }
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&i| !absorbing[i] && reach[i]).collect();
    let t = transient.len();

    let mut into = [vec![0.0; n], vec![0.0; n]];
    for s in 0..2 {
        for i in 0..n {
            if absorbing[i] && side[i] == s {
                into[s][i] = 1.0;
            }
        }
        if t == 0 {
            continue;
        }
        let mut a = vec![vec![0.0; t]; t];
        let mut r = vec![0.0; t];
        for (p, &i) in transient.iter().enumerate() {
            a[p][p] = 1.0;
            for (q, &j) in transient.iter().enumerate() {
                a[p][q] -= ww[i][j] / strength[i];
            }
            r[p] = (0..n).filter(|&j| absorbing[j] && side[j] == s).map(|j| ww[i][j] / strength[i]).sum();
        }
        let f = solve(a, &r);
        for (p, &i) in transient.iter().enumerate() {
            into[s][i] = f[p];
        }
    }
    let mean = |v: &[f64], starts: &[usize]| starts.iter().map(|&i| v[i]).sum::<f64>() / starts.len() as f64;
    Some([
        mean(&into[0], &members[0]),
        mean(&into[0], &members[1]),
        mean(&into[1], &members[0]),
        mean(&into[1], &members[1]),
    ])
}
