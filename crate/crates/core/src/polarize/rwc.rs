//! Random Walk Controversy over an absorbing Markov chain.
//!
//! Sides come from opinion labels: X is `Group 0`, Y is `Group 1`. The
//! chain lives on the labelled, symmetrized subgraph with unlabelled,
//! ambiguous and zero-strength nodes removed. The `k_top` highest-strength
//! nodes of each side absorb; elsewhere a walker steps to a neighbour with
//! probability proportional to edge weight.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SymmetricWeightedGraph;
use crate::error::{Error, Result};
use crate::ids::UserId;
use crate::opinion::OpinionLabel;
use crate::solver::conjugate_gradient;

/// Step cap for a single Monte Carlo walk; a capped walk is unabsorbed.
pub const MAX_WALK_STEPS: usize = 100_000;
pub const DEFAULT_WALKS_PER_SIDE: usize = 100_000;
const ABSORPTION_TOLERANCE: f64 = 1e-12;

/// How many absorbing nodes to pick per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KTop {
    Fixed(usize),
    /// `max(1, round(fraction * side size))`, evaluated per side.
    Fraction(f64),
}

impl Default for KTop {
    fn default() -> Self {
        KTop::Fraction(0.05)
    }
}

impl From<usize> for KTop {
    fn from(k: usize) -> Self {
        KTop::Fixed(k)
    }
}

impl KTop {
    fn resolve(self, side_size: usize) -> Result<usize> {
        let k = match self {
            KTop::Fixed(k) => k,
            KTop::Fraction(f) if f >= 0.0 && f.is_finite() => libm::round(f * side_size as f64) as usize,
            KTop::Fraction(_) => return Err(Error::InvalidKTop),
        };
        match self {
            KTop::Fixed(0) => Err(Error::InvalidKTop),
            KTop::Fixed(_) => Ok(k.min(side_size)),
            KTop::Fraction(_) => Ok(k.max(1).min(side_size)),
        }
    }
}

/// `into_from`: probability a walk starting uniformly in side `from` is
/// absorbed by side `into`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AbsorptionMatrix {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl AbsorptionMatrix {
    /// `P_XX·P_YY − P_YX·P_XY`.
    pub fn controversy(&self) -> f64 {
        self.xx * self.yy - self.yx * self.xy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwcOutcome {
    pub rwc: f64,
    pub absorption: AbsorptionMatrix,
    pub excluded_unlabeled: usize,
    pub excluded_isolated: usize,
    pub absorbing_per_side: [usize; 2],
    /// Eligible nodes with no path to any absorbing node.
    pub unabsorbable_nodes: usize,
    /// Worst relative residual of the absorption solves (exact route only).
    pub cg_residual: f64,
}

/// Eligible subgraph with sides and absorbers resolved.
struct Chain {
    graph: SymmetricWeightedGraph,
    /// 0 for X, 1 for Y, per node of `graph`.
    side: Vec<u8>,
    members: [Vec<usize>; 2],
    absorbing: Vec<bool>,
    absorbers: [Vec<usize>; 2],
    /// True for nodes from which some absorber is reachable.
    reaches_absorber: Vec<bool>,
    excluded_unlabeled: usize,
    excluded_isolated: usize,
}

fn side_of(label: Option<&OpinionLabel>) -> Option<u8> {
    match label {
        Some(OpinionLabel::Group(0)) => Some(0),
        Some(OpinionLabel::Group(1)) => Some(1),
        _ => None,
    }
}

impl Chain {
    fn prepare(sym: &SymmetricWeightedGraph, labels: &BTreeMap<UserId, OpinionLabel>, k_top: KTop) -> Result<Self> {
        let labelled: Vec<bool> = sym.ids().iter().map(|id| side_of(labels.get(id)).is_some()).collect();
        let excluded_unlabeled = labelled.iter().filter(|l| !**l).count();
        let sub = sym.induced(&labelled);
        let connected: Vec<bool> = sub.strength().iter().map(|s| *s > 0.0).collect();
        let excluded_isolated = connected.iter().filter(|c| !**c).count();
        let graph = sub.induced(&connected);

        let side: Vec<u8> = graph.ids().iter().map(|id| side_of(labels.get(id)).unwrap_or(0)).collect();
        let mut members: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (i, s) in side.iter().enumerate() {
            members[*s as usize].push(i);
        }
        if members[0].is_empty() {
            return Err(Error::EmptySide('X'));
        }
        if members[1].is_empty() {
            return Err(Error::EmptySide('Y'));
        }

        let strength = graph.strength();
        let mut absorbing = vec![false; graph.len()];
        let mut absorbers: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for s in 0..2 {
            let k = k_top.resolve(members[s].len())?;
            let mut ranked = members[s].clone();
            // Ids are sorted, so the index breaks ties towards the smaller id.
            ranked.sort_by(|a, b| strength[*b].total_cmp(&strength[*a]).then(a.cmp(b)));
            ranked.truncate(k);
            ranked.sort_unstable();
            for &i in &ranked {
                absorbing[i] = true;
            }
            absorbers[s] = ranked;
        }

        // Walks stop at absorbers, so reachability spreads only through
        // transient nodes.
        let mut reaches_absorber = absorbing.clone();
        let mut queue: VecDeque<usize> = absorbers.iter().flatten().copied().collect();
        while let Some(u) = queue.pop_front() {
            for &(v, _) in graph.neighbors(u) {
                if !reaches_absorber[v] {
                    reaches_absorber[v] = true;
                    queue.push_back(v);
                }
            }
        }

        Ok(Self { graph, side, members, absorbing, absorbers, reaches_absorber, excluded_unlabeled, excluded_isolated })
    }

    fn outcome(&self, absorption: AbsorptionMatrix, cg_residual: f64) -> RwcOutcome {
        RwcOutcome {
            rwc: absorption.controversy(),
            absorption,
            excluded_unlabeled: self.excluded_unlabeled,
            excluded_isolated: self.excluded_isolated,
            absorbing_per_side: [self.absorbers[0].len(), self.absorbers[1].len()],
            unabsorbable_nodes: self.reaches_absorber.iter().filter(|r| !**r).count(),
            cg_residual,
        }
    }
}

fn validate_k_top(k_top: KTop) -> Result<()> {
    if k_top == KTop::Fixed(0) {
        return Err(Error::InvalidKTop);
    }
    Ok(())
}

/// Exact absorption probabilities.
///
/// For each side, the probability `h` of ending in that side's absorbers
/// solves `(I − Q) h = R·1` on transient nodes. Multiplying each row by the
/// node strength turns this into the symmetric positive definite system
/// `L_TT h = W_TA·1` (restricted to transient nodes that can reach an
/// absorber), solved by conjugate gradient.
pub fn rwc_exact(
    sym: &SymmetricWeightedGraph,
    labels: &BTreeMap<UserId, OpinionLabel>,
    k_top: impl Into<KTop>,
) -> Result<RwcOutcome> {
    let k_top = k_top.into();
    validate_k_top(k_top)?;
    let chain = Chain::prepare(sym, labels, k_top)?;
    let g = &chain.graph;
    let n = g.len();

    let transient: Vec<usize> = (0..n).filter(|&i| !chain.absorbing[i] && chain.reaches_absorber[i]).collect();
    let mut slot = vec![usize::MAX; n];
    for (k, &i) in transient.iter().enumerate() {
        slot[i] = k;
    }
    let strength = g.strength();
    let apply = |v: &[f64], out: &mut [f64]| {
        for (k, &i) in transient.iter().enumerate() {
            let mut acc = strength[i] * v[k];
            for &(j, w) in g.neighbors(i) {
                if slot[j] != usize::MAX {
                    acc -= w * v[slot[j]];
                }
            }
            out[k] = acc;
        }
    };

    // into[s][i]: probability a walk from node i ends in side s's absorbers.
    let mut into = [vec![0.0; n], vec![0.0; n]];
    let mut worst_residual: f64 = 0.0;
    for s in 0..2 {
        let rhs: Vec<f64> = transient
            .iter()
            .map(|&i| {
                g.neighbors(i)
                    .iter()
                    .filter(|(j, _)| chain.absorbing[*j] && chain.side[*j] as usize == s)
                    .map(|(_, w)| w)
                    .sum()
            })
            .collect();
        let sol = conjugate_gradient(apply, &rhs, ABSORPTION_TOLERANCE, 10 * transient.len().max(1))?;
        worst_residual = worst_residual.max(sol.relative_residual);
        for (k, &i) in transient.iter().enumerate() {
            into[s][i] = sol.x[k];
        }
        for &i in &chain.absorbers[s] {
            into[s][i] = 1.0;
        }
    }

    let mean = |values: &[f64], starts: &[usize]| starts.iter().map(|&i| values[i]).sum::<f64>() / starts.len() as f64;
    let absorption = AbsorptionMatrix {
        xx: mean(&into[0], &chain.members[0]),
        xy: mean(&into[0], &chain.members[1]),
        yx: mean(&into[1], &chain.members[0]),
        yy: mean(&into[1], &chain.members[1]),
    };
    Ok(chain.outcome(absorption, worst_residual))
}

/// Seeded Monte Carlo estimate of the same quantity.
///
/// Walk `w` (side X walks first, then side Y) draws from ChaCha8 stream `w`
/// of `seed`, so the estimate does not depend on evaluation order.
pub fn rwc_monte_carlo(
    sym: &SymmetricWeightedGraph,
    labels: &BTreeMap<UserId, OpinionLabel>,
    k_top: impl Into<KTop>,
    walks_per_side: usize,
    seed: u64,
) -> Result<RwcOutcome> {
    let k_top = k_top.into();
    validate_k_top(k_top)?;
    if walks_per_side == 0 {
        return Err(Error::InvalidWalkCount);
    }
    let chain = Chain::prepare(sym, labels, k_top)?;
    let g = &chain.graph;
    let cumulative: Vec<Vec<f64>> = (0..g.len())
        .map(|i| {
            let mut acc = 0.0;
            g.neighbors(i)
                .iter()
                .map(|(_, w)| {
                    acc += w;
                    acc
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // absorbed[from][into]
    let mut absorbed = [[0u64; 2]; 2];
    for from in 0..2 {
        let starts = &chain.members[from];
        for w in 0..walks_per_side {
            rng.set_stream((from * walks_per_side + w) as u64);
            rng.set_word_pos(0);
            let mut node = starts[rng.random_range(0..starts.len())];
            if !chain.reaches_absorber[node] {
                continue;
            }
            for _ in 0..=MAX_WALK_STEPS {
                if chain.absorbing[node] {
                    absorbed[from][chain.side[node] as usize] += 1;
                    break;
                }
                let cum = &cumulative[node];
                let total = *cum.last().expect("eligible nodes have neighbours");
                let r = rng.random::<f64>() * total;
                let pick = cum.partition_point(|c| *c <= r).min(cum.len() - 1);
                node = g.neighbors(node)[pick].0;
            }
        }
    }

    let walks = walks_per_side as f64;
    let absorption = AbsorptionMatrix {
        xx: absorbed[0][0] as f64 / walks,
        xy: absorbed[1][0] as f64 / walks,
        yx: absorbed[0][1] as f64 / walks,
        yy: absorbed[1][1] as f64 / walks,
    };
    Ok(chain.outcome(absorption, 0.0))
}
