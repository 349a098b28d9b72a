//! Polarization metrics on a labelled discussion graph.

mod fj;
mod rwc;
mod symmetric;

pub use fj::{fj_polarization, FjOutcome, FJ_TOLERANCE};
pub use rwc::{rwc_exact, rwc_monte_carlo, AbsorptionMatrix, KTop, RwcOutcome, DEFAULT_WALKS_PER_SIDE, MAX_WALK_STEPS};
pub use symmetric::{symmetrize, SymmetricWeightedGraph};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DiscussionGraph, EdgeKind};
use crate::ids::UserId;
use crate::opinion::{opinion_vector, OpinionLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    FriedkinJohnsen,
    RandomWalkControversy,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::FriedkinJohnsen => "fj",
            Metric::RandomWalkControversy => "rwc",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fj" => Ok(Metric::FriedkinJohnsen),
            "rwc" => Ok(Metric::RandomWalkControversy),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationOptions {
    /// Edge kinds folded into the symmetric weights.
    pub kinds: BTreeSet<EdgeKind>,
    pub k_top: KTop,
    /// Keep the equilibrium opinions in the diagnostics.
    pub keep_equilibrium: bool,
    /// Estimate RWC by sampling walks instead of solving exactly.
    pub sampling: Option<WalkSampling>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkSampling {
    pub walks_per_side: usize,
    pub seed: u64,
}

impl Default for PolarizationOptions {
    fn default() -> Self {
        Self { kinds: EdgeKind::ALL.into_iter().collect(), k_top: KTop::default(), keep_equilibrium: false, sampling: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cg_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cg_iterations: Option<usize>,
    /// `||z||²` before dividing by the node count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fj_unnormalized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibrium: Option<BTreeMap<UserId, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded_unlabeled: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded_isolated: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorbing_per_side: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption: Option<AbsorptionMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unabsorbable_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolarizationResult {
    pub scores: BTreeMap<String, f64>,
    pub diagnostics: Diagnostics,
}

/// Labels as stored on the graph nodes; unlabelled nodes are omitted.
pub fn node_labels(graph: &DiscussionGraph) -> BTreeMap<UserId, OpinionLabel> {
    graph.nodes.iter().filter_map(|(id, a)| a.opinion.map(|l| (*id, l))).collect()
}

/// Computes each named metric (`"fj"`, `"rwc"`) on the symmetrized graph.
/// Every name is validated before any work is done.
pub fn get_polarization<S: AsRef<str>>(
    graph: &DiscussionGraph,
    metrics: &[S],
    options: &PolarizationOptions,
) -> Result<PolarizationResult> {
    let metrics = metrics.iter().map(|m| m.as_ref().parse()).collect::<Result<BTreeSet<Metric>>>()?;
    let mut result = PolarizationResult::default();
    if metrics.is_empty() {
        return Ok(result);
    }
    let sym = symmetrize(graph, &options.kinds);
    let diag = &mut result.diagnostics;

    for metric in metrics {
        let score = match metric {
            Metric::FriedkinJohnsen => {
                let s = opinion_vector(graph)?;
                let out = fj_polarization(&sym, &s)?;
                diag.cg_residual = Some(out.cg_residual);
                diag.cg_iterations = Some(out.cg_iterations);
                diag.fj_unnormalized = Some(out.unnormalized);
                if options.keep_equilibrium {
                    diag.equilibrium = Some(sym.ids().iter().copied().zip(out.equilibrium.iter().copied()).collect());
                }
                out.index
            }
            Metric::RandomWalkControversy => {
                let labels = node_labels(graph);
                let out = match options.sampling {
                    Some(w) => rwc_monte_carlo(&sym, &labels, options.k_top, w.walks_per_side, w.seed)?,
                    None => rwc_exact(&sym, &labels, options.k_top)?,
                };
                diag.excluded_unlabeled = Some(out.excluded_unlabeled);
                diag.excluded_isolated = Some(out.excluded_isolated);
                diag.absorbing_per_side = Some(out.absorbing_per_side);
                diag.absorption = Some(out.absorption);
                diag.unabsorbable_nodes = Some(out.unabsorbable_nodes);
                out.rwc
            }
        };
        result.scores.insert(metric.name().to_string(), score);
    }
    Ok(result)
}

/// Convenience for callers holding metric names as one comma list.
pub fn parse_metric_list(list: &str) -> Vec<&str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}
