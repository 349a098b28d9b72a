//! Fruchterman–Reingold force-directed layout.
//!
//! Repulsion `k²/d` acts between every pair of nodes, attraction `d²/k`
//! along every connected pair, with `k = C·sqrt(area/n)`. Displacements are
//! capped by a temperature that cools linearly from `width/10` towards zero,
//! and positions are clamped to the frame after every step.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::document::{GraphDocument, NodeVisual, Rgb};
use crate::error::{Error, Result};
use crate::graph::DiscussionGraph;
use crate::ids::UserId;
use crate::opinion::OpinionLabel;

/// Distance substituted for coincident nodes.
const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    /// Colour per seed group, by index.
    pub groups: Vec<Rgb>,
    pub ambiguous: Rgb,
    pub unlabeled: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Self { groups: vec![Rgb::RED, Rgb::BLUE], ambiguous: Rgb::PURPLE, unlabeled: Rgb::GRAY }
    }
}

impl Palette {
    pub fn color(&self, label: Option<OpinionLabel>) -> Rgb {
        match label {
            Some(OpinionLabel::Group(i)) => self.groups.get(i).copied().unwrap_or(self.unlabeled),
            Some(OpinionLabel::Ambiguous) => self.ambiguous,
            _ => self.unlabeled,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutParams {
    pub width: f64,
    pub height: f64,
    pub iterations: usize,
    /// Scales the ideal edge length `k`.
    pub force_constant: f64,
    pub seed: u64,
    pub use_weights: bool,
    pub palette: Palette,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            width: 1000.0,
            height: 1000.0,
            iterations: 50,
            force_constant: 1.0,
            seed: 0,
            use_weights: false,
            palette: Palette::default(),
        }
    }
}

impl LayoutParams {
    /// Ideal pairwise distance for `n` nodes.
    pub fn optimal_distance(&self, n: usize) -> f64 {
        self.force_constant * libm::sqrt(self.width * self.height / n.max(1) as f64)
    }

    pub fn initial_temperature(&self) -> f64 {
        self.width / 10.0
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.width) && ok(self.height) && ok(self.force_constant) {
            Ok(())
        } else {
            Err(Error::InvalidFrame)
        }
    }
}

/// Per-iteration record: the temperature cap and the largest displacement
/// actually applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationTrace {
    pub temperature: f64,
    pub max_displacement: f64,
}

pub type Positions = BTreeMap<UserId, (f64, f64)>;

pub fn fr_layout(graph: &DiscussionGraph, params: &LayoutParams) -> Result<Positions> {
    fr_layout_traced(graph, params).map(|(p, _)| p)
}

pub fn fr_layout_traced(graph: &DiscussionGraph, params: &LayoutParams) -> Result<(Positions, Vec<IterationTrace>)> {
    params.validate()?;
    let ids: Vec<UserId> = graph.nodes.keys().copied().collect();
    let n = ids.len();
    if n == 0 {
        return Ok((Positions::new(), Vec::new()));
    }
    let index: BTreeMap<UserId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    // One attraction term per connected pair, summing kinds and directions.
    let mut pair_weight: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (key, w) in &graph.edges {
        let (Some(&a), Some(&b)) = (index.get(&key.source), index.get(&key.target)) else { continue };
        if a == b {
            continue;
        }
        let pair = if a < b { (a, b) } else { (b, a) };
        *pair_weight.entry(pair).or_default() += *w as f64;
    }
    let pairs: Vec<(usize, usize, f64)> = pair_weight
        .into_iter()
        .map(|((a, b), w)| (a, b, if params.use_weights { w } else { 1.0 }))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pos: Vec<(f64, f64)> =
        (0..n).map(|_| (rng.random::<f64>() * params.width, rng.random::<f64>() * params.height)).collect();

    let trace = simulate(&mut pos, &pairs, params, &mut rng);
    Ok((ids.into_iter().zip(pos).collect(), trace))
}

fn simulate(
    pos: &mut [(f64, f64)],
    pairs: &[(usize, usize, f64)],
    params: &LayoutParams,
    rng: &mut ChaCha8Rng,
) -> Vec<IterationTrace> {
    let k = params.optimal_distance(pos.len());
    let k2 = k * k;
    let t0 = params.initial_temperature();
    let n = pos.len();
    let mut disp = vec![(0.0, 0.0); n];
    let mut trace = Vec::with_capacity(params.iterations);

    for it in 0..params.iterations {
        let t = t0 * (1.0 - it as f64 / params.iterations as f64);
        disp.iter_mut().for_each(|d| *d = (0.0, 0.0));

        for i in 0..n {
            for j in (i + 1)..n {
                let (mut dx, mut dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let mut d = libm::hypot(dx, dy);
                if d == 0.0 {
                    let angle = rng.random::<f64>() * core::f64::consts::TAU;
                    dx = libm::cos(angle);
                    dy = libm::sin(angle);
                    d = MIN_DISTANCE;
                } else {
                    dx /= d;
                    dy /= d;
                }
                let f = k2 / d;
                disp[i].0 += dx * f;
                disp[i].1 += dy * f;
                disp[j].0 -= dx * f;
                disp[j].1 -= dy * f;
            }
        }

        for &(a, b, w) in pairs {
            let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
            let d = libm::hypot(dx, dy);
            if d == 0.0 {
                continue;
            }
            // (d²/k) along the unit vector (dx/d, dy/d).
            let f = w * d / k;
            disp[a].0 -= dx * f;
            disp[a].1 -= dy * f;
            disp[b].0 += dx * f;
            disp[b].1 += dy * f;
        }

        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let len = libm::hypot(disp[i].0, disp[i].1);
            if len > 0.0 && len.is_finite() {
                let step = len.min(t);
                let old = pos[i];
                pos[i].0 = (pos[i].0 + disp[i].0 / len * step).clamp(0.0, params.width);
                pos[i].1 = (pos[i].1 + disp[i].1 / len * step).clamp(0.0, params.height);
                max_step = max_step.max(libm::hypot(pos[i].0 - old.0, pos[i].1 - old.1));
            }
        }
        trace.push(IterationTrace { temperature: t, max_displacement: max_step });
    }

    trace
}

/// Node size grows with the log of total incident weight.
pub fn node_size(strength: u64) -> f64 {
    1.0 + 2.0 * libm::log(1.0 + strength as f64)
}

/// Lays the graph out and attaches size and opinion colour to every node.
pub fn apply_layout(graph: DiscussionGraph, params: &LayoutParams) -> Result<GraphDocument> {
    let positions = fr_layout(&graph, params)?;
    let strength = graph.strength();
    let visuals = graph
        .nodes
        .iter()
        .map(|(id, attrs)| {
            let (x, y) = positions[id];
            let visual = NodeVisual {
                x,
                y,
                size: node_size(strength.get(id).copied().unwrap_or(0)),
                color: params.palette.color(attrs.opinion),
            };
            (*id, visual)
        })
        .collect();
    Ok(GraphDocument { graph, visuals: Some(visuals) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeKey, EdgeKind, NodeAttrs};

    fn graph(n: u64, edges: &[(u64, u64)]) -> DiscussionGraph {
        let mut g = DiscussionGraph::default();
        for id in 1..=n {
            g.nodes.insert(UserId(id), NodeAttrs::default());
        }
        for &(a, b) in edges {
            g.edges.insert(EdgeKey { source: UserId(a), target: UserId(b), kind: EdgeKind::Retweet }, 1);
        }
        g
    }

    #[test]
    fn single_node_stays_at_initial_sample() {
        let params = LayoutParams { seed: 9, ..LayoutParams::default() };
        let pos = fr_layout(&graph(1, &[]), &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let expected = (rng.random::<f64>() * 1000.0, rng.random::<f64>() * 1000.0);
        assert_eq!(pos[&UserId(1)], expected);
    }

    #[test]
    fn deterministic_for_seed() {
        let g = graph(6, &[(1, 2), (2, 3), (4, 5), (5, 6), (6, 1)]);
        let params = LayoutParams { seed: 3, ..LayoutParams::default() };
        let a = fr_layout(&g, &params).unwrap();
        let b = fr_layout(&g, &params).unwrap();
        for (id, p) in &a {
            assert_eq!(p.0.to_bits(), b[id].0.to_bits());
            assert_eq!(p.1.to_bits(), b[id].1.to_bits());
        }
        let c = fr_layout(&g, &LayoutParams { seed: 4, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn coincident_nodes_separate() {
        let params = LayoutParams { iterations: 1, ..LayoutParams::default() };
        let mut pos = vec![(500.0, 500.0), (500.0, 500.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = simulate(&mut pos, &[], &params, &mut rng);
        assert_ne!(pos[0], pos[1]);
        // Both pushed the full temperature in opposite directions.
        let d = libm::hypot(pos[0].0 - pos[1].0, pos[0].1 - pos[1].1);
        assert!((d - 2.0 * params.initial_temperature()).abs() < 1e-9);
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn invalid_frame_rejected() {
        let params = LayoutParams { width: 0.0, ..LayoutParams::default() };
        assert_eq!(fr_layout(&graph(2, &[]), &params), Err(Error::InvalidFrame));
    }

    #[test]
    fn size_law_and_palette() {
        assert_eq!(node_size(0), 1.0);
        assert!((node_size(3) - (1.0 + 2.0 * 4f64.ln())).abs() < 1e-12);
        let p = Palette::default();
        assert_eq!(p.color(Some(OpinionLabel::Group(0))), Rgb::RED);
        assert_eq!(p.color(Some(OpinionLabel::Group(1))), Rgb::BLUE);
        assert_eq!(p.color(Some(OpinionLabel::Ambiguous)), Rgb::PURPLE);
        assert_eq!(p.color(Some(OpinionLabel::Unlabeled)), Rgb::GRAY);
        assert_eq!(p.color(None), Rgb::GRAY);
    }

    #[test]
    fn apply_layout_covers_all_nodes() {
        let doc = apply_layout(graph(4, &[(1, 2), (2, 3)]), &LayoutParams::default()).unwrap();
        assert!(doc.is_consistent());
        assert!(doc.has_layout());
        let v = doc.visual(UserId(2)).unwrap();
        assert!((v.size - node_size(2)).abs() < 1e-12);
    }
}
