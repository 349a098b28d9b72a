mod common;

use agora_core::layout::{fr_layout_traced, node_size};
use agora_core::{apply_layout, fr_layout, EdgeKind, LayoutParams, OpinionLabel, Rgb, UserId};
use common::{arb_graph, graph_from};
use proptest::prelude::*;

#[test]
fn single_node_stays_at_its_sample() {
    let g = graph_from(1, &[]);
    let params = LayoutParams { seed: 9, ..LayoutParams::default() };
    let zero = LayoutParams { iterations: 0, ..params.clone() };
    assert_eq!(fr_layout(&g, &params).unwrap(), fr_layout(&g, &zero).unwrap());
}

#[test]
fn two_nodes_settle_near_optimal_distance() {
    let g = graph_from(2, &[(1, 2, EdgeKind::Retweet, 1)]);
    let params = LayoutParams { iterations: 500, seed: 1, ..LayoutParams::default() };
    let pos = fr_layout(&g, &params).unwrap();
    let (a, b) = (pos[&UserId(1)], pos[&UserId(2)]);
    let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let k = params.optimal_distance(2);
    assert!((d - k).abs() <= 0.2 * k, "distance {d}, k {k}");
}

#[test]
fn colours_and_sizes() {
    let mut g = graph_from(3, &[(1, 2, EdgeKind::Retweet, 3)]);
    g.nodes.get_mut(&UserId(1)).unwrap().opinion = Some(OpinionLabel::Group(0));
    g.nodes.get_mut(&UserId(2)).unwrap().opinion = Some(OpinionLabel::Group(1));
    g.nodes.get_mut(&UserId(3)).unwrap().opinion = Some(OpinionLabel::Ambiguous);
    let doc = apply_layout(g, &LayoutParams::default()).unwrap();
    let v = |i| *doc.visual(UserId(i)).unwrap();
    assert_eq!(v(1).color.to_string(), "#e41a1c");
    assert_eq!(v(2).color, Rgb::BLUE);
    assert_eq!(v(3).color.to_string(), "#984ea3");
    assert_eq!(v(1).size, 1.0 + 2.0 * 4f64.ln());
    assert_eq!(v(3).size, node_size(0));
    assert!(doc.is_consistent());
}

fn arb_params() -> impl Strategy<Value = LayoutParams> {
    (10.0f64..2000.0, 10.0f64..2000.0, 0usize..80, 0.2f64..3.0, any::<u64>(), any::<bool>()).prop_map(
        |(width, height, iterations, force_constant, seed, use_weights)| LayoutParams {
            width,
            height,
            iterations,
            force_constant,
            seed,
            use_weights,
            ..LayoutParams::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contained_deterministic_and_cooling(g in arb_graph(40), params in arb_params()) {
        let (pos, trace) = fr_layout_traced(&g, &params).unwrap();
        prop_assert_eq!(pos.len(), g.node_count());
        for (x, y) in pos.values() {
            prop_assert!((0.0..=params.width).contains(x) && (0.0..=params.height).contains(y));
        }
        let again = fr_layout(&g, &params).unwrap();
        for (id, p) in &pos {
            let q = again[id];
            prop_assert!(p.0.to_bits() == q.0.to_bits() && p.1.to_bits() == q.1.to_bits());
        }
        prop_assert_eq!(trace.len(), params.iterations);
        for w in trace.windows(2) {
            prop_assert!(w[1].temperature <= w[0].temperature);
        }
        for t in &trace {
            prop_assert!(t.max_displacement <= t.temperature * (1.0 + 1e-12));
        }
    }
}
