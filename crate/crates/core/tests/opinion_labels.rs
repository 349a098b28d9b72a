use std::collections::BTreeSet;

use agora_core::{label_nodes, opinion_vector, DiscussionGraph, Error, FollowerSet, NodeAttrs, OpinionLabel, UserId};
use proptest::prelude::*;

fn nodes(n: u64) -> DiscussionGraph {
    let mut g = DiscussionGraph::default();
    for id in 1..=n {
        g.nodes.insert(UserId(id), NodeAttrs::default());
    }
    g
}

fn set(name: &str, ids: &[u64]) -> FollowerSet {
    FollowerSet::new(name, ids.iter().map(|&i| UserId(i)))
}

#[test]
fn labels_and_vector() {
    let mut g = nodes(4);
    let stats = label_nodes(&mut g, &[set("a", &[1, 3, 99]), set("b", &[2, 3])]).unwrap();
    assert_eq!(stats.groups, vec![1, 1]);
    assert_eq!((stats.ambiguous, stats.unlabeled), (1, 1));
    let label = |i| g.nodes[&UserId(i)].opinion;
    assert_eq!(label(1), Some(OpinionLabel::Group(0)));
    assert_eq!(label(2), Some(OpinionLabel::Group(1)));
    assert_eq!(label(3), Some(OpinionLabel::Ambiguous));
    assert_eq!(label(4), Some(OpinionLabel::Unlabeled));
    let s = opinion_vector(&g).unwrap();
    assert_eq!(s.0.values().copied().collect::<Vec<_>>(), vec![1.0, -1.0, 0.0, 0.0]);
}

#[test]
fn label_strings() {
    for (label, text) in [
        (OpinionLabel::Group(0), "\"Group 0\""),
        (OpinionLabel::Group(12), "\"Group 12\""),
        (OpinionLabel::Ambiguous, "\"Ambiguous\""),
        (OpinionLabel::Unlabeled, "\"Unlabeled\""),
    ] {
        assert_eq!(serde_json::to_string(&label).unwrap(), text);
        assert_eq!(serde_json::from_str::<OpinionLabel>(text).unwrap(), label);
    }
}

#[test]
fn errors() {
    let mut g = nodes(3);
    assert_eq!(label_nodes(&mut g, &[set("a", &[1])]).unwrap_err(), Error::TooFewFollowerSets(1));
    label_nodes(&mut g, &[set("a", &[1]), set("b", &[2]), set("c", &[3])]).unwrap();
    assert!(matches!(opinion_vector(&g), Err(Error::MoreThanTwoGroups(2))));
    let all_unlabeled = {
        let mut g = nodes(3);
        label_nodes(&mut g, &[set("a", &[]), set("b", &[])]).unwrap();
        opinion_vector(&g).unwrap()
    };
    assert!(all_unlabeled.0.values().all(|v| *v == 0.0));
}

proptest! {
    #[test]
    fn partition_and_order_independence(
        n in 1u64..60,
        sets in prop::collection::vec(prop::collection::vec(1u64..80, 0..40), 2..5),
    ) {
        let follower_sets: Vec<FollowerSet> = sets.iter().enumerate().map(|(i, ids)| set(&format!("s{i}"), ids)).collect();
        let mut g = nodes(n);
        let stats = label_nodes(&mut g, &follower_sets).unwrap();
        prop_assert_eq!(stats.groups.iter().sum::<usize>() + stats.ambiguous + stats.unlabeled, g.node_count());
        prop_assert!(g.nodes.values().all(|a| a.opinion.is_some()));

        let reversed: Vec<FollowerSet> = sets
            .iter()
            .enumerate()
            .map(|(i, ids)| set(&format!("s{i}"), &ids.iter().rev().copied().collect::<Vec<_>>()))
            .collect();
        let mut h = nodes(n);
        let again = label_nodes(&mut h, &reversed).unwrap();
        prop_assert_eq!(stats, again);
        prop_assert_eq!(&g, &h);

        for id in nodes(n).nodes.keys() {
            let hits: BTreeSet<usize> = sets.iter().enumerate().filter(|(_, s)| s.contains(&id.0)).map(|(i, _)| i).collect();
            let expected = match hits.len() {
                0 => OpinionLabel::Unlabeled,
                1 => OpinionLabel::Group(*hits.iter().next().unwrap()),
                _ => OpinionLabel::Ambiguous,
            };
            prop_assert_eq!(g.nodes[id].opinion, Some(expected));
        }
    }
}
