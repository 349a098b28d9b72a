#![allow(dead_code)]

pub mod share;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use agora::ingest::wire::{SearchResponse, WireIncludes, WireMeta, WireReference, WireTweet, WireUser};
use chrono::{Duration, TimeZone, Utc};

pub const BASE_ID: u64 = 1_400_000_000_000_000_000;

pub fn wire_user(i: u64) -> WireUser {
    WireUser { id: (100 + i).to_string(), username: format!("user{i}"), name: format!("User {i}"), public_metrics: None }
}

/// Tweet `k` by user `k % users`; every third tweet after the first few
/// retweets tweet 0.
pub fn wire_tweet(k: u64, users: u64) -> WireTweet {
    let author = k % users;
    let mut t = WireTweet {
        id: (BASE_ID + k * 1000).to_string(),
        text: format!("#test number {k}"),
        author_id: Some((100 + author).to_string()),
        created_at: Some(Utc.with_ymd_and_hms(2022, 5, 1, 0, 0, 0).unwrap() + Duration::seconds(k as i64)),
        ..WireTweet::default()
    };
    if k >= 3 && k.is_multiple_of(3) && author != 0 {
        t.text = "RT @user0: #test number 0".into();
        t.referenced_tweets = vec![WireReference { kind: "retweeted".into(), id: BASE_ID.to_string() }];
    }
    t
}

/// Search pages for tweets `0..n`, newest first, `per_page` per page.
pub fn search_pages(n: u64, per_page: usize, users: u64) -> Vec<SearchResponse> {
    let all: Vec<u64> = (0..n).rev().collect();
    let chunks: Vec<&[u64]> = all.chunks(per_page.max(1)).collect();
    let count = chunks.len();
    chunks
        .into_iter()
        .enumerate()
        .map(|(p, ks)| {
            let data: Vec<WireTweet> = ks.iter().map(|&k| wire_tweet(k, users)).collect();
            let mut authors: Vec<u64> = ks.iter().map(|k| k % users).collect();
            authors.push(0);
            authors.sort_unstable();
            authors.dedup();
            SearchResponse {
                includes: WireIncludes {
                    users: authors.into_iter().map(wire_user).collect(),
                    tweets: vec![wire_tweet(0, users)],
                },
                meta: WireMeta {
                    next_token: (p + 1 < count).then(|| format!("tok{}", p + 1)),
                    result_count: Some(data.len() as u64),
                    ..WireMeta::default()
                },
                data,
            }
        })
        .collect()
}

pub fn ndjson<T: serde::Serialize>(pages: &[T]) -> String {
    pages.iter().map(|p| serde_json::to_string(p).unwrap() + "\n").collect()
}

/// Writes `pages` with `directives` (e.g. `#!fault 429@2`) on top.
pub fn write_replay<T: serde::Serialize>(path: &Path, pages: &[T], directives: &[&str]) {
    let mut text: String = directives.iter().map(|d| format!("{d}\n")).collect();
    text.push_str(&ndjson(pages));
    std::fs::write(path, text).unwrap();
}

pub fn agora_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_agora"))
}

/// Runs the CLI with a clean environment for the variables it reads.
pub fn agora(args: &[&str], cwd: &Path) -> Output {
    let mut cmd = Command::new(agora_bin());
    cmd.args(args).current_dir(cwd);
    for var in ["AGORA_CONFIG", "AGORA_STORE_PATH", "AGORA_API_BASE_URL", "AGORA_PAGE_SIZE", "AGORA_BEARER_TOKEN"] {
        cmd.env_remove(var);
    }
    cmd.output().expect("run agora")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "agora failed ({:?}): {}\n{}",
        out.status.code(),
        text,
        String::from_utf8_lossy(&out.stderr)
    );
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "expected one JSON line, got {text:?}");
    serde_json::from_str(lines[0]).expect("stdout is JSON")
}

pub mod docs {
    use std::collections::BTreeMap;

    use agora_core::{
        DiscussionGraph, EdgeKey, EdgeKind, GraphDocument, GraphMetadata, NodeAttrs, NodeVisual, OpinionLabel, Rgb,
        UserId,
    };
    use chrono::{DateTime, TimeZone, Utc};
    use proptest::prelude::*;

    /// Text with markup-significant characters, quotes, whitespace and
    /// non-ASCII.
    pub fn arb_text() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-z_0-9]{1,12}",
            "[ -~]{0,16}",
            "[a-zA-Z &<>\"'#;\\[\\]\\\\\n\t]{0,16}",
            "[\u{e9}\u{4e2d}\u{1f600}\u{5d0} a]{0,8}",
        ]
    }

    fn arb_label() -> impl Strategy<Value = Option<OpinionLabel>> {
        prop_oneof![
            Just(None),
            (0usize..4).prop_map(|i| Some(OpinionLabel::Group(i))),
            Just(Some(OpinionLabel::Ambiguous)),
            Just(Some(OpinionLabel::Unlabeled)),
        ]
    }

    fn arb_time() -> impl Strategy<Value = Option<DateTime<Utc>>> {
        proptest::option::of((1_000_000_000i64..2_000_000_000, 0u32..1_000_000_000))
            .prop_map(|t| t.map(|(s, ns)| Utc.timestamp_opt(s, ns).unwrap()))
    }

    fn arb_attrs() -> impl Strategy<Value = NodeAttrs> {
        (arb_text(), arb_text(), any::<u64>(), any::<u64>(), arb_label()).prop_map(|(u, d, f, t, o)| NodeAttrs {
            username: u,
            display_name: d,
            followers_count: f,
            tweets_in_discussion: t,
            opinion: o,
        })
    }

    fn arb_visual() -> impl Strategy<Value = NodeVisual> {
        (-1e4f64..1e4, -1e4f64..1e4, 0.5f64..50.0, any::<[u8; 3]>())
            .prop_map(|(x, y, size, c)| NodeVisual { x, y, size, color: Rgb(c[0], c[1], c[2]) })
    }

    /// Weights stay within the range a JSON number holds exactly.
    pub fn arb_document(max_nodes: usize) -> impl Strategy<Value = GraphDocument> {
        let ids = proptest::collection::btree_set(any::<u64>(), 0..=max_nodes);
        let meta = (arb_text(), arb_time(), arb_time(), any::<u64>());
        (ids, meta, any::<bool>())
            .prop_flat_map(|(ids, meta, with_layout)| {
                let ids: Vec<u64> = ids.into_iter().collect();
                let n = ids.len();
                let attrs = proptest::collection::vec(arb_attrs(), n);
                let visuals = proptest::collection::vec(arb_visual(), n);
                let edges = if n < 2 {
                    Just(Vec::new()).boxed()
                } else {
                    proptest::collection::vec((0..n, 0..n, 0usize..4, 1u64..=(1 << 53)), 0..3 * n).boxed()
                };
                (Just(ids), Just(meta), Just(with_layout), attrs, visuals, edges)
            })
            .prop_map(|(ids, (query, from, to, unresolved), with_layout, attrs, visuals, edges)| {
                let mut graph = DiscussionGraph {
                    nodes: ids.iter().map(|&i| UserId(i)).zip(attrs).collect(),
                    edges: BTreeMap::new(),
                    metadata: GraphMetadata {
                        query,
                        collected_from: from,
                        collected_to: to,
                        unresolved_references: unresolved,
                    },
                };
                for (s, t, k, w) in edges {
                    if s != t {
                        let key = EdgeKey { source: UserId(ids[s]), target: UserId(ids[t]), kind: EdgeKind::ALL[k] };
                        graph.edges.insert(key, w);
                    }
                }
                // An empty layout cannot be told apart from none in a file.
                let visuals = (with_layout && !ids.is_empty()).then(|| ids.iter().map(|&i| UserId(i)).zip(visuals).collect());
                GraphDocument { graph, visuals }
            })
    }

    /// Exact on the graph, within `tol` on positions and sizes.
    pub fn same_document(a: &GraphDocument, b: &GraphDocument, tol: f64) -> Result<(), String> {
        if a.graph != b.graph {
            return Err(format!("graphs differ:\n{:?}\n{:?}", a.graph, b.graph));
        }
        match (&a.visuals, &b.visuals) {
            (None, None) => Ok(()),
            (Some(va), Some(vb)) => {
                if va.len() != vb.len() {
                    return Err("visual node sets differ".into());
                }
                for ((ia, x), (ib, y)) in va.iter().zip(vb) {
                    let close = (x.x - y.x).abs() <= tol && (x.y - y.y).abs() <= tol && (x.size - y.size).abs() <= tol;
                    if ia != ib || !close || x.color != y.color {
                        return Err(format!("visual for {ia} differs: {x:?} vs {y:?}"));
                    }
                }
                Ok(())
            }
            _ => Err("layout present on one side only".into()),
        }
    }
}
