mod common;

use std::collections::BTreeMap;
use std::time::Duration;

use agora::ingest::wire::{FollowersResponse, WireMeta};
use agora::ingest::{
    collect_discussion, get_followers, open_replay, search_tweets, CollectOptions, Fault, FaultKind, IngestError,
    RecordingSleeper, ReplayError, RetryPolicy, SearchParams, TweetPage,
};
use agora::store::{DiscussionKey, Store};
use agora_core::{TweetId, UserId};
use common::{search_pages, wire_user, write_replay, BASE_ID};
use proptest::prelude::*;

type Delivered = Vec<TweetId>;

fn run_search(path: &std::path::Path, since: Option<TweetId>, faults: Vec<Fault>) -> Result<(agora::ingest::CollectionReport, Delivered, Vec<Duration>), IngestError> {
    let mut source = open_replay(path).unwrap().with_faults(faults);
    let mut delivered = Vec::new();
    let mut sink = |page: &TweetPage, _next: Option<&str>| -> Result<u64, Box<dyn std::error::Error + Send + Sync>> {
        delivered.extend(page.tweets.iter().map(|t| t.id));
        Ok(page.tweets.len() as u64)
    };
    let mut sleeper = RecordingSleeper::default();
    let params = SearchParams { since_id: since, ..SearchParams::new("#test") };
    let report = search_tweets(&mut source, &params, &mut sink, &RetryPolicy::default(), &mut sleeper)?;
    Ok((report, delivered, sleeper.delays))
}

#[test]
fn five_tweets_then_nothing_newer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ndjson");
    write_replay(&path, &search_pages(5, 2, 3), &[]);
    let (report, delivered, _) = run_search(&path, None, vec![]).unwrap();
    assert_eq!((report.fetched, report.stored_new, report.retries), (5, 5, 0));
    assert_eq!(delivered.len(), 5);
    let max = *delivered.iter().max().unwrap();
    let (report, _, _) = run_search(&path, Some(max), vec![]).unwrap();
    assert_eq!(report.fetched, 0);
}

#[test]
fn single_429_is_retried_after_header_delay() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ndjson");
    write_replay(&path, &search_pages(5, 2, 3), &["#!fault 429@2 retry-after=1"]);
    let (report, delivered, delays) = run_search(&path, None, vec![]).unwrap();
    assert_eq!((report.fetched, report.retries), (5, 1));
    assert_eq!(delays, vec![Duration::from_secs(1)]);
    assert_eq!(delivered.len(), 5);
}

#[test]
fn exhausted_retries_and_hard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ndjson");
    write_replay(&path, &search_pages(5, 2, 3), &[]);
    let faults = (0..6).map(|_| Fault { page: 1, kind: FaultKind::Status { status: 503, retry_after: None } }).collect();
    match run_search(&path, None, faults) {
        Err(IngestError::SourceExhaustedRetries { retries: 5, .. }) => {}
        other => panic!("{other:?}"),
    }
    let auth = vec![Fault { page: 2, kind: FaultKind::Status { status: 401, retry_after: None } }];
    assert!(matches!(run_search(&path, None, auth), Err(IngestError::Auth(_))));
    let bad = vec![Fault { page: 1, kind: FaultKind::Status { status: 400, retry_after: None } }];
    assert!(matches!(run_search(&path, None, bad), Err(IngestError::QuerySyntax(_))));
}

#[test]
fn malformed_line_is_reported_by_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ndjson");
    let mut text = common::ndjson(&search_pages(4, 1, 2));
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "{not json";
    text = lines.join("\n");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(open_replay(&path), Err(ReplayError::MalformedLine { line: 3, .. })));
    assert!(matches!(open_replay(dir.path().join("missing.ndjson")), Err(ReplayError::FileMissing(_))));
}

#[test]
fn ten_line_file_yields_ten_pages() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ndjson");
    write_replay(&path, &search_pages(10, 1, 4), &[]);
    assert_eq!(open_replay(&path).unwrap().page_count(), Some(10));
    let (report, _, _) = run_search(&path, None, vec![]).unwrap();
    assert_eq!(report.fetched, 10);
}

fn follower_pages(pages: &[&[u64]]) -> Vec<FollowersResponse> {
    pages
        .iter()
        .enumerate()
        .map(|(p, ids)| FollowersResponse {
            data: ids.iter().map(|&i| wire_user(i)).collect(),
            meta: WireMeta { next_token: (p + 1 < pages.len()).then(|| "next".into()), ..WireMeta::default() },
        })
        .collect()
}

fn followers_of(dir: &std::path::Path, account: &str) -> Result<Vec<UserId>, IngestError> {
    let mut source = open_replay(dir).unwrap();
    let mut ids = Vec::new();
    let mut sleeper = RecordingSleeper::default();
    get_followers(&mut source, account, 1000, &RetryPolicy::default(), &mut sleeper, &mut |page| {
        ids.extend_from_slice(page);
        Ok(())
    })?;
    Ok(ids)
}

#[test]
fn follower_pagination_and_unknown_account() {
    let dir = tempfile::tempdir().unwrap();
    write_replay(&dir.path().join("alice.ndjson"), &follower_pages(&[&[1, 2], &[3]]), &[]);
    write_replay(&dir.path().join("loner.ndjson"), &follower_pages(&[&[]]), &[]);
    assert_eq!(followers_of(dir.path(), "alice").unwrap(), vec![UserId(101), UserId(102), UserId(103)]);
    assert_eq!(followers_of(dir.path(), "@Alice").unwrap().len(), 3);
    assert!(followers_of(dir.path(), "loner").unwrap().is_empty());
    assert!(matches!(followers_of(dir.path(), "nobody"), Err(IngestError::UnknownAccount(_))));
}

fn store_snapshot(store: &Store, query: &str) -> BTreeMap<TweetId, String> {
    let key = DiscussionKey::new(query).unwrap();
    store.iter_tweets(&key).unwrap().map(|t| (t.id, serde_json::to_string(&t).unwrap())).collect()
}

#[test]
fn resume_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ndjson");
    write_replay(&path, &search_pages(25, 4, 5), &[]);
    let mut store = Store::open(dir.path().join("store")).unwrap();
    let opts = CollectOptions::default();
    let mut sleeper = RecordingSleeper::default();
    let first = collect_discussion(&mut open_replay(&path).unwrap(), &mut store, "#test", &opts, &mut sleeper).unwrap();
    assert_eq!(first.stored_new, 25);
    let second = collect_discussion(&mut open_replay(&path).unwrap(), &mut store, "#TEST", &opts, &mut sleeper).unwrap();
    assert_eq!((second.fetched, second.stored_new), (0, 0));
    assert_eq!(second.resumed_from_id, Some(TweetId(BASE_ID + 24_000)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// Any schedule of transient faults delivers exactly the fixture ids
    /// newer than `since_id`, each once.
    #[test]
    fn exactly_once_under_transient_faults(
        n in 1u64..40,
        per_page in 1usize..8,
        since in prop::option::of(0u64..40),
        faults in prop::collection::vec((1usize..10, 0u8..3, prop::option::of(0u64..3)), 0..6),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ndjson");
        write_replay(&path, &search_pages(n, per_page, 4), &[]);
        let faults: Vec<Fault> = faults
            .into_iter()
            .map(|(page, kind, ra)| Fault {
                page,
                kind: match kind {
                    0 => FaultKind::Reset,
                    1 => FaultKind::Status { status: 429, retry_after: ra.map(Duration::from_secs) },
                    _ => FaultKind::Status { status: 502, retry_after: None },
                },
            })
            .collect();
        let since_id = since.map(|k| TweetId(BASE_ID + k * 1000));
        let (report, mut delivered, _) = run_search(&path, since_id, faults).unwrap();
        delivered.sort();
        let expected: Vec<TweetId> =
            (0..n).map(|k| TweetId(BASE_ID + k * 1000)).filter(|id| since_id.is_none_or(|s| *id > s)).collect();
        prop_assert_eq!(&delivered, &expected);
        prop_assert_eq!(report.fetched, expected.len() as u64);
        prop_assert_eq!(report.stored_new + report.duplicates, report.fetched);
    }
}

#[test]
fn store_survives_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.ndjson");
    write_replay(&path, &search_pages(12, 5, 3), &[]);
    let root = dir.path().join("store");
    let before = {
        let mut store = Store::open(&root).unwrap();
        collect_discussion(&mut open_replay(&path).unwrap(), &mut store, "#test", &CollectOptions::default(), &mut RecordingSleeper::default())
            .unwrap();
        store.save_followers("alice", [UserId(1), UserId(2)]).unwrap();
        store_snapshot(&store, "#test")
    };
    let store = Store::open(&root).unwrap();
    assert_eq!(store_snapshot(&store, "#test"), before);
    assert_eq!(store.load_followers("alice").unwrap().len(), 2);
    let times: Vec<_> = store.iter_tweets(&DiscussionKey::new("#test").unwrap()).unwrap().map(|t| (t.created_at, t.id)).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}
