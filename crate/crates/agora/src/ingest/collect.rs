//! Pagination drivers with retry and back-off, plus store-backed collection
//! with resume.

use std::collections::HashSet;
use std::time::Duration;

use agora_core::{TweetId, UserId};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::source::{SearchRequest, SourceError, TweetPage, TweetSource};
use crate::store::{Checkpoint, DiscussionKey, Store, StoreError, TweetBatch};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries allowed for a single page before giving up.
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 5, base_delay: Duration::from_secs(1), max_delay: Duration::from_secs(60) }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (0-based): the server's
    /// `retry-after` if it sent one, else `base·2^attempt` capped.
    pub fn delay(&self, attempt: u32, retry_after: Option<Duration>) -> Duration {
        retry_after.unwrap_or_else(|| {
            let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
            self.base_delay.saturating_mul(factor).min(self.max_delay)
        })
    }
}

pub trait Sleeper {
    fn sleep(&mut self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&mut self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Records requested delays without sleeping.
#[derive(Debug, Default, Clone)]
pub struct RecordingSleeper {
    pub delays: Vec<Duration>,
}

impl Sleeper for RecordingSleeper {
    fn sleep(&mut self, duration: Duration) {
        self.delays.push(duration);
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("query must not be empty")]
    EmptyQuery,
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("query rejected: {0}")]
    QuerySyntax(String),
    #[error("unknown account {0:?}")]
    UnknownAccount(String),
    #[error("giving up after {retries} retries: {last}")]
    SourceExhaustedRetries { retries: u32, last: SourceError },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("page sink failed: {0}")]
    Sink(Box<dyn std::error::Error + Send + Sync>),
}

impl IngestError {
    fn from_source(err: SourceError) -> Self {
        match err {
            SourceError::Auth(m) => IngestError::Auth(m),
            SourceError::QuerySyntax(m) => IngestError::QuerySyntax(m),
            SourceError::UnknownAccount(a) => IngestError::UnknownAccount(a),
            SourceError::Malformed(m) => IngestError::Malformed(m),
            transient @ SourceError::Transient { .. } => {
                IngestError::SourceExhaustedRetries { retries: 0, last: transient }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionReport {
    pub discussion: String,
    pub fetched: u64,
    pub stored_new: u64,
    pub duplicates: u64,
    pub retries: u64,
    pub resumed_from_id: Option<TweetId>,
}

/// Receives each page once, in order. Returns how many of the page's tweets
/// were new to the sink.
pub trait PageSink {
    fn accept(&mut self, page: &TweetPage, next_token: Option<&str>) -> Result<u64, Box<dyn std::error::Error + Send + Sync>>;
}

impl<F> PageSink for F
where
    F: FnMut(&TweetPage, Option<&str>) -> Result<u64, Box<dyn std::error::Error + Send + Sync>>,
{
    fn accept(&mut self, page: &TweetPage, next_token: Option<&str>) -> Result<u64, Box<dyn std::error::Error + Send + Sync>> {
        self(page, next_token)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchParams {
    pub query: String,
    pub since_id: Option<TweetId>,
    pub page_size: usize,
    /// Continue a previous run from this page token.
    pub resume_token: Option<String>,
}

impl SearchParams {
    pub fn new(query: impl Into<String>) -> Self {
        Self { query: query.into(), since_id: None, page_size: 100, resume_token: None }
    }
}

fn with_retries<T>(
    policy: &RetryPolicy,
    sleeper: &mut dyn Sleeper,
    retries: &mut u64,
    mut call: impl FnMut() -> Result<T, SourceError>,
) -> Result<T, IngestError> {
    let mut attempt = 0;
    loop {
        match call() {
            Ok(v) => return Ok(v),
            Err(err) if err.is_transient() => {
                if attempt >= policy.max_retries {
                    return Err(IngestError::SourceExhaustedRetries { retries: attempt, last: err });
                }
                let retry_after = match &err {
                    SourceError::Transient { retry_after, .. } => *retry_after,
                    _ => None,
                };
                let delay = policy.delay(attempt, retry_after);
                warn!("{err}; retrying in {delay:?}");
                sleeper.sleep(delay);
                attempt += 1;
                *retries += 1;
            }
            Err(err) => return Err(IngestError::from_source(err)),
        }
    }
}

/// Follows search pagination to exhaustion, handing every tweet newer than
/// `since_id` to `sink` exactly once.
pub fn search_tweets<S: TweetSource + ?Sized>(
    source: &mut S,
    params: &SearchParams,
    sink: &mut dyn PageSink,
    policy: &RetryPolicy,
    sleeper: &mut dyn Sleeper,
) -> Result<CollectionReport, IngestError> {
    if params.query.trim().is_empty() {
        return Err(IngestError::EmptyQuery);
    }
    let mut report = CollectionReport {
        discussion: params.query.clone(),
        resumed_from_id: params.since_id,
        ..CollectionReport::default()
    };
    let mut seen: HashSet<TweetId> = HashSet::new();
    let mut token = params.resume_token.clone();

    loop {
        let req = SearchRequest {
            query: &params.query,
            since_id: params.since_id,
            page_size: params.page_size,
            next_token: token.as_deref(),
        };
        let mut page = with_retries(policy, sleeper, &mut report.retries, || source.search_page(&req))?;
        page.tweets.retain(|t| params.since_id.is_none_or(|s| t.id > s) && seen.insert(t.id));
        let fetched = page.tweets.len() as u64;
        let new = sink.accept(&page, page.next_token.as_deref()).map_err(IngestError::Sink)?;
        report.fetched += fetched;
        report.stored_new += new;
        report.duplicates += fetched - new.min(fetched);
        token = page.next_token;
        if token.is_none() {
            break;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowersReport {
    pub account: String,
    pub fetched: u64,
    pub retries: u64,
}

/// Streams every follower id of `account` exactly once to `on_page`.
pub fn get_followers<S: TweetSource + ?Sized>(
    source: &mut S,
    account: &str,
    page_size: usize,
    policy: &RetryPolicy,
    sleeper: &mut dyn Sleeper,
    on_page: &mut dyn FnMut(&[UserId]) -> Result<(), IngestError>,
) -> Result<FollowersReport, IngestError> {
    let mut report = FollowersReport { account: account.to_string(), ..FollowersReport::default() };
    let mut seen = HashSet::new();
    let mut token: Option<String> = None;
    loop {
        let page =
            with_retries(policy, sleeper, &mut report.retries, || source.followers_page(account, token.as_deref(), page_size))?;
        let ids: Vec<UserId> = page.users.iter().map(|u| u.id).filter(|id| seen.insert(*id)).collect();
        report.fetched += ids.len() as u64;
        on_page(&ids)?;
        token = page.next_token;
        if token.is_none() {
            break;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectOptions {
    pub page_size: usize,
    pub retry: RetryPolicy,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self { page_size: 100, retry: RetryPolicy::default() }
    }
}

/// Collects a discussion into the store.
///
/// A fresh run asks only for tweets newer than the newest stored id. The
/// run's `since_id` and current page token are checkpointed after every
/// committed page, so an interrupted run resumes where it stopped instead
/// of skipping the older pages it never reached.
pub fn collect_discussion<S: TweetSource + ?Sized>(
    source: &mut S,
    store: &mut Store,
    query: &str,
    options: &CollectOptions,
    sleeper: &mut dyn Sleeper,
) -> Result<CollectionReport, IngestError> {
    if query.trim().is_empty() {
        return Err(IngestError::EmptyQuery);
    }
    let key = DiscussionKey::new(query)?;
    let (since_id, resume_token) = match store.checkpoint(&key)? {
        Some(cp) => {
            info!("resuming interrupted collection of {key} from page token {:?}", cp.next_token);
            (cp.since_id, cp.next_token)
        }
        None => (store.newest_tweet_id(&key)?, None),
    };
    store.set_checkpoint(&key, Some(&Checkpoint { since_id, next_token: resume_token.clone() }))?;

    let params = SearchParams { query: query.to_string(), since_id, page_size: options.page_size, resume_token };
    let report = {
        let mut sink = |page: &TweetPage, next: Option<&str>| -> Result<u64, Box<dyn std::error::Error + Send + Sync>> {
            let batch = TweetBatch {
                tweets: page.tweets.clone(),
                users: page.users.clone(),
                referenced: page.referenced.clone(),
                raw: Some(page.raw.clone()),
            };
            let outcome = store.upsert_tweets(&key, &batch)?;
            if let Some(next) = next {
                store.set_checkpoint(&key, Some(&Checkpoint { since_id, next_token: Some(next.to_string()) }))?;
            }
            Ok(outcome.inserted)
        };
        search_tweets(source, &params, &mut sink, &options.retry, sleeper)?
    };
    store.set_checkpoint(&key, None)?;
    Ok(report)
}

/// Collects a seed account's followers; saving is a set union, so reruns
/// are harmless.
pub fn collect_followers<S: TweetSource + ?Sized>(
    source: &mut S,
    store: &mut Store,
    account: &str,
    options: &CollectOptions,
    sleeper: &mut dyn Sleeper,
) -> Result<FollowersReport, IngestError> {
    let mut save = |ids: &[UserId]| -> Result<(), IngestError> {
        store.save_followers(account, ids.iter().copied())?;
        Ok(())
    };
    let page_size = options.page_size.max(1);
    get_followers(source, account, page_size, &options.retry, sleeper, &mut save)
}
