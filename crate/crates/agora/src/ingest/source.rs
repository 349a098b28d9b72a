use std::time::Duration;

use agora_core::{TweetId, TweetRecord, UserStub};

use super::wire::{FollowersResponse, SearchResponse};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchRequest<'a> {
    pub query: &'a str,
    pub since_id: Option<TweetId>,
    pub page_size: usize,
    pub next_token: Option<&'a str>,
}

/// A search page converted to records, with the raw payload kept for the
/// store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TweetPage {
    pub raw: serde_json::Value,
    pub tweets: Vec<TweetRecord>,
    pub users: Vec<UserStub>,
    /// Referenced tweets embedded as expansions.
    pub referenced: Vec<TweetRecord>,
    pub next_token: Option<String>,
}

impl TweetPage {
    pub fn from_response(resp: SearchResponse) -> Result<Self, SourceError> {
        let bad = SourceError::Malformed;
        let tweets = resp.data.iter().map(|t| t.to_record()).collect::<Result<_, _>>().map_err(bad)?;
        let users = resp.includes.users.iter().map(|u| u.to_stub()).collect::<Result<_, _>>().map_err(bad)?;
        let referenced = resp.includes.tweets.iter().map(|t| t.to_record()).collect::<Result<_, _>>().map_err(bad)?;
        let raw = serde_json::to_value(&resp).map_err(|e| SourceError::Malformed(e.to_string()))?;
        Ok(TweetPage { raw, tweets, users, referenced, next_token: resp.meta.next_token })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FollowerPage {
    pub users: Vec<UserStub>,
    pub next_token: Option<String>,
}

impl FollowerPage {
    pub fn from_response(resp: FollowersResponse) -> Result<Self, SourceError> {
        let users = resp.data.iter().map(|u| u.to_stub()).collect::<Result<_, _>>().map_err(SourceError::Malformed)?;
        Ok(FollowerPage { users, next_token: resp.meta.next_token })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SourceError {
    /// Rate limiting, server errors and dropped connections.
    #[error("transient failure ({}): {message}", status.map_or("connection".to_string(), |s| s.to_string()))]
    Transient { status: Option<u16>, retry_after: Option<Duration>, message: String },
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("request rejected: {0}")]
    QuerySyntax(String),
    #[error("unknown account {0:?}")]
    UnknownAccount(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl SourceError {
    pub fn from_status(status: u16, retry_after: Option<Duration>, body: &str) -> Self {
        let message = body.chars().take(300).collect::<String>();
        match status {
            401 | 403 => SourceError::Auth(message),
            429 | 500..=599 => SourceError::Transient { status: Some(status), retry_after, message },
            _ => SourceError::QuerySyntax(format!("HTTP {status}: {message}")),
        }
    }

    pub fn is_transient(&self) -> bool {
        matches!(self, SourceError::Transient { .. })
    }
}

/// Paginated access to tweets and followers. Implementations serve one
/// page per call and never retry on their own.
pub trait TweetSource {
    fn search_page(&mut self, req: &SearchRequest<'_>) -> Result<TweetPage, SourceError>;

    fn followers_page(
        &mut self,
        account: &str,
        next_token: Option<&str>,
        page_size: usize,
    ) -> Result<FollowerPage, SourceError>;
}

impl<T: TweetSource + ?Sized> TweetSource for &mut T {
    fn search_page(&mut self, req: &SearchRequest<'_>) -> Result<TweetPage, SourceError> {
        (**self).search_page(req)
    }

    fn followers_page(&mut self, account: &str, next_token: Option<&str>, page_size: usize) -> Result<FollowerPage, SourceError> {
        (**self).followers_page(account, next_token, page_size)
    }
}

impl<T: TweetSource + ?Sized> TweetSource for Box<T> {
    fn search_page(&mut self, req: &SearchRequest<'_>) -> Result<TweetPage, SourceError> {
        (**self).search_page(req)
    }

    fn followers_page(&mut self, account: &str, next_token: Option<&str>, page_size: usize) -> Result<FollowerPage, SourceError> {
        (**self).followers_page(account, next_token, page_size)
    }
}
