//! Client for the remote v2 API.

use std::time::Duration;

use ureq::Agent;

use super::source::{FollowerPage, SearchRequest, SourceError, TweetPage, TweetSource};
use super::wire::{FollowersResponse, SearchResponse, UserLookupResponse};

pub const DEFAULT_BASE_URL: &str = "https://api.twitter.com";

const TWEET_FIELDS: &str = "author_id,created_at,entities,in_reply_to_user_id,lang,referenced_tweets";
const USER_FIELDS: &str = "name,username,public_metrics";
const EXPANSIONS: &str = "author_id,referenced_tweets.id,referenced_tweets.id.author_id,entities.mentions.username,in_reply_to_user_id";
const MAX_FOLLOWER_PAGE: usize = 1000;

pub struct HttpSource {
    agent: Agent,
    base_url: String,
    token: String,
    /// Username to id, resolved once per account.
    user_ids: Vec<(String, String)>,
}

impl HttpSource {
    pub fn new(base_url: impl Into<String>, token: impl Into<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self { agent, base_url: base_url.into().trim_end_matches('/').to_string(), token: token.into(), user_ids: Vec::new() }
    }

    fn get(&self, path: &str, query: &[(&str, String)]) -> Result<String, SourceError> {
        let mut req = self
            .agent
            .get(format!("{}{}", self.base_url, path))
            .header("Authorization", format!("Bearer {}", self.token));
        for (k, v) in query {
            req = req.query(*k, v);
        }
        let mut resp = req.call().map_err(|e| SourceError::Transient { status: None, retry_after: None, message: e.to_string() })?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| SourceError::Transient { status: Some(status), retry_after, message: e.to_string() })?;
        if (200..300).contains(&status) {
            Ok(body)
        } else {
            Err(SourceError::from_status(status, retry_after, &body))
        }
    }

    fn user_id(&mut self, account: &str) -> Result<String, SourceError> {
        let handle = account.trim_start_matches('@').to_lowercase();
        if let Some((_, id)) = self.user_ids.iter().find(|(h, _)| *h == handle) {
            return Ok(id.clone());
        }
        let body = match self.get(&format!("/2/users/by/username/{handle}"), &[]) {
            Err(SourceError::QuerySyntax(m)) if m.starts_with("HTTP 404") => {
                return Err(SourceError::UnknownAccount(account.to_string()))
            }
            other => other?,
        };
        let lookup: UserLookupResponse = serde_json::from_str(&body).map_err(|e| SourceError::Malformed(e.to_string()))?;
        let user = lookup.data.ok_or_else(|| SourceError::UnknownAccount(account.to_string()))?;
        self.user_ids.push((handle, user.id.clone()));
        Ok(user.id)
    }
}

impl TweetSource for HttpSource {
    fn search_page(&mut self, req: &SearchRequest<'_>) -> Result<TweetPage, SourceError> {
        let mut query = vec![
            ("query", req.query.to_string()),
            ("max_results", req.page_size.clamp(10, 100).to_string()),
            ("tweet.fields", TWEET_FIELDS.to_string()),
            ("user.fields", USER_FIELDS.to_string()),
            ("expansions", EXPANSIONS.to_string()),
        ];
        if let Some(since) = req.since_id {
            query.push(("since_id", since.to_string()));
        }
        if let Some(token) = req.next_token {
            query.push(("next_token", token.to_string()));
        }
        let body = self.get("/2/tweets/search/recent", &query)?;
        let resp: SearchResponse = serde_json::from_str(&body).map_err(|e| SourceError::Malformed(e.to_string()))?;
        TweetPage::from_response(resp)
    }

    fn followers_page(&mut self, account: &str, next_token: Option<&str>, page_size: usize) -> Result<FollowerPage, SourceError> {
        let id = self.user_id(account)?;
        let mut query = vec![
            ("max_results", page_size.clamp(1, MAX_FOLLOWER_PAGE).to_string()),
            ("user.fields", USER_FIELDS.to_string()),
        ];
        if let Some(token) = next_token {
            query.push(("pagination_token", token.to_string()));
        }
        let body = self.get(&format!("/2/users/{id}/followers"), &query)?;
        let resp: FollowersResponse = serde_json::from_str(&body).map_err(|e| SourceError::Malformed(e.to_string()))?;
        FollowerPage::from_response(resp)
    }
}
