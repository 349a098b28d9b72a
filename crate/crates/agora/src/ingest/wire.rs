//! Response shapes of the remote v2 API, field names kept verbatim.

use agora_core::{Mention, ReferenceKind, TweetId, TweetRecord, TweetReference, UserId, UserStub};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireTweet {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub referenced_tweets: Vec<WireReference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_reply_to_user_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<WireEntities>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireReference {
    #[serde(rename = "type")]
    pub kind: String,
    pub id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireEntities {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mentions: Vec<WireMention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMention {
    #[serde(default)]
    pub start: u32,
    #[serde(default)]
    pub end: u32,
    pub username: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireUser {
    pub id: String,
    pub username: String,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub public_metrics: Option<WirePublicMetrics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WirePublicMetrics {
    #[serde(default)]
    pub followers_count: u64,
    #[serde(default)]
    pub following_count: u64,
    #[serde(default)]
    pub tweet_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireIncludes {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub users: Vec<WireUser>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tweets: Vec<WireTweet>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_token: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newest_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oldest_id: Option<String>,
}

/// One page of `GET /2/tweets/search/recent`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    #[serde(default)]
    pub data: Vec<WireTweet>,
    #[serde(default)]
    pub includes: WireIncludes,
    #[serde(default)]
    pub meta: WireMeta,
}

/// One page of `GET /2/users/:id/followers`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FollowersResponse {
    #[serde(default)]
    pub data: Vec<WireUser>,
    #[serde(default)]
    pub meta: WireMeta,
}

/// `GET /2/users/by/username/:username`; unknown handles come back with
/// `errors` and no `data`.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct UserLookupResponse {
    pub data: Option<WireUser>,
    #[serde(default)]
    pub errors: Vec<serde_json::Value>,
}

fn parse_id<T: std::str::FromStr>(field: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("{field}: invalid id {value:?}"))
}

impl WireTweet {
    pub fn to_record(&self) -> Result<TweetRecord, String> {
        let id: TweetId = parse_id("id", &self.id)?;
        let author = self.author_id.as_deref().ok_or_else(|| format!("tweet {id}: missing author_id"))?;
        let created_at = self.created_at.ok_or_else(|| format!("tweet {id}: missing created_at"))?;
        let referenced = self
            .referenced_tweets
            .iter()
            .map(|r| {
                let kind = match r.kind.as_str() {
                    "retweeted" => ReferenceKind::Retweeted,
                    "quoted" => ReferenceKind::Quoted,
                    "replied_to" => ReferenceKind::RepliedTo,
                    other => return Err(format!("tweet {id}: unknown reference type {other:?}")),
                };
                Ok(TweetReference { kind, tweet_id: parse_id("referenced_tweets.id", &r.id)? })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let mentions = self
            .entities
            .iter()
            .flat_map(|e| &e.mentions)
            .map(|m| {
                let user_id = m.id.as_deref().map(|v| parse_id("mentions.id", v)).transpose()?;
                Ok(Mention { user_id, username: m.username.clone() })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(TweetRecord {
            id,
            text: self.text.clone(),
            author_id: parse_id("author_id", author)?,
            created_at,
            referenced,
            reply_to_user_id: self.in_reply_to_user_id.as_deref().map(|v| parse_id("in_reply_to_user_id", v)).transpose()?,
            mentions,
            lang: self.lang.clone(),
        })
    }

    pub fn from_record(t: &TweetRecord) -> Self {
        let kind = |k: ReferenceKind| match k {
            ReferenceKind::Retweeted => "retweeted",
            ReferenceKind::Quoted => "quoted",
            ReferenceKind::RepliedTo => "replied_to",
        };
        let mut start = 0u32;
        let mentions: Vec<WireMention> = t
            .mentions
            .iter()
            .map(|m| {
                let s = t.text.find(&format!("@{}", m.username)).map(|p| p as u32).unwrap_or(start);
                start = s + m.username.len() as u32 + 1;
                WireMention { start: s, end: start, username: m.username.clone(), id: m.user_id.map(|u| u.to_string()) }
            })
            .collect();
        WireTweet {
            id: t.id.to_string(),
            text: t.text.clone(),
            author_id: Some(t.author_id.to_string()),
            created_at: Some(t.created_at),
            referenced_tweets: t
                .referenced
                .iter()
                .map(|r| WireReference { kind: kind(r.kind).into(), id: r.tweet_id.to_string() })
                .collect(),
            in_reply_to_user_id: t.reply_to_user_id.map(|u| u.to_string()),
            entities: (!mentions.is_empty()).then_some(WireEntities { mentions }),
            lang: t.lang.clone(),
        }
    }
}

impl WireUser {
    pub fn to_stub(&self) -> Result<UserStub, String> {
        if self.username.is_empty() {
            return Err(format!("user {}: empty username", self.id));
        }
        Ok(UserStub {
            id: parse_id::<UserId>("user id", &self.id)?,
            username: self.username.clone(),
            display_name: self.name.clone(),
            followers_count: self.public_metrics.as_ref().map_or(0, |m| m.followers_count),
        })
    }

    pub fn from_stub(u: &UserStub) -> Self {
        WireUser {
            id: u.id.to_string(),
            username: u.username.clone(),
            name: u.display_name.clone(),
            public_metrics: Some(WirePublicMetrics { followers_count: u.followers_count, ..Default::default() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = r#"{
      "data": [{
        "id": "1600000000000000002", "text": "RT @bob: hello @carol", "author_id": "11",
        "created_at": "2023-01-02T03:04:05.000Z",
        "referenced_tweets": [{"type": "retweeted", "id": "1600000000000000001"}],
        "entities": {"mentions": [{"start": 3, "end": 7, "username": "bob", "id": "12"},
                                  {"start": 15, "end": 21, "username": "carol"}]},
        "lang": "en"
      }],
      "includes": {
        "users": [{"id": "11", "username": "alice", "name": "Alice", "public_metrics": {"followers_count": 5}}],
        "tweets": [{"id": "1600000000000000001", "text": "hello", "author_id": "12", "created_at": "2023-01-02T03:00:00.000Z"}]
      },
      "meta": {"result_count": 1, "next_token": "b26v89c19zqg8o3fo7"}
    }"#;

    #[test]
    fn parses_search_page() {
        let page: SearchResponse = serde_json::from_str(PAGE).unwrap();
        assert_eq!(page.meta.next_token.as_deref(), Some("b26v89c19zqg8o3fo7"));
        let rec = page.data[0].to_record().unwrap();
        assert_eq!(rec.author_id, UserId(11));
        assert_eq!(rec.referenced[0].kind, ReferenceKind::Retweeted);
        assert_eq!(rec.mentions[1].user_id, None);
        let user = page.includes.users[0].to_stub().unwrap();
        assert_eq!(user.followers_count, 5);
        assert_eq!(user.display_name, "Alice");
    }

    #[test]
    fn record_wire_round_trip() {
        let page: SearchResponse = serde_json::from_str(PAGE).unwrap();
        let rec = page.data[0].to_record().unwrap();
        assert_eq!(WireTweet::from_record(&rec).to_record().unwrap(), rec);
    }

    #[test]
    fn rejects_bad_ids() {
        let t = WireTweet { id: "abc".into(), ..Default::default() };
        assert!(t.to_record().is_err());
        let t = WireTweet {
            id: "1".into(),
            author_id: Some("2".into()),
            created_at: Some(Utc::now()),
            referenced_tweets: vec![WireReference { kind: "retweeted".into(), id: "".into() }],
            ..Default::default()
        };
        assert!(t.to_record().is_err());
    }
}
