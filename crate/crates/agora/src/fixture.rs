//! Synthetic two-community discussions in the replay format.
//!
//! Users `0..per_side` form side A, the next `per_side` form side B and any
//! remaining users float between them. Every user first posts one original
//! tweet; the rest of the tweets are retweets, quotes, replies or mentions
//! aimed at the actor's own side with probability `1 - p_cross` and at the
//! other side otherwise. Side members follow their side's seed account.
//!
//! Output layout under the target directory:
//!
//! ```text
//! tweets.ndjson            search pages, newest first
//! followers/side_a.ndjson  follower pages of the first seed
//! followers/side_b.ndjson
//! manifest.json
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::wire::{
    FollowersResponse, SearchResponse, WireEntities, WireIncludes, WireMention, WireMeta, WirePublicMetrics, WireReference,
    WireTweet, WireUser,
};

pub const SEED_ACCOUNTS: [&str; 2] = ["side_a", "side_b"];
pub const DEFAULT_QUERY: &str = "#agora";
const TWEETS_PER_PAGE: usize = 100;
const FOLLOWERS_PER_PAGE: usize = 1000;
const FIRST_USER_ID: u64 = 1_000;
const FIRST_TWEET_ID: u64 = 1_500_000_000_000_000_000;
/// Fraction of floating users that follow each seed.
const FLOATER_FOLLOW_P: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureParams {
    pub users: usize,
    /// Members of each side; defaults to half the users.
    pub per_side: Option<usize>,
    pub p_cross: f64,
    pub tweets: usize,
    pub seed: u64,
    pub query: String,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self { users: 200, per_side: None, p_cross: 0.1, tweets: 2000, seed: 0, query: DEFAULT_QUERY.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("invalid fixture parameters: {0}")]
    InvalidParams(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub params: FixtureParams,
    pub per_side: usize,
    pub query: String,
    pub seeds: Vec<String>,
    pub tweets_file: PathBuf,
    pub followers_dir: PathBuf,
    pub tweet_pages: usize,
    pub authors: usize,
    pub followers: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    A,
    B,
    Float,
}

struct Generated {
    /// Pages in file order (newest tweets first).
    tweet_pages: Vec<SearchResponse>,
    follower_pages: [Vec<FollowersResponse>; 2],
    authors: usize,
}

fn user(i: usize) -> WireUser {
    WireUser {
        id: (FIRST_USER_ID + i as u64).to_string(),
        username: format!("user{i}"),
        name: format!("User {i}"),
        public_metrics: Some(WirePublicMetrics { followers_count: (i as u64 * 37) % 1000, ..WirePublicMetrics::default() }),
    }
}

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 3, 1, 12, 0, 0).single().expect("valid date")
}

impl FixtureParams {
    fn per_side(&self) -> usize {
        self.per_side.unwrap_or(self.users / 2)
    }

    fn validate(&self) -> Result<(), FixtureError> {
        let bad = |m: &str| Err(FixtureError::InvalidParams(m.into()));
        if self.users < 2 {
            return bad("need at least 2 users");
        }
        let per_side = self.per_side();
        if per_side == 0 || 2 * per_side > self.users {
            return bad("per-side must be positive and at most half the users");
        }
        if !(0.0..=1.0).contains(&self.p_cross) {
            return bad("p-cross must be within [0, 1]");
        }
        if self.query.trim().is_empty() {
            return bad("query must not be empty");
        }
        Ok(())
    }

    fn side(&self, i: usize) -> Side {
        let per_side = self.per_side();
        if i < per_side {
            Side::A
        } else if i < 2 * per_side {
            Side::B
        } else {
            Side::Float
        }
    }

    fn generate(&self) -> Generated {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let per_side = self.per_side();
        let members = |side: Side| -> std::ops::Range<usize> {
            match side {
                Side::A => 0..per_side,
                Side::B => per_side..2 * per_side,
                Side::Float => 2 * per_side..self.users,
            }
        };

        // (tweet, author index, mentioned user indices)
        let mut tweets: Vec<(WireTweet, usize, Vec<usize>)> = Vec::with_capacity(self.tweets);
        let mut originals: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut all_originals: Vec<usize> = Vec::new();
        let mut authors = std::collections::BTreeSet::new();

        for k in 0..self.tweets {
            let id = (FIRST_TWEET_ID + k as u64 * 4096).to_string();
            let created_at = Some(epoch() + Duration::seconds(k as i64));
            let mut t = WireTweet { id, created_at, lang: Some("en".into()), ..WireTweet::default() };
            let actor = if k < self.users { k } else { rng.random_range(0..self.users) };
            t.author_id = Some((FIRST_USER_ID + actor as u64).to_string());
            authors.insert(actor);

            if k < self.users {
                t.text = format!("{} original thought {k}", self.query);
                match self.side(actor) {
                    Side::A => originals[0].push(k),
                    Side::B => originals[1].push(k),
                    Side::Float => {}
                }
                all_originals.push(k);
                tweets.push((t, actor, Vec::new()));
                continue;
            }

            let own = self.side(actor);
            let cross = rng.random_bool(self.p_cross);
            let target_side = match (own, cross) {
                (Side::A, false) | (Side::B, true) => Side::A,
                (Side::B, false) | (Side::A, true) => Side::B,
                (Side::Float, _) => {
                    if rng.random_bool(0.5) {
                        Side::A
                    } else {
                        Side::B
                    }
                }
            };
            let pool = match target_side {
                Side::A => &originals[0],
                Side::B => &originals[1],
                Side::Float => &all_originals,
            };
            let roll: f64 = rng.random();
            let mut mentioned = Vec::new();
            if roll < 0.9 && !pool.is_empty() {
                let target_tweet = pool[rng.random_range(0..pool.len())];
                let (target, target_author) = (&tweets[target_tweet].0, tweets[target_tweet].1);
                if target_author == actor {
                    t.text = format!("{} thinking again {k}", self.query);
                    tweets.push((t, actor, mentioned));
                    continue;
                }
                let target_user = user(target_author);
                let kind = if roll < 0.5 {
                    "retweeted"
                } else if roll < 0.7 {
                    "quoted"
                } else {
                    "replied_to"
                };
                t.referenced_tweets = vec![WireReference { kind: kind.into(), id: target.id.clone() }];
                match kind {
                    "retweeted" => {
                        let prefix = format!("RT @{}: ", target_user.username);
                        t.text = format!("{prefix}{}", target.text);
                        t.entities = Some(WireEntities {
                            mentions: vec![WireMention {
                                start: 3,
                                end: 4 + target_user.username.len() as u32,
                                username: target_user.username.clone(),
                                id: Some(target_user.id.clone()),
                            }],
                        });
                        mentioned.push(target_author);
                    }
                    "replied_to" => {
                        t.text = format!("@{} I disagree {}", target_user.username, self.query);
                        t.in_reply_to_user_id = Some(target_user.id.clone());
                        t.entities = Some(WireEntities {
                            mentions: vec![WireMention {
                                start: 0,
                                end: 1 + target_user.username.len() as u32,
                                username: target_user.username.clone(),
                                id: Some(target_user.id.clone()),
                            }],
                        });
                        mentioned.push(target_author);
                    }
                    _ => t.text = format!("{} see this {k}", self.query),
                }
            } else {
                let range = members(target_side);
                let range = if range.is_empty() { 0..self.users } else { range };
                let target = rng.random_range(range);
                if target == actor {
                    t.text = format!("{} just me {k}", self.query);
                } else {
                    let u = user(target);
                    t.text = format!("{} hello @{}", self.query, u.username);
                    let start = self.query.chars().count() as u32 + 7;
                    t.entities = Some(WireEntities {
                        mentions: vec![WireMention {
                            start,
                            end: start + 1 + u.username.len() as u32,
                            username: u.username.clone(),
                            id: Some(u.id.clone()),
                        }],
                    });
                    mentioned.push(target);
                }
            }
            tweets.push((t, actor, mentioned));
        }

        let by_id: std::collections::HashMap<String, usize> =
            tweets.iter().enumerate().map(|(i, (t, _, _))| (t.id.clone(), i)).collect();
        let order: Vec<usize> = (0..tweets.len()).rev().collect();
        let chunks: Vec<&[usize]> = order.chunks(TWEETS_PER_PAGE).collect();
        let pages = chunks.len();
        let tweet_pages = chunks
            .into_iter()
            .enumerate()
            .map(|(p, chunk)| {
                let mut users = std::collections::BTreeMap::new();
                let mut referenced = std::collections::BTreeMap::new();
                for &i in chunk {
                    let (t, author, mentioned) = &tweets[i];
                    users.insert(*author, user(*author));
                    for &m in mentioned {
                        users.insert(m, user(m));
                    }
                    for r in &t.referenced_tweets {
                        let j = by_id[&r.id];
                        referenced.insert(j, tweets[j].0.clone());
                        users.insert(tweets[j].1, user(tweets[j].1));
                    }
                }
                let data: Vec<WireTweet> = chunk.iter().map(|&i| tweets[i].0.clone()).collect();
                SearchResponse {
                    meta: WireMeta {
                        next_token: (p + 1 < pages).then(|| format!("page{}", p + 1)),
                        result_count: Some(data.len() as u64),
                        newest_id: data.first().map(|t| t.id.clone()),
                        oldest_id: data.last().map(|t| t.id.clone()),
                    },
                    data,
                    includes: WireIncludes { users: users.into_values().collect(), tweets: referenced.into_values().collect() },
                }
            })
            .collect();

        let mut followers: [Vec<usize>; 2] = [members(Side::A).collect(), members(Side::B).collect()];
        for i in members(Side::Float) {
            for list in followers.iter_mut() {
                if rng.random_bool(FLOATER_FOLLOW_P) {
                    list.push(i);
                }
            }
        }
        let follower_pages = followers.map(|list| {
            let chunks: Vec<&[usize]> = list.chunks(FOLLOWERS_PER_PAGE).collect();
            let n = chunks.len();
            chunks
                .into_iter()
                .enumerate()
                .map(|(p, chunk)| FollowersResponse {
                    data: chunk.iter().map(|&i| user(i)).collect(),
                    meta: WireMeta {
                        next_token: (p + 1 < n).then(|| format!("page{}", p + 1)),
                        result_count: Some(chunk.len() as u64),
                        ..WireMeta::default()
                    },
                })
                .collect()
        });

        Generated { tweet_pages, follower_pages, authors: authors.len() }
    }
}

fn write_ndjson<T: Serialize>(path: &Path, pages: &[T]) -> Result<(), FixtureError> {
    let io = |source| FixtureError::Io { path: path.to_path_buf(), source };
    let mut out = Vec::new();
    for p in pages {
        serde_json::to_writer(&mut out, p).expect("page serializes");
        out.push(b'\n');
    }
    fs::File::create(path).and_then(|mut f| f.write_all(&out)).map_err(io)
}

/// Writes a fixture into `out`; identical parameters give identical bytes.
pub fn generate_fixture(params: &FixtureParams, out: &Path) -> Result<FixtureManifest, FixtureError> {
    params.validate()?;
    let generated = params.generate();
    let followers_dir = out.join("followers");
    fs::create_dir_all(&followers_dir).map_err(|source| FixtureError::Io { path: followers_dir.clone(), source })?;

    let tweets_file = out.join("tweets.ndjson");
    write_ndjson(&tweets_file, &generated.tweet_pages)?;
    for (account, pages) in SEED_ACCOUNTS.iter().zip(&generated.follower_pages) {
        write_ndjson(&followers_dir.join(format!("{account}.ndjson")), pages)?;
    }

    let manifest = FixtureManifest {
        params: params.clone(),
        per_side: params.per_side(),
        query: params.query.clone(),
        seeds: SEED_ACCOUNTS.iter().map(|s| s.to_string()).collect(),
        tweets_file,
        followers_dir,
        tweet_pages: generated.tweet_pages.len(),
        authors: generated.authors,
        followers: generated.follower_pages.iter().map(|p| p.iter().map(|r| r.data.len()).sum()).collect(),
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|source| FixtureError::Io { path, source })?;
    Ok(manifest)
}
