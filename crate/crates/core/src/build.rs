//! Interaction extraction and graph assembly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Result;
use crate::graph::{DiscussionGraph, EdgeKey, EdgeKind, GraphMetadata, GraphOptions, NodeAttrs};
use crate::ids::{TweetId, UserId};
use crate::tweet::{ReferenceKind, TweetRecord, UserStub};

/// Offline lookup of the expansions stored alongside a discussion.
pub trait BuildContext {
    /// Author of a referenced tweet, if that tweet was stored.
    fn tweet_author(&self, id: TweetId) -> Option<UserId>;
    fn user(&self, id: UserId) -> Option<&UserStub>;
}

/// In-memory context, mostly for tests and small fixtures.
#[derive(Debug, Clone, Default)]
pub struct MapContext {
    pub tweet_authors: BTreeMap<TweetId, UserId>,
    pub users: BTreeMap<UserId, UserStub>,
}

impl BuildContext for MapContext {
    fn tweet_author(&self, id: TweetId) -> Option<UserId> {
        self.tweet_authors.get(&id).copied()
    }

    fn user(&self, id: UserId) -> Option<&UserStub> {
        self.users.get(&id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub source: UserId,
    pub target: UserId,
    pub kind: EdgeKind,
    /// Handle seen in the tweet itself, used when no user stub was stored.
    pub target_username: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub interactions: Vec<Interaction>,
    pub unresolved: u64,
}

fn reference_edge_kind(kind: ReferenceKind) -> EdgeKind {
    match kind {
        ReferenceKind::Retweeted => EdgeKind::Retweet,
        ReferenceKind::Quoted => EdgeKind::Quote,
        ReferenceKind::RepliedTo => EdgeKind::Reply,
    }
}

/// Lists the interactions a single tweet expresses. Self-interactions are
/// returned as-is; graph assembly drops them.
pub fn extract_interactions<C: BuildContext + ?Sized>(tweet: &TweetRecord, ctx: &C) -> Extraction {
    let mut out = Extraction::default();
    let mut retweet_target: Option<UserId> = None;
    let mut retweet_unresolved = false;

    for reference in &tweet.referenced {
        let kind = reference_edge_kind(reference.kind);
        let mut target = ctx.tweet_author(reference.tweet_id);
        if target.is_none() && reference.kind == ReferenceKind::RepliedTo {
            target = tweet.reply_to_user_id;
        }
        match target {
            Some(target) => {
                if kind == EdgeKind::Retweet {
                    retweet_target = Some(target);
                }
                out.interactions.push(Interaction { source: tweet.author_id, target, kind, target_username: None });
            }
            None => {
                if kind == EdgeKind::Retweet {
                    retweet_unresolved = true;
                }
                out.unresolved += 1;
            }
        }
    }

    // A retweet carries the original author as its leading mention; the
    // retweet edge already records that interaction.
    let mut suppressed = false;
    for mention in &tweet.mentions {
        if !suppressed {
            let duplicate = match (retweet_target, mention.user_id) {
                (Some(t), Some(m)) => t == m,
                _ => retweet_unresolved && leading_rt_handle(&tweet.text) == Some(mention.username.as_str()),
            };
            if duplicate {
                suppressed = true;
                continue;
            }
        }
        match mention.user_id {
            Some(target) => out.interactions.push(Interaction {
                source: tweet.author_id,
                target,
                kind: EdgeKind::Mention,
                target_username: Some(mention.username.clone()),
            }),
            None => out.unresolved += 1,
        }
    }
    out
}

fn leading_rt_handle(text: &str) -> Option<&str> {
    let rest = text.strip_prefix("RT @")?;
    let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
    Some(&rest[..end])
}

/// Aggregates a discussion's tweets into a [`DiscussionGraph`].
pub fn create_graph<'a, C, I>(query: &str, tweets: I, ctx: &C, options: &GraphOptions) -> Result<DiscussionGraph>
where
    C: BuildContext + ?Sized,
    I: IntoIterator<Item = &'a TweetRecord>,
{
    options.validate()?;
    let mut metadata = GraphMetadata { query: query.to_string(), ..GraphMetadata::default() };
    let mut tweet_counts: BTreeMap<UserId, u64> = BTreeMap::new();
    let mut handles: BTreeMap<UserId, String> = BTreeMap::new();
    let mut weights: BTreeMap<EdgeKey, u64> = BTreeMap::new();

    for tweet in tweets {
        *tweet_counts.entry(tweet.author_id).or_default() += 1;
        metadata.collected_from = Some(metadata.collected_from.map_or(tweet.created_at, |t| t.min(tweet.created_at)));
        metadata.collected_to = Some(metadata.collected_to.map_or(tweet.created_at, |t| t.max(tweet.created_at)));

        let extraction = extract_interactions(tweet, ctx);
        metadata.unresolved_references += extraction.unresolved;
        for it in extraction.interactions {
            if it.source == it.target || !options.edge_kinds.contains(&it.kind) {
                continue;
            }
            if let Some(handle) = it.target_username {
                handles.entry(it.target).or_insert(handle);
            }
            *weights.entry(EdgeKey { source: it.source, target: it.target, kind: it.kind }).or_default() += 1;
        }
    }

    weights.retain(|_, w| *w >= options.min_weight);

    let mut ids: BTreeSet<UserId> = tweet_counts.keys().copied().collect();
    for key in weights.keys() {
        ids.insert(key.source);
        ids.insert(key.target);
    }
    if options.drop_isolated {
        let connected: BTreeSet<UserId> = weights.keys().flat_map(|k| [k.source, k.target]).collect();
        ids.retain(|id| connected.contains(id));
    }

    let nodes = ids
        .into_iter()
        .map(|id| {
            let tweets_in_discussion = tweet_counts.get(&id).copied().unwrap_or(0);
            let attrs = match ctx.user(id) {
                Some(stub) => NodeAttrs {
                    username: stub.username.clone(),
                    display_name: stub.display_name.clone(),
                    followers_count: stub.followers_count,
                    tweets_in_discussion,
                    opinion: None,
                },
                None => NodeAttrs {
                    username: handles.get(&id).cloned().unwrap_or_else(|| id.to_string()),
                    tweets_in_discussion,
                    ..NodeAttrs::default()
                },
            };
            (id, attrs)
        })
        .collect();

    Ok(DiscussionGraph { nodes, edges: weights, metadata })
}
