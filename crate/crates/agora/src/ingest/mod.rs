//! Tweet and follower sources and the collection drivers on top of them.

mod collect;
mod http;
mod replay;
mod source;
pub mod wire;

pub use collect::{
    collect_discussion, collect_followers, get_followers, search_tweets, CollectOptions, CollectionReport,
    FollowersReport, IngestError, PageSink, RecordingSleeper, RetryPolicy, SearchParams, Sleeper, ThreadSleeper,
};
pub use http::{HttpSource, DEFAULT_BASE_URL};
pub use replay::{open_replay, Fault, FaultKind, ReplayError, ReplaySource};
pub use source::{FollowerPage, SearchRequest, SourceError, TweetPage, TweetSource};
