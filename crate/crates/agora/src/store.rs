//! On-disk store for collected tweets and follower sets.
//!
//! Layout under the root directory:
//!
//! ```text
//! discussions/<hex(key)>/key          normalized discussion key
//! discussions/<hex(key)>/tweets.log   one committed batch per line
//! discussions/<hex(key)>/pages.log    raw page payloads, one per line
//! discussions/<hex(key)>/checkpoint.json
//! followers/<hex(account)>.log        one JSON id array per line
//! ```
//!
//! Each log line is written with a single `write_all` and synced. A line
//! without its trailing newline is an interrupted write: readers skip it
//! and the next append truncates it away.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use agora_core::{BuildContext, TweetId, TweetRecord, UserId, UserStub};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage I/O on {path}: {source}")]
    StorageIO { path: PathBuf, source: std::io::Error },
    #[error("corrupt record in {path} line {line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error("no follower set stored for account {0:?}")]
    UnknownAccount(String),
    #[error("no discussion {0:?} in store")]
    UnknownDiscussion(String),
    #[error("discussion key must not be empty")]
    EmptyKey,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::StorageIO { path: path.to_path_buf(), source }
}

/// Discussion name, trimmed and lowercased.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscussionKey(String);

impl DiscussionKey {
    pub fn new(name: &str) -> Result<Self, StoreError> {
        let norm = name.trim().to_lowercase();
        if norm.is_empty() {
            return Err(StoreError::EmptyKey);
        }
        Ok(Self(norm))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn dir_name(&self) -> String {
        hex::encode(self.0.as_bytes())
    }
}

impl fmt::Display for DiscussionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn account_key(account: &str) -> String {
    account.trim().trim_start_matches('@').to_lowercase()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TweetBatch {
    pub tweets: Vec<TweetRecord>,
    #[serde(default)]
    pub users: Vec<UserStub>,
    #[serde(default)]
    pub referenced: Vec<TweetRecord>,
    #[serde(skip)]
    pub raw: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpsertOutcome {
    pub inserted: u64,
    pub duplicates: u64,
}

/// Position of an unfinished collection run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub since_id: Option<TweetId>,
    pub next_token: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreStats {
    pub discussions: usize,
    pub tweets_per_discussion: BTreeMap<String, usize>,
    pub follower_sets: BTreeMap<String, usize>,
}

/// Everything stored for one discussion.
#[derive(Debug, Clone, Default)]
pub struct DiscussionData {
    tweets: BTreeMap<TweetId, TweetRecord>,
    referenced: BTreeMap<TweetId, UserId>,
    users: BTreeMap<UserId, UserStub>,
}

impl DiscussionData {
    /// Tweets in `(created_at, id)` order.
    pub fn tweets(&self) -> Vec<&TweetRecord> {
        let mut out: Vec<&TweetRecord> = self.tweets.values().collect();
        out.sort_by_key(|t| (t.created_at, t.id));
        out
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn users(&self) -> &BTreeMap<UserId, UserStub> {
        &self.users
    }

    fn apply(&mut self, batch: TweetBatch) {
        for t in batch.referenced {
            self.referenced.insert(t.id, t.author_id);
        }
        for u in batch.users {
            self.users.insert(u.id, u);
        }
        for t in batch.tweets {
            self.tweets.entry(t.id).or_insert(t);
        }
    }
}

impl BuildContext for DiscussionData {
    fn tweet_author(&self, id: TweetId) -> Option<UserId> {
        self.tweets.get(&id).map(|t| t.author_id).or_else(|| self.referenced.get(&id).copied())
    }

    fn user(&self, id: UserId) -> Option<&UserStub> {
        self.users.get(&id)
    }
}

/// Reads committed lines, skipping a torn final line.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, StoreError> {
    let mut text = String::new();
    match File::open(path) {
        Ok(mut f) => {
            f.read_to_string(&mut text).map_err(io_err(path))?;
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    }
    let committed = match text.rfind('\n') {
        Some(pos) => &text[..=pos],
        None => "",
    };
    Ok(committed
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn append_line(path: &Path, line: &str) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut f = OpenOptions::new().create(true).read(true).append(true).open(path).map_err(io_err(path))?;
    let len = f.metadata().map_err(io_err(path))?.len();
    if len > 0 {
        let mut last = [0u8; 1];
        f.seek(SeekFrom::End(-1)).map_err(io_err(path))?;
        f.read_exact(&mut last).map_err(io_err(path))?;
        if last[0] != b'\n' {
            truncate_torn_tail(path, &f)?;
        }
    }
    let mut buf = String::with_capacity(line.len() + 1);
    buf.push_str(line);
    buf.push('\n');
    f.write_all(buf.as_bytes()).map_err(io_err(path))?;
    f.sync_data().map_err(io_err(path))
}

fn truncate_torn_tail(path: &Path, f: &File) -> Result<(), StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |p| p + 1);
    f.set_len(keep as u64).map_err(io_err(path))
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Single-writer handle on a store directory. Other processes may read
/// concurrently; they only ever see whole batches.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    ids: HashMap<DiscussionKey, HashSet<TweetId>>,
}

impl Store {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        for sub in ["discussions", "followers"] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        Ok(Self { root, ids: HashMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn discussion_dir(&self, key: &DiscussionKey) -> PathBuf {
        self.root.join("discussions").join(key.dir_name())
    }

    fn follower_path(&self, account: &str) -> PathBuf {
        self.root.join("followers").join(format!("{}.log", hex::encode(account_key(account))))
    }

    pub fn has_discussion(&self, key: &DiscussionKey) -> bool {
        self.discussion_dir(key).join("key").exists()
    }

    fn ensure_discussion(&self, key: &DiscussionKey) -> Result<PathBuf, StoreError> {
        let dir = self.discussion_dir(key);
        let key_file = dir.join("key");
        if !key_file.exists() {
            write_atomic(&key_file, key.as_str().as_bytes())?;
        }
        Ok(dir)
    }

    fn batches(&self, key: &DiscussionKey) -> Result<Vec<TweetBatch>, StoreError> {
        let path = self.discussion_dir(key).join("tweets.log");
        read_lines(&path)?
            .into_iter()
            .map(|(line, text)| {
                serde_json::from_str(&text).map_err(|e| StoreError::Corrupt { path: path.clone(), line, reason: e.to_string() })
            })
            .collect()
    }

    fn id_index(&mut self, key: &DiscussionKey) -> Result<&mut HashSet<TweetId>, StoreError> {
        if !self.ids.contains_key(key) {
            let ids = self.batches(key)?.into_iter().flat_map(|b| b.tweets.into_iter().map(|t| t.id)).collect();
            self.ids.insert(key.clone(), ids);
        }
        Ok(self.ids.get_mut(key).expect("inserted above"))
    }

    /// Stores the batch's tweets not already present; user stubs and
    /// referenced tweets are always written (later stubs win).
    pub fn upsert_tweets(&mut self, key: &DiscussionKey, batch: &TweetBatch) -> Result<UpsertOutcome, StoreError> {
        let dir = self.ensure_discussion(key)?;
        let index = self.id_index(key)?;
        let mut fresh = Vec::new();
        let mut in_batch = HashSet::new();
        for t in &batch.tweets {
            if !index.contains(&t.id) && in_batch.insert(t.id) {
                fresh.push(t.clone());
            }
        }
        let outcome = UpsertOutcome { inserted: fresh.len() as u64, duplicates: (batch.tweets.len() - fresh.len()) as u64 };
        if let Some(raw) = &batch.raw {
            append_line(&dir.join("pages.log"), &raw.to_string())?;
        }
        let record = TweetBatch { tweets: fresh, users: batch.users.clone(), referenced: batch.referenced.clone(), raw: None };
        if !(record.tweets.is_empty() && record.users.is_empty() && record.referenced.is_empty()) {
            let line = serde_json::to_string(&record).expect("records serialize");
            append_line(&dir.join("tweets.log"), &line)?;
        }
        let index = self.id_index(key)?;
        index.extend(record.tweets.iter().map(|t| t.id));
        Ok(outcome)
    }

    pub fn newest_tweet_id(&self, key: &DiscussionKey) -> Result<Option<TweetId>, StoreError> {
        if let Some(ids) = self.ids.get(key) {
            return Ok(ids.iter().max().copied());
        }
        Ok(self.batches(key)?.iter().flat_map(|b| b.tweets.iter().map(|t| t.id)).max())
    }

    pub fn load_discussion(&self, key: &DiscussionKey) -> Result<DiscussionData, StoreError> {
        if !self.has_discussion(key) {
            return Err(StoreError::UnknownDiscussion(key.to_string()));
        }
        let mut data = DiscussionData::default();
        for batch in self.batches(key)? {
            data.apply(batch);
        }
        Ok(data)
    }

    /// Stored tweets ordered by creation time, ties broken by id.
    pub fn iter_tweets(&self, key: &DiscussionKey) -> Result<std::vec::IntoIter<TweetRecord>, StoreError> {
        let data = self.load_discussion(key)?;
        Ok(data.tweets().into_iter().cloned().collect::<Vec<_>>().into_iter())
    }

    /// Raw page payloads in arrival order.
    pub fn raw_pages(&self, key: &DiscussionKey) -> Result<Vec<serde_json::Value>, StoreError> {
        let path = self.discussion_dir(key).join("pages.log");
        read_lines(&path)?
            .into_iter()
            .map(|(line, text)| {
                serde_json::from_str(&text).map_err(|e| StoreError::Corrupt { path: path.clone(), line, reason: e.to_string() })
            })
            .collect()
    }

    pub fn checkpoint(&self, key: &DiscussionKey) -> Result<Option<Checkpoint>, StoreError> {
        let path = self.discussion_dir(key).join("checkpoint.json");
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| StoreError::Corrupt { path, line: 1, reason: e.to_string() }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    pub fn set_checkpoint(&mut self, key: &DiscussionKey, checkpoint: Option<&Checkpoint>) -> Result<(), StoreError> {
        let dir = self.ensure_discussion(key)?;
        let path = dir.join("checkpoint.json");
        match checkpoint {
            Some(cp) => write_atomic(&path, &serde_json::to_vec(cp).expect("checkpoint serializes")),
            None => match fs::remove_file(&path) {
                Ok(()) => Ok(()),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
                Err(e) => Err(io_err(&path)(e)),
            },
        }
    }

    /// Adds ids to the account's follower set.
    pub fn save_followers(&mut self, account: &str, ids: impl IntoIterator<Item = UserId>) -> Result<(), StoreError> {
        let ids: Vec<UserId> = ids.into_iter().collect();
        let line = serde_json::to_string(&ids).expect("ids serialize");
        append_line(&self.follower_path(account), &line)
    }

    pub fn load_followers(&self, account: &str) -> Result<BTreeSet<UserId>, StoreError> {
        let path = self.follower_path(account);
        if !path.exists() {
            return Err(StoreError::UnknownAccount(account.to_string()));
        }
        let mut out = BTreeSet::new();
        for (line, text) in read_lines(&path)? {
            let ids: Vec<UserId> = serde_json::from_str(&text)
                .map_err(|e| StoreError::Corrupt { path: path.clone(), line, reason: e.to_string() })?;
            out.extend(ids);
        }
        Ok(out)
    }

    pub fn discussions(&self) -> Result<Vec<DiscussionKey>, StoreError> {
        let dir = self.root.join("discussions");
        let mut out = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            let key_file = entry.path().join("key");
            if let Ok(name) = fs::read_to_string(&key_file) {
                out.push(DiscussionKey(name));
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn stats(&self) -> Result<StoreStats, StoreError> {
        let mut stats = StoreStats::default();
        for key in self.discussions()? {
            let n = self.load_discussion(&key)?.len();
            stats.tweets_per_discussion.insert(key.to_string(), n);
        }
        stats.discussions = stats.tweets_per_discussion.len();
        let dir = self.root.join("followers");
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let Some(account) = hex::decode(stem).ok().and_then(|b| String::from_utf8(b).ok()) else { continue };
            let n = self.load_followers(&account)?.len();
            stats.follower_sets.insert(account, n);
        }
        Ok(stats)
    }

    /// Writes the discussion as NDJSON: one `{"tweet": ...}` line per tweet in
    /// stored order, then one `{"user": ...}` line per user stub.
    pub fn export(&self, key: &DiscussionKey, out: &mut dyn Write) -> std::io::Result<()> {
        let data = self.load_discussion(key).map_err(std::io::Error::other)?;
        for t in data.tweets() {
            serde_json::to_writer(&mut *out, &serde_json::json!({ "tweet": t }))?;
            out.write_all(b"\n")?;
        }
        for u in data.users.values() {
            serde_json::to_writer(&mut *out, &serde_json::json!({ "user": u }))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
