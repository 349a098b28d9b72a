//! File-backed source replaying recorded API pages.
//!
//! An NDJSON file holds one response page per line, in request order. Lines
//! starting with `#!` are harness directives; the only one is
//! `#!fault <what>@<page> [retry-after=<secs>]`, which makes the first
//! request for 1-based page `<page>` fail once. `<what>` is an HTTP status
//! (`429`, `503`, ...), `reset` for a dropped connection, or `kill` to abort
//! the whole process. Other lines starting with `#` and blank lines are
//! ignored.
//!
//! Page tokens handed out by this source are page indices.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use agora_core::TweetId;
use serde_json::Value;

use super::source::{FollowerPage, SearchRequest, SourceError, TweetPage, TweetSource};
use super::wire::{FollowersResponse, SearchResponse};

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("replay file {0} does not exist")]
    FileMissing(PathBuf),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    Status { status: u16, retry_after: Option<Duration> },
    Reset,
    Kill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fault {
    /// 1-based page number.
    pub page: usize,
    pub kind: FaultKind,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let head = parts.next().ok_or("empty fault directive")?;
        let (what, page) = head.split_once('@').ok_or_else(|| format!("fault {head:?}: expected <what>@<page>"))?;
        let page: usize = page.parse().map_err(|_| format!("fault {head:?}: bad page number"))?;
        if page == 0 {
            return Err(format!("fault {head:?}: pages are numbered from 1"));
        }
        let mut retry_after = None;
        for opt in parts {
            let secs = opt.strip_prefix("retry-after=").ok_or_else(|| format!("unknown fault option {opt:?}"))?;
            retry_after = Some(Duration::from_secs(secs.parse().map_err(|_| format!("bad retry-after {secs:?}"))?));
        }
        let kind = match what {
            "reset" => FaultKind::Reset,
            "kill" => FaultKind::Kill,
            status => FaultKind::Status {
                status: status.parse().map_err(|_| format!("fault {head:?}: unknown fault kind"))?,
                retry_after,
            },
        };
        Ok(Fault { page, kind })
    }
}

#[derive(Debug, Clone)]
struct PageFile {
    pages: Vec<Value>,
    faults: Vec<(Fault, bool)>,
}

impl PageFile {
    fn load(path: &Path) -> Result<Self, ReplayError> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ReplayError::FileMissing(path.to_path_buf()),
            _ => ReplayError::Io { path: path.to_path_buf(), source: e },
        })?;
        let mut pages = Vec::new();
        let mut faults = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            if let Some(directive) = trimmed.strip_prefix("#!") {
                let fault = directive
                    .trim()
                    .strip_prefix("fault")
                    .ok_or_else(|| ReplayError::MalformedLine { line: line_no, reason: format!("unknown directive {trimmed:?}") })?
                    .parse::<Fault>()
                    .map_err(|reason| ReplayError::MalformedLine { line: line_no, reason })?;
                faults.push((fault, false));
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let value: Value = serde_json::from_str(trimmed)
                .map_err(|e| ReplayError::MalformedLine { line: line_no, reason: e.to_string() })?;
            if !value.is_object() || value.get("data").is_some_and(|d| !d.is_array()) {
                return Err(ReplayError::MalformedLine { line: line_no, reason: "expected a page object with a data array".into() });
            }
            pages.push(value);
        }
        Ok(PageFile { pages, faults })
    }

    /// Page at `token` (an index), or the scripted fault for it.
    fn serve(&mut self, token: Option<&str>) -> Result<(usize, Option<&Value>), SourceError> {
        let index = match token {
            None => 0,
            Some(t) => t.parse::<usize>().map_err(|_| SourceError::QuerySyntax(format!("invalid page token {t:?}")))?,
        };
        for (fault, fired) in &mut self.faults {
            if fault.page == index + 1 && !*fired {
                *fired = true;
                return Err(match fault.kind {
                    FaultKind::Kill => {
                        log::error!("replay kill directive at page {}", fault.page);
                        std::process::abort();
                    }
                    FaultKind::Reset => SourceError::Transient {
                        status: None,
                        retry_after: None,
                        message: "connection reset (injected)".into(),
                    },
                    FaultKind::Status { status, retry_after } => SourceError::from_status(status, retry_after, "injected fault"),
                });
            }
        }
        Ok((index, self.pages.get(index)))
    }

    fn next_token(&self, index: usize) -> Option<String> {
        (index + 1 < self.pages.len()).then(|| (index + 1).to_string())
    }
}

#[derive(Debug, Clone)]
enum Backing {
    File(PageFile),
    /// Follower pages per account in `<dir>/<account>.ndjson`.
    Dir { dir: PathBuf, opened: Vec<(String, PageFile)> },
}

/// Replays recorded pages; see the module docs for the file format.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    backing: Backing,
}

pub fn open_replay(path: impl AsRef<Path>) -> Result<ReplaySource, ReplayError> {
    ReplaySource::open(path)
}

impl ReplaySource {
    /// Opens a page file, or a directory of per-account follower files.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ReplayError> {
        let path = path.as_ref();
        if path.is_dir() {
            return Ok(Self { backing: Backing::Dir { dir: path.to_path_buf(), opened: Vec::new() } });
        }
        Ok(Self { backing: Backing::File(PageFile::load(path)?) })
    }

    pub fn with_faults(mut self, faults: impl IntoIterator<Item = Fault>) -> Self {
        if let Backing::File(f) = &mut self.backing {
            f.faults.extend(faults.into_iter().map(|f| (f, false)));
        }
        self
    }

    /// Number of pages, for a file-backed source.
    pub fn page_count(&self) -> Option<usize> {
        match &self.backing {
            Backing::File(f) => Some(f.pages.len()),
            Backing::Dir { .. } => None,
        }
    }

    fn file_for(&mut self, account: Option<&str>) -> Result<&mut PageFile, SourceError> {
        match &mut self.backing {
            Backing::File(f) => Ok(f),
            Backing::Dir { dir, opened } => {
                let account = account.ok_or_else(|| SourceError::QuerySyntax("directory replay serves followers only".into()))?;
                let name = account.trim_start_matches('@').to_lowercase();
                if let Some(pos) = opened.iter().position(|(a, _)| *a == name) {
                    return Ok(&mut opened[pos].1);
                }
                let file = PageFile::load(&dir.join(format!("{name}.ndjson"))).map_err(|e| match e {
                    ReplayError::FileMissing(_) => SourceError::UnknownAccount(account.to_string()),
                    other => SourceError::Malformed(other.to_string()),
                })?;
                opened.push((name, file));
                Ok(&mut opened.last_mut().expect("just pushed").1)
            }
        }
    }
}

fn since_filter(page: &mut SearchResponse, since_id: Option<TweetId>) {
    if let Some(since) = since_id {
        page.data.retain(|t| t.id.parse::<u64>().map_or(true, |id| id > since.0));
    }
}

impl TweetSource for ReplaySource {
    fn search_page(&mut self, req: &SearchRequest<'_>) -> Result<TweetPage, SourceError> {
        let file = self.file_for(None)?;
        let (index, value) = file.serve(req.next_token)?;
        let Some(value) = value.cloned() else {
            return Ok(TweetPage { raw: Value::Null, ..TweetPage::default() });
        };
        let mut resp: SearchResponse =
            serde_json::from_value(value).map_err(|e| SourceError::Malformed(format!("page {}: {e}", index + 1)))?;
        since_filter(&mut resp, req.since_id);
        resp.meta.next_token = file.next_token(index);
        TweetPage::from_response(resp)
    }

    fn followers_page(&mut self, account: &str, next_token: Option<&str>, _page_size: usize) -> Result<FollowerPage, SourceError> {
        let file = self.file_for(Some(account))?;
        let (index, value) = file.serve(next_token)?;
        let Some(value) = value.cloned() else {
            return Ok(FollowerPage::default());
        };
        let mut resp: FollowersResponse =
            serde_json::from_value(value).map_err(|e| SourceError::Malformed(format!("page {}: {e}", index + 1)))?;
        resp.meta.next_token = file.next_token(index);
        FollowerPage::from_response(resp)
    }
}
