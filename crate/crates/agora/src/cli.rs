//! Command-line front end. Every command prints at most one JSON line on
//! stdout; logs go to stderr.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use agora_core::{
    create_graph, get_polarization, label_nodes, parse_metric_list, DiscussionGraph, EdgeKind, FollowerSet, GraphDocument,
    GraphOptions, KTop, LabelStats, PolarizationOptions, PolarizationResult, WalkSampling,
};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::config::{Config, ConfigError};
use crate::fixture::{generate_fixture, FixtureError, FixtureParams, DEFAULT_QUERY};
use crate::graph_io::{self, create_layout, Format, GraphIoError, LayoutFileError};
use crate::ingest::{
    collect_discussion, collect_followers, open_replay, Fault, HttpSource, IngestError, ReplayError, ThreadSleeper,
    TweetSource,
};
use crate::share::{self, ShareOptions};
use crate::store::{DiscussionKey, Store, StoreError};

#[derive(Debug, Parser)]
#[command(name = "agora", version, about = "Collect discussions, build interaction graphs, measure polarization")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "AGORA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Store directory; overrides `store.path`.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect tweets matching a query into the store.
    Collect {
        query: String,
        /// Replay recorded search pages instead of calling the API.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Extra fault directive for the replay source, e.g. `429@2`.
        #[arg(long = "fault", requires = "replay")]
        faults: Vec<Fault>,
    },
    /// Collect the followers of a seed account.
    Followers {
        account: String,
        /// Replay file, or a directory holding `<account>.ndjson`.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Build the interaction graph of a stored discussion.
    Graph {
        query: String,
        #[command(flatten)]
        graph: GraphArgs,
        /// Label nodes by the stored followers of these seed accounts.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<String>,
        /// Output file; the extension picks the format.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute polarization scores for a stored discussion.
    Polarize {
        query: String,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<String>,
        #[arg(long, default_value = "fj,rwc")]
        metrics: String,
        #[command(flatten)]
        graph: GraphArgs,
        /// Absorbing nodes per side; defaults to the configured fraction.
        #[arg(long)]
        k_top: Option<usize>,
        /// Estimate RWC from random walks instead of solving exactly.
        #[arg(long)]
        sample: bool,
        /// Walks per side when sampling.
        #[arg(long)]
        walks: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Lay out a graph file in place.
    Layout {
        file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        use_weights: bool,
    },
    /// Write a synthetic two-community discussion in the replay format.
    Genfixture {
        #[arg(long, default_value_t = 200)]
        users: usize,
        #[arg(long)]
        per_side: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        p_cross: f64,
        #[arg(long, default_value_t = 2000)]
        tweets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = DEFAULT_QUERY)]
        query: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the graph sharing service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Directory with built viewer assets.
        #[arg(long)]
        viewer_dir: Option<PathBuf>,
    },
    /// Dump a stored discussion as NDJSON.
    Export { query: String },
    /// Summarize store contents.
    Stats,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Edge kinds to keep.
    #[arg(long, value_delimiter = ',', default_value = "retweet,quote,reply,mention")]
    pub kinds: Vec<EdgeKind>,
    #[arg(long, default_value_t = 1)]
    pub min_weight: u64,
    #[arg(long)]
    pub drop_isolated: bool,
}

impl GraphArgs {
    fn options(&self) -> GraphOptions {
        GraphOptions {
            edge_kinds: self.kinds.iter().copied().collect(),
            min_weight: self.min_weight,
            drop_isolated: self.drop_isolated,
        }
    }
}

/// A failed command: exit status 1 for bad input, 2 for internal faults.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub internal: bool,
}

impl CliError {
    fn user(code: &'static str, message: impl fmt::Display) -> Self {
        Self { code, message: message.to_string(), internal: false }
    }

    fn internal(code: &'static str, message: impl fmt::Display) -> Self {
        Self { code, message: message.to_string(), internal: true }
    }

    pub fn exit_code(&self) -> i32 {
        if self.internal {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::user("ConfigError", e)
    }
}

impl From<ReplayError> for CliError {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::FileMissing(_) => CliError::user("FileMissing", e),
            ReplayError::MalformedLine { .. } => CliError::user("MalformedLine", e),
            ReplayError::Io { .. } => CliError::user("StorageIO", e),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownAccount(_) => CliError::user("UnknownAccount", e),
            StoreError::UnknownDiscussion(_) => CliError::user("UnknownDiscussion", e),
            StoreError::EmptyKey => CliError::user("EmptyKey", e),
            StoreError::StorageIO { .. } => CliError::internal("StorageIO", e),
            StoreError::Corrupt { .. } => CliError::internal("Corrupt", e),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Store(s) => s.into(),
            IngestError::EmptyQuery => CliError::user("EmptyQuery", e),
            IngestError::Auth(_) => CliError::user("AuthError", e),
            IngestError::QuerySyntax(_) => CliError::user("QuerySyntaxError", e),
            IngestError::UnknownAccount(_) => CliError::user("UnknownAccount", e),
            IngestError::SourceExhaustedRetries { .. } => CliError::internal("SourceExhaustedRetries", e),
            IngestError::Malformed(_) => CliError::user("MalformedResponse", e),
            IngestError::Sink(_) => CliError::internal("StorageIO", e),
        }
    }
}

impl From<GraphIoError> for CliError {
    fn from(e: GraphIoError) -> Self {
        let code = match &e {
            GraphIoError::ParseError { .. } => "ParseError",
            GraphIoError::UnsupportedVersion(_) => "UnsupportedVersion",
            GraphIoError::DuplicateNodeId(_) => "DuplicateNodeId",
            GraphIoError::UnknownFormat(_) => "UnknownFormat",
            GraphIoError::Io { .. } => "IOError",
        };
        CliError::user(code, e)
    }
}

impl From<agora_core::Error> for CliError {
    fn from(e: agora_core::Error) -> Self {
        let name = format!("{e:?}");
        let end = name.find(|c: char| !c.is_ascii_alphanumeric()).unwrap_or(name.len());
        let code: &'static str = match &name[..end] {
            "SolverDivergence" => return CliError::internal("SolverDivergence", e),
            "UnknownMetric" => "UnknownMetric",
            "EmptySide" => "EmptySide",
            "EmptyGraph" => "EmptyGraph",
            "MoreThanTwoGroups" => "MoreThanTwoGroups",
            "TooFewFollowerSets" => "TooFewFollowerSets",
            "NoEdgeKinds" => "NoEdgeKinds",
            "InvalidMinWeight" => "InvalidMinWeight",
            "InvalidKTop" => "InvalidKTop",
            "InvalidWalkCount" => "InvalidWalkCount",
            "InvalidFrame" => "InvalidFrame",
            _ => "InvalidInput",
        };
        CliError::user(code, e)
    }
}

impl From<LayoutFileError> for CliError {
    fn from(e: LayoutFileError) -> Self {
        match e {
            LayoutFileError::Io(e) => e.into(),
            LayoutFileError::Layout(e) => e.into(),
        }
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        match e {
            FixtureError::InvalidParams(_) => CliError::user("InvalidParams", e),
            FixtureError::Io { .. } => CliError::user("IOError", e),
        }
    }
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let line = serde_json::to_string(value).map_err(|e| CliError::internal("Serialization", e))?;
    writeln!(out, "{line}").map_err(|e| CliError::internal("IOError", e))
}

struct Context {
    config: Config,
}

impl Context {
    fn open_store(&self) -> Result<Store, CliError> {
        Ok(Store::open(&self.config.store.path)?)
    }

    fn http_source(&self) -> Result<HttpSource, CliError> {
        let token = self.config.api_token().ok_or_else(|| {
            CliError::user("AuthError", format!("no API token; set {} or use --replay", self.config.api.token_env))
        })?;
        Ok(HttpSource::new(&self.config.api.base_url, token))
    }

    fn source(&self, replay: Option<&Path>, faults: &[Fault]) -> Result<Box<dyn TweetSource>, CliError> {
        Ok(match replay {
            Some(path) => Box::new(open_replay(path)?.with_faults(faults.iter().copied())),
            None => Box::new(self.http_source()?),
        })
    }

    fn build_graph(&self, store: &Store, query: &str, args: &GraphArgs) -> Result<DiscussionGraph, CliError> {
        let key = DiscussionKey::new(query)?;
        let data = store.load_discussion(&key)?;
        Ok(create_graph(query, data.tweets(), &data, &args.options())?)
    }
}

fn label(store: &Store, graph: &mut DiscussionGraph, seeds: &[String]) -> Result<LabelStats, CliError> {
    let sets = seeds
        .iter()
        .map(|s| Ok(FollowerSet::new(s.clone(), store.load_followers(s)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(label_nodes(graph, &sets)?)
}

#[derive(Serialize)]
struct GraphSummary<'a> {
    out: &'a Path,
    format: Format,
    nodes: usize,
    edges: usize,
    unresolved_references: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<LabelStats>,
}

#[derive(Serialize)]
struct PolarizeOutput {
    #[serde(flatten)]
    result: PolarizationResult,
    nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<LabelStats>,
}

#[derive(Serialize)]
struct LayoutSummary<'a> {
    file: &'a Path,
    nodes: usize,
    seed: u64,
    iterations: usize,
}

#[derive(Serialize)]
struct Listening {
    listening: String,
}

/// Runs one command, writing its JSON result to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(store) = cli.store {
        config.store.path = store;
    }
    let ctx = Context { config };

    match cli.command {
        Command::Collect { query, replay, faults } => {
            let mut source = ctx.source(replay.as_deref(), &faults)?;
            let mut store = ctx.open_store()?;
            let report = collect_discussion(&mut *source, &mut store, &query, &ctx.config.collect_options(), &mut ThreadSleeper)?;
            info!("collected {} new tweets for {query:?}", report.stored_new);
            emit(out, &report)
        }
        Command::Followers { account, replay } => {
            let mut source = ctx.source(replay.as_deref(), &[])?;
            let mut store = ctx.open_store()?;
            let report = collect_followers(&mut *source, &mut store, &account, &ctx.config.collect_options(), &mut ThreadSleeper)?;
            emit(out, &report)
        }
        Command::Graph { query, graph: args, seeds, out: path } => {
            let format = Format::from_path(&path)?;
            let store = ctx.open_store()?;
            let mut graph = ctx.build_graph(&store, &query, &args)?;
            let labels = if seeds.is_empty() { None } else { Some(label(&store, &mut graph, &seeds)?) };
            let summary = GraphSummary {
                out: &path,
                format,
                nodes: graph.node_count(),
                edges: graph.edge_count(),
                unresolved_references: graph.metadata.unresolved_references,
                labels,
            };
            graph_io::write_document(&GraphDocument::new(graph), &path)?;
            emit(out, &summary)
        }
        Command::Polarize { query, seeds, metrics, graph: args, k_top, sample, walks, seed } => {
            let metric_names = parse_metric_list(&metrics);
            for m in &metric_names {
                m.parse::<agora_core::Metric>()?;
            }
            let store = ctx.open_store()?;
            let mut graph = ctx.build_graph(&store, &query, &args)?;
            // Nothing needs opinions when no metric is requested, so missing
            // follower sets are not an error then.
            let labels = if metric_names.is_empty() { None } else { Some(label(&store, &mut graph, &seeds)?) };
            let options = PolarizationOptions {
                kinds: args.kinds.iter().copied().collect::<BTreeSet<_>>(),
                k_top: k_top.map_or(ctx.config.k_top(), KTop::Fixed),
                keep_equilibrium: false,
                sampling: sample.then(|| WalkSampling {
                    walks_per_side: walks.unwrap_or(ctx.config.polarize.walks),
                    seed: seed.unwrap_or(ctx.config.polarize.seed),
                }),
            };
            let result = get_polarization(&graph, &metric_names, &options)?;
            emit(out, &PolarizeOutput { result, nodes: graph.node_count(), labels })
        }
        Command::Layout { file, seed, iterations, use_weights } => {
            let mut params = ctx.config.layout_params();
            if let Some(s) = seed {
                params.seed = s;
            }
            if let Some(i) = iterations {
                params.iterations = i;
            }
            params.use_weights |= use_weights;
            let doc = create_layout(&file, &params)?;
            emit(out, &LayoutSummary { file: &file, nodes: doc.graph.node_count(), seed: params.seed, iterations: params.iterations })
        }
        Command::Genfixture { users, per_side, p_cross, tweets, seed, query, out: dir } => {
            let params = FixtureParams { users, per_side, p_cross, tweets, seed, query };
            let manifest = generate_fixture(&params, &dir)?;
            emit(out, &manifest)
        }
        Command::Serve { listen, data_dir, viewer_dir } => {
            let token = ctx.config.share_token().ok_or_else(|| {
                CliError::user("AuthError", format!("set {} to the upload token", ctx.config.share.token_env))
            })?;
            let addr = listen.unwrap_or_else(|| ctx.config.share.listen_addr.clone());
            let mut options = ShareOptions::new(data_dir.unwrap_or_else(|| ctx.config.share.data_dir.clone()), token);
            options.viewer_dir = viewer_dir;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::internal("Runtime", e))?;
            runtime.block_on(async {
                let listener =
                    tokio::net::TcpListener::bind(&addr).await.map_err(|e| CliError::user("BindError", format!("{addr}: {e}")))?;
                let local = listener.local_addr().map_err(|e| CliError::internal("BindError", e))?;
                emit(out, &Listening { listening: local.to_string() })?;
                out.flush().map_err(|e| CliError::internal("IOError", e))?;
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                share::serve(listener, options, shutdown).await.map_err(|e| CliError::internal("ServeError", e))
            })
        }
        Command::Export { query } => {
            let store = ctx.open_store()?;
            let key = DiscussionKey::new(&query)?;
            if !store.has_discussion(&key) {
                return Err(StoreError::UnknownDiscussion(key.as_str().to_string()).into());
            }
            store.export(&key, out).map_err(|e| CliError::internal("IOError", e))
        }
        Command::Stats => {
            let store = ctx.open_store()?;
            emit(out, &store.stats()?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_lists() {
        let cli = Cli::try_parse_from(["agora", "polarize", "#q", "--seeds", "a,b", "--metrics", "fj", "--kinds", "retweet,reply"])
            .unwrap();
        match cli.command {
            Command::Polarize { seeds, graph, .. } => {
                assert_eq!(seeds, ["a", "b"]);
                assert_eq!(graph.kinds, [EdgeKind::Retweet, EdgeKind::Reply]);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["agora", "graph", "#q", "--kinds", "likes", "--out", "g.gexf"]).is_err());
    }

    #[test]
    fn error_codes() {
        let e: CliError = ReplayError::FileMissing("x".into()).into();
        assert_eq!((e.code, e.exit_code()), ("FileMissing", 1));
        let e: CliError = agora_core::Error::SolverDivergence { iterations: 1, residual: 1.0 }.into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = agora_core::Error::UnknownMetric("x".into()).into();
        assert_eq!(e.code, "UnknownMetric");
    }
}
