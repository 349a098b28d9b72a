//! Core algorithms for mining and analysing discussion interaction graphs.
//!
//! This crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: turning stored tweet records into a typed,
//! weighted [`DiscussionGraph`], labelling users from seed-account follower
//! sets, the Friedkin–Johnsen polarization index, Random Walk Controversy
//! (exact absorbing-chain solve and a seeded Monte Carlo estimate) and a
//! deterministic Fruchterman–Reingold layout.
//!
//! IO, file formats, the collection client and the CLI live in the `agora`
//! crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod build;
pub mod document;
pub mod error;
pub mod graph;
pub mod ids;
pub mod layout;
pub mod opinion;
pub mod polarize;
pub mod solver;
pub mod tweet;

pub use build::{create_graph, extract_interactions, BuildContext, Extraction, Interaction, MapContext};
pub use document::{GraphDocument, NodeVisual, Rgb};
pub use error::{Error, Result};
pub use graph::{DiscussionGraph, EdgeKey, EdgeKind, GraphMetadata, GraphOptions, NodeAttrs};
pub use ids::{TweetId, UserId};
pub use layout::{apply_layout, fr_layout, LayoutParams, Palette};
pub use opinion::{label_nodes, opinion_vector, FollowerSet, LabelStats, OpinionLabel, OpinionVector};
pub use polarize::{
    get_polarization, parse_metric_list, symmetrize, Diagnostics, KTop, Metric, PolarizationOptions, PolarizationResult,
    SymmetricWeightedGraph, WalkSampling,
};
pub use tweet::{Mention, ReferenceKind, TweetRecord, TweetReference, UserStub};
