use std::path::Path;

use agora_core::{EdgeKey, EdgeKind, GraphDocument, GraphMetadata, NodeAttrs, NodeVisual, OpinionLabel, Rgb};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{read_text, write_text, DocBuilder, GraphIoError};

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph: Option<JsonMeta>,
    nodes: Vec<JsonNode>,
    edges: Vec<JsonEdge>,
}

#[derive(Serialize, Deserialize, Default)]
struct JsonMeta {
    #[serde(default)]
    query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    collected_from: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    collected_to: Option<DateTime<Utc>>,
    #[serde(default)]
    unresolved_references: u64,
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: String,
    #[serde(default)]
    username: String,
    #[serde(default)]
    display_name: String,
    #[serde(default)]
    followers_count: u64,
    #[serde(default)]
    tweets_in_discussion: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    opinion: Option<OpinionLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    color: Option<Rgb>,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    source: String,
    target: String,
    kind: String,
    weight: serde_json::Number,
}

pub fn json_to_string(doc: &GraphDocument) -> String {
    let g = &doc.graph;
    let graph = (g.metadata != GraphMetadata::default()).then(|| JsonMeta {
        query: g.metadata.query.clone(),
        collected_from: g.metadata.collected_from,
        collected_to: g.metadata.collected_to,
        unresolved_references: g.metadata.unresolved_references,
    });
    let nodes = g
        .nodes
        .iter()
        .map(|(id, a)| {
            let v = doc.visual(*id);
            JsonNode {
                id: id.to_string(),
                username: a.username.clone(),
                display_name: a.display_name.clone(),
                followers_count: a.followers_count,
                tweets_in_discussion: a.tweets_in_discussion,
                opinion: a.opinion,
                x: v.map(|v| v.x),
                y: v.map(|v| v.y),
                size: v.map(|v| v.size),
                color: v.map(|v| v.color),
            }
        })
        .collect();
    let edges = g
        .edges
        .iter()
        .map(|(k, w)| JsonEdge {
            source: k.source.to_string(),
            target: k.target.to_string(),
            kind: k.kind.as_str().to_string(),
            weight: (*w).into(),
        })
        .collect();
    serde_json::to_string(&JsonGraph { graph, nodes, edges }).expect("graph serializes")
}

pub fn write_json(doc: &GraphDocument, path: impl AsRef<Path>) -> Result<(), GraphIoError> {
    write_text(path.as_ref(), &json_to_string(doc))
}

pub fn read_json(path: impl AsRef<Path>) -> Result<GraphDocument, GraphIoError> {
    json_from_str(&read_text(path.as_ref())?)
}

pub fn json_from_str(text: &str) -> Result<GraphDocument, GraphIoError> {
    let parsed: JsonGraph = serde_json::from_str(text).map_err(|e| GraphIoError::ParseError {
        line: e.line().max(1),
        col: e.column().max(1),
        reason: e.to_string(),
    })?;
    // Structural errors found after parsing have no byte position; report
    // them at the start of the document.
    let err = |reason: String| GraphIoError::ParseError { line: 1, col: 1, reason };
    let mut builder = DocBuilder::default();
    if let Some(m) = parsed.graph {
        *builder.metadata() = GraphMetadata {
            query: m.query,
            collected_from: m.collected_from,
            collected_to: m.collected_to,
            unresolved_references: m.unresolved_references,
        };
    }
    for n in parsed.nodes {
        let visual = match (n.x, n.y) {
            (Some(x), Some(y)) => Some(NodeVisual {
                x,
                y,
                size: n.size.unwrap_or(1.0),
                color: n.color.unwrap_or(Rgb::GRAY),
            }),
            (None, None) => None,
            _ => return Err(err(format!("node {} has only one coordinate", n.id))),
        };
        let attrs = NodeAttrs {
            username: n.username,
            display_name: n.display_name,
            followers_count: n.followers_count,
            tweets_in_discussion: n.tweets_in_discussion,
            opinion: n.opinion,
        };
        builder.add_node(&n.id, attrs, visual, err)?;
    }
    for e in parsed.edges {
        let kind: EdgeKind = e.kind.parse().map_err(|_| err(format!("unknown edge kind {:?}", e.kind)))?;
        let source = e.source.parse().map_err(|_| err(format!("edge source {:?} is not a user id", e.source)))?;
        let target = e.target.parse().map_err(|_| err(format!("edge target {:?} is not a user id", e.target)))?;
        builder.add_edge(EdgeKey { source, target, kind }, Some(&e.weight.to_string()), err)?;
    }
    builder.finish(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_is_exact() {
        assert_eq!(json_to_string(&GraphDocument::default()), r#"{"nodes":[],"edges":[]}"#);
        assert_eq!(json_from_str(r#"{"nodes":[],"edges":[]}"#).unwrap(), GraphDocument::default());
    }

    #[test]
    fn syntax_error_has_position() {
        match json_from_str("{\"nodes\":[\n  {\"id\": }]}") {
            Err(GraphIoError::ParseError { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_edge_rejected() {
        let text = r#"{"nodes":[{"id":"1"}],"edges":[{"source":"1","target":"2","kind":"retweet","weight":1}]}"#;
        assert!(json_from_str(text).is_err());
    }
}
