//! Graph file formats: GEXF 1.3 (with the viz extension), GML and JSON
//! node-link.
//!
//! Every writer emits nodes and edges sorted by id, so a document always
//! serializes to the same bytes.

mod gexf;
mod gml;
mod json;

use std::fs;
use std::path::{Path, PathBuf};

use agora_core::{apply_layout, DiscussionGraph, EdgeKey, GraphDocument, LayoutParams, NodeAttrs, NodeVisual, UserId};

pub use gexf::{gexf_from_str, gexf_to_string, read_gexf, write_gexf};
pub use gml::{gml_from_str, gml_to_string, read_gml, write_gml};
pub use json::{json_from_str, json_to_string, read_json, write_json};

#[derive(Debug, thiserror::Error)]
pub enum GraphIoError {
    #[error("parse error at line {line}, column {col}: {reason}")]
    ParseError { line: usize, col: usize, reason: String },
    #[error("unsupported GEXF version {0:?}")]
    UnsupportedVersion(String),
    #[error("duplicate node id {0}")]
    DuplicateNodeId(String),
    #[error("cannot tell graph format of {0:?}; expected .gexf, .gml or .json")]
    UnknownFormat(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl GraphIoError {
    pub(crate) fn at(text: &str, offset: usize, reason: impl Into<String>) -> Self {
        let (line, col) = line_col(text, offset);
        GraphIoError::ParseError { line, col, reason: reason.into() }
    }
}

/// 1-based line and column (in characters) of a byte offset.
pub(crate) fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut offset = offset.min(text.len());
    while !text.is_char_boundary(offset) {
        offset -= 1;
    }
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Gexf,
    Gml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self, GraphIoError> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("gexf") => Ok(Format::Gexf),
            Some("gml") => Ok(Format::Gml),
            Some("json") => Ok(Format::Json),
            _ => Err(GraphIoError::UnknownFormat(path.display().to_string())),
        }
    }

    /// Guesses the format from the first non-blank byte.
    pub fn sniff(bytes: &[u8]) -> Self {
        match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'<') => Format::Gexf,
            Some(b'{') => Format::Json,
            _ => Format::Gml,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Gexf => "gexf",
            Format::Gml => "gml",
            Format::Json => "json",
        }
    }
}

pub fn to_string(doc: &GraphDocument, format: Format) -> String {
    match format {
        Format::Gexf => gexf_to_string(doc),
        Format::Gml => gml_to_string(doc),
        Format::Json => json_to_string(doc),
    }
}

pub fn from_str(text: &str, format: Format) -> Result<GraphDocument, GraphIoError> {
    match format {
        Format::Gexf => gexf_from_str(text),
        Format::Gml => gml_from_str(text),
        Format::Json => json_from_str(text),
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, GraphIoError> {
    fs::read_to_string(path).map_err(|source| GraphIoError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), GraphIoError> {
    fs::write(path, text).map_err(|source| GraphIoError::Io { path: path.to_path_buf(), source })
}

/// Reads a document, choosing the format from the file extension.
pub fn read_document(path: impl AsRef<Path>) -> Result<GraphDocument, GraphIoError> {
    let path = path.as_ref();
    let format = Format::from_path(path)?;
    from_str(&read_text(path)?, format)
}

/// Writes a document, choosing the format from the file extension.
pub fn write_document(doc: &GraphDocument, path: impl AsRef<Path>) -> Result<(), GraphIoError> {
    let path = path.as_ref();
    let format = Format::from_path(path)?;
    write_text(path, &to_string(doc, format))
}

#[derive(Debug, thiserror::Error)]
pub enum LayoutFileError {
    #[error(transparent)]
    Io(#[from] GraphIoError),
    #[error("layout failed: {0}")]
    Layout(#[from] agora_core::Error),
}

/// Lays out the graph stored at `path` and rewrites the file in place, in
/// the same format. Existing positions are replaced.
pub fn create_layout(path: impl AsRef<Path>, params: &LayoutParams) -> Result<GraphDocument, LayoutFileError> {
    let path = path.as_ref();
    let doc = read_document(path)?;
    let laid_out = apply_layout(doc.graph, params)?;
    write_document(&laid_out, path)?;
    Ok(laid_out)
}

/// Integers are taken exactly; other tools may write `2.0`, which is
/// accepted when it is integral and small enough to be exact.
fn parse_weight(raw: &str) -> Option<u64> {
    let raw = raw.trim();
    let w = match raw.parse::<u64>() {
        Ok(w) => w,
        Err(_) => {
            let f = raw.parse::<f64>().ok()?;
            if !(f.fract() == 0.0 && (0.0..=9_007_199_254_740_992.0).contains(&f)) {
                return None;
            }
            f as u64
        }
    };
    (w >= 1).then_some(w)
}

/// Collects parsed nodes and edges and checks the document invariants.
#[derive(Default)]
pub(crate) struct DocBuilder {
    graph: DiscussionGraph,
    visuals: Vec<(UserId, NodeVisual)>,
    without_visual: usize,
}

impl DocBuilder {
    pub(crate) fn metadata(&mut self) -> &mut agora_core::GraphMetadata {
        &mut self.graph.metadata
    }

    pub(crate) fn add_node(
        &mut self,
        raw_id: &str,
        attrs: NodeAttrs,
        visual: Option<NodeVisual>,
        err: impl Fn(String) -> GraphIoError,
    ) -> Result<UserId, GraphIoError> {
        let id: UserId = raw_id.parse().map_err(|_| err(format!("node id {raw_id:?} is not a decimal user id")))?;
        if self.graph.nodes.insert(id, attrs).is_some() {
            return Err(GraphIoError::DuplicateNodeId(raw_id.to_string()));
        }
        match visual {
            Some(v) => self.visuals.push((id, v)),
            None => self.without_visual += 1,
        }
        Ok(id)
    }

    /// `weight` is the raw text of the weight attribute, `None` meaning 1.
    pub(crate) fn add_edge(
        &mut self,
        key: EdgeKey,
        weight: Option<&str>,
        err: impl Fn(String) -> GraphIoError,
    ) -> Result<(), GraphIoError> {
        let weight = match weight {
            None => 1,
            Some(raw) => parse_weight(raw).ok_or_else(|| err(format!("edge weight {raw} is not a positive integer")))?,
        };
        if key.source == key.target {
            return Err(err(format!("self-loop on node {}", key.source)));
        }
        if self.graph.edges.insert(key, weight).is_some() {
            return Err(err(format!("duplicate {} edge {} -> {}", key.kind, key.source, key.target)));
        }
        Ok(())
    }

    pub(crate) fn finish(self, err: impl Fn(String) -> GraphIoError) -> Result<GraphDocument, GraphIoError> {
        for key in self.graph.edges.keys() {
            for end in [key.source, key.target] {
                if !self.graph.nodes.contains_key(&end) {
                    return Err(err(format!("edge references unknown node {end}")));
                }
            }
        }
        if !self.visuals.is_empty() && self.without_visual > 0 {
            return Err(err("some nodes have a position and others do not".into()));
        }
        let visuals = (!self.visuals.is_empty()).then(|| self.visuals.into_iter().collect());
        Ok(GraphDocument { graph: self.graph, visuals })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_col_counts_chars() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(line_col("é\nx", 3), (2, 1));
    }

    #[test]
    fn format_detection() {
        assert_eq!(Format::from_path(Path::new("a/b.GEXF")).unwrap(), Format::Gexf);
        assert!(Format::from_path(Path::new("a.graphml")).is_err());
        assert_eq!(Format::sniff(b"  <?xml"), Format::Gexf);
        assert_eq!(Format::sniff(b"{\"nodes\""), Format::Json);
        assert_eq!(Format::sniff(b"graph ["), Format::Gml);
    }
}
