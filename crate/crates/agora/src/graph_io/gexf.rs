use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use agora_core::{EdgeKey, EdgeKind, GraphDocument, GraphMetadata, NodeAttrs, NodeVisual, OpinionLabel, Rgb};
use chrono::{DateTime, SecondsFormat, Utc};
use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{read_text, write_text, DocBuilder, GraphIoError};

const SUPPORTED_VERSIONS: [&str; 4] = ["1.2", "1.2draft", "1.3", "1.3draft"];

fn fmt_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Collection metadata that has no GEXF element of its own travels in
/// `<keywords>` as `name=value` pairs.
fn metadata_keywords(meta: &GraphMetadata) -> String {
    let mut parts = Vec::new();
    if let Some(t) = &meta.collected_from {
        parts.push(format!("collected_from={}", fmt_time(t)));
    }
    if let Some(t) = &meta.collected_to {
        parts.push(format!("collected_to={}", fmt_time(t)));
    }
    parts.push(format!("unresolved_references={}", meta.unresolved_references));
    parts.join(";")
}

fn parse_keywords(meta: &mut GraphMetadata, text: &str) {
    for part in text.split(';') {
        let Some((k, v)) = part.split_once('=') else { continue };
        match k.trim() {
            "collected_from" => meta.collected_from = v.trim().parse().ok(),
            "collected_to" => meta.collected_to = v.trim().parse().ok(),
            "unresolved_references" => meta.unresolved_references = v.trim().parse().unwrap_or(0),
            _ => {}
        }
    }
}

pub fn gexf_to_string(doc: &GraphDocument) -> String {
    let g = &doc.graph;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<gexf xmlns=\"http://gexf.net/1.3\" xmlns:viz=\"http://gexf.net/1.3/viz\" version=\"1.3\">\n");
    out.push_str("  <meta>\n    <creator>agora</creator>\n");
    let _ = writeln!(out, "    <description>{}</description>", escape(g.metadata.query.as_str()));
    let _ = writeln!(out, "    <keywords>{}</keywords>", escape(metadata_keywords(&g.metadata).as_str()));
    out.push_str("  </meta>\n");
    out.push_str("  <graph mode=\"static\" defaultedgetype=\"directed\">\n");
    out.push_str("    <attributes class=\"node\">\n");
    for (id, ty) in [
        ("username", "string"),
        ("display_name", "string"),
        ("followers_count", "long"),
        ("tweets_in_discussion", "long"),
        ("opinion", "string"),
    ] {
        let _ = writeln!(out, "      <attribute id=\"{id}\" title=\"{id}\" type=\"{ty}\"/>");
    }
    out.push_str("    </attributes>\n");
    out.push_str("    <attributes class=\"edge\">\n      <attribute id=\"kind\" title=\"kind\" type=\"string\"/>\n    </attributes>\n");

    out.push_str("    <nodes>\n");
    for (id, a) in &g.nodes {
        let _ = writeln!(out, "      <node id=\"{id}\" label=\"{}\">", escape(a.username.as_str()));
        out.push_str("        <attvalues>\n");
        let _ = writeln!(out, "          <attvalue for=\"username\" value=\"{}\"/>", escape(a.username.as_str()));
        let _ = writeln!(out, "          <attvalue for=\"display_name\" value=\"{}\"/>", escape(a.display_name.as_str()));
        let _ = writeln!(out, "          <attvalue for=\"followers_count\" value=\"{}\"/>", a.followers_count);
        let _ = writeln!(out, "          <attvalue for=\"tweets_in_discussion\" value=\"{}\"/>", a.tweets_in_discussion);
        if let Some(op) = a.opinion {
            let _ = writeln!(out, "          <attvalue for=\"opinion\" value=\"{op}\"/>");
        }
        out.push_str("        </attvalues>\n");
        if let Some(v) = doc.visual(*id) {
            let _ = writeln!(out, "        <viz:size value=\"{:?}\"/>", v.size);
            let _ = writeln!(out, "        <viz:position x=\"{:?}\" y=\"{:?}\" z=\"0.0\"/>", v.x, v.y);
            let _ = writeln!(out, "        <viz:color r=\"{}\" g=\"{}\" b=\"{}\"/>", v.color.0, v.color.1, v.color.2);
        }
        out.push_str("      </node>\n");
    }
    out.push_str("    </nodes>\n");

    out.push_str("    <edges>\n");
    for (i, (k, w)) in g.edges.iter().enumerate() {
        let _ = writeln!(out, "      <edge id=\"{i}\" source=\"{}\" target=\"{}\" weight=\"{w}\">", k.source, k.target);
        let _ = writeln!(out, "        <attvalues>\n          <attvalue for=\"kind\" value=\"{}\"/>\n        </attvalues>", k.kind);
        out.push_str("      </edge>\n");
    }
    out.push_str("    </edges>\n  </graph>\n</gexf>\n");
    out
}

pub fn write_gexf(doc: &GraphDocument, path: impl AsRef<Path>) -> Result<(), GraphIoError> {
    write_text(path.as_ref(), &gexf_to_string(doc))
}

pub fn read_gexf(path: impl AsRef<Path>) -> Result<GraphDocument, GraphIoError> {
    gexf_from_str(&read_text(path.as_ref())?)
}

#[derive(Default)]
struct PendingNode {
    id: String,
    label: Option<String>,
    values: HashMap<String, String>,
    position: Option<(f64, f64)>,
    size: Option<f64>,
    color: Option<Rgb>,
    offset: usize,
}

struct PendingEdge {
    source: String,
    target: String,
    weight: Option<String>,
    kind: Option<String>,
    values: HashMap<String, String>,
    offset: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum TextTarget {
    None,
    Description,
    Keywords,
}

struct Parser<'a> {
    text: &'a str,
    /// Attribute declarations: (class, id) -> title.
    titles: HashMap<(String, String), String>,
    attr_class: String,
}

impl<'a> Parser<'a> {
    fn err(&self, offset: usize, reason: impl Into<String>) -> GraphIoError {
        GraphIoError::at(self.text, offset, reason)
    }

    fn attrs(&self, e: &BytesStart<'_>, offset: usize) -> Result<HashMap<String, String>, GraphIoError> {
        let mut out = HashMap::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| self.err(offset, err.to_string()))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr.unescape_value().map_err(|err| self.err(offset, err.to_string()))?.into_owned();
            out.insert(key, value);
        }
        Ok(out)
    }

    fn title(&self, class: &str, id: &str) -> String {
        self.titles.get(&(class.to_string(), id.to_string())).cloned().unwrap_or_else(|| id.to_string())
    }

    fn float(&self, attrs: &HashMap<String, String>, key: &str, offset: usize) -> Result<Option<f64>, GraphIoError> {
        attrs
            .get(key)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|f| f.is_finite())
                    .ok_or_else(|| self.err(offset, format!("attribute {key}={v:?} is not a finite number")))
            })
            .transpose()
    }
}

pub fn gexf_from_str(text: &str) -> Result<GraphDocument, GraphIoError> {
    let mut reader = Reader::from_str(text);
    let mut p = Parser { text, titles: HashMap::new(), attr_class: String::new() };
    let mut builder = DocBuilder::default();
    let mut stack: Vec<String> = Vec::new();
    let mut node: Option<PendingNode> = None;
    let mut edge: Option<PendingEdge> = None;
    let mut text_target = TextTarget::None;
    let mut text_buf = String::new();
    let mut saw_root = false;

    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader.read_event().map_err(|e| p.err(reader.error_position() as usize, e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let local = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                let attrs = p.attrs(e, offset)?;
                match local.as_str() {
                    "gexf" => {
                        if !stack.is_empty() {
                            return Err(p.err(offset, "nested gexf element"));
                        }
                        saw_root = true;
                        if let Some(v) = attrs.get("version") {
                            if !SUPPORTED_VERSIONS.contains(&v.as_str()) {
                                return Err(GraphIoError::UnsupportedVersion(v.clone()));
                            }
                        }
                    }
                    "description" => text_target = TextTarget::Description,
                    "keywords" => text_target = TextTarget::Keywords,
                    "attributes" => p.attr_class = attrs.get("class").cloned().unwrap_or_default(),
                    "attribute" => {
                        if let (Some(id), Some(title)) = (attrs.get("id"), attrs.get("title")) {
                            p.titles.insert((p.attr_class.clone(), id.clone()), title.clone());
                        }
                    }
                    "node" => {
                        let id = attrs.get("id").cloned().ok_or_else(|| p.err(offset, "node without id"))?;
                        node = Some(PendingNode { id, label: attrs.get("label").cloned(), offset, ..PendingNode::default() });
                    }
                    "edge" => {
                        let get = |k: &str| attrs.get(k).cloned().ok_or_else(|| p.err(offset, format!("edge without {k}")));
                        edge = Some(PendingEdge {
                            source: get("source")?,
                            target: get("target")?,
                            weight: attrs.get("weight").cloned(),
                            kind: attrs.get("kind").cloned(),
                            values: HashMap::new(),
                            offset,
                        });
                    }
                    "attvalue" => {
                        let key = attrs.get("for").or_else(|| attrs.get("id")).cloned().ok_or_else(|| p.err(offset, "attvalue without for"))?;
                        let value = attrs.get("value").cloned().unwrap_or_default();
                        if let Some(ed) = edge.as_mut() {
                            ed.values.insert(p.title("edge", &key), value);
                        } else if let Some(n) = node.as_mut() {
                            n.values.insert(p.title("node", &key), value);
                        }
                    }
                    "position" | "size" | "color" if node.is_some() && edge.is_none() => {
                        let n = node.as_mut().expect("checked");
                        match local.as_str() {
                            "position" => {
                                let x = p.float(&attrs, "x", offset)?.unwrap_or(0.0);
                                let y = p.float(&attrs, "y", offset)?.unwrap_or(0.0);
                                n.position = Some((x, y));
                            }
                            "size" => n.size = p.float(&attrs, "value", offset)?,
                            _ => {
                                let channel = |k: &str| -> Result<u8, GraphIoError> {
                                    attrs
                                        .get(k)
                                        .map_or(Ok(0), |v| v.trim().parse().map_err(|_| p.err(offset, format!("bad colour channel {k}={v:?}"))))
                                };
                                n.color = Some(Rgb(channel("r")?, channel("g")?, channel("b")?));
                            }
                        }
                    }
                    _ => {}
                }
                if is_empty {
                    finish_element(&p, &local, &mut node, &mut edge, &mut builder)?;
                } else {
                    stack.push(local);
                }
            }
            Event::End(ref e) => {
                let local = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                stack.pop();
                match local.as_str() {
                    "description" | "keywords" => {
                        let value = std::mem::take(&mut text_buf);
                        match text_target {
                            TextTarget::Description => builder.metadata().query = value,
                            TextTarget::Keywords => parse_keywords(builder.metadata(), &value),
                            TextTarget::None => {}
                        }
                        text_target = TextTarget::None;
                    }
                    _ => finish_element(&p, &local, &mut node, &mut edge, &mut builder)?,
                }
            }
            Event::Text(t) if text_target != TextTarget::None => {
                text_buf.push_str(&t.decode().map_err(|e| p.err(offset, e.to_string()))?);
            }
            Event::GeneralRef(r) if text_target != TextTarget::None => {
                if let Some(c) = r.resolve_char_ref().map_err(|e| p.err(offset, e.to_string()))? {
                    text_buf.push(c);
                } else {
                    let name = r.decode().map_err(|e| p.err(offset, e.to_string()))?;
                    let resolved = resolve_predefined_entity(&name).ok_or_else(|| p.err(offset, format!("unknown entity &{name};")))?;
                    text_buf.push_str(resolved);
                }
            }
            Event::Eof => {
                if !saw_root {
                    return Err(p.err(text.len(), "missing gexf root element"));
                }
                if let Some(open) = stack.last() {
                    return Err(p.err(text.len(), format!("unexpected end of document inside <{open}>")));
                }
                break;
            }
            _ => {}
        }
    }
    builder.finish(|reason| p.err(text.len(), reason))
}

fn finish_element(
    p: &Parser<'_>,
    local: &str,
    node: &mut Option<PendingNode>,
    edge: &mut Option<PendingEdge>,
    builder: &mut DocBuilder,
) -> Result<(), GraphIoError> {
    match local {
        "node" if edge.is_none() => {
            let Some(n) = node.take() else { return Ok(()) };
            let err = |reason: String| p.err(n.offset, reason);
            let long = |key: &str| -> Result<u64, GraphIoError> {
                n.values.get(key).map_or(Ok(0), |v| v.trim().parse().map_err(|_| err(format!("{key}={v:?} is not an integer"))))
            };
            let opinion = match n.values.get("opinion").filter(|v| !v.is_empty()) {
                Some(v) => Some(v.parse::<OpinionLabel>().map_err(&err)?),
                None => None,
            };
            let attrs = NodeAttrs {
                username: n.values.get("username").cloned().or_else(|| n.label.clone()).unwrap_or_default(),
                display_name: n.values.get("display_name").cloned().unwrap_or_default(),
                followers_count: long("followers_count")?,
                tweets_in_discussion: long("tweets_in_discussion")?,
                opinion,
            };
            let visual = n.position.map(|(x, y)| NodeVisual {
                x,
                y,
                size: n.size.unwrap_or(1.0),
                color: n.color.unwrap_or(Rgb::GRAY),
            });
            builder.add_node(&n.id, attrs, visual, err)?;
        }
        "edge" => {
            let Some(e) = edge.take() else { return Ok(()) };
            let err = |reason: String| p.err(e.offset, reason);
            let kind_str = e.values.get("kind").or(e.kind.as_ref()).ok_or_else(|| err("edge without kind".into()))?;
            let kind: EdgeKind = kind_str.parse().map_err(|_| err(format!("unknown edge kind {kind_str:?}")))?;
            let source = e.source.parse().map_err(|_| err(format!("edge source {:?} is not a user id", e.source)))?;
            let target = e.target.parse().map_err(|_| err(format!("edge target {:?} is not a user id", e.target)))?;
            builder.add_edge(EdgeKey { source, target, kind }, e.weight.as_deref(), err)?;
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use agora_core::{DiscussionGraph, UserId};

    fn one_node() -> GraphDocument {
        let mut g = DiscussionGraph::default();
        g.nodes.insert(UserId(7), NodeAttrs { username: "a&b \"q\"".into(), ..NodeAttrs::default() });
        g.metadata.query = "#tag & <more>".into();
        GraphDocument::new(g)
    }

    #[test]
    fn minimal_document() {
        let text = gexf_to_string(&one_node());
        assert!(text.contains("defaultedgetype=\"directed\""));
        assert_eq!(text.matches("<node ").count(), 1);
        assert_eq!(gexf_from_str(&text).unwrap(), one_node());
    }

    #[test]
    fn truncated_reports_location() {
        let text = gexf_to_string(&one_node());
        let cut = &text[..text.find("</nodes>").unwrap()];
        match gexf_from_str(cut) {
            Err(GraphIoError::ParseError { line, .. }) => assert!(line > 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn version_check() {
        let text = gexf_to_string(&one_node()).replace("version=\"1.3\">", "version=\"2.0\">");
        assert!(matches!(gexf_from_str(&text), Err(GraphIoError::UnsupportedVersion(v)) if v == "2.0"));
    }

    #[test]
    fn reads_foreign_attribute_ids() {
        let text = r#"<?xml version="1.0" encoding="UTF-8"?>
<gexf xmlns="http://gexf.net/1.3" version="1.3">
  <graph defaultedgetype="directed">
    <attributes class="node"><attribute id="0" title="username" type="string"/></attributes>
    <attributes class="edge"><attribute id="0" title="kind" type="string"/></attributes>
    <nodes>
      <node id="1" label="x"><attvalues><attvalue for="0" value="alice"/></attvalues></node>
      <node id="2" label="bob"/>
    </nodes>
    <edges><edge id="0" source="1" target="2" weight="3.0"><attvalues><attvalue for="0" value="reply"/></attvalues></edge></edges>
  </graph>
</gexf>"#;
        let doc = gexf_from_str(text).unwrap();
        assert_eq!(doc.graph.nodes[&UserId(1)].username, "alice");
        assert_eq!(doc.graph.nodes[&UserId(2)].username, "bob");
        assert_eq!(doc.graph.total_weight(EdgeKind::Reply), 3);
        assert!(doc.visuals.is_none());
    }

    #[test]
    fn rejects_partial_layout_and_duplicates() {
        let text = r#"<gexf version="1.3"><graph><nodes>
            <node id="1"><viz:position x="1" y="2"/></node><node id="2"/></nodes></graph></gexf>"#;
        assert!(matches!(gexf_from_str(text), Err(GraphIoError::ParseError { .. })));
        let text = r#"<gexf version="1.3"><graph><nodes><node id="1"/><node id="1"/></nodes></graph></gexf>"#;
        assert!(matches!(gexf_from_str(text), Err(GraphIoError::DuplicateNodeId(_))));
    }
}
