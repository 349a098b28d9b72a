use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use agora_core::{EdgeKey, EdgeKind, GraphDocument, GraphMetadata, NodeAttrs, NodeVisual, OpinionLabel, Rgb, UserId};
use chrono::SecondsFormat;

use super::{read_text, write_text, DocBuilder, GraphIoError};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn unescape(raw: &str) -> Result<String, String> {
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        let end = tail.find(';').ok_or_else(|| format!("unterminated entity in {raw:?}"))?;
        let name = &tail[..end];
        let c = match name {
            "amp" => '&',
            "quot" => '"',
            "lt" => '<',
            "gt" => '>',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = name.strip_prefix('#') {
                    dec.parse().ok()
                } else {
                    None
                };
                code.and_then(char::from_u32).ok_or_else(|| format!("unknown entity &{name};"))?
            }
        };
        out.push(c);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn time(t: &chrono::DateTime<chrono::Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn gml_to_string(doc: &GraphDocument) -> String {
    let g = &doc.graph;
    let mut out = String::from("graph [\n  directed 1\n");
    let m = &g.metadata;
    let _ = writeln!(out, "  query {}", quote(&m.query));
    if let Some(t) = &m.collected_from {
        let _ = writeln!(out, "  collected_from {}", quote(&time(t)));
    }
    if let Some(t) = &m.collected_to {
        let _ = writeln!(out, "  collected_to {}", quote(&time(t)));
    }
    let _ = writeln!(out, "  unresolved_references {}", m.unresolved_references);

    let mut index = HashMap::with_capacity(g.nodes.len());
    for (i, (id, a)) in g.nodes.iter().enumerate() {
        index.insert(*id, i);
        out.push_str("  node [\n");
        let _ = writeln!(out, "    id {i}");
        let _ = writeln!(out, "    label {}", quote(&a.username));
        let _ = writeln!(out, "    user_id {}", quote(&id.to_string()));
        let _ = writeln!(out, "    display_name {}", quote(&a.display_name));
        let _ = writeln!(out, "    followers_count {}", a.followers_count);
        let _ = writeln!(out, "    tweets_in_discussion {}", a.tweets_in_discussion);
        if let Some(op) = a.opinion {
            let _ = writeln!(out, "    opinion {}", quote(&op.to_string()));
        }
        if let Some(v) = doc.visual(*id) {
            let _ = writeln!(
                out,
                "    graphics [\n      x {:?}\n      y {:?}\n      w {:?}\n      fill {}\n    ]",
                v.x,
                v.y,
                v.size,
                quote(&v.color.to_string())
            );
        }
        out.push_str("  ]\n");
    }
    for (k, w) in &g.edges {
        let _ = writeln!(
            out,
            "  edge [\n    source {}\n    target {}\n    kind {}\n    weight {w}\n  ]",
            index[&k.source],
            index[&k.target],
            quote(k.kind.as_str())
        );
    }
    out.push_str("]\n");
    out
}

pub fn write_gml(doc: &GraphDocument, path: impl AsRef<Path>) -> Result<(), GraphIoError> {
    write_text(path.as_ref(), &gml_to_string(doc))
}

pub fn read_gml(path: impl AsRef<Path>) -> Result<GraphDocument, GraphIoError> {
    gml_from_str(&read_text(path.as_ref())?)
}

#[derive(Debug)]
enum Value {
    Number(String),
    Str(String),
    List(Vec<Entry>),
}

#[derive(Debug)]
struct Entry {
    key: String,
    value: Value,
    offset: usize,
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Key(&'a str),
    Number(&'a str),
    Str(&'a str),
    Open,
    Close,
}

impl<'a> Lexer<'a> {
    fn err(&self, offset: usize, reason: impl Into<String>) -> GraphIoError {
        GraphIoError::at(self.text, offset, reason)
    }

    fn skip_blank(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b if b.is_ascii_whitespace() => self.pos += 1,
                b'#' => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Result<Option<(Token<'a>, usize)>, GraphIoError> {
        self.skip_blank();
        let bytes = self.text.as_bytes();
        let start = self.pos;
        let Some(&b) = bytes.get(start) else { return Ok(None) };
        let tok = match b {
            b'[' => {
                self.pos += 1;
                Token::Open
            }
            b']' => {
                self.pos += 1;
                Token::Close
            }
            b'"' => {
                let end = self.text[start + 1..]
                    .find('"')
                    .ok_or_else(|| self.err(start, "unterminated string"))?;
                self.pos = start + 1 + end + 1;
                Token::Str(&self.text[start + 1..start + 1 + end])
            }
            b'+' | b'-' | b'.' | b'0'..=b'9' => {
                self.pos += 1;
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_digit()
                        || matches!(bytes[self.pos], b'.' | b'e' | b'E')
                        || (matches!(bytes[self.pos], b'+' | b'-') && matches!(bytes[self.pos - 1], b'e' | b'E')))
                {
                    self.pos += 1;
                }
                Token::Number(&self.text[start..self.pos])
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                    self.pos += 1;
                }
                Token::Key(&self.text[start..self.pos])
            }
            _ => {
                let c = self.text[start..].chars().next().unwrap_or('?');
                return Err(self.err(start, format!("unexpected character {c:?}")));
            }
        };
        Ok(Some((tok, start)))
    }

    /// Parses `key value` pairs until `]` (nested) or end of input (top level).
    fn list(&mut self, nested: bool, open_at: usize) -> Result<Vec<Entry>, GraphIoError> {
        let mut entries = Vec::new();
        loop {
            let key = match self.next()? {
                None if nested => return Err(self.err(self.text.len(), format!("unexpected end of input; list opened at offset {open_at} is not closed"))),
                None => return Ok(entries),
                Some((Token::Close, _)) if nested => return Ok(entries),
                Some((Token::Key(k), at)) => (k, at),
                Some((tok, at)) => return Err(self.err(at, format!("expected a key, found {tok:?}"))),
            };
            let value = match self.next()? {
                None => return Err(self.err(self.text.len(), format!("unexpected end of input after key {:?}", key.0))),
                Some((Token::Number(n), _)) => Value::Number(n.to_string()),
                Some((Token::Str(s), at)) => Value::Str(unescape(s).map_err(|r| self.err(at, r))?),
                Some((Token::Open, at)) => Value::List(self.list(true, at)?),
                Some((tok, at)) => return Err(self.err(at, format!("expected a value for {:?}, found {tok:?}", key.0))),
            };
            entries.push(Entry { key: key.0.to_string(), value, offset: key.1 });
        }
    }
}

struct Fields<'a> {
    text: &'a str,
    entries: &'a [Entry],
    at: usize,
}

impl<'a> Fields<'a> {
    fn err(&self, reason: impl Into<String>) -> GraphIoError {
        GraphIoError::at(self.text, self.at, reason)
    }

    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn string(&self, key: &str) -> Result<Option<String>, GraphIoError> {
        match self.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s.clone())),
            Some(Value::Number(n)) => Ok(Some(n.clone())),
            Some(Value::List(_)) => Err(self.err(format!("{key} must be a scalar"))),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>, GraphIoError> {
        self.string(key)?
            .map(|s| s.trim().parse::<u64>().map_err(|_| self.err(format!("{key}={s:?} is not a non-negative integer"))))
            .transpose()
    }

    fn float(&self, key: &str) -> Result<Option<f64>, GraphIoError> {
        match self.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .map(Some)
                .ok_or_else(|| self.err(format!("{key}={n:?} is not a number"))),
            Some(_) => Err(self.err(format!("{key} must be a number"))),
        }
    }

    fn sub(&self, e: &'a Entry) -> Result<Fields<'a>, GraphIoError> {
        match &e.value {
            Value::List(entries) => Ok(Fields { text: self.text, entries, at: e.offset }),
            _ => Err(GraphIoError::at(self.text, e.offset, format!("{} must be a list", e.key))),
        }
    }
}

pub fn gml_from_str(text: &str) -> Result<GraphDocument, GraphIoError> {
    let mut lexer = Lexer { text, pos: 0 };
    let top = lexer.list(false, 0)?;
    let root = Fields { text, entries: &top, at: 0 };
    let graph_entry = root.get("graph").ok_or_else(|| root.err("missing top-level graph list"))?;
    let graph = root.sub(graph_entry)?;

    let mut builder = DocBuilder::default();
    let parse_time = |key: &str| -> Result<_, GraphIoError> {
        graph
            .string(key)?
            .map(|s| s.parse().map_err(|_| graph.err(format!("{key}={s:?} is not an RFC 3339 timestamp"))))
            .transpose()
    };
    *builder.metadata() = GraphMetadata {
        query: graph.string("query")?.unwrap_or_default(),
        collected_from: parse_time("collected_from")?,
        collected_to: parse_time("collected_to")?,
        unresolved_references: graph.uint("unresolved_references")?.unwrap_or(0),
    };

    let mut by_index: HashMap<String, UserId> = HashMap::new();
    for e in graph.entries.iter().filter(|e| e.key == "node") {
        let node = graph.sub(e)?;
        let err = |reason: String| GraphIoError::at(text, e.offset, reason);
        let gml_id = node.string("id")?.ok_or_else(|| node.err("node without id"))?;
        let label = node.string("label")?;
        let user_id = node.string("user_id")?.unwrap_or_else(|| gml_id.clone());
        let opinion = match node.string("opinion")? {
            Some(s) if !s.is_empty() => Some(s.parse::<OpinionLabel>().map_err(err)?),
            _ => None,
        };
        let attrs = NodeAttrs {
            username: node.string("username")?.or(label).unwrap_or_default(),
            display_name: node.string("display_name")?.unwrap_or_default(),
            followers_count: node.uint("followers_count")?.unwrap_or(0),
            tweets_in_discussion: node.uint("tweets_in_discussion")?.unwrap_or(0),
            opinion,
        };
        let visual = match node.get("graphics") {
            None => None,
            Some(ge) => {
                let gfx = node.sub(ge)?;
                match (gfx.float("x")?, gfx.float("y")?) {
                    (Some(x), Some(y)) => {
                        let color = match gfx.string("fill")? {
                            Some(s) => s.parse::<Rgb>().map_err(|r| gfx.err(r))?,
                            None => Rgb::GRAY,
                        };
                        Some(NodeVisual { x, y, size: gfx.float("w")?.unwrap_or(1.0), color })
                    }
                    (None, None) => None,
                    _ => return Err(gfx.err("graphics needs both x and y")),
                }
            }
        };
        let uid = builder.add_node(&user_id, attrs, visual, err)?;
        if by_index.insert(gml_id.clone(), uid).is_some() {
            return Err(GraphIoError::DuplicateNodeId(gml_id));
        }
    }

    for e in graph.entries.iter().filter(|e| e.key == "edge") {
        let edge = graph.sub(e)?;
        let err = |reason: String| GraphIoError::at(text, e.offset, reason);
        let end = |key: &str| -> Result<UserId, GraphIoError> {
            let raw = edge.string(key)?.ok_or_else(|| edge.err(format!("edge without {key}")))?;
            by_index.get(&raw).copied().ok_or_else(|| edge.err(format!("edge {key} {raw} is not a node")))
        };
        let kind_str = edge.string("kind")?.ok_or_else(|| edge.err("edge without kind"))?;
        let kind: EdgeKind = kind_str.parse().map_err(|_| edge.err(format!("unknown edge kind {kind_str:?}")))?;
        let weight = edge.string("weight")?;
        builder.add_edge(EdgeKey { source: end("source")?, target: end("target")?, kind }, weight.as_deref(), err)?;
    }
    builder.finish(|reason| GraphIoError::at(text, graph_entry.offset, reason))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_round_trip() {
        let s = "a \"b\" & c &amp;";
        assert_eq!(unescape(&quote(s)[1..quote(s).len() - 1]).unwrap(), s);
        assert_eq!(unescape("&#233;&#x41;").unwrap(), "éA");
    }

    #[test]
    fn truncated_is_located() {
        let text = "graph [\n  directed 1\n  node [\n    id 0\n";
        match gml_from_str(text) {
            Err(GraphIoError::ParseError { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plain_gml_without_user_ids() {
        let text = "# comment\ngraph [ node [ id 1 label \"a\" ] node [ id 2 label \"b\" ] edge [ source 1 target 2 kind \"mention\" weight 2 ] ]";
        let doc = gml_from_str(text).unwrap();
        assert_eq!(doc.graph.nodes[&UserId(1)].username, "a");
        assert_eq!(doc.graph.total_weight(EdgeKind::Mention), 2);
    }

    #[test]
    fn bad_token() {
        assert!(matches!(gml_from_str("graph [ node [ id @ ] ]"), Err(GraphIoError::ParseError { line: 1, col: 19, .. })));
    }
}
