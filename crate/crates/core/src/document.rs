//! A graph plus optional per-node visual state, as read from or written to
//! graph files.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::graph::DiscussionGraph;
use crate::ids::UserId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const RED: Rgb = Rgb(0xe4, 0x1a, 0x1c);
    pub const BLUE: Rgb = Rgb(0x37, 0x7e, 0xb8);
    pub const PURPLE: Rgb = Rgb(0x98, 0x4e, 0xa3);
    pub const GRAY: Rgb = Rgb(0x99, 0x99, 0x99);
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(format!("invalid colour {s:?}"));
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| format!("invalid colour {s:?}"));
        Ok(Rgb(channel(0)?, channel(2)?, channel(4)?))
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeVisual {
    pub x: f64,
    pub y: f64,
    pub size: f64,
    pub color: Rgb,
}

/// `visuals`, when present, covers every node of `graph`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphDocument {
    pub graph: DiscussionGraph,
    pub visuals: Option<BTreeMap<UserId, NodeVisual>>,
}

impl GraphDocument {
    pub fn new(graph: DiscussionGraph) -> Self {
        Self { graph, visuals: None }
    }

    pub fn has_layout(&self) -> bool {
        self.visuals.is_some()
    }

    /// True when visual state is absent or covers exactly the node set.
    pub fn is_consistent(&self) -> bool {
        match &self.visuals {
            None => true,
            Some(v) => v.len() == self.graph.nodes.len() && self.graph.nodes.keys().all(|id| v.contains_key(id)),
        }
    }

    pub fn visual(&self, id: UserId) -> Option<&NodeVisual> {
        self.visuals.as_ref().and_then(|v| v.get(&id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colour_hex() {
        assert_eq!(Rgb::RED.to_string(), "#e41a1c");
        assert_eq!("#377eb8".parse::<Rgb>().unwrap(), Rgb::BLUE);
        assert!("#37".parse::<Rgb>().is_err());
        assert!("#zz7eb8".parse::<Rgb>().is_err());
    }
}
