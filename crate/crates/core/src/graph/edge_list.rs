use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Serialize;

use super::FiniteGraph;
use crate::error::{invalid_input, Error, Result};

/// Sizes before and after reduction to the largest component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeListStats {
    pub raw_nodes: usize,
    pub raw_edges: usize,
    pub nodes: usize,
    pub edges: usize,
}

/// Reads a SNAP-style edge list and returns its largest connected component.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<FiniteGraph> {
    parse_edge_list(reader).map(|(g, _)| g)
}

pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<(FiniteGraph, EdgeListStats)> {
    let mut ids: BTreeMap<u64, usize> = BTreeMap::new();
    let mut raw = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next = || -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected two node ids".into(),
            })?;
            tok.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("'{tok}' is not a node id"),
            })
        };
        let (u, v) = (next()?, next()?);
        ids.insert(u, 0);
        ids.insert(v, 0);
        raw.push((u, v));
    }
    if raw.is_empty() {
        return Err(invalid_input("edge list contains no edges"));
    }
    for (i, slot) in ids.values_mut().enumerate() {
        *slot = i;
    }
    let full = FiniteGraph::from_edges(ids.len(), raw.iter().map(|(u, v)| (ids[u], ids[v])))?;
    if full.edge_count() == 0 {
        return Err(invalid_input("edge list contains only self-loops"));
    }
    let lcc = full.largest_component();
    let stats = EdgeListStats {
        raw_nodes: full.node_count(),
        raw_edges: full.edge_count(),
        nodes: lcc.node_count(),
        edges: lcc.edge_count(),
    };
    Ok((lcc, stats))
}
