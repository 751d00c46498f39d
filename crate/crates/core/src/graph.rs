//! Twin digraphs over the bins.
//!
//! Every item is an edge between its two choice bins. `D` keeps the
//! orientation drawn when the item arrived and never changes it; `D'`
//! points each edge at the bin that currently holds the item and is
//! flipped on every eviction. Both share the same underlying multigraph
//! `G`.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::{BinId, ItemId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("item {0} is already recorded")]
    DuplicateItem(ItemId),
    #[error("item {0} is not recorded")]
    UnknownItem(ItemId),
    #[error("head {head} is not an endpoint of {{{u}, {v}}}")]
    IllegalHead { head: BinId, u: BinId, v: BinId },
    #[error("endpoints must be distinct bins in 0..{n}, got {{{u}, {v}}}")]
    IllegalEndpoints { u: BinId, v: BinId, n: usize },
    #[error("vertex {vertex} out of range 0..{n}")]
    VertexOutOfRange { vertex: BinId, n: usize },
}

/// Selects one of the two digraphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    D,
    DPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeRecord {
    pub item_id: ItemId,
    pub endpoints: (BinId, BinId),
    /// Head in `D`; fixed at creation.
    pub head_d: BinId,
    /// Head in `D'`; the bin currently holding the item.
    pub head_dprime: BinId,
}

impl EdgeRecord {
    pub fn other(&self, bin: BinId) -> BinId {
        if self.endpoints.0 == bin {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn head(&self, which: Orientation) -> BinId {
        match which {
            Orientation::D => self.head_d,
            Orientation::DPrime => self.head_dprime,
        }
    }

    pub fn tail(&self, which: Orientation) -> BinId {
        self.other(self.head(which))
    }
}

/// One entry of the flip audit log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlipAudit {
    pub item_id: ItemId,
    pub from: BinId,
    pub to: BinId,
    /// Whether the bin the edge pointed at held `d` items when flipped.
    pub old_head_saturated: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlipCounters {
    pub total: u64,
    pub old_head_saturated: u64,
}

#[derive(Debug, Clone)]
pub struct AllocationGraph {
    n: usize,
    capacity: usize,
    edges: Vec<Option<EdgeRecord>>,
    edge_count: usize,
    in_degree_d: Vec<u32>,
    in_degree_dprime: Vec<u32>,
    flips: FlipCounters,
    flip_log: Option<Vec<FlipAudit>>,
}

impl AllocationGraph {
    /// Creates an empty graph on `n` vertices whose bins hold `capacity`
    /// items. The flip log is on in debug builds; release builds keep only
    /// the counters unless [`set_flip_log`](Self::set_flip_log) enables it.
    pub fn new(n: usize, capacity: usize) -> Self {
        AllocationGraph {
            n,
            capacity,
            edges: Vec::new(),
            edge_count: 0,
            in_degree_d: vec![0; n],
            in_degree_dprime: vec![0; n],
            flips: FlipCounters::default(),
            flip_log: cfg!(debug_assertions).then(Vec::new),
        }
    }

    pub fn set_flip_log(&mut self, enabled: bool) {
        match (enabled, self.flip_log.is_some()) {
            (true, false) => self.flip_log = Some(Vec::new()),
            (false, true) => self.flip_log = None,
            _ => {}
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn record_edge(
        &mut self,
        item_id: ItemId,
        u: BinId,
        v: BinId,
        head_d: BinId,
        head_dprime: BinId,
    ) -> Result<(), GraphError> {
        if u == v || u as usize >= self.n || v as usize >= self.n {
            return Err(GraphError::IllegalEndpoints { u, v, n: self.n });
        }
        for head in [head_d, head_dprime] {
            if head != u && head != v {
                return Err(GraphError::IllegalHead { head, u, v });
            }
        }
        let idx = item_id as usize;
        if self.edges.get(idx).is_some_and(Option::is_some) {
            return Err(GraphError::DuplicateItem(item_id));
        }
        if idx >= self.edges.len() {
            self.edges.resize(idx + 1, None);
        }
        self.edges[idx] = Some(EdgeRecord {
            item_id,
            endpoints: (u, v),
            head_d,
            head_dprime,
        });
        self.edge_count += 1;
        self.in_degree_d[head_d as usize] += 1;
        self.in_degree_dprime[head_dprime as usize] += 1;
        Ok(())
    }

    /// Points the `D'` edge of `item_id` at its other endpoint and returns
    /// the new head. `old_head_load` is the load of the current head bin at
    /// the moment of the flip and feeds the audit.
    pub fn flip(&mut self, item_id: ItemId, old_head_load: usize) -> Result<BinId, GraphError> {
        let capacity = self.capacity;
        let edge = self
            .edges
            .get_mut(item_id as usize)
            .and_then(Option::as_mut)
            .ok_or(GraphError::UnknownItem(item_id))?;
        let from = edge.head_dprime;
        let to = edge.other(from);
        edge.head_dprime = to;
        self.in_degree_dprime[from as usize] -= 1;
        self.in_degree_dprime[to as usize] += 1;

        let old_head_saturated = old_head_load == capacity;
        self.flips.total += 1;
        if old_head_saturated {
            self.flips.old_head_saturated += 1;
        }
        if let Some(log) = self.flip_log.as_mut() {
            log.push(FlipAudit {
                item_id,
                from,
                to,
                old_head_saturated,
            });
        }
        Ok(to)
    }

    /// Undoes the most recent flip of `item_id`, including its audit entry.
    pub(crate) fn revert_flip(&mut self, item_id: ItemId, old_head_load: usize) {
        let edge = self.edges[item_id as usize]
            .as_mut()
            .expect("reverting a flip of an unrecorded item");
        let to = edge.head_dprime;
        let from = edge.other(to);
        edge.head_dprime = from;
        self.in_degree_dprime[to as usize] -= 1;
        self.in_degree_dprime[from as usize] += 1;
        self.flips.total -= 1;
        if old_head_load == self.capacity {
            self.flips.old_head_saturated -= 1;
        }
        if let Some(log) = self.flip_log.as_mut() {
            log.pop();
        }
    }

    /// Drops the edge of an insertion that was rolled back.
    pub(crate) fn remove_edge(&mut self, item_id: ItemId) {
        let edge = self.edges[item_id as usize]
            .take()
            .expect("removing an unrecorded edge");
        self.edge_count -= 1;
        self.in_degree_d[edge.head_d as usize] -= 1;
        self.in_degree_dprime[edge.head_dprime as usize] -= 1;
    }

    pub fn edge(&self, item_id: ItemId) -> Option<&EdgeRecord> {
        self.edges.get(item_id as usize).and_then(Option::as_ref)
    }

    /// Recorded edges in item-id order.
    pub fn edges(&self) -> impl Iterator<Item = &EdgeRecord> + '_ {
        self.edges.iter().flatten()
    }

    pub fn in_degree(&self, vertex: BinId, which: Orientation) -> Result<u32, GraphError> {
        if vertex as usize >= self.n {
            return Err(GraphError::VertexOutOfRange { vertex, n: self.n });
        }
        Ok(self.in_degrees(which)[vertex as usize])
    }

    pub fn in_degrees(&self, which: Orientation) -> &[u32] {
        match which {
            Orientation::D => &self.in_degree_d,
            Orientation::DPrime => &self.in_degree_dprime,
        }
    }

    /// Undirected degree of every vertex, recounted from the edge heads
    /// and tails of the chosen digraph.
    pub fn undirected_degrees(&self, which: Orientation) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for e in self.edges() {
            deg[e.head(which) as usize] += 1;
            deg[e.tail(which) as usize] += 1;
        }
        deg
    }

    pub fn flip_counters(&self) -> FlipCounters {
        self.flips
    }

    pub fn flip_log(&self) -> Option<&[FlipAudit]> {
        self.flip_log.as_deref()
    }

    pub fn underlying_multigraph(&self) -> Multigraph {
        let edges: Vec<(BinId, BinId)> = self.edges().map(|e| e.endpoints).collect();
        Multigraph::from_edges(self.n, edges)
    }

    /// Snapshot used by the structure analysis.
    pub fn view(&self) -> DigraphView {
        DigraphView {
            in_degree_d: self.in_degree_d.clone(),
            in_degree_dprime: self.in_degree_dprime.clone(),
            graph: self.underlying_multigraph(),
        }
    }

    /// Writes one `item_id tail head` line per edge of the chosen digraph.
    pub fn write_edge_list<W: Write>(&self, which: Orientation, mut out: W) -> io::Result<()> {
        for e in self.edges() {
            writeln!(out, "{} {} {}", e.item_id, e.tail(which), e.head(which))?;
        }
        Ok(())
    }
}

/// Orientation-erased multigraph in compressed adjacency form. Parallel
/// edges appear once per copy in both endpoint lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multigraph {
    n: usize,
    edges: Vec<(BinId, BinId)>,
    offsets: Vec<usize>,
    adjacency: Vec<BinId>,
}

impl Multigraph {
    pub fn from_edges(n: usize, edges: Vec<(BinId, BinId)>) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, v) in &edges {
            offsets[u as usize + 1] += 1;
            offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![0; offsets[n]];
        for &(u, v) in &edges {
            adjacency[fill[u as usize]] = v;
            fill[u as usize] += 1;
            adjacency[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..n {
            adjacency[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Multigraph {
            n,
            edges,
            offsets,
            adjacency,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(BinId, BinId)] {
        &self.edges
    }

    /// Sorted neighbor list of `v`, one entry per parallel edge.
    pub fn neighbors(&self, v: BinId) -> &[BinId] {
        &self.adjacency[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn distinct_neighbors(&self, v: BinId) -> impl Iterator<Item = BinId> + '_ {
        let list = self.neighbors(v);
        list.iter()
            .enumerate()
            .filter(move |&(i, w)| i == 0 || list[i - 1] != *w)
            .map(|(_, &w)| w)
    }

    pub fn degree(&self, v: BinId) -> usize {
        self.neighbors(v).len()
    }

    pub fn multiplicity(&self, u: BinId, v: BinId) -> usize {
        let list = self.neighbors(u);
        let lo = list.partition_point(|&w| w < v);
        let hi = list.partition_point(|&w| w <= v);
        hi - lo
    }
}

/// Degree tallies of both digraphs plus the shared multigraph.
#[derive(Debug, Clone)]
pub struct DigraphView {
    pub in_degree_d: Vec<u32>,
    pub in_degree_dprime: Vec<u32>,
    pub graph: Multigraph,
}

impl DigraphView {
    /// Builds a view from `(tail, head)` pairs, with `D' = D`.
    pub fn from_oriented_edges(n: usize, arcs: &[(BinId, BinId)]) -> Self {
        let mut in_degree = vec![0u32; n];
        for &(_, head) in arcs {
            in_degree[head as usize] += 1;
        }
        DigraphView {
            in_degree_dprime: in_degree.clone(),
            in_degree_d: in_degree,
            graph: Multigraph::from_edges(n, arcs.to_vec()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }
}
