//! Slow reference implementations for small instances.
//!
//! These share no code with the layered closure or the union-find census:
//! adjacency is rebuilt from the raw edge list into ordered maps, the
//! closure is a plain fixed-point scan, and components come from DFS.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::DigraphView;
use crate::structure::NeighborCounting;
use crate::BinId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanOrder {
    Ascending,
    Descending,
}

fn adjacency(n: usize, edges: &[(BinId, BinId)]) -> Vec<BTreeMap<BinId, usize>> {
    let mut adj = vec![BTreeMap::new(); n];
    for &(u, v) in edges {
        *adj[u as usize].entry(v).or_insert(0) += 1;
        *adj[v as usize].entry(u).or_insert(0) += 1;
    }
    adj
}

/// Smallest set containing `A` closed under adding any vertex with two or
/// more neighbors inside, found by rescanning in `order` until no vertex is
/// added. Returns the sorted members.
pub fn compute_s_oracle(
    view: &DigraphView,
    d: usize,
    counting: NeighborCounting,
    order: ScanOrder,
) -> Vec<BinId> {
    let n = view.vertex_count();
    let adj = adjacency(n, view.graph.edges());
    let mut set: BTreeSet<BinId> = (0..n as BinId)
        .filter(|&v| view.in_degree_d[v as usize] as i64 >= d as i64 - 1)
        .collect();
    let scan: Vec<BinId> = match order {
        ScanOrder::Ascending => (0..n as BinId).collect(),
        ScanOrder::Descending => (0..n as BinId).rev().collect(),
    };
    loop {
        let mut changed = false;
        for &v in &scan {
            if set.contains(&v) {
                continue;
            }
            let inside: usize = adj[v as usize]
                .iter()
                .filter(|(w, _)| set.contains(w))
                .map(|(_, &mult)| match counting {
                    NeighborCounting::Distinct => 1,
                    NeighborCounting::Multiplicity => mult,
                })
                .sum();
            if inside >= 2 {
                set.insert(v);
                changed = true;
            }
        }
        if !changed {
            return set.into_iter().collect();
        }
    }
}

/// Runs the fixed-point scan in both orders; `None` if they disagree.
pub fn compute_s_oracle_checked(
    view: &DigraphView,
    d: usize,
    counting: NeighborCounting,
) -> Option<Vec<BinId>> {
    let up = compute_s_oracle(view, d, counting, ScanOrder::Ascending);
    let down = compute_s_oracle(view, d, counting, ScanOrder::Descending);
    (up == down).then_some(up)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleComponent {
    pub vertices: Vec<BinId>,
    pub edge_count: usize,
    pub ell: usize,
    pub cycle_count: usize,
}

/// Components of the multigraph on `members` induced by `edges`, via DFS,
/// ordered by smallest vertex.
pub fn census_oracle(
    n: usize,
    edges: &[(BinId, BinId)],
    members: &BTreeSet<BinId>,
    base: &BTreeSet<BinId>,
) -> Vec<OracleComponent> {
    let induced: Vec<(BinId, BinId)> = edges
        .iter()
        .copied()
        .filter(|(u, v)| members.contains(u) && members.contains(v))
        .collect();
    let adj = adjacency(n, &induced);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &root in members {
        if !seen.insert(root) {
            continue;
        }
        let mut stack = vec![root];
        let mut vertices = Vec::new();
        while let Some(v) = stack.pop() {
            vertices.push(v);
            for &w in adj[v as usize].keys() {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        vertices.sort_unstable();
        let degree_sum: usize = vertices
            .iter()
            .map(|&v| adj[v as usize].values().sum::<usize>())
            .sum();
        let edge_count = degree_sum / 2;
        let ell = vertices.iter().filter(|v| base.contains(v)).count();
        let cycle_count = edge_count + 1 - vertices.len();
        out.push(OracleComponent {
            vertices,
            edge_count,
            ell,
            cycle_count,
        });
    }
    out
}
