//! Saturated-set closure and component census.
//!
//! `A` is every vertex whose in-degree in `D` is at least `d - 1`. The
//! closure then adds, layer by layer, every outside vertex with at least
//! two neighbors already inside. The result `S` contains every saturated
//! bin; its induced multigraph `G_S` is censused component by component.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{DigraphView, Multigraph};
use crate::table::Table;
use crate::BinId;

pub mod oracle;

/// How "at least two neighbors" is counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighborCounting {
    /// Distinct neighboring vertices.
    #[default]
    Distinct,
    /// Edges, so a doubled edge to one member counts twice.
    Multiplicity,
}

/// `A`, the closure layers `T_1, T_2, ...`, and their union `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturatedSet {
    base: Vec<BinId>,
    layers: Vec<Vec<BinId>>,
    in_set: Vec<bool>,
    in_base: Vec<bool>,
}

impl SaturatedSet {
    /// Assembles a set from explicit parts. Vertices must be `< n` and the
    /// parts disjoint.
    pub fn from_parts(n: usize, mut base: Vec<BinId>, layers: Vec<Vec<BinId>>) -> Self {
        base.sort_unstable();
        let mut in_set = vec![false; n];
        let mut in_base = vec![false; n];
        for &v in &base {
            in_base[v as usize] = true;
            in_set[v as usize] = true;
        }
        for &v in layers.iter().flatten() {
            debug_assert!(!in_set[v as usize], "vertex {v} listed twice");
            in_set[v as usize] = true;
        }
        SaturatedSet {
            base,
            layers,
            in_set,
            in_base,
        }
    }

    pub fn base(&self) -> &[BinId] {
        &self.base
    }

    pub fn layers(&self) -> &[Vec<BinId>] {
        &self.layers
    }

    pub fn contains(&self, v: BinId) -> bool {
        self.in_set[v as usize]
    }

    pub fn in_base(&self, v: BinId) -> bool {
        self.in_base[v as usize]
    }

    pub fn membership(&self) -> &[bool] {
        &self.in_set
    }

    pub fn base_membership(&self) -> &[bool] {
        &self.in_base
    }

    pub fn len(&self) -> usize {
        self.base.len() + self.layers.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted members of `S`.
    pub fn members(&self) -> Vec<BinId> {
        (0..self.in_set.len() as BinId)
            .filter(|&v| self.in_set[v as usize])
            .collect()
    }

    /// Removes `v` from `S`; only meant for negative controls.
    pub fn without(&self, v: BinId) -> Self {
        let base = self.base.iter().copied().filter(|&u| u != v).collect();
        let layers = self
            .layers
            .iter()
            .map(|l| l.iter().copied().filter(|&u| u != v).collect())
            .collect();
        Self::from_parts(self.in_set.len(), base, layers)
    }
}

/// Vertices with in-degree at least `d - 1` in `D`, sorted.
pub fn compute_a(view: &DigraphView, d: usize) -> Vec<BinId> {
    view.in_degree_d
        .iter()
        .enumerate()
        .filter(|&(_, &deg)| deg as usize + 1 >= d)
        .map(|(v, _)| v as BinId)
        .collect()
}

/// Layered closure of `A`. Layer `T_{k+1}` holds the outside vertices with
/// at least two neighbors in `A ∪ T_1 ∪ … ∪ T_k`; the loop stops at the
/// first empty layer.
pub fn compute_s(view: &DigraphView, d: usize, counting: NeighborCounting) -> SaturatedSet {
    let graph = &view.graph;
    let n = graph.vertex_count();
    let base = compute_a(view, d);
    let mut in_set = vec![false; n];
    for &v in &base {
        in_set[v as usize] = true;
    }
    // Number of members adjacent to each outside vertex.
    let mut hits = vec![0u32; n];
    let mut layers = Vec::new();
    let mut frontier = base.clone();
    loop {
        let mut next = Vec::new();
        for &u in &frontier {
            let mut credit = |w: BinId| {
                if !in_set[w as usize] {
                    hits[w as usize] += 1;
                    if hits[w as usize] == 2 {
                        next.push(w);
                    }
                }
            };
            match counting {
                NeighborCounting::Distinct => graph.distinct_neighbors(u).for_each(&mut credit),
                NeighborCounting::Multiplicity => {
                    graph.neighbors(u).iter().copied().for_each(&mut credit)
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        for &w in &next {
            in_set[w as usize] = true;
        }
        layers.push(next.clone());
        frontier = next;
    }
    SaturatedSet::from_parts(n, base, layers)
}

/// A connected component of `G_S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub id: usize,
    #[serde(skip)]
    pub vertices: Vec<BinId>,
    /// `k`
    pub size: usize,
    /// Edges inside the component, counted with multiplicity.
    pub edge_count: usize,
    /// Members of the component that lie in `A`.
    pub ell: usize,
    /// `edge_count - size + 1`
    pub cycle_count: usize,
    pub is_tree: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusReport {
    pub components: Vec<Component>,
    pub size_histogram: BTreeMap<usize, usize>,
    pub max_size: usize,
    pub multi_cycle_count: usize,
    pub singleton_count: usize,
    #[serde(skip)]
    component_of: Vec<Option<usize>>,
}

impl CensusReport {
    /// Index into `components` of the component holding `v`, if `v ∈ S`.
    pub fn component_of(&self, v: BinId) -> Option<usize> {
        self.component_of[v as usize]
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }
}

struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Components of the multigraph induced on `s`, numbered in order of their
/// smallest vertex.
pub fn census(graph: &Multigraph, s: &SaturatedSet) -> CensusReport {
    let n = graph.vertex_count();
    let inside = |v: BinId| s.contains(v);
    let mut sets = DisjointSets::new(n);
    for &(u, v) in graph.edges() {
        if inside(u) && inside(v) {
            sets.union(u, v);
        }
    }

    let mut component_of = vec![None; n];
    let mut root_index: Vec<Option<usize>> = vec![None; n];
    let mut components: Vec<Component> = Vec::new();
    for v in 0..n as BinId {
        if !inside(v) {
            continue;
        }
        let root = sets.find(v) as usize;
        let idx = *root_index[root].get_or_insert_with(|| {
            components.push(Component {
                id: components.len(),
                vertices: Vec::new(),
                size: 0,
                edge_count: 0,
                ell: 0,
                cycle_count: 0,
                is_tree: true,
            });
            components.len() - 1
        });
        component_of[v as usize] = Some(idx);
        let c = &mut components[idx];
        c.vertices.push(v);
        c.size += 1;
        if s.in_base(v) {
            c.ell += 1;
        }
    }
    for &(u, v) in graph.edges() {
        if inside(u) && inside(v) {
            let idx = component_of[u as usize].expect("member has a component");
            components[idx].edge_count += 1;
        }
    }

    let mut size_histogram = BTreeMap::new();
    let mut multi_cycle_count = 0;
    let mut singleton_count = 0;
    let mut max_size = 0;
    for c in &mut components {
        c.cycle_count = c.edge_count + 1 - c.size;
        c.is_tree = c.cycle_count == 0;
        *size_histogram.entry(c.size).or_insert(0) += 1;
        max_size = max_size.max(c.size);
        if c.cycle_count >= 2 {
            multi_cycle_count += 1;
        }
        if c.size == 1 {
            singleton_count += 1;
        }
    }
    CensusReport {
        components,
        size_histogram,
        max_size,
        multi_cycle_count,
        singleton_count,
        component_of,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetVerdict {
    pub holds: bool,
    /// Saturated bins missing from `S`.
    pub violations: Vec<BinId>,
}

/// Checks that every saturated bin of `table` lies in `s`.
pub fn verify_saturated_subset(table: &Table, s: &SaturatedSet) -> SubsetVerdict {
    let violations: Vec<BinId> = table
        .saturated_bins()
        .into_iter()
        .filter(|&v| !s.contains(v))
        .collect();
    SubsetVerdict {
        holds: violations.is_empty(),
        violations,
    }
}

/// Components that break the expected shape. These are flags, not errors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StructureFlags {
    /// Components with `k >= 2` and `ell < (k + 2) / 2`.
    pub ell_bound: Vec<usize>,
    /// Components with two or more independent cycles.
    pub multi_cycle: Vec<usize>,
    /// Size-one components, which the `ell` check skips.
    pub singletons: usize,
}

impl StructureFlags {
    pub fn is_clean(&self) -> bool {
        self.ell_bound.is_empty() && self.multi_cycle.is_empty()
    }
}

pub fn verify_component_structure(report: &CensusReport) -> StructureFlags {
    let mut flags = StructureFlags::default();
    for c in &report.components {
        if c.size == 1 {
            flags.singletons += 1;
        } else if 2 * c.ell < c.size + 2 {
            flags.ell_bound.push(c.id);
        }
        if c.cycle_count >= 2 {
            flags.multi_cycle.push(c.id);
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Item, ScriptedChoices, TableConfig};

    fn set(n: usize, members: &[BinId]) -> SaturatedSet {
        SaturatedSet::from_parts(n, members.to_vec(), Vec::new())
    }

    #[test]
    fn a_with_unit_capacity_is_everything() {
        let view = DigraphView::from_oriented_edges(4, &[(0, 1)]);
        assert_eq!(compute_a(&view, 1), vec![0, 1, 2, 3]);
    }

    #[test]
    fn a_on_empty_graph() {
        let view = DigraphView::from_oriented_edges(5, &[]);
        assert!(compute_a(&view, 2).is_empty());
        let s = compute_s(&view, 2, NeighborCounting::Distinct);
        assert!(s.is_empty());
        assert!(s.layers().is_empty());
    }

    #[test]
    fn a_by_tally() {
        // In-degrees (2, 0, 0, 1) on vertices 1..4.
        let view = DigraphView::from_oriented_edges(4, &[(1, 0), (2, 0), (2, 3)]);
        assert_eq!(compute_a(&view, 2), vec![0, 3]);
    }

    #[test]
    fn closure_on_four_vertices() {
        // Edges 2→1, 3→1, 3→4 with d = 2: A = {1, 4}, T_1 = {3}.
        let view = DigraphView::from_oriented_edges(4, &[(1, 0), (2, 0), (2, 3)]);
        let s = compute_s(&view, 2, NeighborCounting::Distinct);
        assert_eq!(s.base(), &[0, 3]);
        assert_eq!(s.layers(), &[vec![2]]);
        assert_eq!(s.members(), vec![0, 2, 3]);
        assert!(!s.contains(1));
    }

    #[test]
    fn parallel_edges_count_once_unless_asked() {
        // Vertex 2 is joined to the only member 0 by two parallel edges.
        let view = DigraphView::from_oriented_edges(3, &[(1, 0), (2, 0), (0, 2)]);
        assert_eq!(compute_a(&view, 3), vec![0]);
        let distinct = compute_s(&view, 3, NeighborCounting::Distinct);
        assert_eq!(distinct.members(), vec![0]);
        let multi = compute_s(&view, 3, NeighborCounting::Multiplicity);
        assert_eq!(multi.members(), vec![0, 2]);
    }

    #[test]
    fn layers_grow_one_at_a_time() {
        // Base {0, 1}; 2 sees both; 3 sees 1 and 2; 4 sees 2 and 3.
        let arcs = [
            (2, 0),
            (3, 0),
            (2, 1),
            (3, 1),
            (1, 3),
            (2, 3),
            (4, 2),
            (4, 3),
        ];
        let mut view = DigraphView::from_oriented_edges(5, &arcs);
        view.in_degree_d = vec![5, 5, 0, 0, 0];
        let s = compute_s(&view, 5, NeighborCounting::Distinct);
        assert_eq!(s.base(), &[0, 1]);
        assert_eq!(s.layers(), &[vec![2, 3], vec![4]]);
    }

    #[test]
    fn census_of_path() {
        let g = Multigraph::from_edges(4, vec![(0, 1), (1, 2), (2, 3)]);
        let r = census(&g, &set(4, &[0, 1, 2]));
        assert_eq!(r.components.len(), 1);
        let c = &r.components[0];
        assert_eq!(
            (c.size, c.edge_count, c.cycle_count, c.is_tree),
            (3, 2, 0, true)
        );
        assert_eq!(c.vertices, vec![0, 1, 2]);
        assert_eq!(r.component_of(3), None);
    }

    #[test]
    fn census_of_double_edge() {
        let g = Multigraph::from_edges(3, vec![(0, 1), (1, 0), (1, 2)]);
        let r = census(&g, &set(3, &[0, 1]));
        let c = &r.components[0];
        assert_eq!((c.size, c.edge_count, c.cycle_count), (2, 2, 1));
        assert!(!c.is_tree);
    }

    #[test]
    fn census_of_nothing() {
        let g = Multigraph::from_edges(3, vec![(0, 1)]);
        let r = census(&g, &set(3, &[]));
        assert!(r.components.is_empty());
        assert!(r.size_histogram.is_empty());
        assert_eq!(r.max_size, 0);
    }

    #[test]
    fn census_histogram_and_ell() {
        let g = Multigraph::from_edges(6, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 0), (4, 5)]);
        let s = SaturatedSet::from_parts(6, vec![0, 1, 4], vec![vec![2, 3]]);
        let r = census(&g, &s);
        assert_eq!(r.components.len(), 2);
        assert_eq!(r.size_histogram, BTreeMap::from([(1, 1), (4, 1)]));
        assert_eq!(r.size_histogram.values().sum::<usize>(), r.components.len());
        let big = &r.components[0];
        assert_eq!(
            (big.size, big.edge_count, big.ell, big.cycle_count),
            (4, 5, 2, 2)
        );
        assert_eq!(r.multi_cycle_count, 1);
        assert_eq!(r.singleton_count, 1);
        assert_eq!(r.max_size, 4);
    }

    #[test]
    fn ell_and_cycle_flags() {
        let mk = |id, size, ell, cycle_count| Component {
            id,
            vertices: Vec::new(),
            size,
            edge_count: size - 1 + cycle_count,
            ell,
            cycle_count,
            is_tree: cycle_count == 0,
        };
        let report = CensusReport {
            components: vec![
                mk(0, 4, 3, 0),
                mk(1, 4, 2, 0),
                mk(2, 1, 1, 0),
                mk(3, 5, 5, 2),
            ],
            size_histogram: BTreeMap::new(),
            max_size: 5,
            multi_cycle_count: 1,
            singleton_count: 1,
            component_of: Vec::new(),
        };
        let flags = verify_component_structure(&report);
        assert_eq!(flags.ell_bound, vec![1]);
        assert_eq!(flags.multi_cycle, vec![3]);
        assert_eq!(flags.singletons, 1);
        assert!(!flags.is_clean());
    }

    #[test]
    fn saturated_subset_checks() {
        let empty = Table::new(TableConfig::new(4, 2, 0)).unwrap();
        let view = empty.graph().view();
        let s = compute_s(&view, 2, NeighborCounting::Distinct);
        assert!(verify_saturated_subset(&empty, &s).holds);

        let mut table = Table::new(TableConfig::new(3, 1, 7)).unwrap();
        let mut script = ScriptedChoices::new().d_heads([0, 1, 0]).walk_starts([0]);
        for it in [Item::new(1, 0, 1), Item::new(2, 1, 2), Item::new(3, 0, 1)] {
            table.insert_with(it, &mut script).unwrap();
        }
        let s = compute_s(&table.graph().view(), 1, NeighborCounting::Distinct);
        assert_eq!(s.members(), vec![0, 1, 2]);
        assert!(verify_saturated_subset(&table, &s).holds);

        let broken = s.without(2);
        let verdict = verify_saturated_subset(&table, &broken);
        assert!(!verdict.holds);
        assert_eq!(verdict.violations, vec![2]);
    }
}
