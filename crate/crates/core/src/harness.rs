//! Seeded end-to-end experiments.
//!
//! A run builds one table per seed, inserts `m` items with generated
//! pairs, records every walk length, analyses the final graph, checks all
//! deterministic invariants, and finishes with a probe-walk study. Seeds
//! run in parallel; results are merged in seed-list order and aggregates
//! are built from integer totals so they do not depend on that order.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds;
use crate::graph::Orientation;
use crate::structure::oracle::{census_oracle, compute_s_oracle_checked};
use crate::structure::{
    census, compute_s, verify_component_structure, verify_saturated_subset, CensusReport,
    Component, NeighborCounting, SaturatedSet, StructureFlags, SubsetVerdict,
};
use crate::table::{BothFreePolicy, Item, Table, TableConfig, TableError};
use crate::{BinId, ItemId};

/// Largest `n` for which runs also cross-check against the slow oracles.
pub const DEFAULT_ORACLE_LIMIT: usize = 1000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("seed {seed}: {source}")]
    Table {
        seed: u64,
        #[source]
        source: TableError,
    },
}

/// How many items each run inserts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Load {
    /// `m = floor((1 - ε) d n)`.
    Epsilon(f64),
    Items(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub load: Load,
    pub seeds: Vec<u64>,
    pub probes_per_run: usize,
    pub m_const: f64,
    /// `None` uses the table default of `64 n d`.
    pub max_walk_steps: Option<u64>,
    pub policy: BothFreePolicy,
    pub counting: NeighborCounting,
    pub oracle_limit: usize,
}

impl ExperimentConfig {
    pub fn new(n: usize, d: usize, load: Load, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            n,
            d,
            load,
            seeds,
            probes_per_run: 0,
            m_const: bounds::DEFAULT_M,
            max_walk_steps: None,
            policy: BothFreePolicy::FollowD,
            counting: NeighborCounting::Distinct,
            oracle_limit: DEFAULT_ORACLE_LIMIT,
        }
    }

    pub fn with_probes(mut self, probes: usize) -> Self {
        self.probes_per_run = probes;
        self
    }

    pub fn item_count(&self) -> usize {
        match self.load {
            // The nudge keeps e.g. 0.8 * 800000 from flooring to 639999.
            Load::Epsilon(eps) => ((1.0 - eps) * (self.d * self.n) as f64 + 1e-9).floor() as usize,
            Load::Items(m) => m,
        }
    }

    /// The given `ε`, or `1 - m / (d n)` for an explicit item count.
    pub fn effective_epsilon(&self) -> f64 {
        match self.load {
            Load::Epsilon(eps) => eps,
            Load::Items(m) => 1.0 - m as f64 / (self.d * self.n) as f64,
        }
    }

    pub fn table_config(&self, seed: u64) -> TableConfig {
        let mut cfg = TableConfig::new(self.n, self.d, seed).with_policy(self.policy);
        if let Some(cap) = self.max_walk_steps {
            cfg = cfg.with_max_walk_steps(cap);
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.d < 1 {
            return bad("d must be at least 1".into());
        }
        if let Load::Epsilon(eps) = self.load {
            if !(eps > 0.0 && eps < 1.0) {
                return bad(format!("epsilon must lie in (0, 1), got {eps}"));
            }
        }
        let m = self.item_count();
        if m + 1 > self.n * self.d {
            return bad(format!(
                "m = {m} leaves no free slot in {} bins of capacity {}",
                self.n, self.d
            ));
        }
        if m > ItemId::MAX as usize {
            return bad(format!("m = {m} too large"));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.m_const.is_nan() || self.m_const <= 0.0 {
            return bad(format!("M must be positive, got {}", self.m_const));
        }
        if self.max_walk_steps == Some(0) {
            return bad("max walk steps must be at least 1".into());
        }
        Ok(())
    }
}

/// Walk-length statistics over all insertions of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WalkStats {
    pub insertions: u64,
    pub total_steps: u64,
    pub max_steps: u64,
    pub walks: u64,
    pub both_saturated_arrivals: u64,
    pub histogram: BTreeMap<u64, u64>,
    pub mean: f64,
    pub conditional_mean: f64,
    pub walk_fraction: f64,
}

impl WalkStats {
    fn record(&mut self, steps: u64, both_saturated: bool) {
        self.insertions += 1;
        self.total_steps += steps;
        self.max_steps = self.max_steps.max(steps);
        if steps > 0 {
            self.walks += 1;
        }
        if both_saturated {
            self.both_saturated_arrivals += 1;
        }
        *self.histogram.entry(steps).or_insert(0) += 1;
    }

    fn merge(&mut self, other: &WalkStats) {
        self.insertions += other.insertions;
        self.total_steps += other.total_steps;
        self.max_steps = self.max_steps.max(other.max_steps);
        self.walks += other.walks;
        self.both_saturated_arrivals += other.both_saturated_arrivals;
        for (&k, &v) in &other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
    }

    fn finish(&mut self) {
        self.mean = ratio(self.total_steps, self.insertions);
        self.conditional_mean = ratio(self.total_steps, self.walks);
        self.walk_fraction = ratio(self.walks, self.insertions);
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Checks on the final table and its twin digraphs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub occupancy: bool,
    pub conservation: bool,
    pub residency: bool,
    pub in_degree_matches_load: bool,
    pub degree_agreement: bool,
    pub flip_audit: bool,
    pub walk_trigger_consistency: bool,
    pub saturated_in_s: SubsetVerdict,
    /// `None` when the instance is above the oracle size limit.
    pub s_oracle_match: Option<bool>,
    pub census_oracle_match: Option<bool>,
    pub tree_walk_bound: bool,
}

impl Verdicts {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                out.push(what.to_string());
            }
        };
        check(self.occupancy, "occupancy: a bin holds more than d items");
        check(
            self.conservation,
            "conservation: total load differs from insertions",
        );
        check(
            self.residency,
            "residency: an item is not in exactly one of its choices",
        );
        check(
            self.in_degree_matches_load,
            "in-degree in D' differs from load",
        );
        check(
            self.degree_agreement,
            "undirected degrees differ between D and D'",
        );
        check(
            self.flip_audit,
            "flip audit: a flip left an unsaturated bin",
        );
        check(
            self.walk_trigger_consistency,
            "walk count differs from doubly saturated arrivals",
        );
        check(self.saturated_in_s.holds, "saturated bin outside S");
        check(
            self.s_oracle_match != Some(false),
            "closure differs from oracle",
        );
        check(
            self.census_oracle_match != Some(false),
            "census differs from oracle",
        );
        check(
            self.tree_walk_bound,
            "walk stayed in a tree component for more than k steps",
        );
        out
    }

    pub fn all_hold(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Occupancy, conservation, residency and degree checks on `table`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableChecks {
    pub occupancy: bool,
    pub conservation: bool,
    pub residency: bool,
    pub in_degree_matches_load: bool,
    pub degree_agreement: bool,
    pub flip_audit: bool,
}

impl TableChecks {
    pub fn all_hold(&self) -> bool {
        self.occupancy
            && self.conservation
            && self.residency
            && self.in_degree_matches_load
            && self.degree_agreement
            && self.flip_audit
    }
}

pub fn check_table(table: &Table) -> TableChecks {
    let d = table.capacity();
    let graph = table.graph();
    let loads = table.loads();
    let occupancy = loads.iter().all(|&l| l as usize <= d);
    let total: usize = loads.iter().map(|&l| l as usize).sum();
    let conservation = total == table.inserted_count() && total == graph.edge_count();

    let mut seen: Vec<bool> = Vec::new();
    let mut residency = true;
    for bin in 0..table.bin_count() as BinId {
        for &x in table.residents(bin) {
            let idx = x as usize;
            if idx >= seen.len() {
                seen.resize(idx + 1, false);
            }
            let placed_here = graph.edge(x).is_some_and(|e| {
                e.head_dprime == bin && (e.endpoints.0 == bin || e.endpoints.1 == bin)
            });
            if seen[idx] || !placed_here {
                residency = false;
            }
            seen[idx] = true;
        }
    }
    residency &= graph
        .edges()
        .all(|e| seen.get(e.item_id as usize) == Some(&true));

    let in_degree_matches_load = graph
        .in_degrees(Orientation::DPrime)
        .iter()
        .zip(loads)
        .all(|(a, b)| a == b);
    let degree_agreement =
        graph.undirected_degrees(Orientation::D) == graph.undirected_degrees(Orientation::DPrime);
    let flips = graph.flip_counters();
    let flip_audit = flips.total == flips.old_head_saturated
        && graph
            .flip_log()
            .is_none_or(|log| log.iter().all(|f| f.old_head_saturated));
    TableChecks {
        occupancy,
        conservation,
        residency,
        in_degree_matches_load,
        degree_agreement,
        flip_audit,
    }
}

/// Compares the layered closure and union-find census with the oracles.
pub fn oracle_agreement(
    table: &Table,
    s: &SaturatedSet,
    report: &CensusReport,
    counting: NeighborCounting,
) -> (bool, bool) {
    let view = table.graph().view();
    let s_match = compute_s_oracle_checked(&view, table.capacity(), counting)
        .is_some_and(|oracle| oracle == s.members());
    let members: BTreeSet<BinId> = s.members().into_iter().collect();
    let base: BTreeSet<BinId> = s.base().iter().copied().collect();
    let oracle = census_oracle(view.vertex_count(), view.graph.edges(), &members, &base);
    let census_match = oracle.len() == report.components.len()
        && oracle.iter().zip(&report.components).all(|(o, c)| {
            o.vertices == c.vertices
                && o.edge_count == c.edge_count
                && o.ell == c.ell
                && o.cycle_count == c.cycle_count
        });
    (s_match, census_match)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProbeBucket {
    /// Component size `k`.
    pub k: usize,
    pub samples: u64,
    pub tree_samples: u64,
    pub capped: u64,
    pub total_steps: u64,
    pub total_within: u64,
    pub max_within: u64,
    pub mean_steps: f64,
    pub mean_within: f64,
    /// `2k`
    pub walk_bound: f64,
}

impl ProbeBucket {
    fn merge(&mut self, other: &ProbeBucket) {
        self.samples += other.samples;
        self.tree_samples += other.tree_samples;
        self.capped += other.capped;
        self.total_steps += other.total_steps;
        self.total_within += other.total_within;
        self.max_within = self.max_within.max(other.max_within);
    }

    fn finish(&mut self) {
        self.mean_steps = ratio(self.total_steps, self.samples);
        self.mean_within = ratio(self.total_within, self.samples);
        self.walk_bound = 2.0 * self.k as f64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeWalkViolation {
    pub start: BinId,
    pub k: usize,
    pub within: u64,
}

/// Walk cost of the next insertion estimated two ways.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InsertionCost {
    /// Random pairs drawn; a walk is simulated when both are saturated.
    pub pairs: u64,
    pub walks: u64,
    pub total_steps: u64,
    pub sampled_mean: f64,
    /// `2 (|S| / n) Σ_C k_C² / n`, the component accounting over `G_S`.
    pub component_accounting: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProbeStudy {
    pub buckets: BTreeMap<usize, ProbeBucket>,
    pub tree_violations: Vec<TreeWalkViolation>,
    pub insertion_cost: InsertionCost,
}

/// Probe walks from `samples` uniformly chosen saturated bins, bucketed by
/// the size of the start's component in `G_S`.
///
/// Each walk also counts its within-component steps: the steps taken
/// before first standing outside the start component, the exit step
/// included. Starts in tree components must stay within `k` such steps.
pub fn probe_study<R: Rng + ?Sized>(
    table: &Table,
    s: &SaturatedSet,
    report: &CensusReport,
    samples: usize,
    rng: &mut R,
) -> ProbeStudy {
    let mut study = ProbeStudy::default();
    let saturated = table.saturated_bins();
    if !saturated.is_empty() {
        for _ in 0..samples {
            let start = saturated[rng.gen_range(0..saturated.len())];
            // A saturated bin outside S is reported by the subset verdict.
            let Some(cid) = report.component_of(start) else {
                continue;
            };
            let comp: &Component = &report.components[cid];
            let mut within = 0u64;
            let mut inside = true;
            let mut at_start = true;
            let walk = table
                .probe_walk_visit(start, rng, |bin| {
                    if at_start {
                        at_start = false;
                    } else if inside {
                        within += 1;
                        inside = report.component_of(bin) == Some(cid);
                    }
                })
                .expect("start bin in range");
            let bucket = study
                .buckets
                .entry(comp.size)
                .or_insert_with(|| ProbeBucket {
                    k: comp.size,
                    ..ProbeBucket::default()
                });
            bucket.samples += 1;
            bucket.total_steps += walk.steps;
            bucket.total_within += within;
            bucket.max_within = bucket.max_within.max(within);
            if walk.capped {
                bucket.capped += 1;
            }
            if comp.is_tree {
                bucket.tree_samples += 1;
                if within > comp.size as u64 {
                    study.tree_violations.push(TreeWalkViolation {
                        start,
                        k: comp.size,
                        within,
                    });
                }
            }
        }
    }
    for bucket in study.buckets.values_mut() {
        bucket.finish();
    }
    study.insertion_cost = insertion_cost(table, s, report, samples, rng);
    study
}

fn insertion_cost<R: Rng + ?Sized>(
    table: &Table,
    s: &SaturatedSet,
    report: &CensusReport,
    samples: usize,
    rng: &mut R,
) -> InsertionCost {
    let n = table.bin_count();
    let mut cost = InsertionCost::default();
    for _ in 0..samples {
        let x = rng.gen_range(0..n as BinId);
        let y = loop {
            let y = rng.gen_range(0..n as BinId);
            if y != x {
                break y;
            }
        };
        cost.pairs += 1;
        if table.is_saturated(x) && table.is_saturated(y) {
            let start = if rng.gen::<bool>() { x } else { y };
            let walk = table.probe_walk(start, rng).expect("bin in range");
            cost.walks += 1;
            cost.total_steps += walk.steps;
        }
    }
    cost.sampled_mean = ratio(cost.total_steps, cost.pairs);
    let squares: f64 = report
        .components
        .iter()
        .map(|c| (c.size * c.size) as f64)
        .sum();
    cost.component_accounting = 2.0 * (s.len() as f64 / n as f64) * squares / n as f64;
    cost
}

/// Observed component count for one size next to its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentBoundRow {
    pub k: usize,
    pub observed: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusSummary {
    pub a_size: usize,
    pub s_size: usize,
    pub layer_count: usize,
    pub component_count: usize,
    pub max_size: usize,
    pub multi_cycle_count: usize,
    pub singleton_count: usize,
    pub size_histogram: BTreeMap<usize, usize>,
    pub bound_rows: Vec<ComponentBoundRow>,
    pub flags: StructureFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundComparison {
    pub epsilon: f64,
    pub epsilon_threshold: f64,
    pub in_theorem_regime: bool,
    pub theorem_bound: f64,
    pub k0_bound: f64,
    pub mean_exceeds_theorem_bound: bool,
    pub max_component_exceeds_k0: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub walks: WalkStats,
    pub census: CensusSummary,
    pub components: Vec<Component>,
    pub verdicts: Verdicts,
    pub probes: ProbeStudy,
    pub bounds: BoundComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub items_per_seed: usize,
    pub max_walk_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub seeds: usize,
    pub walks: WalkStats,
    pub max_component_size: usize,
    pub multi_cycle_components: usize,
    pub ell_bound_flags: usize,
    pub probe_buckets: BTreeMap<usize, ProbeBucket>,
    pub tree_walk_violations: usize,
    pub insertion_cost_sampled_mean: f64,
    pub hard_verdicts_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub manifest: Manifest,
    pub per_seed: Vec<SeedResult>,
    pub aggregate: Aggregate,
    /// Deterministic invariant failures, as `seed N: message`.
    pub failures: Vec<String>,
    /// Statistical flags and bound exceedances.
    pub warnings: Vec<String>,
}

/// Inserts `m` generated items. With `stop_on_cap` a walk-cap error ends
/// the run early and is returned alongside the stats; otherwise it is
/// propagated.
fn drive(
    table: &mut Table,
    m: usize,
    stop_on_cap: bool,
) -> Result<(WalkStats, Option<TableError>), TableError> {
    let mut stats = WalkStats::default();
    for id in 0..m {
        let (p, q) = table.generate_pair();
        let both_saturated = table.is_saturated(p) && table.is_saturated(q);
        match table.insert(Item::new(id as ItemId, p, q)) {
            Ok(outcome) => stats.record(outcome.walk_steps, both_saturated),
            Err(e @ TableError::WalkCapExceeded { .. }) if stop_on_cap => {
                stats.finish();
                return Ok((stats, Some(e)));
            }
            Err(e) => return Err(e),
        }
    }
    stats.finish();
    Ok((stats, None))
}

struct Analysis {
    s: SaturatedSet,
    report: CensusReport,
    verdicts: Verdicts,
}

fn analyse(
    table: &Table,
    stats: &WalkStats,
    counting: NeighborCounting,
    oracle_limit: usize,
) -> Analysis {
    let view = table.graph().view();
    let s = compute_s(&view, table.capacity(), counting);
    let report = census(&view.graph, &s);
    let checks = check_table(table);
    let (s_oracle_match, census_oracle_match) = if table.bin_count() <= oracle_limit {
        let (a, b) = oracle_agreement(table, &s, &report, counting);
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    let verdicts = Verdicts {
        occupancy: checks.occupancy,
        conservation: checks.conservation,
        residency: checks.residency,
        in_degree_matches_load: checks.in_degree_matches_load,
        degree_agreement: checks.degree_agreement,
        flip_audit: checks.flip_audit,
        walk_trigger_consistency: stats.walks == stats.both_saturated_arrivals,
        saturated_in_s: verify_saturated_subset(table, &s),
        s_oracle_match,
        census_oracle_match,
        tree_walk_bound: true,
    };
    Analysis {
        s,
        report,
        verdicts,
    }
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedResult, HarnessError> {
    let wrap = |source| HarnessError::Table { seed, source };
    let mut table = Table::new(config.table_config(seed)).map_err(wrap)?;
    let (walks, _) = drive(&mut table, config.item_count(), false).map_err(wrap)?;
    let Analysis {
        s,
        report,
        mut verdicts,
    } = analyse(&table, &walks, config.counting, config.oracle_limit);

    let mut rng = table.probe_rng();
    let probes = probe_study(&table, &s, &report, config.probes_per_run, &mut rng);
    verdicts.tree_walk_bound = probes.tree_violations.is_empty();

    let eps = config.effective_epsilon();
    let (d, n, mc) = (config.d, config.n, config.m_const);
    let bound_rows = report
        .size_histogram
        .iter()
        .map(|(&k, &observed)| ComponentBoundRow {
            k,
            observed,
            bound: bounds::component_count_bound(n, k, eps, d, mc),
        })
        .collect();
    let theorem_bound = bounds::theorem_bound(eps, mc);
    let k0 = bounds::k0_bound(n, eps, d, mc);
    let census_summary = CensusSummary {
        a_size: s.base().len(),
        s_size: s.len(),
        layer_count: s.layers().len(),
        component_count: report.component_count(),
        max_size: report.max_size,
        multi_cycle_count: report.multi_cycle_count,
        singleton_count: report.singleton_count,
        size_histogram: report.size_histogram.clone(),
        bound_rows,
        flags: verify_component_structure(&report),
    };
    Ok(SeedResult {
        seed,
        bounds: BoundComparison {
            epsilon: eps,
            epsilon_threshold: bounds::epsilon_threshold(d, mc),
            in_theorem_regime: bounds::in_theorem_regime(eps, d, mc),
            theorem_bound,
            k0_bound: k0,
            mean_exceeds_theorem_bound: walks.mean > theorem_bound,
            max_component_exceeds_k0: report.max_size as f64 > k0.ceil().max(1.0),
        },
        walks,
        census: census_summary,
        components: report.components,
        verdicts,
        probes,
    })
}

fn warnings_for(r: &SeedResult) -> Vec<String> {
    let mut out = Vec::new();
    let seed = r.seed;
    let flags = &r.census.flags;
    if !flags.multi_cycle.is_empty() {
        out.push(format!(
            "seed {seed}: {} component(s) with two or more cycles",
            flags.multi_cycle.len()
        ));
    }
    if !flags.ell_bound.is_empty() {
        out.push(format!(
            "seed {seed}: {} component(s) with ell < (k + 2) / 2",
            flags.ell_bound.len()
        ));
    }
    if r.bounds.mean_exceeds_theorem_bound {
        out.push(format!(
            "seed {seed}: mean walk length {} exceeds 4M/eps^2 = {}",
            r.walks.mean, r.bounds.theorem_bound
        ));
    }
    if r.bounds.in_theorem_regime && r.bounds.max_component_exceeds_k0 {
        out.push(format!(
            "seed {seed}: largest component {} exceeds k0 = {}",
            r.census.max_size, r.bounds.k0_bound
        ));
    }
    for b in r.probes.buckets.values() {
        if b.capped > 0 {
            out.push(format!(
                "seed {seed}: {} probe walk(s) hit the cap",
                b.capped
            ));
        }
    }
    out
}

fn aggregate(per_seed: &[SeedResult]) -> Aggregate {
    let mut walks = WalkStats::default();
    let mut probe_buckets: BTreeMap<usize, ProbeBucket> = BTreeMap::new();
    let mut cost_steps = 0u64;
    let mut cost_pairs = 0u64;
    for r in per_seed {
        walks.merge(&r.walks);
        for (&k, b) in &r.probes.buckets {
            probe_buckets
                .entry(k)
                .or_insert_with(|| ProbeBucket {
                    k,
                    ..ProbeBucket::default()
                })
                .merge(b);
        }
        cost_steps += r.probes.insertion_cost.total_steps;
        cost_pairs += r.probes.insertion_cost.pairs;
    }
    walks.finish();
    for b in probe_buckets.values_mut() {
        b.finish();
    }
    Aggregate {
        seeds: per_seed.len(),
        walks,
        max_component_size: per_seed
            .iter()
            .map(|r| r.census.max_size)
            .max()
            .unwrap_or(0),
        multi_cycle_components: per_seed.iter().map(|r| r.census.multi_cycle_count).sum(),
        ell_bound_flags: per_seed
            .iter()
            .map(|r| r.census.flags.ell_bound.len())
            .sum(),
        probe_buckets,
        tree_walk_violations: per_seed
            .iter()
            .map(|r| r.probes.tree_violations.len())
            .sum(),
        insertion_cost_sampled_mean: ratio(cost_steps, cost_pairs),
        hard_verdicts_pass: per_seed.iter().all(|r| r.verdicts.all_hold()),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let per_seed: Vec<SeedResult> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect::<Result<_, _>>()?;
    let failures = per_seed
        .iter()
        .flat_map(|r| {
            r.verdicts
                .failures()
                .into_iter()
                .map(move |f| format!("seed {}: {f}", r.seed))
        })
        .collect();
    let warnings = per_seed.iter().flat_map(warnings_for).collect();
    Ok(ExperimentResult {
        manifest: Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            items_per_seed: config.item_count(),
            max_walk_steps: config.table_config(0).max_walk_steps,
            config: config.clone(),
        },
        aggregate: aggregate(&per_seed),
        per_seed,
        failures,
        warnings,
    })
}

/// Outcome of the deterministic checks on one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub seed: u64,
    pub requested: usize,
    pub inserted: usize,
    /// The run stopped at the first insertion that hit the walk cap.
    pub stopped_by_cap: bool,
    pub walks: WalkStats,
    pub verdicts: Verdicts,
}

/// Inserts up to `m` items and checks every deterministic invariant on the
/// resulting table. Unlike [`run_experiment`] a walk-cap error is not
/// fatal: the rolled-back table is checked as it stands.
pub fn run_lemma_check(config: &ExperimentConfig, seed: u64) -> Result<LemmaReport, HarnessError> {
    let wrap = |source| HarnessError::Table { seed, source };
    let mut table = Table::new(config.table_config(seed)).map_err(wrap)?;
    let requested = config.item_count();
    let (walks, cap) = drive(&mut table, requested, true).map_err(wrap)?;
    let analysis = analyse(&table, &walks, config.counting, config.oracle_limit);
    Ok(LemmaReport {
        seed,
        requested,
        inserted: table.inserted_count(),
        stopped_by_cap: cap.is_some(),
        walks,
        verdicts: analysis.verdicts,
    })
}

/// Runs [`run_lemma_check`] for every seed of `config` in parallel.
pub fn run_lemma_suite(config: &ExperimentConfig) -> Result<Vec<LemmaReport>, HarnessError> {
    config.validate()?;
    config
        .seeds
        .par_iter()
        .map(|&seed| run_lemma_check(config, seed))
        .collect()
}
