//! Two-choice bin table with random-walk insertion.
//!
//! Each of the `n` bins holds at most `d` items. An item names two
//! distinct bins. When both are full, the insertion walks: evict a
//! uniformly chosen resident of the current bin, put the carried item in
//! its slot, and carry the evicted item to its other bin, until a bin
//! with room is reached.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AllocationGraph, GraphError};
use crate::rng::{substream, Stream};
use crate::{BinId, ItemId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("invalid table config: {0}")]
    InvalidConfig(String),
    #[error("item {id} has illegal choices ({p}, {q}) for {n} bins")]
    InvalidItem {
        id: ItemId,
        p: BinId,
        q: BinId,
        n: usize,
    },
    #[error("item {0} is already inserted")]
    DuplicateItem(ItemId),
    #[error("item {0} is not in the table")]
    UnknownItem(ItemId),
    #[error("bin {bin} out of range 0..{n}")]
    UnknownBin { bin: BinId, n: usize },
    #[error("insertion of item {item} exceeded the walk cap of {cap} steps")]
    WalkCapExceeded { item: ItemId, cap: u64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Placement rule when both choice bins have room.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BothFreePolicy {
    /// Place the item at the head of its freshly drawn `D` edge.
    #[default]
    FollowD,
    /// Place the item at its first choice `p`.
    PreferFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableConfig {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub max_walk_steps: u64,
    pub both_free_policy: BothFreePolicy,
}

impl TableConfig {
    /// Config with the default walk cap of `64 * n * d` and `FollowD`.
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        TableConfig {
            n,
            d,
            seed,
            max_walk_steps: Self::default_walk_cap(n, d),
            both_free_policy: BothFreePolicy::FollowD,
        }
    }

    pub fn default_walk_cap(n: usize, d: usize) -> u64 {
        64u64
            .saturating_mul(n as u64)
            .saturating_mul(d as u64)
            .max(1)
    }

    pub fn with_policy(mut self, policy: BothFreePolicy) -> Self {
        self.both_free_policy = policy;
        self
    }

    pub fn with_max_walk_steps(mut self, cap: u64) -> Self {
        self.max_walk_steps = cap;
        self
    }

    fn validate(&self) -> Result<(), TableError> {
        if self.n < 2 {
            return Err(TableError::InvalidConfig(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if self.n > u32::MAX as usize {
            return Err(TableError::InvalidConfig(format!(
                "n = {} too large",
                self.n
            )));
        }
        if self.d < 1 {
            return Err(TableError::InvalidConfig("d must be at least 1".into()));
        }
        if self
            .n
            .checked_mul(self.d)
            .is_none_or(|c| c > u32::MAX as usize)
        {
            return Err(TableError::InvalidConfig(format!(
                "capacity n * d = {} * {} too large",
                self.n, self.d
            )));
        }
        if self.max_walk_steps < 1 {
            return Err(TableError::InvalidConfig(
                "max_walk_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub p: BinId,
    pub q: BinId,
}

impl Item {
    pub fn new(id: ItemId, p: BinId, q: BinId) -> Self {
        Item { id, p, q }
    }
}

/// One step of a walk: `item` moved out of `from` towards `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Eviction {
    pub item: ItemId,
    pub from: BinId,
    pub to: BinId,
}

impl fmt::Display for Eviction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.item, self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InsertOutcome {
    pub item_id: ItemId,
    pub placed_bin: BinId,
    /// Number of evictions performed; zero when a choice bin had room.
    pub walk_steps: u64,
    pub eviction_trace: Vec<Eviction>,
}

impl InsertOutcome {
    /// The eviction trace as `item from to` lines.
    pub fn trace_lines(&self) -> String {
        self.eviction_trace
            .iter()
            .map(|e| format!("{e}\n"))
            .collect()
    }
}

/// Result of a read-only probe walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProbeWalk {
    pub steps: u64,
    /// The walk was cut off at `max_walk_steps` without finding room.
    pub capped: bool,
}

/// Source of the random decisions made during an insertion.
pub trait ChoiceSource {
    /// Head of the item's edge in `D`; must be `p` or `q`.
    fn d_head(&mut self, p: BinId, q: BinId) -> BinId;
    /// Bin the walk starts from when both choices are full.
    fn walk_start(&mut self, p: BinId, q: BinId) -> BinId;
    /// Slot index in `0..load` of the resident evicted from `bin`.
    fn resident(&mut self, bin: BinId, load: usize) -> usize;
    /// Marks the state to return to if the insertion is rolled back.
    fn checkpoint(&mut self) {}
    fn rollback(&mut self) {}
}

/// The table's own seeded streams for tie breaks and evictions.
#[derive(Debug, Clone)]
pub struct SeededChoices {
    tie_break: ChaCha8Rng,
    eviction: ChaCha8Rng,
    mark: (u128, u128),
}

impl SeededChoices {
    pub fn new(seed: u64) -> Self {
        SeededChoices {
            tie_break: substream(seed, Stream::TieBreak),
            eviction: substream(seed, Stream::Eviction),
            mark: (0, 0),
        }
    }
}

impl ChoiceSource for SeededChoices {
    fn d_head(&mut self, p: BinId, q: BinId) -> BinId {
        if self.tie_break.gen::<bool>() {
            p
        } else {
            q
        }
    }

    fn walk_start(&mut self, p: BinId, q: BinId) -> BinId {
        if self.eviction.gen::<bool>() {
            p
        } else {
            q
        }
    }

    fn resident(&mut self, _bin: BinId, load: usize) -> usize {
        self.eviction.gen_range(0..load)
    }

    fn checkpoint(&mut self) {
        self.mark = (self.tie_break.get_word_pos(), self.eviction.get_word_pos());
    }

    fn rollback(&mut self) {
        self.tie_break.set_word_pos(self.mark.0);
        self.eviction.set_word_pos(self.mark.1);
    }
}

/// Replays fixed decisions; used to reproduce hand traces.
///
/// Heads and walk starts are consumed in order and panic when exhausted.
/// Resident picks from a single-item bin need no script entry.
#[derive(Debug, Clone, Default)]
pub struct ScriptedChoices {
    d_heads: std::collections::VecDeque<BinId>,
    walk_starts: std::collections::VecDeque<BinId>,
    residents: std::collections::VecDeque<usize>,
}

impl ScriptedChoices {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn d_heads(mut self, heads: impl IntoIterator<Item = BinId>) -> Self {
        self.d_heads.extend(heads);
        self
    }

    pub fn walk_starts(mut self, starts: impl IntoIterator<Item = BinId>) -> Self {
        self.walk_starts.extend(starts);
        self
    }

    pub fn residents(mut self, slots: impl IntoIterator<Item = usize>) -> Self {
        self.residents.extend(slots);
        self
    }
}

impl ChoiceSource for ScriptedChoices {
    fn d_head(&mut self, _p: BinId, _q: BinId) -> BinId {
        self.d_heads
            .pop_front()
            .expect("scripted D heads exhausted")
    }

    fn walk_start(&mut self, _p: BinId, _q: BinId) -> BinId {
        self.walk_starts
            .pop_front()
            .expect("scripted walk starts exhausted")
    }

    fn resident(&mut self, _bin: BinId, load: usize) -> usize {
        if load == 1 {
            return 0;
        }
        self.residents
            .pop_front()
            .expect("scripted residents exhausted")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    config: TableConfig,
    /// Bin `b` owns `slots[b * d .. b * d + loads[b]]`.
    slots: Vec<ItemId>,
    loads: Vec<u32>,
    graph: AllocationGraph,
    inserted: usize,
    pairs: ChaCha8Rng,
    choices: Option<SeededChoices>,
}

impl Table {
    pub fn new(config: TableConfig) -> Result<Self, TableError> {
        config.validate()?;
        let TableConfig { n, d, seed, .. } = config;
        Ok(Table {
            slots: vec![0; n * d],
            loads: vec![0; n],
            graph: AllocationGraph::new(n, d),
            inserted: 0,
            pairs: substream(seed, Stream::Pairs),
            choices: Some(SeededChoices::new(seed)),
            config,
        })
    }

    pub fn config(&self) -> &TableConfig {
        &self.config
    }

    pub fn bin_count(&self) -> usize {
        self.config.n
    }

    pub fn capacity(&self) -> usize {
        self.config.d
    }

    pub fn inserted_count(&self) -> usize {
        self.inserted
    }

    pub fn load(&self, bin: BinId) -> usize {
        self.loads[bin as usize] as usize
    }

    pub fn loads(&self) -> &[u32] {
        &self.loads
    }

    pub fn is_saturated(&self, bin: BinId) -> bool {
        self.load(bin) == self.config.d
    }

    pub fn saturated_bins(&self) -> Vec<BinId> {
        (0..self.config.n as BinId)
            .filter(|&b| self.is_saturated(b))
            .collect()
    }

    pub fn residents(&self, bin: BinId) -> &[ItemId] {
        let start = bin as usize * self.config.d;
        &self.slots[start..start + self.load(bin)]
    }

    pub fn graph(&self) -> &AllocationGraph {
        &self.graph
    }

    pub fn set_flip_log(&mut self, enabled: bool) {
        self.graph.set_flip_log(enabled);
    }

    /// Draws an ordered pair of distinct bins, uniform over all such pairs.
    pub fn generate_pair(&mut self) -> (BinId, BinId) {
        let n = self.config.n as BinId;
        let p = self.pairs.gen_range(0..n);
        loop {
            let q = self.pairs.gen_range(0..n);
            if q != p {
                return (p, q);
            }
        }
    }

    /// Fresh generator for the probe substream of this table's seed.
    pub fn probe_rng(&self) -> ChaCha8Rng {
        substream(self.config.seed, Stream::Probe)
    }

    pub fn lookup(&self, item_id: ItemId) -> Result<BinId, TableError> {
        self.graph
            .edge(item_id)
            .map(|e| e.head_dprime)
            .ok_or(TableError::UnknownItem(item_id))
    }

    /// Inserts `item` using the table's seeded streams.
    pub fn insert(&mut self, item: Item) -> Result<InsertOutcome, TableError> {
        let mut choices = self.choices.take().expect("seeded choices present");
        let outcome = self.insert_with(item, &mut choices);
        self.choices = Some(choices);
        outcome
    }

    /// Inserts `item` taking every random decision from `choices`.
    ///
    /// On a walk-cap error the table and the choice source are restored
    /// to their state before the call.
    pub fn insert_with<C: ChoiceSource>(
        &mut self,
        item: Item,
        choices: &mut C,
    ) -> Result<InsertOutcome, TableError> {
        let Item { id, p, q } = item;
        let n = self.config.n;
        if p == q || p as usize >= n || q as usize >= n {
            return Err(TableError::InvalidItem { id, p, q, n });
        }
        if self.graph.edge(id).is_some() {
            return Err(TableError::DuplicateItem(id));
        }

        let p_free = !self.is_saturated(p);
        let q_free = !self.is_saturated(q);
        if !p_free && !q_free {
            choices.checkpoint();
        }
        let head_d = choices.d_head(p, q);
        assert!(
            head_d == p || head_d == q,
            "D head {head_d} not in ({p}, {q})"
        );

        let trace = if p_free || q_free {
            let bin = match (p_free, q_free) {
                (true, true) => match self.config.both_free_policy {
                    BothFreePolicy::FollowD => head_d,
                    BothFreePolicy::PreferFirst => p,
                },
                (true, false) => p,
                _ => q,
            };
            self.push(bin, id);
            self.graph.record_edge(id, p, q, head_d, bin)?;
            Vec::new()
        } else {
            let start = choices.walk_start(p, q);
            assert!(
                start == p || start == q,
                "walk start {start} not in ({p}, {q})"
            );
            // The walk may come back for the new item, so its edge exists
            // from the first swap on.
            self.graph.record_edge(id, p, q, head_d, start)?;
            match self.walk(id, start, choices) {
                Ok(trace) => trace,
                Err(e) => {
                    self.graph.remove_edge(id);
                    choices.rollback();
                    return Err(e);
                }
            }
        };

        let placed_bin = self.graph.edge(id).expect("edge just recorded").head_dprime;
        self.inserted += 1;
        Ok(InsertOutcome {
            item_id: id,
            placed_bin,
            walk_steps: trace.len() as u64,
            eviction_trace: trace,
        })
    }

    fn push(&mut self, bin: BinId, item: ItemId) {
        let load = self.load(bin);
        debug_assert!(load < self.config.d);
        self.slots[bin as usize * self.config.d + load] = item;
        self.loads[bin as usize] += 1;
    }

    /// Loop A. Every evicted item is flipped in `D'` as it leaves its bin.
    fn walk<C: ChoiceSource>(
        &mut self,
        id: ItemId,
        start: BinId,
        choices: &mut C,
    ) -> Result<Vec<Eviction>, TableError> {
        let d = self.config.d;
        let cap = self.config.max_walk_steps;
        let mut trace = Vec::new();
        let mut slots_used: Vec<usize> = Vec::new();
        let mut carried = id;
        let mut bin = start;
        loop {
            if trace.len() as u64 >= cap {
                for (step, slot) in trace.iter().zip(&slots_used).rev() {
                    let step: &Eviction = step;
                    self.slots[*slot] = step.item;
                    self.graph.revert_flip(step.item, d);
                }
                return Err(TableError::WalkCapExceeded { item: id, cap });
            }
            let load = self.load(bin);
            let slot = bin as usize * d + choices.resident(bin, load);
            let evicted = std::mem::replace(&mut self.slots[slot], carried);
            let next = self.graph.flip(evicted, load)?;
            trace.push(Eviction {
                item: evicted,
                from: bin,
                to: next,
            });
            slots_used.push(slot);
            carried = evicted;
            bin = next;
            if !self.is_saturated(bin) {
                self.push(bin, carried);
                return Ok(trace);
            }
        }
    }

    /// Simulates a replacement walk from `start` without changing the
    /// table. Returns zero steps when `start` has room.
    pub fn probe_walk<R: Rng + ?Sized>(
        &self,
        start: BinId,
        rng: &mut R,
    ) -> Result<ProbeWalk, TableError> {
        self.probe_walk_visit(start, rng, |_| {})
    }

    /// Like [`probe_walk`](Self::probe_walk), calling `visit` on every bin
    /// the walk stands on, starting with `start`.
    pub fn probe_walk_visit<R, F>(
        &self,
        start: BinId,
        rng: &mut R,
        mut visit: F,
    ) -> Result<ProbeWalk, TableError>
    where
        R: Rng + ?Sized,
        F: FnMut(BinId),
    {
        if start as usize >= self.config.n {
            return Err(TableError::UnknownBin {
                bin: start,
                n: self.config.n,
            });
        }
        let mut bin = start;
        let mut steps = 0u64;
        visit(bin);
        while self.is_saturated(bin) {
            if steps >= self.config.max_walk_steps {
                return Ok(ProbeWalk {
                    steps,
                    capped: true,
                });
            }
            let residents = self.residents(bin);
            let x = residents[rng.gen_range(0..residents.len())];
            let edge = self.graph.edge(x).expect("resident has an edge");
            bin = edge.other(bin);
            steps += 1;
            visit(bin);
        }
        Ok(ProbeWalk {
            steps,
            capped: false,
        })
    }
}
