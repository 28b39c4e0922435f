//! Propagation engine: variables, a FIFO propagator queue, a delta trail
//! and depth-first search.

use std::time::{Duration, Instant};

use bitflags::bitflags;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{Domain, Snapshot, Value};
use crate::propagators::PropagatorSpec;

/// Dense handle of a variable inside one [`Engine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(u32);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Handle of a posted propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropId(u32);

impl PropId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

bitflags! {
    /// Set of wake events produced by a domain change.
    ///
    /// A bound change always comes with `DOMAIN_CHANGED`, and so does `FIXED`.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct Events: u8 {
        const MIN_CHANGED = 1;
        const MAX_CHANGED = 1 << 1;
        const DOMAIN_CHANGED = 1 << 2;
        const FIXED = 1 << 3;
        const BOUNDS = Self::MIN_CHANGED.bits() | Self::MAX_CHANGED.bits();
    }
}

/// Marker for a wiped-out domain or an unsatisfiable propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict;

/// A domain reduction request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    RemoveBelow(Value),
    RemoveAbove(Value),
    RemoveValue(Value),
    RemoveInterval(Value, Value),
    Assign(Value),
}

/// Outcome of [`Engine::tighten`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tightened {
    Changed(Events),
    NoChange,
    Conflict,
}

/// Outcome of [`Engine::propagate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Fixpoint,
    Conflict,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("variable domain is empty")]
    EmptyDomain,
    #[error("value {value} outside universe [{lo}, {hi}]")]
    OutOfRange { value: Value, lo: Value, hi: Value },
    #[error("unknown variable #{0}")]
    UnknownVar(usize),
    #[error("engine is in failed state")]
    Failed,
    #[error("pop_level without matching push_level")]
    UnmatchedPop,
    #[error("no branching variables given")]
    NoBranchVars,
}

#[derive(Debug, Clone, Copy)]
enum TrailEntry {
    /// Whole bitset of a single-word domain.
    Single {
        var: u32,
        size: u32,
        old: u64,
    },
    Bounds {
        var: u32,
        snap: Snapshot,
    },
    Word {
        var: u32,
        idx: u32,
        old: u64,
    },
}

/// Schedule-time filter on a subscription: a guarded watcher is skipped when
/// its propagator provably has nothing to do after the change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guard {
    Always,
    /// Watcher on `x` of `flag <-> x in [lo, hi]`.
    Interval {
        lo: Value,
        hi: Value,
        flag: VarId,
    },
    /// Watcher on `flag` of `flag <-> x in [lo, hi]`; `holes` when a false
    /// flag removes the whole interval rather than trimming bounds.
    Flag {
        x: VarId,
        lo: Value,
        hi: Value,
        holes: bool,
    },
    /// Watcher on the left side of `var <= other`.
    LeqLeft {
        other: VarId,
    },
    /// Watcher on the right side of `other <= var`.
    LeqRight {
        other: VarId,
    },
}

#[derive(Debug, Clone, Copy)]
struct Watch {
    prop: PropId,
    events: Events,
    guard: Guard,
}

/// Watchers of every variable in one array, sliced per variable. New
/// subscriptions wait in `pending` until the next lookup.
#[derive(Debug)]
struct Watchers {
    start: Vec<u32>,
    list: Vec<Watch>,
    pending: Vec<(VarId, Watch)>,
}

impl Default for Watchers {
    fn default() -> Self {
        Watchers {
            start: vec![0],
            list: Vec::new(),
            pending: Vec::new(),
        }
    }
}

impl Watchers {
    fn add_var(&mut self) {
        self.start.push(self.list.len() as u32);
    }

    fn add(&mut self, v: VarId, w: Watch) {
        self.pending.push((v, w));
    }

    #[inline]
    fn of(&self, v: VarId) -> &[Watch] {
        debug_assert!(self.pending.is_empty());
        &self.list[self.start[v.index()] as usize..self.start[v.index() + 1] as usize]
    }

    #[inline]
    fn flush(&mut self) {
        if !self.pending.is_empty() {
            self.merge_pending();
        }
    }

    /// Merges pending subscriptions, keeping each variable's watchers in
    /// subscription order.
    #[cold]
    fn merge_pending(&mut self) {
        let vars = self.start.len() - 1;
        let mut count = vec![0u32; vars];
        for (v, _) in &self.pending {
            count[v.index()] += 1;
        }
        let mut start = Vec::with_capacity(vars + 1);
        let mut list = Vec::with_capacity(self.list.len() + self.pending.len());
        let mut pending = std::mem::take(&mut self.pending);
        pending.sort_by_key(|(v, _)| v.index());
        let mut extra = pending.into_iter().peekable();
        for v in 0..vars {
            start.push(list.len() as u32);
            list.extend_from_slice(&self.list[self.start[v] as usize..self.start[v + 1] as usize]);
            while let Some((_, w)) = extra.next_if(|(u, _)| u.index() == v) {
                list.push(w);
            }
        }
        start.push(list.len() as u32);
        self.start = start;
        self.list = list;
    }
}

/// Reified-interval watchers of one variable, addressed by their interval
/// inside the variable's universe `[base, top]`.
#[derive(Debug, Clone)]
struct IntervalIndex {
    base: Value,
    top: Value,
    slots: Vec<Option<(PropId, VarId)>>,
}

impl IntervalIndex {
    fn new(base: Value, top: Value) -> Self {
        let w = (top - base + 1) as usize;
        IntervalIndex {
            base,
            top,
            slots: vec![None; w * (w + 1) / 2],
        }
    }

    #[inline]
    fn offset(&self, lo: Value, hi: Value) -> usize {
        let w = (self.top - self.base + 1) as usize;
        let l = (lo - self.base) as usize;
        l * (2 * w + 1 - l) / 2 + (hi - lo) as usize
    }

    /// Calls `f` on every interval whose relation to the variable's range can
    /// have changed when it shrank from `[a, b]` to `[a2, b2]`: newly
    /// containing the range, newly disjoint from it, or newly holding one of
    /// its bounds. The row blocks below are disjoint.
    #[inline]
    fn for_each_affected(
        &self,
        (a, b): (Value, Value),
        (a2, b2): (Value, Value),
        mut f: impl FnMut(PropId, VarId, Value, Value),
    ) {
        let mut rows =
            |ls: std::ops::RangeInclusive<Value>, from: &dyn Fn(Value) -> Value, to: Value| {
                for l in ls {
                    let lo = from(l);
                    if lo > to {
                        continue;
                    }
                    let start = self.offset(l, lo);
                    let row = &self.slots[start..=start + (to - lo) as usize];
                    for (k, slot) in row.iter().enumerate() {
                        if let Some((p, flag)) = *slot {
                            f(p, flag, l, lo + k as Value);
                        }
                    }
                }
            };
        // Max moved: intervals that now contain the new max, outside the
        // rows of the next block.
        rows(self.base..=a, &|_| b2, b - 1);
        rows(a2 + 1..=b2, &|_| b2, b - 1);
        // Min moved: intervals starting past the old min that now reach
        // the new min.
        rows(a + 1..=a2, &|_| a2, self.top);
        // Newly left of the range.
        rows(self.base..=a2 - 1, &|l| l.max(a), a2 - 1);
        // Newly right of the range.
        rows(b2 + 1..=b, &|l| l, self.top);
    }
}

/// FIFO of pending propagators. It drains completely at every fixpoint, so
/// a vector with a read cursor suffices.
#[derive(Debug, Default)]
struct Queue {
    items: Vec<PropId>,
    head: usize,
}

impl Queue {
    #[inline]
    fn push(&mut self, p: PropId) {
        self.items.push(p);
    }

    #[inline]
    fn pop(&mut self) -> Option<PropId> {
        match self.items.get(self.head) {
            Some(&p) => {
                self.head += 1;
                Some(p)
            }
            None => {
                self.items.clear();
                self.head = 0;
                None
            }
        }
    }

    fn pending(&mut self) -> &mut [PropId] {
        &mut self.items[self.head..]
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.items.len() - self.head
    }
}

/// Kept out of line so the common singleton case skips the (software)
/// population count.
#[inline(never)]
fn popcount(w: u64) -> u32 {
    w.count_ones()
}

/// Whether a reified interval needs revising once `x` spans `[min, max]`.
#[inline]
fn interval_wake(flag: &Domain, lo: Value, hi: Value, min: Value, max: Value) -> bool {
    match flag.value() {
        None => (lo <= min && max <= hi) || max < lo || min > hi,
        Some(1) => false,
        Some(_) => (lo..=hi).contains(&min) || (lo..=hi).contains(&max),
    }
}

/// Domains plus the bookkeeping touched by every mutation: the trail and the
/// propagation queue. Propagators read and tighten domains through this view.
#[derive(Debug, Default)]
pub struct Store {
    domains: Vec<Domain>,
    trail: Vec<TrailEntry>,
    watchers: Watchers,
    intervals: Vec<Vec<IntervalIndex>>,
    queue: Queue,
    queued: Vec<bool>,
    direct: Vec<(PropId, VarId, Action)>,
    failed: bool,
}

impl Store {
    #[inline]
    pub fn domain(&self, v: VarId) -> &Domain {
        &self.domains[v.index()]
    }

    #[inline]
    pub fn min(&self, v: VarId) -> Value {
        self.domains[v.index()].min()
    }

    #[inline]
    pub fn max(&self, v: VarId) -> Value {
        self.domains[v.index()].max()
    }

    #[inline]
    pub fn contains(&self, v: VarId, value: Value) -> bool {
        self.domains[v.index()].contains(value)
    }

    #[inline]
    pub fn value(&self, v: VarId) -> Option<Value> {
        self.domains[v.index()].value()
    }

    #[inline]
    pub fn is_fixed(&self, v: VarId) -> bool {
        self.domains[v.index()].is_fixed()
    }

    #[inline]
    pub fn remove_below(&mut self, v: VarId, k: Value) -> Result<bool, Conflict> {
        if k <= self.min(v) && !self.failed {
            return Ok(false);
        }
        self.apply(v, Action::RemoveBelow(k)).map(|e| !e.is_empty())
    }

    #[inline]
    pub fn remove_above(&mut self, v: VarId, k: Value) -> Result<bool, Conflict> {
        if k >= self.max(v) && !self.failed {
            return Ok(false);
        }
        self.apply(v, Action::RemoveAbove(k)).map(|e| !e.is_empty())
    }

    pub fn remove_value(&mut self, v: VarId, k: Value) -> Result<bool, Conflict> {
        self.apply(v, Action::RemoveValue(k)).map(|e| !e.is_empty())
    }

    pub fn remove_interval(&mut self, v: VarId, l: Value, u: Value) -> Result<bool, Conflict> {
        self.apply(v, Action::RemoveInterval(l, u))
            .map(|e| !e.is_empty())
    }

    pub fn assign(&mut self, v: VarId, k: Value) -> Result<bool, Conflict> {
        self.apply(v, Action::Assign(k)).map(|e| !e.is_empty())
    }

    /// Marks the store failed. Used by propagators that detect
    /// unsatisfiability without emptying a domain.
    pub fn fail(&mut self) -> Conflict {
        self.failed = true;
        Conflict
    }

    /// Applies `action`, trails the delta and schedules the watchers of `v`.
    /// Returns the emitted events (empty when nothing changed).
    #[inline(never)]
    fn apply(&mut self, v: VarId, action: Action) -> Result<Events, Conflict> {
        if self.failed {
            return Err(Conflict);
        }
        let dom = &mut self.domains[v.index()];
        let no_op = match action {
            Action::RemoveBelow(k) => k <= dom.min(),
            Action::RemoveAbove(k) => k >= dom.max(),
            Action::RemoveValue(k) => !dom.contains(k),
            Action::RemoveInterval(l, u) => l > dom.max() || u < dom.min() || l > u,
            Action::Assign(k) => dom.value() == Some(k),
        };
        if no_op {
            return Ok(Events::empty());
        }
        let before = dom.snapshot();
        if let Some(old) = dom.single_word() {
            let removed = match action {
                Action::RemoveBelow(k) => dom.word_mask(before.min, k.saturating_sub(1)),
                Action::RemoveAbove(k) => dom.word_mask(k.saturating_add(1), before.max),
                Action::RemoveValue(k) => dom.word_mask(k, k),
                Action::RemoveInterval(l, u) => dom.word_mask(l, u),
                Action::Assign(k) => !dom.word_mask(k, k),
            };
            let w = old & !removed;
            if w == 0 {
                self.failed = true;
                return Err(Conflict);
            }
            if w == old {
                return Ok(Events::empty());
            }
            self.trail.push(TrailEntry::Single {
                var: v.0,
                size: before.size,
                old,
            });
            let size = if w & (w - 1) == 0 { 1 } else { popcount(w) };
            dom.set_single_word(w, size);
            return self.notify(v, before);
        }
        let mark = self.trail.len();
        self.trail.push(TrailEntry::Bounds {
            var: v.0,
            snap: before,
        });
        let trail = &mut self.trail;
        let mut log = |idx: usize, old: u64| {
            trail.push(TrailEntry::Word {
                var: v.0,
                idx: idx as u32,
                old,
            })
        };
        let outcome = match action {
            Action::RemoveBelow(k) => dom.clear_range(before.min, k.saturating_sub(1), &mut log),
            Action::RemoveAbove(k) => dom.clear_range(k.saturating_add(1), before.max, &mut log),
            Action::RemoveValue(k) => dom.clear_range(k, k, &mut log),
            Action::RemoveInterval(l, u) => dom.clear_range(l, u, &mut log),
            Action::Assign(k) => {
                if !dom.contains(k) {
                    None
                } else {
                    let a = dom.clear_range(before.min, k - 1, &mut log);
                    let b = dom.clear_range(k + 1, before.max, &mut log);
                    Some(a == Some(true) || b == Some(true))
                }
            }
        };
        match outcome {
            None => {
                self.trail.truncate(mark);
                self.failed = true;
                Err(Conflict)
            }
            Some(false) => {
                self.trail.truncate(mark);
                Ok(Events::empty())
            }
            Some(true) => self.notify(v, before),
        }
    }

    /// Wakes the watchers of `v` after it shrank from `before`; returns the
    /// events of the change.
    ///
    /// A woken propagator whose whole revise is known to be one tightening
    /// (fixing a decided flag, copying a bound across `a <= b`) gets that
    /// tightening applied here instead of a trip through the queue. Such
    /// propagators are idempotent, so they are left at their fixpoint.
    fn notify(&mut self, v: VarId, before: Snapshot) -> Result<Events, Conflict> {
        self.watchers.flush();
        let after = self.domains[v.index()].snapshot();
        let mut events = Events::DOMAIN_CHANGED;
        if after.min != before.min {
            events |= Events::MIN_CHANGED;
        }
        if after.max != before.max {
            events |= Events::MAX_CHANGED;
        }
        if after.size == 1 {
            events |= Events::FIXED;
        }
        let start = self.direct.len();
        let (domains, queued, queue, direct) = (
            &self.domains,
            &mut self.queued,
            &mut self.queue,
            &mut self.direct,
        );
        let (min, max) = (after.min, after.max);
        if events.intersects(Events::BOUNDS) {
            for index in &self.intervals[v.index()] {
                index.for_each_affected((before.min, before.max), (min, max), |p, flag, l, u| {
                    if queued[p.index()] {
                        return;
                    }
                    match domains[flag.index()].value() {
                        None if l <= min && max <= u => direct.push((p, flag, Action::Assign(1))),
                        None if max < l || min > u => direct.push((p, flag, Action::Assign(0))),
                        Some(0) if (l..=u).contains(&min) || (l..=u).contains(&max) => {
                            queued[p.index()] = true;
                            queue.push(p);
                        }
                        _ => {}
                    }
                });
            }
        }
        for w in self.watchers.of(v) {
            if !w.events.intersects(events) || queued[w.prop.index()] {
                continue;
            }
            let wake = match w.guard {
                Guard::Always => true,
                Guard::Interval { lo, hi, flag } => {
                    interval_wake(&domains[flag.index()], lo, hi, min, max)
                }
                Guard::Flag { x, lo, hi, holes } => {
                    let (xmin, xmax) = (domains[x.index()].min(), domains[x.index()].max());
                    match after.size {
                        1 if min == 1 => xmin < lo || xmax > hi,
                        1 if holes => xmin <= hi && xmax >= lo,
                        1 => (lo..=hi).contains(&xmin) || (lo..=hi).contains(&xmax),
                        _ => true,
                    }
                }
                Guard::LeqLeft { other } => {
                    if min > domains[other.index()].min() {
                        direct.push((w.prop, other, Action::RemoveBelow(min)));
                    }
                    false
                }
                Guard::LeqRight { other } => {
                    if domains[other.index()].max() > max {
                        direct.push((w.prop, other, Action::RemoveAbove(max)));
                    }
                    false
                }
            };
            if wake {
                queued[w.prop.index()] = true;
                queue.push(w.prop);
            }
        }
        // Nested calls push and pop above `start`.
        let mut result = Ok(events);
        for i in start..self.direct.len() {
            let (p, var, action) = self.direct[i];
            // Marked while it acts, so its own change does not requeue it.
            self.queued[p.index()] = true;
            let applied = self.apply(var, action);
            self.queued[p.index()] = false;
            if applied.is_err() {
                result = Err(Conflict);
                break;
            }
        }
        self.direct.truncate(start);
        result
    }

    /// Files a reified-interval watcher in the interval index of `x`.
    /// Returns false when the interval falls outside the universe or its
    /// slot is taken in every table, leaving the caller to use a plain
    /// watcher.
    fn index_interval(&mut self, x: VarId, lo: Value, hi: Value, p: PropId, flag: VarId) -> bool {
        let (base, top) = self.domains[x.index()].universe();
        if lo < base || hi > top || lo > hi {
            return false;
        }
        let tables = &mut self.intervals[x.index()];
        let free = tables
            .iter()
            .position(|t| t.slots[t.offset(lo, hi)].is_none());
        let t = match free {
            Some(i) => &mut tables[i],
            None => {
                tables.push(IntervalIndex::new(base, top));
                tables.last_mut().unwrap()
            }
        };
        let off = t.offset(lo, hi);
        t.slots[off] = Some((p, flag));
        true
    }

    fn schedule(&mut self, p: PropId) {
        if !self.queued[p.index()] {
            self.queued[p.index()] = true;
            self.queue.push(p);
        }
    }

    fn clear_queue(&mut self) {
        for p in self.queue.pending() {
            self.queued[p.index()] = false;
        }
        self.queue.items.clear();
        self.queue.head = 0;
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                TrailEntry::Single { var, size, old } => {
                    self.domains[var as usize].set_single_word(old, size)
                }
                TrailEntry::Bounds { var, snap } => {
                    self.domains[var as usize].restore_snapshot(snap)
                }
                TrailEntry::Word { var, idx, old } => {
                    self.domains[var as usize].set_word(idx as usize, old)
                }
            }
        }
    }
}

/// Search counters. `time_ms` is wall-clock and informational.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub backtracks: u64,
    pub failures: u64,
    pub propagations: u64,
    pub time_ms: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Limits {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Values of the branching variables, in the order they were given.
    Sat(Vec<Value>),
    Unsat,
    LimitReached,
}

/// A sequential propagation engine.
#[derive(Debug, Default)]
pub struct Engine {
    store: Store,
    props: Vec<PropagatorSpec>,
    levels: Vec<usize>,
    propagations: u64,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates a variable over the universe `[lo, hi]` with the given values.
    pub fn new_var(
        &mut self,
        lo: Value,
        hi: Value,
        values: &[Value],
    ) -> Result<VarId, EngineError> {
        if values.is_empty() {
            return Err(EngineError::EmptyDomain);
        }
        if let Some(&value) = values.iter().find(|&&v| v < lo || v > hi) {
            return Err(EngineError::OutOfRange { value, lo, hi });
        }
        let dom = Domain::from_values(lo, hi, values).ok_or(EngineError::EmptyDomain)?;
        Ok(self.push_domain(dom))
    }

    /// Creates a variable whose domain is the whole interval `[lo, hi]`.
    pub fn new_interval_var(&mut self, lo: Value, hi: Value) -> VarId {
        self.push_domain(Domain::interval(lo, hi))
    }

    fn push_domain(&mut self, dom: Domain) -> VarId {
        let id = VarId(self.store.domains.len() as u32);
        self.store.domains.push(dom);
        self.store.watchers.add_var();
        self.store.intervals.push(Vec::new());
        id
    }

    pub fn num_vars(&self) -> usize {
        self.store.domains.len()
    }

    pub fn num_propagators(&self) -> usize {
        self.props.len()
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn domain(&self, v: VarId) -> &Domain {
        self.store.domain(v)
    }

    /// All domains, indexed by [`VarId::index`].
    pub fn domains(&self) -> &[Domain] {
        &self.store.domains
    }

    pub fn is_failed(&self) -> bool {
        self.store.failed
    }

    /// Ids of the propagators posted after the first `start` ones.
    pub fn propagators_since(&self, start: usize) -> impl Iterator<Item = PropId> {
        (start as u32..self.props.len() as u32).map(PropId)
    }

    pub fn propagator(&self, p: PropId) -> &PropagatorSpec {
        &self.props[p.index()]
    }

    /// Total number of revise calls since creation.
    pub fn propagations(&self) -> u64 {
        self.propagations
    }

    pub fn var(&self, index: usize) -> Option<VarId> {
        (index < self.num_vars()).then_some(VarId(index as u32))
    }

    /// Registers a propagator, subscribes it and schedules an initial revise.
    pub fn post(&mut self, spec: PropagatorSpec) -> Result<PropId, EngineError> {
        if self.store.failed {
            return Err(EngineError::Failed);
        }
        let subs = spec.subscriptions();
        if let Some((v, _)) = subs.iter().find(|(v, _)| v.index() >= self.num_vars()) {
            return Err(EngineError::UnknownVar(v.index()));
        }
        let id = PropId(self.props.len() as u32);
        let mut merged: Vec<(VarId, Events)> = Vec::with_capacity(subs.len());
        for (v, events) in subs {
            match merged.iter_mut().find(|(u, _)| *u == v) {
                Some((_, e)) => *e |= events,
                None => merged.push((v, events)),
            }
        }
        for (v, events) in merged {
            let guard = spec.guard(v);
            if let Guard::Interval { lo, hi, flag } = guard {
                if events == Events::BOUNDS && self.store.index_interval(v, lo, hi, id, flag) {
                    continue;
                }
            }
            self.store.watchers.add(
                v,
                Watch {
                    prop: id,
                    events,
                    guard,
                },
            );
        }
        self.props.push(spec);
        self.store.queued.push(false);
        self.store.schedule(id);
        Ok(id)
    }

    pub fn tighten(&mut self, v: VarId, action: Action) -> Tightened {
        match self.store.apply(v, action) {
            Err(Conflict) => Tightened::Conflict,
            Ok(e) if e.is_empty() => Tightened::NoChange,
            Ok(e) => Tightened::Changed(e),
        }
    }

    /// Runs queued propagators until the queue drains or one fails.
    pub fn propagate(&mut self) -> Status {
        if self.store.failed {
            self.store.clear_queue();
            return Status::Conflict;
        }
        while let Some(p) = self.store.queue.pop() {
            let spec = &self.props[p.index()];
            // An idempotent propagator stays marked while it runs, so its own
            // changes do not requeue it.
            let idempotent = spec.idempotent();
            self.store.queued[p.index()] = idempotent;
            self.propagations += 1;
            let result = spec.revise(&mut self.store);
            self.store.queued[p.index()] = false;
            if result.is_err() {
                self.store.failed = true;
                self.store.clear_queue();
                return Status::Conflict;
            }
        }
        Status::Fixpoint
    }

    /// Randomly permutes the pending queue.
    pub fn shuffle_queue<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.store.queue.pending().shuffle(rng);
    }

    pub fn level(&self) -> usize {
        self.levels.len()
    }

    pub fn push_level(&mut self) {
        self.levels.push(self.store.trail.len());
    }

    /// Restores every domain to its state at the matching `push_level`,
    /// drops pending queue entries and clears the failed flag.
    pub fn pop_level(&mut self) -> Result<(), EngineError> {
        let mark = self.levels.pop().ok_or(EngineError::UnmatchedPop)?;
        self.store.undo_to(mark);
        self.store.clear_queue();
        self.store.failed = false;
        Ok(())
    }

    /// Checks every cached min/max/size against its bitset.
    pub fn audit(&self) -> bool {
        self.store.domains.iter().all(Domain::audit)
    }

    /// Depth-first search with binary branching `X = v` / `X != v`.
    ///
    /// The branching variable is the unfixed one with the smallest domain
    /// (earliest in `branch` on ties) and `v` is its minimum. One backtrack
    /// is counted for every decision retracted after a conflict. Root
    /// propagation is kept on return; all search decisions are undone.
    pub fn solve(
        &mut self,
        branch: &[VarId],
        limits: Limits,
    ) -> Result<(SolveOutcome, SearchStats), EngineError> {
        if branch.is_empty() {
            return Err(EngineError::NoBranchVars);
        }
        let start = Instant::now();
        let base = self.level();
        let invocations = self.propagations;
        let mut stats = SearchStats {
            nodes: 1,
            ..SearchStats::default()
        };
        let mut stack: Vec<(VarId, Value)> = Vec::new();
        let outcome = if self.propagate() == Status::Conflict {
            stats.failures += 1;
            SolveOutcome::Unsat
        } else {
            'search: loop {
                let Some(var) = self.select(branch) else {
                    break SolveOutcome::Sat(
                        branch.iter().map(|&v| self.domain(v).min()).collect(),
                    );
                };
                if limits.node_limit.is_some_and(|k| stats.nodes >= k)
                    || limits.time_limit.is_some_and(|t| start.elapsed() >= t)
                {
                    break SolveOutcome::LimitReached;
                }
                let value = self.domain(var).min();
                self.push_level();
                stack.push((var, value));
                stats.nodes += 1;
                if self.tighten(var, Action::Assign(value)) != Tightened::Conflict
                    && self.propagate() == Status::Fixpoint
                {
                    continue;
                }
                stats.failures += 1;
                loop {
                    let Some((var, value)) = stack.pop() else {
                        break 'search SolveOutcome::Unsat;
                    };
                    self.pop_level()?;
                    stats.backtracks += 1;
                    stats.nodes += 1;
                    if self.tighten(var, Action::RemoveValue(value)) != Tightened::Conflict
                        && self.propagate() == Status::Fixpoint
                    {
                        break;
                    }
                    stats.failures += 1;
                }
            }
        };
        while self.level() > base {
            self.pop_level()?;
        }
        stats.propagations = self.propagations - invocations;
        stats.time_ms = start.elapsed().as_millis() as u64;
        Ok((outcome, stats))
    }

    fn select(&self, branch: &[VarId]) -> Option<VarId> {
        branch
            .iter()
            .copied()
            .filter(|&v| !self.domain(v).is_fixed())
            .min_by_key(|&v| self.domain(v).size())
    }
}
