//! Bitset domains over a contiguous universe of integers.

use smallvec::SmallVec;
use std::fmt;

/// Integer value stored in a domain.
pub type Value = i32;

type Words = SmallVec<[u64; 2]>;

/// A finite set of integers drawn from the universe `[base, top]`.
///
/// Membership is a bitset; the minimum, maximum and cardinality are cached so
/// that bound queries are O(1). A domain is never left empty by the mutation
/// methods: a removal that would empty it is refused and reported as `None`.
#[derive(Clone, PartialEq, Eq)]
pub struct Domain {
    base: Value,
    top: Value,
    words: Words,
    min: Value,
    max: Value,
    size: u32,
}

/// Bookkeeping returned by a successful mutation, used by the trail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Snapshot {
    pub min: Value,
    pub max: Value,
    pub size: u32,
}

impl Domain {
    /// Full interval `[lo, hi]`, which is also the universe.
    pub fn interval(lo: Value, hi: Value) -> Self {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        let width = (hi - lo + 1) as usize;
        let mut words: Words = SmallVec::from_elem(u64::MAX, width.div_ceil(64));
        let tail = width % 64;
        if tail != 0 {
            *words.last_mut().unwrap() = (1u64 << tail) - 1;
        }
        Domain {
            base: lo,
            top: hi,
            words,
            min: lo,
            max: hi,
            size: width as u32,
        }
    }

    /// Domain over the universe `[lo, hi]` holding exactly `values`.
    ///
    /// Returns `None` when `values` is empty or mentions a value outside the
    /// universe.
    pub fn from_values(lo: Value, hi: Value, values: &[Value]) -> Option<Self> {
        if values.is_empty() || lo > hi {
            return None;
        }
        let width = (hi - lo + 1) as usize;
        let mut words: Words = SmallVec::from_elem(0, width.div_ceil(64));
        for &v in values {
            if v < lo || v > hi {
                return None;
            }
            let off = (v - lo) as usize;
            words[off / 64] |= 1 << (off % 64);
        }
        let mut dom = Domain {
            base: lo,
            top: hi,
            words,
            min: lo,
            max: hi,
            size: 0,
        };
        dom.recompute();
        Some(dom)
    }

    pub fn universe(&self) -> (Value, Value) {
        (self.base, self.top)
    }

    #[inline]
    pub fn min(&self) -> Value {
        self.min
    }

    #[inline]
    pub fn max(&self) -> Value {
        self.max
    }

    #[inline]
    pub fn size(&self) -> u32 {
        self.size
    }

    #[inline]
    pub fn is_fixed(&self) -> bool {
        self.size == 1
    }

    /// The assigned value, if the domain is a singleton.
    pub fn value(&self) -> Option<Value> {
        self.is_fixed().then_some(self.min)
    }

    #[inline]
    pub fn contains(&self, v: Value) -> bool {
        if v < self.min || v > self.max {
            return false;
        }
        let off = (v - self.base) as usize;
        self.words[off / 64] >> (off % 64) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = Value> + '_ {
        (self.min..=self.max).filter(move |&v| self.contains(v))
    }

    pub fn values(&self) -> Vec<Value> {
        self.iter().collect()
    }

    pub(crate) fn snapshot(&self) -> Snapshot {
        Snapshot {
            min: self.min,
            max: self.max,
            size: self.size,
        }
    }

    pub(crate) fn restore_snapshot(&mut self, s: Snapshot) {
        self.min = s.min;
        self.max = s.max;
        self.size = s.size;
    }

    /// The whole bitset, when the universe fits one word.
    #[inline]
    pub(crate) fn single_word(&self) -> Option<u64> {
        (self.top - self.base < 64).then(|| self.words[0])
    }

    /// Bits of `[lo, hi]` clipped to the universe, for single-word domains.
    #[inline]
    pub(crate) fn word_mask(&self, lo: Value, hi: Value) -> u64 {
        let lo = lo.max(self.base);
        let hi = hi.min(self.top);
        if lo > hi {
            return 0;
        }
        range_mask((lo - self.base) as usize, (hi - self.base) as usize)
    }

    /// Replaces the bitset of a single-word domain with the non-empty `w`
    /// holding `size` values.
    #[inline]
    pub(crate) fn set_single_word(&mut self, w: u64, size: u32) {
        debug_assert!(w != 0 && w.count_ones() == size);
        self.words[0] = w;
        self.size = size;
        self.min = self.base + w.trailing_zeros() as Value;
        self.max = self.base + (63 - w.leading_zeros()) as Value;
    }

    pub(crate) fn set_word(&mut self, idx: usize, w: u64) {
        self.words[idx] = w;
    }

    /// Number of values of `[lo, hi]` (clipped to the universe) present.
    fn count_in(&self, lo: Value, hi: Value) -> u32 {
        let lo = lo.max(self.min);
        let hi = hi.min(self.max);
        if lo > hi {
            return 0;
        }
        let mut count = 0;
        self.for_each_word_mask(lo, hi, |w, mask| count += (w & mask).count_ones());
        count
    }

    fn for_each_word_mask(&self, lo: Value, hi: Value, mut f: impl FnMut(u64, u64)) {
        let a = (lo - self.base) as usize;
        let b = (hi - self.base) as usize;
        for idx in a / 64..=b / 64 {
            let start = if idx == a / 64 { a % 64 } else { 0 };
            let end = if idx == b / 64 { b % 64 } else { 63 };
            f(self.words[idx], range_mask(start, end));
        }
    }

    /// Clears every value of `[lo, hi]`, reporting each modified word's old
    /// contents through `log`. Returns `Some(changed)`, or `None` (leaving
    /// the domain untouched) if the removal would empty it.
    pub(crate) fn clear_range(
        &mut self,
        lo: Value,
        hi: Value,
        mut log: impl FnMut(usize, u64),
    ) -> Option<bool> {
        let lo = lo.max(self.min);
        let hi = hi.min(self.max);
        if lo > hi {
            return Some(false);
        }
        if self.words.len() == 1 {
            let mask = range_mask((lo - self.base) as usize, (hi - self.base) as usize);
            let old = self.words[0];
            let removed = (old & mask).count_ones();
            if removed == 0 {
                return Some(false);
            }
            if removed == self.size {
                return None;
            }
            log(0, old);
            let w = old & !mask;
            self.words[0] = w;
            self.size -= removed;
            self.min = self.base + w.trailing_zeros() as Value;
            self.max = self.base + (63 - w.leading_zeros()) as Value;
            return Some(true);
        }
        let removed = self.count_in(lo, hi);
        if removed == 0 {
            return Some(false);
        }
        if removed == self.size {
            return None;
        }
        let a = (lo - self.base) as usize;
        let b = (hi - self.base) as usize;
        for idx in a / 64..=b / 64 {
            let start = if idx == a / 64 { a % 64 } else { 0 };
            let end = if idx == b / 64 { b % 64 } else { 63 };
            let mask = range_mask(start, end);
            let old = self.words[idx];
            if old & mask != 0 {
                log(idx, old);
                self.words[idx] = old & !mask;
            }
        }
        self.size -= removed;
        if !self.contains_raw(self.min) {
            self.min = self.next_from(self.min);
        }
        if !self.contains_raw(self.max) {
            self.max = self.prev_from(self.max);
        }
        Some(true)
    }

    fn contains_raw(&self, v: Value) -> bool {
        let off = (v - self.base) as usize;
        self.words[off / 64] >> (off % 64) & 1 == 1
    }

    /// Smallest member `>= v`; one must exist.
    fn next_from(&self, v: Value) -> Value {
        let off = (v - self.base) as usize;
        let mut idx = off / 64;
        let mut w = self.words[idx] & (u64::MAX << (off % 64));
        while w == 0 {
            idx += 1;
            w = self.words[idx];
        }
        self.base + (idx * 64 + w.trailing_zeros() as usize) as Value
    }

    /// Largest member `<= v`; one must exist.
    fn prev_from(&self, v: Value) -> Value {
        let off = (v - self.base) as usize;
        let mut idx = off / 64;
        let mut w = self.words[idx] & (u64::MAX >> (63 - off % 64));
        while w == 0 {
            idx -= 1;
            w = self.words[idx];
        }
        self.base + (idx * 64 + 63 - w.leading_zeros() as usize) as Value
    }

    fn recompute(&mut self) {
        let mut size = 0;
        let mut min = None;
        let mut max = None;
        for v in self.base..=self.top {
            if self.contains_raw(v) {
                size += 1;
                min.get_or_insert(v);
                max = Some(v);
            }
        }
        self.size = size;
        self.min = min.unwrap_or(self.base);
        self.max = max.unwrap_or(self.base);
    }

    /// Verifies that the cached bounds and cardinality match the bitset.
    pub fn audit(&self) -> bool {
        let mut copy = self.clone();
        copy.recompute();
        copy.size == self.size && copy.min == self.min && copy.max == self.max && self.size > 0
    }
}

fn range_mask(start: usize, end: usize) -> u64 {
    let upper = if end == 63 {
        u64::MAX
    } else {
        (1u64 << (end + 1)) - 1
    };
    upper & !((1u64 << start) - 1)
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
