//! Brute-force and combinatorial ground truth.
//!
//! Nothing here touches the engine, the propagators or the decompositions:
//! these functions work on plain vectors so that they can be used to check
//! them.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::domain::Value;
use crate::instance::{Instance, Kind};

/// Largest product of domain sizes enumerated explicitly.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;
/// Largest universe handled by the used-value-set closures.
pub const MAX_CLOSURE_D: Value = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("search space of {0} tuples exceeds the enumeration limit")]
    TooLarge(u128),
    #[error("universe {0} exceeds the closure limit")]
    UniverseTooLarge(Value),
    #[error(
        "cardinality paths disagree: enumeration {enumeration}, combinatorial {combinatorial}"
    )]
    Disagreement {
        enumeration: usize,
        combinatorial: usize,
    },
}

/// One closed interval per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeVector(Vec<(Value, Value)>);

impl RangeVector {
    pub fn new(ranges: Vec<(Value, Value)>) -> Self {
        assert!(ranges.iter().all(|&(lo, hi)| lo <= hi), "inverted range");
        RangeVector(ranges)
    }

    pub fn of_domains(doms: &[Vec<Value>]) -> Self {
        Self::new(doms.iter().map(|d| (d[0], *d.last().unwrap())).collect())
    }

    pub fn ranges(&self) -> &[(Value, Value)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn space(&self) -> u128 {
        self.0
            .iter()
            .map(|&(lo, hi)| (hi - lo + 1) as u128)
            .fold(1u128, |a, w| a.saturating_mul(w))
    }
}

/// Calls `f` on every tuple of the cartesian product of `choices`.
fn for_each_tuple(choices: &[Vec<Value>], mut f: impl FnMut(&[Value])) {
    if choices.iter().any(|c| c.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; choices.len()];
    let mut tuple: Vec<Value> = choices.iter().map(|c| c[0]).collect();
    loop {
        f(&tuple);
        let mut k = choices.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                tuple[k] = choices[k][idx[k]];
                break;
            }
            idx[k] = 0;
            tuple[k] = choices[k][0];
        }
    }
}

fn distinct(xs: &[Value]) -> usize {
    xs.iter().collect::<BTreeSet<_>>().len()
}

fn expand(rv: &RangeVector) -> Vec<Vec<Value>> {
    rv.0.iter().map(|&(lo, hi)| (lo..=hi).collect()).collect()
}

/// Minimum and maximum distinct-value count by full enumeration, or `None`
/// past the enumeration limit.
pub fn card_bounds_enumerate(rv: &RangeVector) -> Option<(usize, usize)> {
    if rv.space() > ENUMERATION_LIMIT {
        return None;
    }
    let mut lo = usize::MAX;
    let mut hi = 0;
    for_each_tuple(&expand(rv), |t| {
        let c = distinct(t);
        lo = lo.min(c);
        hi = hi.max(c);
    });
    Some((lo, hi))
}

/// Stabbing points of a maximum set of pairwise disjoint ranges, chosen
/// greedily by earliest right end.
fn stabbing_points(rv: &RangeVector) -> Vec<Value> {
    let mut order: Vec<(Value, Value)> = rv.0.clone();
    order.sort_by_key(|&(lo, hi)| (hi, lo));
    let mut points = Vec::new();
    for (lo, hi) in order {
        if points.last().is_none_or(|&p| lo > p) {
            points.push(hi);
        }
    }
    points
}

pub fn card_down_greedy(rv: &RangeVector) -> usize {
    stabbing_points(rv).len()
}

/// Minimum number of distinct values; cross-checks enumeration against the
/// interval-stabbing count when enumeration is affordable.
pub fn card_down_exact(rv: &RangeVector) -> Result<usize, OracleError> {
    let greedy = card_down_greedy(rv);
    match card_bounds_enumerate(rv) {
        Some((enumeration, _)) if enumeration != greedy => Err(OracleError::Disagreement {
            enumeration,
            combinatorial: greedy,
        }),
        _ => Ok(greedy),
    }
}

/// Maximum matching between variables and the values of their ranges;
/// `result[i]` is the value matched to variable `i`.
fn max_matching(rv: &RangeVector) -> Vec<Option<Value>> {
    fn augment(
        i: usize,
        rv: &RangeVector,
        seen: &mut BTreeSet<Value>,
        owner: &mut HashMap<Value, usize>,
    ) -> bool {
        let (lo, hi) = rv.0[i];
        for v in lo..=hi {
            if !seen.insert(v) {
                continue;
            }
            let free = match owner.get(&v) {
                None => true,
                Some(&j) => augment(j, rv, seen, owner),
            };
            if free {
                owner.insert(v, i);
                return true;
            }
        }
        false
    }

    let mut owner: HashMap<Value, usize> = HashMap::new();
    for i in 0..rv.len() {
        augment(i, rv, &mut BTreeSet::new(), &mut owner);
    }
    let mut matched = vec![None; rv.len()];
    for (v, i) in owner {
        matched[i] = Some(v);
    }
    matched
}

pub fn card_up_matching(rv: &RangeVector) -> usize {
    max_matching(rv).iter().flatten().count()
}

/// Maximum number of distinct values (matching size), cross-checked against
/// enumeration when affordable.
pub fn card_up_exact(rv: &RangeVector) -> Result<usize, OracleError> {
    let matching = card_up_matching(rv);
    match card_bounds_enumerate(rv) {
        Some((_, enumeration)) if enumeration != matching => Err(OracleError::Disagreement {
            enumeration,
            combinatorial: matching,
        }),
        _ => Ok(matching),
    }
}

/// An assignment from the ranges using exactly `card_down_greedy` values.
pub fn min_card_assignment(rv: &RangeVector) -> Vec<Value> {
    let points = stabbing_points(rv);
    rv.0.iter()
        .map(|&(lo, hi)| {
            *points
                .iter()
                .find(|&&p| lo <= p && p <= hi)
                .expect("every range holds a stabbing point")
        })
        .collect()
}

/// An assignment from the ranges using exactly `card_up_matching` values.
pub fn max_card_assignment(rv: &RangeVector) -> Vec<Value> {
    max_matching(rv)
        .into_iter()
        .zip(&rv.0)
        .map(|(m, &(lo, _))| m.unwrap_or(lo))
        .collect()
}

/// The sequence S_0 = `from`, ..., S_n = `to`, where S_k takes its first k
/// entries from `to` and the rest from `from`.
pub fn flip_sequence(from: &[Value], to: &[Value]) -> Vec<Vec<Value>> {
    assert_eq!(from.len(), to.len());
    (0..=from.len())
        .map(|k| to[..k].iter().chain(&from[k..]).copied().collect())
        .collect()
}

/// For each p in [card↓, card↑], an assignment in the ranges with exactly p
/// distinct values, found along the flip sequence between minimum and
/// maximum witnesses. `None` if some p is not hit.
pub fn realize_all_cards(rv: &RangeVector) -> Option<Vec<(usize, Vec<Value>)>> {
    let lo = min_card_assignment(rv);
    let hi = max_card_assignment(rv);
    let seq = flip_sequence(&lo, &hi);
    let (down, up) = (distinct(&lo), distinct(&hi));
    let mut found = Vec::new();
    for p in down..=up {
        let s = seq.iter().find(|s| distinct(s) == p)?;
        found.push((p, s.clone()));
    }
    Some(found)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureResult {
    /// Closed domains of the X variables. Under BC these are the input sets
    /// cut to the closed bounds; meaningless when `disentailed`.
    pub domains: Vec<Vec<Value>>,
    pub n_domain: Vec<Value>,
    pub disentailed: bool,
}

impl ClosureResult {
    pub fn bounds(&self) -> Vec<(Value, Value)> {
        self.domains
            .iter()
            .map(|d| (d[0], *d.last().unwrap()))
            .collect()
    }

    pub fn n_bounds(&self) -> (Value, Value) {
        (self.n_domain[0], *self.n_domain.last().unwrap())
    }
}

/// Set of distinct-value counts reachable with `fixed` (variable, value)
/// pinned and every other variable ranging over its interval. Works on
/// bitmasks of used values, so `d` must be small.
fn reachable_cards(ranges: &[(Value, Value)], fixed: Option<(usize, Value)>) -> Vec<bool> {
    let mut masks: BTreeSet<u32> = BTreeSet::from([0]);
    for (i, &(lo, hi)) in ranges.iter().enumerate() {
        let (lo, hi) = match fixed {
            Some((j, b)) if j == i => (b, b),
            _ => (lo, hi),
        };
        let mut next = BTreeSet::new();
        for &m in &masks {
            for v in lo..=hi {
                next.insert(m | 1 << (v - 1));
            }
        }
        masks = next;
    }
    let mut cards = vec![false; ranges.len() + 1];
    for m in masks {
        cards[m.count_ones() as usize] = true;
    }
    cards
}

fn any_card_fits(cards: &[bool], kind: Kind, n_lo: Value, n_hi: Value) -> bool {
    cards
        .iter()
        .enumerate()
        .filter(|(_, &ok)| ok)
        .any(|(c, _)| (n_lo..=n_hi).any(|p| kind.holds(c, p)))
}

fn check_closure_guard(inst: &Instance) -> Result<(), OracleError> {
    if inst.d > MAX_CLOSURE_D {
        Err(OracleError::UniverseTooLarge(inst.d))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Level {
    Bounds,
    Values,
}

fn closure(inst: &Instance, kind: Kind, level: Level) -> Result<ClosureResult, OracleError> {
    check_closure_guard(inst)?;
    let mut doms = inst.domains();
    let mut ndom = inst.n_dom.clone();
    let range = |d: &Vec<Value>| (d[0], *d.last().unwrap());

    // Does X_i = b have a bound support?
    let x_ok = |doms: &Vec<Vec<Value>>, ndom: &Vec<Value>, i: usize, b: Value| {
        let ranges: Vec<_> = doms.iter().map(range).collect();
        let (n_lo, n_hi) = range(ndom);
        any_card_fits(&reachable_cards(&ranges, Some((i, b))), kind, n_lo, n_hi)
    };
    let n_ok = |doms: &Vec<Vec<Value>>, p: Value| {
        let ranges: Vec<_> = doms.iter().map(range).collect();
        any_card_fits(&reachable_cards(&ranges, None), kind, p, p)
    };

    let disentailed = |doms: Vec<Vec<Value>>, ndom| ClosureResult {
        domains: doms,
        n_domain: ndom,
        disentailed: true,
    };

    loop {
        let mut changed = false;
        for i in 0..doms.len() {
            match level {
                Level::Bounds => {
                    while let Some(&b) = doms[i].first() {
                        if x_ok(&doms, &ndom, i, b) {
                            break;
                        }
                        doms[i].remove(0);
                        changed = true;
                        if doms[i].is_empty() {
                            return Ok(disentailed(doms, ndom));
                        }
                    }
                    while let Some(&b) = doms[i].last() {
                        if x_ok(&doms, &ndom, i, b) {
                            break;
                        }
                        doms[i].pop();
                        changed = true;
                        if doms[i].is_empty() {
                            return Ok(disentailed(doms, ndom));
                        }
                    }
                }
                Level::Values => {
                    let keep: Vec<Value> = doms[i]
                        .iter()
                        .copied()
                        .filter(|&b| x_ok(&doms, &ndom, i, b))
                        .collect();
                    if keep.len() != doms[i].len() {
                        changed = true;
                        if keep.is_empty() {
                            doms[i].clear();
                            return Ok(disentailed(doms, ndom));
                        }
                        doms[i] = keep;
                    }
                }
            }
        }
        let keep: Vec<Value> = match level {
            Level::Bounds => {
                let lo = ndom.iter().position(|&p| n_ok(&doms, p));
                let hi = ndom.iter().rposition(|&p| n_ok(&doms, p));
                match (lo, hi) {
                    (Some(lo), Some(hi)) => ndom[lo..=hi].to_vec(),
                    _ => Vec::new(),
                }
            }
            Level::Values => ndom.iter().copied().filter(|&p| n_ok(&doms, p)).collect(),
        };
        if keep.len() != ndom.len() {
            changed = true;
            ndom = keep;
            if ndom.is_empty() {
                return Ok(disentailed(doms, ndom));
            }
        }
        if !changed {
            return Ok(ClosureResult {
                domains: doms,
                n_domain: ndom,
                disentailed: false,
            });
        }
    }
}

/// Shrinks every variable's bounds (and N's) until each has a bound support
/// for `kind`.
pub fn bc_closure(inst: &Instance, kind: Kind) -> Result<ClosureResult, OracleError> {
    closure(inst, kind, Level::Bounds)
}

/// Removes every value (of the X variables and of N) lacking a bound support
/// for `kind`.
pub fn rc_closure(inst: &Instance, kind: Kind) -> Result<ClosureResult, OracleError> {
    closure(inst, kind, Level::Values)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionCount {
    pub count: u64,
    /// Up to the requested number of (assignment, N) pairs, in lexicographic
    /// order.
    pub witnesses: Vec<(Vec<Value>, Value)>,
}

/// Exact model count over the cartesian product of the domains (and N's).
pub fn enumerate_solutions(inst: &Instance, cap: usize) -> Result<SolutionCount, OracleError> {
    let doms = inst.domains();
    let space = doms
        .iter()
        .map(|d| d.len() as u128)
        .fold(inst.n_dom.len() as u128, |a, w| a.saturating_mul(w));
    if space > ENUMERATION_LIMIT {
        return Err(OracleError::TooLarge(space));
    }
    let mut count = 0;
    let mut witnesses = Vec::new();
    for_each_tuple(&doms, |t| {
        let c = distinct(t);
        for &p in &inst.n_dom {
            if inst.kind.holds(c, p) {
                count += 1;
                if witnesses.len() < cap {
                    witnesses.push((t.to_vec(), p));
                }
            }
        }
    });
    Ok(SolutionCount { count, witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running(n_dom: Vec<Value>, kind: Kind) -> Instance {
        Instance::from_domains(
            5,
            vec![
                vec![1, 2, 3, 5],
                vec![2],
                vec![2, 3, 4],
                vec![4],
                vec![3, 4],
            ],
            n_dom,
            kind,
        )
        .unwrap()
    }

    fn separation() -> Instance {
        Instance::from_domains(4, vec![vec![1, 2], vec![3, 4]], vec![1], Kind::NValue).unwrap()
    }

    #[test]
    fn running_example_cards() {
        let rv = RangeVector::new(vec![(1, 5), (2, 2), (2, 4), (4, 4), (3, 4)]);
        assert_eq!(card_down_exact(&rv), Ok(2));
        assert_eq!(card_up_exact(&rv), Ok(4));
    }

    #[test]
    fn trivial_cards() {
        let same = RangeVector::new(vec![(2, 5); 4]);
        assert_eq!(card_down_exact(&same), Ok(1));
        let singles = RangeVector::new(vec![(1, 1), (3, 3), (5, 5), (7, 7)]);
        assert_eq!(card_down_exact(&singles), Ok(4));
        let pinned = RangeVector::new(vec![(3, 3); 5]);
        assert_eq!(card_up_exact(&pinned), Ok(1));
    }

    #[test]
    fn four_vars_three_values() {
        let rv = RangeVector::new(vec![(2, 4); 4]);
        let mut best = 0;
        for_each_tuple(&expand(&rv), |t| best = best.max(distinct(t)));
        assert_eq!(best, 3);
        assert_eq!(card_up_exact(&rv), Ok(best));
    }

    #[test]
    fn witnesses_hit_extremes() {
        let rv = RangeVector::new(vec![(1, 5), (2, 2), (2, 4), (4, 4), (3, 4)]);
        assert_eq!(distinct(&min_card_assignment(&rv)), 2);
        assert_eq!(distinct(&max_card_assignment(&rv)), 4);
        let all = realize_all_cards(&rv).unwrap();
        assert_eq!(
            all.iter().map(|(p, _)| *p).collect::<Vec<_>>(),
            vec![2, 3, 4]
        );
    }

    #[test]
    fn running_example_bc_nvalue() {
        let r = bc_closure(&running(vec![1, 2, 5], Kind::NValue), Kind::NValue).unwrap();
        assert!(!r.disentailed);
        assert_eq!(r.bounds(), vec![(2, 2), (2, 2), (2, 4), (4, 4), (4, 4)]);
        assert_eq!(r.n_domain, vec![2]);
    }

    #[test]
    fn separation_disentailed() {
        assert!(bc_closure(&separation(), Kind::NValue).unwrap().disentailed);
        assert_eq!(enumerate_solutions(&separation(), 10).unwrap().count, 0);
    }

    #[test]
    fn atmost_with_n_equal_to_n_prunes_nothing() {
        let inst = running(vec![5], Kind::AtMost);
        let r = bc_closure(&inst, Kind::AtMost).unwrap();
        assert_eq!(r.domains, inst.domains());
        assert_eq!(r.n_domain, vec![5]);
    }

    #[test]
    fn running_example_rc_atmost() {
        let r = rc_closure(&running(vec![1, 2], Kind::AtMost), Kind::AtMost).unwrap();
        assert_eq!(r.domains[0], vec![2]);
        assert_eq!(r.domains[4], vec![4]);
        assert_eq!(r.domains[2], vec![2, 4]);
        assert_eq!(r.n_domain, vec![2]);
    }

    #[test]
    fn rc_matches_bc_without_holes() {
        let inst = Instance::from_domains(
            4,
            vec![vec![1, 2, 3], vec![2, 3], vec![3, 4]],
            vec![1, 2],
            Kind::AtMost,
        )
        .unwrap();
        let bc = bc_closure(&inst, Kind::AtMost).unwrap();
        let rc = rc_closure(&inst, Kind::AtMost).unwrap();
        assert_eq!(bc.bounds(), rc.bounds());
    }

    #[test]
    fn atleast_prunes_n5() {
        let r = bc_closure(&running(vec![1, 2, 5], Kind::AtLeast), Kind::AtLeast).unwrap();
        assert_eq!(r.n_domain, vec![1, 2]);
    }

    #[test]
    fn enumeration_counts() {
        let one = Instance::from_domains(2, vec![vec![1, 2]], vec![1], Kind::NValue).unwrap();
        assert_eq!(enumerate_solutions(&one, 5).unwrap().count, 2);
        let sat = enumerate_solutions(&running(vec![4], Kind::NValue), 3).unwrap();
        assert!(sat.count >= 1);
        let (xs, p) = &sat.witnesses[0];
        assert_eq!(distinct(xs), *p as usize);
    }

    #[test]
    fn guard_rejects_large() {
        let big =
            Instance::from_domains(10, vec![(1..=10).collect(); 8], vec![3], Kind::AtMost).unwrap();
        assert!(matches!(
            enumerate_solutions(&big, 1),
            Err(OracleError::TooLarge(_))
        ));
    }
}
