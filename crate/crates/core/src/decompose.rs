//! Builders that post the occurrence, pyramid and excess decompositions of
//! the NValue family onto an [`Engine`].
//!
//! Every builder introduces its own auxiliary variables and returns a
//! [`DecompositionPlan`] describing them, so callers can inspect or inject
//! into e.g. the pyramid counters `M[l,u]`.

use std::collections::BTreeMap;

use crate::domain::Value;
use crate::engine::{Engine, EngineError, PropId, VarId};
use crate::propagators::{
    affine_leq, bounds_clause, domain_bitmap, leq, reified_interval, sum_eq_chain, sum_lower,
    ternary_sum, upper_bound_channel, value_support, BoundAtom, Consistency, SupportMode,
};

/// Relation between the occurrence count and `N` in the simple decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Leq,
    Geq,
}

/// Flavour of the AtMostNValue pyramid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtMostVariant {
    /// Interval flags `A[i,l,u]` reified on bounds.
    BasicBC,
    /// Order literals `Z[i,j] <=> X_i <= j` and one clause per interval.
    FastBC,
    /// `FastBC` plus dyadic interval flags that remove whole intervals.
    RC,
}

/// Group of introduced variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Value-used flags of the occurrence decomposition.
    Occurrence,
    /// Interval membership flags `A[i,l,u]`.
    IntervalFlag,
    /// Pyramid counters `M[l,u]`.
    Used,
    /// Order literals `Z[i,j]`.
    Order,
    /// Dyadic membership flags `B[i,l,l+2^k-1]`, diagonal included.
    Dyadic,
    /// Diagonal of the dyadic flags, `B[i,j,j] <=> X_i = j`.
    Bitmap,
    /// Excess counters `E[l,u]`.
    Excess,
    /// Partial sums of the chained linear equalities.
    PartialSum,
}

/// Tag naming the rule a propagator implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// `X_i = j -> B_j = 1` and `B_j = 1 -> OR_i X_i = j`.
    OccurrenceSupport,
    /// Ternary chain of `sum B_j` against `N`.
    OccurrenceSum,
    /// `S <= N` or `N <= S` when the occurrence relation is not equality.
    OccurrenceBound,
    /// `A[i,l,u] = 1 <=> X_i in [l,u]`.
    IntervalReif,
    /// `A[i,l,u] <= M[l,u]`.
    UsedLink,
    /// `M[1,u] = M[1,k] + M[k+1,u]`.
    UsedPyramid,
    /// `M[1,d] <= N`.
    UsedBound,
    /// `M[1,d] = sum M[j,j]`.
    ImpliedSum,
    /// `Z[i,j] = 1 <=> X_i <= j`.
    OrderChannel,
    /// `Z[i,l-1] = 1 \/ Z[i,u] = 0 \/ M[l,u] > 0`.
    OrderClause,
    /// `B[i,j,j] = 1 <=> X_i = j`.
    Bitmap,
    /// A zero dyadic interval zeroes both of its halves.
    HalvingClause,
    /// `M[l,u] = 0` zeroes the two dyadic intervals covering `[l,u]`.
    RangeClause,
    /// `E[l,u] >= sum_i A[i,l,u] - (u-l+1)`.
    ExcessLower,
    /// `E[1,u] = E[1,k] + E[k+1,u]`.
    ExcessPyramid,
    /// `N <= n - E[1,d]`.
    ExcessBound,
}

/// Variables indexed by an interval `[l,u]` with `1 <= l <= u <= d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalTable {
    d: Value,
    ids: Vec<VarId>,
}

impl IntervalTable {
    fn build(d: Value, mut make: impl FnMut(Value, Value) -> VarId) -> Self {
        let mut ids = Vec::with_capacity((d * (d + 1) / 2) as usize);
        for l in 1..=d {
            for u in l..=d {
                ids.push(make(l, u));
            }
        }
        IntervalTable { d, ids }
    }

    /// One 0/1 table per variable, allocated interval-major so that the
    /// flags of one interval are adjacent in the engine.
    fn flags_per_var(engine: &mut Engine, d: Value, count: usize) -> Vec<Self> {
        let mut ids = vec![Vec::with_capacity((d * (d + 1) / 2) as usize); count];
        for _ in 0..d * (d + 1) / 2 {
            for t in &mut ids {
                t.push(engine.new_interval_var(0, 1));
            }
        }
        ids.into_iter()
            .map(|ids| IntervalTable { d, ids })
            .collect()
    }

    fn offset(&self, l: Value, u: Value) -> usize {
        assert!(
            1 <= l && l <= u && u <= self.d,
            "interval [{l},{u}] outside [1,{}]",
            self.d
        );
        let (l, u, d) = (l as usize, u as usize, self.d as usize);
        (l - 1) * (2 * d + 2 - l) / 2 + (u - l)
    }

    pub fn get(&self, l: Value, u: Value) -> VarId {
        self.ids[self.offset(l, u)]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[VarId] {
        &self.ids
    }
}

/// Dyadic flags of one variable, keyed by `(l, k)` for the interval
/// `[l, l + 2^k - 1]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DyadicFlags {
    flags: BTreeMap<(Value, u32), VarId>,
}

impl DyadicFlags {
    pub fn get(&self, l: Value, k: u32) -> Option<VarId> {
        self.flags.get(&(l, k)).copied()
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

/// What a builder introduced and posted.
#[derive(Debug, Clone, Default)]
pub struct DecompositionPlan {
    pub xs: Vec<VarId>,
    pub n: Option<VarId>,
    pub d: Value,
    pub occurrence: Vec<VarId>,
    /// One table per variable; NValue plans hold the AtMost and AtLeast
    /// tables back to back.
    pub interval_flags: Vec<IntervalTable>,
    pub used: Option<IntervalTable>,
    pub order: Vec<Vec<VarId>>,
    pub dyadic: Vec<DyadicFlags>,
    pub bitmap: Vec<Vec<VarId>>,
    pub excess: Option<IntervalTable>,
    pub partial_sums: Vec<VarId>,
    pub rules: BTreeMap<Rule, Vec<PropId>>,
}

impl DecompositionPlan {
    fn new(xs: &[VarId], n: VarId, d: Value) -> Self {
        DecompositionPlan {
            xs: xs.to_vec(),
            n: Some(n),
            d,
            ..Default::default()
        }
    }

    /// Number of variables introduced in `family`.
    pub fn count(&self, family: Family) -> usize {
        match family {
            Family::Occurrence => self.occurrence.len(),
            Family::IntervalFlag => self.interval_flags.iter().map(IntervalTable::len).sum(),
            Family::Used => self.used.as_ref().map_or(0, IntervalTable::len),
            Family::Order => self.order.iter().map(Vec::len).sum(),
            Family::Dyadic => self.dyadic.iter().map(DyadicFlags::len).sum(),
            Family::Bitmap => self.bitmap.iter().map(Vec::len).sum(),
            Family::Excess => self.excess.as_ref().map_or(0, IntervalTable::len),
            Family::PartialSum => self.partial_sums.len(),
        }
    }

    /// Number of propagators posted for `rule`.
    pub fn posted(&self, rule: Rule) -> usize {
        self.rules.get(&rule).map_or(0, Vec::len)
    }

    pub fn used_at(&self, l: Value, u: Value) -> Option<VarId> {
        self.used.as_ref().map(|t| t.get(l, u))
    }

    pub fn excess_at(&self, l: Value, u: Value) -> Option<VarId> {
        self.excess.as_ref().map(|t| t.get(l, u))
    }

    fn record(&mut self, rule: Rule, engine: &Engine, start: usize) {
        self.rules
            .entry(rule)
            .or_default()
            .extend(engine.propagators_since(start));
    }

    /// Folds the variables and rules of `other` into this plan.
    pub fn merge(&mut self, other: DecompositionPlan) {
        self.occurrence.extend(other.occurrence);
        self.interval_flags.extend(other.interval_flags);
        self.used = self.used.take().or(other.used);
        self.order.extend(other.order);
        self.dyadic.extend(other.dyadic);
        self.bitmap.extend(other.bitmap);
        self.excess = self.excess.take().or(other.excess);
        self.partial_sums.extend(other.partial_sums);
        for (rule, ids) in other.rules {
            self.rules.entry(rule).or_default().extend(ids);
        }
    }
}

/// Largest universe value over `xs`; the values of every `X_i` lie in `[1, d]`.
fn universe_top(engine: &Engine, xs: &[VarId]) -> Value {
    assert!(!xs.is_empty(), "decomposition over no variables");
    xs.iter()
        .map(|&x| {
            let (lo, hi) = engine.domain(x).universe();
            assert!(lo >= 1, "decomposed variables take values in [1, d]");
            hi
        })
        .max()
        .unwrap()
}

fn floor_log2(v: Value) -> u32 {
    31 - (v as u32).leading_zeros()
}

/// Runs `f` and files every propagator it posts under `rule`.
fn posting<T>(
    plan: &mut DecompositionPlan,
    engine: &mut Engine,
    rule: Rule,
    f: impl FnOnce(&mut Engine) -> Result<T, EngineError>,
) -> Result<T, EngineError> {
    let start = engine.num_propagators();
    let out = f(engine)?;
    plan.record(rule, engine, start);
    Ok(out)
}

/// The simple decomposition: one value-used flag per value and a sum.
pub fn build_occs(
    engine: &mut Engine,
    xs: &[VarId],
    n: VarId,
    relation: Relation,
    mode: SupportMode,
) -> Result<DecompositionPlan, EngineError> {
    let d = universe_top(engine, xs);
    let mut plan = DecompositionPlan::new(xs, n, d);
    plan.occurrence = (1..=d).map(|_| engine.new_interval_var(0, 1)).collect();
    let flags = plan.occurrence.clone();
    posting(&mut plan, engine, Rule::OccurrenceSupport, |e| {
        for (j, &b) in flags.iter().enumerate() {
            e.post(value_support(b, xs, j as Value + 1, mode))?;
        }
        Ok(())
    })?;
    let total = match relation {
        Relation::Eq => n,
        Relation::Leq | Relation::Geq => engine.new_interval_var(0, d),
    };
    let partial = posting(&mut plan, engine, Rule::OccurrenceSum, |e| {
        sum_eq_chain(e, &flags, total)
    })?;
    plan.partial_sums = partial;
    if total != n {
        plan.partial_sums.push(total);
        posting(
            &mut plan,
            engine,
            Rule::OccurrenceBound,
            |e| match relation {
                Relation::Leq => e.post(leq(total, n)),
                _ => e.post(leq(n, total)),
            },
        )?;
    }
    Ok(plan)
}

/// Pyramid counters `M[l,u]` with domain `[0, min(u-l+1, n)]`, the sums
/// `M[1,u] = M[1,k] + M[k+1,u]` and `M[1,d] <= N`.
fn used_pyramid(
    plan: &mut DecompositionPlan,
    engine: &mut Engine,
    n: VarId,
    implied_sum: bool,
) -> Result<(), EngineError> {
    let (d, count) = (plan.d, plan.xs.len() as Value);
    let used = IntervalTable::build(d, |l, u| engine.new_interval_var(0, (u - l + 1).min(count)));
    posting(plan, engine, Rule::UsedPyramid, |e| {
        for u in 2..=d {
            for k in 1..u {
                e.post(ternary_sum(
                    used.get(1, u),
                    used.get(1, k),
                    used.get(k + 1, u),
                ))?;
            }
        }
        Ok(())
    })?;
    posting(plan, engine, Rule::UsedBound, |e| {
        e.post(leq(used.get(1, d), n))
    })?;
    if implied_sum && d >= 2 {
        let partial = posting(plan, engine, Rule::ImpliedSum, |e| {
            let mut partial = Vec::new();
            let mut prefix = used.get(1, 1);
            for k in 2..=d {
                let next = if k == d {
                    used.get(1, d)
                } else {
                    let s = e.new_interval_var(0, k.min(count));
                    partial.push(s);
                    s
                };
                e.post(ternary_sum(next, prefix, used.get(k, k)))?;
                prefix = next;
            }
            Ok(partial)
        })?;
        plan.partial_sums.extend(partial);
    }
    plan.used = Some(used);
    Ok(())
}

/// AtMostNValue as interval counters. `implied_sum` adds the redundant
/// `M[1,d] = sum_j M[j,j]` chain.
pub fn build_atmost_pyramid(
    engine: &mut Engine,
    xs: &[VarId],
    n: VarId,
    variant: AtMostVariant,
    implied_sum: bool,
) -> Result<DecompositionPlan, EngineError> {
    let d = universe_top(engine, xs);
    let mut plan = DecompositionPlan::new(xs, n, d);
    used_pyramid(&mut plan, engine, n, implied_sum)?;
    let used = plan.used.clone().expect("pyramid built");

    if variant == AtMostVariant::BasicBC {
        let tables = IntervalTable::flags_per_var(engine, d, xs.len());
        posting(&mut plan, engine, Rule::IntervalReif, |e| {
            for (&x, flags) in xs.iter().zip(&tables) {
                for l in 1..=d {
                    for u in l..=d {
                        e.post(reified_interval(
                            x,
                            l,
                            u,
                            flags.get(l, u),
                            Consistency::Bound,
                        ))?;
                    }
                }
            }
            Ok(())
        })?;
        posting(&mut plan, engine, Rule::UsedLink, |e| {
            for l in 1..=d {
                for u in l..=d {
                    for flags in &tables {
                        e.post(leq(flags.get(l, u), used.get(l, u)))?;
                    }
                }
            }
            Ok(())
        })?;
        plan.interval_flags = tables;
        return Ok(plan);
    }

    for &x in xs {
        let order: Vec<VarId> = (1..=d).map(|_| engine.new_interval_var(0, 1)).collect();
        posting(&mut plan, engine, Rule::OrderChannel, |e| {
            e.post(upper_bound_channel(x, &order))
        })?;
        posting(&mut plan, engine, Rule::OrderClause, |e| {
            let mut atoms = Vec::with_capacity(3);
            for l in 1..=d {
                for u in l..=d {
                    atoms.clear();
                    if l > 1 {
                        atoms.push(BoundAtom::eq(order[(l - 2) as usize], 1));
                    }
                    atoms.push(BoundAtom::eq(order[(u - 1) as usize], 0));
                    atoms.push(BoundAtom::ge(used.get(l, u), 1));
                    e.post(bounds_clause(&atoms))?;
                }
            }
            Ok(())
        })?;
        plan.order.push(order);
    }

    if variant == AtMostVariant::RC {
        let top = floor_log2(d);
        for &x in xs {
            let mut dyadic = DyadicFlags::default();
            for k in 0..=top {
                let len = 1 << k;
                for l in 1..=d - len + 1 {
                    dyadic.flags.insert((l, k), engine.new_interval_var(0, 1));
                }
            }
            let diag: Vec<VarId> = (1..=d).map(|j| dyadic.get(j, 0).unwrap()).collect();
            posting(&mut plan, engine, Rule::Bitmap, |e| {
                e.post(domain_bitmap(x, &diag))
            })?;
            posting(&mut plan, engine, Rule::HalvingClause, |e| {
                for k in 0..top {
                    let half = 1 << k;
                    for j in 1..=d - 2 * half + 1 {
                        let parent = dyadic.get(j, k + 1).unwrap();
                        for child in [dyadic.get(j, k).unwrap(), dyadic.get(j + half, k).unwrap()] {
                            e.post(bounds_clause(&[
                                BoundAtom::eq(parent, 1),
                                BoundAtom::eq(child, 0),
                            ]))?;
                        }
                    }
                }
                Ok(())
            })?;
            posting(&mut plan, engine, Rule::RangeClause, |e| {
                for l in 1..=d {
                    for u in l..=d {
                        let k = floor_log2(u - l + 1);
                        let first = dyadic.get(l, k).unwrap();
                        let last = dyadic.get(u - (1 << k) + 1, k).unwrap();
                        let m = BoundAtom::ne(used.get(l, u), 0);
                        e.post(bounds_clause(&[m, BoundAtom::eq(first, 0)]))?;
                        if last != first {
                            e.post(bounds_clause(&[m, BoundAtom::eq(last, 0)]))?;
                        }
                    }
                }
                Ok(())
            })?;
            plan.bitmap.push(diag);
            plan.dyadic.push(dyadic);
        }
    }
    Ok(plan)
}

/// AtLeastNValue as excess counters `E[l,u]` with domain `[0, n]`.
pub fn build_atleast_pyramid(
    engine: &mut Engine,
    xs: &[VarId],
    n: VarId,
    mode: Consistency,
) -> Result<DecompositionPlan, EngineError> {
    let d = universe_top(engine, xs);
    let count = xs.len() as Value;
    let mut plan = DecompositionPlan::new(xs, n, d);
    let excess = IntervalTable::build(d, |_, _| engine.new_interval_var(0, count));
    let tables = IntervalTable::flags_per_var(engine, d, xs.len());
    posting(&mut plan, engine, Rule::IntervalReif, |e| {
        for (&x, flags) in xs.iter().zip(&tables) {
            for l in 1..=d {
                for u in l..=d {
                    e.post(reified_interval(x, l, u, flags.get(l, u), mode))?;
                }
            }
        }
        Ok(())
    })?;
    posting(&mut plan, engine, Rule::ExcessLower, |e| {
        let mut column = Vec::with_capacity(tables.len());
        for l in 1..=d {
            for u in l..=d {
                column.clear();
                column.extend(tables.iter().map(|t| t.get(l, u)));
                e.post(sum_lower(excess.get(l, u), &column, u - l + 1))?;
            }
        }
        Ok(())
    })?;
    posting(&mut plan, engine, Rule::ExcessPyramid, |e| {
        for u in 2..=d {
            for k in 1..u {
                e.post(ternary_sum(
                    excess.get(1, u),
                    excess.get(1, k),
                    excess.get(k + 1, u),
                ))?;
            }
        }
        Ok(())
    })?;
    posting(&mut plan, engine, Rule::ExcessBound, |e| {
        e.post(affine_leq(n, excess.get(1, d), count))
    })?;
    plan.interval_flags = tables;
    plan.excess = Some(excess);
    Ok(plan)
}

/// NValue as the conjunction of the AtMost and AtLeast pyramids. The two
/// halves share only `X` and `N`.
pub fn build_nvalue(
    engine: &mut Engine,
    xs: &[VarId],
    n: VarId,
    level: Consistency,
) -> Result<DecompositionPlan, EngineError> {
    let variant = match level {
        Consistency::Bound => AtMostVariant::BasicBC,
        Consistency::Range => AtMostVariant::RC,
    };
    let mut plan = build_atmost_pyramid(engine, xs, n, variant, true)?;
    plan.merge(build_atleast_pyramid(engine, xs, n, level)?);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Action, Status};

    fn running_example(e: &mut Engine, n_dom: &[Value]) -> (Vec<VarId>, VarId) {
        let doms: [&[Value]; 5] = [&[1, 2, 3, 5], &[2], &[2, 3, 4], &[4], &[3, 4]];
        let xs = doms.iter().map(|d| e.new_var(1, 5, d).unwrap()).collect();
        let n = e.new_var(1, 5, n_dom).unwrap();
        (xs, n)
    }

    fn values(e: &Engine, v: VarId) -> Vec<Value> {
        e.domain(v).values()
    }

    #[test]
    fn interval_table_indexing() {
        let mut e = Engine::new();
        let t = IntervalTable::build(4, |_, _| e.new_interval_var(0, 1));
        assert_eq!(t.len(), 10);
        let mut seen: Vec<_> = (1..=4)
            .flat_map(|l| (l..=4).map(move |u| (l, u)))
            .map(|(l, u)| t.get(l, u))
            .collect();
        seen.dedup();
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn atmost_pyramid_worked_example() {
        for variant in [
            AtMostVariant::BasicBC,
            AtMostVariant::FastBC,
            AtMostVariant::RC,
        ] {
            let mut e = Engine::new();
            let (xs, n) = running_example(&mut e, &[1, 2]);
            build_atmost_pyramid(&mut e, &xs, n, variant, false).unwrap();
            assert_eq!(e.propagate(), Status::Fixpoint);
            assert_eq!(values(&e, n), vec![2], "{variant:?}");
            assert_eq!(values(&e, xs[0]), vec![2]);
            assert_eq!(values(&e, xs[4]), vec![4]);
            // Range consistency also drops the interior 3: X_3 = 3 forces
            // three distinct values with X_2 = 2 and X_4 = 4.
            let x3: &[Value] = if variant == AtMostVariant::RC {
                &[2, 4]
            } else {
                &[2, 3, 4]
            };
            assert_eq!(values(&e, xs[2]), x3);
        }
    }

    #[test]
    fn atmost_single_fixed_variable() {
        let mut e = Engine::new();
        let x = e.new_var(1, 4, &[3]).unwrap();
        let n = e.new_var(1, 4, &[1, 2, 3, 4]).unwrap();
        let plan = build_atmost_pyramid(&mut e, &[x], n, AtMostVariant::BasicBC, true).unwrap();
        e.propagate();
        assert_eq!(e.domain(plan.used_at(3, 3).unwrap()).value(), Some(1));
        assert!(e.domain(n).min() >= 1);
    }

    #[test]
    fn atmost_rc_interval_removal() {
        let mut e = Engine::new();
        let x = e.new_interval_var(1, 10);
        let n = e.new_var(1, 10, &[1]).unwrap();
        let plan = build_atmost_pyramid(&mut e, &[x], n, AtMostVariant::RC, false).unwrap();
        assert_eq!(e.propagate(), Status::Fixpoint);
        let m59 = plan.used_at(5, 9).unwrap();
        e.tighten(m59, Action::Assign(0));
        assert_eq!(e.propagate(), Status::Fixpoint);
        assert_eq!(values(&e, x), vec![1, 2, 3, 4, 10]);
        let b = &plan.dyadic[0];
        for (l, k) in [
            (5, 2),
            (6, 2),
            (5, 1),
            (7, 1),
            (5, 0),
            (6, 0),
            (7, 0),
            (8, 0),
            (9, 0),
        ] {
            assert_eq!(
                e.domain(b.get(l, k).unwrap()).value(),
                Some(0),
                "B[{l},{k}]"
            );
        }
    }

    #[test]
    fn atleast_worked_example() {
        let mut e = Engine::new();
        let (xs, n) = running_example(&mut e, &[1, 2, 5]);
        let plan = build_atleast_pyramid(&mut e, &xs, n, Consistency::Bound).unwrap();
        assert_eq!(e.propagate(), Status::Fixpoint);
        assert!(e.domain(plan.excess_at(2, 4).unwrap()).min() >= 1);
        assert!(e.domain(plan.excess_at(1, 5).unwrap()).min() >= 1);
        assert_eq!(values(&e, n), vec![1, 2]);
    }

    #[test]
    fn atleast_identical_singletons() {
        // card_up over three copies of {2} is 1, so E[2,2] >= 2 and N <= 1.
        let mut e = Engine::new();
        let xs: Vec<_> = (0..3).map(|_| e.new_var(1, 3, &[2]).unwrap()).collect();
        let n = e.new_interval_var(1, 3);
        let plan = build_atleast_pyramid(&mut e, &xs, n, Consistency::Bound).unwrap();
        e.propagate();
        assert!(e.domain(plan.excess_at(2, 2).unwrap()).min() >= 2);
        assert_eq!(values(&e, n), vec![1]);
    }

    #[test]
    fn atleast_disjoint_singletons() {
        let mut e = Engine::new();
        let xs: Vec<_> = (1..=3).map(|v| e.new_var(1, 3, &[v]).unwrap()).collect();
        let n = e.new_interval_var(1, 3);
        let plan = build_atleast_pyramid(&mut e, &xs, n, Consistency::Bound).unwrap();
        e.propagate();
        assert_eq!(e.domain(plan.excess_at(1, 3).unwrap()).min(), 0);
        assert_eq!(values(&e, n), vec![1, 2, 3]);
    }

    #[test]
    fn nvalue_worked_example() {
        for level in [Consistency::Bound, Consistency::Range] {
            let mut e = Engine::new();
            let (xs, n) = running_example(&mut e, &[1, 2, 5]);
            build_nvalue(&mut e, &xs, n, level).unwrap();
            assert_eq!(e.propagate(), Status::Fixpoint);
            let got: Vec<_> = xs.iter().map(|&x| values(&e, x)).collect();
            let x3 = if level == Consistency::Range {
                vec![2, 4]
            } else {
                vec![2, 3, 4]
            };
            assert_eq!(got, vec![vec![2], vec![2], x3, vec![4], vec![4]]);
            assert_eq!(values(&e, n), vec![2]);
        }
    }

    #[test]
    fn nvalue_single_variable() {
        let mut e = Engine::new();
        let x = e.new_var(1, 7, &[2, 7]).unwrap();
        let n = e.new_var(1, 2, &[1, 2]).unwrap();
        build_nvalue(&mut e, &[x], n, Consistency::Bound).unwrap();
        e.propagate();
        assert_eq!(values(&e, n), vec![1]);
        assert_eq!(values(&e, x), vec![2, 7]);
    }

    #[test]
    fn separation_instance() {
        let setup = |e: &mut Engine| {
            let x1 = e.new_var(1, 4, &[1, 2]).unwrap();
            let x2 = e.new_var(1, 4, &[3, 4]).unwrap();
            let n = e.new_var(1, 4, &[1]).unwrap();
            (vec![x1, x2], n)
        };
        for mode in [SupportMode::Bound, SupportMode::Domain] {
            let mut e = Engine::new();
            let (xs, n) = setup(&mut e);
            build_occs(&mut e, &xs, n, Relation::Eq, mode).unwrap();
            assert_eq!(e.propagate(), Status::Fixpoint);
            assert_eq!(values(&e, xs[0]), vec![1, 2]);
            assert_eq!(values(&e, xs[1]), vec![3, 4]);
        }
        let mut e = Engine::new();
        let (xs, n) = setup(&mut e);
        build_nvalue(&mut e, &xs, n, Consistency::Bound).unwrap();
        assert_eq!(e.propagate(), Status::Conflict);
    }

    #[test]
    fn occs_distinct_fixed_forces_n() {
        let mut e = Engine::new();
        let xs: Vec<_> = [1, 3, 4]
            .iter()
            .map(|&v| e.new_var(1, 4, &[v]).unwrap())
            .collect();
        let n = e.new_interval_var(1, 4);
        build_occs(&mut e, &xs, n, Relation::Eq, SupportMode::Domain).unwrap();
        e.propagate();
        assert_eq!(e.domain(n).value(), Some(3));
    }

    #[test]
    fn structural_counts() {
        for n in 1..=4usize {
            for d in 1..=6 {
                let du = d as usize;
                let tri = du * (du + 1) / 2;
                let mut e = Engine::new();
                let xs: Vec<_> = (0..n).map(|_| e.new_interval_var(1, d)).collect();
                let nv = e.new_interval_var(1, d.max(n as Value));
                let basic =
                    build_atmost_pyramid(&mut e, &xs, nv, AtMostVariant::BasicBC, false).unwrap();
                assert_eq!(basic.count(Family::Used), tri);
                assert_eq!(basic.count(Family::IntervalFlag), n * tri);
                assert_eq!(basic.posted(Rule::UsedPyramid), du * (du - 1) / 2);
                let rc = build_atmost_pyramid(&mut e, &xs, nv, AtMostVariant::RC, false).unwrap();
                assert_eq!(rc.count(Family::Order), n * du);
                assert_eq!(rc.count(Family::IntervalFlag), 0);
                assert_eq!(rc.count(Family::Bitmap), n * du);
                let per_var: usize = (0..=floor_log2(d)).map(|k| du + 1 - (1usize << k)).sum();
                assert_eq!(rc.count(Family::Dyadic), n * per_var);
                let al = build_atleast_pyramid(&mut e, &xs, nv, Consistency::Bound).unwrap();
                assert_eq!(al.count(Family::Excess), tri);
            }
        }
    }
}
