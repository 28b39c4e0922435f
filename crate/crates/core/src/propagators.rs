//! Fixed-arity filtering rules. Every decomposition in [`crate::decompose`]
//! is assembled from these.

use crate::domain::Value;
use crate::engine::{Conflict, Engine, EngineError, Events, Guard, Store, VarId};

/// Filtering strength of an interval reification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Consistency {
    /// Only bounds of the reified variable move.
    Bound,
    /// Interior values are removed as well.
    Range,
}

/// Filtering strength of a value-support rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SupportMode {
    /// Candidates are judged on ranges; only bounds are pruned.
    Bound,
    /// Candidates are judged on full domains; values are pruned anywhere.
    Domain,
}

/// Relation of a bound atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Le(Value),
    Ge(Value),
    Eq(Value),
    Ne(Value),
}

/// A literal over an integer variable, e.g. `Z = 1` or `M > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundAtom {
    pub var: VarId,
    pub rel: Rel,
}

impl BoundAtom {
    pub fn le(var: VarId, k: Value) -> Self {
        BoundAtom {
            var,
            rel: Rel::Le(k),
        }
    }
    pub fn ge(var: VarId, k: Value) -> Self {
        BoundAtom {
            var,
            rel: Rel::Ge(k),
        }
    }
    pub fn eq(var: VarId, k: Value) -> Self {
        BoundAtom {
            var,
            rel: Rel::Eq(k),
        }
    }
    pub fn ne(var: VarId, k: Value) -> Self {
        BoundAtom {
            var,
            rel: Rel::Ne(k),
        }
    }

    fn truth(&self, s: &Store) -> Option<bool> {
        let d = s.domain(self.var);
        match self.rel {
            Rel::Le(k) if d.max() <= k => Some(true),
            Rel::Le(k) if d.min() > k => Some(false),
            Rel::Ge(k) if d.min() >= k => Some(true),
            Rel::Ge(k) if d.max() < k => Some(false),
            Rel::Eq(k) if !d.contains(k) => Some(false),
            Rel::Eq(k) if d.value() == Some(k) => Some(true),
            Rel::Ne(k) if !d.contains(k) => Some(true),
            Rel::Ne(k) if d.value() == Some(k) => Some(false),
            _ => None,
        }
    }

    fn enforce(&self, s: &mut Store) -> Result<bool, Conflict> {
        match self.rel {
            Rel::Le(k) => s.remove_above(self.var, k),
            Rel::Ge(k) => s.remove_below(self.var, k),
            Rel::Eq(k) => s.assign(self.var, k),
            Rel::Ne(k) => s.remove_value(self.var, k),
        }
    }

    fn events(&self) -> Events {
        match self.rel {
            Rel::Le(_) | Rel::Ge(_) => Events::BOUNDS,
            Rel::Eq(_) | Rel::Ne(_) => Events::DOMAIN_CHANGED,
        }
    }
}

/// A posted filtering rule: kind, variables and constant parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropagatorSpec {
    /// `flag = 1 <=> x in [lo, hi]`.
    ReifiedInterval {
        x: VarId,
        lo: Value,
        hi: Value,
        flag: VarId,
        mode: Consistency,
    },
    /// `a <= b`.
    Leq { a: VarId, b: VarId },
    /// `sum = left + right`, bounds only.
    TernarySum {
        sum: VarId,
        left: VarId,
        right: VarId,
    },
    /// `flag = 1 <=> some x takes value`.
    ValueSupport {
        flag: VarId,
        xs: Vec<VarId>,
        value: Value,
        mode: SupportMode,
    },
    /// `excess >= sum(flags) - slack`.
    SumLower {
        excess: VarId,
        flags: Vec<VarId>,
        slack: Value,
    },
    /// `n + e <= total`.
    AffineLeq { n: VarId, e: VarId, total: Value },
    /// `order[j-1] = 1 <=> x <= j` for `j = 1..=d`.
    UpperBoundChannel { x: VarId, order: Vec<VarId> },
    /// Disjunction of bound atoms, propagated by counting.
    BoundsClause { atoms: Vec<BoundAtom> },
    /// `diag[j-1] = 1 <=> x = j` for `j = 1..=d`.
    DomainBitmap { x: VarId, diag: Vec<VarId> },
}

pub fn reified_interval(
    x: VarId,
    lo: Value,
    hi: Value,
    flag: VarId,
    mode: Consistency,
) -> PropagatorSpec {
    assert!(lo <= hi, "reified interval [{lo}, {hi}] is empty");
    PropagatorSpec::ReifiedInterval {
        x,
        lo,
        hi,
        flag,
        mode,
    }
}

pub fn leq(a: VarId, b: VarId) -> PropagatorSpec {
    PropagatorSpec::Leq { a, b }
}

pub fn ternary_sum(sum: VarId, left: VarId, right: VarId) -> PropagatorSpec {
    PropagatorSpec::TernarySum { sum, left, right }
}

pub fn value_support(flag: VarId, xs: &[VarId], value: Value, mode: SupportMode) -> PropagatorSpec {
    PropagatorSpec::ValueSupport {
        flag,
        xs: xs.to_vec(),
        value,
        mode,
    }
}

pub fn sum_lower(excess: VarId, flags: &[VarId], slack: Value) -> PropagatorSpec {
    assert!(slack >= 0);
    PropagatorSpec::SumLower {
        excess,
        flags: flags.to_vec(),
        slack,
    }
}

pub fn affine_leq(n: VarId, e: VarId, total: Value) -> PropagatorSpec {
    PropagatorSpec::AffineLeq { n, e, total }
}

pub fn upper_bound_channel(x: VarId, order: &[VarId]) -> PropagatorSpec {
    PropagatorSpec::UpperBoundChannel {
        x,
        order: order.to_vec(),
    }
}

pub fn bounds_clause(atoms: &[BoundAtom]) -> PropagatorSpec {
    assert!(!atoms.is_empty(), "empty clause");
    PropagatorSpec::BoundsClause {
        atoms: atoms.to_vec(),
    }
}

pub fn domain_bitmap(x: VarId, diag: &[VarId]) -> PropagatorSpec {
    PropagatorSpec::DomainBitmap {
        x,
        diag: diag.to_vec(),
    }
}

/// Posts `sum(bs) = n` as a chain of ternary sums over fresh partial sums
/// `S_0 = 0, S_j = S_{j-1} + B_j`, with the last partial sum being `n`
/// itself. Returns the partial-sum variables created (`S_0 .. S_{len-1}`).
pub fn sum_eq_chain(
    engine: &mut Engine,
    bs: &[VarId],
    n: VarId,
) -> Result<Vec<VarId>, EngineError> {
    assert!(!bs.is_empty(), "sum over no terms");
    let mut partial = vec![engine.new_interval_var(0, 0)];
    for (j, &b) in bs.iter().enumerate() {
        let prev = partial[j];
        let next = if j + 1 == bs.len() {
            n
        } else {
            let hi = engine.domain(prev).max() + engine.domain(b).max();
            let lo = engine.domain(prev).min() + engine.domain(b).min();
            let s = engine.new_interval_var(lo, hi);
            partial.push(s);
            s
        };
        engine.post(ternary_sum(next, prev, b))?;
    }
    Ok(partial)
}

impl PropagatorSpec {
    /// Short kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            PropagatorSpec::ReifiedInterval { .. } => "reified_interval",
            PropagatorSpec::Leq { .. } => "leq",
            PropagatorSpec::TernarySum { .. } => "ternary_sum",
            PropagatorSpec::ValueSupport { .. } => "value_support",
            PropagatorSpec::SumLower { .. } => "sum_lower",
            PropagatorSpec::AffineLeq { .. } => "affine_leq",
            PropagatorSpec::UpperBoundChannel { .. } => "upper_bound_channel",
            PropagatorSpec::BoundsClause { .. } => "bounds_clause",
            PropagatorSpec::DomainBitmap { .. } => "domain_bitmap",
        }
    }

    /// Variables this propagator watches and the events that wake it.
    pub fn subscriptions(&self) -> Vec<(VarId, Events)> {
        use PropagatorSpec::*;
        let dom = Events::DOMAIN_CHANGED;
        let bounds = Events::BOUNDS;
        match self {
            ReifiedInterval { x, flag, .. } => vec![(*x, bounds), (*flag, dom)],
            Leq { a, b } => vec![(*a, Events::MIN_CHANGED), (*b, Events::MAX_CHANGED)],
            TernarySum { sum, left, right } => {
                vec![(*sum, bounds), (*left, bounds), (*right, bounds)]
            }
            ValueSupport { flag, xs, mode, .. } => {
                let ev = match mode {
                    SupportMode::Bound => bounds,
                    SupportMode::Domain => dom,
                };
                std::iter::once((*flag, dom))
                    .chain(xs.iter().map(|&x| (x, ev)))
                    .collect()
            }
            SumLower { excess, flags, .. } => std::iter::once((*excess, Events::MAX_CHANGED))
                .chain(flags.iter().map(|&a| (a, Events::MIN_CHANGED)))
                .collect(),
            AffineLeq { n, e, .. } => vec![(*n, Events::MIN_CHANGED), (*e, Events::MIN_CHANGED)],
            UpperBoundChannel { x, order } => std::iter::once((*x, bounds))
                .chain(order.iter().map(|&z| (z, dom)))
                .collect(),
            BoundsClause { atoms } => atoms.iter().map(|a| (a.var, a.events())).collect(),
            DomainBitmap { x, diag } => std::iter::once((*x, dom))
                .chain(diag.iter().map(|&b| (b, dom)))
                .collect(),
        }
    }

    /// Wake filter for the subscription on `var`.
    pub fn guard(&self, var: VarId) -> Guard {
        match self {
            PropagatorSpec::ReifiedInterval {
                x, lo, hi, flag, ..
            } if *x == var => Guard::Interval {
                lo: *lo,
                hi: *hi,
                flag: *flag,
            },
            PropagatorSpec::ReifiedInterval {
                x, lo, hi, mode, ..
            } => Guard::Flag {
                x: *x,
                lo: *lo,
                hi: *hi,
                holes: *mode == Consistency::Range,
            },
            PropagatorSpec::Leq { a, b } if a != b => {
                if *a == var {
                    Guard::LeqLeft { other: *b }
                } else {
                    Guard::LeqRight { other: *a }
                }
            }
            _ => Guard::Always,
        }
    }

    /// Whether one revise always reaches this propagator's own fixpoint, so
    /// changes it makes need not reschedule it.
    pub fn idempotent(&self) -> bool {
        matches!(
            self,
            PropagatorSpec::ReifiedInterval { .. }
                | PropagatorSpec::Leq { .. }
                | PropagatorSpec::TernarySum { .. }
        )
    }

    /// Filters the domains in `s`. Never adds values.
    pub fn revise(&self, s: &mut Store) -> Result<(), Conflict> {
        use PropagatorSpec::*;
        match self {
            ReifiedInterval {
                x,
                lo,
                hi,
                flag,
                mode,
            } => revise_reified(s, *x, *lo, *hi, *flag, *mode),
            Leq { a, b } => {
                s.remove_above(*a, s.max(*b))?;
                s.remove_below(*b, s.min(*a))?;
                Ok(())
            }
            TernarySum { sum, left, right } => revise_ternary(s, *sum, *left, *right),
            ValueSupport {
                flag,
                xs,
                value,
                mode,
            } => revise_support(s, *flag, xs, *value, *mode),
            SumLower {
                excess,
                flags,
                slack,
            } => revise_sum_lower(s, *excess, flags, *slack),
            AffineLeq { n, e, total } => {
                s.remove_above(*n, total - s.min(*e))?;
                s.remove_above(*e, total - s.min(*n))?;
                Ok(())
            }
            UpperBoundChannel { x, order } => revise_channel(s, *x, order),
            BoundsClause { atoms } => revise_clause(s, atoms),
            DomainBitmap { x, diag } => revise_bitmap(s, *x, diag),
        }
    }
}

fn revise_reified(
    s: &mut Store,
    x: VarId,
    lo: Value,
    hi: Value,
    flag: VarId,
    mode: Consistency,
) -> Result<(), Conflict> {
    if s.value(flag).is_none() {
        let (min, max) = (s.min(x), s.max(x));
        if lo <= min && max <= hi {
            s.assign(flag, 1)?;
        } else if max < lo || min > hi {
            s.assign(flag, 0)?;
            return Ok(());
        } else {
            return Ok(());
        }
    }
    match s.value(flag) {
        Some(1) => {
            s.remove_below(x, lo)?;
            s.remove_above(x, hi)?;
        }
        Some(_) => match mode {
            Consistency::Range => {
                s.remove_interval(x, lo, hi)?;
            }
            Consistency::Bound => {
                if (lo..=hi).contains(&s.min(x)) {
                    s.remove_below(x, hi + 1)?;
                }
                if (lo..=hi).contains(&s.max(x)) {
                    s.remove_above(x, lo - 1)?;
                }
            }
        },
        None => unreachable!(),
    }
    Ok(())
}

fn revise_ternary(s: &mut Store, sum: VarId, p: VarId, q: VarId) -> Result<(), Conflict> {
    loop {
        let mut changed = false;
        changed |= s.remove_below(sum, s.min(p) + s.min(q))?;
        changed |= s.remove_above(sum, s.max(p) + s.max(q))?;
        changed |= s.remove_below(p, s.min(sum) - s.max(q))?;
        changed |= s.remove_above(p, s.max(sum) - s.min(q))?;
        changed |= s.remove_below(q, s.min(sum) - s.max(p))?;
        changed |= s.remove_above(q, s.max(sum) - s.min(p))?;
        if !changed {
            return Ok(());
        }
    }
}

fn revise_support(
    s: &mut Store,
    flag: VarId,
    xs: &[VarId],
    value: Value,
    mode: SupportMode,
) -> Result<(), Conflict> {
    let is_candidate = |s: &Store, x: VarId| match mode {
        SupportMode::Bound => s.min(x) <= value && value <= s.max(x),
        SupportMode::Domain => s.contains(x, value),
    };
    if xs.iter().any(|&x| s.value(x) == Some(value)) {
        s.assign(flag, 1)?;
    }
    let mut candidates = xs.iter().copied().filter(|&x| is_candidate(s, x));
    let first = candidates.next();
    let second = candidates.next();
    if first.is_none() {
        s.assign(flag, 0)?;
    }
    match s.value(flag) {
        Some(1) => match (first, second) {
            (None, _) => return Err(s.fail()),
            (Some(x), None) if mode == SupportMode::Domain => {
                s.assign(x, value)?;
            }
            _ => {}
        },
        Some(_) => {
            for &x in xs {
                match mode {
                    SupportMode::Domain => {
                        s.remove_value(x, value)?;
                    }
                    SupportMode::Bound => {
                        if s.min(x) == value {
                            s.remove_below(x, value + 1)?;
                        }
                        if s.max(x) == value {
                            s.remove_above(x, value - 1)?;
                        }
                    }
                }
            }
        }
        None => {}
    }
    Ok(())
}

fn revise_sum_lower(
    s: &mut Store,
    excess: VarId,
    flags: &[VarId],
    slack: Value,
) -> Result<(), Conflict> {
    let total: Value = flags.iter().map(|&a| s.min(a)).sum();
    s.remove_below(excess, total - slack)?;
    let cap = s.max(excess) + slack;
    for &a in flags {
        let others = total - s.min(a);
        s.remove_above(a, cap - others)?;
    }
    Ok(())
}

fn revise_channel(s: &mut Store, x: VarId, order: &[VarId]) -> Result<(), Conflict> {
    for (j, &z) in order.iter().enumerate() {
        let j = j as Value + 1;
        match s.value(z) {
            Some(1) => {
                s.remove_above(x, j)?;
            }
            Some(_) => {
                s.remove_below(x, j + 1)?;
            }
            None => {}
        }
    }
    let (min, max) = (s.min(x), s.max(x));
    for (j, &z) in order.iter().enumerate() {
        let j = j as Value + 1;
        if max <= j {
            s.assign(z, 1)?;
        } else if min > j {
            s.assign(z, 0)?;
        }
    }
    Ok(())
}

fn revise_clause(s: &mut Store, atoms: &[BoundAtom]) -> Result<(), Conflict> {
    let mut open = None;
    let mut open_count = 0;
    for a in atoms {
        match a.truth(s) {
            Some(true) => return Ok(()),
            Some(false) => {}
            None => {
                open_count += 1;
                open = Some(a);
            }
        }
    }
    match (open_count, open) {
        (0, _) => Err(s.fail()),
        (1, Some(a)) => a.enforce(s).map(|_| ()),
        _ => Ok(()),
    }
}

fn revise_bitmap(s: &mut Store, x: VarId, diag: &[VarId]) -> Result<(), Conflict> {
    for (j, &b) in diag.iter().enumerate() {
        let j = j as Value + 1;
        match s.value(b) {
            Some(1) => {
                s.assign(x, j)?;
            }
            Some(_) => {
                s.remove_value(x, j)?;
            }
            None => {}
        }
    }
    for (j, &b) in diag.iter().enumerate() {
        let j = j as Value + 1;
        if !s.contains(x, j) {
            s.assign(b, 0)?;
        } else if s.value(x) == Some(j) {
            s.assign(b, 1)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Action, Status};

    fn var(e: &mut Engine, lo: Value, hi: Value, vals: &[Value]) -> VarId {
        e.new_var(lo, hi, vals).unwrap()
    }

    fn bool_var(e: &mut Engine) -> VarId {
        e.new_interval_var(0, 1)
    }

    #[test]
    fn reified_fixed_point_sets_flag() {
        let mut e = Engine::new();
        let x = var(&mut e, 1, 5, &[2]);
        let a = bool_var(&mut e);
        e.post(reified_interval(x, 2, 2, a, Consistency::Bound))
            .unwrap();
        assert_eq!(e.propagate(), Status::Fixpoint);
        assert_eq!(e.domain(a).value(), Some(1));
    }

    #[test]
    fn reified_false_bc_vs_rc() {
        for (mode, expect) in [
            (Consistency::Bound, vec![1, 2, 3, 4, 5]),
            (Consistency::Range, vec![1, 2, 4, 5]),
        ] {
            let mut e = Engine::new();
            let x = e.new_interval_var(1, 5);
            let a = var(&mut e, 0, 1, &[0]);
            e.post(reified_interval(x, 3, 3, a, mode)).unwrap();
            assert_eq!(e.propagate(), Status::Fixpoint);
            assert_eq!(e.domain(x).values(), expect);
        }
        let mut e = Engine::new();
        let x = var(&mut e, 1, 5, &[3, 4]);
        let a = var(&mut e, 0, 1, &[0]);
        e.post(reified_interval(x, 3, 3, a, Consistency::Bound))
            .unwrap();
        e.propagate();
        assert_eq!(e.domain(x).values(), vec![4]);
    }

    #[test]
    fn reified_conflict() {
        let mut e = Engine::new();
        let x = var(&mut e, 1, 5, &[3]);
        let a = var(&mut e, 0, 1, &[0]);
        e.post(reified_interval(x, 2, 4, a, Consistency::Bound))
            .unwrap();
        assert_eq!(e.propagate(), Status::Conflict);
    }

    #[test]
    fn leq_examples() {
        let mut e = Engine::new();
        let a = var(&mut e, 0, 1, &[1]);
        let m = e.new_interval_var(0, 3);
        e.post(leq(a, m)).unwrap();
        e.propagate();
        assert_eq!(e.domain(m).min(), 1);

        let mut e = Engine::new();
        let m = e.new_interval_var(2, 5);
        let n = var(&mut e, 1, 5, &[1]);
        e.post(leq(m, n)).unwrap();
        assert_eq!(e.propagate(), Status::Conflict);

        let mut e = Engine::new();
        let a = bool_var(&mut e);
        let b = bool_var(&mut e);
        e.post(leq(a, b)).unwrap();
        e.propagate();
        assert_eq!((e.domain(a).size(), e.domain(b).size()), (2, 2));
    }

    #[test]
    fn ternary_examples() {
        let mut e = Engine::new();
        let s = e.new_interval_var(0, 5);
        let p = var(&mut e, 0, 1, &[1]);
        let q = var(&mut e, 0, 1, &[1]);
        e.post(ternary_sum(s, p, q)).unwrap();
        e.propagate();
        assert_eq!(e.domain(s).values(), vec![2]);

        let mut e = Engine::new();
        let s = var(&mut e, 0, 5, &[0]);
        let p = e.new_interval_var(0, 3);
        let q = e.new_interval_var(0, 3);
        e.post(ternary_sum(s, p, q)).unwrap();
        e.propagate();
        assert_eq!(
            (e.domain(p).value(), e.domain(q).value()),
            (Some(0), Some(0))
        );
    }

    #[test]
    fn ternary_pyramid_forces_zeros() {
        // N in {1,2}, M_22 = M_44 = 1 over a five-value pyramid chain.
        let mut e = Engine::new();
        let n = e.new_var(1, 2, &[1, 2]).unwrap();
        let singles: Vec<VarId> = (0..5).map(|_| e.new_interval_var(0, 1)).collect();
        e.tighten(singles[1], Action::Assign(1));
        e.tighten(singles[3], Action::Assign(1));
        let mut prefix = singles[0];
        for (k, &m) in singles.iter().enumerate().skip(1) {
            let next = if k == 4 { n } else { e.new_interval_var(0, 5) };
            e.post(ternary_sum(next, prefix, m)).unwrap();
            prefix = next;
        }
        assert_eq!(e.propagate(), Status::Fixpoint);
        assert_eq!(e.domain(n).values(), vec![2]);
        for k in [0, 2, 4] {
            assert_eq!(e.domain(singles[k]).value(), Some(0));
        }
    }

    #[test]
    fn sum_chain_examples() {
        let mut e = Engine::new();
        let bs: Vec<_> = (0..4).map(|_| var(&mut e, 0, 1, &[1])).collect();
        let n = e.new_interval_var(0, 4);
        sum_eq_chain(&mut e, &bs, n).unwrap();
        e.propagate();
        assert_eq!(e.domain(n).value(), Some(4));

        let mut e = Engine::new();
        let bs: Vec<_> = (0..4).map(|_| bool_var(&mut e)).collect();
        let n = var(&mut e, 0, 4, &[0]);
        sum_eq_chain(&mut e, &bs, n).unwrap();
        e.propagate();
        assert!(bs.iter().all(|&b| e.domain(b).value() == Some(0)));
    }

    #[test]
    fn sum_chain_forces_others_to_zero() {
        // Frozen from enumerating the 16 0/1 vectors with B_2 = 1 and sum 1:
        // only [0,1,0,0] qualifies.
        let mut e = Engine::new();
        let bs: Vec<_> = (0..4).map(|_| bool_var(&mut e)).collect();
        e.tighten(bs[1], Action::Assign(1));
        let n = var(&mut e, 0, 4, &[1]);
        sum_eq_chain(&mut e, &bs, n).unwrap();
        assert_eq!(e.propagate(), Status::Fixpoint);
        let got: Vec<_> = bs.iter().map(|&b| e.domain(b).value()).collect();
        assert_eq!(got, vec![Some(0), Some(1), Some(0), Some(0)]);
    }

    #[test]
    fn value_support_examples() {
        let mut e = Engine::new();
        let x1 = var(&mut e, 1, 5, &[1, 2]);
        let x2 = var(&mut e, 1, 5, &[3, 4]);
        let b = bool_var(&mut e);
        e.post(value_support(b, &[x1, x2], 5, SupportMode::Bound))
            .unwrap();
        e.propagate();
        assert_eq!(e.domain(b).value(), Some(0));

        let mut e = Engine::new();
        let x4 = var(&mut e, 1, 5, &[4]);
        let b = bool_var(&mut e);
        e.post(value_support(b, &[x4], 4, SupportMode::Domain))
            .unwrap();
        e.propagate();
        assert_eq!(e.domain(b).value(), Some(1));

        // DC mode assigns the last candidate, BC mode does not.
        for (mode, expect) in [(SupportMode::Domain, Some(3)), (SupportMode::Bound, None)] {
            let mut e = Engine::new();
            let x1 = var(&mut e, 1, 5, &[1, 2]);
            let x2 = var(&mut e, 1, 5, &[3, 4]);
            let b = var(&mut e, 0, 1, &[1]);
            e.post(value_support(b, &[x1, x2], 3, mode)).unwrap();
            e.propagate();
            assert_eq!(e.domain(x2).value(), expect);
        }

        let mut e = Engine::new();
        let x1 = var(&mut e, 1, 5, &[1, 2]);
        let b = var(&mut e, 0, 1, &[1]);
        e.post(value_support(b, &[x1], 5, SupportMode::Bound))
            .unwrap();
        assert_eq!(e.propagate(), Status::Conflict);
    }

    #[test]
    fn sum_lower_examples() {
        let mut e = Engine::new();
        let ex = e.new_interval_var(0, 5);
        let a: Vec<_> = (0..4).map(|_| var(&mut e, 0, 1, &[1])).collect();
        e.post(sum_lower(ex, &a, 3)).unwrap();
        e.propagate();
        assert_eq!(e.domain(ex).min(), 1);

        let mut e = Engine::new();
        let ex = e.new_interval_var(0, 5);
        let a: Vec<_> = (0..3).map(|_| bool_var(&mut e)).collect();
        e.post(sum_lower(ex, &a, 3)).unwrap();
        e.propagate();
        assert!(a.iter().all(|&v| e.domain(v).size() == 2));
        assert_eq!(e.domain(ex).min(), 0);

        let mut e = Engine::new();
        let ex = var(&mut e, 0, 5, &[0]);
        let a: Vec<_> = (0..2).map(|_| var(&mut e, 0, 1, &[1])).collect();
        e.post(sum_lower(ex, &a, 0)).unwrap();
        assert_eq!(e.propagate(), Status::Conflict);

        // Excess capped at 0 with slack 1: one flag set forces the rest off.
        let mut e = Engine::new();
        let ex = var(&mut e, 0, 5, &[0]);
        let a: Vec<_> = (0..3).map(|_| bool_var(&mut e)).collect();
        e.tighten(a[0], Action::Assign(1));
        e.post(sum_lower(ex, &a, 1)).unwrap();
        e.propagate();
        assert_eq!(e.domain(a[1]).value(), Some(0));
        assert_eq!(e.domain(a[2]).value(), Some(0));
    }

    #[test]
    fn affine_leq_examples() {
        let mut e = Engine::new();
        let n = e.new_var(1, 5, &[1, 2, 5]).unwrap();
        let ex = e.new_interval_var(1, 5);
        e.post(affine_leq(n, ex, 5)).unwrap();
        e.propagate();
        assert_eq!(e.domain(n).values(), vec![1, 2]);

        let mut e = Engine::new();
        let n = var(&mut e, 1, 5, &[5]);
        let ex = e.new_interval_var(0, 5);
        e.post(affine_leq(n, ex, 5)).unwrap();
        e.propagate();
        assert_eq!(e.domain(ex).value(), Some(0));

        let mut e = Engine::new();
        let n = var(&mut e, 1, 5, &[4]);
        let ex = e.new_interval_var(2, 5);
        e.post(affine_leq(n, ex, 5)).unwrap();
        assert_eq!(e.propagate(), Status::Conflict);
    }

    #[test]
    fn channel_examples() {
        let mut e = Engine::new();
        let x = e.new_var(1, 10, &[5, 6, 7, 8, 9]).unwrap();
        let z: Vec<_> = (0..10).map(|_| bool_var(&mut e)).collect();
        e.post(upper_bound_channel(x, &z)).unwrap();
        e.propagate();
        assert_eq!(e.domain(z[3]).value(), Some(0));
        assert_eq!(e.domain(z[8]).value(), Some(1));
        assert_eq!(e.domain(z[6]).size(), 2);

        let mut e = Engine::new();
        let x = e.new_interval_var(1, 10);
        let z: Vec<_> = (0..10).map(|_| bool_var(&mut e)).collect();
        e.tighten(z[2], Action::Assign(1));
        e.tighten(z[6], Action::Assign(0));
        e.post(upper_bound_channel(x, &z)).unwrap();
        assert_eq!(e.propagate(), Status::Conflict);

        let mut e = Engine::new();
        let x = e.new_interval_var(1, 10);
        let z: Vec<_> = (0..10).map(|_| bool_var(&mut e)).collect();
        e.tighten(z[2], Action::Assign(1));
        e.post(upper_bound_channel(x, &z)).unwrap();
        e.propagate();
        assert_eq!(e.domain(x).max(), 3);
        // Monotone: everything above 3 is now 1.
        assert!(z[3..].iter().all(|&v| e.domain(v).value() == Some(1)));

        let mut e = Engine::new();
        let x = e.new_interval_var(1, 10);
        let z: Vec<_> = (0..10).map(|_| bool_var(&mut e)).collect();
        e.tighten(z[6], Action::Assign(0));
        e.post(upper_bound_channel(x, &z)).unwrap();
        e.propagate();
        assert_eq!(e.domain(x).min(), 8);
    }

    #[test]
    fn clause_unit_propagates_last_atom() {
        let mut e = Engine::new();
        let z14 = var(&mut e, 0, 1, &[0]);
        let z19 = var(&mut e, 0, 1, &[1]);
        let m59 = e.new_interval_var(0, 1);
        e.post(bounds_clause(&[
            BoundAtom::eq(z14, 1),
            BoundAtom::eq(z19, 0),
            BoundAtom::ge(m59, 1),
        ]))
        .unwrap();
        e.propagate();
        assert_eq!(e.domain(m59).min(), 1);

        let mut e = Engine::new();
        let b = bool_var(&mut e);
        e.post(bounds_clause(&[BoundAtom::eq(b, 0)])).unwrap();
        e.propagate();
        assert_eq!(e.domain(b).value(), Some(0));

        let mut e = Engine::new();
        let b = var(&mut e, 0, 1, &[1]);
        let c = var(&mut e, 0, 1, &[0]);
        e.post(bounds_clause(&[BoundAtom::eq(b, 0), BoundAtom::ne(c, 0)]))
            .unwrap();
        assert_eq!(e.propagate(), Status::Conflict);
    }

    #[test]
    fn clause_with_two_open_atoms_is_idle() {
        let mut e = Engine::new();
        let a = bool_var(&mut e);
        let b = bool_var(&mut e);
        let c = var(&mut e, 0, 1, &[0]);
        e.post(bounds_clause(&[
            BoundAtom::eq(a, 1),
            BoundAtom::eq(b, 1),
            BoundAtom::eq(c, 1),
        ]))
        .unwrap();
        e.propagate();
        assert_eq!((e.domain(a).size(), e.domain(b).size()), (2, 2));
    }

    #[test]
    fn bitmap_examples() {
        let mut e = Engine::new();
        let x = e.new_interval_var(1, 10);
        let b: Vec<_> = (0..10).map(|_| bool_var(&mut e)).collect();
        for &v in &b[4..8] {
            e.tighten(v, Action::Assign(0));
        }
        e.post(domain_bitmap(x, &b)).unwrap();
        e.propagate();
        assert_eq!(e.domain(x).values(), vec![1, 2, 3, 4, 9, 10]);

        let mut e = Engine::new();
        let x = var(&mut e, 1, 4, &[3]);
        let b: Vec<_> = (0..4).map(|_| bool_var(&mut e)).collect();
        e.post(domain_bitmap(x, &b)).unwrap();
        e.propagate();
        let got: Vec<_> = b.iter().map(|&v| e.domain(v).value().unwrap()).collect();
        assert_eq!(got, vec![0, 0, 1, 0]);

        let mut e = Engine::new();
        let x = e.new_interval_var(1, 4);
        let b: Vec<_> = (0..4).map(|_| bool_var(&mut e)).collect();
        e.tighten(b[1], Action::Assign(1));
        e.post(domain_bitmap(x, &b)).unwrap();
        e.propagate();
        assert_eq!(e.domain(x).value(), Some(2));

        let mut e = Engine::new();
        let x = e.new_interval_var(1, 2);
        let b: Vec<_> = (0..2).map(|_| var(&mut e, 0, 1, &[0])).collect();
        e.post(domain_bitmap(x, &b)).unwrap();
        assert_eq!(e.propagate(), Status::Conflict);
    }
}
