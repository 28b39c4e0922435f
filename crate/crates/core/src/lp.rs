//! Integer-programming encodings of AtMostNValue instances, written in the
//! classic LP file format.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::domain::Value;
use crate::instance::{Instance, Kind};

pub const LAZY_BEGIN: &str = "\\ BEGIN LAZY PYRAMID";
pub const LAZY_END: &str = "\\ END LAZY PYRAMID";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColumnKind {
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub lo: i64,
    pub hi: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Ge => lhs >= rhs,
            Sense::Eq => lhs == rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(i64, String)>,
    pub sense: Sense,
    pub rhs: i64,
}

/// A feasibility model: the objective is the constant zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpModel {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    /// Rows meant to be added lazily by the solver.
    pub lazy_rows: Vec<Row>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("only atmost instances can be exported, got {0}")]
    UnsupportedKind(Kind),
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("row {row} references undeclared column {column}")]
    UndeclaredColumn { row: String, column: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

impl LpModel {
    fn binary(&mut self, name: String) {
        self.columns.push(Column {
            name,
            kind: ColumnKind::Binary,
            lo: 0,
            hi: 1,
        });
    }

    fn integer(&mut self, name: String, lo: i64, hi: i64) {
        self.columns.push(Column {
            name,
            kind: ColumnKind::Integer,
            lo,
            hi,
        });
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn all_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().chain(&self.lazy_rows)
    }

    /// Checks that names are unique and every row uses declared columns.
    pub fn validate(&self) -> Result<(), LpError> {
        let mut names = HashSet::new();
        for c in &self.columns {
            if !names.insert(c.name.as_str()) {
                return Err(LpError::DuplicateName(c.name.clone()));
            }
        }
        let mut rows = HashSet::new();
        for r in self.all_rows() {
            if !rows.insert(r.name.as_str()) {
                return Err(LpError::DuplicateName(r.name.clone()));
            }
            if let Some((_, c)) = r.terms.iter().find(|(_, c)| !names.contains(c.as_str())) {
                return Err(LpError::UndeclaredColumn {
                    row: r.name.clone(),
                    column: c.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn to_lp(&self) -> String {
        let mut out = String::from("\\ feasibility model\nMaximize\n obj:");
        match self.columns.first() {
            Some(c) => writeln!(out, " 0 {}", c.name).unwrap(),
            None => out.push('\n'),
        }
        out.push_str("Subject To\n");
        for r in &self.rows {
            write_row(&mut out, r);
        }
        if !self.lazy_rows.is_empty() {
            writeln!(out, "{LAZY_BEGIN}").unwrap();
            for r in &self.lazy_rows {
                write_row(&mut out, r);
            }
            writeln!(out, "{LAZY_END}").unwrap();
        }
        out.push_str("Bounds\n");
        for c in &self.columns {
            if c.lo == c.hi {
                writeln!(out, " {} = {}", c.name, c.lo).unwrap();
            } else if c.kind == ColumnKind::Integer || (c.lo, c.hi) != (0, 1) {
                writeln!(out, " {} <= {} <= {}", c.lo, c.name, c.hi).unwrap();
            }
        }
        for (kind, header) in [
            (ColumnKind::Binary, "Binary"),
            (ColumnKind::Integer, "General"),
        ] {
            let names: Vec<&str> = self
                .columns
                .iter()
                .filter(|c| c.kind == kind)
                .map(|c| c.name.as_str())
                .collect();
            if !names.is_empty() {
                writeln!(out, "{header}").unwrap();
                for chunk in names.chunks(10) {
                    writeln!(out, " {}", chunk.join(" ")).unwrap();
                }
            }
        }
        out.push_str("End\n");
        out
    }

    /// Sidecar listing the lazy row names, one per line.
    pub fn lazy_sidecar(&self) -> String {
        self.lazy_rows
            .iter()
            .map(|r| format!("{}\n", r.name))
            .collect()
    }
}

fn write_row(out: &mut String, r: &Row) {
    write!(out, " {}:", r.name).unwrap();
    for (i, (coef, col)) in r.terms.iter().enumerate() {
        let sign = if *coef < 0 {
            "-"
        } else if i > 0 {
            "+"
        } else {
            ""
        };
        let sep = if i > 0 || *coef < 0 { " " } else { "" };
        write!(out, " {sign}{sep}{} {col}", coef.abs()).unwrap();
    }
    writeln!(out, " {} {}", r.sense.symbol(), r.rhs).unwrap();
}

/// Reads the dialect produced by [`LpModel::to_lp`].
pub fn parse_lp(text: &str) -> Result<LpModel, LpError> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Objective,
        Rows,
        Bounds,
        Binary,
        General,
        Done,
    }
    let mut section = Section::Preamble;
    let mut lazy = false;
    let mut model = LpModel::default();
    let mut bounds: HashMap<String, (i64, i64)> = HashMap::new();
    let mut order: Vec<(String, ColumnKind)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: &str| LpError::Syntax {
            line: line_no,
            msg: msg.to_string(),
        };
        let line = raw.trim();
        if line == LAZY_BEGIN || line == LAZY_END {
            if section != Section::Rows {
                return Err(err("lazy marker outside constraints"));
            }
            lazy = line == LAZY_BEGIN;
            continue;
        }
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        match line {
            "Maximize" | "Minimize" => {
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Rows;
                continue;
            }
            "Bounds" => {
                section = Section::Bounds;
                continue;
            }
            "Binary" => {
                section = Section::Binary;
                continue;
            }
            "General" => {
                section = Section::General;
                continue;
            }
            "End" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Objective => {}
            Section::Rows => {
                let row = parse_row(line).ok_or_else(|| err("malformed row"))?;
                if lazy {
                    model.lazy_rows.push(row);
                } else {
                    model.rows.push(row);
                }
            }
            Section::Bounds => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let num = |s: &str| s.parse::<i64>().map_err(|_| err("bad bound"));
                match parts.as_slice() {
                    [name, "=", v] => {
                        let v = num(v)?;
                        bounds.insert(name.to_string(), (v, v));
                    }
                    [lo, "<=", name, "<=", hi] => {
                        bounds.insert(name.to_string(), (num(lo)?, num(hi)?));
                    }
                    _ => return Err(err("malformed bound")),
                }
            }
            Section::Binary | Section::General => {
                let kind = if section == Section::Binary {
                    ColumnKind::Binary
                } else {
                    ColumnKind::Integer
                };
                order.extend(line.split_whitespace().map(|n| (n.to_string(), kind)));
            }
            Section::Preamble | Section::Done => return Err(err("text outside any section")),
        }
    }
    if section != Section::Done {
        return Err(LpError::Syntax {
            line: text.lines().count(),
            msg: "missing End".into(),
        });
    }
    // Binary columns come back ahead of general ones, which is also the
    // order the exporters declare them in.
    for (name, kind) in order {
        let (lo, hi) = bounds.get(&name).copied().unwrap_or((0, 1));
        model.columns.push(Column { name, kind, lo, hi });
    }
    model.validate()?;
    Ok(model)
}

fn parse_row(line: &str) -> Option<Row> {
    let (name, body) = line.split_once(':')?;
    let tokens: Vec<&str> = body.split_whitespace().collect();
    let (rhs, tokens) = tokens.split_last()?;
    let (sense, tokens) = tokens.split_last()?;
    let sense = match *sense {
        "<=" => Sense::Le,
        ">=" => Sense::Ge,
        "=" => Sense::Eq,
        _ => return None,
    };
    let mut terms = Vec::new();
    let mut sign = 1;
    let mut coef: Option<i64> = None;
    for t in tokens {
        match *t {
            "+" => sign = 1,
            "-" => sign = -1,
            _ => match t.parse::<i64>() {
                Ok(c) => coef = Some(c),
                Err(_) => {
                    terms.push((sign * coef.take().unwrap_or(1), t.to_string()));
                    sign = 1;
                }
            },
        }
    }
    Some(Row {
        name: name.trim().to_string(),
        terms,
        sense,
        rhs: rhs.parse().ok()?,
    })
}

fn require_atmost(inst: &Instance) -> Result<(), LpError> {
    match inst.kind {
        Kind::AtMost => Ok(()),
        k => Err(LpError::UnsupportedKind(k)),
    }
}

fn max_n(inst: &Instance) -> i64 {
    *inst.n_dom.last().unwrap() as i64
}

fn row(name: String, terms: Vec<(i64, String)>, sense: Sense, rhs: i64) -> Row {
    Row {
        name,
        terms,
        sense,
        rhs,
    }
}

/// Sparse direct encoding: `b_i_j` for `j` in dom(X_i), `B_j` for every
/// value.
pub fn export_direct(inst: &Instance) -> Result<LpModel, LpError> {
    require_atmost(inst)?;
    let mut m = LpModel::default();
    for (i, v) in inst.vars.iter().enumerate() {
        for &j in &v.dom {
            m.binary(format!("b_{}_{j}", i + 1));
        }
    }
    for j in 1..=inst.d {
        m.binary(format!("B_{j}"));
    }
    for (i, v) in inst.vars.iter().enumerate() {
        let terms = v
            .dom
            .iter()
            .map(|j| (1, format!("b_{}_{j}", i + 1)))
            .collect();
        m.rows
            .push(row(format!("one_{}", i + 1), terms, Sense::Eq, 1));
    }
    for (i, v) in inst.vars.iter().enumerate() {
        for &j in &v.dom {
            m.rows.push(row(
                format!("ch_{}_{j}", i + 1),
                vec![(-1, format!("b_{}_{j}", i + 1)), (1, format!("B_{j}"))],
                Sense::Ge,
                0,
            ));
        }
    }
    let used = (1..=inst.d).map(|j| (1, format!("B_{j}"))).collect();
    m.rows
        .push(row("card".into(), used, Sense::Le, max_n(inst)));
    m.validate()?;
    Ok(m)
}

/// Order encoding `c_i_j` (X_i <= j) with interval counters `M_l_u`.
pub fn export_linear(inst: &Instance, lazy_pyramid: bool) -> Result<LpModel, LpError> {
    require_atmost(inst)?;
    let d = inst.d;
    let n = inst.n() as i64;
    let c = |i: usize, j: Value| format!("c_{}_{j}", i + 1);
    let mname = |l: Value, u: Value| format!("M_{l}_{u}");
    let mut m = LpModel::default();
    for i in 0..inst.n() {
        for j in 1..=d {
            m.binary(c(i, j));
        }
        m.columns.last_mut().unwrap().lo = 1;
    }
    for l in 1..=d {
        for u in l..=d {
            m.integer(mname(l, u), 0, ((u - l + 1) as i64).min(n));
        }
    }
    for (i, v) in inst.vars.iter().enumerate() {
        for j in 1..d {
            m.rows.push(row(
                format!("mono_{}_{j}", i + 1),
                vec![(1, c(i, j)), (-1, c(i, j + 1))],
                Sense::Le,
                0,
            ));
        }
        for j in (1..=d).filter(|j| v.dom.binary_search(j).is_err()) {
            let mut terms = vec![(1, c(i, j))];
            if j > 1 {
                terms.push((-1, c(i, j - 1)));
            }
            m.rows
                .push(row(format!("hole_{}_{j}", i + 1), terms, Sense::Eq, 0));
        }
    }
    for i in 0..inst.n() {
        for l in 1..=d {
            for u in l..=d {
                let mut terms = Vec::with_capacity(3);
                if l > 1 {
                    terms.push((1, c(i, l - 1)));
                }
                terms.push((-1, c(i, u)));
                terms.push((1, mname(l, u)));
                m.rows
                    .push(row(format!("link_{}_{l}_{u}", i + 1), terms, Sense::Ge, 0));
            }
        }
    }
    for u in 2..=d {
        for k in 1..u {
            let r = row(
                format!("pyr_{u}_{k}"),
                vec![(1, mname(1, u)), (-1, mname(1, k)), (-1, mname(k + 1, u))],
                Sense::Eq,
                0,
            );
            if lazy_pyramid {
                m.lazy_rows.push(r);
            } else {
                m.rows.push(r);
            }
        }
    }
    let mut implied: Vec<(i64, String)> = (1..=d).map(|j| (1, mname(j, j))).collect();
    implied.push((-1, mname(1, d)));
    m.rows.push(row("implied".into(), implied, Sense::Eq, 0));
    m.rows.push(row(
        "card".into(),
        vec![(1, mname(1, d))],
        Sense::Le,
        max_n(inst),
    ));
    m.validate()?;
    Ok(m)
}

/// Row terms as `(coefficient, column index)`, with sense and rhs.
type IndexedRow = (Vec<(i64, usize)>, Sense, i64);

/// Every integer point satisfying all rows (lazy ones included), by
/// depth-first search with interval pruning. Gives up past `limit` points.
pub fn enumerate_feasible(model: &LpModel, limit: usize) -> Option<Vec<BTreeMap<String, i64>>> {
    let index: HashMap<&str, usize> = model
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.as_str(), i))
        .collect();
    let rows: Vec<IndexedRow> = model
        .all_rows()
        .map(|r| {
            let terms = r
                .terms
                .iter()
                .map(|(a, c)| (*a, index[c.as_str()]))
                .collect();
            (terms, r.sense, r.rhs)
        })
        .collect();
    let mut by_col: Vec<Vec<usize>> = vec![Vec::new(); model.columns.len()];
    for (ri, (terms, _, _)) in rows.iter().enumerate() {
        for &(_, c) in terms {
            by_col[c].push(ri);
        }
    }

    // A row is still satisfiable if its achievable range meets the rhs.
    let feasible = |ri: usize, vals: &[Option<i64>]| {
        let (terms, sense, rhs) = &rows[ri];
        let (mut lo, mut hi) = (0i64, 0i64);
        for &(a, c) in terms {
            let (cl, ch) = match vals[c] {
                Some(v) => (v, v),
                None => (model.columns[c].lo, model.columns[c].hi),
            };
            lo += (a * cl).min(a * ch);
            hi += (a * cl).max(a * ch);
        }
        match sense {
            Sense::Le => lo <= *rhs,
            Sense::Ge => hi >= *rhs,
            Sense::Eq => lo <= *rhs && *rhs <= hi,
        }
    };

    let mut out = Vec::new();
    let mut vals: Vec<Option<i64>> = vec![None; model.columns.len()];
    let mut overflow = false;
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        k: usize,
        model: &LpModel,
        vals: &mut Vec<Option<i64>>,
        by_col: &[Vec<usize>],
        feasible: &dyn Fn(usize, &[Option<i64>]) -> bool,
        out: &mut Vec<BTreeMap<String, i64>>,
        limit: usize,
        overflow: &mut bool,
    ) {
        if *overflow {
            return;
        }
        if k == model.columns.len() {
            if out.len() == limit {
                *overflow = true;
                return;
            }
            out.push(
                model
                    .columns
                    .iter()
                    .zip(vals.iter())
                    .map(|(c, v)| (c.name.clone(), v.unwrap()))
                    .collect(),
            );
            return;
        }
        let col = &model.columns[k];
        for v in col.lo..=col.hi {
            vals[k] = Some(v);
            if by_col[k].iter().all(|&ri| feasible(ri, vals)) {
                dfs(k + 1, model, vals, by_col, feasible, out, limit, overflow);
            }
        }
        vals[k] = None;
    }
    dfs(
        0,
        model,
        &mut vals,
        &by_col,
        &feasible,
        &mut out,
        limit,
        &mut overflow,
    );
    if overflow {
        return None;
    }
    debug_assert!(out.iter().all(|p| rows.iter().all(|(terms, sense, rhs)| {
        let lhs: i64 = terms
            .iter()
            .map(|&(a, c)| a * p[&model.columns[c].name])
            .sum();
        sense.holds(lhs, *rhs)
    })));
    Some(out)
}
