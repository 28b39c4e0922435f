//! Instance data model, JSON file format and the queens dominating-set
//! generator.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    NValue,
    AtMost,
    AtLeast,
}

impl Kind {
    /// Whether `card` distinct values are compatible with `n` under this kind.
    pub fn holds(self, card: usize, n: Value) -> bool {
        let card = card as i64;
        let n = n as i64;
        match self {
            Kind::NValue => card == n,
            Kind::AtMost => card <= n,
            Kind::AtLeast => card >= n,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::NValue => "nvalue",
            Kind::AtMost => "atmost",
            Kind::AtLeast => "atleast",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedVar {
    pub name: String,
    pub dom: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct NDomain {
    dom: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct RawInstance {
    d: Value,
    vars: Vec<NamedVar>,
    #[serde(rename = "N")]
    n: NDomain,
    kind: Kind,
}

/// A validated instance. Domains are kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub d: Value,
    pub vars: Vec<NamedVar>,
    pub n_dom: Vec<Value>,
    pub kind: Kind,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("universe size d must be at least 1, got {0}")]
    BadUniverse(Value),
    #[error("instance has no variables")]
    NoVariables,
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("domain of {0} is empty")]
    EmptyDomain(String),
    #[error("value {value} of {var} is outside [{lo}, {hi}]")]
    OutOfRange {
        var: String,
        value: Value,
        lo: Value,
        hi: Value,
    },
}

impl Instance {
    /// Validates and normalises the parts of an instance.
    pub fn new(
        d: Value,
        vars: Vec<NamedVar>,
        n_dom: Vec<Value>,
        kind: Kind,
    ) -> Result<Self, InstanceError> {
        if d < 1 {
            return Err(InstanceError::BadUniverse(d));
        }
        if vars.is_empty() {
            return Err(InstanceError::NoVariables);
        }
        let mut names = HashSet::new();
        let mut clean = Vec::with_capacity(vars.len());
        for v in vars {
            if !names.insert(v.name.clone()) {
                return Err(InstanceError::DuplicateName(v.name));
            }
            let dom = normalise(&v.name, v.dom, 1, d)?;
            clean.push(NamedVar { name: v.name, dom });
        }
        let n_hi = d.max(clean.len() as Value);
        let n_dom = normalise("N", n_dom, 1, n_hi)?;
        Ok(Instance {
            d,
            vars: clean,
            n_dom,
            kind,
        })
    }

    /// Builds an instance with variables named `X1`, `X2`, ...
    pub fn from_domains(
        d: Value,
        doms: Vec<Vec<Value>>,
        n_dom: Vec<Value>,
        kind: Kind,
    ) -> Result<Self, InstanceError> {
        let vars = doms
            .into_iter()
            .enumerate()
            .map(|(i, dom)| NamedVar {
                name: format!("X{}", i + 1),
                dom,
            })
            .collect();
        Self::new(d, vars, n_dom, kind)
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn domains(&self) -> Vec<Vec<Value>> {
        self.vars.iter().map(|v| v.dom.clone()).collect()
    }

    pub fn with_kind(&self, kind: Kind) -> Self {
        Instance {
            kind,
            ..self.clone()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| InstanceError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        Self::new(raw.d, raw.vars, raw.n.dom, raw.kind)
    }

    pub fn to_json(&self) -> String {
        let raw = RawInstance {
            d: self.d,
            vars: self.vars.clone(),
            n: NDomain {
                dom: self.n_dom.clone(),
            },
            kind: self.kind,
        };
        serde_json::to_string_pretty(&raw).expect("instance serialises")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Direct check of a complete assignment of the variables plus `n`.
    pub fn satisfied_by(&self, xs: &[Value], n: Value) -> bool {
        xs.len() == self.n()
            && self
                .vars
                .iter()
                .zip(xs)
                .all(|(v, x)| v.dom.binary_search(x).is_ok())
            && self.n_dom.binary_search(&n).is_ok()
            && self.kind.holds(distinct(xs), n)
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    Instance::from_json(&std::fs::read_to_string(path)?)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let mut text = inst.to_json();
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn distinct(xs: &[Value]) -> usize {
    xs.iter().collect::<BTreeSet<_>>().len()
}

fn normalise(
    name: &str,
    dom: Vec<Value>,
    lo: Value,
    hi: Value,
) -> Result<Vec<Value>, InstanceError> {
    if dom.is_empty() {
        return Err(InstanceError::EmptyDomain(name.to_string()));
    }
    if let Some(&bad) = dom.iter().find(|&&v| v < lo || v > hi) {
        return Err(InstanceError::OutOfRange {
            var: name.to_string(),
            value: bad,
            lo,
            hi,
        });
    }
    let set: BTreeSet<Value> = dom.into_iter().collect();
    Ok(set.into_iter().collect())
}

/// Dominating queens on an `n`×`n` board: square `i` (row-major, from 1)
/// takes the square that covers it, i.e. itself or any square sharing a
/// row, column or diagonal. At most `nvalues` distinct values.
pub fn queens_instance(n: usize, nvalues: Value) -> Instance {
    assert!(n >= 1, "board size must be positive");
    let d = (n * n) as Value;
    let square = |r: usize, c: usize| (r * n + c + 1) as Value;
    let mut vars = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let mut dom = Vec::new();
            for r2 in 0..n {
                for c2 in 0..n {
                    if r == r2 || c == c2 || r.abs_diff(r2) == c.abs_diff(c2) {
                        dom.push(square(r2, c2));
                    }
                }
            }
            vars.push(NamedVar {
                name: format!("q{}_{}", r + 1, c + 1),
                dom,
            });
        }
    }
    Instance::new(d, vars, vec![nvalues], Kind::AtMost).expect("queens instance is valid")
}
