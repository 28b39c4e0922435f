//! Seeded random instances and the oracle-equivalence suite run over them.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::bench::{check_against_oracle, run_bench, BenchError, Level, Model, Outcome};
use crate::domain::Value;
use crate::engine::Limits;
use crate::instance::{Instance, Kind};
use crate::oracle::{self, RangeVector};

fn random_subset<R: Rng>(rng: &mut R, hi: Value) -> Vec<Value> {
    loop {
        let dom: Vec<Value> = (1..=hi).filter(|_| rng.gen_bool(0.5)).collect();
        if !dom.is_empty() {
            return dom;
        }
    }
}

/// A random instance with `n <= max_n`, `d <= max_d`, arbitrary holes in
/// every domain and a random N set.
pub fn random_instance<R: Rng>(rng: &mut R, max_n: usize, max_d: Value, kind: Kind) -> Instance {
    let n = rng.gen_range(1..=max_n);
    let d = rng.gen_range(1..=max_d);
    let doms = (0..n).map(|_| random_subset(rng, d)).collect();
    let n_dom = random_subset(rng, d.max(n as Value));
    Instance::from_domains(d, doms, n_dom, kind).expect("generated instance is valid")
}

/// Models whose root fixpoint is claimed to equal the oracle closure at the
/// given level, per constraint kind.
pub fn claims(kind: Kind) -> &'static [(Model, Level)] {
    match kind {
        Kind::AtMost => &[
            (Model::PyramidBc, Level::Bound),
            (Model::PyramidFast, Level::Bound),
            (Model::PyramidRc, Level::Range),
        ],
        Kind::AtLeast => &[
            (Model::PyramidBc, Level::Bound),
            (Model::PyramidRc, Level::Range),
        ],
        Kind::NValue => &[
            (Model::NvalueBc, Level::Bound),
            (Model::PyramidFast, Level::Bound),
            (Model::NvalueRc, Level::Range),
        ],
    }
}

#[derive(Debug, Default, Clone)]
pub struct FuzzReport {
    pub instances: usize,
    pub checks: usize,
    pub mismatches: Vec<String>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Runs `count` random instances (kinds cycling) through every fixpoint
/// claim, the cardinality cross-check, and a solve with every model.
pub fn run_fuzz(
    count: usize,
    max_n: usize,
    max_d: Value,
    seed: u64,
) -> Result<FuzzReport, BenchError> {
    let mut rng = StdRng::seed_from_u64(seed);
    let kinds = [Kind::AtMost, Kind::AtLeast, Kind::NValue];
    let mut report = FuzzReport::default();
    for i in 0..count {
        let kind = kinds[i % 3];
        let inst = random_instance(&mut rng, max_n, max_d, kind);
        report.instances += 1;
        let tag =
            |what: String| format!("#{i} {}: {what}", inst.to_json().replace(['\n', ' '], ""));

        for &(model, level) in claims(kind) {
            report.checks += 1;
            for diff in check_against_oracle(model, &inst, level)? {
                report
                    .mismatches
                    .push(tag(format!("{model} {level:?}: {diff}")));
            }
        }

        let rv = RangeVector::of_domains(&inst.domains());
        report.checks += 1;
        if let Err(e) = oracle::card_up_exact(&rv).and(oracle::card_down_exact(&rv)) {
            report.mismatches.push(tag(e.to_string()));
        }

        let expected = oracle::enumerate_solutions(&inst, 0)?.count > 0;
        for model in Model::ALL.into_iter().filter(|m| m.accepts(kind)) {
            report.checks += 1;
            let r = run_bench(model, &inst, Limits::default())?;
            if (r.outcome == Outcome::Sat) != expected || r.outcome == Outcome::Limit {
                report.mismatches.push(tag(format!(
                    "{model} solved {:?}, expected sat={expected}",
                    r.outcome
                )));
            }
        }
    }
    Ok(report)
}
