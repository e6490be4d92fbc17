//! Monte-Carlo observability rank study for the first-order model.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use topotrack::graph::build_incidence;
use topotrack::observability::{is_t_step_observable, ObservabilityProblem};
use topotrack::sim::trial_rng;
use topotrack::EdgeIndexMap;

use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, CsvRow};

#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityRow {
    pub n: usize,
    pub t: usize,
    pub fraction_observable: f64,
}

impl CsvRow for ObservabilityRow {
    fn header() -> &'static [&'static str] {
        &["N", "T", "fraction_observable"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.n.to_string(), self.t.to_string(), fmt_f64(self.fraction_observable)]
    }
}

/// For each horizon `T`, the fraction of trials in which `T` observation
/// matrices `B diag(B^T q_t)` with Gaussian `q_t` and identity dynamics give
/// a full-rank observability matrix. Trial `k` uses stream `k` of `seed`, so
/// the inputs for a shorter horizon are a prefix of those for a longer one.
pub fn run_observability_study(
    n: usize,
    horizons: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ObservabilityRow>> {
    if n < 2 {
        return Err(HarnessError::config("observability study needs at least 2 nodes"));
    }
    if trials == 0 {
        return Err(HarnessError::config("observability study needs at least one trial"));
    }
    if horizons.contains(&0) {
        return Err(HarnessError::config("horizons must be at least 1"));
    }
    let b = build_incidence(&EdgeIndexMap::new(n)?);
    let longest = horizons.iter().copied().max().unwrap_or(0);
    let inputs: Vec<Vec<DVector<f64>>> = (0..trials)
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            (0..longest)
                .map(|_| DVector::from_fn(n, |_, _| rng.sample(StandardNormal)))
                .collect()
        })
        .collect();
    horizons
        .iter()
        .map(|&t| {
            let mut hits = 0usize;
            for qs in &inputs {
                let problem = ObservabilityProblem::from_inputs(&b, 1.0, &qs[..t])?;
                if is_t_step_observable(&problem, f64::EPSILON).observable {
                    hits += 1;
                }
            }
            Ok(ObservabilityRow {
                n,
                t,
                fraction_observable: hits as f64 / trials as f64,
            })
        })
        .collect()
}

/// Parses `a..b` or `a..=b` (inclusive either way), `a-b`, or a comma
/// separated list.
pub fn parse_range(s: &str) -> Result<Vec<usize>> {
    let bad = || HarnessError::config(format!("cannot parse range {s:?}"));
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    let s = s.trim();
    for sep in ["..=", "..", "-"] {
        if let Some((a, b)) = s.split_once(sep) {
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(bad());
            }
            return Ok((a..=b).collect());
        }
    }
    s.split(',').map(num).collect()
}
