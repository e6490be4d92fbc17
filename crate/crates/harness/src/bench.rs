//! Wall-clock comparison of the two Jacobian routines.

use std::hint::black_box;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use topotrack::filter::{jacobian_dp, jacobian_naive};
use topotrack::graph::{build_incidence, laplacian_from_weights};
use topotrack::sim::trial_rng;
use topotrack::{EdgeIndexMap, JacobianMethod, PolynomialFilter};

use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, CsvRow};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub p: usize,
    pub method: JacobianMethod,
    pub median_seconds: f64,
}

impl CsvRow for BenchRow {
    fn header() -> &'static [&'static str] {
        &["N", "P", "method", "median_seconds"]
    }

    fn fields(&self) -> Vec<String> {
        let method = match self.method {
            JacobianMethod::Naive => "naive",
            JacobianMethod::Dp => "dp",
        };
        vec![
            self.n.to_string(),
            self.p.to_string(),
            method.to_string(),
            fmt_f64(self.median_seconds),
        ]
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Times both routines on `repeats` random instances per `(N, P)` pair, each
/// including the Laplacian assembly, with the filter `sum_p 2^-p L^p`,
/// weights uniform on `[0, 2)` and Gaussian inputs. `repeats == 0` yields no
/// rows.
pub fn run_jacobian_bench(n_list: &[usize], p_list: &[usize], repeats: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if let Some(n) = n_list.iter().find(|&&n| n < 2) {
        return Err(HarnessError::config(format!("graph size {n} is below 2")));
    }
    if let Some(p) = p_list.iter().find(|&&p| p < 1) {
        return Err(HarnessError::config(format!("filter order {p} is below 1")));
    }
    let mut rows = Vec::new();
    if repeats == 0 {
        return Ok(rows);
    }
    for (case, (&n, &p)) in n_list
        .iter()
        .flat_map(|n| p_list.iter().map(move |p| (n, p)))
        .enumerate()
    {
        let mut rng = trial_rng(seed, case as u64);
        let b = build_incidence(&EdgeIndexMap::new(n)?);
        let filter = PolynomialFilter::builtin("nlp", Some(p))?;
        let mut naive = Vec::with_capacity(repeats);
        let mut dp = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let x = DVector::from_fn(b.max_edges(), |_, _| rng.random_range(0.0..2.0));
            let q = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));

            let start = Instant::now();
            black_box(jacobian_naive(&filter, black_box(&x), &b, &q)?);
            naive.push(start.elapsed().as_secs_f64());

            let start = Instant::now();
            let l = laplacian_from_weights(&b, black_box(&x))?;
            black_box(jacobian_dp(&filter, b.map(), &l, &q)?);
            dp.push(start.elapsed().as_secs_f64());
        }
        rows.push(BenchRow {
            n,
            p,
            method: JacobianMethod::Naive,
            median_seconds: median(naive),
        });
        rows.push(BenchRow {
            n,
            p,
            method: JacobianMethod::Dp,
            median_seconds: median(dp),
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log(time)` against `log(P)` for one method at one
/// graph size.
pub fn log_log_slope(rows: &[BenchRow], n: usize, method: JacobianMethod) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n == n && r.method == method)
        .map(|r| ((r.p as f64).ln(), r.median_seconds.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
