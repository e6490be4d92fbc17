//! Pass/fail bookkeeping and curve helpers for the acceptance run.

use std::fmt;

use topotrack_harness::AggregateRow;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {}", self.id, self.name, self.detail)
    }
}

/// Collects outcomes, printing each as it arrives.
#[derive(Debug, Default)]
pub struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    pub fn record(&mut self, id: &str, name: &str, passed: bool, detail: impl Into<String>) {
        let outcome = Outcome {
            id: id.to_string(),
            name: name.to_string(),
            passed,
            detail: detail.into(),
        };
        println!("{outcome}");
        self.outcomes.push(outcome);
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }

    pub fn summary(&self) -> String {
        let failed = self.failures();
        let mut s = format!("{} of {} checks passed", self.outcomes.len() - failed.len(), self.outcomes.len());
        if !failed.is_empty() {
            let ids: Vec<&str> = failed.iter().map(|o| o.id.as_str()).collect();
            s.push_str(&format!("; failing: {}", ids.join(", ")));
        }
        s
    }
}

/// Per-time aggregate curves of one tracker, indexed by `t`.
#[derive(Debug, Clone, Default)]
pub struct Curve {
    pub nmse: Vec<(usize, f64)>,
    pub eier: Vec<(usize, f64)>,
}

impl Curve {
    pub fn of(rows: &[AggregateRow], tracker: &str) -> Self {
        let mut c = Self::default();
        for r in rows.iter().filter(|r| r.tracker == tracker) {
            c.nmse.push((r.t, r.mean_nmse));
            c.eier.push((r.t, r.mean_eier));
        }
        c
    }

    pub fn at(series: &[(usize, f64)], t: usize) -> Option<f64> {
        series.iter().find(|p| p.0 == t).map(|p| p.1)
    }

    /// Mean over the points with `t` in `range`.
    pub fn mean_over(series: &[(usize, f64)], range: impl std::ops::RangeBounds<usize>) -> f64 {
        let vals: Vec<f64> = series.iter().filter(|p| range.contains(&p.0)).map(|p| p.1).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Whether `series(t) > series(t - lag)` at every `t` in `peaks`.
pub fn peaks_exceed_lookback(series: &[(usize, f64)], peaks: &[usize], lag: usize) -> bool {
    peaks.iter().all(|&t| {
        match (Curve::at(series, t), t.checked_sub(lag).and_then(|s| Curve::at(series, s))) {
            (Some(now), Some(before)) => now > before,
            _ => false,
        }
    })
}
