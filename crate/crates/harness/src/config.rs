use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topotrack::{IstaConfig, JacobianMethod, ScenarioConfig};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackerKind {
    #[serde(rename = "EKF")]
    Ekf,
    #[serde(rename = "GSP-EKF")]
    GspEkf,
    #[serde(rename = "Oracle")]
    Oracle,
    #[serde(rename = "LinearKF")]
    LinearKf,
}

impl TrackerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ekf => "EKF",
            Self::GspEkf => "GSP-EKF",
            Self::Oracle => "Oracle",
            Self::LinearKf => "LinearKF",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerSpec {
    pub kind: TrackerKind,
    /// Column label in the outputs; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// GSP-EKF only; defaults to one iteration with threshold 0.25.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ista: Option<IstaConfig>,
    /// Defaults to the reference formula for the plain EKF and to the
    /// dynamic-programming routine for everything else.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian: Option<JacobianMethod>,
}

impl TrackerSpec {
    pub fn new(kind: TrackerKind) -> Self {
        Self {
            kind,
            label: None,
            ista: None,
            jacobian: None,
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.name())
    }

    pub fn ista(&self) -> IstaConfig {
        self.ista.clone().unwrap_or_default()
    }

    pub fn jacobian(&self) -> JacobianMethod {
        self.jacobian.unwrap_or(match self.kind {
            TrackerKind::Ekf => JacobianMethod::Naive,
            _ => JacobianMethod::Dp,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitEstimate {
    #[default]
    Ones,
    Zeros,
    Constant(f64),
}

impl InitEstimate {
    pub fn value(self) -> f64 {
        match self {
            Self::Ones => 1.0,
            Self::Zeros => 0.0,
            Self::Constant(v) => v,
        }
    }
}

/// One point of a parameter sweep: a JSON merge patch applied to the base
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub label: String,
    pub patch: serde_json::Value,
}

fn default_cov_scale() -> f64 {
    0.25
}
fn default_threshold() -> f64 {
    topotrack::metrics::DEFAULT_SUPPORT_THRESHOLD
}
fn default_summary_from() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    /// Trajectory generator settings. Its own `seed` is ignored here: trial
    /// `k` uses stream `k` of the experiment `seed`.
    pub scenario: ScenarioConfig,
    pub trackers: Vec<TrackerSpec>,
    /// Process noise std handed to the trackers as `sigma^2 I`; defaults to
    /// the scenario's `sigma_e`.
    #[serde(default, rename = "assumed_Q_sigma", skip_serializing_if = "Option::is_none")]
    pub assumed_q_sigma: Option<f64>,
    /// Measurement noise std handed to the trackers; defaults to the
    /// scenario's `sigma_v`. Must end up positive.
    #[serde(default, rename = "assumed_R_sigma", skip_serializing_if = "Option::is_none")]
    pub assumed_r_sigma: Option<f64>,
    #[serde(default)]
    pub init_estimate: InitEstimate,
    #[serde(default = "default_cov_scale")]
    pub init_covariance_scale: f64,
    pub mc_trials: usize,
    #[serde(default = "default_threshold")]
    pub eier_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// First time index included in the time-averaged summary.
    #[serde(default = "default_summary_from")]
    pub summary_from: usize,
    /// Also export every generated trajectory as CSV.
    #[serde(default)]
    pub write_trajectories: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn q_sigma(&self) -> f64 {
        self.assumed_q_sigma.unwrap_or(self.scenario.sigma_e)
    }

    pub fn r_sigma(&self) -> f64 {
        self.assumed_r_sigma.unwrap_or(self.scenario.sigma_v)
    }

    /// Checks the base configuration and every sweep point.
    pub fn validate(&self) -> Result<()> {
        for (_, point) in self.points()? {
            point.validate_point()?;
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.mc_trials < 1 {
            return Err(HarnessError::config("mc_trials must be at least 1"));
        }
        if self.trackers.is_empty() {
            return Err(HarnessError::config("at least one tracker is required"));
        }
        let labels: BTreeSet<_> = self.trackers.iter().map(TrackerSpec::label).collect();
        if labels.len() != self.trackers.len() {
            return Err(HarnessError::config("tracker labels must be unique"));
        }
        let q = self.q_sigma();
        if !(q >= 0.0 && q.is_finite()) {
            return Err(HarnessError::config("assumed_Q_sigma must be finite and >= 0"));
        }
        let r = self.r_sigma();
        if !(r > 0.0 && r.is_finite()) {
            return Err(HarnessError::config(
                "trackers need a positive measurement noise; set sigma_v or assumed_R_sigma",
            ));
        }
        if !(self.init_covariance_scale >= 0.0 && self.init_covariance_scale.is_finite()) {
            return Err(HarnessError::config("init_covariance_scale must be finite and >= 0"));
        }
        if !self.eier_threshold.is_finite() {
            return Err(HarnessError::config("eier_threshold must be finite"));
        }
        for t in &self.trackers {
            if t.ista.is_some() && t.kind != TrackerKind::GspEkf {
                return Err(HarnessError::config(format!("{}: ista applies to GSP-EKF only", t.label())));
            }
            if t.kind == TrackerKind::GspEkf {
                t.ista().validate()?;
            }
            if t.kind == TrackerKind::LinearKf && self.scenario.filter.order() != 1 {
                return Err(HarnessError::config(format!(
                    "{}: needs a first-order filter, got order {}",
                    t.label(),
                    self.scenario.filter.order()
                )));
            }
        }
        Ok(())
    }

    /// Resolved configurations, one per sweep point. Without a sweep this is
    /// the configuration itself under an empty label.
    pub fn points(&self) -> Result<Vec<(String, ExperimentConfig)>> {
        if self.sweep.is_empty() {
            return Ok(vec![(String::new(), self.clone())]);
        }
        let mut base = self.clone();
        base.sweep.clear();
        let base = serde_json::to_value(&base)?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(self.sweep.len());
        for point in &self.sweep {
            if !seen.insert(point.label.as_str()) {
                return Err(HarnessError::config(format!("duplicate sweep label {:?}", point.label)));
            }
            if point.patch.get("sweep").is_some() {
                return Err(HarnessError::config("sweep points cannot nest sweeps"));
            }
            let mut value = base.clone();
            json_patch::merge(&mut value, &point.patch);
            // a filter given in a patch replaces the base filter outright
            if let Some(filter) = point.patch.pointer("/scenario/filter") {
                value["scenario"]["filter"] = filter.clone();
            }
            let cfg: ExperimentConfig = serde_json::from_value(value)
                .map_err(|e| HarnessError::config(format!("sweep point {:?}: {e}", point.label)))?;
            out.push((point.label.clone(), cfg));
        }
        Ok(out)
    }
}
