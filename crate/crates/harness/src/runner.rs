//! Monte-Carlo tracking experiments.
//!
//! Trial `k` of an experiment seeded with `s` draws its trajectory from
//! stream `k` of `s`; trackers are deterministic, so a trial's rows do not
//! depend on which other trackers or trials run alongside it.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use topotrack::graph::{build_incidence, support_of};
use topotrack::metrics::{eier, normalized_mse, to_db};
use topotrack::sim::{generate_with_rng, trial_rng};
use topotrack::trackers::{ekf_step, gsp_ekf_step, linear_kf_step, oracle_step};
use topotrack::{
    EdgeIndexMap, IdentityTransition, IncidenceMatrix, NoiseModel, SupportMask, TrackerState,
    TrackingModel, Trajectory,
};

use crate::config::{ExperimentConfig, TrackerKind, TrackerSpec};
use crate::error::{HarnessError, Result};
use crate::output::{create_dir, fmt_f64, write_rows_to, CsvRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Ok,
    /// The tracker failed at this step or earlier in the trial.
    Failed,
}

impl StepStatus {
    fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub point: String,
    pub trial: usize,
    pub t: usize,
    pub tracker: String,
    pub nmse: f64,
    pub eier: f64,
    pub status: StepStatus,
}

impl CsvRow for ResultRow {
    fn header() -> &'static [&'static str] {
        &["experiment", "point", "trial", "t", "tracker", "nmse", "eier", "status"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.point.clone(),
            self.trial.to_string(),
            self.t.to_string(),
            self.tracker.clone(),
            fmt_f64(self.nmse),
            fmt_f64(self.eier),
            self.status.as_str().to_string(),
        ]
    }
}

/// Wall time of one tracker over one trial, measured around the tracker
/// steps only.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub experiment: String,
    pub point: String,
    pub trial: usize,
    pub tracker: String,
    pub steps: usize,
    pub mean_step_seconds: f64,
    pub failure: String,
}

impl CsvRow for TimingRow {
    fn header() -> &'static [&'static str] {
        &["experiment", "point", "trial", "tracker", "steps", "mean_step_seconds", "failure"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.point.clone(),
            self.trial.to_string(),
            self.tracker.clone(),
            self.steps.to_string(),
            fmt_f64(self.mean_step_seconds),
            self.failure.clone(),
        ]
    }
}

/// Mean over the trials in which the tracker was still running.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub experiment: String,
    pub point: String,
    pub t: usize,
    pub tracker: String,
    pub trials: usize,
    pub mean_nmse: f64,
    pub mean_nmse_db: f64,
    pub mean_eier: f64,
}

impl CsvRow for AggregateRow {
    fn header() -> &'static [&'static str] {
        &["experiment", "point", "t", "tracker", "trials", "mean_nmse", "mean_nmse_db", "mean_eier"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.point.clone(),
            self.t.to_string(),
            self.tracker.clone(),
            self.trials.to_string(),
            fmt_f64(self.mean_nmse),
            fmt_f64(self.mean_nmse_db),
            fmt_f64(self.mean_eier),
        ]
    }
}

/// Time average of the aggregate curves from `from_t` on.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub point: String,
    pub tracker: String,
    pub from_t: usize,
    pub mean_nmse: f64,
    pub mean_nmse_db: f64,
    pub mean_eier: f64,
}

impl CsvRow for SummaryRow {
    fn header() -> &'static [&'static str] {
        &["experiment", "point", "tracker", "from_t", "mean_nmse", "mean_nmse_db", "mean_eier"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.point.clone(),
            self.tracker.clone(),
            self.from_t.to_string(),
            fmt_f64(self.mean_nmse),
            fmt_f64(self.mean_nmse_db),
            fmt_f64(self.mean_eier),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads for the trial loop; 0 lets rayon decide.
    pub parallel: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: 1 }
    }
}

/// Everything one experiment produced, in deterministic order: sweep point,
/// then trial, then time, then tracker as listed in the configuration.
#[derive(Debug, Clone, Default)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
    pub trajectories: Vec<(String, usize, Trajectory)>,
    summary_from: BTreeMap<String, usize>,
}

impl ExperimentResults {
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        // (point order, t, tracker order) -> sums
        let mut points: Vec<&str> = Vec::new();
        let mut trackers: Vec<&str> = Vec::new();
        let mut acc: BTreeMap<(usize, usize, usize), (usize, f64, f64)> = BTreeMap::new();
        let mut experiments: BTreeMap<usize, &str> = BTreeMap::new();
        for row in &self.rows {
            let p = position_or_push(&mut points, &row.point);
            let k = position_or_push(&mut trackers, &row.tracker);
            experiments.insert(p, &row.experiment);
            let e = acc.entry((p, row.t, k)).or_insert((0, 0.0, 0.0));
            if row.status == StepStatus::Ok {
                e.0 += 1;
                e.1 += row.nmse;
                e.2 += row.eier;
            }
        }
        acc.into_iter()
            .map(|((p, t, k), (n, nmse, eier))| {
                let mean_nmse = nmse / n as f64;
                AggregateRow {
                    experiment: experiments[&p].to_string(),
                    point: points[p].to_string(),
                    t,
                    tracker: trackers[k].to_string(),
                    trials: n,
                    mean_nmse,
                    mean_nmse_db: to_db(mean_nmse),
                    mean_eier: eier / n as f64,
                }
            })
            .collect()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let aggregate = self.aggregate();
        let mut order: Vec<(String, String)> = Vec::new();
        let mut acc: BTreeMap<usize, (String, usize, f64, f64)> = BTreeMap::new();
        for row in &aggregate {
            let from = self.summary_from.get(&row.point).copied().unwrap_or(1);
            if row.t < from || row.trials == 0 {
                continue;
            }
            let key = (row.point.clone(), row.tracker.clone());
            let i = match order.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    order.push(key);
                    order.len() - 1
                }
            };
            let e = acc.entry(i).or_insert((row.experiment.clone(), 0, 0.0, 0.0));
            e.1 += 1;
            e.2 += row.mean_nmse;
            e.3 += row.mean_eier;
        }
        acc.into_iter()
            .map(|(i, (experiment, n, nmse, eier))| {
                let (point, tracker) = order[i].clone();
                let mean_nmse = nmse / n as f64;
                SummaryRow {
                    experiment,
                    from_t: self.summary_from.get(&point).copied().unwrap_or(1),
                    point,
                    tracker,
                    mean_nmse,
                    mean_nmse_db: to_db(mean_nmse),
                    mean_eier: eier / n as f64,
                }
            })
            .collect()
    }

    /// Writes `results.csv`, `aggregate.csv`, `summary.csv`, `timing.csv` and,
    /// if any were kept, `trajectories/<point>_<trial>.csv`. Only
    /// `timing.csv` varies between identical runs.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        write_rows_to(&dir.join("results.csv"), &self.rows)?;
        write_rows_to(&dir.join("aggregate.csv"), &self.aggregate())?;
        write_rows_to(&dir.join("summary.csv"), &self.summary())?;
        write_rows_to(&dir.join("timing.csv"), &self.timings)?;
        if !self.trajectories.is_empty() {
            let sub = dir.join("trajectories");
            create_dir(&sub)?;
            for (point, trial, traj) in &self.trajectories {
                let name = if point.is_empty() {
                    format!("trial{trial}.csv")
                } else {
                    format!("{point}_trial{trial}.csv")
                };
                let path = sub.join(name);
                let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
                traj.write_csv(BufWriter::new(file))?;
            }
        }
        Ok(())
    }
}

fn position_or_push<'a>(v: &mut Vec<&'a str>, s: &'a str) -> usize {
    match v.iter().position(|x| *x == s) {
        Some(i) => i,
        None => {
            v.push(s);
            v.len() - 1
        }
    }
}

/// Runs every sweep point (or the single configuration) over all trials.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResults> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallel)
        .build()
        .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?;
    let mut out = ExperimentResults::default();
    for (label, point) in config.points()? {
        let b = build_incidence(&EdgeIndexMap::new(point.scenario.n_nodes)?);
        let trials: Vec<Result<TrialOutput>> = pool.install(|| {
            (0..point.mc_trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(point.seed, trial as u64);
                    let traj = generate_with_rng(&point.scenario, &mut rng)?;
                    Ok(run_trial(&point, &label, trial, &b, traj))
                })
                .collect()
        });
        for trial in trials {
            let trial = trial?;
            out.rows.extend(trial.rows);
            out.timings.extend(trial.timings);
            if point.write_trajectories {
                out.trajectories.push((label.clone(), trial.trial, trial.trajectory));
            }
        }
        out.summary_from.insert(label, point.summary_from);
    }
    Ok(out)
}

/// Runs the configured trackers over an externally supplied trajectory as
/// trial 0.
pub fn replay(config: &ExperimentConfig, trajectory: Trajectory) -> Result<ExperimentResults> {
    config.validate()?;
    if trajectory.n_nodes != config.scenario.n_nodes {
        return Err(HarnessError::config(format!(
            "trajectory has {} nodes, configuration {}",
            trajectory.n_nodes, config.scenario.n_nodes
        )));
    }
    let b = build_incidence(&EdgeIndexMap::new(config.scenario.n_nodes)?);
    let trial = run_trial(config, "", 0, &b, trajectory);
    let mut out = ExperimentResults {
        rows: trial.rows,
        timings: trial.timings,
        ..Default::default()
    };
    out.summary_from.insert(String::new(), config.summary_from);
    Ok(out)
}

struct TrialOutput {
    trial: usize,
    rows: Vec<ResultRow>,
    timings: Vec<TimingRow>,
    trajectory: Trajectory,
}

struct Running<'a> {
    spec: &'a TrackerSpec,
    state: TrackerState,
    failure: Option<String>,
    seconds: f64,
    steps: usize,
}

fn initial_state(config: &ExperimentConfig, spec: &TrackerSpec, traj: &Trajectory) -> TrackerState {
    let m = traj.initial_state.len();
    match spec.kind {
        TrackerKind::Oracle => {
            let mask = SupportMask::new(m, traj.initial_support.clone()).expect("support within range");
            TrackerState {
                estimate: traj.initial_state.clone(),
                covariance: mask.as_matrix() * config.init_covariance_scale,
            }
        }
        _ => TrackerState::isotropic(m, config.init_estimate.value(), config.init_covariance_scale),
    }
}

fn run_trial(
    config: &ExperimentConfig,
    point: &str,
    trial: usize,
    b: &IncidenceMatrix,
    traj: Trajectory,
) -> TrialOutput {
    let m = b.max_edges();
    let n = b.n_nodes();
    let noise = NoiseModel::isotropic(m, n, config.q_sigma(), config.r_sigma())
        .expect("validated measurement noise");
    let filter = &config.scenario.filter;
    let identity = DMatrix::identity(m, m);
    let mut running: Vec<Running> = config
        .trackers
        .iter()
        .map(|spec| Running {
            spec,
            state: initial_state(config, spec, &traj),
            failure: None,
            seconds: 0.0,
            steps: 0,
        })
        .collect();

    let mut rows = Vec::with_capacity(traj.len() * running.len());
    for i in 0..traj.len() {
        let (q, y, truth) = (&traj.inputs[i], &traj.observations[i], &traj.true_states[i]);
        for r in running.iter_mut() {
            if r.failure.is_none() {
                let model = TrackingModel {
                    transition: &IdentityTransition,
                    noise: &noise,
                    filter,
                    incidence: b,
                    jacobian: r.spec.jacobian(),
                };
                let start = Instant::now();
                let next = match r.spec.kind {
                    TrackerKind::Ekf => ekf_step(&r.state, &model, q, y),
                    TrackerKind::GspEkf => gsp_ekf_step(&r.state, &model, q, y, &r.spec.ista()),
                    TrackerKind::Oracle => {
                        let mask = SupportMask::new(m, traj.true_supports[i].clone())
                            .expect("support within range");
                        let mut jump = DVector::zeros(m);
                        for e in traj.newly_active(i) {
                            jump[e] = config.scenario.new_edge_mean;
                        }
                        oracle_step(&r.state, &model, q, y, &mask, &jump)
                    }
                    TrackerKind::LinearKf => {
                        let a = filter.coeffs();
                        linear_kf_step(&r.state, &identity, &noise, a[0], a[1], b, q, y)
                    }
                };
                r.seconds += start.elapsed().as_secs_f64();
                r.steps += 1;
                match next {
                    Ok(s) => r.state = s,
                    Err(e) => r.failure = Some(format!("t={}: {e}", i + 1)),
                }
            }
            let (nmse, err, status) = if r.failure.is_none() {
                let est_support = support_of(&r.state.estimate, config.eier_threshold);
                (
                    normalized_mse(&r.state.estimate, truth).expect("matching lengths"),
                    eier(&est_support, &traj.true_supports[i], n),
                    StepStatus::Ok,
                )
            } else {
                (f64::NAN, f64::NAN, StepStatus::Failed)
            };
            rows.push(ResultRow {
                experiment: config.name.clone(),
                point: point.to_string(),
                trial,
                t: i + 1,
                tracker: r.spec.label().to_string(),
                nmse,
                eier: err,
                status,
            });
        }
    }
    let timings = running
        .into_iter()
        .map(|r| TimingRow {
            experiment: config.name.clone(),
            point: point.to_string(),
            trial,
            tracker: r.spec.label().to_string(),
            steps: r.steps,
            mean_step_seconds: if r.steps > 0 { r.seconds / r.steps as f64 } else { 0.0 },
            failure: r.failure.unwrap_or_default(),
        })
        .collect();
    TrialOutput {
        trial,
        rows,
        timings,
        trajectory: traj,
    }
}
