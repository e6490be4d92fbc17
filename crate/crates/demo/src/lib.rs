//! Browser bindings for a few small topotrack experiments.
//!
//! Every export takes plain numbers or a JSON string and returns JSON, so the
//! page needs no generated TypeScript types. Each binding wraps a plain Rust
//! function, and the native tests exercise those.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use topotrack::filter::{jacobian_dp, jacobian_naive};
use topotrack::graph::{build_incidence, laplacian_from_weights, support_of};
use topotrack::metrics::{eier, normalized_mse, to_db};
use topotrack::observability::{is_t_step_observable, ObservabilityProblem};
use topotrack::sim::{generate_with_rng, trial_rng};
use topotrack::trackers::{ekf_step, gsp_ekf_step, oracle_step};
use topotrack::{
    EdgeIndexMap, IdentityTransition, IstaConfig, JacobianMethod, NoiseModel, PolynomialFilter,
    ScenarioConfig, SupportMask, TrackerState, TrackingModel,
};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingParams {
    pub n_nodes: usize,
    pub edges: usize,
    pub t_max: usize,
    pub change_interval: usize,
    pub sigma_e: f64,
    pub sigma_v: f64,
    /// Order of the `sum_p 2^-p L^p` filter.
    pub order: usize,
    pub mu: f64,
    pub seed: u64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            n_nodes: 8,
            edges: 10,
            t_max: 80,
            change_interval: 20,
            sigma_e: 0.05,
            sigma_v: 0.3,
            order: 3,
            mu: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub tracker: String,
    pub nmse_db: Vec<f64>,
    pub eier: Vec<f64>,
    /// Estimate at the last step, or empty if the tracker failed.
    pub final_weights: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackingRun {
    pub pairs: Vec<(usize, usize)>,
    pub true_weights: Vec<f64>,
    pub event_times: Vec<usize>,
    pub curves: Vec<Curve>,
}

pub fn run_tracking(params: &TrackingParams) -> Result<TrackingRun, String> {
    if params.sigma_v.is_nan() || params.sigma_v <= 0.0 {
        return Err("sigma_v must be positive".into());
    }
    let scenario = ScenarioConfig {
        n_nodes: params.n_nodes,
        t_max: params.t_max,
        init_edge_count: params.edges,
        change_interval: params.change_interval,
        changes_per_event: 1,
        sigma_e: params.sigma_e,
        sigma_v: params.sigma_v,
        filter: PolynomialFilter::builtin("nlp", Some(params.order)).map_err(|e| e.to_string())?,
        new_edge_mean: 1.0,
        new_edge_var: 0.01,
        seed: params.seed,
    };
    let traj = generate_with_rng(&scenario, &mut trial_rng(params.seed, 0)).map_err(|e| e.to_string())?;
    let map = EdgeIndexMap::new(params.n_nodes).map_err(|e| e.to_string())?;
    let b = build_incidence(&map);
    let m = b.max_edges();
    let noise = NoiseModel::isotropic(m, params.n_nodes, params.sigma_e, params.sigma_v).map_err(|e| e.to_string())?;
    let model = TrackingModel {
        transition: &IdentityTransition,
        noise: &noise,
        filter: &scenario.filter,
        incidence: &b,
        jacobian: JacobianMethod::Dp,
    };
    let ista = IstaConfig::constant(1, params.mu, 1.0);

    let names = ["EKF", "GSP-EKF", "Oracle"];
    let mut states = [
        TrackerState::isotropic(m, 1.0, 0.25),
        TrackerState::isotropic(m, 1.0, 0.25),
        TrackerState {
            estimate: traj.initial_state.clone(),
            covariance: SupportMask::new(m, traj.initial_support.clone())
                .map_err(|e| e.to_string())?
                .as_matrix()
                * 0.25,
        },
    ];
    let mut curves: Vec<Curve> = names
        .iter()
        .map(|name| Curve {
            tracker: name.to_string(),
            nmse_db: Vec::with_capacity(traj.len()),
            eier: Vec::with_capacity(traj.len()),
            final_weights: Vec::new(),
            failure: None,
        })
        .collect();

    for i in 0..traj.len() {
        let (q, y, truth) = (&traj.inputs[i], &traj.observations[i], &traj.true_states[i]);
        for (k, curve) in curves.iter_mut().enumerate() {
            if curve.failure.is_some() {
                continue;
            }
            let next = match k {
                0 => ekf_step(&states[k], &model, q, y),
                1 => gsp_ekf_step(&states[k], &model, q, y, &ista),
                _ => {
                    let mask = SupportMask::new(m, traj.true_supports[i].clone()).map_err(|e| e.to_string())?;
                    let mut jump = DVector::zeros(m);
                    for e in traj.newly_active(i) {
                        jump[e] = scenario.new_edge_mean;
                    }
                    oracle_step(&states[k], &model, q, y, &mask, &jump)
                }
            };
            match next {
                Ok(s) => {
                    let nmse = normalized_mse(&s.estimate, truth).map_err(|e| e.to_string())?;
                    curve.nmse_db.push(to_db(nmse));
                    curve.eier.push(eier(&support_of(&s.estimate, 0.1), &traj.true_supports[i], params.n_nodes));
                    states[k] = s;
                }
                Err(e) => curve.failure = Some(format!("t={}: {e}", i + 1)),
            }
        }
    }
    for (k, curve) in curves.iter_mut().enumerate() {
        if curve.failure.is_none() {
            curve.final_weights = states[k].estimate.iter().copied().collect();
        }
    }
    Ok(TrackingRun {
        pairs: map.pairs().to_vec(),
        true_weights: traj.true_states.last().map(|x| x.iter().copied().collect()).unwrap_or_default(),
        event_times: scenario.event_times(),
        curves,
    })
}

/// One random instance for the Jacobian comparison.
pub struct JacobianInstance {
    filter: PolynomialFilter,
    b: topotrack::IncidenceMatrix,
    x: DVector<f64>,
    q: DVector<f64>,
}

impl JacobianInstance {
    pub fn new(n: usize, p: usize, seed: u64) -> Result<Self, String> {
        let map = EdgeIndexMap::new(n).map_err(|e| e.to_string())?;
        let b = build_incidence(&map);
        let filter = PolynomialFilter::builtin("nlp", Some(p)).map_err(|e| e.to_string())?;
        let mut rng = trial_rng(seed, 0);
        let x = DVector::from_fn(b.max_edges(), |_, _| rng.random_range(0.0..2.0));
        let q = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        Ok(Self { filter, b, x, q })
    }

    pub fn naive(&self) -> Result<nalgebra::DMatrix<f64>, String> {
        jacobian_naive(&self.filter, &self.x, &self.b, &self.q).map_err(|e| e.to_string())
    }

    pub fn dp(&self) -> Result<nalgebra::DMatrix<f64>, String> {
        let l = laplacian_from_weights(&self.b, &self.x).map_err(|e| e.to_string())?;
        jacobian_dp(&self.filter, self.b.map(), &l, &self.q).map_err(|e| e.to_string())
    }

    /// Largest entrywise difference between the two routines, relative to
    /// the largest entry.
    pub fn relative_gap(&self) -> Result<f64, String> {
        let a = self.naive()?;
        let b = self.dp()?;
        let scale = a.amax().max(f64::MIN_POSITIVE);
        Ok((a - b).amax() / scale)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservabilityPoint {
    pub t: usize,
    pub fraction: f64,
    pub mean_rank: f64,
}

/// Fraction of random input sequences giving a full-rank observability
/// matrix for `T = 1..=n`, with the first-order filter and identity dynamics.
pub fn observability_curve(n: usize, trials: usize, seed: u64) -> Result<Vec<ObservabilityPoint>, String> {
    if trials == 0 {
        return Err("need at least one trial".into());
    }
    let b = build_incidence(&EdgeIndexMap::new(n).map_err(|e| e.to_string())?);
    let inputs: Vec<Vec<DVector<f64>>> = (0..trials)
        .map(|k| {
            let mut rng = trial_rng(seed, k as u64);
            (0..n).map(|_| DVector::from_fn(n, |_, _| rng.sample(StandardNormal))).collect()
        })
        .collect();
    (1..=n)
        .map(|t| {
            let mut hits = 0;
            let mut ranks = 0;
            for qs in &inputs {
                let problem = ObservabilityProblem::from_inputs(&b, 1.0, &qs[..t]).map_err(|e| e.to_string())?;
                let report = is_t_step_observable(&problem, f64::EPSILON);
                hits += report.observable as usize;
                ranks += report.rank;
            }
            Ok(ObservabilityPoint {
                t,
                fraction: hits as f64 / trials as f64,
                mean_rank: ranks as f64 / trials as f64,
            })
        })
        .collect()
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Runs EKF, GSP-EKF and the oracle on one simulated trajectory. `params`
/// is a JSON object with any of the [`TrackingParams`] fields.
#[wasm_bindgen(js_name = runTracking)]
pub fn run_tracking_js(params: &str) -> Result<String, JsError> {
    let params: TrackingParams = serde_json::from_str(params).map_err(|e| JsError::new(&e.to_string()))?;
    to_js(run_tracking(&params))
}

/// Jacobian instance kept on the Rust side so the page can time each routine
/// separately with `performance.now()`.
#[wasm_bindgen]
pub struct JacobianCase(JacobianInstance);

#[wasm_bindgen]
impl JacobianCase {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, p: usize, seed: u64) -> Result<JacobianCase, JsError> {
        JacobianInstance::new(n, p, seed).map(JacobianCase).map_err(|e| JsError::new(&e))
    }

    /// Evaluates the reference Jacobian and returns its largest entry.
    pub fn naive(&self) -> Result<f64, JsError> {
        self.0.naive().map(|j| j.amax()).map_err(|e| JsError::new(&e))
    }

    /// Evaluates the dynamic-programming Jacobian and returns its largest
    /// entry.
    pub fn dp(&self) -> Result<f64, JsError> {
        self.0.dp().map(|j| j.amax()).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = relativeGap)]
    pub fn relative_gap(&self) -> Result<f64, JsError> {
        self.0.relative_gap().map_err(|e| JsError::new(&e))
    }
}

#[wasm_bindgen(js_name = observabilityCurve)]
pub fn observability_curve_js(n: usize, trials: usize, seed: u64) -> Result<String, JsError> {
    to_js(observability_curve(n, trials, seed))
}
