//! One-step-per-observation topology trackers.
//!
//! All trackers share the prediction / linearization machinery and differ in
//! how the posterior estimate is formed:
//!
//! * [`ekf_step`]: plain EKF update `x_pred + K (y - h(x_pred))`.
//! * [`gsp_ekf_step`]: the EKF update refined by proximal-gradient (ISTA)
//!   iterations on the l1-regularized MAP objective; covariance still from
//!   the unregularized gain.
//! * [`oracle_step`]: prediction and update restricted to a known support.
//! * [`linear_kf_step`]: exact Kalman filter for first-order filters, where
//!   `h(x) = H x + c` is affine.
//!
//! Point estimates are clamped to be nonnegative after every update; the
//! covariance is never touched by the clamp.

mod ista;

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{self, linear_observation, JacobianMethod, PolynomialFilter};
use crate::graph::{laplacian_from_weights, IncidenceMatrix};
use crate::linalg::{condition_number, symmetrize};

pub use ista::{ista_update, soft_threshold, IstaInit, IstaProblem};

/// Estimate and error covariance of a tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub estimate: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl TrackerState {
    pub fn new(estimate: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let m = estimate.len();
        if covariance.shape() != (m, m) {
            return Err(Error::dims(
                "TrackerState",
                format!("{m}x{m}"),
                format!("{}x{}", covariance.nrows(), covariance.ncols()),
            ));
        }
        Ok(Self {
            estimate,
            covariance,
        })
    }

    /// `x = value * 1`, `Sigma = scale * I`.
    pub fn isotropic(dim: usize, value: f64, scale: f64) -> Self {
        Self {
            estimate: DVector::from_element(dim, value),
            covariance: DMatrix::identity(dim, dim) * scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.estimate.len()
    }
}

/// Process covariance `Q` (edges x edges) and measurement covariance `R`
/// (nodes x nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub process: DMatrix<f64>,
    pub measurement: DMatrix<f64>,
}

impl NoiseModel {
    pub fn new(process: DMatrix<f64>, measurement: DMatrix<f64>) -> Result<Self> {
        if !process.is_square() || !measurement.is_square() {
            return Err(Error::invalid("noise covariances must be square"));
        }
        if measurement.clone().cholesky().is_none() {
            return Err(Error::invalid(
                "measurement covariance must be positive definite",
            ));
        }
        Ok(Self {
            process,
            measurement,
        })
    }

    /// `Q = sigma_e^2 I`, `R = sigma_v^2 I`.
    pub fn isotropic(max_edges: usize, n_nodes: usize, sigma_e: f64, sigma_v: f64) -> Result<Self> {
        Self::new(
            DMatrix::identity(max_edges, max_edges) * sigma_e.powi(2),
            DMatrix::identity(n_nodes, n_nodes) * sigma_v.powi(2),
        )
    }
}

/// Proximal-gradient settings for the sparsity-aware update. Iteration `i`
/// uses step `step_sizes[i]` and threshold `mu * step_sizes[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IstaConfig {
    pub iterations: usize,
    pub mu: f64,
    pub step_sizes: Vec<f64>,
}

impl Default for IstaConfig {
    /// One iteration with `mu * rho = 0.25`.
    fn default() -> Self {
        Self::constant(1, 0.25, 1.0)
    }
}

impl IstaConfig {
    pub fn constant(iterations: usize, mu: f64, step: f64) -> Self {
        Self {
            iterations,
            mu,
            step_sizes: vec![step; iterations],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::invalid("ISTA needs at least one iteration"));
        }
        if self.step_sizes.len() != self.iterations {
            return Err(Error::invalid(format!(
                "{} step sizes for {} iterations",
                self.step_sizes.len(),
                self.iterations
            )));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid("mu must be finite and >= 0"));
        }
        if self.step_sizes.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::invalid("step sizes must be finite and > 0"));
        }
        Ok(())
    }
}

/// State evolution `x_t = f(x_{t-1}) + e_t` and its Jacobian.
pub trait StateTransition: Send + Sync {
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// `F Sigma F^T` with `F` the Jacobian at `x`.
    fn propagate_covariance(&self, x: &DVector<f64>, covariance: &DMatrix<f64>) -> DMatrix<f64> {
        let f = self.jacobian(x);
        &f * covariance * f.transpose()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTransition;

impl StateTransition for IdentityTransition {
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(x.len(), x.len())
    }

    fn propagate_covariance(&self, _x: &DVector<f64>, covariance: &DMatrix<f64>) -> DMatrix<f64> {
        covariance.clone()
    }
}

#[derive(Debug, Clone)]
pub struct LinearTransition(pub DMatrix<f64>);

impl StateTransition for LinearTransition {
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }

    fn jacobian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.0.clone()
    }
}

impl<T: StateTransition + ?Sized> StateTransition for Arc<T> {
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).apply(x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian(x)
    }

    fn propagate_covariance(&self, x: &DVector<f64>, covariance: &DMatrix<f64>) -> DMatrix<f64> {
        (**self).propagate_covariance(x, covariance)
    }
}

/// Known set of active edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportMask {
    dim: usize,
    active: BTreeSet<usize>,
}

impl SupportMask {
    pub fn new(dim: usize, active: BTreeSet<usize>) -> Result<Self> {
        if let Some(&m) = active.iter().next_back() {
            if m >= dim {
                return Err(Error::invalid(format!(
                    "edge {m} out of range for {dim} edges"
                )));
            }
        }
        Ok(Self { dim, active })
    }

    pub fn full(dim: usize) -> Self {
        Self {
            dim,
            active: (0..dim).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn active(&self) -> &BTreeSet<usize> {
        &self.active
    }

    pub fn contains(&self, m: usize) -> bool {
        self.active.contains(&m)
    }

    /// Diagonal 0/1 matrix.
    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.indicator())
    }

    pub fn indicator(&self) -> DVector<f64> {
        DVector::from_fn(self.dim, |m, _| if self.contains(m) { 1.0 } else { 0.0 })
    }

    fn apply_vec(&self, v: &mut DVector<f64>) {
        for m in 0..self.dim {
            if !self.contains(m) {
                v[m] = 0.0;
            }
        }
    }

    /// `M A M` for a square `A`.
    fn apply_sym(&self, a: &mut DMatrix<f64>) {
        for m in 0..self.dim {
            if !self.contains(m) {
                a.row_mut(m).fill(0.0);
                a.column_mut(m).fill(0.0);
            }
        }
    }
}

/// Everything a tracker needs besides its state and the current sample.
#[derive(Clone, Copy)]
pub struct TrackingModel<'a> {
    pub transition: &'a dyn StateTransition,
    pub noise: &'a NoiseModel,
    pub filter: &'a PolynomialFilter,
    pub incidence: &'a IncidenceMatrix,
    pub jacobian: JacobianMethod,
}

impl TrackingModel<'_> {
    fn check(&self, state: &TrackerState, q: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        let m = self.incidence.max_edges();
        let n = self.incidence.n_nodes();
        if state.dim() != m {
            return Err(Error::dims("tracker state", m, state.dim()));
        }
        if self.noise.process.nrows() != m {
            return Err(Error::dims("process covariance", m, self.noise.process.nrows()));
        }
        if self.noise.measurement.nrows() != n {
            return Err(Error::dims(
                "measurement covariance",
                n,
                self.noise.measurement.nrows(),
            ));
        }
        if q.len() != n || y.len() != n {
            return Err(Error::dims("graph signal", n, format!("{} / {}", q.len(), y.len())));
        }
        Ok(())
    }
}

/// `x_pred = f(x)`, `Sigma_pred = F Sigma F^T + Q`.
pub fn predict(
    state: &TrackerState,
    transition: &dyn StateTransition,
    noise: &NoiseModel,
) -> TrackerState {
    let mut covariance =
        transition.propagate_covariance(&state.estimate, &state.covariance) + &noise.process;
    symmetrize(&mut covariance);
    TrackerState {
        estimate: transition.apply(&state.estimate),
        covariance,
    }
}

/// Innovation covariance and Kalman gain.
#[derive(Debug, Clone)]
pub struct Innovation {
    pub covariance: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

/// `S = H Sigma H^T + R`, `K = Sigma H^T S^{-1}` via a Cholesky solve.
pub fn innovation_moments(
    predicted: &TrackerState,
    jacobian: &DMatrix<f64>,
    noise: &NoiseModel,
) -> Result<Innovation> {
    let h_sigma = jacobian * &predicted.covariance;
    let mut s = &h_sigma * jacobian.transpose() + &noise.measurement;
    symmetrize(&mut s);
    let chol = s.clone().cholesky().ok_or_else(|| Error::NumericalFailure {
        context: "innovation covariance",
        detail: "not positive definite".into(),
        condition: condition_number(&s),
    })?;
    // S K^T = H Sigma  (Sigma symmetric)
    let gain = chol.solve(&h_sigma).transpose();
    if gain.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            context: "kalman gain",
            detail: "non-finite entries".into(),
            condition: condition_number(&s),
        });
    }
    Ok(Innovation {
        covariance: s,
        gain,
    })
}

/// `(I - K H) Sigma (I - K H)^T + K R K^T`, evaluated as
/// `A - (A H^T) K^T + K R K^T` with `A = Sigma - K (H Sigma)`.
pub fn joseph_update(
    predicted_cov: &DMatrix<f64>,
    gain: &DMatrix<f64>,
    jacobian: &DMatrix<f64>,
    measurement_cov: &DMatrix<f64>,
) -> DMatrix<f64> {
    let a = predicted_cov - gain * (jacobian * predicted_cov);
    let mut out = &a - (&a * jacobian.transpose()) * gain.transpose()
        + gain * measurement_cov * gain.transpose();
    symmetrize(&mut out);
    out
}

/// Linearization of the measurement map at the predicted state together with
/// the unregularized EKF update.
#[derive(Debug, Clone)]
pub struct Linearized {
    pub predicted: TrackerState,
    /// `h(x_pred)`.
    pub predicted_observation: DVector<f64>,
    pub jacobian: DMatrix<f64>,
    pub innovation: Innovation,
    /// `x_pred + K (y - h(x_pred))`, before any clamping.
    pub ekf_estimate: DVector<f64>,
    /// Joseph-form posterior covariance.
    pub posterior_covariance: DMatrix<f64>,
}

/// Linearizes at an already predicted state and forms the EKF update.
pub fn linearize(
    model: &TrackingModel<'_>,
    predicted: TrackerState,
    q: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<Linearized> {
    let l = laplacian_from_weights(model.incidence, &predicted.estimate)?;
    let h_pred = model.filter.apply(&l, q)?;
    let jac = filter::jacobian(
        model.jacobian,
        model.filter,
        model.incidence,
        &predicted.estimate,
        &l,
        q,
    )?;
    let innovation = innovation_moments(&predicted, &jac, model.noise)?;
    let ekf_estimate = &predicted.estimate + &innovation.gain * (y - &h_pred);
    let posterior_covariance = joseph_update(
        &predicted.covariance,
        &innovation.gain,
        &jac,
        &model.noise.measurement,
    );
    Ok(Linearized {
        predicted,
        predicted_observation: h_pred,
        jacobian: jac,
        innovation,
        ekf_estimate,
        posterior_covariance,
    })
}

/// Sets negative entries to zero.
pub fn clamp_nonnegative(mut x: DVector<f64>) -> DVector<f64> {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}

pub fn ekf_step(
    state: &TrackerState,
    model: &TrackingModel<'_>,
    q: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<TrackerState> {
    model.check(state, q, y)?;
    let predicted = predict(state, model.transition, model.noise);
    let lin = linearize(model, predicted, q, y)?;
    Ok(TrackerState {
        estimate: clamp_nonnegative(lin.ekf_estimate),
        covariance: lin.posterior_covariance,
    })
}

/// GSP-EKF step: EKF linearization, ISTA-refined estimate started from the
/// EKF update, Joseph covariance from the unregularized gain.
pub fn gsp_ekf_step(
    state: &TrackerState,
    model: &TrackingModel<'_>,
    q: &DVector<f64>,
    y: &DVector<f64>,
    ista: &IstaConfig,
) -> Result<TrackerState> {
    model.check(state, q, y)?;
    let predicted = predict(state, model.transition, model.noise);
    let lin = linearize(model, predicted, q, y)?;
    let problem = IstaProblem::from_linearized(&lin, model.noise, y);
    let estimate = ista_update(&problem, ista, IstaInit::EkfUpdate(lin.ekf_estimate.clone()))?;
    Ok(TrackerState {
        estimate: clamp_nonnegative(estimate),
        covariance: lin.posterior_covariance,
    })
}

/// Known-support step. Prediction `M (f(x) + e_bar)`, covariance
/// `M F Sigma F^T M + M Q M`, Kalman update on the active edges and zeros
/// elsewhere.
pub fn oracle_step(
    state: &TrackerState,
    model: &TrackingModel<'_>,
    q: &DVector<f64>,
    y: &DVector<f64>,
    mask: &SupportMask,
    mean_jump: &DVector<f64>,
) -> Result<TrackerState> {
    model.check(state, q, y)?;
    if mask.dim() != state.dim() || mean_jump.len() != state.dim() {
        return Err(Error::dims(
            "oracle mask / mean jump",
            state.dim(),
            format!("{} / {}", mask.dim(), mean_jump.len()),
        ));
    }
    let mut predicted = predict(state, model.transition, model.noise);
    predicted.estimate += mean_jump;
    mask.apply_vec(&mut predicted.estimate);
    mask.apply_sym(&mut predicted.covariance);

    let lin = linearize(model, predicted, q, y)?;
    let mut estimate = lin.ekf_estimate;
    mask.apply_vec(&mut estimate);
    let mut covariance = lin.posterior_covariance;
    mask.apply_sym(&mut covariance);
    Ok(TrackerState {
        estimate: clamp_nonnegative(estimate),
        covariance,
    })
}

/// Exact Kalman step for `y = H x + c + v` with `H = a1 B diag(B^T q)`,
/// `c = a0 q`, and linear dynamics `x_t = F x_{t-1} + e_t`.
#[allow(clippy::too_many_arguments)]
pub fn linear_kf_step(
    state: &TrackerState,
    transition: &DMatrix<f64>,
    noise: &NoiseModel,
    a0: f64,
    a1: f64,
    b: &IncidenceMatrix,
    q: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<TrackerState> {
    let m = b.max_edges();
    if state.dim() != m || transition.shape() != (m, m) {
        return Err(Error::dims("linear_kf_step", m, state.dim()));
    }
    if y.len() != b.n_nodes() {
        return Err(Error::dims("linear_kf_step observation", b.n_nodes(), y.len()));
    }
    let predicted = predict(state, &LinearTransition(transition.clone()), noise);
    let (h, c) = linear_observation(a0, a1, b, q)?;
    let innovation = innovation_moments(&predicted, &h, noise)?;
    let residual = y - (&h * &predicted.estimate + c);
    let estimate = &predicted.estimate + &innovation.gain * residual;
    let covariance = joseph_update(
        &predicted.covariance,
        &innovation.gain,
        &h,
        &noise.measurement,
    );
    Ok(TrackerState {
        estimate: clamp_nonnegative(estimate),
        covariance,
    })
}
