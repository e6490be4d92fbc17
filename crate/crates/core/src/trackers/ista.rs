use std::cell::OnceCell;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{IstaConfig, Linearized, NoiseModel, TrackerState};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, condition_number};

/// `sign(v) * max(0, |v| - beta)`, elementwise.
pub fn soft_threshold(v: &DVector<f64>, beta: f64) -> DVector<f64> {
    v.map(|x| x.signum() * (x.abs() - beta).max(0.0))
}

/// Starting point of the proximal-gradient iterations.
#[derive(Debug, Clone)]
pub enum IstaInit {
    /// The unregularized EKF update. The smooth objective is stationary there,
    /// so the first iteration reduces to a pure soft threshold and skips the
    /// gradient evaluation.
    EkfUpdate(DVector<f64>),
    /// Any other point; every iteration evaluates the gradient.
    Point(DVector<f64>),
}

struct Factors {
    measurement: Cholesky<f64, Dyn>,
    prior: Cholesky<f64, Dyn>,
}

/// The linearized MAP objective
/// `phi(x) = |y - h(x_pred) - H (x - x_pred)|^2_{R^-1} + |x - x_pred|^2_{Sigma^-1}`.
///
/// Factorizations of `R` and `Sigma_pred` are computed on first use; a
/// singular `Sigma_pred` is factorized with a small diagonal jitter.
pub struct IstaProblem<'a> {
    predicted: &'a TrackerState,
    jacobian: &'a DMatrix<f64>,
    noise: &'a NoiseModel,
    observation: &'a DVector<f64>,
    predicted_observation: &'a DVector<f64>,
    factors: OnceCell<std::result::Result<Factors, Error>>,
}

impl<'a> IstaProblem<'a> {
    pub fn new(
        predicted: &'a TrackerState,
        jacobian: &'a DMatrix<f64>,
        noise: &'a NoiseModel,
        observation: &'a DVector<f64>,
        predicted_observation: &'a DVector<f64>,
    ) -> Self {
        Self {
            predicted,
            jacobian,
            noise,
            observation,
            predicted_observation,
            factors: OnceCell::new(),
        }
    }

    pub fn from_linearized(
        lin: &'a Linearized,
        noise: &'a NoiseModel,
        observation: &'a DVector<f64>,
    ) -> Self {
        Self::new(
            &lin.predicted,
            &lin.jacobian,
            noise,
            observation,
            &lin.predicted_observation,
        )
    }

    fn factors(&self) -> Result<&Factors> {
        self.factors
            .get_or_init(|| {
                let measurement = self.noise.measurement.clone().cholesky().ok_or_else(|| {
                    Error::NumericalFailure {
                        context: "ISTA gradient",
                        detail: "measurement covariance not positive definite".into(),
                        condition: condition_number(&self.noise.measurement),
                    }
                })?;
                let prior = cholesky_with_jitter(&self.predicted.covariance).ok_or_else(|| {
                    Error::NumericalFailure {
                        context: "ISTA gradient",
                        detail: "predicted covariance not invertible even with jitter".into(),
                        condition: condition_number(&self.predicted.covariance),
                    }
                })?;
                Ok(Factors { measurement, prior })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn residuals(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let dx = x - &self.predicted.estimate;
        let r = self.observation - self.predicted_observation - self.jacobian * &dx;
        (dx, r)
    }

    /// Value of the smooth objective.
    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        let f = self.factors()?;
        let (dx, r) = self.residuals(x);
        Ok(r.dot(&f.measurement.solve(&r)) + dx.dot(&f.prior.solve(&dx)))
    }

    /// `2 (H^T R^-1 H + Sigma^-1)(x - x_pred) - 2 H^T R^-1 (y - h(x_pred))`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let f = self.factors()?;
        let (dx, r) = self.residuals(x);
        let g = (f.prior.solve(&dx) - self.jacobian.transpose() * f.measurement.solve(&r)) * 2.0;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure {
                context: "ISTA gradient",
                detail: "non-finite gradient".into(),
                condition: condition_number(&self.predicted.covariance),
            });
        }
        Ok(g)
    }

    /// Lipschitz constant of the gradient,
    /// `2 lambda_max(H^T R^-1 H + Sigma^-1)`.
    pub fn lipschitz_constant(&self) -> Result<f64> {
        let f = self.factors()?;
        let hessian = self.jacobian.transpose() * f.measurement.solve(self.jacobian) + f.prior.inverse();
        Ok(2.0 * hessian.symmetric_eigen().eigenvalues.max())
    }
}

/// Proximal-gradient iterations
/// `x <- T_{mu rho_i}(x - rho_i grad phi(x))` on `phi + mu |x|_1`.
pub fn ista_update(problem: &IstaProblem<'_>, cfg: &IstaConfig, init: IstaInit) -> Result<DVector<f64>> {
    cfg.validate()?;
    let (mut x, stationary_start) = match init {
        IstaInit::EkfUpdate(x) => (x, true),
        IstaInit::Point(x) => (x, false),
    };
    for (i, &rho) in cfg.step_sizes.iter().enumerate() {
        let step = if i == 0 && stationary_start {
            x
        } else {
            let g = problem.gradient(&x)?;
            x - g * rho
        };
        x = soft_threshold(&step, cfg.mu * rho);
    }
    Ok(x)
}
