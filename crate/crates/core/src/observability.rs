//! Observability of the linear time-varying model
//! `x_{t+1} = F_{t+1} x_t + e`, `y_t = H_t x_t + c_t + v`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filter::linear_observation;
use crate::graph::IncidenceMatrix;
use crate::linalg::numerical_rank;

/// Observation matrices `H_t .. H_{t+T-1}` and the transitions
/// `F_{t+1} .. F_{t+T-1}` between them.
#[derive(Debug, Clone)]
pub struct ObservabilityProblem {
    h_seq: Vec<DMatrix<f64>>,
    f_seq: Vec<DMatrix<f64>>,
}

impl ObservabilityProblem {
    pub fn new(h_seq: Vec<DMatrix<f64>>, f_seq: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = h_seq.first() else {
            return Err(Error::invalid("observability horizon must be at least 1"));
        };
        if f_seq.len() + 1 != h_seq.len() {
            return Err(Error::invalid(format!(
                "{} transitions for horizon {}",
                f_seq.len(),
                h_seq.len()
            )));
        }
        let (n, m) = first.shape();
        if let Some(h) = h_seq.iter().find(|h| h.shape() != (n, m)) {
            return Err(Error::dims("observation matrix", format!("{n}x{m}"), format!("{}x{}", h.nrows(), h.ncols())));
        }
        if let Some(f) = f_seq.iter().find(|f| f.shape() != (m, m)) {
            return Err(Error::dims("transition matrix", format!("{m}x{m}"), format!("{}x{}", f.nrows(), f.ncols())));
        }
        Ok(Self { h_seq, f_seq })
    }

    /// Time-invariant identity dynamics.
    pub fn with_identity_dynamics(h_seq: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = h_seq.first().map_or(0, |h| h.ncols());
        let f_seq = vec![DMatrix::identity(m, m); h_seq.len().saturating_sub(1)];
        Self::new(h_seq, f_seq)
    }

    /// Linear-filter observation matrices `a1 B diag(B^T q_t)` for the given
    /// inputs, with identity dynamics.
    pub fn from_inputs(b: &IncidenceMatrix, a1: f64, inputs: &[DVector<f64>]) -> Result<Self> {
        let h_seq = inputs
            .iter()
            .map(|q| linear_observation(0.0, a1, b, q).map(|(h, _)| h))
            .collect::<Result<Vec<_>>>()?;
        Self::with_identity_dynamics(h_seq)
    }

    pub fn horizon(&self) -> usize {
        self.h_seq.len()
    }

    pub fn state_dim(&self) -> usize {
        self.h_seq[0].ncols()
    }

    pub fn h_seq(&self) -> &[DMatrix<f64>] {
        &self.h_seq
    }

    pub fn f_seq(&self) -> &[DMatrix<f64>] {
        &self.f_seq
    }
}

/// Block rows `H_t, H_{t+1} F_{t+1}, ..., H_{t+T-1} F_{t+T-1} ... F_{t+1}`.
pub fn observability_matrix(problem: &ObservabilityProblem) -> DMatrix<f64> {
    let (n, m) = problem.h_seq[0].shape();
    let mut out = DMatrix::zeros(n * problem.horizon(), m);
    let mut running = DMatrix::<f64>::identity(m, m);
    for (i, h) in problem.h_seq.iter().enumerate() {
        if i > 0 {
            running = &problem.f_seq[i - 1] * running;
        }
        out.rows_mut(i * n, n).copy_from(&(h * &running));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObservabilityReport {
    pub observable: bool,
    pub rank: usize,
}

/// Full column rank test with singular values above `tol * sigma_max * max(rows, cols)`.
pub fn is_t_step_observable(problem: &ObservabilityProblem, tol: f64) -> ObservabilityReport {
    let o = observability_matrix(problem);
    let rank = numerical_rank(&o, tol);
    ObservabilityReport {
        observable: rank == problem.state_dim(),
        rank,
    }
}

/// Smallest `T` with `T N >= N (N - 1) / 2`, i.e. `ceil((N - 1) / 2)`.
pub fn min_observability_horizon(n_nodes: usize) -> usize {
    n_nodes / 2
}
