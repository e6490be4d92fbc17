//! Polynomial graph filters `h(L) = sum_{p=0}^P a_p L^p` and their Jacobians
//! with respect to the edge-weight vector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian_from_map, EdgeIndexMap, IncidenceMatrix};

/// Coefficients `a_0, ..., a_P` of a polynomial in the Laplacian.
///
/// Deserializes from either `{"coeffs": [...]}` or a built-in model name,
/// `{"name": "NL5"}` / `{"name": "NLP", "order": 7}`; always serializes as
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilterSpec", into = "FilterSpec")]
pub struct PolynomialFilter {
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FilterSpec {
    Coeffs {
        coeffs: Vec<f64>,
    },
    Named {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
    },
}

impl TryFrom<FilterSpec> for PolynomialFilter {
    type Error = Error;

    fn try_from(spec: FilterSpec) -> Result<Self> {
        match spec {
            FilterSpec::Coeffs { coeffs } => PolynomialFilter::new(coeffs),
            FilterSpec::Named { name, order } => PolynomialFilter::builtin(&name, order),
        }
    }
}

impl From<PolynomialFilter> for FilterSpec {
    fn from(f: PolynomialFilter) -> Self {
        FilterSpec::Coeffs { coeffs: f.coeffs }
    }
}

/// Which Jacobian routine a tracker linearizes with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianMethod {
    /// Term-by-term evaluation, `O(P^3 N^4)`.
    Naive,
    /// Shared-product recursion, `O(P N^3)`.
    #[default]
    Dp,
}

impl PolynomialFilter {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("filter needs at least one coefficient"));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("filter coefficients must be finite"));
        }
        Ok(Self { coeffs })
    }

    /// Observation models used in the experiments:
    ///
    /// | name  | h(L)                                        |
    /// |-------|---------------------------------------------|
    /// | `Lin` | `L`                                         |
    /// | `NL4` | `I + L + L^2 + 0.1 L^3 + L^4`               |
    /// | `NL5` | `I + L + 0.8 L^2 + 0.6 L^3 + 0.4 L^4 + 0.2 L^5` |
    /// | `NLP` | `sum_{p=0}^{P} 2^{-p} L^p` (needs `order`)  |
    pub fn builtin(name: &str, order: Option<usize>) -> Result<Self> {
        let coeffs = match (name.to_ascii_uppercase().as_str(), order) {
            ("LIN", None) => vec![0.0, 1.0],
            ("NL4", None) => vec![1.0, 1.0, 1.0, 0.1, 1.0],
            ("NL5", None) => vec![1.0, 1.0, 0.8, 0.6, 0.4, 0.2],
            ("NLP", Some(p)) => (0..=p).map(|i| 0.5f64.powi(i as i32)).collect(),
            ("NLP", None) => return Err(Error::invalid("NLP filter requires an order")),
            ("LIN" | "NL4" | "NL5", Some(_)) => {
                return Err(Error::invalid(format!("filter {name} takes no order")))
            }
            _ => return Err(Error::invalid(format!("unknown filter model {name:?}"))),
        };
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Polynomial order `P`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `sum_p a_p L^p q` by iterated matrix-vector products.
    pub fn apply(&self, l: &DMatrix<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_square(l, q.len(), "apply_filter")?;
        let mut power = q.clone();
        let mut out = q * self.coeffs[0];
        for &a in &self.coeffs[1..] {
            power = l * power;
            out.axpy(a, &power, 1.0);
        }
        Ok(out)
    }
}

fn check_square(l: &DMatrix<f64>, n: usize, context: &'static str) -> Result<()> {
    if l.shape() != (n, n) {
        return Err(Error::dims(
            context,
            format!("{n}x{n}"),
            format!("{}x{}", l.nrows(), l.ncols()),
        ));
    }
    Ok(())
}

/// Measurement map `h(B diag(x) B^T) q`.
pub fn measurement(
    filter: &PolynomialFilter,
    b: &IncidenceMatrix,
    x: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<DVector<f64>> {
    let l = laplacian_from_map(b.map(), x)?;
    filter.apply(&l, q)
}

/// Reference Jacobian. Column `m` is
/// `sum_{p=1}^P a_p sum_{k=0}^{p-1} L^k b_m b_m^T L^{p-k-1} q`, each term
/// evaluated as `(b_m^T L^{p-k-1} q) * (L^k b_m)` with fresh powers.
pub fn jacobian_naive(
    filter: &PolynomialFilter,
    x: &DVector<f64>,
    b: &IncidenceMatrix,
    q: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let map = b.map();
    let n = map.n_nodes();
    if q.len() != n {
        return Err(Error::dims("jacobian_naive", n, q.len()));
    }
    let l = laplacian_from_map(map, x)?;
    let coeffs = filter.coeffs();

    let power_apply = |v: &DVector<f64>, times: usize| {
        let mut v = v.clone();
        for _ in 0..times {
            v = &l * v;
        }
        v
    };

    let mut jac = DMatrix::zeros(n, map.max_edges());
    for (m, &(i, j)) in map.pairs().iter().enumerate() {
        let b_m = b.matrix().column(m).clone_owned();
        let mut col = DVector::zeros(n);
        for (p, &a_p) in coeffs.iter().enumerate().skip(1) {
            for k in 0..p {
                let right = power_apply(q, p - k - 1);
                // b_m^T v = v_j - v_i for the (+1 at j, -1 at i) column
                let scale = right[j] - right[i];
                let left = power_apply(&b_m, k);
                col.axpy(a_p * scale, &left, 1.0);
            }
        }
        jac.set_column(m, &col);
    }
    Ok(jac)
}

/// Dynamic-programming Jacobian.
///
/// Precomputes `c_p = L^p q` and `D_p = sum_{r=0}^{P-1-p} a_{p+r+1} L^r`
/// (Horner-style, `D_{P-1} = a_P I`, `D_p = a_{p+1} I + L D_{p+1}`), then
/// column `m` for edge `(n, k)` is
/// `sum_{p=0}^{P-1} (c_p[n] - c_p[k]) (D_p[:, n] - D_p[:, k])`.
/// `l` must be the Laplacian of the linearization point.
pub fn jacobian_dp(
    filter: &PolynomialFilter,
    map: &EdgeIndexMap,
    l: &DMatrix<f64>,
    q: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = map.n_nodes();
    check_square(l, n, "jacobian_dp")?;
    if q.len() != n {
        return Err(Error::dims("jacobian_dp", n, q.len()));
    }
    let coeffs = filter.coeffs();
    let order = filter.order();
    let mut jac = DMatrix::zeros(n, map.max_edges());
    if order == 0 {
        return Ok(jac);
    }

    let mut c = Vec::with_capacity(order);
    c.push(q.clone());
    for p in 1..order {
        let next = l * &c[p - 1];
        c.push(next);
    }

    let mut d = vec![DMatrix::zeros(0, 0); order];
    d[order - 1] = DMatrix::identity(n, n) * coeffs[order];
    for p in (0..order - 1).rev() {
        let mut next = l * &d[p + 1];
        for i in 0..n {
            next[(i, i)] += coeffs[p + 1];
        }
        d[p] = next;
    }

    for (m, &(i, j)) in map.pairs().iter().enumerate() {
        let mut col = jac.column_mut(m);
        for (c_p, d_p) in c.iter().zip(&d) {
            let scale = c_p[i] - c_p[j];
            if scale == 0.0 {
                continue;
            }
            for r in 0..n {
                col[r] += scale * (d_p[(r, i)] - d_p[(r, j)]);
            }
        }
    }
    Ok(jac)
}

/// Jacobian of the measurement map at `x` using the requested routine.
pub fn jacobian(
    method: JacobianMethod,
    filter: &PolynomialFilter,
    b: &IncidenceMatrix,
    x: &DVector<f64>,
    l: &DMatrix<f64>,
    q: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    match method {
        JacobianMethod::Naive => jacobian_naive(filter, x, b, q),
        JacobianMethod::Dp => jacobian_dp(filter, b.map(), l, q),
    }
}

/// First-order filter as an affine map of the weights:
/// `(a0 I + a1 L(x)) q = H x + c` with `H = a1 B diag(B^T q)`, `c = a0 q`.
pub fn linear_observation(
    a0: f64,
    a1: f64,
    b: &IncidenceMatrix,
    q: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if q.len() != b.n_nodes() {
        return Err(Error::dims("linear_observation", b.n_nodes(), q.len()));
    }
    let projected = b.matrix().transpose() * q;
    let mut h = b.matrix().clone();
    for (mut col, &s) in h.column_iter_mut().zip(projected.iter()) {
        col *= a1 * s;
    }
    Ok((h, q * a0))
}
