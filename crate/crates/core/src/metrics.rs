//! Estimation quality measures.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::EdgeSet;

/// Default weight above which an edge counts as present.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 0.1;

/// `|x_hat - x|^2 / len`.
pub fn normalized_mse(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::invalid(format!(
            "estimate has {} entries, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("empty weight vectors"));
    }
    Ok((estimate - truth).norm_squared() / truth.len() as f64)
}

/// `10 log10(v)`.
pub fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Edge identification error rate in percent,
/// `|est ^ true| / (N (N - 1)) * 100`.
///
/// The denominator counts ordered node pairs, twice the number of candidate
/// edges, so missing every edge of a support that covers half the candidates
/// and claiming the other half scores 50%, not 100%.
pub fn eier(estimated: &EdgeSet, truth: &EdgeSet, n_nodes: usize) -> f64 {
    let wrong = estimated.symmetric_difference(truth).count();
    wrong as f64 / (n_nodes * (n_nodes - 1)) as f64 * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[usize]) -> EdgeSet {
        v.iter().copied().collect()
    }

    #[test]
    fn nmse_cases() {
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(normalized_mse(&x, &x).unwrap(), 0.0);
        let e = DVector::from_vec(vec![2.0, 3.0, 4.0]);
        assert_eq!(normalized_mse(&e, &x).unwrap(), 1.0);
        let z = DVector::zeros(4);
        let e = DVector::from_vec(vec![2.0, 0.0, 0.0, 0.0]);
        assert_eq!(normalized_mse(&e, &z).unwrap(), 1.0);
        assert!(normalized_mse(&z, &x).is_err());
    }

    #[test]
    fn eier_cases() {
        assert_eq!(eier(&set(&[0, 1]), &set(&[0, 1]), 4), 0.0);
        assert!((eier(&set(&[0, 2]), &set(&[0, 1]), 4) - 200.0 / 12.0).abs() < 1e-12);
        assert_eq!(eier(&set(&[2, 3, 4, 5]), &set(&[0, 1]), 4), 50.0);
    }

    #[test]
    fn db() {
        assert_eq!(to_db(1.0), 0.0);
        assert!((to_db(1e-3) + 30.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn eier_properties(
            a in proptest::collection::btree_set(0usize..15, 0..15),
            b in proptest::collection::btree_set(0usize..15, 0..15),
        ) {
            let ab = eier(&a, &b, 6);
            prop_assert_eq!(ab, eier(&b, &a, 6));
            prop_assert_eq!(ab == 0.0, a == b);
            prop_assert!((0.0..=100.0).contains(&ab));
        }

        #[test]
        fn nmse_properties(
            v in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..20),
            alpha in -3.0f64..3.0,
        ) {
            let e = DVector::from_iterator(v.len(), v.iter().map(|p| p.0));
            let x = DVector::from_iterator(v.len(), v.iter().map(|p| p.1));
            let base = normalized_mse(&e, &x).unwrap();
            prop_assert!(base >= 0.0);
            prop_assert_eq!(base == 0.0, e == x);
            let scaled = normalized_mse(&(&e * alpha), &(&x * alpha)).unwrap();
            prop_assert!((scaled - alpha * alpha * base).abs() <= 1e-9 * (1.0 + base));
        }
    }
}
