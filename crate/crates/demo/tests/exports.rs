use topotrack_demo::{observability_curve, run_tracking, JacobianInstance, TrackingParams};

#[test]
fn tracking_run_has_a_curve_per_tracker() {
    let params = TrackingParams {
        t_max: 30,
        ..Default::default()
    };
    let run = run_tracking(&params).unwrap();
    assert_eq!(run.pairs.len(), 28);
    assert_eq!(run.true_weights.len(), 28);
    assert_eq!(run.event_times, vec![20]);
    let names: Vec<_> = run.curves.iter().map(|c| c.tracker.as_str()).collect();
    assert_eq!(names, ["EKF", "GSP-EKF", "Oracle"]);
    for c in &run.curves {
        assert!(c.failure.is_none(), "{:?}", c.failure);
        assert_eq!(c.nmse_db.len(), 30);
        assert_eq!(c.final_weights.len(), 28);
        assert!(c.final_weights.iter().all(|&w| w >= 0.0));
    }
    let again = run_tracking(&params).unwrap();
    assert_eq!(run.curves[1].nmse_db, again.curves[1].nmse_db);
}

#[test]
fn tracking_rejects_bad_params() {
    let bad = TrackingParams {
        edges: 100,
        ..Default::default()
    };
    assert!(run_tracking(&bad).is_err());
    let silent = TrackingParams {
        sigma_v: 0.0,
        ..Default::default()
    };
    assert!(run_tracking(&silent).is_err());
}

#[test]
fn partial_json_params_fill_defaults() {
    let p: TrackingParams = serde_json::from_str(r#"{"n_nodes": 6, "mu": 0.2}"#).unwrap();
    assert_eq!(p.n_nodes, 6);
    assert_eq!(p.mu, 0.2);
    assert_eq!(p.t_max, TrackingParams::default().t_max);
}

#[test]
fn jacobian_routines_agree() {
    for (n, p) in [(4, 1), (6, 3), (9, 5)] {
        let case = JacobianInstance::new(n, p, 7).unwrap();
        assert!(case.relative_gap().unwrap() < 1e-10);
        assert_eq!(case.naive().unwrap().shape(), (n, n * (n - 1) / 2));
    }
    assert!(JacobianInstance::new(1, 2, 0).is_err());
}

#[test]
fn observability_curve_reaches_full_rank_at_n_minus_one() {
    let curve = observability_curve(6, 10, 3).unwrap();
    assert_eq!(curve.len(), 6);
    for point in &curve {
        let t = point.t as f64;
        let expected_rank = (t * 6.0 - t * (t + 1.0) / 2.0).min(15.0);
        assert_eq!(point.mean_rank, expected_rank);
        assert_eq!(point.fraction, if point.t >= 5 { 1.0 } else { 0.0 });
    }
    assert!(observability_curve(6, 0, 3).is_err());
}
