//! One PASS/FAIL line per acceptance check; exits nonzero if any fails.
//!
//! The two Monte-Carlo experiments take a few minutes in the default test
//! profile and use every available core.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use topotrack::filter::{jacobian_dp, jacobian_naive, linear_observation, measurement};
use topotrack::graph::{build_incidence, laplacian_from_weights};
use topotrack::metrics::{eier, normalized_mse};
use topotrack::trackers::{
    ekf_step, ista_update, joseph_update, linear_kf_step, linearize, predict, soft_threshold, IstaInit,
    IstaProblem,
};
use topotrack::{
    EdgeIndexMap, EdgeSet, IdentityTransition, IncidenceMatrix, IstaConfig, JacobianMethod, NoiseModel,
    PolynomialFilter, TrackerState, TrackingModel,
};
use topotrack_harness::bench::{log_log_slope, run_jacobian_bench, BenchRow};
use topotrack_harness::presets::preset;
use topotrack_harness::study::run_observability_study;
use topotrack_harness::{run_experiment, ExperimentConfig, RunOptions};
use topotrack_validation::{peaks_exceed_lookback, Curve, Report};

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

struct Case {
    b: IncidenceMatrix,
    filter: PolynomialFilter,
    x: DVector<f64>,
    q: DVector<f64>,
}

fn case(rng: &mut ChaCha8Rng, n: usize, order: usize) -> Case {
    let b = build_incidence(&EdgeIndexMap::new(n).unwrap());
    let coeffs = (0..=order).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x = DVector::from_fn(b.max_edges(), |_, _| rng.random_range(0.0..2.0));
    let q = gaussian(rng, n);
    Case {
        b,
        filter: PolynomialFilter::new(coeffs).unwrap(),
        x,
        q,
    }
}

fn dp_of(c: &Case) -> DMatrix<f64> {
    let l = laplacian_from_weights(&c.b, &c.x).unwrap();
    jacobian_dp(&c.filter, c.b.map(), &l, &c.q).unwrap()
}

fn jacobian_equivalence(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(4..=12);
        let p = rng.random_range(1..=6);
        let c = case(&mut rng, n, p);
        let naive = jacobian_naive(&c.filter, &c.x, &c.b, &c.q).unwrap();
        let gap = (dp_of(&c) - &naive).amax() / naive.amax();
        worst = worst.max(gap);
    }
    let secs = start.elapsed().as_secs_f64();
    report.record(
        "1",
        "DP and reference Jacobians agree on 200 instances",
        worst <= 1e-9 && secs < 10.0,
        format!("worst relative gap {worst:.2e} (limit 1e-9), {secs:.2} s (limit 10 s)"),
    );
}

fn finite_differences(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(4..=10);
        let p = rng.random_range(1..=6);
        let c = case(&mut rng, n, p);
        let jac = dp_of(&c);
        for m in 0..c.b.max_edges() {
            let mut up = c.x.clone();
            up[m] += h;
            let mut down = c.x.clone();
            down[m] -= h;
            let fd = (measurement(&c.filter, &c.b, &up, &c.q).unwrap()
                - measurement(&c.filter, &c.b, &down, &c.q).unwrap())
                / (2.0 * h);
            let col = jac.column(m);
            worst = worst.max((&fd - col).norm() / col.norm().max(f64::MIN_POSITIVE));
        }
    }
    report.record(
        "2",
        "Jacobian columns match central differences on 50 instances",
        worst <= 1e-4,
        format!("worst column relative error {worst:.2e} (limit 1e-4)"),
    );
}

fn first_order_identity(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..=12);
        let c = case(&mut rng, n, 1);
        let a = c.filter.coeffs();
        let (h, off) = linear_observation(a[0], a[1], &c.b, &c.q).unwrap();
        let y = measurement(&c.filter, &c.b, &c.x, &c.q).unwrap();
        let affine = &h * &c.x + off;
        worst = worst.max((y.clone() - affine).norm() / (1.0 + y.norm()));
    }
    report.record(
        "3a",
        "first-order measurement equals H x + c on 100 instances",
        worst <= 1e-12,
        format!("worst relative residual {worst:.2e} (limit 1e-12)"),
    );

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(3..=10);
        let b = build_incidence(&EdgeIndexMap::new(n).unwrap());
        let m = b.max_edges();
        let (a0, a1) = (rng.random_range(-1.0..1.0), rng.random_range(0.2..1.5));
        let filter = PolynomialFilter::new(vec![a0, a1]).unwrap();
        let noise = NoiseModel::isotropic(m, n, 0.1, 0.3).unwrap();
        let model = TrackingModel {
            transition: &IdentityTransition,
            noise: &noise,
            filter: &filter,
            incidence: &b,
            jacobian: JacobianMethod::Dp,
        };
        let truth = DVector::from_fn(m, |_, _| rng.random_range(0.0..2.0));
        let eye = DMatrix::identity(m, m);
        let mut ekf = TrackerState::isotropic(m, 1.0, 0.25);
        let mut kf = ekf.clone();
        for _ in 0..30 {
            let q = gaussian(&mut rng, n);
            let y = measurement(&filter, &b, &truth, &q).unwrap() + gaussian(&mut rng, n) * 0.3;
            ekf = ekf_step(&ekf, &model, &q, &y).unwrap();
            kf = linear_kf_step(&kf, &eye, &noise, a0, a1, &b, &q, &y).unwrap();
            worst = worst
                .max((&ekf.estimate - &kf.estimate).amax())
                .max((&ekf.covariance - &kf.covariance).amax());
        }
    }
    report.record(
        "3b",
        "EKF and exact Kalman filter coincide for first-order filters",
        worst <= 1e-10,
        format!("worst entrywise gap over 20 runs x 30 steps {worst:.2e} (limit 1e-10)"),
    );
}

fn ekf_stationarity(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst_ratio = 0.0f64;
    let mut exact = true;
    let mut worst_evaluated = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(4..=8);
        let p = rng.random_range(1..=5);
        let c = case(&mut rng, n, p);
        let m = c.b.max_edges();
        let noise = NoiseModel::isotropic(m, n, 0.1, 0.3).unwrap();
        let model = TrackingModel {
            transition: &IdentityTransition,
            noise: &noise,
            filter: &c.filter,
            incidence: &c.b,
            jacobian: JacobianMethod::Dp,
        };
        let a = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cov = &a * a.transpose() / m as f64 + DMatrix::identity(m, m) * 0.05;
        let prior = TrackerState::new(DVector::from_fn(m, |_, _| rng.random_range(0.0..1.5)), cov).unwrap();
        let y = measurement(&c.filter, &c.b, &c.x, &c.q).unwrap() + gaussian(&mut rng, n) * 0.3;

        let lin = linearize(&model, predict(&prior, model.transition, model.noise), &c.q, &y).unwrap();
        let problem = IstaProblem::from_linearized(&lin, &noise, &y);
        let at_update = problem.gradient(&lin.ekf_estimate).unwrap().norm();
        let at_prior = problem.gradient(&lin.predicted.estimate).unwrap().norm();
        worst_ratio = worst_ratio.max(at_update / at_prior);

        let mu = rng.random_range(0.01..0.5);
        let cfg = IstaConfig::constant(1, mu, 1.0);
        let thresholded = soft_threshold(&lin.ekf_estimate, mu);
        let out = ista_update(&problem, &cfg, IstaInit::EkfUpdate(lin.ekf_estimate.clone())).unwrap();
        exact &= out == thresholded;
        let evaluated = ista_update(&problem, &cfg, IstaInit::Point(lin.ekf_estimate.clone())).unwrap();
        worst_evaluated = worst_evaluated.max((evaluated - &thresholded).amax());
    }
    report.record(
        "4a",
        "objective gradient vanishes at the EKF update",
        worst_ratio <= 1e-8,
        format!("worst |grad at update| / |grad at prediction| {worst_ratio:.2e} (limit 1e-8)"),
    );
    report.record(
        "4b",
        "one iteration from the EKF update is a pure soft threshold",
        exact,
        format!(
            "elementwise equal in 50/50: {exact}; with the gradient step evaluated the gap is {worst_evaluated:.2e}"
        ),
    );
}

fn observability(report: &mut Report) {
    let rows = run_observability_study(10, &[1, 2, 3, 4, 5], 100, 1005).unwrap();
    let short: Vec<f64> = rows[..4].iter().map(|r| r.fraction_observable).collect();
    report.record(
        "5a",
        "N=10 is never observable within 4 steps",
        short.iter().all(|&f| f == 0.0),
        format!("observable fractions for T=1..4: {short:?}"),
    );
    let five = rows[4].fraction_observable;
    report.record(
        "5b",
        "N=10 is observable within 5 steps in at least 95 of 100 trials",
        five >= 0.95,
        format!("observable in {:.0}/100 trials", five * 100.0),
    );
}

fn run_preset(name: &str) -> (ExperimentConfig, Vec<topotrack_harness::AggregateRow>, f64) {
    let cfg = preset(name).unwrap();
    let start = Instant::now();
    let results = run_experiment(&cfg, &RunOptions { parallel: 0 }).unwrap();
    (cfg, results.aggregate(), start.elapsed().as_secs_f64())
}

fn lin20(report: &mut Report) {
    let (cfg, agg, secs) = run_preset("lin20");
    println!("  lin20: {} trials, t_max {}, {secs:.0} s", cfg.mc_trials, cfg.scenario.t_max);
    let names: Vec<String> = cfg.trackers.iter().map(|t| t.label().to_string()).collect();
    let curves: Vec<(String, Curve)> = names.iter().map(|n| (n.clone(), Curve::of(&agg, n))).collect();
    let curve = |name: &str| &curves.iter().find(|c| c.0 == name).unwrap().1;

    let peaks = [40, 80, 120];
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, c) in &curves {
        let hit = peaks_exceed_lookback(&c.nmse, &peaks, 5);
        ok &= hit;
        let ratios: Vec<String> = peaks
            .iter()
            .map(|&t| format!("{:.2}", Curve::at(&c.nmse, t).unwrap() / Curve::at(&c.nmse, t - 5).unwrap()))
            .collect();
        detail.push(format!("{name} {}", ratios.join("/")));
    }
    report.record(
        "6a",
        "lin20 error peaks at t=40,80,120 for every tracker",
        ok,
        format!("nmse(t)/nmse(t-5): {}", detail.join(", ")),
    );

    let avg = |name: &str| Curve::mean_over(&curve(name).nmse, 80..=159);
    let (oracle, gsp, ekf) = (avg("Oracle"), avg("GSP-EKF"), avg("EKF"));
    report.record(
        "6b",
        "lin20 mean nmse over t=80..159 orders Oracle < GSP-EKF < EKF",
        oracle < gsp && gsp < ekf,
        format!(
            "Oracle {:.2} dB, GSP-EKF {:.2} dB, EKF {:.2} dB",
            10.0 * oracle.log10(),
            10.0 * gsp.log10(),
            10.0 * ekf.log10()
        ),
    );

    let oracle_eier = curve("Oracle").eier.iter().map(|p| p.1).fold(0.0, f64::max);
    report.record(
        "6c",
        "lin20 oracle support error is zero at every step",
        oracle_eier == 0.0,
        format!("largest mean Oracle EIER {oracle_eier}"),
    );

    let gsp_eier = Curve::mean_over(&curve("GSP-EKF").eier, 81..);
    let ekf_eier = Curve::mean_over(&curve("EKF").eier, 81..);
    report.record(
        "6d",
        "lin20 GSP-EKF support error below EKF after t=80",
        gsp_eier < ekf_eier,
        format!("mean EIER GSP-EKF {gsp_eier:.2} %, EKF {ekf_eier:.2} %"),
    );
}

fn nl5(report: &mut Report) {
    let (cfg, agg, secs) = run_preset("nl5");
    println!("  nl5: {} trials, t_max {}, {secs:.0} s", cfg.mc_trials, cfg.scenario.t_max);
    let (ekf, gsp, oracle) = (Curve::of(&agg, "EKF"), Curve::of(&agg, "GSP-EKF"), Curve::of(&agg, "Oracle"));
    let after = 2 * cfg.scenario.n_nodes + 1;
    let gsp_eier = Curve::mean_over(&gsp.eier, after..);
    let ekf_eier = Curve::mean_over(&ekf.eier, after..);
    report.record(
        "7a",
        "nl5 GSP-EKF support error below EKF after t=2N",
        gsp_eier < ekf_eier,
        format!("mean EIER for t>{} GSP-EKF {gsp_eier:.2} %, EKF {ekf_eier:.2} %", after - 1),
    );

    let beaten: Vec<usize> = oracle
        .nmse
        .iter()
        .filter(|&&(t, v)| v >= Curve::at(&ekf.nmse, t).unwrap() || v >= Curve::at(&gsp.nmse, t).unwrap())
        .map(|p| p.0)
        .collect();
    report.record(
        "7b",
        "nl5 oracle has the lowest nmse at every step",
        beaten.is_empty(),
        if beaten.is_empty() {
            format!("lowest at all {} steps", oracle.nmse.len())
        } else {
            format!("not lowest at t={beaten:?}")
        },
    );
}

fn complexity(report: &mut Report) {
    let rows = run_jacobian_bench(&[20], &[1, 2, 4, 8, 10, 16], 21, 1008).unwrap();
    let time = |p: usize, method: JacobianMethod| {
        rows.iter()
            .find(|r| r.p == p && r.method == method)
            .unwrap()
            .median_seconds
    };
    let speedup = time(10, JacobianMethod::Naive) / time(10, JacobianMethod::Dp);
    report.record(
        "8a",
        "DP Jacobian at N=20, P=10 at least 5x faster than the reference",
        speedup >= 5.0,
        format!("speedup {speedup:.1}x"),
    );
    let fit: Vec<BenchRow> = rows.iter().filter(|r| [2, 4, 8, 16].contains(&r.p)).cloned().collect();
    let dp = log_log_slope(&fit, 20, JacobianMethod::Dp).unwrap();
    let naive = log_log_slope(&fit, 20, JacobianMethod::Naive).unwrap();
    report.record(
        "8b",
        "DP time grows at most like P^1.5",
        dp <= 1.5,
        format!("log-log slope over P=2,4,8,16: {dp:.2}"),
    );
    report.record(
        "8c",
        "reference time grows at least like P^2.2",
        naive >= 2.2,
        format!("log-log slope over P=2,4,8,16: {naive:.2}"),
    );
}

fn properties(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    let (m, n) = (15, 6);
    let mut cov = DMatrix::identity(m, m);
    let proc = DMatrix::identity(m, m) * 1e-3;
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let h = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal) * 3.0);
        let r = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| rng.random_range(1e-4..1.0)));
        let predicted = &cov + &proc;
        let s = &h * &predicted * h.transpose() + &r;
        let k = predicted.clone() * h.transpose() * s.try_inverse().unwrap()
            + DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) * 1e-3);
        cov = joseph_update(&predicted, &k, &h, &r);
        let min = cov.clone().symmetric_eigen().eigenvalues.min();
        worst = worst.min(min / cov.trace());
        if cov != cov.transpose() {
            worst = f64::NEG_INFINITY;
        }
    }
    report.record(
        "9a",
        "Joseph update keeps the covariance symmetric PSD over 1000 steps",
        worst >= -1e-10,
        format!("smallest eigenvalue / trace {worst:.2e}"),
    );

    let mut ok = true;
    for _ in 0..100 {
        let n = rng.random_range(2..=15);
        let b = build_incidence(&EdgeIndexMap::new(n).unwrap());
        let x = DVector::from_fn(b.max_edges(), |_, _| rng.random_range(0.0..3.0));
        let l = laplacian_from_weights(&b, &x).unwrap();
        let dense = b.matrix() * DMatrix::from_diagonal(&x) * b.matrix().transpose();
        let tol = 1e-12 * (1.0 + x.amax());
        ok &= l == l.transpose();
        ok &= (&l - dense).amax() <= tol;
        ok &= l.row_iter().all(|row| row.sum().abs() <= tol * n as f64);
        ok &= l.symmetric_eigen().eigenvalues.min() >= -tol * n as f64;
    }
    report.record(
        "9b",
        "Laplacian is symmetric, zero row sum, PSD and equals B diag(x) B^T",
        ok,
        "100 random graphs, N=2..15",
    );

    let v = DVector::from_vec(vec![3.0, -3.0, 0.5, -0.5, 0.0, 1.0]);
    let got = soft_threshold(&v, 1.0);
    let want = DVector::from_vec(vec![2.0, -2.0, 0.0, 0.0, 0.0, 0.0]);
    report.record(
        "9c",
        "soft threshold unit cases",
        got == want && soft_threshold(&v, 0.0) == v,
        format!("T_1({:?}) = {:?}", v.as_slice(), got.as_slice()),
    );

    let set = |v: &[usize]| v.iter().copied().collect::<EdgeSet>();
    let cases = [
        eier(&set(&[0, 1]), &set(&[0, 1]), 4) == 0.0,
        eier(&set(&[0, 1, 2]), &set(&[1, 2, 3]), 4) == 2.0 / 12.0 * 100.0,
        eier(&set(&[0, 1, 2]), &set(&[3, 4, 5]), 4) == 50.0,
        normalized_mse(&DVector::from_vec(vec![2.0, 3.0, 4.0]), &DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap()
            == 1.0,
        normalized_mse(&DVector::from_vec(vec![0.0, 0.0]), &DVector::from_vec(vec![2.0, 0.0])).unwrap() == 2.0,
    ];
    report.record(
        "9d",
        "EIER and nMSE formula cases",
        cases.iter().all(|&c| c),
        format!("{}/{} cases", cases.iter().filter(|&&c| c).count(), cases.len()),
    );

    let mut cfg = preset("nl5").unwrap();
    cfg.mc_trials = 3;
    cfg.scenario.t_max = 40;
    let write = || {
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&cfg, &RunOptions { parallel: 0 })
            .unwrap()
            .write(dir.path())
            .unwrap();
        ["results.csv", "aggregate.csv", "summary.csv"].map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    let same = write() == write();
    report.record(
        "9e",
        "two runs with the same seed write identical CSV files",
        same,
        "results.csv, aggregate.csv and summary.csv compared byte for byte",
    );
}

fn main() -> ExitCode {
    let mut report = Report::default();
    jacobian_equivalence(&mut report);
    finite_differences(&mut report);
    first_order_identity(&mut report);
    ekf_stationarity(&mut report);
    observability(&mut report);
    complexity(&mut report);
    properties(&mut report);
    lin20(&mut report);
    nl5(&mut report);
    println!("{}", report.summary());
    if report.failures().is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
