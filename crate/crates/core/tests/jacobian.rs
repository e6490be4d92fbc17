use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use topotrack::filter::{jacobian_dp, jacobian_naive, measurement};
use topotrack::graph::{build_incidence, laplacian_from_weights};
use topotrack::{EdgeIndexMap, IncidenceMatrix, PolynomialFilter};

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
    let q = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
    Case {
        b,
        filter: PolynomialFilter::new(coeffs).unwrap(),
        x,
        q,
    }
}

fn both(c: &Case) -> (DMatrix<f64>, DMatrix<f64>) {
    let l = laplacian_from_weights(&c.b, &c.x).unwrap();
    (
        jacobian_dp(&c.filter, c.b.map(), &l, &c.q).unwrap(),
        jacobian_naive(&c.filter, &c.x, &c.b, &c.q).unwrap(),
    )
}

#[test]
fn dp_matches_reference_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4a41_4301);
    for _ in 0..200 {
        let n = rng.random_range(4..=12);
        let p = rng.random_range(1..=6);
        let c = case(&mut rng, n, p);
        let (dp, naive) = both(&c);
        let scale = naive.amax();
        assert!((dp - &naive).amax() <= 1e-9 * scale, "n={n} p={p}");
    }
}

#[test]
fn columns_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4644_0001);
    let h = 1e-6;
    for _ in 0..50 {
        let n = rng.random_range(4..=8);
        let p = rng.random_range(1..=5);
        let c = case(&mut rng, n, p);
        let (dp, _) = both(&c);
        for m in 0..c.b.max_edges() {
            let mut up = c.x.clone();
            up[m] += h;
            let mut down = c.x.clone();
            down[m] -= h;
            let fd = (measurement(&c.filter, &c.b, &up, &c.q).unwrap()
                - measurement(&c.filter, &c.b, &down, &c.q).unwrap())
                / (2.0 * h);
            let col = dp.column(m);
            let err = (&fd - col).norm() / col.norm().max(f64::MIN_POSITIVE);
            assert!(err <= 1e-4, "n={n} p={p} m={m} rel err {err}");
        }
    }
}

#[test]
fn node_relabeling_permutes_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5045_524d);
    for _ in 0..20 {
        let n = rng.random_range(4..=9);
        let c = case(&mut rng, n, 3);
        let map = c.b.map();

        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }

        // edge (a, b) becomes edge (perm[a], perm[b])
        let edge_to = |m: usize| {
            let (a, b) = map.pair(m);
            map.index_of(perm[a], perm[b]).unwrap()
        };
        let mut x2 = DVector::zeros(c.x.len());
        for m in 0..c.x.len() {
            x2[edge_to(m)] = c.x[m];
        }
        let mut q2 = DVector::zeros(n);
        for i in 0..n {
            q2[perm[i]] = c.q[i];
        }
        let relabeled = Case {
            b: c.b.clone(),
            filter: c.filter.clone(),
            x: x2,
            q: q2,
        };

        let (j1, _) = both(&c);
        let (j2, _) = both(&relabeled);
        for i in 0..n {
            for m in 0..c.x.len() {
                let diff = (j2[(perm[i], edge_to(m))] - j1[(i, m)]).abs();
                assert!(diff <= 1e-10 * (1.0 + j1.amax()));
            }
        }
    }
}

#[test]
fn first_order_measurement_is_affine() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x434c_4131);
    for _ in 0..100 {
        let n = rng.random_range(3..=12);
        let c = case(&mut rng, n, 1);
        let (a0, a1) = (c.filter.coeffs()[0], c.filter.coeffs()[1]);
        let (h, off) = topotrack::filter::linear_observation(a0, a1, &c.b, &c.q).unwrap();
        let y = measurement(&c.filter, &c.b, &c.x, &c.q).unwrap();
        let affine = &h * &c.x + off;
        let scale = 1.0 + y.amax();
        assert!((y - affine).norm() <= 1e-12 * scale);
    }
}
