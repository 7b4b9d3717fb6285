//! Dense linear-algebra oracles for the sparse GMRF numerics, plus the
//! structural checks on intrinsic precision matrices (row sums and rank
//! deficiency against a dense eigensolver).

use hydrocar_core::gmrf::{factorize, log_density, solve};
use hydrocar_core::network::WaterNetwork;
use hydrocar_core::precision::build_distance_precision;
use hydrocar_core::rng::stream;
use hydrocar_core::PrecisionMatrix;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

fn random_spd(n: usize, seed: u64) -> PrecisionMatrix {
    let mut rng = stream(seed, "spd", 0);
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = &b.transpose() * &b + DMatrix::identity(n, n) * (n as f64);
    PrecisionMatrix::from_triplets(
        n,
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j, 0.0)).collect::<Vec<_>>())
            .map(|(i, j, _)| (i, j, q[(i, j)])),
        None,
        false,
    )
    .unwrap()
}

fn random_network(n_nodes: usize, extra_edges: usize, seed: u64) -> WaterNetwork {
    let mut rng = stream(seed, "net", 0);
    let mut net = WaterNetwork::new();
    for i in 0..n_nodes {
        net.add_node(format!("v{i}"), None).unwrap();
    }
    // random forest: each node joins an earlier node with probability 0.8
    for i in 1..n_nodes {
        if rng.gen_bool(0.8) {
            let p = rng.gen_range(0..i);
            let _ = net.add_segment(&format!("v{p}"), &format!("v{i}"), rng.gen_range(5.0..200.0));
        }
    }
    for _ in 0..extra_edges {
        let a = rng.gen_range(0..n_nodes);
        let b = rng.gen_range(0..n_nodes);
        if a != b {
            let _ = net.add_segment(&format!("v{a}"), &format!("v{b}"), rng.gen_range(5.0..200.0));
        }
    }
    net
}

#[test]
fn factor_reconstructs_random_spd_matrices() {
    for seed in 0..20 {
        let n = 4 + (seed as usize % 9);
        let q = random_spd(n, seed);
        let f = factorize(&q).unwrap();
        let rec = f.reconstruct_dense();
        let scale = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| q.get(i, j).abs())
            .fold(0.0f64, f64::max);
        for i in 0..n {
            for j in 0..n {
                let err = (rec[i][j] - q.get(i, j)).abs() / scale;
                assert!(err < 1e-8, "seed {seed} ({i},{j}): rel err {err}");
            }
        }
    }
}

#[test]
fn solve_matches_dense_lu() {
    for seed in 40..50 {
        let n = 6;
        let q = random_spd(n, seed);
        let f = factorize(&q).unwrap();
        let mut rng = stream(seed, "rhs", 0);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let x = solve(&f, &b).unwrap();

        let qd = DMatrix::from_fn(n, n, |i, j| q.get(i, j));
        let xd = qd.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-9, "seed {seed} coord {i}");
        }
    }
}

#[test]
fn log_density_matches_dense_evaluation() {
    let n = 5;
    let q = random_spd(n, 99);
    let f = factorize(&q).unwrap();
    let mut rng = stream(99, "points", 0);
    let qd = DMatrix::from_fn(n, n, |i, j| q.get(i, j));
    let chol = qd.clone().cholesky().unwrap();
    let log_det: f64 = (0..n).map(|i| 2.0 * chol.l()[(i, i)].ln()).sum();
    for _ in 0..10 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mean: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = log_density(&x, &mean, &f).unwrap();
        let v = DVector::from_vec(x.iter().zip(&mean).map(|(a, b)| a - b).collect::<Vec<_>>());
        let quad = (&v.transpose() * &qd * &v)[(0, 0)];
        let want = -0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det - 0.5 * quad;
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn log_density_integrates_to_one_in_one_dimension() {
    let q = PrecisionMatrix::from_triplets(1, [(0, 0, 2.5)], None, false).unwrap();
    let f = factorize(&q).unwrap();
    let sigma = (1.0f64 / 2.5).sqrt();
    let half_width = 10.0 * sigma;
    let steps = 20_000;
    let h = 2.0 * half_width / steps as f64;
    let mut total = 0.0;
    for k in 0..=steps {
        let x = -half_width + k as f64 * h;
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        total += w * log_density(&[x], &[0.0], &f).unwrap().exp();
    }
    total *= h;
    assert!((total - 1.0).abs() < 1e-4, "integral {total}");
}

#[test]
fn log_density_integrates_to_one_in_two_dimensions() {
    let q = PrecisionMatrix::from_triplets(
        2,
        [(0, 0, 2.0), (0, 1, -0.5), (1, 0, -0.5), (1, 1, 1.0)],
        None,
        false,
    )
    .unwrap();
    let f = factorize(&q).unwrap();
    // marginal variances from the dense inverse
    let qd = DMatrix::from_fn(2, 2, |i, j| q.get(i, j));
    let cov = qd.try_inverse().unwrap();
    let (s0, s1) = (cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt());
    let steps = 400;
    let (w0, w1) = (8.0 * s0, 8.0 * s1);
    let (h0, h1) = (2.0 * w0 / steps as f64, 2.0 * w1 / steps as f64);
    let mut total = 0.0;
    for a in 0..=steps {
        let x0 = -w0 + a as f64 * h0;
        let wa = if a == 0 || a == steps { 0.5 } else { 1.0 };
        for b in 0..=steps {
            let x1 = -w1 + b as f64 * h1;
            let wb = if b == 0 || b == steps { 0.5 } else { 1.0 };
            total += wa * wb * log_density(&[x0, x1], &[0.0, 0.0], &f).unwrap().exp();
        }
    }
    total *= h0 * h1;
    assert!((total - 1.0).abs() < 1e-4, "integral {total}");
}

#[test]
fn intrinsic_precision_rank_deficiency_equals_component_count() {
    for seed in 0..50 {
        let n_nodes = 3 + (seed as usize * 7) % 48;
        let net = random_network(n_nodes, seed as usize % 4, 1000 + seed);
        let q = build_distance_precision(&net).unwrap();

        for i in 0..q.dim() {
            assert!(q.row_sum(i).abs() < 1e-12, "seed {seed} row {i}");
        }

        let dense = DMatrix::from_fn(q.dim(), q.dim(), |i, j| q.get(i, j));
        let eig = SymmetricEigen::new(dense);
        let zero_count = eig.eigenvalues.iter().filter(|v| v.abs() < 1e-8).count();
        let negative = eig.eigenvalues.iter().any(|v| *v < -1e-10);
        assert!(!negative, "seed {seed}: negative eigenvalue");
        assert_eq!(
            zero_count,
            q.n_components(),
            "seed {seed}: {} zero eigenvalues vs {} components",
            zero_count,
            q.n_components()
        );
    }
}
