//! Library results checked against independent, deliberately naive
//! reimplementations.

use graph_deconv::channel::{apply_channel, operator_norm, random_channel, stationarity_residual};
use graph_deconv::covariance::{
    build_source_graph, concentration_bound, empirical_covariance, empirical_kurtosis,
    SpectralCovariance,
};
use graph_deconv::csice::{csice_spectral, estimate_magnitudes};
use graph_deconv::rng;
use graph_deconv::source::{standard_normal_matrix, SyntheticSource};
use graph_deconv::{build_radius_graph, eigendecompose, Graph, SignalEnsemble, Station};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

fn random_stations(n: usize, seed: u64) -> Vec<Station> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|k| Station::new(format!("st{k}"), r.random(), r.random()))
        .collect()
}

#[test]
fn radius_graph_matches_pairwise_distances() {
    let stations = random_stations(32, 1);
    let g = build_radius_graph(&stations, 0.35).unwrap();
    let mut count = 0;
    for i in 0..32 {
        for j in 0..32 {
            let (a, b) = (&stations[i], &stations[j]);
            let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            let expected = i != j && d <= 0.35;
            assert_eq!(g.has_edge(i, j), expected, "pair ({i},{j}) at distance {d}");
            count += expected as usize;
        }
    }
    assert_eq!(g.n_edges() * 2, count);
}

#[test]
fn covariance_matches_triple_loop() {
    let mut r = rng::seeded(2);
    let x = standard_normal_matrix(&mut r, 4, 7);
    let c = empirical_covariance(&SignalEnsemble::spectral(x.clone()).unwrap()).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for m in 0..7 {
                s += x[(i, m)] * x[(j, m)];
            }
            assert!((c.get(i, j) - s / 7.0).abs() < 1e-14);
        }
    }
}

#[test]
fn kurtosis_matches_loop() {
    let mut r = rng::seeded(3);
    let x = standard_normal_matrix(&mut r, 5, 40);
    let k = empirical_kurtosis(&SignalEnsemble::spectral(x.clone()).unwrap()).unwrap();
    let mut best: f64 = 0.0;
    for i in 0..5 {
        let mut s = 0.0;
        for m in 0..40 {
            s += x[(i, m)].powi(4);
        }
        best = best.max(s / 40.0);
    }
    assert!((k - best).abs() < 1e-12);
}

/// Path with two chords, which leaves the Laplacian spectrum simple.
fn chorded_path(n: usize) -> Graph {
    Graph::new(
        n,
        (0..n - 1).map(|i| (i, i + 1)).chain([(0, 2), (1, n - 2)]),
    )
    .unwrap()
}

#[test]
fn operator_norm_matches_power_iteration() {
    let basis = eigendecompose(&chorded_path(8).laplacian()).unwrap();
    let gamma = random_channel(8, 0.6, 4).unwrap();
    let h = basis.dense_filter(gamma.as_slice()).unwrap();
    let hth = h.transpose() * &h;
    let mut v = DVector::from_fn(8, |i, _| 1.0 + i as f64 * 0.1);
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = &hth * &v;
        lambda = w.norm();
        v = w / lambda;
    }
    assert!((operator_norm(&gamma) - lambda.sqrt()).abs() < 1e-8);
}

#[test]
fn spectral_filtering_matches_dense_product() {
    let basis = eigendecompose(&chorded_path(9).laplacian()).unwrap();
    let gamma = random_channel(9, 0.3, 5).unwrap();
    let mut r = rng::seeded(5);
    let x = SignalEnsemble::vertex(standard_normal_matrix(&mut r, 9, 4)).unwrap();
    let spectral = apply_channel(&gamma, &basis.gft(&x).unwrap()).unwrap();
    let via_spectrum = basis.igft(&spectral).unwrap();
    let dense = basis.dense_filter(gamma.as_slice()).unwrap() * x.matrix();
    assert!((via_spectrum.matrix() - dense).amax() < 1e-12);
}

#[test]
fn concentration_bound_second_implementation() {
    let (c4, h, sigma, m, eps) = (3.0_f64, 1.2_f64, 0.5_f64, 744usize, 0.05_f64);
    let off = ((c4.sqrt() * h * h + sigma * sigma).powi(2)) / (m as f64 * eps * eps);
    let diag = (c4 * h.powi(4) + 6.0 * c4.sqrt() * h * h * sigma * sigma + 3.0 * sigma.powi(4))
        / (m as f64 * eps * eps);
    let lib_off = concentration_bound(c4, h, sigma, m, eps, false).unwrap();
    let lib_diag = concentration_bound(c4, h, sigma, m, eps, true).unwrap();
    assert!((lib_off - off).abs() <= 1e-12 * off);
    assert!((lib_diag - diag).abs() <= 1e-12 * diag);
}

#[test]
fn noiseless_recovery_is_exact() {
    let mut r = rng::seeded(8);
    let source =
        SyntheticSource::random(&mut r, &[5.0, 3.0, 2.0, 1.5, 1.0, 0.7, 0.5, 0.3], 0.5).unwrap();
    let clean = SignalEnsemble::spectral(source.sample(&mut r, 500)).unwrap();
    let cov_x = empirical_covariance(&clean).unwrap();
    let gamma = random_channel(8, 0.4, 8).unwrap();
    let observed = apply_channel(&gamma, &clean).unwrap();
    let src = build_source_graph(&cov_x, 0.01).unwrap();
    let run = csice_spectral(&cov_x, observed, &src, 0.001).unwrap();
    let g = gamma.as_slice();
    let e = run.estimate.gamma_m.as_slice();
    let s = if e[0] * g[0] < 0.0 { -1.0 } else { 1.0 };
    for n in 0..8 {
        assert!(
            (s * e[n] - g[n]).abs() < 1e-10,
            "n = {n}: {} vs {}",
            e[n],
            g[n]
        );
    }
}

/// Every connected graph on up to 5 vertices, given by edge bitmask.
fn connected_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    (1u32..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, p)| *p)
                .collect::<Vec<_>>()
        })
        .filter(|edges| Graph::new(n, edges.iter().copied()).unwrap().is_connected())
        .collect()
}

#[test]
fn exact_magnitudes_on_every_small_source_graph() {
    let mut r = rng::seeded(9);
    let mut checked = 0;
    for n in 2..=5 {
        for edges in connected_graphs(n) {
            // Covariance supported exactly on the graph: diagonal dominance keeps it positive definite.
            let mut c = DMatrix::<f64>::zeros(n, n);
            for &(i, j) in &edges {
                let v = r.random_range(0.1..0.4) * if r.random::<bool>() { 1.0 } else { -1.0 };
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
            for i in 0..n {
                c[(i, i)] = 1.0 + r.random::<f64>() + c.row(i).abs().sum();
            }
            let gamma: Vec<f64> = (0..n)
                .map(|_| r.random_range(0.5..2.0) * if r.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let mut cy = DMatrix::from_fn(n, n, |i, j| gamma[i] * gamma[j] * c[(i, j)]);
            for i in 0..n {
                cy[(i, i)] += 0.3;
            }
            let cov_x = SpectralCovariance::new(c).unwrap();
            let cov_y = SpectralCovariance::new(cy).unwrap();
            let src = build_source_graph(&cov_x, 1e-6).unwrap();
            assert_eq!(src.graph().n_edges(), edges.len());
            let m = estimate_magnitudes(&cov_x, &cov_y, &src).unwrap();
            for (i, (est, g)) in m.values.iter().zip(&gamma).enumerate() {
                assert!(
                    (est - g.abs()).abs() <= 1e-10,
                    "graph {edges:?}, vertex {i}"
                );
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 1 + 4 + 38 + 728);
}

#[test]
fn stationarity_residual_separates_diagonalizable_covariances() {
    let basis = eigendecompose(&chorded_path(7).laplacian()).unwrap();
    let u = basis.modes();
    let p = DMatrix::from_diagonal(&DVector::from_fn(7, |i, _| 1.0 + i as f64));
    let stationary = u * p * u.transpose();
    let shift = chorded_path(7).laplacian();
    assert!(stationarity_residual(&stationary, &shift).unwrap() < 1e-10);

    let mut r = rng::seeded(10);
    let a = standard_normal_matrix(&mut r, 7, 7);
    let nonstationary = &a * a.transpose();
    assert!(stationarity_residual(&nonstationary, &shift).unwrap() > 1e-3);
}
