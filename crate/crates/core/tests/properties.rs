use graph_deconv::channel::{pseudo_inverse, random_channel, FrequencyResponse};
use graph_deconv::covariance::{
    build_observation_graph, build_source_graph, concentration_bound, empirical_covariance,
};
use graph_deconv::csice::{assign_signs, csice_spectral};
use graph_deconv::deconv::deconvolve_spectral;
use graph_deconv::rng;
use graph_deconv::source::{standard_normal_matrix, SyntheticSource};
use graph_deconv::{center_dataset, eigendecompose, Graph, RawDataset, SignalEnsemble};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Random simple graph on `n` vertices from a bit mask over vertex pairs.
fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..9).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        prop::collection::vec(any::<bool>(), pairs).prop_map(move |bits| {
            let all = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
            Graph::new(n, all.zip(bits).filter(|(_, b)| *b).map(|(p, _)| p)).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn laplacian_rows_sum_to_zero(g in graph_strategy()) {
        let l = g.laplacian();
        for r in l.row_iter() {
            prop_assert!(r.sum().abs() < 1e-12);
        }
        prop_assert_eq!(&l, &l.transpose());
        prop_assert!(l.diagonal().iter().zip(g.degrees()).all(|(a, b)| *a == b as f64));
    }

    #[test]
    fn gft_round_trip_and_parseval(g in graph_strategy(), seed in any::<u64>()) {
        let basis = eigendecompose(&g.laplacian());
        prop_assume!(basis.is_ok());
        let basis = basis.unwrap();
        let n = g.n_vertices();
        let x = SignalEnsemble::vertex(standard_normal_matrix(&mut rng::seeded(seed), n, 3)).unwrap();
        let xh = basis.gft(&x).unwrap();
        let back = basis.igft(&xh).unwrap();
        prop_assert!((back.matrix() - x.matrix()).amax() < 1e-10);
        prop_assert!((x.matrix().norm() - xh.matrix().norm()).abs() < 1e-10);
        let lambda = basis.eigenvalues();
        for k in 1..n {
            prop_assert!(lambda[k - 1].abs() <= lambda[k].abs());
        }
    }

    #[test]
    fn bound_is_monotone(
        c4 in 0.1f64..10.0, h in 0.1f64..3.0, sigma in 0.0f64..2.0,
        m in 1usize..5000, eps in 0.01f64..5.0, diagonal in any::<bool>(),
    ) {
        let b = concentration_bound(c4, h, sigma, m, eps, diagonal).unwrap();
        prop_assert!(concentration_bound(c4, h, sigma, m + 1, eps, diagonal).unwrap() <= b);
        prop_assert!(concentration_bound(c4, h, sigma, m, eps * 1.1, diagonal).unwrap() <= b);
        prop_assert!(concentration_bound(c4, h, sigma + 0.1, m, eps, diagonal).unwrap() >= b);
        prop_assert!(concentration_bound(c4, h * 1.1, sigma, m, eps, diagonal).unwrap() >= b);
    }

    #[test]
    fn random_channel_stays_in_band(n in 1usize..64, amplitude in 0.0f64..0.99, seed in any::<u64>()) {
        let g = random_channel(n, amplitude, seed).unwrap();
        for v in g.as_slice() {
            prop_assert!(v.abs() >= 1.0 - amplitude - 1e-15 && v.abs() <= 1.0 + amplitude + 1e-15);
        }
    }

    #[test]
    fn pseudo_inverse_inverts_on_support(gamma in prop::collection::vec(0.1f64..3.0, 1..12), mask in any::<u16>()) {
        let support: Vec<bool> = (0..gamma.len()).map(|i| mask >> i & 1 == 1).collect();
        let g = FrequencyResponse::new(gamma.clone()).unwrap();
        let d = pseudo_inverse(&g, &support).unwrap();
        for (n, inside) in support.iter().enumerate() {
            let expected = if *inside { 1.0 } else { 0.0 };
            prop_assert!((d.as_slice()[n] * gamma[n] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn centered_dataset_has_zero_hourly_mean(
        (s, h, d) in (1usize..5, 1usize..5, 1usize..6), seed in any::<u64>()
    ) {
        let noise = standard_normal_matrix(&mut rng::seeded(seed), s * h, d);
        let raw = RawDataset::from_fn(s, h, d, |st, hr, dy| 10.0 + 5.0 * noise[(st * h + hr, dy)]).unwrap();
        let x = center_dataset(&raw).unwrap();
        prop_assert_eq!(x.len(), d * h);
        for st in 0..s {
            for hr in 0..h {
                let mean: f64 = (0..d).map(|dy| x.matrix()[(st, dy * h + hr)]).sum::<f64>() / d as f64;
                prop_assert!(mean.abs() < 1e-12);
            }
        }
    }

    /// Observation edges are source edges, the support is their vertex set,
    /// and flipping one anchor negates exactly that component.
    #[test]
    fn observation_graph_and_anchor_flip(
        seed in any::<u64>(), n in 3usize..10, delta in 0.0f64..0.6, samples in 5usize..60,
    ) {
        let mut r = rng::seeded(seed);
        let variances: Vec<f64> = (0..n).map(|k| 1.0 + k as f64 * 0.3).collect();
        let source = SyntheticSource::random(&mut r, &variances, 0.3).unwrap();
        let clean = SignalEnsemble::spectral(source.sample(&mut r, samples)).unwrap();
        let cov_x = empirical_covariance(&clean).unwrap();
        let src = build_source_graph(&cov_x, 0.2).unwrap();
        prop_assume!(src.degrees().iter().all(|d| *d > 0));
        let gamma = random_channel(n, 0.5, seed).unwrap();
        let mut y = clean.matrix().clone();
        for (mut row, g) in y.row_iter_mut().zip(gamma.as_slice()) {
            row *= *g;
        }
        y += standard_normal_matrix(&mut r, n, samples) * 0.8;
        let run = csice_spectral(&cov_x, SignalEnsemble::spectral(y).unwrap(), &src, delta).unwrap();
        let obs = &run.observation_graph;
        let mut incident = vec![false; n];
        for (i, j) in obs.edges().edges() {
            prop_assert!(src.graph().has_edge(i, j));
            incident[i] = true;
            incident[j] = true;
        }
        prop_assert_eq!(obs.support(), &incident[..]);

        let est = &run.estimate;
        let k = est.components.len();
        prop_assume!(k > 0);
        let flip = (seed as usize) % k;
        let signs: Vec<f64> = (0..k).map(|i| if i == flip { -1.0 } else { 1.0 }).collect();
        let mags: Vec<f64> = est.gamma_m.as_slice().iter().map(|v| v.abs()).collect();
        let flipped = assign_signs(&mags, obs, &cov_x, &run.cov_y, Some(&signs)).unwrap();
        for v in 0..n {
            let a = est.gamma_m.as_slice()[v];
            let b = flipped.gamma_m.as_slice()[v];
            if est.components[flip].contains(v) {
                prop_assert_eq!(b, -a);
            } else {
                prop_assert_eq!(b, a);
            }
        }

        // Deconvolution is sign-equivariant per component and nulls frequencies outside the support.
        let basis_graph = Graph::new(n, (0..n - 1).map(|i| (i, i + 1)).chain([(0, 2)])).unwrap();
        let basis = eigendecompose(&basis_graph.laplacian());
        prop_assume!(basis.is_ok());
        let basis = basis.unwrap();
        let a = deconvolve_spectral(est, &run.spectral_observations, &basis).unwrap();
        let b = deconvolve_spectral(&flipped, &run.spectral_observations, &basis).unwrap();
        for v in 0..n {
            let (ra, rb) = (a.spectral.matrix().row(v), b.spectral.matrix().row(v));
            if !est.support[v] {
                prop_assert!(ra.iter().all(|x| *x == 0.0));
            } else if est.components[flip].contains(v) {
                prop_assert!((ra + rb).amax() == 0.0);
            } else {
                prop_assert!((ra - rb).amax() == 0.0);
            }
        }
    }
}

#[test]
fn observation_graph_rejects_negative_delta() {
    let c =
        graph_deconv::SpectralCovariance::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]))
            .unwrap();
    let src = build_source_graph(&c, 0.01).unwrap();
    assert!(build_observation_graph(&c, &src, -1.0).is_err());
}
