use nalgebra::DMatrix;
use plp_core::deconv::cutoff_rank;
use plp_core::experiments::{
    apply_strategy, condition_surface_with, cutoff_surface_with, ScheduleStrategy,
};
use plp_core::phantom::{generate_with, PhantomSpec, ResidueModel, TissueClass};
use plp_core::*;
use proptest::prelude::*;

fn grid_strategy(max_n: usize) -> impl Strategy<Value = TimeGrid> {
    prop::collection::vec(0.1f64..3.0, 2..=max_n).prop_map(|steps| {
        let mut t = 0.0;
        TimeGrid::from_instants(
            steps
                .into_iter()
                .map(|d| {
                    t += d;
                    t
                })
                .collect(),
        )
        .unwrap()
    })
}

fn aif_on(grid: TimeGrid) -> impl Strategy<Value = AifCurve> {
    let n = grid.len();
    (prop::collection::vec(0.0f64..5.0, n), 0.0f64..2.0)
        .prop_map(move |(values, k0)| AifCurve::new(grid.clone(), values, k0).unwrap())
}

fn well_conditioned(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-0.3f64..0.3, n * n).prop_map(move |v| {
        DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + v[i * n + j] } else { v[i * n + j] / n as f64 })
    })
}

fn rel_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matrix_product_matches_direct_convolution(
        (aif, r) in grid_strategy(32).prop_flat_map(|g| {
            let n = g.len();
            (aif_on(g), prop::collection::vec(-2.0f64..2.0, n))
        })
    ) {
        let m = build_convolution_matrix(&aif, aif.grid()).unwrap();
        let direct = forward_convolve(&aif, &r).unwrap();
        let product = m.apply(&r);
        let scale = direct.iter().fold(1e-300f64, |s, v| s.max(v.abs()));
        for (a, b) in product.iter().zip(&direct) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
        let e = m.entries();
        for i in 0..e.nrows() {
            for j in i + 1..e.ncols() {
                prop_assert_eq!(e[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn zero_kernel_at_origin_makes_singular_matrix(aif in grid_strategy(16).prop_flat_map(aif_on)) {
        let aif = AifCurve::new(aif.grid().clone(), aif.values().to_vec(), 0.0).unwrap();
        let m = build_convolution_matrix(&aif, aif.grid()).unwrap();
        prop_assert!(m.has_zero_diagonal());
        prop_assert_eq!(m.entries().determinant(), 0.0);
    }

    #[test]
    fn gamma_values_are_nonnegative(a in 0.0f64..6.0, b in 0.0f64..3.0, g in grid_strategy(40)) {
        let aif = gamma_aif(GammaAifParams::new(a, b).unwrap(), &g).unwrap();
        prop_assert!(aif.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn full_rank_tsvd_and_zero_alpha_tikhonov_equal_exact(m in (2usize..10).prop_flat_map(well_conditioned)) {
        let exact = exact_inverse(&m).unwrap();
        let n = m.nrows();
        let tsvd = tsvd_inverse(&compute_svd(&m).unwrap(), TsvdConfig::Rank(n)).unwrap();
        prop_assert!(rel_close(tsvd.entries(), exact.entries(), 1e-8));
        let tik = tikhonov_inverse(&m, TikhonovConfig { alpha: 0.0, constraint: Constraint::Identity }).unwrap();
        prop_assert!(rel_close(tik.entries(), exact.entries(), 1e-8));
    }

    #[test]
    fn tikhonov_converges_monotonically(m in (2usize..8).prop_flat_map(well_conditioned)) {
        let exact = exact_inverse(&m).unwrap();
        let mut last = f64::INFINITY;
        for alpha in [1.0, 0.1, 1e-2, 1e-3, 1e-4] {
            let b = tikhonov_inverse(&m, TikhonovConfig { alpha, constraint: Constraint::Identity }).unwrap();
            let dist = (b.entries() - exact.entries()).norm();
            prop_assert!(dist <= last);
            last = dist;
        }
    }

    #[test]
    fn svd_reconstructs_with_sign_convention(m in (2usize..10).prop_flat_map(well_conditioned)) {
        let f = compute_svd(&m).unwrap();
        prop_assert!(rel_close(&f.reconstruct(), &m, 1e-12));
        prop_assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
        for c in 0..f.u.ncols() {
            let first = f.u.column(c).iter().copied().find(|x| x.abs() > 1e-10).unwrap();
            prop_assert!(first > 0.0);
        }
        prop_assert_eq!(compute_svd(&m).unwrap(), f);
    }

    #[test]
    fn cutoff_rank_is_monotone_in_fraction(
        mut s in prop::collection::vec(0.0f64..10.0, 1..30),
        f1 in 0.0f64..1.0,
        f2 in 0.0f64..1.0,
    ) {
        s.sort_by(|a, b| b.total_cmp(a));
        prop_assume!(s[0] > 0.0);
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        prop_assert!(cutoff_rank(&s, hi).unwrap() <= cutoff_rank(&s, lo).unwrap());
    }

    #[test]
    fn perfusion_params_are_linear(
        (g, r1, r2) in grid_strategy(20).prop_flat_map(|g| {
            let n = g.len();
            (Just(g), prop::collection::vec(-2.0f64..2.0, n), prop::collection::vec(-2.0f64..2.0, n))
        }),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let mix: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
        let p = perfusion_params(&mix, &g).unwrap();
        let p1 = perfusion_params(&r1, &g).unwrap();
        let p2 = perfusion_params(&r2, &g).unwrap();
        let scale = 1.0 + p1.blood_volume.abs() + p2.blood_volume.abs();
        prop_assert!((p.blood_volume - (a * p1.blood_volume + b * p2.blood_volume)).abs() <= 1e-12 * scale * 4.0);
        prop_assert!((p.blood_flow - (a * p1.blood_flow + b * p2.blood_flow)).abs() <= 1e-12 * 16.0);
    }

    #[test]
    fn plp_equivalence_on_uniform_grids(
        m in (2usize..12).prop_flat_map(well_conditioned),
        d in 0.2f64..3.0,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let n = m.nrows();
        let g = build_uniform_grid(n, d).unwrap();
        let inv = exact_inverse(&m).unwrap();
        let (wv, wf) = deconvolution_weights(&inv, &g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = recover_residual(&inv, &c).unwrap();
            let p = perfusion_params(&r, &g).unwrap();
            prop_assert!((wv.evaluate(&c).unwrap() - p.blood_volume).abs() <= 1e-10 * p.blood_volume.abs().max(1e-3));
            prop_assert!((wf.evaluate(&c).unwrap() - p.blood_flow).abs() <= 1e-10 * p.blood_flow.abs().max(1e-3));
        }
    }

    #[test]
    fn normalization_is_idempotent(w in prop::collection::vec(-5.0f64..5.0, 2..30)) {
        prop_assume!(w.iter().any(|&x| x != 0.0));
        let g = build_uniform_grid(w.len(), 1.0).unwrap();
        let v = WeightVector::new(g, w, MethodTag::AxelVolume).unwrap();
        let once = v.normalize().unwrap();
        prop_assert_eq!(once.normalize().unwrap(), once.clone());
        prop_assert!((once.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axel_weights_are_uncorrelated_on_uniform_grids(n in 2usize..200, d in 0.1f64..5.0, k in -3i32..3) {
        let (v, t) = axel_weights(&build_uniform_grid(n, d).unwrap()).unwrap();
        // k·d is inexact for general d, so the intervals agree only to rounding
        prop_assert!(centered_correlation(v.weights(), t.weights()).unwrap().abs() <= 1e-12);
        let (v, t) = axel_weights(&build_uniform_grid(n, 2f64.powi(k)).unwrap()).unwrap();
        prop_assert_eq!(centered_correlation(v.weights(), t.weights()).unwrap(), 0.0);
    }

    #[test]
    fn pca_is_scale_equivariant_and_order_free(
        (rows, c, perm_seed) in (3usize..30, 2usize..10).prop_flat_map(|(p, n)| {
            (prop::collection::vec(-1.0f64..1.0, p * n).prop_map(move |v| DMatrix::from_row_slice(p, n, &v)),
             0.1f64..10.0,
             any::<u64>())
        })
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let g = build_uniform_grid(rows.ncols(), 1.0).unwrap();
        let data = PixelSeriesMatrix::new(g.clone(), rows.clone()).unwrap();
        let pca = fit_pca(&data).unwrap();
        prop_assume!(pca.eigenvalues.len() < 2 || pca.eigenvalues[0] > 1.01 * pca.eigenvalues[1]);
        let map = fpc_map(&data, &pca).unwrap();

        let scaled = PixelSeriesMatrix::new(g.clone(), &rows * c).unwrap();
        let pca_s = fit_pca(&scaled).unwrap();
        for (a, b) in pca_s.component_weights.weights().iter().zip(pca.component_weights.weights()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        for (a, b) in fpc_map(&scaled, &pca_s).unwrap().iter().zip(&map) {
            prop_assert!((a - c * b).abs() < 1e-8 * (1.0 + c * b.abs()));
        }

        let mut order: Vec<usize> = (0..rows.nrows()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let permuted = DMatrix::from_fn(rows.nrows(), rows.ncols(), |i, j| rows[(order[i], j)]);
        let pca_p = fit_pca(&PixelSeriesMatrix::new(g, permuted).unwrap()).unwrap();
        for (a, b) in pca_p.component_weights.weights().iter().zip(pca.component_weights.weights()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn pca_eigenvalues_match_singular_values(
        rows in (3usize..40, 2usize..12).prop_flat_map(|(p, n)| {
            prop::collection::vec(-1.0f64..1.0, p * n).prop_map(move |v| DMatrix::from_row_slice(p, n, &v))
        })
    ) {
        let (p, n) = rows.shape();
        let data = PixelSeriesMatrix::new(build_uniform_grid(n, 1.0).unwrap(), rows.clone()).unwrap();
        let pca = fit_pca(&data).unwrap();
        let mean = rows.row_mean();
        let centered = DMatrix::from_fn(p, n, |i, j| rows[(i, j)] - mean[j]);
        let mut sv: Vec<f64> = centered.singular_values().iter().map(|s| s * s / (p as f64 - 1.0)).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for (k, l) in pca.eigenvalues.iter().enumerate() {
            let expected = sv.get(k).copied().unwrap_or(0.0);
            prop_assert!((l - expected).abs() <= 1e-9 * sv[0]);
        }
    }

    #[test]
    fn strategies_keep_valid_grids_and_untouched_samples(
        aif in grid_strategy(40).prop_flat_map(aif_on),
        step in 2usize..6,
        keep_frac in 0.0f64..1.0,
        left_frac in 0.0f64..1.0,
    ) {
        let n = aif.grid().len();
        let mut strategies = vec![ScheduleStrategy::Truncate { keep: 2 + ((n - 2) as f64 * keep_frac) as usize }];
        if (step - 1..n).step_by(step).count() >= 2 {
            strategies.push(ScheduleStrategy::subsample(step));
        }
        if n >= 3 {
            let left = ((n - 3) as f64 * left_frac) as usize;
            let right = n - 1;
            strategies.push(ScheduleStrategy::PeakInterpolate { replace: (left + 1..right).collect(), left, right });
        }
        for s in &strategies {
            let reduced = apply_strategy(&aif, s).unwrap();
            let g = reduced.value.grid();
            prop_assert!(TimeGrid::from_instants(g.instants().to_vec()).is_ok());
            prop_assert_eq!(reduced.kept.len(), g.len());
            if let ScheduleStrategy::PeakInterpolate { replace, .. } = s {
                for i in (0..n).filter(|i| !replace.contains(i)) {
                    prop_assert_eq!(reduced.value.values()[i], aif.values()[i]);
                }
            } else {
                for (k, &i) in reduced.kept.iter().enumerate() {
                    prop_assert_eq!(reduced.value.values()[k], aif.values()[i]);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn surfaces_are_order_independent_and_consistent(
        a in prop::collection::vec(0.0f64..4.0, 1..4),
        b in prop::collection::vec(0.05f64..1.5, 1..4),
    ) {
        let n = 16;
        let cond = condition_surface_with(&a, &b, n, Execution::Sequential).unwrap();
        let cut = cutoff_surface_with(&a, &b, n, 0.2, Execution::default()).unwrap();
        let rev_a: Vec<f64> = a.iter().rev().copied().collect();
        let rev = cutoff_surface_with(&rev_a, &b, n, 0.2, Execution::Sequential).unwrap();
        for ai in 0..a.len() {
            for (bi, &bv) in b.iter().enumerate() {
                prop_assert_eq!(rev.get(a.len() - 1 - ai, bi), cut.get(ai, bi));
                let (spectrum, _) = plp_core::experiments::gamma_spectrum(
                    GammaAifParams::new(a[ai], bv).unwrap(),
                    &build_uniform_grid(n, 1.0).unwrap(),
                ).unwrap();
                let count = spectrum.iter().filter(|&&l| l >= 0.2 * spectrum[0]).count();
                prop_assert_eq!(cut.get(ai, bi), count as f64);
                prop_assert!(cond.get(ai, bi) <= 0.0);
            }
        }
    }

    #[test]
    fn phantom_truth_is_consistent(
        classes in prop::collection::vec((0.1f64..2.0, 0.5f64..10.0, 1usize..5), 1..4),
        seed in any::<u64>(),
        noise in 0.0f64..0.05,
    ) {
        let g = build_uniform_grid(24, 1.0).unwrap();
        let aif = gamma_aif(GammaAifParams::new(3.0, 1.0 / 1.5).unwrap(), &g).unwrap();
        let spec = PhantomSpec {
            aif: aif.clone(),
            classes: classes
                .iter()
                .map(|&(flow, mtt, count)| TissueClass { pixel_count: count, residue: ResidueModel::Exponential { flow, mtt } })
                .collect(),
            noise_sigma: noise,
            seed,
        };
        let a = generate_with(&spec, Execution::Sequential).unwrap();
        prop_assert_eq!(&a, &generate_with(&spec, Execution::default()).unwrap());
        for t in &a.truth {
            let mtt = t.mean_transit_time.unwrap();
            prop_assert!((mtt - t.blood_volume / t.blood_flow).abs() <= 1e-12 * mtt);
        }
        for (c, curve) in a.class_curves.iter().enumerate() {
            let residue = spec.classes[c].residue.sample(&g).unwrap();
            prop_assert_eq!(curve, &forward_convolve(&aif, &residue).unwrap());
        }
    }
}
