use proptest::prelude::*;

use enr_elm::datagen::{sample_inputs, InputDist};
use enr_elm::dataset::{format_error_curve, parse_error_curve, split_indices, CurveFile};
use enr_elm::elm::{fit_ridge_dual, fit_ridge_primal, sample_weights};
use enr_elm::enr::{
    argmin_curve, compute_hidden_weights, fit_incremental, fit_preprocess, order_by_information, u_proxy_residuals,
    NeuronBank, StagewiseConfig,
};
use enr_elm::kernel::{erf_dual, nngp_gram};
use enr_elm::numerics::norm;
use enr_elm::Matrix64;

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix64 {
    sample_inputs(InputDist::IndepGaussian, rows, cols, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn erf_dual_is_symmetric_odd_and_bounded(kxx in 0.01f64..5.0, kyy in 0.01f64..5.0, rho in -1.0f64..1.0) {
        let kxy = rho * (kxx * kyy).sqrt();
        let v = erf_dual(kxx, kxy, kyy).unwrap();
        prop_assert_eq!(v, erf_dual(kyy, kxy, kxx).unwrap());
        prop_assert!((v + erf_dual(kxx, -kxy, kyy).unwrap()).abs() < 1e-15);
        prop_assert!(v.abs() <= 1.0);
        prop_assert!(v * kxy >= 0.0);
    }

    #[test]
    fn gram_is_symmetric_with_unit_bound(n0 in 1usize..6, t in 2usize..20, seed in 0u64..1000) {
        let k = nngp_gram(&gaussian(n0, t, seed)).gram;
        for i in 0..t {
            for j in 0..t {
                prop_assert_eq!(k[(i, j)], k[(j, i)]);
                prop_assert!(k[(i, j)].abs() <= (k[(i, i)] * k[(j, j)]).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn ridge_primal_matches_dual(t in 1usize..30, n in 1usize..30, lambda in 1e-3f64..10.0, seed in 0u64..1000) {
        let s = gaussian(t, n, seed);
        let y = gaussian(t, 1, seed + 1).into_vec();
        let p = fit_ridge_primal(&s, &y, lambda).unwrap();
        let d = fit_ridge_dual(&s, &y, lambda).unwrap();
        let diff: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 1e-8 * norm(&p).max(1e-300));
    }

    #[test]
    fn split_is_a_partition(t in 4usize..500, frac in 0.1f64..0.9, seed in any::<u64>()) {
        let s = split_indices(t, frac, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..t).collect::<Vec<_>>());
        prop_assert!(!s.train.is_empty() && !s.test.is_empty());
        prop_assert_eq!(s, split_indices(t, frac, seed).unwrap());
    }

    #[test]
    fn u_proxy_residual_never_increases(n0 in 1usize..6, t in 4usize..30, seed in 0u64..1000) {
        let x = gaussian(n0, t, seed);
        let y = gaussian(t, 1, seed + 7).into_vec();
        let eig = nngp_gram(&x).into_eigen().unwrap();
        let order = order_by_information(&eig.vectors, &y).unwrap();
        let r = u_proxy_residuals(&eig.vectors, &y, &order);
        prop_assert_eq!(r.len(), order.len() + 1);
        for w in r.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn stagewise_respects_neuron_limit(n in 1usize..8, seed in 0u64..1000) {
        let x = gaussian(3, 25, seed);
        let prep = fit_preprocess(&x, &vec![0.0; 25]).unwrap();
        let xs = prep.transform_inputs(&x).unwrap();
        let bank = NeuronBank::new(sample_weights(10, 3, seed + 3).unwrap(), &xs).unwrap();
        let y0 = gaussian(25, 1, seed + 5).into_vec();
        let m = y0.iter().sum::<f64>() / 25.0;
        let y: Vec<f64> = y0.iter().map(|v| v - m).collect();
        let cfg = StagewiseConfig { toll: 0.0, ..StagewiseConfig::new(n) };
        let (model, path) = fit_incremental(&y, &bank, &cfg).unwrap();
        prop_assert!(model.neurons.len() <= n);
        for w in path.steps.windows(2) {
            prop_assert!(w[1].residual_norm <= w[0].residual_norm);
        }
    }

    #[test]
    fn curve_file_round_trips(train in prop::collection::vec(0.0f64..2.0, 1..40)) {
        let test: Vec<f64> = train.iter().map(|v| v * 1.5).collect();
        let mut c = CurveFile::new(train, test);
        c.meta.push(("stop_index".into(), "3".into()));
        let back = parse_error_curve(&format_error_curve(&c).unwrap()).unwrap();
        prop_assert_eq!(&back.train, &c.train);
        prop_assert_eq!(&back.test, &c.test);
        prop_assert_eq!(back.meta_value("stop_index"), Some("3"));
    }

    #[test]
    fn argmin_is_first_minimum(errs in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let (n, v) = argmin_curve(&errs).unwrap();
        prop_assert!(n >= 1 && errs[n - 1] == v);
        prop_assert!(errs.iter().all(|&e| e >= v));
        prop_assert!(errs[..n - 1].iter().all(|&e| e > v));
    }
}

#[test]
fn hidden_weights_reproduce_eigenvectors_when_t_le_n0() {
    for seed in 0..5 {
        let x = gaussian(12, 8, seed);
        let eig = nngp_gram(&x).into_eigen().unwrap();
        let hw = compute_hidden_weights(&x, &eig.vectors).unwrap();
        assert_eq!(hw.rank, 8);
        let s = enr_elm::enr::activations(&hw.weights, &x).transpose();
        assert!(s.sub(&eig.vectors).max_abs() < 1e-8);
    }
}
