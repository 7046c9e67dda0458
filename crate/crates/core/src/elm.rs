//! Random-weight extreme learning machine used as the comparison baseline.
//!
//! Hidden weights are drawn i.i.d. `N(0, 1/n₀)`, the hidden layer output is
//! `S = erf(W X)ᵀ` and only the output weights are fitted, by least squares
//! or ridge regression.

use std::time::Instant;

use log::{debug, warn};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::numerics::{dot, erf, norm, Cholesky, Matrix};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Real, Result};

/// Condition estimate of `SᵀS` above which least squares gives way to ridge.
pub const OLS_CONDITION_LIMIT: f64 = 1e10;
/// Fallback ridge penalty relative to `trace(SᵀS) / n`.
pub const FALLBACK_RIDGE_SCALE: f64 = 1e-8;

/// `n × n₀` matrix with i.i.d. `N(0, 1/n₀)` entries.
pub fn sample_weights<T: Real>(n: usize, n0: usize, seed: u64) -> Result<Matrix<T>> {
    if n == 0 || n0 == 0 {
        return Err(Error::InvalidParameter(format!(
            "weight matrix needs positive shape, got {n}x{n0}"
        )));
    }
    let mut rng = seeded(seed);
    let scale = 1.0 / (n0 as f64).sqrt();
    Ok(Matrix::from_fn(n, n0, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        T::lit(z * scale)
    }))
}

/// Hidden layer output `S = erf(W X)ᵀ`, shape `T × n`.
pub fn hidden_features<T: Real>(w: &Matrix<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    if w.cols() != x.rows() {
        return Err(Error::dim("hidden_features", w.cols(), x.rows()));
    }
    let xt = x.transpose();
    let n = w.rows();
    let mut s = Matrix::zeros(xt.rows(), n);
    s.as_mut_slice()
        .par_chunks_mut(n.max(1))
        .zip(xt.as_slice().par_chunks(x.rows().max(1)))
        .for_each(|(out, xi)| {
            for (o, wr) in out.iter_mut().zip(w.row_iter()) {
                *o = erf(dot(wr, xi));
            }
        });
    Ok(s)
}

fn check_design<T: Real>(s: &Matrix<T>, y: &[T], context: &'static str) -> Result<()> {
    if s.rows() != y.len() {
        return Err(Error::dim(context, s.rows(), y.len()));
    }
    if s.cols() == 0 {
        return Err(Error::InvalidParameter(format!("{context}: no features")));
    }
    Ok(())
}

/// Least squares `(SᵀS)⁻¹ Sᵀ y` through a Cholesky factor of `SᵀS`.
///
/// Fails with [`Error::IllConditioned`] or [`Error::NotPositiveDefinite`]
/// when `SᵀS` is not safely invertible; callers then switch to ridge.
pub fn fit_ols<T: Real>(s: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    check_design(s, y, "fit_ols")?;
    let ch = Cholesky::new(&s.gram())?;
    let cond = ch.condition_estimate();
    if !(cond < T::lit(OLS_CONDITION_LIMIT)) {
        return Err(Error::IllConditioned { condition: cond.as_f64() });
    }
    Ok(ch.solve(&s.t_mat_vec(y)))
}

/// `(SᵀS + λI)⁻¹ Sᵀ y`.
pub fn fit_ridge_primal<T: Real>(s: &Matrix<T>, y: &[T], lambda: T) -> Result<Vec<T>> {
    check_design(s, y, "fit_ridge_primal")?;
    check_lambda(lambda)?;
    let mut a = s.gram();
    for i in 0..a.rows() {
        a[(i, i)] += lambda;
    }
    Ok(Cholesky::new(&a)?.solve(&s.t_mat_vec(y)))
}

/// `Sᵀ (SSᵀ + λI)⁻¹ y`.
pub fn fit_ridge_dual<T: Real>(s: &Matrix<T>, y: &[T], lambda: T) -> Result<Vec<T>> {
    check_design(s, y, "fit_ridge_dual")?;
    check_lambda(lambda)?;
    let mut a = s.matmul_transposed(s);
    for i in 0..a.rows() {
        a[(i, i)] += lambda;
    }
    let alpha = Cholesky::new(&a)?.solve(y);
    Ok(s.t_mat_vec(&alpha))
}

/// Ridge regression in whichever form has the smaller system.
pub fn fit_ridge<T: Real>(s: &Matrix<T>, y: &[T], lambda: T) -> Result<Vec<T>> {
    if s.cols() <= s.rows() {
        fit_ridge_primal(s, y, lambda)
    } else {
        fit_ridge_dual(s, y, lambda)
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("ridge penalty must be positive, got {lambda}")));
    }
    Ok(())
}

/// Which solver produced an output layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver<T> {
    Ols,
    Ridge(T),
    /// Least squares was rejected and ridge with a small jitter was used.
    Fallback(T),
}

/// Least squares when `SᵀS` is well conditioned, otherwise ridge with
/// `λ = 1e-8 · trace(SᵀS) / n`. A positive `lambda` forces ridge.
pub fn fit_output<T: Real>(s: &Matrix<T>, y: &[T], lambda: T) -> Result<(Vec<T>, Solver<T>)> {
    if lambda > T::zero() {
        return Ok((fit_ridge(s, y, lambda)?, Solver::Ridge(lambda)));
    }
    match fit_ols(s, y) {
        Ok(b) => Ok((b, Solver::Ols)),
        Err(e @ (Error::IllConditioned { .. } | Error::NotPositiveDefinite { .. })) => {
            let tr: T = (0..s.cols()).map(|j| s.column(j).iter().map(|&v| v * v).sum::<T>()).sum();
            let jitter = T::lit(FALLBACK_RIDGE_SCALE) * tr / T::of_usize(s.cols());
            let jitter = if jitter > T::zero() { jitter } else { T::lit(FALLBACK_RIDGE_SCALE) };
            debug!("least squares rejected ({e}); ridge with lambda {jitter:e}");
            Ok((fit_ridge(s, y, jitter)?, Solver::Fallback(jitter)))
        }
        Err(e) => Err(e),
    }
}

/// A fitted ELM.
#[derive(Clone, Debug)]
pub struct ElmModel<T> {
    /// `n × n₀` hidden weights.
    pub weights: Matrix<T>,
    pub beta: Vec<T>,
    /// Penalty actually used, 0 for plain least squares.
    pub ridge_lambda: T,
    pub seed: u64,
    pub target_mean: T,
}

impl<T: Real> ElmModel<T> {
    /// Samples `n` neurons and fits the output layer on standardized inputs.
    pub fn fit(x: &Matrix<T>, y: &[T], n: usize, lambda: T, seed: u64) -> Result<Self> {
        let w = sample_weights(n, x.rows(), seed)?;
        Self::fit_with_weights(w, x, y, lambda, seed)
    }

    pub fn fit_with_weights(weights: Matrix<T>, x: &Matrix<T>, y: &[T], lambda: T, seed: u64) -> Result<Self> {
        let target_mean = crate::numerics::mean(y);
        let yc: Vec<T> = y.iter().map(|&v| v - target_mean).collect();
        let s = hidden_features(&weights, x)?;
        let (beta, solver) = fit_output(&s, &yc, lambda)?;
        let ridge_lambda = match solver {
            Solver::Ols => T::zero(),
            Solver::Ridge(l) | Solver::Fallback(l) => l,
        };
        Ok(ElmModel {
            weights,
            beta,
            ridge_lambda,
            seed,
            target_mean,
        })
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Predictions for the columns of standardized `x`.
    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        let s = hidden_features(&self.weights, x)?;
        Ok(s.mat_vec(&self.beta).into_iter().map(|v| v + self.target_mean).collect())
    }
}

/// Sweep settings.
#[derive(Clone, Copy, Debug)]
pub struct SweepConfig<T> {
    pub n_max: usize,
    pub realizations: usize,
    pub seed: u64,
    /// 0 selects least squares with ridge fallback.
    pub lambda: T,
    /// Reuse the first `n` rows of one `n_max`-row draw for every `n`.
    pub nested: bool,
}

impl<T: Real> SweepConfig<T> {
    pub const DEFAULT_REALIZATIONS: usize = 20;

    pub fn new(n_max: usize, seed: u64) -> Self {
        SweepConfig {
            n_max,
            realizations: Self::DEFAULT_REALIZATIONS,
            seed,
            lambda: T::zero(),
            nested: true,
        }
    }
}

/// Pointwise mean, minimum and maximum of several curves.
#[derive(Clone, Debug, PartialEq)]
pub struct Band<T> {
    pub mean: Vec<T>,
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Real> Band<T> {
    fn from_curves(curves: &[Vec<T>]) -> Band<T> {
        let len = curves.first().map_or(0, Vec::len);
        let k = T::of_usize(curves.len().max(1));
        let mut band = Band {
            mean: vec![T::zero(); len],
            min: vec![T::infinity(); len],
            max: vec![T::neg_infinity(); len],
        };
        for c in curves {
            for (i, &v) in c.iter().enumerate() {
                band.mean[i] += v;
                band.min[i] = band.min[i].min(v);
                band.max[i] = band.max[i].max(v);
            }
        }
        band.mean.iter_mut().for_each(|m| *m /= k);
        band
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Curves of one realization.
#[derive(Clone, Debug)]
pub struct Realization<T> {
    pub seed: u64,
    pub train: Vec<T>,
    pub test: Vec<T>,
    pub fallbacks: usize,
    pub millis: f64,
}

/// Output of [`elm_error_sweep`]. Curve index `i` holds `n = i + 1`.
#[derive(Clone, Debug)]
pub struct ElmSweep<T> {
    pub train: Band<T>,
    pub test: Band<T>,
    pub runs: Vec<Realization<T>>,
}

impl<T: Real> ElmSweep<T> {
    /// Sample standard deviation of the test error at `n` across realizations.
    pub fn test_std_at(&self, n: usize) -> T {
        let vals: Vec<T> = self.runs.iter().map(|r| r.test[n - 1]).collect();
        if vals.len() < 2 {
            return T::zero();
        }
        let m = crate::numerics::mean(&vals);
        let ss: T = vals.iter().map(|&v| (v - m) * (v - m)).sum();
        (ss / T::of_usize(vals.len() - 1)).sqrt()
    }

    /// Sum of the per-realization wall times.
    pub fn total_millis(&self) -> f64 {
        self.runs.iter().map(|r| r.millis).sum()
    }
}

/// Train and test error curves for `n = 1..=n_max` over several realizations.
///
/// Inputs are standardized `n₀ × T` matrices; targets are raw and are centered
/// by the training mean. Errors are `‖y_c − ŷ_c‖ / ‖y_c‖`.
pub fn elm_error_sweep<T: Real>(
    x_train: &Matrix<T>,
    y_train: &[T],
    x_test: &Matrix<T>,
    y_test: &[T],
    cfg: &SweepConfig<T>,
) -> Result<ElmSweep<T>> {
    if cfg.n_max == 0 || cfg.realizations == 0 {
        return Err(Error::InvalidParameter("sweep needs n_max >= 1 and at least one realization".into()));
    }
    if x_train.cols() != y_train.len() {
        return Err(Error::dim("elm_error_sweep: train", x_train.cols(), y_train.len()));
    }
    if x_test.cols() != y_test.len() || x_test.rows() != x_train.rows() {
        return Err(Error::dim(
            "elm_error_sweep: test",
            format!("{}x{}", x_train.rows(), y_test.len()),
            format!("{}x{}", x_test.rows(), x_test.cols()),
        ));
    }
    if cfg.lambda < T::zero() {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", cfg.lambda)));
    }
    let ybar = crate::numerics::mean(y_train);
    let ytr: Vec<T> = y_train.iter().map(|&v| v - ybar).collect();
    let yte: Vec<T> = y_test.iter().map(|&v| v - ybar).collect();
    let (ntr, nte) = (norm(&ytr), norm(&yte));
    if ntr == T::zero() || nte == T::zero() {
        return Err(Error::Data("target has zero norm; normalized error undefined".into()));
    }

    let runs: Vec<Realization<T>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r as u64);
            let start = Instant::now();
            let nested = if cfg.nested {
                Some(sample_weights::<T>(cfg.n_max, x_train.rows(), seed)?)
            } else {
                None
            };
            let mut train = Vec::with_capacity(cfg.n_max);
            let mut test = Vec::with_capacity(cfg.n_max);
            let mut fallbacks = 0;
            for n in 1..=cfg.n_max {
                let w = match &nested {
                    Some(w) => w.top_rows(n),
                    None => sample_weights(n, x_train.rows(), derive_seed(seed, n as u64))?,
                };
                let s = hidden_features(&w, x_train)?;
                let (beta, solver) = fit_output(&s, &ytr, cfg.lambda)?;
                if matches!(solver, Solver::Fallback(_)) {
                    fallbacks += 1;
                }
                let fit = s.mat_vec(&beta);
                train.push(residual_norm(&ytr, &fit) / ntr);
                let pred = hidden_features(&w, x_test)?.mat_vec(&beta);
                test.push(residual_norm(&yte, &pred) / nte);
            }
            let millis = start.elapsed().as_secs_f64() * 1e3;
            Ok(Realization {
                seed,
                train,
                test,
                fallbacks,
                millis,
            })
        })
        .collect::<Result<_>>()?;

    let fallbacks: usize = runs.iter().map(|r| r.fallbacks).sum();
    if fallbacks > 0 {
        warn!(
            "{fallbacks} of {} ELM fits were ill-conditioned and used ridge jitter",
            cfg.n_max * cfg.realizations
        );
    }
    let train: Vec<Vec<T>> = runs.iter().map(|r| r.train.clone()).collect();
    let test: Vec<Vec<T>> = runs.iter().map(|r| r.test.clone()).collect();
    Ok(ElmSweep {
        train: Band::from_curves(&train),
        test: Band::from_curves(&test),
        runs,
    })
}

fn residual_norm<T: Real>(y: &[T], fit: &[T]) -> T {
    y.iter().zip(fit).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    // Gauss-Jordan elimination with partial pivoting on [A | b].
    fn solve_by_elimination(a: &Matrix<f64>, b: &[f64]) -> Vec<f64> {
        let n = a.rows();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = a.row(i).to_vec();
                r.push(b[i]);
                r
            })
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            for r in 0..n {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for k in c..=n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
        (0..n).map(|i| m[i][n] / m[i][i]).collect()
    }

    #[test]
    fn weights_are_deterministic() {
        let a: Matrix<f64> = sample_weights(5, 3, 9).unwrap();
        let b: Matrix<f64> = sample_weights(5, 3, 9).unwrap();
        let c: Matrix<f64> = sample_weights(5, 3, 10).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert_ne!(a.as_slice(), c.as_slice());
        assert!(sample_weights::<f64>(0, 3, 1).is_err());
    }

    #[test]
    fn weight_moments() {
        let (n, n0) = (5000, 20);
        let w: Matrix<f64> = sample_weights(n, n0, 3).unwrap();
        let k = (n * n0) as f64;
        let m = w.as_slice().iter().sum::<f64>() / k;
        let var = w.as_slice().iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0);
        let target = 1.0 / n0 as f64;
        assert!(m.abs() <= 4.0 * (target / k).sqrt());
        assert!((var - target).abs() <= 4.0 * (2.0 / k).sqrt() * target, "var {var}");
    }

    #[test]
    fn ols_on_orthonormal_columns() {
        let s = Matrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let y = [3.0, -2.0, 7.0];
        let b = fit_ols(&s, &y).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-15 && (b[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn ols_matches_elimination_and_is_orthogonal() {
        let s = gaussian(30, 6, 1);
        let y = gaussian(30, 1, 2).into_vec();
        let b = fit_ols(&s, &y).unwrap();
        let oracle = solve_by_elimination(&s.gram(), &s.t_mat_vec(&y));
        for (u, v) in b.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-10);
        }
        let r: Vec<f64> = y.iter().zip(s.mat_vec(&b)).map(|(a, f)| a - f).collect();
        for j in 0..6 {
            assert!(dot(&s.column(j), &r).abs() < 1e-8);
        }
    }

    #[test]
    fn ols_exact_when_y_in_span() {
        let s = gaussian(12, 4, 3);
        let y = s.mat_vec(&[1.0, -1.0, 0.5, 2.0]);
        let b = fit_ols(&s, &y).unwrap();
        let r = residual_norm(&y, &s.mat_vec(&b));
        assert!(r < 1e-12);
    }

    #[test]
    fn ols_rejects_collinear() {
        let mut s = gaussian(10, 3, 4);
        let c = s.column(0);
        s.set_column(2, &c);
        assert!(fit_ols(&s, &gaussian(10, 1, 5).into_vec()).is_err());
        let (b, solver) = fit_output(&s, &gaussian(10, 1, 5).into_vec(), 0.0).unwrap();
        assert!(matches!(solver, Solver::Fallback(_)));
        assert!(b.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ridge_primal_equals_dual() {
        let s = gaussian(10, 6, 6);
        let y = gaussian(10, 1, 7).into_vec();
        let p = fit_ridge_primal(&s, &y, 0.5).unwrap();
        let d = fit_ridge_dual(&s, &y, 0.5).unwrap();
        for (a, b) in p.iter().zip(&d) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ridge_limits() {
        let s = gaussian(20, 4, 8);
        let y = gaussian(20, 1, 9).into_vec();
        let big = fit_ridge(&s, &y, 1e12).unwrap();
        assert!(norm(&big) < 1e-9);
        let small = fit_ridge(&s, &y, 1e-10).unwrap();
        let ols = fit_ols(&s, &y).unwrap();
        for (a, b) in small.iter().zip(&ols) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(fit_ridge(&s, &y, 0.0).is_err());
    }

    fn toy(t: usize, n0: usize, seed: u64) -> (Matrix<f64>, Vec<f64>) {
        let x = gaussian(n0, t, seed);
        let noise = gaussian(t, 1, seed + 1).into_vec();
        let y = (0..t).map(|j| x[(0, j)].sin() + 0.5 * noise[j] + 1.0).collect();
        (x, y)
    }

    #[test]
    fn single_realization_band_collapses() {
        let (x, y) = toy(40, 3, 10);
        let (xt, yt) = toy(15, 3, 12);
        let cfg = SweepConfig {
            realizations: 1,
            ..SweepConfig::new(8, 4)
        };
        let sw = elm_error_sweep(&x, &y, &xt, &yt, &cfg).unwrap();
        assert_eq!(sw.test.mean, sw.test.min);
        assert_eq!(sw.test.mean, sw.test.max);
        assert_eq!(sw.train.len(), 8);
        assert_eq!(sw.test_std_at(3), 0.0);
    }

    #[test]
    fn sweep_deterministic_and_banded() {
        let (x, y) = toy(40, 3, 13);
        let (xt, yt) = toy(15, 3, 15);
        let cfg = SweepConfig {
            realizations: 5,
            ..SweepConfig::new(10, 21)
        };
        let a = elm_error_sweep(&x, &y, &xt, &yt, &cfg).unwrap();
        let b = elm_error_sweep(&x, &y, &xt, &yt, &cfg).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        for i in 0..10 {
            assert!(a.test.min[i] <= a.test.mean[i] && a.test.mean[i] <= a.test.max[i]);
        }
        // Nested prefixes: training error cannot increase with n.
        for r in &a.runs {
            for w in r.train.windows(2) {
                assert!(w[1] <= w[0] + 1e-10);
            }
        }
        let fresh = SweepConfig { nested: false, ..cfg };
        let c = elm_error_sweep(&x, &y, &xt, &yt, &fresh).unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn interpolates_at_n_equal_t() {
        let (x, y) = toy(24, 10, 30);
        let (xt, yt) = toy(10, 10, 32);
        let cfg = SweepConfig {
            realizations: 2,
            ..SweepConfig::new(24, 5)
        };
        let sw = elm_error_sweep(&x, &y, &xt, &yt, &cfg).unwrap();
        assert!(sw.train.max[23] <= 1e-6, "train error {}", sw.train.max[23]);
    }

    #[test]
    fn model_predicts_training_fit() {
        let (x, y) = toy(30, 4, 40);
        let m = ElmModel::fit(&x, &y, 6, 0.0, 7).unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(m.ridge_lambda, 0.0);
        let p = m.predict(&x).unwrap();
        let resid: f64 = y.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let mu = y.iter().sum::<f64>() / 30.0;
        let tot: f64 = y.iter().map(|v| (v - mu).powi(2)).sum::<f64>().sqrt();
        assert!(resid < tot);
    }

    #[test]
    fn f32_sweep_runs() {
        let (x, y) = toy(20, 2, 50);
        let x32: Matrix<f32> = x.cast();
        let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
        let cfg = SweepConfig {
            realizations: 2,
            ..SweepConfig::new(4, 1)
        };
        let sw = elm_error_sweep(&x32, &y32, &x32, &y32, &cfg).unwrap();
        assert!(sw.train.mean.iter().all(|v| v.is_finite()));
    }
}
