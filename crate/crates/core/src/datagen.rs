//! Synthetic regression benchmarks.
//!
//! 48 configurations: sample size, input dimension, input law, target
//! function and signal-to-noise ratio, each taking two values except the
//! input law, which takes three.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::{erf, Cholesky, Matrix};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Real, Result};

pub const SAMPLE_SIZES: [usize; 2] = [300, 1200];
pub const INPUT_DIMS: [usize; 2] = [20, 80];
pub const SNRS: [f64; 2] = [2.0, 10.0];
pub const TOEPLITZ_RHO: f64 = 0.8;
pub const UNIFORM_HALF_WIDTH: f64 = 2.0 * PI;
pub const SHALLOW_WIDTH: usize = 100;
pub const N_SPECS: usize = 48;

const STREAM_INPUTS: u64 = 1;
const STREAM_TARGET: u64 = 2;
const STREAM_NOISE: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InputDist {
    /// i.i.d. uniform on `[−2π, 2π]`.
    Uniform,
    /// i.i.d. standard normal.
    IndepGaussian,
    /// Zero-mean normal with `cov(x_i, x_j) = 0.8^|i−j|`.
    ToeplitzGaussian,
}

impl InputDist {
    pub const ALL: [InputDist; 3] = [InputDist::Uniform, InputDist::IndepGaussian, InputDist::ToeplitzGaussian];

    pub fn label(self) -> &'static str {
        match self {
            InputDist::Uniform => "uniform",
            InputDist::IndepGaussian => "indep_gaussian",
            InputDist::ToeplitzGaussian => "toeplitz_gaussian",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetFn {
    Linear,
    ShallowNn,
}

impl TargetFn {
    pub const ALL: [TargetFn; 2] = [TargetFn::Linear, TargetFn::ShallowNn];

    pub fn label(self) -> &'static str {
        match self {
            TargetFn::Linear => "linear",
            TargetFn::ShallowNn => "shallow_nn",
        }
    }
}

/// One synthetic configuration together with its generation seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticSpec {
    /// 1-based position in the enumeration.
    pub id: usize,
    pub t: usize,
    pub n0: usize,
    pub input_dist: InputDist,
    pub target_fn: TargetFn,
    /// `Var(f) / Var(ε)`; infinite means noiseless.
    pub snr: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Spec `id` in `1..=48`. The dataset seed is derived from `base_seed` and `id`.
    ///
    /// Ordering, slowest to fastest: sample size, input dimension, target
    /// function, input law, SNR.
    pub fn from_id(id: usize, base_seed: u64) -> Result<Self> {
        if !(1..=N_SPECS).contains(&id) {
            return Err(Error::InvalidParameter(format!("synthetic spec id must be in 1..=48, got {id}")));
        }
        let k = id - 1;
        let snr = SNRS[k % 2];
        let input_dist = InputDist::ALL[(k / 2) % 3];
        let target_fn = TargetFn::ALL[(k / 6) % 2];
        let n0 = INPUT_DIMS[(k / 12) % 2];
        let t = SAMPLE_SIZES[k / 24];
        Ok(SyntheticSpec {
            id,
            t,
            n0,
            input_dist,
            target_fn,
            snr,
            seed: derive_seed(base_seed, id as u64),
        })
    }

    pub fn all(base_seed: u64) -> Vec<SyntheticSpec> {
        (1..=N_SPECS)
            .map(|id| SyntheticSpec::from_id(id, base_seed).expect("id in range"))
            .collect()
    }

    pub fn name(&self) -> String {
        format!("synthetic_{:02}", self.id)
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dataset {} (T={}, n0={}, {}, {}, SNR={})",
            self.id,
            self.t,
            self.n0,
            self.input_dist.label(),
            self.target_fn.label(),
            self.snr
        )
    }
}

/// Inputs of shape `n₀ × T`, one column per point.
pub fn gen_inputs<T: Real>(spec: &SyntheticSpec) -> Result<Matrix<T>> {
    sample_inputs(spec.input_dist, spec.n0, spec.t, derive_seed(spec.seed, STREAM_INPUTS))
}

pub fn sample_inputs<T: Real>(dist: InputDist, n0: usize, t: usize, seed: u64) -> Result<Matrix<T>> {
    let mut rng = seeded(seed);
    let mut x = Matrix::zeros(n0, t);
    match dist {
        InputDist::Uniform => {
            for j in 0..t {
                for i in 0..n0 {
                    x[(i, j)] = T::lit(rng.random_range(-UNIFORM_HALF_WIDTH..=UNIFORM_HALF_WIDTH));
                }
            }
        }
        InputDist::IndepGaussian => {
            for j in 0..t {
                for i in 0..n0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x[(i, j)] = T::lit(z);
                }
            }
        }
        InputDist::ToeplitzGaussian => {
            let cov = Matrix::from_fn(n0, n0, |i, j| TOEPLITZ_RHO.powi(i.abs_diff(j) as i32));
            let chol = Cholesky::new(&cov)?;
            let l = chol.factor();
            let mut z = vec![0.0f64; n0];
            for j in 0..t {
                for zk in z.iter_mut() {
                    *zk = StandardNormal.sample(&mut rng);
                }
                for i in 0..n0 {
                    let v: f64 = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
                    x[(i, j)] = T::lit(v);
                }
            }
        }
    }
    Ok(x)
}

/// `f(x) = αᵀx + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearParams<T> {
    pub alpha: Vec<T>,
    pub intercept: T,
}

/// `f(x) = βᵀ erf(W x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShallowParams<T> {
    pub weights: Matrix<T>,
    pub beta: Vec<T>,
}

/// Draws `α` and `b` uniformly on `[−2, 2]` and evaluates the target.
pub fn gen_target_linear<T: Real>(x: &Matrix<T>, seed: u64) -> (Vec<T>, LinearParams<T>) {
    let mut rng = seeded(seed);
    let alpha: Vec<T> = (0..x.rows()).map(|_| T::lit(rng.random_range(-2.0..=2.0))).collect();
    let intercept = T::lit(rng.random_range(-2.0..=2.0));
    let params = LinearParams { alpha, intercept };
    (linear_target(x, &params), params)
}

pub fn linear_target<T: Real>(x: &Matrix<T>, p: &LinearParams<T>) -> Vec<T> {
    x.t_mat_vec(&p.alpha).into_iter().map(|v| v + p.intercept).collect()
}

/// Random 100-neuron erf network with `W ~ N(0, 1/n₀)` and `β ~ N(0, 1/100)`.
pub fn gen_target_shallow<T: Real>(x: &Matrix<T>, seed: u64) -> (Vec<T>, ShallowParams<T>) {
    let mut rng = seeded(seed);
    let n0 = x.rows().max(1);
    let ws = 1.0 / (n0 as f64).sqrt();
    let bs = 1.0 / (SHALLOW_WIDTH as f64).sqrt();
    let weights = Matrix::from_fn(SHALLOW_WIDTH, x.rows(), |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        T::lit(z * ws)
    });
    let beta: Vec<T> = (0..SHALLOW_WIDTH)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z * bs)
        })
        .collect();
    let params = ShallowParams { weights, beta };
    (shallow_target(x, &params), params)
}

pub fn shallow_target<T: Real>(x: &Matrix<T>, p: &ShallowParams<T>) -> Vec<T> {
    p.weights.matmul(x).map(erf).t_mat_vec(&p.beta)
}

/// Unbiased sample variance.
pub fn sample_variance<T: Real>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let m = crate::numerics::mean(v);
    v.iter().map(|&a| (a - m) * (a - m)).sum::<T>() / T::of_usize(v.len() - 1)
}

/// Adds Gaussian noise with variance `Var(f) / snr`.
pub fn apply_noise<T: Real>(f: &[T], snr: f64, seed: u64) -> Result<Vec<T>> {
    if !(snr > 0.0) {
        return Err(Error::InvalidParameter(format!("SNR must be positive, got {snr}")));
    }
    let var = sample_variance(f).as_f64();
    if !(var > 0.0) {
        return Err(Error::ConstantSignal);
    }
    let sigma = (var / snr).sqrt();
    let mut rng = seeded(seed);
    Ok(f
        .iter()
        .map(|&v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + T::lit(sigma * z)
        })
        .collect())
}

/// A generated dataset: inputs, clean signal and noisy targets.
#[derive(Clone, Debug)]
pub struct Synthetic<T> {
    pub spec: SyntheticSpec,
    pub x: Matrix<T>,
    pub signal: Vec<T>,
    pub y: Vec<T>,
}

pub fn generate<T: Real>(spec: &SyntheticSpec) -> Result<Synthetic<T>> {
    let x = gen_inputs(spec)?;
    let tseed = derive_seed(spec.seed, STREAM_TARGET);
    let signal = match spec.target_fn {
        TargetFn::Linear => gen_target_linear(&x, tseed).0,
        TargetFn::ShallowNn => gen_target_shallow(&x, tseed).0,
    };
    let y = if spec.snr.is_infinite() {
        signal.clone()
    } else {
        apply_noise(&signal, spec.snr, derive_seed(spec.seed, STREAM_NOISE))?
    };
    Ok(Synthetic {
        spec: *spec,
        x,
        signal,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_matches_table() {
        let specs = SyntheticSpec::all(0);
        assert_eq!(specs.len(), 48);
        let s1 = specs[0];
        assert_eq!((s1.t, s1.n0, s1.input_dist, s1.target_fn, s1.snr), (300, 20, InputDist::Uniform, TargetFn::Linear, 2.0));
        let s7 = specs[6];
        assert_eq!((s7.input_dist, s7.target_fn, s7.snr), (InputDist::Uniform, TargetFn::ShallowNn, 2.0));
        let s6 = specs[5];
        assert_eq!((s6.input_dist, s6.snr), (InputDist::ToeplitzGaussian, 10.0));
        let s13 = specs[12];
        assert_eq!((s13.t, s13.n0, s13.target_fn), (300, 80, TargetFn::Linear));
        let s25 = specs[24];
        assert_eq!((s25.t, s25.n0), (1200, 20));
        let s48 = specs[47];
        assert_eq!(
            (s48.t, s48.n0, s48.input_dist, s48.target_fn, s48.snr),
            (1200, 80, InputDist::ToeplitzGaussian, TargetFn::ShallowNn, 10.0)
        );
        // Every combination occurs exactly once.
        let mut keys: Vec<_> = specs
            .iter()
            .map(|s| (s.t, s.n0, s.input_dist.label(), s.target_fn.label(), s.snr as u32))
            .collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 48);
        assert!(SyntheticSpec::from_id(0, 0).is_err());
        assert!(SyntheticSpec::from_id(49, 0).is_err());
    }

    #[test]
    fn uniform_inputs_centered_and_bounded() {
        let t = 20000;
        let x: Matrix<f64> = sample_inputs(InputDist::Uniform, 3, t, 5).unwrap();
        let bound = 4.0 * (4.0 * PI / 12f64.sqrt()) / (t as f64).sqrt();
        for i in 0..3 {
            let m = x.row(i).iter().sum::<f64>() / t as f64;
            assert!(m.abs() <= bound, "mean {m}");
            assert!(x.row(i).iter().all(|v| v.abs() <= UNIFORM_HALF_WIDTH));
        }
    }

    #[test]
    fn gaussian_inputs_unit_variance() {
        let t = 20000;
        let x: Matrix<f64> = sample_inputs(InputDist::IndepGaussian, 2, t, 6).unwrap();
        let v = sample_variance(x.row(0));
        assert!((v - 1.0).abs() <= 4.0 * (2.0 / t as f64).sqrt());
    }

    #[test]
    fn toeplitz_correlation() {
        let t = 20000;
        let x: Matrix<f64> = sample_inputs(InputDist::ToeplitzGaussian, 2, t, 7).unwrap();
        let (a, b) = (x.row(0), x.row(1));
        let ma = a.iter().sum::<f64>() / t as f64;
        let mb = b.iter().sum::<f64>() / t as f64;
        let cov: f64 = a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum();
        let va: f64 = a.iter().map(|u| (u - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|v| (v - mb).powi(2)).sum();
        let corr = cov / (va * vb).sqrt();
        assert!((corr - 0.8).abs() <= 4.0 / (t as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn toeplitz_lag_two() {
        let t = 20000;
        let x: Matrix<f64> = sample_inputs(InputDist::ToeplitzGaussian, 3, t, 8).unwrap();
        let c: f64 = x.row(0).iter().zip(x.row(2)).map(|(u, v)| u * v).sum::<f64>() / t as f64;
        assert!((c - 0.64).abs() <= 4.0 * (2.0 / t as f64).sqrt());
    }

    #[test]
    fn inputs_deterministic() {
        let s = SyntheticSpec::from_id(5, 11).unwrap();
        let a: Matrix<f64> = gen_inputs(&s).unwrap();
        let b: Matrix<f64> = gen_inputs(&s).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert_eq!(a.shape(), (20, 300));
    }

    #[test]
    fn linear_target_cases() {
        let x = Matrix::<f64>::identity(3);
        let (f, p) = gen_target_linear(&x, 3);
        for i in 0..3 {
            assert_eq!(f[i], p.alpha[i] + p.intercept);
        }
        assert!(p.alpha.iter().chain([&p.intercept]).all(|v| v.abs() <= 2.0));
        let zero = LinearParams { alpha: vec![0.0; 3], intercept: 1.25 };
        let x = Matrix::from_fn(3, 4, |i, j| (i + j) as f64);
        assert_eq!(linear_target(&x, &zero), vec![1.25; 4]);
        let (f, p) = gen_target_linear(&x, 4);
        for j in 0..4 {
            let d: f64 = (0..3).map(|i| p.alpha[i] * x[(i, j)]).sum::<f64>() + p.intercept;
            assert!((f[j] - d).abs() < 1e-14);
        }
    }

    #[test]
    fn shallow_target_cases() {
        let zero = Matrix::<f64>::zeros(4, 5);
        let (f, p) = gen_target_shallow(&zero, 1);
        assert!(f.iter().all(|&v| v == 0.0));
        assert_eq!(p.weights.shape(), (100, 4));
        let x = Matrix::from_fn(4, 5, |i, j| (i as f64 - j as f64) * 0.3);
        assert_eq!(gen_target_shallow(&x, 2).0, gen_target_shallow(&x, 2).0);
        let one = ShallowParams {
            weights: Matrix::from_rows(&[vec![0.5, -1.0]]).unwrap(),
            beta: vec![2.0],
        };
        let x = Matrix::from_rows(&[vec![1.0], vec![0.25]]).unwrap();
        // erf(0.25) from the series.
        let e = (0..30).fold(0.0, |acc, k| {
            let k = k as i32;
            let fact: f64 = (1..=k).map(f64::from).product();
            acc + (-1f64).powi(k) * 0.25f64.powi(2 * k + 1) / (fact * f64::from(2 * k + 1))
        }) * 2.0
            / PI.sqrt();
        assert!((shallow_target(&x, &one)[0] - 2.0 * e).abs() < 1e-15);
    }

    #[test]
    fn noise_variance_ratio() {
        let t = 20000;
        let f: Vec<f64> = (0..t).map(|i| (i as f64 * 0.01).sin()).collect();
        let y = apply_noise(&f, 2.0, 9).unwrap();
        let e: Vec<f64> = y.iter().zip(&f).map(|(a, b)| a - b).collect();
        let ratio = sample_variance(&e) / sample_variance(&f);
        assert!((ratio - 0.5).abs() <= 4.0 * (2.0 / t as f64).sqrt(), "ratio {ratio}");
        assert_eq!(apply_noise(&f, 2.0, 9).unwrap(), y);
        let clean = apply_noise(&f, 1e300, 9).unwrap();
        assert!(clean.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-140));
        assert!(matches!(apply_noise(&[1.0, 1.0, 1.0], 2.0, 1), Err(Error::ConstantSignal)));
    }

    #[test]
    fn generate_shapes() {
        let s = SyntheticSpec::from_id(7, 1).unwrap();
        let d: Synthetic<f64> = generate(&s).unwrap();
        assert_eq!(d.x.shape(), (20, 300));
        assert_eq!(d.y.len(), 300);
        let noiseless = SyntheticSpec { snr: f64::INFINITY, ..s };
        let d: Synthetic<f64> = generate(&noiseless).unwrap();
        assert_eq!(d.y, d.signal);
    }
}
