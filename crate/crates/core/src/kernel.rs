//! NNGP kernel of a single erf hidden layer.
//!
//! For hidden weights with i.i.d. `N(0, 1/n₀)` entries the pre-activations of
//! two inputs are jointly Gaussian with covariance built from `⟨x, y⟩/n₀`, and
//! the expected product of erf activations has the closed form
//!
//! ```text
//! E[erf(u) erf(v)] = (2/π) · asin( 2 k_xy / √((1 + 2 k_xx)(1 + 2 k_yy)) )
//! ```
//!
//! [`mc_gram_estimate`] samples finite-width hidden layers and is the
//! independent check of that formula.

use log::{debug, warn};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::numerics::{dot, erf_f64, sym_eig, EigenPair, Matrix};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Real, Result};

/// Normalization of the input-layer kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InputScaling {
    /// `⟨x, y⟩ / n₀`, matching hidden weights with variance `1/n₀`.
    #[default]
    PerDimension,
    /// Plain `⟨x, y⟩`.
    Unscaled,
}

/// Gram matrix of the NNGP kernel on a set of inputs.
#[derive(Clone, Debug)]
pub struct KernelGram<T> {
    pub gram: Matrix<T>,
    pub scaling: InputScaling,
    eigen: Option<EigenPair<T>>,
}

impl<T: Real> KernelGram<T> {
    pub fn new(gram: Matrix<T>, scaling: InputScaling) -> Self {
        KernelGram {
            gram,
            scaling,
            eigen: None,
        }
    }

    pub fn len(&self) -> usize {
        self.gram.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.gram.rows() == 0
    }

    /// Eigen-decomposition, computed on first use.
    pub fn decompose(&mut self) -> Result<&EigenPair<T>> {
        if self.eigen.is_none() {
            let eig = sym_eig(&self.gram)?;
            let (lmin, lmax) = (eig.min_value(), eig.max_value());
            debug!("NNGP Gram spectrum: max {lmax:e}, min {lmin:e}");
            if lmin < -T::lit(1e-8) * lmax.abs() {
                warn!("NNGP Gram has eigenvalue {lmin:e} below PSD tolerance (max {lmax:e})");
            }
            self.eigen = Some(eig);
        }
        Ok(self.eigen.as_ref().expect("set above"))
    }

    pub fn eigen(&self) -> Option<&EigenPair<T>> {
        self.eigen.as_ref()
    }

    pub fn into_eigen(mut self) -> Result<EigenPair<T>> {
        self.decompose()?;
        Ok(self.eigen.take().expect("decomposed"))
    }
}

/// Input-layer kernel `K⁽⁰⁾(xᵢ, xⱼ)` for `X` of shape `n₀ × T`.
pub fn input_kernel<T: Real>(x: &Matrix<T>, scaling: InputScaling) -> Matrix<T> {
    let xt = x.transpose();
    let mut k = xt.matmul_transposed(&xt);
    if scaling == InputScaling::PerDimension && x.rows() > 0 {
        let inv = T::one() / T::of_usize(x.rows());
        k.as_mut_slice().iter_mut().for_each(|v| *v *= inv);
    }
    k
}

const ASIN_CLAMP_TOL: f64 = 1e-12;

/// Dual activation of erf: `E[erf(u) erf(v)]` for `(u, v) ~ N(0, [[k_xx, k_xy], [k_xy, k_yy]])`.
///
/// Fails if the covariance is not positive semi-definite within `1e-12`.
pub fn erf_dual<T: Real>(k_xx: T, k_xy: T, k_yy: T) -> Result<T> {
    let tol = T::lit(ASIN_CLAMP_TOL);
    if !(k_xx >= T::zero() && k_yy >= T::zero()) || !k_xy.is_finite() {
        return Err(Error::Domain(format!(
            "erf_dual needs non-negative variances, got ({k_xx}, {k_yy})"
        )));
    }
    if k_xy.abs() > (k_xx * k_yy).sqrt() + tol {
        return Err(Error::Domain(format!(
            "erf_dual covariance not PSD: |{k_xy}| > sqrt({k_xx} * {k_yy})"
        )));
    }
    Ok(erf_dual_unchecked(k_xx, k_xy, k_yy))
}

#[inline]
fn erf_dual_unchecked<T: Real>(k_xx: T, k_xy: T, k_yy: T) -> T {
    let two = T::lit(2.0);
    let arg = two * k_xy / ((T::one() + two * k_xx) * (T::one() + two * k_yy)).sqrt();
    let arg = arg.max(-T::one()).min(T::one());
    T::lit(std::f64::consts::FRAC_2_PI) * arg.asin()
}

/// One layer of the kernel recursion: applies the erf dual entry-wise to a
/// previous-layer Gram matrix.
pub fn dual_layer<T: Real>(k: &Matrix<T>) -> Matrix<T> {
    let n = k.rows();
    let diag: Vec<T> = (0..n).map(|i| k[(i, i)]).collect();
    let mut out = Matrix::zeros(n, n);
    out.as_mut_slice()
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            for (j, o) in row.iter_mut().enumerate() {
                *o = erf_dual_unchecked(diag[i], k[(i, j)], diag[j]);
            }
        });
    out
}

/// NNGP Gram matrix of a single erf hidden layer on the columns of `X` (`n₀ × T`).
pub fn nngp_gram<T: Real>(x: &Matrix<T>) -> KernelGram<T> {
    nngp_gram_with(x, InputScaling::PerDimension)
}

pub fn nngp_gram_with<T: Real>(x: &Matrix<T>, scaling: InputScaling) -> KernelGram<T> {
    KernelGram::new(dual_layer(&input_kernel(x, scaling)), scaling)
}

/// Kernel after `depth` erf layers (`depth = 1` is [`nngp_gram`]).
pub fn nngp_gram_layers<T: Real>(x: &Matrix<T>, depth: usize, scaling: InputScaling) -> KernelGram<T> {
    let mut k = input_kernel(x, scaling);
    for _ in 0..depth {
        k = dual_layer(&k);
    }
    KernelGram::new(k, scaling)
}

/// Monte-Carlo estimate of the Gram matrix together with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct McGram<T> {
    pub mean: Matrix<T>,
    pub std_err: Matrix<T>,
    pub width: usize,
}

const MC_CHUNK: usize = 4096;

/// Empirical Gram `(1/width) σ(WX)ᵀσ(WX)` with `W` of shape `width × n₀`,
/// entries `N(0, 1/n₀)`. Deterministic for a given seed.
pub fn mc_gram_estimate<T: Real>(x: &Matrix<T>, width: usize, seed: u64) -> Result<Matrix<T>> {
    Ok(mc_gram_with_stderr(x, width, seed)?.mean)
}

/// As [`mc_gram_estimate`], also returning the standard error of every entry.
pub fn mc_gram_with_stderr<T: Real>(x: &Matrix<T>, width: usize, seed: u64) -> Result<McGram<T>> {
    if width == 0 {
        return Err(Error::InvalidParameter("Monte-Carlo width must be at least 1".into()));
    }
    let n0 = x.rows();
    let t = x.cols();
    let xt: Matrix<f64> = x.transpose().cast();
    let w_scale = 1.0 / (n0.max(1) as f64).sqrt();
    let n_chunks = width.div_ceil(MC_CHUNK);

    // Partial sums per chunk are reduced in chunk order so the result does
    // not depend on the thread count.
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let rows = MC_CHUNK.min(width - c * MC_CHUNK);
            let mut rng = seeded(derive_seed(seed, c as u64));
            let mut sum = vec![0.0f64; t * t];
            let mut sumsq = vec![0.0f64; t * t];
            let mut w = vec![0.0f64; n0];
            let mut f = vec![0.0f64; t];
            for _ in 0..rows {
                for wk in w.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *wk = z * w_scale;
                }
                for (fi, xi) in f.iter_mut().zip(xt.row_iter()) {
                    *fi = erf_f64(dot(&w, xi));
                }
                for i in 0..t {
                    let fi = f[i];
                    let s = &mut sum[i * t..(i + 1) * t];
                    let q = &mut sumsq[i * t..(i + 1) * t];
                    for j in i..t {
                        let p = fi * f[j];
                        s[j] += p;
                        q[j] += p * p;
                    }
                }
            }
            (sum, sumsq)
        })
        .collect();

    let mut sum = vec![0.0f64; t * t];
    let mut sumsq = vec![0.0f64; t * t];
    for (s, q) in &partials {
        for k in 0..t * t {
            sum[k] += s[k];
            sumsq[k] += q[k];
        }
    }
    let nw = width as f64;
    let mut mean = Matrix::zeros(t, t);
    let mut std_err = Matrix::zeros(t, t);
    for i in 0..t {
        for j in i..t {
            let m = sum[i * t + j] / nw;
            let var = if width > 1 {
                ((sumsq[i * t + j] - nw * m * m) / (nw - 1.0)).max(0.0)
            } else {
                0.0
            };
            let se = (var / nw).sqrt();
            mean[(i, j)] = T::lit(m);
            mean[(j, i)] = T::lit(m);
            std_err[(i, j)] = T::lit(se);
            std_err[(j, i)] = T::lit(se);
        }
    }
    Ok(McGram { mean, std_err, width })
}
