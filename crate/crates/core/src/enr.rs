//! Non-random hidden layers from the NNGP eigenbasis and their output-layer fits.
//!
//! Pipeline on standardized training inputs `X` (`n₀ × T`):
//!
//! 1. `K = nngp_gram(X)`, `K = U Δ Uᵀ`.
//! 2. [`compute_hidden_weights`]: `Ŵ = erf⁻¹(Uᵀ) Xᵀ (X Xᵀ)⁻¹`, one candidate
//!    neuron per eigenvector so that `erf(Ŵ X)ᵀ ≈ U`.
//! 3. Output layer, either [`fit_approximated`] (regress on `U` directly) or
//!    [`fit_incremental`] (forward stagewise on the realized features).
//!
//! Both fits return neurons in nesting order, so [`error_curve`] evaluates the
//! whole family of models with `1..=n` neurons in one pass.

use log::warn;

use crate::kernel::{nngp_gram_with, InputScaling};
use crate::numerics::{axpy, dot, erf, erf_inv, mean, norm, row_space_projector_apply, EigenPair, Matrix};
use crate::{Error, Real, Result};

/// Standard deviation below which a feature is rejected as constant.
pub const MIN_FEATURE_STD: f64 = 1e-12;

/// Entries of `Uᵀ` are clamped to `[-1 + δ, 1 - δ]` before `erf⁻¹`.
pub const ERF_INV_CLAMP: f64 = 1e-12;

/// Standardization statistics estimated on the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocess<T> {
    pub feature_means: Vec<T>,
    pub feature_stds: Vec<T>,
    pub target_mean: T,
}

/// Estimates per-feature mean and (population) standard deviation and the
/// target mean. `x` is `n₀ × T`.
pub fn fit_preprocess<T: Real>(x: &Matrix<T>, y: &[T]) -> Result<Preprocess<T>> {
    if x.cols() != y.len() {
        return Err(Error::dim("fit_preprocess", x.cols(), y.len()));
    }
    if y.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let t = T::of_usize(y.len());
    let mut feature_means = Vec::with_capacity(x.rows());
    let mut feature_stds = Vec::with_capacity(x.rows());
    for (idx, row) in x.row_iter().enumerate() {
        let m = mean(row);
        let var = row.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / t;
        let sd = var.sqrt();
        if !(sd >= T::lit(MIN_FEATURE_STD)) {
            return Err(Error::ZeroVariance { index: idx });
        }
        feature_means.push(m);
        feature_stds.push(sd);
    }
    Ok(Preprocess {
        feature_means,
        feature_stds,
        target_mean: mean(y),
    })
}

impl<T: Real> Preprocess<T> {
    /// Statistics that leave inputs untouched.
    pub fn identity(n0: usize) -> Self {
        Preprocess {
            feature_means: vec![T::zero(); n0],
            feature_stds: vec![T::one(); n0],
            target_mean: T::zero(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_means.len()
    }

    pub fn transform_inputs(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.rows() != self.n_features() {
            return Err(Error::dim("Preprocess::transform_inputs", self.n_features(), x.rows()));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x[(i, j)] - self.feature_means[i]) / self.feature_stds[i]
        }))
    }

    pub fn transform_point(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n_features() {
            return Err(Error::dim("Preprocess::transform_point", self.n_features(), x.len()));
        }
        Ok(x.iter()
            .zip(self.feature_means.iter().zip(&self.feature_stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }

    pub fn center_targets(&self, y: &[T]) -> Vec<T> {
        y.iter().map(|&v| v - self.target_mean).collect()
    }
}

/// Candidate hidden weights, one row per eigenvector of the Gram matrix.
#[derive(Clone, Debug)]
pub struct HiddenWeights<T> {
    /// `T × n₀`; row `j` belongs to eigenvector column `j`.
    pub weights: Matrix<T>,
    /// Numerical rank of `X Xᵀ`.
    pub rank: usize,
    pub rank_deficient: bool,
}

/// `Ŵ = erf⁻¹(Uᵀ) Xᵀ (X Xᵀ)⁻¹` for standardized `X` (`n₀ × T`) and `U` (`T × T`).
pub fn compute_hidden_weights<T: Real>(x_std: &Matrix<T>, u: &Matrix<T>) -> Result<HiddenWeights<T>> {
    if u.rows() != x_std.cols() {
        return Err(Error::dim("compute_hidden_weights", x_std.cols(), u.rows()));
    }
    let hi = T::one() - T::lit(ERF_INV_CLAMP);
    let mut targets = Matrix::zeros(u.cols(), u.rows());
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            targets[(j, i)] = erf_inv(u[(i, j)].max(-hi).min(hi))?;
        }
    }
    let proj = row_space_projector_apply(x_std, &targets)?;
    Ok(HiddenWeights {
        weights: proj.matrix,
        rank: proj.rank,
        rank_deficient: proj.rank_deficient,
    })
}

/// Eigenvector indices sorted by `|⟨y, U_j⟩|`, largest first; ties keep ascending index.
pub fn order_by_information<T: Real>(u: &Matrix<T>, y: &[T]) -> Result<Vec<usize>> {
    if u.rows() != y.len() {
        return Err(Error::dim("order_by_information", u.rows(), y.len()));
    }
    let scores: Vec<T> = u.t_mat_vec(y).into_iter().map(T::abs).collect();
    let mut order: Vec<usize> = (0..u.cols()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(order)
}

/// `erf(W X)`, shape `neurons × T`.
pub fn activations<T: Real>(weights: &Matrix<T>, x: &Matrix<T>) -> Matrix<T> {
    weights.matmul(x).map(erf)
}

/// Candidate neurons with their training activations, centered per neuron.
#[derive(Clone, Debug)]
pub struct NeuronBank<T> {
    weights: Matrix<T>,
    means: Vec<T>,
    centered: Matrix<T>,
}

impl<T: Real> NeuronBank<T> {
    /// `weights` is `n_cand × n₀`, `x_std` the standardized training inputs.
    pub fn new(weights: Matrix<T>, x_std: &Matrix<T>) -> Result<Self> {
        if weights.cols() != x_std.rows() {
            return Err(Error::dim("NeuronBank::new", x_std.rows(), weights.cols()));
        }
        let mut centered = activations(&weights, x_std);
        let mut means = Vec::with_capacity(centered.rows());
        for j in 0..centered.rows() {
            let row = centered.row_mut(j);
            let m = mean(row);
            row.iter_mut().for_each(|v| *v -= m);
            means.push(m);
        }
        Ok(NeuronBank {
            weights,
            means,
            centered,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.rows() == 0
    }

    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    /// Training mean of each neuron's activation.
    pub fn means(&self) -> &[T] {
        &self.means
    }

    /// Centered training activations; row `j` is column `j` of `S`.
    pub fn centered_features(&self) -> &Matrix<T> {
        &self.centered
    }

    pub fn n_samples(&self) -> usize {
        self.centered.cols()
    }
}

/// Everything derived from the training inputs alone.
#[derive(Clone, Debug)]
pub struct EnrBasis<T> {
    pub eigen: EigenPair<T>,
    pub bank: NeuronBank<T>,
    pub projection_rank: usize,
}

/// Gram matrix, eigenbasis, candidate weights and their training features.
pub fn build_basis<T: Real>(x_std: &Matrix<T>, scaling: InputScaling) -> Result<EnrBasis<T>> {
    let eigen = nngp_gram_with(x_std, scaling).into_eigen()?;
    let hidden = compute_hidden_weights(x_std, &eigen.vectors)?;
    let bank = NeuronBank::new(hidden.weights, x_std)?;
    Ok(EnrBasis {
        eigen,
        bank,
        projection_rank: hidden.rank,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Approximated,
    Incremental,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Approximated => "a_enr",
            Variant::Incremental => "i_enr",
        }
    }
}

/// How hidden activations are offset when a model is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FeatureCentering {
    /// Subtract the training mean of each activation, as during fitting.
    #[default]
    Training,
    /// Use raw activations.
    Raw,
}

/// Why forward stagewise fitting stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StagewiseStop {
    /// Relative residual improvement fell below the tolerance at this iteration (1-based).
    Converged { iteration: usize },
    /// The next step would have introduced a neuron beyond the limit.
    NeuronLimit,
    IterationCap,
    /// Every candidate column is identically zero (or the target is).
    Degenerate,
}

/// A fitted nested family of ENR-ELM models.
#[derive(Clone, Debug)]
pub struct EnrModel<T> {
    /// One row per selected neuron, in nesting order.
    pub weights: Matrix<T>,
    pub beta: Vec<T>,
    /// Candidate index of every selected neuron.
    pub neurons: Vec<usize>,
    /// Training mean of every selected neuron's activation.
    pub feature_means: Vec<T>,
    pub target_mean: T,
    pub variant: Variant,
    pub centering: FeatureCentering,
    pub stop: Option<StagewiseStop>,
}

impl<T: Real> EnrModel<T> {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn with_target_mean(mut self, target_mean: T) -> Self {
        self.target_mean = target_mean;
        self
    }

    pub fn with_centering(mut self, centering: FeatureCentering) -> Self {
        self.centering = centering;
        self
    }

    /// Keeps the first `n` neurons.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let idx: Vec<usize> = (0..n).collect();
        EnrModel {
            weights: self.weights.select_rows(&idx),
            beta: self.beta[..n].to_vec(),
            neurons: self.neurons[..n].to_vec(),
            feature_means: self.feature_means[..n].to_vec(),
            ..self.clone()
        }
    }

    fn offset(&self, l: usize) -> T {
        match self.centering {
            FeatureCentering::Training => self.feature_means[l],
            FeatureCentering::Raw => T::zero(),
        }
    }

    fn from_selection(bank: &NeuronBank<T>, neurons: Vec<usize>, beta: Vec<T>, variant: Variant) -> Self {
        EnrModel {
            weights: bank.weights.select_rows(&neurons),
            feature_means: neurons.iter().map(|&j| bank.means[j]).collect(),
            beta,
            neurons,
            target_mean: T::zero(),
            variant,
            centering: FeatureCentering::Training,
            stop: None,
        }
    }
}

/// Output weights as inner products with the `n` most informative eigenvectors.
///
/// `y` is the centered training target; `U` stands in for the realized
/// features, so `β_l = ⟨y, U_{J_l}⟩` is the least-squares fit on that basis.
pub fn fit_approximated<T: Real>(y: &[T], u: &Matrix<T>, n: usize, bank: &NeuronBank<T>) -> Result<EnrModel<T>> {
    if n == 0 || n > u.cols() {
        return Err(Error::InvalidParameter(format!(
            "number of neurons must lie in 1..={}, got {n}",
            u.cols()
        )));
    }
    if bank.len() != u.cols() {
        return Err(Error::dim("fit_approximated: candidates", u.cols(), bank.len()));
    }
    let order = order_by_information(u, y)?;
    let neurons: Vec<usize> = order[..n].to_vec();
    let uty = u.t_mat_vec(y);
    let beta = neurons.iter().map(|&j| uty[j]).collect();
    Ok(EnrModel::from_selection(bank, neurons, beta, Variant::Approximated))
}

/// Residual norms `‖y − U_J (U_J)ᵀ y‖` for the nested prefixes `J = order[..l]`, `l = 0..=len`.
pub fn u_proxy_residuals<T: Real>(u: &Matrix<T>, y: &[T], order: &[usize]) -> Vec<T> {
    let uty = u.t_mat_vec(y);
    let mut r = y.to_vec();
    let mut out = Vec::with_capacity(order.len() + 1);
    out.push(norm(&r));
    for &j in order {
        let col = u.column(j);
        axpy(-uty[j], &col, &mut r);
        out.push(norm(&r));
    }
    out
}

/// Settings of the forward stagewise fitter.
#[derive(Clone, Copy, Debug)]
pub struct StagewiseConfig<T> {
    /// Maximum number of distinct neurons.
    pub max_neurons: usize,
    /// Stop once `(‖r_old‖ − ‖r‖)/‖y‖` drops below this.
    pub toll: T,
    /// Step shrinkage in `(0, 1]`.
    pub eps: T,
    pub max_iter: usize,
}

impl<T: Real> StagewiseConfig<T> {
    pub const DEFAULT_EPS: f64 = 0.1;
    pub const DEFAULT_TOLL: f64 = 1e-4;
    pub const ITER_CAP_FACTOR: usize = 100;

    /// Defaults: `eps = 0.1`, `toll = 1e-4`, iteration cap `100 · max_neurons`.
    pub fn new(max_neurons: usize) -> Self {
        StagewiseConfig {
            max_neurons,
            toll: T::lit(Self::DEFAULT_TOLL),
            eps: T::lit(Self::DEFAULT_EPS),
            max_iter: Self::ITER_CAP_FACTOR * max_neurons.max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero() && self.eps <= T::one()) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        if !(self.toll >= T::zero()) {
            return Err(Error::InvalidParameter(format!("toll must be non-negative, got {}", self.toll)));
        }
        if self.max_neurons == 0 {
            return Err(Error::InvalidParameter("max_neurons must be at least 1".into()));
        }
        Ok(())
    }
}

/// One ε-step of forward stagewise regression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StagewiseStep<T> {
    pub column: usize,
    /// Coefficient increment `ε ⟨r, S_j⟩ / ‖S_j‖²`.
    pub delta: T,
    /// `‖r‖` after the step.
    pub residual_norm: T,
}

#[derive(Clone, Debug)]
pub struct StagewisePath<T> {
    /// Distinct columns in first-touch order.
    pub selected: Vec<usize>,
    /// Accumulated coefficient of every candidate column.
    pub coef: Vec<T>,
    pub steps: Vec<StagewiseStep<T>>,
    pub residual: Vec<T>,
    pub stop: StagewiseStop,
}

impl<T: Real> StagewisePath<T> {
    pub fn selected_coef(&self) -> Vec<T> {
        self.selected.iter().map(|&j| self.coef[j]).collect()
    }
}

/// Forward stagewise regression of `y` on the columns of `S`, given as the
/// rows of `columns` (`n_cand × T`). Both are assumed centered.
///
/// Each iteration picks the column most correlated with the residual (lowest
/// index on ties) and moves its coefficient by `ε ⟨r, S_j⟩/‖S_j‖²`.
pub fn forward_stagewise<T: Real>(y: &[T], columns: &Matrix<T>, cfg: &StagewiseConfig<T>) -> Result<StagewisePath<T>> {
    cfg.validate()?;
    if columns.cols() != y.len() {
        return Err(Error::dim("forward_stagewise", y.len(), columns.cols()));
    }
    let n_cand = columns.rows();
    let norms2: Vec<T> = columns.row_iter().map(|c| dot(c, c)).collect();
    let mut path = StagewisePath {
        selected: Vec::new(),
        coef: vec![T::zero(); n_cand],
        steps: Vec::new(),
        residual: y.to_vec(),
        stop: StagewiseStop::IterationCap,
    };
    let y_norm = norm(y);
    if y_norm == T::zero() || norms2.iter().all(|&v| v == T::zero()) {
        warn!("forward stagewise: zero target or all-zero columns; returning empty model");
        path.stop = StagewiseStop::Degenerate;
        return Ok(path);
    }
    let mut in_model = vec![false; n_cand];
    // ‖r_old‖ starts at ‖1e10 · 1‖.
    let mut r_old_norm = T::lit(1e10) * T::of_usize(y.len()).sqrt();
    for iter in 0..cfg.max_iter {
        let mut best = None;
        let mut best_abs = T::zero();
        for (j, c) in columns.row_iter().enumerate() {
            if norms2[j] == T::zero() {
                continue;
            }
            let corr = dot(&path.residual, c);
            if best.is_none() || corr.abs() > best_abs {
                best = Some((j, corr));
                best_abs = corr.abs();
            }
        }
        let (j, corr) = best.expect("at least one usable column");
        if !in_model[j] && path.selected.len() == cfg.max_neurons {
            path.stop = StagewiseStop::NeuronLimit;
            return Ok(path);
        }
        let delta = cfg.eps * corr / norms2[j];
        path.coef[j] += delta;
        axpy(-delta, columns.row(j), &mut path.residual);
        if !in_model[j] {
            in_model[j] = true;
            path.selected.push(j);
        }
        let r_norm = norm(&path.residual);
        path.steps.push(StagewiseStep {
            column: j,
            delta,
            residual_norm: r_norm,
        });
        if (r_old_norm - r_norm) / y_norm < cfg.toll {
            path.stop = StagewiseStop::Converged { iteration: iter + 1 };
            return Ok(path);
        }
        r_old_norm = r_norm;
    }
    path.stop = StagewiseStop::IterationCap;
    Ok(path)
}

/// Forward stagewise output layer on the bank's centered training features.
pub fn fit_incremental<T: Real>(
    y: &[T],
    bank: &NeuronBank<T>,
    cfg: &StagewiseConfig<T>,
) -> Result<(EnrModel<T>, StagewisePath<T>)> {
    let path = forward_stagewise(y, bank.centered_features(), cfg)?;
    let mut model = EnrModel::from_selection(bank, path.selected.clone(), path.selected_coef(), Variant::Incremental);
    model.stop = Some(path.stop);
    Ok((model, path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Normalized RMSE of the nested models with `1..=len` neurons.
#[derive(Clone, Debug)]
pub struct ErrorCurve<T> {
    pub split: Split,
    /// `‖y_c − ŷ_c‖ / ‖y_c‖` with targets centered by the training mean.
    pub errs: Vec<T>,
    /// Same residual measured against the raw target norm `‖y‖`.
    pub errs_raw: Vec<T>,
    /// Error of the mean predictor (no neurons), centered normalization.
    pub baseline: T,
    pub baseline_raw: T,
    /// Predictions of the full model, in target units.
    pub fitted: Vec<T>,
}

impl<T: Real> ErrorCurve<T> {
    pub fn len(&self) -> usize {
        self.errs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errs.is_empty()
    }

    /// Error with `l` neurons; `l = 0` is the mean predictor.
    pub fn at(&self, l: usize) -> T {
        if l == 0 {
            self.baseline
        } else {
            self.errs[l - 1]
        }
    }

    pub fn last(&self) -> T {
        self.errs.last().copied().unwrap_or(self.baseline)
    }
}

/// Evaluates a fitted family on raw inputs `x_raw` (`n₀ × T`) and targets `y_raw`.
pub fn error_curve<T: Real>(
    x_raw: &Matrix<T>,
    y_raw: &[T],
    model: &EnrModel<T>,
    prep: &Preprocess<T>,
    split: Split,
) -> Result<ErrorCurve<T>> {
    if x_raw.cols() != y_raw.len() {
        return Err(Error::dim("error_curve: samples", x_raw.cols(), y_raw.len()));
    }
    if model.n_inputs() != x_raw.rows() && !model.is_empty() {
        return Err(Error::dim("error_curve: inputs", model.n_inputs(), x_raw.rows()));
    }
    let x_std = prep.transform_inputs(x_raw)?;
    let y_c: Vec<T> = y_raw.iter().map(|&v| v - model.target_mean).collect();
    let yc_norm = norm(&y_c);
    let y_norm = norm(y_raw);
    if yc_norm == T::zero() || y_norm == T::zero() {
        return Err(Error::Data("target has zero norm; normalized error undefined".into()));
    }
    let acts = activations(&model.weights, &x_std);
    let mut resid = y_c.clone();
    let mut errs = Vec::with_capacity(model.len());
    let mut errs_raw = Vec::with_capacity(model.len());
    for l in 0..model.len() {
        let b = model.beta[l];
        let off = model.offset(l);
        for (r, &a) in resid.iter_mut().zip(acts.row(l)) {
            *r -= b * (a - off);
        }
        let rn = norm(&resid);
        errs.push(rn / yc_norm);
        errs_raw.push(rn / y_norm);
    }
    let fitted = y_raw.iter().zip(&resid).map(|(&y, &r)| y - r).collect();
    Ok(ErrorCurve {
        split,
        errs,
        errs_raw,
        baseline: T::one(),
        baseline_raw: yc_norm / y_norm,
        fitted,
    })
}

/// `target_mean + Σ_l β_l (erf(ŵ_l · x_std) − m_l)` for one raw input.
pub fn predict<T: Real>(x: &[T], model: &EnrModel<T>, prep: &Preprocess<T>) -> Result<T> {
    let xs = prep.transform_point(x)?;
    if !model.is_empty() && model.n_inputs() != xs.len() {
        return Err(Error::dim("predict", model.n_inputs(), xs.len()));
    }
    let mut y = model.target_mean;
    for l in 0..model.len() {
        y += model.beta[l] * (erf(dot(model.weights.row(l), &xs)) - model.offset(l));
    }
    Ok(y)
}

/// [`predict`] for every column of `x_raw`.
pub fn predict_batch<T: Real>(x_raw: &Matrix<T>, model: &EnrModel<T>, prep: &Preprocess<T>) -> Result<Vec<T>> {
    let xt = x_raw.transpose();
    xt.row_iter().map(|x| predict(x, model, prep)).collect()
}

/// Default candidate count `min(50 · n₀, ⌊T_train / 2⌋)`, at least 1.
pub fn default_n_max(n0: usize, n_train: usize) -> usize {
    (50 * n0).min(n_train / 2).max(1)
}

/// Neuron count (1-based) and value of the first minimum of a curve.
pub fn argmin_curve<T: Real>(errs: &[T]) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, &e) in errs.iter().enumerate() {
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((i + 1, e));
        }
    }
    best
}

/// Neuron count (1-based) with the largest discrete second difference
/// `e[l-1] − 2 e[l] + e[l+1]`, i.e. the sharpest elbow of the curve.
pub fn curvature_select<T: Real>(errs: &[T]) -> Option<usize> {
    if errs.len() < 3 {
        return None;
    }
    let mut best = (1, errs[0] - T::lit(2.0) * errs[1] + errs[2]);
    for l in 2..errs.len() - 1 {
        let c = errs[l - 1] - T::lit(2.0) * errs[l] + errs[l + 1];
        if c > best.1 {
            best = (l, c);
        }
    }
    Some(best.0 + 1)
}
