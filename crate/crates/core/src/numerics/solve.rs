use log::warn;

use super::{dot, sym_eig, Matrix};
use crate::{Error, Real, Result};

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim("Cholesky::new", "square matrix", format!("{}x{}", a.rows(), a.cols())));
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let s = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
            if !(s > T::zero()) || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let ljj = s.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    /// Cheap condition estimate `(max L_ii / min L_ii)²`; a lower bound on κ₂(A).
    pub fn condition_estimate(&self) -> T {
        let n = self.l.rows();
        if n == 0 {
            return T::one();
        }
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for i in 0..n {
            let v = self.l[(i, i)];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let r = hi / lo;
        r * r
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let s = y[i] - dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric positive semi-definite matrix.
#[derive(Clone, Debug)]
pub struct SymPseudoInverse<T> {
    pub matrix: Matrix<T>,
    pub rank: usize,
    pub threshold: T,
}

/// Eigenvalues at or below `dim · ε · λ_max` are treated as zero.
pub fn sym_pseudo_inverse<T: Real>(a: &Matrix<T>) -> Result<SymPseudoInverse<T>> {
    let n = a.rows();
    let eig = sym_eig(a)?;
    let lmax = eig.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let threshold = T::of_usize(n.max(1)) * T::epsilon() * lmax;
    let inv: Vec<T> = eig
        .values
        .iter()
        .map(|&v| if v > threshold { T::one() / v } else { T::zero() })
        .collect();
    let rank = inv.iter().filter(|&&v| v != T::zero()).count();
    let u = &eig.vectors;
    let scaled = Matrix::from_fn(n, n, |i, j| u[(i, j)] * inv[j]);
    Ok(SymPseudoInverse {
        matrix: scaled.matmul_transposed(u),
        rank,
        threshold,
    })
}

/// Result of [`row_space_projector_apply`].
#[derive(Clone, Debug)]
pub struct Projection<T> {
    /// `B Xᵀ (X Xᵀ)⁺`, one row per row of `B`.
    pub matrix: Matrix<T>,
    /// Numerical rank of `X Xᵀ`.
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Computes `B Xᵀ (X Xᵀ)⁻¹` for `X` of shape `n₀ × T` and `B` of shape `m × T`.
///
/// `X Xᵀ` is inverted through its eigen-decomposition; eigenvalues below
/// `max(n₀, T) · ε · λ_max` are dropped, which yields the pseudo-inverse when
/// `X` has rank below `n₀` and a warning is logged.
pub fn row_space_projector_apply<T: Real>(x: &Matrix<T>, b: &Matrix<T>) -> Result<Projection<T>> {
    if x.cols() != b.cols() {
        return Err(Error::dim("row_space_projector_apply", x.cols(), b.cols()));
    }
    let n0 = x.rows();
    let xxt = x.matmul_transposed(x);
    let eig = sym_eig(&xxt)?;
    let lmax = eig.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let threshold = T::of_usize(n0.max(x.cols()).max(1)) * T::epsilon() * lmax;
    let inv: Vec<T> = eig
        .values
        .iter()
        .map(|&v| if v > threshold { T::one() / v } else { T::zero() })
        .collect();
    let rank = inv.iter().filter(|&&v| v != T::zero()).count();
    let rank_deficient = rank < n0;
    if rank_deficient {
        warn!("X Xᵀ is rank deficient (rank {rank} of {n0}); using pseudo-inverse");
    }
    let u = &eig.vectors;
    let pinv = Matrix::from_fn(n0, n0, |i, j| u[(i, j)] * inv[j]).matmul_transposed(u);
    // B Xᵀ is m × n₀.
    let bxt = b.matmul_transposed(x);
    Ok(Projection {
        matrix: bxt.matmul(&pinv),
        rank,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cholesky_solves_spd() {
        let a = Matrix::<f64>::from_rows(&[vec![4.0, 2.0, 0.6], vec![2.0, 5.0, 1.0], vec![0.6, 1.0, 3.0]]).unwrap();
        let ch = Cholesky::new(&a).unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let back = a.mat_vec(&x);
        for (b, w) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - w).abs() < 1e-14);
        }
        assert!(ch.condition_estimate() >= 1.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::new(&a), Err(Error::NotPositiveDefinite { pivot: 1 })));
    }

    #[test]
    fn orthonormal_rows_give_b_xt() {
        // Rows of X are orthonormal, so X Xᵀ = I.
        let s = 1.0 / 2f64.sqrt();
        let x = Matrix::<f64>::from_rows(&[vec![s, s, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, -2.0, 3.0], vec![0.5, 0.5, 0.5]]).unwrap();
        let p = row_space_projector_apply(&x, &b).unwrap();
        let want = b.matmul_transposed(&x);
        assert!(p.matrix.sub(&want).max_abs() < 1e-14);
        assert!(!p.rank_deficient);
    }

    #[test]
    fn scalar_case() {
        let x = Matrix::<f64>::from_rows(&[vec![2.0, 0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![4.0, 0.0, 0.0]]).unwrap();
        let p = row_space_projector_apply(&x, &b).unwrap();
        assert!((p.matrix[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn satisfies_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Matrix::from_fn(3, 10, |_, _| rng.random::<f64>() - 0.5);
        let b = Matrix::from_fn(4, 10, |_, _| rng.random::<f64>() - 0.5);
        let r = row_space_projector_apply(&x, &b).unwrap().matrix;
        let lhs = r.matmul(&x.matmul_transposed(&x));
        let rhs = b.matmul_transposed(&x);
        assert!(lhs.sub(&rhs).max_abs() <= 1e-10);
    }

    #[test]
    fn rank_deficient_falls_back_to_pseudo_inverse() {
        // Second row duplicates the first.
        let x = Matrix::<f64>::from_rows(&[vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 0.0, -1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let p = row_space_projector_apply(&x, &b).unwrap();
        assert!(p.rank_deficient);
        assert_eq!(p.rank, 2);
        assert!(p.matrix.is_finite());
        // R X is the projection of B onto the row space of X.
        let rx = p.matrix.matmul(&x);
        let resid = b.sub(&rx);
        for r in x.row_iter() {
            assert!(dot(resid.row(0), r).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_inverse_of_singular() {
        let a = Matrix::<f64>::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let p = sym_pseudo_inverse(&a).unwrap();
        assert_eq!(p.rank, 1);
        assert!(p.matrix.sub(&Matrix::from_fn(2, 2, |_, _| 0.25)).max_abs() < 1e-15);
    }
}
