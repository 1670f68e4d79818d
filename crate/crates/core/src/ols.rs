//! Ordinary least squares by Householder QR.
//!
//! Columns are equilibrated to unit norm before factorization, so the ratio
//! of the extreme diagonal entries of R is a scale-free conditioning estimate
//! used to reject (near) rank-deficient designs.

use thiserror::Error;

use crate::scalar::Real;

pub const DEFAULT_MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("need more observations ({n}) than regressors ({p})")]
    TooFewObservations { n: usize, p: usize },
    #[error("design is rank deficient (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("regressor and response lengths differ")]
    Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit<T> {
    pub coefficients: Vec<T>,
    pub std_errors: Vec<T>,
    pub residuals: Vec<T>,
    /// Residual sum of squares.
    pub rss: T,
    pub n: usize,
    pub p: usize,
    pub condition: T,
}

impl<T: Real> OlsFit<T> {
    pub fn t_ratio(&self, k: usize) -> T {
        self.coefficients[k] / self.std_errors[k]
    }

    /// Residual variance `rss / (n - p)`.
    pub fn sigma2(&self) -> T {
        self.rss / T::from_usize_lossy(self.n - self.p)
    }
}

/// Fits `y ~ columns` (include a column of ones for an intercept).
pub fn fit<T: Real>(columns: &[&[T]], y: &[T]) -> Result<OlsFit<T>, OlsError> {
    fit_with_limit(columns, y, T::lit(DEFAULT_MAX_CONDITION))
}

pub fn fit_with_limit<T: Real>(columns: &[&[T]], y: &[T], max_condition: T) -> Result<OlsFit<T>, OlsError> {
    let p = columns.len();
    let n = y.len();
    if columns.iter().any(|c| c.len() != n) {
        return Err(OlsError::Shape);
    }
    if n <= p || p == 0 {
        return Err(OlsError::TooFewObservations { n, p });
    }
    let deficient = |condition: T| OlsError::RankDeficient { condition: condition.to_f64_lossy() };

    let mut scale = Vec::with_capacity(p);
    let mut a: Vec<Vec<T>> = Vec::with_capacity(p);
    for col in columns {
        let norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(deficient(T::infinity()));
        }
        scale.push(norm);
        a.push(col.iter().map(|&v| v / norm).collect());
    }
    let mut qty = y.to_vec();

    for k in 0..p {
        let norm = a[k][k..].iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(deficient(T::infinity()));
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in place of column k below the diagonal
        a[k][k] = a[k][k] - alpha;
        let vnorm2 = a[k][k..].iter().map(|&v| v * v).sum::<T>();
        let (head, tail) = a.split_at_mut(k + 1);
        let v = &head[k][k..];
        if vnorm2 > T::zero() {
            let reflect = |target: &mut [T]| {
                let dot: T = v.iter().zip(target.iter()).map(|(&vi, &ti)| vi * ti).sum();
                let s = T::lit(2.0) * dot / vnorm2;
                for (t, &vi) in target.iter_mut().zip(v) {
                    *t = *t - s * vi;
                }
            };
            for col in tail.iter_mut() {
                reflect(&mut col[k..]);
            }
            reflect(&mut qty[k..]);
        }
        a[k][k] = alpha;
    }

    let diag: Vec<T> = (0..p).map(|k| a[k][k].abs()).collect();
    let dmax = diag.iter().copied().fold(T::zero(), T::max);
    let dmin = diag.iter().copied().fold(T::infinity(), T::min);
    let condition = if dmin > T::zero() { dmax / dmin } else { T::infinity() };
    if !(condition <= max_condition) {
        return Err(deficient(condition));
    }

    // r[i][j] = a[j][i] for i <= j
    let r = |i: usize, j: usize| a[j][i];
    let mut beta_scaled = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for j in i + 1..p {
            acc = acc - r(i, j) * beta_scaled[j];
        }
        beta_scaled[i] = acc / r(i, i);
    }
    let rss: T = qty[p..].iter().map(|&v| v * v).sum();

    // R^{-1}, upper triangular; row i of R^{-1} gives var of coefficient i
    let mut rinv = vec![vec![T::zero(); p]; p];
    for j in 0..p {
        rinv[j][j] = T::one() / r(j, j);
        for i in (0..j).rev() {
            let mut acc = T::zero();
            for k in i + 1..=j {
                acc = acc + r(i, k) * rinv[k][j];
            }
            rinv[i][j] = -acc / r(i, i);
        }
    }
    let sigma2 = rss / T::from_usize_lossy(n - p);
    let coefficients: Vec<T> = beta_scaled.iter().zip(&scale).map(|(&b, &s)| b / s).collect();
    let std_errors: Vec<T> = (0..p)
        .map(|i| (sigma2 * rinv[i].iter().map(|&v| v * v).sum::<T>()).sqrt() / scale[i])
        .collect();
    let residuals: Vec<T> = (0..n)
        .map(|t| {
            let fitted: T = columns.iter().zip(&coefficients).map(|(c, &b)| c[t] * b).sum();
            y[t] - fitted
        })
        .collect();
    Ok(OlsFit { coefficients, std_errors, residuals, rss, n, p, condition })
}
