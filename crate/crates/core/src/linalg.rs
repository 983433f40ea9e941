//! Dense Cholesky factorization for the small symmetric systems of the sampler.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Lower-triangular factor `R` with `A = R Rᵀ`, stored row-major.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub(crate) fn factor(matrix: &[f64], dim: usize) -> Result<Self> {
        debug_assert_eq!(matrix.len(), dim * dim);
        let mut lower = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut sum = matrix[i * dim + j];
                for k in 0..j {
                    sum -= lower[i * dim + k] * lower[j * dim + k];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return Err(Error::Factorization { pivot: i });
                    }
                    lower[i * dim + i] = libm::sqrt(sum);
                } else {
                    lower[i * dim + j] = sum / lower[j * dim + j];
                }
            }
        }
        Ok(Self { dim, lower })
    }

    /// Solves `R y = b` in place.
    pub(crate) fn forward(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.lower[i * n + k] * b[k];
            }
            b[i] = sum / self.lower[i * n + i];
        }
    }

    /// Solves `Rᵀ x = y` in place.
    pub(crate) fn backward(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in i + 1..n {
                sum -= self.lower[k * n + i] * b[k];
            }
            b[i] = sum / self.lower[i * n + i];
        }
    }

    /// Solves `A x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let chol = Cholesky::factor(&a, 3).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i] += a[i * 3 + j] * x[j];
            }
        }
        chol.solve(&mut b);
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert_eq!(Cholesky::factor(&a, 2).unwrap_err(), Error::Factorization { pivot: 1 });
    }
}
