//! Most-expressive embeddings from the eigendecomposition of a similarity matrix.
//!
//! `S = U Σ Uᵀ`, eigenpairs sorted by descending eigenvalue, negative
//! eigenvalues clamped to zero, and `Z = U[:, :d] Σ[:d]^{1/2}`. A single
//! decomposition serves every truncation dimension.

use nalgebra::DMatrix;
use ndarray::Array2;

use super::{EmbeddingMatrix, EmbeddingSource};
use crate::error::{Error, Result};
use crate::relations::SimilarityMatrix;

/// Per-pair residual bound `‖Sx − λx‖ ≤ tol · ‖S‖₂`.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SpectralFactor {
    label: String,
    /// Descending, signed.
    eigenvalues: Vec<f64>,
    /// Column `j` pairs with `eigenvalues[j]`; largest-magnitude entry positive.
    eigenvectors: Array2<f64>,
}

impl SpectralFactor {
    /// Decomposes the symmetrized similarity matrix `(S + Sᵀ) / 2`.
    pub fn from_similarity(s: &SimilarityMatrix) -> Result<Self> {
        Self::from_symmetric(s.symmetrized(), s.name())
    }

    /// Decomposes a symmetric matrix. Only the lower triangle is trusted.
    pub fn from_symmetric(matrix: Array2<f64>, label: impl Into<String>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Parameter("eigendecomposition needs a square matrix".into()));
        }
        if n == 0 {
            return Err(Error::Parameter("eigendecomposition of an empty matrix".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| if i >= j { matrix[[i, j]] } else { matrix[[j, i]] });
        let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 1000 * n.max(10))
            .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

        let spectral_norm = eig.eigenvalues.iter().fold(0.0f64, |acc, l| acc.max(l.abs()));
        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigenvectors = Array2::zeros((n, n));
        for (col, &j) in order.iter().enumerate() {
            let lambda = eig.eigenvalues[j];
            let v = eig.eigenvectors.column(j);
            let residual = (&m * v - v * lambda).norm();
            if residual > EIGEN_RESIDUAL_TOLERANCE * spectral_norm.max(f64::MIN_POSITIVE) {
                return Err(Error::Numerical(format!(
                    "eigenpair {col} residual {residual:e} exceeds tolerance"
                )));
            }
            let mut pivot = 0;
            for i in 1..n {
                if v[i].abs() > v[pivot].abs() {
                    pivot = i;
                }
            }
            let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..n {
                eigenvectors[[i, col]] = sign * v[i];
            }
            eigenvalues.push(lambda);
        }
        Ok(SpectralFactor {
            label: label.into(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn node_count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ|λ_neg| / Σ|λ|`, the share of spectral mass removed by clamping.
    pub fn clamped_fraction(&self) -> f64 {
        let total: f64 = self.eigenvalues.iter().map(|l| l.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        self.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum::<f64>() / total
    }

    /// `Z = U[:, :d] · max(Σ[:d], 0)^{1/2}`.
    pub fn embedding(&self, d: usize) -> Result<EmbeddingMatrix> {
        let n = self.node_count();
        if d == 0 || d > n {
            return Err(Error::Parameter(format!("dimension {d} outside [1, {n}]")));
        }
        let scale: Vec<f64> = self.eigenvalues[..d].iter().map(|l| l.max(0.0).sqrt()).collect();
        let z = Array2::from_shape_fn((n, d), |(i, j)| self.eigenvectors[[i, j]] * scale[j]);
        Ok(EmbeddingMatrix::new(
            z,
            EmbeddingSource::Evd {
                relation: self.label.clone(),
                d,
            },
        ))
    }
}

/// Single-shot form of [`SpectralFactor::embedding`].
pub fn generate_evd_embedding(s: &SimilarityMatrix, d: usize) -> Result<EmbeddingMatrix> {
    let n = s.node_count();
    if d == 0 || d > n {
        return Err(Error::Parameter(format!("dimension {d} outside [1, {n}]")));
    }
    SpectralFactor::from_similarity(s)?.embedding(d)
}
