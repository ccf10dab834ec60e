//! Gaussian random-walk proposals and their covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{AbcError, Result};
use crate::particle::theta_key;
use crate::rng::StreamRng;
use crate::stats::covariance;

/// Twice the unbiased empirical covariance of `thetas`.
///
/// A singular result gets a ridge of `1e-12 * trace / p` on the diagonal.
pub fn proposal_scale(thetas: &[&[f64]]) -> Result<DMatrix<f64>> {
    let first = thetas
        .first()
        .ok_or_else(|| AbcError::DegenerateArray("no particles".into()))?;
    let first_key = theta_key(first);
    if !thetas.iter().any(|t| theta_key(t) != first_key) {
        return Err(AbcError::DegenerateArray(
            "fewer than two distinct parameter vectors".into(),
        ));
    }
    let mut sigma = covariance(thetas) * 2.0;
    if sigma.clone().cholesky().is_none() {
        let p = sigma.nrows();
        let ridge = 1e-12 * sigma.trace() / p as f64;
        for i in 0..p {
            sigma[(i, i)] += ridge;
        }
    }
    Ok(sigma)
}

/// `theta* = theta + L xi` with `L L^T = sigma` and `xi` standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProposal {
    sigma: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl GaussianProposal {
    /// Accepts any symmetric positive-semidefinite covariance. The factor
    /// comes from the eigendecomposition so singular matrices work too.
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() == 0 || !sigma.is_square() {
            return Err(AbcError::InvalidArgument("proposal covariance must be square".into()));
        }
        if sigma.iter().any(|x| !x.is_finite()) {
            return Err(AbcError::InvalidArgument("proposal covariance is not finite".into()));
        }
        let scale = sigma.amax().max(f64::MIN_POSITIVE);
        if (&sigma - sigma.transpose()).amax() > 1e-12 * scale {
            return Err(AbcError::InvalidArgument("proposal covariance is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(sigma.clone());
        if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
            return Err(AbcError::InvalidArgument(
                "proposal covariance is not positive semidefinite".into(),
            ));
        }
        let roots = DVector::from_iterator(
            eig.eigenvalues.len(),
            eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()),
        );
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { sigma, factor })
    }

    /// Isotropic proposal with the given per-coordinate variances.
    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(variances)))
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn propose(&self, theta: &[f64], rng: &mut StreamRng) -> Vec<f64> {
        let p = self.dim();
        if p == 1 {
            return vec![theta[0] + self.factor[(0, 0)] * rng.sample::<f64, _>(StandardNormal)];
        }
        let xi = DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let step = &self.factor * xi;
        theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect()
    }
}
