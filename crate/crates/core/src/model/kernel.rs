use std::sync::Arc;

use nalgebra::DMatrix;

use super::config::Scheme;
use crate::error::{Error, Result};
use crate::geo::DistanceMatrix;
use crate::numerics::{cholesky, Cholesky};

/// Correlation matrix `H(φ)` for a weighting scheme.
pub fn kernel_matrix(dist: &DistanceMatrix, scheme: Scheme, phi: f64) -> Result<DMatrix<f64>> {
    let n = dist.n();
    if scheme != Scheme::Unity && !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {phi}")));
    }
    let d = dist.as_matrix();
    Ok(match scheme {
        Scheme::Unity => DMatrix::identity(n, n),
        Scheme::Exponential => d.map(|v| (-v / phi).exp()),
        Scheme::Gaussian => d.map(|v| {
            let r = v / phi;
            (-r * r).exp()
        }),
    })
}

/// `H(φ)` for the current bandwidth together with its Cholesky factor and
/// inverse, refreshed whenever `φ` changes.
#[derive(Debug, Clone)]
pub struct SpatialKernel {
    dist: Arc<DistanceMatrix>,
    scheme: Scheme,
    phi: f64,
    chol: Cholesky,
    precision: Option<DMatrix<f64>>,
}

impl SpatialKernel {
    pub fn new(dist: Arc<DistanceMatrix>, scheme: Scheme, phi: f64) -> Result<Self> {
        let chol = Self::factor(&dist, scheme, phi)?;
        let mut kernel = Self {
            dist,
            scheme,
            phi,
            chol,
            precision: None,
        };
        kernel.refresh_precision();
        Ok(kernel)
    }

    fn factor(dist: &DistanceMatrix, scheme: Scheme, phi: f64) -> Result<Cholesky> {
        match scheme {
            Scheme::Unity => Ok(Cholesky::identity(dist.n())),
            _ => cholesky(&kernel_matrix(dist, scheme, phi)?),
        }
    }

    fn refresh_precision(&mut self) {
        self.precision = match self.scheme {
            Scheme::Unity => None,
            _ => Some(self.chol.inverse()),
        };
    }

    /// Factor `H(φ')` without changing the kernel.
    pub fn factor_at(&self, phi: f64) -> Result<Cholesky> {
        Self::factor(&self.dist, self.scheme, phi)
    }

    /// Install an accepted bandwidth and its factor.
    pub fn accept(&mut self, phi: f64, chol: Cholesky) {
        self.phi = phi;
        self.chol = chol;
        self.refresh_precision();
    }

    pub fn set_phi(&mut self, phi: f64) -> Result<()> {
        let chol = self.factor_at(phi)?;
        self.accept(phi, chol);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.dist.n()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn distances(&self) -> &Arc<DistanceMatrix> {
        &self.dist
    }

    pub fn chol(&self) -> &Cholesky {
        &self.chol
    }

    /// `H⁻¹`, or `None` under the unity scheme where it is the identity.
    pub fn precision(&self) -> Option<&DMatrix<f64>> {
        self.precision.as_ref()
    }

    pub fn is_identity(&self) -> bool {
        self.scheme == Scheme::Unity
    }
}
