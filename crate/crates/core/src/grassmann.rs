//! Grassmann manifold geometry.
//!
//! A point of Gr(m, p) is represented by an m × p matrix `Y` with orthonormal
//! columns; any `YQ` with `Q ∈ O(p)` represents the same subspace. Ambient
//! matrices live in ℝ^{m×p} without constraint and are mapped back onto the
//! manifold by the polar retraction `r(Z) = U Vᵀ` where `Z = U Σ Vᵀ` is the
//! thin SVD.
//!
//! ```text
//! tangent space   T_Y = { X : YᵀX + XᵀY = 0 }
//! projection      π_Y(Z) = Y · ½(YᵀZ − ZᵀY) + (I_m − YYᵀ) Z
//! gradient        ∇F = G − Y Gᵀ Y,   G = ∂F/∂Y
//! retraction      r(Z) = U Vᵀ
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{GildaError, Result};

/// Orthonormality tolerance used when validating manifold points.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Retraction refuses matrices whose condition number exceeds `1 / RANK_TOL`.
pub const RANK_TOL: f64 = 1e-12;

/// An m × p matrix with orthonormal columns, `m > p >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    basis: DMatrix<f64>,
}

impl GrassmannPoint {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        check_point_shape(basis.nrows(), basis.ncols())?;
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(GildaError::NonFinite);
        }
        let dev = orthonormality_error(&basis);
        if dev > ORTHONORMAL_TOL {
            return Err(GildaError::NotOrthonormal(dev));
        }
        Ok(Self { basis })
    }

    /// The canonical point `[I_p; 0]`.
    pub fn canonical(m: usize, p: usize) -> Result<Self> {
        check_point_shape(m, p)?;
        Ok(Self {
            basis: DMatrix::identity(m, p),
        })
    }

    pub(crate) fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        debug_assert!(orthonormality_error(&basis) <= ORTHONORMAL_TOL);
        Self { basis }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn subspace_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projector `Y Yᵀ` onto the represented subspace. Two bases of
    /// the same subspace have the same projector.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    pub fn to_ambient(&self) -> AmbientMatrix {
        AmbientMatrix {
            entries: self.basis.clone(),
        }
    }
}

/// An unconstrained m × p matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientMatrix {
    entries: DMatrix<f64>,
}

impl AmbientMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(GildaError::NonFinite);
        }
        Ok(Self { entries })
    }

    pub fn zeros(m: usize, p: usize) -> Self {
        Self {
            entries: DMatrix::zeros(m, p),
        }
    }

    pub(crate) fn from_finite(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }
}

impl From<GrassmannPoint> for AmbientMatrix {
    fn from(point: GrassmannPoint) -> Self {
        AmbientMatrix {
            entries: point.basis,
        }
    }
}

fn check_point_shape(m: usize, p: usize) -> Result<()> {
    if p == 0 || p >= m {
        return Err(GildaError::InvalidShape(format!(
            "manifold point needs m > p >= 1, got {m} x {p}"
        )));
    }
    Ok(())
}

fn check_same_shape(expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(GildaError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `‖ZᵀZ − I_p‖_F`.
pub fn orthonormality_error(z: &DMatrix<f64>) -> f64 {
    let p = z.ncols();
    (z.transpose() * z - DMatrix::<f64>::identity(p, p)).norm()
}

pub fn is_on_manifold(z: &AmbientMatrix, tol: f64) -> bool {
    orthonormality_error(&z.entries) <= tol
}

/// Projects `z` onto the tangent space at `y`.
pub fn tangent_project(y: &GrassmannPoint, z: &AmbientMatrix) -> Result<AmbientMatrix> {
    check_same_shape(y.basis.shape(), z.shape())?;
    let yb = &y.basis;
    let ytz = yb.transpose() * &z.entries;
    let skew = (&ytz - ytz.transpose()) * 0.5;
    // (I − YYᵀ)Z without forming the m × m projector
    let horizontal = &z.entries - yb * &ytz;
    Ok(AmbientMatrix::from_finite(yb * skew + horizontal))
}

/// Riemannian gradient `G − Y Gᵀ Y` from the Euclidean gradient `G` at `y`.
pub fn riemannian_gradient(y: &GrassmannPoint, euclid_grad: &AmbientMatrix) -> Result<AmbientMatrix> {
    check_same_shape(y.basis.shape(), euclid_grad.shape())?;
    let yb = &y.basis;
    let g = &euclid_grad.entries;
    Ok(AmbientMatrix::from_finite(g - yb * (g.transpose() * yb)))
}

/// Thin SVD `Z = U diag(σ) Vᵀ` with `U` m × p, `V` p × p.
#[derive(Debug, Clone)]
pub(crate) struct ThinSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    pub fn compute(z: &DMatrix<f64>) -> Self {
        let svd = z.clone().svd(true, true);
        Self {
            u: svd.u.expect("left singular vectors requested"),
            sigma: svd.singular_values,
            v_t: svd.v_t.expect("right singular vectors requested"),
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.max()
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma.min()
    }

    pub fn check_rank(&self) -> Result<()> {
        let (min, max) = (self.sigma_min(), self.sigma_max());
        if !(max > 0.0) || min <= RANK_TOL * max {
            return Err(GildaError::RankDeficient { min, max });
        }
        Ok(())
    }

    pub fn polar(&self) -> DMatrix<f64> {
        &self.u * &self.v_t
    }
}

/// Polar retraction onto the manifold: the nearest orthonormal-column matrix
/// to `z` in Frobenius norm.
pub fn retract(z: &AmbientMatrix) -> Result<GrassmannPoint> {
    let (m, p) = z.shape();
    check_point_shape(m, p)?;
    let svd = ThinSvd::compute(&z.entries);
    svd.check_rank()?;
    Ok(GrassmannPoint::from_orthonormal(svd.polar()))
}
