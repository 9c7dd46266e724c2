//! Seeded synthetic Gaussian class data.
//!
//! Each class gets a mean with i.i.d. `N(0, mean_std²)` coordinates and its own
//! covariance `Q diag(λ) Qᵀ`, where `Q` is a uniformly random orthogonal matrix
//! and `λ` runs geometrically from 1 down to `1/e`. The eccentricity `e` is
//! `1 + Exp(mean = ecc_mean)`, so `e` is exactly the covariance condition
//! number.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GildaError, Result};
use crate::lda::{orthonormalize, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub dim: usize,
    pub n_classes: usize,
    pub n_per_class: usize,
    /// Mean of the exponential draw for `condition number − 1`.
    pub ecc_mean: f64,
    /// Standard deviation of each class-mean coordinate.
    pub mean_std: f64,
    pub seed: u64,
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(GildaError::InvalidConfig(format!("dim must be >= 2, got {}", self.dim)));
        }
        if self.n_classes < 2 {
            return Err(GildaError::InvalidConfig(format!("n_classes must be >= 2, got {}", self.n_classes)));
        }
        if self.n_per_class < 1 {
            return Err(GildaError::InvalidConfig("n_per_class must be >= 1".into()));
        }
        if !(self.ecc_mean > 0.0) || !self.ecc_mean.is_finite() {
            return Err(GildaError::InvalidConfig(format!("ecc_mean must be > 0, got {}", self.ecc_mean)));
        }
        if !(self.mean_std >= 0.0) || !self.mean_std.is_finite() {
            return Err(GildaError::InvalidConfig(format!("mean_std must be >= 0, got {}", self.mean_std)));
        }
        Ok(())
    }
}

/// A drawn class covariance together with its eccentricity and a square-root
/// factor `F = Q diag(√λ)` with `F Fᵀ = covariance`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCovariance {
    pub covariance: DMatrix<f64>,
    pub eccentricity: f64,
    pub factor: DMatrix<f64>,
}

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the triangular factor's diagonal forced positive.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    orthonormalize(g)
}

/// Geometric spectrum from 1 down to `1 / eccentricity`.
pub fn eigen_profile(dim: usize, eccentricity: f64) -> DVector<f64> {
    if dim == 1 {
        return DVector::from_element(1, 1.0);
    }
    let span = eccentricity.ln();
    DVector::from_fn(dim, |k, _| (-span * k as f64 / (dim - 1) as f64).exp())
}

/// Covariance with a prescribed eccentricity excess (`condition number − 1`).
pub fn covariance_with_excess<R: Rng + ?Sized>(dim: usize, excess: f64, rng: &mut R) -> ClassCovariance {
    let eccentricity = 1.0 + excess;
    let q = random_orthogonal(dim, rng);
    let lambda = eigen_profile(dim, eccentricity);
    let factor = &q * DMatrix::from_diagonal(&lambda.map(f64::sqrt));
    let cov = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
    ClassCovariance {
        covariance: (&cov + cov.transpose()) * 0.5,
        eccentricity,
        factor,
    }
}

pub fn draw_covariance<R: Rng + ?Sized>(dim: usize, ecc_mean: f64, rng: &mut R) -> ClassCovariance {
    let exp = Exp::new(1.0 / ecc_mean).expect("ecc_mean > 0");
    let excess = exp.sample(rng);
    covariance_with_excess(dim, excess, rng)
}

pub fn random_covariance<R: Rng + ?Sized>(dim: usize, ecc_mean: f64, rng: &mut R) -> DMatrix<f64> {
    draw_covariance(dim, ecc_mean, rng).covariance
}

/// A generated dataset with the ground truth it was sampled from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub dataset: LabeledDataset,
    pub class_means: Vec<DVector<f64>>,
    pub covariances: Vec<ClassCovariance>,
}

/// Samples a dataset; columns are ordered class by class.
pub fn generate(spec: &DataSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_classes * spec.n_per_class;
    let mut data = DMatrix::zeros(spec.dim, n);
    let mut labels = Vec::with_capacity(n);
    let mut class_means = Vec::with_capacity(spec.n_classes);
    let mut covariances = Vec::with_capacity(spec.n_classes);

    for c in 0..spec.n_classes {
        let mean = DVector::from_fn(spec.dim, |_, _| spec.mean_std * rng.sample::<f64, _>(StandardNormal));
        let cov = draw_covariance(spec.dim, spec.ecc_mean, &mut rng);
        let z = DMatrix::from_fn(spec.dim, spec.n_per_class, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut block = &cov.factor * z;
        for mut col in block.column_iter_mut() {
            col += &mean;
        }
        data.columns_mut(c * spec.n_per_class, spec.n_per_class).copy_from(&block);
        labels.extend(std::iter::repeat_n(c, spec.n_per_class));
        class_means.push(mean);
        covariances.push(cov);
    }

    let dataset = LabeledDataset::new(data, labels, spec.n_classes)?;
    Ok(SyntheticData { dataset, class_means, covariances })
}

pub fn generate_dataset(spec: &DataSpec) -> Result<LabeledDataset> {
    generate(spec).map(|s| s.dataset)
}
