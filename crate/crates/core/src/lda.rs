//! Fisher LDA building blocks: scatter matrices, the trace-ratio objective
//! `f(R) = −tr(RᵀΣ_B R) / tr(RᵀΣ_W R)` with its Euclidean gradient, and the
//! classical generalized-eigenvector projection used as the baseline.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GildaError, Result};
use crate::grassmann::{AmbientMatrix, GrassmannPoint};

/// Symmetry tolerance for scatter matrices, absolute per entry.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative ridge added to Σ_W before inversion: `ε = RIDGE · tr(Σ_W) / m`.
pub const RIDGE: f64 = 1e-10;

/// Largest condition number of the ridged Σ_W the eigen baseline accepts.
pub const MAX_CONDITION: f64 = 1e12;

/// `tr(RᵀΣ_W R)` must exceed this fraction of `tr(Σ_W)`.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Data matrix with one column per sample and a class label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    data: DMatrix<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledDataset {
    pub fn new(data: DMatrix<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let (m, n) = data.shape();
        if m < 2 {
            return Err(GildaError::InvalidDataset(format!("need at least 2 features, got {m}")));
        }
        if n_classes < 2 {
            return Err(GildaError::InvalidDataset(format!("need at least 2 classes, got {n_classes}")));
        }
        if labels.len() != n {
            return Err(GildaError::InvalidDataset(format!(
                "{} labels for {n} samples",
                labels.len()
            )));
        }
        if n < n_classes {
            return Err(GildaError::InvalidDataset(format!("{n} samples for {n_classes} classes")));
        }
        let mut counts = vec![0usize; n_classes];
        for &l in &labels {
            if l >= n_classes {
                return Err(GildaError::InvalidDataset(format!(
                    "label {l} out of range 0..{n_classes}"
                )));
            }
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&k| k == 0) {
            return Err(GildaError::InvalidDataset(format!("class {c} has no samples")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(GildaError::NonFinite);
        }
        Ok(Self { data, labels, n_classes })
    }

    /// Infers the class count as `max(label) + 1`.
    pub fn from_labels(data: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |&l| l + 1);
        Self::new(data, labels, n_classes)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Within-class and between-class scatter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPair {
    within: DMatrix<f64>,
    between: DMatrix<f64>,
}

impl ScatterPair {
    /// Validates shape, finiteness and symmetry. Positive semidefiniteness is
    /// the caller's responsibility.
    pub fn new(within: DMatrix<f64>, between: DMatrix<f64>) -> Result<Self> {
        let m = within.nrows();
        for mat in [&within, &between] {
            if !mat.is_square() || mat.nrows() != m {
                return Err(GildaError::DimensionMismatch {
                    expected: (m, m),
                    got: mat.shape(),
                });
            }
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(GildaError::NonFinite);
            }
            let asym = (mat - mat.transpose()).amax();
            if asym > SYMMETRY_TOL {
                return Err(GildaError::NotSymmetric(asym));
            }
        }
        if m < 2 {
            return Err(GildaError::InvalidShape(format!("scatter matrices must be at least 2 x 2, got {m} x {m}")));
        }
        Ok(Self { within, between })
    }

    pub fn within(&self) -> &DMatrix<f64> {
        &self.within
    }

    pub fn between(&self) -> &DMatrix<f64> {
        &self.between
    }

    pub fn dim(&self) -> usize {
        self.within.nrows()
    }
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

pub fn scatter_matrices(ds: &LabeledDataset) -> ScatterPair {
    let (m, n) = ds.data.shape();
    let counts = ds.class_counts();

    let mut class_means = DMatrix::<f64>::zeros(m, ds.n_classes);
    for (j, &l) in ds.labels.iter().enumerate() {
        let mut col = class_means.column_mut(l);
        col += ds.data.column(j);
    }
    for (c, &k) in counts.iter().enumerate() {
        class_means.column_mut(c).unscale_mut(k as f64);
    }
    let global_mean: DVector<f64> = ds.data.column_mean();

    let mut centered = ds.data.clone();
    for (j, &l) in ds.labels.iter().enumerate() {
        let mut col = centered.column_mut(j);
        col -= class_means.column(l);
    }
    let within = &centered * centered.transpose();

    // Σ_c n_c (μ_c − μ)(μ_c − μ)ᵀ, equal to the per-sample sum.
    let mut weighted = DMatrix::<f64>::zeros(m, ds.n_classes);
    let mut dev = DMatrix::<f64>::zeros(m, ds.n_classes);
    for (c, &count) in counts.iter().enumerate() {
        let d = class_means.column(c) - &global_mean;
        weighted.set_column(c, &(&d * count as f64));
        dev.set_column(c, &d);
    }
    let between = &weighted * dev.transpose();
    debug_assert_eq!(n, counts.iter().sum::<usize>());

    ScatterPair {
        within: symmetrize(within),
        between: symmetrize(between),
    }
}

/// Quotient parts `tr(RᵀΣ_B R)`, `tr(RᵀΣ_W R)` and the products `Σ_B R`, `Σ_W R`.
struct Traces {
    num: f64,
    den: f64,
    b_r: DMatrix<f64>,
    w_r: DMatrix<f64>,
}

fn traces(r: &DMatrix<f64>, s: &ScatterPair) -> Result<Traces> {
    let m = s.dim();
    if r.nrows() != m {
        return Err(GildaError::DimensionMismatch {
            expected: (m, r.ncols()),
            got: r.shape(),
        });
    }
    let b_r = &s.between * r;
    let w_r = &s.within * r;
    let num = r.dot(&b_r);
    let den = r.dot(&w_r);
    let threshold = DENOMINATOR_TOL * s.within.trace();
    if !(den > threshold) {
        return Err(GildaError::DegenerateDenominator { value: den, threshold });
    }
    Ok(Traces { num, den, b_r, w_r })
}

/// `f(R) = −tr(RᵀΣ_B R) / tr(RᵀΣ_W R)`.
pub fn trace_ratio_objective(r: &GrassmannPoint, s: &ScatterPair) -> Result<f64> {
    let t = traces(r.as_matrix(), s)?;
    Ok(-(t.num / t.den) + 0.0)
}

/// Euclidean gradient `∂f/∂R` of the trace-ratio objective (quotient rule).
pub fn objective_gradient(r: &GrassmannPoint, s: &ScatterPair) -> Result<AmbientMatrix> {
    objective_and_gradient(r.as_matrix(), s).map(|(_, g)| g)
}

pub(crate) fn objective_and_gradient(r: &DMatrix<f64>, s: &ScatterPair) -> Result<(f64, AmbientMatrix)> {
    let t = traces(r, s)?;
    let grad = -(t.b_r * (2.0 * t.den) - t.w_r * (2.0 * t.num)) / (t.den * t.den);
    Ok((-(t.num / t.den) + 0.0, AmbientMatrix::from_finite(grad)))
}

/// Eigenpairs of `Σ_W⁻¹Σ_B` (with ridged Σ_W), eigenvalues descending.
///
/// Computed through the symmetric whitened form `W^{-1/2} Σ_B W^{-1/2}`, which
/// shares its eigenvalues with `Σ_W⁻¹Σ_B`; eigenvectors map back as
/// `v = W^{-1/2} w`. Columns of the returned matrix are unit-norm but, in
/// general, not mutually orthogonal.
pub fn generalized_eigenpairs(s: &ScatterPair) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let m = s.dim();
    let eps = RIDGE * s.within.trace() / m as f64;
    let ridged = &s.within + DMatrix::<f64>::identity(m, m) * eps;
    let w_eig = SymmetricEigen::new(ridged);
    let (lo, hi) = (w_eig.eigenvalues.min(), w_eig.eigenvalues.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(GildaError::SingularWithin { condition });
    }

    let inv_sqrt = w_eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let whiten = &w_eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * w_eig.eigenvectors.transpose();
    let whiten = symmetrize(whiten);
    let reduced = symmetrize(&whiten * &s.between * &whiten);
    let eig = SymmetricEigen::new(reduced);

    let mut order: Vec<usize> = (0..m).collect();
    // stable: equal eigenvalues keep their solver order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(m, m);
    for (dst, &k) in order.iter().enumerate() {
        let v = &whiten * eig.eigenvectors.column(k);
        let norm = v.norm();
        vectors.set_column(dst, &(v / norm));
    }
    Ok((values, vectors))
}

/// Orthonormalized top-`p` eigenvectors of `Σ_W⁻¹Σ_B`.
pub fn eigenvector_solution(s: &ScatterPair, p: usize) -> Result<GrassmannPoint> {
    let m = s.dim();
    if p == 0 || p >= m {
        return Err(GildaError::InvalidShape(format!("need 1 <= p < m, got p = {p}, m = {m}")));
    }
    let (_, vectors) = generalized_eigenpairs(s)?;
    Ok(GrassmannPoint::from_orthonormal(orthonormalize(vectors.columns(0, p).into_owned())))
}

/// Thin-QR orthonormalization with the sign of each column chosen so the
/// triangular factor has a nonnegative diagonal.
pub(crate) fn orthonormalize(a: DMatrix<f64>) -> DMatrix<f64> {
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
