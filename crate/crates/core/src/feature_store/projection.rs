use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, NoConvergence};
use crate::Scalar;

/// Feature dimension used everywhere unless configured otherwise.
pub const DEFAULT_FEATURE_DIM: usize = 32;

/// Raw dimensions above this switch PCA from a dense covariance
/// eigendecomposition to block power iteration.
pub const DENSE_PCA_MAX_DIM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("cannot fit a projection on zero rows")]
    Empty,
    #[error("target dimension must be at least 1")]
    ZeroTargetDim,
    #[error("row {row} has length {got}, expected {expected}")]
    RaggedInput { row: usize, expected: usize, got: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("input has dimension {got}, projection expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
}

impl From<NoConvergence> for ProjectionError {
    fn from(_: NoConvergence) -> Self {
        ProjectionError::NoConvergence
    }
}

/// Projected feature vector φ of a stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector<F>(Vec<F>);

impl<F: Scalar> FeatureVector<F> {
    pub fn new(values: Vec<F>) -> Self {
        FeatureVector(values)
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector(vec![F::zero(); dim])
    }

    /// Unit vector along axis `axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[axis] = F::one();
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<F> {
        self.0
    }

    pub fn dot(&self, other: &Self) -> F {
        linalg::dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> F {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, c: F) -> Self {
        FeatureVector(self.0.iter().map(|&x| x * c).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        FeatureVector(self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect())
    }
}

impl<F> From<Vec<F>> for FeatureVector<F> {
    fn from(v: Vec<F>) -> Self {
        FeatureVector(v)
    }
}

impl<F> AsRef<[F]> for FeatureVector<F> {
    fn as_ref(&self) -> &[F] {
        &self.0
    }
}

/// Which eigensolver backs [`fit_projection_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PcaSolver {
    /// Dense up to [`DENSE_PCA_MAX_DIM`], iterative above.
    #[default]
    Auto,
    Dense,
    Subspace,
}

/// Fitted PCA projection.
///
/// `components` holds only the informative directions (at most
/// `min(target_dim, raw_dim, n - 1)`, never fewer than one); projected
/// vectors are zero-padded up to `target_dim`. `explained_variance` always
/// has `target_dim` entries, zeros beyond the informative ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection<F> {
    mean: Vec<F>,
    components: Vec<Vec<F>>,
    explained_variance: Vec<F>,
    target_dim: usize,
}

impl<F: Scalar> Projection<F> {
    pub fn mean(&self) -> &[F] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<F>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[F] {
        &self.explained_variance
    }

    pub fn raw_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn effective_dim(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, raw: &[F]) -> Result<FeatureVector<F>, ProjectionError> {
        if raw.len() != self.raw_dim() {
            return Err(ProjectionError::DimensionMismatch { expected: self.raw_dim(), got: raw.len() });
        }
        let centered: Vec<F> = raw.iter().zip(&self.mean).map(|(&x, &m)| x - m).collect();
        let mut out = vec![F::zero(); self.target_dim];
        for (o, row) in out.iter_mut().zip(&self.components) {
            *o = linalg::dot(row, &centered);
        }
        Ok(FeatureVector(out))
    }
}

/// Applies a fitted projection to one raw embedding.
pub fn project<F: Scalar>(projection: &Projection<F>, raw: &[F]) -> Result<FeatureVector<F>, ProjectionError> {
    projection.project(raw)
}

/// Fits PCA on the rows of `raw`, keeping `target_dim` output dimensions.
pub fn fit_projection<F: Scalar, R: AsRef<[F]>>(
    raw: &[R],
    target_dim: usize,
) -> Result<Projection<F>, ProjectionError> {
    fit_projection_with(raw, target_dim, PcaSolver::Auto)
}

pub fn fit_projection_with<F: Scalar, R: AsRef<[F]>>(
    raw: &[R],
    target_dim: usize,
    solver: PcaSolver,
) -> Result<Projection<F>, ProjectionError> {
    let n = raw.len();
    if n == 0 {
        return Err(ProjectionError::Empty);
    }
    if target_dim == 0 {
        return Err(ProjectionError::ZeroTargetDim);
    }
    let d = raw[0].as_ref().len();
    for (row, r) in raw.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != d {
            return Err(ProjectionError::RaggedInput { row, expected: d, got: r.len() });
        }
        if let Some(col) = r.iter().position(|x| !x.is_finite()) {
            return Err(ProjectionError::NonFiniteInput { row, col });
        }
    }

    let n_f = F::from_usize(n).expect("row count fits in scalar");
    let mut mean = vec![F::zero(); d];
    for r in raw {
        for (m, &x) in mean.iter_mut().zip(r.as_ref()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n_f;
    }
    let centered: Vec<Vec<F>> =
        raw.iter().map(|r| r.as_ref().iter().zip(&mean).map(|(&x, &m)| x - m).collect()).collect();

    let effective = target_dim.min(d).min(n.saturating_sub(1)).max(1).min(d.max(1));
    let use_dense = match solver {
        PcaSolver::Auto => d <= DENSE_PCA_MAX_DIM,
        PcaSolver::Dense => true,
        PcaSolver::Subspace => false,
    };

    let eig = if d == 0 {
        linalg::SymmetricEigen { values: vec![], vectors: vec![] }
    } else if use_dense {
        let mut cov = vec![F::zero(); d * d];
        for row in &centered {
            for i in 0..d {
                let xi = row[i];
                if xi == F::zero() {
                    continue;
                }
                let dst = &mut cov[i * d..(i + 1) * d];
                for j in i..d {
                    dst[j] += xi * row[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] / n_f;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        linalg::symmetric_eigen(&cov, d)?
    } else {
        let apply = |v: &[F]| -> Vec<F> {
            let mut out = vec![F::zero(); d];
            for row in &centered {
                let s = linalg::dot(row, v) / n_f;
                for (o, &x) in out.iter_mut().zip(row) {
                    *o += s * x;
                }
            }
            out
        };
        linalg::top_eigen_subspace(d, effective, apply, 1000, F::lit(1e-12))?
    };

    let mut components: Vec<Vec<F>> = eig.vectors.into_iter().take(effective).collect();
    for row in components.iter_mut() {
        orient(row);
    }
    let mut explained_variance: Vec<F> = eig.values.into_iter().take(effective).map(|v| v.max(F::zero())).collect();
    explained_variance.resize(target_dim, F::zero());

    Ok(Projection { mean, components, explained_variance, target_dim })
}

/// Flips `row` so its largest-magnitude entry (first on ties) is non-negative.
fn orient<F: Scalar>(row: &mut [F]) {
    let mut best = 0;
    for (i, x) in row.iter().enumerate() {
        if x.abs() > row[best].abs() {
            best = i;
        }
    }
    if row.get(best).is_some_and(|x| *x < F::zero()) {
        for x in row.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::seeded(seed);
        (0..n).map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()).collect()
    }

    #[test]
    fn rank_one_data_concentrates_variance() {
        let dir = [1.0, -2.0, 0.5, 3.0];
        let raw: Vec<Vec<f64>> = (0..20).map(|i| dir.iter().map(|x| x * (i as f64 - 7.3)).collect()).collect();
        let p = fit_projection(&raw, 32).unwrap();
        let total: f64 = p.explained_variance().iter().sum();
        assert!(p.explained_variance()[0] / total >= 0.99999);
        assert_eq!(p.explained_variance().len(), 32);
        // d = 4 caps the informative directions
        assert_eq!(p.effective_dim(), 4);
    }

    #[test]
    fn projecting_the_mean_gives_zero() {
        let raw = random_matrix(3, 40, 6);
        let p = fit_projection(&raw, 32).unwrap();
        let phi = p.project(p.mean()).unwrap();
        assert_eq!(phi.len(), 32);
        assert!(phi.as_slice().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn mean_plus_first_component_maps_to_first_axis() {
        let raw = random_matrix(4, 30, 8);
        let p = fit_projection(&raw, 32).unwrap();
        let x: Vec<f64> = p.mean().iter().zip(&p.components()[0]).map(|(m, c)| m + c).collect();
        let phi = p.project(&x).unwrap();
        let e0 = FeatureVector::<f64>::basis(32, 0);
        for (a, b) in phi.as_slice().iter().zip(e0.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn project_matches_naive_double_loop() {
        let raw = random_matrix(5, 60, 12);
        let p = fit_projection(&raw, 32).unwrap();
        let probe: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin() * 4.0).collect();
        let phi = p.project(&probe).unwrap();
        let mut want = vec![0.0; 32];
        for (w, row) in want.iter_mut().zip(p.components()) {
            *w = row.iter().zip(&probe).zip(p.mean()).map(|((a, x), m)| a * (x - m)).sum();
        }
        for (a, b) in phi.as_slice().iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_and_bad_input() {
        let raw = random_matrix(6, 10, 5);
        let p = fit_projection(&raw, 3).unwrap();
        assert_eq!(p.project(&[0.0; 4]), Err(ProjectionError::DimensionMismatch { expected: 5, got: 4 }));
        let mut bad = raw.clone();
        bad[2][3] = f64::NAN;
        assert_eq!(fit_projection(&bad, 3).unwrap_err(), ProjectionError::NonFiniteInput { row: 2, col: 3 });
        let empty: Vec<Vec<f64>> = vec![];
        assert_eq!(fit_projection(&empty, 3).unwrap_err(), ProjectionError::Empty);
        assert_eq!(fit_projection(&raw, 0).unwrap_err(), ProjectionError::ZeroTargetDim);
    }

    #[test]
    fn single_row_projects_to_zero() {
        let raw = vec![vec![1.0, 2.0, 3.0]];
        let p = fit_projection(&raw, 32).unwrap();
        assert_eq!(p.effective_dim(), 1);
        let phi = p.project(&raw[0]).unwrap();
        assert!(phi.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sign_convention_largest_entry_non_negative() {
        let raw = random_matrix(7, 50, 10);
        let p = fit_projection(&raw, 5).unwrap();
        for row in p.components() {
            let (mut best, mut mag) = (0, 0.0);
            for (i, x) in row.iter().enumerate() {
                if x.abs() > mag {
                    best = i;
                    mag = x.abs();
                }
            }
            assert!(row[best] >= 0.0);
        }
    }

    #[test]
    fn subspace_solver_agrees_with_dense() {
        // planted spectrum so the top directions are well separated
        let mut rng = crate::rng::seeded(8);
        let scales = [9.0, 7.0, 5.0, 3.0, 1.0, 0.5, 0.3, 0.2, 0.1, 0.1];
        let raw: Vec<Vec<f64>> =
            (0..120).map(|_| scales.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)).collect()).collect();
        let dense = fit_projection_with(&raw, 4, PcaSolver::Dense).unwrap();
        let iter = fit_projection_with(&raw, 4, PcaSolver::Subspace).unwrap();
        for i in 0..4 {
            let a = dense.explained_variance()[i];
            let b = iter.explained_variance()[i];
            assert!((a - b).abs() <= 1e-8 * a, "{a} vs {b}");
            for (x, y) in dense.components()[i].iter().zip(&iter.components()[i]) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let raw: Vec<Vec<f32>> =
            random_matrix(9, 40, 6).into_iter().map(|r| r.into_iter().map(|x| x as f32).collect()).collect();
        let p = fit_projection(&raw, 4).unwrap();
        for i in 0..p.effective_dim() {
            for j in 0..p.effective_dim() {
                let d = linalg::dot(&p.components()[i], &p.components()[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-5);
            }
        }
    }
}
