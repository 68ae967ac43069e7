//! Seeded random streams and the small dense linear algebra the NES updates need.
//!
//! Every stochastic quantity in the crate is drawn from a [`SeededRng`]. A
//! stream is identified by a `(seed, stream_id)` pair and backed by ChaCha8,
//! whose 64-bit stream selector gives each walker its own independent sequence
//! without any coordination between threads.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`matrix_exponential_symmetric`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// A reproducible random stream.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent stream keyed on this stream's identity and `label`.
    ///
    /// Derivation does not consume draws from `self`.
    pub fn derive(&self, label: u64) -> SeededRng {
        let seed = splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d_4c95_7f2d)));
        SeededRng::new(splitmix64(seed ^ label), label)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws `d` independent standard-normal values.
pub fn sample_standard_normal_vector(rng: &mut SeededRng, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidDimension("sample dimension must be at least 1".into()));
    }
    Ok((0..d).map(|_| rng.standard_normal()).collect())
}

/// Real dense matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn from_nalgebra(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidMatrix("matrix must be non-empty".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut m = DMatrix::zeros(d, d);
        for (i, v) in diag.iter().enumerate() {
            m[(i, i)] = *v;
        }
        Self::from_nalgebra(m)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.0
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn determinant(&self) -> f64 {
        self.0.clone().determinant()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::InvalidMatrix(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self(&self.0 * &other.0))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols(), "vector length must match matrix columns");
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        let n = self.rows();
        (0..n).all(|i| (0..i).all(|j| (self.0[(i, j)] - self.0[(j, i)]).abs() <= tol * scale))
    }
}

/// `exp(G)` for symmetric `G`, via eigendecomposition `G = V diag(λ) Vᵀ`.
pub fn matrix_exponential_symmetric(g: &DenseMatrix) -> Result<DenseMatrix> {
    if !g.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    if !g.is_symmetric(SYMMETRY_TOLERANCE) {
        return Err(Error::InvalidMatrix("matrix is not symmetric".into()));
    }
    // Symmetrize exactly so the eigensolver sees a symmetric input.
    let m = g.as_nalgebra();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let v = &eig.eigenvectors;
    let exp_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp));
    DenseMatrix::from_nalgebra(v * exp_diag * v.transpose())
}

/// Splits a covariance factor `A` into scale `σ = |det A|^(1/d)` and shape `B = A/σ`.
pub fn scale_from_factor(a: &DenseMatrix) -> Result<(f64, DenseMatrix)> {
    if !a.is_square() {
        return Err(Error::InvalidMatrix("covariance factor must be square".into()));
    }
    let d = a.rows() as f64;
    let det = a.determinant().abs();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::DegenerateCovariance(format!("|det A| = {det}")));
    }
    let sigma = det.powf(1.0 / d);
    if !(sigma > 0.0) {
        return Err(Error::DegenerateCovariance(format!(
            "scale underflow from |det A| = {det}"
        )));
    }
    Ok((sigma, a.scale(1.0 / sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::RngCore;

    #[test]
    fn same_seed_same_vector() {
        let a = sample_standard_normal_vector(&mut SeededRng::new(7, 0), 3).unwrap();
        let b = sample_standard_normal_vector(&mut SeededRng::new(7, 0), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let a = sample_standard_normal_vector(&mut SeededRng::new(7, 0), 8).unwrap();
        let b = sample_standard_normal_vector(&mut SeededRng::new(7, 1), 8).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(
            sample_standard_normal_vector(&mut SeededRng::new(1, 0), 0),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn normal_moments() {
        let mut rng = SeededRng::new(2024, 3);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn streams_uncorrelated() {
        let mut a = SeededRng::new(11, 0);
        let mut b = SeededRng::new(11, 1);
        let n = 50_000;
        let corr = (0..n).map(|_| a.standard_normal() * b.standard_normal()).sum::<f64>() / n as f64;
        // 4 standard errors of a product of independent normals.
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "correlation {corr}");
    }

    #[test]
    fn derive_is_pure() {
        let rng = SeededRng::new(5, 2);
        let mut x = rng.derive(9);
        let mut y = rng.derive(9);
        assert_eq!(x.next_u64(), y.next_u64());
        assert_ne!(rng.derive(9).next_u64(), rng.derive(10).next_u64());
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = matrix_exponential_symmetric(&DenseMatrix::zeros(2, 2)).unwrap();
        assert_eq!(e.rows(), 2);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(e.get(i, j), if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn expm_diagonal() {
        let g = DenseMatrix::from_diagonal(&[2f64.ln(), 3f64.ln()]).unwrap();
        let e = matrix_exponential_symmetric(&g).unwrap();
        assert_abs_diff_eq!(e.get(0, 0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.get(1, 1), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.get(0, 1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expm_swap_matrix() {
        // Eigenvalues ±1 with eigenvectors (1, ±1)/√2 give cosh/sinh blocks.
        let g = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = matrix_exponential_symmetric(&g).unwrap();
        let cosh1 = 1.543_080_634_815_243_7;
        let sinh1 = 1.175_201_193_643_801_4;
        assert_abs_diff_eq!(e.get(0, 0), cosh1, epsilon = 1e-12);
        assert_abs_diff_eq!(e.get(1, 1), cosh1, epsilon = 1e-12);
        assert_abs_diff_eq!(e.get(0, 1), sinh1, epsilon = 1e-12);
        assert_abs_diff_eq!(e.get(1, 0), sinh1, epsilon = 1e-12);
    }

    #[test]
    fn expm_rejects_bad_input() {
        let rect = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            matrix_exponential_symmetric(&rect),
            Err(Error::InvalidMatrix(_))
        ));
        let asym = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]).unwrap();
        assert!(matches!(
            matrix_exponential_symmetric(&asym),
            Err(Error::InvalidMatrix(_))
        ));
    }

    #[test]
    fn non_finite_matrix_rejected() {
        assert!(DenseMatrix::from_row_slice(1, 1, &[f64::NAN]).is_err());
        assert!(DenseMatrix::from_row_slice(1, 2, &[1.0]).is_err());
    }

    #[test]
    fn scale_isotropic() {
        let a = DenseMatrix::identity(3).scale(0.1);
        let (sigma, b) = scale_from_factor(&a).unwrap();
        assert_abs_diff_eq!(sigma, 0.1, epsilon = 1e-14);
        for i in 0..3 {
            assert_abs_diff_eq!(b.get(i, i), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scale_diagonal() {
        let a = DenseMatrix::from_diagonal(&[2.0, 8.0]).unwrap();
        let (sigma, b) = scale_from_factor(&a).unwrap();
        assert_abs_diff_eq!(sigma, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.get(0, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.get(1, 1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.determinant().abs(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn scale_singular() {
        let a = DenseMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(scale_from_factor(&a), Err(Error::DegenerateCovariance(_))));
    }

    fn symmetric_matrix(d: usize, entries: &[f64]) -> DenseMatrix {
        let mut m = DMatrix::zeros(d, d);
        let mut it = entries.iter();
        for i in 0..d {
            for j in 0..=i {
                let v = *it.next().unwrap();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        DenseMatrix::from_nalgebra(m).unwrap()
    }

    proptest! {
        #[test]
        fn expm_det_is_exp_trace(d in 2usize..=8, entries in proptest::collection::vec(-1.0f64..1.0, 36)) {
            let g = symmetric_matrix(d, &entries);
            let e = matrix_exponential_symmetric(&g).unwrap();
            let expected = g.trace().exp();
            prop_assert!((e.determinant() - expected).abs() <= 1e-8 * expected);
        }

        #[test]
        fn expm_inverse_is_expm_of_negation(d in 2usize..=8, entries in proptest::collection::vec(-1.0f64..1.0, 36)) {
            let g = symmetric_matrix(d, &entries);
            let prod = matrix_exponential_symmetric(&g).unwrap()
                .matmul(&matrix_exponential_symmetric(&g.scale(-1.0)).unwrap()).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let id = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((prod.get(i, j) - id).abs() < 1e-8);
                }
            }
        }

        #[test]
        fn traceless_expm_has_unit_det(d in 2usize..=8, entries in proptest::collection::vec(-1.0f64..1.0, 36)) {
            let g = symmetric_matrix(d, &entries);
            let shift = g.trace() / d as f64;
            let traceless = DenseMatrix::from_nalgebra(
                g.as_nalgebra() - DMatrix::<f64>::identity(d, d) * shift).unwrap();
            let det = matrix_exponential_symmetric(&traceless).unwrap().determinant();
            prop_assert!((det - 1.0).abs() < 1e-8);
        }
    }
}
