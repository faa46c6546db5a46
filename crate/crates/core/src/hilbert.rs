//! Dense complex linear algebra for KD distributions.
//!
//! The base pair is fixed throughout: basis `a` is the standard basis,
//! basis `b` is the set of columns of the unitary DFT matrix
//! `U[i][j] = omega^(i*j) / sqrt(d)`. The KD distribution of a Hermitian
//! operator `F` over that pair is the complex grid
//!
//! ```text
//! Q[i][j] = <a_i| F |b_j> <b_j| a_i>
//! ```
//!
//! which always sums to `tr F`. `F` is KD-real when the grid is real and
//! KD-classical when it is real with no entry below `-tol`; a trace-1
//! KD-classical operator carries a genuine probability distribution.
//!
//! Hermitian operators are moved in and out of a real coordinate system by
//! [`hermitian_to_real_vector`], an isometry onto `R^(d^2)` under which
//! Euclidean inner products equal Hilbert-Schmidt traces. All rank and
//! least-squares work in the crate happens in those coordinates.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector used throughout the crate.
pub type CVector = DVector<Complex64>;

/// Default tolerance for entrywise grid checks.
pub const DEFAULT_ENTRY_TOL: f64 = 1e-9;
/// Frobenius tolerance for unitarity of the DFT matrix.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Largest dimension for which dense operators are constructed.
pub const MATRIX_DIMENSION_CAP: u64 = 512;

/// `exp(2 pi sqrt(-1) * (exponent mod modulus) / modulus)`.
///
/// The exponent is reduced modulo `modulus` before the angle is formed, so
/// large or negative exponents lose no precision.
pub fn omega_power(modulus: u64, exponent: i128) -> Complex64 {
    let reduced = exponent.rem_euclid(i128::from(modulus)) as f64;
    let angle = std::f64::consts::TAU * reduced / modulus as f64;
    Complex64::new(angle.cos(), angle.sin())
}

/// Serialized form of a complex matrix: row-major real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub d: u64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Parses a matrix from its JSON form, rejecting ragged rows, size
/// mismatches, and non-finite entries.
pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    let parsed: MatrixJson = serde_json::from_str(text)?;
    matrix_from_parts(parsed.d, &parsed.re, &parsed.im)
}

/// Builds a matrix from separate real and imaginary part tables.
pub fn matrix_from_parts(d: u64, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<CMatrix> {
    let n = d as usize;
    for part in [re, im] {
        if part.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: part.len(),
            });
        }
        for (row, values) in part.iter().enumerate() {
            if values.len() != n {
                return Err(Error::RaggedMatrix {
                    row,
                    len: values.len(),
                    expected: n,
                });
            }
            for (col, value) in values.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NonFiniteEntry { row, col });
                }
            }
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(re[i][j], im[i][j])
    }))
}

/// Serializes a matrix to its JSON form.
pub fn matrix_to_json(mat: &CMatrix) -> MatrixJson {
    let n = mat.nrows();
    MatrixJson {
        d: n as u64,
        re: (0..n)
            .map(|i| (0..n).map(|j| mat[(i, j)].re).collect())
            .collect(),
        im: (0..n)
            .map(|i| (0..n).map(|j| mat[(i, j)].im).collect())
            .collect(),
    }
}

fn require_square_finite(mat: &CMatrix) -> Result<usize> {
    if mat.nrows() != mat.ncols() {
        return Err(Error::NonSquareMatrix {
            rows: mat.nrows(),
            cols: mat.ncols(),
        });
    }
    for i in 0..mat.nrows() {
        for j in 0..mat.ncols() {
            let z = mat[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    Ok(mat.nrows())
}

/// Frobenius distance of a square matrix from its own adjoint.
pub fn hermiticity_deviation(mat: &CMatrix) -> f64 {
    (mat - mat.adjoint()).norm()
}

/// Sum of the diagonal.
pub fn trace(mat: &CMatrix) -> Complex64 {
    (0..mat.nrows().min(mat.ncols())).map(|i| mat[(i, i)]).sum()
}

/// A validated Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    /// Validates squareness, finiteness, and Hermiticity within `tol`
    /// (Frobenius), then stores the symmetrized matrix `(A + A^H) / 2`.
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        require_square_finite(&matrix)?;
        let deviation = hermiticity_deviation(&matrix);
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        Ok(HermitianOperator { matrix })
    }

    /// The rank-one projector onto a unit vector; exactly Hermitian.
    pub fn projector(state: &CVector) -> Self {
        let matrix = state * state.adjoint();
        HermitianOperator { matrix }
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Side length.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// A validated density operator: Hermitian, unit trace, positive
/// semidefinite (all within tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    operator: HermitianOperator,
    min_eigenvalue: f64,
}

impl DensityOperator {
    /// Validates in order: square and finite, Hermitian within `tol`,
    /// trace 1 within `tol`, minimum eigenvalue at least `-tol`.
    pub fn new(matrix: CMatrix, tol: f64) -> Result<Self> {
        let operator = HermitianOperator::new(matrix, tol)?;
        let tr = trace(operator.matrix());
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::TraceNotOne { trace: tr.re });
        }
        let eigen = nalgebra::SymmetricEigen::new(operator.matrix().clone());
        let min_eigenvalue = eigen
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -tol {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(DensityOperator {
            operator,
            min_eigenvalue,
        })
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &CMatrix {
        self.operator.matrix()
    }

    /// The operator viewed as a plain Hermitian operator.
    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.operator
    }

    /// Side length.
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    /// Smallest eigenvalue found during validation.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }
}

/// The fixed base pair in dimension `d`: the standard basis and the
/// columns of the unitary DFT matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DftPair {
    d: u64,
    matrix: CMatrix,
}

impl DftPair {
    /// Builds the DFT matrix `U[i][j] = omega^(i*j) / sqrt(d)` and checks
    /// its unitarity within [`UNITARITY_TOL`] (Frobenius).
    pub fn new(d: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if d > MATRIX_DIMENSION_CAP {
            return Err(Error::MatrixDimensionCap {
                d,
                cap: MATRIX_DIMENSION_CAP,
            });
        }
        let n = d as usize;
        let scale = 1.0 / (d as f64).sqrt();
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            omega_power(d, i as i128 * j as i128).scale(scale)
        });
        let pair = DftPair { d, matrix };
        let deviation = pair.unitarity_deviation();
        debug_assert!(
            deviation <= UNITARITY_TOL,
            "DFT matrix failed unitarity: {deviation:.3e}"
        );
        Ok(pair)
    }

    /// The dimension `d`.
    pub fn d(&self) -> u64 {
        self.d
    }

    /// Side length as `usize`.
    pub fn dim(&self) -> usize {
        self.d as usize
    }

    /// The DFT matrix; column `j` is the second-basis vector `b_j`.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// The second-basis vector `b_j` as an owned column.
    pub fn basis_vector(&self, j: usize) -> CVector {
        CVector::from_fn(self.dim(), |i, _| self.matrix[(i, j)])
    }

    /// `|| U^H U - I ||_F`.
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = self.matrix.adjoint() * &self.matrix;
        (gram - CMatrix::identity(self.dim(), self.dim())).norm()
    }
}

/// A computed KD distribution with its classification flags.
#[derive(Debug, Clone)]
pub struct KDDistribution {
    grid: CMatrix,
    tol: f64,
    is_real: bool,
    is_classical: bool,
    normalization_residual: f64,
    worst_imag: (usize, usize, f64),
    min_real: (usize, usize, f64),
}

impl KDDistribution {
    /// Classifies an externally produced grid against the trace it should
    /// sum to. Prefer [`kd_distribution`] for building grids.
    pub fn from_grid(grid: CMatrix, expected_sum: Complex64, tol: f64) -> Self {
        let mut worst_imag = (0, 0, 0.0f64);
        let mut min_real = (0, 0, f64::INFINITY);
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..grid.nrows() {
            for j in 0..grid.ncols() {
                let z = grid[(i, j)];
                sum += z;
                if z.im.abs() >= worst_imag.2 {
                    worst_imag = (i, j, z.im.abs());
                }
                if z.re <= min_real.2 {
                    min_real = (i, j, z.re);
                }
            }
        }
        let is_real = worst_imag.2 <= tol;
        let is_classical = is_real && min_real.2 >= -tol;
        KDDistribution {
            grid,
            tol,
            is_real,
            is_classical,
            normalization_residual: (sum - expected_sum).norm(),
            worst_imag,
            min_real,
        }
    }

    /// The complex grid `Q`.
    pub fn grid(&self) -> &CMatrix {
        &self.grid
    }

    /// Tolerance the flags were computed at.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Whether every entry is real within tolerance.
    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// Whether every entry is real and at least `-tol`.
    pub fn is_classical(&self) -> bool {
        self.is_classical
    }

    /// `| sum of Q - tr F |`.
    pub fn normalization_residual(&self) -> f64 {
        self.normalization_residual
    }

    /// Entry with the largest imaginary magnitude: `(i, j, |Im|)`.
    pub fn worst_imag(&self) -> (usize, usize, f64) {
        self.worst_imag
    }

    /// Entry with the smallest real part: `(i, j, Re)`.
    pub fn min_real(&self) -> (usize, usize, f64) {
        self.min_real
    }
}

/// Computes the KD distribution `Q[i][j] = <a_i|F|b_j><b_j|a_i>` of a
/// Hermitian operator over the pair, classifying it at tolerance `tol`.
pub fn kd_distribution(f: &HermitianOperator, pair: &DftPair, tol: f64) -> Result<KDDistribution> {
    if f.dim() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            found: f.dim(),
        });
    }
    let fu = f.matrix() * pair.matrix();
    let grid = CMatrix::from_fn(pair.dim(), pair.dim(), |i, j| {
        fu[(i, j)] * pair.matrix()[(i, j)].conj()
    });
    Ok(KDDistribution::from_grid(grid, trace(f.matrix()), tol))
}

/// Verdict of an entrywise grid check with the worst offending entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdVerdict {
    pub pass: bool,
    /// Largest violation over all entries; at most `tol` iff `pass`.
    pub deviation: f64,
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

/// Whether the KD grid of `F` is real within `tol`; reports the entry of
/// largest imaginary magnitude.
pub fn is_kd_real(f: &HermitianOperator, pair: &DftPair, tol: f64) -> Result<KdVerdict> {
    let dist = kd_distribution(f, pair, tol)?;
    let (row, col, imag) = dist.worst_imag();
    Ok(KdVerdict {
        pass: dist.is_real(),
        deviation: imag,
        row,
        col,
        value: dist.grid()[(row, col)],
    })
}

/// Whether the KD grid of `F` is real and nonnegative within `tol`;
/// reports the worst offending entry (largest imaginary magnitude or most
/// negative real part, whichever violates more).
pub fn is_kd_classical(f: &HermitianOperator, pair: &DftPair, tol: f64) -> Result<KdVerdict> {
    let dist = kd_distribution(f, pair, tol)?;
    let (ri, ci, imag) = dist.worst_imag();
    let (rr, cr, real) = dist.min_real();
    let negativity = (-real).max(0.0);
    let (row, col, deviation) = if imag >= negativity {
        (ri, ci, imag)
    } else {
        (rr, cr, negativity)
    };
    Ok(KdVerdict {
        pass: dist.is_classical(),
        deviation,
        row,
        col,
        value: dist.grid()[(row, col)],
    })
}

/// Real coordinates of a Hermitian matrix: the `d` diagonal entries, then
/// for each `i < j` in row-major order `sqrt(2) Re A[i][j]` and
/// `sqrt(2) Im A[i][j]`. Euclidean dot products equal Hilbert-Schmidt
/// traces under this map.
pub fn hermitian_to_real_vector(mat: &CMatrix) -> DVector<f64> {
    let n = mat.nrows();
    let mut out = DVector::zeros(n * n);
    for i in 0..n {
        out[i] = mat[(i, i)].re;
    }
    let mut pos = n;
    let root2 = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            out[pos] = root2 * mat[(i, j)].re;
            out[pos + 1] = root2 * mat[(i, j)].im;
            pos += 2;
        }
    }
    out
}

/// Inverse of [`hermitian_to_real_vector`]; the length must be a perfect
/// square.
pub fn real_vector_to_hermitian(v: &DVector<f64>) -> Result<CMatrix> {
    let len = v.len();
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: len,
        });
    }
    let mut mat = CMatrix::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut pos = n;
    let inv_root2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = Complex64::new(v[pos] * inv_root2, v[pos + 1] * inv_root2);
            mat[(i, j)] = z;
            mat[(j, i)] = z.conj();
            pos += 2;
        }
    }
    Ok(mat)
}

/// Stacks real coordinates of the given Hermitian matrices as rows.
pub fn stack_real_vectors(mats: &[CMatrix]) -> Result<DMatrix<f64>> {
    let first = mats.first().ok_or(Error::EmptyStateList)?;
    let width = first.nrows() * first.nrows();
    let mut out = DMatrix::zeros(mats.len(), width);
    for (row, mat) in mats.iter().enumerate() {
        let v = hermitian_to_real_vector(mat);
        if v.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: v.len(),
            });
        }
        out.row_mut(row).copy_from(&v.transpose());
    }
    Ok(out)
}

/// Rank of the real span of the given Hermitian matrices, using the
/// singular-value threshold `sigma > rank_tol * sigma_max`.
pub fn rank_of_span(mats: &[CMatrix], rank_tol: f64) -> Result<usize> {
    if mats.is_empty() {
        return Ok(0);
    }
    let stacked = stack_real_vectors(mats)?;
    Ok(matrix_rank(&stacked, rank_tol))
}

/// Eigendecomposition of the Gram matrix `matᵀ mat` together with the
/// eigenvalue keep-threshold. An eigenvalue counts toward the rank when
/// it exceeds `lambda_max * max(rank_tol^2, 8 n eps)`, where `n` is the
/// larger matrix side; the second term floors the cut at the noise
/// level the squared spectrum can resolve.
fn gram_spectrum(mat: &DMatrix<f64>, rank_tol: f64) -> (SymmetricEigen<f64, Dyn>, f64) {
    let gram = mat.transpose() * mat;
    let eigen = SymmetricEigen::new(gram);
    let lambda_max = eigen.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let scale = mat.nrows().max(mat.ncols()) as f64;
    let cut = lambda_max * (rank_tol * rank_tol).max(8.0 * scale * f64::EPSILON);
    (eigen, cut)
}

/// Rank of a real matrix under the relative singular-value threshold
/// `sigma > rank_tol * sigma_max`, read from the Gram spectrum.
pub fn matrix_rank(mat: &DMatrix<f64>, rank_tol: f64) -> usize {
    let (eigen, cut) = gram_spectrum(mat, rank_tol);
    if cut == 0.0 {
        return 0;
    }
    eigen.eigenvalues.iter().filter(|&&l| l > cut).count()
}

/// Minimum-norm least-squares solution of `a w = b`, using the same
/// Gram-spectrum filter as [`matrix_rank`] to discard null directions.
pub fn gram_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rank_tol: f64) -> DVector<f64> {
    let (eigen, cut) = gram_spectrum(a, rank_tol);
    let rhs = a.transpose() * b;
    let mut w = DVector::zeros(a.ncols());
    if cut == 0.0 {
        return w;
    }
    for (i, &lambda) in eigen.eigenvalues.iter().enumerate() {
        if lambda > cut {
            let q = eigen.eigenvectors.column(i);
            w.axpy(q.dot(&rhs) / lambda, &q.into_owned(), 1.0);
        }
    }
    w
}

/// Orthonormal basis of the column space of `a`, one vector per Gram
/// eigenvalue kept by the [`matrix_rank`] filter.
pub fn column_space_basis(a: &DMatrix<f64>, rank_tol: f64) -> Vec<DVector<f64>> {
    let (eigen, cut) = gram_spectrum(a, rank_tol);
    let mut basis = Vec::new();
    if cut == 0.0 {
        return basis;
    }
    for (i, &lambda) in eigen.eigenvalues.iter().enumerate() {
        if lambda > cut {
            basis.push(a * eigen.eigenvectors.column(i) / lambda.sqrt());
        }
    }
    basis
}

/// Dimension of the space of Hermitian operators whose KD grid is real:
/// the null space of the entrywise imaginary part of the grid, viewed as a
/// linear map on the `d^2`-dimensional real space of Hermitian matrices.
pub fn kd_real_space_dimension(pair: &DftPair) -> Result<usize> {
    let n = pair.dim();
    let dim = n * n;
    let mut imag_map = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut coords = DVector::zeros(dim);
        coords[k] = 1.0;
        let basis_mat = real_vector_to_hermitian(&coords)?;
        let f = HermitianOperator::new(basis_mat, 1e-12)?;
        let dist = kd_distribution(&f, pair, DEFAULT_ENTRY_TOL)?;
        for i in 0..n {
            for j in 0..n {
                imag_map[(i * n + j, k)] = dist.grid()[(i, j)].im;
            }
        }
    }
    Ok(dim - matrix_rank(&imag_map, DEFAULT_RANK_TOL))
}
