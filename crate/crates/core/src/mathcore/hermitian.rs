//! Dense complex Hermitian matrices and the handful of kernels the model needs:
//! Cholesky, log-determinant, inverse, trace of a product, Kronecker product and
//! column-stacking.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Column-stacked complex vector, as produced by [`HermitianMatrix::vec`].
pub type ComplexVector = Vec<C64>;

/// Relative asymmetry below which ingested matrices are silently symmetrized.
pub const INGEST_TOLERANCE: f64 = 1e-8;

/// Smallest Cholesky pivot accepted as positive.
pub const PIVOT_THRESHOLD: f64 = 1e-300;

/// A `p x p` complex Hermitian matrix stored densely in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn identity(dim: usize) -> Self {
        Self::from_real_diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Entries whose relative deviation from Hermitian symmetry is below
    /// [`INGEST_TOLERANCE`] are replaced by `(M + M*) / 2`; larger deviations are
    /// rejected.
    pub fn from_entries(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("matrix dimension must be positive"));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let mut m = Self { dim, data };
        let asymmetry = m.relative_asymmetry();
        if asymmetry > INGEST_TOLERANCE {
            return Err(Error::NonHermitian { asymmetry });
        }
        m.symmetrize();
        Ok(m)
    }

    /// Builds a matrix from the upper triangle (row-major, diagonal included);
    /// the lower triangle is filled by conjugation and the diagonal made real.
    pub fn from_upper(dim: usize, upper: &[C64]) -> Result<Self> {
        let expected = dim * (dim + 1) / 2;
        if upper.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: upper.len(),
            });
        }
        let mut m = Self::zeros(dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                let z = upper[k];
                k += 1;
                if i == j {
                    m.data[i * dim + i] = C64::new(z.re, 0.0);
                } else {
                    m.data[i * dim + j] = z;
                    m.data[j * dim + i] = z.conj();
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |m_ij - conj(m_ji)|` relative to the largest entry.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Adds `weight * other` in place.
    pub fn add_scaled_assign(&mut self, other: &Self, weight: f64) -> Result<()> {
        check_dims(self, other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * weight;
        }
        Ok(())
    }

    /// Sup-norm of the entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Lower-triangular factor `G` with `G G* = self`.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let n = self.dim;
        let mut l = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.data[j * n + j].re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > PIVOT_THRESHOLD) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[j * n + j] = C64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.data[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Cholesky { dim: n, lower: l })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    pub fn logdet(&self) -> Result<f64> {
        Ok(self.cholesky()?.logdet())
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(self.cholesky()?.inverse())
    }

    /// Real part of `tr(self * other)`.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        check_dims(self, other)?;
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i * n + j] * other.data[j * n + i];
            }
        }
        debug_assert!(
            acc.im.abs() <= 1e-10 * (1.0 + acc.re.abs()) * (1.0 + self.max_abs() * other.max_abs()),
            "trace of Hermitian product has imaginary part {}",
            acc.im
        );
        Ok(acc.re)
    }

    /// Plain matrix product; the result is generally not Hermitian.
    pub fn matmul(&self, other: &Self) -> Result<ComplexMatrix> {
        check_dims(self, other)?;
        ComplexMatrix::from(self).matmul(&ComplexMatrix::from(other))
    }

    /// Entrywise transpose, which for a Hermitian matrix is its conjugate.
    pub fn transpose(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Kronecker product; block `(i, j)` is `a_ij * other`.
    pub fn kron(&self, other: &Self) -> ComplexMatrix {
        ComplexMatrix::from(self).kron(&ComplexMatrix::from(other))
    }

    /// Column-stacked entries: element `k` is `m(k mod p, k div p)`.
    pub fn vec(&self) -> ComplexVector {
        let n = self.dim;
        (0..n * n).map(|k| self.get(k % n, k / n)).collect()
    }
}

fn check_dims(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

/// Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<C64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.lower[row * self.dim + col]
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.lower[i * self.dim + i].re.ln()).sum::<f64>()
    }

    /// The factor as a general matrix.
    pub fn factor(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.lower.clone(),
        }
    }

    pub fn inverse(&self) -> HermitianMatrix {
        let n = self.dim;
        // Invert the triangular factor column by column (forward substitution).
        let mut linv = vec![C64::new(0.0, 0.0); n * n];
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                for k in c..i {
                    s -= self.lower[i * n + k] * linv[k * n + c];
                }
                linv[i * n + c] = s / self.lower[i * n + i].re;
            }
        }
        // A^-1 = L^-* L^-1
        let mut out = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = C64::new(0.0, 0.0);
                for k in j..n {
                    s += linv[k * n + i].conj() * linv[k * n + j];
                }
                out.data[i * n + j] = s;
                out.data[j * n + i] = s.conj();
            }
            out.data[i * n + i].im = 0.0;
        }
        out
    }
}

/// General dense complex matrix (row-major), used for Kronecker products and
/// non-Hermitian intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl ComplexMatrix {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.cols + col]
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut data = vec![C64::new(0.0, 0.0); self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn conj_transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).conj());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![C64::new(0.0, 0.0); rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        data[(i * other.rows + k) * cols + j * other.cols + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self { rows, cols, data }
    }

    /// `x* M x` for a square matrix.
    pub fn quadratic_form(&self, x: &[C64]) -> Result<C64> {
        if self.rows != self.cols || x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..self.cols {
                row += self.get(i, j) * x[j];
            }
            acc += x[i].conj() * row;
        }
        Ok(acc)
    }
}

impl From<&HermitianMatrix> for ComplexMatrix {
    fn from(m: &HermitianMatrix) -> Self {
        Self {
            rows: m.dim,
            cols: m.dim,
            data: m.data.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RowsRepr(Vec<Vec<[f64; 2]>>);

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| {
                let z = self.get(i, j);
                [z.re, z.im]
            }).collect())
            .collect();
        RowsRepr(rows).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let RowsRepr(rows) = RowsRepr::deserialize(d)?;
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(serde::de::Error::custom("matrix rows must be square"));
        }
        let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
        HermitianMatrix::from_entries(dim, data).map_err(serde::de::Error::custom)
    }
}
