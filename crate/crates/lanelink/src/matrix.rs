//! Dense row-major complex matrices backed by [`ComplexBuffer`].

use num_complex::Complex64;

use crate::buffer::{ComplexBuffer, Layout, PrecisionMode};
use crate::component::Component;
use crate::error::{Error, Result};

/// Row-major complex matrix.
///
/// Storage is a split-layout [`ComplexBuffer`] of `rows * cols` elements;
/// element `(r, c)` lives at flat index `r * cols + c`. The `hermitian` flag
/// is set by operations that guarantee `a[i][j] == conj(a[j][i])` by
/// construction and cleared by any element write.
pub struct CMatrix {
    data: ComplexBuffer,
    rows: usize,
    cols: usize,
    hermitian: bool,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize, precision: PrecisionMode) -> Self {
        let data = ComplexBuffer::zeros(rows * cols, precision);
        CMatrix {
            data,
            rows,
            cols,
            hermitian: false,
        }
    }

    /// Identity (ones on the main diagonal), rectangular shapes allowed.
    pub fn identity(n: usize, precision: PrecisionMode) -> Self {
        let mut m = Self::zeros(n, n, precision);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m.hermitian = true;
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        precision: PrecisionMode,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut m = Self::zeros(rows, cols, precision);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    /// Wraps an existing buffer as a matrix; the buffer must be split-layout
    /// with exactly `rows * cols` elements.
    pub fn from_buffer(data: ComplexBuffer, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "buffer of {} elements cannot view as {rows}x{cols}",
                data.len()
            )));
        }
        if data.layout() != Layout::Split {
            return Err(Error::invalid(
                "matrix storage must use the split layout".to_string(),
            ));
        }
        Ok(CMatrix {
            data,
            rows,
            cols,
            hermitian: false,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn precision(&self) -> PrecisionMode {
        self.data.precision()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub(crate) fn set_hermitian(&mut self, value: bool) {
        self.hermitian = value;
    }

    /// Underlying storage (no copy).
    pub fn buffer(&self) -> &ComplexBuffer {
        &self.data
    }

    /// Mutable storage for in-place passes; callers manage the Hermitian
    /// flag themselves.
    pub(crate) fn buffer_mut(&mut self) -> &mut ComplexBuffer {
        &mut self.data
    }

    pub fn into_buffer(self) -> ComplexBuffer {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        self.data.get(r * self.cols + c)
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        self.hermitian = false;
        self.data.set(r * self.cols + c, v);
    }

    pub(crate) fn planes<T: Component>(&self) -> (&[T], &[T]) {
        self.data.planes()
    }

    pub(crate) fn planes_mut<T: Component>(&mut self) -> (&mut [T], &mut [T]) {
        self.data.planes_mut()
    }

    pub fn convert_precision(&self, target: PrecisionMode) -> CMatrix {
        CMatrix {
            data: self.data.convert_precision(target),
            rows: self.rows,
            cols: self.cols,
            hermitian: self.hermitian,
        }
    }

    /// Conjugate transpose.
    pub fn hermitian_transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows, self.precision());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out.hermitian = self.hermitian && self.rows == self.cols;
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                sum += self.get(r, c).norm_sqr();
            }
        }
        sum.sqrt()
    }

    /// Largest element modulus.
    pub fn max_modulus(&self) -> f64 {
        let mut max = 0.0f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                max = max.max(self.get(r, c).norm_sqr());
            }
        }
        max.sqrt()
    }

    /// Plain matrix product (reference-quality, f64 accumulation).
    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols, self.precision());
        for r in 0..self.rows {
            for c in 0..rhs.cols {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.cols {
                    acc += self.get(r, k) * rhs.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    /// Frobenius norm of `self - rhs`, widening to f64.
    pub fn frobenius_distance(&self, rhs: &CMatrix) -> Result<f64> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut sum = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                sum += (self.get(r, c) - rhs.get(r, c)).norm_sqr();
            }
        }
        Ok(sum.sqrt())
    }

    /// Verifies the Hermitian contract within `tol` on element differences.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::shape("hermitian check requires a square matrix"));
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                let a = self.get(i, j);
                let b = self.get(j, i).conj();
                if (a - b).norm() > tol {
                    return Err(Error::Validation(format!(
                        "hermitian violation at ({i},{j}): {a} vs conj {b}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl Clone for CMatrix {
    fn clone(&self) -> Self {
        CMatrix {
            data: self.data.clone(),
            rows: self.rows,
            cols: self.cols,
            hermitian: self.hermitian,
        }
    }
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "CMatrix {}x{} ({:?}, hermitian={})",
            self.rows,
            self.cols,
            self.precision(),
            self.hermitian
        )?;
        for r in 0..self.rows.min(8) {
            write!(f, "  [")?;
            for c in 0..self.cols.min(8) {
                let v = self.get(r, c);
                write!(f, " {:+.4}{:+.4}i", v.re, v.im)?;
            }
            writeln!(f, " ]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_indexing() {
        let m = CMatrix::from_fn(2, 3, PrecisionMode::Pd, |r, c| {
            Complex64::new(r as f64, c as f64)
        });
        assert_eq!(m.get(1, 2), Complex64::new(1.0, 2.0));
        // Flat order: (0,0) (0,1) (0,2) (1,0) ...
        assert_eq!(m.buffer().get(3), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn identity_is_hermitian_until_written() {
        let mut m = CMatrix::identity(3, PrecisionMode::Pd);
        assert!(m.is_hermitian());
        m.check_hermitian(0.0).unwrap();
        m.set(0, 1, Complex64::new(1.0, 1.0));
        assert!(!m.is_hermitian());
    }

    #[test]
    fn matmul_identity_is_noop() {
        let a = CMatrix::from_fn(3, 3, PrecisionMode::Pd, |r, c| {
            Complex64::new((r * 3 + c) as f64, -(c as f64))
        });
        let i = CMatrix::identity(3, PrecisionMode::Pd);
        let p = a.matmul(&i).unwrap();
        assert!(a.frobenius_distance(&p).unwrap() < 1e-15);
    }

    #[test]
    fn hermitian_transpose_involution() {
        let a = CMatrix::from_fn(2, 4, PrecisionMode::Pd, |r, c| {
            Complex64::new(r as f64 + 0.5, c as f64 - 1.5)
        });
        let back = a.hermitian_transpose().hermitian_transpose();
        assert!(a.frobenius_distance(&back).unwrap() == 0.0);
    }
}
