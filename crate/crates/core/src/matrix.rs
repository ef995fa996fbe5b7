//! Dense exact matrices and the tensor-product operations used by the
//! evaluation semantics: Kronecker products, slot embeddings, commutation
//! matrices and fraction-free inversion.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("not a permutation of 1..={0}")]
    InvalidPermutation(usize),
}

/// Dense row-major matrix over a field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

/// Outcome of [`Matrix::inv_det`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvDet<F: Field> {
    Invertible { inverse: Matrix<F>, det: F },
    Singular,
}

impl<F> Matrix<F> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[F] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<G>(&self, f: impl FnMut(&F) -> G) -> Matrix<G> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<G>(&self, f: impl FnMut(&F) -> Option<G>) -> Option<Matrix<G>> {
        let data = self.data.iter().map(f).collect::<Option<Vec<_>>>()?;
        Some(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }
}

impl<F> Index<(usize, usize)> for Matrix<F> {
    type Output = F;

    fn index(&self, (i, j): (usize, usize)) -> &F {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl<F: Field> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, F::one())
    }

    /// `c * I_n`.
    pub fn scalar(n: usize, c: F) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c.clone();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from rows; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(MatrixError::Dimension("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from small integers, mostly for tests.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| F::from_i64(v)).collect())
                .collect(),
        )
        .expect("rectangular input")
    }

    /// Matrix unit `E_{ij}` (0-based) of the given shape.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = F::one();
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(F::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let v = &self[(i, j)];
                    if i == j {
                        v.is_one()
                    } else {
                        v.is_zero()
                    }
                })
            })
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), MatrixError> {
        if self.shape() != other.shape() {
            return Err(self.mismatch(other));
        }
        Ok(())
    }

    fn mismatch(&self, other: &Self) -> MatrixError {
        MatrixError::ShapeMismatch {
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: other.rows,
            right_cols: other.cols,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_same_shape(other)?;
        Ok(self.zip(other, F::add))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MatrixError> {
        self.check_same_shape(other)?;
        Ok(self.zip(other, F::sub))
    }

    fn zip(&self, other: &Self, f: impl Fn(&F, &F) -> F) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(F::neg)
    }

    pub fn scale(&self, c: &F) -> Self {
        self.map(|x| x.mul(c))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(self.mismatch(other));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.data[k * other.cols + j];
                    if b.is_zero() {
                        continue;
                    }
                    let slot = &mut out.data[i * other.cols + j];
                    *slot = slot.add(&a.mul(b));
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Kronecker product: block `(i, j)` of the result is `self[i, j] * other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a.mul(&other[(k, l)]);
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal `diag(self, other)`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, self.cols, other);
        out
    }

    /// Copy of the `rows x cols` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self[(r0 + i, c0 + j)].clone();
            }
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    /// Assembles a block matrix; blocks in a block row share a height and
    /// blocks in a block column share a width.
    pub fn from_blocks(blocks: &[Vec<Self>]) -> Result<Self, MatrixError> {
        if blocks.is_empty() {
            return Ok(Self::zeros(0, 0));
        }
        let heights: Vec<usize> = blocks.iter().map(|row| row[0].rows).collect();
        let widths: Vec<usize> = blocks[0].iter().map(|b| b.cols).collect();
        for row in blocks {
            if row.len() != widths.len() {
                return Err(MatrixError::Dimension("ragged block rows".into()));
            }
        }
        let mut out = Self::zeros(heights.iter().sum(), widths.iter().sum());
        let mut r0 = 0;
        for (bi, row) in blocks.iter().enumerate() {
            let mut c0 = 0;
            for (bj, b) in row.iter().enumerate() {
                if b.rows != heights[bi] || b.cols != widths[bj] {
                    return Err(MatrixError::Dimension(format!(
                        "block ({bi},{bj}) is {}x{}, expected {}x{}",
                        b.rows, b.cols, heights[bi], widths[bj]
                    )));
                }
                out.set_block(r0, c0, b);
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Ok(out)
    }

    /// Determinant by fraction-free elimination.
    pub fn det(&self) -> Result<F, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let (mut a, scale) = self.integral_rows();
        let mut prev = F::one();
        let mut negate = false;
        for k in 0..n {
            let Some(p) = (k..n).find(|&r| !a[r][k].is_zero()) else {
                return Ok(F::zero());
            };
            if p != k {
                a.swap(p, k);
                negate = !negate;
            }
            for i in k + 1..n {
                let f = a[i][k].clone();
                for j in k + 1..n {
                    let v = a[k][k].mul(&a[i][j]).sub(&f.mul(&a[k][j]));
                    a[i][j] = v.div(&prev).expect("nonzero Bareiss pivot");
                }
                a[i][k] = F::zero();
            }
            prev = a[k][k].clone();
        }
        let det = if n == 0 { F::one() } else { prev };
        let det = det.div(&scale).expect("row scale is nonzero");
        Ok(if negate { det.neg() } else { det })
    }

    /// Inverse and determinant via fraction-free Gauss-Jordan elimination.
    pub fn inv_det(&self) -> Result<InvDet<F>, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(match self.solve_inner(&Self::identity(self.rows)) {
            Some((inverse, det)) => InvDet::Invertible { inverse, det },
            None => InvDet::Singular,
        })
    }

    pub fn inverse(&self) -> Result<Option<Self>, MatrixError> {
        Ok(match self.inv_det()? {
            InvDet::Invertible { inverse, .. } => Some(inverse),
            InvDet::Singular => None,
        })
    }

    /// Solves `self * X = rhs`; `None` when `self` is singular.
    pub fn solve(&self, rhs: &Self) -> Result<Option<Self>, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if rhs.rows != self.rows {
            return Err(self.mismatch(rhs));
        }
        Ok(self.solve_inner(rhs).map(|(x, _)| x))
    }

    /// Rows scaled to integral entries when the field supports it, together
    /// with the product of the scale factors.
    fn integral_rows(&self) -> (Vec<Vec<F>>, F) {
        let mut total = F::one();
        let rows = (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                match F::integral_row_scale(row) {
                    Some(s) if !s.is_one() => {
                        total = total.mul(&s);
                        row.iter().map(|x| x.mul(&s)).collect()
                    }
                    _ => row.to_vec(),
                }
            })
            .collect();
        (rows, total)
    }

    fn solve_inner(&self, rhs: &Self) -> Option<(Self, F)> {
        let n = self.rows;
        let k_cols = rhs.cols;
        let width = n + k_cols;
        let mut scale = F::one();
        let mut a: Vec<Vec<F>> = (0..n)
            .map(|i| {
                let mut row: Vec<F> = self.row(i).to_vec();
                row.extend_from_slice(rhs.row(i));
                if let Some(s) = F::integral_row_scale(&row) {
                    if !s.is_one() {
                        scale = scale.mul(&s);
                        for x in &mut row {
                            *x = x.mul(&s);
                        }
                    }
                }
                row
            })
            .collect();
        let mut prev = F::one();
        let mut negate = false;
        for k in 0..n {
            let p = (k..n).find(|&r| !a[r][k].is_zero())?;
            if p != k {
                a.swap(p, k);
                negate = !negate;
            }
            let pivot_row = a[k].clone();
            let pivot = pivot_row[k].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i == k {
                    continue;
                }
                let f = row[k].clone();
                for j in 0..width {
                    if j == k {
                        continue;
                    }
                    let v = pivot.mul(&row[j]);
                    let v = if f.is_zero() { v } else { v.sub(&f.mul(&pivot_row[j])) };
                    row[j] = v.div(&prev).expect("nonzero Bareiss pivot");
                }
                row[k] = F::zero();
            }
            prev = pivot;
        }
        // Left block is now prev * I.
        let d = if n == 0 { F::one() } else { prev };
        let d_inv = d.inv().expect("nonzero final pivot");
        let mut x = Self::zeros(n, k_cols);
        for i in 0..n {
            for j in 0..k_cols {
                x[(i, j)] = a[i][n + j].mul(&d_inv);
            }
        }
        // The rhs rows were scaled along with the rows of self, which leaves
        // the solution unchanged; the determinant picks up the scale.
        let det = d.div(&scale).expect("row scale is nonzero");
        Some((x, if negate { det.neg() } else { det }))
    }
}

impl<F: fmt::Display> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<F: fmt::Display> fmt::Display for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Kronecker product of `a` and `b`.
pub fn kron<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    a.kron(b)
}

/// Block-diagonal direct sum `diag(a, b)`.
pub fn direct_sum<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    a.direct_sum(b)
}

/// `I_{n_1} ⊗ ... ⊗ a ⊗ ... ⊗ I_{n_G}` with `a` in slot `part` (1-based).
pub fn tau_embed<F: Field>(part: usize, a: &Matrix<F>, dims: &[usize]) -> Result<Matrix<F>, MatrixError> {
    if part == 0 || part > dims.len() {
        return Err(MatrixError::Dimension(format!(
            "part {part} outside 1..={}",
            dims.len()
        )));
    }
    let n = dims[part - 1];
    if a.shape() != (n, n) {
        return Err(MatrixError::Dimension(format!(
            "slot {part} expects {n}x{n}, got {}x{}",
            a.rows, a.cols
        )));
    }
    let left: usize = dims[..part - 1].iter().product();
    let right: usize = dims[part..].iter().product();
    Ok(Matrix::identity(left).kron(&a.kron(&Matrix::identity(right))))
}

/// Permutation matrix `K` with `⊗_t a_{π(t)} = K (⊗_i a_i) Kᵗ` for all
/// `a_i` of size `dims[i]`.
///
/// `pi` is 1-based: `pi[t - 1] = π(t)`. The matrix is built directly from the
/// mixed-radix index permutation.
pub fn commutation_matrix<F: Field>(pi: &[usize], dims: &[usize]) -> Result<Matrix<F>, MatrixError> {
    let g = dims.len();
    if pi.len() != g {
        return Err(MatrixError::InvalidPermutation(g));
    }
    let mut seen = vec![false; g];
    for &p in pi {
        if p == 0 || p > g || seen[p - 1] {
            return Err(MatrixError::InvalidPermutation(g));
        }
        seen[p - 1] = true;
    }
    let total: usize = dims.iter().product();
    let permuted_dims: Vec<usize> = pi.iter().map(|&p| dims[p - 1]).collect();
    let mut k = Matrix::zeros(total, total);
    let mut digits = vec![0usize; g];
    for row in 0..total {
        // Row index in the permuted radix: digit t ranges over dims[π(t)].
        let mut rem = row;
        for t in (0..g).rev() {
            digits[t] = rem % permuted_dims[t];
            rem /= permuted_dims[t];
        }
        // Original multi-index has j_{π(t)} = k_t.
        let mut orig = vec![0usize; g];
        for t in 0..g {
            orig[pi[t] - 1] = digits[t];
        }
        let col = orig.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d);
        k[(row, col)] = F::one();
    }
    Ok(k)
}
