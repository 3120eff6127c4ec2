//! Dense real-matrix kernels: matrix exponential, linear solves and
//! commutators.
//!
//! Every generator this crate touches is small (a handful of states), so
//! storage is dense row-major and the solver is plain LU with partial
//! pivoting. The exponential uses scaling-and-squaring with the degree-13
//! Padé approximant (Higham 2005, SIAM J. Matrix Anal. Appl. 26(4)).

use thiserror::Error;

/// Errors raised by the dense kernels.
#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular to working tolerance (rcond = {rcond:.3e})")]
    Singular { rcond: f64 },
    #[error("invalid argument: {0}")]
    BadArgument(String),
}

/// Reciprocal-condition threshold below which a solve refuses to proceed.
/// Distinguishes genuinely degenerate generators (e.g. all-zero rows of a
/// mover-stayer regime) from roundoff.
pub const RCOND_TOL: f64 = 1e-12;

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].as_ref().is_empty() {
            return Err(MatrixError::BadArgument("matrix must be non-empty".into()));
        }
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(MatrixError::BadArgument("ragged rows".into()));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// First non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }

    pub fn check_finite(&self) -> Result<(), MatrixError> {
        match self.find_non_finite() {
            Some((row, col)) => Err(MatrixError::NonFinite { row, col }),
            None => Ok(()),
        }
    }

    fn check_square(&self) -> Result<(), MatrixError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Matrix product; shapes are the caller's responsibility.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        let data = self.data.iter().map(|a| a * factor).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// M · x for a column vector x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// xᵀ · M for a row vector x.
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let w = x[i];
            if w == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                out[j] += w * self[(i, j)];
            }
        }
        out
    }

    /// Row sums, i.e. M · 1.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// 1-norm: maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += self[(i, j)].abs();
            }
            best = best.max(s);
        }
        best
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Restriction to the given (ordered) index set on both axes.
    pub fn submatrix(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), idx.len());
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                out[(r, c)] = self[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Length-n vector of ones.
pub fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

// Padé(13) numerator coefficients (Higham 2005, Table 10.4). Exact integers.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// theta_13 from Higham Table 10.2: scale until ||A|| / 2^s <= theta.
const THETA13: f64 = 5.371920351148152;

/// e^{Mt} by scaling-and-squaring with the fixed degree-13 Padé approximant.
///
/// Returns the exact identity for `t == 0`.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix, MatrixError> {
    m.check_square()?;
    m.check_finite()?;
    if !t.is_finite() || t < 0.0 {
        return Err(MatrixError::BadArgument(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    let n = m.rows();
    if t == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let a = m.scale(t);
    if n == 1 {
        let mut out = Matrix::zeros(1, 1);
        out[(0, 0)] = a[(0, 0)].exp();
        return Ok(out);
    }

    let norm = a.norm1();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(squarings as i32));

    let eye = Matrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    // U = A [A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I]
    let w1 = a6
        .scale(PADE13[13])
        .add(&a4.scale(PADE13[11]))
        .add(&a2.scale(PADE13[9]));
    let w = a6
        .matmul(&w1)
        .add(&a6.scale(PADE13[7]))
        .add(&a4.scale(PADE13[5]))
        .add(&a2.scale(PADE13[3]))
        .add(&eye.scale(PADE13[1]));
    let u = a.matmul(&w);

    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let z1 = a6
        .scale(PADE13[12])
        .add(&a4.scale(PADE13[10]))
        .add(&a2.scale(PADE13[8]));
    let v = a6
        .matmul(&z1)
        .add(&a6.scale(PADE13[6]))
        .add(&a4.scale(PADE13[4]))
        .add(&a2.scale(PADE13[2]))
        .add(&eye.scale(PADE13[0]));

    // (V - U) X = (V + U); the denominator is nonsingular once ||A|| <= theta.
    let lu = LuFactors::new(v.sub(&u))?;
    let mut x = lu.solve(&v.add(&u));

    for _ in 0..squarings {
        x = x.matmul(&x);
    }
    Ok(x)
}

/// LU factorization with partial pivoting, kept for repeated solves.
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factor a square matrix. Fails only on an exactly zero pivot.
    pub fn new(mut m: Matrix) -> Result<Self, MatrixError> {
        m.check_square()?;
        let n = m.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = m[(col, col)].abs();
            for r in col + 1..n {
                let v = m[(r, col)].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if pivot_val == 0.0 {
                return Err(MatrixError::Singular { rcond: 0.0 });
            }
            if pivot_row != col {
                for j in 0..n {
                    let tmp = m[(col, j)];
                    m[(col, j)] = m[(pivot_row, j)];
                    m[(pivot_row, j)] = tmp;
                }
                perm.swap(col, pivot_row);
            }
            let piv = m[(col, col)];
            for r in col + 1..n {
                let factor = m[(r, col)] / piv;
                m[(r, col)] = factor;
                if factor == 0.0 {
                    continue;
                }
                for j in col + 1..n {
                    let v = m[(col, j)];
                    m[(r, j)] -= factor * v;
                }
            }
        }
        Ok(LuFactors { lu: m, perm })
    }

    /// Solve for a multi-column right-hand side.
    pub fn solve(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.lu.rows(), rhs.rows(), "rhs row count must match");
        let n = self.lu.rows();
        let k = rhs.cols();
        let mut x = Matrix::zeros(n, k);
        for i in 0..n {
            for j in 0..k {
                x[(i, j)] = rhs[(self.perm[i], j)];
            }
        }
        // forward substitution (unit lower triangle)
        for col in 0..n {
            for r in col + 1..n {
                let f = self.lu[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..k {
                    let v = x[(col, j)];
                    x[(r, j)] -= f * v;
                }
            }
        }
        // back substitution
        for col in (0..n).rev() {
            let piv = self.lu[(col, col)];
            for j in 0..k {
                x[(col, j)] /= piv;
            }
            for r in 0..col {
                let f = self.lu[(r, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..k {
                    let v = x[(col, j)];
                    x[(r, j)] -= f * v;
                }
            }
        }
        x
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut col = Matrix::zeros(n, 1);
        for i in 0..n {
            col[(i, 0)] = rhs[i];
        }
        let x = self.solve(&col);
        (0..n).map(|i| x[(i, 0)]).collect()
    }
}

/// Exact reciprocal 1-norm condition number; the inverse is cheap at these sizes.
pub fn rcond(m: &Matrix) -> Result<f64, MatrixError> {
    m.check_square()?;
    m.check_finite()?;
    let lu = match LuFactors::new(m.clone()) {
        Ok(lu) => lu,
        Err(MatrixError::Singular { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let inv = lu.solve(&Matrix::identity(m.rows()));
    let denom = m.norm1() * inv.norm1();
    if denom == 0.0 || !denom.is_finite() {
        return Ok(0.0);
    }
    Ok(1.0 / denom)
}

/// Solve M X = Rhs, refusing matrices singular to `RCOND_TOL`.
pub fn solve(m: &Matrix, rhs: &Matrix) -> Result<Matrix, MatrixError> {
    m.check_square()?;
    m.check_finite()?;
    rhs.check_finite()?;
    if m.rows() != rhs.rows() {
        return Err(MatrixError::ShapeMismatch {
            left: format!("{}x{}", m.rows(), m.cols()),
            right: format!("{}x{}", rhs.rows(), rhs.cols()),
        });
    }
    let rc = rcond(m)?;
    if rc < RCOND_TOL {
        return Err(MatrixError::Singular { rcond: rc });
    }
    let lu = LuFactors::new(m.clone())?;
    Ok(lu.solve(rhs))
}

/// Solve M x = rhs for a single column.
pub fn solve_vec(m: &Matrix, rhs: &[f64]) -> Result<Vec<f64>, MatrixError> {
    let mut col = Matrix::zeros(rhs.len(), 1);
    for (i, &v) in rhs.iter().enumerate() {
        col[(i, 0)] = v;
    }
    let x = solve(m, &col)?;
    Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
}

/// Commutator MN - NM.
pub fn commutator(m: &Matrix, n: &Matrix) -> Result<Matrix, MatrixError> {
    m.check_square()?;
    if (m.rows(), m.cols()) != (n.rows(), n.cols()) {
        return Err(MatrixError::ShapeMismatch {
            left: format!("{}x{}", m.rows(), m.cols()),
            right: format!("{}x{}", n.rows(), n.cols()),
        });
    }
    Ok(m.matmul(n).sub(&n.matmul(m)))
}
