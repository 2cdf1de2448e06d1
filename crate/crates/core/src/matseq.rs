//! Finite truncations of matrix sequences and the arithmetic on them:
//! convolution, j-fold convolution, truncated Z-transforms, the row-sum
//! norm and spectral radius estimation.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};

/// A finite prefix of a sequence of `rows x cols` real matrices.
///
/// Terms are stored contiguously (column-major within each term), indices
/// `0..len-1`. Indexing outside the stored prefix is an error, never an
/// implicit zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MatSeq {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatSeq {
    pub fn zeros(rows: usize, cols: usize, len: usize) -> Self {
        assert!(rows > 0 && cols > 0 && len > 0, "MatSeq must be non-empty");
        MatSeq {
            rows,
            cols,
            data: vec![0.0; rows * cols * len],
        }
    }

    /// Scalar (1x1) sequence from raw values.
    pub fn scalar(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        MatSeq {
            rows: 1,
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// Builds a d x d sequence `(I, 0, 0, ...)` of the given length.
    pub fn identity_head(d: usize, len: usize) -> Self {
        let mut s = MatSeq::zeros(d, d, len);
        for i in 0..d {
            s.set(0, i, i, 1.0);
        }
        s
    }

    pub fn from_terms(terms: &[DMatrix<f64>]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("empty term list".into()));
        }
        let (rows, cols) = (terms[0].nrows(), terms[0].ncols());
        let mut s = MatSeq::zeros(rows, cols, terms.len());
        for (n, t) in terms.iter().enumerate() {
            if t.nrows() != rows || t.ncols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "term {n} is {}x{}, expected {}x{}",
                    t.nrows(),
                    t.ncols(),
                    rows,
                    cols
                )));
            }
            s.term_slice_mut(n).copy_from_slice(t.as_slice());
        }
        Ok(s)
    }

    /// Evaluates `f(n)` for n in `0..len` into a scalar sequence.
    pub fn scalar_from_fn(len: usize, f: impl Fn(usize) -> f64) -> Self {
        MatSeq::scalar(&(0..len).map(f).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.rows * self.cols)
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: len >= 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Block dimension for square sequences.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn term_slice(&self, n: usize) -> &[f64] {
        let sz = self.rows * self.cols;
        &self.data[n * sz..(n + 1) * sz]
    }

    fn term_slice_mut(&mut self, n: usize) -> &mut [f64] {
        let sz = self.rows * self.cols;
        &mut self.data[n * sz..(n + 1) * sz]
    }

    pub fn term(&self, n: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(self.term_slice(n), self.rows, self.cols)
    }

    pub fn term_owned(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.rows, self.cols, self.term_slice(n))
    }

    pub fn get(&self, n: usize, i: usize, j: usize) -> f64 {
        self.term_slice(n)[j * self.rows + i]
    }

    pub fn set(&mut self, n: usize, i: usize, j: usize, v: f64) {
        let rows = self.rows;
        self.term_slice_mut(n)[j * rows + i] = v;
    }

    pub fn set_term(&mut self, n: usize, m: &DMatrix<f64>) {
        assert_eq!((m.nrows(), m.ncols()), (self.rows, self.cols));
        self.term_slice_mut(n).copy_from_slice(m.as_slice());
    }

    /// Truncates to the first `len` terms.
    pub fn truncated(&self, len: usize) -> Self {
        assert!(len >= 1 && len <= self.len());
        MatSeq {
            rows: self.rows,
            cols: self.cols,
            data: self.data[..len * self.rows * self.cols].to_vec(),
        }
    }

    /// Entrywise sum of two sequences on their common prefix.
    pub fn add(&self, other: &MatSeq) -> Result<MatSeq> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("add: shape mismatch".into()));
        }
        let len = self.len().min(other.len());
        let mut out = self.truncated(len);
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> MatSeq {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= k;
        }
        out
    }

    pub fn is_nonneg(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// `dst += a * b` on raw column-major slices. Hot path of every solver;
/// avoids per-term allocation.
#[inline]
pub(crate) fn accum_prod(
    dst: &mut [f64],
    a: &[f64],
    b: &[f64],
    m: usize, // rows of a
    k: usize, // cols of a == rows of b
    n: usize, // cols of b
) {
    if m == 1 && k == 1 && n == 1 {
        dst[0] += a[0] * b[0];
        return;
    }
    for j in 0..n {
        for l in 0..k {
            let blj = b[j * k + l];
            if blj == 0.0 {
                continue;
            }
            let acol = &a[l * m..(l + 1) * m];
            let dcol = &mut dst[j * m..(j + 1) * m];
            for i in 0..m {
                dcol[i] += acol[i] * blj;
            }
        }
    }
}

/// Convolution `(U*V)(n) = sum_{j=0}^n U(n-j) V(j)` on the largest prefix
/// computable without fabricating tail terms, i.e. `min(U.len, V.len)` terms.
pub fn convolve(u: &MatSeq, v: &MatSeq) -> Result<MatSeq> {
    if u.cols() != v.rows() {
        return Err(Error::DimensionMismatch(format!(
            "convolve: U is {}x{}, V is {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let len = u.len().min(v.len());
    let mut w = MatSeq::zeros(u.rows(), v.cols(), len);
    let (m, k, nn) = (u.rows(), u.cols(), v.cols());
    for n in 0..len {
        let sz = m * nn;
        let mut acc = vec![0.0; sz];
        for j in 0..=n {
            accum_prod(&mut acc, u.term_slice(n - j), v.term_slice(j), m, k, nn);
        }
        w.term_slice_mut(n).copy_from_slice(&acc);
    }
    Ok(w)
}

/// j-fold convolution `U^{*j}`, defined for `j >= 2` by
/// `U^{*2} = U*U`, `U^{*j} = U^{*(j-1)} * U`.
pub fn jfold(u: &MatSeq, j: usize) -> Result<MatSeq> {
    if j < 2 {
        return Err(Error::InvalidArgument(format!("jfold requires j >= 2, got {j}")));
    }
    let mut acc = convolve(u, u)?;
    for _ in 3..=j {
        acc = convolve(&acc, u)?;
    }
    Ok(acc)
}

/// Truncated Z-transform `sum_{j<len} U(j) z^{-j}` of the stored prefix.
/// Also returns the row-sum norm of the last summand as a truncation
/// diagnostic.
pub fn ztransform(u: &MatSeq, z: f64) -> Result<(DMatrix<f64>, f64)> {
    if z == 0.0 {
        return Err(Error::InvalidArgument("ztransform: z must be nonzero".into()));
    }
    let mut acc = DMatrix::zeros(u.rows(), u.cols());
    let mut w = 1.0;
    let mut last = 0.0;
    for n in 0..u.len() {
        let term = u.term(n) * w;
        last = inf_norm(&term);
        acc += term;
        w /= z;
    }
    Ok((acc, last))
}

/// Row-sum norm: max over rows of the sum of absolute entries.
pub fn inf_norm<R, C, S>(a: &nalgebra::Matrix<f64, R, C, S>) -> f64
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::Storage<f64, R, C>,
{
    let mut best = 0.0f64;
    for i in 0..a.nrows() {
        let mut s = 0.0;
        for j in 0..a.ncols() {
            s += a[(i, j)].abs();
        }
        best = best.max(s);
    }
    best
}

/// Spectral radius estimate by repeated squaring with the Gelfand bound
/// `rho(A) <= ||A^{2^k}||^{1/2^k}`. Every iterate is itself an upper bound;
/// the iteration stops once two successive bounds differ by less than `tol`.
///
/// Powers are rescaled at each squaring so the estimate stays finite even
/// when `||A^n||` under- or overflows.
pub fn spectral_radius(a: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("spectral_radius: tol must be positive".into()));
    }
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch("spectral_radius: matrix must be square".into()));
    }
    const MAX_SQUARINGS: usize = 60;
    let norm0 = inf_norm(a);
    if norm0 == 0.0 {
        return Ok(0.0);
    }
    // m ~ A^{2^k} / exp(log_scale); bound_k = exp((log_scale + ln||m||) / 2^k)
    let mut m = a.clone();
    let mut log_scale = 0.0f64;
    let mut prev = norm0;
    for k in 1..=MAX_SQUARINGS {
        let nm = inf_norm(&m);
        if nm == 0.0 {
            return Ok(0.0); // nilpotent
        }
        log_scale = 2.0 * (log_scale + nm.ln());
        let scaled = m.map(|v| v / nm);
        m = &scaled * &scaled;
        let bound = ((log_scale + inf_norm(&m).ln()) / 2f64.powi(k as i32)).exp();
        if !bound.is_finite() {
            return Ok(0.0); // norm of square underflowed to zero
        }
        if (bound - prev).abs() < tol {
            return Ok(bound);
        }
        prev = bound;
    }
    Err(Error::NonConvergence(format!(
        "spectral radius bounds still moving after {MAX_SQUARINGS} squarings (last {prev})"
    )))
}
