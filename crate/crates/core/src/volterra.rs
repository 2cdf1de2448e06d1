//! Forward solvers for the linear convolution Volterra equation
//! `X(n+1) = f(n+1) + sum_{j<=n} U(n-j) X(j)`, its resolvent, the
//! variation-of-constants representation, and the Neumann-series
//! representation of the resolvent.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matseq::{accum_prod, convolve, MatSeq};

/// Data of the forced equation: kernel `U` (d x d), forcing `f` (d x 1,
/// with `f(0)` stored but unused by the recursion) and initial value.
#[derive(Debug, Clone)]
pub struct VolterraProblem {
    pub kernel: MatSeq,
    pub forcing: MatSeq,
    pub x0: DVector<f64>,
}

impl VolterraProblem {
    pub fn new(kernel: MatSeq, forcing: MatSeq, x0: DVector<f64>) -> Result<Self> {
        if !kernel.is_square() {
            return Err(Error::DimensionMismatch("kernel must be square".into()));
        }
        let d = kernel.dim();
        if forcing.rows() != d || forcing.cols() != 1 || x0.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "kernel is {d}x{d}, forcing is {}x{}, x0 has length {}",
                forcing.rows(),
                forcing.cols(),
                x0.len()
            )));
        }
        Ok(VolterraProblem { kernel, forcing, x0 })
    }
}

/// Exact forward recursion for the forced equation:
/// `X(0) = X0`, `X(n+1) = f(n+1) + sum_{j=0}^n U(n-j) X(j)`.
pub fn solve_forced(p: &VolterraProblem, n_max: usize) -> Result<MatSeq> {
    let d = p.kernel.dim();
    if p.kernel.len() < n_max {
        return Err(Error::InsufficientLength(format!(
            "kernel has {} terms, need {n_max}",
            p.kernel.len()
        )));
    }
    if p.forcing.len() < n_max + 1 {
        return Err(Error::InsufficientLength(format!(
            "forcing has {} terms, need {}",
            p.forcing.len(),
            n_max + 1
        )));
    }
    let mut x = MatSeq::zeros(d, 1, n_max + 1);
    for i in 0..d {
        x.set(0, i, 0, p.x0[i]);
    }
    for n in 0..n_max {
        let mut acc = p.forcing.term_slice(n + 1).to_vec();
        for j in 0..=n {
            accum_prod(&mut acc, p.kernel.term_slice(n - j), x.term_slice(j), d, d, 1);
        }
        for i in 0..d {
            x.set(n + 1, i, 0, acc[i]);
        }
    }
    Ok(x)
}

/// Resolvent recursion: `Z(0) = I`, `Z(n+1) = sum_{j=0}^n U(n-j) Z(j)`.
pub fn solve_resolvent(u: &MatSeq, n_max: usize) -> Result<MatSeq> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch("kernel must be square".into()));
    }
    if u.len() < n_max {
        return Err(Error::InsufficientLength(format!(
            "kernel has {} terms, need {n_max}",
            u.len()
        )));
    }
    let d = u.dim();
    let mut z = MatSeq::identity_head(d, n_max + 1);
    let sz = d * d;
    for n in 0..n_max {
        let mut acc = vec![0.0; sz];
        for j in 0..=n {
            accum_prod(&mut acc, u.term_slice(n - j), z.term_slice(j), d, d, d);
        }
        for (idx, v) in acc.iter().enumerate() {
            z.set(n + 1, idx % d, idx / d, *v);
        }
    }
    Ok(z)
}

/// Variation of constants: `X(n) = Z(n) X0 + sum_{j=1}^n Z(n-j) f(j)`.
pub fn variation_of_constants(z: &MatSeq, f: &MatSeq, x0: &DVector<f64>) -> Result<MatSeq> {
    let d = z.dim();
    if f.rows() != d || f.cols() != 1 || x0.len() != d {
        return Err(Error::DimensionMismatch("variation_of_constants: shape mismatch".into()));
    }
    let len = z.len().min(f.len());
    let mut x = MatSeq::zeros(d, 1, len);
    for n in 0..len {
        let mut acc = vec![0.0; d];
        accum_prod(&mut acc, z.term_slice(n), x0.as_slice(), d, d, 1);
        for j in 1..=n {
            accum_prod(&mut acc, z.term_slice(n - j), f.term_slice(j), d, d, 1);
        }
        for i in 0..d {
            x.set(n, i, 0, acc[i]);
        }
    }
    Ok(x)
}

/// Neumann-series construction of the resolvent:
/// `Z(0) = I`, `Z(1) = U(0)`, `Z(n) = U(n-1) + sum_{j=2}^n U^{*j}(n-j)`.
pub fn neumann_representation(u: &MatSeq, n_max: usize) -> Result<MatSeq> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch("kernel must be square".into()));
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("neumann_representation requires n_max >= 2".into()));
    }
    if u.len() < n_max {
        return Err(Error::InsufficientLength(format!(
            "kernel has {} terms, need {n_max}",
            u.len()
        )));
    }
    let d = u.dim();
    let mut z = MatSeq::identity_head(d, n_max + 1);
    for n in 1..=n_max {
        z.set_term(n, &u.term_owned(n - 1));
    }
    let mut power = u.clone();
    for j in 2..=n_max {
        power = convolve(&power, u)?;
        debug_assert_eq!(power.len(), u.len());
        for n in j..=n_max {
            let t = z.term_owned(n) + power.term(n - j);
            z.set_term(n, &t);
        }
    }
    Ok(z)
}
