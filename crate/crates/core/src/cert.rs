//! Decay certificates and certified truncation of weighted stride sums.
//!
//! The stability and admissibility conditions are strict inequalities on
//! infinite sums; a finite prefix alone cannot decide them. A kernel may
//! therefore carry a decay certificate (a closed-form entrywise majorant),
//! and every weighted tail beyond the stored prefix is bounded by the
//! majorant's closed-form remainder. Verdicts are issued only when the
//! resulting interval lies strictly on one side of the threshold.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matseq::MatSeq;

/// Entrywise majorant for the tail of a matrix sequence:
/// `|U(n)|_{ij} <= g(n)` for every `n` at or beyond the stored prefix.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decay {
    /// `g(n) = coeff * ratio^n`, `0 < ratio < 1`.
    Geometric { coeff: f64, ratio: f64 },
    /// `g(n) = coeff * n^{-alpha}` for `n >= 1`, `alpha > 1`.
    Polynomial { coeff: f64, alpha: f64 },
    /// `g(n) = coeff * ratio^n * n^{-alpha}`: the natural majorant for
    /// kernels with a geometric weight envelope times a polynomial factor.
    GeometricPoly { coeff: f64, ratio: f64, alpha: f64 },
}

impl Decay {
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            Decay::Geometric { coeff, ratio } => coeff * ratio.powi(n as i32),
            Decay::Polynomial { coeff, alpha } => coeff * (n.max(1) as f64).powf(-alpha),
            Decay::GeometricPoly { coeff, ratio, alpha } => {
                coeff * ratio.powi(n as i32) * (n.max(1) as f64).powf(-alpha)
            }
        }
    }

    /// Upper bound for `sum_{l >= start} r^{-N l} g(N l + k)`.
    fn stride_tail_upper(&self, r: f64, n_stride: usize, k: usize, start: usize) -> Result<f64> {
        self.stride_tail(r, n_stride, k, start, TailPoint::Upper)
    }

    /// Midpoint estimate of the same tail (between the integral brackets);
    /// close to the true tail when the majorant is tight along the stride.
    fn stride_tail_mid(&self, r: f64, n_stride: usize, k: usize, start: usize) -> Result<f64> {
        self.stride_tail(r, n_stride, k, start, TailPoint::Mid)
    }

    fn stride_tail(
        &self,
        r: f64,
        n_stride: usize,
        k: usize,
        start: usize,
        point: TailPoint,
    ) -> Result<f64> {
        let nf = n_stride as f64;
        // every family is g(n) = coeff * ratio^n * n^{-alpha}; the tail is
        // coeff * ratio^k * sum_{l>=start} q^l (Nl+k)^{-alpha}, q = (ratio/r)^N
        let (coeff, ratio, alpha) = match *self {
            Decay::Geometric { coeff, ratio } => (coeff, ratio, 0.0),
            Decay::Polynomial { coeff, alpha } => (coeff, 1.0, alpha),
            Decay::GeometricPoly { coeff, ratio, alpha } => (coeff, ratio, alpha),
        };
        if coeff == 0.0 {
            return Ok(0.0);
        }
        if !(0.0 < ratio && ratio <= 1.0) || coeff < 0.0 {
            return Err(Error::TailNotCertified(format!(
                "certificate needs coeff >= 0 and ratio in (0,1], got coeff {coeff}, ratio {ratio}"
            )));
        }
        let q = (ratio / r).powf(nf);
        let head = coeff * ratio.powi(k as i32);
        if (q - 1.0).abs() <= 1e-12 {
            if alpha <= 1.0 {
                return Err(Error::DivergentTail(format!(
                    "tail with decay rate {ratio} and power {alpha} diverges under weight r = {r}"
                )));
            }
            // geometric parts cancel; integral brackets on the power law:
            //   int_start^inf <= sum_{l>=start} <= int_{start-1}^inf
            let lower_at =
                |s: f64| head * (nf * s + k as f64).powf(1.0 - alpha) / (nf * (alpha - 1.0));
            let s = start as f64;
            return match point {
                TailPoint::Upper => Ok(lower_at((s - 1.0).max(0.0))),
                TailPoint::Mid => Ok(lower_at((s - 0.5).max(0.0))),
            };
        }
        if q > 1.0 {
            return Err(Error::DivergentTail(format!(
                "tail with decay rate {ratio} does not beat weight r = {r}"
            )));
        }
        // q < 1: geometric bound, with the power-law factor frozen at the
        // truncation point (exact when alpha = 0)
        let poly = ((n_stride * start + k).max(1) as f64).powf(-alpha);
        Ok(head * poly * q.powi(start as i32) / (1.0 - q))
    }
}

#[derive(Clone, Copy)]
enum TailPoint {
    Upper,
    Mid,
}

/// A truncated sum plus a bound on the omitted tail. `prefix_only` marks
/// sums taken over an uncertified stored prefix; their `tail` is zero by
/// construction and carries no guarantee.
#[derive(Debug, Clone)]
pub struct Certified<T> {
    pub value: T,
    pub tail: f64,
    pub prefix_only: bool,
}

impl<T> Certified<T> {
    #[allow(clippy::self_named_constructors)]
    pub fn certified(value: T, tail: f64) -> Self {
        Certified { value, tail, prefix_only: false }
    }

    pub fn prefix_only(value: T) -> Self {
        Certified { value, tail: 0.0, prefix_only: true }
    }
}

fn stride_term_count(len: usize, n_stride: usize, k: usize) -> Result<usize> {
    if k >= len {
        return Err(Error::InsufficientLength(format!(
            "stride offset {k} beyond stored prefix of length {len}"
        )));
    }
    Ok((len - 1 - k) / n_stride + 1)
}

/// `sum_{l>=0} r^{-N(l+1)} |U(Nl+k)|` entrywise, with certified tail bound.
///
/// The value is the prefix sum (a lower bound, all terms nonnegative);
/// `tail` bounds the omitted remainder per entry.
pub fn stride_abs_sum(
    u: &MatSeq,
    decay: Option<&Decay>,
    r: f64,
    n_stride: usize,
    k: usize,
) -> Result<Certified<DMatrix<f64>>> {
    let terms = stride_term_count(u.len(), n_stride, k)?;
    let mut acc = DMatrix::zeros(u.rows(), u.cols());
    let wn = r.powf(-(n_stride as f64));
    let mut w = wn; // r^{-N(l+1)} at l = 0
    for l in 0..terms {
        let t = u.term(n_stride * l + k);
        acc.zip_apply(&t, |a, b| *a += b.abs() * w);
        w *= wn;
    }
    match decay {
        Some(d) => {
            let tail = wn * d.stride_tail_upper(r, n_stride, k, terms)?;
            Ok(Certified::certified(acc, tail))
        }
        None => Ok(Certified::prefix_only(acc)),
    }
}

/// `sum_{l>=0} r^{-Nl} U(Nl+k)` (signed), with certified tail bound.
///
/// When the stored stride terms are entrywise nonnegative, the point value
/// includes a per-entry midpoint tail correction scaled by the entry
/// pattern of the last stored term; the reported `tail` remains the
/// conservative majorant remainder, so `value ± tail` stays sound.
pub fn stride_signed_sum(
    u: &MatSeq,
    decay: Option<&Decay>,
    r: f64,
    n_stride: usize,
    k: usize,
) -> Result<Certified<DMatrix<f64>>> {
    let terms = stride_term_count(u.len(), n_stride, k)?;
    let mut acc = DMatrix::zeros(u.rows(), u.cols());
    let wn = r.powf(-(n_stride as f64));
    let mut w = 1.0;
    let mut nonneg = true;
    for l in 0..terms {
        let t = u.term(n_stride * l + k);
        acc.zip_apply(&t, |a, b| {
            if b < 0.0 {
                nonneg = false;
            }
            *a += b * w;
        });
        w *= wn;
    }
    let Some(d) = decay else {
        return Ok(Certified::prefix_only(acc));
    };
    let tail = d.stride_tail_upper(r, n_stride, k, terms)?;
    if nonneg && terms > 0 {
        let mid = d.stride_tail_mid(r, n_stride, k, terms)?;
        let last_idx = n_stride * (terms - 1) + k;
        let g_last = d.eval(last_idx);
        if g_last > 0.0 {
            let last = u.term(last_idx);
            acc.zip_apply(&last, |a, b| {
                let pattern = (b.abs() / g_last).clamp(0.0, 1.0);
                *a += mid * pattern;
            });
        }
    }
    Ok(Certified::certified(acc, tail))
}

/// Scalar weighted tail of a positive weight family: upper bound for
/// `sum_{l>=start} w(l) g(l)` style remainders, exposed for callers that
/// certify forcing or weight transforms.
pub fn scalar_tail_upper(decay: &Decay, r: f64, n_stride: usize, k: usize, start: usize) -> Result<f64> {
    decay.stride_tail_upper(r, n_stride, k, start)
}
