//! Parametric weight sequences, numerical membership diagnostics for the
//! periodic-decay weight classes, and the stride-subsampling transform.
//!
//! Membership in the weight class at rate `r` asks for (i) the ratio
//! `gamma(n-1)/gamma(n) -> 1/r`, (ii) a convergent `r`-weighted transform,
//! and (iii) a vanishing normalized self-convolution tail. All three are
//! genuine limits, so the verdicts are three-valued: a finite horizon can
//! refute, support, or simply not decide.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{estimate_limit_empirical, AsymptoticProfile, ConvergenceReport, Trend};
use crate::error::{Error, Result};
use crate::matseq::MatSeq;
use crate::Verdict;

/// A positive weight sequence with geometric rate `r` and a subexponential
/// factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFn {
    /// `gamma(n) = r^n n^{-alpha}`, with a declared value at `n = 0`.
    Poly { r: f64, alpha: f64, value_at_0: f64 },
    /// `gamma(n) = r^n n^{-alpha} exp(-n^beta)`, `0 < beta < 1`.
    PolyStretch { r: f64, alpha: f64, beta: f64, value_at_0: f64 },
    /// `gamma(n) = r^n exp(-n / log n)` for `n >= 2`; the first two values
    /// are declared (`log n` degenerates below `n = 2`).
    LogExp { r: f64, value_at_0: f64, value_at_1: f64 },
    /// Explicit positive values with a declared rate.
    Table { r: f64, values: Vec<f64> },
    /// `Phi(n) = phi(stride * n)`; rate `r^stride`.
    Subsampled { inner: Box<WeightFn>, stride: usize },
}

impl WeightFn {
    /// Declared geometric rate.
    pub fn rate(&self) -> f64 {
        match self {
            WeightFn::Poly { r, .. }
            | WeightFn::PolyStretch { r, .. }
            | WeightFn::LogExp { r, .. }
            | WeightFn::Table { r, .. } => *r,
            WeightFn::Subsampled { inner, stride } => inner.rate().powi(*stride as i32),
        }
    }
}

/// Pointwise evaluation of the weight at index `n`.
pub fn eval_weight(w: &WeightFn, n: usize) -> Result<f64> {
    let v = match w {
        WeightFn::Poly { r, alpha, value_at_0 } => {
            if n == 0 {
                *value_at_0
            } else {
                r.powi(n as i32) * (n as f64).powf(-alpha)
            }
        }
        WeightFn::PolyStretch { r, alpha, beta, value_at_0 } => {
            if n == 0 {
                *value_at_0
            } else {
                let nf = n as f64;
                r.powi(n as i32) * nf.powf(-alpha) * (-nf.powf(*beta)).exp()
            }
        }
        WeightFn::LogExp { r, value_at_0, value_at_1 } => match n {
            0 => *value_at_0,
            1 => *value_at_1,
            _ => {
                let nf = n as f64;
                r.powi(n as i32) * (-nf / nf.ln()).exp()
            }
        },
        WeightFn::Table { values, .. } => *values.get(n).ok_or_else(|| {
            Error::InvalidArgument(format!("table weight has {} values, index {n} out of domain", values.len()))
        })?,
        WeightFn::Subsampled { inner, stride } => eval_weight(inner, stride * n)?,
    };
    if v <= 0.0 || !v.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "weight must be positive and finite, got {v} at n = {n}"
        )));
    }
    Ok(v)
}

/// The subsampling transform: `Phi(n) = phi(N n)` with rate `tau = r^N`.
pub fn subsample_weight(w: &WeightFn, n_stride: usize) -> (WeightFn, f64) {
    assert!(n_stride >= 1);
    let tau = w.rate().powi(n_stride as i32);
    if n_stride == 1 {
        return (w.clone(), tau);
    }
    (
        WeightFn::Subsampled { inner: Box::new(w.clone()), stride: n_stride },
        tau,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFlag {
    Growing,
    Converging,
}

/// Diagnostics from the weight-class membership check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WMembershipReport {
    /// `gamma(horizon-1) / gamma(horizon)`.
    pub ratio_limit_estimate: f64,
    pub ratio_target: f64,
    /// Partial sum of the `r`-weighted transform at the horizon.
    pub transform_partial: f64,
    pub transform_tail_flag: TailFlag,
    /// `(m, sup_{n<=horizon} (1/gamma(n)) sum_{i=m}^{n-m} gamma(n-i)gamma(i))`
    /// at doubling values of `m`.
    pub p1_profile: Vec<(usize, f64)>,
    pub verdict: Verdict,
}

fn p1_sup(g: &[f64], m: usize) -> f64 {
    let h = g.len() - 1;
    let mut best = 0.0f64;
    for n in (2 * m)..=h {
        let mut s = 0.0;
        for i in m..=(n - m) {
            s += g[n - i] * g[i];
        }
        best = best.max(s / g[n]);
    }
    best
}

/// Numerical membership test against the weight-class conditions at rate `r`.
pub fn check_w_membership(
    w: &WeightFn,
    r: f64,
    horizon: usize,
    m_max: usize,
) -> Result<WMembershipReport> {
    if r <= 0.0 {
        return Err(Error::InvalidArgument("membership check requires r > 0".into()));
    }
    if horizon < 4 * m_max || m_max < 4 {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} too small for m_max {m_max} (need horizon >= 4 m_max, m_max >= 4)"
        )));
    }
    let g: Vec<f64> = (0..=horizon).map(|n| eval_weight(w, n)).collect::<Result<_>>()?;

    // (i) ratio residuals at the last three doublings
    let res = |n: usize| (g[n - 1] / g[n] * r - 1.0).abs();
    let (res_q, res_h2, res_h) = (res(horizon / 4), res(horizon / 2), res(horizon));
    let ratio_ok = res_h < 0.01 || (res_h < res_h2 && res_h2 < res_q);

    // (ii) transform partial sums at doublings of the horizon
    let mut partial = vec![0.0f64; horizon + 1];
    let mut acc = 0.0;
    let rinv = 1.0 / r;
    let mut wgt = 1.0;
    for n in 0..=horizon {
        acc += g[n] * wgt;
        partial[n] = acc;
        wgt *= rinv;
    }
    let d1 = partial[horizon / 4] - partial[horizon / 8];
    let d2 = partial[horizon / 2] - partial[horizon / 4];
    let d3 = partial[horizon] - partial[horizon / 2];
    let growing = d3 > 1e-6 && d3 >= 0.95 * d2;
    let transform_ok =
        d3 <= 1e-6 || (d3 <= 1e-3 * partial[horizon].max(1.0) && d3 <= d2 && d2 <= d1);

    // (iii) normalized self-convolution profile at doublings of m
    let mut p1_profile = Vec::new();
    let mut m = 1;
    while m <= m_max {
        p1_profile.push((m, p1_sup(&g, m)));
        m *= 2;
    }
    let at = |m: usize| {
        p1_profile
            .iter()
            .find(|(mm, _)| *mm == m)
            .map(|(_, v)| *v)
            .unwrap_or(f64::NAN)
    };
    let (p_q, p_h2, p_h) = (at(m_max / 4), at(m_max / 2), at(m_max));
    let p1_ok = p_h <= p_h2 && p_h2 <= p_q && p_h <= 0.9 * p_q;

    let verdict = if growing {
        Verdict::Fail
    } else if transform_ok && ratio_ok && p1_ok {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };

    Ok(WMembershipReport {
        ratio_limit_estimate: g[horizon - 1] / g[horizon],
        ratio_target: 1.0 / r,
        transform_partial: partial[horizon],
        transform_tail_flag: if growing { TailFlag::Growing } else { TailFlag::Converging },
        p1_profile,
        verdict,
    })
}

/// Result of testing a matrix sequence for periodic decay against a weight.
#[derive(Debug, Clone)]
pub struct WpMembership {
    pub profile: AsymptoticProfile,
    pub reports: Vec<ConvergenceReport>,
    pub verdict: Verdict,
}

/// Tests `U(Nn+i)/phi(Nn) -> A_i` for each residue `i`, estimating every
/// limit by tail extrapolation. The limit is taken along `n` with `i`
/// fixed, dividing by `phi(Nn)` (never by `phi(Nn+i)`).
pub fn check_wp_membership(
    u: &MatSeq,
    phi: &WeightFn,
    n_stride: usize,
    horizon: usize,
) -> Result<WpMembership> {
    if horizon * n_stride + n_stride > u.len() {
        return Err(Error::InsufficientLength(format!(
            "sequence has {} terms; horizon {horizon} with period {n_stride} needs {}",
            u.len(),
            horizon * n_stride + n_stride
        )));
    }
    let window = (horizon / 4).max(8);
    let mut reports = Vec::with_capacity(n_stride);
    let mut limits = Vec::with_capacity(n_stride);
    let mut verdict = Verdict::Pass;
    for i in 0..n_stride {
        let rep = estimate_limit_empirical(u, phi, n_stride, i, window)?;
        let scale = crate::matseq::inf_norm(&rep.extrapolated).max(1e-30);
        let last_resid = rep
            .samples
            .last()
            .map(|(_, v)| crate::matseq::inf_norm(&(v - &rep.extrapolated)))
            .unwrap_or(f64::INFINITY);
        let ok = last_resid / scale < 0.05 && rep.residual_trend != Trend::Increasing;
        if !ok {
            verdict = Verdict::Inconclusive;
        }
        limits.push(rep.extrapolated.clone());
        reports.push(rep);
    }
    Ok(WpMembership {
        profile: AsymptoticProfile { rate: phi.rate(), period: n_stride, limits },
        reports,
        verdict,
    })
}
