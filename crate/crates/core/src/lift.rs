//! Period-N lifting of a convolution kernel: the strictly-lower
//! block-Toeplitz matrix `B`, its unit-lower-triangular inverse
//! `C = (I-B)^{-1}`, the lifted kernel `F(n) = C J(n)`, and the stability
//! condition checks on weighted kernel sums.
//!
//! The lifting stacks the `N` stride subsequences of the resolvent into one
//! `Nd`-dimensional sequence `Z_hat(n)` with `[Z_hat(n)]_p = Z(Nn+p-1)`,
//! which satisfies the autonomous identity `Z_hat(n) = (F * Z_hat)(n-1)`.

use nalgebra::DMatrix;

use crate::cert::{stride_abs_sum, Certified, Decay};
use crate::error::{Error, Result};
use crate::matseq::{inf_norm, MatSeq};
use crate::Verdict;

/// The lifted system: period, block dimension, `B`, `C = (I-B)^{-1}` and
/// the lifted kernel `F`.
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    pub n_period: usize,
    pub dim: usize,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub f: MatSeq,
}

/// Outcome of a threshold check on a weighted infinite sum: the computed
/// prefix value, a bound on the omitted tail, and a verdict that is issued
/// only when `[value, value + tail]` lies strictly on one side of the
/// threshold. `prefix_only` marks sums without a decay certificate, whose
/// verdict reflects the stored prefix alone.
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub value: f64,
    pub tail: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub prefix_only: bool,
}

impl ConditionCheck {
    fn from_interval(value: f64, tail: f64, threshold: f64, prefix_only: bool) -> Self {
        let verdict = if value >= threshold {
            Verdict::Fail
        } else if value + tail < threshold {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        ConditionCheck { value, tail, threshold, verdict, prefix_only }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Strictly lower block-triangular `B` with blocks `B_{p,q} = U(p-q-1)`
/// for `p > q` (1-based block indices).
pub fn build_b(u: &MatSeq, n_period: usize) -> Result<DMatrix<f64>> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch("build_b: kernel must be square".into()));
    }
    if n_period == 0 {
        return Err(Error::InvalidArgument("build_b: period must be positive".into()));
    }
    if u.len() + 1 < n_period {
        return Err(Error::InsufficientLength(format!(
            "build_b: kernel has {} terms, period {n_period} needs {}",
            u.len(),
            n_period - 1
        )));
    }
    let d = u.dim();
    let mut b = DMatrix::zeros(n_period * d, n_period * d);
    for p in 1..=n_period {
        for q in 1..p {
            b.view_mut(((p - 1) * d, (q - 1) * d), (d, d)).copy_from(&u.term(p - q - 1));
        }
    }
    Ok(b)
}

/// The block matrix `J(n)` of the lifted identity: every block (p,q) is
/// `U(Nn + N + p - q - 1)` (the strict-lower and upper-triangular branch
/// formulas coincide at this index).
pub fn build_j(u: &MatSeq, n_period: usize, n: usize) -> Result<DMatrix<f64>> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch("build_j: kernel must be square".into()));
    }
    let top = n_period * (n + 1) + n_period - 2;
    if u.len() <= top {
        return Err(Error::InsufficientLength(format!(
            "build_j: kernel has {} terms, block index {n} needs {}",
            u.len(),
            top + 1
        )));
    }
    let d = u.dim();
    let mut j = DMatrix::zeros(n_period * d, n_period * d);
    for p in 1..=n_period {
        for q in 1..=n_period {
            let idx = n_period * n + n_period + p - q - 1;
            j.view_mut(((p - 1) * d, (q - 1) * d), (d, d)).copy_from(&u.term(idx));
        }
    }
    Ok(j)
}

/// Inverse of `I - B` for strictly-lower block-Toeplitz `B`, computed by
/// the first-block-column recursion `C_{t,1} = sum_{l=1}^{t-1} B_{l+1,1}
/// C_{t-l,1}` (with `C_{1,1} = I`) and propagated along diagonals. The
/// result is unit lower block-triangular and block-Toeplitz.
pub fn toeplitz_inverse(b: &DMatrix<f64>, n_period: usize, d: usize) -> Result<DMatrix<f64>> {
    let size = n_period * d;
    if b.nrows() != size || b.ncols() != size {
        return Err(Error::DimensionMismatch(format!(
            "toeplitz_inverse: expected {size}x{size}, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let block = |m: &DMatrix<f64>, p: usize, q: usize| m.view(((p - 1) * d, (q - 1) * d), (d, d)).into_owned();
    // shape validation: strictly lower, block-Toeplitz
    for p in 1..=n_period {
        for q in 1..=n_period {
            if q >= p {
                if block(b, p, q).amax() != 0.0 {
                    return Err(Error::InvalidArgument(
                        "toeplitz_inverse: B must be strictly lower block-triangular".into(),
                    ));
                }
            } else if p > 1 && q > 1 && block(b, p, q) != block(b, p - 1, q - 1) {
                return Err(Error::InvalidArgument(
                    "toeplitz_inverse: B must be block-Toeplitz".into(),
                ));
            }
        }
    }
    let mut col: Vec<DMatrix<f64>> = Vec::with_capacity(n_period);
    col.push(DMatrix::identity(d, d));
    for t in 2..=n_period {
        let mut acc = DMatrix::zeros(d, d);
        for l in 1..t {
            acc += block(b, l + 1, 1) * &col[t - l - 1];
        }
        col.push(acc);
    }
    let mut c = DMatrix::zeros(size, size);
    for p in 1..=n_period {
        for q in 1..=p {
            c.view_mut(((p - 1) * d, (q - 1) * d), (d, d)).copy_from(&col[p - q]);
        }
    }
    Ok(c)
}

/// Builds the lifted system with `F(n) = C J(n)` for `n = 0..=n_max`.
pub fn build_f(u: &MatSeq, n_period: usize, n_max: usize) -> Result<LiftedSystem> {
    if u.len() < n_period * (n_max + 2) {
        return Err(Error::InsufficientLength(format!(
            "build_f: kernel has {} terms, need {}",
            u.len(),
            n_period * (n_max + 2)
        )));
    }
    let d = u.dim();
    let b = build_b(u, n_period)?;
    let c = toeplitz_inverse(&b, n_period, d)?;
    let mut f = MatSeq::zeros(n_period * d, n_period * d, n_max + 1);
    for n in 0..=n_max {
        let j = build_j(u, n_period, n)?;
        f.set_term(n, &(&c * j));
    }
    Ok(LiftedSystem { n_period, dim: d, b, c, f })
}

/// Entrywise majorant for the lifted kernel derived from the source
/// kernel's certificate: `|F(i)| <= ||C||_inf * g(Ni + 1)` entrywise, valid
/// wherever the majorant is nonincreasing.
pub fn lifted_decay(sys: &LiftedSystem, kernel_decay: &Decay) -> Decay {
    let norm_c = inf_norm(&sys.c.abs());
    let nf = sys.n_period as f64;
    match *kernel_decay {
        Decay::Geometric { coeff, ratio } => Decay::Geometric {
            coeff: norm_c * coeff * ratio,
            ratio: ratio.powf(nf),
        },
        Decay::Polynomial { coeff, alpha } => Decay::Polynomial {
            coeff: norm_c * coeff * nf.powf(-alpha),
            alpha,
        },
        Decay::GeometricPoly { coeff, ratio, alpha } => Decay::GeometricPoly {
            coeff: norm_c * coeff * ratio * nf.powf(-alpha),
            ratio: ratio.powf(nf),
            alpha,
        },
    }
}

/// The full weighted kernel sum `sum_i sum_l r^{-N(l+1)} |U(Nl+i)|` as an
/// entrywise-certified matrix; shared by the stability checks below.
pub fn weighted_kernel_sum(
    u: &MatSeq,
    decay: Option<&Decay>,
    r: f64,
    n_period: usize,
) -> Result<Certified<DMatrix<f64>>> {
    let mut value = DMatrix::zeros(u.rows(), u.cols());
    let mut tail = 0.0;
    let mut prefix_only = false;
    for i in 0..n_period {
        let s = stride_abs_sum(u, decay, r, n_period, i)?;
        value += s.value;
        tail += s.tail;
        prefix_only |= s.prefix_only;
    }
    Ok(if prefix_only {
        Certified::prefix_only(value)
    } else {
        Certified::certified(value, tail)
    })
}

/// Max-row-sum stability condition: the row-sum norm of the weighted
/// kernel sum must be below 1.
pub fn check_c3(u: &MatSeq, decay: Option<&Decay>, r: f64, n_period: usize) -> Result<ConditionCheck> {
    if r > 1.0 {
        return Err(Error::InvalidArgument(format!("check_c3 requires r <= 1, got {r}")));
    }
    let s = weighted_kernel_sum(u, decay, r, n_period)?;
    Ok(ConditionCheck::from_interval(
        inf_norm(&s.value),
        s.tail * u.cols() as f64, // per-entry tail, summed along a row
        1.0,
        s.prefix_only,
    ))
}

/// Same weighted sum, compared against the sharper converse threshold
/// `1 / (1 + r^{-N})`.
pub fn check_c5(u: &MatSeq, decay: Option<&Decay>, r: f64, n_period: usize) -> Result<ConditionCheck> {
    let base = check_c3(u, decay, r, n_period)?;
    let threshold = 1.0 / (1.0 + r.powf(-(n_period as f64)));
    Ok(ConditionCheck::from_interval(
        base.value,
        base.tail,
        threshold,
        base.prefix_only,
    ))
}

/// Row-sum bound on the lifted kernel: `||sum_i r^{-N(i+1)} |F(i)|||_inf`.
/// Whenever the max-row-sum condition holds for the source kernel this
/// quantity is below 1; a violation indicates a defect.
pub fn check_spec_bound(
    sys: &LiftedSystem,
    kernel_decay: Option<&Decay>,
    r: f64,
) -> Result<ConditionCheck> {
    let tau = r.powf(sys.n_period as f64);
    let fd = kernel_decay.map(|d| lifted_decay(sys, d));
    let s = stride_abs_sum(&sys.f, fd.as_ref(), tau, 1, 0)?;
    Ok(ConditionCheck::from_interval(
        inf_norm(&s.value),
        s.tail * sys.f.cols() as f64,
        1.0,
        s.prefix_only,
    ))
}

/// Truncated summability inequality for the resolvent: with
/// `A_T = sum_i sum_{n<=T} r^{-N(n+1)} |Z(Nn+i)|` and `B_hat` the full
/// certified kernel sum, checks `A_T <= r^{-N} I + B_hat A_T` entrywise.
/// `B_hat` enters through its prefix value (a lower bound), so a reported
/// `holds` is conservative.
#[derive(Debug, Clone)]
pub struct SumZBound {
    pub lhs: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
    pub holds: bool,
}

pub fn verify_sumz_bound(
    u: &MatSeq,
    u_decay: Option<&Decay>,
    z: &MatSeq,
    r: f64,
    n_period: usize,
    horizon: usize,
) -> Result<SumZBound> {
    let d = u.dim();
    if n_period * horizon + n_period > z.len() {
        return Err(Error::InsufficientLength(format!(
            "verify_sumz_bound: resolvent has {} terms, horizon {horizon} needs {}",
            z.len(),
            n_period * horizon + n_period
        )));
    }
    let wn = r.powf(-(n_period as f64));
    let mut lhs = DMatrix::zeros(d, d);
    let mut w = wn;
    for n in 0..=horizon {
        for i in 0..n_period {
            let t = z.term(n_period * n + i);
            lhs.zip_apply(&t, |a, b| *a += b.abs() * w);
        }
        w *= wn;
    }
    let bhat = weighted_kernel_sum(u, u_decay, r, n_period)?.value;
    let rhs = DMatrix::identity(d, d) * wn + &bhat * &lhs;
    let holds = lhs
        .iter()
        .zip(rhs.iter())
        .all(|(l, rr)| *l <= *rr + 1e-12 * rr.abs().max(1.0));
    Ok(SumZBound { lhs, rhs, holds })
}
