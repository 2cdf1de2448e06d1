//! Predicted weighted limits: the admissibility limit formula, the
//! resolvent stride limits via the lifted system, the forced-solution
//! limits, empirical limit extrapolation, and the converse pipeline that
//! recovers kernel limits from resolvent limits.

use nalgebra::DMatrix;

use crate::cert::{stride_abs_sum, stride_signed_sum, Decay};
use crate::error::{Error, Result};
use crate::lift::{build_f, check_c3, check_c5, lifted_decay};
use crate::matseq::{inf_norm, spectral_radius, MatSeq};
use crate::volterra::solve_resolvent;
use crate::Verdict;

/// One weighted limit per stride residue: `limits[i]` is the limit of
/// `S(Nn+i)/phi(Nn)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticProfile {
    pub rate: f64,
    pub period: usize,
    pub limits: Vec<DMatrix<f64>>,
}

impl AsymptoticProfile {
    pub fn new(rate: f64, limits: Vec<DMatrix<f64>>) -> Self {
        assert!(!limits.is_empty());
        AsymptoticProfile { rate, period: limits.len(), limits }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Decreasing,
    Flat,
    Increasing,
}

/// Tail extrapolation of one stride subsequence ratio.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub index: usize,
    /// `(n, S(Nn+i)/phi(Nn))` over the trailing window.
    pub samples: Vec<(usize, DMatrix<f64>)>,
    /// Least-squares fit of `value(n) = c + e/n`; this is `c`.
    pub extrapolated: DMatrix<f64>,
    pub residual_trend: Trend,
    /// `max_entries |e| / n_end`.
    pub est_error: f64,
}

/// Samples `S(Nn+i)/phi(Nn)` over the trailing `window` stride indices and
/// extrapolates entrywise with the declared `c + e/n` least-squares rule.
pub fn estimate_limit_empirical(
    s: &MatSeq,
    phi: &crate::weights::WeightFn,
    n_period: usize,
    i: usize,
    window: usize,
) -> Result<ConvergenceReport> {
    if window < 2 {
        return Err(Error::InvalidArgument("estimate_limit_empirical: window must be >= 2".into()));
    }
    if s.len() <= n_period * window + i {
        return Err(Error::InsufficientLength(format!(
            "sequence has {} terms, window {window} at stride {n_period} offset {i} needs {}",
            s.len(),
            n_period * window + i + 1
        )));
    }
    let n_end = (s.len() - 1 - i) / n_period;
    let n_start = (n_end + 1 - window).max(1);
    let mut samples = Vec::with_capacity(n_end - n_start + 1);
    for n in n_start..=n_end {
        let w = crate::weights::eval_weight(phi, n_period * n)?;
        samples.push((n, s.term_owned(n_period * n + i) / w));
    }
    Ok(extrapolate_samples(i, samples))
}

/// Entrywise least-squares fit of `value(n) = c + e/n` over the given
/// samples, with the residual-trend classification used by every
/// convergence report.
pub fn extrapolate_samples(index: usize, samples: Vec<(usize, DMatrix<f64>)>) -> ConvergenceReport {
    assert!(samples.len() >= 2, "extrapolation needs at least two samples");
    let (rows, cols) = (samples[0].1.nrows(), samples[0].1.ncols());
    let m = samples.len() as f64;
    let mut sx = 0.0;
    let mut sxx = 0.0;
    for (n, _) in &samples {
        let x = 1.0 / *n as f64;
        sx += x;
        sxx += x * x;
    }
    let det = m * sxx - sx * sx;
    let mut extrapolated = DMatrix::zeros(rows, cols);
    let mut max_e = 0.0f64;
    for rr in 0..rows {
        for cc in 0..cols {
            let mut sy = 0.0;
            let mut sxy = 0.0;
            for (n, v) in &samples {
                let x = 1.0 / *n as f64;
                sy += v[(rr, cc)];
                sxy += x * v[(rr, cc)];
            }
            extrapolated[(rr, cc)] = (sxx * sy - sx * sxy) / det;
            max_e = max_e.max(((m * sxy - sx * sy) / det).abs());
        }
    }
    let n_end = samples.last().unwrap().0;
    let est_error = max_e / n_end as f64;
    let resid = |v: &DMatrix<f64>| inf_norm(&(v - &extrapolated));
    let first = resid(&samples.first().unwrap().1);
    let last = resid(&samples.last().unwrap().1);
    let scale = inf_norm(&extrapolated).max(1e-30);
    let residual_trend = if first < 1e-14 * scale {
        Trend::Flat
    } else if last <= 0.9 * first {
        Trend::Decreasing
    } else if last >= 1.1 * first {
        Trend::Increasing
    } else {
        Trend::Flat
    };
    ConvergenceReport { index, samples, extrapolated, residual_trend, est_error }
}

/// The admissibility limit formula for `z(n+1) = f(n+1) + (F*z)(n)`:
///
/// `L = (rI - F~(r))^{-1} [L_f + L_F z~(r)]`,
/// `z~(r) = (rI - F~(r))^{-1} [r z0 + f~(r)]`,
///
/// valid when the spectral radius of `sum_i r^{-(i+1)} |F(i)|` is certified
/// below 1. `z0`, `L_f` and the forcing may have any number of columns;
/// the limit is computed columnwise.
#[allow(clippy::too_many_arguments)]
pub fn admissibility_limit(
    f_kernel: &MatSeq,
    kernel_decay: Option<&Decay>,
    forcing: Option<(&MatSeq, Option<&Decay>)>,
    z0: &DMatrix<f64>,
    r: f64,
    l_f: &DMatrix<f64>,
    l_big_f: &DMatrix<f64>,
    tail_tol: f64,
) -> Result<DMatrix<f64>> {
    let dd = f_kernel.dim();
    if z0.nrows() != dd || l_f.nrows() != dd || l_big_f.nrows() != dd || l_big_f.ncols() != dd {
        return Err(Error::DimensionMismatch("admissibility_limit: shape mismatch".into()));
    }
    // spectral condition on the absolute weighted transform
    let g = stride_abs_sum(f_kernel, kernel_decay, r, 1, 0)?;
    require_tail(&g, tail_tol, f_kernel, "kernel transform")?;
    let g_upper = g.value.map(|v| v + g.tail);
    let rho = spectral_radius(&g_upper, 1e-8)?;
    if rho >= 1.0 {
        return Err(Error::PreconditionFailed(format!(
            "spectral radius of the weighted kernel transform is {rho} >= 1"
        )));
    }
    let ft = stride_signed_sum(f_kernel, kernel_decay, r, 1, 0)?;
    let ftil = match forcing {
        Some((f, fd)) => {
            let mut f0 = f.clone();
            let zero = DMatrix::zeros(f.rows(), f.cols());
            f0.set_term(0, &zero); // forcing convention: f(0) := 0
            let s = stride_signed_sum(&f0, fd, r, 1, 0)?;
            require_tail(&s, tail_tol, f, "forcing transform")?;
            s.value
        }
        None => DMatrix::zeros(dd, z0.ncols()),
    };
    let m = DMatrix::identity(dd, dd) * r - ft.value;
    let lu = m.lu();
    let ztil = lu
        .solve(&(z0 * r + ftil))
        .ok_or_else(|| Error::Singular("rI - F~(r) is singular".into()))?;
    lu.solve(&(l_f + l_big_f * ztil))
        .ok_or_else(|| Error::Singular("rI - F~(r) is singular".into()))
}

/// Uncertified sums are accepted only when the last stored term is already
/// below `tail_tol`; certified sums always pass (their point value carries
/// a midpoint tail estimate and the sound bound is reported separately).
fn require_tail<T>(
    s: &crate::cert::Certified<T>,
    tail_tol: f64,
    seq: &MatSeq,
    what: &str,
) -> Result<()> {
    if s.prefix_only {
        let last = inf_norm(&seq.term(seq.len() - 1));
        if last > tail_tol {
            return Err(Error::TailNotCertified(format!(
                "{what}: no decay certificate and last stored term has norm {last} > {tail_tol}"
            )));
        }
    }
    Ok(())
}

/// Predicts the resolvent stride limits `rho_i` from the kernel limits
/// `A_i` through the lifted system: forms `L_Phi F = C lim J(n)/Phi(n)`
/// with entries `A_{N+p-q-1}` (p <= q) and `A_{p-q-1} r^N` (p > q), and
/// applies the admissibility formula at rate `tau = r^N`.
pub fn predict_rho(
    u: &MatSeq,
    decay: Option<&Decay>,
    r: f64,
    n_period: usize,
    a: &AsymptoticProfile,
    tail_tol: f64,
) -> Result<AsymptoticProfile> {
    if a.period != n_period || a.limits.len() != n_period {
        return Err(Error::InvalidArgument(format!(
            "kernel limit profile has period {}, expected {n_period}",
            a.period
        )));
    }
    let c3 = check_c3(u, decay, r, n_period)?;
    if c3.verdict != Verdict::Pass {
        return Err(Error::PreconditionFailed(format!(
            "max-row-sum condition not satisfied: value {} (+tail {}), verdict {:?}",
            c3.value, c3.tail, c3.verdict
        )));
    }
    let d = u.dim();
    let tau = r.powf(n_period as f64);
    let n_max = u.len() / n_period - 2;
    let sys = build_f(u, n_period, n_max)?;
    let fd = decay.map(|dc| lifted_decay(&sys, dc));

    // lim J(n)/Phi(n), then L_Phi F = C * limJ
    let nd = n_period * d;
    let mut lim_j = DMatrix::zeros(nd, nd);
    for p in 1..=n_period {
        for q in 1..=n_period {
            let block = if p <= q {
                a.limits[n_period + p - q - 1].clone()
            } else {
                &a.limits[p - q - 1] * tau
            };
            lim_j.view_mut(((p - 1) * d, (q - 1) * d), (d, d)).copy_from(&block);
        }
    }
    let l_big_f = &sys.c * lim_j;

    // initial lifted state: Z(0)..Z(N-1) stacked
    let z_head = solve_resolvent(u, n_period - 1)?;
    let mut z0 = DMatrix::zeros(nd, d);
    for p in 0..n_period {
        z0.view_mut((p * d, 0), (d, d)).copy_from(&z_head.term(p));
    }

    let l_f = DMatrix::zeros(nd, d);
    let lim = admissibility_limit(&sys.f, fd.as_ref(), None, &z0, tau, &l_f, &l_big_f, tail_tol)?;
    let limits = (0..n_period)
        .map(|p| lim.view((p * d, 0), (d, d)).into_owned())
        .collect();
    Ok(AsymptoticProfile::new(r, limits))
}

/// Forced-solution stride limits: for each residue `i`,
///
/// `lim X(Nn+i)/phi(Nn) = rho_i X(0)
///   + sum_{l<=i} rho_l sum_j F_{i-l}(j) r^{-Nj}
///   + sum_{l<=i} (sum_j Z_l(j) r^{-Nj}) L_{i-l}
///   + sum_{l>i} rho_l sum_j F_{N+i-l}(j) r^{-N(j+1)}
///   + sum_{l>i} (sum_j Z_l(j) r^{-N(j+1)}) L_{N+i-l}`
///
/// with `Z_a(b) = Z(Nb+a)`, `F_a(b) = f(Nb+a)` and `f(0) := 0`.
#[allow(clippy::too_many_arguments)]
pub fn predict_x_limit(
    rho: &AsymptoticProfile,
    z: &MatSeq,
    z_decay: Option<&Decay>,
    f: &MatSeq,
    f_decay: Option<&Decay>,
    x0: &DMatrix<f64>,
    l: &AsymptoticProfile,
    r: f64,
    n_period: usize,
    _tail_tol: f64,
) -> Result<AsymptoticProfile> {
    if rho.period != n_period || l.period != n_period {
        return Err(Error::InvalidArgument("predict_x_limit: profile period mismatch".into()));
    }
    let d = z.dim();
    if f.rows() != d || x0.nrows() != d {
        return Err(Error::DimensionMismatch("predict_x_limit: shape mismatch".into()));
    }
    let mut f0 = f.clone();
    f0.set_term(0, &DMatrix::zeros(f.rows(), f.cols()));
    let wn = r.powf(-(n_period as f64)); // the extra r^{-N} on wrapped terms
    let mut sum_f = Vec::with_capacity(n_period);
    let mut sum_z = Vec::with_capacity(n_period);
    for a in 0..n_period {
        sum_f.push(stride_signed_sum(&f0, f_decay, r, n_period, a)?.value);
        sum_z.push(stride_signed_sum(z, z_decay, r, n_period, a)?.value);
    }
    let mut limits = Vec::with_capacity(n_period);
    for i in 0..n_period {
        let mut acc = &rho.limits[i] * x0;
        for ll in 0..=i {
            acc += &rho.limits[ll] * &sum_f[i - ll];
            acc += &sum_z[ll] * &l.limits[i - ll];
        }
        for ll in (i + 1)..n_period {
            acc += &rho.limits[ll] * &sum_f[n_period + i - ll] * wn;
            acc += &sum_z[ll] * &l.limits[n_period + i - ll] * wn;
        }
        limits.push(acc);
    }
    Ok(AsymptoticProfile::new(rho.rate, limits))
}

/// Converse pipeline: from the resolvent `Z` of a kernel satisfying the
/// sharper converse condition, recovers the kernel stride limits `A_i`.
/// Builds `Y(n) = -Z(n+1)` with limits `-rho_{i+1}` (and `-r^N rho_0` at
/// the wrap), predicts the limits `D_i` of the auxiliary resolvent of `Y`,
/// and evaluates the forced-solution limit formula for
/// `U(n+1) = Z(n+2) + (Y*U)(n)`, whose solution is `U` itself.
pub fn converse_check(
    u: &MatSeq,
    u_decay: Option<&Decay>,
    z: &MatSeq,
    rho: &AsymptoticProfile,
    r: f64,
    n_period: usize,
    tail_tol: f64,
) -> Result<AsymptoticProfile> {
    let c5 = check_c5(u, u_decay, r, n_period)?;
    if c5.verdict != Verdict::Pass {
        return Err(Error::PreconditionFailed(format!(
            "converse condition not satisfied: value {} vs threshold {}, verdict {:?}",
            c5.value, c5.threshold, c5.verdict
        )));
    }
    let tau = r.powf(n_period as f64);
    let y = MatSeq::from_terms(
        &(1..z.len()).map(|n| -z.term_owned(n)).collect::<Vec<_>>(),
    )?;
    let mut ly = Vec::with_capacity(n_period);
    for i in 0..n_period {
        ly.push(if i + 1 < n_period {
            -rho.limits[i + 1].clone()
        } else {
            &rho.limits[0] * -tau
        });
    }
    let ly = AsymptoticProfile::new(r, ly);
    let dlim = predict_rho(&y, None, r, n_period, &ly, tail_tol)?;
    let rr = solve_resolvent(&y, y.len() - 1)?;
    // forcing f(n) = Z(n+1) for n >= 1 (f(0) zeroed downstream)
    let f = MatSeq::from_terms(
        &(0..z.len() - 1).map(|n| z.term_owned(n + 1)).collect::<Vec<_>>(),
    )?;
    let mut lf = Vec::with_capacity(n_period);
    for i in 0..n_period {
        lf.push(if i + 1 < n_period {
            rho.limits[i + 1].clone()
        } else {
            &rho.limits[0] * tau
        });
    }
    let lf = AsymptoticProfile::new(r, lf);
    let x0 = z.term_owned(1); // U(0) = Z(1)
    predict_x_limit(&dlim, &rr, None, &f, None, &x0, &lf, r, n_period, tail_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightFn;

    fn poly_phi() -> WeightFn {
        WeightFn::Poly { r: 1.0, alpha: 2.0, value_at_0: 1.0 }
    }

    #[test]
    fn empirical_exact_weight_is_flat() {
        let phi = poly_phi();
        let s = MatSeq::scalar_from_fn(300, |n| crate::weights::eval_weight(&phi, n).unwrap());
        let rep = estimate_limit_empirical(&s, &phi, 1, 0, 50).unwrap();
        assert!((rep.extrapolated[(0, 0)] - 1.0).abs() < 1e-10);
        assert!(rep.est_error < 1e-10);
        assert_eq!(rep.residual_trend, Trend::Flat);
    }

    #[test]
    fn empirical_one_over_n_correction() {
        let phi = poly_phi();
        let s = MatSeq::scalar_from_fn(500, |n| {
            crate::weights::eval_weight(&phi, n).unwrap() * (1.0 + 1.0 / n.max(1) as f64)
        });
        let rep = estimate_limit_empirical(&s, &phi, 1, 0, 100).unwrap();
        assert!((rep.extrapolated[(0, 0)] - 1.0).abs() < 1e-6, "{rep:?}");
        assert_eq!(rep.residual_trend, Trend::Decreasing);
    }

    #[test]
    fn admissibility_pure_weight_forcing() {
        // F == 0, f(n) = gamma(n): L = (1/r)[L_f + 0] = 1/r
        for r in [1.0f64, 0.5] {
            let fk = MatSeq::zeros(1, 1, 10);
            let phi = WeightFn::Poly { r, alpha: 2.0, value_at_0: 1.0 };
            let f = MatSeq::scalar_from_fn(10, |n| crate::weights::eval_weight(&phi, n).unwrap());
            let z0 = DMatrix::from_element(1, 1, 3.0);
            let lf = DMatrix::from_element(1, 1, 1.0);
            let lbf = DMatrix::zeros(1, 1);
            let d = Decay::Geometric { coeff: 0.0, ratio: 0.5 };
            let fd = Decay::Geometric { coeff: 1.0, ratio: r * 0.9 };
            let lim = admissibility_limit(
                &fk, Some(&d), Some((&f, Some(&fd))), &z0, r, &lf, &lbf, 1e-10,
            )
            .unwrap();
            assert!((lim[(0, 0)] - 1.0 / r).abs() < 1e-12);
        }
    }

    #[test]
    fn admissibility_geometric_kernel_closed_form() {
        // F = (c, 0, ...), L_F = 0, L_f = 1: L = 1/(r - c)
        let (r, c) = (1.0, 0.5);
        let mut fk = MatSeq::zeros(1, 1, 10);
        fk.set(0, 0, 0, c);
        let f = MatSeq::scalar_from_fn(10, |n| if n == 0 { 1.0 } else { (n as f64).powi(-2) });
        let d = Decay::Geometric { coeff: 1e-30, ratio: 0.5 };
        let fd = Decay::Polynomial { coeff: 1.0, alpha: 2.0 };
        let z0 = DMatrix::from_element(1, 1, 1.0);
        let lf = DMatrix::from_element(1, 1, 1.0);
        let lbf = DMatrix::zeros(1, 1);
        let lim =
            admissibility_limit(&fk, Some(&d), Some((&f, Some(&fd))), &z0, r, &lf, &lbf, 1e-10)
                .unwrap();
        assert!((lim[(0, 0)] - 1.0 / (r - c)).abs() < 1e-12);
    }

    #[test]
    fn admissibility_rejects_supercritical_kernel() {
        let mut fk = MatSeq::zeros(1, 1, 10);
        fk.set(0, 0, 0, 1.5);
        let d = Decay::Geometric { coeff: 1e-30, ratio: 0.5 };
        let z0 = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::zeros(1, 1);
        let out = admissibility_limit(&fk, Some(&d), None, &z0, 1.0, &zero, &zero, 1e-10);
        assert!(matches!(out, Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn predict_rho_zero_kernel() {
        let u = MatSeq::zeros(1, 1, 60);
        let a = AsymptoticProfile::new(1.0, vec![DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)]);
        let d = Decay::Geometric { coeff: 0.0, ratio: 0.5 };
        let rho = predict_rho(&u, Some(&d), 1.0, 2, &a, 1e-10).unwrap();
        for m in &rho.limits {
            assert_eq!(m[(0, 0)], 0.0);
        }
    }

    #[test]
    fn predict_rho_matches_simulation_n1() {
        // U = phi (poly r=1, alpha=2) scaled below the stability threshold
        let scale = 0.3;
        let phi = poly_phi();
        let len = 20_001;
        let u = MatSeq::scalar_from_fn(len, |n| {
            scale * crate::weights::eval_weight(&phi, n).unwrap()
        });
        let d = Decay::Polynomial { coeff: scale, alpha: 2.0 };
        let a = AsymptoticProfile::new(1.0, vec![DMatrix::from_element(1, 1, scale)]);
        let rho = predict_rho(&u, Some(&d), 1.0, 1, &a, 1e-10).unwrap();
        let z = solve_resolvent(&u, 10_000).unwrap();
        let rep = estimate_limit_empirical(&z, &phi, 1, 0, 1000).unwrap();
        let (p, e) = (rho.limits[0][(0, 0)], rep.extrapolated[(0, 0)]);
        assert!((p - e).abs() / p.abs() < 0.01, "predicted {p} empirical {e}");
    }

    #[test]
    fn predict_x_limit_unforced_reduces_to_rho() {
        let rho = AsymptoticProfile::new(
            1.0,
            vec![DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 3.0)],
        );
        let z = MatSeq::scalar_from_fn(100, |n| 0.5f64.powi(n as i32));
        let f = MatSeq::zeros(1, 1, 100);
        let l = AsymptoticProfile::new(1.0, vec![DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)]);
        let x0 = DMatrix::from_element(1, 1, 5.0);
        let out =
            predict_x_limit(&rho, &z, None, &f, None, &x0, &l, 1.0, 2, 1e-10).unwrap();
        assert_eq!(out.limits[0][(0, 0)], 10.0);
        assert_eq!(out.limits[1][(0, 0)], 15.0);
    }

    #[test]
    fn converse_round_trip_scalar_n2() {
        let alpha = 2.0;
        let p = [0.22, 0.12];
        let phi0 = 1.0;
        let n_period = 2;
        let h = 3000;
        let len = n_period * h + 3 * n_period;
        let phi = |n: usize| if n == 0 { phi0 } else { (n as f64).powf(-alpha) };
        let u = MatSeq::scalar_from_fn(len + 1, |n| phi(n) * p[n % n_period]);
        let ud = Decay::Polynomial { coeff: 0.22, alpha };
        let z = solve_resolvent(&u, len).unwrap();
        let a = AsymptoticProfile::new(
            1.0,
            vec![DMatrix::from_element(1, 1, p[0]), DMatrix::from_element(1, 1, p[1])],
        );
        let rho = predict_rho(&u, Some(&ud), 1.0, n_period, &a, 1e-10).unwrap();
        let rec = converse_check(&u, Some(&ud), &z, &rho, 1.0, n_period, 1e-2).unwrap();
        for i in 0..n_period {
            let got = rec.limits[i][(0, 0)];
            assert!(
                (got - p[i]).abs() / p[i] < 0.02,
                "i={i}: recovered {got}, true {}",
                p[i]
            );
        }
    }
}
