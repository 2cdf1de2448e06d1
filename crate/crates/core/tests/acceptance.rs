//! End-to-end acceptance suite. Each numbered check prints a single
//! `acceptance NN (<name>): pass` line (visible with `--nocapture`) and
//! fails the test otherwise.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use voltasym::arch::{autocov_ratio, closed_forms, delta_sequence, ArchModel, BFamily};
use voltasym::asymptotics::estimate_limit_empirical;
use voltasym::asymptotics::{converse_check, predict_rho};
use voltasym::lift::{build_b, build_f, check_c3, check_c5, check_spec_bound, toeplitz_inverse, verify_sumz_bound};
use voltasym::matseq::convolve;
use voltasym::synth::{random_kernel, random_matrix_kernel};
use voltasym::volterra::{
    neumann_representation, solve_forced, solve_resolvent, variation_of_constants,
    VolterraProblem,
};
use voltasym::weights::{check_w_membership, WeightFn};
use voltasym::{MatSeq, Verdict};

const TAIL_TOL: f64 = 1e-8;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    println!("acceptance {id:02} ({name}): {} {detail}", if ok { "pass" } else { "FAIL" });
    assert!(ok, "acceptance {id:02} ({name}) failed: {detail}");
}

fn rel(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs()
}

fn reference_model() -> ArchModel {
    ArchModel {
        intercept: 1.0,
        b: BFamily::TwoPeriodicPoly { a_odd: 0.5, a_even: 0.25, alpha: 2.0 },
        lambda1: 1.0,
        lambda2: None,
        variance: None,
    }
}

#[test]
fn closed_form_constants() {
    let t0 = Instant::now();
    let cf = closed_forms(&reference_model()).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let checks = [
        (cf.s0, pi2 / 16.0),
        (cf.s1, pi2 / 96.0),
        (cf.lambda_cap, 5.55073),
        (cf.t0, 6.14391),
        (cf.t1, 6.58015),
        (cf.d0, 4.71699),
        (cf.d1, 4.82605),
    ];
    let worst = checks.iter().map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max);
    report(
        1,
        "closed-form stride constants",
        worst < 1e-5 && elapsed < 0.1,
        &format!("max rel err {worst:.2e}, {elapsed:.4}s"),
    );
}

#[test]
fn closed_form_autocovariance_ratios() {
    let t0 = Instant::now();
    let cf = closed_forms(&reference_model()).unwrap();
    let elapsed = t0.elapsed().as_secs_f64();
    let worst = rel(cf.ratio_even, 67.9375)
        .max(rel(cf.ratio_odd, 34.1128))
        .max(rel(cf.tau0, 22.5498));
    report(
        2,
        "closed-form autocovariance ratios",
        worst < 1e-5 && elapsed < 0.1,
        &format!(
            "even {:.5}, odd {:.5}, tau0 {:.5}, {elapsed:.4}s",
            cf.ratio_even, cf.ratio_odd, cf.tau0
        ),
    );
}

#[test]
fn delta_stride_limits_empirical() {
    let t0 = Instant::now();
    let m = reference_model();
    let cf = closed_forms(&m).unwrap();
    let delta = delta_sequence(&m, 10_000).unwrap();
    let phi = WeightFn::Poly { r: 1.0, alpha: 2.0, value_at_0: 1.0 };
    let even = estimate_limit_empirical(&delta, &phi, 2, 0, 256).unwrap();
    let odd = estimate_limit_empirical(&delta, &phi, 2, 1, 256).unwrap();
    let e0 = rel(even.extrapolated[(0, 0)], cf.d0);
    let e1 = rel(odd.extrapolated[(0, 0)], cf.d1);
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        3,
        "delta stride limits vs simulation",
        e0 < 0.01 && e1 < 0.01 && elapsed < 10.0,
        &format!("rel err even {e0:.2e}, odd {e1:.2e}, {elapsed:.2}s"),
    );
}

#[test]
fn autocovariance_ratios_empirical() {
    let t0 = Instant::now();
    let m = reference_model();
    let cf = closed_forms(&m).unwrap();
    let ratios = autocov_ratio(&m, 512, 10_000).unwrap();
    let ev = ratios.even.extrapolated[(0, 0)];
    let od = ratios.odd.extrapolated[(0, 0)];
    let e0 = rel(ev, cf.ratio_even);
    let e1 = rel(od, cf.ratio_odd);
    let sep = (ev - od).abs();
    let err = ratios.even.est_error + ratios.odd.est_error;
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        4,
        "autocovariance-to-coefficient ratios",
        e0 < 0.03 && e1 < 0.03 && sep > 5.0 * err && elapsed < 60.0,
        &format!(
            "even {ev:.4} (err {e0:.2e}), odd {od:.4} (err {e1:.2e}), separation {sep:.2} vs 5x est err {:.2e}, {elapsed:.2}s",
            5.0 * err
        ),
    );
}

fn max_dev(a: &MatSeq, b: &MatSeq) -> f64 {
    (0..a.len().min(b.len()))
        .map(|n| (a.term_owned(n) - b.term_owned(n)).abs().max())
        .fold(0.0, f64::max)
}

#[test]
fn oracle_equivalence_suite() {
    // (a) block-Toeplitz inverse vs dense LU inverse
    let mut worst_inv = 0.0f64;
    for s in 0..100u64 {
        let d = (s % 4 + 1) as usize;
        let n = ((s * 7) % (64 / d as u64)) as usize + 1;
        let u = random_matrix_kernel(s, d, n.max(1), 0.8);
        let b = build_b(&u, n).unwrap();
        let c = toeplitz_inverse(&b, n, d).unwrap();
        let dense = (DMatrix::identity(n * d, n * d) - &b).try_inverse().unwrap();
        worst_inv = worst_inv.max((c - dense).abs().max());
    }

    // (b)+(c) solver equivalences and resolvent commutation
    let mut worst_solver = 0.0f64;
    let mut worst_comm = 0.0f64;
    for s in 0..100u64 {
        let d = (s % 3 + 1) as usize;
        let len = 24;
        let u = random_matrix_kernel(s + 1000, d, len, 0.5 / d as f64);
        let z = solve_resolvent(&u, len - 1).unwrap();
        let zn = neumann_representation(&u, len - 1).unwrap();
        worst_solver = worst_solver.max(max_dev(&z, &zn));

        let fsrc = random_matrix_kernel(s + 2000, d, len, 1.0);
        let mut f = MatSeq::zeros(d, 1, len);
        for n in 0..len {
            for i in 0..d {
                f.set(n, i, 0, fsrc.get(n, i, 0));
            }
        }
        let x0 = DVector::from_fn(d, |i, _| fsrc.get(0, 0, i));
        let p = VolterraProblem::new(u.clone(), f.clone(), x0.clone()).unwrap();
        let x = solve_forced(&p, len - 1).unwrap();
        let y = variation_of_constants(&z, &f, &x0).unwrap();
        worst_solver = worst_solver.max(max_dev(&x, &y));

        let uz = convolve(&u, &z).unwrap();
        let zu = convolve(&z, &u).unwrap();
        for n in 0..len - 1 {
            let znext = z.term_owned(n + 1);
            worst_comm = worst_comm.max((uz.term_owned(n) - &znext).abs().max());
            worst_comm = worst_comm.max((zu.term_owned(n) - &znext).abs().max());
        }
    }

    // (d) lifted identity: stacked resolvent satisfies the lifted recursion
    let mut worst_lift = 0.0f64;
    for (s, n_period) in [(1u64, 2usize), (2, 3), (3, 2), (4, 3)] {
        let k = random_kernel(s, 1.0, n_period, 40 * n_period, 0.2, 0.9).unwrap();
        let n_max = k.u.len() / n_period - 2;
        let sys = build_f(&k.u, n_period, n_max).unwrap();
        let z = solve_resolvent(&k.u, n_period * (n_max + 1) - 1).unwrap();
        let d = 1;
        let zhat = |n: usize| -> DMatrix<f64> {
            let mut m = DMatrix::zeros(n_period * d, d);
            for p in 0..n_period {
                m.view_mut((p * d, 0), (d, d)).copy_from(&z.term(n_period * n + p));
            }
            m
        };
        for n in 1..=n_max {
            let mut acc = DMatrix::zeros(n_period * d, d);
            for j in 0..n {
                acc += sys.f.term_owned(j) * zhat(n - 1 - j);
            }
            worst_lift = worst_lift.max((acc - zhat(n)).abs().max());
        }
    }

    let ok = worst_inv < 1e-12 && worst_solver < 1e-12 && worst_comm < 1e-12 && worst_lift < 1e-12;
    report(
        5,
        "oracle equivalence suite",
        ok,
        &format!(
            "toeplitz {worst_inv:.2e}, solvers {worst_solver:.2e}, commutation {worst_comm:.2e}, lifting {worst_lift:.2e}"
        ),
    );
}

#[test]
fn randomized_limit_prediction_population() {
    let t0 = Instant::now();
    let horizon = 5000usize;
    let mut worst_pred = 0.0f64;
    let mut spec_bound_ok = 0usize;
    let mut sumz_ok = 0usize;
    let total = 50usize;
    for s in 0..total as u64 {
        let n_period = (s % 3 + 1) as usize;
        let len = n_period * (horizon + 3);
        let k = random_kernel(s, 1.0, n_period, len, 0.2, 0.9).unwrap();
        let z = solve_resolvent(&k.u, len - 1).unwrap();

        // predicted vs simulated resolvent stride limits
        let rho = predict_rho(&k.u, Some(&k.decay), k.r, n_period, &k.a, TAIL_TOL).unwrap();
        for i in 0..n_period {
            let emp =
                estimate_limit_empirical(&z, &k.phi, n_period, i, 64).unwrap().extrapolated[(0, 0)];
            let pred = rho.limits[i][(0, 0)];
            let err = if pred.abs() < 1e-6 { (emp - pred).abs() / 1e-4 * 0.02 } else { rel(emp, pred) };
            worst_pred = worst_pred.max(err);
        }

        // lifted-kernel weighted bound stays below one whenever the
        // max-row-sum condition holds
        let c3 = check_c3(&k.u, Some(&k.decay), k.r, n_period).unwrap();
        let n_max = len / n_period - 2;
        let sys = build_f(&k.u, n_period, n_max).unwrap();
        let sb = check_spec_bound(&sys, Some(&k.decay), k.r).unwrap();
        if c3.verdict != Verdict::Pass || (sb.value + sb.tail < 1.0) {
            spec_bound_ok += 1;
        }

        // truncated resolvent-sum inequality at T = 2000
        let bound = verify_sumz_bound(&k.u, Some(&k.decay), &z, k.r, n_period, 2000).unwrap();
        if bound.holds {
            sumz_ok += 1;
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        6,
        "predicted vs simulated stride limits",
        worst_pred < 0.02 && elapsed < 300.0,
        &format!("{total} kernels, worst rel err {worst_pred:.2e}, {elapsed:.1}s"),
    );
    report(
        7,
        "lifted weighted bound below one",
        spec_bound_ok == total,
        &format!("{spec_bound_ok}/{total}"),
    );
    report(
        8,
        "truncated resolvent-sum inequality",
        sumz_ok == total,
        &format!("{sumz_ok}/{total}"),
    );
}

#[test]
fn converse_recovers_kernel_limits() {
    let horizon = 3000usize;
    let total = 20usize;
    let mut worst = 0.0f64;
    let mut used = 0usize;
    let mut seed = 1000u64;
    while used < total {
        let n_period = (seed % 3 + 1) as usize;
        let len = n_period * (horizon + 3);
        let k = random_kernel(seed, 1.0, n_period, len, 0.2, 0.42).unwrap();
        seed += 1;
        // sharper small-norm condition required by the converse direction
        let c5 = check_c5(&k.u, Some(&k.decay), k.r, n_period).unwrap();
        if c5.verdict != Verdict::Pass {
            continue;
        }
        used += 1;
        let z = solve_resolvent(&k.u, len - 1).unwrap();
        let rho = predict_rho(&k.u, Some(&k.decay), k.r, n_period, &k.a, TAIL_TOL).unwrap();
        // the converse pipeline works on stored prefixes of Z without a
        // closed-form certificate, so the truncation gate is looser here
        let rec = converse_check(&k.u, Some(&k.decay), &z, &rho, k.r, n_period, 1e-6).unwrap();
        for i in 0..n_period {
            worst = worst.max(rel(rec.limits[i][(0, 0)], k.a.limits[i][(0, 0)]));
        }
    }
    report(
        9,
        "converse round trip",
        worst < 0.02,
        &format!("{used} kernels, worst rel err {worst:.2e}"),
    );
}

#[test]
fn weight_class_membership_pattern() {
    let h = 2048;
    let mm = 64;
    let cases: [(&str, WeightFn, f64, Verdict); 5] = [
        (
            "poly r=0.9 alpha=2",
            WeightFn::Poly { r: 0.9, alpha: 2.0, value_at_0: 1.0 },
            0.9,
            Verdict::Pass,
        ),
        (
            "poly-stretch r=0.9 alpha=1 beta=0.5",
            WeightFn::PolyStretch { r: 0.9, alpha: 1.0, beta: 0.5, value_at_0: 1.0 },
            0.9,
            Verdict::Pass,
        ),
        (
            "log-exp r=0.9",
            WeightFn::LogExp { r: 0.9, value_at_0: 1.0, value_at_1: 0.9 },
            0.9,
            Verdict::Pass,
        ),
        (
            "pure geometric table",
            WeightFn::Table { r: 0.9, values: (0..h + 1).map(|n| 0.9f64.powi(n as i32)).collect() },
            0.9,
            Verdict::Fail,
        ),
        (
            "poly alpha=1",
            WeightFn::Poly { r: 1.0, alpha: 1.0, value_at_0: 1.0 },
            1.0,
            Verdict::Fail,
        ),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, w, r, expect) in &cases {
        let rep = check_w_membership(w, *r, h, mm).unwrap();
        let hit = rep.verdict == *expect;
        ok &= hit;
        detail.push_str(&format!("{name}: {:?} (expected {:?}); ", rep.verdict, expect));
    }
    report(10, "weight-class membership pattern", ok, &detail);
}
