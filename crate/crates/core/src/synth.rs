//! Deterministic synthetic kernels for randomized verification: scalar
//! kernels `U(n) = phi(n) P(n mod N)` with a polynomial weight envelope,
//! rescaled so the weighted-sum stability condition lands in a chosen
//! band, plus generic random matrix kernels for oracle-equivalence suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nalgebra::DMatrix;

use crate::asymptotics::AsymptoticProfile;
use crate::cert::Decay;
use crate::error::Result;
use crate::lift::check_c3;
use crate::matseq::MatSeq;
use crate::weights::WeightFn;

/// A synthesized scalar kernel together with everything the prediction
/// pipeline needs: weight, decay certificate, rate, period and the exact
/// stride limits.
#[derive(Debug, Clone)]
pub struct SynthKernel {
    pub u: MatSeq,
    pub phi: WeightFn,
    pub decay: Decay,
    pub r: f64,
    pub n_period: usize,
    pub a: AsymptoticProfile,
}

/// Builds `U(n) = phi(n) P(n mod N)` with `phi(n) = r^n n^{-alpha}`
/// (`phi(0) = 1`), `P` positive, rescaled so the max-row-sum condition
/// value lies in `(c3_lo, c3_hi)`. Fully determined by the seed.
pub fn random_kernel(
    seed: u64,
    r: f64,
    n_period: usize,
    len: usize,
    c3_lo: f64,
    c3_hi: f64,
) -> Result<SynthKernel> {
    assert!(n_period >= 1 && len >= 4 * n_period);
    assert!(0.0 < c3_lo && c3_lo < c3_hi && c3_hi < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha: f64 = rng.gen_range(1.5..3.0);
    let mut p: Vec<f64> = (0..n_period).map(|_| rng.gen_range(0.5..1.5)).collect();
    let target = rng.gen_range(c3_lo..c3_hi);
    let phi = WeightFn::Poly { r, alpha, value_at_0: 1.0 };

    let build = |p: &[f64]| -> Result<(MatSeq, Decay)> {
        let mut u = MatSeq::zeros(1, 1, len);
        for n in 0..len {
            u.set(n, 0, 0, crate::weights::eval_weight(&phi, n)? * p[n % n_period]);
        }
        let pmax = p.iter().cloned().fold(0.0, f64::max);
        let decay = if r < 1.0 {
            Decay::GeometricPoly { coeff: pmax, ratio: r, alpha }
        } else {
            Decay::Polynomial { coeff: pmax, alpha }
        };
        Ok((u, decay))
    };

    // the condition value is linear in a global coefficient scale
    let (u0, d0) = build(&p)?;
    let base = check_c3(&u0, Some(&d0), r, n_period)?.value;
    let scale = target / base;
    for v in &mut p {
        *v *= scale;
    }
    let (u, decay) = build(&p)?;
    let limits = (0..n_period)
        .map(|i| DMatrix::from_element(1, 1, p[i] * r.powi(i as i32)))
        .collect();
    Ok(SynthKernel {
        u,
        phi,
        decay,
        r,
        n_period,
        a: AsymptoticProfile::new(r, limits),
    })
}

/// Random dense `d x d` kernel with `1/(n+1)^2` envelope and entries of
/// either sign; for solver-equivalence oracles, not for limit prediction.
pub fn random_matrix_kernel(seed: u64, d: usize, len: usize, scale: f64) -> MatSeq {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = MatSeq::zeros(d, d, len);
    for n in 0..len {
        let env = scale / ((n + 1) * (n + 1)) as f64;
        for i in 0..d {
            for j in 0..d {
                u.set(n, i, j, rng.gen_range(-1.0..1.0) * env);
            }
        }
    }
    u
}
