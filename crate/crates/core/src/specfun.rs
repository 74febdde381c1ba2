//! Special functions, the chi-square reference law and seeded random streams.
//!
//! `erf`/`erfc` come from `libm` (the musl implementations, about one ulp),
//! the regularized incomplete gamma function from `statrs`. The scaled
//! complementary error function, the chi-square quantile and the normal
//! quantile are implemented here.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::gamma;

use crate::error::{domain, Result};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// The error function. Odd, saturates to `±1` for `|x| > ~6`.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// The complementary error function `1 - erf(x)`, accurate in the far tail.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Never forms `exp(x²)` for large `x`: beyond `x = 5` a continued fraction
/// in `1/x` is used, which converges in a few dozen terms there.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        // exp(x²) overflows before the subtraction matters.
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 5.0 {
        return erfc(x) * (x * x).exp();
    }
    if x.is_infinite() {
        return 0.0;
    }
    // erfc(x)·exp(x²)·√π = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    FRAC_1_SQRT_PI / tail
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Standard normal quantile.
///
/// Acklam's rational approximation (relative error 1.15e-9) followed by one
/// Halley step against `normal_cdf`, which brings it to full double precision.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (-p).ln_1p()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement; the error term is taken from whichever tail is
    // represented more accurately.
    let e = if x < 0.0 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_cdf(-x)
    };
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

fn check_df(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(domain("chi-square degrees of freedom must be positive"));
    }
    Ok(f64::from(k))
}

/// Chi-square distribution function with `k` degrees of freedom.
pub fn chi2_cdf(x: f64, k: u32) -> Result<f64> {
    let kf = check_df(k)?;
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("chi-square cdf needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if k == 2 {
        return Ok(-(-0.5 * x).exp_m1());
    }
    Ok(gamma::gamma_lr(0.5 * kf, 0.5 * x))
}

/// Upper tail `1 - chi2_cdf(x, k)`, computed directly.
///
/// Negative arguments are allowed and give 1: a corrected statistic can fall
/// below zero and then carries no evidence against the null.
pub fn chi2_sf(x: f64, k: u32) -> Result<f64> {
    let kf = check_df(k)?;
    if x.is_nan() {
        return Err(domain("chi-square survival function of NaN"));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if k == 2 {
        return Ok((-0.5 * x).exp());
    }
    Ok(gamma::gamma_ur(0.5 * kf, 0.5 * x))
}

fn chi2_pdf(x: f64, kf: f64) -> f64 {
    let h = 0.5 * kf;
    ((h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - gamma::ln_gamma(h)).exp()
}

/// Chi-square quantile: the `x` with `chi2_cdf(x, k) = p`.
///
/// Safeguarded Newton iteration on the cdf, started from the
/// Wilson–Hilferty approximation.
pub fn chi2_quantile(p: f64, k: u32) -> Result<f64> {
    let kf = check_df(k)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("chi-square quantile needs 0 < p < 1, got {p}")));
    }
    if k == 2 {
        return Ok(-2.0 * (-p).ln_1p());
    }
    let z = normal_quantile(p);
    let c = 2.0 / (9.0 * kf);
    let mut x = kf * (1.0 - c + z * c.sqrt()).powi(3);
    if !(x > 0.0) || !x.is_finite() {
        x = kf;
    }

    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while chi2_cdf(hi, k)? < p {
        lo = hi;
        hi *= 2.0;
    }
    x = x.clamp(lo, hi);
    // Work with whichever tail keeps relative precision.
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    for _ in 0..200 {
        let f = if upper { target - chi2_sf(x, k)? } else { chi2_cdf(x, k)? - target };
        if f.abs() <= 1e-15 * target {
            break;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = f / chi2_pdf(x, kf);
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1e-300) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// SplitMix64 finalizer, used to derive seeds and cell hashes.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Backed by ChaCha8 with a 64-bit stream selector, so distinct stream ids
/// under one seed are independent keystreams. Normal variates are produced
/// by inversion of one uniform each; simulation output depends on this.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A child stream keyed by this stream's identity and `index`.
    ///
    /// Depends only on `(seed, stream, index)`, never on how many values
    /// have been drawn from `self`.
    pub fn derive(&self, index: u64) -> RngStream {
        RngStream::new(mix64(self.seed ^ mix64(self.stream)), index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by inversion of a uniform on the open interval.
    pub fn normal(&mut self) -> f64 {
        let u = ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        normal_quantile(u)
    }
}
