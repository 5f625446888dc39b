//! Philox4x32-10 counter-based generator and Gaussian transforms.
//!
//! A draw is a pure function of `(key, counter)`, so any sample can be
//! regenerated independently of the others.

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32 block with 10 rounds.
#[inline]
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// How standard normals are produced from uniforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GaussianMethod {
    #[default]
    BoxMuller,
    InverseCdf,
}

impl GaussianMethod {
    pub fn name(self) -> &'static str {
        match self {
            GaussianMethod::BoxMuller => "box-muller",
            GaussianMethod::InverseCdf => "inverse-cdf",
        }
    }
}

/// Uniform in the open interval `(0, 1)` from 64 random bits.
#[inline]
fn open_unit(hi: u32, lo: u32) -> f64 {
    let x = (u64::from(hi) << 32) | u64::from(lo);
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Stream of standard normals for one sample. The Philox counter is
/// `(block_lo, block_hi, sample_lo, sample_hi)` and the key is the seed, so
/// streams of different samples never overlap.
pub struct NormalStream {
    key: [u32; 2],
    sample: u64,
    block: u64,
    buf: [f64; 2],
    pos: usize,
    method: GaussianMethod,
}

impl NormalStream {
    pub fn new(seed: u64, sample: u64, method: GaussianMethod) -> Self {
        NormalStream { key: [seed as u32, (seed >> 32) as u32], sample, block: 0, buf: [0.0; 2], pos: 2, method }
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if self.pos == 2 {
            let ctr = [self.block as u32, (self.block >> 32) as u32, self.sample as u32, (self.sample >> 32) as u32];
            let r = philox4x32_10(ctr, self.key);
            self.block += 1;
            let u1 = open_unit(r[0], r[1]);
            let u2 = open_unit(r[2], r[3]);
            self.buf = match self.method {
                GaussianMethod::BoxMuller => {
                    let rad = libm::sqrt(-2.0 * libm::log(u1));
                    let (s, c) = libm::sincos(core::f64::consts::TAU * u2);
                    [rad * c, rad * s]
                }
                GaussianMethod::InverseCdf => [inverse_normal_cdf(u1), inverse_normal_cdf(u2)],
            };
            self.pos = 0;
        }
        let z = self.buf[self.pos];
        self.pos += 1;
        z
    }
}

/// Standard normal quantile: Acklam's rational approximation followed by
/// one Halley step against `erfc`, accurate to about 1e-15.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] =
        [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(core::f64::consts::TAU) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}
