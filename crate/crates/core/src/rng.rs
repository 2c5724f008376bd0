//! Reproducible random streams and the one-sided stable sampler.
//!
//! A [`RandomStream`] is a ChaCha8 block-counter generator keyed by
//! `(seed, stream_id)`. ChaCha is counter based, so a path can be given its
//! own stream by index and replayed without touching any other stream.
//!
//! Positive stable variates use the Kanter representation: with
//! `U ~ Uniform(0, pi)` and `E ~ Exp(1)` independent,
//!
//! ```text
//! S = sin(aU) / sin(U)^(1/a) * (sin((1-a)U) / E)^((1-a)/a)
//! ```
//!
//! has `E[exp(-l S)] = exp(-l^a)`. Everything is evaluated in log space so a
//! scaled increment `dt^(1/a) S` only overflows when the result itself is not
//! representable.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{domain, Error, Result};

/// Seeded, splittable random stream.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Reposition the stream at an absolute word offset.
    pub fn seek(&mut self, counter: u128) {
        self.rng.set_word_pos(counter);
    }

    /// Uniform variate on the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    #[inline]
    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    #[inline]
    pub fn exponential(&mut self) -> f64 {
        self.rng.sample(Exp1)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Standard normal variate.
#[inline]
pub fn sample_gaussian(stream: &mut RandomStream) -> f64 {
    stream.gaussian()
}

/// One increment of a stable subordinator over an internal step of length `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableIncrement {
    pub value: f64,
    pub order: f64,
    pub dt: f64,
}

/// Precomputed constants for sampling `dt^(1/alpha) * S_alpha`.
#[derive(Clone, Copy, Debug)]
pub struct StableLaw {
    alpha: f64,
    dt: f64,
    inv_alpha: f64,
    tail_exp: f64,
    log_scale: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, dt: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("dt must be positive and finite, got {dt}"));
        }
        Ok(Self::new_unchecked(alpha, dt))
    }

    #[inline]
    pub(crate) fn new_unchecked(alpha: f64, dt: f64) -> Self {
        let inv_alpha = 1.0 / alpha;
        Self {
            alpha,
            dt,
            inv_alpha,
            tail_exp: (1.0 - alpha) * inv_alpha,
            log_scale: dt.ln() * inv_alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Log of a unit-scale positive stable variate.
    #[inline]
    pub fn sample_log_unit(&self, stream: &mut RandomStream) -> f64 {
        let u = PI * stream.uniform_open();
        let e = stream.exponential();
        let a = self.alpha;
        (a * u).sin().ln() - self.inv_alpha * u.sin().ln()
            + self.tail_exp * (((1.0 - a) * u).sin().ln() - e.ln())
    }

    /// Scaled increment; `+inf` when the value is not representable.
    #[inline]
    pub fn sample_raw(&self, stream: &mut RandomStream) -> f64 {
        (self.log_scale + self.sample_log_unit(stream)).exp()
    }

    pub fn sample(&self, stream: &mut RandomStream) -> Result<StableIncrement> {
        let value = self.sample_raw(stream);
        if !value.is_finite() {
            return Err(Error::Overflow {
                alpha: self.alpha,
                dt: self.dt,
            });
        }
        Ok(StableIncrement {
            value,
            order: self.alpha,
            dt: self.dt,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("stable index must lie in (0,1), got {alpha}"))
    }
}

/// Positive stable variate with Laplace transform `exp(-l^alpha)`.
pub fn sample_positive_stable(alpha: f64, stream: &mut RandomStream) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(StableLaw::new_unchecked(alpha, 1.0)
        .sample_log_unit(stream)
        .exp())
}

/// Increment `dt^(1/alpha) S` with `E[exp(-l value)] = exp(-dt l^alpha)`.
pub fn sample_stable_increment(
    alpha: f64,
    dt: f64,
    stream: &mut RandomStream,
) -> Result<StableIncrement> {
    StableLaw::new(alpha, dt)?.sample(stream)
}

/// Mean of `exp(-l x)` over samples and its standard error.
pub fn laplace_estimate(samples: &[f64], lambda: f64) -> (f64, f64) {
    let n = samples.len() as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for &x in samples {
        let v = (-lambda * x).exp();
        s += v;
        s2 += v * v;
    }
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}
