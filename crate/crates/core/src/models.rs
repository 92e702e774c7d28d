//! Analytic continuous-time models: homogeneous Poisson and renewal processes.

use rand::Rng;
use rand_distr::{Distribution, Exp, Uniform, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{InterArrival, SequenceModel};

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Model(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Homogeneous Poisson process: exponential gaps with fixed rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Poisson {
    rate: f64,
}

impl Poisson {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self {
            rate: positive("rate", rate)?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExponentialGap {
    rate: f64,
}

impl InterArrival for ExponentialGap {
    fn pdf(&self, gap: f64) -> f64 {
        if gap < 0.0 {
            0.0
        } else {
            self.rate * (-self.rate * gap).exp()
        }
    }

    fn cdf(&self, gap: f64) -> f64 {
        if gap <= 0.0 {
            0.0
        } else {
            -(-self.rate * gap).exp_m1()
        }
    }

    fn survival(&self, gap: f64) -> f64 {
        (-self.rate * gap.max(0.0)).exp()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Exp::new(self.rate).expect("validated rate").sample(rng)
    }
}

impl SequenceModel for Poisson {
    type Gap = ExponentialGap;

    fn next_gap(&self, _history: &[f64]) -> Result<ExponentialGap> {
        Ok(ExponentialGap { rate: self.rate })
    }
}

/// Renewal process with Weibull(shape, scale) gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullRenewal {
    shape: f64,
    scale: f64,
}

impl WeibullRenewal {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            shape: positive("shape", shape)?,
            scale: positive("scale", scale)?,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WeibullGap {
    shape: f64,
    scale: f64,
}

impl InterArrival for WeibullGap {
    fn pdf(&self, gap: f64) -> f64 {
        if gap <= 0.0 {
            return 0.0;
        }
        let r = gap / self.scale;
        (self.shape / self.scale) * r.powf(self.shape - 1.0) * (-r.powf(self.shape)).exp()
    }

    fn cdf(&self, gap: f64) -> f64 {
        if gap <= 0.0 {
            0.0
        } else {
            -(-(gap / self.scale).powf(self.shape)).exp_m1()
        }
    }

    fn survival(&self, gap: f64) -> f64 {
        (-(gap.max(0.0) / self.scale).powf(self.shape)).exp()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Weibull::new(self.scale, self.shape)
            .expect("validated parameters")
            .sample(rng)
    }
}

impl SequenceModel for WeibullRenewal {
    type Gap = WeibullGap;

    fn next_gap(&self, _history: &[f64]) -> Result<WeibullGap> {
        Ok(WeibullGap {
            shape: self.shape,
            scale: self.scale,
        })
    }
}

/// Renewal process with gaps uniform on `[lo, hi)`.
///
/// A narrow support makes most clipped arrivals at a required time impossible,
/// which is useful for stressing ensemble survival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRenewal {
    lo: f64,
    hi: f64,
}

impl UniformRenewal {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::Model(format!(
                "uniform gaps need 0 <= lo < hi, got [{lo}, {hi})"
            )));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformGap {
    lo: f64,
    hi: f64,
}

impl InterArrival for UniformGap {
    fn pdf(&self, gap: f64) -> f64 {
        if gap >= self.lo && gap < self.hi && gap > 0.0 {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }

    fn cdf(&self, gap: f64) -> f64 {
        ((gap - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn survival(&self, gap: f64) -> f64 {
        ((self.hi - gap) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let d = Uniform::new(self.lo, self.hi)
                .expect("validated bounds")
                .sample(rng);
            if d > 0.0 {
                return d;
            }
        }
    }
}

impl SequenceModel for UniformRenewal {
    type Gap = UniformGap;

    fn next_gap(&self, _history: &[f64]) -> Result<UniformGap> {
        Ok(UniformGap {
            lo: self.lo,
            hi: self.hi,
        })
    }
}
