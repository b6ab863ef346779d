use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

/// Distribution of one exogenous noise term.
///
/// Gamma is parameterised by `(shape, scale)`, so `Gamma { shape: 10, scale: 3.5 }`
/// has mean 35 and variance 122.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum NoiseSpec {
    Normal { mean: f64, stddev: f64 },
    Bernoulli { p: f64 },
    Gamma { shape: f64, scale: f64 },
    Degenerate { value: f64 },
}

impl NoiseSpec {
    pub fn standard_normal() -> Self {
        NoiseSpec::Normal { mean: 0.0, stddev: 1.0 }
    }

    pub fn normal(stddev: f64) -> Self {
        NoiseSpec::Normal { mean: 0.0, stddev }
    }

    /// Returns a description of the first violated parameter constraint.
    pub fn check(&self) -> Result<(), String> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite, got {v}"))
            }
        };
        match *self {
            NoiseSpec::Normal { mean, stddev } => {
                finite("mean", mean)?;
                finite("stddev", stddev)?;
                if stddev <= 0.0 {
                    return Err(format!("stddev must be > 0, got {stddev}"));
                }
            }
            NoiseSpec::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("p must lie in [0, 1], got {p}"));
                }
            }
            NoiseSpec::Gamma { shape, scale } => {
                finite("shape", shape)?;
                finite("scale", scale)?;
                if shape <= 0.0 {
                    return Err(format!("shape must be > 0, got {shape}"));
                }
                if scale <= 0.0 {
                    return Err(format!("scale must be > 0, got {scale}"));
                }
            }
            NoiseSpec::Degenerate { value } => finite("value", value)?,
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NoiseSpec::Normal { mean, .. } => mean,
            NoiseSpec::Bernoulli { p } => p,
            NoiseSpec::Gamma { shape, scale } => shape * scale,
            NoiseSpec::Degenerate { value } => value,
        }
    }

    /// The proper variance contributed by this noise term.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::Normal { stddev, .. } => stddev * stddev,
            NoiseSpec::Bernoulli { p } => p * (1.0 - p),
            NoiseSpec::Gamma { shape, scale } => shape * scale * scale,
            NoiseSpec::Degenerate { .. } => 0.0,
        }
    }

    /// Builds a sampler. Parameters must already have passed [`NoiseSpec::check`].
    pub(crate) fn sampler(&self) -> NoiseSampler {
        match *self {
            NoiseSpec::Normal { mean, stddev } => {
                NoiseSampler::Normal(Normal::new(mean, stddev).expect("checked normal parameters"))
            }
            NoiseSpec::Bernoulli { p } => {
                NoiseSampler::Bernoulli(Bernoulli::new(p).expect("checked bernoulli parameter"))
            }
            NoiseSpec::Gamma { shape, scale } => {
                NoiseSampler::Gamma(Gamma::new(shape, scale).expect("checked gamma parameters"))
            }
            NoiseSpec::Degenerate { value } => NoiseSampler::Constant(value),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum NoiseSampler {
    Normal(Normal<f64>),
    Bernoulli(Bernoulli),
    Gamma(Gamma<f64>),
    Constant(f64),
}

impl NoiseSampler {
    #[inline]
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Normal(d) => d.sample(rng),
            NoiseSampler::Bernoulli(d) => {
                if d.sample(rng) {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseSampler::Gamma(d) => d.sample(rng),
            NoiseSampler::Constant(v) => *v,
        }
    }
}
