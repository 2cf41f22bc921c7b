//! Standardised (zero-mean, unit-variance) innovation distributions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stattests::dist::ln_gamma;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Innovation law with its shape parameter, always scaled to unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationDist {
    Normal,
    /// Student-t with `nu > 2` degrees of freedom, rescaled to unit variance.
    StudentT {
        nu: f64,
    },
    /// `(G − k) / √k` with `G ~ Gamma(k, 1)`; right-skewed, bounded below by `−√k`.
    Gamma {
        shape: f64,
    },
}

impl InnovationDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Normal => Ok(()),
            Self::StudentT { nu } if nu > 2.0 && nu.is_finite() => Ok(()),
            Self::StudentT { nu } => Err(Error::invalid(format!("student-t needs nu > 2, got {nu}"))),
            Self::Gamma { shape } if shape > 0.0 && shape.is_finite() => Ok(()),
            Self::Gamma { shape } => Err(Error::invalid(format!("gamma shape must be > 0, got {shape}"))),
        }
    }

    pub fn family(&self) -> DistFamily {
        match self {
            Self::Normal => DistFamily::Normal,
            Self::StudentT { .. } => DistFamily::StudentT,
            Self::Gamma { .. } => DistFamily::Gamma,
        }
    }

    /// Log density of the standardised innovation at `z`.
    pub fn ln_density(&self, z: f64) -> f64 {
        match *self {
            Self::Normal => -0.5 * (LN_2PI + z * z),
            Self::StudentT { nu } => {
                ln_gamma(0.5 * (nu + 1.0))
                    - ln_gamma(0.5 * nu)
                    - 0.5 * (std::f64::consts::PI * (nu - 2.0)).ln()
                    - 0.5 * (nu + 1.0) * (1.0 + z * z / (nu - 2.0)).ln()
            }
            Self::Gamma { shape } => {
                let root = shape.sqrt();
                let x = shape + root * z;
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                (shape - 1.0) * x.ln() - x - ln_gamma(shape) + root.ln()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal => rng.sample(StandardNormal),
            Self::StudentT { nu } => {
                let t: f64 = StudentT::new(nu).expect("validated nu").sample(rng);
                t * ((nu - 2.0) / nu).sqrt()
            }
            Self::Gamma { shape } => {
                let g: f64 = Gamma::new(shape, 1.0).expect("validated shape").sample(rng);
                (g - shape) / shape.sqrt()
            }
        }
    }
}

impl fmt::Display for InnovationDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal => write!(f, "normal"),
            Self::StudentT { nu } => write!(f, "student-t(nu={nu:.3})"),
            Self::Gamma { shape } => write!(f, "gamma(shape={shape:.3})"),
        }
    }
}

/// Distribution family selected for estimation; shape parameters are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistFamily {
    #[default]
    Normal,
    StudentT,
    Gamma,
}

impl FromStr for DistFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(Self::Normal),
            "t" | "student" | "student-t" | "studentt" => Ok(Self::StudentT),
            "gamma" => Ok(Self::Gamma),
            other => Err(Error::invalid(format!("unknown distribution {other:?}"))),
        }
    }
}

impl fmt::Display for DistFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Normal => "normal",
            Self::StudentT => "student-t",
            Self::Gamma => "gamma",
        })
    }
}
