use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// How the control is formed from the filter output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Policy {
    /// `u = −G⁻¹Bᵀ(K x̂ + α̂)`.
    Optimal,
    /// The feedback part uses `γ·K`; the correction is kept.
    GainScaled {
        gamma: f64,
    },
    /// Separation-principle control `−G⁻¹BᵀK x̂` alone.
    DropAlpha,
    Zero,
    /// `u = −L x̂` with a fixed `m × n` gain.
    Linear {
        gain: DMatrix<f64>,
    },
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Optimal => write!(f, "optimal"),
            Policy::GainScaled { gamma } => write!(f, "gain-scaled:{gamma}"),
            Policy::DropAlpha => write!(f, "drop-alpha"),
            Policy::Zero => write!(f, "zero"),
            Policy::Linear { gain } => {
                let vals: Vec<String> = gain.iter().map(|v| v.to_string()).collect();
                write!(f, "linear:{}", vals.join(","))
            }
        }
    }
}

/// Parses `optimal`, `gain-scaled:<γ>`, `drop-alpha`, `zero` and `linear:<l1,...,ln>` (a `1 × n` gain).
impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (head, arg) = s.split_once(':').map_or((s, None), |(h, a)| (h, Some(a)));
        let bad = || Error::Config(format!("unknown policy `{s}`"));
        match (head, arg) {
            ("optimal", None) => Ok(Policy::Optimal),
            ("drop-alpha", None) => Ok(Policy::DropAlpha),
            ("zero", None) => Ok(Policy::Zero),
            ("gain-scaled", Some(g)) => Ok(Policy::GainScaled {
                gamma: g.parse().map_err(|_| bad())?,
            }),
            ("linear", Some(vals)) => {
                let v: Vec<f64> = vals
                    .split(',')
                    .map(|x| x.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad())?;
                Ok(Policy::Linear {
                    gain: DMatrix::from_row_slice(1, v.len(), &v),
                })
            }
            _ => Err(bad()),
        }
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Policy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}
