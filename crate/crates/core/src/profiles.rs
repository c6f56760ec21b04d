//! Built-in data profiles: `zero`, `mode:k`, `bump` and `random:seed`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::spectral::{BasisKind, EigenBasis, ModalCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DataProfile {
    Zero,
    /// The k-th eigenfunction, 1-based.
    Mode(usize),
    /// Π_i x_i(L_i - x_i) projected onto the modes.
    Bump,
    /// c_k = ξ_k λ_k^{-decay} with standard normal ξ_k.
    Random(u64),
}

impl FromStr for DataProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unknown data profile {s:?}; expected zero, mode:k, bump or random:seed"));
        match s.trim() {
            "zero" => Ok(Self::Zero),
            "bump" => Ok(Self::Bump),
            other => {
                let (name, arg) = other.split_once(':').ok_or_else(bad)?;
                match name {
                    "mode" => {
                        let k: usize = arg.parse().map_err(|_| bad())?;
                        check(k >= 1, || Error::Validation("mode indices start at 1".into()))?;
                        Ok(Self::Mode(k))
                    }
                    "random" => Ok(Self::Random(arg.parse().map_err(|_| bad())?)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl TryFrom<String> for DataProfile {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DataProfile> for String {
    fn from(p: DataProfile) -> String {
        p.to_string()
    }
}

impl fmt::Display for DataProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Mode(k) => write!(f, "mode:{k}"),
            Self::Bump => write!(f, "bump"),
            Self::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl DataProfile {
    /// Modal coefficients on `basis`, scaled by `amplitude`. `decay` only
    /// affects random profiles.
    pub fn coefficients(&self, basis: &EigenBasis, amplitude: f64, decay: f64) -> Result<ModalCoeffs> {
        let n = basis.mode_count();
        let c = match *self {
            Self::Zero => ModalCoeffs::zeros(n),
            Self::Mode(k) => {
                check(k <= n, || Error::Validation(format!("mode:{k} exceeds the {n} available modes")))?;
                ModalCoeffs::unit(n, k - 1)
            }
            Self::Bump => {
                let lengths = match basis.kind() {
                    BasisKind::Interval { length } | BasisKind::FiniteDifference { length, .. } => vec![*length],
                    BasisKind::Box { lengths, .. } => lengths.clone(),
                };
                let pts = &basis.grid().points;
                let samples: Vec<f64> = pts
                    .rows()
                    .into_iter()
                    .map(|x| x.iter().zip(&lengths).map(|(x, l)| x * (l - x)).product())
                    .collect();
                basis.project(&samples)?
            }
            Self::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                ModalCoeffs(
                    basis
                        .eigenvalues()
                        .iter()
                        .map(|l| {
                            let xi: f64 = rng.sample(StandardNormal);
                            xi * l.powf(-decay)
                        })
                        .collect(),
                )
            }
        };
        Ok(c.scaled(amplitude))
    }
}
