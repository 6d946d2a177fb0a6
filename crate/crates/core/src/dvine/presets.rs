//! Named data-generating processes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ConditionalEdge, DVineSpec, ParamMap};
use crate::bicop::{BivariateCopula, Family};
use crate::error::{PvcError, Result};

/// Tau ≈ 0.5 Frank parameter used by the Frank studies.
pub const FRANK_THETA: f64 = 5.74;
/// Sigmoid shift that makes the Sarmanov parameter run from -0.2 to √7/5.
pub const SIGMOID_SHIFT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Preset {
    /// `(AsymFGM(γ), Π, FGM(1 - 2u₂))`.
    Ex1 { gamma: f64 },
    /// Five-dimensional vine: independence everywhere except the second
    /// tree, `FGM(intercept + slope·u_mid)`.
    Fgm5 { intercept: f64, slope: f64 },
    /// `(Π, Π, FGM(intercept + slope·u₂))`.
    Ex3 { intercept: f64, slope: f64 },
    /// Simplified `(Frank θ, Frank θ, partial Frank θ)`.
    Ex4 { theta: f64 },
    /// Trivariate Frank copula as a D-vine `(Frank θ, Frank θ, AMH(1-e^{-θu₂}))`.
    Frank3 { theta: f64 },
    /// `(BB1(θ,δ), BB1(θ,δ), Sarmanov(g(u₂)))` with the sigmoid `g`.
    Sarmanov3 { theta: f64, delta: f64, inner_shift: f64 },
}

impl Preset {
    pub fn build(&self) -> Result<DVineSpec> {
        match *self {
            Preset::Ex1 { gamma } => ex1(gamma),
            Preset::Fgm5 { intercept, slope } => fgm5(intercept, slope),
            Preset::Ex3 { intercept, slope } => ex3(intercept, slope),
            Preset::Ex4 { theta } => ex4(theta),
            Preset::Frank3 { theta } => frank3(theta),
            Preset::Sarmanov3 { theta, delta, inner_shift } => sarmanov3(theta, delta, inner_shift),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Ex1 { .. } => "ex1",
            Preset::Fgm5 { .. } => "fgm5",
            Preset::Ex3 { .. } => "ex3",
            Preset::Ex4 { .. } => "ex4",
            Preset::Frank3 { .. } => "frank3",
            Preset::Sarmanov3 { .. } => "sarmanov3",
        }
    }

    fn args(&self) -> Vec<f64> {
        match *self {
            Preset::Ex1 { gamma } => vec![gamma],
            Preset::Fgm5 { intercept, slope } | Preset::Ex3 { intercept, slope } => vec![intercept, slope],
            Preset::Ex4 { theta } | Preset::Frank3 { theta } => vec![theta],
            Preset::Sarmanov3 { theta, delta, inner_shift } => vec![theta, delta, inner_shift],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args().iter().map(|a| format!("{a}")).collect();
        write!(f, "{}({})", self.name(), args.join(","))
    }
}

/// Parses `name` or `name(a, b, ...)`; omitted trailing arguments take
/// their defaults.
impl FromStr for Preset {
    type Err = PvcError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(k) if s.ends_with(')') => {
                let inner = &s[k + 1..s.len() - 1];
                let args = inner
                    .split(',')
                    .map(str::trim)
                    .filter(|a| !a.is_empty())
                    .map(|a| a.parse::<f64>().map_err(|_| PvcError::Config(format!("bad preset argument {a:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                (&s[..k], args)
            }
            Some(_) => return Err(PvcError::Config(format!("malformed preset {s:?}"))),
            None => (s, vec![]),
        };
        let arg = |k: usize, default: f64| args.get(k).copied().unwrap_or(default);
        let max_args = |m: usize| {
            if args.len() > m {
                Err(PvcError::Config(format!("preset {name} takes at most {m} argument(s)")))
            } else {
                Ok(())
            }
        };
        let p = match name {
            "ex1" => {
                max_args(1)?;
                Preset::Ex1 { gamma: arg(0, 1.0) }
            }
            "fgm5" => {
                max_args(2)?;
                Preset::Fgm5 { intercept: arg(0, 1.0), slope: arg(1, -2.0) }
            }
            "ex3" => {
                max_args(2)?;
                Preset::Ex3 { intercept: arg(0, 0.0), slope: arg(1, 1.0) }
            }
            "ex4" => {
                max_args(1)?;
                Preset::Ex4 { theta: arg(0, FRANK_THETA) }
            }
            "frank3" | "ex5" => {
                max_args(1)?;
                Preset::Frank3 { theta: arg(0, FRANK_THETA) }
            }
            "sarmanov3" | "ex6" => {
                max_args(3)?;
                Preset::Sarmanov3 { theta: arg(0, 2.0), delta: arg(1, 2.0), inner_shift: arg(2, SIGMOID_SHIFT) }
            }
            _ => return Err(PvcError::Config(format!("unknown preset {name:?}"))),
        };
        Ok(p)
    }
}

fn constant(cop: BivariateCopula) -> ConditionalEdge {
    ConditionalEdge::constant(&cop).expect("parametric copula")
}

fn indep() -> ConditionalEdge {
    constant(BivariateCopula::independence())
}

fn affine_fgm(intercept: f64, slope: f64) -> ConditionalEdge {
    ConditionalEdge::new(Family::Fgm, ParamMap::Affine { intercept, slopes: vec![slope] })
}

pub fn ex1(gamma: f64) -> Result<DVineSpec> {
    DVineSpec::new(
        3,
        vec![
            vec![constant(BivariateCopula::asym_fgm(gamma)?), indep()],
            vec![affine_fgm(1.0, -2.0)],
        ],
    )
}

pub fn fgm5(intercept: f64, slope: f64) -> Result<DVineSpec> {
    DVineSpec::new(
        5,
        vec![
            vec![indep(), indep(), indep(), indep()],
            vec![affine_fgm(intercept, slope), affine_fgm(intercept, slope), affine_fgm(intercept, slope)],
            vec![indep(), indep()],
            vec![indep()],
        ],
    )
}

pub fn ex3(intercept: f64, slope: f64) -> Result<DVineSpec> {
    DVineSpec::new(3, vec![vec![indep(), indep()], vec![affine_fgm(intercept, slope)]])
}

pub fn ex4(theta: f64) -> Result<DVineSpec> {
    DVineSpec::new(
        3,
        vec![
            vec![constant(BivariateCopula::frank(theta)?), constant(BivariateCopula::frank(theta)?)],
            vec![constant(BivariateCopula::partial_frank(theta)?)],
        ],
    )
}

pub fn frank3(theta: f64) -> Result<DVineSpec> {
    DVineSpec::new(
        3,
        vec![
            vec![constant(BivariateCopula::frank(theta)?), constant(BivariateCopula::frank(theta)?)],
            vec![ConditionalEdge::new(Family::Amh, ParamMap::FrankAmh { theta })],
        ],
    )
}

pub fn sarmanov3(theta: f64, delta: f64, inner_shift: f64) -> Result<DVineSpec> {
    let bb1 = BivariateCopula::bb1(theta, delta)?;
    DVineSpec::new(
        3,
        vec![
            vec![constant(bb1.clone()), constant(bb1)],
            vec![ConditionalEdge::new(Family::Sarmanov, ParamMap::Sigmoid { inner_shift })],
        ],
    )
}
