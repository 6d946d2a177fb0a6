use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family};
use crate::error::{PvcError, Result};

/// Default points per conditioning axis for the simplifying-assumption gap.
pub const SIMPLIFYING_GRID: usize = 11;

/// Points used to check a nonlinear map against the family's parameter range.
const RANGE_CHECK_POINTS: usize = 10_001;

/// Map from the conditioning vector to a family parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamMap {
    /// Parameters that ignore the conditioning values.
    Constant { params: Vec<f64> },
    /// One parameter, `intercept + Σ slopes[k] · z[k]`.
    Affine { intercept: f64, slopes: Vec<f64> },
    /// One parameter `g(z) = (√7+1)/10 · (1 - f(z)) - 0.2` with
    /// `f(z) = 1 - 2S(10z - inner_shift) + 2(1-2z)S(-5)`, `S(x) = 1/(1+eˣ)`.
    Sigmoid { inner_shift: f64 },
    /// AMH parameter `1 - exp(-θ z)`.
    FrankAmh { theta: f64 },
}

fn logistic_s(x: f64) -> f64 {
    1.0 / (1.0 + x.exp())
}

/// The sigmoid parameter curve of [`ParamMap::Sigmoid`].
pub fn sigmoid_g(z: f64, inner_shift: f64) -> f64 {
    let f = 1.0 - 2.0 * logistic_s(10.0 * z - inner_shift) + 2.0 * (1.0 - 2.0 * z) * logistic_s(-5.0);
    0.1 * (7f64.sqrt() + 1.0) * (1.0 - f) - 0.2
}

impl ParamMap {
    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            ParamMap::Constant { params } => params.clone(),
            ParamMap::Affine { intercept, slopes } => {
                if z.len() != slopes.len() {
                    return Err(PvcError::Structure(format!(
                        "affine map of arity {} given {} conditioning values",
                        slopes.len(),
                        z.len()
                    )));
                }
                vec![intercept + slopes.iter().zip(z).map(|(s, x)| s * x).sum::<f64>()]
            }
            ParamMap::Sigmoid { inner_shift } => vec![sigmoid_g(self.first(z)?, *inner_shift)],
            ParamMap::FrankAmh { theta } => vec![-(-theta * self.first(z)?).exp_m1()],
        })
    }

    fn first(&self, z: &[f64]) -> Result<f64> {
        match z {
            [x] => Ok(*x),
            _ => Err(PvcError::Structure(format!(
                "map needs exactly one conditioning value, got {}",
                z.len()
            ))),
        }
    }

    /// Scalar parameter at a single conditioning value.
    pub fn eval_scalar(&self, z: f64) -> Result<f64> {
        let p = match self {
            ParamMap::Affine { slopes, .. } if slopes.len() != 1 => {
                return Err(PvcError::Structure("eval_scalar needs an arity-1 map".into()))
            }
            ParamMap::Constant { params } if params.len() != 1 => {
                return Err(PvcError::Structure("eval_scalar needs a one-parameter map".into()))
            }
            ParamMap::Constant { .. } => self.eval(&[])?,
            _ => self.eval(&[z])?,
        };
        Ok(p[0])
    }

    pub(crate) fn check_arity(&self, arity: usize) -> Result<()> {
        let ok = match self {
            ParamMap::Constant { .. } => true,
            ParamMap::Affine { slopes, .. } => slopes.len() == arity,
            ParamMap::Sigmoid { .. } | ParamMap::FrankAmh { .. } => arity == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(PvcError::Structure(format!(
                "parameter map {self:?} does not take {arity} conditioning value(s)"
            )))
        }
    }

    /// Check that every conditioning value yields valid parameters. Affine
    /// maps are checked at the cube's vertices (the one-parameter families
    /// have interval ranges); nonlinear maps on a fine grid, reporting the
    /// first offending point.
    pub(crate) fn validate_range(&self, family: Family, arity: usize) -> Result<()> {
        let check = |z: &[f64]| -> Result<()> {
            let p = self.eval(z)?;
            BivariateCopula::new(family, &p).map(|_| ()).map_err(|e| {
                PvcError::param(format!("map leaves the {family} range at z = {z:?}: {e}"))
            })
        };
        match self {
            ParamMap::Constant { .. } => check(&vec![0.5; arity]),
            ParamMap::Affine { .. } => {
                if arity > 16 {
                    return Err(PvcError::param("affine map arity too large"));
                }
                for mask in 0..(1usize << arity) {
                    let z: Vec<f64> = (0..arity).map(|k| ((mask >> k) & 1) as f64).collect();
                    check(&z)?;
                }
                Ok(())
            }
            ParamMap::Sigmoid { inner_shift } => {
                if !inner_shift.is_finite() {
                    return Err(PvcError::param("inner_shift must be finite"));
                }
                for k in 0..RANGE_CHECK_POINTS {
                    check(&[k as f64 / (RANGE_CHECK_POINTS - 1) as f64])?;
                }
                Ok(())
            }
            ParamMap::FrankAmh { theta } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(PvcError::param(format!("frank_amh needs θ > 0, got {theta}")));
                }
                check(&[1.0])
            }
        }
    }

    /// Range `(min, max)` of a scalar arity-1 map on `points` equispaced
    /// conditioning values in `[0,1]`.
    pub fn scalar_range(&self, points: usize) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..points.max(2) {
            let v = self.eval_scalar(k as f64 / (points.max(2) - 1) as f64)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}
