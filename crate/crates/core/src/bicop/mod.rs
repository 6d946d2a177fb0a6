//! Bivariate copula families: cdf, density, h-functions and their inverses,
//! sampling and dependence measures.
//!
//! `h1(u, v) = ∂C/∂u` is the conditional cdf of the second argument given
//! the first, `h2(u, v) = ∂C/∂v` the conditional cdf of the first given the
//! second. `h1_inv(p, u)` returns `v`, `h2_inv(p, v)` returns `u`.

mod families;
mod numeric;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PvcError, Result};
use crate::quad::{gauss_legendre, integrate_nd};
use crate::rng::{block_rng, open_unit, with_pool, BLOCK};

pub use families::sarmanov::ALPHA_MAX as SARMANOV_ALPHA_MAX;
pub use numeric::{NumericBivariateCopula, SINKHORN_MIN_PASSES};

use families::{amh, asym_fgm, bb1, fgm, frank, partial_frank as pfr, sarmanov};

/// Default grid for [`partial_frank`] tabulations.
pub const PARTIAL_FRANK_NODES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "indep")]
    Independence,
    #[serde(rename = "fgm")]
    Fgm,
    #[serde(rename = "asymfgm")]
    AsymFgm,
    #[serde(rename = "frank")]
    Frank,
    #[serde(rename = "pfrank")]
    PartialFrank,
    #[serde(rename = "sarmanov")]
    Sarmanov,
    #[serde(rename = "psarmanov")]
    PartialSarmanov,
    #[serde(rename = "bb1")]
    Bb1,
    #[serde(rename = "amh")]
    Amh,
    #[serde(rename = "numeric")]
    Numeric,
}

impl Family {
    pub const PARAMETRIC: [Family; 9] = [
        Family::Independence,
        Family::Fgm,
        Family::AsymFgm,
        Family::Frank,
        Family::PartialFrank,
        Family::Sarmanov,
        Family::PartialSarmanov,
        Family::Bb1,
        Family::Amh,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Independence => "indep",
            Family::Fgm => "fgm",
            Family::AsymFgm => "asymfgm",
            Family::Frank => "frank",
            Family::PartialFrank => "pfrank",
            Family::Sarmanov => "sarmanov",
            Family::PartialSarmanov => "psarmanov",
            Family::Bb1 => "bb1",
            Family::Amh => "amh",
            Family::Numeric => "numeric",
        }
    }

    /// Number of parameters; `None` for tabulated copulas.
    pub fn n_params(self) -> Option<usize> {
        match self {
            Family::Independence => Some(0),
            Family::PartialSarmanov | Family::Bb1 => Some(2),
            Family::Numeric => None,
            _ => Some(1),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = PvcError;

    fn from_str(s: &str) -> Result<Self> {
        Family::PARAMETRIC
            .iter()
            .chain(std::iter::once(&Family::Numeric))
            .copied()
            .find(|f| f.tag() == s)
            .ok_or_else(|| PvcError::param(format!("unknown copula family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Indep,
    Fgm(f64),
    AsymFgm(f64),
    Frank(f64),
    PartialFrank { theta: f64, e: f64 },
    Sarmanov(f64),
    PartialSarmanov(f64, f64),
    Bb1(f64, f64),
    Amh(f64),
    Numeric(Arc<NumericBivariateCopula>),
}

/// An immutable, validated bivariate copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CopulaRecord", into = "CopulaRecord")]
pub struct BivariateCopula {
    repr: Repr,
}

#[derive(Serialize, Deserialize)]
struct CopulaRecord {
    family: Family,
    #[serde(default)]
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<NumericBivariateCopula>,
}

impl From<BivariateCopula> for CopulaRecord {
    fn from(c: BivariateCopula) -> Self {
        let table = match &c.repr {
            Repr::Numeric(t) => Some((**t).clone()),
            _ => None,
        };
        CopulaRecord {
            family: c.family(),
            params: c.params(),
            table,
        }
    }
}

impl TryFrom<CopulaRecord> for BivariateCopula {
    type Error = PvcError;

    fn try_from(r: CopulaRecord) -> Result<Self> {
        match (r.family, r.table) {
            (Family::Numeric, Some(t)) => Ok(BivariateCopula::numeric(t)),
            (Family::Numeric, None) => Err(PvcError::param("numeric copula without table")),
            (f, _) => BivariateCopula::new(f, &r.params),
        }
    }
}

fn check_open(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(PvcError::eval(format!("{what} = {x}"), "must lie in the open unit interval"))
    }
}

fn check_closed(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(PvcError::eval(format!("{what} = {x}"), "must lie in [0, 1]"))
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(PvcError::eval(what.to_string(), format!("value {x}")))
    }
}

impl BivariateCopula {
    pub fn new(family: Family, params: &[f64]) -> Result<Self> {
        let want = family.n_params().ok_or_else(|| {
            PvcError::param("numeric copulas are built from a table, not parameters")
        })?;
        if params.len() != want {
            return Err(PvcError::param(format!(
                "{family} takes {want} parameter(s), got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(PvcError::param(format!("{family} parameters must be finite")));
        }
        let repr = match family {
            Family::Independence => Repr::Indep,
            Family::Fgm => {
                let t = params[0];
                if t.abs() > 1.0 {
                    return Err(PvcError::param(format!("fgm requires |θ| ≤ 1, got {t}")));
                }
                Repr::Fgm(t)
            }
            Family::AsymFgm => {
                let g = params[0];
                if g.abs() > 1.0 {
                    return Err(PvcError::param(format!("asymfgm requires |γ| ≤ 1, got {g}")));
                }
                Repr::AsymFgm(g)
            }
            Family::Frank => {
                let t = params[0];
                if t == 0.0 || t.abs() > 700.0 {
                    return Err(PvcError::param(format!(
                        "frank requires θ ≠ 0 and |θ| ≤ 700, got {t}"
                    )));
                }
                Repr::Frank(t)
            }
            Family::PartialFrank => {
                let t = params[0];
                if !(t > 0.0 && t <= 700.0) {
                    return Err(PvcError::param(format!(
                        "pfrank requires 0 < θ ≤ 700, got {t}"
                    )));
                }
                Repr::PartialFrank { theta: t, e: t.exp_m1() }
            }
            Family::Sarmanov => {
                let a = params[0];
                if a.abs() > sarmanov::ALPHA_MAX + 1e-12 {
                    return Err(PvcError::param(format!(
                        "sarmanov requires |α| ≤ √7/5, got {a}"
                    )));
                }
                Repr::Sarmanov(a)
            }
            Family::PartialSarmanov => {
                let (a, b) = (params[0], params[1]);
                if !partial_sarmanov_admissible(a, b) {
                    return Err(PvcError::param(format!(
                        "psarmanov requires |a| ≤ √7/5 and a² ≤ b ≤ (√(1-3a²)+1)/5, got ({a}, {b})"
                    )));
                }
                Repr::PartialSarmanov(a, b)
            }
            Family::Bb1 => {
                let (t, d) = (params[0], params[1]);
                if !(t > 0.0 && d >= 1.0) {
                    return Err(PvcError::param(format!(
                        "bb1 requires θ > 0 and δ ≥ 1, got ({t}, {d})"
                    )));
                }
                Repr::Bb1(t, d)
            }
            Family::Amh => {
                let a = params[0];
                if !(-1.0..=1.0).contains(&a) {
                    return Err(PvcError::param(format!("amh requires α ∈ [-1, 1], got {a}")));
                }
                Repr::Amh(a)
            }
            Family::Numeric => unreachable!(),
        };
        Ok(BivariateCopula { repr })
    }

    pub fn independence() -> Self {
        BivariateCopula { repr: Repr::Indep }
    }

    pub fn fgm(theta: f64) -> Result<Self> {
        Self::new(Family::Fgm, &[theta])
    }

    pub fn asym_fgm(gamma: f64) -> Result<Self> {
        Self::new(Family::AsymFgm, &[gamma])
    }

    pub fn frank(theta: f64) -> Result<Self> {
        Self::new(Family::Frank, &[theta])
    }

    /// Closed-form partial Frank copula.
    pub fn partial_frank(theta: f64) -> Result<Self> {
        Self::new(Family::PartialFrank, &[theta])
    }

    pub fn sarmanov(alpha: f64) -> Result<Self> {
        Self::new(Family::Sarmanov, &[alpha])
    }

    pub fn partial_sarmanov(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::PartialSarmanov, &[a, b])
    }

    pub fn bb1(theta: f64, delta: f64) -> Result<Self> {
        Self::new(Family::Bb1, &[theta, delta])
    }

    pub fn amh(alpha: f64) -> Result<Self> {
        Self::new(Family::Amh, &[alpha])
    }

    pub fn numeric(table: NumericBivariateCopula) -> Self {
        BivariateCopula {
            repr: Repr::Numeric(Arc::new(table)),
        }
    }

    pub fn family(&self) -> Family {
        match self.repr {
            Repr::Indep => Family::Independence,
            Repr::Fgm(_) => Family::Fgm,
            Repr::AsymFgm(_) => Family::AsymFgm,
            Repr::Frank(_) => Family::Frank,
            Repr::PartialFrank { .. } => Family::PartialFrank,
            Repr::Sarmanov(_) => Family::Sarmanov,
            Repr::PartialSarmanov(..) => Family::PartialSarmanov,
            Repr::Bb1(..) => Family::Bb1,
            Repr::Amh(_) => Family::Amh,
            Repr::Numeric(_) => Family::Numeric,
        }
    }

    /// Parameter vector; empty for independence and tabulated copulas.
    pub fn params(&self) -> Vec<f64> {
        match self.repr {
            Repr::Indep | Repr::Numeric(_) => vec![],
            Repr::Fgm(t) | Repr::AsymFgm(t) | Repr::Frank(t) | Repr::Sarmanov(t) | Repr::Amh(t) => {
                vec![t]
            }
            Repr::PartialFrank { theta, .. } => vec![theta],
            Repr::PartialSarmanov(a, b) | Repr::Bb1(a, b) => vec![a, b],
        }
    }

    pub fn table(&self) -> Option<&NumericBivariateCopula> {
        match &self.repr {
            Repr::Numeric(t) => Some(t),
            _ => None,
        }
    }

    /// Short label such as `frank(5.74)`.
    pub fn label(&self) -> String {
        match &self.repr {
            Repr::Numeric(t) => format!("numeric[{}]", t.provenance()),
            _ => {
                let p: Vec<String> = self.params().iter().map(|x| format!("{x}")).collect();
                format!("{}({})", self.family(), p.join(", "))
            }
        }
    }

    pub fn is_independence(&self) -> bool {
        matches!(self.repr, Repr::Indep)
    }

    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        check_closed(u, "u")?;
        check_closed(v, "v")?;
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        let c = match &self.repr {
            Repr::Indep => u * v,
            Repr::Fgm(t) => fgm::cdf(*t, u, v),
            Repr::AsymFgm(g) => asym_fgm::cdf(*g, u, v),
            Repr::Frank(t) if *t > 0.0 => frank::cdf(*t, u, v),
            Repr::Frank(t) => u - frank::cdf(-t, u, 1.0 - v),
            Repr::PartialFrank { theta, e } => pfr::cdf(*theta, *e, u, v),
            Repr::Sarmanov(a) => sarmanov::cdf(*a, a * a, u, v),
            Repr::PartialSarmanov(a, b) => sarmanov::cdf(*a, *b, u, v),
            Repr::Bb1(t, d) => bb1::cdf(*t, *d, u, v),
            Repr::Amh(a) => amh::cdf(*a, u, v),
            Repr::Numeric(n) => n.cdf(u, v),
        };
        finite(c.clamp((u + v - 1.0).max(0.0), u.min(v)), "cdf")
    }

    pub fn pdf(&self, u: f64, v: f64) -> Result<f64> {
        check_open(u, "u")?;
        check_open(v, "v")?;
        let c = match &self.repr {
            Repr::Indep => 1.0,
            Repr::Fgm(t) => fgm::pdf(*t, u, v),
            Repr::AsymFgm(g) => asym_fgm::pdf(*g, u, v),
            Repr::Frank(t) if *t > 0.0 => frank::log_pdf(*t, u, v).exp(),
            Repr::Frank(t) => frank::log_pdf(-t, u, 1.0 - v).exp(),
            Repr::PartialFrank { theta, e } => pfr::pdf(*theta, *e, u, v),
            Repr::Sarmanov(a) => sarmanov::pdf(*a, a * a, u, v),
            Repr::PartialSarmanov(a, b) => sarmanov::pdf(*a, *b, u, v),
            Repr::Bb1(t, d) => bb1::log_pdf(*t, *d, u, v).exp(),
            Repr::Amh(a) => amh::pdf(*a, u, v),
            Repr::Numeric(n) => n.pdf(u, v),
        };
        finite(c.max(0.0), "pdf")
    }

    /// Log density; an error when the density is zero or non-finite.
    pub fn log_pdf(&self, u: f64, v: f64) -> Result<f64> {
        let l = match &self.repr {
            Repr::Indep => {
                check_open(u, "u")?;
                check_open(v, "v")?;
                0.0
            }
            Repr::Frank(t) => {
                check_open(u, "u")?;
                check_open(v, "v")?;
                if *t > 0.0 {
                    frank::log_pdf(*t, u, v)
                } else {
                    frank::log_pdf(-t, u, 1.0 - v)
                }
            }
            Repr::Bb1(t, d) => {
                check_open(u, "u")?;
                check_open(v, "v")?;
                bb1::log_pdf(*t, *d, u, v)
            }
            _ => self.pdf(u, v)?.ln(),
        };
        if l.is_finite() {
            Ok(l)
        } else {
            Err(PvcError::eval(
                format!("{} at ({u}, {v})", self.label()),
                format!("log density {l}"),
            ))
        }
    }

    /// `∂C/∂u`: cdf of `V` given `U = u`.
    pub fn h1(&self, u: f64, v: f64) -> Result<f64> {
        check_open(u, "conditioning u")?;
        check_closed(v, "v")?;
        if v == 0.0 {
            return Ok(0.0);
        }
        if v == 1.0 {
            return Ok(1.0);
        }
        let h = match &self.repr {
            Repr::Indep => v,
            Repr::Fgm(t) => fgm::h1(*t, u, v),
            Repr::AsymFgm(g) => asym_fgm::h1(*g, u, v),
            Repr::Frank(t) if *t > 0.0 => frank::h1(*t, u, v),
            Repr::Frank(t) => 1.0 - frank::h1(-t, u, 1.0 - v),
            Repr::PartialFrank { theta, e } => pfr::h1(*theta, *e, u, v),
            Repr::Sarmanov(a) => sarmanov::h1(*a, a * a, u, v),
            Repr::PartialSarmanov(a, b) => sarmanov::h1(*a, *b, u, v),
            Repr::Bb1(t, d) => bb1::h1(*t, *d, u, v),
            Repr::Amh(a) => amh::h1(*a, u, v),
            Repr::Numeric(n) => n.h1(u, v),
        };
        finite(h.clamp(0.0, 1.0), "h1")
    }

    /// `∂C/∂v`: cdf of `U` given `V = v`.
    pub fn h2(&self, u: f64, v: f64) -> Result<f64> {
        check_closed(u, "u")?;
        check_open(v, "conditioning v")?;
        if u == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(1.0);
        }
        let h = match &self.repr {
            Repr::Indep => u,
            Repr::Fgm(t) => fgm::h1(*t, v, u),
            Repr::AsymFgm(g) => asym_fgm::h2(*g, u, v),
            Repr::Frank(t) if *t > 0.0 => frank::h1(*t, v, u),
            Repr::Frank(t) => frank::h1(-t, 1.0 - v, u),
            Repr::PartialFrank { theta, e } => pfr::h1(*theta, *e, v, u),
            Repr::Sarmanov(a) => sarmanov::h1(*a, a * a, v, u),
            Repr::PartialSarmanov(a, b) => sarmanov::h1(*a, *b, v, u),
            Repr::Bb1(t, d) => bb1::h1(*t, *d, v, u),
            Repr::Amh(a) => amh::h1(*a, v, u),
            Repr::Numeric(n) => n.h2(u, v),
        };
        finite(h.clamp(0.0, 1.0), "h2")
    }

    /// Inverse of `v ↦ h1(u, v)`.
    pub fn h1_inv(&self, p: f64, u: f64) -> Result<f64> {
        check_open(u, "conditioning u")?;
        check_closed(p, "p")?;
        if p == 0.0 || p == 1.0 {
            return Ok(p);
        }
        let v = match &self.repr {
            Repr::Indep => p,
            Repr::Fgm(t) => fgm::h1_inv(*t, p, u),
            Repr::AsymFgm(g) => asym_fgm::h1_inv(*g, p, u),
            Repr::Frank(t) if *t > 0.0 => frank::h1_inv(*t, p, u),
            Repr::Frank(t) => 1.0 - frank::h1_inv(-t, 1.0 - p, u),
            Repr::PartialFrank { theta, e } => {
                families::numeric_inverse(|v| pfr::h1(*theta, *e, u, v), p)?
            }
            Repr::Sarmanov(a) => sarmanov::h1_inv(*a, a * a, p, u)?,
            Repr::PartialSarmanov(a, b) => sarmanov::h1_inv(*a, *b, p, u)?,
            Repr::Bb1(t, d) => bb1::h1_inv(*t, *d, p, u)?,
            Repr::Amh(a) => amh::h1_inv(*a, p, u)?,
            Repr::Numeric(n) => n.h1_inv(p, u),
        };
        finite(v.clamp(0.0, 1.0), "h1_inv")
    }

    /// Inverse of `u ↦ h2(u, v)`.
    pub fn h2_inv(&self, p: f64, v: f64) -> Result<f64> {
        check_open(v, "conditioning v")?;
        check_closed(p, "p")?;
        if p == 0.0 || p == 1.0 {
            return Ok(p);
        }
        let u = match &self.repr {
            Repr::Indep => p,
            Repr::Fgm(t) => fgm::h1_inv(*t, p, v),
            Repr::AsymFgm(g) => asym_fgm::h2_inv(*g, p, v)?,
            Repr::Frank(t) if *t > 0.0 => frank::h1_inv(*t, p, v),
            Repr::Frank(t) => frank::h1_inv(-t, p, 1.0 - v),
            Repr::PartialFrank { theta, e } => {
                families::numeric_inverse(|u| pfr::h1(*theta, *e, v, u), p)?
            }
            Repr::Sarmanov(a) => sarmanov::h1_inv(*a, a * a, p, v)?,
            Repr::PartialSarmanov(a, b) => sarmanov::h1_inv(*a, *b, p, v)?,
            Repr::Bb1(t, d) => bb1::h1_inv(*t, *d, p, v)?,
            Repr::Amh(a) => amh::h1_inv(*a, p, v)?,
            Repr::Numeric(n) => n.h2_inv(p, v),
        };
        finite(u.clamp(0.0, 1.0), "h2_inv")
    }

    /// Analytic `∂h2/∂θ` for the one-parameter FGM-type families.
    pub fn dh2_dparam(&self, u: f64, v: f64) -> Option<f64> {
        match self.repr {
            Repr::Fgm(_) => Some(fgm::dh2_dtheta(u, v)),
            Repr::AsymFgm(_) => Some(asym_fgm::dh2_dtheta(u, v)),
            _ => None,
        }
    }

    /// `n` iid draws by conditional inversion: `u` uniform, `v = h1⁻¹(w | u)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
        if n == 0 {
            return Err(PvcError::param("sample size must be >= 1"));
        }
        let blocks = n.div_ceil(BLOCK);
        let parts: Vec<Result<Vec<[f64; 2]>>> = with_pool(|| {
            (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut rng = block_rng(seed, b);
                    let count = BLOCK.min(n - b * BLOCK);
                    let mut out = Vec::with_capacity(count);
                    for _ in 0..count {
                        let u = open_unit(&mut rng);
                        let w = open_unit(&mut rng);
                        out.push([u, self.h1_inv(w, u)?]);
                    }
                    Ok(out)
                })
                .collect()
        });
        let mut rows = Vec::with_capacity(n);
        for p in parts {
            rows.extend(p?);
        }
        Ok(rows)
    }

    /// Spearman's ρ, `12 ∫∫ C - 3`; closed form where available.
    pub fn spearman_rho(&self) -> Result<f64> {
        Ok(match &self.repr {
            Repr::Indep => 0.0,
            Repr::Fgm(t) => t / 3.0,
            Repr::AsymFgm(g) => g / 6.0,
            Repr::Sarmanov(a) | Repr::PartialSarmanov(a, _) => *a,
            Repr::Frank(t) => {
                let rule = gauss_legendre(128)?;
                let a = t.abs();
                let r = 1.0 - 12.0 / a * (frank::debye(1, a, &rule) - frank::debye(2, a, &rule));
                r * t.signum()
            }
            Repr::Numeric(n) => n.spearman_rho(),
            _ => {
                let rule = gauss_legendre(64)?;
                12.0 * integrate_nd(|x| self.cdf(x[0], x[1]).unwrap_or(f64::NAN), 2, &rule)? - 3.0
            }
        })
    }

    /// Kendall's τ, `4 ∫ C dC - 1 = 1 - 4 ∫∫ h1 h2`; closed form where
    /// available.
    pub fn kendall_tau(&self) -> Result<f64> {
        Ok(match &self.repr {
            Repr::Indep => 0.0,
            Repr::Fgm(t) => 2.0 * t / 9.0,
            Repr::AsymFgm(g) => g / 9.0,
            Repr::Sarmanov(a) => 2.0 * a / 3.0 + 2.0 * a.powi(3) / 15.0,
            Repr::PartialSarmanov(a, b) => 2.0 * a / 3.0 + 2.0 * a * b / 15.0,
            Repr::Frank(t) => {
                let rule = gauss_legendre(128)?;
                let a = t.abs();
                (1.0 - 4.0 / a * (1.0 - frank::debye(1, a, &rule))) * t.signum()
            }
            Repr::Bb1(t, d) => 1.0 - 2.0 / (d * (t + 2.0)),
            Repr::Amh(a) => amh::tau(*a),
            Repr::Numeric(n) => n.kendall_tau(),
            Repr::PartialFrank { .. } => {
                let rule = gauss_legendre(64)?;
                let f = |x: &[f64]| match (self.h1(x[0], x[1]), self.h2(x[0], x[1])) {
                    (Ok(a), Ok(b)) => a * b,
                    _ => f64::NAN,
                };
                1.0 - 4.0 * integrate_nd(f, 2, &rule)?
            }
        })
    }
}

/// `|a| ≤ √7/5` and `a² ≤ b ≤ (√(1-3a²)+1)/5`, with 1e-12 slack.
pub fn partial_sarmanov_admissible(a: f64, b: f64) -> bool {
    let eps = 1e-12;
    a.abs() <= sarmanov::ALPHA_MAX + eps && b >= a * a - eps && b <= sarmanov::b_max(a) + eps
}

/// Tabulated partial Frank copula on the default
/// [`PARTIAL_FRANK_NODES`]-node grid.
pub fn partial_frank(theta: f64) -> Result<NumericBivariateCopula> {
    partial_frank_on(theta, PARTIAL_FRANK_NODES)
}

/// First-order partial copula of the trivariate Frank copula,
/// `C̄(a,b) = ∫₀¹ C_AMH(a, b; 1 - e^{-θt}) dt`, tabulated on `nodes` nodes
/// per axis from its closed form.
pub fn partial_frank_on(theta: f64, nodes: usize) -> Result<NumericBivariateCopula> {
    let cop = BivariateCopula::partial_frank(theta)?;
    NumericBivariateCopula::from_cdf_fn(
        nodes,
        |a, b| cop.cdf(a, b).unwrap_or(f64::NAN),
        format!("partial frank θ={theta}"),
    )
}

#[cfg(test)]
mod tests;
