//! Kullback–Leibler divergence of simplified vines from a data-generating
//! vine, and its tree-by-tree decomposition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family};
use crate::dvine::{ConditionalEdge, DVineSpec, ParamMap};
use crate::engine;
use crate::error::{PvcError, Result};
use crate::quad::{gauss_legendre, Moments};
use crate::rng::with_pool;
use crate::svc::SimplifiedVineSpec;

pub const DEFAULT_QUAD_ORDER: usize = 48;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;
/// Step of the central difference in `θ₁₂`.
pub const FD_STEP: f64 = 1e-4;
const DPARAM_STEP: f64 = 1e-5;
const MAX_TENSOR_POINTS: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Integration {
    /// Tensor Gauss–Legendre rule on the cube.
    Quadrature { order: usize },
    /// Average over `sample_count` draws from the data-generating vine.
    MonteCarlo { sample_count: usize, seed: u64 },
}

impl Integration {
    /// Quadrature for `d = 3`, Monte Carlo above.
    pub fn default_for(d: usize) -> Self {
        if d <= 3 {
            Integration::Quadrature { order: DEFAULT_QUAD_ORDER }
        } else {
            Integration::MonteCarlo { sample_count: DEFAULT_MC_SAMPLES, seed: 42 }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Integration::Quadrature { .. } => "quadrature",
            Integration::MonteCarlo { .. } => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KldReport {
    pub total: f64,
    /// Divergence contributed by tree `j` at index `j - 1`.
    pub per_tree: Vec<f64>,
    pub method: String,
    /// Quadrature: change against the half-order rule. Monte Carlo: standard error.
    pub error_estimate: f64,
    pub per_tree_error: Vec<f64>,
}

fn check_dims(dgp: &DVineSpec, approx: &SimplifiedVineSpec) -> Result<()> {
    if dgp.dim() != approx.dim() {
        return Err(PvcError::Structure(format!(
            "process has dimension {}, approximation {}",
            dgp.dim(),
            approx.dim()
        )));
    }
    Ok(())
}

/// Per-tree log-density ratios at `u` and the process's log density.
fn log_ratios(dgp: &DVineSpec, approx: &SimplifiedVineSpec, u: &[f64]) -> Result<(Vec<f64>, f64)> {
    let p = engine::evaluate(dgp, u, usize::MAX, true)?;
    let q = engine::evaluate(approx, u, usize::MAX, true)?;
    let r: Vec<f64> = p
        .log_density_per_tree
        .iter()
        .zip(&q.log_density_per_tree)
        .map(|(a, b)| a - b)
        .collect();
    if r.iter().any(|x| !x.is_finite()) {
        return Err(PvcError::eval(format!("u = {u:?}"), format!("log density ratios {r:?}")));
    }
    Ok((r, p.log_density()))
}

fn quadrature(dgp: &DVineSpec, approx: &SimplifiedVineSpec, order: usize) -> Result<Vec<f64>> {
    let d = dgp.dim();
    let rule = gauss_legendre(order)?;
    let m = rule.order();
    let total = m
        .checked_pow(d as u32)
        .filter(|&t| t <= MAX_TENSOR_POINTS)
        .ok_or_else(|| PvcError::param(format!("order-{order} tensor rule in {d} dimensions is too large")))?;
    let inner = total / m;
    let parts: Vec<Result<Vec<f64>>> = with_pool(|| {
        (0..m)
            .into_par_iter()
            .map(|first| {
                let mut acc = vec![0.0; d - 1];
                let mut u = vec![0.0; d];
                for flat in 0..inner {
                    u[0] = rule.nodes()[first];
                    let mut w = rule.weights()[first];
                    let mut rem = flat;
                    for x in u.iter_mut().skip(1) {
                        *x = rule.nodes()[rem % m];
                        w *= rule.weights()[rem % m];
                        rem /= m;
                    }
                    let (r, logc) = log_ratios(dgp, approx, &u)?;
                    let wc = w * logc.exp();
                    for (a, x) in acc.iter_mut().zip(&r) {
                        *a += wc * x;
                    }
                }
                Ok(acc)
            })
            .collect()
    });
    let mut per_tree = vec![0.0; d - 1];
    for p in parts {
        for (a, x) in per_tree.iter_mut().zip(p?) {
            *a += x;
        }
    }
    Ok(per_tree)
}

fn monte_carlo(dgp: &DVineSpec, approx: &SimplifiedVineSpec, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if n < 2 {
        return Err(PvcError::param("Monte Carlo KLD needs sample_count >= 2"));
    }
    let data = dgp.sample(n, seed)?;
    let rows: Vec<Result<Vec<f64>>> = with_pool(|| {
        data.par_iter()
            .enumerate()
            .map(|(k, u)| log_ratios(dgp, approx, u).map(|(r, _)| r).map_err(|e| e.at_row(k)))
            .collect()
    });
    let d = dgp.dim();
    let mut trees = vec![Moments::default(); d - 1];
    let mut total = Moments::default();
    for r in rows {
        let r = r?;
        total.push(r.iter().sum());
        for (m, x) in trees.iter_mut().zip(&r) {
            m.push(*x);
        }
    }
    Ok((
        trees.iter().map(|m| m.mean).collect(),
        trees.iter().map(Moments::std_error).collect(),
        total.std_error(),
    ))
}

/// `E[log c(U) / c̃(U)]` under the data-generating vine, split by tree.
pub fn kld_total(dgp: &DVineSpec, approx: &SimplifiedVineSpec, integration: Integration) -> Result<KldReport> {
    check_dims(dgp, approx)?;
    match integration {
        Integration::Quadrature { order } => {
            let per_tree = quadrature(dgp, approx, order)?;
            let coarse = quadrature(dgp, approx, (order / 2).max(1))?;
            let per_tree_error: Vec<f64> = per_tree.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).collect();
            Ok(KldReport {
                total: per_tree.iter().sum(),
                error_estimate: (per_tree.iter().sum::<f64>() - coarse.iter().sum::<f64>()).abs(),
                per_tree,
                per_tree_error,
                method: integration.name().into(),
            })
        }
        Integration::MonteCarlo { sample_count, seed } => {
            let (per_tree, per_tree_error, se) = monte_carlo(dgp, approx, sample_count, seed)?;
            Ok(KldReport {
                total: per_tree.iter().sum(),
                per_tree,
                method: integration.name().into(),
                error_estimate: se,
                per_tree_error,
            })
        }
    }
}

/// Divergence term of tree `tree` (1-based).
pub fn kld_per_tree(dgp: &DVineSpec, approx: &SimplifiedVineSpec, tree: usize, integration: Integration) -> Result<f64> {
    if tree < 1 || tree >= dgp.dim() {
        return Err(PvcError::Structure(format!("tree {tree} out of range for d = {}", dgp.dim())));
    }
    Ok(kld_total(dgp, approx, integration)?.per_tree[tree - 1])
}

/// The three-dimensional process `(Π, Π, FGM(g(u₂)))`.
pub fn fgm_chain3(g: &ParamMap) -> Result<DVineSpec> {
    let ind = ConditionalEdge::constant(&BivariateCopula::independence())?;
    DVineSpec::new(3, vec![vec![ind.clone(), ind], vec![ConditionalEdge::new(Family::Fgm, g.clone())]])
}

/// The approximation `(C₁₂(θ₁₂), Π, FGM(∫g))` of [`fgm_chain3`].
pub fn first_tree_perturbation(family: Family, theta12: f64, g: &ParamMap, order: usize) -> Result<SimplifiedVineSpec> {
    let theta_bar = map_mean(g, order)?;
    SimplifiedVineSpec::new(
        3,
        vec![
            vec![BivariateCopula::new(family, &[theta12])?, BivariateCopula::independence()],
            vec![BivariateCopula::fgm(theta_bar)?],
        ],
    )
}

fn map_mean(g: &ParamMap, order: usize) -> Result<f64> {
    let rule = gauss_legendre(order)?;
    let mut s = 0.0;
    for (z, w) in rule.iter() {
        s += w * g.eval_scalar(z)?;
    }
    Ok(s)
}

/// Slope of the KLD in the first-tree parameter at independence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KldDerivative {
    /// `∂θ₁₂ KLD` from the one-dimensional integral over `u₁`.
    pub via_formula: f64,
    /// Central difference of [`kld_total`] with step [`FD_STEP`].
    pub via_finite_difference: f64,
    /// `∫₀^½ K(½+u)[h(½+u) - h(½-u)] du`, the slope of the negative cross
    /// entropy; equals `-via_formula`.
    pub neg_cross_entropy_slope: f64,
}

/// Derivative at `θ₁₂ = 0` of `KLD(fgm_chain3(g) ‖ (C₁₂(θ₁₂), Π, FGM(∫g)))`
/// for a first-tree family whose parameter 0 is independence.
pub fn kld_derivative_at_zero(first_tree: Family, g: &ParamMap, order: usize) -> Result<KldDerivative> {
    if !matches!(first_tree, Family::Fgm | Family::AsymFgm) {
        return Err(PvcError::param(format!("{first_tree} has no independence at parameter 0")));
    }
    let dgp = fgm_chain3(g)?;
    let rule = gauss_legendre(order)?;
    let theta_bar = map_mean(g, order)?;
    let c12 = BivariateCopula::new(first_tree, &[0.0])?;
    // h(u₁) = ∫ ∂θ F̃₁|₂(u₁|u₂; θ)|₀ g(u₂) du₂
    let dh2 = |u1: f64, u2: f64| -> Result<f64> {
        match c12.dh2_dparam(u1, u2) {
            Some(v) => Ok(v),
            None => {
                let up = BivariateCopula::new(first_tree, &[DPARAM_STEP])?.h2(u1, u2)?;
                let dn = BivariateCopula::new(first_tree, &[-DPARAM_STEP])?.h2(u1, u2)?;
                Ok((up - dn) / (2.0 * DPARAM_STEP))
            }
        }
    };
    let h = |u1: f64| -> Result<f64> {
        let mut s = 0.0;
        for (u2, w) in rule.iter() {
            s += w * dh2(u1, u2)? * g.eval_scalar(u2)?;
        }
        Ok(s)
    };
    // K(u₁) = ∫ m(u₁, u₃) (1-2u₁)(1-2u₃) du₃
    let k = |u1: f64| {
        rule.integrate(|u3| {
            let t = (1.0 - 2.0 * u1) * (1.0 - 2.0 * u3);
            -2.0 * theta_bar * (1.0 - 2.0 * u3) / (1.0 + theta_bar * t) * t
        })
    };
    let mut slope = 0.0;
    for (x, w) in rule.iter() {
        let u = 0.5 * x;
        slope += 0.5 * w * k(0.5 + u) * (h(0.5 + u)? - h(0.5 - u)?);
    }
    let integ = Integration::Quadrature { order };
    let at = |t: f64| -> Result<f64> {
        Ok(kld_total(&dgp, &first_tree_perturbation(first_tree, t, g, order)?, integ)?.total)
    };
    let fd = (at(FD_STEP)? - at(-FD_STEP)?) / (2.0 * FD_STEP);
    Ok(KldDerivative {
        via_formula: -slope,
        via_finite_difference: fd,
        neg_cross_entropy_slope: slope,
    })
}

/// `KLD(fgm_chain3(g) ‖ (C₁₂(θ), Π, FGM(∫g)))` for each `θ` in `thetas`.
pub fn kld_theta12_scan(first_tree: Family, g: &ParamMap, thetas: &[f64], order: usize) -> Result<Vec<(f64, f64)>> {
    let dgp = fgm_chain3(g)?;
    thetas
        .iter()
        .map(|&t| {
            let approx = first_tree_perturbation(first_tree, t, g, order)?;
            Ok((t, kld_total(&dgp, &approx, Integration::Quadrature { order })?.total))
        })
        .collect()
}
