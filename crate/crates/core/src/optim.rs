//! Derivative-free optimizers and pair-copula maximum likelihood.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family, SARMANOV_ALPHA_MAX};
use crate::engine::pairwise_sum;
use crate::error::{PvcError, Result};
use crate::rng::with_pool;
use crate::stats::spearman_rho;

/// Objective value used for infeasible points.
pub const INFEASIBLE: f64 = 1e300;

const GOLDEN_TOL: f64 = 1e-9;

/// Nelder–Mead stopping rule: stop once the simplex values agree to
/// `ftol` (relative) and its vertices to `xtol`, or after `max_iter`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmOptions {
    pub ftol: f64,
    pub xtol: f64,
    pub max_iter: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions { ftol: 1e-10, xtol: 1e-8, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Box constraints used when fitting `family`.
pub fn param_bounds(family: Family) -> Vec<(f64, f64)> {
    match family {
        Family::Independence | Family::Numeric => vec![],
        Family::Fgm | Family::AsymFgm | Family::Amh => vec![(-1.0, 1.0)],
        Family::Sarmanov => vec![(-SARMANOV_ALPHA_MAX, SARMANOV_ALPHA_MAX)],
        Family::Frank => vec![(-35.0, 35.0)],
        Family::PartialFrank => vec![(1e-6, 35.0)],
        Family::PartialSarmanov => vec![(-SARMANOV_ALPHA_MAX, SARMANOV_ALPHA_MAX), (0.0, 0.4)],
        Family::Bb1 => vec![(1e-3, 15.0), (1.0, 15.0)],
    }
}

/// Minimize a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > GOLDEN_TOL * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    // the ends are not probed by the interior iteration
    for x in [lo, hi] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Nelder–Mead minimization from `x0` with initial steps `step`. The start
/// point stays in the simplex until beaten, so the result is never worse.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: &[f64], opts: &NmOptions) -> NmResult {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += step[k];
        simplex.push(x);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut iter = 0;
    let mut converged = false;
    while iter < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        vals = order.iter().map(|&k| vals[k]).collect();
        let size = simplex[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (vals[n] - vals[0]).abs() <= opts.ftol * (1.0 + vals[0].abs()) && size < opts.xtol {
            converged = true;
            break;
        }
        iter += 1;
        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|x| x[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n][k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        };
        if fc < vals[n].min(fr) {
            simplex[n] = xc;
            vals[n] = fc;
            continue;
        }
        for k in 1..=n {
            let x: Vec<f64> = (0..n).map(|m| simplex[0][m] + 0.5 * (simplex[k][m] - simplex[0][m])).collect();
            vals[k] = f(&x);
            simplex[k] = x;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    NmResult {
        x: simplex[best].clone(),
        value: vals[best],
        iterations: iter,
        converged,
    }
}

/// Invert a symmetric positive-definite matrix of size 1 or 2.
fn invert_small(h: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    match h.len() {
        1 if h[0][0] > 0.0 => Some(vec![vec![1.0 / h[0][0]]]),
        2 => {
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if det <= 0.0 || h[0][0] <= 0.0 {
                return None;
            }
            Some(vec![vec![h[1][1] / det, -h[0][1] / det], vec![-h[1][0] / det, h[0][0] / det]])
        }
        _ => None,
    }
}

/// Standard errors from the central-difference Hessian of a negative
/// log-likelihood; NaN where the Hessian is not usable (e.g. at a bound).
pub fn hessian_std_errors<F: FnMut(&[f64]) -> f64>(mut nll: F, x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x
        .iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| (1e-4 * v.abs().max(1.0)).min(0.5 * (v - lo)).min(0.5 * (hi - v)))
        .collect();
    if h.iter().any(|&s| !(s > 1e-9)) {
        return vec![f64::NAN; n];
    }
    let mut at = |dx: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(k, s) in dx {
            y[k] += s;
        }
        nll(&y)
    };
    let f0 = at(&[]);
    let mut hess = vec![vec![0.0; n]; n];
    for a in 0..n {
        hess[a][a] = (at(&[(a, h[a])]) - 2.0 * f0 + at(&[(a, -h[a])])) / (h[a] * h[a]);
        for b in 0..a {
            let v = (at(&[(a, h[a]), (b, h[b])]) - at(&[(a, h[a]), (b, -h[b])]) - at(&[(a, -h[a]), (b, h[b])])
                + at(&[(a, -h[a]), (b, -h[b])]))
                / (4.0 * h[a] * h[b]);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    match invert_small(&hess) {
        Some(inv) => (0..n).map(|k| inv[k][k].sqrt()).collect(),
        None => vec![f64::NAN; n],
    }
}

/// Pair-copula log-likelihood, summed deterministically.
pub fn pair_loglik(cop: &BivariateCopula, pairs: &[[f64; 2]]) -> Result<f64> {
    pair_loglik_weighted(cop, pairs, None)
}

/// `Σ w_k log c(p_k)`, with unit weights when `weights` is `None`.
pub fn pair_loglik_weighted(cop: &BivariateCopula, pairs: &[[f64; 2]], weights: Option<&[f64]>) -> Result<f64> {
    let terms: Vec<Result<f64>> = with_pool(|| {
        pairs
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let l = cop.log_pdf(p[0], p[1])?;
                Ok(weights.map_or(l, |w| if w[k] == 0.0 { 0.0 } else { w[k] * l }))
            })
            .collect()
    });
    let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
    let ll = pairwise_sum(&terms);
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(PvcError::eval("pair log-likelihood", format!("value {ll}")))
    }
}

/// Result of a pair-copula maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub copula: BivariateCopula,
    /// Standard errors of the free parameters (NaN when unavailable).
    pub std_errors: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn build(family: Family, params: &[f64]) -> Result<BivariateCopula> {
    if family == Family::Frank && params[0] == 0.0 {
        return Ok(BivariateCopula::independence());
    }
    BivariateCopula::new(family, params)
}

/// Negative log-likelihood of `family(params)`, `INFEASIBLE` outside the
/// family's domain.
pub fn pair_nll(family: Family, params: &[f64], pairs: &[[f64; 2]]) -> f64 {
    match build(family, params) {
        Ok(c) => pair_loglik(&c, pairs).map(|ll| -ll).unwrap_or(INFEASIBLE),
        Err(_) => INFEASIBLE,
    }
}

fn in_bounds(x: &[f64], bounds: &[(f64, f64)]) -> bool {
    x.iter().zip(bounds).all(|(v, (lo, hi))| v >= lo && v <= hi)
}

/// Maximum-likelihood fit of `family` to pairs in `(0,1)²`.
pub fn fit_pair(family: Family, pairs: &[[f64; 2]]) -> Result<PairFit> {
    let free = vec![None; family.n_params().unwrap_or(0)];
    fit_edge(family, &free, pairs, None)
}

/// Weighted maximum-likelihood fit of the slots of `fixed` that are `None`;
/// the others keep their values.
pub fn fit_edge(family: Family, fixed: &[Option<f64>], pairs: &[[f64; 2]], weights: Option<&[f64]>) -> Result<PairFit> {
    if family == Family::Numeric {
        return Err(PvcError::param("numeric copulas are tabulated, not fitted"));
    }
    if fixed.len() != family.n_params().unwrap_or(0) {
        return Err(PvcError::param(format!("{family} has {} parameter slot(s)", family.n_params().unwrap_or(0))));
    }
    if pairs.len() < 2 {
        return Err(PvcError::param("need at least two pairs to fit"));
    }
    if weights.is_some_and(|w| w.len() != pairs.len()) {
        return Err(PvcError::param("one weight per pair required"));
    }
    let bounds = param_bounds(family);
    let slots: Vec<usize> = (0..fixed.len()).filter(|&k| fixed[k].is_none()).collect();
    let free_bounds: Vec<(f64, f64)> = slots.iter().map(|&k| bounds[k]).collect();
    let full = |x: &[f64]| -> Vec<f64> {
        let mut p: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
        for (&k, &v) in slots.iter().zip(x) {
            p[k] = v;
        }
        p
    };
    let nll = |x: &[f64]| -> f64 {
        if !in_bounds(x, &free_bounds) {
            return INFEASIBLE;
        }
        match build(family, &full(x)) {
            Ok(c) => pair_loglik_weighted(&c, pairs, weights).map(|ll| -ll).unwrap_or(INFEASIBLE),
            Err(_) => INFEASIBLE,
        }
    };
    let (x, iterations, converged) = match slots.len() {
        0 => (vec![], 0, true),
        1 => (vec![golden_section(|t| nll(&[t]), free_bounds[0].0, free_bounds[0].1).0], 0, true),
        _ => {
            let (x0, step) = start_2d(family, pairs);
            let r = nelder_mead(nll, &x0, &step, &NmOptions::default());
            (r.x, r.iterations, r.converged)
        }
    };
    if nll(&x) >= INFEASIBLE {
        return Err(PvcError::Convergence {
            iterations,
            detail: format!("{family} fit ended at an infeasible point {x:?}"),
        });
    }
    let std_errors = if x.is_empty() { vec![] } else { hessian_std_errors(nll, &x, &free_bounds) };
    let copula = build(family, &full(&x))?;
    let loglik = pair_loglik_weighted(&copula, pairs, weights)?;
    Ok(PairFit { copula, std_errors, loglik, iterations, converged })
}

fn start_2d(family: Family, pairs: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
    match family {
        Family::PartialSarmanov => {
            let x: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
            // ρ_S = a for this family
            let a = spearman_rho(&x, &y).clamp(-0.5, 0.5);
            (vec![a, a * a + 0.02], vec![0.02, 0.02])
        }
        _ => (vec![1.0, 1.5], vec![0.3, 0.3]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_quadratic_minimum() {
        let (x, fx) = golden_section(|t| (t - 0.3).powi(2), -1.0, 1.0);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-16);
        // minimum at a bound
        assert_eq!(golden_section(|t| t, -1.0, 1.0).0, -1.0);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r = nelder_mead(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
            &NmOptions::default(),
        );
        assert!(r.converged);
        let x = r.x;
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] - 1.0).abs() < 1e-4, "{x:?}");
    }

    #[test]
    fn hessian_of_gaussian_loglik() {
        // nll = (x-1)²/(2·0.25) has curvature 4, so se = 0.5
        let se = hessian_std_errors(|x| (x[0] - 1.0).powi(2) / 0.5, &[1.0], &[(-10.0, 10.0)]);
        assert!((se[0] - 0.5).abs() < 1e-6);
        assert!(hessian_std_errors(|x| x[0], &[1.0], &[(1.0, 2.0)])[0].is_nan());
    }

    #[test]
    fn fixed_slots_and_weights() {
        let cop = BivariateCopula::bb1(2.0, 2.0).unwrap();
        let pairs = cop.sample(5000, 4).unwrap();
        let fit = fit_edge(Family::Bb1, &[Some(2.0), None], &pairs, None).unwrap();
        assert_eq!(fit.copula.params()[0], 2.0);
        assert_eq!(fit.std_errors.len(), 1);
        assert!((fit.copula.params()[1] - 2.0).abs() < 0.15);
        // doubling every weight doubles the log-likelihood, not the optimum
        let w = vec![2.0; pairs.len()];
        let fw = fit_edge(Family::Bb1, &[Some(2.0), None], &pairs, Some(&w)).unwrap();
        assert!((fw.copula.params()[1] - fit.copula.params()[1]).abs() < 1e-6);
        assert!((fw.loglik - 2.0 * fit.loglik).abs() < 1e-6 * fit.loglik.abs());
        assert!(fit_edge(Family::Bb1, &[None], &pairs, None).is_err());
    }

    #[test]
    fn fits_recover_parameters() {
        for (cop, tol) in [
            (BivariateCopula::frank(5.74).unwrap(), 0.2),
            (BivariateCopula::fgm(0.6).unwrap(), 0.05),
            (BivariateCopula::bb1(2.0, 2.0).unwrap(), 0.15),
            (BivariateCopula::partial_sarmanov(0.3, 0.15).unwrap(), 0.05),
        ] {
            let pairs = cop.sample(20_000, 3).unwrap();
            let fit = fit_pair(cop.family(), &pairs).unwrap();
            for ((a, b), se) in fit.copula.params().iter().zip(cop.params()).zip(&fit.std_errors) {
                assert!((a - b).abs() < tol, "{}: {a} vs {b}", cop.label());
                assert!((a - b).abs() < 4.0 * se, "{}: {a} vs {b} (se {se})", cop.label());
            }
        }
    }
}
