//! Gauss-Legendre tensor quadrature, seeded Monte Carlo integration and
//! bracketed inversion of monotone functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PvcError, Result};
use crate::rng::{block_rng, open_unit, with_pool, BLOCK};

pub const MAX_ORDER: usize = 512;
/// Default function-value tolerance of [`invert_monotone`].
pub const ROOT_TOL: f64 = 1e-10;
pub const ROOT_MAX_ITER: usize = 200;

/// A Gauss-Legendre rule mapped to `[0,1]`. Nodes lie strictly inside the
/// interval and weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// One-dimensional integral over `[0,1]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Integral over `[lo, hi]`.
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let len = hi - lo;
        len * self.integrate(|x| f(lo + len * x))
    }
}

/// Gauss-Legendre rule of the given order, computed by Newton iteration on
/// the three-term Legendre recurrence and mapped from `[-1,1]` to `[0,1]`.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_ORDER {
        return Err(PvcError::param(format!(
            "quadrature order {order} outside 1..={MAX_ORDER}"
        )));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x runs from near +1 downwards; store ascending on [0,1].
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.5;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        order,
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product quadrature of `f` over `(0,1)^dim`.
pub fn integrate_nd<F>(f: F, dim: usize, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if dim == 0 {
        return Err(PvcError::param("integration dimension must be >= 1"));
    }
    let n = rule.order();
    let total = n.checked_pow(dim as u32).ok_or_else(|| {
        PvcError::param(format!("tensor grid {n}^{dim} too large"))
    })?;
    let mut idx = vec![0usize; dim];
    let mut point = vec![rule.nodes[0]; dim];
    let mut sum = 0.0;
    for _ in 0..total {
        let mut w = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            point[k] = rule.nodes[i];
            w *= rule.weights[i];
        }
        let v = f(&point);
        if !v.is_finite() {
            return Err(PvcError::eval(format!("node {point:?}"), format!("integrand = {v}")));
        }
        sum += w * v;
        for k in (0..dim).rev() {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(sum)
}

/// Monte Carlo settings: sample count and base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub sample_count: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(sample_count: usize, seed: u64) -> Result<Self> {
        if sample_count == 0 {
            return Err(PvcError::param("sample_count must be >= 1"));
        }
        Ok(McConfig { sample_count, seed })
    }
}

/// Running mean / sum of squared deviations (Welford), mergeable.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Monte Carlo estimate of `∫ f` over `(0,1)^dim` and its standard error.
///
/// Samples are drawn in blocks of [`BLOCK`] points, each block with its own
/// derived seed; block moments are merged in index order, so the result is
/// bit-identical for a given `(seed, sample_count)` whatever the thread count.
pub fn mc_integrate<F>(f: F, dim: usize, cfg: McConfig) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 {
        return Err(PvcError::param("integration dimension must be >= 1"));
    }
    if cfg.sample_count < 2 {
        return Err(PvcError::param("mc_integrate needs sample_count >= 2"));
    }
    let blocks = cfg.sample_count.div_ceil(BLOCK);
    let parts: Vec<Result<Moments>> = with_pool(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(cfg.seed, b);
                let count = BLOCK.min(cfg.sample_count - b * BLOCK);
                let mut point = vec![0.0; dim];
                let mut acc = Moments::default();
                for _ in 0..count {
                    for x in point.iter_mut() {
                        *x = open_unit(&mut rng);
                    }
                    let v = f(&point);
                    if !v.is_finite() {
                        return Err(PvcError::eval(
                            format!("sample {point:?}"),
                            format!("integrand = {v}"),
                        ));
                    }
                    acc.push(v);
                }
                Ok(acc)
            })
            .collect()
    });
    let mut total = Moments::default();
    for p in parts {
        total = total.merge(p?);
    }
    let se = if total.m2 <= 0.0 { 0.0 } else { total.std_error() };
    Ok((total.mean, se))
}

/// Solve `f(x) = target` on `[0,1]` for a nondecreasing `f`.
///
/// Regula falsi with the Illinois modification, falling back to a bisection
/// step whenever the secant step would not shrink the bracket by half. The
/// iterate never leaves `[0,1]`.
pub fn invert_monotone<F>(f: F, target: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    invert_monotone_on(f, target, tol, 0.0, 1.0)
}

pub fn invert_monotone_on<F>(f: F, target: f64, tol: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(PvcError::param("tolerance must be positive"));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a) - target;
    let mut fb = f(b) - target;
    if !fa.is_finite() || !fb.is_finite() {
        return Err(PvcError::eval("bracket end", "non-finite function value"));
    }
    if fa > tol || fb < -tol {
        return Err(PvcError::Bracket {
            target,
            lo: fa + target,
            hi: fb + target,
        });
    }
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    let mut side = 0i8;
    for _ in 0..ROOT_MAX_ITER {
        let width = b - a;
        let mut x = if fb != fa { b - fb * (b - a) / (fb - fa) } else { 0.5 * (a + b) };
        if !(x > a && x < b) || !x.is_finite() {
            x = 0.5 * (a + b);
        }
        let fx = f(x) - target;
        if !fx.is_finite() {
            return Err(PvcError::eval(format!("x = {x}"), "non-finite function value"));
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a > 0.5 * width {
            // secant stalled; force a bisection step
            let m = 0.5 * (a + b);
            let fm = f(m) - target;
            if fm.abs() <= tol {
                return Ok(m);
            }
            if fm < 0.0 {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
            side = 0;
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs().max(1e-300) {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
    }
    Err(PvcError::Convergence {
        iterations: ROOT_MAX_ITER,
        detail: format!("invert_monotone target {target}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_midpoint() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes(), &[0.5]);
        assert!((r.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_two_closed_form() {
        let r = gauss_legendre(2).unwrap();
        let off = 1.0 / (2.0 * 3f64.sqrt());
        assert!((r.nodes()[0] - (0.5 - off)).abs() < 1e-15);
        assert!((r.nodes()[1] - (0.5 + off)).abs() < 1e-15);
        assert!((r.weights()[0] - 0.5).abs() < 1e-15);
        assert!((r.integrate(|u| u * u * u) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(513).is_err());
        assert!(gauss_legendre(512).is_ok());
    }

    #[test]
    fn polynomial_exactness_up_to_degree_2n_minus_1() {
        for &n in &[3usize, 8, 17, 64, 128, 512] {
            let r = gauss_legendre(n).unwrap();
            let w: f64 = r.weights().iter().sum();
            assert!((w - 1.0).abs() < 1e-12, "weights of order {n} sum to {w}");
            assert!(r.nodes().windows(2).all(|p| p[0] < p[1]));
            assert!(r.nodes()[0] > 0.0 && r.nodes()[n - 1] < 1.0);
            for deg in [1usize, 2, 2 * n - 1] {
                let got = r.integrate(|u| (deg as f64 + 1.0) * u.powi(deg as i32));
                assert!((got - 1.0).abs() < 1e-12, "order {n} degree {deg}: {got}");
            }
        }
    }

    #[test]
    fn tensor_integrals() {
        let r = gauss_legendre(4).unwrap();
        assert!((integrate_nd(|_| 1.0, 3, &r).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate_nd(|x| x[0] * x[1], 2, &r).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tensor_reports_nonfinite_node() {
        let r = gauss_legendre(3).unwrap();
        let err = integrate_nd(|x| if x[0] == 0.5 { f64::NAN } else { 1.0 }, 2, &r).unwrap_err();
        assert!(matches!(err, PvcError::Evaluation { .. }));
    }

    #[test]
    fn trivariate_fgm_density_normalizes() {
        let r = gauss_legendre(16).unwrap();
        let c = |x: &[f64]| {
            1.0 + (1.0 - 2.0 * x[0]) * (1.0 - 2.0 * x[1]) * (1.0 - 2.0 * x[2])
        };
        assert!((integrate_nd(c, 3, &r).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mc_constant_has_zero_error() {
        let (m, se) = mc_integrate(|_| 3.5, 2, McConfig::new(1000, 1).unwrap()).unwrap();
        assert_eq!(m, 3.5);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn mc_mean_of_identity() {
        let cfg = McConfig::new(1_000_000, 11).unwrap();
        let (m, se) = mc_integrate(|x| x[0], 1, cfg).unwrap();
        assert!((m - 0.5).abs() < 3.0 * se, "{m} ± {se}");
        let again = mc_integrate(|x| x[0], 1, cfg).unwrap();
        assert_eq!((m, se), again);
    }

    #[test]
    fn mc_requires_two_samples() {
        assert!(mc_integrate(|x| x[0], 1, McConfig::new(1, 0).unwrap()).is_err());
    }

    #[test]
    fn invert_identity_and_boundary() {
        let x = invert_monotone(|x| x, 0.3, 1e-12).unwrap();
        assert!((x - 0.3).abs() < 1e-12);
        let f = |x: f64| x * x * (3.0 - 2.0 * x);
        let x = invert_monotone(f, 1.0, 1e-10).unwrap();
        assert!((f(x) - 1.0).abs() <= 1e-10);
        assert!(x <= 1.0);
    }

    #[test]
    fn invert_rejects_out_of_range_target() {
        let err = invert_monotone(|x| 0.5 * x, 0.8, 1e-10).unwrap_err();
        assert!(matches!(err, PvcError::Bracket { .. }));
    }

    #[test]
    fn invert_round_trip_random_targets() {
        use rand::Rng;
        let mut rng = crate::rng::block_rng(3, 0);
        let fams: [&dyn Fn(f64) -> f64; 3] = [
            &|x| x.powi(5),
            &|x| (x.exp() - 1.0) / (1f64.exp() - 1.0),
            &|x| if x < 0.5 { 0.2 * x } else { 0.1 + 1.8 * (x - 0.5) },
        ];
        for f in fams {
            for _ in 0..100 {
                let t: f64 = rng.gen();
                let x = invert_monotone(f, t, 1e-10).unwrap();
                assert!((f(x) - t).abs() <= 1e-10);
            }
        }
    }
}
