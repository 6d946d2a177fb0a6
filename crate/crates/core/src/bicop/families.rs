//! Closed-form kernels for the parametric families. Arguments are assumed
//! valid; range checks live in the dispatcher.

use crate::error::Result;
use crate::quad::invert_monotone;

/// Function-value tolerance used by the numeric h-inverses.
pub(crate) const H_INV_TOL: f64 = 1e-14;

/// Invert an h-function in its free argument; the kernels are not
/// evaluated at the endpoints, whose values are known.
pub(crate) fn numeric_inverse<F: Fn(f64) -> f64>(f: F, p: f64) -> Result<f64> {
    let g = |x: f64| {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            f(x)
        }
    };
    invert_monotone(g, p, H_INV_TOL)
}

/// `2p / (1 + k + sqrt((1+k)^2 - 4kp))`: the root in `[0,1]` of
/// `x(1 + k(1-x)) = p`, stable for `k -> 0`.
pub(crate) fn fgm_quadratic_root(p: f64, k: f64) -> f64 {
    let b = 1.0 + k;
    let disc = (b * b - 4.0 * k * p).max(0.0);
    let denom = b + disc.sqrt();
    if denom <= 0.0 {
        return 1.0;
    }
    (2.0 * p / denom).clamp(0.0, 1.0)
}

pub(crate) mod fgm {
    pub fn cdf(t: f64, u: f64, v: f64) -> f64 {
        u * v * (1.0 + t * (1.0 - u) * (1.0 - v))
    }
    pub fn pdf(t: f64, u: f64, v: f64) -> f64 {
        1.0 + t * (1.0 - 2.0 * u) * (1.0 - 2.0 * v)
    }
    pub fn h1(t: f64, u: f64, v: f64) -> f64 {
        v * (1.0 + t * (1.0 - 2.0 * u) * (1.0 - v))
    }
    pub fn h1_inv(t: f64, p: f64, u: f64) -> f64 {
        super::fgm_quadratic_root(p, t * (1.0 - 2.0 * u))
    }
    /// `∂/∂θ` of `h2(u,v)`, the conditional cdf of the first argument.
    pub fn dh2_dtheta(u: f64, v: f64) -> f64 {
        u * (1.0 - u) * (1.0 - 2.0 * v)
    }
}

pub(crate) mod asym_fgm {
    use super::*;

    pub fn cdf(g: f64, u: f64, v: f64) -> f64 {
        u * v * (1.0 + g * u * (1.0 - u) * (1.0 - v))
    }
    pub fn pdf(g: f64, u: f64, v: f64) -> f64 {
        1.0 + g * u * (2.0 - 3.0 * u) * (1.0 - 2.0 * v)
    }
    pub fn h1(g: f64, u: f64, v: f64) -> f64 {
        v * (1.0 + g * u * (2.0 - 3.0 * u) * (1.0 - v))
    }
    pub fn h2(g: f64, u: f64, v: f64) -> f64 {
        u * (1.0 + g * u * (1.0 - u) * (1.0 - 2.0 * v))
    }
    pub fn h1_inv(g: f64, p: f64, u: f64) -> f64 {
        fgm_quadratic_root(p, g * u * (2.0 - 3.0 * u))
    }
    pub fn h2_inv(g: f64, p: f64, v: f64) -> Result<f64> {
        numeric_inverse(|u| h2(g, u, v), p)
    }
    pub fn dh2_dtheta(u: f64, v: f64) -> f64 {
        u * u * (1.0 - u) * (1.0 - 2.0 * v)
    }
}

/// Frank kernels for `θ > 0`; negative parameters are handled by the
/// reflection `C_{-θ}(u,v) = u - C_θ(u, 1-v)` in the dispatcher.
pub(crate) mod frank {
    /// `D = e^{-θu}(1 - e^{-θv}) + e^{-θv}(1 - e^{-θ(1-v)})`, a sum of
    /// nonnegative terms equal to `(1 - e^{-θ}) - (1-e^{-θu})(1-e^{-θv})`.
    fn denom(t: f64, u: f64, v: f64) -> f64 {
        let x = (-t * u).exp();
        let y = (-t * v).exp();
        x * -(-t * v).exp_m1() + y * -(-t * (1.0 - v)).exp_m1()
    }

    pub fn cdf(t: f64, u: f64, v: f64) -> f64 {
        let r = (-t * u).exp_m1() * (-t * v).exp_m1() / (-t).exp_m1();
        if r > -0.5 {
            -r.ln_1p() / t
        } else {
            -(denom(t, u, v).ln() - (-(-t).exp_m1()).ln()) / t
        }
    }

    pub fn log_pdf(t: f64, u: f64, v: f64) -> f64 {
        t.ln() + (-(-t).exp_m1()).ln() - t * (u + v) - 2.0 * denom(t, u, v).ln()
    }

    pub fn h1(t: f64, u: f64, v: f64) -> f64 {
        let x = (-t * u).exp();
        (x * -(-t * v).exp_m1() / denom(t, u, v)).clamp(0.0, 1.0)
    }

    pub fn h1_inv(t: f64, p: f64, u: f64) -> f64 {
        let a = (p * (t * u).exp_m1()).ln_1p();
        let b = (p * (-t * (1.0 - u)).exp_m1()).ln_1p();
        ((a - b) / t).clamp(0.0, 1.0)
    }

    /// Debye function `D_k(x) = k/x^k ∫_0^x t^k/(e^t-1) dt`.
    pub fn debye(k: i32, x: f64, rule: &crate::quad::QuadratureRule) -> f64 {
        let integrand = |s: f64| {
            if s == 0.0 {
                if k == 0 { 1.0 } else { 0.0 }
            } else {
                s.powi(k) / s.exp_m1()
            }
        };
        let raw = rule.integrate_on(0.0, x, integrand);
        k as f64 * raw / x.powi(k)
    }
}

/// `C(u,v) = uv + 3a p(u)p(v) + 5b q(u)q(v)` with `p = u(1-u)`,
/// `q = u(1-u)(1-2u)`; Sarmanov is `b = a²`.
pub(crate) mod sarmanov {
    use super::*;

    fn p(u: f64) -> f64 {
        u * (1.0 - u)
    }
    fn dp(u: f64) -> f64 {
        1.0 - 2.0 * u
    }
    fn q(u: f64) -> f64 {
        u * (1.0 - u) * (1.0 - 2.0 * u)
    }
    fn dq(u: f64) -> f64 {
        1.0 - 6.0 * u + 6.0 * u * u
    }

    pub fn cdf(a: f64, b: f64, u: f64, v: f64) -> f64 {
        u * v + 3.0 * a * p(u) * p(v) + 5.0 * b * q(u) * q(v)
    }
    pub fn pdf(a: f64, b: f64, u: f64, v: f64) -> f64 {
        1.0 + 3.0 * a * dp(u) * dp(v) + 5.0 * b * dq(u) * dq(v)
    }
    pub fn h1(a: f64, b: f64, u: f64, v: f64) -> f64 {
        (v + 3.0 * a * dp(u) * p(v) + 5.0 * b * dq(u) * q(v)).clamp(0.0, 1.0)
    }
    pub fn h1_inv(a: f64, b: f64, pr: f64, u: f64) -> Result<f64> {
        numeric_inverse(|v| h1(a, b, u, v), pr)
    }

    /// Upper end of the admissible `b` range for a given `a`.
    pub fn b_max(a: f64) -> f64 {
        ((1.0 - 3.0 * a * a).max(0.0).sqrt() + 1.0) / 5.0
    }

    pub const ALPHA_MAX: f64 = 0.529_150_262_212_918_1; // sqrt(7)/5
}

/// BB1 evaluated in log space so that `(u^{-θ}-1)^δ` cannot overflow.
pub(crate) mod bb1 {
    use super::*;

    /// `ln(u^{-θ} - 1)`.
    fn ln_gen(t: f64, u: f64) -> f64 {
        let z = -t * u.ln();
        if z > 30.0 {
            z + (-(-z).exp()).ln_1p()
        } else {
            z.exp_m1().ln()
        }
    }

    fn softplus(x: f64) -> f64 {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    }

    fn lse(a: f64, b: f64) -> f64 {
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + ((a - m).exp() + (b - m).exp()).ln()
    }

    struct Parts {
        ls: f64,
        lw: f64,
        l1w: f64,
    }

    fn parts(d: f64, lgu: f64, lgv: f64) -> Parts {
        let ls = lse(d * lgu, d * lgv);
        let lw = ls / d;
        Parts { ls, lw, l1w: softplus(lw) }
    }

    pub fn cdf(t: f64, d: f64, u: f64, v: f64) -> f64 {
        let p = parts(d, ln_gen(t, u), ln_gen(t, v));
        (-p.l1w / t).exp()
    }

    pub fn h1(t: f64, d: f64, u: f64, v: f64) -> f64 {
        let lgu = ln_gen(t, u);
        let p = parts(d, lgu, ln_gen(t, v));
        let ln_xu = (d - 1.0) * lgu - (t + 1.0) * u.ln();
        let lh = (-1.0 / t - 1.0) * p.l1w + (1.0 / d - 1.0) * p.ls + ln_xu;
        lh.exp().clamp(0.0, 1.0)
    }

    pub fn log_pdf(t: f64, d: f64, u: f64, v: f64) -> f64 {
        let lgu = ln_gen(t, u);
        let lgv = ln_gen(t, v);
        let p = parts(d, lgu, lgv);
        let ln_xu = (d - 1.0) * lgu - (t + 1.0) * u.ln();
        let ln_xv = (d - 1.0) * lgv - (t + 1.0) * v.ln();
        let bracket = if d > 1.0 {
            lse(p.lw + (1.0 + t * d).ln(), (t * (d - 1.0)).ln())
        } else {
            p.lw + (1.0 + t).ln()
        };
        ln_xu + ln_xv + (-1.0 / t - 2.0) * p.l1w + (1.0 / d - 2.0) * p.ls + bracket
    }

    pub fn h1_inv(t: f64, d: f64, pr: f64, u: f64) -> Result<f64> {
        numeric_inverse(|v| h1(t, d, u, v), pr)
    }
}

/// Ali-Mikhail-Haq, `C = uv / (1 - α(1-u)(1-v))`.
pub(crate) mod amh {
    use super::*;

    fn denom(a: f64, u: f64, v: f64) -> f64 {
        1.0 - a * (1.0 - u) * (1.0 - v)
    }
    pub fn cdf(a: f64, u: f64, v: f64) -> f64 {
        u * v / denom(a, u, v)
    }
    pub fn pdf(a: f64, u: f64, v: f64) -> f64 {
        let d = denom(a, u, v);
        let num = 1.0 + a * ((1.0 + u) * (1.0 + v) - 3.0) + a * a * (1.0 - u) * (1.0 - v);
        num / (d * d * d)
    }
    pub fn h1(a: f64, u: f64, v: f64) -> f64 {
        let d = denom(a, u, v);
        (v * (1.0 - a * (1.0 - v)) / (d * d)).clamp(0.0, 1.0)
    }

    /// Solves `p (A + Bv)^2 = (1-α)v + αv^2` and polishes with Newton steps.
    pub fn h1_inv(a: f64, p: f64, u: f64) -> Result<f64> {
        let big_a = 1.0 - a * (1.0 - u);
        let big_b = a * (1.0 - u);
        let c2 = p * big_b * big_b - a;
        let c1 = 2.0 * p * big_a * big_b - (1.0 - a);
        let c0 = p * big_a * big_a;
        let mut roots = [f64::NAN; 2];
        if c2.abs() < 1e-14 {
            roots[0] = -c0 / c1;
        } else {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
                roots = [q / c2, c0 / q];
            }
        }
        let pick = roots
            .iter()
            .copied()
            .filter(|r| r.is_finite() && *r >= -1e-9 && *r <= 1.0 + 1e-9)
            .min_by(|x, y| {
                (h1(a, u, x.clamp(0.0, 1.0)) - p)
                    .abs()
                    .total_cmp(&(h1(a, u, y.clamp(0.0, 1.0)) - p).abs())
            });
        let Some(mut v) = pick.map(|r| r.clamp(0.0, 1.0)) else {
            return numeric_inverse(|v| h1(a, u, v), p);
        };
        for _ in 0..2 {
            let f = h1(a, u, v) - p;
            let dens = pdf(a, u, v);
            if f.abs() <= H_INV_TOL || !(dens > 0.0) {
                break;
            }
            v = (v - f / dens).clamp(0.0, 1.0);
        }
        if (h1(a, u, v) - p).abs() > 1e-12 {
            return numeric_inverse(|v| h1(a, u, v), p);
        }
        Ok(v)
    }

    pub fn tau(a: f64) -> f64 {
        if a.abs() < 1e-6 {
            // series 2α/9 + α²/18 + ...
            return 2.0 * a / 9.0 + a * a / 18.0;
        }
        let tail = if a >= 1.0 { 0.0 } else { (1.0 - a).powi(2) * (-a).ln_1p() };
        1.0 - 2.0 * (a + tail) / (3.0 * a * a)
    }
}

/// Closed-form first-order partial copula of the trivariate Frank copula,
/// `C(a,b) = ab φ(s)` with `s = a + b - ab` and `φ(s) = ln(1 + (e^θ-1)s)/(θs)`.
pub(crate) mod partial_frank {
    const SERIES_CUTOFF: f64 = 0.1;
    const SERIES_TERMS: usize = 40;

    /// `(φ, φ', φ'')` at `s`; `e = e^θ - 1`.
    pub fn phi(t: f64, e: f64, s: f64) -> (f64, f64, f64) {
        let x = e * s;
        if x.abs() < SERIES_CUTOFF {
            // L/x, N/x², M/x³ by their power series in x
            let mut pw = [1.0; SERIES_TERMS];
            for j in 1..SERIES_TERMS {
                pw[j] = pw[j - 1] * x;
            }
            let (mut l, mut n, mut m) = (0.0, 0.0, 0.0);
            for k in 1..=SERIES_TERMS {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                l += sign * pw[k - 1] / kf;
                if k >= 2 {
                    n += sign * (kf - 1.0) / kf * pw[k - 2];
                }
                if k >= 3 {
                    m += sign * (kf - 1.0) * (kf - 2.0) / kf * pw[k - 3];
                }
            }
            return (e / t * l, e * e / t * n, e * e * e / t * m);
        }
        let l = x.ln_1p();
        let n = x / (1.0 + x) - l;
        let lpp = -(x / (1.0 + x)).powi(2);
        (l / (t * s), n / (t * s * s), (lpp - 2.0 * n) / (t * s * s * s))
    }

    pub fn cdf(t: f64, e: f64, a: f64, b: f64) -> f64 {
        let s = a + b - a * b;
        if s == 0.0 {
            return 0.0;
        }
        a * b * phi(t, e, s).0
    }

    pub fn h1(t: f64, e: f64, a: f64, b: f64) -> f64 {
        let s = a + b - a * b;
        let (p0, p1, _) = phi(t, e, s);
        (b * p0 + a * b * p1 * (1.0 - b)).clamp(0.0, 1.0)
    }

    pub fn pdf(t: f64, e: f64, a: f64, b: f64) -> f64 {
        let s = a + b - a * b;
        let (p0, p1, p2) = phi(t, e, s);
        p0 + p1 * (b * (1.0 - a) + a * (1.0 - b) - a * b) + a * b * (1.0 - a) * (1.0 - b) * p2
    }
}
