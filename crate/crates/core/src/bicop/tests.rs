use super::*;
use crate::quad::{gauss_legendre, integrate_nd};
use proptest::prelude::*;

fn all_families() -> Vec<BivariateCopula> {
    vec![
        BivariateCopula::independence(),
        BivariateCopula::fgm(1.0).unwrap(),
        BivariateCopula::fgm(-0.6).unwrap(),
        BivariateCopula::asym_fgm(1.0).unwrap(),
        BivariateCopula::asym_fgm(-0.7).unwrap(),
        BivariateCopula::frank(5.74).unwrap(),
        BivariateCopula::frank(-3.0).unwrap(),
        BivariateCopula::frank(30.0).unwrap(),
        BivariateCopula::partial_frank(5.74).unwrap(),
        BivariateCopula::partial_frank(0.3).unwrap(),
        BivariateCopula::sarmanov(0.5).unwrap(),
        BivariateCopula::sarmanov(-0.3).unwrap(),
        BivariateCopula::partial_sarmanov(0.2, 0.1).unwrap(),
        BivariateCopula::bb1(2.0, 2.0).unwrap(),
        BivariateCopula::bb1(0.5, 1.0).unwrap(),
        BivariateCopula::amh(0.8).unwrap(),
        BivariateCopula::amh(-0.9).unwrap(),
    ]
}

// finite-difference oracles on the cdf
fn fd_h1(c: &BivariateCopula, u: f64, v: f64) -> f64 {
    let e = 1e-6;
    (c.cdf(u + e, v).unwrap() - c.cdf(u - e, v).unwrap()) / (2.0 * e)
}

fn fd_pdf(c: &BivariateCopula, u: f64, v: f64) -> f64 {
    let e = 1e-4;
    let f = |a: f64, b: f64| c.cdf(a, b).unwrap();
    (f(u + e, v + e) - f(u + e, v - e) - f(u - e, v + e) + f(u - e, v - e)) / (4.0 * e * e)
}

/// `∫∫ f` over the unit square after the substitution
/// `u = x³/(x³ + (1-x)³)` on both axes, which flattens corner
/// singularities of tail-dependent densities.
fn graded_integral<F: Fn(f64, f64) -> f64>(f: F, order: usize) -> f64 {
    let rule = gauss_legendre(order).unwrap();
    let map = |x: f64| {
        let (a, b) = (x.powi(3), (1.0 - x).powi(3));
        let jac = 3.0 * (x * (1.0 - x)).powi(2) / (a + b).powi(2);
        (a / (a + b), jac)
    };
    integrate_nd(
        |x| {
            let ((u, ju), (v, jv)) = (map(x[0]), map(x[1]));
            ju * jv * f(u, v)
        },
        2,
        &rule,
    )
    .unwrap()
}

#[test]
fn cdf_examples() {
    let ind = BivariateCopula::independence();
    assert!((ind.cdf(0.3, 0.7).unwrap() - 0.21).abs() < 1e-15);
    let f = BivariateCopula::fgm(1.0).unwrap();
    assert!((f.cdf(0.5, 0.5).unwrap() - 0.3125).abs() < 1e-15);
    // uv[1 + γu(1-u)(1-v)] at (0.5, 0.5), γ = 1: 0.25 · 1.125
    let a = BivariateCopula::asym_fgm(1.0).unwrap();
    assert!((a.cdf(0.5, 0.5).unwrap() - 0.28125).abs() < 1e-15);
}

#[test]
fn pdf_examples() {
    assert_eq!(BivariateCopula::independence().pdf(0.2, 0.9).unwrap(), 1.0);
    assert!((BivariateCopula::fgm(1.0).unwrap().pdf(0.5, 0.5).unwrap() - 1.0).abs() < 1e-15);
    let rule = gauss_legendre(64).unwrap();
    let fr = BivariateCopula::frank(5.74).unwrap();
    let total = integrate_nd(|x| fr.pdf(x[0], x[1]).unwrap(), 2, &rule).unwrap();
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn boundary_conditioning_is_an_error() {
    let f = BivariateCopula::fgm(0.5).unwrap();
    assert!(f.h1(0.0, 0.5).is_err());
    assert!(f.h2(0.5, 1.0).is_err());
    assert!(f.pdf(0.0, 0.5).is_err());
    assert!(f.cdf(1.2, 0.5).is_err());
}

#[test]
fn parameter_validation() {
    assert!(BivariateCopula::fgm(1.01).is_err());
    assert!(BivariateCopula::asym_fgm(-1.5).is_err());
    assert!(BivariateCopula::frank(0.0).is_err());
    assert!(BivariateCopula::sarmanov(0.53).is_err());
    assert!(BivariateCopula::sarmanov(SARMANOV_ALPHA_MAX).is_ok());
    assert!(BivariateCopula::partial_sarmanov(0.3, 0.05).is_err());
    assert!(BivariateCopula::partial_sarmanov(0.3, 0.09).is_ok());
    assert!(BivariateCopula::partial_sarmanov(0.0, 0.41).is_err());
    assert!(BivariateCopula::bb1(0.0, 2.0).is_err());
    assert!(BivariateCopula::bb1(1.0, 0.9).is_err());
    assert!(BivariateCopula::partial_frank(-1.0).is_err());
    assert!(BivariateCopula::new(Family::Fgm, &[0.1, 0.2]).is_err());
    assert!(BivariateCopula::new(Family::Frank, &[f64::NAN]).is_err());
}

#[test]
fn h_function_closed_forms() {
    let ind = BivariateCopula::independence();
    for v in [0.1, 0.5, 0.9] {
        assert_eq!(ind.h2(0.37, v).unwrap(), 0.37);
    }
    let t = 0.7;
    let f = BivariateCopula::fgm(t).unwrap();
    let a = BivariateCopula::asym_fgm(1.0).unwrap();
    for &(u, v) in &[(0.2, 0.3), (0.8, 0.1), (0.5, 0.95)] {
        let want = u * (1.0 + t * (1.0 - u) * (1.0 - 2.0 * v));
        assert!((f.h2(u, v).unwrap() - want).abs() < 1e-15);
        let want_a = u * (1.0 + u * (1.0 - u) * (1.0 - 2.0 * v));
        assert!((a.h2(u, v).unwrap() - want_a).abs() < 1e-15);
    }
}

#[test]
fn fgm_quantile_closed_form() {
    // (1 + h - sqrt((1+h)^2 - 4hp)) / (2h), h = θ(1-2v)
    let t = 0.9;
    let f = BivariateCopula::fgm(t).unwrap();
    for &(p, v) in &[(0.3, 0.1), (0.7, 0.8), (0.5, 0.25)] {
        let h: f64 = t * (1.0 - 2.0 * v);
        let want = (1.0 + h - ((1.0 + h).powi(2) - 4.0 * h * p).sqrt()) / (2.0 * h);
        assert!((f.h2_inv(p, v).unwrap() - want).abs() < 1e-13);
    }
}

#[test]
fn invert_monotone_on_fgm_h2() {
    let f = BivariateCopula::fgm(1.0).unwrap();
    let x = crate::quad::invert_monotone(|x| f.h2(x, 0.25).unwrap(), 0.5, 1e-10).unwrap();
    assert!((f.h2(x, 0.25).unwrap() - 0.5).abs() <= 1e-10);
}

#[test]
fn frank_round_trip_grid() {
    let c = BivariateCopula::frank(5.74).unwrap();
    for i in 1..=21 {
        for j in 1..=21 {
            let x = i as f64 / 22.0;
            let u = j as f64 / 22.0;
            let p = c.h2(x, u).unwrap();
            assert!((c.h2_inv(p, u).unwrap() - x).abs() <= 1e-9);
        }
    }
}

#[test]
fn every_inverse_round_trips_on_grid() {
    for c in all_families() {
        for i in 1..=21 {
            for j in 1..=21 {
                let p = i as f64 / 22.0;
                let w = j as f64 / 22.0;
                let v = c.h1_inv(p, w).unwrap();
                let e1 = (c.h1(w, v).unwrap() - p).abs();
                let u = c.h2_inv(p, w).unwrap();
                let e2 = (c.h2(u, w).unwrap() - p).abs();
                assert!(e1 <= 1e-10 && e2 <= 1e-10, "{}: {e1:e} {e2:e} at ({p}, {w})", c.label());
            }
        }
    }
}

#[test]
fn densities_normalize() {
    let rule = gauss_legendre(64).unwrap();
    for c in all_families().into_iter().filter(|c| c.family() != Family::Bb1) {
        let tol = if c.family() == Family::Frank && c.params()[0] > 20.0 { 1e-6 } else { 1e-8 };
        let total = integrate_nd(|x| c.pdf(x[0], x[1]).unwrap(), 2, &rule).unwrap();
        assert!((total - 1.0).abs() < tol, "{}: {total}", c.label());
    }
}

#[test]
fn tail_dependent_density_normalizes() {
    // The lower-tail ridge of BB1 defeats tensor rules near (0,0); check
    // the total with a graded rule and the exact rectangle identity
    // ∫∫_R c = C(b,b) - C(a,b) - C(b,a) + C(a,a) away from the corner.
    for c in all_families().into_iter().filter(|c| c.family() == Family::Bb1) {
        let total = graded_integral(|u, v| c.pdf(u, v).unwrap(), 128);
        assert!((total - 1.0).abs() < 1e-6, "{}: {total}", c.label());
        let (a, b) = (0.05, 0.99);
        let rule = gauss_legendre(64).unwrap();
        let inner = (b - a) * (b - a)
            * integrate_nd(|x| c.pdf(a + (b - a) * x[0], a + (b - a) * x[1]).unwrap(), 2, &rule)
                .unwrap();
        let cdf = |u, v| c.cdf(u, v).unwrap();
        let exact = cdf(b, b) - cdf(a, b) - cdf(b, a) + cdf(a, a);
        assert!((inner - exact).abs() < 1e-8, "{}: {inner} vs {exact}", c.label());
    }
}

#[test]
fn negative_frank_matches_direct_formula() {
    let t: f64 = -4.0;
    let c = BivariateCopula::frank(t).unwrap();
    for &(u, v) in &[(0.2, 0.3), (0.7, 0.6), (0.9, 0.05)] {
        let direct = -((1.0 + ((-t * u).exp() - 1.0) * ((-t * v).exp() - 1.0) / ((-t).exp() - 1.0))
            .ln())
            / t;
        assert!((c.cdf(u, v).unwrap() - direct).abs() < 1e-13);
        let dens = t * (1.0 - (-t).exp()) * (-t * (u + v)).exp()
            / ((1.0 - (-t).exp()) - (1.0 - (-t * u).exp()) * (1.0 - (-t * v).exp())).powi(2);
        let got = c.pdf(u, v).unwrap();
        assert!((got - dens).abs() < 1e-12 * dens.max(1.0), "{got} vs {dens}");
    }
}

#[test]
fn dependence_measures() {
    let ind = BivariateCopula::independence();
    assert_eq!((ind.spearman_rho().unwrap(), ind.kendall_tau().unwrap()), (0.0, 0.0));
    for a in [-0.4, 0.1, 0.5] {
        let s = BivariateCopula::sarmanov(a).unwrap();
        assert!((s.spearman_rho().unwrap() - a).abs() < 1e-15);
    }
    // oracle: 12∫∫C - 3 and 1 - 4∫∫h1h2 by quadrature
    let rule = gauss_legendre(96).unwrap();
    for c in all_families() {
        let rho = 12.0 * integrate_nd(|x| c.cdf(x[0], x[1]).unwrap(), 2, &rule).unwrap() - 3.0;
        let tau = 1.0 - 4.0 * graded_integral(|u, v| c.h1(u, v).unwrap() * c.h2(u, v).unwrap(), 96);
        let tol = if c.family() == Family::Frank && c.params()[0] > 20.0 { 1e-4 } else { 1e-7 };
        assert!((c.spearman_rho().unwrap() - rho).abs() < tol, "{} rho", c.label());
        assert!((c.kendall_tau().unwrap() - tau).abs() < tol, "{} tau", c.label());
    }
    let fr = BivariateCopula::frank(5.74).unwrap();
    assert!((fr.kendall_tau().unwrap() - 0.5).abs() < 0.002);
}

#[test]
fn partial_sarmanov_at_square_is_sarmanov() {
    for a in [-0.5, -0.1, 0.0, 0.3, 0.52] {
        let s = BivariateCopula::sarmanov(a).unwrap();
        let p = BivariateCopula::partial_sarmanov(a, a * a).unwrap();
        for &(u, v) in &[(0.1, 0.2), (0.5, 0.5), (0.33, 0.91)] {
            assert!((s.cdf(u, v).unwrap() - p.cdf(u, v).unwrap()).abs() <= 1e-12);
            assert!((s.pdf(u, v).unwrap() - p.pdf(u, v).unwrap()).abs() <= 1e-12);
        }
    }
}

/// The conditional copula of the trivariate Frank copula given the middle
/// margin, written out from the trivariate cdf by differentiation.
fn trivariate_frank_conditional_cdf(t: f64, a: f64, b: f64, u2: f64) -> f64 {
    // C(u1,u2,u3) = -1/θ ln(1 + Π(e^{-θu_i}-1)/(e^{-θ}-1)^2); the
    // conditional copula of (U1,U3) | U2 = u2 at the conditional quantiles.
    let e = |x: f64| (-t * x).exp() - 1.0;
    let z = (-t).exp() - 1.0;
    let f12 = |u1: f64| {
        // ∂C12/∂u2 at (u1,u2)
        let num = (-t * u2).exp() * e(u1);
        num / (z + e(u1) * e(u2))
    };
    let u1 = crate::quad::invert_monotone(f12, a, 1e-14).unwrap();
    let u3 = crate::quad::invert_monotone(f12, b, 1e-14).unwrap();
    let k = e(u1) * e(u2) * e(u3) / (z * z);
    // ∂_{u2} C(u1,u2,u3) / c2(u2) with c2 = 1
    let d = (-t * u2).exp() * e(u1) * e(u3) / (z * z) / (1.0 + k);
    d
}

#[test]
fn amh_is_the_trivariate_frank_conditional_copula() {
    let t: f64 = 5.74;
    for &u2 in &[0.1, 0.5, 0.85] {
        let alpha = 1.0 - (-t * u2).exp();
        let c = BivariateCopula::amh(alpha).unwrap();
        for &(a, b) in &[(0.2, 0.3), (0.6, 0.9), (0.5, 0.5)] {
            let want = trivariate_frank_conditional_cdf(t, a, b, u2);
            assert!((c.cdf(a, b).unwrap() - want).abs() < 1e-10, "{u2} {a} {b}");
        }
    }
}

#[test]
fn partial_frank_matches_integrated_amh() {
    let rule = gauss_legendre(128).unwrap();
    for &t in &[0.5, 5.74, 20.0] {
        let pf = BivariateCopula::partial_frank(t).unwrap();
        for &(a, b) in &[(0.5, 0.5), (0.1, 0.7), (0.95, 0.3), (1e-3, 0.2)] {
            let oracle = rule.integrate(|x| {
                let alpha = 1.0 - (-t * x).exp();
                a * b / (1.0 - alpha * (1.0 - a) * (1.0 - b))
            });
            assert!((pf.cdf(a, b).unwrap() - oracle).abs() < 1e-10, "θ={t} ({a},{b})");
            let dens = rule.integrate(|x| {
                BivariateCopula::amh(1.0 - (-t * x).exp()).unwrap().pdf(a, b).unwrap()
            });
            assert!((pf.pdf(a, b).unwrap() - dens).abs() < 1e-8, "θ={t} pdf ({a},{b})");
        }
    }
}

#[test]
fn partial_frank_series_branch_is_continuous() {
    // x = (e^θ-1)s crosses the series cutoff 0.1 near s = 0.1/(e^θ-1)
    let t: f64 = 2.0;
    let e = t.exp_m1();
    let pf = BivariateCopula::partial_frank(t).unwrap();
    let s_cut = 0.1 / e;
    let a = s_cut / 2.0;
    for k in [-1e-9, 0.0, 1e-9] {
        let b = a + k;
        let c = pf.pdf(a, b).unwrap();
        let h = pf.h1(a, b).unwrap();
        assert!((c - pf.pdf(a, a).unwrap()).abs() < 1e-6);
        assert!((h - pf.h1(a, a).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn partial_frank_tabulation() {
    let small = partial_frank(1e-7).unwrap();
    let n = small.cells();
    for i in 0..=n {
        for j in 0..=n {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            assert!((small.node_value(i, j) - a * b).abs() < 1e-6);
        }
    }
    let tab = partial_frank(5.74).unwrap();
    assert_eq!(tab.nodes(), 201);
    assert!(tab.margin_error() < 1e-8);
    let mut asym: f64 = 0.0;
    for i in 0..=200 {
        for j in 0..=200 {
            asym = asym.max((tab.node_value(i, j) - tab.node_value(j, i)).abs());
        }
    }
    assert!(asym <= 1e-8, "{asym}");
    let rule = gauss_legendre(200).unwrap();
    let brute = rule.integrate(|x| 0.25 / (1.0 - (1.0 - (-5.74 * x).exp()) * 0.25));
    assert!((tab.cdf(0.5, 0.5) - brute).abs() < 1e-6);
    assert!(partial_frank(-1.0).is_err());
}

#[test]
fn sampling_examples() {
    use crate::stats::{kendall_tau, ks_uniform, spearman_rho_with_se};
    let n = 100_000;
    let ind = BivariateCopula::independence().sample(n, 1).unwrap();
    for k in 0..2 {
        let col: Vec<f64> = ind.iter().map(|r| r[k]).collect();
        assert!(ks_uniform(&col).p_value > 0.01);
    }
    let f = BivariateCopula::fgm(1.0).unwrap().sample(n, 2).unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = f.iter().map(|r| (r[0], r[1])).unzip();
    let (rho, se) = spearman_rho_with_se(&x, &y);
    assert!((rho - 1.0 / 3.0).abs() < 3.0 * se, "{rho} ± {se}");
    let fr = BivariateCopula::frank(5.74).unwrap().sample(n, 3).unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = fr.iter().map(|r| (r[0], r[1])).unzip();
    assert!((kendall_tau(&x, &y) - 0.5).abs() < 0.01);
    let again = BivariateCopula::frank(5.74).unwrap().sample(n, 3).unwrap();
    assert_eq!(fr, again);
}

#[test]
fn serde_round_trip() {
    for c in all_families() {
        let s = serde_json::to_string(&c).unwrap();
        let back: BivariateCopula = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
    let c: BivariateCopula = serde_json::from_str(r#"{"family":"bb1","params":[2.0,2.0]}"#).unwrap();
    assert_eq!(c.family(), Family::Bb1);
    assert!(serde_json::from_str::<BivariateCopula>(r#"{"family":"fgm","params":[3.0]}"#).is_err());
    let tab = BivariateCopula::numeric(partial_frank_on(2.0, 11).unwrap());
    let back: BivariateCopula = serde_json::from_str(&serde_json::to_string(&tab).unwrap()).unwrap();
    assert!((back.cdf(0.3, 0.4).unwrap() - tab.cdf(0.3, 0.4).unwrap()).abs() < 1e-15);
    assert_eq!("psarmanov".parse::<Family>().unwrap(), Family::PartialSarmanov);
    assert!("gauss".parse::<Family>().is_err());
}

#[test]
fn checkerboard_basics() {
    let pairs: Vec<[f64; 2]> = BivariateCopula::frank(4.0).unwrap().sample(200_000, 9).unwrap();
    let cb = NumericBivariateCopula::empirical_checkerboard(&pairs, 20, "test").unwrap();
    assert!(cb.margin_error() < 1e-8);
    let c = BivariateCopula::numeric(cb);
    // midpoint rule on a 4x finer grid is exact for a checkerboard density
    let m = 80;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (u, v) = ((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64);
            total += c.pdf(u, v).unwrap() / (m * m) as f64;
        }
    }
    assert!((total - 1.0).abs() < 1e-12);
    let truth = BivariateCopula::frank(4.0).unwrap();
    assert!((c.spearman_rho().unwrap() - truth.spearman_rho().unwrap()).abs() < 0.02);
    assert!((c.kendall_tau().unwrap() - truth.kendall_tau().unwrap()).abs() < 0.03);
    let bad = NumericBivariateCopula::from_cdf_fn(5, |u, v| u.max(v), "bad");
    assert!(bad.is_err());
}

fn family_and_params() -> impl Strategy<Value = BivariateCopula> {
    prop_oneof![
        (-1.0..1.0f64).prop_map(|t| BivariateCopula::fgm(t).unwrap()),
        (-1.0..1.0f64).prop_map(|t| BivariateCopula::asym_fgm(t).unwrap()),
        (0.2..15.0f64, prop::bool::ANY)
            .prop_map(|(t, s)| BivariateCopula::frank(if s { t } else { -t }).unwrap()),
        (0.05..20.0f64).prop_map(|t| BivariateCopula::partial_frank(t).unwrap()),
        (-0.52..0.52f64).prop_map(|a| BivariateCopula::sarmanov(a).unwrap()),
        (-0.52..0.52f64, 0.0..1.0f64).prop_map(|(a, w)| {
            let lo = a * a;
            let hi = families::sarmanov::b_max(a);
            BivariateCopula::partial_sarmanov(a, lo + w * (hi - lo)).unwrap()
        }),
        (0.1..4.0f64, 1.0..4.0f64).prop_map(|(t, d)| BivariateCopula::bb1(t, d).unwrap()),
        (-1.0..0.95f64).prop_map(|a| BivariateCopula::amh(a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn density_and_h_match_cdf_derivatives(
        c in family_and_params(), u in 0.05..0.95f64, v in 0.05..0.95f64
    ) {
        let dens = c.pdf(u, v).unwrap();
        prop_assert!(dens >= 0.0);
        let fd = fd_pdf(&c, u, v);
        prop_assert!((fd - dens).abs() <= 1e-4 * dens.max(1.0), "{} pdf {dens} fd {fd}", c.label());
        let h = c.h1(u, v).unwrap();
        let fdh = fd_h1(&c, u, v);
        prop_assert!((fdh - h).abs() <= 1e-6, "{} h1 {h} fd {fdh}", c.label());
    }

    #[test]
    fn frechet_bounds(c in family_and_params(), u in 0.0..1.0f64, v in 0.0..1.0f64) {
        let x = c.cdf(u, v).unwrap();
        prop_assert!(x >= (u + v - 1.0).max(0.0) - 1e-15 && x <= u.min(v) + 1e-15);
    }

    #[test]
    fn h_inverse_round_trip(c in family_and_params(), p in 0.0..1.0f64, w in 0.001..0.999f64) {
        let v = c.h1_inv(p, w).unwrap();
        prop_assert!((c.h1(w, v).unwrap() - p).abs() <= 1e-10);
        let u = c.h2_inv(p, w).unwrap();
        prop_assert!((c.h2(u, w).unwrap() - p).abs() <= 1e-10);
    }
}
