use proptest::prelude::*;
use pvc_core::bicop::{BivariateCopula, Family};
use pvc_core::dvine::presets::{ex3, ex4, frank3};
use pvc_core::fit::{fit_joint, fit_stepwise, frank_model, pseudo_obs, pvc_limit_params, ModelSpec};
use pvc_core::kld::{kld_total, Integration};
use pvc_core::pvc::{build_pvc, PvcBuildConfig, TreeMode};
use pvc_core::svc::SimplifiedVineSpec;

#[test]
fn closed_form_pvc_of_ex3_has_the_scipy_kld() {
    // tplquad of c·log(c/c_pvc) for g(u2) = u2 gives 0.005213673283117228
    let dgp = ex3(0.0, 1.0).unwrap();
    let cfg = PvcBuildConfig { modes: vec![TreeMode::ClosedForm], ..Default::default() };
    let pvc = build_pvc(&dgp, &cfg).unwrap();
    assert_eq!(pvc.spec.edge(2, 0).params(), vec![0.5]);
    let rep = kld_total(&dgp, &pvc.spec, Integration::Quadrature { order: 48 }).unwrap();
    assert!((rep.total - 0.005213673283117228).abs() < 1e-9, "{}", rep.total);
    assert_eq!(rep.per_tree[0], 0.0);
}

#[test]
fn stepwise_fit_of_frank3_tracks_pvc_limit() {
    let dgp = frank3(5.74).unwrap();
    let model = frank_model();
    let limit = pvc_limit_params(&dgp, &model, Integration::Quadrature { order: 24 }).unwrap();
    let data = dgp.sample(40_000, 5).unwrap();
    let fit = fit_stepwise(&model, &data).unwrap();
    for (a, b) in fit.theta.iter().zip(&limit) {
        assert!((a - b).abs() < 0.2, "{:?} vs {limit:?}", fit.theta);
    }
    // first-tree margins of the trivariate Frank copula are Frank(θ)
    assert!((limit[0] - 5.74).abs() < 1e-3 && (limit[1] - 5.74).abs() < 1e-3);
}

#[test]
fn simplified_dgp_kld_is_zero_against_itself() {
    let dgp = ex4(5.74).unwrap();
    let spec = dgp.as_simplified().unwrap();
    let rep = kld_total(&dgp, &spec, Integration::Quadrature { order: 24 }).unwrap();
    assert!(rep.total.abs() < 1e-10);
}

fn fgm3() -> ModelSpec {
    ModelSpec::from_families(3, &[vec![Family::Fgm, Family::Fgm], vec![Family::Fgm]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn joint_loglik_never_below_stepwise(a in -0.9f64..0.9, b in -0.9f64..0.9, c in -0.9f64..0.9, seed in 0u64..1000) {
        let truth = SimplifiedVineSpec::new(3, vec![
            vec![BivariateCopula::fgm(a).unwrap(), BivariateCopula::fgm(b).unwrap()],
            vec![BivariateCopula::fgm(c).unwrap()],
        ]).unwrap();
        let data = truth.sample(400, seed).unwrap();
        let s = fit_stepwise(&fgm3(), &data).unwrap();
        let j = fit_joint(&fgm3(), &data, &s.theta).unwrap();
        prop_assert!(j.loglik >= s.loglik - 1e-8);
    }

    #[test]
    fn pseudo_obs_preserve_order(xs in prop::collection::vec(-1e3f64..1e3, 3..60)) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let data: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let u = pseudo_obs(&data).unwrap();
        let n = xs.len() as f64;
        for i in 0..xs.len() {
            prop_assert!(u[i][0] > 0.0 && u[i][0] < 1.0);
            for j in 0..xs.len() {
                if xs[i] < xs[j] {
                    prop_assert!(u[i][0] < u[j][0]);
                }
            }
        }
        let total: f64 = u.iter().map(|r| r[0]).sum();
        prop_assert!((total - n / 2.0).abs() < 1e-9);
    }
}
