use super::*;
use crate::dvine::presets::{ex3, ex4};

fn fgm_model3() -> ModelSpec {
    ModelSpec::from_families(3, &[vec![Family::Fgm, Family::Fgm], vec![Family::Fgm]]).unwrap()
}

#[test]
fn names_and_layout() {
    let m = bb1_sarmanov_model();
    assert_eq!(m.n_free(), 6);
    assert_eq!(
        m.param_names(),
        ["theta_12", "delta_12", "theta_23", "delta_23", "a_13;2", "b_13;2"]
    );
    let fixed = ModelSpec::new(
        3,
        vec![
            vec![EdgeModel::free(Family::Frank), EdgeModel { family: Family::Frank, fixed: vec![Some(2.0)] }],
            vec![EdgeModel::free(Family::PartialFrank)],
        ],
    )
    .unwrap();
    assert_eq!(fixed.param_names(), ["theta_12", "theta_13;2"]);
    let s = fixed.build(&[1.0, 3.0]).unwrap();
    assert_eq!(s.edge(1, 1).params(), vec![2.0]);
    assert_eq!(s.edge(2, 0).params(), vec![3.0]);
    assert_eq!(edge_label(3, 1), "25;3,4");
}

#[test]
fn model_validation() {
    assert!(ModelSpec::from_families(3, &[vec![Family::Fgm]]).is_err());
    assert!(ModelSpec::from_families(3, &[vec![Family::Fgm, Family::Numeric], vec![Family::Fgm]]).is_err());
    let bad = EdgeModel { family: Family::Bb1, fixed: vec![None] };
    assert!(ModelSpec::new(2, vec![vec![bad]]).is_err());
    assert!(fgm_model3().build(&[0.1, 0.2]).is_err());
    assert!(fgm_model3().build(&[0.1, 0.2, 1.5]).is_err());
    let json = serde_json::to_string(&frank_model()).unwrap();
    assert_eq!(serde_json::from_str::<ModelSpec>(&json).unwrap(), frank_model());
}

#[test]
fn pseudo_obs_ranks() {
    let data = vec![vec![3.0, 1.0], vec![1.0, 1.0], vec![2.0, 5.0]];
    let u = pseudo_obs(&data).unwrap();
    assert_eq!(u[0][0], 0.75);
    assert_eq!(u[1][0], 0.25);
    assert_eq!(u[0][1], 0.375);
    assert_eq!(u[2][1], 0.75);
    assert!(pseudo_obs(&[vec![1.0, 2.0], vec![1.0, 3.0]]).is_err());
    assert!(pseudo_obs(&[vec![1.0]]).is_err());
}

#[test]
fn stepwise_recovers_simplified_truth() {
    let dgp = ex4(5.74).unwrap();
    let data = dgp.sample(20_000, 3).unwrap();
    let fit = fit_stepwise(&frank_model(), &data).unwrap();
    let truth = pvc_limit_params(&dgp, &frank_model(), Integration::Quadrature { order: 24 }).unwrap();
    for (k, (a, b)) in fit.theta.iter().zip(&truth).enumerate() {
        assert!((a - b).abs() < 0.25, "coord {k}: {a} vs {b}");
    }
    assert!((truth[0] - 5.74).abs() < 1e-3 && (truth[1] - 5.74).abs() < 1e-3);
}

#[test]
fn joint_never_worse_than_start() {
    let dgp = ex3(0.0, 1.0).unwrap();
    let data = dgp.sample(3000, 8).unwrap();
    let m = fgm_model3();
    let s = fit_stepwise(&m, &data).unwrap();
    let j = fit_joint(&m, &data, &s.theta).unwrap();
    assert!(j.loglik >= s.loglik - 1e-8);
    assert_eq!(j.mode, FitMode::Joint);
    assert!(j.gradient_norm.unwrap() < 1e-2);
    assert!(fit_joint(&m, &data, &[0.0, 0.0, 2.0]).is_err());
}

#[test]
fn pvc_limit_of_ex3_is_mean_of_g() {
    let dgp = ex3(0.0, 1.0).unwrap();
    let p = pvc_limit_params(&dgp, &fgm_model3(), Integration::Quadrature { order: 32 }).unwrap();
    assert!(p[0].abs() < 1e-6 && p[1].abs() < 1e-6, "{p:?}");
    assert!((p[2] - 0.5).abs() < 1e-6, "{p:?}");
}

#[test]
fn pseudo_true_equals_truth_when_simplified() {
    let dgp = ex4(5.74).unwrap();
    let q = Integration::Quadrature { order: 24 };
    let limit = pvc_limit_params(&dgp, &frank_model(), q).unwrap();
    let star = pseudo_true_params(&dgp, &frank_model(), q).unwrap();
    for (a, b) in limit.iter().zip(&star) {
        assert!((a - b).abs() < 2e-3, "{limit:?} vs {star:?}");
    }
}

#[test]
fn replication_study_is_deterministic() {
    let dgp = ex4(5.74).unwrap();
    let cfg = ReplicationConfig { n_list: vec![300], replications: 4, seed: 42, margins: Margins::Known };
    let a = replication_study(&dgp, &frank_model(), &cfg).unwrap();
    let b = replication_study(&dgp, &frank_model(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len() + a.failures.len(), 4);
    assert_eq!(a.summary.len(), 3);
    for r in &a.rows {
        assert!(r.loglik_j >= r.loglik_s - 1e-8);
    }
    let bad = ReplicationConfig { replications: 1, ..cfg };
    assert!(replication_study(&dgp, &frank_model(), &bad).is_err());
}

#[test]
fn ranks_variant_runs() {
    let dgp = ex4(5.74).unwrap();
    let cfg = ReplicationConfig { n_list: vec![200], replications: 2, seed: 1, margins: Margins::Ranks };
    let rep = replication_study(&dgp, &frank_model(), &cfg).unwrap();
    assert_eq!(rep.rows.len(), 2);
}
