use super::*;
use crate::quad::{gauss_legendre, integrate_nd};
use crate::stats::ks_uniform;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(0.001..0.999)).collect()).collect()
}

fn frank_vine() -> SimplifiedVineSpec {
    let f = BivariateCopula::frank(5.74).unwrap();
    SimplifiedVineSpec::new(3, vec![vec![f.clone(), f], vec![BivariateCopula::partial_frank(5.74).unwrap()]]).unwrap()
}

#[test]
fn independence() {
    let s = SimplifiedVineSpec::independence(5).unwrap();
    let pts = random_points(5, 100, 1);
    for u in &pts {
        assert_eq!(s.density(u).unwrap(), 1.0);
        assert_eq!(s.pseudo_cpit(u, 4, 1..4).unwrap(), u[4]);
    }
    assert_eq!(s.loglik(&pts).unwrap(), 0.0);
}

#[test]
fn fgm5_pvc_pseudo_cpits() {
    let ind = BivariateCopula::independence();
    let s = SimplifiedVineSpec::new(
        4,
        vec![
            vec![ind.clone(); 3],
            vec![BivariateCopula::fgm(0.0).unwrap(); 2],
            vec![BivariateCopula::fgm(1.0 / 9.0).unwrap()],
        ],
    )
    .unwrap();
    for u in random_points(4, 200, 2) {
        assert!((s.pseudo_cpit(&u, 0, 1..3).unwrap() - u[0]).abs() < 1e-15);
        let want = u[0] * (1.0 + (1.0 - u[0]) * (1.0 - 2.0 * u[3]) / 9.0);
        assert!((s.pseudo_cpit(&u, 0, 1..4).unwrap() - want).abs() < 1e-15);
    }
}

#[test]
fn density_normalizes() {
    let f = BivariateCopula::fgm(1.0).unwrap();
    let s = SimplifiedVineSpec::new(3, vec![vec![f.clone(), f], vec![BivariateCopula::independence()]]).unwrap();
    let rule = gauss_legendre(24).unwrap();
    let total = integrate_nd(|u| s.density(u).unwrap(), 3, &rule).unwrap();
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn log_density_is_sum_over_edges() {
    let s = frank_vine();
    let (c12, c23, c13) = (s.edge(1, 0), s.edge(1, 1), s.edge(2, 0));
    let pts = random_points(3, 1000, 3);
    let mut rows = 0.0;
    for u in &pts {
        let a = c12.h2(u[0], u[1]).unwrap();
        let b = c23.h1(u[1], u[2]).unwrap();
        assert_eq!(s.pseudo_cpit(u, 0, 1..2).unwrap(), a);
        assert_eq!(s.pseudo_cpit(u, 2, 1..2).unwrap(), b);
        let want = c12.log_pdf(u[0], u[1]).unwrap() + c23.log_pdf(u[1], u[2]).unwrap() + c13.log_pdf(a, b).unwrap();
        let got = s.log_density(u).unwrap();
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        rows += want;
    }
    let ll = s.loglik(&pts).unwrap();
    assert!((ll - rows).abs() < 1e-9 * rows.abs().max(1.0));
}

#[test]
fn samples_round_trip() {
    let s = frank_vine();
    let rows = s.sample(20_000, 42).unwrap();
    let w: Vec<Vec<f64>> = rows.iter().map(|u| s.rosenblatt(u).unwrap()).collect();
    for k in 0..3 {
        let col: Vec<f64> = w.iter().map(|r| r[k]).collect();
        assert!(ks_uniform(&col).p_value > 0.01);
    }
    for u in rows.iter().take(1000) {
        let back = s.inverse_rosenblatt(&s.rosenblatt(u).unwrap()).unwrap();
        for k in 0..3 {
            assert!((back[k] - u[k]).abs() < 1e-8);
        }
    }
    let ind = SimplifiedVineSpec::independence(3).unwrap().sample(20_000, 1).unwrap();
    for k in 0..3 {
        let col: Vec<f64> = ind.iter().map(|r| r[k]).collect();
        assert!(ks_uniform(&col).p_value > 0.01);
    }
}

#[test]
fn loglik_prefers_true_parameters() {
    let s = frank_vine();
    let data = s.sample(100_000, 42).unwrap();
    let f = BivariateCopula::frank(2.0).unwrap();
    let far = SimplifiedVineSpec::new(3, vec![vec![f.clone(), f], vec![BivariateCopula::partial_frank(2.0).unwrap()]]).unwrap();
    assert!(s.loglik(&data).unwrap() > far.loglik(&data).unwrap());
}

#[test]
fn loglik_reports_bad_rows() {
    let s = frank_vine();
    let data = vec![vec![0.2, 0.3, 0.4], vec![0.2, 1.0, 0.4]];
    assert!(matches!(s.loglik(&data), Err(PvcError::Row { row: 1, .. })));
}

#[test]
fn structure_is_validated() {
    assert!(SimplifiedVineSpec::new(3, vec![vec![BivariateCopula::independence()]]).is_err());
    assert!(SimplifiedVineSpec::new(1, vec![]).is_err());
}

#[test]
fn serde_round_trip() {
    let s = frank_vine();
    let json = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<SimplifiedVineSpec>(&json).unwrap(), s);
    let bad = r#"{"d":3,"edges":[[{"family":"indep","params":[]}]]}"#;
    assert!(serde_json::from_str::<SimplifiedVineSpec>(bad).is_err());
}

proptest! {
    #[test]
    fn density_positive(u in prop::collection::vec(0.001f64..0.999, 3)) {
        prop_assert!(frank_vine().density(&u).unwrap() > 0.0);
    }
}
