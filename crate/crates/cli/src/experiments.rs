//! Named experiments.

use std::path::PathBuf;

use anyhow::Result;
use pvc_core::bicop::{BivariateCopula, Family};
use pvc_core::dvine::presets::{ex1, ex3, ex4, fgm5, frank3, sarmanov3, FRANK_THETA, SIGMOID_SHIFT};
use pvc_core::dvine::{DVineSpec, ParamMap};
use pvc_core::fit::{pseudo_true_params, pvc_limit_params, replication_study, ModelSpec, Margins, ReplicationConfig};
use pvc_core::kld::{kld_derivative_at_zero, kld_per_tree, kld_total, Integration, DEFAULT_QUAD_ORDER};
use pvc_core::pvc::{build_pvc, fgm5_fourth_tree_density, ppit_pairs, PvcBuildConfig, TreeMode};
use pvc_core::quad::gauss_legendre;
use pvc_core::svc::SimplifiedVineSpec;

use crate::commands::{diagnostic_rows, linspace, scan_rows, DIAGNOSTIC_HEADER};
use crate::output::{Artifacts, Cell};
use crate::row;
use crate::settings::{ModelChoice, Settings};
use crate::Experiment;

const MARGIN_NODES: usize = 21;
const MEASURE_NODES: usize = 201;
const HIST_CELLS: usize = 10;

pub fn run(name: Experiment, s: &Settings) -> Result<PathBuf> {
    match name {
        Experiment::Ex1 => run_ex1(s),
        Experiment::Fgm5 => run_fgm5(s),
        Experiment::Ex3 => run_ex3(s),
        Experiment::Ex4 => {
            let theta = s.theta.unwrap_or(FRANK_THETA);
            run_study("ex4", ex4(theta)?, "frank", s)
        }
        Experiment::Ex5 => {
            let theta = s.theta.unwrap_or(FRANK_THETA);
            run_study("ex5", frank3(theta)?, "frank", s)
        }
        Experiment::Ex6 => {
            let dgp = sarmanov3(s.theta.unwrap_or(2.0), s.delta.unwrap_or(2.0), SIGMOID_SHIFT)?;
            run_study("ex6", dgp, "bb1_sarmanov", s)
        }
    }
}

/// Closed-form `(1,3)` margin of the first example.
pub fn ex1_c13(gamma: f64, a: f64, b: f64) -> f64 {
    a * b * (gamma * (a - 3.0 * a * a + 2.0 * a.powi(3)) * (1.0 - b) + 3.0) / 3.0
}

fn grid_point(i: usize, n: usize) -> f64 {
    i as f64 / (n - 1) as f64
}

fn run_ex1(s: &Settings) -> Result<PathBuf> {
    let gamma = s.gamma.unwrap_or(1.0);
    let order = s.order.unwrap_or(64);
    let dgp = ex1(gamma)?;
    let mut out = Artifacts::create(&s.out_dir("ex1"), format!("experiment ex1 gamma={gamma} order={order}"))?;

    let m = dgp.implicit_margin(0, 2, order, MARGIN_NODES)?;
    let mut rows = vec![];
    for i in 0..MARGIN_NODES {
        for j in 0..MARGIN_NODES {
            let (a, b) = (grid_point(i, MARGIN_NODES), grid_point(j, MARGIN_NODES));
            let (exact, num) = (ex1_c13(gamma, a, b), m.node_value(i, j));
            rows.push(row![a, b, exact, num, (exact - num).abs()]);
        }
    }
    out.csv("margins.csv", &["u1", "u3", "closed_form", "quadrature", "abs_diff"], rows)?;

    let cfg = PvcBuildConfig { modes: vec![TreeMode::ClosedForm], quad_order: order, ..Default::default() };
    let pvc = build_pvc(&dgp, &cfg)?.spec;
    let pm = pvc.implicit_margin(0, 2, order, MARGIN_NODES)?;
    let mut rows = vec![];
    for i in 0..MARGIN_NODES {
        for j in 0..MARGIN_NODES {
            let (a, b) = (grid_point(i, MARGIN_NODES), grid_point(j, MARGIN_NODES));
            rows.push(row![a, b, pm.node_value(i, j), a * b, (pm.node_value(i, j) - a * b).abs()]);
        }
    }
    out.csv("pvc_margin.csv", &["u1", "u3", "pvc", "product", "abs_diff"], rows)?;

    let fine = dgp.implicit_margin(0, 2, order, MEASURE_NODES)?;
    let rule = gauss_legendre(order)?;
    let mut int_c = 0.0;
    for (a, wa) in rule.iter() {
        for (b, wb) in rule.iter() {
            int_c += wa * wb * ex1_c13(gamma, a, b);
        }
    }
    let rho_closed = 12.0 * int_c - 3.0;
    let (rho_ref, tau_ref) = (-gamma / 1080.0, -gamma / 135.0);
    let rows = vec![
        row!["spearman_rho", "quadrature_margin", fine.spearman_rho(), rho_ref, (fine.spearman_rho() - rho_ref).abs()],
        row!["spearman_rho", "closed_form", rho_closed, rho_ref, (rho_closed - rho_ref).abs()],
        row!["kendall_tau", "quadrature_margin", fine.kendall_tau(), tau_ref, (fine.kendall_tau() - tau_ref).abs()],
    ];
    out.csv("measures.csv", &["quantity", "source", "value", "reference", "abs_diff"], rows)?;
    out.finish()
}

/// Expected mass of each fourth-tree histogram cell under the closed form.
pub fn fourth_tree_cell_masses(cells: usize) -> Result<Vec<Vec<f64>>> {
    let rule = gauss_legendre(8)?;
    let h = 1.0 / cells as f64;
    Ok((0..cells)
        .map(|i| {
            (0..cells)
                .map(|j| {
                    let mut acc = 0.0;
                    for (x, wx) in rule.iter() {
                        for (y, wy) in rule.iter() {
                            acc += wx * wy * fgm5_fourth_tree_density((i as f64 + x) * h, (j as f64 + y) * h);
                        }
                    }
                    acc * h * h
                })
                .collect()
        })
        .collect())
}

fn run_fgm5(s: &Settings) -> Result<PathBuf> {
    let (a, b) = (s.intercept.unwrap_or(1.0), s.slope.unwrap_or(-2.0));
    let dgp = fgm5(a, b)?;
    let cfg = PvcBuildConfig {
        modes: vec![
            TreeMode::ClosedForm,
            TreeMode::ParametricFit { family: Family::Fgm },
            TreeMode::ParametricFit { family: Family::Fgm },
        ],
        ..crate::commands::pvc_config(s)
    };
    let res = build_pvc(&dgp, &cfg)?;
    let mut out = Artifacts::create(&s.out_dir("fgm5"), format!("experiment fgm5 ({a},{b}) n={} seed={}", cfg.sample_count, cfg.seed))?;
    out.csv("diagnostics.csv", &DIAGNOSTIC_HEADER, diagnostic_rows(&res.diagnostics))?;

    let data = dgp.sample(cfg.sample_count, cfg.seed)?;
    let pairs = ppit_pairs(&res.spec.edges()[..3], &data, 4)?;
    let masses = fourth_tree_cell_masses(HIST_CELLS)?;
    let mut counts = vec![vec![0usize; HIST_CELLS]; HIST_CELLS];
    for p in &pairs[0] {
        let i = ((p[0] * HIST_CELLS as f64) as usize).min(HIST_CELLS - 1);
        let j = ((p[1] * HIST_CELLS as f64) as usize).min(HIST_CELLS - 1);
        counts[i][j] += 1;
    }
    let n = pairs[0].len() as f64;
    let mut rows = vec![];
    for i in 0..HIST_CELLS {
        for j in 0..HIST_CELLS {
            let (obs, exp) = (counts[i][j] as f64 / n, masses[i][j]);
            let se = (exp * (1.0 - exp) / n).sqrt();
            rows.push(row![i, j, obs, exp, se, (obs - exp) / se]);
        }
    }
    out.csv("fourth_tree_histogram.csv", &["cell_u", "cell_v", "observed", "expected", "std_error", "z"], rows)?;
    out.finish()
}

fn run_ex3(s: &Settings) -> Result<PathBuf> {
    let (a, b) = (s.intercept.unwrap_or(0.0), s.slope.unwrap_or(1.0));
    let order = s.order.unwrap_or(DEFAULT_QUAD_ORDER);
    let q = Integration::Quadrature { order };
    let dgp = ex3(a, b)?;
    let mut out = Artifacts::create(&s.out_dir("ex3"), format!("experiment ex3 ({a},{b}) order={order}"))?;

    let mean_g = a + b / 2.0;
    let pvc = |theta: f64| -> Result<SimplifiedVineSpec> {
        Ok(SimplifiedVineSpec::new(
            3,
            vec![vec![BivariateCopula::independence(); 2], vec![BivariateCopula::fgm(theta)?]],
        )?)
    };
    let rep = kld_total(&dgp, &pvc(mean_g)?, q)?;
    let mut rows: Vec<Vec<Cell>> = rep.per_tree.iter().enumerate().map(|(j, k)| row![(j + 1).to_string(), *k]).collect();
    rows.push(row!["total", rep.total]);
    out.csv("kld.csv", &["tree", "kld"], rows)?;

    let mut rows = vec![];
    for delta in [-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2] {
        let theta = mean_g + delta;
        rows.push(row![theta, kld_per_tree(&dgp, &pvc(theta)?, 2, q)?]);
    }
    out.csv("tree2_scan.csv", &["theta", "kld_tree2"], rows)?;

    let affine = |c: f64, k: f64| ParamMap::Affine { intercept: c, slopes: vec![k] };
    let cases = [
        (Family::Fgm, "1-2u", affine(1.0, -2.0)),
        (Family::Fgm, "u", affine(0.0, 1.0)),
        (Family::Fgm, "0.5", affine(0.5, 0.0)),
        (Family::AsymFgm, "u", affine(0.0, 1.0)),
    ];
    let mut rows = vec![];
    for (fam, label, g) in &cases {
        for o in [32, 64, 128] {
            let d = kld_derivative_at_zero(*fam, g, o)?;
            rows.push(row![fam.to_string(), *label, o, d.via_formula, d.via_finite_difference, d.neg_cross_entropy_slope]);
        }
    }
    out.csv(
        "derivative.csv",
        &["family", "g", "order", "via_formula", "via_finite_difference", "neg_cross_entropy_slope"],
        rows,
    )?;

    let grid = s.grid.clone().unwrap_or_else(|| linspace(-0.2, 0.2, 41));
    let (_, rows) = scan_rows(Family::AsymFgm, &affine(0.0, 1.0), &grid, order)?;
    out.csv("theta12_scan.csv", &["theta12", "kld_total", "kld_tree1", "kld_tree2"], rows)?;
    out.finish()
}

fn run_study(name: &str, dgp: DVineSpec, default_model: &str, s: &Settings) -> Result<PathBuf> {
    let model: ModelSpec = s
        .model
        .clone()
        .unwrap_or_else(|| ModelChoice::Named(default_model.into()))
        .resolve(dgp.dim())?;
    let cfg = ReplicationConfig {
        n_list: s.n_list.clone().unwrap_or_else(|| vec![500, 2500, 25_000]),
        replications: s.replications.unwrap_or(200),
        seed: s.seed(),
        margins: if s.ranks.unwrap_or(false) { Margins::Ranks } else { Margins::Known },
    };
    let q = Integration::Quadrature { order: s.order.unwrap_or(24) };
    let limit = pvc_limit_params(&dgp, &model, q)?;
    let star = pseudo_true_params(&dgp, &model, q)?;
    let rep = replication_study(&dgp, &model, &cfg)?;
    let mut out = Artifacts::create(
        &s.out_dir(name),
        format!("experiment {name} N={:?} R={} seed={}", cfg.n_list, cfg.replications, cfg.seed),
    )?;

    let mut rows = vec![];
    for r in &rep.rows {
        for (k, coord) in rep.coords.iter().enumerate() {
            rows.push(row![r.n, r.r, coord.as_str(), r.theta_s[k], r.theta_j[k], r.theta_s[k] - r.theta_j[k]]);
        }
    }
    out.csv("replications.csv", &["N", "r", "coord", "theta_s", "theta_j", "delta"], rows)?;
    let rows = rep
        .summary
        .iter()
        .map(|x| row![x.n, x.coord.as_str(), x.mean_s, x.mean_j, x.mean_delta, x.se_delta, x.t_stat, x.p_value])
        .collect();
    out.csv(
        "summary.csv",
        &["N", "coord", "mean_s", "mean_j", "mean_delta", "se_delta", "t_stat", "p_value"],
        rows,
    )?;
    let rows = rep
        .coords
        .iter()
        .enumerate()
        .map(|(k, c)| row![c.as_str(), limit[k], star[k]])
        .collect();
    out.csv("reference.csv", &["coord", "pvc_limit", "pseudo_true"], rows)?;
    let rows = rep.failures.iter().map(|f| row![f.n, f.r, f.error.as_str()]).collect();
    out.csv("failures.csv", &["N", "r", "error"], rows)?;
    out.finish()
}
