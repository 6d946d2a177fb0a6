//! Generic subcommands: build-pvc, simulate, fit, kld, kld-scan.

use std::path::PathBuf;

use anyhow::{Context, Result};
use pvc_core::bicop::Family;
use pvc_core::dvine::ParamMap;
use pvc_core::fit::{fit_joint, fit_stepwise, pseudo_obs};
use pvc_core::kld::{first_tree_perturbation, fgm_chain3, kld_total, Integration, DEFAULT_QUAD_ORDER};
use pvc_core::pvc::{self, EdgeDiagnostic, PvcBuildConfig};
use pvc_core::svc::SimplifiedVineSpec;
use pvc_core::dvine::DVineSpec;

use crate::output::{Artifacts, Cell};
use crate::row;
use crate::settings::{ModelChoice, Settings};
use crate::UsageError;

pub fn pvc_config(s: &Settings) -> PvcBuildConfig {
    let mut cfg = s.pvc.clone().unwrap_or_default();
    if let Some(seed) = s.seed {
        cfg.seed = seed;
    }
    if let Some(n) = s.mc_n {
        cfg.sample_count = n;
    }
    if let Some(o) = s.order {
        cfg.quad_order = o;
    }
    cfg
}

pub fn diagnostic_rows(diags: &[EdgeDiagnostic]) -> Vec<Vec<Cell>> {
    let join = |v: &[f64]| v.iter().map(|x| crate::output::real(*x)).collect::<Vec<_>>().join(" ");
    let opt = |v: Option<f64>| v.map_or(Cell::from(""), Cell::from);
    diags
        .iter()
        .map(|d| {
            let mut r = row![d.tree, d.index, d.mode.as_str(), d.copula.as_str(), join(&d.params), join(&d.std_errors)];
            r.push(opt(d.ks_stat));
            r.push(opt(d.residual));
            r
        })
        .collect()
}

pub const DIAGNOSTIC_HEADER: [&str; 8] = ["tree", "index", "mode", "copula", "params", "std_errors", "ks_stat", "residual"];

pub fn build_pvc(s: &Settings) -> Result<PathBuf> {
    let (preset, dgp) = s.dgp()?;
    let cfg = pvc_config(s);
    cfg.validate(dgp.dim()).map_err(|e| UsageError(e.to_string()))?;
    let res = pvc::build_pvc(&dgp, &cfg)?;
    let mut out = Artifacts::create(&s.out_dir("build-pvc"), format!("build-pvc {preset}"))?;
    out.json("pvc.json", &res)?;
    out.csv("diagnostics.csv", &DIAGNOSTIC_HEADER, diagnostic_rows(&res.diagnostics))?;
    out.finish()
}

pub fn simulate(s: &Settings) -> Result<PathBuf> {
    let (preset, dgp) = s.dgp()?;
    let n = match s.n_list.as_deref() {
        None => 1000,
        Some([n]) => *n,
        Some(_) => return Err(UsageError("simulate takes a single --N".into()).into()),
    };
    let data = dgp.sample(n, s.seed())?;
    let header: Vec<String> = (1..=dgp.dim()).map(|k| format!("u{k}")).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = data.into_iter().map(|r| r.into_iter().map(Cell::from).collect()).collect();
    let mut out = Artifacts::create(&s.out_dir("simulate"), format!("simulate {preset} N={n} seed={}", s.seed()))?;
    out.csv("data.csv", &header, rows)?;
    out.finish()
}

pub fn fit(s: &Settings) -> Result<PathBuf> {
    let path = s.data.as_ref().ok_or_else(|| UsageError("--data is required".into()))?;
    let raw = crate::output::read_rows(path)?;
    let d = raw.first().map_or(0, Vec::len);
    let model = s
        .model
        .clone()
        .unwrap_or_else(|| ModelChoice::Named("frank".into()))
        .resolve(d)?;
    if model.dim() != d {
        return Err(UsageError(format!("model has d = {}, data has {d} columns", model.dim())).into());
    }
    let data = if s.ranks.unwrap_or(false) { pseudo_obs(&raw)? } else { raw };
    let st = fit_stepwise(&model, &data).context("stepwise fit")?;
    let jt = fit_joint(&model, &data, &st.theta).context("joint fit")?;
    let rows = model
        .param_names()
        .into_iter()
        .zip(st.theta.iter().zip(&jt.theta))
        .map(|(name, (a, b))| row![name, *a, *b, a - b])
        .collect();
    let mut out = Artifacts::create(&s.out_dir("fit"), format!("fit {}", path.display()))?;
    out.csv("fit.csv", &["coord", "theta_s", "theta_j", "delta"], rows)?;
    out.json("fit.json", &serde_json::json!({ "model": model, "stepwise": st, "joint": jt }))?;
    out.finish()
}

fn integration(s: &Settings, d: usize) -> Integration {
    match (s.mc_n, s.order) {
        (Some(n), _) => Integration::MonteCarlo { sample_count: n, seed: s.seed() },
        (None, Some(order)) => Integration::Quadrature { order },
        (None, None) => match Integration::default_for(d) {
            Integration::MonteCarlo { sample_count, .. } => Integration::MonteCarlo { sample_count, seed: s.seed() },
            q => q,
        },
    }
}

fn kld_rows(per_tree: &[f64], per_tree_error: &[f64], total: f64, error: f64) -> Vec<Vec<Cell>> {
    let mut rows: Vec<Vec<Cell>> = per_tree
        .iter()
        .zip(per_tree_error)
        .enumerate()
        .map(|(j, (k, e))| row![(j + 1).to_string(), *k, *e])
        .collect();
    rows.push(row!["total", total, error]);
    rows
}

pub fn kld(s: &Settings) -> Result<PathBuf> {
    let (preset, dgp) = s.dgp()?;
    let approx: SimplifiedVineSpec = match &s.approx {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", p.display())))?
        }
        None => pvc::build_pvc(&dgp, &pvc_config(s))?.spec,
    };
    let rep = kld_total(&dgp, &approx, integration(s, dgp.dim()))?;
    let mut out = Artifacts::create(&s.out_dir("kld"), format!("kld {preset} {}", rep.method))?;
    out.csv("kld.csv", &["tree", "kld", "error"], kld_rows(&rep.per_tree, &rep.per_tree_error, rep.total, rep.error_estimate))?;
    out.json("kld.json", &rep)?;
    out.finish()
}

/// Evenly spaced grid on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// `(θ₁₂, total, per tree)` for the three-dimensional FGM chain with the
/// first tree replaced by `family(θ₁₂)`.
pub fn scan_rows(family: Family, g: &ParamMap, grid: &[f64], order: usize) -> Result<(DVineSpec, Vec<Vec<Cell>>)> {
    let dgp = fgm_chain3(g)?;
    let mut rows = vec![];
    for &t in grid {
        let approx = first_tree_perturbation(family, t, g, order)?;
        let rep = kld_total(&dgp, &approx, Integration::Quadrature { order })?;
        let mut r = row![t, rep.total];
        r.extend(rep.per_tree.iter().map(|&k| Cell::from(k)));
        rows.push(r);
    }
    Ok((dgp, rows))
}

pub fn kld_scan(s: &Settings) -> Result<PathBuf> {
    let family = s.family(Family::AsymFgm)?;
    if !matches!(family, Family::Fgm | Family::AsymFgm) {
        return Err(UsageError(format!("kld-scan needs an fgm or asymfgm first tree, got {family}")).into());
    }
    let g = ParamMap::Affine { intercept: s.intercept.unwrap_or(0.0), slopes: vec![s.slope.unwrap_or(1.0)] };
    let grid = s.grid.clone().unwrap_or_else(|| linspace(-0.2, 0.2, 41));
    let order = s.order.unwrap_or(DEFAULT_QUAD_ORDER);
    let (_, rows) = scan_rows(family, &g, &grid, order)?;
    let mut out = Artifacts::create(&s.out_dir("kld-scan"), format!("kld-scan {family} order={order}"))?;
    out.csv("kld_scan.csv", &["theta12", "kld_total", "kld_tree1", "kld_tree2"], rows)?;
    out.finish()
}
