//! Step-by-step and joint maximum-likelihood estimation of parametric
//! simplified D-vines, their probability limits and replication studies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family};
use crate::dvine::DVineSpec;
use crate::engine::pairwise_sum;
use crate::error::{PvcError, Result};
use crate::kld::Integration;
use crate::optim::{fit_edge, nelder_mead, param_bounds, NmOptions, INFEASIBLE};
use crate::pvc::ppit_pairs;
use crate::quad::gauss_legendre;
use crate::rng::{derive_seed, with_pool};
use crate::stats::{average_ranks, paired_t};
use crate::svc::SimplifiedVineSpec;

const GRAD_TOL: f64 = 1e-3;
const GRAD_STEP: f64 = 1e-5;
const MAX_TENSOR_POINTS: usize = 1 << 22;
/// Joint-fit tolerances inside replication studies.
const REPLICATION_NM: NmOptions = NmOptions { ftol: 1e-10, xtol: 1e-5, max_iter: 2000 };

/// One edge of a parametric model: a family and, per parameter slot, a
/// fixed value or `None` for a free parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeModel {
    pub family: Family,
    #[serde(default)]
    pub fixed: Vec<Option<f64>>,
}

impl EdgeModel {
    pub fn free(family: Family) -> Self {
        EdgeModel {
            family,
            fixed: vec![None; family.n_params().unwrap_or(0)],
        }
    }
}

/// Parametric simplified D-vine; the parameter vector lists the free slots
/// tree by tree, edge by edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct ModelSpec {
    d: usize,
    edges: Vec<Vec<EdgeModel>>,
    layout: Vec<(usize, usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    d: usize,
    edges: Vec<Vec<EdgeModel>>,
}

impl From<ModelSpec> for ModelRecord {
    fn from(m: ModelSpec) -> Self {
        ModelRecord { d: m.d, edges: m.edges }
    }
}

impl TryFrom<ModelRecord> for ModelSpec {
    type Error = PvcError;
    fn try_from(r: ModelRecord) -> Result<Self> {
        ModelSpec::new(r.d, r.edges)
    }
}

fn param_names(family: Family) -> &'static [&'static str] {
    match family {
        Family::Independence | Family::Numeric => &[],
        Family::AsymFgm => &["gamma"],
        Family::Sarmanov | Family::Amh => &["alpha"],
        Family::PartialSarmanov => &["a", "b"],
        Family::Bb1 => &["theta", "delta"],
        Family::Fgm | Family::Frank | Family::PartialFrank => &["theta"],
    }
}

/// `"13;2"`-style label of edge `(i, tree)` with 1-based margins.
pub fn edge_label(tree: usize, i: usize) -> String {
    let cond: Vec<String> = (i + 2..i + tree + 1).map(|m| m.to_string()).collect();
    if cond.is_empty() {
        format!("{}{}", i + 1, i + tree + 1)
    } else {
        format!("{}{};{}", i + 1, i + tree + 1, cond.join(","))
    }
}

impl ModelSpec {
    pub fn new(d: usize, mut edges: Vec<Vec<EdgeModel>>) -> Result<Self> {
        if d < 2 || edges.len() != d - 1 {
            return Err(PvcError::Structure(format!("model for d = {d} needs {} trees", d.saturating_sub(1))));
        }
        let mut layout = vec![];
        for (t, row) in edges.iter_mut().enumerate() {
            if row.len() != d - t - 1 {
                return Err(PvcError::Structure(format!("tree {} needs {} edges", t + 1, d - t - 1)));
            }
            for (i, e) in row.iter_mut().enumerate() {
                let k = e.family.n_params().ok_or_else(|| PvcError::Config("numeric edges cannot be fitted".into()))?;
                if e.fixed.is_empty() {
                    e.fixed = vec![None; k];
                }
                if e.fixed.len() != k {
                    return Err(PvcError::Config(format!("{} has {k} parameter slot(s)", e.family)));
                }
                for (s, v) in e.fixed.iter().enumerate() {
                    if v.is_none() {
                        layout.push((t + 1, i, s));
                    }
                }
            }
        }
        Ok(ModelSpec { d, edges, layout })
    }

    /// Every edge of tree `j` drawn from `families[j-1]` with free parameters.
    pub fn from_families(d: usize, families: &[Vec<Family>]) -> Result<Self> {
        ModelSpec::new(d, families.iter().map(|row| row.iter().map(|&f| EdgeModel::free(f)).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn edge(&self, tree: usize, i: usize) -> &EdgeModel {
        &self.edges[tree - 1][i]
    }

    pub fn n_free(&self) -> usize {
        self.layout.len()
    }

    /// `(tree, i, slot)` of each entry of the parameter vector.
    pub fn layout(&self) -> &[(usize, usize, usize)] {
        &self.layout
    }

    /// Names like `theta_13;2`, in parameter-vector order.
    pub fn param_names(&self) -> Vec<String> {
        self.layout
            .iter()
            .map(|&(t, i, s)| format!("{}_{}", param_names(self.edge(t, i).family)[s], edge_label(t, i)))
            .collect()
    }

    fn edge_params(&self, theta: &[f64], tree: usize, i: usize) -> Vec<f64> {
        let mut p: Vec<f64> = self.edge(tree, i).fixed.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        for (&(t, j, s), &v) in self.layout.iter().zip(theta) {
            if t == tree && j == i {
                p[s] = v;
            }
        }
        p
    }

    /// The simplified vine at parameter vector `theta`.
    pub fn build(&self, theta: &[f64]) -> Result<SimplifiedVineSpec> {
        if theta.len() != self.n_free() {
            return Err(PvcError::param(format!("model has {} free parameters, got {}", self.n_free(), theta.len())));
        }
        let edges = (1..self.d)
            .map(|t| {
                (0..self.d - t)
                    .map(|i| {
                        let fam = self.edge(t, i).family;
                        let p = self.edge_params(theta, t, i);
                        if fam == Family::Frank && p[0] == 0.0 {
                            return Ok(BivariateCopula::independence());
                        }
                        BivariateCopula::new(fam, &p).map_err(|e| e.at_edge(t, i + 1))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SimplifiedVineSpec::new(self.d, edges)
    }

    /// Free-parameter vector of a fitted vine with this model's families.
    fn extract(&self, spec: &SimplifiedVineSpec) -> Vec<f64> {
        self.layout
            .iter()
            .map(|&(t, i, s)| {
                let c = spec.edge(t, i);
                if c.is_independence() { 0.0 } else { c.params()[s] }
            })
            .collect()
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.layout.iter().map(|&(t, i, s)| param_bounds(self.edge(t, i).family)[s]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Stepwise,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub mode: FitMode,
    pub iterations: usize,
    pub converged: bool,
    /// Joint fits: norm of the finite-difference gradient of the mean
    /// log-likelihood over the free interior coordinates.
    pub gradient_norm: Option<f64>,
}

/// Rank transform `r / (n + 1)` of each column (average ranks for ties).
pub fn pseudo_obs(data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = data.len();
    let d = data.first().map_or(0, Vec::len);
    if n < 2 || data.iter().any(|r| r.len() != d) {
        return Err(PvcError::param("pseudo_obs needs at least two rows of equal length"));
    }
    let mut out = vec![vec![0.0; d]; n];
    for k in 0..d {
        let col: Vec<f64> = data.iter().map(|r| r[k]).collect();
        if col.iter().any(|x| !x.is_finite()) {
            return Err(PvcError::param(format!("column {k} has non-finite values")));
        }
        if col.iter().all(|&x| x == col[0]) {
            return Err(PvcError::param(format!("column {k} is constant")));
        }
        for (r, rank) in average_ranks(&col).into_iter().enumerate() {
            out[r][k] = rank / (n + 1) as f64;
        }
    }
    Ok(out)
}

fn check_data(model: &ModelSpec, data: &[Vec<f64>], weights: Option<&[f64]>) -> Result<()> {
    if data.len() < 2 {
        return Err(PvcError::param("need at least two rows"));
    }
    if let Some((r, _)) = data.iter().enumerate().find(|(_, u)| u.len() != model.dim()) {
        return Err(PvcError::Structure(format!("row {r} does not have {} columns", model.dim())));
    }
    if weights.is_some_and(|w| w.len() != data.len()) {
        return Err(PvcError::param("one weight per row required"));
    }
    Ok(())
}

fn stepwise_weighted(model: &ModelSpec, data: &[Vec<f64>], weights: Option<&[f64]>) -> Result<(SimplifiedVineSpec, usize, bool)> {
    check_data(model, data, weights)?;
    let d = model.dim();
    let mut trees: Vec<Vec<BivariateCopula>> = Vec::with_capacity(d - 1);
    let mut iterations = 0;
    let mut converged = true;
    for tree in 1..d {
        let pairs = ppit_pairs(&trees, data, tree)?;
        let mut row = Vec::with_capacity(d - tree);
        for (i, p) in pairs.iter().enumerate() {
            let e = model.edge(tree, i);
            let fit = fit_edge(e.family, &e.fixed, p, weights).map_err(|err| err.at_edge(tree, i + 1))?;
            iterations += fit.iterations;
            converged &= fit.converged;
            row.push(fit.copula);
        }
        trees.push(row);
    }
    Ok((SimplifiedVineSpec::new(d, trees)?, iterations, converged))
}

fn weighted_loglik(spec: &SimplifiedVineSpec, data: &[Vec<f64>], weights: Option<&[f64]>) -> Result<f64> {
    let rows = spec.loglik_rows(data)?;
    Ok(match weights {
        None => pairwise_sum(&rows),
        Some(w) => pairwise_sum(&rows.iter().zip(w).map(|(l, w)| if *w == 0.0 { 0.0 } else { l * w }).collect::<Vec<_>>()),
    })
}

/// Tree-by-tree ML: each edge is fitted to the pseudo-observations produced
/// by the trees already fitted.
pub fn fit_stepwise(model: &ModelSpec, data: &[Vec<f64>]) -> Result<FitResult> {
    let (spec, iterations, converged) = stepwise_weighted(model, data, None)?;
    Ok(FitResult {
        theta: model.extract(&spec),
        loglik: spec.loglik(data)?,
        mode: FitMode::Stepwise,
        iterations,
        converged,
        gradient_norm: None,
    })
}

fn joint_weighted(
    model: &ModelSpec,
    data: &[Vec<f64>],
    weights: Option<&[f64]>,
    init: &[f64],
    opts: &NmOptions,
) -> Result<FitResult> {
    check_data(model, data, weights)?;
    let bounds = model.bounds();
    let nll = |x: &[f64]| -> f64 {
        if x.iter().zip(&bounds).any(|(v, (lo, hi))| v < lo || v > hi) {
            return INFEASIBLE;
        }
        match model.build(x) {
            Ok(s) => weighted_loglik(&s, data, weights).map(|l| -l).unwrap_or(INFEASIBLE),
            Err(_) => INFEASIBLE,
        }
    };
    if nll(init) >= INFEASIBLE {
        return Err(PvcError::param(format!("initial parameters {init:?} are infeasible")));
    }
    if init.is_empty() {
        let ll = -nll(init);
        return Ok(FitResult { theta: vec![], loglik: ll, mode: FitMode::Joint, iterations: 0, converged: true, gradient_norm: Some(0.0) });
    }
    let step: Vec<f64> = init
        .iter()
        .zip(&bounds)
        .map(|(v, (lo, hi))| {
            let s = (0.05 * v.abs()).max(0.01).min(0.25 * (hi - lo));
            if v + s > *hi { -s } else { s }
        })
        .collect();
    let r = nelder_mead(nll, init, &step, opts);
    // gradient of the mean log-likelihood at interior coordinates
    let total_w: f64 = weights.map_or(data.len() as f64, |w| w.iter().sum());
    let mut g2 = 0.0;
    for k in 0..r.x.len() {
        let (lo, hi) = bounds[k];
        let h = GRAD_STEP * r.x[k].abs().max(1.0);
        if r.x[k] - h <= lo || r.x[k] + h >= hi {
            continue;
        }
        let mut up = r.x.clone();
        let mut dn = r.x.clone();
        up[k] += h;
        dn[k] -= h;
        let g = (nll(&dn) - nll(&up)) / (2.0 * h) / total_w;
        g2 += g * g;
    }
    let gradient_norm = g2.sqrt();
    Ok(FitResult {
        theta: r.x,
        loglik: -r.value,
        mode: FitMode::Joint,
        iterations: r.iterations,
        converged: r.converged && gradient_norm <= GRAD_TOL,
        gradient_norm: Some(gradient_norm),
    })
}

/// Joint ML by Nelder–Mead from `init` (usually the stepwise estimate).
pub fn fit_joint(model: &ModelSpec, data: &[Vec<f64>], init: &[f64]) -> Result<FitResult> {
    joint_weighted(model, data, None, init, &NmOptions::default())
}

/// Points and weights representing the process: a tensor Gauss–Legendre
/// rule weighted by the density, or an equally weighted sample.
pub fn reference_points(dgp: &DVineSpec, integration: Integration) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = dgp.dim();
    match integration {
        Integration::Quadrature { order } => {
            let rule = gauss_legendre(order)?;
            let m = rule.order();
            let total = m
                .checked_pow(d as u32)
                .filter(|&t| t <= MAX_TENSOR_POINTS)
                .ok_or_else(|| PvcError::param(format!("order-{order} tensor rule in {d} dimensions is too large")))?;
            let pts: Vec<Result<(Vec<f64>, f64)>> = with_pool(|| {
                (0..total)
                    .into_par_iter()
                    .map(|flat| {
                        let mut rem = flat;
                        let mut u = Vec::with_capacity(d);
                        let mut w = 1.0;
                        for _ in 0..d {
                            u.push(rule.nodes()[rem % m]);
                            w *= rule.weights()[rem % m];
                            rem /= m;
                        }
                        let c = dgp.density(&u)?;
                        Ok((u, w * c))
                    })
                    .collect()
            });
            let pts = pts.into_iter().collect::<Result<Vec<_>>>()?;
            Ok(pts.into_iter().unzip())
        }
        Integration::MonteCarlo { sample_count, seed } => {
            let data = dgp.sample(sample_count, seed)?;
            let w = vec![1.0 / sample_count as f64; sample_count];
            Ok((data, w))
        }
    }
}

/// Tree-by-tree KLD minimizers: the probability limit of the stepwise
/// estimator.
pub fn pvc_limit_params(dgp: &DVineSpec, model: &ModelSpec, integration: Integration) -> Result<Vec<f64>> {
    check_model(dgp, model)?;
    let (pts, w) = reference_points(dgp, integration)?;
    Ok(model.extract(&stepwise_weighted(model, &pts, Some(&w))?.0))
}

/// Joint KLD minimizer, best of three local searches started at the PVC
/// limit and at the limit scaled by 0.9 and 1.1.
pub fn pseudo_true_params(dgp: &DVineSpec, model: &ModelSpec, integration: Integration) -> Result<Vec<f64>> {
    check_model(dgp, model)?;
    let (pts, w) = reference_points(dgp, integration)?;
    let start = model.extract(&stepwise_weighted(model, &pts, Some(&w))?.0);
    let bounds = model.bounds();
    let opts = NmOptions { ftol: 1e-13, xtol: 1e-9, max_iter: 4000 };
    let mut best: Option<FitResult> = None;
    for scale in [1.0, 0.9, 1.1] {
        let init: Vec<f64> = start
            .iter()
            .zip(&bounds)
            .map(|(v, (lo, hi))| (v * scale).clamp(*lo, *hi))
            .collect();
        let Ok(fit) = joint_weighted(model, &pts, Some(&w), &init, &opts) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
            best = Some(fit);
        }
    }
    best.map(|b| b.theta).ok_or_else(|| PvcError::Convergence {
        iterations: 0,
        detail: "no start point was feasible".into(),
    })
}

fn check_model(dgp: &DVineSpec, model: &ModelSpec) -> Result<()> {
    if dgp.dim() != model.dim() {
        return Err(PvcError::Structure(format!("process has d = {}, model d = {}", dgp.dim(), model.dim())));
    }
    Ok(())
}

/// Whether replications fit the simulated copula data directly or their
/// rank transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margins {
    #[default]
    Known,
    Ranks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationConfig {
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default)]
    pub margins: Margins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub n: usize,
    pub r: usize,
    pub theta_s: Vec<f64>,
    pub theta_j: Vec<f64>,
    pub loglik_s: f64,
    pub loglik_j: f64,
    pub converged_s: bool,
    pub converged_j: bool,
}

impl ReplicationRow {
    pub fn delta(&self) -> Vec<f64> {
        self.theta_s.iter().zip(&self.theta_j).map(|(s, j)| s - j).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub coord: String,
    pub mean_s: f64,
    pub mean_j: f64,
    pub mean_delta: f64,
    pub se_delta: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub n: usize,
    pub r: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub config: ReplicationConfig,
    pub coords: Vec<String>,
    pub rows: Vec<ReplicationRow>,
    pub failures: Vec<ReplicationFailure>,
    pub summary: Vec<SummaryRow>,
}

impl ReplicationReport {
    pub fn summary_for(&self, n: usize, coord: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.n == n && s.coord == coord)
    }
}

/// Paired-t summaries per sample size and coordinate.
pub fn summarize(coords: &[String], rows: &[ReplicationRow], n_list: &[usize]) -> Vec<SummaryRow> {
    let mut out = vec![];
    for &n in n_list {
        let sel: Vec<&ReplicationRow> = rows.iter().filter(|r| r.n == n).collect();
        if sel.len() < 2 {
            continue;
        }
        for (k, name) in coords.iter().enumerate() {
            let s: Vec<f64> = sel.iter().map(|r| r.theta_s[k]).collect();
            let j: Vec<f64> = sel.iter().map(|r| r.theta_j[k]).collect();
            let delta: Vec<f64> = s.iter().zip(&j).map(|(a, b)| a - b).collect();
            let t = paired_t(&delta);
            out.push(SummaryRow {
                n,
                coord: name.clone(),
                mean_s: s.iter().sum::<f64>() / s.len() as f64,
                mean_j: j.iter().sum::<f64>() / j.len() as f64,
                mean_delta: t.mean,
                se_delta: t.std_error,
                t_stat: t.t_stat,
                p_value: t.p_value,
            });
        }
    }
    out
}

fn replicate(dgp: &DVineSpec, model: &ModelSpec, n: usize, r: usize, cfg: &ReplicationConfig) -> Result<ReplicationRow> {
    let sample = dgp.sample(n, derive_seed(cfg.seed, &[n as u64, r as u64]))?;
    let data = match cfg.margins {
        Margins::Known => sample,
        Margins::Ranks => pseudo_obs(&sample)?,
    };
    let s = fit_stepwise(model, &data)?;
    let j = joint_weighted(model, &data, None, &s.theta, &REPLICATION_NM)?;
    Ok(ReplicationRow {
        n,
        r,
        theta_s: s.theta,
        theta_j: j.theta,
        loglik_s: s.loglik,
        loglik_j: j.loglik,
        converged_s: s.converged,
        converged_j: j.converged,
    })
}

/// For each `N` and replication: simulate, fit stepwise, fit jointly from
/// the stepwise estimate, and record both.
pub fn replication_study(dgp: &DVineSpec, model: &ModelSpec, cfg: &ReplicationConfig) -> Result<ReplicationReport> {
    check_model(dgp, model)?;
    if cfg.replications < 2 {
        return Err(PvcError::Config("replication study needs R >= 2".into()));
    }
    if cfg.n_list.is_empty() || cfg.n_list.iter().any(|&n| n < 2) {
        return Err(PvcError::Config("sample sizes must be >= 2".into()));
    }
    let jobs: Vec<(usize, usize)> = cfg.n_list.iter().flat_map(|&n| (0..cfg.replications).map(move |r| (n, r))).collect();
    let results: Vec<Result<ReplicationRow>> =
        with_pool(|| jobs.par_iter().map(|&(n, r)| replicate(dgp, model, n, r, cfg)).collect());
    let mut rows = vec![];
    let mut failures = vec![];
    for ((n, r), res) in jobs.into_iter().zip(results) {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(ReplicationFailure { n, r, error: e.to_string() }),
        }
    }
    let coords = model.param_names();
    let summary = summarize(&coords, &rows, &cfg.n_list);
    Ok(ReplicationReport {
        config: cfg.clone(),
        coords,
        rows,
        failures,
        summary,
    })
}

/// Frank / Frank / partial Frank model used for the Frank studies.
pub fn frank_model() -> ModelSpec {
    ModelSpec::from_families(3, &[vec![Family::Frank, Family::Frank], vec![Family::PartialFrank]])
        .expect("valid model")
}

/// BB1 / BB1 / partial Sarmanov model of the Sarmanov study.
pub fn bb1_sarmanov_model() -> ModelSpec {
    ModelSpec::from_families(3, &[vec![Family::Bb1, Family::Bb1], vec![Family::PartialSarmanov]])
        .expect("valid model")
}

#[cfg(test)]
mod tests;
