//! Partial vine copulas: partial probability integral transforms (PPITs),
//! partial copulas of a data-generating vine and the resulting simplified
//! approximation.

use std::borrow::Cow;
use std::cell::RefCell;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family, NumericBivariateCopula};
use crate::dvine::{ConditionalEdge, DVineSpec, ParamMap};
use crate::engine::{self, EdgeSource, Window};
use crate::error::{PvcError, Result};
use crate::optim::fit_pair;
use crate::quad::gauss_legendre;
use crate::rng::with_pool;
use crate::stats::{ks_uniform, pearson};
use crate::svc::SimplifiedVineSpec;

pub const DEFAULT_SAMPLE_COUNT: usize = 1_000_000;
pub const DEFAULT_GRID: usize = 101;
pub const MIN_FIT_SAMPLES: usize = 10_000;
const SIGMOID_QUAD_ORDER: usize = 256;
const FOURTH_TREE_CELL_ORDER: usize = 6;

/// How the edges of one tree are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TreeMode {
    /// Exact expression, where one is known.
    ClosedForm,
    /// Maximum likelihood on sampled PPIT pairs.
    ParametricFit { family: Family },
    /// Tree 2: quadrature of the conditional copula cdf; higher trees:
    /// empirical checkerboard of sampled PPIT pairs.
    NumericTabulation,
}

impl TreeMode {
    pub fn label(&self) -> String {
        match self {
            TreeMode::ClosedForm => "closed_form".into(),
            TreeMode::ParametricFit { family } => format!("parametric_fit({family})"),
            TreeMode::NumericTabulation => "numeric_tabulation".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PvcBuildConfig {
    /// Modes for trees `2, 3, ...`; trees past the end use numeric tabulation.
    pub modes: Vec<TreeMode>,
    /// PPIT pairs drawn for sampled trees.
    pub sample_count: usize,
    pub quad_order: usize,
    /// Nodes per axis of tabulated copulas.
    pub grid: usize,
    pub seed: u64,
}

impl Default for PvcBuildConfig {
    fn default() -> Self {
        PvcBuildConfig {
            modes: vec![],
            sample_count: DEFAULT_SAMPLE_COUNT,
            quad_order: 64,
            grid: DEFAULT_GRID,
            seed: 42,
        }
    }
}

impl PvcBuildConfig {
    pub fn mode_for(&self, tree: usize) -> TreeMode {
        self.modes.get(tree.wrapping_sub(2)).copied().unwrap_or(TreeMode::NumericTabulation)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.quad_order == 0 {
            return Err(PvcError::Config("quad_order must be positive".into()));
        }
        for tree in 2..d {
            match self.mode_for(tree) {
                TreeMode::ParametricFit { family } => {
                    if self.sample_count < MIN_FIT_SAMPLES {
                        return Err(PvcError::Config(format!(
                            "parametric fits need sample_count >= {MIN_FIT_SAMPLES}, got {}",
                            self.sample_count
                        )));
                    }
                    if family == Family::Numeric {
                        return Err(PvcError::Config("numeric is not a parametric family".into()));
                    }
                }
                TreeMode::NumericTabulation => {
                    if self.grid < DEFAULT_GRID {
                        return Err(PvcError::Config(format!(
                            "tabulation grid must have >= {DEFAULT_GRID} nodes, got {}",
                            self.grid
                        )));
                    }
                    if tree >= 3 && self.sample_count < 2 {
                        return Err(PvcError::Config("sample_count must be >= 2".into()));
                    }
                }
                TreeMode::ClosedForm => {}
            }
        }
        Ok(())
    }
}

/// Per-edge record of how a PVC edge was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDiagnostic {
    pub tree: usize,
    /// 1-based position within the tree.
    pub index: usize,
    pub mode: String,
    pub copula: String,
    pub params: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Largest KS statistic of the two PPIT margins against uniform.
    pub ks_stat: Option<f64>,
    /// Largest margin deviation of a tabulated copula.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvcResult {
    pub spec: SimplifiedVineSpec,
    pub diagnostics: Vec<EdgeDiagnostic>,
}

/// Trees `1 ..= trees.len()` of a simplified vine on `d` margins.
struct LowerTrees<'a> {
    d: usize,
    trees: &'a [Vec<BivariateCopula>],
}

impl EdgeSource for LowerTrees<'_> {
    fn dim(&self) -> usize {
        self.d
    }

    fn edge(&self, tree: usize, i: usize, _cond: &[f64]) -> Result<Cow<'_, BivariateCopula>> {
        self.trees
            .get(tree - 1)
            .and_then(|row| row.get(i))
            .map(Cow::Borrowed)
            .ok_or_else(|| PvcError::Structure(format!("lower tree {tree} has no edge {}", i + 1)))
    }
}

fn check_lower(d: usize, trees: &[Vec<BivariateCopula>]) -> Result<()> {
    for (t, row) in trees.iter().enumerate() {
        if row.len() != d - t - 1 {
            return Err(PvcError::Structure(format!(
                "lower tree {} needs {} edges, got {}",
                t + 1,
                d - t - 1,
                row.len()
            )));
        }
    }
    Ok(())
}

/// PPIT of `u_k` given the adjacent block `cond`, using the PVC trees
/// `1 ..= lower.len()`.
pub fn ppit(lower: &[Vec<BivariateCopula>], u: &[f64], k: usize, cond: Range<usize>) -> Result<f64> {
    check_lower(u.len(), lower)?;
    if cond.len() > lower.len() {
        return Err(PvcError::Structure(format!(
            "PPIT given {} variables needs {} lower trees, have {}",
            cond.len(),
            cond.len(),
            lower.len()
        )));
    }
    engine::conditional_cdf(&LowerTrees { d: u.len(), trees: lower }, u, k, cond)
}

/// PPIT pairs entering each edge of `tree`, one vector per edge.
pub fn ppit_pairs(lower: &[Vec<BivariateCopula>], data: &[Vec<f64>], tree: usize) -> Result<Vec<Vec<[f64; 2]>>> {
    let d = data.first().map_or(0, Vec::len);
    if tree < 1 || tree >= d || lower.len() < tree - 1 {
        return Err(PvcError::Structure(format!(
            "PPITs of tree {tree} need trees 1..{} for d = {d}",
            tree.saturating_sub(1)
        )));
    }
    check_lower(d, &lower[..tree - 1])?;
    let src = LowerTrees { d, trees: &lower[..tree - 1] };
    let rows: Vec<Result<Vec<[f64; 2]>>> = with_pool(|| {
        data.par_iter()
            .enumerate()
            .map(|(r, u)| {
                let t = engine::evaluate(&src, u, tree - 1, false).map_err(|e| e.at_row(r))?;
                Ok((0..d - tree).map(|i| [t.fwd[tree - 1][i], t.bwd[tree - 1][i + 1]]).collect())
            })
            .collect()
    });
    let mut out = vec![Vec::with_capacity(data.len()); d - tree];
    for row in rows {
        for (i, p) in row?.into_iter().enumerate() {
            out[i].push(p);
        }
    }
    Ok(out)
}

/// Partial copula `∫ C_{i,i+2|i+1}(a, b | z) dz` of a second-tree edge,
/// tabulated on `nodes` points per axis.
pub fn first_order_partial(dgp: &DVineSpec, i: usize, quad_order: usize, nodes: usize) -> Result<NumericBivariateCopula> {
    if dgp.dim() < 3 || i + 2 >= dgp.dim() {
        return Err(PvcError::Structure(format!("no second-tree edge {}", i + 1)));
    }
    let rule = gauss_legendre(quad_order)?;
    let edge = dgp.edge(2, i);
    let cops = rule
        .nodes()
        .iter()
        .map(|&z| edge.copula_at(&[z]))
        .collect::<Result<Vec<_>>>()?;
    let failure = RefCell::new(None);
    let table = NumericBivariateCopula::from_cdf_fn(
        nodes,
        |a, b| {
            let mut s = 0.0;
            for (c, w) in cops.iter().zip(rule.weights()) {
                match c.cdf(a, b) {
                    Ok(v) => s += w * v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                    }
                }
            }
            s
        },
        format!("partial copula of edge ({}, 2) by order-{quad_order} quadrature", i + 1),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    table
}

/// `∫₀¹ p(z) dz` for a scalar arity-1 map.
fn map_mean(map: &ParamMap, power: i32, order: usize) -> Result<f64> {
    let rule = gauss_legendre(order)?;
    let mut s = 0.0;
    for (z, w) in rule.iter() {
        s += w * map.eval_scalar(z)?.powi(power);
    }
    Ok(s)
}

/// Closed-form partial copula of a second-tree edge, for maps that enter
/// the copula linearly (or, for Sarmanov, through the first two moments).
pub fn closed_form_second_tree(edge: &ConditionalEdge) -> Result<BivariateCopula> {
    if edge.is_constant() {
        return edge.copula_at(&[]);
    }
    let order = match edge.map {
        ParamMap::Sigmoid { .. } => SIGMOID_QUAD_ORDER,
        _ => 64,
    };
    match (edge.family, &edge.map) {
        (Family::Fgm | Family::AsymFgm, ParamMap::Affine { intercept, slopes }) if slopes.len() == 1 => {
            BivariateCopula::new(edge.family, &[intercept + 0.5 * slopes[0]])
        }
        (Family::Sarmanov, ParamMap::Affine { intercept: c0, slopes }) if slopes.len() == 1 => {
            let c1 = slopes[0];
            BivariateCopula::partial_sarmanov(c0 + 0.5 * c1, c0 * c0 + c0 * c1 + c1 * c1 / 3.0)
        }
        (Family::Fgm | Family::AsymFgm, ParamMap::Sigmoid { .. }) => {
            BivariateCopula::new(edge.family, &[map_mean(&edge.map, 1, order)?])
        }
        (Family::Sarmanov, ParamMap::Sigmoid { .. }) => {
            let a = map_mean(&edge.map, 1, order)?;
            let b = map_mean(&edge.map, 2, order)?;
            // Jensen puts b ≥ a² up to rounding
            BivariateCopula::partial_sarmanov(a, b.max(a * a))
        }
        (Family::Amh, ParamMap::FrankAmh { theta }) => BivariateCopula::partial_frank(*theta),
        _ => Err(PvcError::NoClosedForm(format!(
            "{} with map {:?} in tree 2",
            edge.family, edge.map
        ))),
    }
}

/// `(intercept, slope)` if `dgp` has independence everywhere except a
/// second tree of identical affine FGM edges whose map integrates to 0.
fn centred_fgm_chain(dgp: &DVineSpec) -> Option<(f64, f64)> {
    let indep = |e: &ConditionalEdge| e.copula_at(&[]).is_ok_and(|c| c.is_independence()) && e.is_constant();
    let d = dgp.dim();
    if !(0..d - 1).all(|i| indep(dgp.edge(1, i))) {
        return None;
    }
    if !(3..d).all(|j| (0..d - j).all(|i| indep(dgp.edge(j, i)))) {
        return None;
    }
    let first = dgp.edge(2, 0);
    let (c0, c1) = match (&first.family, &first.map) {
        (Family::Fgm, ParamMap::Affine { intercept, slopes }) if slopes.len() == 1 => (*intercept, slopes[0]),
        _ => return None,
    };
    if (0..d - 2).any(|i| dgp.edge(2, i) != first) || (c0 + 0.5 * c1).abs() > 1e-14 {
        return None;
    }
    Some((c0, c1))
}

/// Third-tree FGM parameter `4(∫u g(u) du)²` for affine `g` with `∫g = 0`.
pub fn fgm_chain_third_tree_theta(intercept: f64, slope: f64) -> f64 {
    let m = 0.5 * intercept + slope / 3.0;
    4.0 * m * m
}

/// Density of the fourth-tree partial copula of the five-dimensional FGM
/// chain with `g(u) = 1 - 2u`.
pub fn fgm5_fourth_tree_density(a: f64, b: f64) -> f64 {
    let r25 = |i: f64| (25.0 - 9.0 * i).sqrt();
    let r16 = |i: f64| (16.0 + 9.0 * i).sqrt();
    let l = |i: f64| ((r25(i) + 5.0 - 9.0 * i) / (r16(i) + 4.0 - 9.0 * i)).ln();
    let br = |j: f64| {
        (6.0 * j * j - 6.0 * j + 1.0) * l(j)
            + ((6.0 * j - 26.0 / 9.0) * r25(j) - (6.0 * j - 28.0 / 9.0) * r16(j)) / 9.0
    };
    let (la, lb) = (l(a), l(b));
    let (ma, mb) = (1.0 - 4.5 * la, 1.0 - 4.5 * lb);
    81.0 / 4.0 * la * lb + 27.0 * ma * mb + 2187.0 / 2.0 * (ma * br(b) + mb * br(a))
}

/// Tabulate [`fgm5_fourth_tree_density`] by Gauss–Legendre cell averages.
fn fgm5_fourth_tree_table(nodes: usize) -> Result<NumericBivariateCopula> {
    let n = nodes - 1;
    let rule = gauss_legendre(FOURTH_TREE_CELL_ORDER)?;
    let h = 1.0 / n as f64;
    let mut mass = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for (x, wx) in rule.iter() {
                for (y, wy) in rule.iter() {
                    s += wx * wy * fgm5_fourth_tree_density((i as f64 + x) * h, (j as f64 + y) * h);
                }
            }
            mass[i * n + j] = s * h * h;
        }
    }
    NumericBivariateCopula::from_cell_masses(n, mass, "fourth-tree closed form, cell-averaged")
}

fn closed_form_higher_tree(dgp: &DVineSpec, tree: usize) -> Result<BivariateCopula> {
    let none = || PvcError::NoClosedForm(format!("tree {tree} of this data-generating process"));
    let (c0, c1) = centred_fgm_chain(dgp).ok_or_else(none)?;
    match tree {
        3 => BivariateCopula::fgm(fgm_chain_third_tree_theta(c0, c1)),
        4 if c0 == 1.0 && c1 == -2.0 => Ok(BivariateCopula::numeric(fgm5_fourth_tree_table(DEFAULT_GRID)?)),
        _ => Err(none()),
    }
}

fn ks_of_pairs(pairs: &[[f64; 2]]) -> f64 {
    let a: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
    ks_uniform(&a).statistic.max(ks_uniform(&b).statistic)
}

fn diagnostic(tree: usize, i: usize, mode: TreeMode, cop: &BivariateCopula) -> EdgeDiagnostic {
    EdgeDiagnostic {
        tree,
        index: i + 1,
        mode: mode.label(),
        copula: cop.label(),
        params: cop.params(),
        std_errors: vec![],
        ks_stat: None,
        residual: cop.table().map(NumericBivariateCopula::margin_error),
    }
}

/// Build the partial vine copula of `dgp` tree by tree.
pub fn build_pvc(dgp: &DVineSpec, cfg: &PvcBuildConfig) -> Result<PvcResult> {
    let d = dgp.dim();
    cfg.validate(d)?;
    let mut trees: Vec<Vec<BivariateCopula>> = Vec::with_capacity(d - 1);
    let mut diagnostics = Vec::new();
    let first = (0..d - 1)
        .map(|i| dgp.edge(1, i).copula_at(&[]).map_err(|e| e.at_edge(1, i + 1)))
        .collect::<Result<Vec<_>>>()?;
    for (i, c) in first.iter().enumerate() {
        let mut diag = diagnostic(1, i, TreeMode::ClosedForm, c);
        diag.mode = "copy".into();
        diagnostics.push(diag);
    }
    trees.push(first);

    let needs_data = (3..d).any(|j| cfg.mode_for(j) != TreeMode::ClosedForm)
        || matches!(cfg.mode_for(2), TreeMode::ParametricFit { .. });
    let data = if needs_data && d > 2 { Some(dgp.sample(cfg.sample_count, cfg.seed)?) } else { None };

    for tree in 2..d {
        let mode = cfg.mode_for(tree);
        let pairs = match (&data, mode) {
            (Some(data), m) if tree >= 3 || m != TreeMode::NumericTabulation && m != TreeMode::ClosedForm => {
                Some(ppit_pairs(&trees, data, tree)?)
            }
            _ => None,
        };
        let mut row = Vec::with_capacity(d - tree);
        for i in 0..d - tree {
            let edge_pairs = pairs.as_ref().map(|p| p[i].as_slice());
            let (cop, mut diag) = build_edge(dgp, tree, i, mode, cfg, edge_pairs).map_err(|e| e.at_edge(tree, i + 1))?;
            diag.ks_stat = edge_pairs.map(ks_of_pairs);
            diagnostics.push(diag);
            row.push(cop);
        }
        trees.push(row);
    }
    Ok(PvcResult {
        spec: SimplifiedVineSpec::new(d, trees)?,
        diagnostics,
    })
}

fn build_edge(
    dgp: &DVineSpec,
    tree: usize,
    i: usize,
    mode: TreeMode,
    cfg: &PvcBuildConfig,
    pairs: Option<&[[f64; 2]]>,
) -> Result<(BivariateCopula, EdgeDiagnostic)> {
    let missing = || PvcError::Structure("PPIT pairs were not generated".into());
    match mode {
        TreeMode::ClosedForm => {
            let cop = if tree == 2 {
                closed_form_second_tree(dgp.edge(2, i))?
            } else {
                closed_form_higher_tree(dgp, tree)?
            };
            let diag = diagnostic(tree, i, mode, &cop);
            Ok((cop, diag))
        }
        TreeMode::ParametricFit { family } => {
            let fit = fit_pair(family, pairs.ok_or_else(missing)?)?;
            let mut diag = diagnostic(tree, i, mode, &fit.copula);
            diag.std_errors = fit.std_errors;
            Ok((fit.copula, diag))
        }
        TreeMode::NumericTabulation => {
            let table = if tree == 2 {
                first_order_partial(dgp, i, cfg.quad_order, cfg.grid)?
            } else {
                NumericBivariateCopula::empirical_checkerboard(
                    pairs.ok_or_else(missing)?,
                    cfg.grid - 1,
                    format!("empirical checkerboard of {} PPIT pairs", pairs.map_or(0, <[_]>::len)),
                )?
            };
            let cop = BivariateCopula::numeric(table);
            let diag = diagnostic(tree, i, mode, &cop);
            Ok((cop, diag))
        }
    }
}

/// Comparison of the PPITs entering edge `(i, tree)` with the
/// true CPITs and with the conditioning variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpitDiagnostic {
    /// Largest |sample correlation| between a PPIT and a conditioning margin.
    pub max_abs_corr: f64,
    /// Approximate standard error of a null sample correlation, `1/√n`.
    pub corr_std_error: f64,
    /// Largest KS statistic of the two PPITs against uniform.
    pub ks_stat: f64,
    /// Largest pointwise |PPIT - CPIT|.
    pub max_ppit_cpit_diff: f64,
}

/// Compare PPITs (from the PVC trees `lower`) with CPITs (from `dgp`) for
/// edge `(i, tree)` on `n` rows sampled from `dgp`.
pub fn ppit_diagnostic(
    dgp: &DVineSpec,
    lower: &[Vec<BivariateCopula>],
    tree: usize,
    i: usize,
    n: usize,
    seed: u64,
) -> Result<PpitDiagnostic> {
    let d = dgp.dim();
    if n < MIN_FIT_SAMPLES {
        return Err(PvcError::param(format!("ppit_diagnostic needs n >= {MIN_FIT_SAMPLES}")));
    }
    if tree < 2 || tree >= d || i + tree >= d {
        return Err(PvcError::Structure(format!("edge ({}, {tree}) has no conditioning set", i + 1)));
    }
    let data = dgp.sample(n, seed)?;
    let pairs = ppit_pairs(lower, &data, tree)?.swap_remove(i);
    let cpits: Vec<Result<[f64; 2]>> = with_pool(|| {
        data.par_iter()
            .enumerate()
            .map(|(r, u)| {
                let t = engine::evaluate(dgp, u, tree - 1, false).map_err(|e| e.at_row(r))?;
                Ok([t.fwd[tree - 1][i], t.bwd[tree - 1][i + 1]])
            })
            .collect()
    });
    let mut max_diff: f64 = 0.0;
    for (c, p) in cpits.into_iter().zip(&pairs) {
        let c = c?;
        max_diff = max_diff.max((c[0] - p[0]).abs()).max((c[1] - p[1]).abs());
    }
    let a: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
    let mut max_abs_corr: f64 = 0.0;
    for m in i + 1..i + tree {
        let z: Vec<f64> = data.iter().map(|u| u[m]).collect();
        max_abs_corr = max_abs_corr.max(pearson(&a, &z).abs()).max(pearson(&b, &z).abs());
    }
    Ok(PpitDiagnostic {
        max_abs_corr,
        corr_std_error: 1.0 / (n as f64).sqrt(),
        ks_stat: ks_of_pairs(&pairs),
        max_ppit_cpit_diff: max_diff,
    })
}

/// Implied `(i, k)` margin `∫ C_{i,k|s}(F(a|z), F(b|z)) c_s(z) dz` of a
/// vine, tabulated on `nodes` points per axis with a tensor
/// Gauss–Legendre rule of `quad_order` over the conditioning block.
pub(crate) fn implicit_margin<S: EdgeSource + Sync + ?Sized>(
    src: &S,
    i: usize,
    k: usize,
    quad_order: usize,
    nodes: usize,
) -> Result<NumericBivariateCopula> {
    if k <= i + 1 || k >= src.dim() {
        return Err(PvcError::Structure(format!(
            "implicit margin ({i}, {k}) needs 0 <= i, i + 2 <= k < {}",
            src.dim()
        )));
    }
    if nodes < 2 {
        return Err(PvcError::param("need at least two nodes per axis"));
    }
    let j = k - i;
    let outer = Window { src, start: i, len: j + 1 };
    let inner = Window { src, start: i + 1, len: j - 1 };
    let rule = gauss_legendre(quad_order)?;
    let m = rule.order();
    let total = m.checked_pow((j - 1) as u32).filter(|&t| t <= 1 << 24).ok_or_else(|| {
        PvcError::param(format!("order-{quad_order} tensor rule in {} dimensions is too large", j - 1))
    })?;
    let grid: Vec<f64> = (0..nodes).map(|t| t as f64 / (nodes - 1) as f64).collect();
    let interior: Vec<f64> = grid[1..nodes - 1].to_vec();
    // per conditioning node: weight × inner density, top copula, F(a|z), F(b|z)
    type Slice = (f64, BivariateCopula, Vec<f64>, Vec<f64>);
    let slices: Vec<Result<Slice>> = with_pool(|| {
        (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut z = Vec::with_capacity(j - 1);
                let mut w = 1.0;
                let mut rem = flat;
                for _ in 0..j - 1 {
                    z.push(rule.nodes()[rem % m]);
                    w *= rule.weights()[rem % m];
                    rem /= m;
                }
                let dens = engine::log_density(&inner, &z)?.exp();
                let top = outer.edge(j, 0, &z)?.into_owned();
                let mut fa = Vec::with_capacity(interior.len());
                let mut fb = Vec::with_capacity(interior.len());
                let mut point = vec![0.5; j + 1];
                point[1..j].copy_from_slice(&z);
                for &x in &interior {
                    point[0] = x;
                    point[j] = x;
                    let t = engine::evaluate(&outer, &point, j - 1, false)?;
                    fa.push(t.fwd[j - 1][0]);
                    fb.push(t.bwd[j - 1][1]);
                }
                Ok((w * dens, top, fa, fb))
            })
            .collect()
    });
    let slices = slices.into_iter().collect::<Result<Vec<_>>>()?;
    let n_int = interior.len();
    let values: Vec<Result<Vec<f64>>> = with_pool(|| {
        (0..n_int)
            .into_par_iter()
            .map(|ia| {
                let mut row = vec![0.0; n_int];
                for (w, top, fa, fb) in &slices {
                    for (ib, v) in row.iter_mut().enumerate() {
                        *v += w * top.cdf(fa[ia], fb[ib])?;
                    }
                }
                Ok(row)
            })
            .collect()
    });
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    NumericBivariateCopula::from_cdf_fn(
        nodes,
        |a, b| {
            let ia = ((a * (nodes - 1) as f64).round() as usize).saturating_sub(1);
            let ib = ((b * (nodes - 1) as f64).round() as usize).saturating_sub(1);
            values[ia][ib]
        },
        format!("implied ({}, {}) margin, order-{quad_order} quadrature", i + 1, k + 1),
    )
}

impl SimplifiedVineSpec {
    /// Implied unconditional copula of margins `i < k` (0-based, `k ≥ i+2`).
    pub fn implicit_margin(&self, i: usize, k: usize, quad_order: usize, nodes: usize) -> Result<NumericBivariateCopula> {
        implicit_margin(self, i, k, quad_order, nodes)
    }
}

impl DVineSpec {
    /// Implied unconditional copula of margins `i < k` (0-based, `k ≥ i+2`).
    pub fn implicit_margin(&self, i: usize, k: usize, quad_order: usize, nodes: usize) -> Result<NumericBivariateCopula> {
        implicit_margin(self, i, k, quad_order, nodes)
    }
}
