//! Non-simplified D-vine data-generating processes.

mod param_map;
pub mod presets;

use std::borrow::Cow;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::{BivariateCopula, Family};
use crate::engine::{self, EdgeSource};
use crate::error::{PvcError, Result};
use crate::rng::{block_rng, open_unit, with_pool, BLOCK};
use crate::svc::SimplifiedVineSpec;

pub use param_map::{ParamMap, SIMPLIFYING_GRID};

/// A pair-copula whose parameters depend on the conditioning values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEdge {
    pub family: Family,
    pub map: ParamMap,
}

impl ConditionalEdge {
    pub fn constant(cop: &BivariateCopula) -> Result<Self> {
        if cop.family() == Family::Numeric {
            return Err(PvcError::param("tabulated copulas cannot be conditional edges"));
        }
        Ok(ConditionalEdge {
            family: cop.family(),
            map: ParamMap::Constant { params: cop.params() },
        })
    }

    pub fn new(family: Family, map: ParamMap) -> Self {
        ConditionalEdge { family, map }
    }

    /// The conditional copula at conditioning values `cond`.
    pub fn copula_at(&self, cond: &[f64]) -> Result<BivariateCopula> {
        BivariateCopula::new(self.family, &self.map.eval(cond)?)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.map, ParamMap::Constant { .. })
    }

    fn validate(&self, arity: usize) -> Result<()> {
        self.map.check_arity(arity)?;
        self.map.validate_range(self.family, arity)
    }
}

/// D-vine with conditional copulas. `edges[j-1][i]` is edge `(i, j)`:
/// margins `i` and `i+j` (0-based) given `i+1 .. i+j-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DVineRecord", into = "DVineRecord")]
pub struct DVineSpec {
    d: usize,
    edges: Vec<Vec<ConditionalEdge>>,
}

#[derive(Serialize, Deserialize)]
struct DVineRecord {
    d: usize,
    edges: Vec<Vec<ConditionalEdge>>,
}

impl From<DVineSpec> for DVineRecord {
    fn from(s: DVineSpec) -> Self {
        DVineRecord { d: s.d, edges: s.edges }
    }
}

impl TryFrom<DVineRecord> for DVineSpec {
    type Error = PvcError;
    fn try_from(r: DVineRecord) -> Result<Self> {
        DVineSpec::new(r.d, r.edges)
    }
}

impl DVineSpec {
    pub fn new(d: usize, edges: Vec<Vec<ConditionalEdge>>) -> Result<Self> {
        if d < 3 {
            return Err(PvcError::Structure(format!("dimension must be >= 3, got {d}")));
        }
        if edges.len() != d - 1 {
            return Err(PvcError::Structure(format!(
                "expected {} trees, got {}",
                d - 1,
                edges.len()
            )));
        }
        for (t, row) in edges.iter().enumerate() {
            let j = t + 1;
            if row.len() != d - j {
                return Err(PvcError::Structure(format!(
                    "tree {j} needs {} edges, got {}",
                    d - j,
                    row.len()
                )));
            }
            for (i, e) in row.iter().enumerate() {
                e.validate(j - 1).map_err(|err| err.at_edge(j, i + 1))?;
            }
        }
        Ok(DVineSpec { d, edges })
    }

    /// D-vine whose edges are the given (unconditional) copulas.
    pub fn from_simplified(spec: &SimplifiedVineSpec) -> Result<Self> {
        let edges = (1..spec.dim())
            .map(|j| {
                (0..spec.dim() - j)
                    .map(|i| ConditionalEdge::constant(spec.edge(j, i)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        DVineSpec::new(spec.dim(), edges)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Edge `(i, j)`: tree `j` (1-based), position `i` (0-based).
    pub fn edge(&self, tree: usize, i: usize) -> &ConditionalEdge {
        &self.edges[tree - 1][i]
    }

    pub fn edges(&self) -> &[Vec<ConditionalEdge>] {
        &self.edges
    }

    pub fn is_simplified(&self) -> bool {
        self.edges.iter().flatten().all(ConditionalEdge::is_constant)
    }

    /// The simplified vine with the same edges, if every map is constant.
    pub fn as_simplified(&self) -> Option<SimplifiedVineSpec> {
        if !self.is_simplified() {
            return None;
        }
        let edges = self
            .edges
            .iter()
            .map(|row| row.iter().map(|e| e.copula_at(&[])).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .ok()?;
        SimplifiedVineSpec::new(self.d, edges).ok()
    }

    /// Restrict to the margins `start .. start+len` (a sub-D-vine).
    pub fn sub_vine(&self, start: usize, len: usize) -> Result<DVineSpec> {
        if len < 3 || start + len > self.d {
            return Err(PvcError::Structure(format!(
                "sub-vine {start}..{} invalid for d = {}",
                start + len,
                self.d
            )));
        }
        let edges = (1..len)
            .map(|j| (start..start + len - j).map(|i| self.edge(j, i).clone()).collect())
            .collect();
        DVineSpec::new(len, edges)
    }

    /// Conditional cdf `F(u_k | u_cond)`; `cond` must be a contiguous block
    /// adjacent to `k`.
    pub fn cpit(&self, u: &[f64], k: usize, cond: Range<usize>) -> Result<f64> {
        engine::conditional_cdf(self, u, k, cond)
    }

    pub fn density(&self, u: &[f64]) -> Result<f64> {
        Ok(self.log_density(u)?.exp())
    }

    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        engine::log_density(self, u)
    }

    /// Log density split by tree.
    pub fn log_density_per_tree(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(engine::evaluate(self, u, usize::MAX, true)?.log_density_per_tree)
    }

    pub fn rosenblatt(&self, u: &[f64]) -> Result<Vec<f64>> {
        engine::rosenblatt(self, u)
    }

    pub fn inverse_rosenblatt(&self, w: &[f64]) -> Result<Vec<f64>> {
        engine::inverse_rosenblatt(self, w)
    }

    /// `n` iid rows by inverse Rosenblatt transform of uniforms.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        sample_with(self, n, seed)
    }

    /// Largest sup-distance between conditional-copula cdfs of edge
    /// `(i, tree)` over a `grid`-point conditioning lattice; the cdfs are
    /// compared on the same lattice in `(a, b)`.
    pub fn simplifying_gap(&self, tree: usize, i: usize, grid: usize) -> Result<f64> {
        if tree < 2 || tree >= self.d || i >= self.d - tree {
            return Err(PvcError::Structure(format!("edge ({}, {tree}) has no conditioning set", i + 1)));
        }
        if grid < 2 {
            return Err(PvcError::param("grid must have at least 2 points"));
        }
        let edge = self.edge(tree, i);
        if edge.is_constant() {
            return Ok(0.0);
        }
        let arity = tree - 1;
        let nodes: Vec<f64> = (0..grid).map(|k| k as f64 / (grid - 1) as f64).collect();
        let total = grid.checked_pow(arity as u32).ok_or_else(|| PvcError::param("grid too large"))?;
        let mut cops = Vec::with_capacity(total);
        let mut idx = vec![0usize; arity];
        for _ in 0..total {
            let z: Vec<f64> = idx.iter().map(|&k| nodes[k]).collect();
            cops.push(edge.copula_at(&z)?);
            for k in (0..arity).rev() {
                idx[k] += 1;
                if idx[k] < grid {
                    break;
                }
                idx[k] = 0;
            }
        }
        let mut gap: f64 = 0.0;
        for &a in &nodes {
            for &b in &nodes {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for c in &cops {
                    let v = c.cdf(a, b)?;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                gap = gap.max(hi - lo);
            }
        }
        Ok(gap)
    }
}

impl EdgeSource for DVineSpec {
    fn dim(&self) -> usize {
        self.d
    }

    fn edge(&self, tree: usize, i: usize, cond: &[f64]) -> Result<Cow<'_, BivariateCopula>> {
        Ok(Cow::Owned(self.edges[tree - 1][i].copula_at(cond)?))
    }
}

/// Row-parallel inverse-Rosenblatt sampler with per-block seeds.
pub(crate) fn sample_with<S: EdgeSource + Sync>(src: &S, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(PvcError::param("sample size must be >= 1"));
    }
    let d = src.dim();
    let blocks = n.div_ceil(BLOCK);
    let parts: Vec<Result<Vec<Vec<f64>>>> = with_pool(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                let count = BLOCK.min(n - b * BLOCK);
                let mut out = Vec::with_capacity(count);
                let mut w = vec![0.0; d];
                for r in 0..count {
                    for x in w.iter_mut() {
                        *x = open_unit(&mut rng);
                    }
                    let row = engine::inverse_rosenblatt(src, &w).map_err(|e| e.at_row(b * BLOCK + r))?;
                    out.push(row);
                }
                Ok(out)
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(n);
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}
