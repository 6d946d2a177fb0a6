//! Simplified D-vine copulas.

use std::borrow::Cow;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bicop::BivariateCopula;
use crate::dvine::sample_with;
use crate::engine::{self, pairwise_sum, EdgeSource};
use crate::error::{PvcError, Result};
use crate::rng::with_pool;

/// D-vine with unconditional pair-copulas; `edges[j-1][i]` joins margins
/// `i` and `i+j` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SvcRecord", into = "SvcRecord")]
pub struct SimplifiedVineSpec {
    d: usize,
    edges: Vec<Vec<BivariateCopula>>,
}

#[derive(Serialize, Deserialize)]
struct SvcRecord {
    d: usize,
    edges: Vec<Vec<BivariateCopula>>,
}

impl From<SimplifiedVineSpec> for SvcRecord {
    fn from(s: SimplifiedVineSpec) -> Self {
        SvcRecord { d: s.d, edges: s.edges }
    }
}

impl TryFrom<SvcRecord> for SimplifiedVineSpec {
    type Error = PvcError;
    fn try_from(r: SvcRecord) -> Result<Self> {
        SimplifiedVineSpec::new(r.d, r.edges)
    }
}

impl SimplifiedVineSpec {
    pub fn new(d: usize, edges: Vec<Vec<BivariateCopula>>) -> Result<Self> {
        if d < 2 {
            return Err(PvcError::Structure(format!("dimension must be >= 2, got {d}")));
        }
        if edges.len() != d - 1 {
            return Err(PvcError::Structure(format!("expected {} trees, got {}", d - 1, edges.len())));
        }
        for (t, row) in edges.iter().enumerate() {
            if row.len() != d - t - 1 {
                return Err(PvcError::Structure(format!(
                    "tree {} needs {} edges, got {}",
                    t + 1,
                    d - t - 1,
                    row.len()
                )));
            }
        }
        Ok(SimplifiedVineSpec { d, edges })
    }

    /// All edges independence.
    pub fn independence(d: usize) -> Result<Self> {
        let edges = (1..d).map(|j| vec![BivariateCopula::independence(); d - j]).collect();
        SimplifiedVineSpec::new(d, edges)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Edge `(i, j)`: tree `j` (1-based), position `i` (0-based).
    pub fn edge(&self, tree: usize, i: usize) -> &BivariateCopula {
        &self.edges[tree - 1][i]
    }

    pub fn edges(&self) -> &[Vec<BivariateCopula>] {
        &self.edges
    }

    pub fn set_edge(&mut self, tree: usize, i: usize, cop: BivariateCopula) {
        self.edges[tree - 1][i] = cop;
    }

    /// Pseudo conditional cdf of `u_k` given the adjacent block `cond`.
    pub fn pseudo_cpit(&self, u: &[f64], k: usize, cond: Range<usize>) -> Result<f64> {
        engine::conditional_cdf(self, u, k, cond)
    }

    pub fn density(&self, u: &[f64]) -> Result<f64> {
        Ok(self.log_density(u)?.exp())
    }

    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        engine::log_density(self, u)
    }

    pub fn log_density_per_tree(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(engine::evaluate(self, u, usize::MAX, true)?.log_density_per_tree)
    }

    pub fn rosenblatt(&self, u: &[f64]) -> Result<Vec<f64>> {
        engine::rosenblatt(self, u)
    }

    pub fn inverse_rosenblatt(&self, w: &[f64]) -> Result<Vec<f64>> {
        engine::inverse_rosenblatt(self, w)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        sample_with(self, n, seed)
    }

    /// Per-row log densities, in row order.
    pub fn loglik_rows(&self, data: &[Vec<f64>]) -> Result<Vec<f64>> {
        let rows: Vec<Result<f64>> = with_pool(|| {
            data.par_iter()
                .enumerate()
                .map(|(r, u)| {
                    let ll = self.log_density(u).map_err(|e| e.at_row(r))?;
                    if ll.is_finite() {
                        Ok(ll)
                    } else {
                        Err(PvcError::eval(format!("log density {ll}"), "non-finite").at_row(r))
                    }
                })
                .collect()
        });
        rows.into_iter().collect()
    }

    /// Sum of row log densities.
    pub fn loglik(&self, data: &[Vec<f64>]) -> Result<f64> {
        Ok(pairwise_sum(&self.loglik_rows(data)?))
    }
}

impl EdgeSource for SimplifiedVineSpec {
    fn dim(&self) -> usize {
        self.d
    }

    fn edge(&self, tree: usize, i: usize, _cond: &[f64]) -> Result<Cow<'_, BivariateCopula>> {
        Ok(Cow::Borrowed(&self.edges[tree - 1][i]))
    }
}

#[cfg(test)]
mod tests;
