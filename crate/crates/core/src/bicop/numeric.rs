//! Tabulated copulas: a cdf on a regular `(n+1)×(n+1)` node grid with
//! bilinear interpolation, i.e. a checkerboard copula with constant density
//! on each of the `n×n` cells.

use serde::{Deserialize, Serialize};

use crate::error::{PvcError, Result};

/// Minimum number of margin-correction passes.
pub const SINKHORN_MIN_PASSES: usize = 10;
const SINKHORN_MAX_PASSES: usize = 1000;
const SINKHORN_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NumericRecord", into = "NumericRecord")]
pub struct NumericBivariateCopula {
    cells: usize,
    /// Cell probabilities, row-major with the `u` cell index first.
    mass: Vec<f64>,
    /// Cdf at the nodes `(i/n, j/n)`, row-major in `i`.
    cdf: Vec<f64>,
    provenance: String,
}

#[derive(Serialize, Deserialize)]
struct NumericRecord {
    /// Nodes per axis, including 0 and 1.
    nodes: usize,
    interpolation: String,
    cdf_grid: Vec<f64>,
    provenance: String,
}

impl From<NumericBivariateCopula> for NumericRecord {
    fn from(c: NumericBivariateCopula) -> Self {
        NumericRecord {
            nodes: c.cells + 1,
            interpolation: "bilinear".into(),
            cdf_grid: c.cdf,
            provenance: c.provenance,
        }
    }
}

impl TryFrom<NumericRecord> for NumericBivariateCopula {
    type Error = PvcError;

    fn try_from(r: NumericRecord) -> Result<Self> {
        if r.interpolation != "bilinear" {
            return Err(PvcError::param(format!(
                "unsupported interpolation {:?}",
                r.interpolation
            )));
        }
        if r.nodes < 2 || r.cdf_grid.len() != r.nodes * r.nodes {
            return Err(PvcError::param("cdf_grid must hold nodes×nodes values"));
        }
        let n = r.nodes;
        NumericBivariateCopula::from_node_values(n, |i, j| r.cdf_grid[i * n + j], r.provenance)
    }
}

impl NumericBivariateCopula {
    /// Tabulate `f` on `nodes×nodes` equispaced nodes of `[0,1]²`.
    ///
    /// The boundary rows are set to their exact copula values; interior
    /// values come from `f`. Cell masses below `-1e-9` are rejected,
    /// smaller negative rounding noise is zeroed before margin correction.
    pub fn from_cdf_fn<F>(nodes: usize, f: F, provenance: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
    {
        if nodes < 2 {
            return Err(PvcError::param("need at least two nodes per axis"));
        }
        let n = nodes - 1;
        let h = 1.0 / n as f64;
        Self::from_node_values(nodes, |i, j| f(i as f64 * h, j as f64 * h), provenance.into())
    }

    fn from_node_values<F>(nodes: usize, value: F, provenance: String) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64,
    {
        let n = nodes - 1;
        let h = 1.0 / n as f64;
        let mut grid = vec![0.0; nodes * nodes];
        for i in 0..nodes {
            for j in 0..nodes {
                grid[i * nodes + j] = if i == 0 || j == 0 {
                    0.0
                } else if i == n {
                    j as f64 * h
                } else if j == n {
                    i as f64 * h
                } else {
                    value(i, j)
                };
                if !grid[i * nodes + j].is_finite() {
                    return Err(PvcError::eval(
                        format!("grid node ({i}, {j})"),
                        "non-finite cdf value",
                    ));
                }
            }
        }
        let mut mass = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let m = grid[(i + 1) * nodes + j + 1] - grid[i * nodes + j + 1]
                    - grid[(i + 1) * nodes + j]
                    + grid[i * nodes + j];
                if m < -1e-9 {
                    return Err(PvcError::param(format!(
                        "tabulated cdf is not 2-increasing in cell ({i}, {j}): mass {m:e}"
                    )));
                }
                mass[i * n + j] = m.max(0.0);
            }
        }
        Self::from_cell_masses(n, mass, provenance)
    }

    /// Build from nonnegative cell weights (any total), rescaled to exact
    /// uniform margins.
    pub fn from_cell_masses(cells: usize, mut mass: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if cells == 0 || mass.len() != cells * cells {
            return Err(PvcError::param("mass must hold cells×cells values"));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(PvcError::param("cell masses must be finite and nonnegative"));
        }
        sinkhorn(cells, &mut mass)?;
        let cdf = cumulate(cells, &mass);
        Ok(NumericBivariateCopula {
            cells,
            mass,
            cdf,
            provenance: provenance.into(),
        })
    }

    /// Empirical checkerboard copula of pairs in `(0,1)²` on `cells×cells`
    /// cells, margin-corrected.
    pub fn empirical_checkerboard(
        pairs: &[[f64; 2]],
        cells: usize,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(PvcError::param("empirical checkerboard needs data"));
        }
        let mut mass = vec![0.0; cells * cells];
        for (r, p) in pairs.iter().enumerate() {
            if !(p[0] > 0.0 && p[0] < 1.0 && p[1] > 0.0 && p[1] < 1.0) {
                return Err(PvcError::eval(format!("pair {r}"), "outside the open unit square"));
            }
            let i = cell_of(p[0], cells);
            let j = cell_of(p[1], cells);
            mass[i * cells + j] += 1.0;
        }
        Self::from_cell_masses(cells, mass, provenance)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Cdf value at node `(i/n, j/n)`.
    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        self.cdf[i * (self.cells + 1) + j]
    }

    pub fn cell_mass(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.cells + j]
    }

    /// Largest deviation of the node margins from the identity.
    pub fn margin_error(&self) -> f64 {
        let n = self.cells;
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                (self.node_value(k, n) - t).abs().max((self.node_value(n, k) - t).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let n = self.cells;
        let (i, s) = locate(u, n);
        let (j, t) = locate(v, n);
        let c00 = self.node_value(i, j);
        let c01 = self.node_value(i, j + 1);
        let c10 = self.node_value(i + 1, j);
        let c11 = self.node_value(i + 1, j + 1);
        (1.0 - s) * ((1.0 - t) * c00 + t * c01) + s * ((1.0 - t) * c10 + t * c11)
    }

    pub fn pdf(&self, u: f64, v: f64) -> f64 {
        let n = self.cells;
        let (i, _) = locate(u, n);
        let (j, _) = locate(v, n);
        self.cell_mass(i, j) * (n * n) as f64
    }

    /// Conditional cdf of `v` given `u`: piecewise linear through the
    /// normalized partial row sums of `u`'s cell.
    pub fn h1(&self, u: f64, v: f64) -> f64 {
        let n = self.cells;
        let (i, _) = locate(u, n);
        let (j, t) = locate(v, n);
        let lo = n as f64 * (self.node_value(i + 1, j) - self.node_value(i, j));
        let hi = n as f64 * (self.node_value(i + 1, j + 1) - self.node_value(i, j + 1));
        ((1.0 - t) * lo + t * hi).clamp(0.0, 1.0)
    }

    pub fn h2(&self, u: f64, v: f64) -> f64 {
        let n = self.cells;
        let (i, s) = locate(u, n);
        let (j, _) = locate(v, n);
        let lo = n as f64 * (self.node_value(i, j + 1) - self.node_value(i, j));
        let hi = n as f64 * (self.node_value(i + 1, j + 1) - self.node_value(i + 1, j));
        ((1.0 - s) * lo + s * hi).clamp(0.0, 1.0)
    }

    pub fn h1_inv(&self, p: f64, u: f64) -> f64 {
        let n = self.cells;
        let (i, _) = locate(u, n);
        let row = |j: usize| n as f64 * (self.node_value(i + 1, j) - self.node_value(i, j));
        invert_piecewise(n, row, p)
    }

    pub fn h2_inv(&self, p: f64, v: f64) -> f64 {
        let n = self.cells;
        let (j, _) = locate(v, n);
        let col = |i: usize| n as f64 * (self.node_value(i, j + 1) - self.node_value(i, j));
        invert_piecewise(n, col, p)
    }

    /// `12 ∫∫ C - 3`, exact for the bilinear interpolant.
    pub fn spearman_rho(&self) -> f64 {
        let n = self.cells;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.corner_mean(i, j);
            }
        }
        12.0 * acc / (n * n) as f64 - 3.0
    }

    /// `4 ∫ C dC - 1`, exact for the checkerboard density.
    pub fn kendall_tau(&self) -> f64 {
        let n = self.cells;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let m = self.cell_mass(i, j);
                if m > 0.0 {
                    acc += m * self.corner_mean(i, j);
                }
            }
        }
        4.0 * acc - 1.0
    }

    // mean of C over the cell: the corner average for a bilinear C
    fn corner_mean(&self, i: usize, j: usize) -> f64 {
        0.25 * (self.node_value(i, j)
            + self.node_value(i + 1, j)
            + self.node_value(i, j + 1)
            + self.node_value(i + 1, j + 1))
    }
}

fn cell_of(x: f64, n: usize) -> usize {
    ((x * n as f64) as usize).min(n - 1)
}

/// Cell index and local coordinate in `[0,1]`.
fn locate(x: f64, n: usize) -> (usize, f64) {
    let scaled = x.clamp(0.0, 1.0) * n as f64;
    let i = (scaled as usize).min(n - 1);
    (i, scaled - i as f64)
}

/// Invert a nondecreasing piecewise-linear function with values `f(j)` at
/// `j/n`, `f(0) = 0`, `f(n) = 1`.
fn invert_piecewise<F: Fn(usize) -> f64>(n: usize, f: F, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    // first node with f(j) >= p
    let (mut lo, mut hi) = (0usize, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if f(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (a, b) = (f(lo), f(hi));
    let t = if b > a { ((p - a) / (b - a)).clamp(0.0, 1.0) } else { 0.0 };
    (lo as f64 + t) / n as f64
}

fn sinkhorn(n: usize, mass: &mut [f64]) -> Result<()> {
    let target = 1.0 / n as f64;
    for pass in 0..SINKHORN_MAX_PASSES {
        for i in 0..n {
            let row = &mut mass[i * n..(i + 1) * n];
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(PvcError::param(format!("empty row {i} in cell masses")));
            }
            let k = target / sum;
            row.iter_mut().for_each(|m| *m *= k);
        }
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let sum: f64 = (0..n).map(|i| mass[i * n + j]).sum();
            if sum <= 0.0 {
                return Err(PvcError::param(format!("empty column {j} in cell masses")));
            }
            let k = target / sum;
            for i in 0..n {
                mass[i * n + j] *= k;
            }
        }
        for i in 0..n {
            let sum: f64 = mass[i * n..(i + 1) * n].iter().sum();
            worst = worst.max((sum - target).abs());
        }
        if pass + 1 >= SINKHORN_MIN_PASSES && worst * n as f64 <= SINKHORN_TOL {
            return Ok(());
        }
    }
    Ok(())
}

fn cumulate(n: usize, mass: &[f64]) -> Vec<f64> {
    let w = n + 1;
    let mut cdf = vec![0.0; w * w];
    for i in 1..=n {
        let mut row = 0.0;
        for j in 1..=n {
            row += mass[(i - 1) * n + j - 1];
            cdf[i * w + j] = cdf[(i - 1) * w + j] + row;
        }
    }
    // pin the top and right edges to the exact margins
    for k in 0..=n {
        let t = k as f64 / n as f64;
        cdf[n * w + k] = t;
        cdf[k * w + n] = t;
    }
    cdf
}
