//! D-vine recursion shared by the non-simplified and simplified vines.
//!
//! Margins are 0-based. Edge `(i, j)` (tree `j ≥ 1`) joins margins `i` and
//! `i + j` given `i+1 .. i+j-1`. With `fwd[0][i] = bwd[0][i] = u_i`, the edge
//! copula is evaluated at `a = fwd[j-1][i]`, `b = bwd[j-1][i+1]` and
//!
//! * `fwd[j][i] = h2(a, b) = F(u_i | u_{i+1..i+j})`,
//! * `bwd[j][i] = h1(a, b) = F(u_{i+j} | u_{i..i+j-1})`.

use std::borrow::Cow;
use std::ops::Range;

use crate::bicop::BivariateCopula;
use crate::error::{PvcError, Result};

/// Smallest distance kept between a transformed value and the boundary.
pub const EDGE_EPS: f64 = 1e-15;

pub(crate) fn interior(x: f64) -> f64 {
    x.clamp(EDGE_EPS, 1.0 - EDGE_EPS)
}

/// Supplies the pair-copula of edge `(i, tree)`, possibly depending on the
/// conditioning values `cond = u[i+1 .. i+tree]`.
pub(crate) trait EdgeSource {
    fn dim(&self) -> usize;
    fn edge(&self, tree: usize, i: usize, cond: &[f64]) -> Result<Cow<'_, BivariateCopula>>;
}

/// The sub-vine on margins `start .. start + len`.
pub(crate) struct Window<'a, S: ?Sized> {
    pub src: &'a S,
    pub start: usize,
    pub len: usize,
}

impl<S: EdgeSource + ?Sized> EdgeSource for Window<'_, S> {
    fn dim(&self) -> usize {
        self.len
    }

    fn edge(&self, tree: usize, i: usize, cond: &[f64]) -> Result<Cow<'_, BivariateCopula>> {
        self.src.edge(tree, self.start + i, cond)
    }
}

/// Transformed values of one point.
#[derive(Debug, Clone)]
pub(crate) struct Triangle {
    pub fwd: Vec<Vec<f64>>,
    pub bwd: Vec<Vec<f64>>,
    /// Sum of edge log densities per tree (index `j - 1`).
    pub log_density_per_tree: Vec<f64>,
}

impl Triangle {
    pub fn log_density(&self) -> f64 {
        self.log_density_per_tree.iter().sum()
    }
}

fn check_point(u: &[f64], d: usize) -> Result<()> {
    if u.len() != d {
        return Err(PvcError::Structure(format!(
            "point has {} coordinates, vine has {d}",
            u.len()
        )));
    }
    for (k, &x) in u.iter().enumerate() {
        if !(x > 0.0 && x < 1.0) {
            return Err(PvcError::eval(format!("u[{k}] = {x}"), "must lie in (0, 1)"));
        }
    }
    Ok(())
}

/// Run the recursion through trees `1..=max_tree`, with or without
/// densities.
pub(crate) fn evaluate<S: EdgeSource + ?Sized>(
    src: &S,
    u: &[f64],
    max_tree: usize,
    densities: bool,
) -> Result<Triangle> {
    let d = src.dim();
    check_point(u, d)?;
    let max_tree = max_tree.min(d - 1);
    let mut fwd = vec![u.to_vec()];
    let mut bwd = vec![u.to_vec()];
    let mut per_tree = vec![0.0; max_tree];
    for j in 1..=max_tree {
        let m = d - j;
        let mut f = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for i in 0..m {
            let a = fwd[j - 1][i];
            let c = bwd[j - 1][i + 1];
            let run = || -> Result<(f64, f64, f64)> {
                let cop = src.edge(j, i, &u[i + 1..i + j])?;
                let ld = if densities { cop.log_pdf(a, c)? } else { 0.0 };
                Ok((interior(cop.h2(a, c)?), interior(cop.h1(a, c)?), ld))
            };
            let (h2, h1, ld) = run().map_err(|e| e.at_edge(j, i + 1))?;
            f.push(h2);
            b.push(h1);
            per_tree[j - 1] += ld;
        }
        fwd.push(f);
        bwd.push(b);
    }
    Ok(Triangle {
        fwd,
        bwd,
        log_density_per_tree: per_tree,
    })
}

pub(crate) fn log_density<S: EdgeSource + ?Sized>(src: &S, u: &[f64]) -> Result<f64> {
    Ok(evaluate(src, u, usize::MAX, true)?.log_density())
}

/// `w_0 = u_0`, `w_k = F(u_k | u_0 .. u_{k-1})`.
pub(crate) fn rosenblatt<S: EdgeSource + ?Sized>(src: &S, u: &[f64]) -> Result<Vec<f64>> {
    let t = evaluate(src, u, usize::MAX, false)?;
    Ok((0..src.dim()).map(|k| t.bwd[k][0]).collect())
}

/// Conditional cdf of `u_k` given the contiguous block `cond`, which must
/// end at `k - 1` or start at `k + 1`.
pub(crate) fn conditional_cdf<S: EdgeSource + ?Sized>(
    src: &S,
    u: &[f64],
    k: usize,
    cond: Range<usize>,
) -> Result<f64> {
    let d = src.dim();
    if k >= d || cond.end > d || cond.start > cond.end {
        return Err(PvcError::Structure(format!(
            "margin {k} / conditioning set {cond:?} out of range for d = {d}"
        )));
    }
    let m = cond.len();
    if m == 0 {
        check_point(u, d)?;
        return Ok(u[k]);
    }
    if cond.contains(&k) {
        return Err(PvcError::Structure(format!("margin {k} inside conditioning set {cond:?}")));
    }
    let t = evaluate(src, u, m, false)?;
    if cond.start == k + 1 {
        Ok(t.fwd[m][k])
    } else if cond.end == k {
        Ok(t.bwd[m][k - m])
    } else {
        Err(PvcError::Structure(format!(
            "conditioning set {cond:?} is not a contiguous block adjacent to margin {k}"
        )))
    }
}

/// Inverse Rosenblatt transform: the point whose [`rosenblatt`] image is `w`.
pub(crate) fn inverse_rosenblatt<S: EdgeSource + ?Sized>(src: &S, w: &[f64]) -> Result<Vec<f64>> {
    let d = src.dim();
    check_point(w, d)?;
    let mut u = vec![0.5; d];
    u[0] = w[0];
    // fwd[j][i] for the edges finished so far
    let mut fwd: Vec<Vec<f64>> = (0..d).map(|j| vec![0.0; d - j]).collect();
    let mut bwd: Vec<Vec<f64>> = fwd.clone();
    fwd[0][0] = w[0];
    bwd[0][0] = w[0];
    for k in 1..d {
        bwd[k][0] = w[k];
        for j in (1..=k).rev() {
            let i = k - j;
            let cop = src.edge(j, i, &u[i + 1..i + j]).map_err(|e| e.at_edge(j, i + 1))?;
            let lower = cop
                .h1_inv(bwd[j][i], fwd[j - 1][i])
                .map_err(|e| e.at_edge(j, i + 1))?;
            bwd[j - 1][i + 1] = interior(lower);
        }
        u[k] = bwd[0][k];
        fwd[0][k] = u[k];
        for j in 1..=k {
            let i = k - j;
            let cop = src.edge(j, i, &u[i + 1..i + j]).map_err(|e| e.at_edge(j, i + 1))?;
            let a = fwd[j - 1][i];
            let b = bwd[j - 1][i + 1];
            fwd[j][i] = interior(cop.h2(a, b).map_err(|e| e.at_edge(j, i + 1))?);
        }
    }
    Ok(u)
}

/// Pairwise summation, deterministic for a given input order.
pub(crate) fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}
