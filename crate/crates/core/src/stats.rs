//! Sample statistics used by the diagnostics and the replication studies.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Average ranks (1-based); ties share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Sample Spearman ρ with a batch-means standard error (up to 50
/// contiguous batches of at least 100 rows).
pub fn spearman_rho_with_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let rho = spearman_rho(x, y);
    let batches = (n / 100).clamp(2, 50);
    let size = n / batches;
    let per: Vec<f64> = (0..batches)
        .map(|b| {
            let r = b * size..(b + 1) * size;
            spearman_rho(&x[r.clone()], &y[r])
        })
        .collect();
    let se = (variance(&per) / batches as f64).sqrt() * (size as f64 * batches as f64 / n as f64).sqrt();
    (rho, se)
}

/// Kendall's τ-a in `O(n log n)` (Knight's merge-sort count). Assumes no
/// ties, as for continuous data.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count(&mut ys, &mut buf);
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    (pairs - 2.0 * discordant as f64) / pairs
}

fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = a.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[i] <= a[j] {
            buf[k] = a[i];
            i += 1;
        } else {
            buf[k] = a[j];
            swaps += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&a[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&buf[..n]);
    swaps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against U(0,1).
pub fn ks_uniform(x: &[f64]) -> KsResult {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max);
    let sq = n.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d),
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic KS critical value `c(α)/√n`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

/// Two-sided one-sample t test of `mean(d) = 0`.
pub fn paired_t(d: &[f64]) -> PairedT {
    let n = d.len();
    let m = mean(d);
    let se = if n > 1 { (variance(d) / n as f64).sqrt() } else { f64::NAN };
    let t = if se > 0.0 {
        m / se
    } else if m == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(m)
    };
    let p = if n < 2 || t.is_nan() {
        f64::NAN
    } else if t.is_infinite() {
        0.0
    } else {
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid degrees of freedom");
        2.0 * dist.sf(t.abs())
    };
    PairedT {
        n,
        mean: m,
        std_error: se,
        t_stat: t,
        p_value: p,
    }
}

/// Median of a sample (average of the middle pair for even sizes).
pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[0.2, 0.9, 0.5]), vec![1.0, 3.0, 2.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 3.0]), vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn kendall_matches_quadratic_count() {
        let x: [f64; 7] = [0.1, 0.4, 0.35, 0.8, 0.05, 0.6, 0.9];
        let y: [f64; 7] = [0.3, 0.2, 0.9, 0.7, 0.1, 0.65, 0.4];
        let mut s = 0.0;
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                s += ((x[i] - x[j]) * (y[i] - y[j])).signum();
            }
        }
        let want = s / 21.0;
        assert!((kendall_tau(&x, &y) - want).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_known_values() {
        // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.0098
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 5e-4);
        assert!((ks_critical(10_000, 0.01) - 0.016276).abs() < 1e-5);
    }

    #[test]
    fn paired_t_reference() {
        // mean 3.2, sd 1.923538, t = 3.2/(1.923538/√5), df 4
        let r = paired_t(&[1.0, 2.0, 3.0, 4.0, 6.0]);
        assert!((r.t_stat - 3.719_924_4).abs() < 1e-6);
        assert!((r.p_value - 0.020_475_87).abs() < 1e-6);
        assert_eq!(paired_t(&[0.0, 0.0, 0.0]).t_stat, 0.0);
    }
}
