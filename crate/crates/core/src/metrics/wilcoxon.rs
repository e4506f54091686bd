use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Differences and rank gaps at or below this are treated as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Largest number of non-zero differences handled by the exact method.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_nonzero: usize,
    /// `min(W⁺, W⁻)`.
    #[serde(rename = "w")]
    pub w_statistic: f64,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Non-zero differences with their average ranks by absolute value.
pub(crate) fn signed_ranks(diffs: &[f64]) -> Vec<(f64, f64)> {
    let mut nz: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > ZERO_TOLERANCE).collect();
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut ranked = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i + 1;
        while j < nz.len() && (nz[j].abs() - nz[i].abs()).abs() <= ZERO_TOLERANCE {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let rank = (i + 1 + j) as f64 / 2.0;
        ranked.extend(nz[i..j].iter().map(|&d| (d, rank)));
        i = j;
    }
    ranked
}

/// Two-sided Wilcoxon signed-rank test of symmetry about zero. Zero
/// differences are dropped; the exact null distribution is used for up to
/// [`EXACT_LIMIT`] remaining values.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<WilcoxonResult> {
    let n = signed_ranks(diffs).len();
    let method = if n <= EXACT_LIMIT {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApprox
    };
    wilcoxon_signed_rank_with(diffs, method)
}

/// As [`wilcoxon_signed_rank`] with the method forced.
pub fn wilcoxon_signed_rank_with(diffs: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult> {
    if diffs.is_empty() {
        return Err(Error::Argument("Wilcoxon test needs at least one difference".into()));
    }
    if let Some(d) = diffs.iter().find(|d| !d.is_finite()) {
        return Err(Error::Argument(format!("non-finite difference {d}")));
    }
    let ranked = signed_ranks(diffs);
    let n = ranked.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            n_nonzero: 0,
            w_statistic: 0.0,
            p_value: 1.0,
            method,
        });
    }
    let w_plus: f64 = ranked.iter().filter(|r| r.0 > 0.0).map(|r| r.1).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = w_plus.min(total - w_plus);
    let p_value = match method {
        WilcoxonMethod::Exact => {
            if n > 63 {
                return Err(Error::Argument(format!("exact test is limited to 63 differences, got {n}")));
            }
            exact_p(&ranked, w)
        }
        WilcoxonMethod::NormalApprox => normal_p(&ranked, w),
    };
    Ok(WilcoxonResult {
        n_nonzero: n,
        w_statistic: w,
        p_value,
        method,
    })
}

/// `P(min(W⁺, W⁻) ≤ w)` under the null, by counting sign assignments per
/// value of the doubled rank sum (average ranks are multiples of ½).
fn exact_p(ranked: &[(f64, f64)], w: f64) -> f64 {
    let doubled: Vec<usize> = ranked.iter().map(|r| (2.0 * r.1).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let w2 = (2.0 * w).round() as usize;
    let hits: u64 = (0..=total)
        .filter(|&s| s.min(total - s) <= w2)
        .map(|s| counts[s])
        .sum();
    hits as f64 / 2f64.powi(ranked.len() as i32)
}

fn normal_p(ranked: &[(f64, f64)], w: f64) -> f64 {
    let n = ranked.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut ties = 0.0;
    let mut i = 0;
    while i < ranked.len() {
        let mut j = i + 1;
        while j < ranked.len() && ranked[j].1 == ranked[i].1 {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean + 0.5) / var.sqrt()).min(0.0);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.cdf(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Reference: walk all 2ⁿ sign patterns of the ranks.
    fn enumerate_p(diffs: &[f64]) -> f64 {
        let ranked = signed_ranks(diffs);
        let n = ranked.len();
        let total: f64 = ranked.iter().map(|r| r.1).sum();
        let wp: f64 = ranked.iter().filter(|r| r.0 > 0.0).map(|r| r.1).sum();
        let w = wp.min(total - wp);
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranked[k].1).sum();
            if s.min(total - s) <= w + 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn small_examples() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.n_nonzero, r.w_statistic, r.p_value), (3, 0.0, 0.25));
        assert_eq!(r.method, WilcoxonMethod::Exact);
        let r = wilcoxon_signed_rank(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((r.n_nonzero, r.p_value), (0, 1.0));
        let r = wilcoxon_signed_rank(&[1.0, -1.0]).unwrap();
        assert_eq!((r.w_statistic, r.p_value), (1.5, 1.0));
        assert!(wilcoxon_signed_rank(&[]).is_err());
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let diffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3i32..=3) as f64 * 0.5).collect();
            let r = wilcoxon_signed_rank(&diffs).unwrap();
            if r.n_nonzero > 0 {
                assert_eq!(r.p_value, enumerate_p(&diffs), "{diffs:?}");
            }
        }
    }

    #[test]
    fn sign_symmetric() {
        let d = [0.3, -1.2, 2.0, 0.3, -0.1, 4.0];
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        assert_eq!(wilcoxon_signed_rank(&d).unwrap(), wilcoxon_signed_rank(&neg).unwrap());
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let d: Vec<f64> = (1..=30).map(|k| k as f64 * if k % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let r = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
    }
}
