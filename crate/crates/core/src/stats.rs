//! Divergence statistics between two rankings of the same universities.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{which} ranking is not a permutation of 1..={n}")]
    NotAPermutation { which: &'static str, n: usize },
    #[error("need at least {min} observations, got {n}")]
    TooFewObservations { n: usize, min: usize },
    #[error("exact permutation test supports n <= {max}, got {n}")]
    TooManyForExact { n: usize, max: usize },
}

/// Two-sided p-value of Student's t statistic with `df` degrees of freedom,
/// `P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() || !(df > 0.0) {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// `***` below 0.01, `**` below 0.05, `*` below 0.10.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

fn check_permutation(ranks: &[usize], which: &'static str) -> Result<(), StatsError> {
    let n = ranks.len();
    let mut seen = vec![false; n];
    for &r in ranks {
        if r == 0 || r > n || std::mem::replace(&mut seen[r - 1], true) {
            return Err(StatsError::NotAPermutation { which, n });
        }
    }
    Ok(())
}

fn check_pair(a: &[usize], b: &[usize], min: usize) -> Result<usize, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    check_permutation(a, "first")?;
    check_permutation(b, "second")?;
    if a.len() < min {
        return Err(StatsError::TooFewObservations { n: a.len(), min });
    }
    Ok(a.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p_value: f64,
    pub stars: String,
}

fn sum_squared_differences(a: &[usize], b: &[usize]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum()
}

/// Spearman's ρ for two strict rankings, with a two-sided p-value from the
/// t approximation `t = ρ sqrt((n-2)/(1-ρ²))`, `n-2` degrees of freedom.
pub fn spearman_rho(a: &[usize], b: &[usize]) -> Result<SpearmanResult, StatsError> {
    let n = check_pair(a, b, 2)?;
    let nf = n as f64;
    let d2 = sum_squared_differences(a, b) as f64;
    let rho = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * ((nf - 2.0) / (1.0 - rho * rho)).sqrt();
        student_t_two_sided_p(t, nf - 2.0)
    };
    Ok(SpearmanResult { rho, p_value, stars: significance_stars(p_value).to_string() })
}

pub const EXACT_SPEARMAN_MAX_N: usize = 10;

/// Exact two-sided permutation p-value for Spearman's ρ: the share of all n!
/// rankings whose |ρ| is at least the observed one. Limited to n ≤ 10.
pub fn spearman_exact_p(a: &[usize], b: &[usize]) -> Result<f64, StatsError> {
    let n = check_pair(a, b, 2)?;
    if n > EXACT_SPEARMAN_MAX_N {
        return Err(StatsError::TooManyForExact { n, max: EXACT_SPEARMAN_MAX_N });
    }
    // ρ·n(n²-1) = n(n²-1) - 6·Σd², so |ρ| comparisons are exact in integers.
    let scale = (n * (n * n - 1)) as i64;
    let observed = (scale - 6 * sum_squared_differences(a, b) as i64).abs();

    let mut perm: Vec<usize> = (1..=n).collect();
    let identity: Vec<usize> = perm.clone();
    let mut extreme = 0u64;
    let mut total = 0u64;
    let mut tally = |p: &[usize]| {
        total += 1;
        if (scale - 6 * sum_squared_differences(&identity, p) as i64).abs() >= observed {
            extreme += 1;
        }
    };
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    tally(&perm);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            tally(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(extreme as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub stars: String,
}

/// Spread of the differences below this fraction of the input magnitude is
/// rounding noise and is treated as zero.
const NOISE_FLOOR: f64 = 1e-12;

/// Paired t-test on `d_i = first_i - second_i`. A zero standard deviation
/// reports `t = 0`, `p = 1`.
pub fn paired_t_test(first: &[f64], second: &[f64]) -> Result<PairedTest, StatsError> {
    if first.len() != second.len() {
        return Err(StatsError::LengthMismatch { left: first.len(), right: second.len() });
    }
    let n = first.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { n, min: 2 });
    }
    let nf = n as f64;
    let diffs: Vec<f64> = first.iter().zip(second).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / nf;
    let ss: f64 = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let sd = (ss / (nf - 1.0)).sqrt();
    let magnitude = first.iter().chain(second).fold(0.0f64, |m, v| m.max(v.abs()));

    let (t, p) = if sd <= NOISE_FLOOR * magnitude || sd == 0.0 {
        (0.0, 1.0)
    } else {
        let t = mean / (sd / nf.sqrt());
        (t, student_t_two_sided_p(t, nf - 1.0))
    };
    Ok(PairedTest {
        mean_difference: mean,
        t_statistic: t,
        degrees_of_freedom: n - 1,
        p_value: p,
        stars: significance_stars(p).to_string(),
    })
}

/// Direction of a university's move from the first ranking to the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftSign {
    /// Better (smaller) rank number in the second ranking.
    #[serde(rename = "+")]
    Up,
    #[serde(rename = "-")]
    Down,
    #[serde(rename = "=")]
    Same,
}

impl ShiftSign {
    pub fn symbol(self) -> &'static str {
        match self {
            ShiftSign::Up => "+",
            ShiftSign::Down => "-",
            ShiftSign::Same => "=",
        }
    }

    pub fn of(signed: i64) -> Self {
        match signed.signum() {
            1 => ShiftSign::Up,
            -1 => ShiftSign::Down,
            _ => ShiftSign::Same,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftStats {
    /// `rank_first - rank_second` per position; positive means the university
    /// moved up.
    pub signed_shifts: Vec<i64>,
    pub max_shift: u64,
    pub sum_shift: u64,
    pub mean_shift: f64,
    pub n_shifted: usize,
    pub percent_shifted: f64,
}

pub fn rank_shift_stats(a: &[usize], b: &[usize]) -> Result<ShiftStats, StatsError> {
    let n = check_pair(a, b, 1)?;
    let signed_shifts: Vec<i64> = a.iter().zip(b).map(|(&x, &y)| x as i64 - y as i64).collect();
    let sum_shift: u64 = signed_shifts.iter().map(|d| d.unsigned_abs()).sum();
    let max_shift = signed_shifts.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0);
    let n_shifted = signed_shifts.iter().filter(|d| **d != 0).count();
    Ok(ShiftStats {
        signed_shifts,
        max_shift,
        sum_shift,
        mean_shift: sum_shift as f64 / n as f64,
        n_shifted,
        percent_shifted: 100.0 * n_shifted as f64 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RPrimeResult {
    pub sum_abs_diff: u64,
    pub max_sum: u64,
    /// Percentage in [0, 100].
    pub r_prime: f64,
}

/// Largest attainable `Σ|a_i - b_i|` over permutations of `1..=n`, reached by
/// full inversion: `n²/2` for even n, `(n-1)((n-1)/2 + 1)` for odd n.
pub fn max_total_displacement(n: usize) -> u64 {
    let n = n as u64;
    if n % 2 == 0 {
        n * n / 2
    } else {
        (n - 1) * ((n - 1) / 2 + 1)
    }
}

pub fn r_prime(a: &[usize], b: &[usize]) -> Result<RPrimeResult, StatsError> {
    let n = check_pair(a, b, 2)?;
    let sum_abs_diff: u64 = a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u64).sum();
    let max_sum = max_total_displacement(n);
    Ok(RPrimeResult { sum_abs_diff, max_sum, r_prime: 100.0 * sum_abs_diff as f64 / max_sum as f64 })
}
