//! Exact vote probabilities for size-`n` subsamples drawn without
//! replacement from `m` generated samples.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::AnalyticsError;

/// Above this many samples the float path is used.
pub const EXACT_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VoteCounts {
    pub correct: usize,
    pub incorrect: usize,
    /// Absent or unparseable decisions; they abstain.
    pub invalid: usize,
}

impl VoteCounts {
    pub fn new(correct: usize, incorrect: usize, invalid: usize) -> Self {
        VoteCounts {
            correct,
            incorrect,
            invalid,
        }
    }

    pub fn total(&self) -> usize {
        self.correct + self.incorrect + self.invalid
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VoteProbabilities<T> {
    pub p_correct: T,
    pub p_incorrect: T,
    pub p_tie: T,
}

impl VoteProbabilities<f64> {
    /// Majority accuracy with ties credited one half.
    pub fn accuracy(&self) -> f64 {
        self.p_correct + 0.5 * self.p_tie
    }
}

impl VoteProbabilities<BigRational> {
    pub fn to_f64(&self) -> VoteProbabilities<f64> {
        let f = |x: &BigRational| x.to_f64().unwrap_or(f64::NAN);
        VoteProbabilities {
            p_correct: f(&self.p_correct),
            p_incorrect: f(&self.p_incorrect),
            p_tie: f(&self.p_tie),
        }
    }
}

fn choose(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn check(counts: &VoteCounts, n: usize) -> Result<(), AnalyticsError> {
    let m = counts.total();
    if n > m {
        return Err(AnalyticsError::SubsampleTooLarge { n, m });
    }
    Ok(())
}

/// Multivariate hypergeometric enumeration over
/// `(k_correct, k_incorrect, k_invalid)` with exact rationals.
pub fn subsample_vote_probability_exact(
    counts: &VoteCounts,
    n: usize,
) -> Result<VoteProbabilities<BigRational>, AnalyticsError> {
    check(counts, n)?;
    let total = choose(counts.total(), n);
    let mut acc = [BigInt::zero(), BigInt::zero(), BigInt::zero()];
    for kc in 0..=n.min(counts.correct) {
        let wc = choose(counts.correct, kc);
        for ki in 0..=(n - kc).min(counts.incorrect) {
            let kv = n - kc - ki;
            if kv > counts.invalid {
                continue;
            }
            let w = &wc * choose(counts.incorrect, ki) * choose(counts.invalid, kv);
            let slot = match kc.cmp(&ki) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => 2,
            };
            acc[slot] += w;
        }
    }
    let [c, i, t] = acc;
    let r = |x: BigInt| BigRational::new(x, total.clone());
    Ok(VoteProbabilities {
        p_correct: r(c),
        p_incorrect: r(i),
        p_tie: r(t),
    })
}

/// Float version; exact arithmetic up to [`EXACT_LIMIT`] samples, log-space
/// summation beyond (relative error on the order of 1e-12 per term).
pub fn subsample_vote_probability(counts: &VoteCounts, n: usize) -> Result<VoteProbabilities<f64>, AnalyticsError> {
    if counts.total() <= EXACT_LIMIT {
        return subsample_vote_probability_exact(counts, n).map(|p| p.to_f64());
    }
    check(counts, n)?;
    let ln_total = ln_choose(counts.total(), n);
    let mut acc = [0.0f64; 3];
    for kc in 0..=n.min(counts.correct) {
        for ki in 0..=(n - kc).min(counts.incorrect) {
            let kv = n - kc - ki;
            if kv > counts.invalid {
                continue;
            }
            let lw = ln_choose(counts.correct, kc) + ln_choose(counts.incorrect, ki) + ln_choose(counts.invalid, kv);
            let slot = match kc.cmp(&ki) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => 2,
            };
            acc[slot] += (lw - ln_total).exp();
        }
    }
    Ok(VoteProbabilities {
        p_correct: acc[0],
        p_incorrect: acc[1],
        p_tie: acc[2],
    })
}

/// Probability that a size-`n` subsample of `m` samples, `verified` of
/// which pass the evidence check, contains at least one verified sample.
pub fn best_of_n_from_counts_exact(m: usize, verified: usize, n: usize) -> Result<BigRational, AnalyticsError> {
    if n > m {
        return Err(AnalyticsError::SubsampleTooLarge { n, m });
    }
    let miss = BigRational::new(choose(m - verified.min(m), n), choose(m, n));
    Ok(BigRational::one() - miss)
}

/// Best-of-n accuracy of one task: a verified sample decides correctly,
/// otherwise the answer is a fair guess.
pub fn best_of_n_from_counts(m: usize, verified: usize, n: usize) -> Result<f64, AnalyticsError> {
    if n > m {
        return Err(AnalyticsError::SubsampleTooLarge { n, m });
    }
    let unverified = m - verified.min(m);
    let miss = if m <= EXACT_LIMIT {
        BigRational::new(choose(unverified, n), choose(m, n))
            .to_f64()
            .unwrap_or(f64::NAN)
    } else if n > unverified {
        0.0
    } else {
        (ln_choose(unverified, n) - ln_choose(m, n)).exp()
    };
    Ok(1.0 - 0.5 * miss)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    /// Walks every size-n subset of the labelled samples.
    fn brute(counts: &VoteCounts, n: usize) -> VoteProbabilities<BigRational> {
        let mut labels = vec![0u8; counts.correct];
        labels.extend(std::iter::repeat_n(1u8, counts.incorrect));
        labels.extend(std::iter::repeat_n(2u8, counts.invalid));
        let m = labels.len();
        let mut tally = [0i64; 3];
        let mut total = 0i64;
        for mask in 0u32..(1u32 << m) {
            if mask.count_ones() as usize != n {
                continue;
            }
            total += 1;
            let (mut c, mut i) = (0, 0);
            for (b, &l) in labels.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    match l {
                        0 => c += 1,
                        1 => i += 1,
                        _ => {}
                    }
                }
            }
            tally[if c > i {
                0
            } else if c < i {
                1
            } else {
                2
            }] += 1;
        }
        VoteProbabilities {
            p_correct: rat(tally[0], total),
            p_incorrect: rat(tally[1], total),
            p_tie: rat(tally[2], total),
        }
    }

    #[test]
    fn examples() {
        let p = subsample_vote_probability_exact(&VoteCounts::new(1, 1, 0), 2).unwrap();
        assert_eq!(p.p_tie, BigRational::one());
        let p = subsample_vote_probability_exact(&VoteCounts::new(4, 0, 0), 3).unwrap();
        assert_eq!(p.p_correct, BigRational::one());
        let p = subsample_vote_probability_exact(&VoteCounts::new(3, 2, 1), 3).unwrap();
        // 1 + 6 + 3 of the C(6,3) = 20 subsamples have more correct votes.
        assert_eq!(p.p_correct, rat(1, 2));
        assert_eq!(p.p_tie, rat(6, 20));
        assert_eq!(
            subsample_vote_probability(&VoteCounts::new(1, 1, 0), 3),
            Err(AnalyticsError::SubsampleTooLarge { n: 3, m: 2 })
        );
    }

    #[test]
    fn matches_subset_enumeration() {
        for m in 0..=8usize {
            for c in 0..=m {
                for i in 0..=(m - c) {
                    let counts = VoteCounts::new(c, i, m - c - i);
                    for n in 0..=m {
                        let exact = subsample_vote_probability_exact(&counts, n).unwrap();
                        assert_eq!(exact, brute(&counts, n), "{counts:?} n={n}");
                        assert_eq!(&exact.p_correct + &exact.p_incorrect + &exact.p_tie, BigRational::one());
                    }
                }
            }
        }
    }

    #[test]
    fn float_path_agrees_with_exact() {
        let counts = VoteCounts::new(40, 30, 10);
        for n in [1, 7, 40, 80] {
            let f = subsample_vote_probability(&counts, n).unwrap();
            let e = subsample_vote_probability_exact(&counts, n).unwrap().to_f64();
            assert!((f.p_correct - e.p_correct).abs() < 1e-10);
            assert!((f.p_tie - e.p_tie).abs() < 1e-10);
            assert!((f.p_correct + f.p_incorrect + f.p_tie - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn best_of_n_counts() {
        assert_eq!(best_of_n_from_counts(64, 0, 10).unwrap(), 0.5);
        assert_eq!(best_of_n_from_counts(64, 64, 1).unwrap(), 1.0);
        assert_eq!(best_of_n_from_counts(4, 1, 4).unwrap(), 1.0);
        assert_eq!(best_of_n_from_counts_exact(4, 1, 2).unwrap(), rat(1, 2));
        let big = best_of_n_from_counts(100, 10, 5).unwrap();
        let exact = 1.0
            - 0.5
                * best_of_n_from_counts_exact(100, 10, 5)
                    .map(|x| 1.0 - x.to_f64().unwrap())
                    .unwrap();
        assert!((big - exact).abs() < 1e-12);
    }
}
