//! Pliss times of a finite real sequence.
//!
//! For a sequence `a_0, ..., a_{L-1}` with prefix sums `S_0 = 0`,
//! `S_k = a_0 + ... + a_{k-1}`, the index `k < L` is a Pliss time for the
//! threshold `alpha3` when every forward partial average starting at `k`,
//! `(S_m - S_k) / (m - k)` for `k < m <= L`, is at most `alpha3`.
//!
//! With `b_k = S_k - alpha3 * k` this reads `b_m <= b_k` for all `m > k`, so
//! the Pliss times are the weak right-to-left records of `b` and a single
//! backward scan finds them all.
//!
//! If every `a_i >= alpha1` and the mean is at most `alpha2 < alpha3`, the
//! running maximum of `b` rises by at most `alpha3 - alpha1` per record and by
//! at least `(alpha3 - alpha2) L` overall, hence at least a fraction
//! `(alpha3 - alpha2) / (alpha3 - alpha1)` of the indices are Pliss times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlissParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl PlissParams {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self> {
        if alpha1 < alpha2 && alpha2 < alpha3 {
            Ok(Self {
                alpha1,
                alpha2,
                alpha3,
            })
        } else {
            Err(Error::BadOrdering(alpha1, alpha2, alpha3))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissResult {
    pub times: Vec<usize>,
    pub density: f64,
    pub bound: f64,
}

/// `(alpha3 - alpha2) / (alpha3 - alpha1)`.
pub fn density_bound(params: &PlissParams) -> Result<f64> {
    let PlissParams {
        alpha1,
        alpha2,
        alpha3,
    } = *params;
    if !(alpha1 < alpha2 && alpha2 < alpha3) {
        return Err(Error::BadOrdering(alpha1, alpha2, alpha3));
    }
    Ok((alpha3 - alpha2) / (alpha3 - alpha1))
}

/// `b_k = S_k - alpha3 * k` for `k = 0..=len`.
fn shifted_prefix(seq: &[f64], alpha3: f64) -> Vec<f64> {
    let mut b = Vec::with_capacity(seq.len() + 1);
    let mut s = 0.0;
    b.push(0.0);
    for (k, a) in seq.iter().enumerate() {
        s += a;
        b.push(s - alpha3 * (k + 1) as f64);
    }
    b
}

/// Pliss times of `seq` for `alpha3`, in increasing order. `O(len)`.
pub fn pliss_times(seq: &[f64], alpha3: f64) -> Result<Vec<usize>> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let b = shifted_prefix(seq, alpha3);
    let len = seq.len();
    let mut times = Vec::new();
    let mut running_max = b[len];
    for k in (0..len).rev() {
        if b[k] >= running_max {
            times.push(k);
            running_max = b[k];
        }
    }
    times.reverse();
    Ok(times)
}

/// Reference implementation checking every pair `(k, m)`. `O(len^2)`.
pub fn pliss_oracle(seq: &[f64], alpha3: f64) -> Result<Vec<usize>> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let b = shifted_prefix(seq, alpha3);
    Ok((0..seq.len())
        .filter(|&k| ((k + 1)..=seq.len()).all(|m| b[m] <= b[k]))
        .collect())
}

/// Pliss times together with their density and the guaranteed lower bound.
pub fn analyze(seq: &[f64], params: &PlissParams) -> Result<PlissResult> {
    let bound = density_bound(params)?;
    let times = pliss_times(seq, params.alpha3)?;
    Ok(PlissResult {
        density: times.len() as f64 / seq.len() as f64,
        times,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_example() {
        let seq = [-1.0, -1.0, 1.0, -1.0];
        assert_eq!(pliss_times(&seq, 0.0).unwrap(), vec![0, 1, 3]);
        assert_eq!(pliss_oracle(&seq, 0.0).unwrap(), vec![0, 1, 3]);
    }

    #[test]
    fn constant_below_threshold_is_all_times() {
        let seq = vec![-0.25; 17];
        assert_eq!(pliss_times(&seq, 0.0).unwrap(), (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn all_above_threshold_is_empty() {
        assert!(pliss_times(&[1.0, 1.0], 0.0).unwrap().is_empty());
    }

    #[test]
    fn singleton() {
        assert_eq!(pliss_oracle(&[0.0], 1.0).unwrap(), vec![0]);
        assert_eq!(pliss_times(&[0.0], 1.0).unwrap(), vec![0]);
    }

    #[test]
    fn ties_count_as_times() {
        // every average equals the threshold exactly
        assert_eq!(pliss_times(&[0.5, 0.5, 0.5], 0.5).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(pliss_times(&[], 0.0), Err(Error::EmptySequence)));
        assert!(matches!(pliss_oracle(&[], 0.0), Err(Error::EmptySequence)));
    }

    #[test]
    fn density_bounds() {
        let b = density_bound(&PlissParams::new(-2.0, -1.0, 0.0).unwrap()).unwrap();
        assert_eq!(b, 0.5);
        let near = density_bound(&PlissParams::new(-2.0, -1.999, 0.0).unwrap()).unwrap();
        assert!((near - 0.9995).abs() < 1e-12);
        assert!(matches!(
            density_bound(&PlissParams {
                alpha1: 0.0,
                alpha2: 0.0,
                alpha3: 1.0
            }),
            Err(Error::BadOrdering(..))
        ));
        assert!(PlissParams::new(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn cat_constants_density_bound() {
        // alpha1 = ln(alpha), alpha2 = -delta_t, alpha3 = ln(sigma) for the cat map, t = 0.96
        let alpha = 0.381_966_011_250_105_1f64;
        let delta_t = 0.96 * 0.962_423_650_119_206_9;
        let s = 0.5 * (0.75 / 0.96 + 0.8 / 0.96);
        let log_sigma = -s * delta_t;
        let params = PlissParams::new(alpha.ln(), -delta_t, log_sigma).unwrap();
        let bound = density_bound(&params).unwrap();
        let t = 0.96;
        assert!((bound - (t - s * t) / (1.0 - s * t)).abs() < 1e-12);
        assert!((bound - 0.8222).abs() < 1e-4);
    }

    fn sequence() -> impl Strategy<Value = (Vec<f64>, f64)> {
        (prop::collection::vec(-3.0f64..3.0, 1..200), -1.0f64..1.0)
    }

    proptest! {
        #[test]
        fn scan_matches_oracle((seq, alpha3) in sequence()) {
            prop_assert_eq!(pliss_times(&seq, alpha3).unwrap(), pliss_oracle(&seq, alpha3).unwrap());
        }

        #[test]
        fn shift_coherence((seq, alpha3) in sequence()) {
            for k in pliss_times(&seq, alpha3).unwrap() {
                let tail = pliss_oracle(&seq[k..], alpha3).unwrap();
                prop_assert_eq!(tail.first().copied(), Some(0));
            }
        }

        #[test]
        fn monotone_in_threshold((seq, alpha3) in sequence(), bump in 0.0f64..2.0) {
            let low = pliss_times(&seq, alpha3).unwrap();
            let high = pliss_times(&seq, alpha3 + bump).unwrap();
            prop_assert!(low.iter().all(|k| high.binary_search(k).is_ok()));
        }
    }
}
