use serde::{Deserialize, Serialize};

use crate::error::{PlpError, Result};

/// Strict sign alternations along the sequence; exact zeros are skipped.
pub fn sign_changes(w: &[f64]) -> usize {
    let mut last: Option<bool> = None;
    let mut count = 0;
    for &v in w {
        if v == 0.0 {
            continue;
        }
        let positive = v > 0.0;
        if last.is_some_and(|p| p != positive) {
            count += 1;
        }
        last = Some(positive);
    }
    count
}

/// Number of interior local extrema, i.e. sign changes of the first
/// differences.
pub fn extremum_count(w: &[f64]) -> usize {
    let diffs: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();
    sign_changes(&diffs)
}

/// Pearson correlation of the two vectors. A vector with zero variance
/// correlates 0 with anything.
pub fn centered_correlation(w1: &[f64], w2: &[f64]) -> Result<f64> {
    if w1.len() != w2.len() {
        return Err(PlpError::invalid(format!(
            "cannot correlate vectors of length {} and {}",
            w1.len(),
            w2.len()
        )));
    }
    if w1.is_empty() {
        return Ok(0.0);
    }
    let n = w1.len() as f64;
    let m1 = w1.iter().sum::<f64>() / n;
    let m2 = w2.iter().sum::<f64>() / n;
    let (mut dot, mut n1, mut n2) = (0.0, 0.0, 0.0);
    for (a, b) in w1.iter().zip(w2) {
        let (x, y) = (a - m1, b - m2);
        dot += x * y;
        n1 += x * x;
        n2 += y * y;
    }
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (n1.sqrt() * n2.sqrt())).clamp(-1.0, 1.0))
}

/// `max |w_i|` over the last `⌈f·N⌉` entries divided by `max |w_i|` over the
/// rest. Returns 0 for an all-zero vector and +∞ when only the tail is nonzero.
pub fn tail_divergence(w: &[f64], tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(PlpError::invalid(format!("tail fraction must be in (0, 1), got {tail_fraction}")));
    }
    let n = w.len();
    let tail = (tail_fraction * n as f64).ceil() as usize;
    if tail == 0 || tail >= n {
        return Err(PlpError::invalid(format!(
            "tail fraction {tail_fraction} leaves no head in a vector of length {n}"
        )));
    }
    let max_abs = |s: &[f64]| s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let head_max = max_abs(&w[..n - tail]);
    let tail_max = max_abs(&w[n - tail..]);
    Ok(match (head_max == 0.0, tail_max == 0.0) {
        (_, true) if head_max == 0.0 => 0.0,
        (true, false) => f64::INFINITY,
        _ => tail_max / head_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyStats {
    /// Centered correlation of the restricted full-grid weights with the
    /// reduced-grid weights.
    pub correlation: f64,
    /// Largest entrywise difference after scaling both to unit norm.
    pub max_abs_diff: f64,
}

/// Compares full-grid weights, restricted to `kept_indices` (0-based), with
/// the weights computed on the reduced grid.
pub fn consistency_distance(
    w_full: &[f64],
    w_reduced: &[f64],
    kept_indices: &[usize],
) -> Result<ConsistencyStats> {
    if kept_indices.len() != w_reduced.len() {
        return Err(PlpError::invalid(format!(
            "{} kept indices for {} reduced weights",
            kept_indices.len(),
            w_reduced.len()
        )));
    }
    let restricted = kept_indices
        .iter()
        .map(|&k| {
            w_full.get(k).copied().ok_or_else(|| {
                PlpError::invalid(format!("kept index {k} outside full grid of length {}", w_full.len()))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let correlation = centered_correlation(&restricted, w_reduced)?;
    let unit = |v: &[f64]| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        v.iter().map(|x| x * scale).collect::<Vec<_>>()
    };
    let max_abs_diff = unit(&restricted)
        .iter()
        .zip(unit(w_reduced))
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(ConsistencyStats {
        correlation,
        max_abs_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_change_cases() {
        assert_eq!(sign_changes(&[1.0, -1.0, 1.0]), 2);
        assert_eq!(sign_changes(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(sign_changes(&[1.0, 0.0, -1.0]), 1);
        assert_eq!(sign_changes(&[]), 0);
        assert_eq!(extremum_count(&[0.0, 1.0, 0.5, 2.0]), 2);
    }

    #[test]
    fn correlation_cases() {
        let w = [0.3, -1.0, 2.0, 0.1];
        assert!((centered_correlation(&w, &w).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(centered_correlation(&[2.0; 4], &w).unwrap(), 0.0);
        assert!((centered_correlation(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(centered_correlation(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn tail_divergence_cases() {
        assert!((tail_divergence(&[0.1, 0.1, 0.1, 10.0], 0.25).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(tail_divergence(&[3.0; 8], 0.25).unwrap(), 1.0);
        assert_eq!(tail_divergence(&[0.0; 8], 0.25).unwrap(), 0.0);
        assert_eq!(tail_divergence(&[0.0, 0.0, 0.0, 1.0], 0.25).unwrap(), f64::INFINITY);
        assert!(tail_divergence(&[1.0; 4], 0.0).is_err());
        assert!(tail_divergence(&[1.0; 4], 1.0).is_err());
        assert!(tail_divergence(&[1.0; 2], 0.9).is_err());
    }

    #[test]
    fn consistency_cases() {
        let full = [0.5, 1.0, -2.0, 3.0, 0.25];
        let kept = [1, 3, 4];
        let reduced: Vec<f64> = kept.iter().map(|&k| full[k]).collect();
        let s = consistency_distance(&full, &reduced, &kept).unwrap();
        assert!((s.correlation - 1.0).abs() < 1e-15);
        assert!(s.max_abs_diff < 1e-15);

        // constant weights on a coarser grid: correlation undefined (0), shape identical
        let s = consistency_distance(&[1.0; 8], &[4.0; 2], &[3, 7]).unwrap();
        assert_eq!(s.correlation, 0.0);
        assert_eq!(s.max_abs_diff, 0.0);

        assert!(consistency_distance(&full, &[1.0], &[9]).is_err());
        assert!(consistency_distance(&full, &[1.0, 2.0], &[0]).is_err());
    }
}
