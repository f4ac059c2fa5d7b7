//! Envelope extraction and revival detection on `|a1(t)|`.

use serde::Serialize;

/// Centred running maximum over `window` samples (at least one).
pub fn sliding_max(values: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_rms_deviation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let num: f64 = a[..n].iter().zip(&b[..n]).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b[..n].iter().map(|y| y * y).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Revival {
    pub time: f64,
    pub value: f64,
    /// Smallest envelope value between the search start and the peak.
    pub collapse: f64,
}

/// Growth over the running minimum that marks the onset of a revival.
const REVIVAL_RISE: f64 = 5.0;

/// First resurgence of an envelope after `search_from`.
///
/// Tracks the running minimum from `search_from`; the revival starts at the
/// first sample exceeding `5×` that minimum (and 1% of the initial value) and
/// peaks at the end of the following rise. Plateaus produced by
/// [`sliding_max`] resolve to their midpoint.
pub fn find_revival(times: &[f64], envelope: &[f64], search_from: f64) -> Option<Revival> {
    let n = times.len().min(envelope.len());
    let start = times.iter().position(|&t| t >= search_from)?;
    let floor = 0.01 * envelope.first().copied().unwrap_or(0.0);
    let mut min = f64::INFINITY;
    let mut onset = None;
    for i in start..n {
        min = min.min(envelope[i]);
        if envelope[i] > REVIVAL_RISE * min && envelope[i] > floor {
            onset = Some(i);
            break;
        }
    }
    let mut i = onset?;
    while i + 1 < n && envelope[i + 1] >= envelope[i] {
        if envelope[i + 1] == envelope[i] {
            let mut j = i;
            while j + 1 < n && envelope[j + 1] == envelope[i] {
                j += 1;
            }
            if j + 1 < n && envelope[j + 1] > envelope[i] {
                i = j;
                continue;
            }
            if j + 1 == n {
                return None;
            }
            let mid = (i + j) / 2;
            return Some(Revival { time: times[mid], value: envelope[mid], collapse: min });
        }
        i += 1;
    }
    // a rise still in progress at the end of the series has no peak yet
    if i + 1 == n {
        return None;
    }
    Some(Revival { time: times[i], value: envelope[i], collapse: min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sliding_max_window() {
        let v = [0.0, 3.0, 1.0, 0.0, 0.0, 2.0];
        assert_eq!(sliding_max(&v, 3), vec![3.0, 3.0, 3.0, 1.0, 2.0, 2.0]);
        assert_eq!(sliding_max(&v, 1), v.to_vec());
    }

    #[test]
    fn rms_deviation() {
        assert_eq!(relative_rms_deviation(&[1.0, 1.0], &[1.0, 1.0]), 0.0);
        assert!((relative_rms_deviation(&[1.1, 0.9], &[1.0, 1.0]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn detects_gaussian_revival() {
        let times: Vec<f64> = (0..2000).map(|i| i as f64 * 0.01).collect();
        let env: Vec<f64> = times
            .iter()
            .map(|&t| (-t).exp() + 0.4 * (-(t - 15.0) * (t - 15.0)).exp())
            .collect();
        let r = find_revival(&times, &env, 5.0).unwrap();
        assert!((r.time - 15.0).abs() < 0.011, "{r:?}");
        assert!((r.value - 0.4).abs() < 1e-3);
    }

    #[test]
    fn flat_envelope_has_no_revival() {
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(find_revival(&times, &vec![1.0; 100], 10.0).is_none());
    }

    #[test]
    fn plateau_resolves_to_midpoint() {
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let env = [1.0, 0.1, 0.01, 0.01, 0.2, 0.5, 0.5, 0.5, 0.3, 0.1];
        let r = find_revival(&times, &env, 1.0).unwrap();
        assert_eq!(r.time, 6.0);
    }
}
