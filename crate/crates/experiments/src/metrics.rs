use serde::Serialize;

use crate::error::{ExperimentError, Result};

/// Reported in place of `+∞` dB when the estimate is exact.
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalMetrics {
    pub snr_db: f64,
    pub normalized_error: f64,
    pub relative_error: f64,
}

fn snr_from_energies(truth_sq: f64, err_sq: f64) -> f64 {
    if err_sq == 0.0 {
        SNR_CAP_DB
    } else {
        (10.0 * (truth_sq / err_sq).log10()).min(SNR_CAP_DB)
    }
}

/// Metrics of a single estimate. Inputs are flattened signals (or any
/// matching subset of their cells).
pub fn metrics(estimate: &[f64], truth: &[f64]) -> Result<SignalMetrics> {
    let mut acc = ErrorAccumulator::default();
    acc.add(estimate, truth)?;
    Ok(acc.finish())
}

/// Running sums over a set of (estimate, truth) pairs.
///
/// * `snr_db = 10 log10(Σ‖x‖² / Σ‖x̂ - x‖²)`
/// * `normalized_error = Σ‖x̂ - x‖ / Σ‖x‖`
/// * `relative_error = mean(‖x̂ - x‖ / ‖x‖)`
#[derive(Debug, Clone, Default)]
pub struct ErrorAccumulator {
    err_sq: f64,
    truth_sq: f64,
    err_norm: f64,
    truth_norm: f64,
    ratio_sum: f64,
    count: usize,
}

impl ErrorAccumulator {
    pub fn add(&mut self, estimate: &[f64], truth: &[f64]) -> Result<()> {
        if estimate.len() != truth.len() {
            return Err(ExperimentError::InconsistentDimensions(format!(
                "estimate has {} cells, truth {}",
                estimate.len(),
                truth.len()
            )));
        }
        let t2: f64 = truth.iter().map(|x| x * x).sum();
        if t2 == 0.0 {
            return Err(ExperimentError::ZeroSignal);
        }
        let e2: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
        self.err_sq += e2;
        self.truth_sq += t2;
        self.err_norm += e2.sqrt();
        self.truth_norm += t2.sqrt();
        self.ratio_sum += (e2 / t2).sqrt();
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn snr_db(&self) -> f64 {
        snr_from_energies(self.truth_sq, self.err_sq)
    }

    pub fn normalized_error(&self) -> f64 {
        self.err_norm / self.truth_norm
    }

    pub fn relative_error(&self) -> f64 {
        self.ratio_sum / self.count as f64
    }

    pub fn finish(&self) -> SignalMetrics {
        SignalMetrics {
            snr_db: self.snr_db(),
            normalized_error: self.normalized_error(),
            relative_error: self.relative_error(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation over `√count`).
    pub std_err: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Summary {
    let count = values.len();
    if count == 0 {
        return Summary {
            count,
            mean: f64::NAN,
            std_err: f64::NAN,
            median: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let std_err = if count > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if count % 2 == 1 {
        sorted[count / 2]
    } else {
        0.5 * (sorted[count / 2 - 1] + sorted[count / 2])
    };
    Summary {
        count,
        mean,
        std_err,
        median,
        min: sorted[0],
        max: sorted[count - 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_estimate_hits_the_cap() {
        let x = [1.0, -2.0, 3.0];
        let m = metrics(&x, &x).unwrap();
        assert_eq!(m.snr_db, SNR_CAP_DB);
        assert_eq!(m.normalized_error, 0.0);
        assert_eq!(m.relative_error, 0.0);
    }

    #[test]
    fn zero_estimate_has_unit_error() {
        let m = metrics(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_eq!(m.relative_error, 1.0);
        assert_eq!(m.snr_db, 0.0);
    }

    #[test]
    fn ten_percent_error_is_twenty_db() {
        let truth = [3.0, 4.0];
        // ‖e‖ = 0.5 = 0.1·‖truth‖
        let est = [3.3, 4.4];
        let m = metrics(&est, &truth).unwrap();
        assert!((m.snr_db - 20.0).abs() < 1e-9);
        assert!((m.relative_error - 0.1).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(metrics(&[1.0], &[0.0]), Err(ExperimentError::ZeroSignal)));
        assert!(matches!(metrics(&[1.0], &[1.0, 2.0]), Err(ExperimentError::InconsistentDimensions(_))));
    }

    #[test]
    fn aggregate_definitions() {
        let mut acc = ErrorAccumulator::default();
        acc.add(&[0.0], &[1.0]).unwrap();
        acc.add(&[3.0], &[3.0]).unwrap();
        // Σ‖e‖/Σ‖x‖ = 1/4, mean ratio = (1 + 0)/2
        assert_eq!(acc.normalized_error(), 0.25);
        assert_eq!(acc.relative_error(), 0.5);
        assert!((acc.snr_db() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert!((s.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[7.0]).median, 7.0);
    }
}
