use serde::{Deserialize, Serialize};

/// Tukey boxplot of one cross-section of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotSummary {
    pub stride_index: usize,
    pub t: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Smallest value at or above `q1 - 1.5 IQR`.
    pub lo_whisker: f64,
    /// Largest value at or below `q3 + 1.5 IQR`.
    pub hi_whisker: f64,
    pub outliers: Vec<f64>,
}

/// Quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn quantile_linear(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn boxplot_summary(stride_index: usize, t: usize, values: &[f64]) -> BoxplotSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_linear(&sorted, 0.25);
    let median = quantile_linear(&sorted, 0.5);
    let q3 = quantile_linear(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = || sorted.iter().copied().filter(|v| (lo_fence..=hi_fence).contains(v));
    BoxplotSummary {
        stride_index,
        t,
        median,
        q1,
        q3,
        lo_whisker: inside().next().unwrap_or(q1),
        hi_whisker: inside().next_back().unwrap_or(q3),
        outliers: sorted.iter().copied().filter(|v| !(lo_fence..=hi_fence).contains(v)).collect(),
    }
}
