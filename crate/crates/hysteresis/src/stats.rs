//! Small statistical helpers shared by estimators and reports.

use std::ops::Range;

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    /// `|mean - target| <= k * se + floor`
    pub fn within(&self, target: f64, k: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + floor
    }

    pub fn z(&self, target: f64) -> f64 {
        (self.mean - target) / self.se
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    MeanSe {
        mean: mean(xs),
        se: (variance(xs) / xs.len() as f64).sqrt(),
    }
}

/// Mean over paths with the standard error taken from the spread of batch
/// means, so errors shared within a batch (such as a common regression fit)
/// are counted. Falls back to [`mean_se`] for fewer than two batches.
pub fn batch_mean_se(xs: &[f64], batches: &[Range<usize>]) -> MeanSe {
    if batches.len() < 2 {
        return mean_se(xs);
    }
    let means: Vec<f64> = batches.iter().map(|b| mean(&xs[b.clone()])).collect();
    MeanSe {
        mean: mean(xs),
        se: (variance(&means) / means.len() as f64).sqrt(),
    }
}

pub fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
