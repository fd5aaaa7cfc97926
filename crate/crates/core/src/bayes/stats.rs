use serde::Serialize;

/// `log(sum(exp(v)))`, stable; `-inf` for an empty or all `-inf` slice.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchSummary {
    pub mean: f64,
    /// Standard error of the mean from the spread of batch means.
    pub std_error: f64,
    /// Effective sample size implied by the batch-means variance.
    pub ess: f64,
}

/// Batch-means summary of a correlated series.
pub fn batch_means(values: &[f64], batches: usize) -> BatchSummary {
    let n = values.len();
    if n == 0 {
        return BatchSummary {
            mean: f64::NAN,
            std_error: f64::NAN,
            ess: 0.0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let batches = batches.clamp(1, n);
    let size = n / batches;
    if batches < 2 || size == 0 || var == 0.0 {
        return BatchSummary {
            mean,
            std_error: 0.0,
            ess: n as f64,
        };
    }
    let bm: Vec<f64> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bmean = bm.iter().sum::<f64>() / batches as f64;
    let bvar = bm.iter().map(|v| (v - bmean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let std_error = (bvar / batches as f64).sqrt();
    // Var(mean) = var / ess
    let ess = if bvar > 0.0 {
        (var / (bvar / batches as f64)).min(n as f64)
    } else {
        n as f64
    };
    BatchSummary {
        mean,
        std_error,
        ess,
    }
}

/// Sample mean and standard error of independent values.
pub(crate) fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
