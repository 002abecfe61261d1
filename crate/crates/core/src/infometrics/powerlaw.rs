use crate::error::{Error, Result};
use crate::model::RegressionFit;

fn ranked_points(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (((i + 1) as f64).log2(), v.log2()))
        .collect()
}

/// Least-squares line through `(log₂ rank, log₂ value)`.
///
/// Values are ranked in descending order and zeros are discarded. The first
/// `drop_first` ranked points are excluded from the fit but the remaining
/// points keep their original ranks. The exponent is the negated slope and
/// the correlation is the magnitude of Pearson's coefficient (zero when the
/// values are all equal).
pub fn powerlaw_fit(values: &[f64], drop_first: usize) -> Result<RegressionFit> {
    let all = ranked_points(values);
    let points = all.get(drop_first..).unwrap_or(&[]);
    if points.len() < 2 {
        return Err(Error::InsufficientPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let slope = sxy / sxx;
    let correlation = if syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).abs().min(1.0)
    } else {
        0.0
    };
    Ok(RegressionFit {
        exponent: -slope,
        intercept: mean_y - slope * mean_x,
        correlation,
        points_dropped: drop_first,
        points_used: points.len(),
    })
}

/// `(rank, value, log₂ value − fitted)` for every positive value, in rank order.
pub fn residuals(values: &[f64], fit: &RegressionFit) -> Vec<(usize, f64, f64)> {
    ranked_points(values)
        .into_iter()
        .enumerate()
        .map(|(i, (x, y))| (i + 1, y.exp2(), y - (fit.intercept - fit.exponent * x)))
        .collect()
}
