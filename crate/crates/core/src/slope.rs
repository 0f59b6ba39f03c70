//! Ordinary least squares on log-log axes, for scaling-exponent fits.

use crate::error::{Error, Result};

/// Fitted line on `(log x, log y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub half_width: f64,
}

/// Least-squares slope of `log y` against `log x`.
///
/// Requires at least 4 points with strictly positive coordinates.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 4 {
        return Err(Error::invalid(format!(
            "log-log fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|(x, y)| !(x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0))
    {
        return Err(Error::invalid("log-log fit needs finite positive coordinates"));
    }

    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid("log-log fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let half_width = (rss / (n - 2.0) / sxx).sqrt();

    Ok(LineFit {
        slope,
        intercept,
        half_width,
    })
}
