//! Log-log trend fits.

use bpg_core::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct TrendFit {
    pub axis: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `ln y` on `ln x`.
pub fn fit_trend(axis: &str, points: &[(f64, f64)]) -> Result<TrendFit, Error> {
    if points.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "trend fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::DomainViolation(format!(
            "trend fit needs positive data, got {p:?}"
        )));
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= f64::EPSILON * m * mx.abs().max(1.0) {
        return Err(Error::Degenerate("trend fit x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(TrendFit {
        axis: axis.to_string(),
        slope,
        intercept,
        r2,
    })
}
