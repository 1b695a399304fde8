use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least squares of `ln value` on `ln size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
}

impl ExponentFit {
    pub fn predict(&self, size: f64) -> f64 {
        (self.intercept + self.slope * size.ln()).exp()
    }
}

pub fn exponent_fit(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(bad) = pairs.iter().find(|(s, v)| !(*s > 0.0 && *v > 0.0 && s.is_finite() && v.is_finite())) {
        return Err(Error::DegenerateFit(format!("nonpositive pair {bad:?}")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all sizes coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(ExponentFit { pairs: pairs.to_vec(), slope, intercept, stderr })
}
