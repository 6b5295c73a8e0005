//! Least-squares line fits on log-log data.

use serde::Serialize;

use crate::error::{Error, Result};

/// `log y ≈ intercept + slope · log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

impl LineFit {
    /// `exp(intercept)`, the prefactor of the power law.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Ordinary least squares of `ys` on `xs`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("{} abscissae but {} ordinates", xs.len(), ys.len())));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateFit("regressor has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
        points: n,
    })
}

/// Fit `y = C x^slope` through logarithms; all values must be positive.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::DegenerateFit(format!("non-positive point ({x}, {y}) in log-log fit")));
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    line_fit(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs: Vec<f64> = (1..=10).map(|k| (k * 8) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.5 / x).collect();
        let f = log_log_fit(&xs, &ys).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.constant() - 3.5).abs() < 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(log_log_fit(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::DegenerateFit(_))));
        assert!(matches!(log_log_fit(&[1.0, 2.0], &[1.0, -3.0]), Err(Error::DegenerateFit(_))));
        assert!(line_fit(&[1.0], &[1.0]).is_err());
    }
}
