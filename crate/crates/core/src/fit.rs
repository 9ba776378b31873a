//! Least-squares line fits and the trend rules used to read asymptotic
//! statements (boundedness, liminf = 0) off finite truncations.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 when the data has no spread.
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope x + intercept`. `None` for fewer than
/// two points or a degenerate abscissa.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    // relative floor so that exactly constant data counts as a perfect fit
    let r_squared = if ss_tot <= 1e-24 * (1.0 + my * my) * nf { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LineFit { slope, intercept, r_squared })
}

/// Thresholds for trend decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    /// Log-scale slope per annulus below which a sequence counts as bounded.
    pub slope_tol: f64,
    /// Minimal R² for a decay fit to count as evidence of `→ 0`.
    pub min_goodness: f64,
    /// Minimal number of annuli for a decay fit.
    pub min_annuli: usize,
    /// Number of outermost annuli forming the liminf surrogate.
    pub tail_annuli: usize,
}

impl Default for TrendConfig {
    fn default() -> Self {
        Self { slope_tol: 0.02, min_goodness: 0.9, min_annuli: 8, tail_annuli: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    DecreasingToZero,
    BoundedAwayFromZero,
    /// Neither a clean decay nor a bounded-below sequence.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaTrend {
    pub trend: Trend,
    pub geometric: Option<LineFit>,
    pub power: Option<LineFit>,
}

/// Decides whether nonnegative per-annulus minima tend to zero.
pub fn minima_trend(radii: &[usize], minima: &[f64], cfg: &TrendConfig) -> MinimaTrend {
    let tail = cfg.tail_annuli.max(1).min(minima.len());
    if tail > 0 && minima[minima.len() - tail..].iter().all(|&m| m <= 0.0) {
        return MinimaTrend { trend: Trend::DecreasingToZero, geometric: None, power: None };
    }
    let positive: Vec<(f64, f64)> = radii
        .iter()
        .zip(minima)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&r, &m)| (r as f64, m.ln()))
        .collect();
    let xs: Vec<f64> = positive.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = positive.iter().map(|p| p.1).collect();
    let geometric = linear_fit(&xs, &ys);
    let log_points: Vec<(f64, f64)> = positive.iter().filter(|p| p.0 >= 1.0).map(|p| (p.0.ln(), p.1)).collect();
    let lx: Vec<f64> = log_points.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = log_points.iter().map(|p| p.1).collect();
    let power = linear_fit(&lx, &ly);

    let decays = |fit: &Option<LineFit>, n: usize| {
        fit.map_or(false, |f| n >= cfg.min_annuli && f.slope < -cfg.slope_tol && f.r_squared >= cfg.min_goodness)
    };
    let trend = if decays(&geometric, xs.len()) || decays(&power, lx.len()) {
        Trend::DecreasingToZero
    } else if xs.len() >= 2 && geometric.map_or(false, |f| f.slope >= -cfg.slope_tol) {
        Trend::BoundedAwayFromZero
    } else {
        Trend::Flat
    };
    MinimaTrend { trend, geometric, power }
}

/// Slope of `log values` against the radius, ignoring zero entries.
/// `None` when fewer than two positive values remain.
pub fn log_slope(radii: &[usize], values: &[f64]) -> Option<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(&r, &v)| (r as f64, v.ln()))
        .unzip();
    linear_fit(&xs, &ys)
}

/// Per-annulus suprema stay bounded: no infinities and a log-slope at most
/// `slope_tol`.
pub fn bounded_above(radii: &[usize], sups: &[f64], cfg: &TrendConfig) -> (bool, Option<f64>) {
    if sups.iter().any(|v| v.is_infinite()) {
        return (false, None);
    }
    let slope = log_slope(radii, sups).map(|f| f.slope);
    (slope.map_or(true, |s| s <= cfg.slope_tol), slope)
}

/// Per-annulus infima stay bounded away from zero: no zeros and a log-slope
/// at least `-slope_tol`.
pub fn bounded_below(radii: &[usize], infs: &[f64], cfg: &TrendConfig) -> (bool, Option<f64>) {
    if infs.iter().any(|&v| v <= 0.0) {
        return (false, None);
    }
    let slope = log_slope(radii, infs).map(|f| f.slope);
    (slope.map_or(true, |s| s >= -cfg.slope_tol), slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn constant_minima_are_bounded_away() {
        let radii: Vec<usize> = (1..=10).collect();
        let t = minima_trend(&radii, &[1.0; 10], &TrendConfig::default());
        assert_eq!(t.trend, Trend::BoundedAwayFromZero);
    }

    #[test]
    fn geometric_minima_decay() {
        let radii: Vec<usize> = (1..=10).collect();
        let minima: Vec<f64> = radii.iter().map(|&r| 0.5f64.powi(r as i32)).collect();
        assert_eq!(minima_trend(&radii, &minima, &TrendConfig::default()).trend, Trend::DecreasingToZero);
        // too few annuli for a decision
        assert_eq!(minima_trend(&radii[..4], &minima[..4], &TrendConfig::default()).trend, Trend::Flat);
    }

    #[test]
    fn zero_tail_is_decreasing() {
        let radii: Vec<usize> = (1..=5).collect();
        let t = minima_trend(&radii, &[1.0, 0.5, 0.0, 0.0, 0.0], &TrendConfig::default());
        assert_eq!(t.trend, Trend::DecreasingToZero);
    }

    #[test]
    fn bounds() {
        let radii: Vec<usize> = (1..=6).collect();
        let cfg = TrendConfig::default();
        assert!(bounded_above(&radii, &[1.0, 0.9, 0.8, 0.7, 0.6, 0.5], &cfg).0);
        assert!(!bounded_above(&radii, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], &cfg).0);
        assert!(!bounded_above(&radii, &[1.0, f64::INFINITY, 1.0, 1.0, 1.0, 1.0], &cfg).0);
        assert!(bounded_below(&radii, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0], &cfg).0);
        assert!(!bounded_below(&radii, &[1.0, 0.5, 0.25, 0.125, 0.06, 0.03], &cfg).0);
        assert!(!bounded_below(&radii, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0], &cfg).0);
    }
}
