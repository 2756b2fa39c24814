//! Pairwise deviation of routes resampled onto a common grid.

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of points in the comparison grid.
pub const COMMON_POINTS: usize = 512;

/// A route's S1⁰(t) as an evaluable function on a closed interval.
pub struct Curve<'a> {
    pub label: String,
    pub domain: (f64, f64),
    pub eval: Box<dyn Fn(f64) -> Result<f64> + Send + Sync + 'a>,
}

impl<'a> Curve<'a> {
    pub fn new(label: impl Into<String>, domain: (f64, f64), eval: impl Fn(f64) -> Result<f64> + Send + Sync + 'a) -> Self {
        Curve {
            label: label.into(),
            domain,
            eval: Box::new(eval),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDeviation {
    pub a: String,
    pub b: String,
    /// Grid interval: the intersection of the two curves' domains.
    pub lo: f64,
    pub hi: f64,
    pub max_abs: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub points: usize,
    pub pairs: Vec<PairDeviation>,
}

impl ComparisonTable {
    /// Deviation between two labels in either order.
    pub fn get(&self, a: &str, b: &str) -> Option<&PairDeviation> {
        self.pairs
            .iter()
            .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }
}

pub fn common_grid(curves: &[Curve<'_>], n: usize) -> Result<Vec<f64>> {
    let lo = curves.iter().map(|c| c.domain.0).fold(f64::NEG_INFINITY, f64::max);
    let hi = curves.iter().map(|c| c.domain.1).fold(f64::INFINITY, f64::min);
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::EmptyDomain(format!("route domains do not overlap (lo = {lo}, hi = {hi})")));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Max-abs and RMS deviation of every pair, each on `n` uniform points over
/// the pair's domain intersection.
pub fn compare_routes(curves: &[Curve<'_>], n: usize) -> Result<ComparisonTable> {
    if curves.len() < 2 {
        return Err(Error::validation("routes", "comparison needs at least two routes"));
    }
    if n < 2 {
        return Err(Error::validation("points", "need at least two grid points"));
    }
    let mut pairs = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (a, b) = (&curves[i], &curves[j]);
            let grid = common_grid(&[Curve::new(&a.label, a.domain, |_| Ok(0.0)), Curve::new(&b.label, b.domain, |_| Ok(0.0))], n)
                .map_err(|_| Error::EmptyDomain(format!("{} and {} share no interval", a.label, b.label)))?;
            let mut max_abs: f64 = 0.0;
            let mut sq = 0.0;
            for &t in &grid {
                let d = ((a.eval)(t)? - (b.eval)(t)?).abs();
                max_abs = max_abs.max(d);
                sq += d * d;
            }
            pairs.push(PairDeviation {
                a: a.label.clone(),
                b: b.label.clone(),
                lo: grid[0],
                hi: grid[n - 1],
                max_abs,
                rms: (sq / n as f64).sqrt(),
            });
        }
    }
    Ok(ComparisonTable { points: n, pairs })
}
