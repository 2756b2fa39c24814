//! Numerical differentiation: Fornberg stencils on sampled grids and
//! Ridders' Richardson-extrapolated central differences for callables.

use crate::error::{Error, Result};

/// Weights w such that f'(x0) ≈ Σ w_j f(xs_j) (Fornberg's algorithm).
pub fn first_derivative_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative order k
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Derivative of sampled values using up-to-five-point stencils
/// (fourth order in the interior of a smooth uniform grid).
pub fn derivative_on_grid(grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::GridTooCoarse(format!("{n} points; at least 3 are required")));
    }
    if values.len() != n {
        return Err(Error::validation("values", "length differs from grid"));
    }
    let width = n.min(5);
    let half = width / 2;
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - width);
            let xs = &grid[start..start + width];
            first_derivative_weights(grid[i], xs)
                .iter()
                .zip(&values[start..start + width])
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect())
}

/// Ridders' method: central differences at shrinking steps, extrapolated
/// with a Neville tableau. Returns (derivative, error estimate).
pub fn ridders<F>(f: F, x: f64, h0: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 12;
    const SAFE: f64 = 2.0;
    if !(h0 > 0.0) {
        return Err(Error::validation("h0", "must be positive"));
    }
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut hh = h0;
    a[0][0] = (f(x + hh)? - f(x - hh)?) / (2.0 * hh);
    let mut err = f64::INFINITY;
    let mut ans = a[0][0];
    for i in 1..NTAB {
        hh /= CON;
        a[0][i] = (f(x + hh)? - f(x - hh)?) / (2.0 * hh);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let errt = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if errt <= err {
                err = errt;
                ans = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    Ok((ans, err))
}
