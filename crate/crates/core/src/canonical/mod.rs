//! Reduction of y' = f0 + f1·y + f2·y² + f3·y³ to the canonical form
//! dz/dξ = z³ + Φ(ξ) through y = u·z + v, with
//!
//! ```text
//! v = −f2/(3f3)
//! u = exp ∫ (f1 − f2²/(3f3))
//! ξ = ∫ f3·u²
//! Φ = [f0 − f1f2/(3f3) + 2f2³/(27f3²) + (f2/f3)'/3] / (f3·u³)
//! ```
//!
//! u is normalised to 1 at the left end of the working interval and ξ to 0
//! there; the free constants of the closed forms absorb both choices.

pub mod closed_form;

use serde::Serialize;

use crate::abel::{AbelCoefficients, ElementaryReduction};
use crate::error::{Error, Result};
use crate::numdiff::derivative_on_grid;
use crate::quadrature::integrate;

const QUAD_TOL: f64 = 1e-10;
const ROOT_SCAN: usize = 2000;
const NODES: usize = 64;

/// The arbitrary function φ selecting the closed-form family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Varphi {
    /// φ ≡ 0, giving z' = z³.
    Zero,
    /// φ ≡ C0, giving z' = z³ + C0·z.
    Constant(f64),
}

impl Varphi {
    pub fn value(self) -> f64 {
        match self {
            Varphi::Zero => 0.0,
            Varphi::Constant(c) => c,
        }
    }

    /// Forcing the closed-form family assumes at state z.
    pub fn assumed_forcing(self, z: f64) -> f64 {
        self.value() * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalPoint {
    pub x: f64,
    pub u: f64,
    pub v: f64,
    pub xi: f64,
    pub phi: f64,
}

/// u, v, ξ and Φ of one Abel equation on [x0, x_end].
#[derive(Debug, Clone)]
pub struct CanonicalReduction<C> {
    coeffs: C,
    x0: f64,
    x_end: f64,
    varphi: Varphi,
    elementary: Option<ElementaryReduction>,
    nodes: Vec<f64>,
    ln_u: Vec<f64>,
    xi: Vec<f64>,
}

pub fn reduce_to_canonical<C: AbelCoefficients>(
    coeffs: C,
    x0: f64,
    x_end: f64,
    varphi: Varphi,
) -> Result<CanonicalReduction<C>> {
    if !(x0.is_finite() && x_end.is_finite()) || x0 == x_end {
        return Err(Error::domain("reduce_to_canonical", format!("bad interval [{x0}, {x_end}]")));
    }
    locate_f3_root(&coeffs, x0, x_end)?;
    let elementary = coeffs.elementary();
    let mut red = CanonicalReduction {
        coeffs,
        x0,
        x_end,
        varphi,
        elementary,
        nodes: Vec::new(),
        ln_u: Vec::new(),
        xi: Vec::new(),
    };
    if red.elementary.is_none() {
        red.tabulate_nodes()?;
    }
    Ok(red)
}

fn locate_f3_root<C: AbelCoefficients>(c: &C, x0: f64, x_end: f64) -> Result<()> {
    let f3 = |x: f64| c.coefficients(x)[3];
    let mut prev_x = x0;
    let mut prev = f3(x0);
    if prev == 0.0 {
        return Err(Error::SingularReduction { location: x0 });
    }
    for i in 1..=ROOT_SCAN {
        let x = x0 + (x_end - x0) * i as f64 / ROOT_SCAN as f64;
        let cur = f3(x);
        if cur == 0.0 {
            return Err(Error::SingularReduction { location: x });
        }
        if cur.signum() != prev.signum() {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f3(mid).signum() == prev.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
                if (b - a).abs() <= 1e-14 * a.abs().max(1.0) {
                    break;
                }
            }
            return Err(Error::SingularReduction { location: 0.5 * (a + b) });
        }
        prev_x = x;
        prev = cur;
    }
    Ok(())
}

impl<C: AbelCoefficients> CanonicalReduction<C> {
    pub fn interval(&self) -> (f64, f64) {
        (self.x0, self.x_end)
    }

    pub fn varphi(&self) -> Varphi {
        self.varphi
    }

    pub fn is_elementary(&self) -> bool {
        self.elementary.is_some()
    }

    pub fn coefficients(&self) -> &C {
        &self.coeffs
    }

    fn g(&self, x: f64) -> f64 {
        let [_, f1, f2, f3] = self.coeffs.coefficients(x);
        f1 - f2 * f2 / (3.0 * f3)
    }

    fn tabulate_nodes(&mut self) -> Result<()> {
        let mut nodes = Vec::with_capacity(NODES + 1);
        let mut ln_u = vec![0.0];
        let mut xi = vec![0.0];
        for i in 0..=NODES {
            nodes.push(self.x0 + (self.x_end - self.x0) * i as f64 / NODES as f64);
        }
        for w in nodes.windows(2) {
            let lu0 = *ln_u.last().expect("seeded");
            let lu1 = lu0 + integrate(|s| self.g(s), w[0], w[1], QUAD_TOL * 1e-2, QUAD_TOL)?;
            let dxi = integrate(
                |s| {
                    let lu = lu0 + integrate(|r| self.g(r), w[0], s, QUAD_TOL * 1e-2, QUAD_TOL).unwrap_or(f64::NAN);
                    self.coeffs.coefficients(s)[3] * (2.0 * lu).exp()
                },
                w[0],
                w[1],
                QUAD_TOL * 1e-2,
                QUAD_TOL,
            )?;
            ln_u.push(lu1);
            xi.push(xi.last().expect("seeded") + dxi);
        }
        self.nodes = nodes;
        self.ln_u = ln_u;
        self.xi = xi;
        Ok(())
    }

    fn check(&self, x: f64) -> Result<()> {
        let (lo, hi) = (self.x0.min(self.x_end), self.x0.max(self.x_end));
        if x < lo || x > hi || x.is_nan() {
            return Err(Error::OutsideDomain { t: x, lo, hi });
        }
        Ok(())
    }

    fn node_below(&self, x: f64) -> usize {
        let frac = (x - self.x0) / (self.x_end - self.x0);
        ((frac * NODES as f64).floor() as usize).min(NODES - 1)
    }

    pub fn v(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let [_, _, f2, f3] = self.coeffs.coefficients(x);
        Ok(-f2 / (3.0 * f3))
    }

    pub fn ln_u(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self.elementary {
            Some(ElementaryReduction::PowerLaw { rate, .. }) => rate * (x / self.x0).ln(),
            Some(ElementaryReduction::Exponential { rate, .. }) => rate * (x - self.x0),
            None => {
                let k = self.node_below(x);
                self.ln_u[k] + integrate(|s| self.g(s), self.nodes[k], x, QUAD_TOL * 1e-2, QUAD_TOL)?
            }
        })
    }

    pub fn u(&self, x: f64) -> Result<f64> {
        Ok(self.ln_u(x)?.exp())
    }

    pub fn xi(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match self.elementary {
            Some(ElementaryReduction::PowerLaw { rate, f3_coef }) => {
                let l = (x / self.x0).ln();
                if rate == 0.0 {
                    f3_coef * l
                } else {
                    f3_coef * (2.0 * rate * l).exp_m1() / (2.0 * rate)
                }
            }
            Some(ElementaryReduction::Exponential { rate, f3_coef }) => {
                let l = x - self.x0;
                if rate == 0.0 {
                    f3_coef * l
                } else {
                    f3_coef * (2.0 * rate * l).exp_m1() / (2.0 * rate)
                }
            }
            None => {
                let k = self.node_below(x);
                let base = self.nodes[k];
                let lu0 = self.ln_u[k];
                self.xi[k]
                    + integrate(
                        |s| {
                            let lu = lu0 + integrate(|r| self.g(r), base, s, QUAD_TOL * 1e-2, QUAD_TOL).unwrap_or(f64::NAN);
                            self.coeffs.coefficients(s)[3] * (2.0 * lu).exp()
                        },
                        base,
                        x,
                        QUAD_TOL * 1e-2,
                        QUAD_TOL,
                    )?
            }
        })
    }

    /// Canonical forcing Φ evaluated at ξ(x).
    pub fn phi(&self, x: f64) -> Result<f64> {
        let u = self.u(x)?;
        Ok(self.forcing_numerator(x) / (self.coeffs.coefficients(x)[3] * u * u * u))
    }

    /// f0 − f1f2/(3f3) + 2f2³/(27f3²) + (f2/f3)'/3.
    pub fn forcing_numerator(&self, x: f64) -> f64 {
        let [f0, f1, f2, f3] = self.coeffs.coefficients(x);
        f0 - f1 * f2 / (3.0 * f3) + 2.0 * f2 * f2 * f2 / (27.0 * f3 * f3) + self.coeffs.ratio_derivative(x) / 3.0
    }

    pub fn point(&self, x: f64) -> Result<CanonicalPoint> {
        Ok(CanonicalPoint {
            x,
            u: self.u(x)?,
            v: self.v(x)?,
            xi: self.xi(x)?,
            phi: self.phi(x)?,
        })
    }

    pub fn tabulate(&self, grid: &[f64]) -> Result<Vec<CanonicalPoint>> {
        grid.iter().map(|&x| self.point(x)).collect()
    }

    /// z = (y − v)/u at x.
    pub fn to_canonical(&self, x: f64, y: f64) -> Result<f64> {
        Ok((y - self.v(x)?) / self.u(x)?)
    }

    /// Largest |dz/dξ − z³ − Φ| / (1 + |z³| + |Φ|) over interior points of a
    /// trajectory y(x) of the original equation, with dz/dξ from finite
    /// differences on the grid.
    pub fn canonical_residual(&self, grid: &[f64], y: &[f64]) -> Result<f64> {
        if grid.len() != y.len() {
            return Err(Error::validation("y", "length differs from grid"));
        }
        let pts = self.tabulate(grid)?;
        let z: Vec<f64> = pts.iter().zip(y).map(|(p, &y)| (y - p.v) / p.u).collect();
        let dz = derivative_on_grid(grid, &z)?;
        let mut worst: f64 = 0.0;
        let n = grid.len();
        for i in 2..n.saturating_sub(2) {
            let p = &pts[i];
            let f3 = self.coeffs.coefficients(p.x)[3];
            let dz_dxi = dz[i] / (f3 * p.u * p.u);
            let z3 = z[i].powi(3);
            worst = worst.max((dz_dxi - z3 - p.phi).abs() / (1.0 + z3.abs() + p.phi.abs()));
        }
        Ok(worst)
    }
}
