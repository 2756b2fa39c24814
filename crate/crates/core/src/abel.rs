//! Reduction of the upper-substrate ODE to an Abel equation of the first
//! kind through V = 1/(S1⁰ + K_S1), and its algebrization by the
//! Hamiltonian change of variable w = e^{mt}, (dw/dt)² = m²w².
//!
//! Time domain:
//!
//! ```text
//! dV/dt = D·V + [a5 + a2·e^{mt}]·V² + [a4·e^{mt} − K_S1·a3]·V³
//! ```
//!
//! w domain (rational coefficients):
//!
//! ```text
//! dV/dw = D/(mw)·V + (a5 + a2·w)/(mw)·V² + (a4·w − K_S1·a3)/(mw)·V³
//! ```
//!
//! The cubic coefficient follows from S/(S + K_S1) = 1 − K_S1·V, so the
//! margin Γ enters it multiplied by K_S1 just like the X1(0) term.

use serde::Serialize;

use crate::ad_system::washout_exponent;
use crate::config::{IntegrationConstants, ModelParams};
use crate::error::{Error, Result};

/// Which sign convention the closed forms use.
///
/// `PaperLiteral` uses the literal exponent b1 = D/m − a5²/(3·m·a3),
/// shift −a5/(3·a3) and primitive F3 = a3·C1²/(2·b1·m)·w^{2·b1} + C2.
/// `Derived` follows from the washout coefficients f2 = a5/(mw),
/// f3 = −K_S1·a3/(mw): b1 = D/m + a5²/(3·m·K_S1·a3), shift
/// +a5/(3·K_S1·a3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    Derived,
    PaperLiteral,
}

impl SignConvention {
    pub fn label(self) -> &'static str {
        match self {
            SignConvention::Derived => "derived",
            SignConvention::PaperLiteral => "paper-literal",
        }
    }
}

/// Scalars of the reduction and algebrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbelConstants {
    pub m: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    /// Literal-convention exponent: D/m − a5²/(3·m·a3).
    pub b1: f64,
    /// C0·a3·C1²/(b1·m), with the literal b1.
    pub b2: f64,
    /// Exponent consistent with the equation's own f3:
    /// D/m + a5²/(3·m·K_S1·a3).
    pub b1_derived: f64,
    /// Constant part of the cubic coefficient, −K_S1·a3 = K_S1·k1·μ1max·Γ.
    pub cubic0: f64,
    #[serde(skip)]
    pub params: ModelParams,
    pub gamma: f64,
    pub x1_0: f64,
    pub c0: f64,
    pub c1: f64,
}

pub fn derive_constants(p: &ModelParams, x1_0: f64, gamma: f64, ic: &IntegrationConstants) -> Result<AbelConstants> {
    if !(gamma > 0.0) {
        return Err(Error::validation("gamma", format!("must be > 0, got {gamma}")));
    }
    let m = washout_exponent(p);
    if m == 0.0 {
        return Err(Error::Degenerate {
            what: "algebrization",
            detail: "growth exponent m = 0 collapses w = exp(mt)".into(),
        });
    }
    let a1 = -p.d * (p.s1_in + p.k_s1);
    let a2 = p.k1 * p.mu1max * x1_0;
    let a3 = -p.k1 * p.mu1max * gamma;
    let a4 = -p.k_s1 * a2;
    let a5 = a1 + a3;
    let b1 = p.d / m - a5 * a5 / (3.0 * m * a3);
    let b1_derived = p.d / m + a5 * a5 / (3.0 * m * p.k_s1 * a3);
    let cubic0 = -p.k_s1 * a3;
    if b1 == 0.0 || b1_derived == 0.0 {
        return Err(Error::Degenerate {
            what: "exponent b1",
            detail: "b1 = 0 leaves b2 undefined".into(),
        });
    }
    let b2 = ic.c0 * a3 * ic.c1 * ic.c1 / (b1 * m);
    Ok(AbelConstants {
        m,
        a1,
        a2,
        a3,
        a4,
        a5,
        b1,
        b2,
        b1_derived,
        cubic0,
        params: *p,
        gamma,
        x1_0,
        c0: ic.c0,
        c1: ic.c1,
    })
}

impl AbelConstants {
    pub fn is_washout(&self) -> bool {
        self.x1_0 == 0.0
    }

    pub fn b1_for(&self, conv: SignConvention) -> f64 {
        match conv {
            SignConvention::Derived => self.b1_derived,
            SignConvention::PaperLiteral => self.b1,
        }
    }

    /// Additive constant −f2/(3·f3) of the washout closed forms.
    pub fn shift(&self, conv: SignConvention) -> f64 {
        match conv {
            SignConvention::Derived => -self.a5 / (3.0 * self.cubic0),
            SignConvention::PaperLiteral => -self.a5 / (3.0 * self.a3),
        }
    }

    /// Coefficient K of the washout primitive F3(w) = K·w^{2·b1} + C2 for a
    /// prefactor C1.
    pub fn primitive_scale(&self, conv: SignConvention, c1: f64) -> f64 {
        let b1 = self.b1_for(conv);
        match conv {
            SignConvention::Derived => self.cubic0 * c1 * c1 / (2.0 * b1 * self.m),
            SignConvention::PaperLiteral => self.a3 * c1 * c1 / (2.0 * b1 * self.m),
        }
    }
}

pub fn substrate_to_v(s1_up: f64, k_s1: f64) -> Result<f64> {
    let denom = s1_up + k_s1;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Singularity {
            what: "V = 1/(S1 + K_S1)",
            at: s1_up,
        });
    }
    Ok(1.0 / denom)
}

pub fn v_to_substrate(v: f64, k_s1: f64) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        return Err(Error::Singularity {
            what: "S1 = 1/V - K_S1",
            at: v,
        });
    }
    Ok(1.0 / v - k_s1)
}

/// Abel right-hand side dV/dt.
pub fn abel_rhs_time(t: f64, v: f64, k: &AbelConstants) -> f64 {
    let p = &k.params;
    let e = (k.m * t).exp();
    let quad = -p.d * (p.s1_in + p.k_s1) + p.k1 * p.mu1max * k.x1_0 * e - p.k1 * p.mu1max * k.gamma;
    let cubic = -p.k1 * p.mu1max * k.x1_0 * p.k_s1 * e + p.k1 * p.mu1max * k.gamma * p.k_s1;
    p.d * v + quad * v * v + cubic * v * v * v
}

/// Algebrized right-hand side dV/dw for w > 0.
pub fn abel_rhs_w(w: f64, v: f64, k: &AbelConstants) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::domain("abel_rhs_w", format!("w must be > 0, got {w}")));
    }
    let mw = k.m * w;
    let d = k.params.d;
    Ok(d / mw * v + (k.a5 + k.a2 * w) / mw * v * v + (k.a4 * w + k.cubic0) / mw * v * v * v)
}

/// Deviations of the Hamiltonian change of variable along a time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HamiltonianDeviation {
    /// max |(dw/dt)² − m²w²| / max(m²w², tiny).
    pub alpha_relative: f64,
    /// max |H(t) − H(t0)| / max |H| for H = p²/2 − m²w²/2, p = dw/dt.
    pub drift_relative: f64,
}

pub fn hamiltonian_check(m: f64, t_grid: &[f64]) -> Result<HamiltonianDeviation> {
    if t_grid.is_empty() {
        return Err(Error::GridTooCoarse("empty grid".into()));
    }
    let energy = |t: f64| {
        let w = (m * t).exp();
        let pw = m * w;
        (w, pw, 0.5 * pw * pw - 0.5 * m * m * w * w)
    };
    let (_, _, h0) = energy(t_grid[0]);
    let mut alpha_dev: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &t in t_grid {
        let (w, pw, h) = energy(t);
        let alpha = m * m * w * w;
        let dev = (pw * pw - alpha).abs();
        alpha_dev = alpha_dev.max(if alpha > 0.0 { dev / alpha } else { dev });
        drift = drift.max((h - h0).abs());
        scale = scale.max(h.abs()).max(0.5 * alpha);
    }
    Ok(HamiltonianDeviation {
        alpha_relative: alpha_dev,
        drift_relative: if scale > 0.0 { drift / scale } else { drift },
    })
}

/// Coefficients f0..f3 of an Abel equation y' = f0 + f1·y + f2·y² + f3·y³.
pub trait AbelCoefficients {
    fn coefficients(&self, x: f64) -> [f64; 4];

    /// d/dx (f2/f3). Central differences unless overridden.
    fn ratio_derivative(&self, x: f64) -> f64 {
        let h = 1e-5 * x.abs().max(1.0);
        let r = |x: f64| {
            let c = self.coefficients(x);
            c[2] / c[3]
        };
        (8.0 * (r(x + h) - r(x - h)) - (r(x + 2.0 * h) - r(x - 2.0 * h))) / (12.0 * h)
    }

    /// Elementary form of the reduction integrals, when one is known.
    fn elementary(&self) -> Option<ElementaryReduction> {
        None
    }
}

/// Closed forms of g = f1 − f2²/(3f3) and f3 for which u and ξ integrate
/// in elementary terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementaryReduction {
    /// g = rate/x, f3 = f3_coef/x (x > 0).
    PowerLaw { rate: f64, f3_coef: f64 },
    /// g = rate, f3 = f3_coef.
    Exponential { rate: f64, f3_coef: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoefficientDomain {
    Time,
    W,
}

/// The model's Abel coefficients in either independent variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCoefficients {
    pub domain: CoefficientDomain,
    pub constants: AbelConstants,
}

impl ModelCoefficients {
    pub fn time(k: &AbelConstants) -> Self {
        ModelCoefficients { domain: CoefficientDomain::Time, constants: *k }
    }

    pub fn w(k: &AbelConstants) -> Self {
        ModelCoefficients { domain: CoefficientDomain::W, constants: *k }
    }
}

impl AbelCoefficients for ModelCoefficients {
    fn coefficients(&self, x: f64) -> [f64; 4] {
        let k = &self.constants;
        let d = k.params.d;
        match self.domain {
            CoefficientDomain::Time => {
                let e = (k.m * x).exp();
                [0.0, d, k.a5 + k.a2 * e, k.a4 * e + k.cubic0]
            }
            CoefficientDomain::W => {
                let mw = k.m * x;
                [0.0, d / mw, (k.a5 + k.a2 * x) / mw, (k.a4 * x + k.cubic0) / mw]
            }
        }
    }

    fn ratio_derivative(&self, x: f64) -> f64 {
        // f2/f3 = (a5 + a2·s)/(a4·s + cubic0) with s = e^{mt} or s = w
        let k = &self.constants;
        let (s, ds) = match self.domain {
            CoefficientDomain::Time => {
                let e = (k.m * x).exp();
                (e, k.m * e)
            }
            CoefficientDomain::W => (x, 1.0),
        };
        let den = k.a4 * s + k.cubic0;
        (k.a2 * den - (k.a5 + k.a2 * s) * k.a4) / (den * den) * ds
    }

    fn elementary(&self) -> Option<ElementaryReduction> {
        let k = &self.constants;
        if k.a2 != 0.0 || k.a4 != 0.0 {
            return None;
        }
        let d = k.params.d;
        match self.domain {
            CoefficientDomain::Time => Some(ElementaryReduction::Exponential {
                rate: d - k.a5 * k.a5 / (3.0 * k.cubic0),
                f3_coef: k.cubic0,
            }),
            CoefficientDomain::W => Some(ElementaryReduction::PowerLaw {
                rate: k.b1_derived,
                f3_coef: k.cubic0 / k.m,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad_system::{make_envelopes, rhs_upper_s1};
    use crate::config::default_params;
    use approx::assert_relative_eq;

    fn ic() -> IntegrationConstants {
        IntegrationConstants { c: 10.0, c0: 0.1, c1: 1.0, c2: 0.0, c3: 0.0 }
    }

    #[test]
    fn reference_washout_constants() {
        let k = derive_constants(&default_params(), 0.0, 1.0, &ic()).unwrap();
        assert_relative_eq!(k.a1, -8.7295, max_relative = 1e-14);
        assert_eq!(k.a2, 0.0);
        assert_relative_eq!(k.a3, -27.84, max_relative = 1e-14);
        assert_eq!(k.a4, 0.0);
        assert_relative_eq!(k.a5, -36.5695, max_relative = 1e-14);
        assert_eq!(k.a5, k.a1 + k.a3);
        // independent scalar evaluation of D/m - a5^2/(3 m a3)
        let m = 1.2 * 10.0 / 22.1 - 0.5 * 0.395;
        let b1 = 0.395 / m - 36.5695f64.powi(2) / (3.0 * m * -27.84);
        assert_relative_eq!(k.b1, b1, max_relative = 1e-13);
        assert_relative_eq!(k.b1, 47.489_775_911, max_relative = 1e-10);
        assert_relative_eq!(
            k.b1_derived,
            0.395 / m + 36.5695f64.powi(2) / (3.0 * m * 12.1 * -27.84),
            max_relative = 1e-13
        );
        assert_relative_eq!(k.cubic0, 12.1 * 27.84, max_relative = 1e-14);
        assert_relative_eq!(k.b2, 0.1 * -27.84 / (k.b1 * m), max_relative = 1e-13);
    }

    #[test]
    fn constant_identities_with_biomass() {
        let p = default_params();
        let k = derive_constants(&p, 0.25, 0.7, &ic()).unwrap();
        assert_eq!(k.a2, p.k1 * p.mu1max * 0.25);
        assert_eq!(k.a4, -p.k_s1 * k.a2);
        assert_eq!(k.a5, k.a1 + k.a3);
        assert!(k.a3 < 0.0 && k.a2 >= 0.0 && k.a4 <= 0.0);
    }

    #[test]
    fn degenerate_constants() {
        let mut p = default_params();
        p.alpha = 1.0;
        p.d = 1.2 * 10.0 / 22.1;
        assert!(matches!(derive_constants(&p, 0.0, 1.0, &ic()), Err(Error::Degenerate { .. })));
        assert!(derive_constants(&default_params(), 0.0, 0.0, &ic()).is_err());
    }

    #[test]
    fn change_of_variable_pair() {
        assert_relative_eq!(substrate_to_v(10.0, 12.1).unwrap(), 1.0 / 22.1, max_relative = 1e-16);
        assert_relative_eq!(substrate_to_v(10.0, 12.1).unwrap(), 0.045_248_868_778, max_relative = 1e-11);
        assert!(matches!(substrate_to_v(-12.1, 12.1), Err(Error::Singularity { .. })));
        assert!(matches!(v_to_substrate(0.0, 12.1), Err(Error::Singularity { .. })));
        for &s in &[0.0, 0.3, 10.0, 123.4] {
            assert_relative_eq!(
                v_to_substrate(substrate_to_v(s, 12.1).unwrap(), 12.1).unwrap(),
                s,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let k = derive_constants(&default_params(), 0.1, 1.0, &ic()).unwrap();
        for t in [0.0, 1.0, 7.5] {
            assert_eq!(abel_rhs_time(t, 0.0, &k), 0.0);
            assert_eq!(abel_rhs_w((k.m * t).exp(), 0.0, &k).unwrap(), 0.0);
        }
        assert!(abel_rhs_w(0.0, 0.1, &k).is_err());
        assert!(abel_rhs_w(-1.0, 0.1, &k).is_err());
    }

    #[test]
    fn washout_time_rhs_by_hand() {
        let k = derive_constants(&default_params(), 0.0, 1.0, &ic()).unwrap();
        let v: f64 = 0.045_248_8;
        let hand = 0.395 * v + (-8.7295 - 27.84) * v * v + 12.1 * 27.84 * v * v * v;
        for t in [0.0, 3.3] {
            assert_relative_eq!(abel_rhs_time(t, v, &k), hand, max_relative = 1e-13);
        }
    }

    #[test]
    fn chain_rule_identity_against_upper_ode() {
        let p = default_params();
        let k = derive_constants(&p, 0.1, 1.0, &ic()).unwrap();
        let env = make_envelopes(0.1, 1.0, &p).unwrap();
        for i in 0..40 {
            let t = 0.25 * i as f64;
            let s = 0.1 + 0.75 * i as f64;
            let v = substrate_to_v(s, p.k_s1).unwrap();
            let expect = -v * v * rhs_upper_s1(t, s, &env, &p).unwrap();
            assert_relative_eq!(abel_rhs_time(t, v, &k), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn algebrization_identity() {
        let k = derive_constants(&default_params(), 0.1, 1.0, &ic()).unwrap();
        for i in 1..60 {
            let w = 0.05 * i as f64 * 1.3;
            let v = 0.01 + 0.002 * i as f64;
            let t = w.ln() / k.m;
            assert_relative_eq!(
                abel_rhs_w(w, v, &k).unwrap() * k.m * w,
                abel_rhs_time(t, v, &k),
                max_relative = 1e-12
            );
        }
        // w(0) = 1
        assert_eq!((k.m * 0.0).exp(), 1.0);
    }

    #[test]
    fn hamiltonian_identity() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let dev = hamiltonian_check(0.3455, &grid).unwrap();
        assert!(dev.alpha_relative <= 1e-12 && dev.drift_relative <= 1e-12, "{dev:?}");
        let dev = hamiltonian_check(-0.8, &grid).unwrap();
        assert!(dev.alpha_relative <= 1e-12 && dev.drift_relative <= 1e-12);
        let dev = hamiltonian_check(0.0, &grid).unwrap();
        assert_eq!(dev.alpha_relative, 0.0);
        assert_eq!(dev.drift_relative, 0.0);
        assert!(hamiltonian_check(0.3, &[]).is_err());
    }

    #[test]
    fn model_coefficients_agree_with_rhs() {
        let k = derive_constants(&default_params(), 0.3, 1.0, &ic()).unwrap();
        let ct = ModelCoefficients::time(&k);
        let cw = ModelCoefficients::w(&k);
        for i in 0..20 {
            let t = 0.37 * i as f64;
            let w = (k.m * t).exp();
            let v: f64 = 0.04;
            let f = ct.coefficients(t);
            assert_relative_eq!(f[1] * v + f[2] * v * v + f[3] * v.powi(3), abel_rhs_time(t, v, &k), max_relative = 1e-12);
            let g = cw.coefficients(w);
            assert_relative_eq!(
                g[1] * v + g[2] * v * v + g[3] * v.powi(3),
                abel_rhs_w(w, v, &k).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn analytic_ratio_derivative_matches_numeric() {
        struct Numeric(ModelCoefficients);
        impl AbelCoefficients for Numeric {
            fn coefficients(&self, x: f64) -> [f64; 4] {
                self.0.coefficients(x)
            }
        }
        let k = derive_constants(&default_params(), 0.3, 1.0, &ic()).unwrap();
        for c in [ModelCoefficients::time(&k), ModelCoefficients::w(&k)] {
            for x in [1.3, 2.0, 4.5] {
                assert_relative_eq!(c.ratio_derivative(x), Numeric(c).ratio_derivative(x), max_relative = 1e-7);
            }
        }
    }
}
