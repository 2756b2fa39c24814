//! Washout (X1(0) = 0) closed forms of the Abel equation.
//!
//! Every variant has the shape V(t) = N(t)/√(C + q(t)) + shift, with the
//! radicand monotone in t. The constant C therefore enters affinely under
//! the root, which makes fitting it to an initial value an exact inversion.
//!
//! Derived variants use β = b1·m with the audited exponent and
//! ξ(t) = P·e^{2βt} (+ C2), P = −K_S1·a3·C1²/(2·b1·m):
//!
//! ```text
//! Case 1: V = C1·e^{βt} / √(C − 2ξ) + v
//! Case 2: V = C1·e^{βt}·e^{C0·ξ} / √(C − C3 − 2G(ξ)) + v,  G = (e^{2C0ξ} − 1)/(2C0)
//! ```
//!
//! Paper-literal variants use the literal b1, the logarithmic radicand of
//! Case 1 and the incomplete gamma of Case 2.

use serde::Serialize;

use crate::abel::{abel_rhs_time, v_to_substrate, AbelConstants, SignConvention};
use crate::config::IntegrationConstants;
use crate::error::{Error, Result};
use crate::numdiff::ridders;
use crate::special::upper_incomplete_gamma_flagged;

/// Search limit for domain endpoints, in days.
const T_SEARCH: f64 = 1.0e4;
/// Half-width of the window scanned for zeros of V and sampled for the
/// attached residual.
const SAMPLE_WINDOW: f64 = 20.0;
const SAMPLE_POINTS: usize = 65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Case {
    Case1,
    Case2,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Case1 => "case1",
            Case::Case2 => "case2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormSolution {
    pub case: Case,
    pub convention: SignConvention,
    pub constants: IntegrationConstants,
    pub abel: AbelConstants,
    /// Maximal interval around t = 0 with a positive radicand; infinite ends
    /// mean no endpoint within the search limit.
    pub domain: (f64, f64),
    /// Zeros of V (poles of S1⁰) inside the sampled window.
    pub excluded: Vec<f64>,
    /// Residual of the closed form against its own Abel equation on the
    /// sampled window.
    pub sampled_residual: f64,
    /// Whether any incomplete-gamma evaluation was flushed to zero.
    pub gamma_underflow: bool,
}

impl ClosedFormSolution {
    fn beta(&self) -> f64 {
        self.abel.b1_for(self.convention) * self.abel.m
    }

    fn shift(&self) -> f64 {
        self.abel.shift(self.convention)
    }

    /// N(t) and q(t); V = N/√(C + q) + shift.
    fn parts(&self, t: f64) -> Result<(f64, f64)> {
        let k = &self.abel;
        let ic = &self.constants;
        let beta = self.beta();
        let e = (beta * t).exp();
        Ok(match (self.case, self.convention) {
            (Case::Case1, SignConvention::Derived) => {
                let xi = k.primitive_scale(SignConvention::Derived, ic.c1) * e * e;
                (ic.c1 * e, -2.0 * xi)
            }
            (Case::Case2, SignConvention::Derived) => {
                let xi = k.primitive_scale(SignConvention::Derived, ic.c1) * e * e + ic.c2;
                let g = if ic.c0 == 0.0 {
                    xi
                } else {
                    (2.0 * ic.c0 * xi).exp_m1() / (2.0 * ic.c0)
                };
                (ic.c1 * e * (ic.c0 * xi).exp(), -ic.c3 - 2.0 * g)
            }
            (Case::Case1, SignConvention::PaperLiteral) => (ic.c1 * e, -2.0 * (ic.c1.ln() + beta * t)),
            (Case::Case2, SignConvention::PaperLiteral) => {
                let f3 = k.primitive_scale(SignConvention::PaperLiteral, ic.c1) * e * e + ic.c2;
                let (scale, arg, s) = literal_gamma_terms(k, ic)?;
                let g = upper_incomplete_gamma_flagged(s, arg * e * e)?;
                (ic.c1 * e * f3, -ic.c3 + scale * g.value)
            }
        })
    }

    pub fn radicand(&self, t: f64) -> Result<f64> {
        let (_, q) = self.parts(t)?;
        Ok(self.constants.c + q)
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.domain.0 && t < self.domain.1
    }

    fn eval_unchecked(&self, t: f64) -> Result<f64> {
        let (n, q) = self.parts(t)?;
        let r = self.constants.c + q;
        if !(r > 0.0) {
            return Err(Error::OutsideDomain {
                t,
                lo: self.domain.0,
                hi: self.domain.1,
            });
        }
        Ok(n / r.sqrt() + self.shift())
    }

    pub fn v_of_t(&self, t: f64) -> Result<f64> {
        if !self.contains(t) {
            return Err(Error::OutsideDomain {
                t,
                lo: self.domain.0,
                hi: self.domain.1,
            });
        }
        self.eval_unchecked(t)
    }

    pub fn s1_of_t(&self, t: f64) -> Result<f64> {
        v_to_substrate(self.v_of_t(t)?, self.abel.params.k_s1)
    }

    /// The window [lo, hi] used for sampling, kept clear of the endpoints.
    pub fn sample_window(&self) -> (f64, f64) {
        let (lo, hi) = self.domain;
        let hi = if hi.is_finite() { 0.95 * hi } else { SAMPLE_WINDOW };
        let lo = if lo.is_finite() { 0.95 * lo } else { -SAMPLE_WINDOW };
        (lo.max(-SAMPLE_WINDOW), hi.min(SAMPLE_WINDOW))
    }

    fn scan_zeros(&self) -> Vec<f64> {
        let (lo, hi) = self.sample_window();
        let n = 2000;
        let at = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
        let mut out = Vec::new();
        let mut prev = self.v_of_t(at(0)).ok();
        for i in 1..=n {
            let cur = self.v_of_t(at(i)).ok();
            if let (Some(a), Some(b)) = (prev, cur) {
                if a == 0.0 {
                    out.push(at(i - 1));
                } else if a.signum() != b.signum() && b != 0.0 {
                    let (mut x0, mut x1, sa) = (at(i - 1), at(i), a.signum());
                    for _ in 0..200 {
                        let mid = 0.5 * (x0 + x1);
                        match self.v_of_t(mid) {
                            Ok(v) if v.signum() == sa => x0 = mid,
                            Ok(_) => x1 = mid,
                            Err(_) => break,
                        }
                        if x1 - x0 <= 1e-14 * x0.abs().max(1.0) {
                            break;
                        }
                    }
                    out.push(0.5 * (x0 + x1));
                }
            }
            prev = cur;
        }
        out
    }

    pub fn sample_grid(&self) -> Vec<f64> {
        let (_, hi) = self.sample_window();
        (0..SAMPLE_POINTS)
            .map(|i| hi * i as f64 / (SAMPLE_POINTS - 1) as f64)
            .collect()
    }
}

/// Scale e^{2C0C2}/(2b1(−b2)^{1/(2b1)}), argument factor −b2 and order
/// 1/(2b1) of the literal incomplete-gamma term.
fn literal_gamma_terms(k: &AbelConstants, ic: &IntegrationConstants) -> Result<(f64, f64, f64)> {
    let b1 = k.b1;
    let b2 = ic.c0 * k.a3 * ic.c1 * ic.c1 / (b1 * k.m);
    if !(-b2 > 0.0) {
        return Err(Error::ComplexBranch(format!(
            "-b2 = {} must be > 0 for a real incomplete-gamma argument (choose sign(C0) = sign(b1*m))",
            -b2
        )));
    }
    let s = 1.0 / (2.0 * b1);
    let scale = (2.0 * ic.c0 * ic.c2).exp() / (2.0 * b1 * (-b2).powf(s));
    Ok((scale, -b2, s))
}

/// Literal primitive F3(w) = a3·C1²/(2·b1·m)·w^{2b1} + C2.
pub fn f3_primitive(k: &AbelConstants, ic: &IntegrationConstants, w: f64) -> f64 {
    k.primitive_scale(SignConvention::PaperLiteral, ic.c1) * w.powf(2.0 * k.b1) + ic.c2
}

/// Literal F4(w) = −e^{2C0C2}/(2b1(−b2)^{1/(2b1)})·Γ(1/(2b1), −b2·w^{2b1}) + C3,
/// an antiderivative of e^{2·C0·F3(w)}.
pub fn f4_antiderivative(k: &AbelConstants, ic: &IntegrationConstants, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::domain("f4_antiderivative", format!("w must be > 0, got {w}")));
    }
    let (scale, arg, s) = literal_gamma_terms(k, ic)?;
    let g = upper_incomplete_gamma_flagged(s, arg * w.powf(2.0 * k.b1))?;
    Ok(-scale * g.value + ic.c3)
}

fn build(k: &AbelConstants, ic: &IntegrationConstants, case: Case, conv: SignConvention) -> Result<ClosedFormSolution> {
    ic.validate()?;
    if !k.is_washout() {
        return Err(Error::domain("closed form", "requires the washout specialisation X1(0) = 0"));
    }
    if k.b1_for(conv) == 0.0 {
        return Err(Error::Degenerate {
            what: "exponent b1",
            detail: "b1 = 0".into(),
        });
    }
    if conv == SignConvention::PaperLiteral && case == Case::Case1 && !(ic.c1 > 0.0) {
        return Err(Error::domain("case1", format!("ln C1 needs C1 > 0, got {}", ic.c1)));
    }
    let mut sol = ClosedFormSolution {
        case,
        convention: conv,
        constants: *ic,
        abel: *k,
        domain: (f64::NEG_INFINITY, f64::INFINITY),
        excluded: Vec::new(),
        sampled_residual: f64::NAN,
        gamma_underflow: false,
    };
    sol.parts(0.0)?;
    let positive = |t: f64| matches!(sol.radicand(t), Ok(r) if r > 0.0);
    if !positive(0.0) {
        return Err(Error::EmptyDomain(format!(
            "{} radicand is not positive at t = 0 (C = {})",
            case.label(),
            ic.c
        )));
    }
    let hi = domain_end(&positive, 1.0);
    let lo = domain_end(&positive, -1.0);
    sol.domain = (lo, hi);
    sol.excluded = sol.scan_zeros();
    let grid: Vec<f64> = sol
        .sample_grid()
        .into_iter()
        .filter(|t| !sol.excluded.iter().any(|z| (z - t).abs() < 1e-6))
        .collect();
    sol.sampled_residual = verify_residual(&sol, k, &grid)?;
    if case == Case::Case2 && conv == SignConvention::PaperLiteral {
        let (_, arg, s) = literal_gamma_terms(k, ic)?;
        let beta = sol.beta();
        sol.gamma_underflow = grid
            .iter()
            .any(|&t| matches!(upper_incomplete_gamma_flagged(s, arg * (2.0 * beta * t).exp()), Ok(g) if g.underflow));
    }
    Ok(sol)
}

/// Endpoint of the positive-radicand interval starting at 0 in direction
/// `dir`, by doubling then bisection.
fn domain_end(positive: &impl Fn(f64) -> bool, dir: f64) -> f64 {
    let mut inside = 0.0;
    let mut step = 0.5;
    loop {
        let t = inside + dir * step;
        if t.abs() > T_SEARCH {
            return dir * f64::INFINITY;
        }
        if positive(t) {
            inside = t;
            step *= 2.0;
            continue;
        }
        let mut outside = t;
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if positive(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() <= 4.0 * f64::EPSILON * inside.abs().max(1.0) {
                break;
            }
        }
        return outside;
    }
}

pub fn case1_solution(k: &AbelConstants, ic: &IntegrationConstants, conv: SignConvention) -> Result<ClosedFormSolution> {
    build(k, ic, Case::Case1, conv)
}

pub fn case2_solution(k: &AbelConstants, ic: &IntegrationConstants, conv: SignConvention) -> Result<ClosedFormSolution> {
    build(k, ic, Case::Case2, conv)
}

/// Analytic right endpoint of the paper-literal Case 1 domain,
/// t* = (C/2 − ln C1)/(b1·m), when it lies ahead of t = 0.
pub fn literal_case1_endpoint(k: &AbelConstants, ic: &IntegrationConstants) -> f64 {
    (ic.c / 2.0 - ic.c1.ln()) / (k.b1 * k.m)
}

/// Constants placing V(0) = v0 on a closed form.
///
/// C1 = ±1 picks the root branch and C3 = 0. C2 = 0, except for the derived
/// Case 2 where C2 = −P puts ξ(0) = 0; otherwise e^{C0·ξ(0)} can be so small
/// that C cancels against q(0). For Case 2 the magnitude of `c0` is kept and
/// its sign set to sign(b1·m) so that the paper-literal incomplete-gamma
/// argument is real. C then follows exactly from C = N(0)²/(v0 − shift)² − q(0).
pub fn fit_integration_constants(
    k: &AbelConstants,
    case: Case,
    conv: SignConvention,
    v0: f64,
    c0: f64,
) -> Result<IntegrationConstants> {
    let c0 = match case {
        Case::Case1 => 0.0,
        Case::Case2 => c0.abs() * (k.b1 * k.m).signum(),
    };
    let gap = v0 - k.shift(conv);
    if gap == 0.0 || !gap.is_finite() {
        return Err(Error::Degenerate {
            what: "initial value",
            detail: format!("V(0) = {v0} equals the closed form's asymptote"),
        });
    }
    for c1 in [1.0, -1.0] {
        let c2 = match (case, conv) {
            (Case::Case2, SignConvention::Derived) => -k.primitive_scale(conv, c1),
            _ => 0.0,
        };
        let ic = IntegrationConstants { c: 0.0, c0, c1, c2, c3: 0.0 };
        let probe = ClosedFormSolution {
            case,
            convention: conv,
            constants: ic,
            abel: *k,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
            excluded: Vec::new(),
            sampled_residual: f64::NAN,
            gamma_underflow: false,
        };
        let Ok((n0, q0)) = probe.parts(0.0) else { continue };
        if !(n0.is_finite() && q0.is_finite()) || n0 == 0.0 || n0.signum() != gap.signum() {
            continue;
        }
        let c = n0 * n0 / (gap * gap) - q0;
        return Ok(IntegrationConstants { c, ..ic });
    }
    Err(Error::ComplexBranch(format!(
        "no admissible C1 = ±1 reaches V(0) = {v0} on the {} {} branch",
        conv.label(),
        case.label()
    )))
}

/// max |dV/dt − f(t, V)| / (1 + |f(t, V)|) over the grid, with dV/dt from
/// Ridders-extrapolated central differences and f the Abel right-hand side
/// for constants `k`.
pub fn verify_residual(sol: &ClosedFormSolution, k: &AbelConstants, grid: &[f64]) -> Result<f64> {
    for &t in grid {
        sol.v_of_t(t)?;
    }
    verify_candidate(|s| sol.eval_unchecked(s), sol.domain, k, grid)
}

/// Residual of an arbitrary candidate V(t) defined on the open interval
/// `domain`.
pub fn verify_candidate<F>(v: F, domain: (f64, f64), k: &AbelConstants, grid: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (lo, hi) = domain;
    let mut worst: f64 = 0.0;
    for &t in grid {
        if !(t > lo && t < hi) {
            return Err(Error::OutsideDomain { t, lo, hi });
        }
        let room = (t - lo).min(hi - t);
        let h0 = (0.05 * t.abs().max(1.0)).min(0.25 * room).min(0.1);
        let (dv, _) = ridders(&v, t, h0)?;
        let f = abel_rhs_time(t, v(t)?, k);
        worst = worst.max((dv - f).abs() / (1.0 + f.abs()));
    }
    Ok(worst)
}

/// Outcome of testing both sign conventions of Case 1 against the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignAudit {
    pub tolerance: f64,
    pub derived_residual: Option<f64>,
    pub paper_literal_residual: Option<f64>,
    /// Constant forcing R = f1·v + f2·v² + f3·v³ left by the shift v at
    /// washout; Case 1 can only solve the model when it is zero.
    pub forcing_defect: f64,
    pub passing: Vec<SignConvention>,
    pub notes: Vec<String>,
}

pub fn sign_audit(k: &AbelConstants, v0: f64, tol: f64) -> SignAudit {
    let mut audit = SignAudit {
        tolerance: tol,
        derived_residual: None,
        paper_literal_residual: None,
        forcing_defect: abel_rhs_time(0.0, k.shift(SignConvention::Derived), k),
        passing: Vec::new(),
        notes: Vec::new(),
    };
    for conv in [SignConvention::Derived, SignConvention::PaperLiteral] {
        let r = fit_integration_constants(k, Case::Case1, conv, v0, 0.0).and_then(|ic| case1_solution(k, &ic, conv));
        let slot = match r {
            Ok(sol) => Some(sol.sampled_residual),
            Err(e) => {
                audit.notes.push(format!("{}: {e}", conv.label()));
                None
            }
        };
        if slot.is_some_and(|r| r <= tol) {
            audit.passing.push(conv);
        }
        match conv {
            SignConvention::Derived => audit.derived_residual = slot,
            SignConvention::PaperLiteral => audit.paper_literal_residual = slot,
        }
    }
    audit
}
