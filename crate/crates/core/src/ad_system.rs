//! Right-hand sides of the seven-state digestion model and of its
//! acidogenesis subsystem, plus the explicit biomass envelopes and the
//! substrate ODEs they drive.

use crate::config::{AdState, ModelParams};
use crate::error::{Error, Result};
use crate::integrator::{solve_dense, IvpProblem};
use crate::kinetics::{haldane, monod};
use crate::numdiff::derivative_on_grid;

/// Time derivative of the full state (components in per-day units).
pub fn rhs_full(state: &AdState, p: &ModelParams) -> Result<AdState> {
    let mu1 = monod(state.s1, p.mu1max, p.k_s1)?;
    let mu2 = haldane(state.s2, p.mu2max, p.k_s2, p.k_i2)?;
    let r1 = mu1 * state.x1;
    let r2 = mu2 * state.x2;
    Ok(AdState {
        x1: (mu1 - p.alpha * p.d) * state.x1,
        x2: (mu2 - p.alpha * p.d) * state.x2,
        s1: p.d * (p.s1_in - state.s1) - p.k1 * r1,
        s2: p.d * (p.s2_in - state.s2) + p.k2 * r1 - p.k3 * r2,
        a: p.d * (p.a_in - state.a),
        c: p.d * (p.c_in - state.c) + p.k4 * r1 + p.k5 * r2 - p.k_la * (state.c + state.s2 - state.a - p.b),
        f_m: p.k6 * r2,
    })
}

/// (dX1/dt, dS1/dt) of the acidogenesis subsystem.
///
/// Same arithmetic order as components 1 and 3 of [`rhs_full`].
pub fn rhs_subsystem(x1: f64, s1: f64, p: &ModelParams) -> Result<(f64, f64)> {
    let mu1 = monod(s1, p.mu1max, p.k_s1)?;
    let r1 = mu1 * x1;
    Ok(((mu1 - p.alpha * p.d) * x1, p.d * (p.s1_in - s1) - p.k1 * r1))
}

/// Washed-out state: no biomass, all concentrations at their inflow values.
///
/// Only the inorganic-carbon derivative can be nonzero there; it equals
/// `-K_La·(C_in + S2in - A_in - B)` ([`trivial_carbon_residual`]).
pub fn trivial_equilibrium(p: &ModelParams) -> AdState {
    AdState {
        x1: 0.0,
        x2: 0.0,
        s1: p.s1_in,
        s2: p.s2_in,
        a: p.a_in,
        c: p.c_in,
        f_m: 0.0,
    }
}

pub fn trivial_carbon_residual(p: &ModelParams) -> f64 {
    -p.k_la * (p.c_in + p.s2_in - p.a_in - p.b)
}

/// Growth exponent m = μ1max·S1in/(S1in + K_S1) − α·D of the biomass when
/// the substrate is frozen at its inflow value.
pub fn washout_exponent(p: &ModelParams) -> f64 {
    p.mu1max * p.s1_in / (p.s1_in + p.k_s1) - p.alpha * p.d
}

pub fn explicit_x1(t: f64, x1_0: f64, m: f64) -> f64 {
    x1_0 * (m * t).exp()
}

/// Biomass bracket X1(t) ± Γ around the explicit exponential solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePair {
    pub x1_0: f64,
    pub growth_exponent: f64,
    pub gamma: f64,
}

impl EnvelopePair {
    pub fn upper_x1(&self, t: f64) -> f64 {
        explicit_x1(t, self.x1_0, self.growth_exponent) + self.gamma
    }

    pub fn lower_x1(&self, t: f64) -> f64 {
        explicit_x1(t, self.x1_0, self.growth_exponent) - self.gamma
    }
}

pub fn make_envelopes(x1_0: f64, gamma: f64, p: &ModelParams) -> Result<EnvelopePair> {
    if !(gamma > 0.0) {
        return Err(Error::validation("gamma", format!("envelope margin must be > 0, got {gamma}")));
    }
    Ok(EnvelopePair {
        x1_0,
        growth_exponent: washout_exponent(p),
        gamma,
    })
}

fn monod_substrate_term(s: f64, p: &ModelParams, what: &'static str) -> Result<f64> {
    let denom = s + p.k_s1;
    if denom.abs() <= 1e-12 * p.k_s1 {
        return Err(Error::Singularity { what, at: s });
    }
    Ok(p.k1 * p.mu1max * s / denom)
}

/// Upper substrate ODE: consumption driven by the shifted exponential
/// X1(0)·e^{mt} − Γ (the lower biomass envelope), as in the reduction to the
/// Abel equation. The lower envelope may be negative; it never enters the
/// kinetics as a state.
pub fn rhs_upper_s1(t: f64, s1_up: f64, env: &EnvelopePair, p: &ModelParams) -> Result<f64> {
    let uptake = monod_substrate_term(s1_up, p, "upper substrate ODE")?;
    Ok(p.d * (p.s1_in - s1_up) - uptake * env.lower_x1(t))
}

/// Lower substrate ODE: the mirror of [`rhs_upper_s1`], driven by the upper
/// biomass envelope.
pub fn rhs_lower_s1(t: f64, s1_low: f64, env: &EnvelopePair, p: &ModelParams) -> Result<f64> {
    let uptake = monod_substrate_term(s1_low, p, "lower substrate ODE")?;
    Ok(p.d * (p.s1_in - s1_low) - uptake * env.upper_x1(t))
}

/// Sampled candidate lower/upper trajectories for the subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeTrajectories {
    pub grid: Vec<f64>,
    pub x1_lower: Vec<f64>,
    pub x1_upper: Vec<f64>,
    pub s1_lower: Vec<f64>,
    pub s1_upper: Vec<f64>,
    /// Initial data (X1(0), S1(0)) of the bracketed problem.
    pub x1_initial: f64,
    pub s1_initial: f64,
}

impl EnvelopeTrajectories {
    /// Explicit biomass envelopes and the two substrate envelopes obtained
    /// by integrating [`rhs_upper_s1`] and [`rhs_lower_s1`] from `s1_0`.
    /// `grid` must be increasing and start at 0.
    pub fn integrate(x1_0: f64, s1_0: f64, gamma: f64, p: &ModelParams, grid: &[f64]) -> Result<Self> {
        let env = make_envelopes(x1_0, gamma, p)?;
        let t_end = *grid.last().ok_or_else(|| Error::GridTooCoarse("empty grid".into()))?;
        if grid[0] != 0.0 {
            return Err(Error::validation("grid", "must start at t = 0"));
        }
        let upper = IvpProblem::new(
            |t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = rhs_upper_s1(t, y[0], &env, p)?;
                Ok(())
            },
            0.0,
            vec![s1_0],
            t_end,
        )
        .tolerances(1e-11, 1e-13);
        let lower = IvpProblem::new(
            |t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = rhs_lower_s1(t, y[0], &env, p)?;
                Ok(())
            },
            0.0,
            vec![s1_0],
            t_end,
        )
        .tolerances(1e-11, 1e-13);
        let s_up = solve_dense(&upper)?.sample(grid, &["s1_upper"], None)?.column(0);
        let s_lo = solve_dense(&lower)?.sample(grid, &["s1_lower"], None)?.column(0);
        Ok(EnvelopeTrajectories {
            grid: grid.to_vec(),
            x1_lower: grid.iter().map(|&t| env.lower_x1(t)).collect(),
            x1_upper: grid.iter().map(|&t| env.upper_x1(t)).collect(),
            s1_lower: s_lo,
            s1_upper: s_up,
            x1_initial: x1_0,
            s1_initial: s1_0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// Ẋ1₀ − F(t, X1₀, S1) ≤ 0 fails for some S1 in the substrate bracket.
    X1Lower,
    /// Ẋ1⁰ − F(t, X1⁰, S1) ≥ 0 fails.
    X1Upper,
    /// Ṡ1₀ − G(t, X1, S1₀) ≤ 0 fails for some X1 in the biomass bracket.
    S1Lower,
    /// Ṡ1⁰ − G(t, X1, S1⁰) ≥ 0 fails.
    S1Upper,
    X1Order,
    S1Order,
    X1Initial,
    S1Initial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub t: f64,
    pub kind: ViolationKind,
    /// How far past the tolerance the inequality fails.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LowerUpperReport {
    pub violations: Vec<Violation>,
    /// Upper and lower trajectories coincide (zero margin): the ordering holds
    /// with equality and the differential inequalities carry no information.
    pub degenerate: bool,
    pub points_checked: usize,
}

impl LowerUpperReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

fn growth(x1: f64, s1: f64, p: &ModelParams) -> Result<f64> {
    Ok((monod(s1, p.mu1max, p.k_s1)? - p.alpha * p.d) * x1)
}

fn substrate(x1: f64, s1: f64, p: &ModelParams) -> Result<f64> {
    Ok(p.d * (p.s1_in - s1) - p.k1 * monod(s1, p.mu1max, p.k_s1)? * x1)
}

/// Check the lower/upper-solution inequalities on a grid.
///
/// Derivatives of the candidates come from finite-difference stencils. The
/// "for all S1 / for all X1" quantifiers are evaluated at both ends of the
/// respective bracket; F is monotone in S1 and G is affine in X1, so the
/// extremes sit at the ends. Orderings are lower ≤ upper for both components.
pub fn check_lower_upper(traj: &EnvelopeTrajectories, p: &ModelParams, tol: f64) -> Result<LowerUpperReport> {
    let n = traj.grid.len();
    for (name, v) in [
        ("x1_lower", &traj.x1_lower),
        ("x1_upper", &traj.x1_upper),
        ("s1_lower", &traj.s1_lower),
        ("s1_upper", &traj.s1_upper),
    ] {
        if v.len() != n {
            return Err(Error::validation(name, "length differs from grid"));
        }
    }
    let dx_lo = derivative_on_grid(&traj.grid, &traj.x1_lower)?;
    let dx_up = derivative_on_grid(&traj.grid, &traj.x1_upper)?;
    let ds_lo = derivative_on_grid(&traj.grid, &traj.s1_lower)?;
    let ds_up = derivative_on_grid(&traj.grid, &traj.s1_upper)?;

    let mut report = LowerUpperReport {
        points_checked: n,
        ..Default::default()
    };
    let mut push = |index: usize, kind: ViolationKind, excess: f64| {
        if excess > 0.0 {
            report.violations.push(Violation {
                index,
                t: traj.grid[index],
                kind,
                excess,
            });
        }
    };

    let margin_x = |i: usize| traj.x1_upper[i] - traj.x1_lower[i];
    let margin_s = |i: usize| traj.s1_upper[i] - traj.s1_lower[i];
    let degenerate = (0..n).all(|i| margin_x(i).abs() <= tol && margin_s(i).abs() <= tol);

    for i in 0..n {
        let (xl, xu, sl, su) = (traj.x1_lower[i], traj.x1_upper[i], traj.s1_lower[i], traj.s1_upper[i]);
        push(i, ViolationKind::X1Order, xl - xu - tol);
        push(i, ViolationKind::S1Order, sl - su - tol);
        if degenerate {
            continue;
        }
        let s_ends = [sl, su];
        let x_ends = [xl, xu];
        let mut worst = [f64::NEG_INFINITY; 4];
        for &s in &s_ends {
            worst[0] = worst[0].max(dx_lo[i] - growth(xl, s, p)?);
            worst[1] = worst[1].max(growth(xu, s, p)? - dx_up[i]);
        }
        for &x in &x_ends {
            worst[2] = worst[2].max(ds_lo[i] - substrate(x, sl, p)?);
            worst[3] = worst[3].max(substrate(x, su, p)? - ds_up[i]);
        }
        push(i, ViolationKind::X1Lower, worst[0] - tol);
        push(i, ViolationKind::X1Upper, worst[1] - tol);
        push(i, ViolationKind::S1Lower, worst[2] - tol);
        push(i, ViolationKind::S1Upper, worst[3] - tol);
    }
    if n > 0 {
        let (c1, c2) = (traj.x1_initial, traj.s1_initial);
        push(
            0,
            ViolationKind::X1Initial,
            (traj.x1_lower[0] - c1).max(c1 - traj.x1_upper[0]) - tol,
        );
        push(
            0,
            ViolationKind::S1Initial,
            (traj.s1_lower[0] - c2).max(c2 - traj.s1_upper[0]) - tol,
        );
    }
    report.degenerate = degenerate;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_params;
    use approx::assert_relative_eq;

    const MONOD_REF: f64 = 1.2 * 10.0 / 22.1;

    #[test]
    fn trivial_state_derivative() {
        let p = default_params();
        let d = rhs_full(&trivial_equilibrium(&p), &p).unwrap();
        assert_eq!([d.x1, d.x2, d.s1, d.s2, d.a, d.f_m], [0.0; 6]);
        assert_eq!(d.c, -p.k_la * (p.c_in + p.s2_in - p.a_in - p.b));
        assert_eq!(d.c, trivial_carbon_residual(&p));
        // placeholders give C_in + S2in - A_in - B = 50 + 5 - 50 - 50
        assert_eq!(d.c, 45.0);

        let mut balanced = p;
        balanced.b = balanced.c_in + balanced.s2_in - balanced.a_in;
        assert_eq!(rhs_full(&trivial_equilibrium(&balanced), &balanced).unwrap().c, 0.0);
        assert_eq!(trivial_equilibrium(&p).s1, 10.0);
        assert_eq!(trivial_equilibrium(&p).x1, 0.0);
    }

    #[test]
    fn methane_needs_methanogens() {
        let p = default_params();
        let s = AdState { x1: 2.0, x2: 0.0, s1: 3.0, s2: 7.0, a: 1.0, c: 4.0, f_m: 9.0 };
        assert_eq!(rhs_full(&s, &p).unwrap().f_m, 0.0);
    }

    #[test]
    fn growth_at_inflow_substrate() {
        let p = default_params();
        let s = AdState { x1: 1.0, x2: 0.0, s1: 10.0, s2: 0.0, a: p.a_in, c: p.c_in, f_m: 0.0 };
        let d = rhs_full(&s, &p).unwrap();
        assert_relative_eq!(d.x1, MONOD_REF - 0.1975, max_relative = 1e-14);
        assert_relative_eq!(d.x1, 0.345_486_425_339_366_5, max_relative = 1e-14);
    }

    #[test]
    fn subsystem_examples() {
        let p = default_params();
        assert_eq!(rhs_subsystem(0.0, p.s1_in, &p).unwrap(), (0.0, 0.0));
        let (dx, _) = rhs_subsystem(0.1, 10.0, &p).unwrap();
        assert_relative_eq!(dx, 0.034_548_642_533_936_65, max_relative = 1e-13);
        let (_, ds) = rhs_subsystem(0.0, 5.0, &p).unwrap();
        assert_relative_eq!(ds, 1.975, max_relative = 1e-15);
    }

    #[test]
    fn subsystem_matches_full_bit_for_bit() {
        let p = default_params();
        for &(x1, s1) in &[(0.0, 0.0), (0.3, 4.2), (2.5, 17.0), (1e-3, 1e-4)] {
            let s = AdState { x1, x2: 0.0, s1, s2: 3.0, a: 20.0, c: 10.0, f_m: 0.0 };
            let full = rhs_full(&s, &p).unwrap();
            let (dx, ds) = rhs_subsystem(x1, s1, &p).unwrap();
            assert_eq!(full.x1.to_bits(), dx.to_bits());
            assert_eq!(full.s1.to_bits(), ds.to_bits());
        }
    }

    #[test]
    fn negative_substrate_propagates() {
        let p = default_params();
        assert!(rhs_subsystem(1.0, -0.1, &p).is_err());
        let s = AdState { s2: -1.0, ..trivial_equilibrium(&p) };
        assert!(rhs_full(&s, &p).is_err());
    }

    #[test]
    fn growth_exponent_cases() {
        let p = default_params();
        assert_relative_eq!(washout_exponent(&p), 0.345_486_425_339_366_5, max_relative = 1e-14);
        let mut q = p;
        q.alpha = 0.0;
        assert_relative_eq!(washout_exponent(&q), MONOD_REF, max_relative = 1e-15);
        q.alpha = 1.0;
        q.d = MONOD_REF;
        assert!(washout_exponent(&q).abs() < 1e-15);
    }

    #[test]
    fn explicit_biomass() {
        assert_eq!(explicit_x1(0.0, 0.37, 5.0), 0.37);
        assert_relative_eq!(explicit_x1(1.0, 0.1, 0.345_486_42), 0.1 * 0.345_486_42f64.exp(), max_relative = 1e-15);
        assert_eq!(explicit_x1(12.0, 0.0, 0.3), 0.0);
        // satisfies X' = mX to second order
        let (m, h) = (0.345_486_42, 1e-4);
        for i in 0..50 {
            let t = i as f64 * 0.2;
            let fd = (explicit_x1(t + h, 0.1, m) - explicit_x1(t - h, 0.1, m)) / (2.0 * h);
            assert_relative_eq!(fd, m * explicit_x1(t, 0.1, m), max_relative = 1e-8);
        }
    }

    #[test]
    fn envelope_construction() {
        let p = default_params();
        let env = make_envelopes(0.1, 1.0, &p).unwrap();
        assert_relative_eq!(env.lower_x1(0.0), -0.9, max_relative = 1e-15);
        assert_relative_eq!(env.upper_x1(0.0), 1.1, max_relative = 1e-15);
        for i in 0..100 {
            let t = i as f64 * 0.1;
            assert_relative_eq!(env.upper_x1(t) - env.lower_x1(t), 2.0, max_relative = 1e-12);
        }
        assert!(make_envelopes(0.1, 0.0, &p).is_err());
    }

    #[test]
    fn upper_substrate_rhs_examples() {
        let p = default_params();
        let env = make_envelopes(0.0, 1.0, &p).unwrap();
        assert_eq!(rhs_upper_s1(3.0, 0.0, &env, &p).unwrap(), p.d * p.s1_in);
        assert_relative_eq!(
            rhs_upper_s1(0.0, 10.0, &env, &p).unwrap(),
            23.2 * 1.2 * 10.0 / 22.1,
            max_relative = 1e-14
        );
        assert_relative_eq!(rhs_upper_s1(0.0, 10.0, &env, &p).unwrap(), 12.597_285_067_873_3, max_relative = 1e-12);
        let cancel = make_envelopes(1.0, 1.0, &p).unwrap();
        assert_relative_eq!(rhs_upper_s1(0.0, 4.0, &cancel, &p).unwrap(), p.d * 6.0, max_relative = 1e-15);
        assert!(matches!(rhs_upper_s1(0.0, -12.1, &env, &p), Err(Error::Singularity { .. })));
    }

    fn linear_trajectories(grid: &[f64], lower: (f64, f64), upper: (f64, f64)) -> EnvelopeTrajectories {
        EnvelopeTrajectories {
            grid: grid.to_vec(),
            x1_lower: grid.iter().map(|_| lower.0).collect(),
            x1_upper: grid.iter().map(|_| upper.0).collect(),
            s1_lower: grid.iter().map(|_| lower.1).collect(),
            s1_upper: grid.iter().map(|_| upper.1).collect(),
            x1_initial: 0.5 * (lower.0 + upper.0),
            s1_initial: 0.5 * (lower.1 + upper.1),
        }
    }

    #[test]
    fn swapped_biomass_bracket_violates_ordering_everywhere() {
        let p = default_params();
        let grid: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let t = linear_trajectories(&grid, (1.0, 1.0), (-1.0, 2.0));
        let r = check_lower_upper(&t, &p, 1e-6).unwrap();
        assert_eq!(r.count(ViolationKind::X1Order), grid.len());
    }

    #[test]
    fn zero_margin_is_degenerate() {
        let p = default_params();
        let grid: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let t = linear_trajectories(&grid, (0.5, 3.0), (0.5, 3.0));
        let r = check_lower_upper(&t, &p, 1e-6).unwrap();
        assert!(r.degenerate);
        assert!(r.passed());
    }

    #[test]
    fn checker_needs_three_points() {
        let p = default_params();
        let t = linear_trajectories(&[0.0, 1.0], (0.0, 1.0), (1.0, 2.0));
        assert!(matches!(check_lower_upper(&t, &p, 1e-6), Err(Error::GridTooCoarse(_))));
    }
    #[test]
    fn washout_regime_envelopes_are_lower_upper_solutions() {
        // m < 0: alpha*D exceeds the growth rate at inflow substrate
        let mut p = default_params();
        p.alpha = 1.0;
        p.d = 1.0;
        assert!(washout_exponent(&p) < 0.0);
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let t = EnvelopeTrajectories::integrate(0.0, 10.0, 1.0, &p, &grid).unwrap();
        let r = check_lower_upper(&t, &p, 1e-6).unwrap();
        assert!(r.passed(), "{:?}", &r.violations[..r.violations.len().min(5)]);
        assert!(!r.degenerate);
    }

    #[test]
    fn growth_regime_biomass_envelopes_fail_the_inequalities() {
        // m > 0 with S1 frozen at S1in gives dX/dt - F(X) = -m*Gamma < 0 for the upper envelope
        let p = default_params();
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let t = EnvelopeTrajectories::integrate(0.1, 10.0, 1.0, &p, &grid).unwrap();
        let r = check_lower_upper(&t, &p, 1e-6).unwrap();
        assert!(r.count(ViolationKind::X1Upper) > 0);
        assert_eq!(r.count(ViolationKind::S1Upper), 0);
        assert_eq!(r.count(ViolationKind::S1Lower), 0);
        assert_eq!(r.count(ViolationKind::X1Order), 0);
        assert_eq!(r.count(ViolationKind::S1Order), 0);
    }
}
