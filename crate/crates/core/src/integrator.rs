//! Explicit adaptive Runge–Kutta integration.
//!
//! Dormand–Prince 5(4) with PI step-size control (Hairer's DOPRI5 controller)
//! and the method's fourth-order continuous extension for dense output.
//! Integration may run leftward (`x_end < x0`).

use crate::config::Route;
use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;

/// An initial value problem y' = f(x, y), y(x0) = y0 on [x0, x_end].
pub struct IvpProblem<F> {
    pub rhs: F,
    pub x0: f64,
    pub y0: Vec<f64>,
    pub x_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl<F> IvpProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    pub fn new(rhs: F, x0: f64, y0: Vec<f64>, x_end: f64) -> Self {
        IvpProblem {
            rhs,
            x0,
            y0,
            x_end,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            max_steps: 1_000_000,
        }
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn dimension(&self) -> usize {
        self.y0.len()
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::validation("tolerance", "rel_tol and abs_tol must be > 0"));
        }
        if self.y0.is_empty() {
            return Err(Error::validation("y0", "dimension must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::validation("max_steps", "must be positive"));
        }
        if !(self.x0.is_finite() && self.x_end.is_finite()) || self.y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("initial point", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted normalized error estimate (≤ 1 means within tolerance).
    pub max_local_error: f64,
}

#[derive(Debug, Clone)]
struct DenseStep {
    x: f64,
    h: f64,
    coef: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval(&self, x: f64, out: &mut [f64]) {
        let theta = (x - self.x) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coef;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }
}

/// Continuous solution over the whole integration interval.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    x0: f64,
    x_end: f64,
    y0: Vec<f64>,
    y_end: Vec<f64>,
    steps: Vec<DenseStep>,
    pub diagnostics: Diagnostics,
}

impl DenseSolution {
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn x_end(&self) -> f64 {
        self.x_end
    }

    pub fn final_state(&self) -> &[f64] {
        &self.y_end
    }

    pub fn dimension(&self) -> usize {
        self.y0.len()
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.x_end >= self.x0 { (self.x0, self.x_end) } else { (self.x_end, self.x0) };
        x >= lo && x <= hi
    }

    /// State at `x`, or `None` outside the integrated interval.
    pub fn eval(&self, x: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dimension()];
        self.eval_into(x, &mut out).then_some(out)
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> bool {
        if !self.contains(x) {
            return false;
        }
        if x == self.x0 || self.steps.is_empty() {
            out.copy_from_slice(&self.y0);
            return true;
        }
        if x == self.x_end {
            out.copy_from_slice(&self.y_end);
            return true;
        }
        let forward = self.x_end > self.x0;
        // steps are ordered along the direction of integration
        let idx = self.steps.partition_point(|s| {
            let end = s.x + s.h;
            if forward { end < x } else { end > x }
        });
        let step = &self.steps[idx.min(self.steps.len() - 1)];
        step.eval(x, out);
        true
    }

    pub fn sample(&self, grid: &[f64], names: &[&str], route: Option<Route>) -> Result<SolutionSeries> {
        check_grid(grid, self.x0, self.x_end)?;
        let mut values = Vec::with_capacity(grid.len());
        for &x in grid {
            values.push(self.eval(x).expect("grid checked against interval"));
        }
        Ok(SolutionSeries {
            names: names.iter().map(|s| s.to_string()).collect(),
            grid: grid.to_vec(),
            values,
            route,
            diagnostics: self.diagnostics,
        })
    }
}

/// Values of one or more named quantities on a strictly monotone grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSeries {
    pub names: Vec<String>,
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub route: Option<Route>,
    pub diagnostics: Diagnostics,
}

impl SolutionSeries {
    pub fn new(names: Vec<String>, grid: Vec<f64>, values: Vec<Vec<f64>>, route: Option<Route>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::validation("series", "grid and values differ in length"));
        }
        if values.iter().any(|v| v.len() != names.len()) {
            return Err(Error::validation("series", "row width does not match names"));
        }
        if !is_strictly_monotone(&grid) {
            return Err(Error::validation("series", "grid must be strictly monotone"));
        }
        Ok(SolutionSeries {
            names,
            grid,
            values,
            route,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[i]).collect()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

pub(crate) fn is_strictly_monotone(grid: &[f64]) -> bool {
    grid.windows(2).all(|w| w[1] > w[0]) || grid.windows(2).all(|w| w[1] < w[0])
}

fn check_grid(grid: &[f64], x0: f64, x_end: f64) -> Result<()> {
    if !is_strictly_monotone(grid) {
        return Err(Error::validation("grid", "must be strictly monotone"));
    }
    let (lo, hi) = if x_end >= x0 { (x0, x_end) } else { (x_end, x0) };
    if let Some(&bad) = grid.iter().find(|&&x| x < lo || x > hi) {
        return Err(Error::validation("grid", format!("point {bad} outside [{lo}, {hi}]")));
    }
    Ok(())
}

/// Integrate and sample at `grid` (which must lie inside [x0, x_end]).
pub fn solve_ivp<F>(problem: &IvpProblem<F>, grid: &[f64], names: &[&str]) -> Result<SolutionSeries>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    check_grid(grid, problem.x0, problem.x_end)?;
    solve_dense(problem)?.sample(grid, names, None)
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], rel: f64, abs: f64) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = abs + rel * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn call<F>(rhs: &F, x: f64, y: &[f64], out: &mut [f64]) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    rhs(x, y, out)
}

fn initial_step<F>(p: &IvpProblem<F>, f0: &[f64], direction: f64, h_max: f64) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = p.y0.len();
    let sk: Vec<f64> = p.y0.iter().map(|y| p.abs_tol + p.rel_tol * y.abs()).collect();
    let dnf: f64 = f0.iter().zip(&sk).map(|(f, s)| (f / s).powi(2)).sum();
    let dny: f64 = p.y0.iter().zip(&sk).map(|(y, s)| (y / s).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(h_max);
    let y1: Vec<f64> = (0..n).map(|i| p.y0[i] + direction * h * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    call(&p.rhs, p.x0 + direction * h, &y1, &mut f1)?;
    let der2 = (0..n).map(|i| ((f1[i] - f0[i]) / sk[i]).powi(2)).sum::<f64>().sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 || !der12.is_finite() {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    Ok((100.0 * h).min(h1).min(h_max))
}

/// Integrate over the whole interval and keep the dense output.
pub fn solve_dense<F>(p: &IvpProblem<F>) -> Result<DenseSolution>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    p.validate()?;
    let n = p.y0.len();
    let mut diag = Diagnostics::default();
    if p.x_end == p.x0 {
        return Ok(DenseSolution {
            x0: p.x0,
            x_end: p.x_end,
            y0: p.y0.clone(),
            y_end: p.y0.clone(),
            steps: Vec::new(),
            diagnostics: diag,
        });
    }
    let direction = (p.x_end - p.x0).signum();
    let h_max = (p.x_end - p.x0).abs();

    let mut x = p.x0;
    let mut y = p.y0.clone();
    let mut k1 = vec![0.0; n];
    call(&p.rhs, x, &y, &mut k1)?;
    diag.evaluations += 1;
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { x });
    }
    let mut h = initial_step(p, &k1, direction, h_max)? * direction;
    diag.evaluations += 1;

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut steps = Vec::new();
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let expo = 0.2 - BETA * 0.75;

    loop {
        if diag.steps + diag.rejected >= p.max_steps {
            return Err(Error::MaxSteps { steps: p.max_steps, x });
        }
        if 0.1 * h.abs() <= x.abs().max(1.0) * f64::EPSILON {
            return Err(Error::StepUnderflow { x, h });
        }
        let last = (x + 1.01 * h - p.x_end) * direction >= 0.0;
        if last {
            h = p.x_end - x;
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        call(&p.rhs, x + C2 * h, &ytmp, &mut k2)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        call(&p.rhs, x + C3 * h, &ytmp, &mut k3)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        call(&p.rhs, x + C4 * h, &ytmp, &mut k4)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        call(&p.rhs, x + C5 * h, &ytmp, &mut k5)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let x_new = if last { p.x_end } else { x + h };
        call(&p.rhs, x_new, &ytmp, &mut k6)?;
        for i in 0..n {
            y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        call(&p.rhs, x_new, &y1, &mut k7)?;
        diag.evaluations += 6;

        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let mut e = error_norm(&err, &y, &y1, p.rel_tol, p.abs_tol);
        if !e.is_finite() || y1.iter().any(|v| !v.is_finite()) || k7.iter().any(|v| !v.is_finite()) {
            e = f64::INFINITY;
        }

        if e <= 1.0 {
            let fac11 = e.powf(expo);
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            fac_old = e.max(1e-4);
            diag.steps += 1;
            diag.max_local_error = diag.max_local_error.max(e);

            let mut coef: [Vec<f64>; 5] = Default::default();
            coef[0] = y.clone();
            coef[1] = (0..n).map(|i| y1[i] - y[i]).collect();
            coef[2] = (0..n).map(|i| h * k1[i] - coef[1][i]).collect();
            coef[3] = (0..n).map(|i| coef[1][i] - h * k7[i] - coef[2][i]).collect();
            coef[4] = (0..n)
                .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                .collect();
            steps.push(DenseStep { x, h, coef });

            std::mem::swap(&mut k1, &mut k7);
            std::mem::swap(&mut y, &mut y1);
            x = x_new;
            if last {
                break;
            }
            if h_new.abs() > h_max {
                h_new = h_max * direction;
            }
            if last_rejected {
                h_new = direction * h_new.abs().min(h.abs());
            }
            last_rejected = false;
            h = h_new;
        } else {
            let shrink = if e.is_finite() { (e.powf(expo) / SAFETY).min(1.0 / FAC_MIN) } else { 1.0 / FAC_MIN };
            h /= shrink;
            diag.rejected += 1;
            last_rejected = true;
        }
    }

    Ok(DenseSolution {
        x0: p.x0,
        x_end: p.x_end,
        y0: p.y0.clone(),
        y_end: y,
        steps,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear(d: f64, a_in: f64) -> impl Fn(f64, &[f64], &mut [f64]) -> Result<()> {
        move |_x, y, dy| {
            dy[0] = -d * y[0] + d * a_in;
            Ok(())
        }
    }

    #[test]
    fn alkalinity_shape_matches_closed_form() {
        let (d, a_in, a0) = (0.395, 50.0, 12.0);
        let p = IvpProblem::new(linear(d, a_in), 0.0, vec![a0], 20.0).tolerances(1e-10, 1e-12);
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let s = solve_ivp(&p, &grid, &["a"]).unwrap();
        let worst = grid
            .iter()
            .zip(&s.values)
            .map(|(&x, v)| (v[0] - (a_in + (a0 - a_in) * (-d * x).exp())).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-9, "max-abs error {worst:e}");
    }

    #[test]
    fn exponential_growth_matches_explicit_solution() {
        let m = 0.345_486_425_339_366_5;
        let p = IvpProblem::new(
            move |_x: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = m * y[0];
                Ok(())
            },
            0.0,
            vec![0.1],
            10.0,
        );
        let sol = solve_dense(&p).unwrap();
        for i in 0..=100 {
            let x = i as f64 * 0.1;
            assert_relative_eq!(sol.eval(x).unwrap()[0], 0.1 * (m * x).exp(), max_relative = 1e-9);
        }
        assert!(sol.diagnostics.max_local_error <= 1.0);
    }

    #[test]
    fn finite_time_blow_up_is_reported() {
        let p = IvpProblem::new(
            |_x: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            vec![1.0],
            2.0,
        );
        match solve_dense(&p) {
            Err(Error::StepUnderflow { x, .. }) | Err(Error::NonFinite { x }) => {
                assert!(x < 1.0 + 1e-3 && x > 0.99, "stopped at {x}")
            }
            other => panic!("expected blow-up detection, got {other:?}"),
        }
    }

    #[test]
    fn leftward_integration_and_return_trip() {
        let f = |x: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0] + 0.1 * x.sin();
            Ok(())
        };
        let fwd = solve_dense(&IvpProblem::new(f, 0.0, vec![1.0, 0.0], 5.0)).unwrap();
        let back = solve_dense(&IvpProblem::new(f, 5.0, fwd.final_state().to_vec(), 0.0)).unwrap();
        for (a, b) in back.final_state().iter().zip([1.0, 0.0]) {
            assert!((a - b).abs() < 10.0 * 1e-9, "{a} vs {b}");
        }
        // leftward dense output is usable on the interior
        let mid = back.eval(2.5).unwrap();
        let mid_fwd = fwd.eval(2.5).unwrap();
        assert!((mid[0] - mid_fwd[0]).abs() < 1e-8);
    }

    #[test]
    fn determinism() {
        let f = |x: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0] * x.cos() + 0.3;
            Ok(())
        };
        let a = solve_dense(&IvpProblem::new(f, 0.0, vec![2.0], 7.0)).unwrap();
        let b = solve_dense(&IvpProblem::new(f, 0.0, vec![2.0], 7.0)).unwrap();
        assert_eq!(a.final_state(), b.final_state());
        assert_eq!(a.diagnostics, b.diagnostics);
    }

    #[test]
    fn rhs_errors_propagate() {
        let p = IvpProblem::new(
            |x: f64, _y: &[f64], _dy: &mut [f64]| {
                if x > 0.5 { Err(Error::domain("test", "boom")) } else { Ok(()) }
            },
            0.0,
            vec![1.0],
            1.0,
        );
        assert!(matches!(solve_dense(&p), Err(Error::Domain { .. })));
    }

    #[test]
    fn max_steps_is_enforced() {
        let p = IvpProblem::new(linear(1.0, 0.0), 0.0, vec![1.0], 1000.0).max_steps(5);
        assert!(matches!(solve_dense(&p), Err(Error::MaxSteps { .. })));
    }

    #[test]
    fn invalid_problem_and_grid() {
        let p = IvpProblem::new(linear(1.0, 0.0), 0.0, vec![1.0], 1.0).tolerances(0.0, 1e-9);
        assert!(solve_dense(&p).is_err());
        let p = IvpProblem::new(linear(1.0, 0.0), 0.0, vec![1.0], 1.0);
        assert!(solve_ivp(&p, &[0.0, 2.0], &["y"]).is_err());
        assert!(solve_ivp(&p, &[0.5, 0.2], &["y"]).is_ok());
        assert!(solve_ivp(&p, &[0.5, 0.5], &["y"]).is_err());
    }
}
