//! Scenario runner behind the `abelgas` binary: executes routes, compares
//! them, and writes CSVs, a plot script and a report.

pub mod compare;
pub mod csv_io;
pub mod report;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::abel::{abel_rhs_time, abel_rhs_w, derive_constants, substrate_to_v, v_to_substrate, AbelConstants, SignConvention};
use crate::ad_system::{check_lower_upper, make_envelopes, rhs_full, rhs_subsystem, rhs_upper_s1, EnvelopeTrajectories, ViolationKind};
use crate::canonical::closed_form::{
    case1_solution, case2_solution, fit_integration_constants, sign_audit, verify_residual, Case, ClosedFormSolution, SignAudit,
};
use crate::config::{load_scenario, AdState, IntegrationConstants, Route, Scenario, STATE_NAMES};
use crate::error::{Error, Result};
use crate::integrator::{solve_dense, DenseSolution, IvpProblem, SolutionSeries};

use compare::{compare_routes, ComparisonTable, Curve, COMMON_POINTS};
use report::{EnvelopeSummary, RouteSummary, RunReport};

pub const SEED_DIR_ENV: &str = "ABELGAS_SEED_DIR";
pub const DEFAULT_TOL_CROSS: f64 = 1e-6;
/// Closed-form pairs are compared at this multiple of the cross tolerance.
pub const CLOSED_FORM_TOL_FACTOR: f64 = 10.0;
pub const RESIDUAL_TOL_CASE1: f64 = 1e-7;
pub const RESIDUAL_TOL_CASE2: f64 = 1e-6;
pub const NONNEGATIVITY_TOL: f64 = 1e-9;
pub const ALKALINITY_TOL: f64 = 1e-8;
pub const ENVELOPE_TOL: f64 = 1e-6;
/// |C0| used when the scenario does not supply integration constants.
pub const DEFAULT_C0: f64 = 0.1;
pub const UPPER_NAME: &str = "s1_upper";
/// Route integration tolerances; the library default of 1e-9 leaves the
/// upper-ode route about 1e-6 off the Abel routes over a 10-day washout run.
pub const ROUTE_REL_TOL: f64 = 1e-11;
pub const ROUTE_ABS_TOL: f64 = 1e-13;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_ROUTE_FAILED: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RunFlags {
    /// Overrides the scenario's route list when set.
    pub routes: Option<Vec<Route>>,
    pub compare: bool,
    pub tol_cross: f64,
    pub paper_literal_signs: bool,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags {
            routes: None,
            compare: false,
            tol_cross: DEFAULT_TOL_CROSS,
            paper_literal_signs: false,
        }
    }
}

impl RunFlags {
    pub fn convention(&self) -> SignConvention {
        if self.paper_literal_signs {
            SignConvention::PaperLiteral
        } else {
            SignConvention::Derived
        }
    }
}

/// One verification with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

enum Source {
    Time(DenseSolution),
    W { sol: DenseSolution, m: f64 },
    Closed(Box<ClosedFormSolution>),
}

/// Output of one route.
pub struct RouteRun {
    pub route: Route,
    pub series: SolutionSeries,
    pub checks: Vec<Check>,
    pub closed_form: Option<ClosedFormSolution>,
    source: Source,
    t_end: f64,
    k_s1: f64,
}

impl RouteRun {
    /// S1⁰(t) as a comparison curve; `None` for routes that do not produce it.
    pub fn curve(&self) -> Option<Curve<'_>> {
        if !self.route.yields_upper_substrate() {
            return None;
        }
        let label = self.route.label();
        let k = self.k_s1;
        Some(match &self.source {
            Source::Time(sol) => {
                let is_v = self.route == Route::AbelTime;
                Curve::new(label, (0.0, self.t_end), move |t| {
                    let y = sol.eval(t).ok_or(Error::OutsideDomain { t, lo: 0.0, hi: self.t_end })?[0];
                    if is_v {
                        v_to_substrate(y, k)
                    } else {
                        Ok(y)
                    }
                })
            }
            Source::W { sol, m } => {
                let m = *m;
                Curve::new(label, (0.0, self.t_end), move |t| {
                    let w = clamp_to(sol, (m * t).exp());
                    let y = sol.eval(w).ok_or(Error::OutsideDomain { t, lo: 0.0, hi: self.t_end })?[0];
                    v_to_substrate(y, k)
                })
            }
            Source::Closed(cf) => {
                let (_, hi) = cf.domain;
                let hi = hi.min(self.t_end);
                let hi = if hi < self.t_end { hi - 1e-9 * hi.abs().max(1.0) } else { hi };
                Curve::new(label, (0.0, hi), move |t| cf.s1_of_t(t))
            }
        })
    }
}

fn clamp_to(sol: &DenseSolution, x: f64) -> f64 {
    let (a, b) = (sol.x0(), sol.x_end());
    x.clamp(a.min(b), a.max(b))
}

fn abel_constants(sc: &Scenario) -> Result<AbelConstants> {
    let ic = sc.integration_constants.unwrap_or(IntegrationConstants {
        c: 0.0,
        c0: DEFAULT_C0,
        c1: 1.0,
        c2: 0.0,
        c3: 0.0,
    });
    derive_constants(&sc.params, sc.initial_state.x1, sc.gamma, &ic)
}

/// Integrates or evaluates one route on the scenario's output grid.
pub fn execute_route(sc: &Scenario, route: Route, conv: SignConvention) -> Result<RouteRun> {
    let p = sc.params;
    let grid = sc.output_grid();
    let x0 = sc.initial_state;
    let upper = [UPPER_NAME];
    let run = |series: SolutionSeries, checks: Vec<Check>, closed_form, source| RouteRun {
        route,
        series,
        checks,
        closed_form,
        source,
        t_end: sc.t_end,
        k_s1: p.k_s1,
    };
    match route {
        Route::FullSystem => {
            let prob = IvpProblem::new(
                |_t, y: &[f64], dy: &mut [f64]| {
                    dy.copy_from_slice(&rhs_full(&AdState::from_slice(y), &p)?.to_array());
                    Ok(())
                },
                0.0,
                x0.to_array().to_vec(),
                sc.t_end,
            );
            let sol = solve_dense(&prob.tolerances(ROUTE_REL_TOL, ROUTE_ABS_TOL))?;
            let series = sol.sample(&grid, &STATE_NAMES, Some(route))?;
            let checks = full_system_checks(&series, &x0, &p);
            Ok(run(series, checks, None, Source::Time(sol)))
        }
        Route::Subsystem => {
            let prob = IvpProblem::new(
                |_t, y: &[f64], dy: &mut [f64]| {
                    let (a, b) = rhs_subsystem(y[0], y[1], &p)?;
                    dy[0] = a;
                    dy[1] = b;
                    Ok(())
                },
                0.0,
                vec![x0.x1, x0.s1],
                sc.t_end,
            );
            let sol = solve_dense(&prob.tolerances(ROUTE_REL_TOL, ROUTE_ABS_TOL))?;
            let series = sol.sample(&grid, &["x1", "s1"], Some(route))?;
            Ok(run(series, Vec::new(), None, Source::Time(sol)))
        }
        Route::UpperOde => {
            let env = make_envelopes(x0.x1, sc.gamma, &p)?;
            let prob = IvpProblem::new(
                |t, y: &[f64], dy: &mut [f64]| {
                    dy[0] = rhs_upper_s1(t, y[0], &env, &p)?;
                    Ok(())
                },
                0.0,
                vec![x0.s1],
                sc.t_end,
            );
            let sol = solve_dense(&prob.tolerances(ROUTE_REL_TOL, ROUTE_ABS_TOL))?;
            let series = sol.sample(&grid, &upper, Some(route))?;
            Ok(run(series, Vec::new(), None, Source::Time(sol)))
        }
        Route::AbelTime => {
            let k = abel_constants(sc)?;
            let prob = IvpProblem::new(
                |t, y: &[f64], dy: &mut [f64]| {
                    dy[0] = abel_rhs_time(t, y[0], &k);
                    Ok(())
                },
                0.0,
                vec![substrate_to_v(x0.s1, p.k_s1)?],
                sc.t_end,
            );
            let sol = solve_dense(&prob.tolerances(ROUTE_REL_TOL, ROUTE_ABS_TOL))?;
            let values = grid
                .iter()
                .map(|&t| Ok(vec![v_to_substrate(sol.eval(t).expect("inside")[0], p.k_s1)?]))
                .collect::<Result<Vec<_>>>()?;
            let mut series = SolutionSeries::new(vec![UPPER_NAME.into()], grid.clone(), values, Some(route))?;
            series.diagnostics = sol.diagnostics;
            Ok(run(series, Vec::new(), None, Source::Time(sol)))
        }
        Route::AbelW => {
            let k = abel_constants(sc)?;
            let w_end = (k.m * sc.t_end).exp();
            let prob = IvpProblem::new(
                |w, y: &[f64], dy: &mut [f64]| {
                    dy[0] = abel_rhs_w(w, y[0], &k)?;
                    Ok(())
                },
                1.0,
                vec![substrate_to_v(x0.s1, p.k_s1)?],
                w_end,
            );
            let sol = solve_dense(&prob.tolerances(ROUTE_REL_TOL, ROUTE_ABS_TOL))?;
            let values = grid
                .iter()
                .map(|&t| {
                    let w = clamp_to(&sol, (k.m * t).exp());
                    Ok(vec![v_to_substrate(sol.eval(w).expect("clamped")[0], p.k_s1)?])
                })
                .collect::<Result<Vec<_>>>()?;
            let mut series = SolutionSeries::new(vec![UPPER_NAME.into()], grid.clone(), values, Some(route))?;
            series.diagnostics = sol.diagnostics;
            Ok(run(series, Vec::new(), None, Source::W { sol, m: k.m }))
        }
        Route::Case1 | Route::Case2 => {
            let case = if route == Route::Case1 { Case::Case1 } else { Case::Case2 };
            let k = abel_constants(sc)?;
            let ic = match sc.integration_constants {
                Some(ic) => ic,
                None => fit_integration_constants(&k, case, conv, substrate_to_v(x0.s1, p.k_s1)?, DEFAULT_C0)?,
            };
            let k = derive_constants(&p, x0.x1, sc.gamma, &ic)?;
            let cf = match case {
                Case::Case1 => case1_solution(&k, &ic, conv)?,
                Case::Case2 => case2_solution(&k, &ic, conv)?,
            };
            let near_zero = |t: f64| cf.excluded.iter().any(|z| (z - t).abs() < 1e-9 * t.abs().max(1.0));
            let inside: Vec<f64> = grid.iter().copied().filter(|&t| cf.contains(t) && !near_zero(t)).collect();
            if inside.is_empty() {
                return Err(Error::EmptyDomain(format!("{} domain misses the output grid", route.label())));
            }
            let values = inside
                .iter()
                .map(|&t| Ok(vec![cf.s1_of_t(t)?]))
                .collect::<Result<Vec<_>>>()?;
            let series = SolutionSeries::new(vec![UPPER_NAME.into()], inside.clone(), values, Some(route))?;
            let hi = cf.domain.1;
            let check_grid: Vec<f64> = inside
                .iter()
                .copied()
                .filter(|&t| !hi.is_finite() || t <= 0.95 * hi)
                .collect();
            let tol = match case {
                Case::Case1 => RESIDUAL_TOL_CASE1,
                Case::Case2 => RESIDUAL_TOL_CASE2,
            };
            let residual = verify_residual(&cf, &k, &check_grid)?;
            let checks = vec![Check::at_most(format!("{} residual", route.label()), residual, tol)];
            Ok(run(series, checks, Some(cf.clone()), Source::Closed(Box::new(cf))))
        }
    }
}

fn full_system_checks(series: &SolutionSeries, x0: &AdState, p: &crate::config::ModelParams) -> Vec<Check> {
    let mut lowest = f64::INFINITY;
    let mut alk: f64 = 0.0;
    for (t, row) in series.grid.iter().zip(&series.values) {
        let s = AdState::from_slice(row);
        lowest = lowest.min(s.x1).min(s.x2).min(s.s1).min(s.s2).min(s.f_m);
        let exact = p.a_in + (x0.a - p.a_in) * (-p.d * t).exp();
        alk = alk.max((s.a - exact).abs());
    }
    vec![
        Check {
            name: "full-system nonnegativity (min of x1, x2, s1, s2, f_m)".into(),
            value: lowest,
            tolerance: -NONNEGATIVITY_TOL,
            passed: lowest >= -NONNEGATIVITY_TOL,
        },
        Check::at_most("full-system alkalinity vs closed form", alk, ALKALINITY_TOL),
    ]
}

const VIOLATION_KINDS: [ViolationKind; 8] = [
    ViolationKind::X1Lower,
    ViolationKind::X1Upper,
    ViolationKind::S1Lower,
    ViolationKind::S1Upper,
    ViolationKind::X1Order,
    ViolationKind::S1Order,
    ViolationKind::X1Initial,
    ViolationKind::S1Initial,
];

/// Envelope construction and lower/upper check on a grid of step ≤ 0.01.
pub fn envelope_check(sc: &Scenario) -> EnvelopeSummary {
    let h = sc.output_step.min(0.01);
    let n = (sc.t_end / h).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| i as f64 * sc.t_end / n as f64).collect();
    let outcome = EnvelopeTrajectories::integrate(sc.initial_state.x1, sc.initial_state.s1, sc.gamma, &sc.params, &grid)
        .and_then(|traj| check_lower_upper(&traj, &sc.params, ENVELOPE_TOL));
    match outcome {
        Ok(r) => EnvelopeSummary {
            passed: Some(r.passed()),
            points_checked: r.points_checked,
            degenerate: r.degenerate,
            violations: VIOLATION_KINDS.iter().map(|&k| (format!("{k:?}"), r.count(k))).filter(|(_, c)| *c > 0).collect(),
            first_violation: r.violations.first().map(|v| format!("{:?} at t = {} (excess {:.3e})", v.kind, v.t, v.excess)),
            error: None,
        },
        Err(e) => EnvelopeSummary {
            passed: None,
            points_checked: 0,
            degenerate: false,
            violations: Vec::new(),
            first_violation: None,
            error: Some(e.to_string()),
        },
    }
}

/// Finds the scenario file, falling back to `$ABELGAS_SEED_DIR/<arg>`.
pub fn resolve_scenario_path(arg: &Path) -> Option<PathBuf> {
    if arg.is_file() {
        return Some(arg.to_path_buf());
    }
    let dir = std::env::var_os(SEED_DIR_ENV)?;
    let candidate = Path::new(&dir).join(arg);
    if candidate.is_file() {
        return Some(candidate);
    }
    let with_ext = candidate.with_extension("json");
    with_ext.is_file().then_some(with_ext)
}

fn dedup_routes(routes: &[Route]) -> Vec<Route> {
    let mut out: Vec<Route> = Vec::new();
    for &r in routes {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub message: String,
    pub report: Option<RunReport>,
}

impl RunOutcome {
    fn invalid(message: String) -> Self {
        RunOutcome {
            exit_code: EXIT_INVALID,
            message,
            report: None,
        }
    }
}

/// Runs a scenario file and writes all artifacts into `outdir`.
pub fn run(scenario_arg: &Path, outdir: &Path, flags: &RunFlags) -> RunOutcome {
    let Some(path) = resolve_scenario_path(scenario_arg) else {
        return RunOutcome::invalid(format!("scenario not found: {}", scenario_arg.display()));
    };
    let sc = match load_scenario(&path) {
        Ok(sc) => sc,
        Err(e) => return RunOutcome::invalid(format!("invalid scenario {}: {e}", path.display())),
    };
    if !(flags.tol_cross.is_finite() && flags.tol_cross > 0.0) {
        return RunOutcome::invalid(format!("--tol-cross must be > 0, got {}", flags.tol_cross));
    }
    if let Err(e) = std::fs::create_dir_all(outdir) {
        return RunOutcome::invalid(format!("cannot create {}: {e}", outdir.display()));
    }
    match run_scenario(&sc, outdir, flags) {
        Ok(report) => RunOutcome {
            exit_code: report.exit_code,
            message: report.summary_line(),
            report: Some(report),
        },
        Err(e) => RunOutcome::invalid(format!("cannot write artifacts: {e}")),
    }
}

/// Executes an already validated scenario; errors only on I/O failure.
pub fn run_scenario(sc: &Scenario, outdir: &Path, flags: &RunFlags) -> Result<RunReport> {
    let routes = dedup_routes(flags.routes.as_deref().unwrap_or(&sc.routes));
    let conv = flags.convention();
    let results: Vec<Result<RouteRun>> = std::thread::scope(|s| {
        let handles: Vec<_> = routes.iter().map(|&r| s.spawn(move || execute_route(sc, r, conv))).collect();
        handles.into_iter().map(|h| h.join().expect("route thread panicked")).collect()
    });

    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    let mut any_failed = false;
    let mut csv_files = Vec::new();
    for (route, res) in routes.iter().zip(&results) {
        match res {
            Ok(rr) => {
                let file = format!("{}.csv", route.label());
                csv_io::write_series(&rr.series, outdir.join(&file))?;
                csv_files.push((route.label().to_string(), file.clone(), rr.series.names.clone()));
                checks.extend(rr.checks.iter().cloned());
                summaries.push(RouteSummary::ok(rr, file));
            }
            Err(e) => {
                any_failed = true;
                summaries.push(RouteSummary::failed(*route, e));
            }
        }
    }

    let mut comparison = None;
    let mut comparison_error = None;
    if flags.compare {
        let runs: Vec<&RouteRun> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
        let curves: Vec<Curve<'_>> = runs.iter().filter_map(|r| r.curve()).collect();
        if curves.len() >= 2 {
            match compare_routes(&curves, COMMON_POINTS) {
                Ok(table) => {
                    checks.extend(comparison_checks(&table, flags.tol_cross));
                    comparison = Some(table);
                }
                Err(e) => {
                    any_failed = true;
                    comparison_error = Some(e.to_string());
                }
            }
        } else {
            comparison_error = Some("fewer than two upper-substrate routes succeeded".into());
        }
    }

    let audit: Option<SignAudit> = (sc.initial_state.x1 == 0.0)
        .then(|| abel_constants(sc).ok())
        .flatten()
        .and_then(|k| substrate_to_v(sc.initial_state.s1, sc.params.k_s1).ok().map(|v0| sign_audit(&k, v0, RESIDUAL_TOL_CASE1)));

    let exit_code = if any_failed {
        EXIT_ROUTE_FAILED
    } else if checks.iter().any(|c| !c.passed) {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    };

    let report = RunReport {
        generated_at: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        scenario: sc.clone(),
        requested_routes: routes.clone(),
        compare: flags.compare,
        tol_cross: flags.tol_cross,
        sign_convention: conv,
        routes: summaries,
        checks,
        comparison,
        comparison_error,
        envelope_check: envelope_check(sc),
        sign_audit: audit,
        placeholders: sc.params.placeholders_in_use().iter().map(|s| s.to_string()).collect(),
        exit_code,
    };
    report.write(outdir)?;
    report::write_plot_script(outdir, &csv_files)?;
    Ok(report)
}

fn comparison_checks(table: &ComparisonTable, tol_cross: f64) -> Vec<Check> {
    table
        .pairs
        .iter()
        .map(|p| {
            let closed = [&p.a, &p.b].iter().any(|l| l.parse::<Route>().map(Route::is_closed_form).unwrap_or(false));
            let tol = if closed { CLOSED_FORM_TOL_FACTOR * tol_cross } else { tol_cross };
            Check::at_most(format!("max |{} - {}|", p.a, p.b), p.max_abs, tol)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_params;

    fn scenario(x1: f64, routes: Vec<Route>) -> Scenario {
        Scenario {
            params: default_params(),
            initial_state: AdState {
                x1,
                x2: 0.1,
                s1: 10.0,
                s2: 5.0,
                a: 40.0,
                c: 50.0,
                f_m: 0.0,
            },
            gamma: 1.0,
            t_end: 10.0,
            output_step: 0.1,
            integration_constants: None,
            routes,
        }
    }

    #[test]
    fn numeric_routes_agree() {
        let sc = scenario(0.1, vec![Route::UpperOde, Route::AbelTime, Route::AbelW]);
        let runs: Vec<RouteRun> = sc
            .routes
            .iter()
            .map(|&r| execute_route(&sc, r, SignConvention::Derived).unwrap())
            .collect();
        let curves: Vec<Curve<'_>> = runs.iter().filter_map(|r| r.curve()).collect();
        let table = compare_routes(&curves, COMMON_POINTS).unwrap();
        for p in &table.pairs {
            assert!(p.max_abs <= 1e-6, "{p:?}");
        }
    }

    #[test]
    fn full_system_route_checks() {
        let sc = scenario(0.1, vec![Route::FullSystem]);
        let rr = execute_route(&sc, Route::FullSystem, SignConvention::Derived).unwrap();
        assert_eq!(rr.series.names.len(), 7);
        assert!(rr.curve().is_none());
        assert!(rr.checks.iter().all(|c| c.passed), "{:?}", rr.checks);
    }

    #[test]
    fn closed_form_needs_washout() {
        let sc = scenario(0.1, vec![Route::Case1]);
        assert!(execute_route(&sc, Route::Case1, SignConvention::Derived).is_err());
        let sc = scenario(0.0, vec![Route::Case1]);
        let rr = execute_route(&sc, Route::Case1, SignConvention::Derived).unwrap();
        assert!((rr.series.values[0][0] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn route_list_is_deduplicated() {
        assert_eq!(
            dedup_routes(&[Route::Case1, Route::UpperOde, Route::Case1]),
            vec![Route::Case1, Route::UpperOde]
        );
    }
}
