//! Run report in two renderings: plain text and JSON. Both are deterministic
//! apart from the `generated_at` line.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::abel::SignConvention;
use crate::canonical::closed_form::SignAudit;
use crate::config::{Route, Scenario};
use crate::error::{Error, Result};
use crate::integrator::Diagnostics;

use super::compare::ComparisonTable;
use super::csv_io::format_number;
use super::{Check, RouteRun};

pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const PLOT_SCRIPT: &str = "plot_routes.py";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormSummary {
    pub domain: (f64, f64),
    pub excluded: Vec<f64>,
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub gamma_underflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteSummary {
    pub route: Route,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedFormSummary>,
}

impl RouteSummary {
    pub(crate) fn ok(run: &RouteRun, csv: String) -> Self {
        let numeric = !run.route.is_closed_form();
        RouteSummary {
            route: run.route,
            ok: true,
            error: None,
            csv: Some(csv),
            points: run.series.len(),
            diagnostics: numeric.then_some(run.series.diagnostics),
            closed_form: run.closed_form.as_ref().map(|cf| ClosedFormSummary {
                domain: cf.domain,
                excluded: cf.excluded.clone(),
                c: cf.constants.c,
                c0: cf.constants.c0,
                c1: cf.constants.c1,
                c2: cf.constants.c2,
                c3: cf.constants.c3,
                gamma_underflow: cf.gamma_underflow,
            }),
        }
    }

    pub(crate) fn failed(route: Route, e: &Error) -> Self {
        RouteSummary {
            route,
            ok: false,
            error: Some(e.to_string()),
            csv: None,
            points: 0,
            diagnostics: None,
            closed_form: None,
        }
    }
}

/// Lower/upper-solution check of the explicit envelopes. Informational.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSummary {
    pub passed: Option<bool>,
    pub points_checked: usize,
    pub degenerate: bool,
    pub violations: Vec<(String, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
    pub scenario: Scenario,
    pub requested_routes: Vec<Route>,
    pub compare: bool,
    pub tol_cross: f64,
    pub sign_convention: SignConvention,
    pub routes: Vec<RouteSummary>,
    pub checks: Vec<Check>,
    pub comparison: Option<ComparisonTable>,
    pub comparison_error: Option<String>,
    pub envelope_check: EnvelopeSummary,
    pub sign_audit: Option<SignAudit>,
    pub placeholders: Vec<String>,
    pub exit_code: i32,
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_else(|| "n/a".into())
}

impl RunReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn summary_line(&self) -> String {
        let failed_routes = self.routes.iter().filter(|r| !r.ok).count();
        let failed = self.failed_checks().count();
        format!(
            "exit {}: {} route(s) run, {} failed; {} of {} checks failed",
            self.exit_code,
            self.routes.len(),
            failed_routes,
            failed,
            self.checks.len()
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "abelgas run report");
        let _ = writeln!(s, "generated_at: {}", self.generated_at);
        let _ = writeln!(s);
        let sc = &self.scenario;
        let _ = writeln!(
            s,
            "scenario: t_end = {}, output_step = {}, gamma = {}, x1(0) = {}, s1(0) = {}",
            format_number(sc.t_end),
            format_number(sc.output_step),
            format_number(sc.gamma),
            format_number(sc.initial_state.x1),
            format_number(sc.initial_state.s1)
        );
        let _ = writeln!(s, "sign convention: {}", self.sign_convention.label());
        if self.placeholders.is_empty() {
            let _ = writeln!(s, "placeholder parameters: none");
        } else {
            let _ = writeln!(s, "placeholder parameters: {}", self.placeholders.join(", "));
        }

        let _ = writeln!(s, "\nroutes:");
        for r in &self.routes {
            if r.ok {
                let _ = write!(s, "  {:<12} ok      {} points -> {}", r.route.label(), r.points, r.csv.as_deref().unwrap_or(""));
                if let Some(d) = &r.diagnostics {
                    let _ = write!(s, " (steps {}, rejected {}, rhs evals {})", d.steps, d.rejected, d.evaluations);
                }
                let _ = writeln!(s);
                if let Some(cf) = &r.closed_form {
                    let _ = writeln!(
                        s,
                        "               domain ({}, {}), C = {}, C0 = {}, C1 = {}, C2 = {}, C3 = {}",
                        format_number(cf.domain.0),
                        format_number(cf.domain.1),
                        format_number(cf.c),
                        format_number(cf.c0),
                        format_number(cf.c1),
                        format_number(cf.c2),
                        format_number(cf.c3)
                    );
                    if !cf.excluded.is_empty() {
                        let ex: Vec<String> = cf.excluded.iter().map(|&x| format_number(x)).collect();
                        let _ = writeln!(s, "               excluded zeros: {}", ex.join(", "));
                    }
                    if cf.gamma_underflow {
                        let _ = writeln!(s, "               incomplete gamma flushed to zero somewhere on the grid");
                    }
                }
            } else {
                let _ = writeln!(s, "  {:<12} FAILED  {}", r.route.label(), r.error.as_deref().unwrap_or(""));
            }
        }

        if let Some(t) = &self.comparison {
            let _ = writeln!(s, "\ncomparison, {} points per pair over the pair's shared interval:", t.points);
            for p in &t.pairs {
                let _ = writeln!(
                    s,
                    "  {:<12} {:<12} [{}, {}]  max {:.6e}  rms {:.6e}",
                    p.a,
                    p.b,
                    format_number(p.lo),
                    format_number(p.hi),
                    p.max_abs,
                    p.rms
                );
            }
        }
        if let Some(e) = &self.comparison_error {
            let _ = writeln!(s, "\ncomparison not available: {e}");
        }

        let _ = writeln!(s, "\nchecks:");
        if self.checks.is_empty() {
            let _ = writeln!(s, "  (none)");
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  {} {}: {:.6e} (tolerance {:.1e})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            );
        }

        let e = &self.envelope_check;
        let _ = writeln!(s, "\nlower/upper-solution check (informational):");
        match (e.passed, &e.error) {
            (_, Some(err)) => {
                let _ = writeln!(s, "  not evaluated: {err}");
            }
            (Some(p), None) => {
                let _ = writeln!(
                    s,
                    "  {} over {} points{}",
                    if p { "holds" } else { "violated" },
                    e.points_checked,
                    if e.degenerate { " (degenerate bracket)" } else { "" }
                );
                for (kind, n) in &e.violations {
                    let _ = writeln!(s, "  {kind}: {n} point(s)");
                }
                if let Some(f) = &e.first_violation {
                    let _ = writeln!(s, "  first: {f}");
                }
            }
            (None, None) => {}
        }

        if let Some(a) = &self.sign_audit {
            let _ = writeln!(s, "\nsign audit of case1 (tolerance {:.1e}):", a.tolerance);
            let _ = writeln!(s, "  derived residual:       {}", opt(a.derived_residual));
            let _ = writeln!(s, "  paper-literal residual: {}", opt(a.paper_literal_residual));
            let _ = writeln!(s, "  forcing defect at the shift: {}", format_number(a.forcing_defect));
            let passing: Vec<&str> = a.passing.iter().map(|c| c.label()).collect();
            let _ = writeln!(
                s,
                "  passing: {}",
                if passing.is_empty() { "none".to_string() } else { passing.join(", ") }
            );
            for n in &a.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }

        let _ = writeln!(s, "\n{}", self.summary_line());
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, outdir: &Path) -> Result<()> {
        for (name, body) in [(REPORT_TXT, self.to_text()), (REPORT_JSON, self.to_json() + "\n")] {
            let path = outdir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Writes a matplotlib script that plots every CSV of the run.
/// `files` holds (route label, csv file name, column names).
pub fn write_plot_script(outdir: &Path, files: &[(String, String, Vec<String>)]) -> Result<()> {
    let mut s = String::new();
    s.push_str("# Plots the CSV files of an abelgas run. Usage: python plot_routes.py\n");
    s.push_str("import csv\nimport pathlib\n\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    s.push_str("HERE = pathlib.Path(__file__).resolve().parent\n\n");
    s.push_str("FILES = [\n");
    for (label, file, cols) in files {
        let cols: Vec<String> = cols.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(s, "    ({label:?}, {file:?}, [{}]),", cols.join(", "));
    }
    s.push_str("]\n\n");
    s.push_str(
        r#"
def load(name):
    with open(HERE / name, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    cols = list(zip(*[[float(x) for x in r] for r in body])) if body else [[] for _ in header]
    return dict(zip(header, cols))


def main():
    upper = [(label, load(f)) for label, f, cols in FILES if "s1_upper" in cols]
    if upper:
        fig, ax = plt.subplots()
        for label, data in upper:
            ax.plot(data["t"], data["s1_upper"], label=label)
        ax.set_xlabel("t (d)")
        ax.set_ylabel("S1 upper (g/l)")
        ax.legend()
        fig.savefig(HERE / "s1_upper.png", dpi=150)
    for label, f, cols in FILES:
        if "s1_upper" in cols:
            continue
        data = load(f)
        fig, ax = plt.subplots()
        for c in cols:
            ax.plot(data["t"], data[c], label=c)
        ax.set_xlabel("t (d)")
        ax.set_title(label)
        ax.legend()
        fig.savefig(HERE / f"{label}.png", dpi=150)


if __name__ == "__main__":
    main()
"#,
    );
    let path = outdir.join(PLOT_SCRIPT);
    std::fs::write(&path, s).map_err(|e| Error::io(&path, e))
}
