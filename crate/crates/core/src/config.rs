//! Parameter, state and scenario types plus scenario-file ingestion.
//!
//! Scenario files are JSON objects:
//!
//! ```json
//! {
//!   "params": { "d": 0.395, "alpha": 0.5 },
//!   "initial_state": { "x1": 0.1, "x2": 0.1, "s1": 10, "s2": 5, "a": 50, "c": 50, "f_m": 0 },
//!   "gamma": 1.0,
//!   "t_end": 10.0,
//!   "output_step": 0.1,
//!   "routes": ["upper-ode", "abel-time", "abel-w"]
//! }
//! ```
//!
//! Missing parameters take their default values; unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate, yield and inflow constants of the seven-state digestion model.
///
/// Units are carried as documentation only (see [`PARAM_UNITS`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub mu1max: f64,
    pub mu2max: f64,
    pub k_s1: f64,
    pub k_s2: f64,
    pub k_i2: f64,
    /// Dilution rate.
    pub d: f64,
    /// Process heterogeneity: 0 is a fixed bed, 1 a CSTR.
    pub alpha: f64,
    pub s1_in: f64,
    pub s2_in: f64,
    pub a_in: f64,
    pub c_in: f64,
    pub k_la: f64,
    /// K_H·P_C.
    pub b: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        default_params()
    }
}

/// Reference acidogenesis values, with labelled placeholders for everything
/// the reference set leaves out (see [`PLACEHOLDER_PARAMS`]).
pub fn default_params() -> ModelParams {
    ModelParams {
        alpha: 0.5,
        d: 0.395,
        s1_in: 10.0,
        k_s1: 12.1,
        mu1max: 1.2,
        k1: 23.2,
        // placeholders
        mu2max: 1.0,
        k_s2: 1.0,
        k_i2: 1.0,
        k2: 1.0,
        k3: 1.0,
        k4: 1.0,
        k5: 1.0,
        k6: 1.0,
        k_la: 1.0,
        s2_in: 5.0,
        a_in: 50.0,
        c_in: 50.0,
        b: 50.0,
    }
}

/// Parameters whose defaults are demo placeholders rather than published values.
pub const PLACEHOLDER_PARAMS: [&str; 13] = [
    "mu2max", "k_s2", "k_i2", "k2", "k3", "k4", "k5", "k6", "k_la", "s2_in", "a_in", "c_in", "b",
];

/// Documentation-level units per parameter name.
pub const PARAM_UNITS: [(&str, &str); 19] = [
    ("mu1max", "1/d"),
    ("mu2max", "1/d"),
    ("k_s1", "g/l"),
    ("k_s2", "mmol/l"),
    ("k_i2", "mmol/l"),
    ("d", "1/d"),
    ("alpha", "-"),
    ("s1_in", "g/l"),
    ("s2_in", "mmol/l"),
    ("a_in", "mmol/l"),
    ("c_in", "mmol/l"),
    ("k_la", "1/d"),
    ("b", "mmol/l"),
    ("k1", "-"),
    ("k2", "-"),
    ("k3", "-"),
    ("k4", "-"),
    ("k5", "-"),
    ("k6", "-"),
];

/// Reported standard deviations of the reference parameters. Missing
/// entries are kept as `None`. Metadata only; nothing reads these.
pub const REFERENCE_SD: [(&str, Option<f64>); 6] = [
    ("alpha", Some(0.4)),
    ("d", Some(0.135)),
    ("s1_in", Some(6.4)),
    ("k_s1", Some(20.62)),
    ("mu1max", None),
    ("k1", None),
];

impl ModelParams {
    pub fn named_values(&self) -> [(&'static str, f64); 19] {
        [
            ("mu1max", self.mu1max),
            ("mu2max", self.mu2max),
            ("k_s1", self.k_s1),
            ("k_s2", self.k_s2),
            ("k_i2", self.k_i2),
            ("d", self.d),
            ("alpha", self.alpha),
            ("s1_in", self.s1_in),
            ("s2_in", self.s2_in),
            ("a_in", self.a_in),
            ("c_in", self.c_in),
            ("k_la", self.k_la),
            ("b", self.b),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("k5", self.k5),
            ("k6", self.k6),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named_values() {
            if !value.is_finite() {
                return Err(Error::validation(name, format!("must be finite, got {value}")));
            }
            if name == "alpha" {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::validation(name, format!("must lie in [0, 1], got {value}")));
                }
            } else if value <= 0.0 {
                return Err(Error::validation(name, format!("must be > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Placeholder parameters still sitting at their placeholder value.
    pub fn placeholders_in_use(&self) -> Vec<&'static str> {
        let defaults = default_params().named_values();
        self.named_values()
            .iter()
            .zip(defaults.iter())
            .filter(|((name, v), (_, dv))| PLACEHOLDER_PARAMS.contains(name) && v == dv)
            .map(|((name, _), _)| *name)
            .collect()
    }
}

/// State of the seven-compartment model.
///
/// Components may be negative: envelope trajectories leave the physical
/// domain, so non-negativity is a predicate ([`AdState::is_physical`]) rather
/// than a construction rule.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdState {
    /// Acidogenic biomass, g/l.
    pub x1: f64,
    /// Methanogenic biomass, g/l.
    pub x2: f64,
    /// Organic substrate, g/l.
    pub s1: f64,
    /// Volatile fatty acids, mmol/l.
    pub s2: f64,
    /// Alkalinity, mmol/l.
    pub a: f64,
    /// Total inorganic carbon, mmol/l.
    pub c: f64,
    /// Methane, mmol/l.
    pub f_m: f64,
}

pub const STATE_NAMES: [&str; 7] = ["x1", "x2", "s1", "s2", "a", "c", "f_m"];

impl AdState {
    pub fn to_array(self) -> [f64; 7] {
        [self.x1, self.x2, self.s1, self.s2, self.a, self.c, self.f_m]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        AdState {
            x1: y[0],
            x2: y[1],
            s1: y[2],
            s2: y[3],
            a: y[4],
            c: y[5],
            f_m: y[6],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn is_physical(&self) -> bool {
        self.is_finite() && self.to_array().iter().all(|&v| v >= 0.0)
    }
}

/// Free constants of the closed-form solution families.
///
/// `c` is the radicand constant C, unrelated to the inorganic-carbon state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConstants {
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub c3: f64,
}

impl IntegrationConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("c0", self.c0), ("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !v.is_finite() {
                return Err(Error::validation(
                    format!("integration_constants.{name}"),
                    "must be finite",
                ));
            }
        }
        if self.c1 == 0.0 {
            return Err(Error::validation("integration_constants.c1", "must be nonzero"));
        }
        Ok(())
    }
}

/// A named solution route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    FullSystem,
    Subsystem,
    UpperOde,
    AbelTime,
    AbelW,
    Case1,
    Case2,
}

impl Route {
    pub const ALL: [Route; 7] = [
        Route::FullSystem,
        Route::Subsystem,
        Route::UpperOde,
        Route::AbelTime,
        Route::AbelW,
        Route::Case1,
        Route::Case2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Route::FullSystem => "full-system",
            Route::Subsystem => "subsystem",
            Route::UpperOde => "upper-ode",
            Route::AbelTime => "abel-time",
            Route::AbelW => "abel-w",
            Route::Case1 => "case1",
            Route::Case2 => "case2",
        }
    }

    /// Whether the route produces the upper substrate solution S₁⁰(t).
    pub fn yields_upper_substrate(self) -> bool {
        !matches!(self, Route::FullSystem | Route::Subsystem)
    }

    pub fn is_closed_form(self) -> bool {
        matches!(self, Route::Case1 | Route::Case2)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Route::ALL
            .iter()
            .copied()
            .find(|r| r.label() == s.trim())
            .ok_or_else(|| Error::validation("routes", format!("unknown route `{s}`")))
    }
}

impl Serialize for Route {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Route {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_routes() -> Vec<Route> {
    vec![Route::UpperOde, Route::AbelTime, Route::AbelW]
}

/// A complete, validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub params: ModelParams,
    pub initial_state: AdState,
    /// Envelope margin Γ (g/l).
    pub gamma: f64,
    pub t_end: f64,
    pub output_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration_constants: Option<IntegrationConstants>,
    #[serde(default = "default_routes")]
    pub routes: Vec<Route>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.initial_state.is_finite() {
            return Err(Error::validation("initial_state", "all components must be finite"));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::validation("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::validation("t_end", format!("must be > 0, got {}", self.t_end)));
        }
        if !(self.output_step.is_finite() && self.output_step > 0.0) {
            return Err(Error::validation(
                "output_step",
                format!("must be > 0, got {}", self.output_step),
            ));
        }
        if self.output_step > self.t_end {
            return Err(Error::validation("output_step", "must not exceed t_end"));
        }
        if let Some(ic) = &self.integration_constants {
            ic.validate()?;
        }
        Ok(())
    }

    /// Output grid 0, h, 2h, ... up to and including `t_end`.
    pub fn output_grid(&self) -> Vec<f64> {
        let n = (self.t_end / self.output_step).floor() as usize;
        let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 * self.output_step).collect();
        let last = *grid.last().unwrap();
        if self.t_end - last > 1e-12 * self.t_end {
            grid.push(self.t_end);
        } else if let Some(l) = grid.last_mut() {
            *l = self.t_end;
        }
        grid
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_json(&text)
}

pub fn write_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json()).map_err(|e| Error::io(path, e))
}
