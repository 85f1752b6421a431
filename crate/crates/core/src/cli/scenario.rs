//! JSON scenario files.
//!
//! A document is parsed in two passes: serde checks the shape (unknown keys
//! and wrong types are rejected with the offending path), then the values
//! are validated against the chosen mode and assembled into a
//! [`Scenario`]. Either pass failing yields a [`ScenarioError`] naming the
//! path; nothing is partially accepted.
//!
//! ```json
//! {
//!   "n": 6,
//!   "initial": { "seed": 7, "box": [-15, -15, 15, 15] },
//!   "law": { "mode": "steered", "c": 2, "k_d": 0.005, "theta": "regular",
//!            "d": 10, "motion_params": 0.025 },
//!   "integrator": { "dt": 0.005, "t_end": 300, "method": "rk4" },
//!   "events": [{ "t": 150, "set": { "d": 30 } }],
//!   "output": { "stride": 20 }
//! }
//! ```

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::control::{ControlLaw, Mode, MotionParams};
use crate::geometry::ShapeSpec;
use crate::simulator::{Event, Initial, Integrator, Method, ParameterPatch, Scenario};
use crate::stability::regular_polygon_angle;
use crate::{FormationError, Point};

/// The canonical hexagon scenario shipped with the crate.
pub const HEXAGON_JSON: &str = include_str!("../../scenarios/hexagon.json");

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    /// Dotted path of the offending key, e.g. `law.theta` or `events[0].t`.
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Invalid { path: String, source: ScenarioError },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n: usize,
    initial: InitialFile,
    law: LawFile,
    #[serde(default)]
    integrator: IntegratorFile,
    #[serde(default)]
    events: Vec<EventFile>,
    #[serde(default)]
    output: OutputFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialFile {
    positions: Option<Vec<[f64; 2]>>,
    seed: Option<u64>,
    #[serde(rename = "box")]
    bounds: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawFile {
    mode: Mode,
    c: Option<f64>,
    k_d: Option<f64>,
    theta: Option<ThetaFile>,
    ratios: Option<Vec<f64>>,
    d: Option<f64>,
    motion_params: Option<MotionFile>,
    mismatches: Option<[f64; 2]>,
    distances: Option<[f64; 2]>,
    pin_last: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged, expecting = "a number, a list of numbers or \"regular\"")]
enum ThetaFile {
    Value(f64),
    List(Vec<f64>),
    Keyword(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, expecting = "a number or a list of [mu1, mu2] pairs")]
enum MotionFile {
    Uniform(f64),
    Pairs(Vec<[f64; 2]>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorFile {
    dt: Option<f64>,
    t_end: Option<f64>,
    method: Option<Method>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EventFile {
    t: f64,
    set: PatchFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchFile {
    d: Option<f64>,
    c: Option<f64>,
    k_d: Option<f64>,
    motion_params: Option<MotionFile>,
    mismatches: Option<[f64; 2]>,
    distances: Option<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputFile {
    stride: Option<usize>,
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ScenarioError::at(path, e.into_inner().to_string())
    })?;
    file.into_scenario()
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Read {
        path: shown.clone(),
        source,
    })?;
    parse_scenario(&text).map_err(|source| LoadError::Invalid { path: shown, source })
}

/// The bundled hexagon scenario.
pub fn hexagon() -> Scenario {
    parse_scenario(HEXAGON_JSON).expect("bundled hexagon scenario is valid")
}

/// Maps a library error onto the scenario key it concerns.
fn located(prefix: &str, e: FormationError) -> ScenarioError {
    match &e {
        FormationError::InvalidParameter { name, reason } => {
            ScenarioError::at(format!("{prefix}.{name}"), reason.clone())
        }
        _ => ScenarioError::at(prefix, e.to_string()),
    }
}

fn motion(m: &MotionFile, n: usize, path: &str) -> Result<MotionParams, ScenarioError> {
    let params = match m {
        MotionFile::Uniform(mu) => MotionParams::uniform(n, *mu),
        MotionFile::Pairs(pairs) => {
            if pairs.len() != n {
                return Err(ScenarioError::at(
                    path,
                    format!("expected {n} pairs (one per agent), got {}", pairs.len()),
                ));
            }
            MotionParams::new(pairs.clone())
        }
    };
    params.map_err(|e| ScenarioError::at(path, e.to_string()))
}

fn reject(key: &str, present: bool, mode: Mode) -> Result<(), ScenarioError> {
    if present {
        Err(ScenarioError::at(
            format!("law.{key}"),
            format!("not used by mode `{}`", mode.name()),
        ))
    } else {
        Ok(())
    }
}

fn require<T: Copy>(key: &str, value: Option<T>, mode: Mode) -> Result<T, ScenarioError> {
    value.ok_or_else(|| {
        ScenarioError::at(
            format!("law.{key}"),
            format!("required by mode `{}`", mode.name()),
        )
    })
}

impl LawFile {
    fn theta(&self, n: usize) -> Result<Vec<f64>, ScenarioError> {
        let m = n - 2;
        match &self.theta {
            None => Ok(vec![0.0; m]),
            Some(ThetaFile::Value(t)) => Ok(vec![*t; m]),
            Some(ThetaFile::Keyword(k)) if k == "regular" => Ok(vec![regular_polygon_angle(n); m]),
            Some(ThetaFile::Keyword(k)) => Err(ScenarioError::at(
                "law.theta",
                format!("unknown keyword `{k}`, expected \"regular\""),
            )),
            Some(ThetaFile::List(list)) if list.len() == m => Ok(list.clone()),
            Some(ThetaFile::List(list)) => Err(ScenarioError::at(
                "law.theta",
                format!("expected {m} turn angles for {n} agents, got {}", list.len()),
            )),
        }
    }

    fn build(&self, n: usize) -> Result<ControlLaw, ScenarioError> {
        let mode = self.mode;
        let theta = self.theta(n)?;
        let ratios = match &self.ratios {
            Some(r) if r.len() != n - 1 => {
                return Err(ScenarioError::at(
                    "law.ratios",
                    format!("expected {} ratios for {n} agents, got {}", n - 1, r.len()),
                ))
            }
            Some(r) => r.clone(),
            None => vec![1.0; n - 1],
        };

        if mode.is_three_agent() && n != 3 {
            return Err(ScenarioError::at(
                "n",
                format!("mode `{}` requires exactly 3 agents", mode.name()),
            ));
        }
        if !mode.is_three_agent() {
            reject("distances", self.distances.is_some(), mode)?;
            reject("mismatches", self.mismatches.is_some(), mode)?;
        }
        if !mode.closes_chain() {
            reject("d", self.d.is_some(), mode)?;
            reject("k_d", self.k_d.is_some(), mode)?;
            reject("pin_last", self.pin_last.is_some(), mode)?;
        }
        if mode != Mode::Steered {
            reject("motion_params", self.motion_params.is_some(), mode)?;
        }

        let law = |e| located("law", e);
        let mut built = match mode {
            Mode::Gradient3 | Mode::Mismatched3 => {
                reject("theta", self.theta.is_some(), mode)?;
                reject("ratios", self.ratios.is_some(), mode)?;
                let [d1, d2] = require("distances", self.distances, mode)?;
                if mode == Mode::Gradient3 {
                    reject("mismatches", self.mismatches.is_some(), mode)?;
                    ControlLaw::gradient3(d1, d2).map_err(law)?
                } else {
                    let [mu1, mu2] = require("mismatches", self.mismatches, mode)?;
                    ControlLaw::mismatched3(d1, d2, mu1, mu2).map_err(law)?
                }
            }
            Mode::Line => {
                let spec = ShapeSpec::new(theta, ratios, None).map_err(law)?;
                ControlLaw::line(spec).map_err(law)?
            }
            Mode::Polygon => {
                require("theta", self.theta.as_ref().map(|_| ()), mode)?;
                ControlLaw::polygon(ShapeSpec::new(theta, ratios, None).map_err(law)?).map_err(law)?
            }
            Mode::ClosedPolygon | Mode::Steered => {
                require("theta", self.theta.as_ref().map(|_| ()), mode)?;
                let d = require("d", self.d, mode)?;
                let spec = ShapeSpec::new(theta, ratios, Some(d)).map_err(law)?;
                if mode == Mode::ClosedPolygon {
                    ControlLaw::closed_polygon(spec).map_err(law)?
                } else {
                    let m = self
                        .motion_params
                        .as_ref()
                        .ok_or_else(|| ScenarioError::at("law.motion_params", "required by mode `steered`"))?;
                    ControlLaw::steered(spec, motion(m, n, "law.motion_params")?).map_err(law)?
                }
            }
        };
        if let Some(c) = self.c {
            built.set_gain(c).map_err(law)?;
        }
        if let Some(k_d) = self.k_d {
            built.set_scale_gain(k_d).map_err(law)?;
        }
        if let Some(pin) = self.pin_last {
            built = built.with_pin_last(pin);
        }
        Ok(built)
    }
}

impl PatchFile {
    fn patch(&self, n: usize, path: &str) -> Result<ParameterPatch, ScenarioError> {
        let motion = match &self.motion_params {
            Some(m) => Some(motion(m, n, &format!("{path}.motion_params"))?),
            None => None,
        };
        Ok(ParameterPatch {
            d: self.d,
            c: self.c,
            k_d: self.k_d,
            motion,
            mismatches: self.mismatches,
            distances: self.distances,
        })
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let n = self.n;
        if n < 3 {
            return Err(ScenarioError::at("n", format!("at least 3 agents required, got {n}")));
        }

        let initial = match (&self.initial.positions, self.initial.seed, self.initial.bounds) {
            (Some(p), None, None) => {
                if p.len() != n {
                    return Err(ScenarioError::at(
                        "initial.positions",
                        format!("expected {n} positions, got {}", p.len()),
                    ));
                }
                if p.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(ScenarioError::at("initial.positions", "coordinates must be finite"));
                }
                Initial::Positions(p.iter().map(|&[x, y]| Point::new(x, y)).collect())
            }
            (None, Some(seed), Some(bounds)) => {
                let [xmin, ymin, xmax, ymax] = bounds;
                if !bounds.iter().all(|b| b.is_finite()) || xmin > xmax || ymin > ymax {
                    return Err(ScenarioError::at(
                        "initial.box",
                        "expected finite [xmin, ymin, xmax, ymax] with min ≤ max",
                    ));
                }
                Initial::Random { seed, bounds }
            }
            (None, Some(_), None) => return Err(ScenarioError::at("initial.box", "required with `seed`")),
            (None, None, Some(_)) => return Err(ScenarioError::at("initial.seed", "required with `box`")),
            (None, None, None) => {
                return Err(ScenarioError::at(
                    "initial",
                    "expected either `positions` or `seed` and `box`",
                ))
            }
            (Some(_), _, _) => {
                return Err(ScenarioError::at(
                    "initial",
                    "`positions` cannot be combined with `seed` or `box`",
                ))
            }
        };

        let law = self.law.build(n)?;

        let defaults = Integrator::default();
        let integrator = Integrator {
            dt: self.integrator.dt.unwrap_or(defaults.dt),
            t_end: self.integrator.t_end.unwrap_or(defaults.t_end),
            method: self.integrator.method.unwrap_or(defaults.method),
        };
        if !(integrator.dt.is_finite() && integrator.dt > 0.0) {
            return Err(ScenarioError::at("integrator.dt", "must be positive"));
        }
        if !(integrator.t_end.is_finite() && integrator.t_end > 0.0) {
            return Err(ScenarioError::at("integrator.t_end", "must be positive"));
        }

        let mut probe = law.clone();
        let mut events = Vec::with_capacity(self.events.len());
        let mut prev = f64::NEG_INFINITY;
        for (i, e) in self.events.iter().enumerate() {
            let path = format!("events[{i}]");
            if !(e.t.is_finite() && e.t >= 0.0 && e.t <= integrator.t_end) {
                return Err(ScenarioError::at(format!("{path}.t"), "must lie within [0, t_end]"));
            }
            if e.t <= prev {
                return Err(ScenarioError::at(format!("{path}.t"), "event times must increase"));
            }
            prev = e.t;
            let set = format!("{path}.set");
            let patch = e.set.patch(n, &set)?;
            patch.apply(&mut probe).map_err(|err| located(&set, err))?;
            events.push(Event { t: e.t, patch });
        }

        let stride = self.output.stride.unwrap_or(1);
        if stride == 0 {
            return Err(ScenarioError::at("output.stride", "must be at least 1"));
        }

        Scenario::new(initial, law, integrator, events, stride).map_err(|e| ScenarioError::at("", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn err(text: &str) -> ScenarioError {
        parse_scenario(text).expect_err("document should be rejected")
    }

    const MINIMAL: &str = r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}}"#;

    #[test]
    fn bundled_hexagon_parses() {
        let s = hexagon();
        assert_eq!(s.agents(), 6);
        assert_eq!(s.law().mode(), Mode::Steered);
        assert_eq!(s.law().spec().closing_distance(), Some(10.0));
        assert!(s.law().spec().theta().iter().all(|&t| (t - PI / 3.0).abs() < 1e-15));
        assert_eq!(s.events().len(), 1);
        assert_eq!(s.final_law().spec().closing_distance(), Some(30.0));
        assert_eq!(s.integrator().method, Method::Rk4);
        assert_eq!(s.record_every(), 20);
    }

    #[test]
    fn bundled_fixtures_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            load_scenario(&path).unwrap_or_else(|e| panic!("{e}"));
        }
    }

    #[test]
    fn defaults_apply() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.integrator(), Integrator::default());
        assert_eq!(s.record_every(), 1);
        assert_eq!(s.law().gain(), 1.0);
        assert!(s.events().is_empty());
    }

    #[test]
    fn theta_forms() {
        let doc = |theta: &str| {
            format!(
                r#"{{"n": 5, "initial": {{"seed": 1, "box": [0, 0, 1, 1]}}, "law": {{"mode": "polygon", "theta": {theta}}}}}"#
            )
        };
        let s = parse_scenario(&doc("0.5")).unwrap();
        assert_eq!(s.law().spec().theta(), &[0.5; 3]);
        let s = parse_scenario(&doc("[0.1, 0.2, 0.3]")).unwrap();
        assert_eq!(s.law().spec().theta(), &[0.1, 0.2, 0.3]);
        let s = parse_scenario(&doc("\"regular\"")).unwrap();
        assert_eq!(s.law().spec().theta(), &[2.0 * PI / 5.0; 3]);

        assert_eq!(err(&doc("\"square\"")).path, "law.theta");
        assert_eq!(err(&doc("[0.1, 0.2]")).path, "law.theta");
        assert_eq!(err(&doc("true")).path, "law.theta");
        assert_eq!(err(&doc("4.0")).path, "law.theta");
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let e = err(r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line", "gain": 2}}"#);
        assert_eq!(e.path, "law.gain");
        assert!(e.message.contains("unknown field"), "{e}");

        let e = err(r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}, "extra": 1}"#);
        assert!(e.message.contains("extra"), "{e}");

        let e = err(
            r#"{"n": 6, "initial": {"seed": 1, "box": [0, 0, 1, 1]},
                "law": {"mode": "closed_polygon", "theta": "regular", "d": 1},
                "events": [{"t": 1, "set": {"radius": 3}}]}"#,
        );
        assert_eq!(e.path, "events[0].set.radius");
    }

    #[test]
    fn type_errors_carry_paths() {
        let e = err(r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line", "c": "fast"}}"#);
        assert_eq!(e.path, "law.c");
        let e = err(r#"{"n": 4, "initial": {"seed": -1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}}"#);
        assert_eq!(e.path, "initial.seed");
        let e = err(r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "spiral"}}"#);
        assert_eq!(e.path, "law.mode");
        let e = err(r#"{"n": 4, "initial": {"seed": 1, "box": [0, 0, 1]}, "law": {"mode": "line"}}"#);
        assert_eq!(e.path, "initial.box");
        let e = err("{ not json");
        assert!(!e.message.is_empty());
    }

    #[test]
    fn semantic_errors_carry_paths() {
        let base = |law: &str| format!(r#"{{"n": 4, "initial": {{"seed": 1, "box": [0, 0, 1, 1]}}, "law": {law}}}"#);
        assert_eq!(err(&base(r#"{"mode": "line", "c": -1}"#)).path, "law.c");
        assert_eq!(err(&base(r#"{"mode": "line", "theta": 0.3}"#)).path, "law.theta");
        assert_eq!(err(&base(r#"{"mode": "line", "ratios": [1, 2]}"#)).path, "law.ratios");
        assert_eq!(err(&base(r#"{"mode": "line", "ratios": [1, 0, 2]}"#)).path, "law.ratios");
        assert_eq!(err(&base(r#"{"mode": "line", "d": 3}"#)).path, "law.d");
        assert_eq!(err(&base(r#"{"mode": "polygon"}"#)).path, "law.theta");
        assert_eq!(err(&base(r#"{"mode": "closed_polygon", "theta": 0.5}"#)).path, "law.d");
        assert_eq!(
            err(&base(r#"{"mode": "steered", "theta": 0.5, "d": 2}"#)).path,
            "law.motion_params"
        );
        assert_eq!(
            err(&base(r#"{"mode": "steered", "theta": 0.5, "d": 2, "motion_params": [[0, 0]]}"#)).path,
            "law.motion_params"
        );
        assert_eq!(err(&base(r#"{"mode": "gradient3", "distances": [1, 1]}"#)).path, "n");
    }

    #[test]
    fn three_agent_modes() {
        let doc = |law: &str| format!(r#"{{"n": 3, "initial": {{"positions": [[0,0],[1,1],[2,0]]}}, "law": {law}}}"#);
        let s = parse_scenario(&doc(r#"{"mode": "mismatched3", "distances": [1, 2], "mismatches": [0.1, 0.2]}"#)).unwrap();
        assert_eq!(s.law().mismatches(), [0.1, 0.2]);
        assert_eq!(s.law().distances(), Some([1.0, 2.0]));
        assert_eq!(err(&doc(r#"{"mode": "mismatched3", "distances": [1, 2]}"#)).path, "law.mismatches");
        assert_eq!(err(&doc(r#"{"mode": "gradient3"}"#)).path, "law.distances");
        assert_eq!(
            err(&doc(r#"{"mode": "gradient3", "distances": [1, 2], "theta": 0.1}"#)).path,
            "law.theta"
        );
    }

    #[test]
    fn initial_and_integrator_validation() {
        let e = err(r#"{"n": 3, "initial": {"positions": [[0,0],[1,1]]}, "law": {"mode": "line"}}"#);
        assert_eq!(e.path, "initial.positions");
        let e = err(r#"{"n": 3, "initial": {"seed": 1}, "law": {"mode": "line"}}"#);
        assert_eq!(e.path, "initial.box");
        let e = err(r#"{"n": 3, "initial": {}, "law": {"mode": "line"}}"#);
        assert_eq!(e.path, "initial");
        let e = err(r#"{"n": 3, "initial": {"seed": 1, "box": [1, 0, 0, 1]}, "law": {"mode": "line"}}"#);
        assert_eq!(e.path, "initial.box");
        let e = err(r#"{"n": 3, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}, "integrator": {"dt": 0}}"#);
        assert_eq!(e.path, "integrator.dt");
        let e = err(r#"{"n": 3, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}, "integrator": {"method": "rk45"}}"#);
        assert_eq!(e.path, "integrator.method");
        let e = err(r#"{"n": 3, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}, "output": {"stride": 0}}"#);
        assert_eq!(e.path, "output.stride");
        let e = err(r#"{"n": 2, "initial": {"seed": 1, "box": [0, 0, 1, 1]}, "law": {"mode": "line"}}"#);
        assert_eq!(e.path, "n");
    }

    #[test]
    fn event_validation() {
        let doc = |events: &str| {
            format!(
                r#"{{"n": 6, "initial": {{"seed": 1, "box": [0, 0, 1, 1]}},
                    "law": {{"mode": "closed_polygon", "theta": "regular", "d": 1}},
                    "integrator": {{"t_end": 10}}, "events": {events}}}"#
            )
        };
        assert!(parse_scenario(&doc(r#"[{"t": 5, "set": {"d": 3, "c": 2}}]"#)).is_ok());
        assert_eq!(err(&doc(r#"[{"t": 11, "set": {"d": 3}}]"#)).path, "events[0].t");
        assert_eq!(
            err(&doc(r#"[{"t": 5, "set": {"d": 3}}, {"t": 4, "set": {"d": 2}}]"#)).path,
            "events[1].t"
        );
        assert_eq!(err(&doc(r#"[{"t": 5, "set": {"d": -3}}]"#)).path, "events[0].set.d");
        assert_eq!(
            err(&doc(r#"[{"t": 5, "set": {"motion_params": 0.1}}]"#)).path,
            "events[0].set"
        );
    }
}
