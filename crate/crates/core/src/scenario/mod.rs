//! Scenario configuration, validation and the subcommand runners behind the
//! `gravem` executable.

mod config;
mod format;
mod run;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

pub use config::{
    AlgebraSpec, CheckSpec, ControlSpec, MediumSpec, MetricSpec, RaySpec, Scenario, SourceSpec,
    WaveSpec,
};
pub use run::{run, Check, OutputFile, RunError, RunOptions, RunReport, Subcommand};

use crate::emulation::conformal_scale_metric;
use crate::spacetime::{builtin_metric, GridMetric, SharedMetric, SpacetimeEvent};
use crate::transport::{lensing_ray, Controls, NullRay, TransportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default())]
    UnknownKey {
        key: String,
        suggestion: Option<String>,
    },
    #[error("invalid value at line {line}, column {column}: {message}")]
    InvalidValue {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("constraint violated by `{key}` = {value}: {rule}")]
    ConstraintViolation {
        key: String,
        value: String,
        rule: String,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn located(text: &str, e: &toml::de::Error) -> (usize, usize) {
    e.span().map_or((0, 0), |s| line_column(text, s.start))
}

fn suggest(key: &str, allowed: &[&str]) -> Option<String> {
    allowed
        .iter()
        .map(|a| (strsim::levenshtein(key, a), *a))
        .filter(|(d, a)| *d <= 2.max(a.len() / 3))
        .min()
        .map(|(_, a)| a.to_string())
}

fn check_keys(table: &toml::Table, section: &str) -> Result<(), ScenarioError> {
    let allowed = config::SCHEMA
        .iter()
        .find(|(name, _)| *name == section)
        .map(|(_, keys)| *keys)
        .unwrap_or(&[]);
    for (key, value) in table {
        let path = if section.is_empty() { key.clone() } else { format!("{section}.{key}") };
        if !allowed.contains(&key.as_str()) {
            return Err(ScenarioError::UnknownKey {
                key: path,
                suggestion: suggest(key, allowed).map(|s| {
                    if section.is_empty() { s } else { format!("{section}.{s}") }
                }),
            });
        }
        if !section.is_empty() {
            continue;
        }
        match value {
            toml::Value::Table(t) => check_keys(t, key)?,
            toml::Value::Array(items) => {
                for item in items {
                    if let toml::Value::Table(t) = item {
                        check_keys(t, key)?;
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Parses and validates a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| {
        let (line, column) = located(text, &e);
        ScenarioError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    check_keys(&table, "")?;
    let scenario: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = located(text, &e);
        ScenarioError::InvalidValue {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    validate(&scenario)?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable in TOML")
    }
}

fn violation(key: impl Into<String>, value: impl std::fmt::Display, rule: &str) -> ScenarioError {
    ScenarioError::ConstraintViolation {
        key: key.into(),
        value: value.to_string(),
        rule: rule.to_string(),
    }
}

fn positive(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(violation(key, v, "must be positive and finite"))
    }
}

fn split(key: &str, kappa: f64) -> Result<(), ScenarioError> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(violation(
            key,
            kappa,
            "κ∈(0,1): both factor waves must carry positive frequency along the ray",
        ))
    }
}

fn validate(s: &Scenario) -> Result<(), ScenarioError> {
    positive("scale", s.scale)?;

    let m = &s.metric;
    match m.name.as_str() {
        "grid" => {
            if m.grid_file.is_none() {
                return Err(violation("metric.grid_file", "missing", "required when metric.name = \"grid\""));
            }
        }
        name => {
            if !(m.rs >= 0.0 && m.rs.is_finite()) {
                return Err(violation("metric.rs", m.rs, "r_s ≥ 0"));
            }
            builtin_metric(name, m.chart, m.rs).map_err(|e| violation("metric.name", name, &e.to_string()))?;
        }
    }
    positive("metric.scale", m.scale)?;

    let c = &s.controls;
    positive("controls.step", c.step)?;
    positive("controls.rtol", c.rtol)?;
    positive("controls.atol", c.atol)?;
    for (key, v) in [
        ("controls.sample_every", c.sample_every),
        ("controls.project_every", c.project_every.unwrap_or(1)),
        ("controls.max_steps", c.max_steps),
    ] {
        if v == 0 {
            return Err(violation(key, v, "must be at least 1"));
        }
    }

    let k = &s.checks;
    for (key, v) in [
        ("checks.null_residual", k.null_residual),
        ("checks.transport", k.transport),
        ("checks.deviation", k.deviation),
        ("checks.gauge", k.gauge),
        ("checks.phase", k.phase),
        ("checks.identity", k.identity),
        ("checks.invariance", k.invariance),
        ("checks.medium", k.medium),
        ("checks.validity_threshold", k.validity_threshold),
    ] {
        positive(key, v)?;
    }

    for (i, r) in s.rays.iter().enumerate() {
        let key = |f: &str| format!("rays[{i}].{f}");
        positive(&key("frequency"), r.frequency)?;
        match (r.impact_parameter, r.position, r.direction) {
            (Some(b), None, None) => {
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(violation(key("impact_parameter"), b, "b ≥ 0"));
                }
                let d = r
                    .distance
                    .ok_or_else(|| violation(key("distance"), "missing", "required with impact_parameter"))?;
                positive(&key("distance"), d)?;
            }
            (None, Some(_), Some(d)) => {
                if d.iter().all(|v| *v == 0.0) {
                    return Err(violation(key("direction"), "[0, 0, 0]", "direction must be non-zero"));
                }
                if r.l_end.is_none() {
                    return Err(violation(key("l_end"), "missing", "required with position/direction"));
                }
            }
            _ => {
                return Err(violation(
                    key("impact_parameter"),
                    "ambiguous",
                    "give either impact_parameter + distance, or position + direction",
                ))
            }
        }
        if let Some(l) = r.l_end {
            positive(&key("l_end"), l)?;
        }
    }

    if let Some(w) = &s.wave {
        split("wave.kappa", w.kappa)?;
        if w.c_plus.norm() == 0.0 && w.c_minus.norm() == 0.0 {
            return Err(violation("wave.c_plus", "[0, 0]", "at least one helicity amplitude must be non-zero"));
        }
        if !w.phi0.is_finite() {
            return Err(violation("wave.phi0", w.phi0, "must be finite"));
        }
    }

    positive("algebra.frequency", s.algebra.frequency)?;
    for (i, &kappa) in s.algebra.kappas.iter().enumerate() {
        split(&format!("algebra.kappas[{i}]"), kappa)?;
    }

    if let Some(md) = &s.medium {
        for (name, r) in [("x", md.x), ("y", md.y), ("z", md.z)] {
            if !(r[0] <= r[1]) {
                return Err(violation(format!("medium.{name}"), format!("{r:?}"), "range must be [min, max] with min ≤ max"));
            }
        }
        if md.n.contains(&0) {
            return Err(violation("medium.n", format!("{:?}", md.n), "each count must be at least 1"));
        }
        positive("medium.ray_step", md.ray_step)?;
    }

    if let Some(src) = &s.source {
        positive("source.pump_frequency", src.pump_frequency)?;
        split("source.kappa", src.kappa)?;
        positive("source.crystal_length", src.crystal_length)?;
        positive("source.pump_wavenumber", src.pump_wavenumber)?;
        positive("source.pump_waist", src.pump_waist)?;
        positive("source.quality_threshold", src.quality_threshold)?;
        positive("source.length_unit_m", src.length_unit_m)?;
        if src.direction.iter().all(|v| *v == 0.0) {
            return Err(violation("source.direction", "[0, 0, 0]", "direction must be non-zero"));
        }
        if src.amplitude_plus.norm() == 0.0 && src.amplitude_minus.norm() == 0.0 {
            return Err(violation("source.amplitude_plus", "[0, 0]", "at least one pair amplitude must be non-zero"));
        }
    }
    Ok(())
}

/// The background described by `spec`, with relative grid paths resolved
/// against `base`.
pub fn build_metric(spec: &MetricSpec, base: &Path) -> Result<SharedMetric, RunError> {
    let metric: SharedMetric = if spec.name == "grid" {
        let file: PathBuf = base.join(spec.grid_file.as_ref().expect("validated"));
        Arc::new(
            GridMetric::from_file(&file, spec.chart)
                .map_err(|e| RunError::new("spacetime-core", "grid_metric", e))?,
        )
    } else {
        builtin_metric(&spec.name, spec.chart, spec.rs)
            .map_err(|e| RunError::new("spacetime-core", "builtin_metric", e))?
    };
    if spec.scale == 1.0 {
        return Ok(metric);
    }
    Ok(Arc::new(
        conformal_scale_metric(metric, spec.scale)
            .map_err(|e| RunError::new("emulation-compiler", "conformal_scale_metric", e))?,
    ))
}

pub fn build_ray(spec: &RaySpec, metric: &dyn crate::spacetime::Metric) -> Result<NullRay, TransportError> {
    match (spec.impact_parameter, spec.distance, spec.position, spec.direction) {
        (Some(b), Some(d), _, _) => lensing_ray(metric, b, d, spec.frequency),
        (_, _, Some(x), Some(dir)) => {
            let event = SpacetimeEvent::new(metric.chart(), x)?;
            NullRay::from_direction(metric, event, &dir.into(), spec.frequency)
        }
        _ => Err(TransportError::InvalidControls("ray has no initial data".into())),
    }
}

pub fn transport_controls(spec: &ControlSpec) -> Controls {
    Controls {
        integrator: spec.integrator,
        step: spec.step,
        rtol: spec.rtol,
        atol: spec.atol,
        sample_every: spec.sample_every,
        project_every: spec.project_every,
        max_steps: spec.max_steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[metric]
name = "minkowski"
chart = "cartesian"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.scale, 1.0);
        assert_eq!(s.controls, ControlSpec::default());
        assert_eq!(s.checks, CheckSpec::default());
        assert_eq!(s.algebra.kappas.len(), 9);
        assert!(s.rays.is_empty() && s.wave.is_none());
    }

    #[test]
    fn kappa_zero_names_the_rule() {
        let text = format!("{MINIMAL}\n[wave]\nc_plus = [1.0, 0.0]\nkappa = 0\n");
        let e = parse_scenario(&text).unwrap_err();
        assert!(matches!(e, ScenarioError::ConstraintViolation { ref key, .. } if key == "wave.kappa"));
        assert!(e.to_string().contains("κ∈(0,1)"));
        let text = format!("{MINIMAL}\n[wave]\nc_plus = [1.0, 0.0]\nkappa = 1.2\n");
        assert!(parse_scenario(&text).unwrap_err().to_string().contains("κ∈(0,1)"));
    }

    #[test]
    fn misspelled_key_gets_suggestion() {
        let e = parse_scenario("[metrric]\nname = \"minkowski\"\nchart = \"cartesian\"\n").unwrap_err();
        assert_eq!(
            e,
            ScenarioError::UnknownKey {
                key: "metrric".into(),
                suggestion: Some("metric".into())
            }
        );
        let e = parse_scenario(&format!("{MINIMAL}rss = 1.0\n")).unwrap_err();
        assert!(e.to_string().contains("metric.rs"), "{e}");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_scenario("[metric]\nname = \"minkowski\nchart = 1\n").unwrap_err();
        match e {
            ScenarioError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_has_position() {
        let e = parse_scenario("[metric]\nname = \"minkowski\"\nchart = \"cartesian\"\nrs = \"one\"\n").unwrap_err();
        assert!(matches!(e, ScenarioError::InvalidValue { line: 4, .. }), "{e:?}");
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "{MINIMAL}\n[[rays]]\nimpact_parameter = 3.0\ndistance = 10.0\n\n[wave]\nc_plus = [1.0, 0.5]\nphi0 = 0.6\n"
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(parse_scenario(&s.to_toml()).unwrap(), s);
    }
}
