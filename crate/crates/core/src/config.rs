//! Run configuration: TOML-style sectioned key-value text with documented
//! defaults, strict unknown-key rejection, and validation that collects every
//! violation instead of stopping at the first.

use std::path::PathBuf;

use crate::dynamics::{Bump, BumpField, BumpShape, PerturbationSpec};
use crate::error::{Error, Result};
use crate::limits::validate_nu_list;
use crate::model::{pressure, ShockFamily};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: f64,
    pub v_minus: f64,
    pub u_minus: f64,
    pub eps: f64,
    pub family: ShockFamily,
    pub lambda: f64,
    pub l: f64,
    pub n: usize,
    pub cfl: f64,
    pub positivity_floor: f64,
    pub snapshot_cadence: f64,
    pub delta3: f64,
    pub delta0: f64,
    pub perturbation: PerturbationSpec,
    pub t_end: f64,
    pub nu_list: Option<Vec<f64>>,
    pub output_dir: PathBuf,
    pub formats: Vec<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.0,
            v_minus: 1.0,
            u_minus: 0.0,
            eps: 0.01,
            family: ShockFamily::Two,
            lambda: 0.1,
            l: 2000.0,
            n: 4096,
            cfl: 0.4,
            positivity_floor: 1e-6,
            snapshot_cadence: 1.0,
            delta3: 0.1,
            delta0: 0.05,
            perturbation: PerturbationSpec::default(),
            t_end: 10.0,
            nu_list: None,
            output_dir: PathBuf::from("shocklab-out"),
            formats: vec!["csv".to_string()],
            seed: 1,
        }
    }
}

fn as_float(value: &toml::Value) -> Option<f64> {
    match value {
        toml::Value::Float(f) => Some(*f),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_usize(value: &toml::Value) -> Option<usize> {
    match value {
        toml::Value::Integer(i) if *i >= 0 => Some(*i as usize),
        _ => None,
    }
}

struct Walker<'a> {
    violations: &'a mut Vec<String>,
}

impl Walker<'_> {
    fn float(&mut self, table: &toml::value::Table, section: &str, key: &str, out: &mut f64) {
        if let Some(value) = table.get(key) {
            match as_float(value) {
                Some(f) => *out = f,
                None => self
                    .violations
                    .push(format!("{section}.{key} must be a number")),
            }
        }
    }

    fn check_keys(&mut self, table: &toml::value::Table, section: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.violations.push(format!("unknown key: {section}.{key}"));
            }
        }
    }
}

/// Parses and validates a configuration document. Missing keys take the
/// documented defaults; unknown keys and every constraint violation are
/// reported together.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let (config, mut violations) = parse_structure(text)?;
    validate(&config, &mut violations);
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config { violations })
    }
}

/// Parses a configuration document structurally (syntax, unknown keys, value
/// types) without the cross-field constraint checks. Callers that override
/// fields afterwards run [`validate`] themselves on the final values.
pub fn parse_config_unchecked(text: &str) -> Result<RunConfig> {
    let (config, violations) = parse_structure(text)?;
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config { violations })
    }
}

fn parse_structure(text: &str) -> Result<(RunConfig, Vec<String>)> {
    let value: toml::Value = text
        .parse()
        .map_err(|e| Error::Config { violations: vec![format!("syntax: {e}")] })?;
    let root = match value.as_table() {
        Some(t) => t.clone(),
        None => {
            return Err(Error::Config {
                violations: vec!["configuration must be a table".to_string()],
            })
        }
    };

    let mut config = RunConfig::default();
    let mut violations = Vec::new();
    let mut walker = Walker { violations: &mut violations };

    let known_sections = [
        "model",
        "shock",
        "weight",
        "numerics",
        "functionals",
        "perturbation",
        "time",
        "sweep",
        "output",
        "seed",
    ];
    for key in root.keys() {
        if !known_sections.contains(&key.as_str()) {
            walker
                .violations
                .push(format!("unknown key: {key}"));
        }
    }

    if let Some(section) = root.get("model").and_then(|v| v.as_table()) {
        walker.check_keys(section, "model", &["alpha"]);
        walker.float(section, "model", "alpha", &mut config.alpha);
    }
    if let Some(section) = root.get("shock").and_then(|v| v.as_table()) {
        walker.check_keys(section, "shock", &["v_minus", "u_minus", "eps", "family"]);
        walker.float(section, "shock", "v_minus", &mut config.v_minus);
        walker.float(section, "shock", "u_minus", &mut config.u_minus);
        walker.float(section, "shock", "eps", &mut config.eps);
        if let Some(value) = section.get("family") {
            let parsed = match value {
                toml::Value::String(s) => match s.as_str() {
                    "one" | "1" => Some(ShockFamily::One),
                    "two" | "2" => Some(ShockFamily::Two),
                    _ => None,
                },
                toml::Value::Integer(1) => Some(ShockFamily::One),
                toml::Value::Integer(2) => Some(ShockFamily::Two),
                _ => None,
            };
            match parsed {
                Some(f) => config.family = f,
                None => walker
                    .violations
                    .push("shock.family must be \"one\"/\"two\" (or 1/2)".to_string()),
            }
        }
    }
    if let Some(section) = root.get("weight").and_then(|v| v.as_table()) {
        walker.check_keys(section, "weight", &["lambda"]);
        walker.float(section, "weight", "lambda", &mut config.lambda);
    }
    if let Some(section) = root.get("numerics").and_then(|v| v.as_table()) {
        walker.check_keys(
            section,
            "numerics",
            &["L", "N", "cfl", "positivity_floor", "snapshot_cadence"],
        );
        walker.float(section, "numerics", "L", &mut config.l);
        if let Some(value) = section.get("N") {
            match as_usize(value) {
                Some(n) => config.n = n,
                None => walker
                    .violations
                    .push("numerics.N must be a nonnegative integer".to_string()),
            }
        }
        walker.float(section, "numerics", "cfl", &mut config.cfl);
        walker.float(section, "numerics", "positivity_floor", &mut config.positivity_floor);
        walker.float(section, "numerics", "snapshot_cadence", &mut config.snapshot_cadence);
    }
    if let Some(section) = root.get("functionals").and_then(|v| v.as_table()) {
        walker.check_keys(section, "functionals", &["delta3", "delta0"]);
        walker.float(section, "functionals", "delta3", &mut config.delta3);
        walker.float(section, "functionals", "delta0", &mut config.delta0);
    }
    if let Some(section) = root.get("time").and_then(|v| v.as_table()) {
        walker.check_keys(section, "time", &["T"]);
        walker.float(section, "time", "T", &mut config.t_end);
    }
    if let Some(section) = root.get("sweep").and_then(|v| v.as_table()) {
        walker.check_keys(section, "sweep", &["nu_list"]);
        if let Some(value) = section.get("nu_list") {
            match value.as_array() {
                Some(items) => {
                    let mut list = Vec::with_capacity(items.len());
                    let mut ok = true;
                    for item in items {
                        match as_float(item) {
                            Some(f) => list.push(f),
                            None => {
                                ok = false;
                                walker.violations.push(
                                    "sweep.nu_list entries must be numbers".to_string(),
                                );
                                break;
                            }
                        }
                    }
                    if ok {
                        config.nu_list = Some(list);
                    }
                }
                None => walker
                    .violations
                    .push("sweep.nu_list must be an array of numbers".to_string()),
            }
        }
    }
    if let Some(section) = root.get("output").and_then(|v| v.as_table()) {
        walker.check_keys(section, "output", &["directory", "formats"]);
        if let Some(value) = section.get("directory") {
            match value.as_str() {
                Some(s) => config.output_dir = PathBuf::from(s),
                None => walker
                    .violations
                    .push("output.directory must be a string".to_string()),
            }
        }
        if let Some(value) = section.get("formats") {
            match value.as_array() {
                Some(items) => {
                    let mut formats = Vec::new();
                    for item in items {
                        match item.as_str() {
                            Some(s) => formats.push(s.to_string()),
                            None => walker
                                .violations
                                .push("output.formats entries must be strings".to_string()),
                        }
                    }
                    config.formats = formats;
                }
                None => walker
                    .violations
                    .push("output.formats must be an array of strings".to_string()),
            }
        }
    }
    if let Some(value) = root.get("seed") {
        match value {
            toml::Value::Integer(i) if *i >= 0 => config.seed = *i as u64,
            _ => walker
                .violations
                .push("seed must be a nonnegative integer".to_string()),
        }
    }
    if let Some(value) = root.get("perturbation") {
        match value.as_array() {
            Some(items) => {
                let mut bumps = Vec::new();
                for (idx, item) in items.iter().enumerate() {
                    match parse_bump(item) {
                        Ok(b) => bumps.push(b),
                        Err(msg) => walker
                            .violations
                            .push(format!("perturbation[{idx}]: {msg}")),
                    }
                }
                config.perturbation = PerturbationSpec { bumps };
            }
            None => walker
                .violations
                .push("perturbation must be an array of bump tables".to_string()),
        }
    }

    Ok((config, violations))
}

fn parse_bump(value: &toml::Value) -> std::result::Result<Bump, String> {
    let table = value.as_table().ok_or("must be a table")?;
    for key in table.keys() {
        if !["field", "shape", "center", "width", "amplitude"].contains(&key.as_str()) {
            return Err(format!("unknown key: {key}"));
        }
    }
    let field = match table.get("field").and_then(|v| v.as_str()) {
        Some("v") => BumpField::V,
        Some("h") | Some("u") => BumpField::H,
        _ => return Err("field must be \"v\" or \"u\"".to_string()),
    };
    let shape = match table.get("shape").and_then(|v| v.as_str()) {
        Some("gaussian") | None => BumpShape::Gaussian,
        Some("sine_packet") => BumpShape::SinePacket,
        Some(other) => return Err(format!("unknown shape {other}")),
    };
    let center = table
        .get("center")
        .and_then(as_float)
        .ok_or("center must be a number")?;
    let width = table
        .get("width")
        .and_then(as_float)
        .ok_or("width must be a number")?;
    let amplitude = table
        .get("amplitude")
        .and_then(as_float)
        .ok_or("amplitude must be a number")?;
    Ok(Bump { field, shape, center, width, amplitude })
}

/// Re-validates every cross-field constraint, collecting all violations.
pub fn validate(config: &RunConfig, violations: &mut Vec<String>) {
    if !(config.alpha >= 0.0 && config.alpha <= 1.0) {
        violations.push(format!("model.alpha = {} must lie in [0, 1]", config.alpha));
    }
    if !(config.v_minus > 0.0) {
        violations.push(format!("shock.v_minus = {} must be positive", config.v_minus));
    }
    if !(config.eps > 0.0) {
        violations.push(format!("shock.eps = {} must be positive", config.eps));
    } else if config.v_minus > 0.0 && config.eps >= pressure(config.v_minus) {
        violations.push(format!(
            "amplitude exceeds p(v_minus): eps = {} with p(v_minus) = {}",
            config.eps,
            pressure(config.v_minus)
        ));
    }
    if !(config.lambda > 0.0 && config.lambda < 1.0) {
        violations.push(format!("weight.lambda = {} must lie in (0, 1)", config.lambda));
    }
    if !(config.l > 0.0) {
        violations.push(format!("numerics.L = {} must be positive", config.l));
    }
    if config.n < 8 {
        violations.push(format!("numerics.N = {} must be at least 8", config.n));
    }
    if config.eps > 0.0 && config.l > 0.0 && config.eps * config.l < 20.0 {
        violations.push(format!(
            "domain too short for the shock layer: eps*L = {} < 20",
            config.eps * config.l
        ));
    }
    if !(config.cfl > 0.0 && config.cfl <= 1.0) {
        violations.push(format!("numerics.cfl = {} must lie in (0, 1]", config.cfl));
    }
    if !(config.positivity_floor > 0.0 && config.positivity_floor < config.v_minus) {
        violations.push(format!(
            "numerics.positivity_floor = {} must lie in (0, v_minus)",
            config.positivity_floor
        ));
    }
    if !(config.snapshot_cadence > 0.0) {
        violations.push(format!(
            "numerics.snapshot_cadence = {} must be positive",
            config.snapshot_cadence
        ));
    }
    if !(config.delta3 > 0.0) {
        violations.push(format!("functionals.delta3 = {} must be positive", config.delta3));
    }
    if !(config.delta0 > 0.0 && config.delta0 < 1.0) {
        violations.push(format!(
            "functionals.delta0 = {} must lie in (0, 1)",
            config.delta0
        ));
    }
    if !(config.t_end >= 0.0) {
        violations.push(format!("time.T = {} must be nonnegative", config.t_end));
    }
    if let Err(e) = config.perturbation.validate(config.l) {
        match e {
            Error::Config { violations: pv } => violations.extend(pv),
            other => violations.push(other.to_string()),
        }
    }
    if let Some(nu_list) = &config.nu_list {
        if let Err(Error::Config { violations: nv }) = validate_nu_list(nu_list, config.n) {
            violations.extend(nv);
        }
    }
    for format in &config.formats {
        if format != "csv" {
            violations.push(format!("output.formats entry {format} is not supported"));
        }
    }
}
