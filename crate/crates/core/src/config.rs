//! Run configuration: JSON parsing with field-path error reporting,
//! whitelisted exact-expression numbers, and canonical re-serialization.
//!
//! Numbers may be JSON numbers or one of the exact string forms "pi",
//! "sqrt(k)", "1/sqrt(k)", "log(a)/log(b)", evaluated at parse time.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::geometry::{
    steiner_coefficients, GeneratorProfile, LambdaSpec, LambdaTable, Point, Polygon,
};
use crate::system::{RigidMotion, SelfSimilarSystem, Similitude};

#[derive(Debug, Clone, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("config is not valid JSON: {0}")]
    Json(String),
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dimensions,
    Tube,
    Compare,
    Polygon,
    Conditions,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Dimensions => "dimensions",
            Mode::Tube => "tube",
            Mode::Compare => "compare",
            Mode::Polygon => "polygon",
            Mode::Conditions => "conditions",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "dimensions" => Mode::Dimensions,
            "tube" => Mode::Tube,
            "compare" => Mode::Compare,
            "polygon" => Mode::Polygon,
            "conditions" => Mode::Conditions,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    /// {"count": J, "ratio": r} shorthand; no rigid parts.
    Uniform { count: usize, ratio: f64 },
    /// Explicit per-map entries with rigid parts.
    Maps(Vec<MapSpec>),
    /// Named builtin (currently "example1").
    Builtin(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub ratio: f64,
    pub rotation_deg: f64,
    pub reflect: bool,
    pub translate: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Named builtin: "hexagram" or "square".
    Builtin(String),
    /// Polygon vertices; κ's derive from the polygon. h (and either g or a
    /// λ table) complete the profile for tube work.
    Polygon {
        vertices: Vec<(f64, f64)>,
        h: Option<f64>,
        g: Option<f64>,
        lambda_table: Option<Vec<(f64, f64)>>,
    },
    /// Explicit profile data.
    Profile {
        d: u32,
        kappa: Vec<f64>,
        h: f64,
        g: f64,
        lambda_table: Option<Vec<(f64, f64)>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log_spacing: bool,
}

impl EpsGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|k| {
                let t = k as f64 / (self.count - 1) as f64;
                if self.log_spacing {
                    (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + t * (self.max - self.min)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub system: Option<SystemSpec>,
    /// One or more generators; multiple generators run the pipeline per
    /// generator and sum the volumes.
    pub generators: Vec<GeneratorSpec>,
    pub hull: Option<Vec<(f64, f64)>>,
    pub eps_grid: Option<EpsGrid>,
    pub truncation: u64,
    pub window: Option<f64>,
    pub strip: Option<(f64, f64)>,
    pub resolution: u32,
    pub out_dir: String,
    pub csv_name: Option<String>,
    pub svg: bool,
    pub pgm: bool,
    pub seed: u64,
    pub quiet: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        let root = value
            .as_object()
            .ok_or_else(|| invalid("$", "config must be a JSON object"))?;

        let mode_str = require_str(root, "$", "mode")?;
        let mode = Mode::parse(&mode_str).ok_or_else(|| {
            invalid(
                "mode",
                format!(
                    "unknown mode {mode_str:?}; expected dimensions|tube|compare|polygon|conditions"
                ),
            )
        })?;

        let system = match root.get("system") {
            None => None,
            Some(v) => Some(parse_system(v, "system")?),
        };

        let mut generators = Vec::new();
        match (root.get("generator"), root.get("generators")) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    "generators",
                    "give either \"generator\" or \"generators\", not both",
                ))
            }
            (Some(v), None) => generators.push(parse_generator(v, "generator")?),
            (None, Some(Value::Array(items))) => {
                for (i, v) in items.iter().enumerate() {
                    generators.push(parse_generator(v, &format!("generators[{i}]"))?);
                }
            }
            (None, Some(_)) => {
                return Err(invalid("generators", "must be an array of generator specs"))
            }
            (None, None) => {}
        }

        let hull = match root.get("hull") {
            None => None,
            Some(v) => Some(parse_point_list(v, "hull")?),
        };

        let eps_grid = match root.get("eps_grid") {
            None => None,
            Some(v) => Some(parse_eps_grid(v, "eps_grid")?),
        };

        let truncation = match root.get("truncation") {
            None => 0,
            Some(v) => {
                let x = number_at(v, "truncation")?;
                if x < 0.0 || x.fract() != 0.0 {
                    return Err(invalid("truncation", "must be a non-negative integer"));
                }
                x as u64
            }
        };

        let window = root
            .get("window")
            .map(|v| number_at(v, "window"))
            .transpose()?;
        if let Some(w) = window {
            if !(w > 0.0) {
                return Err(invalid("window", "must be positive"));
            }
        }

        let strip = match root.get("strip") {
            None => None,
            Some(Value::Array(a)) if a.len() == 2 => {
                let lo = number_at(&a[0], "strip[0]")?;
                let hi = number_at(&a[1], "strip[1]")?;
                if !(lo < hi) {
                    return Err(invalid("strip", "needs strip[0] < strip[1]"));
                }
                Some((lo, hi))
            }
            Some(_) => return Err(invalid("strip", "must be a two-element array [lo, hi]")),
        };

        let resolution = match root.get("resolution") {
            None => 256,
            Some(v) => {
                let x = number_at(v, "resolution")?;
                if !(x >= 1.0) || x.fract() != 0.0 {
                    return Err(invalid("resolution", "must be a positive integer"));
                }
                x as u32
            }
        };

        let out_dir = match root.get("out_dir") {
            None => ".".to_string(),
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(invalid("out_dir", "must be a string")),
        };

        let csv_name = match root.get("csv_name") {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(invalid("csv_name", "must be a string")),
        };

        let svg = bool_at(root, "svg")?.unwrap_or(false);
        let pgm = bool_at(root, "pgm")?.unwrap_or(false);
        let quiet = bool_at(root, "quiet")?.unwrap_or(false);

        let seed = match root.get("seed") {
            None => 0,
            Some(v) => {
                let x = number_at(v, "seed")?;
                if x < 0.0 || x.fract() != 0.0 {
                    return Err(invalid("seed", "must be a non-negative integer"));
                }
                x as u64
            }
        };

        let config = RunConfig {
            mode,
            system,
            generators,
            hull,
            eps_grid,
            truncation,
            window,
            strip,
            resolution,
            out_dir,
            csv_name,
            svg,
            pgm,
            seed,
            quiet,
        };
        config.validate()?;
        Ok(config)
    }

    /// Mode-specific field requirements.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.mode {
            Mode::Dimensions => {
                if self.system.is_none() {
                    return Err(invalid("system", "required for mode dimensions"));
                }
            }
            Mode::Tube | Mode::Compare => {
                if self.system.is_none() {
                    return Err(invalid("system", "required for mode tube/compare"));
                }
                if self.generators.is_empty() {
                    return Err(invalid("generator", "required for mode tube/compare"));
                }
                if self.eps_grid.is_none() {
                    return Err(invalid("eps_grid", "required for mode tube/compare"));
                }
                let grid = self.eps_grid.as_ref().unwrap();
                if !(grid.min > 0.0 && grid.max >= grid.min) {
                    return Err(invalid("eps_grid", "needs 0 < min ≤ max"));
                }
                if grid.count < 1 {
                    return Err(invalid("eps_grid.count", "must be at least 1"));
                }
            }
            Mode::Polygon => {
                if self.generators.is_empty() {
                    return Err(invalid("generator", "required for mode polygon"));
                }
            }
            Mode::Conditions => {
                match &self.system {
                    None => return Err(invalid("system", "required for mode conditions")),
                    Some(SystemSpec::Uniform { .. }) => {
                        return Err(invalid(
                            "system",
                            "mode conditions needs per-map rigid parts (explicit maps or a builtin)",
                        ))
                    }
                    Some(SystemSpec::Maps(_)) => {
                        if self.hull.is_none() {
                            return Err(invalid("hull", "required for mode conditions"));
                        }
                    }
                    Some(SystemSpec::Builtin(_)) => {}
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON rendering; parsing it back gives an equal config.
    pub fn to_canonical_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("mode".into(), Value::from(self.mode.as_str()));
        if let Some(system) = &self.system {
            let sys = match system {
                SystemSpec::Uniform { count, ratio } => {
                    let mut m = Map::new();
                    m.insert("count".into(), Value::from(*count));
                    m.insert("ratio".into(), Value::from(*ratio));
                    Value::Object(m)
                }
                SystemSpec::Maps(maps) => {
                    let mut m = Map::new();
                    m.insert(
                        "maps".into(),
                        Value::Array(
                            maps.iter()
                                .map(|spec| {
                                    let mut e = Map::new();
                                    e.insert("ratio".into(), Value::from(spec.ratio));
                                    e.insert(
                                        "rotation_deg".into(),
                                        Value::from(spec.rotation_deg),
                                    );
                                    e.insert("reflect".into(), Value::from(spec.reflect));
                                    e.insert(
                                        "translate".into(),
                                        Value::Array(vec![
                                            Value::from(spec.translate.0),
                                            Value::from(spec.translate.1),
                                        ]),
                                    );
                                    Value::Object(e)
                                })
                                .collect(),
                        ),
                    );
                    Value::Object(m)
                }
                SystemSpec::Builtin(name) => {
                    let mut m = Map::new();
                    m.insert("builtin".into(), Value::from(name.as_str()));
                    Value::Object(m)
                }
            };
            root.insert("system".into(), sys);
        }
        if !self.generators.is_empty() {
            let gens: Vec<Value> = self.generators.iter().map(generator_to_json).collect();
            if gens.len() == 1 {
                root.insert("generator".into(), gens.into_iter().next().unwrap());
            } else {
                root.insert("generators".into(), Value::Array(gens));
            }
        }
        if let Some(hull) = &self.hull {
            root.insert("hull".into(), points_to_json(hull));
        }
        if let Some(grid) = &self.eps_grid {
            let mut g = Map::new();
            g.insert("min".into(), Value::from(grid.min));
            g.insert("max".into(), Value::from(grid.max));
            g.insert("count".into(), Value::from(grid.count));
            g.insert(
                "spacing".into(),
                Value::from(if grid.log_spacing { "log" } else { "linear" }),
            );
            root.insert("eps_grid".into(), Value::Object(g));
        }
        root.insert("truncation".into(), Value::from(self.truncation));
        if let Some(w) = self.window {
            root.insert("window".into(), Value::from(w));
        }
        if let Some((lo, hi)) = self.strip {
            root.insert(
                "strip".into(),
                Value::Array(vec![Value::from(lo), Value::from(hi)]),
            );
        }
        root.insert("resolution".into(), Value::from(self.resolution));
        root.insert("out_dir".into(), Value::from(self.out_dir.as_str()));
        if let Some(name) = &self.csv_name {
            root.insert("csv_name".into(), Value::from(name.as_str()));
        }
        root.insert("svg".into(), Value::from(self.svg));
        root.insert("pgm".into(), Value::from(self.pgm));
        root.insert("seed".into(), Value::from(self.seed));
        root.insert("quiet".into(), Value::from(self.quiet));
        Value::Object(root)
    }

    /// SHA-256 of the canonical serialization, for output provenance.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = self.to_canonical_json().to_string();
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn generator_to_json(g: &GeneratorSpec) -> Value {
    let mut m = Map::new();
    match g {
        GeneratorSpec::Builtin(name) => {
            m.insert("builtin".into(), Value::from(name.as_str()));
        }
        GeneratorSpec::Polygon {
            vertices,
            h,
            g,
            lambda_table,
        } => {
            m.insert("polygon".into(), points_to_json(vertices));
            if let Some(h) = h {
                m.insert("h".into(), Value::from(*h));
            }
            if let Some(g) = g {
                m.insert("g".into(), Value::from(*g));
            }
            if let Some(t) = lambda_table {
                m.insert("lambda_table".into(), points_to_json(t));
            }
        }
        GeneratorSpec::Profile {
            d,
            kappa,
            h,
            g,
            lambda_table,
        } => {
            let mut p = Map::new();
            p.insert("d".into(), Value::from(*d));
            p.insert(
                "kappa".into(),
                Value::Array(kappa.iter().map(|&k| Value::from(k)).collect()),
            );
            p.insert("h".into(), Value::from(*h));
            p.insert("g".into(), Value::from(*g));
            if let Some(t) = lambda_table {
                p.insert("lambda_table".into(), points_to_json(t));
            }
            m.insert("profile".into(), Value::Object(p));
        }
    }
    Value::Object(m)
}

fn points_to_json(pts: &[(f64, f64)]) -> Value {
    Value::Array(
        pts.iter()
            .map(|&(x, y)| Value::Array(vec![Value::from(x), Value::from(y)]))
            .collect(),
    )
}

/// A number: JSON number or a whitelisted exact expression string.
pub fn number_at(v: &Value, path: &str) -> Result<f64, ConfigError> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| invalid(path, "number out of f64 range")),
        Value::String(s) => parse_exact_expression(s)
            .ok_or_else(|| invalid(path, format!("unknown expression {s:?}; allowed: \"pi\", \"sqrt(k)\", \"1/sqrt(k)\", \"log(a)/log(b)\""))),
        _ => Err(invalid(path, "expected a number or expression string")),
    }
}

/// The expression whitelist: "pi", "sqrt(k)", "1/sqrt(k)", "log(a)/log(b)".
pub fn parse_exact_expression(s: &str) -> Option<f64> {
    let t = s.trim();
    if t == "pi" {
        return Some(std::f64::consts::PI);
    }
    if let Some(rest) = t.strip_prefix("1/sqrt(") {
        let inner: f64 = rest.strip_suffix(')')?.trim().parse().ok()?;
        return (inner > 0.0).then(|| inner.sqrt().recip());
    }
    if let Some(rest) = t.strip_prefix("sqrt(") {
        let inner: f64 = rest.strip_suffix(')')?.trim().parse().ok()?;
        return (inner >= 0.0).then(|| inner.sqrt());
    }
    if let Some((a, b)) = t.split_once('/') {
        let a = a.trim().strip_prefix("log(")?.strip_suffix(')')?;
        let b = b.trim().strip_prefix("log(")?.strip_suffix(')')?;
        let a: f64 = a.trim().parse().ok()?;
        let b: f64 = b.trim().parse().ok()?;
        if a > 0.0 && b > 0.0 && b != 1.0 {
            return Some(a.ln() / b.ln());
        }
    }
    None
}

fn require_str(map: &Map<String, Value>, parent: &str, key: &str) -> Result<String, ConfigError> {
    let path = if parent == "$" {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    };
    match map.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(invalid(&path, "must be a string")),
        None => Err(invalid(&path, "missing required field")),
    }
}

fn bool_at(map: &Map<String, Value>, key: &str) -> Result<Option<bool>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(_) => Err(invalid(key, "must be a boolean")),
    }
}

fn parse_system(v: &Value, path: &str) -> Result<SystemSpec, ConfigError> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid(path, "must be an object"))?;
    if let Some(name) = obj.get("builtin") {
        let name = name
            .as_str()
            .ok_or_else(|| invalid(&format!("{path}.builtin"), "must be a string"))?;
        return Ok(SystemSpec::Builtin(name.to_string()));
    }
    if let Some(maps) = obj.get("maps") {
        let arr = maps
            .as_array()
            .ok_or_else(|| invalid(&format!("{path}.maps"), "must be an array"))?;
        let mut specs = Vec::with_capacity(arr.len());
        for (k, entry) in arr.iter().enumerate() {
            let mpath = format!("{path}.maps[{k}]");
            let e = entry
                .as_object()
                .ok_or_else(|| invalid(&mpath, "must be an object"))?;
            let ratio = number_at(
                e.get("ratio")
                    .ok_or_else(|| invalid(&format!("{mpath}.ratio"), "missing required field"))?,
                &format!("{mpath}.ratio"),
            )?;
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(invalid(
                    &format!("{mpath}.ratio"),
                    format!("ratio {ratio} outside (0, 1)"),
                ));
            }
            let rotation_deg = match e.get("rotation_deg") {
                None => 0.0,
                Some(v) => number_at(v, &format!("{mpath}.rotation_deg"))?,
            };
            let reflect = match e.get("reflect") {
                None => false,
                Some(Value::Bool(b)) => *b,
                Some(_) => return Err(invalid(&format!("{mpath}.reflect"), "must be a boolean")),
            };
            let translate = match e.get("translate") {
                None => (0.0, 0.0),
                Some(Value::Array(a)) if a.len() == 2 => (
                    number_at(&a[0], &format!("{mpath}.translate[0]"))?,
                    number_at(&a[1], &format!("{mpath}.translate[1]"))?,
                ),
                Some(_) => {
                    return Err(invalid(
                        &format!("{mpath}.translate"),
                        "must be a two-element array",
                    ))
                }
            };
            specs.push(MapSpec {
                ratio,
                rotation_deg,
                reflect,
                translate,
            });
        }
        return Ok(SystemSpec::Maps(specs));
    }
    let count = match obj.get("count") {
        Some(v) => {
            let x = number_at(v, &format!("{path}.count"))?;
            if !(x >= 2.0) || x.fract() != 0.0 {
                return Err(invalid(
                    &format!("{path}.count"),
                    "must be an integer ≥ 2",
                ));
            }
            x as usize
        }
        None => {
            return Err(invalid(
                path,
                "need {\"count\", \"ratio\"}, {\"maps\": [...]}, or {\"builtin\": name}",
            ))
        }
    };
    let ratio = number_at(
        obj.get("ratio")
            .ok_or_else(|| invalid(&format!("{path}.ratio"), "missing required field"))?,
        &format!("{path}.ratio"),
    )?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid(
            &format!("{path}.ratio"),
            format!("ratio {ratio} outside (0, 1)"),
        ));
    }
    Ok(SystemSpec::Uniform { count, ratio })
}

fn parse_generator(v: &Value, path: &str) -> Result<GeneratorSpec, ConfigError> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid(path, "must be an object"))?;
    if let Some(name) = obj.get("builtin") {
        let name = name
            .as_str()
            .ok_or_else(|| invalid(&format!("{path}.builtin"), "must be a string"))?;
        return Ok(GeneratorSpec::Builtin(name.to_string()));
    }
    if let Some(p) = obj.get("profile") {
        let ppath = format!("{path}.profile");
        let e = p
            .as_object()
            .ok_or_else(|| invalid(&ppath, "must be an object"))?;
        let d = {
            let x = number_at(
                e.get("d")
                    .ok_or_else(|| invalid(&format!("{ppath}.d"), "missing required field"))?,
                &format!("{ppath}.d"),
            )?;
            if !(x >= 1.0) || x.fract() != 0.0 {
                return Err(invalid(&format!("{ppath}.d"), "must be a positive integer"));
            }
            x as u32
        };
        let kappa = match e.get("kappa") {
            Some(Value::Array(a)) => a
                .iter()
                .enumerate()
                .map(|(i, v)| number_at(v, &format!("{ppath}.kappa[{i}]")))
                .collect::<Result<Vec<f64>, _>>()?,
            _ => return Err(invalid(&format!("{ppath}.kappa"), "must be an array")),
        };
        let h = number_at(
            e.get("h")
                .ok_or_else(|| invalid(&format!("{ppath}.h"), "missing required field"))?,
            &format!("{ppath}.h"),
        )?;
        let g = number_at(
            e.get("g")
                .ok_or_else(|| invalid(&format!("{ppath}.g"), "missing required field"))?,
            &format!("{ppath}.g"),
        )?;
        let lambda_table = parse_optional_table(e, &ppath)?;
        return Ok(GeneratorSpec::Profile {
            d,
            kappa,
            h,
            g,
            lambda_table,
        });
    }
    if let Some(p) = obj.get("polygon") {
        let vertices = parse_point_list(p, &format!("{path}.polygon"))?;
        let h = obj
            .get("h")
            .map(|v| number_at(v, &format!("{path}.h")))
            .transpose()?;
        let g = obj
            .get("g")
            .map(|v| number_at(v, &format!("{path}.g")))
            .transpose()?;
        let lambda_table = parse_optional_table(obj, path)?;
        return Ok(GeneratorSpec::Polygon {
            vertices,
            h,
            g,
            lambda_table,
        });
    }
    Err(invalid(
        path,
        "need {\"builtin\": name}, {\"polygon\": [...]}, or {\"profile\": {...}}",
    ))
}

fn parse_optional_table(
    obj: &Map<String, Value>,
    path: &str,
) -> Result<Option<Vec<(f64, f64)>>, ConfigError> {
    match obj.get("lambda_table") {
        None => Ok(None),
        Some(v) => Ok(Some(parse_point_list(
            v,
            &format!("{path}.lambda_table"),
        )?)),
    }
}

fn parse_point_list(v: &Value, path: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    let arr = v
        .as_array()
        .ok_or_else(|| invalid(path, "must be an array of [x, y] pairs"))?;
    arr.iter()
        .enumerate()
        .map(|(i, pair)| {
            let ipath = format!("{path}[{i}]");
            match pair {
                Value::Array(xy) if xy.len() == 2 => Ok((
                    number_at(&xy[0], &format!("{ipath}[0]"))?,
                    number_at(&xy[1], &format!("{ipath}[1]"))?,
                )),
                _ => Err(invalid(&ipath, "must be a two-element array")),
            }
        })
        .collect()
}

fn parse_eps_grid(v: &Value, path: &str) -> Result<EpsGrid, ConfigError> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid(path, "must be an object"))?;
    let min = number_at(
        obj.get("min")
            .ok_or_else(|| invalid(&format!("{path}.min"), "missing required field"))?,
        &format!("{path}.min"),
    )?;
    let max = number_at(
        obj.get("max")
            .ok_or_else(|| invalid(&format!("{path}.max"), "missing required field"))?,
        &format!("{path}.max"),
    )?;
    let count = {
        let x = number_at(
            obj.get("count")
                .ok_or_else(|| invalid(&format!("{path}.count"), "missing required field"))?,
            &format!("{path}.count"),
        )?;
        if !(x >= 1.0) || x.fract() != 0.0 {
            return Err(invalid(&format!("{path}.count"), "must be an integer ≥ 1"));
        }
        x as usize
    };
    let log_spacing = match obj.get("spacing") {
        None => false,
        Some(Value::String(s)) if s == "linear" => false,
        Some(Value::String(s)) if s == "log" => true,
        Some(_) => {
            return Err(invalid(
                &format!("{path}.spacing"),
                "must be \"linear\" or \"log\"",
            ))
        }
    };
    Ok(EpsGrid {
        min,
        max,
        count,
        log_spacing,
    })
}

/// Materialize a SystemSpec.
pub fn build_system(spec: &SystemSpec) -> Result<SelfSimilarSystem, ConfigError> {
    match spec {
        SystemSpec::Uniform { count, ratio } => SelfSimilarSystem::uniform(2, *count, *ratio)
            .map_err(|e| invalid("system", e.to_string())),
        SystemSpec::Maps(maps) => {
            let sims = maps
                .iter()
                .map(|m| {
                    Similitude::with_rigid(
                        m.ratio,
                        RigidMotion {
                            rotation: m.rotation_deg.to_radians(),
                            reflect: m.reflect,
                            translate: Point::new(m.translate.0, m.translate.1),
                        },
                    )
                })
                .collect();
            SelfSimilarSystem::new(2, sims).map_err(|e| invalid("system.maps", e.to_string()))
        }
        SystemSpec::Builtin(name) => match name.as_str() {
            "example1" => Ok(crate::fixtures::example1_system()),
            other => Err(invalid(
                "system.builtin",
                format!("unknown builtin {other:?}; available: \"example1\""),
            )),
        },
    }
}

/// Materialize a GeneratorSpec into polygon (when given) and profile (when
/// derivable); `need_profile` demands the full three-regime data.
pub fn build_generator(
    spec: &GeneratorSpec,
    path: &str,
    need_profile: bool,
) -> Result<(Option<Polygon>, Option<GeneratorProfile>), ConfigError> {
    match spec {
        GeneratorSpec::Builtin(name) => match name.as_str() {
            "hexagram" => {
                let (poly, prof) = crate::geometry::hexagram_builtin();
                Ok((Some(poly), Some(prof)))
            }
            "square" => Ok((
                Some(crate::fixtures::unit_square_polygon()),
                Some(crate::fixtures::unit_square_profile()),
            )),
            other => Err(invalid(
                &format!("{path}.builtin"),
                format!("unknown builtin {other:?}; available: \"hexagram\", \"square\""),
            )),
        },
        GeneratorSpec::Polygon {
            vertices,
            h,
            g,
            lambda_table,
        } => {
            let polygon = Polygon::new(
                vertices
                    .iter()
                    .map(|&(x, y)| Point::new(x, y))
                    .collect::<Vec<_>>(),
            )
            .map_err(|e| invalid(&format!("{path}.polygon"), e.to_string()))?;
            if !need_profile {
                return Ok((Some(polygon), None));
            }
            let h = h.ok_or_else(|| {
                invalid(
                    &format!("{path}.h"),
                    "required to build a volume profile from a polygon",
                )
            })?;
            let (k1, k0) = steiner_coefficients(&polygon)
                .map_err(|e| invalid(&format!("{path}.polygon"), e.to_string()))?;
            let area = crate::geometry::polygon_area(&polygon);
            let (g, lambda) = resolve_band(*g, lambda_table.as_deref(), h, path)?;
            let profile = GeneratorProfile::new(2, vec![k0, k1, -area], h, g, lambda)
                .map_err(|e| invalid(path, e.to_string()))?;
            Ok((Some(polygon), Some(profile)))
        }
        GeneratorSpec::Profile {
            d,
            kappa,
            h,
            g,
            lambda_table,
        } => {
            let (g, lambda) = resolve_band(Some(*g), lambda_table.as_deref(), *h, path)?;
            let profile = GeneratorProfile::new(*d, kappa.clone(), *h, g, lambda)
                .map_err(|e| invalid(path, e.to_string()))?;
            Ok((None, Some(profile)))
        }
    }
}

fn resolve_band(
    g: Option<f64>,
    table: Option<&[(f64, f64)]>,
    h: f64,
    path: &str,
) -> Result<(f64, Option<LambdaSpec>), ConfigError> {
    match table {
        Some(entries) => {
            let table = LambdaTable::new(entries.to_vec())
                .map_err(|e| invalid(&format!("{path}.lambda_table"), e.to_string()))?;
            let (lo, hi) = table.domain();
            if (lo - h).abs() > 1e-9 * h.max(1.0) {
                return Err(invalid(
                    &format!("{path}.lambda_table"),
                    format!("table must start at h = {h}, starts at {lo}"),
                ));
            }
            let g = g.unwrap_or(hi);
            Ok((g, Some(LambdaSpec::Table(table))))
        }
        None => {
            let g = g.unwrap_or(h);
            if g != h {
                return Err(invalid(
                    &format!("{path}.lambda_table"),
                    "required when g > h (the transition band needs λ data)",
                ));
            }
            Ok((g, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_expressions() {
        assert_relative_eq!(
            parse_exact_expression("pi").unwrap(),
            std::f64::consts::PI
        );
        assert_relative_eq!(parse_exact_expression("sqrt(3)").unwrap(), 3f64.sqrt());
        assert_relative_eq!(
            parse_exact_expression("1/sqrt(3)").unwrap(),
            3f64.sqrt().recip()
        );
        assert_relative_eq!(
            parse_exact_expression("log(4)/log(6)").unwrap(),
            4f64.ln() / 6f64.ln()
        );
        assert!(parse_exact_expression("2+2").is_none());
        assert!(parse_exact_expression("sqrt(-1)").is_none());
    }

    #[test]
    fn parse_compare_config() {
        let text = r#"{
            "mode": "compare",
            "system": {"count": 24, "ratio": 0.16666666666666666},
            "generator": {"builtin": "hexagram"},
            "eps_grid": {"min": 0.1, "max": 0.5, "count": 9, "spacing": "linear"},
            "truncation": 1000,
            "window": 3510.0,
            "seed": 7
        }"#;
        let config = RunConfig::parse(text).unwrap();
        assert_eq!(config.mode, Mode::Compare);
        assert_eq!(config.truncation, 1000);
        let grid = config.eps_grid.unwrap().points();
        assert_eq!(grid.len(), 9);
        assert_relative_eq!(grid[0], 0.1);
        assert_relative_eq!(grid[8], 0.5);
        assert_relative_eq!(grid[1] - grid[0], 0.05, epsilon = 1e-12);
    }

    #[test]
    fn negative_ratio_names_field_path() {
        let text = r#"{
            "mode": "dimensions",
            "system": {"maps": [
                {"ratio": 0.5},
                {"ratio": -0.25}
            ]},
            "window": 10
        }"#;
        let err = RunConfig::parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("system.maps[1].ratio"), "got: {msg}");
    }

    #[test]
    fn mode_required_fields() {
        let err = RunConfig::parse(r#"{"mode": "compare"}"#).unwrap_err();
        assert!(err.to_string().contains("system"));
        let err = RunConfig::parse(
            r#"{"mode": "conditions", "system": {"count": 3, "ratio": 0.5}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("rigid"));
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = r#"{
            "mode": "tube",
            "system": {"count": 3, "ratio": 0.5},
            "generator": {"builtin": "square"},
            "eps_grid": {"min": 0.05, "max": 0.4, "count": 5, "spacing": "log"},
            "truncation": 50,
            "window": 100.0,
            "resolution": 512,
            "seed": 3
        }"#;
        let config = RunConfig::parse(text).unwrap();
        let canonical = config.to_canonical_json().to_string();
        let reparsed = RunConfig::parse(&canonical).unwrap();
        assert_eq!(config, reparsed);
        assert_eq!(config.content_hash(), reparsed.content_hash());
    }

    #[test]
    fn builtin_system_resolves() {
        let sys = build_system(&SystemSpec::Builtin("example1".into())).unwrap();
        assert_eq!(sys.maps().len(), 24);
        assert!(build_system(&SystemSpec::Builtin("nope".into())).is_err());
    }

    #[test]
    fn polygon_generator_without_h_fails_for_profiles() {
        let spec = GeneratorSpec::Polygon {
            vertices: vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
            h: None,
            g: None,
            lambda_table: None,
        };
        // Fine when only the polygon is needed.
        assert!(build_generator(&spec, "generator", false).is_ok());
        let err = build_generator(&spec, "generator", true).unwrap_err();
        assert!(err.to_string().contains("generator.h"));
    }

    #[test]
    fn square_profile_from_polygon_spec() {
        let spec = GeneratorSpec::Polygon {
            vertices: vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
            h: Some(0.5),
            g: Some(0.5),
            lambda_table: None,
        };
        let (_, prof) = build_generator(&spec, "generator", true).unwrap();
        let prof = prof.unwrap();
        assert_relative_eq!(prof.volume(0.1), 0.36, epsilon = 1e-14);
    }
}
