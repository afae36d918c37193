//! Scenario files: flat JSON objects resolved into fully specified runs.

use std::path::Path;

use fracheat_core::evolution::Scheme;
use fracheat_core::{build_grid, Domain, ExponentMap, FractionalParams, Grid, Point};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Context, HarnessError, Result};

const KNOWN_KEYS: [&str; 12] = [
    "name",
    "d",
    "alpha",
    "c",
    "domain",
    "h",
    "k_schedule",
    "k_factor",
    "u0",
    "times",
    "scheme",
    "seed",
];

/// Initial datum, evaluated on every grid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// Indicator of `|x| ≤ radius`.
    Ball { radius: f64 },
    /// `exp(−|x|²/(2σ²))`.
    Gaussian { width: f64 },
    /// `1/h^d` on the cell(s) nearest the origin.
    PointCell,
    /// Rows `x[,y],value`; each node takes the value of the nearest row.
    Table {
        source: String,
        sha256: String,
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let d = grid.dim();
        match self {
            InitialData::Ball { radius } => grid
                .radii()
                .iter()
                .map(|r| if *r <= radius + 1e-12 { 1.0 } else { 0.0 })
                .collect(),
            InitialData::Gaussian { width } => grid
                .radii()
                .iter()
                .map(|r| (-(r * r) / (2.0 * width * width)).exp())
                .collect(),
            InitialData::PointCell => {
                let rmin = grid.radii().into_iter().fold(f64::INFINITY, f64::min);
                let mass = 1.0 / grid.cell_volume();
                grid.radii()
                    .iter()
                    .map(|r| {
                        if *r <= rmin * (1.0 + 1e-12) {
                            mass
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            InitialData::Table { points, values, .. } => grid
                .nodes
                .iter()
                .map(|x| {
                    let mut best = (f64::INFINITY, 0.0);
                    for (p, v) in points.iter().zip(values) {
                        let dist: f64 = (0..d).map(|k| (p[k] - x[k]).powi(2)).sum();
                        if dist < best.0 {
                            best = (dist, *v);
                        }
                    }
                    best.1
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KSchedule {
    /// Geometric levels from `min V` with the given factor, plus one beyond `max V`.
    Auto {
        factor: f64,
    },
    Explicit {
        levels: Vec<f64>,
    },
}

/// A fully resolved scenario. Serialized verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: Option<String>,
    pub d: usize,
    pub alpha: f64,
    /// Value of `c` as written in the file.
    pub c_spec: String,
    pub c: f64,
    pub c_star: f64,
    pub domain: Domain,
    /// Grid spacings, coarse to fine.
    pub h: Vec<f64>,
    pub k_schedule: KSchedule,
    pub u0: InitialData,
    pub times: Vec<f64>,
    pub scheme: Scheme,
    pub seed: u64,
}

impl Scenario {
    pub fn params(&self) -> FractionalParams {
        FractionalParams::new(self.d, self.alpha).expect("validated at load")
    }

    pub fn grids(&self) -> Vec<Grid> {
        self.h
            .iter()
            .map(|h| build_grid(self.domain, *h).expect("validated at load"))
            .collect()
    }

    pub fn subcritical(&self) -> bool {
        self.c <= self.c_star * (1.0 + 1e-12)
    }

    /// `β(c)`, zero for `c = 0`.
    pub fn beta(&self) -> Result<f64> {
        if self.c == 0.0 {
            return Ok(0.0);
        }
        ExponentMap::new(self.params())
            .and_then(|m| m.beta_of_c(self.c))
            .context(|| format!("β(c) for c = {}", self.c))
    }

    pub fn ks(&self, potential: &[f64]) -> Result<Vec<f64>> {
        match &self.k_schedule {
            // without a potential the truncation is inert; two levels show it
            KSchedule::Auto { factor } if potential.iter().all(|v| *v == 0.0) => {
                Ok(vec![1.0, *factor])
            }
            KSchedule::Auto { factor } => {
                fracheat_core::evolution::k_schedule(potential, None, *factor)
                    .context(|| "k-schedule".into())
            }
            KSchedule::Explicit { levels } => Ok(levels.clone()),
        }
    }

    /// Content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex_digest(
            serde_json::to_string(self)
                .expect("scenario serializes")
                .as_bytes(),
        )
    }

    /// Same scenario with a different coupling, as written in `spec`.
    pub fn with_c(&self, spec: &str) -> Result<Scenario> {
        let mut out = self.clone();
        out.c = parse_c(&Value::String(spec.into()), self.c_star)
            .map_err(|m| HarnessError::scenario("<sweep>", m))?;
        out.c_spec = spec.to_string();
        Ok(out)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `0.25`, `"cstar"`, `"0.5*cstar"`, `"cstar*0.5"`, `"0.5cstar"`.
pub fn parse_c(v: &Value, c_star: f64) -> std::result::Result<f64, String> {
    let c = match v {
        Value::Number(n) => n.as_f64().ok_or("c is not a finite number")?,
        Value::String(s) => {
            let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
            let t = t.to_ascii_lowercase();
            if let Some(rest) = t.strip_suffix("cstar") {
                let f = rest.trim_end_matches('*');
                let f = if f.is_empty() {
                    1.0
                } else {
                    f.parse::<f64>()
                        .map_err(|_| format!("cannot read c = \"{s}\""))?
                };
                f * c_star
            } else if let Some(rest) = t.strip_prefix("cstar*") {
                rest.parse::<f64>()
                    .map_err(|_| format!("cannot read c = \"{s}\""))?
                    * c_star
            } else {
                t.parse::<f64>()
                    .map_err(|_| format!("cannot read c = \"{s}\""))?
            }
        }
        _ => return Err("c must be a number or a string like \"0.5*cstar\"".into()),
    };
    if !(c >= 0.0 && c.is_finite()) {
        return Err(format!("c = {c} must be finite and nonnegative"));
    }
    Ok(c)
}

struct Fields<'a> {
    path: &'a str,
    map: &'a Map<String, Value>,
}

impl Fields<'_> {
    fn err(&self, msg: impl Into<String>) -> HarnessError {
        HarnessError::scenario(self.path, msg)
    }

    fn required(&self, key: &str) -> Result<&Value> {
        self.map
            .get(key)
            .ok_or_else(|| self.err(format!("missing field '{key}'")))
    }

    fn number(&self, key: &str, v: &Value) -> Result<f64> {
        v.as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| self.err(format!("field '{key}' must be a finite number")))
    }

    fn numbers(&self, key: &str, v: &Value) -> Result<Vec<f64>> {
        let arr = v
            .as_array()
            .ok_or_else(|| self.err(format!("field '{key}' must be an array of numbers")))?;
        arr.iter().map(|x| self.number(key, x)).collect()
    }
}

/// Reads and resolves a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, &path.display().to_string(), base)
}

/// Resolves scenario text; `base` anchors relative table paths.
pub fn parse_scenario(text: &str, origin: &str, base: &Path) -> Result<Scenario> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| HarnessError::scenario(origin, e.to_string()))?;
    let map = value
        .as_object()
        .ok_or_else(|| HarnessError::scenario(origin, "top level must be a JSON object"))?;
    let f = Fields { path: origin, map };
    let mut unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !KNOWN_KEYS.contains(k))
        .collect();
    if !unknown.is_empty() {
        unknown.sort_unstable();
        return Err(f.err(format!("unknown keys: {}", unknown.join(", "))));
    }
    for (k, v) in map {
        if v.is_object()
            || v.as_array()
                .is_some_and(|a| a.iter().any(|x| x.is_array() || x.is_object()))
        {
            return Err(f.err(format!("field '{k}' is nested; scenarios are flat")));
        }
    }

    let d = f
        .required("d")?
        .as_u64()
        .ok_or_else(|| f.err("field 'd' must be a positive integer"))? as usize;
    let alpha = f.number("alpha", f.required("alpha")?)?;
    if !(1..=2).contains(&d) {
        return Err(f.err(format!("d = {d}: grids exist for d = 1 and d = 2 only")));
    }
    let params = FractionalParams::new(d, alpha).map_err(|e| f.err(e.to_string()))?;
    let map_c = ExponentMap::new(params).map_err(|e| f.err(e.to_string()))?;
    let c_star = map_c.c_star();
    let c_value = f.required("c")?;
    let c = parse_c(c_value, c_star).map_err(|m| f.err(m))?;
    let c_spec = match c_value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };

    let dom = f.numbers("domain", f.required("domain")?)?;
    let domain = match (d, dom.len()) {
        (1, 2) => Domain::interval(dom[0], dom[1]),
        (2, 2) => Domain::Box {
            lo: [dom[0]; 2],
            hi: [dom[1]; 2],
        },
        (2, 4) => Domain::Box {
            lo: [dom[0], dom[2]],
            hi: [dom[1], dom[3]],
        },
        _ => {
            return Err(f.err(format!(
                "domain needs [lo, hi]{} for d = {d}",
                if d == 2 {
                    " or [x_lo, x_hi, y_lo, y_hi]"
                } else {
                    ""
                }
            )))
        }
    };
    let (lo, hi) = (domain.lower(), domain.upper());
    if (0..d).any(|k| !(lo[k] < 0.0 && 0.0 < hi[k])) {
        return Err(f.err("0 ∉ domain: the singular point must lie inside"));
    }

    let h = f.numbers("h", f.required("h")?)?;
    if h.is_empty() {
        return Err(f.err("field 'h' lists no grid levels"));
    }
    if h.windows(2).any(|w| w[1] >= w[0]) {
        return Err(f.err("grid levels in 'h' must decrease strictly (coarse to fine)"));
    }
    for &hv in &h {
        build_grid(domain, hv).map_err(|e| f.err(format!("h = {hv}: {e}")))?;
    }

    let k_schedule = match (map.get("k_schedule"), map.get("k_factor")) {
        (Some(_), Some(_)) => return Err(f.err("give either 'k_schedule' or 'k_factor', not both")),
        (Some(Value::String(s)), None) if s == "auto" => KSchedule::Auto { factor: 4.0 },
        (Some(v), None) => {
            let levels = f.numbers("k_schedule", v)?;
            if levels.is_empty() || levels[0] <= 0.0 || levels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(f.err("'k_schedule' must be positive and strictly increasing"));
            }
            KSchedule::Explicit { levels }
        }
        (None, Some(v)) => {
            let factor = f.number("k_factor", v)?;
            if factor.is_nan() || factor <= 1.0 {
                return Err(f.err("'k_factor' must exceed 1"));
            }
            KSchedule::Auto { factor }
        }
        (None, None) => KSchedule::Auto { factor: 4.0 },
    };

    let u0_spec = f
        .required("u0")?
        .as_str()
        .ok_or_else(|| f.err("field 'u0' must be a string such as \"ball:0.2\""))?;
    let u0 = parse_u0(u0_spec, d, base).map_err(|m| f.err(m))?;

    let times = f.numbers("times", f.required("times")?)?;
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(f.err("'times' must be positive and strictly increasing"));
    }

    let scheme = match map.get("scheme") {
        None => Scheme::Expm,
        Some(Value::String(s)) => s
            .parse()
            .map_err(|e: fracheat_core::Error| f.err(e.to_string()))?,
        Some(_) => return Err(f.err("field 'scheme' must be a string")),
    };
    let seed = match map.get("seed") {
        None => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| f.err("field 'seed' must be a nonnegative integer"))?,
    };
    let name = match map.get("name") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(f.err("field 'name' must be a string")),
    };

    Ok(Scenario {
        name,
        d,
        alpha,
        c_spec,
        c,
        c_star,
        domain,
        h,
        k_schedule,
        u0,
        times,
        scheme,
        seed,
    })
}

fn parse_u0(spec: &str, d: usize, base: &Path) -> std::result::Result<InitialData, String> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let positive = |what: &str| -> std::result::Result<f64, String> {
        match arg.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(format!("u0 \"{spec}\": {what} must be a positive number")),
        }
    };
    match kind {
        "ball" => Ok(InitialData::Ball {
            radius: positive("radius")?,
        }),
        "gaussian" => Ok(InitialData::Gaussian {
            width: positive("width")?,
        }),
        "point" => Ok(InitialData::PointCell),
        "csv" => read_table(&base.join(arg), d),
        _ => Err(format!(
            "u0 \"{spec}\": expected ball:R, gaussian:S, point or csv:FILE"
        )),
    }
}

fn read_table(path: &Path, d: usize) -> std::result::Result<InitialData, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("u0 table {}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| format!("u0 table {} is not UTF-8", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or("u0 table is empty")?
        .split(',')
        .map(str::trim)
        .collect();
    let expected: &[&str] = if d == 1 {
        &["x", "value"]
    } else {
        &["x", "y", "value"]
    };
    if header != expected {
        return Err(format!("u0 table header must be {}", expected.join(",")));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let cells = cells.map_err(|_| format!("u0 table row {} is not numeric", n + 2))?;
        if cells.len() != d + 1 {
            return Err(format!(
                "u0 table row {} has {} columns",
                n + 2,
                cells.len()
            ));
        }
        if cells[d] < 0.0 {
            return Err(format!("u0 table row {} is negative", n + 2));
        }
        let mut p = cells[..d].to_vec();
        p.resize(d, 0.0);
        points.push(p);
        values.push(cells[d]);
    }
    if values.is_empty() {
        return Err("u0 table has no rows".into());
    }
    Ok(InitialData::Table {
        source: path.display().to_string(),
        sha256: hex_digest(&bytes),
        points,
        values,
    })
}

/// Node coordinates as a fixed-width point, for CSV emission.
pub fn coords(p: &Point, d: usize) -> Vec<f64> {
    p[..d].to_vec()
}
