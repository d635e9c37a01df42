//! Job configuration files.
//!
//! ```text
//! # comment
//! [model]
//! m = 0.03, s = 0.10, rho = 0.2
//! tau = 4
//! kappa = 0.5, 0.5        # list values continue after commas
//! [sim]
//! dt = 0.05
//! [sweep]
//! param = gap
//! min = -0.05
//! max = 0.01
//! points = 61
//! [search]
//! hold = gap
//! [output]
//! dir = out
//! ```

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::Hold;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sim::{NoiseMode, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    Analytic,
    Simulate,
    Agents,
    Sweep,
    OptimalTax,
    Classify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

/// Real-valued model fields a sweep may vary, plus the performance gap
/// `m_tilde - mu_tilde` (varied through `mu_tilde`).
pub const SWEEP_PARAMS: [&str; 10] = [
    "gap", "m", "s", "rho", "tau", "mu_tilde", "sigma", "phi", "f", "j0",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }

    /// `base` with the swept parameter set to `value`.
    pub fn apply(&self, base: &ModelParams, value: f64) -> Result<ModelParams> {
        let mut p = base.clone();
        match self.param.as_str() {
            "gap" => {
                let d = crate::model::derive(base)?;
                p.mu_tilde = d.m_tilde - value;
            }
            "m" => p.m = value,
            "s" => p.s = value,
            "rho" => p.rho = value,
            "tau" => p.tau = value,
            "mu_tilde" => p.mu_tilde = value,
            "sigma" => p.sigma = value,
            "phi" => p.phi = value,
            "f" => p.f = value,
            "j0" => p.j0 = value,
            other => {
                return Err(Error::invalid(
                    "param",
                    format!("`{other}` cannot be swept"),
                ))
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchOptions {
    pub hold: Hold,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub model: ModelParams,
    pub sim: SimConfig,
    pub sweep: Option<SweepAxis>,
    pub search: SearchOptions,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub kind: JobKind,
    pub config: JobConfig,
}

const SECTIONS: [&str; 5] = ["model", "sim", "sweep", "search", "output"];
const MODEL_REQUIRED: [&str; 8] = ["m", "s", "rho", "tau", "mu_tilde", "sigma", "phi", "f"];

fn allowed_keys(section: &str) -> &'static [&'static str] {
    match section {
        "model" => &[
            "m", "s", "rho", "tau", "mu_tilde", "sigma", "phi", "f", "j0", "n_agents", "kappa",
        ],
        "sim" => &[
            "dt",
            "t_total",
            "t_burnin",
            "seed",
            "mode",
            "n_paths",
            "record_every",
            "noise_substeps",
        ],
        "sweep" => &["param", "min", "max", "points", "spacing"],
        "search" => &["hold", "phi_min", "phi_max"],
        "output" => &["dir"],
        _ => &[],
    }
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line: Some(line),
        msg: msg.into(),
    }
}

/// Section -> key -> entry, rejecting unknown sections, unknown keys and
/// duplicates.
fn tokenize(text: &str) -> Result<HashMap<String, HashMap<String, Entry>>> {
    let mut sections: HashMap<String, HashMap<String, Entry>> = HashMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let close = rest
                .find(']')
                .ok_or_else(|| config_err(line_no, "unterminated section header"))?;
            let name = rest[..close].trim();
            if !SECTIONS.contains(&name) {
                return Err(config_err(
                    line_no,
                    format!(
                        "unknown section [{name}]; expected one of {}",
                        SECTIONS.join(", ")
                    ),
                ));
            }
            sections.entry(name.to_string()).or_default();
            current = Some(name.to_string());
            line = rest[close + 1..].trim();
            if line.is_empty() {
                continue;
            }
        }
        let section = current
            .clone()
            .ok_or_else(|| config_err(line_no, "key outside of any [section]"))?;
        // `a = 1, b = 2` pairs; a segment without `=` extends the previous value
        let mut pairs: Vec<(String, String)> = Vec::new();
        for segment in line.split(',') {
            match segment.split_once('=') {
                Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
                None => match pairs.last_mut() {
                    Some((_, v)) => {
                        v.push(',');
                        v.push_str(segment.trim());
                    }
                    None => {
                        return Err(config_err(
                            line_no,
                            format!("expected `key = value`, got `{line}`"),
                        ))
                    }
                },
            }
        }
        let table = sections
            .get_mut(&section)
            .expect("section registered above");
        for (key, value) in pairs {
            if key.is_empty() {
                return Err(config_err(line_no, "empty key"));
            }
            if !allowed_keys(&section).contains(&key.as_str()) {
                return Err(config_err(
                    line_no,
                    format!(
                        "unknown key `{key}` in [{section}]; allowed: {}",
                        allowed_keys(&section).join(", ")
                    ),
                ));
            }
            if let Some(first) = table.get(&key) {
                return Err(config_err(
                    line_no,
                    format!(
                        "duplicate key `{key}` in [{section}] (first set on line {})",
                        first.line
                    ),
                ));
            }
            if value.is_empty() {
                return Err(config_err(line_no, format!("missing value for `{key}`")));
            }
            table.insert(
                key,
                Entry {
                    value,
                    line: line_no,
                },
            );
        }
    }
    Ok(sections)
}

fn parse_value<T: FromStr>(e: &Entry, key: &str, what: &str) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| config_err(e.line, format!("`{key}` expects {what}, got `{}`", e.value)))
}

struct Section<'a>(Option<&'a HashMap<String, Entry>>);

impl Section<'_> {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.0.and_then(|t| t.get(key))
    }
    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|e| parse_value::<f64>(e, key, "a number"))
            .transpose()
    }
    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|e| parse_value::<usize>(e, key, "a non-negative integer"))
            .transpose()
    }
}

pub fn parse_config(text: &str) -> Result<JobConfig> {
    let sections = tokenize(text)?;
    let section = |name: &str| Section(sections.get(name));

    let model = section("model");
    let missing: Vec<&str> = MODEL_REQUIRED
        .iter()
        .copied()
        .filter(|k| model.get(k).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Config {
            line: None,
            msg: format!("missing required [model] fields: {}", missing.join(", ")),
        });
    }
    let req = |k: &str| -> Result<f64> { Ok(model.real(k)?.expect("checked above")) };
    let n_agents = model.count("n_agents")?.unwrap_or(1);
    let kappa = match model.get("kappa") {
        Some(e) => e
            .value
            .split(',')
            .map(|x| {
                x.trim().parse::<f64>().map_err(|_| {
                    config_err(
                        e.line,
                        format!("`kappa` expects a list of numbers, got `{}`", e.value),
                    )
                })
            })
            .collect::<Result<Vec<f64>>>()?,
        None => ModelParams::uniform_kappa(n_agents),
    };
    let model_params = ModelParams {
        m: req("m")?,
        s: req("s")?,
        rho: req("rho")?,
        tau: req("tau")?,
        mu_tilde: req("mu_tilde")?,
        sigma: req("sigma")?,
        phi: req("phi")?,
        f: req("f")?,
        j0: model.real("j0")?.unwrap_or(0.0),
        n_agents,
        kappa,
    };
    model_params.validate()?;

    let sim = section("sim");
    let defaults = SimConfig::default();
    let mode = match sim.get("mode") {
        None => defaults.mode,
        Some(e) => match e.value.as_str() {
            "white" => NoiseMode::White,
            "colored" | "coloured" => NoiseMode::Colored,
            other => {
                return Err(config_err(
                    e.line,
                    format!("`mode` expects white or colored, got `{other}`"),
                ))
            }
        },
    };
    let sim_config = SimConfig {
        dt: sim.real("dt")?.unwrap_or(defaults.dt),
        t_total: sim.real("t_total")?.unwrap_or(defaults.t_total),
        t_burnin: sim.real("t_burnin")?.unwrap_or(defaults.t_burnin),
        seed: sim
            .get("seed")
            .map(|e| parse_value::<u64>(e, "seed", "an unsigned 64-bit integer"))
            .transpose()?
            .unwrap_or(defaults.seed),
        mode,
        n_paths: sim.count("n_paths")?.unwrap_or(defaults.n_paths),
        record_every: sim.count("record_every")?.unwrap_or(defaults.record_every),
        noise_substeps: sim
            .get("noise_substeps")
            .map(|e| parse_value::<u32>(e, "noise_substeps", "a positive integer"))
            .transpose()?
            .unwrap_or(defaults.noise_substeps),
    };

    let sweep = match sections.get("sweep") {
        None => None,
        Some(_) => {
            let s = section("sweep");
            let need = |k: &str| {
                s.get(k).ok_or_else(|| Error::Config {
                    line: None,
                    msg: format!("[sweep] needs `{k}`"),
                })
            };
            let param_entry = need("param")?;
            if !SWEEP_PARAMS.contains(&param_entry.value.as_str()) {
                return Err(config_err(
                    param_entry.line,
                    format!(
                        "`param` must name a real-valued model field or `gap`, got `{}` (allowed: {})",
                        param_entry.value,
                        SWEEP_PARAMS.join(", ")
                    ),
                ));
            }
            let spacing = match s.get("spacing") {
                None => Spacing::Linear,
                Some(e) => match e.value.as_str() {
                    "linear" => Spacing::Linear,
                    "log" => Spacing::Log,
                    other => {
                        return Err(config_err(
                            e.line,
                            format!("`spacing` expects linear or log, got `{other}`"),
                        ))
                    }
                },
            };
            let axis = SweepAxis {
                param: param_entry.value.clone(),
                min: parse_value(need("min")?, "min", "a number")?,
                max: parse_value(need("max")?, "max", "a number")?,
                points: parse_value(need("points")?, "points", "a non-negative integer")?,
                spacing,
            };
            if axis.points < 2 {
                return Err(Error::invalid("points", "a sweep needs at least 2 points"));
            }
            if !(axis.min.is_finite() && axis.max.is_finite() && axis.max > axis.min) {
                return Err(Error::invalid("max", "sweep needs finite min < max"));
            }
            if axis.spacing == Spacing::Log && !(axis.min > 0.0) {
                return Err(Error::invalid("min", "log spacing needs min > 0"));
            }
            Some(axis)
        }
    };

    let search = section("search");
    let hold = match search.get("hold") {
        None => Hold::Gap,
        Some(e) => match e.value.as_str() {
            "gap" => Hold::Gap,
            "nu" => Hold::Nu,
            other => {
                return Err(config_err(
                    e.line,
                    format!("`hold` expects gap or nu, got `{other}`"),
                ))
            }
        },
    };
    let search_options = SearchOptions {
        hold,
        phi_min: search.real("phi_min")?,
        phi_max: search.real("phi_max")?,
    };

    let output_dir = section("output")
        .get("dir")
        .map(|e| PathBuf::from(&e.value));
    Ok(JobConfig {
        model: model_params,
        sim: sim_config,
        sweep,
        search: search_options,
        output_dir,
    })
}
