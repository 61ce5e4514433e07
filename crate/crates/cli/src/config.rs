//! Run configuration: defaults, then a `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use kinkcorr::{ChainSpec, Halt, IntegratorConfig, KZScales, RampProtocol, SeriesKind};

use crate::CliError;

pub const KEYS: &[&str] = &[
    "tau_q",
    "g0",
    "n",
    "halt_g",
    "halt_t",
    "rmax",
    "rel_tol",
    "abs_tol",
    "out",
    "format",
    "kinds",
    "positions",
    "fit",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Raw string values keyed by config name.
pub type Layer = BTreeMap<String, String>;

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<Layer, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| match e {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_config_text(text: &str) -> Result<Layer, CliError> {
    let mut layer = Layer::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("line {}: unknown key '{key}'", i + 1)));
        }
        layer.insert(key, value.trim().to_string());
    }
    Ok(layer)
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tau_q: Vec<f64>,
    pub g0: f64,
    pub n: Option<usize>,
    pub halt_g: Option<f64>,
    pub halt_t: Vec<f64>,
    pub rmax: Option<usize>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub kinds: Vec<SeriesKind>,
    pub positions: Vec<i64>,
    pub fit: bool,
}

fn flag(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Usage(format!("{}: invalid value '{v}'", flag(key))))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    let items = v.split(',').map(|s| number(key, s)).collect::<Result<Vec<T>, _>>()?;
    if items.is_empty() {
        return Err(CliError::Usage(format!("{}: empty list", flag(key))));
    }
    Ok(items)
}

impl RunConfig {
    /// Merges the layers (later layers win) and parses every value.
    pub fn resolve(file: &Layer, flags: &Layer) -> Result<Self, CliError> {
        let mut merged = file.clone();
        merged.extend(flags.iter().map(|(k, v)| (k.clone(), v.clone())));
        let get = |k: &str| merged.get(k).map(String::as_str).filter(|v| !v.trim().is_empty());
        let defaults = IntegratorConfig::default();
        let cfg = RunConfig {
            tau_q: get("tau_q").map(|v| list("tau_q", v)).transpose()?.unwrap_or_default(),
            g0: get("g0").map(|v| number("g0", v)).transpose()?.unwrap_or(10.0),
            n: get("n").map(|v| number("n", v)).transpose()?,
            halt_g: get("halt_g").map(|v| number("halt_g", v)).transpose()?,
            halt_t: get("halt_t").map(|v| list("halt_t", v)).transpose()?.unwrap_or_default(),
            rmax: get("rmax").map(|v| number("rmax", v)).transpose()?,
            rel_tol: get("rel_tol").map(|v| number("rel_tol", v)).transpose()?.unwrap_or(defaults.rel_tol),
            abs_tol: get("abs_tol").map(|v| number("abs_tol", v)).transpose()?.unwrap_or(defaults.abs_tol),
            out: get("out").map(PathBuf::from),
            format: match get("format").unwrap_or("csv").trim() {
                "csv" => Format::Csv,
                "json" => Format::Json,
                other => return Err(CliError::Usage(format!("--format: expected csv or json, got '{other}'"))),
            },
            kinds: get("kinds")
                .unwrap_or("exact,approx,analytic,dephased")
                .split(',')
                .map(|s| s.parse::<SeriesKind>().map_err(|e| CliError::Usage(format!("--kinds: {e}"))))
                .collect::<Result<_, _>>()?,
            positions: get("positions").map(|v| list("positions", v)).transpose()?.unwrap_or_default(),
            fit: match get("fit").unwrap_or("false").trim() {
                "true" | "1" | "yes" => true,
                "false" | "0" | "no" => false,
                other => return Err(CliError::Usage(format!("--fit: expected true or false, got '{other}'"))),
            },
        };
        if cfg.halt_g.is_none() && !cfg.halt_t.is_empty() {
            return Err(CliError::Usage("--halt-t requires --halt-g".into()));
        }
        cfg.integrator()?;
        Ok(cfg)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        IntegratorConfig::new(self.rel_tol, self.abs_tol, IntegratorConfig::default().max_step)
            .map_err(|e| CliError::Usage(format!("--rel-tol/--abs-tol: {e}")))
    }

    /// The single quench time of a non-sweep command.
    pub fn single_tau(&self) -> Result<f64, CliError> {
        match self.tau_q.as_slice() {
            [] => Err(CliError::Usage("--tau-q is required".into())),
            [t] => Ok(*t),
            _ => Err(CliError::Usage("--tau-q takes a single value for this command".into())),
        }
    }

    /// The single waiting time of a non-sweep command (0 without a halt).
    pub fn single_halt_t(&self) -> Result<f64, CliError> {
        match self.halt_t.as_slice() {
            [] => Ok(0.0),
            [t] => Ok(*t),
            _ => Err(CliError::Usage("--halt-t takes a single value for this command".into())),
        }
    }

    pub fn protocol(&self, tau_q: f64, t_w: f64) -> Result<RampProtocol, CliError> {
        let halt = self.halt_g.map(|g_w| Halt { g_w, t_w });
        RampProtocol::new(self.g0, tau_q, halt)
            .map_err(|e| CliError::Usage(format!("--tau-q/--g0/--halt-g/--halt-t: {e}")))
    }

    pub fn chain(&self, scales: &KZScales) -> Result<ChainSpec, CliError> {
        match self.n {
            Some(n) => ChainSpec::new(n).map_err(|e| CliError::Usage(format!("--n: {e}"))),
            None => Ok(ChainSpec::default_for(scales)),
        }
    }

    /// Resolved values for the metadata header of `command`.
    pub fn describe(&self, command: &str) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut out: Vec<(String, String)> = vec![
            ("tau_q".into(), join(&self.tau_q)),
            ("g0".into(), format!("{:?}", self.g0)),
            ("n".into(), opt(self.n.map(|v| v.to_string()))),
            ("halt_g".into(), self.halt_g.map_or("none".into(), |v| format!("{v:?}"))),
            ("halt_t".into(), join(&self.halt_t)),
            ("rmax".into(), opt(self.rmax.map(|v| v.to_string()))),
            ("rel_tol".into(), format!("{:?}", self.rel_tol)),
            ("abs_tol".into(), format!("{:?}", self.abs_tol)),
            ("format".into(), self.format.to_string()),
        ];
        match command {
            "correlator" => {
                out.push(("kinds".into(), self.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")))
            }
            "higher" => {
                out.push(("positions".into(), self.positions.iter().map(i64::to_string).collect::<Vec<_>>().join(",")))
            }
            "spinspin" => out.push(("fit".into(), self.fit.to_string())),
            _ => {}
        }
        out
    }
}
