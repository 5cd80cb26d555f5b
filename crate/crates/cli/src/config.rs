//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored; trailing `# …`
//! comments are stripped. Keys (defaults in brackets):
//!
//! ```text
//! n                          3 | 4                          [3]
//! periods                    a3 or a3,a4                    [1 or 1,1]
//! grid                       N1xN2                          [128x128]
//! seed                       u64                            [1]
//! flow.t_end                                                [50]
//! flow.cfl_safety                                           [0.25]
//! flow.dt_max                                               [0.02]
//! flow.diag_every                                           [10]
//! flow.max_retries                                          [8]
//! flow.phi_floor             > 1                            [1.05 or (1+2/√3)^{1/4}]
//! flow.filter                true | false                   [true]
//! flow.filter.alpha                                         [36]
//! flow.filter.order                                         [36]
//! init.kind                  explicit | random              [explicit]
//! init.phi0                  φ(s₀), or init.s0 directly     [2]
//! init.s0
//! init.modes                 k1,k2,amplitude,phase; …       [none]
//! init.amplitude             overrides every mode amplitude
//! init.random.phi0_min                                      [1.5]
//! init.random.phi0_max                                      [3]
//! init.random.max_amplitude  cap on Σ|A|                    [0.1]
//! init.random.n_modes                                       [2]
//! init.random.max_k                                         [2]
//! init.random.axisymmetric   true | false                   [false]
//! init.random.require_convex true | false                   [true]
//! out.dir                                                   [out]
//! out.prefix                                                [run]
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use geonflow::curvature::s_of_phi;
use geonflow::flow::{engine_for, FlowEngine, RandomInit};
use geonflow::spectral::ExpFilter;
use geonflow::{Dimension, FlowConfig, GeonParams, InitialData, Mode};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Explicit,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub periods: Option<Vec<f64>>,
    pub grid: [usize; 2],
    pub seed: u64,
    pub flow: FlowConfig,
    pub init_kind: InitKind,
    pub phi0: Option<f64>,
    pub s0: Option<f64>,
    pub modes: Vec<Mode>,
    pub amplitude: Option<f64>,
    pub random: RandomInit,
    pub out_dir: PathBuf,
    pub prefix: String,
    /// Line on which each key was last set, for error reporting.
    lines: BTreeMap<String, usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 3,
            periods: None,
            grid: [128, 128],
            seed: 1,
            flow: FlowConfig::default(),
            init_kind: InitKind::Explicit,
            phi0: None,
            s0: None,
            modes: Vec::new(),
            amplitude: None,
            random: RandomInit::default(),
            out_dir: PathBuf::from("out"),
            prefix: "run".to_string(),
            lines: BTreeMap::new(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| ConfigError::at(line, format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(ConfigError::at(
            line,
            format!("{key}: expected true or false, got {value:?}"),
        )),
    }
}

pub fn parse_grid(value: &str) -> Result<[usize; 2], String> {
    let (a, b) = value
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid must look like 128x128, got {value:?}"))?;
    let a = a
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("grid: {e}"))?;
    let b = b
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("grid: {e}"))?;
    Ok([a, b])
}

fn parse_modes(value: &str, line: usize) -> Result<Vec<Mode>, ConfigError> {
    value
        .split(';')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(|m| {
            let f: Vec<&str> = m.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(ConfigError::at(
                    line,
                    format!("init.modes: expected k1,k2,amplitude,phase, got {m:?}"),
                ));
            }
            Ok(Mode {
                k: [
                    parse_num("init.modes", f[0], line)?,
                    parse_num("init.modes", f[1], line)?,
                ],
                amplitude: parse_num("init.modes", f[2], line)?,
                phase: parse_num("init.modes", f[3], line)?,
            })
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                ConfigError::at(line, format!("expected key = value, got {content:?}"))
            })?;
            cfg.set(key.trim(), value.trim(), line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. `line` is 0 for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        match key {
            "n" => {
                let n: usize = parse_num(key, value, line)?;
                if n != 3 && n != 4 {
                    return Err(ConfigError::at(line, format!("n must be 3 or 4, got {n}")));
                }
                self.n = n;
            }
            "periods" => {
                let p = value
                    .split(',')
                    .map(|v| parse_num::<f64>(key, v.trim(), line))
                    .collect::<Result<Vec<_>, _>>()?;
                self.periods = Some(p);
            }
            "grid" => self.grid = parse_grid(value).map_err(|e| ConfigError::at(line, e))?,
            "seed" => self.seed = parse_num(key, value, line)?,
            "flow.t_end" => self.flow.t_end = parse_num(key, value, line)?,
            "flow.cfl_safety" => self.flow.cfl_safety = parse_num(key, value, line)?,
            "flow.dt_max" => self.flow.dt_max = parse_num(key, value, line)?,
            "flow.diag_every" => self.flow.diag_every = parse_num(key, value, line)?,
            "flow.max_retries" => self.flow.max_retries = parse_num(key, value, line)?,
            "flow.phi_floor" => self.flow.phi_floor = Some(parse_num(key, value, line)?),
            "flow.filter" => {
                self.flow.filter = if parse_bool(key, value, line)? {
                    Some(ExpFilter::default())
                } else {
                    None
                };
            }
            "flow.filter.alpha" => {
                let f = self.flow.filter.get_or_insert_with(ExpFilter::default);
                f.alpha = parse_num(key, value, line)?;
            }
            "flow.filter.order" => {
                let f = self.flow.filter.get_or_insert_with(ExpFilter::default);
                f.order = parse_num(key, value, line)?;
            }
            "init.kind" => {
                self.init_kind = match value {
                    "explicit" => InitKind::Explicit,
                    "random" => InitKind::Random,
                    _ => {
                        return Err(ConfigError::at(
                            line,
                            format!("init.kind must be explicit or random, got {value:?}"),
                        ))
                    }
                }
            }
            "init.phi0" => self.phi0 = Some(parse_num(key, value, line)?),
            "init.s0" => self.s0 = Some(parse_num(key, value, line)?),
            "init.modes" => self.modes = parse_modes(value, line)?,
            "init.amplitude" => self.amplitude = Some(parse_num(key, value, line)?),
            "init.random.phi0_min" => self.random.phi0_range.0 = parse_num(key, value, line)?,
            "init.random.phi0_max" => self.random.phi0_range.1 = parse_num(key, value, line)?,
            "init.random.max_amplitude" => self.random.max_amplitude = parse_num(key, value, line)?,
            "init.random.n_modes" => self.random.n_modes = parse_num(key, value, line)?,
            "init.random.max_k" => self.random.max_k = parse_num(key, value, line)?,
            "init.random.axisymmetric" => self.random.axisymmetric = parse_bool(key, value, line)?,
            "init.random.require_convex" => {
                self.random.require_convex = parse_bool(key, value, line)?
            }
            "out.dir" => self.out_dir = PathBuf::from(value),
            "out.prefix" => {
                if value.is_empty() || value.contains(['/', '\\']) {
                    return Err(ConfigError::at(
                        line,
                        format!("out.prefix must be a plain file stem, got {value:?}"),
                    ));
                }
                self.prefix = value.to_string();
            }
            _ => return Err(ConfigError::at(line, format!("unknown key {key:?}"))),
        }
        self.lines.insert(key.to_string(), line);
        Ok(())
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied().filter(|l| *l > 0)
    }

    fn err_for(&self, key: &str, message: String) -> ConfigError {
        ConfigError {
            line: self.line_of(key),
            message,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params()?;
        self.flow.validate().map_err(|e| {
            let key = [
                "flow.t_end",
                "flow.cfl_safety",
                "flow.dt_max",
                "flow.diag_every",
                "flow.phi_floor",
            ]
            .into_iter()
            .rev()
            .find(|k| self.lines.contains_key(*k))
            .unwrap_or("flow.t_end");
            self.err_for(key, e.to_string())
        })?;
        if self.grid.iter().any(|g| *g < 16 || g % 2 == 1) {
            return Err(self.err_for(
                "grid",
                format!(
                    "grid sizes must be even and at least 16, got {:?}",
                    self.grid
                ),
            ));
        }
        if self.phi0.is_some() && self.s0.is_some() {
            return Err(self.err_for("init.s0", "set init.phi0 or init.s0, not both".into()));
        }
        if let Some(p) = self.phi0 {
            if !(p > 1.0) {
                return Err(self.err_for("init.phi0", format!("init.phi0 must exceed 1, got {p}")));
            }
        }
        if let Some(s) = self.s0 {
            if !(s > 0.0) {
                return Err(self.err_for("init.s0", format!("init.s0 must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> Dimension {
        if self.n == 4 {
            Dimension::Four
        } else {
            Dimension::Three
        }
    }

    pub fn params(&self) -> Result<GeonParams, ConfigError> {
        let periods = self
            .periods
            .clone()
            .unwrap_or_else(|| vec![1.0; self.n - 2]);
        GeonParams::new(self.n, periods).map_err(|e| self.err_for("periods", e.to_string()))
    }

    pub fn engine(&self) -> Result<FlowEngine, ConfigError> {
        let params = self.params()?;
        engine_for(&params, self.grid, self.flow.clone())
            .map_err(|e| self.err_for("grid", e.to_string()))
    }

    /// The initial data, drawn from the seed for `init.kind = random`.
    pub fn initial_data(&self, engine: &FlowEngine) -> Result<InitialData, ConfigError> {
        match self.init_kind {
            InitKind::Random => InitialData::random(engine, self.seed, &self.random)
                .map_err(|e| self.err_for("init.kind", e.to_string())),
            InitKind::Explicit => {
                let s0 = match (self.s0, self.phi0) {
                    (Some(s), _) => s,
                    (None, p) => s_of_phi(p.unwrap_or(2.0), self.dimension()),
                };
                let mut modes = self.modes.clone();
                if let Some(a) = self.amplitude {
                    for m in modes.iter_mut() {
                        m.amplitude = a;
                    }
                }
                Ok(InitialData { s0, modes })
            }
        }
    }

    /// Applies `key=value` overrides, reporting them without a line number.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (k, v) = spec.split_once('=').ok_or_else(|| {
            ConfigError::global(format!("override must be key=value, got {spec:?}"))
        })?;
        self.set(k.trim(), v.trim(), 0)
            .map_err(|e| ConfigError::global(format!("override {spec:?}: {}", e.message)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_comments() {
        let cfg =
            RunConfig::parse("# torus\nn = 4   # four\n\nperiods = 1, 2\ngrid = 32x64\n").unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.periods, Some(vec![1.0, 2.0]));
        assert_eq!(cfg.grid, [32, 64]);
        assert_eq!(cfg.flow.t_end, 50.0);
    }

    #[test]
    fn modes() {
        let cfg = RunConfig::parse("init.modes = 0,1,0.1,0; 2,-1,0.02,0.5\n").unwrap();
        assert_eq!(cfg.modes.len(), 2);
        assert_eq!(cfg.modes[1].k, [2, -1]);
        assert!(RunConfig::parse("init.modes = 0,1,0.1\n").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("n = 3\nflow.t_end = 5\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = RunConfig::parse("n = 3\n\nflow.dt_max = abc\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = RunConfig::parse("n = 3\nperiods = 1, 2\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = RunConfig::parse("grid = 30x31\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = RunConfig::parse("just text\n").unwrap_err();
        assert_eq!(e.line, Some(1));
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::parse("n = 3\n").unwrap();
        cfg.apply_override("init.amplitude=0.05").unwrap();
        assert_eq!(cfg.amplitude, Some(0.05));
        assert!(cfg.apply_override("nope=1").is_err());
    }
}
