//! Flat `section.key = value` run configuration.
//!
//! ```text
//! # baseline
//! params.alpha = 1
//! law.kind = linear
//! law.k = 5
//! solver.n_cells = 512
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected, and
//! relative file paths resolve against the directory of the config file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, TemperatureField};
use crate::mollifier::KernelProfile;
use crate::params::{make_params, PhysicalParams, PARAM_KEYS};
use crate::solver::{Coupling, DiffusionScheme, SolverConfig, SourceMode};
use crate::velocity::{VelocityLaw, VelocityTable};

const SOLVER_KEYS: [&str; 13] = [
    "n_cells",
    "dt",
    "t_end",
    "coupling",
    "max_iter",
    "tol",
    "diffusion",
    "source",
    "epsilon",
    "kernel",
    "pointwise_velocity",
    "stop_at_exit",
    "interpolation",
];
const LAW_KEYS: [&str; 5] = ["kind", "k", "v_max", "scale", "table"];
const INITIAL_KEYS: [&str; 4] = ["kind", "value", "amplitude", "file"];
const INTERFACE_KEYS: [&str; 1] = ["u0"];
const OUTPUT_KEYS: [&str; 3] = ["stride", "dir", "formats"];

/// Raw key/value pairs in file order, with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.contains('.') {
                return Err(Error::Parse { line, message: format!("key `{key}` must be `section.name`") });
            }
            if entries.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(Error::Parse { line, message: format!("duplicate key `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().map(|(k, (_, v))| (k.clone(), v.clone())).collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidValue { key: key.into(), reason: format!("`{v}` is not a number") })
            })
            .transpose()
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| Error::MissingKey(key.into()))
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| Error::InvalidValue {
                    key: key.into(),
                    reason: format!("`{v}` is not a non-negative integer"),
                })
            })
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(Error::InvalidValue { key: key.into(), reason: format!("`{v}` is not a boolean") }),
            })
            .transpose()
    }

    /// Serialize back to the file format, sorted by key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, (_, v)) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// `value` on interior nodes, zero on the boundary.
    Constant(f64),
    /// `amplitude * sin(pi s / L)`.
    Sine(f64),
    /// Nodal values read from a `s,theta_bar` CSV.
    File { path: PathBuf, values: Vec<f64> },
}

impl InitialCondition {
    pub fn build(&self, grid: Grid1D) -> Result<TemperatureField> {
        let n = grid.n_cells();
        match self {
            InitialCondition::Constant(c) => {
                let c = *c;
                let mut values = vec![c; n + 1];
                values[0] = 0.0;
                values[n] = 0.0;
                TemperatureField::from_values(grid, values)
            }
            InitialCondition::Sine(a) => {
                let l = grid.length();
                let a = *a;
                TemperatureField::from_fn(grid, |s| a * (PI * s / l).sin())
            }
            InitialCondition::File { values, .. } => TemperatureField::from_values(grid, values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub stride: usize,
    pub dir: Option<PathBuf>,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { stride: 1, dir: None, csv: true, json: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub law: VelocityLaw,
    pub solver: SolverConfig,
    pub n_cells: usize,
    pub initial: InitialCondition,
    pub u0: f64,
    pub output: OutputConfig,
    /// The parsed key/value pairs, echoed into run summaries.
    pub raw: RawConfig,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_raw(RawConfig::parse(&text)?, &base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        Self::from_raw(RawConfig::parse(text)?, base)
    }

    pub fn from_raw(raw: RawConfig, base: &Path) -> Result<Self> {
        for key in raw.keys() {
            let (section, name) = key.split_once('.').unwrap_or(("", key));
            let known = match section {
                "params" => PARAM_KEYS.contains(&name),
                "law" => LAW_KEYS.contains(&name),
                "solver" => SOLVER_KEYS.contains(&name),
                "initial" => INITIAL_KEYS.contains(&name),
                "interface" => INTERFACE_KEYS.contains(&name),
                "output" => OUTPUT_KEYS.contains(&name),
                _ => false,
            };
            if !known {
                return Err(Error::UnknownKey(key.to_string()));
            }
        }

        let mut pmap = BTreeMap::new();
        for name in PARAM_KEYS {
            if let Some(v) = raw.f64(&format!("params.{name}"))? {
                pmap.insert(name.to_string(), v);
            }
        }
        let params = make_params(&pmap)?;
        let law = parse_law(&raw, params.theta_t(), base)?;

        let n_cells = raw.usize("solver.n_cells")?.ok_or_else(|| Error::MissingKey("solver.n_cells".into()))?;
        let grid = Grid1D::new(n_cells, params.length())?;
        let t_end = raw.req_f64("solver.t_end")?;
        let dt = raw.f64("solver.dt")?.unwrap_or(grid.ds());
        let mut solver = SolverConfig::new(dt, t_end);

        solver.coupling = match raw.get("solver.coupling").unwrap_or("imex") {
            "imex" => Coupling::Imex,
            "picard" => Coupling::Picard {
                max_iter: raw.usize("solver.max_iter")?.unwrap_or(50),
                tol: raw.f64("solver.tol")?.unwrap_or(1e-12),
            },
            other => return Err(invalid("solver.coupling", other, "imex, picard")),
        };
        solver.diffusion = match raw.get("solver.diffusion").unwrap_or("backward_euler") {
            "backward_euler" | "be" => DiffusionScheme::BackwardEuler,
            "crank_nicolson" | "cn" => DiffusionScheme::CrankNicolson,
            other => return Err(invalid("solver.diffusion", other, "backward_euler, crank_nicolson")),
        };
        if let Some(interp) = raw.get("solver.interpolation") {
            if interp != "linear" {
                return Err(invalid("solver.interpolation", interp, "linear"));
            }
        }
        solver.source_mode = match raw.get("solver.source").unwrap_or("sharp") {
            "sharp" => SourceMode::Sharp,
            "mollified" => {
                let epsilon = raw.f64("solver.epsilon")?.unwrap_or(4.0 * grid.ds());
                let profile = match raw.get("solver.kernel").unwrap_or("bump") {
                    "bump" => KernelProfile::Bump,
                    "cosine" => KernelProfile::Cosine,
                    other => return Err(invalid("solver.kernel", other, "bump, cosine")),
                };
                let pointwise_velocity = raw.bool("solver.pointwise_velocity")?.unwrap_or(false);
                SourceMode::Mollified { epsilon, profile, pointwise_velocity }
            }
            other => return Err(invalid("solver.source", other, "sharp, mollified")),
        };
        solver.stop_at_exit = raw.bool("solver.stop_at_exit")?.unwrap_or(false);

        let mut output = OutputConfig::default();
        if let Some(stride) = raw.usize("output.stride")? {
            output.stride = stride;
        }
        output.dir = raw.get("output.dir").map(|d| base.join(d));
        if let Some(formats) = raw.get("output.formats") {
            output.csv = false;
            output.json = false;
            for f in formats.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                match f {
                    "csv" => output.csv = true,
                    "json" => output.json = true,
                    other => return Err(invalid("output.formats", other, "csv, json")),
                }
            }
        }
        solver.snapshot_stride = output.stride;

        let initial = match raw.get("initial.kind").unwrap_or("sine") {
            "constant" => InitialCondition::Constant(raw.f64("initial.value")?.unwrap_or(0.0)),
            "sine" => InitialCondition::Sine(raw.f64("initial.amplitude")?.unwrap_or(params.theta_c())),
            "file" => {
                let rel = raw.get("initial.file").ok_or_else(|| Error::MissingKey("initial.file".into()))?;
                let path = base.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::InvalidValue { key: "initial.file".into(), reason: format!("{}: {e}", path.display()) })?;
                let values = crate::io::parse_field_csv(&text)?.into_iter().map(|(_, v)| v).collect();
                InitialCondition::File { path, values }
            }
            other => return Err(invalid("initial.kind", other, "constant, sine, file")),
        };
        let u0 = raw.req_f64("interface.u0")?;

        let cfg = Self { params, law, solver, n_cells, initial, u0, output, raw };
        cfg.solver.validate(&grid, &cfg.params, &cfg.law)?;
        cfg.initial.build(grid)?;
        if !(u0 > 0.0 && u0 < params.length()) {
            return Err(Error::InvalidInitialInterface(u0));
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.n_cells, self.params.length()).expect("validated at parse time")
    }

    pub fn initial_field(&self) -> TemperatureField {
        self.initial.build(self.grid()).expect("validated at parse time")
    }
}

fn invalid(key: &str, got: &str, allowed: &str) -> Error {
    Error::InvalidValue { key: key.into(), reason: format!("`{got}` is not one of {allowed}") }
}

fn parse_law(raw: &RawConfig, theta_t: f64, base: &Path) -> Result<VelocityLaw> {
    match raw.get("law.kind").ok_or_else(|| Error::MissingKey("law.kind".into()))? {
        "linear" => VelocityLaw::linear(raw.req_f64("law.k")?, theta_t),
        "saturated" => VelocityLaw::saturated(raw.req_f64("law.v_max")?, raw.req_f64("law.scale")?, theta_t),
        "table" => {
            let rel = raw.get("law.table").ok_or_else(|| Error::MissingKey("law.table".into()))?;
            let path = base.join(rel);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::InvalidValue { key: "law.table".into(), reason: format!("{}: {e}", path.display()) })?;
            VelocityLaw::monotone_table(VelocityTable::parse(&text)?, theta_t)
        }
        other => Err(invalid("law.kind", other, "linear, saturated, table")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
params.rho0 = 1
params.gamma = 1
params.alpha = 1
params.K = 1
params.theta_T = 1
params.theta_B = 0
params.L = 1
law.kind = linear
law.k = 5
solver.n_cells = 64
solver.t_end = 1.5
initial.kind = sine
interface.u0 = 0.3
";

    #[test]
    fn parses_baseline() {
        let cfg = RunConfig::parse(BASE, Path::new(".")).unwrap();
        assert_eq!(cfg.n_cells, 64);
        assert_eq!(cfg.solver.dt, 1.0 / 64.0);
        assert_eq!(cfg.initial, InitialCondition::Sine(1.0));
        assert_eq!(cfg.law, VelocityLaw::linear(5.0, 1.0).unwrap());
        assert_eq!(cfg.solver.coupling, Coupling::Imex);
    }

    #[test]
    fn rejects_unknown_key() {
        let text = format!("{BASE}solver.cfl = 3\n");
        assert_eq!(RunConfig::parse(&text, Path::new(".")).unwrap_err(), Error::UnknownKey("solver.cfl".into()));
    }

    #[test]
    fn negative_conductivity_names_key() {
        let text = BASE.replace("params.K = 1", "params.K = -1");
        let err = RunConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("`K`"), "{err}");
    }

    #[test]
    fn missing_file_is_an_error() {
        let text = format!("{BASE}initial.file = nope.csv\n").replace("initial.kind = sine", "initial.kind = file");
        let err = RunConfig::parse(&text, Path::new("/nonexistent")).unwrap_err();
        assert!(matches!(err, Error::InvalidValue { ref key, .. } if key == "initial.file"), "{err:?}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = RawConfig::parse("params.K = 1\nnonsense\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn raw_round_trip() {
        let raw = RawConfig::parse(BASE).unwrap();
        assert_eq!(RawConfig::parse(&raw.to_text()).unwrap().to_text(), raw.to_text());
    }

    #[test]
    fn constant_initial_zeroes_boundary() {
        let text = BASE.replace("initial.kind = sine", "initial.kind = constant\ninitial.value = 0.25");
        let cfg = RunConfig::parse(&text, Path::new(".")).unwrap();
        let f = cfg.initial_field();
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(f.values()[1], 0.25);
        assert_eq!(*f.values().last().unwrap(), 0.0);
    }
}
