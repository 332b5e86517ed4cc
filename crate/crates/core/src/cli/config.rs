//! TOML run configuration.
//!
//! ```toml
//! [domain]
//! L1 = 0.5
//! L2 = 0.5
//! [grid]
//! n1 = 64
//! n2 = 64
//! [fluid]
//! rho = 1.0
//! mu = 4.0e-4
//! [particle]
//! k = 0.1
//! X0 = [0.25, 0.25]
//! c = 0.0625
//! [flow]
//! u_mean = 0.25
//! v0 = 0.04
//! [time]
//! dt = 1e-3        # or kappa = 16.0, giving dt = kappa * h^2
//! t_end = 1.0
//! [output]
//! dir = "out"
//! cadence = 100
//! formats = ["binary", "csv"]
//! [mode]
//! scheme = "pinned"
//! ```
//!
//! Unknown keys are errors. Any key can be overridden from the environment
//! as `IBFLOW_<SECTION>_<KEY>` (case-insensitive), e.g. `IBFLOW_FLUID_MU=5e-4`
//! or `IBFLOW_PARTICLE_X0="[1.0, 0.25]"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernel::{Kernel, ParticleState};
use crate::sim::{FluidParams, InitialCondition, OutputConfig, SimConfig, SnapshotFormat};

/// `dt = kappa · h²` when `time.dt` is not given.
pub const DEFAULT_KAPPA: f64 = 16.0;

pub const ENV_PREFIX: &str = "IBFLOW_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub domain: DomainSection,
    pub grid: GridSection,
    pub fluid: FluidSection,
    pub particle: ParticleSection,
    #[serde(default)]
    pub flow: FlowSection,
    pub time: TimeSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub mode: ModeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n1: usize,
    pub n2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    pub rho: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    pub k: f64,
    #[serde(rename = "X0")]
    pub x0: [f64; 2],
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    #[default]
    Uniform,
    TaylorGreen,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_mean: Option<f64>,
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub initial: InitialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<[u32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatName {
    Binary,
    Csv,
}

fn default_cadence() -> usize {
    100
}

fn default_formats() -> Vec<FormatName> {
    vec![FormatName::Binary]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<FormatName>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            cadence: default_cadence(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Pinned,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    #[serde(default)]
    pub scheme: Scheme,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("domain", &["L1", "L2"]),
    ("grid", &["n1", "n2"]),
    ("fluid", &["rho", "mu"]),
    ("particle", &["k", "X0", "c"]),
    ("flow", &["u_mean", "v0", "initial", "amplitude", "modes"]),
    ("time", &["dt", "kappa", "t_end"]),
    ("output", &["dir", "cadence", "formats"]),
    ("mode", &["scheme"]),
];

fn config_err(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Parse an override value as a TOML value, falling back to a bare string.
fn parse_env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Apply `IBFLOW_<SECTION>_<KEY>` overrides to a parsed document.
pub fn apply_env_overrides<I>(doc: &mut toml::Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.to_ascii_uppercase().starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = &name[ENV_PREFIX.len()..];
        let (section, key) = SCHEMA
            .iter()
            .find_map(|(section, keys)| {
                let prefix = format!("{section}_");
                if rest.len() > prefix.len() && rest[..prefix.len()].eq_ignore_ascii_case(&prefix) {
                    let key_part = &rest[prefix.len()..];
                    keys.iter()
                        .find(|k| k.eq_ignore_ascii_case(key_part))
                        .map(|k| (*section, *k))
                } else {
                    None
                }
            })
            .ok_or_else(|| config_err(&name, "environment override does not name a known config key"))?;
        let table = doc
            .entry(section)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_err(section, "expected a table"))?;
        table.insert(key.to_string(), parse_env_value(&raw));
    }
    Ok(())
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_str_with_env(text, std::iter::empty())
    }

    pub fn from_toml_str_with_env<I>(text: &str, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_err("<document>", e.message().to_string()))?;
        apply_env_overrides(&mut doc, env)?;
        ConfigFile::deserialize(toml::Value::Table(doc)).map_err(|e| config_err("<document>", e.message().to_string()))
    }

    /// Read `path` and apply overrides from the process environment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str_with_env(&text, std::env::vars())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validate every field and build the simulation configuration.
    pub fn to_sim_config(&self) -> Result<SimConfig> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(config_err(key, format!("must be positive, got {v}")))
            }
        };
        let finite = |key: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(config_err(key, format!("must be finite, got {v}")))
            }
        };

        let l1 = positive("domain.L1", self.domain.l1)?;
        let l2 = positive("domain.L2", self.domain.l2)?;
        for (key, n) in [("grid.n1", self.grid.n1), ("grid.n2", self.grid.n2)] {
            if n < 4 {
                return Err(config_err(key, format!("need at least 4 nodes, got {n}")));
            }
        }
        let (h1, h2) = (l1 / self.grid.n1 as f64, l2 / self.grid.n2 as f64);
        if (h1 - h2).abs() > 1e-12 * h1.max(h2) {
            return Err(config_err(
                "grid",
                format!("cells must be square: L1/n1 = {h1}, L2/n2 = {h2}"),
            ));
        }
        let spec = GridSpec::from_lengths(l1, l2, self.grid.n1, self.grid.n2).map_err(|e| config_err("grid", e.to_string()))?;

        let rho = positive("fluid.rho", self.fluid.rho)?;
        if !(self.fluid.mu.is_finite() && self.fluid.mu >= 0.0) {
            return Err(config_err("fluid.mu", format!("must be non-negative, got {}", self.fluid.mu)));
        }
        let fluid = FluidParams::new(rho, self.fluid.mu).map_err(|e| config_err("fluid", e.to_string()))?;

        if !(self.particle.k.is_finite() && self.particle.k >= 0.0) {
            return Err(config_err("particle.k", format!("must be non-negative, got {}", self.particle.k)));
        }
        finite("particle.X0", self.particle.x0[0])?;
        finite("particle.X0", self.particle.x0[1])?;
        let c = positive("particle.c", self.particle.c)?;
        let kern = Kernel::new(c).map_err(|e| config_err("particle.c", e.to_string()))?;
        kern.check_grid(spec).map_err(|e| config_err("particle.c", e.to_string()))?;

        let v0 = finite("flow.v0", self.flow.v0)?;
        let u_mean = match self.flow.u_mean {
            Some(u) => Some(finite("flow.u_mean", u)?),
            None => None,
        };
        let pinned = match self.mode.scheme {
            Scheme::Pinned => Some(u_mean.ok_or_else(|| {
                config_err("flow.u_mean", "required when mode.scheme = \"pinned\"")
            })?),
            Scheme::Plain => None,
        };
        let initial = match self.flow.initial {
            InitialKind::Uniform => {
                if self.flow.amplitude.is_some() || self.flow.modes.is_some() {
                    return Err(config_err(
                        "flow.amplitude",
                        "only meaningful with flow.initial = \"taylor-green\"",
                    ));
                }
                InitialCondition::Uniform {
                    u1: u_mean.unwrap_or(0.0),
                }
            }
            InitialKind::TaylorGreen => {
                let amplitude = finite("flow.amplitude", self.flow.amplitude.unwrap_or(1.0))?;
                let modes = self.flow.modes.unwrap_or([1, 2]);
                if modes.contains(&0) {
                    return Err(config_err("flow.modes", "mode numbers must be non-zero"));
                }
                InitialCondition::TaylorGreen { amplitude, modes }
            }
        };

        let dt = match (self.time.dt, self.time.kappa) {
            (Some(_), Some(_)) => return Err(config_err("time", "give either dt or kappa, not both")),
            (Some(dt), None) => positive("time.dt", dt)?,
            (None, kappa) => {
                let kappa = positive("time.kappa", kappa.unwrap_or(DEFAULT_KAPPA))?;
                kappa * spec.h() * spec.h()
            }
        };
        if !(self.time.t_end.is_finite() && self.time.t_end >= 0.0) {
            return Err(config_err("time.t_end", format!("must be non-negative, got {}", self.time.t_end)));
        }
        if self.output.cadence == 0 {
            return Err(config_err("output.cadence", "must be at least 1"));
        }

        let cfg = SimConfig {
            spec,
            fluid,
            particle: ParticleState::at_rest(self.particle.x0, self.particle.k),
            kern,
            dt,
            t_end: self.time.t_end,
            u_mean: pinned,
            v0,
            initial,
            output: OutputConfig {
                dir: self.output.dir.clone(),
                cadence: self.output.cadence,
                formats: self
                    .output
                    .formats
                    .iter()
                    .map(|f| match f {
                        FormatName::Binary => SnapshotFormat::Binary,
                        FormatName::Csv => SnapshotFormat::Csv,
                    })
                    .collect(),
            },
        };
        cfg.validate().map_err(|e| config_err("<config>", e.to_string()))?;
        Ok(cfg)
    }
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    ConfigFile::load(path)?.to_sim_config()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE2: &str = r#"
[domain]
L1 = 1.0
L2 = 1.0
[grid]
n1 = 80
n2 = 80
[fluid]
rho = 1.00
mu = 4.00e-4
[particle]
k = 1.00e-1
X0 = [0.5, 0.5]
c = 1.00e-1
[flow]
u_mean = 2.50e-1
v0 = 4.00e-2
[time]
dt = 1e-3
t_end = 1.0
"#;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn tabulated_constants_are_accepted() {
        let cfg = ConfigFile::from_toml_str(TABLE2).unwrap().to_sim_config().unwrap();
        assert_eq!(cfg.u_mean, Some(0.25));
        assert_eq!(cfg.fluid.mu, 4e-4);
        assert_eq!(cfg.kern.check_grid(cfg.spec).unwrap(), 8);
        assert!((cfg.reynolds().unwrap() - 150.0).abs() < 1.5);
    }

    #[test]
    fn non_integral_kernel_ratio_is_rejected() {
        let text = TABLE2.replace("n1 = 80\nn2 = 80", "n1 = 50\nn2 = 50").replace("L1 = 1.0\nL2 = 1.0", "L1 = 1.5\nL2 = 1.5");
        let e = ConfigFile::from_toml_str(&text).unwrap().to_sim_config().unwrap_err();
        assert_eq!(key_of(e), "particle.c");
    }

    #[test]
    fn negative_rho_names_its_key() {
        let text = TABLE2.replace("rho = 1.00", "rho = -1.0");
        let e = ConfigFile::from_toml_str(&text).unwrap().to_sim_config().unwrap_err();
        assert_eq!(key_of(e), "fluid.rho");
    }

    #[test]
    fn unknown_and_missing_keys_are_rejected() {
        let text = TABLE2.replace("v0 = 4.00e-2", "v0 = 4.00e-2\nvee0 = 1.0");
        let e = ConfigFile::from_toml_str(&text).unwrap_err().to_string();
        assert!(e.contains("vee0"), "{e}");
        let text = TABLE2.replace("mu = 4.00e-4\n", "");
        let e = ConfigFile::from_toml_str(&text).unwrap_err().to_string();
        assert!(e.contains("mu"), "{e}");
        let text = TABLE2.replace("n1 = 80", "n1 = \"eighty\"");
        assert!(ConfigFile::from_toml_str(&text).is_err());
    }

    #[test]
    fn kernel_must_fit_domain() {
        let text = TABLE2.replace("c = 1.00e-1", "c = 0.175");
        let e = ConfigFile::from_toml_str(&text).unwrap().to_sim_config().unwrap_err();
        assert_eq!(key_of(e), "particle.c");
    }

    #[test]
    fn pinned_mode_needs_mean_flow() {
        let text = TABLE2.replace("u_mean = 2.50e-1\n", "");
        let e = ConfigFile::from_toml_str(&text).unwrap().to_sim_config().unwrap_err();
        assert_eq!(key_of(e), "flow.u_mean");
        let plain = format!("{text}\n[mode]\nscheme = \"plain\"\n");
        let cfg = ConfigFile::from_toml_str(&plain).unwrap().to_sim_config().unwrap();
        assert_eq!(cfg.u_mean, None);
    }

    #[test]
    fn kappa_couples_dt_to_h_squared() {
        let text = TABLE2.replace("dt = 1e-3", "kappa = 8.0");
        let cfg = ConfigFile::from_toml_str(&text).unwrap().to_sim_config().unwrap();
        assert!((cfg.dt - 8.0 * 0.0125 * 0.0125).abs() < 1e-18);
        let text = TABLE2.replace("dt = 1e-3", "dt = 1e-3\nkappa = 8.0");
        assert!(ConfigFile::from_toml_str(&text).unwrap().to_sim_config().is_err());
    }

    #[test]
    fn environment_overrides() {
        let env = vec![
            ("IBFLOW_FLUID_MU".to_string(), "5e-4".to_string()),
            ("ibflow_particle_x0".to_string(), "[0.3, 0.2]".to_string()),
            ("IBFLOW_OUTPUT_DIR".to_string(), "runs/a".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ];
        let file = ConfigFile::from_toml_str_with_env(TABLE2, env).unwrap();
        assert_eq!(file.fluid.mu, 5e-4);
        assert_eq!(file.particle.x0, [0.3, 0.2]);
        assert_eq!(file.output.dir, Some(PathBuf::from("runs/a")));

        let bad = vec![("IBFLOW_FLUID_NU".to_string(), "1".to_string())];
        let e = ConfigFile::from_toml_str_with_env(TABLE2, bad).unwrap_err();
        assert_eq!(key_of(e), "IBFLOW_FLUID_NU");
    }

    #[test]
    fn taylor_green_initial_condition() {
        let text = TABLE2.replace(
            "v0 = 4.00e-2",
            "v0 = 0.0\ninitial = \"taylor-green\"\namplitude = 0.5\nmodes = [1, 2]",
        );
        let cfg = ConfigFile::from_toml_str(&text).unwrap().to_sim_config().unwrap();
        assert_eq!(cfg.initial, InitialCondition::TaylorGreen { amplitude: 0.5, modes: [1, 2] });
    }

    #[test]
    fn echo_round_trips() {
        let file = ConfigFile::from_toml_str(TABLE2).unwrap();
        let again = ConfigFile::from_toml_str(&file.to_toml_string()).unwrap();
        assert_eq!(file, again);
    }
}
