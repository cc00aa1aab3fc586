//! Run configuration: one strict TOML document plus dotted-path overrides.

use serde::{Deserialize, Serialize};

use swarmlab::dynamics::Mode;
use swarmlab::forces::{ForceKind, ForceModel};
use swarmlab::harness::{InitialDensitySpec, Setup};
use swarmlab::regions::{AngleProfile, MollifierParams, RegionFamily};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_region")]
    pub region: RegionFamily,
    #[serde(default)]
    pub force: ForceKind,
    #[serde(default)]
    pub dynamics: Dynamics,
    #[serde(default)]
    pub study: Study,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dynamics {
    pub dt: f64,
    pub t_end: f64,
    pub mode: Mode,
    /// Snapshot stride of `simulate`, in steps.
    pub record_every: usize,
    pub neighbor_grid: bool,
    pub check_max_speed: bool,
    /// Particle count of `simulate` when no initial file is given.
    pub particles: usize,
    /// Measure CSV with the initial state of `simulate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_file: Option<String>,
}

impl Default for Dynamics {
    fn default() -> Self {
        Dynamics {
            dt: 1e-3,
            t_end: 1.0,
            mode: Mode::default(),
            record_every: 100,
            neighbor_grid: true,
            check_max_speed: false,
            particles: 200,
            initial_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Study {
    pub initial: InitialDensitySpec,
    /// Second density of `stability`; defaults to `initial` shifted by `shift`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_b: Option<InitialDensitySpec>,
    pub shift: Vec<f64>,
    /// Particle count of `stability`.
    pub n: usize,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    /// Comparison times; `t = 0` is always added.
    pub times: Vec<f64>,
    /// Mollifier of the reference runs.
    pub reference: MollifierParams,
    pub hypcheck: Hypcheck,
    pub lipschitz: Lipschitz,
}

impl Default for Study {
    fn default() -> Self {
        Study {
            initial: InitialDensitySpec::default_study(),
            initial_b: None,
            shift: vec![0.25, 0.0],
            n: 800,
            n_list: vec![100, 200, 400, 800, 1600],
            n_ref: 6400,
            times: (1..=10).map(|k| k as f64 / 10.0).collect(),
            reference: MollifierParams::new(0.05, 0.05),
            hypcheck: Hypcheck::default(),
            lipschitz: Lipschitz::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hypcheck {
    pub v_samples: Vec<Vec<f64>>,
    pub eps_grid: Vec<f64>,
    pub n_samples: usize,
    /// Samples per lemma check; 0 skips the lemma suite.
    pub lemma_samples: usize,
}

impl Default for Hypcheck {
    fn default() -> Self {
        Hypcheck {
            v_samples: vec![vec![0.25, 0.0], vec![0.75, 0.0], vec![1.5, 0.0], vec![5.0, 0.0]],
            eps_grid: vec![0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            n_samples: 100_000,
            lemma_samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lipschitz {
    /// Probe pairs of the coarse set; the refined set has twice as many.
    pub probes: usize,
    pub separation: f64,
}

impl Default for Lipschitz {
    fn default() -> Self {
        Lipschitz { probes: 1000, separation: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: String,
    /// Write the particle trajectory of `simulate`.
    pub trajectory: bool,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: "swarmlab-out".into(), trajectory: true }
    }
}

fn default_seed() -> u64 {
    909
}

fn one() -> usize {
    1
}

fn default_region() -> RegionFamily {
    RegionFamily::vision_cone(2, 1.0, AngleProfile::default())
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: default_seed(),
            workers: 1,
            region: default_region(),
            force: ForceKind::default(),
            dynamics: Dynamics::default(),
            study: Study::default(),
            output: Output::default(),
        }
    }
}

/// Errors from reading or overriding a configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    /// Parses `text` (empty means all defaults) and applies `key.path=value`
    /// overrides in order. Values are TOML literals; bare words are strings.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        if !overrides.is_empty() {
            // overrides act on the document with every default filled in
            let mut table: toml::Table = toml::from_str(&cfg.to_toml()).expect("serialized config parses");
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            cfg = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.workers == 0 {
            return err("workers must be at least 1".into());
        }
        let d = self.region.dim;
        if self.study.initial.dim() != d {
            return err(format!("study.initial has dimension {}, region has {d}", self.study.initial.dim()));
        }
        if self.study.shift.len() != d {
            return err(format!("study.shift needs {d} components"));
        }
        if let Some(b) = &self.study.initial_b {
            if b.dim() != d {
                return err(format!("study.initial_b has dimension {}, region has {d}", b.dim()));
            }
        }
        if self.study.hypcheck.v_samples.iter().any(|v| v.len() != d) {
            return err(format!("study.hypcheck.v_samples entries need {d} components"));
        }
        Ok(())
    }

    pub fn force_model(&self) -> swarmlab::Result<ForceModel> {
        ForceModel::new(self.force.clone(), self.region)
    }

    pub fn setup(&self) -> swarmlab::Result<Setup> {
        Ok(Setup {
            force: self.force_model()?,
            dt: self.dynamics.dt,
            t_end: self.dynamics.t_end,
            mode: self.dynamics.mode,
            reference: self.study.reference,
            neighbor_grid: self.dynamics.neighbor_grid,
            workers: self.workers,
        })
    }

    pub fn initial_b(&self) -> InitialDensitySpec {
        self.study.initial_b.clone().unwrap_or_else(|| self.study.initial.translated(&self.study.shift))
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| ConfigError(format!("override {spec:?} is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError(format!("override {spec:?} has an empty key")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut cur = table;
    for k in parents {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError(format!("override {spec:?}: {k} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::load(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(RunConfig::load("", &[]).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::load("sed = 3", &[]).is_err());
        assert!(RunConfig::load("[dynamics]\ndtt = 0.1", &[]).is_err());
        assert!(RunConfig::load("[region]\ndim = 2\nkind = { type = \"ball\", radius = 1.0, extra = 1 }", &[]).is_err());
    }

    #[test]
    fn dotted_overrides() {
        let cfg = RunConfig::load("", &["dynamics.dt=0.0005".into(), "output.dir=elsewhere".into(), "seed=7".into()]).unwrap();
        assert_eq!(cfg.dynamics.dt, 0.0005);
        assert_eq!(cfg.output.dir, "elsewhere");
        assert_eq!(cfg.seed, 7);
        let cfg = RunConfig::load("", &["dynamics.mode={ type = \"mollified\", params = { eps = 0.1, eta = 0.1 } }".into()]).unwrap();
        assert!(matches!(cfg.dynamics.mode, Mode::Mollified { tabulate: true, .. }));
        assert!(RunConfig::load("", &["dynamics".into()]).is_err());
        assert!(RunConfig::load("", &["seed.x=1".into()]).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let text = "[region]\ndim = 3\nkind = { type = \"ball\", radius = 1.0 }";
        assert!(RunConfig::load(text, &[]).is_err());
    }
}
