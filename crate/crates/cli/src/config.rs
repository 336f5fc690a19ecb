//! Run configuration: built-in defaults, then an optional `key = value`
//! file, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use fsi_core::{SolverParams, Strategy};

use crate::args::{GlobalArgs, MaskArgs, Method, SceneArgs, SolverArgs, Target};

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "size",
    "out_dir",
    "quiet",
    "scene",
    "target",
    "chart_scale",
    "strategy",
    "strategies",
    "eta",
    "ordering",
    "method",
    "methods",
    "iters",
    "step_size",
    "noise_sigma",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("line {}: unknown key {key:?}", no + 1);
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key {key}: cannot parse {v:?}: {e}"))
            })
            .transpose()
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Target as clap::ValueEnum>::from_str(s, true)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Method as clap::ValueEnum>::from_str(s, true)
    }
}

/// Everything a pipeline run needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub size: usize,
    pub out_dir: PathBuf,
    pub quiet: bool,
    pub scene: Option<PathBuf>,
    pub target: Target,
    pub chart_scale: f64,
    pub strategy: Strategy,
    pub eta: f64,
    pub ordering: Option<PathBuf>,
    pub method: Method,
    pub solver: SolverParams,
    pub noise_sigma: f64,
}

impl RunConfig {
    /// Resolves global flags and the config file; per-command flags are
    /// applied with the `with_*` methods.
    pub fn resolve(global: &GlobalArgs) -> Result<(Self, ConfigFile)> {
        let file = match &global.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let size = file.pick(global.size, "size", 256)?;
        let defaults = SolverParams::default();
        let cfg = Self {
            seed: file.pick(global.seed, "seed", 0)?,
            size,
            out_dir: file.pick(global.out_dir.clone(), "out_dir", PathBuf::from("out"))?,
            quiet: global.quiet || file.get::<bool>("quiet")?.unwrap_or(false),
            scene: file.get("scene")?,
            target: file.get("target")?.unwrap_or(Target::Scene),
            chart_scale: file.get("chart_scale")?.unwrap_or(size as f64 / 32.0),
            strategy: file.get("strategy")?.unwrap_or(Strategy::GaussianRandom),
            eta: file.get("eta")?.unwrap_or(0.1),
            ordering: file.get("ordering")?,
            method: file.get("method")?.unwrap_or(Method::Cs),
            solver: SolverParams {
                max_iterations: file.get("iters")?.unwrap_or(defaults.max_iterations),
                step_size: file.get("step_size")?.unwrap_or(defaults.step_size),
                ..defaults
            },
            noise_sigma: file.get("noise_sigma")?.unwrap_or(0.0),
        };
        Ok((cfg, file))
    }

    pub fn with_scene(mut self, args: &SceneArgs) -> Self {
        if let Some(p) = &args.scene {
            self.scene = Some(p.clone());
        }
        if let Some(t) = args.target {
            self.target = t;
        }
        if let Some(s) = args.chart_scale {
            self.chart_scale = s;
        }
        self
    }

    pub fn with_mask(mut self, args: &MaskArgs) -> Result<Self> {
        if let Some(s) = &args.strategy {
            self.strategy = s.parse()?;
        }
        if let Some(e) = args.eta {
            self.eta = e;
        }
        if let Some(o) = &args.ordering {
            self.ordering = Some(o.clone());
        }
        Ok(self)
    }

    pub fn with_solver(mut self, args: &SolverArgs) -> Self {
        if let Some(i) = args.iters {
            self.solver.max_iterations = i;
        }
        if let Some(s) = args.step_size {
            self.solver.step_size = s;
        }
        self
    }

    pub fn with_method(mut self, method: Option<Method>) -> Self {
        if let Some(m) = method {
            self.method = m;
        }
        self
    }

    pub fn with_noise(mut self, sigma: Option<f64>) -> Self {
        if let Some(s) = sigma {
            self.noise_sigma = s;
        }
        self
    }

    /// Checks ranges and that referenced files exist.
    pub fn validate(&self) -> Result<()> {
        if self.size < 4 || !self.size.is_multiple_of(2) {
            bail!("size must be an even number >= 4, got {}", self.size);
        }
        match self.strategy {
            Strategy::GaussianRandom => {
                fsi_core::sigma_for_ratio(self.eta)
                    .context("invalid --eta for the gaussian strategy")?;
            }
            Strategy::Full => {}
            _ => {
                if !(self.eta > 0.0 && self.eta <= 1.0) {
                    bail!(
                        "eta {} out of range: {} requires 0 < eta <= 1",
                        self.eta,
                        self.strategy
                    );
                }
            }
        }
        for path in [&self.scene, &self.ordering].into_iter().flatten() {
            if !path.exists() {
                bail!("file not found: {}", path.display());
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            bail!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            );
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values() {
        let file =
            ConfigFile::parse("# run\nseed = 7\neta=0.05  # low\nout-dir = runs/a\n").unwrap();
        assert_eq!(file.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(file.get::<f64>("eta").unwrap(), Some(0.05));
        assert_eq!(
            file.get::<String>("out_dir").unwrap().as_deref(),
            Some("runs/a")
        );
        assert_eq!(file.pick(Some(3u64), "seed", 0).unwrap(), 3);
        assert_eq!(file.pick(None, "seed", 0u64).unwrap(), 7);
        assert_eq!(file.pick(None, "size", 64usize).unwrap(), 64);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(ConfigFile::parse("seed 7").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        let file = ConfigFile::parse("seed = x").unwrap();
        assert!(file.get::<u64>("seed").is_err());
    }
}
