use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;

use crate::error::CliError;
use crate::suites::is_known_check;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "FROBFORGE_SEED";

/// Keys accepted in a config file; each mirrors the flag of the same name.
const CONFIG_KEYS: &[&str] = &[
    "seed", "out", "format", "tol", "timing", "parallel", "samples", "grid", "instances", "points", "field", "n",
    "H", "t", "snapshots", "bins", "group",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[value(name = "json")]
    Json,
    #[value(name = "json+csv")]
    JsonCsv,
}

/// `key = value` lines; `#` starts a comment. `tol` may repeat.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    tolerances: Vec<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ConfigFile::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", lineno + 1)));
            }
            if key == "tol" {
                cfg.tolerances.push(value.to_string());
            } else if cfg.values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Usage(format!("config line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| v.parse().map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}"))))
            .transpose()
    }
}

/// Global flags as given on the command line.
#[derive(Debug, Clone, Default)]
pub struct GlobalFlags {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub config: Option<PathBuf>,
    pub tol: Vec<String>,
    pub timing: bool,
    pub parallel: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub tolerances: BTreeMap<String, f64>,
    pub timing: bool,
    pub parallel: bool,
    file: ConfigFile,
}

impl RunConfig {
    /// Seed precedence: flag, then `FROBFORGE_SEED`, then config file, then 42.
    pub fn resolve(flags: &GlobalFlags, env_seed: Option<String>) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let env_seed = env_seed
            .map(|s| s.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("{SEED_ENV}: cannot parse {s:?}"))))
            .transpose()?;
        let seed = flags.seed.or(env_seed).or(file.get("seed")?).unwrap_or(DEFAULT_SEED);
        let format = match flags.format {
            Some(f) => f,
            None => match file.values.get("format") {
                Some(v) => OutputFormat::from_str(v, false)
                    .map_err(|_| CliError::Usage(format!("config key format: cannot parse {v:?}")))?,
                None => OutputFormat::Json,
            },
        };
        let out = flags.out.clone().or_else(|| file.values.get("out").map(PathBuf::from));
        let timing = flags.timing || file.get("timing")?.unwrap_or(false);
        let parallel = flags.parallel || file.get("parallel")?.unwrap_or(false);
        let mut tolerances = BTreeMap::new();
        // command-line entries come last so they win
        for spec in file.tolerances.iter().chain(&flags.tol) {
            let (name, value) = parse_tolerance(spec)?;
            tolerances.insert(name, value);
        }
        Ok(RunConfig { seed, out, format, tolerances, timing, parallel, file })
    }

    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Flag value, else config-file value, else the default.
    pub fn pick<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.file.get(key)?.unwrap_or(default)),
        }
    }

    pub fn pick_required<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        match flag {
            Some(v) => Ok(v),
            None => self.file.get(key)?.ok_or_else(|| CliError::Usage(format!("missing required --{key}"))),
        }
    }
}

fn parse_tolerance(spec: &str) -> Result<(String, f64), CliError> {
    let (name, value) =
        spec.split_once('=').ok_or_else(|| CliError::Usage(format!("tolerance {spec:?}: expected name=value")))?;
    let name = name.trim();
    if !is_known_check(name) {
        return Err(CliError::Usage(format!("tolerance {spec:?}: unknown check {name:?}")));
    }
    let value: f64 = value.trim().parse().map_err(|_| CliError::Usage(format!("tolerance {spec:?}: not a number")))?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(CliError::Usage(format!("tolerance {spec:?}: must be positive and finite")));
    }
    Ok((name.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let cfg = ConfigFile::parse("# comment\nseed = 7\n\nsamples=3 # trailing\ntol = cone.jordan=1e-10\n").unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(cfg.get::<usize>("samples").unwrap(), Some(3));
        assert_eq!(cfg.tolerances, vec!["cone.jordan=1e-10".to_string()]);
        assert!(ConfigFile::parse("bogus = 1").is_err());
        assert!(ConfigFile::parse("seed 1").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn seed_precedence() {
        let file = std::env::temp_dir().join(format!("frobforge-config-{}.cfg", std::process::id()));
        fs::write(&file, "seed = 5\n").unwrap();
        let mut flags = GlobalFlags { config: Some(file.clone()), ..Default::default() };
        assert_eq!(RunConfig::resolve(&flags, None).unwrap().seed, 5);
        assert_eq!(RunConfig::resolve(&flags, Some("9".into())).unwrap().seed, 9);
        flags.seed = Some(1);
        assert_eq!(RunConfig::resolve(&flags, Some("9".into())).unwrap().seed, 1);
        assert_eq!(RunConfig::resolve(&GlobalFlags::default(), None).unwrap().seed, DEFAULT_SEED);
        assert!(RunConfig::resolve(&GlobalFlags::default(), Some("x".into())).is_err());
        fs::remove_file(file).unwrap();
    }

    #[test]
    fn tolerance_overrides_are_validated() {
        assert_eq!(parse_tolerance("cone.jordan=1e-9").unwrap().1, 1e-9);
        assert!(parse_tolerance("cone.jordan=0").is_err());
        assert!(parse_tolerance("cone.jordan=-1").is_err());
        assert!(parse_tolerance("nope=1").is_err());
        assert!(parse_tolerance("cone.jordan").is_err());
    }
}
