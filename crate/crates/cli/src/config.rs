use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use omega_core::ensemble::EnsembleConfig;
use serde::Deserialize;

/// Name of the optional settings file inside the home directory.
pub const CONFIG_FILE: &str = "config.toml";

/// Resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub home: PathBuf,
    pub rounds: usize,
    pub t_min_ms: u64,
    pub workers: usize,
    pub unthresholded_margin: f64,
    pub output_dir: PathBuf,
    pub log_level: String,
}

/// Values given on the command line; `None` means not given.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub home: Option<PathBuf>,
    pub rounds: Option<usize>,
    pub t_min_ms: Option<u64>,
    pub workers: Option<usize>,
    pub unthresholded_margin: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub log_level: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    rounds: Option<usize>,
    t_min_ms: Option<u64>,
    workers: Option<usize>,
    unthresholded_margin: Option<f64>,
    output_dir: Option<PathBuf>,
    log_level: Option<String>,
}

impl RunConfig {
    /// Flags, then environment, then `config.toml` in the home, then
    /// defaults.
    pub fn resolve(flags: &Overrides, env: &BTreeMap<String, String>) -> Result<RunConfig, String> {
        let home = match (&flags.home, env.get("OMEGA_HOME")) {
            (Some(h), _) => h.clone(),
            (None, Some(h)) if !h.is_empty() => PathBuf::from(h),
            _ => match env.get("HOME") {
                Some(h) if !h.is_empty() => Path::new(h).join(".omega"),
                _ => PathBuf::from(".omega"),
            },
        };
        let file = load_file(&home)?;
        let defaults = EnsembleConfig::default();

        let rounds = pick(flags.rounds, env_var(env, "OMEGA_ROUNDS")?, file.rounds, defaults.rounds);
        let t_min_ms = pick(flags.t_min_ms, env_var(env, "OMEGA_T_MIN_MS")?, file.t_min_ms, defaults.t_min_ms);
        let workers = pick(flags.workers, env_var(env, "OMEGA_WORKERS")?, file.workers, defaults.workers);
        let unthresholded_margin = pick(
            flags.unthresholded_margin,
            env_var(env, "OMEGA_MARGIN")?,
            file.unthresholded_margin,
            defaults.unthresholded_margin,
        );
        let output_dir = pick(
            flags.output_dir.clone(),
            env.get("OMEGA_OUTPUT_DIR").filter(|s| !s.is_empty()).map(PathBuf::from),
            file.output_dir,
            PathBuf::from("omega-out"),
        );
        let log_level = pick(
            flags.log_level.clone(),
            env.get("OMEGA_LOG").filter(|s| !s.is_empty()).cloned(),
            file.log_level,
            "warn".to_string(),
        );
        if rounds == 0 || workers == 0 {
            return Err("rounds and workers must be at least 1".into());
        }
        if !(unthresholded_margin.is_finite() && unthresholded_margin >= 0.0) {
            return Err(format!("unthresholded_margin must be a non-negative number, got {unthresholded_margin}"));
        }
        Ok(RunConfig {
            home,
            rounds,
            t_min_ms,
            workers,
            unthresholded_margin,
            output_dir,
            log_level,
        })
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            rounds: self.rounds,
            t_min_ms: self.t_min_ms,
            workers: self.workers,
            unthresholded_margin: self.unthresholded_margin,
            ..EnsembleConfig::default()
        }
    }
}

fn pick<T>(flag: Option<T>, env: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(env).or(file).unwrap_or(default)
}

fn env_var<T: std::str::FromStr>(env: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, String> {
    match env.get(key).map(|s| s.trim()) {
        None | Some("") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|_| format!("{key}: cannot parse `{s}`")),
    }
}

fn load_file(home: &Path) -> Result<FileConfig, String> {
    let path = home.join(CONFIG_FILE);
    match std::fs::read_to_string(&path) {
        Ok(text) => toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(FileConfig::default()),
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let home = dir.path().to_str().unwrap();
        std::fs::write(dir.path().join(CONFIG_FILE), "rounds = 4\nt_min_ms = 7\nworkers = 3\n").unwrap();

        let c = RunConfig::resolve(&Overrides::default(), &env(&[("OMEGA_HOME", home)])).unwrap();
        assert_eq!((c.rounds, c.t_min_ms, c.workers), (4, 7, 3));
        assert_eq!(c.unthresholded_margin, 0.05);

        let e = env(&[("OMEGA_HOME", home), ("OMEGA_ROUNDS", "5"), ("OMEGA_T_MIN_MS", "9")]);
        let c = RunConfig::resolve(&Overrides::default(), &e).unwrap();
        assert_eq!((c.rounds, c.t_min_ms), (5, 9));

        let flags = Overrides {
            rounds: Some(1),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(&flags, &e).unwrap();
        assert_eq!((c.rounds, c.t_min_ms, c.workers), (1, 9, 3));
    }

    #[test]
    fn home_fallbacks() {
        let c = RunConfig::resolve(&Overrides::default(), &env(&[("HOME", "/nonexistent-h")])).unwrap();
        assert_eq!(c.home, PathBuf::from("/nonexistent-h/.omega"));
        let flags = Overrides {
            home: Some("/nonexistent-f".into()),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(&flags, &env(&[("OMEGA_HOME", "/nonexistent-e")])).unwrap();
        assert_eq!(c.home, PathBuf::from("/nonexistent-f"));
    }

    #[test]
    fn bad_values() {
        let e = env(&[("OMEGA_HOME", "/nonexistent-x"), ("OMEGA_ROUNDS", "many")]);
        assert!(RunConfig::resolve(&Overrides::default(), &e).is_err());
        let flags = Overrides {
            home: Some("/nonexistent-x".into()),
            workers: Some(0),
            ..Overrides::default()
        };
        assert!(RunConfig::resolve(&flags, &BTreeMap::new()).is_err());
    }
}
