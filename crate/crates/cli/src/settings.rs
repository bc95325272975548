//! Run settings: `key=value` config file entries, overridden by flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::Args;
use spherefield::modelspec::{parse_pairs, ModelSpec, MODEL_KEYS};

/// A user-input problem detected before any computation (exit code 2).
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

/// Model flags; any one of them present means "a model was specified".
#[derive(Args, Debug, Default, Clone)]
pub struct ModelArgs {
    /// exp, gcauchy, matern, st, st-exp or st-cauchy
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub sill: Option<String>,
    #[arg(long)]
    pub phi0: Option<String>,
    #[arg(long)]
    pub phi1: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub phi2: Option<String>,
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub c0: Option<String>,
    #[arg(long)]
    pub c1: Option<String>,
    /// Temporal factor of `--model st`: exp or cauchy
    #[arg(long)]
    pub gkind: Option<String>,
}

impl ModelArgs {
    fn pairs(&self) -> [(&'static str, &Option<String>); 13] {
        [
            ("model", &self.model),
            ("sill", &self.sill),
            ("phi0", &self.phi0),
            ("phi1", &self.phi1),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("phi2", &self.phi2),
            ("nu", &self.nu),
            ("delta", &self.delta),
            ("tau", &self.tau),
            ("c0", &self.c0),
            ("c1", &self.c1),
            ("gkind", &self.gkind),
        ]
    }
}

pub struct Settings {
    values: BTreeMap<String, String>,
    run_keys: &'static [&'static str],
}

impl Settings {
    /// Reads `config` (if any), keeping only model keys and `run_keys`.
    pub fn load(config: Option<&Path>, run_keys: &'static [&'static str]) -> Result<Self> {
        let mut s = Self {
            values: BTreeMap::new(),
            run_keys,
        };
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let pairs =
                parse_pairs(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            for (k, v) in pairs {
                if !s.accepts(&k) {
                    return Err(invalid(format!(
                        "{}: unknown key {k:?} for this command",
                        path.display()
                    )));
                }
                s.values.insert(k, v);
            }
        }
        Ok(s)
    }

    fn accepts(&self, key: &str) -> bool {
        self.run_keys.contains(&key) || ModelSpec::is_model_key(key)
    }

    pub fn set<V: ToString>(&mut self, key: &str, value: Option<V>) {
        debug_assert!(self.accepts(key), "{key}");
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn set_model(&mut self, args: &ModelArgs) {
        for (k, v) in args.pairs() {
            self.set(k, v.as_deref());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| invalid(format!("{key}: {v:?}: {e}")))
            })
            .transpose()
    }

    pub fn has_model(&self) -> bool {
        MODEL_KEYS.iter().any(|k| self.values.contains_key(*k))
    }

    /// Model keys applied over the reference defaults.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let mut spec = ModelSpec::default();
        for k in MODEL_KEYS {
            if let Some(v) = self.raw(k) {
                spec.set(k, v)?;
            }
        }
        Ok(spec)
    }
}

/// `path` for a single output, `stem_0000.ext`, `stem_0001.ext`, ... otherwise.
pub fn numbered_path(path: &Path, index: usize, total: usize) -> std::path::PathBuf {
    if total == 1 {
        return path.to_path_buf();
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{index:04}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{index:04}"),
    };
    path.with_file_name(name)
}
