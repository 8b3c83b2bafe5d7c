//! Config-file and environment resolution. Precedence for every parameter:
//! explicit flag, then the `KFW_THREADS` env var (threads only), then the
//! config file, then the built-in default.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default)]
pub struct Settings {
    map: HashMap<String, String>,
}

impl Settings {
    /// Parses a `key=value` file; blank lines and `#` comments are skipped.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                );
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key {key}={raw}: {e}"),
            },
        }
    }

    pub fn get_list<T>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|e| anyhow::anyhow!("config key {key}: {e}"))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

pub fn resolve<T>(flag: Option<T>, settings: &Settings, key: &str, default: T) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    Ok(settings.get(key)?.unwrap_or(default))
}

pub fn resolve_list<T>(
    flag: Vec<T>,
    settings: &Settings,
    key: &str,
    default: &[T],
) -> Result<Vec<T>>
where
    T: FromStr + Clone,
    T::Err: Display,
{
    if !flag.is_empty() {
        return Ok(flag);
    }
    Ok(settings.get_list(key)?.unwrap_or_else(|| default.to_vec()))
}

/// Worker thread count: `--threads`, else `KFW_THREADS`, else the config
/// file, else automatic.
pub fn resolve_threads(flag: Option<usize>, settings: &Settings) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    if let Ok(raw) = std::env::var("KFW_THREADS") {
        let parsed: usize = raw
            .parse()
            .map_err(|e| anyhow::anyhow!("KFW_THREADS={raw}: {e}"))?;
        return Ok(Some(parsed));
    }
    settings.get("threads")
}

/// Runs `body` on a dedicated pool when a thread count is requested;
/// results are thread-count-independent either way.
pub fn with_thread_pool<T: Send>(
    threads: Option<usize>,
    body: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match threads {
        Some(count) => rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build()
            .context("building thread pool")?
            .install(body),
        None => body(),
    }
}
