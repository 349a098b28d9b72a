//! Analysis configuration: a TOML file whose every key has a default, with
//! selected environment variables taking precedence.

use std::path::{Path, PathBuf};

use agora_core::{KTop, LayoutParams};
use serde::{Deserialize, Serialize};

use crate::ingest::{CollectOptions, RetryPolicy, DEFAULT_BASE_URL};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("environment variable {var}: {message}")]
    Env { var: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub store: StoreConfig,
    pub api: ApiConfig,
    pub collect: CollectConfig,
    pub polarize: PolarizeConfig,
    pub layout: LayoutConfig,
    pub share: ShareConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreConfig {
    pub path: PathBuf,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self { path: PathBuf::from("agora-data") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApiConfig {
    /// Name of the variable holding the bearer token, not the token itself.
    pub token_env: String,
    pub base_url: String,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self { token_env: "AGORA_BEARER_TOKEN".into(), base_url: DEFAULT_BASE_URL.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectConfig {
    pub page_size: usize,
    pub max_retries: u32,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self { page_size: 100, max_retries: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarizeConfig {
    pub k_top_fraction: f64,
    /// Walks per side when RWC is sampled rather than solved.
    pub walks: usize,
    pub seed: u64,
}

impl Default for PolarizeConfig {
    fn default() -> Self {
        Self { k_top_fraction: 0.05, walks: 100_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub width: f64,
    pub height: f64,
    pub iterations: usize,
    pub force_constant: f64,
    pub seed: u64,
    pub use_weights: bool,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        let p = LayoutParams::default();
        Self {
            width: p.width,
            height: p.height,
            iterations: p.iterations,
            force_constant: p.force_constant,
            seed: p.seed,
            use_weights: p.use_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShareConfig {
    pub listen_addr: String,
    pub token_env: String,
    /// Where uploads are kept.
    pub data_dir: PathBuf,
}

impl Default for ShareConfig {
    fn default() -> Self {
        Self {
            listen_addr: "127.0.0.1:8080".into(),
            token_env: "AGORA_SHARE_TOKEN".into(),
            data_dir: PathBuf::from("agora-share"),
        }
    }
}

/// Variables that override file values.
pub const ENV_OVERRIDES: [&str; 5] =
    ["AGORA_STORE_PATH", "AGORA_API_BASE_URL", "AGORA_PAGE_SIZE", "AGORA_SHARE_LISTEN", "AGORA_SHARE_DIR"];

impl Config {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let config: Config =
            toml::from_str(text).map_err(|e| ConfigError::Invalid { path: origin.to_path_buf(), message: e.to_string() })?;
        config.validate().map_err(|message| ConfigError::Invalid { path: origin.to_path_buf(), message })?;
        Ok(config)
    }

    /// Reads `path` if given, else starts from defaults, then applies the
    /// process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
                Self::from_toml(&text, p)?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get("AGORA_STORE_PATH") {
            self.store.path = PathBuf::from(v);
        }
        if let Some(v) = get("AGORA_API_BASE_URL") {
            self.api.base_url = v;
        }
        if let Some(v) = get("AGORA_PAGE_SIZE") {
            self.collect.page_size = v
                .parse()
                .map_err(|_| ConfigError::Env { var: "AGORA_PAGE_SIZE".into(), message: format!("{v:?} is not a count") })?;
        }
        if let Some(v) = get("AGORA_SHARE_LISTEN") {
            self.share.listen_addr = v;
        }
        if let Some(v) = get("AGORA_SHARE_DIR") {
            self.share.data_dir = PathBuf::from(v);
        }
        self.validate().map_err(|message| ConfigError::Env { var: "AGORA_*".into(), message })
    }

    fn validate(&self) -> Result<(), String> {
        if self.collect.page_size == 0 {
            return Err("collect.page_size must be positive".into());
        }
        let f = self.polarize.k_top_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err("polarize.k_top_fraction must be in (0, 1]".into());
        }
        if self.polarize.walks == 0 {
            return Err("polarize.walks must be positive".into());
        }
        let l = &self.layout;
        if !(l.width > 0.0 && l.height > 0.0 && l.width.is_finite() && l.height.is_finite()) {
            return Err("layout.width and layout.height must be positive".into());
        }
        if !(l.force_constant > 0.0 && l.force_constant.is_finite()) {
            return Err("layout.force_constant must be positive".into());
        }
        Ok(())
    }

    pub fn collect_options(&self) -> CollectOptions {
        CollectOptions {
            page_size: self.collect.page_size,
            retry: RetryPolicy { max_retries: self.collect.max_retries, ..RetryPolicy::default() },
        }
    }

    pub fn k_top(&self) -> KTop {
        KTop::Fraction(self.polarize.k_top_fraction)
    }

    pub fn layout_params(&self) -> LayoutParams {
        let l = &self.layout;
        LayoutParams {
            width: l.width,
            height: l.height,
            iterations: l.iterations,
            force_constant: l.force_constant,
            seed: l.seed,
            use_weights: l.use_weights,
            ..LayoutParams::default()
        }
    }

    /// Token from the variable named by `api.token_env`.
    pub fn api_token(&self) -> Option<String> {
        std::env::var(&self.api.token_env).ok().filter(|t| !t.is_empty())
    }

    pub fn share_token(&self) -> Option<String> {
        std::env::var(&self.share.token_env).ok().filter(|t| !t.is_empty())
    }
}
