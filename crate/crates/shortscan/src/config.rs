//! Experiment configuration: one TOML file (all fields optional, with
//! defaults) plus flag overrides, fully determining a reproducible run.
//!
//! All randomness flows from the single `seed` through labeled sub-seeds,
//! so individual subcommands can be re-run independently and still agree
//! with each other.

use crate::cloudstore::StoragePopulationSpec;
use crate::maps::MapsPopulationSpec;
use crate::shortener::{GenerationStrategy, RatePolicy};
use crate::space::{SpaceFamily, TokenSpace};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One member space of the shortener family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub length: usize,
    /// Optional fixed leading character.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix: Option<char>,
}

impl SpaceSpec {
    pub fn to_space(&self) -> Result<TokenSpace, String> {
        let space = match self.prefix {
            Some(p) => TokenSpace::with_prefix(crate::space::BASE62_ALPHABET, self.length, p),
            None => TokenSpace::new(crate::space::BASE62_ALPHABET, self.length),
        };
        space.map_err(|e| format!("shortener.spaces (length {}): {e}", self.length))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Sequential,
    Random,
    Hybrid,
    Hash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShortenerConfig {
    pub spaces: Vec<SpaceSpec>,
    pub strategy: StrategyKind,
    pub hybrid_random_bits: u32,
    /// Fraction of the family to fill during populate.
    pub target_density: f64,
    pub recent_visits_cap: usize,
    pub rate_policy: RatePolicy,
}

impl Default for ShortenerConfig {
    fn default() -> Self {
        Self {
            spaces: vec![SpaceSpec {
                length: 3,
                prefix: None,
            }],
            strategy: StrategyKind::Random,
            hybrid_random_bits: 6,
            target_density: 0.42,
            recent_visits_cap: 10,
            rate_policy: RatePolicy::default(),
        }
    }
}

impl ShortenerConfig {
    pub fn family(&self) -> Result<SpaceFamily, String> {
        let members = self
            .spaces
            .iter()
            .map(|s| s.to_space())
            .collect::<Result<Vec<_>, _>>()?;
        SpaceFamily::new(members).map_err(|e| format!("shortener.spaces: {e}"))
    }

    /// The allocation strategy, seeded from the experiment seed.
    pub fn strategy(&self, seed: u64) -> GenerationStrategy {
        match self.strategy {
            StrategyKind::Sequential => GenerationStrategy::Sequential,
            StrategyKind::Random => GenerationStrategy::Random {
                seed: crate::shortener::derive_seed(seed, "alloc"),
            },
            StrategyKind::Hybrid => GenerationStrategy::Hybrid {
                seed: crate::shortener::derive_seed(seed, "alloc"),
                random_bits: self.hybrid_random_bits,
            },
            StrategyKind::Hash => GenerationStrategy::Hash,
        }
    }
}

/// Storage-population knobs beyond the backend spec itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorageConfig {
    #[serde(flatten)]
    pub population: StoragePopulationSpec,
    /// How many storage long URLs get short links during populate.
    pub link_count: u64,
    /// Fraction of those links pointing at deleted accounts (dead links).
    pub dead_fraction: f64,
}

impl Default for StorageConfig {
    fn default() -> Self {
        Self {
            population: StoragePopulationSpec::default(),
            link_count: 400,
            dead_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Sample size; ignored when `exhaustive` is set.
    pub sample_size: u64,
    /// Token length of the family member to scan.
    pub space_length: usize,
    pub exhaustive: bool,
    pub workers: usize,
    pub max_queries: u64,
    pub max_wall_time_secs: f64,
    pub per_worker_rate: f64,
    pub backoff_base: f64,
    pub backoff_cap: f64,
    pub progress_every: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            sample_size: 10_000,
            space_length: 3,
            exhaustive: false,
            workers: 4,
            max_queries: 20_000,
            max_wall_time_secs: 100_000.0,
            per_worker_rate: 2.6,
            backoff_base: 1.0,
            backoff_cap: 300.0,
            progress_every: 1000,
        }
    }
}

impl ScanConfig {
    pub fn budget(&self) -> crate::scanner::ScanBudget {
        crate::scanner::ScanBudget {
            max_queries: self.max_queries,
            max_wall_time: crate::clock::VirtualDuration::from_secs_f64(self.max_wall_time_secs),
            worker_count: self.workers,
            per_worker_rate: self.per_worker_rate,
            backoff_base: self.backoff_base,
            backoff_cap: self.backoff_cap,
            progress_every: self.progress_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MitigationConfig {
    /// Token length for the lengthening analysis.
    pub long_token_length: usize,
    pub anomaly_threshold: f64,
    /// CAPTCHA cadence for the hardened scenario.
    pub captcha_after: u64,
    /// Budget for the empirical defense comparison.
    pub compare_budget_queries: u64,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self {
            long_token_length: 10,
            anomaly_threshold: crate::mitigation::DEFAULT_ANOMALY_THRESHOLD,
            captcha_after: 100,
            compare_budget_queries: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub shortener: ShortenerConfig,
    pub storage: StorageConfig,
    pub maps: MapsPopulationSpec,
    pub scan: ScanConfig,
    pub mitigation: MitigationConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_toml_str(&text)
    }

    /// Field-level validation with config-path messages.
    pub fn validate(&self) -> Result<(), String> {
        if self.shortener.spaces.is_empty() {
            return Err("shortener.spaces must list at least one space".to_string());
        }
        let family = self.shortener.family()?;
        if !(0.0..=1.0).contains(&self.shortener.target_density) {
            return Err(format!(
                "shortener.target_density must be within [0, 1], got {}",
                self.shortener.target_density
            ));
        }
        self.shortener
            .rate_policy
            .validate()
            .map_err(|e| format!("shortener.rate_policy: {e}"))?;
        self.storage
            .population
            .validate()
            .map_err(|e| format!("storage: {e}"))?;
        if !(0.0..=1.0).contains(&self.storage.dead_fraction) {
            return Err(format!(
                "storage.dead_fraction must be within [0, 1], got {}",
                self.storage.dead_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.maps.directions_fraction) {
            return Err(format!(
                "maps.directions_fraction must be within [0, 1], got {}",
                self.maps.directions_fraction
            ));
        }
        if self.scan.workers == 0 {
            return Err("scan.workers must be at least 1".to_string());
        }
        if self.scan.per_worker_rate <= 0.0 {
            return Err("scan.per_worker_rate must be positive".to_string());
        }
        if !family
            .members()
            .iter()
            .any(|s| s.length() == self.scan.space_length)
        {
            return Err(format!(
                "scan.space_length {} does not match any shortener space",
                self.scan.space_length
            ));
        }
        // The populate target must leave room for the storage and maps
        // links inside the family.
        let capacity = family
            .cardinality_u128()
            .ok_or_else(|| "shortener.spaces: family too large to simulate".to_string())?;
        let target = (self.shortener.target_density * capacity as f64).round() as u64;
        let reserved = self.storage.link_count + self.maps.records as u64;
        if target < reserved {
            return Err(format!(
                "shortener.target_density yields {target} links, below the \
                 {reserved} needed for storage.link_count + maps.records"
            ));
        }
        if self.mitigation.long_token_length == 0 {
            return Err("mitigation.long_token_length must be at least 1".to_string());
        }
        if self.mitigation.captcha_after == 0 {
            return Err("mitigation.captcha_after must be at least 1".to_string());
        }
        Ok(())
    }

    /// The member space scans sample from.
    pub fn scan_space(&self) -> Result<TokenSpace, String> {
        self.shortener
            .spaces
            .iter()
            .find(|s| s.length == self.scan.space_length)
            .ok_or_else(|| {
                format!(
                    "scan.space_length {} does not match any shortener space",
                    self.scan.space_length
                )
            })?
            .to_space()
    }

    pub fn sub_seed(&self, label: &str) -> u64 {
        crate::shortener::derive_seed(self.seed, label)
    }
}
