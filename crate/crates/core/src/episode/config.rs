use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::association::{AssociationConfig, AssociationMode};
use crate::explorer::{ExplorationConfig, PolicyKind};
use crate::oracle::NoiseModel;
use crate::world::{FieldOfView, WorldSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("bad override {0:?}: expected key=value")]
    BadOverride(String),
    #[error("override {key:?}: {msg}")]
    OverridePath { key: String, msg: String },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

/// Everything that determines a batch of episodes. Serialized into every log
/// header so evaluation never needs the original file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub policy: PolicyKind,
    /// Policies compared by `compare-policies`; defaults to all three.
    pub policies: Vec<PolicyKind>,
    pub association: AssociationMode,
    pub episode_cap: u32,
    /// World seeds.
    pub seeds: Vec<u64>,
    /// Runtime seeds (observation, captioner, policy). Empty: reuse each
    /// world seed. Otherwise every world seed runs with every policy seed.
    pub policy_seeds: Vec<u64>,
    /// Load this world instead of generating one per seed.
    pub world_file: Option<PathBuf>,
    pub world: WorldSpec,
    pub fov: FieldOfView,
    /// Uniform disc noise on detected positions, meters.
    pub position_noise: f64,
    pub output_dir: PathBuf,
    /// Views kept per object by pseudo-caption view selection.
    pub view_budget: usize,
    pub vote_threshold: f64,
    /// Store the full prompt text in every step record.
    pub record_prompts: bool,
    pub exploration: ExplorationConfig,
    pub noise: NoiseModel,
    pub association_params: AssociationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Disagreement,
            policies: vec![PolicyKind::Disagreement, PolicyKind::Frontier, PolicyKind::Random],
            association: AssociationMode::Oracle,
            episode_cap: 400,
            seeds: vec![0],
            policy_seeds: Vec::new(),
            world_file: None,
            world: WorldSpec::default(),
            fov: FieldOfView::default(),
            position_noise: 0.0,
            output_dir: PathBuf::from("runs"),
            view_budget: 5,
            vote_threshold: 0.5,
            record_prompts: true,
            exploration: ExplorationConfig::default(),
            noise: NoiseModel::default(),
            association_params: AssociationConfig::default(),
        }
    }
}

/// Parses a scalar override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let slot = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = slot.as_table_mut().ok_or_else(|| ConfigError::OverridePath {
            key: key.into(),
            msg: format!("{part:?} is not a section"),
        })?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Applies `section.key=value` overrides on top of the document, then
    /// deserializes. Unknown keys are rejected.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::BadOverride(o.clone()))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::BadOverride(o.clone()));
            }
            set_path(&mut table, k, parse_value(v.trim()))?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Every violated constraint, one message per field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        if self.episode_cap == 0 {
            errs.push("episode_cap must be at least 1".to_string());
        }
        if self.seeds.is_empty() {
            errs.push("seeds must list at least one seed".to_string());
        }
        if !(self.position_noise.is_finite() && self.position_noise >= 0.0) {
            errs.push("position_noise must be finite and >= 0".to_string());
        } else if self.position_noise > self.world.cell_size {
            errs.push("position_noise must not exceed one cell".to_string());
        }
        if self.view_budget == 0 {
            errs.push("view_budget must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.vote_threshold) {
            errs.push("vote_threshold must be in [0, 1]".to_string());
        }
        if self.world_file.is_none() {
            if let Err(e) = self.world.validate() {
                errs.push(format!("world: {e}"));
            }
        }
        for (section, r) in [
            ("fov", self.fov.validate()),
            ("exploration", self.exploration.validate()),
            ("noise", self.noise.validate()),
            ("association_params", self.association_params.validate()),
        ] {
            if let Err(e) = r {
                errs.push(format!("{section}: {e}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    /// `(world_seed, policy_seed)` pairs in run order.
    pub fn episodes(&self) -> Vec<(u64, u64)> {
        self.seeds
            .iter()
            .flat_map(|&w| {
                if self.policy_seeds.is_empty() {
                    vec![(w, w)]
                } else {
                    self.policy_seeds.iter().map(|&p| (w, p)).collect()
                }
            })
            .collect()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
