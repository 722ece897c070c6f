//! Merges defaults, a config file, the TRUSTDYN_SEED variable and command
//! line flags into one set of run settings.

use std::path::Path;

use trustdyn_core::config::{parse_integer, parse_real, KeyValueConfig};
use trustdyn_core::finite::FiniteConfig;
use trustdyn_core::params::GAME_KEYS;
use trustdyn_core::qlearn::{Census, QConfig};
use trustdyn_core::replicator::{IntegrationSpec, ReplicatorState, Variant};
use trustdyn_core::GameParams;

use crate::CliError;

pub const SEED_ENV: &str = "TRUSTDYN_SEED";

/// Keys accepted besides the game keys, with their defaults.
pub const RUN_DEFAULTS: [(&str, &str); 19] = [
    ("Z_u", "100"),
    ("Z_c", "100"),
    ("beta", "0.1"),
    ("trust", "true"),
    ("seed", "1"),
    ("mutation_rate", "0.001"),
    ("mc_steps", "0"),
    ("mc_record_every", "1000"),
    ("variant", "five"),
    ("dt", "0.01"),
    ("t_end", "500"),
    ("record_every", "10"),
    ("init", "uniform"),
    ("learn_rate", "0.05"),
    ("explore_rate", "0.05"),
    ("pop_size", "100"),
    ("episodes", "5000"),
    ("runs", "10"),
    ("census", "greedy"),
];

pub fn allowed_keys() -> Vec<&'static str> {
    let mut keys: Vec<&str> = GAME_KEYS.to_vec();
    keys.extend(RUN_DEFAULTS.iter().map(|(k, _)| *k));
    keys
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub params: GameParams,
    pub finite: FiniteConfig,
    pub mutation_rate: f64,
    pub mc_steps: u64,
    pub mc_record_every: u64,
    pub variant: Variant,
    pub integration: IntegrationSpec,
    /// `None` means the uniform starting point of the variant.
    pub init: Option<ReplicatorState>,
    pub q: QConfig,
    pub seed: u64,
    /// Every key after merging, as written to meta files.
    pub merged: KeyValueConfig,
}

impl Settings {
    /// Precedence, lowest first: built-in defaults, the config file,
    /// TRUSTDYN_SEED (seed only), flags.
    pub fn load(file: Option<&Path>, flags: &[(&'static str, String)]) -> Result<Self, CliError> {
        let env_seed = std::env::var(SEED_ENV).ok();
        Self::load_with_env(file, flags, env_seed.as_deref())
    }

    pub fn load_with_env(
        file: Option<&Path>,
        flags: &[(&'static str, String)],
        env_seed: Option<&str>,
    ) -> Result<Self, CliError> {
        let mut merged = KeyValueConfig::parse(&GameParams::reference().to_config_string())?;
        for (k, v) in RUN_DEFAULTS {
            merged.set(k, v);
        }
        if let Some(path) = file {
            let from_file = KeyValueConfig::load(path)?;
            from_file.check_keys(&allowed_keys())?;
            for k in from_file.keys() {
                merged.set(k, from_file.get(k).expect("listed key"));
            }
        }
        if let Some(seed) = env_seed {
            merged.set("seed", seed.trim());
        }
        for (k, v) in flags {
            merged.set(k, v.clone());
        }
        Self::from_merged(merged)
    }

    pub fn from_merged(merged: KeyValueConfig) -> Result<Self, CliError> {
        let params = GameParams::from_config(&merged)?;
        let real = |k: &str| parse_real(k, merged.get(k).expect("defaulted key"));
        let int = |k: &str| parse_integer(k, merged.get(k).expect("defaulted key"));
        let size = |k: &str| -> Result<usize, CliError> {
            usize::try_from(int(k)?).map_err(|_| CliError::Config(format!("{k} is too large")))
        };
        let flag = |k: &str| -> Result<bool, CliError> {
            match merged.get(k).expect("defaulted key") {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                other => Err(CliError::Config(format!("{k}: {other:?} is not true or false"))),
            }
        };

        let finite = FiniteConfig::new(size("Z_u")?, size("Z_c")?, real("beta")?, flag("trust")?)?;
        let variant: Variant = merged.get("variant").expect("defaulted key").parse()?;
        let integration = IntegrationSpec {
            dt: real("dt")?,
            t_end: real("t_end")?,
            record_every: size("record_every")?,
            ..IntegrationSpec::default()
        };
        let init = parse_init(merged.get("init").expect("defaulted key"), variant)?;
        let census = match merged.get("census").expect("defaulted key") {
            "greedy" => Census::Greedy,
            "sampled" => Census::Sampled,
            other => return Err(CliError::Config(format!("census: {other:?} is not greedy or sampled"))),
        };
        let seed = int("seed")?;
        let pop = size("pop_size")?;
        let q = QConfig {
            learn_rate: real("learn_rate")?,
            explore_rate: real("explore_rate")?,
            user_pop: pop,
            creator_pop: pop,
            episodes: size("episodes")?,
            runs: size("runs")?,
            seed,
            census,
        };
        q.validate()?;
        let mutation_rate = real("mutation_rate")?;
        if !(0.0..=1.0).contains(&mutation_rate) {
            return Err(CliError::Config(format!("mutation_rate = {mutation_rate} outside [0, 1]")));
        }
        Ok(Self {
            params,
            finite,
            mutation_rate,
            mc_steps: int("mc_steps")?,
            mc_record_every: int("mc_record_every")?,
            variant,
            integration,
            init,
            q,
            seed,
            merged,
        })
    }

    pub fn initial_state(&self) -> ReplicatorState {
        self.init.unwrap_or_else(|| ReplicatorState::uniform(self.variant))
    }
}

fn parse_init(text: &str, variant: Variant) -> Result<Option<ReplicatorState>, CliError> {
    if text == "uniform" {
        return Ok(None);
    }
    let coords: Vec<f64> = text.split(',').map(|s| parse_real("init", s.trim())).collect::<Result<_, _>>()?;
    if coords.len() != variant.dim() {
        return Err(CliError::Config(format!(
            "init needs {} comma-separated values for the {} variant",
            variant.dim(),
            variant.name()
        )));
    }
    let state = ReplicatorState::from_coords(variant, &coords);
    state.validate(variant, 1e-9)?;
    Ok(Some(state))
}
