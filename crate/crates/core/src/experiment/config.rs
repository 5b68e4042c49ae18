use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, EXPERIMENTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Reduced grids that finish in minutes on one core.
    Ci,
    /// Figure-scale grids.
    Full,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Ci => "ci",
            Profile::Full => "full",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ci" => Ok(Profile::Ci),
            "full" => Ok(Profile::Full),
            _ => Err(format!("unknown profile '{s}' (ci, full)")),
        }
    }
}

/// Parameters of one experiment: profile defaults that a config section
/// may override key by key.
pub trait Params: Serialize + DeserializeOwned + Sized {
    fn defaults(profile: Profile) -> Self;
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteSection {
    #[serde(default)]
    experiments: Vec<String>,
    #[serde(default)]
    seed: u64,
    profile: Option<Profile>,
    budget_seconds: Option<f64>,
}

/// A parsed experiment suite.
///
/// ```toml
/// [suite]
/// experiments = ["fig_fluid", "counterexamples"]
/// seed = 7
/// profile = "ci"
///
/// [fig_fluid]
/// n = 2000
/// ```
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub experiments: Vec<String>,
    pub seed: u64,
    pub profile: Profile,
    /// Wall-clock limit for the whole suite, if any.
    pub budget_seconds: Option<f64>,
    sections: BTreeMap<String, toml::Table>,
}

impl SuiteConfig {
    /// A suite running `experiments` with every parameter at its default.
    pub fn with_defaults(experiments: &[&str], seed: u64, profile: Profile) -> Result<Self, ExperimentError> {
        let cfg = Self {
            experiments: experiments.iter().map(|s| s.to_string()).collect(),
            seed,
            profile,
            budget_seconds: None,
            sections: BTreeMap::new(),
        };
        cfg.check_names()?;
        Ok(cfg)
    }

    /// Parses a suite. `profile` overrides the file's profile; without
    /// either the CI profile is used.
    pub fn parse(text: &str, profile: Option<Profile>) -> Result<Self, ExperimentError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ExperimentError::Config(e.to_string()))?;
        let suite = match table.remove("suite") {
            Some(v) => SuiteSection::deserialize(v).map_err(|e| ExperimentError::Config(format!("[suite]: {e}")))?,
            None => return Err(ExperimentError::Config("missing [suite] section".into())),
        };
        let mut sections = BTreeMap::new();
        for (name, value) in table {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(ExperimentError::UnknownExperiment(name));
            }
            match value {
                toml::Value::Table(t) => {
                    sections.insert(name, t);
                }
                _ => return Err(ExperimentError::Config(format!("'{name}' must be a section"))),
            }
        }
        let cfg = Self {
            experiments: suite.experiments,
            seed: suite.seed,
            profile: profile.or(suite.profile).unwrap_or(Profile::Ci),
            budget_seconds: suite.budget_seconds,
            sections,
        };
        cfg.check_names()?;
        Ok(cfg)
    }

    fn check_names(&self) -> Result<(), ExperimentError> {
        for name in &self.experiments {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(ExperimentError::UnknownExperiment(name.clone()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &self.experiments {
            if !seen.insert(name) {
                return Err(ExperimentError::Config(format!("experiment '{name}' listed twice")));
            }
        }
        Ok(())
    }

    /// Profile defaults for `name` with the section's keys applied.
    pub fn params<P: Params>(&self, name: &str) -> Result<P, ExperimentError> {
        let defaults = P::defaults(self.profile);
        let Some(overrides) = self.sections.get(name) else {
            return Ok(defaults);
        };
        let mut merged = toml::Table::try_from(&defaults).map_err(|e| ExperimentError::Config(e.to_string()))?;
        merge(&mut merged, overrides, name)?;
        P::deserialize(toml::Value::Table(merged)).map_err(|e| ExperimentError::Config(format!("[{name}]: {e}")))
    }
}

/// Overlays `src` onto `dst`, recursing into sub-tables; keys absent from
/// `dst` are rejected.
fn merge(dst: &mut toml::Table, src: &toml::Table, path: &str) -> Result<(), ExperimentError> {
    for (key, value) in src {
        let here = format!("{path}.{key}");
        match (dst.get_mut(key), value) {
            (None, _) => return Err(ExperimentError::Config(format!("unknown key '{here}'"))),
            (Some(toml::Value::Table(d)), toml::Value::Table(s)) => merge(d, s, &here)?,
            (Some(slot), _) => *slot = value.clone(),
        }
    }
    Ok(())
}
