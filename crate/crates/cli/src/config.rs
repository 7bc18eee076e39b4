//! Run configuration: TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use ems_core::embedding::DEFAULT_DIM;
use ems_core::harness::Strategy;

/// Flags shared by the config file and the command line. Every field is
/// optional so the two layers can be merged.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// Query dataset (JSON lines)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Recorded answer trace (JSON lines)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Simulated agent profiles (JSON array) or `preset:<name>`
    #[arg(long)]
    pub profiles: Option<String>,
    /// Chat-completion endpoints (JSON array)
    #[arg(long)]
    pub endpoints: Option<PathBuf>,
    /// Comma-separated strategy names
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Semantic buffer capacity per agent
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Embedding dimension
    #[arg(long)]
    pub dim: Option<usize>,
    /// Historical reliability of an agent with no history
    #[arg(long)]
    pub cold_start_prior: Option<f64>,
    /// Use (c+1)/(v+2) instead of c/v
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub laplace: Option<bool>,
    /// Stop quorum sessions once no answer can still reach the quorum
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub prune_impossible: Option<bool>,
    /// Compare answers numerically ("3.0" == "3")
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub numeric_answers: Option<bool>,
    #[arg(long)]
    pub state_in: Option<PathBuf>,
    #[arg(long)]
    pub state_out: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (never changes results)
    #[arg(long)]
    pub parallel: Option<usize>,
    /// Remote embedding endpoint; the hashing encoder is used when absent
    #[arg(long)]
    pub embed_url: Option<String>,
    /// Environment variable holding the embedding endpoint's bearer token
    #[arg(long)]
    pub embed_token_env: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )+
    };
}

impl RunOptions {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut options: Self = toml::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
        // Paths in a config file are relative to the file.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut options.dataset,
            &mut options.trace,
            &mut options.endpoints,
            &mut options.state_in,
            &mut options.state_out,
            &mut options.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(profiles) = &mut options.profiles {
            if !profiles.starts_with("preset:") && Path::new(profiles).is_relative() {
                *profiles = base.join(&*profiles).display().to_string();
            }
        }
        Ok(options)
    }

    /// `self` with every flag set in `top` replaced.
    pub fn overlay(mut self, top: RunOptions) -> Self {
        overlay!(
            self,
            top,
            dataset,
            trace,
            profiles,
            endpoints,
            strategies,
            seed,
            capacity,
            dim,
            cold_start_prior,
            laplace,
            prune_impossible,
            numeric_answers,
            state_in,
            state_out,
            out,
            parallel,
            embed_url,
            embed_token_env
        );
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "path")]
pub enum AgentSource {
    Trace(PathBuf),
    Profiles(String),
    Endpoints(PathBuf),
}

/// Validated configuration; embedded verbatim in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub source: AgentSource,
    pub strategies: Vec<Strategy>,
    pub seed: u64,
    pub buffer_capacity: usize,
    pub dim: usize,
    pub cold_start_prior: f64,
    pub laplace: bool,
    pub prune_impossible: bool,
    pub numeric_answers: bool,
    pub state_in: Option<PathBuf>,
    // Output locations and worker counts never change results, so they stay
    // out of the embedded config and its digest.
    #[serde(skip)]
    pub state_out: Option<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub parallel: usize,
    pub embed_url: Option<String>,
    #[serde(skip)]
    pub embed_token_env: Option<String>,
}

impl RunConfig {
    pub fn resolve(options: RunOptions) -> anyhow::Result<Self> {
        let dataset = options.dataset.context("`dataset` is required")?;
        let source = match (options.trace, options.profiles, options.endpoints) {
            (Some(t), None, None) => AgentSource::Trace(t),
            (None, Some(p), None) => AgentSource::Profiles(p),
            (None, None, Some(e)) => AgentSource::Endpoints(e),
            (None, None, None) => bail!("one of `trace`, `profiles` or `endpoints` is required"),
            _ => bail!("`trace`, `profiles` and `endpoints` are mutually exclusive"),
        };
        let strategies = match options.strategies {
            Some(names) => names
                .iter()
                .map(|n| {
                    n.trim()
                        .parse::<Strategy>()
                        .map_err(|e| anyhow::anyhow!("`strategies`: {e}"))
                })
                .collect::<anyhow::Result<Vec<_>>>()?,
            None => Strategy::ALL_DEFAULT.to_vec(),
        };
        if strategies.is_empty() {
            bail!("`strategies` must not be empty");
        }
        let capacity = options
            .capacity
            .unwrap_or(ems_core::domain::DEFAULT_BUFFER_CAPACITY);
        if capacity == 0 {
            bail!("`capacity` must be at least 1");
        }
        let dim = options.dim.unwrap_or(DEFAULT_DIM);
        if dim == 0 {
            bail!("`dim` must be at least 1");
        }
        let prior = options
            .cold_start_prior
            .unwrap_or(ems_core::confidence::COLD_START_PRIOR);
        if !(0.0..=1.0).contains(&prior) {
            bail!("`cold_start_prior` must lie in [0, 1], got {prior}");
        }
        let parallel = options.parallel.unwrap_or(1);
        if parallel == 0 {
            bail!("`parallel` must be at least 1");
        }
        Ok(Self {
            dataset,
            source,
            strategies,
            seed: options.seed.unwrap_or(0),
            buffer_capacity: capacity,
            dim,
            cold_start_prior: prior,
            laplace: options.laplace.unwrap_or(false),
            prune_impossible: options.prune_impossible.unwrap_or(false),
            numeric_answers: options.numeric_answers.unwrap_or(false),
            state_in: options.state_in,
            state_out: options.state_out,
            out: options.out.unwrap_or_else(|| PathBuf::from("ems-out")),
            parallel,
            embed_url: options.embed_url,
            embed_token_env: options.embed_token_env,
        })
    }
}
