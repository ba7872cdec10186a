use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::gateway::ProviderConfig;
use crate::judge::{CompilerConfig, ExecLimits};
use crate::prompting::PromptVariant;
use crate::similarity::PsmWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Http,
    Mock,
}

/// Everything a repair run needs. Relative paths in a config file resolve
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub variant: PromptVariant,
    /// Submissions processed concurrently.
    pub workers: usize,
    pub provider: ProviderKind,
    /// Root of the canned responses used by the mock provider.
    pub mock_dir: PathBuf,
    pub weights: PsmWeights,
    pub llm: ProviderConfig,
    pub limits: ExecLimits,
    pub compiler: CompilerConfig,
    pub max_prompt_tokens: Option<usize>,
    /// Replacement for the bundled prompt templates.
    pub templates: Option<PathBuf>,
    /// Replacement for the bundled list of identifiers kept by anonymization.
    pub stdlib_names: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus"),
            out: PathBuf::from("out"),
            variant: PromptVariant::PAR,
            workers: 4,
            provider: ProviderKind::Http,
            mock_dir: PathBuf::from("mock_responses"),
            weights: PsmWeights::default(),
            llm: ProviderConfig::default(),
            limits: ExecLimits::default(),
            compiler: CompilerConfig::default(),
            max_prompt_tokens: None,
            templates: None,
            stdlib_names: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.out);
        fix(&mut self.mock_dir);
        if let Some(p) = self.templates.as_mut() {
            fix(p);
        }
        if let Some(p) = self.stdlib_names.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if let Err(e) = self.weights.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.llm.validate() {
            return bad(e.to_string());
        }
        if let Err(e) = self.limits.validate() {
            return bad(e.to_string());
        }
        if self.compiler.command.trim().is_empty() {
            return bad("compiler command is empty".into());
        }
        if self.max_prompt_tokens == Some(0) {
            return bad("max_prompt_tokens must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg =
            PipelineConfig::from_toml("variant = \"par+bl\"\nprovider = \"mock\"\n[llm]\nsamples_per_prompt = 3\n")
                .unwrap();
        assert_eq!(cfg.variant.to_string(), "par+bl");
        assert_eq!(cfg.provider, ProviderKind::Mock);
        assert_eq!(cfg.llm.samples_per_prompt, 3);
        assert_eq!(cfg.llm.temperature, 0.8);
        assert_eq!(cfg.weights, PsmWeights::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml("colour = 1").is_err());
        assert!(PipelineConfig::from_toml("[llm]\nsamples = 3").is_err());
        assert!(PipelineConfig::from_toml("[weights]\nalpha = 1\nbeta = 0\ngamma = 0\ndelta = 0\nzeta = 1").is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let cfg = PipelineConfig { workers: 0, ..PipelineConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig::from_toml("[weights]\nalpha = 0\nbeta = 0\ngamma = 0\ndelta = 0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut cfg = PipelineConfig::default();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.corpus, Path::new("/data/run/corpus"));
        assert_eq!(cfg.mock_dir, Path::new("/data/run/mock_responses"));
    }
}
