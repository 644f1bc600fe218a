use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::llm::ModelConfig;
use crate::retrieval::RetrievalStrategy;
use crate::schema::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    OneStage,
    TwoStage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    #[default]
    Code,
    TextBaseline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderConfig {
    #[default]
    Hash,
    Http {
        base_url: String,
        model: String,
        dimension: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        api_key_env: Option<String>,
    },
}

fn default_workers() -> usize {
    4
}

fn default_output_root() -> String {
    "runs".into()
}

/// One experiment. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    pub schema: String,
    pub train: String,
    pub test: String,
    /// Cache key for the example index; defaults to the schema's dataset name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub prompt_style: PromptStyle,
    pub strategy: RetrievalStrategy,
    /// Number of in-context examples; defaults per task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Prompt budget in estimated tokens; defaults to the context window
    /// minus the output allowance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_prompt_tokens: Option<usize>,
    pub model: ModelConfig,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    /// Gazetteer for anonymized retrieval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gazetteer: Option<String>,
    #[serde(default = "default_output_root")]
    pub output_root: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_dir: Option<String>,
    /// Retrieve stage-two examples again among those containing a stage-one
    /// type instead of reusing the stage-one selection.
    #[serde(default)]
    pub reselect_stage2: bool,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

pub fn default_k(task: TaskKind) -> usize {
    match task {
        TaskKind::Ner => 10,
        TaskKind::Re => 12,
        TaskKind::Ed | TaskKind::Eae | TaskKind::Ee => 10,
    }
}

impl RunConfig {
    /// Reads a config and returns it with the directory its paths are
    /// relative to.
    pub fn load(path: &Path) -> Result<(RunConfig, PathBuf), RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            RunError::Config(format!("{}: {} at {}", path.display(), e.inner(), e.path()))
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or_else(|| default_k(self.task))
    }

    pub fn prompt_budget(&self) -> usize {
        self.max_prompt_tokens
            .unwrap_or_else(|| self.model.prompt_budget())
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<(), RunError> {
        self.model
            .validate()
            .map_err(|e| RunError::Config(e.to_string()))?;
        if self.mode == RunMode::TwoStage && matches!(self.task, TaskKind::Ed | TaskKind::Eae) {
            return Err(RunError::Config(format!(
                "task {} has no two-stage prompt",
                self.task
            )));
        }
        if self.prompt_style == PromptStyle::TextBaseline {
            if self.mode == RunMode::TwoStage {
                return Err(RunError::Config("text prompts are one-stage only".into()));
            }
            if !crate::text_baseline::supports(self.task) {
                return Err(RunError::Config(format!(
                    "text prompts do not support {}",
                    self.task
                )));
            }
        }
        if self.strategy.anonymized() && self.gazetteer.is_none() {
            return Err(RunError::Config(
                "anony_sent_embed needs a gazetteer".into(),
            ));
        }
        if let RetrievalStrategy::Fixed { fixed_ids } = &self.strategy {
            if fixed_ids.len() < self.k() {
                return Err(RunError::Config(format!(
                    "fixed strategy lists {} ids but k = {}",
                    fixed_ids.len(),
                    self.k()
                )));
            }
        }
        if self.prompt_budget() == 0 {
            return Err(RunError::Config("prompt budget must be positive".into()));
        }
        if self.prompt_budget() + self.model.max_output_tokens > self.model.context_window {
            return Err(RunError::Config(format!(
                "max_prompt_tokens {} plus max_output_tokens {} exceeds the context window {}",
                self.prompt_budget(),
                self.model.max_output_tokens,
                self.model.context_window
            )));
        }
        if self.workers == 0 {
            return Err(RunError::Config("workers must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve(base: &Path, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "task": "ner",
        "schema": "schema.json",
        "train": "train.jsonl",
        "test": "test.jsonl",
        "strategy": {"kind": "sent_embed"},
        "model": {"provider_id": "mock-echo", "model_name": "echo", "context_window": 4096}
    }"#;

    fn minimal() -> RunConfig {
        serde_json::from_str(MINIMAL).unwrap()
    }

    #[test]
    fn defaults() {
        let c = minimal();
        assert_eq!(c.mode, RunMode::OneStage);
        assert_eq!(c.prompt_style, PromptStyle::Code);
        assert_eq!(c.k(), 10);
        assert_eq!(c.prompt_budget(), 4096 - 512);
        assert_eq!(c.embedder, EmbedderConfig::Hash);
        assert_eq!(c.workers, 4);
        c.validate().unwrap();
    }

    #[test]
    fn two_stage_event_detection_is_rejected() {
        let mut c = minimal();
        c.task = TaskKind::Ed;
        c.mode = RunMode::TwoStage;
        assert!(matches!(c.validate(), Err(RunError::Config(_))));
    }

    #[test]
    fn anonymized_strategy_needs_gazetteer() {
        let mut c = minimal();
        c.strategy = RetrievalStrategy::AnonySentEmbed {};
        assert!(c.validate().is_err());
        c.gazetteer = Some("g.json".into());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"task\"", "\"tsk\": 1, \"task\"");
        assert!(serde_json::from_str::<RunConfig>(&text).is_err());
    }

    #[test]
    fn text_baseline_limits() {
        let mut c = minimal();
        c.prompt_style = PromptStyle::TextBaseline;
        c.validate().unwrap();
        c.task = TaskKind::Re;
        assert!(c.validate().is_err());
    }
}
