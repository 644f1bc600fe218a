//! End-to-end experiments: retrieve, render, complete, parse, bind, score.

mod config;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{default_k, EmbedderConfig, PromptStyle, RunConfig, RunMode};

use crate::dataset::{
    content_hash, load_split, save_run, DatasetError, Example, ExampleRecord, PromptRecord,
    RunManifest,
};
use crate::extraction::ExtractionSet;
use crate::llm::{
    CompletionProvider, Gateway, LlmError, MockProvider, OpenAiProvider, ProviderError,
    ResponseCache,
};
use crate::metrics::{score, MetricsError};
use crate::parser::{
    bind, extract_code_region, parse_import_completion, parse_program, quote_string,
    truncate_at_next_instruction, ParseDiagnostics,
};
use crate::render::{
    project_gold, render_instances, render_prompt, restrict_to_schema, target_types, PromptMode,
    PromptSpec, RenderError, RenderedPrompt,
};
use crate::retrieval::{
    index_cache_path, load_or_build_index, Annotator, EmbeddingProvider, ExampleIndex,
    GazetteerAnnotator, HashEmbedder, HttpEmbedder, RetrievalError, RetrievalStrategy, Retriever,
};
use crate::schema::{load_schema, Schema, SchemaError, TaskKind};
use crate::text_baseline;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("schema {path}: {source}")]
    Schema {
        path: String,
        #[source]
        source: SchemaError,
    },
    #[error("dataset {path}: {source}")]
    Dataset {
        path: String,
        #[source]
        source: DatasetError,
    },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("unknown example {0}")]
    UnknownExample(String),
}

impl RunError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) | RunError::UnknownExample(_) => "config",
            RunError::Schema { .. } => "schema",
            RunError::Dataset { .. } => "dataset",
            RunError::Retrieval(_) => "retrieval",
            RunError::Llm(_) => "llm",
            RunError::Render(_) => "render",
            RunError::Metrics(_) => "metrics",
        }
    }
}

/// Counters reported beside the manifest. Kept out of it because they vary
/// between a cold and a warm run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub examples: usize,
    pub prompts: usize,
    pub cache_hits: usize,
    pub provider_calls: usize,
    pub failed_examples: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub run_dir: PathBuf,
    pub stats: RunStats,
}

/// A loaded experiment: config, schema, splits and retriever.
pub struct Pipeline {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub schema: Schema,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
    retriever: Retriever,
    data_hash: String,
}

fn read_text(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

/// Label for a prompt within an example record.
fn stage_label(mode: PromptMode, given: Option<&str>) -> String {
    match given {
        Some(t) => format!("{}:{t}", mode.as_str()),
        None => mode.as_str().to_string(),
    }
}

fn merge_diagnostics(into: &mut ParseDiagnostics, from: ParseDiagnostics) {
    into.skipped_lines.extend(from.skipped_lines);
    into.bind_errors.extend(from.bind_errors);
}

fn extend_unique(into: &mut ExtractionSet, from: ExtractionSet) {
    for e in from.entities {
        if !into.entities.contains(&e) {
            into.entities.push(e);
        }
    }
    for r in from.relations {
        if !into.relations.contains(&r) {
            into.relations.push(r);
        }
    }
    for e in from.events {
        if !into.events.contains(&e) {
            into.events.push(e);
        }
    }
}

/// Per-example accumulator.
struct Trace {
    record: ExampleRecord,
    responses: Vec<(String, String)>,
    cache_hits: usize,
    prompts: usize,
}

impl Pipeline {
    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        let (config, base) = RunConfig::load(path)?;
        Self::load(config, &base)
    }

    /// Validates the config and loads everything a run needs. No provider
    /// is contacted here.
    pub fn load(config: RunConfig, base_dir: &Path) -> Result<Self, RunError> {
        config.validate()?;
        let schema_path = RunConfig::resolve(base_dir, &config.schema);
        let schema_text = read_text(&schema_path)?;
        let schema = load_schema(&schema_text).map_err(|source| RunError::Schema {
            path: schema_path.display().to_string(),
            source,
        })?;
        schema
            .subset_for_task(config.task)
            .map_err(|source| RunError::Schema {
                path: schema_path.display().to_string(),
                source,
            })?;
        let load = |p: &str| -> Result<(Vec<Example>, String), RunError> {
            let path = RunConfig::resolve(base_dir, p);
            let examples = load_split(&path, &schema).map_err(|source| RunError::Dataset {
                path: path.display().to_string(),
                source,
            })?;
            Ok((examples, content_hash(&read_text(&path)?)))
        };
        let (train, train_hash) = load(&config.train)?;
        let (test, test_hash) = load(&config.test)?;
        if train.is_empty() && config.k() > 0 {
            return Err(RunError::Config("the training split is empty".into()));
        }

        let target_types = schema.family_type_names(config.task.target_family());
        let mut retriever = Retriever::new(&train, &target_types);
        if config.strategy.needs_index() {
            let (index, embedder, annotator) =
                Self::index_parts(&config, base_dir, &schema, &train)?;
            retriever = retriever.with_index(index, embedder, annotator)?;
        }
        retriever.check(&config.strategy, config.k())?;

        let data_hash = content_hash(&format!(
            "{}\n{train_hash}\n{test_hash}",
            content_hash(&schema_text)
        ));
        Ok(Pipeline {
            config,
            base_dir: base_dir.to_path_buf(),
            schema,
            train,
            test,
            retriever,
            data_hash,
        })
    }

    fn dataset_name(config: &RunConfig, schema: &Schema) -> String {
        config
            .dataset
            .clone()
            .unwrap_or_else(|| schema.dataset_name.clone())
    }

    fn embedder(config: &RunConfig) -> Result<Arc<dyn EmbeddingProvider>, RunError> {
        Ok(match &config.embedder {
            EmbedderConfig::Hash => Arc::new(HashEmbedder),
            EmbedderConfig::Http {
                base_url,
                model,
                dimension,
                api_key_env,
            } => Arc::new(
                HttpEmbedder::new(base_url, model, *dimension, api_key_env.as_deref())
                    .map_err(|e| RunError::Config(e.to_string()))?,
            ),
        })
    }

    fn annotator(
        config: &RunConfig,
        base_dir: &Path,
    ) -> Result<Option<Arc<dyn Annotator>>, RunError> {
        if !config.strategy.anonymized() {
            return Ok(None);
        }
        let path = RunConfig::resolve(base_dir, config.gazetteer.as_deref().expect("validated"));
        let g =
            GazetteerAnnotator::from_path(&path).map_err(|e| RunError::Config(e.to_string()))?;
        Ok(Some(Arc::new(g)))
    }

    fn index_dir(config: &RunConfig, base_dir: &Path) -> PathBuf {
        match &config.index_dir {
            Some(d) => RunConfig::resolve(base_dir, d),
            None => RunConfig::resolve(base_dir, &config.output_root).join("index"),
        }
    }

    #[allow(clippy::type_complexity)]
    fn index_parts(
        config: &RunConfig,
        base_dir: &Path,
        schema: &Schema,
        train: &[Example],
    ) -> Result<
        (
            ExampleIndex,
            Arc<dyn EmbeddingProvider>,
            Option<Arc<dyn Annotator>>,
        ),
        RunError,
    > {
        let embedder = Self::embedder(config)?;
        let annotator = Self::annotator(config, base_dir)?;
        let index = load_or_build_index(
            &Self::index_dir(config, base_dir),
            &Self::dataset_name(config, schema),
            train,
            embedder.as_ref(),
            annotator.as_deref(),
        )?;
        Ok((index, embedder, annotator))
    }

    /// Builds (or refreshes) the persisted index and returns its path.
    pub fn build_index(&self) -> Result<(ExampleIndex, PathBuf), RunError> {
        let (index, embedder, annotator) =
            Self::index_parts(&self.config, &self.base_dir, &self.schema, &self.train)?;
        let path = index_cache_path(
            &Self::index_dir(&self.config, &self.base_dir),
            &Self::dataset_name(&self.config, &self.schema),
            &embedder.id(),
            annotator.is_some(),
        );
        Ok((index, path))
    }

    /// Content-derived id: the same config over the same data always maps
    /// to the same run directory.
    /// The config as recorded in the manifest: output locations and worker
    /// count are dropped because they do not change results.
    pub fn config_snapshot(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(&self.config).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            for key in ["output_root", "cache_dir", "index_dir", "workers"] {
                obj.remove(key);
            }
        }
        value
    }

    pub fn run_id(&self) -> String {
        let snapshot = self.config_snapshot().to_string();
        let digest = hex::encode(Sha256::digest(
            format!("{snapshot}\n{}", self.data_hash).as_bytes(),
        ));
        let mode = match self.config.mode {
            RunMode::OneStage => "one_stage",
            RunMode::TwoStage => "two_stage",
        };
        format!("{}-{mode}-{}", self.config.task, &digest[..12])
    }

    fn spec(&self, mode: PromptMode, k: usize, given: Option<&str>) -> PromptSpec {
        PromptSpec {
            task: self.config.task,
            mode,
            k,
            max_tokens: self.config.prompt_budget(),
            given_event_type: given.map(str::to_string),
        }
    }

    fn train_example(&self, id: &str) -> Option<&Example> {
        self.train.iter().find(|e| e.id == id)
    }

    /// Ranked candidates for one target. When the renderer will filter
    /// candidates (event arguments, reselected stage two) the whole ranked
    /// pool is returned so `k` survivors can still be found.
    fn candidates(&self, target: &Example, whole_pool: bool) -> Result<Vec<&Example>, RunError> {
        let n = if whole_pool {
            match &self.config.strategy {
                RetrievalStrategy::Fixed { fixed_ids } => fixed_ids.len(),
                _ => self.train.len(),
            }
        } else {
            self.config.k()
        };
        let ids =
            self.retriever
                .retrieve(&target.text, n, &self.config.strategy, Some(&target.id))?;
        Ok(ids.iter().filter_map(|id| self.train_example(id)).collect())
    }

    /// Event types the argument task queries for one example.
    fn eae_types(&self, example: &Example) -> Vec<String> {
        target_types(&example.gold, TaskKind::Eae)
    }

    /// Renders every prompt a run would send for one test example. For two-
    /// stage prompts, stage two uses `stage1_types` or the gold types.
    pub fn render_example(
        &self,
        example_id: &str,
        stage: Option<u8>,
        stage1_types: Option<Vec<String>>,
    ) -> Result<Vec<(String, RenderedPrompt)>, RunError> {
        let ex = self
            .test
            .iter()
            .chain(&self.train)
            .find(|e| e.id == example_id)
            .ok_or_else(|| RunError::UnknownExample(example_id.to_string()))?;
        let task = self.config.task;
        let k = self.config.k();
        let mut out = Vec::new();
        if self.config.prompt_style == PromptStyle::TextBaseline {
            let pool = self.candidates(ex, task == TaskKind::Eae)?;
            for given in self.givens(ex) {
                let spec = self.spec(PromptMode::OneStage, k, given.as_deref());
                let p = text_baseline::render_text_prompt(&spec, &self.schema, &pool, &ex.text)?;
                out.push((stage_label(PromptMode::OneStage, given.as_deref()), p));
            }
            return Ok(out);
        }
        match self.config.mode {
            RunMode::OneStage => {
                let pool = self.candidates(ex, task == TaskKind::Eae)?;
                for given in self.givens(ex) {
                    let spec = self.spec(PromptMode::OneStage, k, given.as_deref());
                    let p = render_prompt(&spec, &self.schema, &pool, &ex.text, None)?;
                    out.push((stage_label(PromptMode::OneStage, given.as_deref()), p));
                }
            }
            RunMode::TwoStage => {
                let pool = self.candidates(ex, false)?;
                if stage != Some(2) {
                    let spec = self.spec(PromptMode::TwoStageS1, k, None);
                    let p = render_prompt(&spec, &self.schema, &pool, &ex.text, None)?;
                    out.push((PromptMode::TwoStageS1.as_str().to_string(), p));
                }
                if stage != Some(1) {
                    let types = stage1_types.unwrap_or_else(|| target_types(&ex.gold, task));
                    if types.is_empty() {
                        return Err(RunError::Config(
                            "stage two needs at least one stage-one type".into(),
                        ));
                    }
                    let pool2 = if self.config.reselect_stage2 {
                        self.candidates(ex, true)?
                    } else {
                        pool
                    };
                    let spec = self.spec(PromptMode::TwoStageS2, k, None);
                    let p = render_prompt(&spec, &self.schema, &pool2, &ex.text, Some(&types))?;
                    out.push((PromptMode::TwoStageS2.as_str().to_string(), p));
                }
            }
        }
        Ok(out)
    }

    /// One `None` for most tasks; one entry per gold event type for EAE.
    fn givens(&self, ex: &Example) -> Vec<Option<String>> {
        if self.config.task == TaskKind::Eae {
            self.eae_types(ex).into_iter().map(Some).collect()
        } else {
            vec![None]
        }
    }

    /// Provider named by `model.provider_id`.
    pub fn provider(&self) -> Result<Arc<dyn CompletionProvider>, RunError> {
        match self.config.model.provider_id.as_str() {
            "openai" => Ok(Arc::new(OpenAiProvider::new(&self.config.model)?)),
            "mock-echo" => Ok(Arc::new(echo_provider(
                &self.schema,
                &self.test,
                self.config.task,
                self.config.prompt_style,
            ))),
            "mock-empty" => Ok(Arc::new(MockProvider::new(|_| Ok(String::new())))),
            other => Err(RunError::Config(format!("unknown provider {other}"))),
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        match &self.config.cache_dir {
            Some(d) => RunConfig::resolve(&self.base_dir, d),
            None => RunConfig::resolve(&self.base_dir, &self.config.output_root).join("cache"),
        }
    }

    pub fn output_root(&self) -> PathBuf {
        RunConfig::resolve(&self.base_dir, &self.config.output_root)
    }

    pub fn run(&self) -> Result<RunOutcome, RunError> {
        self.run_with(self.provider()?)
    }

    /// Runs every test example through `provider`, writes the run directory
    /// and returns the manifest. Per-example failures become diagnostics.
    pub fn run_with(&self, provider: Arc<dyn CompletionProvider>) -> Result<RunOutcome, RunError> {
        let cache = ResponseCache::open(&self.cache_dir())?;
        let gateway = Gateway::new(self.config.model.clone(), provider, Some(cache))?;

        let slots: Mutex<Vec<Option<Trace>>> =
            Mutex::new((0..self.test.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.config.workers.min(self.test.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(ex) = self.test.get(i) else { break };
                    let trace = self.process(ex, &gateway);
                    slots.lock().expect("result slots")[i] = Some(trace);
                });
            }
        });

        let mut stats = RunStats {
            examples: self.test.len(),
            ..Default::default()
        };
        let mut records = Vec::with_capacity(self.test.len());
        let mut responses = BTreeMap::new();
        for trace in slots.into_inner().expect("result slots") {
            let trace = trace.expect("every example processed");
            stats.prompts += trace.prompts;
            stats.cache_hits += trace.cache_hits;
            if trace
                .record
                .diagnostics
                .iter()
                .any(|d| d.starts_with("failed:"))
            {
                stats.failed_examples += 1;
            }
            responses.extend(trace.responses);
            records.push(trace.record);
        }
        stats.provider_calls = gateway.provider_calls();

        let predictions: Vec<(String, ExtractionSet)> = records
            .iter()
            .map(|r| (r.example_id.clone(), r.predictions.clone()))
            .collect();
        let golds: Vec<(String, ExtractionSet)> = self
            .test
            .iter()
            .map(|e| (e.id.clone(), e.gold.clone()))
            .collect();
        let metrics = score(
            &predictions,
            &golds,
            self.config.task,
            self.config.task == TaskKind::Eae,
        )?;

        let manifest = RunManifest {
            run_id: self.run_id(),
            config: self.config_snapshot(),
            records,
            metrics,
            responses,
        };
        let root = self.output_root();
        let run_dir = save_run(&manifest, &root).map_err(|source| RunError::Dataset {
            path: root.display().to_string(),
            source,
        })?;
        Ok(RunOutcome {
            manifest,
            run_dir,
            stats,
        })
    }

    fn process(&self, ex: &Example, gateway: &Gateway) -> Trace {
        let mut trace = Trace {
            record: ExampleRecord {
                example_id: ex.id.clone(),
                prompts: Vec::new(),
                predictions: ExtractionSet::default(),
                parse: ParseDiagnostics::default(),
                diagnostics: Vec::new(),
            },
            responses: Vec::new(),
            cache_hits: 0,
            prompts: 0,
        };
        if let Err(e) = self.process_inner(ex, gateway, &mut trace) {
            trace.record.predictions = ExtractionSet::default();
            trace.record.diagnostics.push(format!("failed: {e}"));
        }
        if trace.record.predictions.is_empty() {
            trace.record.diagnostics.push("no extractions".into());
        }
        trace
    }

    /// Sends one prompt and records it. Returns the response text.
    fn complete(
        &self,
        gateway: &Gateway,
        label: String,
        prompt: &RenderedPrompt,
        stage1_types: Vec<String>,
        trace: &mut Trace,
    ) -> Result<String, RunError> {
        trace.prompts += 1;
        let mut record = PromptRecord {
            stage: label,
            prompt_hash: content_hash(&prompt.text),
            token_estimate: prompt.token_estimate,
            example_ids: prompt.example_ids.clone(),
            response: None,
            stage1_types,
        };
        let outcome = gateway.complete(prompt);
        if let Ok(c) = &outcome {
            let hash = content_hash(&c.response_text);
            record.response = Some(hash.clone());
            trace.responses.push((hash, c.response_text.clone()));
            if c.cached {
                trace.cache_hits += 1;
            }
        }
        trace.record.prompts.push(record);
        Ok(outcome?.response_text)
    }

    /// Parses a code response into extractions of the task.
    fn read_code(&self, response: &str, trace: &mut Trace) -> ExtractionSet {
        let region = extract_code_region(response);
        let code = truncate_at_next_instruction(&region);
        let (ast, mut diagnostics) = parse_program(code);
        let (set, bind_diag) = bind(&ast, &self.schema, self.config.task);
        merge_diagnostics(&mut diagnostics, bind_diag);
        merge_diagnostics(&mut trace.record.parse, diagnostics);
        set
    }

    fn process_inner(
        &self,
        ex: &Example,
        gateway: &Gateway,
        trace: &mut Trace,
    ) -> Result<(), RunError> {
        let task = self.config.task;
        let k = self.config.k();
        let mut predictions = ExtractionSet::default();

        if self.config.prompt_style == PromptStyle::TextBaseline
            || self.config.mode == RunMode::OneStage
        {
            let pool = self.candidates(ex, task == TaskKind::Eae)?;
            for given in self.givens(ex) {
                let spec = self.spec(PromptMode::OneStage, k, given.as_deref());
                let label = stage_label(PromptMode::OneStage, given.as_deref());
                let mut set = if self.config.prompt_style == PromptStyle::TextBaseline {
                    let prompt =
                        text_baseline::render_text_prompt(&spec, &self.schema, &pool, &ex.text)?;
                    let response = self.complete(gateway, label, &prompt, Vec::new(), trace)?;
                    let (set, diag) =
                        text_baseline::read_answer(&response, &self.schema, task, given.as_deref());
                    merge_diagnostics(&mut trace.record.parse, diag);
                    set
                } else {
                    let prompt = render_prompt(&spec, &self.schema, &pool, &ex.text, None)?;
                    let response = self.complete(gateway, label, &prompt, Vec::new(), trace)?;
                    self.read_code(&response, trace)
                };
                if let Some(g) = &given {
                    set.events.retain(|e| &e.event_type == g);
                }
                extend_unique(&mut predictions, set);
            }
            trace.record.predictions = predictions;
            return Ok(());
        }

        // Two-stage: identify types, then extract instances of those types.
        let pool = self.candidates(ex, false)?;
        let s1 = render_prompt(
            &self.spec(PromptMode::TwoStageS1, k, None),
            &self.schema,
            &pool,
            &ex.text,
            None,
        )?;
        let response = self.complete(
            gateway,
            PromptMode::TwoStageS1.as_str().into(),
            &s1,
            Vec::new(),
            trace,
        )?;
        let completion = parse_import_completion(&response, &self.schema);
        trace.record.diagnostics.extend(completion.diagnostics);
        let family = task.target_family();
        let types: Vec<String> = completion
            .types
            .into_iter()
            .filter(|t| {
                let keep = self
                    .schema
                    .resolve_alias(t)
                    .is_ok_and(|r| r.family() == family);
                if !keep {
                    trace
                        .record
                        .diagnostics
                        .push(format!("{t} is not a {} type", family.base_class()));
                }
                keep
            })
            .collect();
        if types.is_empty() {
            trace.record.diagnostics.push("stage two skipped".into());
            return Ok(());
        }
        let pool2 = if self.config.reselect_stage2 {
            self.candidates(ex, true)?
        } else {
            pool
        };
        let s2 = render_prompt(
            &self.spec(PromptMode::TwoStageS2, k, None),
            &self.schema,
            &pool2,
            &ex.text,
            Some(&types),
        )?;
        let response = self.complete(
            gateway,
            PromptMode::TwoStageS2.as_str().into(),
            &s2,
            types.clone(),
            trace,
        )?;
        let set = self.read_code(&response, trace);
        let scope = self
            .schema
            .subset_for_types(&types)
            .map_err(|source| RunError::Schema {
                path: self.config.schema.clone(),
                source,
            })?;
        trace.record.predictions = restrict_to_schema(&set, &scope);
        Ok(())
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Mock provider that answers every prompt with the gold output for its
/// target sentence, looked up in `test`. Useful as an upper-bound check of
/// the render, parse and bind round trip.
pub fn echo_provider(
    schema: &Schema,
    test: &[Example],
    task: TaskKind,
    style: PromptStyle,
) -> MockProvider {
    let mut by_key: HashMap<String, ExtractionSet> = HashMap::new();
    for ex in test {
        let key = match style {
            PromptStyle::Code => format!("sentence: {}", quote_string(&ex.text)),
            PromptStyle::TextBaseline => format!("Text: {}", one_line(&ex.text)),
        };
        by_key.insert(key, ex.gold.clone());
    }
    let schema = schema.clone();
    MockProvider::new(move |req| {
        let prefix = match style {
            PromptStyle::Code => "sentence: ",
            PromptStyle::TextBaseline => "Text: ",
        };
        let target = req
            .prompt
            .lines()
            .rev()
            .find(|l| l.starts_with(prefix))
            .ok_or_else(|| ProviderError::terminal("prompt has no target sentence"))?;
        let gold = by_key
            .get(target)
            .ok_or_else(|| ProviderError::terminal("target sentence is not in the test split"))?;
        let given = match style {
            PromptStyle::Code => req
                .prompt
                .lines()
                .rev()
                .find_map(|l| l.strip_prefix("event type: "))
                .map(str::to_string),
            PromptStyle::TextBaseline => req
                .prompt
                .lines()
                .find_map(|l| l.strip_prefix("Given the "))
                .and_then(|rest| rest.split(" event").next())
                .map(str::to_string),
        };
        let given = if task == TaskKind::Eae { given } else { None };
        let projected = project_gold(gold, task, given.as_deref());
        if style == PromptStyle::TextBaseline {
            return Ok(text_baseline::render_answer(&projected, task));
        }
        if req.prompt.ends_with(" import ") {
            return Ok(target_types(&projected, task).join(", "));
        }
        render_instances(&projected, &schema, task)
            .map_err(|e| ProviderError::terminal(e.to_string()))
    })
}
