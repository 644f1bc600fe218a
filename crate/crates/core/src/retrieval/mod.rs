//! In-context example selection.
//!
//! Training sentences are embedded into an [`ExampleIndex`]; a query picks
//! its `k` nearest neighbours by Euclidean distance, or one of the
//! baseline strategies picks examples without looking at embeddings.

mod anonymize;
mod embed;

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use anonymize::{
    anonymize, resolve_overlaps, Annotator, AnnotatorError, GazetteerAnnotator, Span,
};
pub use embed::{
    fnv1a64, hash_tokens, EmbedError, EmbeddingProvider, EmbeddingVector, HashEmbedder,
    HttpEmbedder, HASH_DIMENSION,
};

use crate::dataset::Example;

const BATCH: usize = 32;
const BUILD_WORKERS: usize = 4;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("retrieval configuration: {0}")]
    Config(String),
    #[error("cannot build an index from zero examples")]
    EmptyPool,
    #[error("embedding {}: {source}", example_id.as_deref().unwrap_or("query"))]
    Embed {
        example_id: Option<String>,
        #[source]
        source: EmbedError,
    },
    #[error("annotating {}: {source}", example_id.as_deref().unwrap_or("query"))]
    Annotate {
        example_id: Option<String>,
        #[source]
        source: AnnotatorError,
    },
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("index file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub example_id: String,
    pub vector: EmbeddingVector,
}

/// Embedded training sentences. The header fields identify what the vectors
/// were computed from; `content_hash` covers ids, texts and annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleIndex {
    pub dataset: String,
    pub embedder_id: String,
    pub anonymized: bool,
    pub dimension: usize,
    pub content_hash: String,
    pub entries: Vec<IndexEntry>,
}

impl ExampleIndex {
    /// Checks unique ids and a shared dimension.
    pub fn new(
        dataset: &str,
        embedder_id: &str,
        anonymized: bool,
        content_hash: &str,
        entries: Vec<IndexEntry>,
    ) -> Result<Self, RetrievalError> {
        let dimension = entries.first().map_or(0, |e| e.vector.dimension());
        let index = ExampleIndex {
            dataset: dataset.into(),
            embedder_id: embedder_id.into(),
            anonymized,
            dimension,
            content_hash: content_hash.into(),
            entries,
        };
        index.validate()?;
        Ok(index)
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.example_id.as_str()) {
                return Err(RetrievalError::InvalidIndex(format!(
                    "duplicate id {}",
                    e.example_id
                )));
            }
            if e.vector.dimension() != self.dimension {
                return Err(RetrievalError::InvalidIndex(format!(
                    "{} has dimension {}, index has {}",
                    e.example_id,
                    e.vector.dimension(),
                    self.dimension
                )));
            }
            if e.vector.values().iter().any(|v| !v.is_finite()) {
                return Err(RetrievalError::InvalidIndex(format!(
                    "{} has a non-finite value",
                    e.example_id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("index serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<(), RetrievalError> {
        let io = |e: std::io::Error| RetrievalError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        let text = std::fs::read_to_string(path).map_err(|e| RetrievalError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let index: ExampleIndex = serde_json::from_str(&text).map_err(|e| RetrievalError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        index.validate()?;
        Ok(index)
    }
}

/// Cache file for an index keyed by (dataset, embedder, anonymized).
pub fn index_cache_path(dir: &Path, dataset: &str, embedder_id: &str, anonymized: bool) -> PathBuf {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    };
    let key = format!("{dataset}\u{0}{embedder_id}");
    let tag = if anonymized { "anon" } else { "plain" };
    dir.join(format!(
        "{}-{}-{:08x}.index.json",
        clean(dataset),
        tag,
        fnv1a64(key.as_bytes()) as u32
    ))
}

fn pool_hash(examples: &[Example], annotator: Option<&dyn Annotator>) -> String {
    let mut h = Sha256::new();
    for ex in examples {
        h.update(ex.id.as_bytes());
        h.update([0]);
        h.update(ex.text.as_bytes());
        h.update([0]);
    }
    if let Some(a) = annotator {
        h.update(a.id().as_bytes());
    }
    hex::encode(h.finalize())
}

/// Embeds every example, anonymizing first when an annotator is given.
/// Batches run on a small worker pool; entry order follows `examples`.
pub fn build_index(
    dataset: &str,
    examples: &[Example],
    provider: &dyn EmbeddingProvider,
    annotator: Option<&dyn Annotator>,
) -> Result<ExampleIndex, RetrievalError> {
    if examples.is_empty() {
        return Err(RetrievalError::EmptyPool);
    }
    let texts: Vec<String> = examples
        .iter()
        .map(|ex| match annotator {
            Some(a) => anonymize(&ex.text, a).map_err(|source| RetrievalError::Annotate {
                example_id: Some(ex.id.clone()),
                source,
            }),
            None => Ok(ex.text.clone()),
        })
        .collect::<Result<_, _>>()?;

    let chunks: Vec<(usize, &[String])> = texts.chunks(BATCH).enumerate().collect();
    type BatchSlot = Option<Result<Vec<EmbeddingVector>, RetrievalError>>;
    let results: Mutex<Vec<BatchSlot>> = Mutex::new((0..chunks.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..BUILD_WORKERS.min(chunks.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((chunk_no, batch)) = chunks.get(i) else {
                    break;
                };
                let outcome = embed_chunk(provider, batch, &examples[chunk_no * BATCH..]);
                results.lock().expect("result slots")[*chunk_no] = Some(outcome);
            });
        }
    });

    let mut entries = Vec::with_capacity(examples.len());
    let mut ids = examples.iter().map(|e| e.id.clone());
    for slot in results.into_inner().expect("result slots") {
        for vector in slot.expect("every chunk ran")? {
            entries.push(IndexEntry {
                example_id: ids.next().expect("one id per vector"),
                vector,
            });
        }
    }
    for e in &entries {
        if e.vector.dimension() != provider.dimension() {
            return Err(RetrievalError::Embed {
                example_id: Some(e.example_id.clone()),
                source: EmbedError::Dimension {
                    expected: provider.dimension(),
                    got: e.vector.dimension(),
                },
            });
        }
    }
    ExampleIndex::new(
        dataset,
        &provider.id(),
        annotator.is_some(),
        &pool_hash(examples, annotator),
        entries,
    )
}

/// Embeds one batch; on failure re-embeds item by item to name the culprit.
fn embed_chunk(
    provider: &dyn EmbeddingProvider,
    batch: &[String],
    examples: &[Example],
) -> Result<Vec<EmbeddingVector>, RetrievalError> {
    match provider.embed_batch(batch) {
        Ok(v) if v.len() == batch.len() => Ok(v),
        Ok(v) => Err(RetrievalError::Embed {
            example_id: None,
            source: EmbedError::Provider {
                message: format!("expected {} vectors, got {}", batch.len(), v.len()),
                retryable: false,
            },
        }),
        Err(batch_err) => {
            for (text, ex) in batch.iter().zip(examples) {
                provider
                    .embed(text)
                    .map_err(|source| RetrievalError::Embed {
                        example_id: Some(ex.id.clone()),
                        source,
                    })?;
            }
            Err(RetrievalError::Embed {
                example_id: None,
                source: batch_err,
            })
        }
    }
}

/// Reuses a cached index when its header and content hash match, otherwise
/// builds and stores a fresh one.
pub fn load_or_build_index(
    cache_dir: &Path,
    dataset: &str,
    examples: &[Example],
    provider: &dyn EmbeddingProvider,
    annotator: Option<&dyn Annotator>,
) -> Result<ExampleIndex, RetrievalError> {
    let path = index_cache_path(cache_dir, dataset, &provider.id(), annotator.is_some());
    if path.exists() {
        if let Ok(index) = ExampleIndex::load(&path) {
            if index.embedder_id == provider.id()
                && index.anonymized == annotator.is_some()
                && index.content_hash == pool_hash(examples, annotator)
            {
                return Ok(index);
            }
        }
    }
    let index = build_index(dataset, examples, provider, annotator)?;
    index.save(&path)?;
    Ok(index)
}

/// The `k` entries nearest to `query`, ascending by distance then id.
pub fn nearest(
    index: &ExampleIndex,
    query: &EmbeddingVector,
    k: usize,
    exclude_id: Option<&str>,
) -> Vec<String> {
    let mut scored: Vec<(f64, &str)> = index
        .entries
        .iter()
        .filter(|e| Some(e.example_id.as_str()) != exclude_id)
        .map(|e| (e.vector.distance(query), e.example_id.as_str()))
        .collect();
    let cmp = |a: &(f64, &str), b: &(f64, &str)| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1));
    let k = k.min(scored.len());
    if k == 0 {
        return Vec::new();
    }
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, cmp);
        scored.truncate(k);
    }
    scored.sort_unstable_by(cmp);
    scored.into_iter().map(|(_, id)| id.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RetrievalStrategy {
    SentEmbed {},
    AnonySentEmbed {},
    Random { seed: u64 },
    Fixed { fixed_ids: Vec<String> },
    SemiRandom { seed: u64 },
}

impl RetrievalStrategy {
    pub fn needs_index(&self) -> bool {
        matches!(
            self,
            RetrievalStrategy::SentEmbed {} | RetrievalStrategy::AnonySentEmbed {}
        )
    }

    pub fn anonymized(&self) -> bool {
        matches!(self, RetrievalStrategy::AnonySentEmbed {})
    }
}

/// Per-query generator: the configured seed mixed with the query text, so
/// every query gets its own reproducible draw.
fn query_rng(seed: u64, query: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(query.as_bytes()))
}

/// Everything a strategy may need about the example pool.
pub struct Retriever {
    ids: Vec<String>,
    type_members: Vec<(String, Vec<String>)>,
    index: Option<ExampleIndex>,
    embedder: Option<Arc<dyn EmbeddingProvider>>,
    annotator: Option<Arc<dyn Annotator>>,
}

impl Retriever {
    /// `types` fixes the round-robin order of the semi-random strategy.
    pub fn new(pool: &[Example], types: &[String]) -> Self {
        let mut ids: Vec<String> = pool.iter().map(|e| e.id.clone()).collect();
        ids.sort();
        let type_members = types
            .iter()
            .map(|t| {
                let mut members: Vec<String> = pool
                    .iter()
                    .filter(|e| e.gold.type_names().iter().any(|n| n == t))
                    .map(|e| e.id.clone())
                    .collect();
                members.sort();
                (t.clone(), members)
            })
            .collect();
        Retriever {
            ids,
            type_members,
            index: None,
            embedder: None,
            annotator: None,
        }
    }

    pub fn with_index(
        mut self,
        index: ExampleIndex,
        embedder: Arc<dyn EmbeddingProvider>,
        annotator: Option<Arc<dyn Annotator>>,
    ) -> Result<Self, RetrievalError> {
        if index.embedder_id != embedder.id() {
            return Err(RetrievalError::Config(format!(
                "index was built with {}, query embedder is {}",
                index.embedder_id,
                embedder.id()
            )));
        }
        if index.anonymized != annotator.is_some() {
            return Err(RetrievalError::Config(
                "an anonymized index needs an annotator for queries, and only then".into(),
            ));
        }
        self.index = Some(index);
        self.embedder = Some(embedder);
        self.annotator = annotator;
        Ok(self)
    }

    pub fn index(&self) -> Option<&ExampleIndex> {
        self.index.as_ref()
    }

    /// Checks the strategy against the available pool and index.
    pub fn check(&self, strategy: &RetrievalStrategy, k: usize) -> Result<(), RetrievalError> {
        match strategy {
            RetrievalStrategy::SentEmbed {} | RetrievalStrategy::AnonySentEmbed {} => {
                let index = self.index.as_ref().ok_or_else(|| {
                    RetrievalError::Config("embedding strategy without an index".into())
                })?;
                if index.anonymized != strategy.anonymized() {
                    return Err(RetrievalError::Config(format!(
                        "strategy {} does not match {} index",
                        if strategy.anonymized() {
                            "anony_sent_embed"
                        } else {
                            "sent_embed"
                        },
                        if index.anonymized {
                            "an anonymized"
                        } else {
                            "a plain"
                        }
                    )));
                }
                Ok(())
            }
            RetrievalStrategy::Fixed { fixed_ids } => {
                if fixed_ids.len() < k {
                    return Err(RetrievalError::Config(format!(
                        "fixed strategy lists {} ids but k = {k}",
                        fixed_ids.len()
                    )));
                }
                if let Some(missing) = fixed_ids
                    .iter()
                    .find(|id| self.ids.binary_search(id).is_err())
                {
                    return Err(RetrievalError::Config(format!(
                        "fixed id {missing} is not in the pool"
                    )));
                }
                Ok(())
            }
            RetrievalStrategy::Random { .. } | RetrievalStrategy::SemiRandom { .. } => Ok(()),
        }
    }

    /// Ranked example ids for `query`, at most `k`, never `exclude_id`.
    pub fn retrieve(
        &self,
        query: &str,
        k: usize,
        strategy: &RetrievalStrategy,
        exclude_id: Option<&str>,
    ) -> Result<Vec<String>, RetrievalError> {
        self.check(strategy, k)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        match strategy {
            RetrievalStrategy::SentEmbed {} | RetrievalStrategy::AnonySentEmbed {} => {
                let index = self.index.as_ref().expect("checked");
                let embedder = self.embedder.as_ref().expect("set with index");
                let text = match &self.annotator {
                    Some(a) if strategy.anonymized() => {
                        anonymize(query, a.as_ref()).map_err(|source| RetrievalError::Annotate {
                            example_id: None,
                            source,
                        })?
                    }
                    _ => query.to_string(),
                };
                let vector = embedder
                    .embed(&text)
                    .map_err(|source| RetrievalError::Embed {
                        example_id: None,
                        source,
                    })?;
                if vector.dimension() != index.dimension {
                    return Err(RetrievalError::Config(format!(
                        "query dimension {} differs from index dimension {}",
                        vector.dimension(),
                        index.dimension
                    )));
                }
                Ok(nearest(index, &vector, k, exclude_id))
            }
            RetrievalStrategy::Random { seed } => {
                let mut pool: Vec<&String> = self
                    .ids
                    .iter()
                    .filter(|id| Some(id.as_str()) != exclude_id)
                    .collect();
                let mut rng = query_rng(*seed, query);
                let k = k.min(pool.len());
                pool.partial_shuffle(&mut rng, k);
                Ok(pool[..k].iter().map(|s| s.to_string()).collect())
            }
            RetrievalStrategy::Fixed { fixed_ids } => Ok(fixed_ids
                .iter()
                .take(k)
                .filter(|id| Some(id.as_str()) != exclude_id)
                .cloned()
                .collect()),
            RetrievalStrategy::SemiRandom { seed } => {
                Ok(self.semi_random(query, k, *seed, exclude_id))
            }
        }
    }

    fn semi_random(
        &self,
        query: &str,
        k: usize,
        seed: u64,
        exclude_id: Option<&str>,
    ) -> Vec<String> {
        let mut rng = query_rng(seed, query);
        let mut chosen: Vec<String> = Vec::new();
        let mut taken: BTreeSet<&str> = BTreeSet::new();
        loop {
            let before = chosen.len();
            for (_, members) in &self.type_members {
                if chosen.len() == k {
                    return chosen;
                }
                let open: Vec<&String> = members
                    .iter()
                    .filter(|id| Some(id.as_str()) != exclude_id && !taken.contains(id.as_str()))
                    .collect();
                if open.is_empty() {
                    continue;
                }
                let pick = open[rng.gen_range(0..open.len())];
                taken.insert(pick);
                chosen.push(pick.clone());
            }
            if chosen.len() == before || chosen.len() == k {
                return chosen;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{EntityMention, ExtractionSet};

    fn vector(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    fn index_2d(points: &[(&str, f64, f64)]) -> ExampleIndex {
        let entries = points
            .iter()
            .map(|(id, x, y)| IndexEntry {
                example_id: id.to_string(),
                vector: vector(&[*x, *y]),
            })
            .collect();
        ExampleIndex::new("toy", "manual", false, "", entries).unwrap()
    }

    fn example(id: &str, text: &str, types: &[&str]) -> Example {
        Example::new(
            id,
            text,
            ExtractionSet {
                entities: types.iter().map(|t| EntityMention::new(*t, "x")).collect(),
                ..Default::default()
            },
        )
    }

    #[test]
    fn nearest_by_distance() {
        let idx = index_2d(&[("e1", 1.0, 0.0), ("e2", 0.0, 2.0), ("e3", 3.0, 0.0)]);
        assert_eq!(nearest(&idx, &vector(&[0.0, 0.0]), 2, None), ["e1", "e2"]);
        assert!(nearest(&idx, &vector(&[0.0, 0.0]), 0, None).is_empty());
        assert_eq!(
            nearest(&idx, &vector(&[0.0, 0.0]), 9, Some("e1")),
            ["e2", "e3"]
        );
    }

    #[test]
    fn ties_break_by_id() {
        let idx = index_2d(&[("e5", 1.0, 0.0), ("e2", 0.0, 1.0), ("e9", 5.0, 5.0)]);
        assert_eq!(nearest(&idx, &vector(&[0.0, 0.0]), 2, None), ["e2", "e5"]);
    }

    #[test]
    fn index_rejects_duplicates_and_mixed_dimensions() {
        let dup = vec![
            IndexEntry {
                example_id: "a".into(),
                vector: vector(&[1.0]),
            },
            IndexEntry {
                example_id: "a".into(),
                vector: vector(&[2.0]),
            },
        ];
        assert!(ExampleIndex::new("d", "m", false, "", dup).is_err());
        let mixed = vec![
            IndexEntry {
                example_id: "a".into(),
                vector: vector(&[1.0]),
            },
            IndexEntry {
                example_id: "b".into(),
                vector: vector(&[1.0, 2.0]),
            },
        ];
        assert!(ExampleIndex::new("d", "m", false, "", mixed).is_err());
        assert_eq!(
            EmbeddingVector::new(vec![f64::NAN]),
            Err(EmbedError::NonFinite)
        );
    }

    #[test]
    fn build_three_examples() {
        let pool = vec![
            example("a", "John went home", &[]),
            example("b", "Mary stayed", &[]),
            example("c", "Paris is big", &[]),
        ];
        let idx = build_index("toy", &pool, &HashEmbedder, None).unwrap();
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.dimension, 256);
        assert!(!idx.anonymized);
        let again = build_index("toy", &pool, &HashEmbedder, None).unwrap();
        assert_eq!(idx.to_json(), again.to_json());
        assert!(matches!(
            build_index("toy", &[], &HashEmbedder, None),
            Err(RetrievalError::EmptyPool)
        ));
    }

    #[test]
    fn embed_errors_name_the_example() {
        let pool = vec![example("a", "fine", &[]), example("bad", "  ", &[])];
        match build_index("toy", &pool, &HashEmbedder, None) {
            Err(RetrievalError::Embed { example_id, .. }) => {
                assert_eq!(example_id.as_deref(), Some("bad"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn persisted_index_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let pool: Vec<Example> = (0..40)
            .map(|i| {
                example(
                    &format!("x{i:02}"),
                    &format!("sentence number {i} here"),
                    &[],
                )
            })
            .collect();
        let built = load_or_build_index(dir.path(), "toy", &pool, &HashEmbedder, None).unwrap();
        let path = index_cache_path(dir.path(), "toy", &HashEmbedder.id(), false);
        let bytes = std::fs::read(&path).unwrap();
        let loaded = load_or_build_index(dir.path(), "toy", &pool, &HashEmbedder, None).unwrap();
        assert_eq!(built, loaded);
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
        assert_eq!(
            built
                .entries
                .iter()
                .map(|e| e.example_id.as_str())
                .collect::<Vec<_>>()[..3],
            ["x00", "x01", "x02"]
        );
    }

    #[test]
    fn anonymized_retrieval_matches_structure() {
        let g: Arc<dyn Annotator> = Arc::new(
            GazetteerAnnotator::new(
                [
                    ("John", "person"),
                    ("Mary", "person"),
                    ("Paris", "location"),
                    ("Rome", "location"),
                ]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
            )
            .unwrap(),
        );
        let pool = vec![
            example("a", "Mary flew to Rome", &[]),
            example("b", "John flew to John", &[]),
            example("c", "a cat sat", &[]),
        ];
        let idx = build_index("toy", &pool, &HashEmbedder, Some(g.as_ref())).unwrap();
        assert!(idx.anonymized);
        let r = Retriever::new(&pool, &[])
            .with_index(idx, Arc::new(HashEmbedder), Some(g))
            .unwrap();
        assert_eq!(
            r.retrieve(
                "John flew to Paris",
                1,
                &RetrievalStrategy::AnonySentEmbed {},
                None
            )
            .unwrap(),
            ["a"]
        );
        assert!(matches!(
            r.retrieve("x", 1, &RetrievalStrategy::SentEmbed {}, None),
            Err(RetrievalError::Config(_))
        ));
    }

    #[test]
    fn strategy_config_errors() {
        let pool = vec![example("a", "x", &[]), example("b", "y", &[])];
        let r = Retriever::new(&pool, &[]);
        assert!(matches!(
            r.retrieve("q", 1, &RetrievalStrategy::SentEmbed {}, None),
            Err(RetrievalError::Config(_))
        ));
        let fixed = RetrievalStrategy::Fixed {
            fixed_ids: vec!["b".into()],
        };
        assert_eq!(r.retrieve("q", 1, &fixed, None).unwrap(), ["b"]);
        assert!(r.retrieve("q", 2, &fixed, None).is_err());
        let unknown = RetrievalStrategy::Fixed {
            fixed_ids: vec!["zz".into()],
        };
        assert!(r.retrieve("q", 1, &unknown, None).is_err());
    }

    #[test]
    fn random_is_seeded() {
        let pool: Vec<Example> = (0..50)
            .map(|i| example(&format!("e{i}"), "t", &[]))
            .collect();
        let r = Retriever::new(&pool, &[]);
        let s = RetrievalStrategy::Random { seed: 7 };
        let a = r.retrieve("query", 5, &s, Some("e3")).unwrap();
        assert_eq!(a, r.retrieve("query", 5, &s, Some("e3")).unwrap());
        assert_eq!(a.len(), 5);
        assert!(!a.contains(&"e3".to_string()));
        assert_eq!(a.iter().collect::<BTreeSet<_>>().len(), 5);
        assert_eq!(r.retrieve("query", 80, &s, None).unwrap().len(), 50);
    }

    #[test]
    fn semi_random_cycles_types() {
        let pool = vec![
            example("p1", "t", &["Person"]),
            example("p2", "t", &["Person"]),
            example("p3", "t", &["Person"]),
            example("o1", "t", &["Organization"]),
        ];
        let r = Retriever::new(&pool, &["Person".into(), "Organization".into()]);
        let s = RetrievalStrategy::SemiRandom { seed: 1 };
        let got = r.retrieve("q", 3, &s, None).unwrap();
        assert_eq!(got.len(), 3);
        assert!(got[0].starts_with('p'));
        assert_eq!(got[1], "o1");
        assert!(got[2].starts_with('p'));
        assert_eq!(got, r.retrieve("q", 3, &s, None).unwrap());
        assert_eq!(r.retrieve("q", 10, &s, None).unwrap().len(), 4);
    }

    #[test]
    fn strategy_json() {
        let s: RetrievalStrategy =
            serde_json::from_str(r#"{"kind":"semi_random","seed":3}"#).unwrap();
        assert_eq!(s, RetrievalStrategy::SemiRandom { seed: 3 });
        assert!(serde_json::from_str::<RetrievalStrategy>(r#"{"kind":"random"}"#).is_err());
        assert!(
            serde_json::from_str::<RetrievalStrategy>(r#"{"kind":"sent_embed","seed":3}"#).is_err()
        );
    }
}
