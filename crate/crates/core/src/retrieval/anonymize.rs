use std::collections::BTreeMap;
use std::path::Path;

use aho_corasick::AhoCorasick;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotatorError {
    #[error("cannot read gazetteer {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid gazetteer: {0}")]
    Format(String),
    #[error("annotator failed: {0}")]
    Failed(String),
}

/// A typed span in byte offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub tag: String,
}

pub trait Annotator: Send + Sync {
    fn id(&self) -> String;
    /// Candidate spans, possibly overlapping.
    fn annotate(&self, text: &str) -> Result<Vec<Span>, AnnotatorError>;
}

/// Exact-match dictionary annotator. Matches must not sit inside a larger
/// alphanumeric token.
pub struct GazetteerAnnotator {
    surfaces: Vec<String>,
    tags: Vec<String>,
    matcher: AhoCorasick,
}

impl GazetteerAnnotator {
    pub fn new(entries: BTreeMap<String, String>) -> Result<Self, AnnotatorError> {
        let (surfaces, tags): (Vec<String>, Vec<String>) =
            entries.into_iter().filter(|(s, _)| !s.is_empty()).unzip();
        let matcher =
            AhoCorasick::new(&surfaces).map_err(|e| AnnotatorError::Format(e.to_string()))?;
        Ok(GazetteerAnnotator {
            surfaces,
            tags,
            matcher,
        })
    }

    /// Loads a JSON object mapping surface strings to tags.
    pub fn from_path(path: &Path) -> Result<Self, AnnotatorError> {
        let text = std::fs::read_to_string(path).map_err(|source| AnnotatorError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let entries: BTreeMap<String, String> = serde_json::from_str(&text)
            .map_err(|e| AnnotatorError::Format(format!("{}: {e}", path.display())))?;
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }
}

fn at_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start]
        .chars()
        .next_back()
        .is_some_and(char::is_alphanumeric);
    let after = text[end..]
        .chars()
        .next()
        .is_some_and(char::is_alphanumeric);
    !before && !after
}

impl Annotator for GazetteerAnnotator {
    fn id(&self) -> String {
        let joined: Vec<String> = self
            .surfaces
            .iter()
            .zip(&self.tags)
            .map(|(s, t)| format!("{s}\t{t}"))
            .collect();
        format!(
            "gazetteer-{:016x}",
            super::embed::fnv1a64(joined.join("\n").as_bytes())
        )
    }

    fn annotate(&self, text: &str) -> Result<Vec<Span>, AnnotatorError> {
        Ok(self
            .matcher
            .find_overlapping_iter(text)
            .filter(|m| at_boundary(text, m.start(), m.end()))
            .map(|m| Span {
                start: m.start(),
                end: m.end(),
                tag: self.tags[m.pattern().as_usize()].clone(),
            })
            .collect())
    }
}

/// Picks non-overlapping spans: longest first, then earliest. Returned in
/// text order.
pub fn resolve_overlaps(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
    });
    let mut kept: Vec<Span> = Vec::new();
    for s in spans {
        if s.start < s.end && kept.iter().all(|k| s.end <= k.start || s.start >= k.end) {
            kept.push(s);
        }
    }
    kept.sort_by_key(|s| s.start);
    kept
}

/// Replaces each kept span with its upper-cased tag.
pub fn anonymize(text: &str, annotator: &dyn Annotator) -> Result<String, AnnotatorError> {
    let spans = annotator.annotate(text)?;
    for s in &spans {
        if s.end > text.len() || !text.is_char_boundary(s.start) || !text.is_char_boundary(s.end) {
            return Err(AnnotatorError::Failed(format!(
                "span {}..{} is not a valid range",
                s.start, s.end
            )));
        }
    }
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for s in resolve_overlaps(spans) {
        out.push_str(&text[pos..s.start]);
        out.push_str(&s.tag.to_uppercase());
        pos = s.end;
    }
    out.push_str(&text[pos..]);
    Ok(out)
}
