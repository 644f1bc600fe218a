//! Typed extraction results shared by the renderer, the binder, the scorer
//! and the corpus loader.

use serde::{Deserialize, Serialize};

/// An entity mention. Offsets are character offsets into the source text,
/// end-exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMention {
    #[serde(rename = "type")]
    pub entity_type: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<String>,
}

impl EntityMention {
    pub fn new(entity_type: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            entity_type: entity_type.into(),
            text: text.into(),
            start: None,
            end: None,
            head: None,
        }
    }

    fn stripped(&self) -> Self {
        Self::new(self.entity_type.clone(), self.text.clone())
    }
}

/// A relation triple `(head, type, tail)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationMention {
    #[serde(rename = "type")]
    pub relation_type: String,
    pub head: EntityMention,
    pub tail: EntityMention,
}

impl RelationMention {
    pub fn new(relation_type: impl Into<String>, head: EntityMention, tail: EntityMention) -> Self {
        Self {
            relation_type: relation_type.into(),
            head,
            tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<String>,
}

impl Argument {
    pub fn new(role: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            role: role.into(),
            text: text.into(),
            head: None,
        }
    }
}

/// An event mention: a typed trigger plus role-grouped arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventMention {
    #[serde(rename = "type")]
    pub event_type: String,
    pub trigger: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_start: Option<usize>,
    #[serde(default)]
    pub args: Vec<Argument>,
}

impl EventMention {
    pub fn new(event_type: impl Into<String>, trigger: impl Into<String>) -> Self {
        Self {
            event_type: event_type.into(),
            trigger: trigger.into(),
            trigger_start: None,
            args: Vec::new(),
        }
    }

    pub fn with_arg(mut self, role: impl Into<String>, text: impl Into<String>) -> Self {
        self.args.push(Argument::new(role, text));
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionSet {
    #[serde(default)]
    pub entities: Vec<EntityMention>,
    #[serde(default)]
    pub relations: Vec<RelationMention>,
    #[serde(default)]
    pub events: Vec<EventMention>,
}

impl ExtractionSet {
    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.relations.is_empty() && self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entities.len() + self.relations.len() + self.events.len()
    }

    /// Copy with offsets and annotated head words removed. These fields never
    /// survive a trip through generated code.
    pub fn without_annotations(&self) -> Self {
        Self {
            entities: self.entities.iter().map(EntityMention::stripped).collect(),
            relations: self
                .relations
                .iter()
                .map(|r| {
                    RelationMention::new(
                        r.relation_type.clone(),
                        r.head.stripped(),
                        r.tail.stripped(),
                    )
                })
                .collect(),
            events: self
                .events
                .iter()
                .map(|e| EventMention {
                    event_type: e.event_type.clone(),
                    trigger: e.trigger.clone(),
                    trigger_start: None,
                    args: e
                        .args
                        .iter()
                        .map(|a| Argument::new(a.role.clone(), a.text.clone()))
                        .collect(),
                })
                .collect(),
        }
    }

    /// Every type name mentioned at top level, in first-appearance order
    /// (entities, then relations, then events).
    pub fn type_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |name: &str| {
            if !out.iter().any(|n| n == name) {
                out.push(name.to_string());
            }
        };
        for e in &self.entities {
            push(&e.entity_type);
        }
        for r in &self.relations {
            push(&r.relation_type);
        }
        for e in &self.events {
            push(&e.event_type);
        }
        out
    }
}
