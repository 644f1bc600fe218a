//! Task schemas: entity, relation and event type systems, each type being one
//! subclass of a family base class in the rendered code.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema format error at {path}: {message}")]
    Format { path: String, message: String },
    #[error("schema validation error: {0}")]
    Validation(String),
    #[error("schema has no {family} types required by task {task}")]
    EmptyFamily { task: TaskKind, family: Family },
    #[error("unresolved type(s): {}", .0.join(", "))]
    UnresolvedType(Vec<String>),
    #[error("unknown label {0}")]
    UnknownLabel(String),
}

/// The five extraction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Ner,
    Re,
    Ed,
    Eae,
    Ee,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Ner,
        TaskKind::Re,
        TaskKind::Ed,
        TaskKind::Eae,
        TaskKind::Ee,
    ];

    /// Type families whose definitions a prompt for this task carries.
    pub fn families(self) -> &'static [Family] {
        match self {
            TaskKind::Ner => &[Family::Entity],
            TaskKind::Re => &[Family::Entity, Family::Relation],
            TaskKind::Ed | TaskKind::Eae | TaskKind::Ee => &[Family::Entity, Family::Event],
        }
    }

    /// The family the task actually extracts.
    pub fn target_family(self) -> Family {
        match self {
            TaskKind::Ner => Family::Entity,
            TaskKind::Re => Family::Relation,
            TaskKind::Ed | TaskKind::Eae | TaskKind::Ee => Family::Event,
        }
    }

    pub fn allows(self, family: Family) -> bool {
        self.families().contains(&family)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Ner => "ner",
            TaskKind::Re => "re",
            TaskKind::Ed => "ed",
            TaskKind::Eae => "eae",
            TaskKind::Ee => "ee",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            TaskKind::Ner => "named entity recognition",
            TaskKind::Re => "relation extraction",
            TaskKind::Ed => "event detection",
            TaskKind::Eae => "event argument extraction",
            TaskKind::Ee => "event extraction",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ner" => Ok(TaskKind::Ner),
            "re" => Ok(TaskKind::Re),
            "ed" => Ok(TaskKind::Ed),
            "eae" => Ok(TaskKind::Eae),
            "ee" => Ok(TaskKind::Ee),
            other => Err(format!(
                "unknown task {other:?} (expected ner, re, ed, eae or ee)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Entity,
    Relation,
    Event,
}

impl Family {
    pub fn base_class(self) -> &'static str {
        match self {
            Family::Entity => "Entity",
            Family::Relation => "Relation",
            Family::Event => "Event",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Entity => "entity",
            Family::Relation => "relation",
            Family::Event => "event",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityTypeDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTypeDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub head_types: Vec<String>,
    pub tail_types: Vec<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Empty means unconstrained.
    #[serde(default, rename = "entity_types")]
    pub allowed_entity_types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTypeDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub roles: Vec<RoleDef>,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl EventTypeDef {
    pub fn role(&self, name: &str) -> Option<&RoleDef> {
        self.roles
            .iter()
            .find(|r| r.name.eq_ignore_ascii_case(name))
    }
}

/// A validated type system. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(rename = "dataset")]
    pub dataset_name: String,
    #[serde(default, rename = "entities")]
    pub entity_types: Vec<EntityTypeDef>,
    #[serde(default, rename = "relations")]
    pub relation_types: Vec<RelationTypeDef>,
    #[serde(default, rename = "events")]
    pub event_types: Vec<EventTypeDef>,
}

/// A resolved reference to one declared type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeRef<'a> {
    Entity(&'a EntityTypeDef),
    Relation(&'a RelationTypeDef),
    Event(&'a EventTypeDef),
}

impl<'a> TypeRef<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            TypeRef::Entity(d) => &d.name,
            TypeRef::Relation(d) => &d.name,
            TypeRef::Event(d) => &d.name,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            TypeRef::Entity(_) => Family::Entity,
            TypeRef::Relation(_) => Family::Relation,
            TypeRef::Event(_) => Family::Event,
        }
    }
}

const RESERVED_ROLE_NAMES: [&str; 3] = ["trigger", "self", "name"];

/// Replaces every character that cannot appear in an identifier with `_`.
pub fn normalize_identifier(label: &str) -> String {
    label
        .trim()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

/// Parses and validates a schema document.
pub fn load_schema(document: &str) -> Result<Schema, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let raw: Schema = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        SchemaError::Format {
            path: format!(
                "{} (line {}, column {})",
                e.path(),
                inner.line(),
                inner.column()
            ),
            message: inner.to_string(),
        }
    })?;
    let schema = raw.normalized();
    schema.validate()?;
    Ok(schema)
}

impl Schema {
    /// Canonical serialization; [`load_schema`] inverts it.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    fn normalized(mut self) -> Schema {
        fn fix_name(name: &mut String, aliases: &mut Vec<String>) {
            let norm = normalize_identifier(name);
            if norm != *name {
                if !aliases.iter().any(|a| a == name.trim()) {
                    aliases.push(name.trim().to_string());
                }
                *name = norm;
            }
        }
        for e in &mut self.entity_types {
            fix_name(&mut e.name, &mut e.aliases);
        }
        let entity_names: Vec<String> = self.entity_types.iter().map(|e| e.name.clone()).collect();
        let canon_ref = |r: &str| -> String {
            let norm = normalize_identifier(r);
            entity_names
                .iter()
                .find(|n| n.eq_ignore_ascii_case(&norm))
                .cloned()
                .unwrap_or(norm)
        };
        for r in &mut self.relation_types {
            fix_name(&mut r.name, &mut r.aliases);
            r.head_types = r.head_types.iter().map(|t| canon_ref(t)).collect();
            r.tail_types = r.tail_types.iter().map(|t| canon_ref(t)).collect();
        }
        for ev in &mut self.event_types {
            fix_name(&mut ev.name, &mut ev.aliases);
            for role in &mut ev.roles {
                role.name = normalize_identifier(&role.name);
                role.allowed_entity_types = role
                    .allowed_entity_types
                    .iter()
                    .map(|t| canon_ref(t))
                    .collect();
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let invalid = |msg: String| Err(SchemaError::Validation(msg));
        if self.entity_types.is_empty()
            && self.relation_types.is_empty()
            && self.event_types.is_empty()
        {
            return invalid("schema declares no types".into());
        }

        // Class names and aliases share one case-insensitive namespace.
        let mut names: HashMap<String, String> = HashMap::new();
        for base in ["Entity", "Relation", "Event"] {
            names.insert(base.to_ascii_lowercase(), format!("base class {base}"));
        }
        let mut declare = |name: &str, aliases: &[String]| -> Result<(), SchemaError> {
            if !is_identifier(name) {
                return invalid(format!("invalid type name {name:?}"));
            }
            let key = name.to_ascii_lowercase();
            if let Some(owner) = names.get(&key) {
                return invalid(format!("duplicate type name {name} (clashes with {owner})"));
            }
            names.insert(key, name.to_string());
            let mut own = HashSet::new();
            for alias in aliases {
                let key = alias.to_ascii_lowercase();
                if key.trim().is_empty() {
                    return invalid(format!("empty alias on {name}"));
                }
                if key == name.to_ascii_lowercase() {
                    continue;
                }
                if !own.insert(key.clone()) || names.contains_key(&key) {
                    return invalid(format!("duplicate alias {alias} on {name}"));
                }
                names.insert(key, name.to_string());
            }
            Ok(())
        };
        for e in &self.entity_types {
            declare(&e.name, &e.aliases)?;
        }
        for r in &self.relation_types {
            declare(&r.name, &r.aliases)?;
        }
        for ev in &self.event_types {
            declare(&ev.name, &ev.aliases)?;
        }

        let entity_declared = |t: &str| self.entity_types.iter().any(|e| e.name == t);
        for r in &self.relation_types {
            if r.head_types.is_empty() || r.tail_types.is_empty() {
                return invalid(format!(
                    "relation {} needs non-empty head_types and tail_types",
                    r.name
                ));
            }
            for t in r.head_types.iter().chain(&r.tail_types) {
                if !entity_declared(t) {
                    return invalid(format!("unresolved entity type {t} in relation {}", r.name));
                }
            }
        }
        for ev in &self.event_types {
            let mut seen = HashSet::new();
            for role in &ev.roles {
                if !is_identifier(&role.name) {
                    return invalid(format!(
                        "invalid role name {:?} in event {}",
                        role.name, ev.name
                    ));
                }
                if RESERVED_ROLE_NAMES
                    .iter()
                    .any(|r| r.eq_ignore_ascii_case(&role.name))
                {
                    return invalid(format!(
                        "reserved role name {} in event {}",
                        role.name, ev.name
                    ));
                }
                if !seen.insert(role.name.to_ascii_lowercase()) {
                    return invalid(format!("duplicate role {} in event {}", role.name, ev.name));
                }
                for t in &role.allowed_entity_types {
                    if !entity_declared(t) {
                        return invalid(format!(
                            "unresolved entity type {t} in role {} of event {}",
                            role.name, ev.name
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.entity_types.is_empty()
            && self.relation_types.is_empty()
            && self.event_types.is_empty()
    }

    pub fn has_family(&self, family: Family) -> bool {
        match family {
            Family::Entity => !self.entity_types.is_empty(),
            Family::Relation => !self.relation_types.is_empty(),
            Family::Event => !self.event_types.is_empty(),
        }
    }

    /// All declared class names in declaration order (entities, relations, events).
    pub fn type_names(&self) -> Vec<String> {
        self.entity_types
            .iter()
            .map(|e| e.name.clone())
            .chain(self.relation_types.iter().map(|r| r.name.clone()))
            .chain(self.event_types.iter().map(|e| e.name.clone()))
            .collect()
    }

    pub fn family_type_names(&self, family: Family) -> Vec<String> {
        match family {
            Family::Entity => self.entity_types.iter().map(|e| e.name.clone()).collect(),
            Family::Relation => self.relation_types.iter().map(|r| r.name.clone()).collect(),
            Family::Event => self.event_types.iter().map(|e| e.name.clone()).collect(),
        }
    }

    pub fn entity(&self, name: &str) -> Option<&EntityTypeDef> {
        self.entity_types.iter().find(|e| e.name == name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationTypeDef> {
        self.relation_types.iter().find(|r| r.name == name)
    }

    pub fn event(&self, name: &str) -> Option<&EventTypeDef> {
        self.event_types.iter().find(|e| e.name == name)
    }

    /// Maps a class name or dataset label (case-insensitive) to its type.
    pub fn resolve_alias(&self, label: &str) -> Result<TypeRef<'_>, SchemaError> {
        let label = label.trim();
        let matches = |name: &str, aliases: &[String]| {
            name.eq_ignore_ascii_case(label)
                || aliases.iter().any(|a| a.eq_ignore_ascii_case(label))
        };
        if let Some(e) = self
            .entity_types
            .iter()
            .find(|e| matches(&e.name, &e.aliases))
        {
            return Ok(TypeRef::Entity(e));
        }
        if let Some(r) = self
            .relation_types
            .iter()
            .find(|r| matches(&r.name, &r.aliases))
        {
            return Ok(TypeRef::Relation(r));
        }
        if let Some(e) = self
            .event_types
            .iter()
            .find(|e| matches(&e.name, &e.aliases))
        {
            return Ok(TypeRef::Event(e));
        }
        // Labels such as "Transfer-Ownership" also match their normalized class name.
        let norm = normalize_identifier(label);
        if norm != label && !norm.is_empty() {
            if let Ok(found) = self.resolve_alias(&norm) {
                return Ok(found);
            }
        }
        Err(SchemaError::UnknownLabel(label.to_string()))
    }

    /// Restricts the schema to the families a task needs.
    pub fn subset_for_task(&self, task: TaskKind) -> Result<Schema, SchemaError> {
        let required = match task {
            TaskKind::Ner => Family::Entity,
            other => other.target_family(),
        };
        if !self.has_family(required) {
            return Err(SchemaError::EmptyFamily {
                task,
                family: required,
            });
        }
        Ok(Schema {
            dataset_name: self.dataset_name.clone(),
            entity_types: if task.allows(Family::Entity) {
                self.entity_types.clone()
            } else {
                Vec::new()
            },
            relation_types: if task.allows(Family::Relation) {
                self.relation_types.clone()
            } else {
                Vec::new()
            },
            event_types: if task.allows(Family::Event) {
                self.event_types.clone()
            } else {
                Vec::new()
            },
        })
    }

    /// Restricts the schema to the named types plus every entity type they
    /// reference, so code over the subset is self-contained.
    pub fn subset_for_types<S: AsRef<str>>(&self, names: &[S]) -> Result<Schema, SchemaError> {
        let mut keep: HashSet<String> = HashSet::new();
        let mut unknown = Vec::new();
        for name in names {
            match self.resolve_alias(name.as_ref()) {
                Ok(t) => {
                    keep.insert(t.name().to_string());
                    match t {
                        TypeRef::Entity(_) => {}
                        TypeRef::Relation(r) => {
                            keep.extend(r.head_types.iter().chain(&r.tail_types).cloned())
                        }
                        TypeRef::Event(ev) => keep.extend(
                            ev.roles
                                .iter()
                                .flat_map(|role| role.allowed_entity_types.iter().cloned()),
                        ),
                    }
                }
                Err(_) => unknown.push(name.as_ref().to_string()),
            }
        }
        if !unknown.is_empty() {
            return Err(SchemaError::UnresolvedType(unknown));
        }
        Ok(Schema {
            dataset_name: self.dataset_name.clone(),
            entity_types: self
                .entity_types
                .iter()
                .filter(|e| keep.contains(&e.name))
                .cloned()
                .collect(),
            relation_types: self
                .relation_types
                .iter()
                .filter(|r| keep.contains(&r.name))
                .cloned()
                .collect(),
            event_types: self
                .event_types
                .iter()
                .filter(|e| keep.contains(&e.name))
                .cloned()
                .collect(),
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const TOY: &str = r#"{
        "dataset": "toy",
        "entities": [
            {"name": "Person", "description": "A human being.", "aliases": ["PER"]},
            {"name": "Organization", "description": "A company or institution.", "aliases": ["ORG"]}
        ],
        "relations": [
            {"name": "Work_For", "description": "Head works for tail.", "head_types": ["Person"],
             "tail_types": ["Organization"], "aliases": ["Work-For"]}
        ],
        "events": [
            {"name": "Databreach", "description": "Data is stolen.", "aliases": [],
             "roles": [{"name": "purpose", "description": "Why.", "entity_types": []}]}
        ]
    }"#;

    pub(crate) fn toy() -> Schema {
        load_schema(TOY).unwrap()
    }

    #[test]
    fn minimal_schema_loads() {
        let s = load_schema(r#"{"dataset":"d","entities":[{"name":"Person","description":"","aliases":["PER"]}],"relations":[],"events":[]}"#)
            .unwrap();
        assert_eq!(s.entity_types.len(), 1);
        assert!(s.relation_types.is_empty() && s.event_types.is_empty());
    }

    #[test]
    fn unresolved_head_type_is_rejected() {
        let doc = r#"{"dataset":"d","entities":[{"name":"Organization"}],
            "relations":[{"name":"Work_For","head_types":["Person"],"tail_types":["Organization"]}]}"#;
        let err = load_schema(doc).unwrap_err();
        assert!(
            err.to_string().contains("unresolved entity type Person"),
            "{err}"
        );
    }

    #[test]
    fn duplicate_alias_is_rejected() {
        let doc = r#"{"dataset":"d","entities":[{"name":"Person","aliases":["PER"]},{"name":"Persona","aliases":["per"]}]}"#;
        let err = load_schema(doc).unwrap_err();
        assert!(err.to_string().contains("duplicate alias"), "{err}");
    }

    #[test]
    fn format_error_carries_path() {
        let err = load_schema(r#"{"dataset":"d","entities":[{"name": 3}]}"#).unwrap_err();
        match err {
            SchemaError::Format { path, .. } => {
                assert!(path.starts_with("entities[0].name"), "{path}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_schema_is_rejected() {
        assert!(matches!(
            load_schema(r#"{"dataset":"d"}"#),
            Err(SchemaError::Validation(_))
        ));
    }

    #[test]
    fn labels_with_hyphens_become_identifiers() {
        let s = load_schema(r#"{"dataset":"d","events":[{"name":"Transfer-Ownership","roles":[{"name":"buyer"}]}]}"#)
            .unwrap();
        assert_eq!(s.event_types[0].name, "Transfer_Ownership");
        assert_eq!(
            s.resolve_alias("transfer-ownership").unwrap().name(),
            "Transfer_Ownership"
        );
        assert_eq!(load_schema(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn resolve_alias_cases() {
        let s = toy();
        assert_eq!(s.resolve_alias("PER").unwrap().name(), "Person");
        assert_eq!(s.resolve_alias("person").unwrap().name(), "Person");
        assert_eq!(
            s.resolve_alias("XYZ"),
            Err(SchemaError::UnknownLabel("XYZ".into()))
        );
    }

    #[test]
    fn task_subsets() {
        let s = toy();
        let ner = s.subset_for_task(TaskKind::Ner).unwrap();
        assert_eq!(ner.type_names(), ["Person", "Organization"]);
        let re = s.subset_for_task(TaskKind::Re).unwrap();
        assert_eq!(re.type_names(), ["Person", "Organization", "Work_For"]);
        let ee = s.subset_for_task(TaskKind::Ee).unwrap();
        assert_eq!(ee.type_names(), ["Person", "Organization", "Databreach"]);

        let no_events = Schema {
            event_types: vec![],
            ..s
        };
        assert!(matches!(
            no_events.subset_for_task(TaskKind::Ed),
            Err(SchemaError::EmptyFamily {
                family: Family::Event,
                ..
            })
        ));
    }

    #[test]
    fn type_subsets_close_over_references() {
        let s = toy();
        assert_eq!(
            s.subset_for_types(&["Person"]).unwrap().type_names(),
            ["Person"]
        );
        assert_eq!(
            s.subset_for_types(&["Work_For"]).unwrap().type_names(),
            ["Person", "Organization", "Work_For"]
        );
        assert_eq!(
            s.subset_for_types(&["Nonexistent"]),
            Err(SchemaError::UnresolvedType(vec!["Nonexistent".into()]))
        );
        assert_eq!(s.subset_for_types(&s.type_names()).unwrap(), s);
    }

    #[test]
    fn reserved_role_names_rejected() {
        let doc = r#"{"dataset":"d","events":[{"name":"Attack","roles":[{"name":"trigger"}]}]}"#;
        assert!(matches!(load_schema(doc), Err(SchemaError::Validation(_))));
    }
}
