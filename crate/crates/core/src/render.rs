//! Rendering schemas, gold extractions and task instructions as class-style
//! code, and assembling one- and two-stage prompts under a token budget.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Example;
use crate::extraction::{EntityMention, EventMention, ExtractionSet};
use crate::parser::quote_string;
use crate::schema::{Family, Schema, SchemaError, TaskKind, TypeRef};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RenderError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("sentence is empty")]
    EmptySentence,
    #[error("unknown role {role} for event {event}")]
    UnresolvedRole { event: String, role: String },
    #[error("prompt overlength: {needed} estimated tokens without examples, budget {budget}")]
    Overlength { needed: usize, budget: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    OneStage,
    TwoStageS1,
    TwoStageS2,
}

impl PromptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::OneStage => "one_stage",
            PromptMode::TwoStageS1 => "two_stage_s1",
            PromptMode::TwoStageS2 => "two_stage_s2",
        }
    }

    pub fn is_two_stage(self) -> bool {
        !matches!(self, PromptMode::OneStage)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task: TaskKind,
    pub mode: PromptMode,
    pub k: usize,
    pub max_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub given_event_type: Option<String>,
}

impl PromptSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.max_tokens == 0 {
            return Err(RenderError::InvalidSpec(
                "max_tokens must be positive".into(),
            ));
        }
        if self.mode.is_two_stage() && matches!(self.task, TaskKind::Ed | TaskKind::Eae) {
            return Err(RenderError::InvalidSpec(format!(
                "task {} has no two-stage prompt",
                self.task
            )));
        }
        match (self.task, &self.given_event_type) {
            (TaskKind::Eae, None) => Err(RenderError::InvalidSpec(
                "eae prompts need a given event type".into(),
            )),
            (TaskKind::Eae, Some(_)) | (_, None) => Ok(()),
            (task, Some(_)) => Err(RenderError::InvalidSpec(format!(
                "given event type is only valid for eae, not {task}"
            ))),
        }
    }
}

/// Class-definition code for a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaCode {
    pub text: String,
    /// Subclass names, base classes excluded.
    pub covered_types: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub token_estimate: usize,
    pub example_ids: Vec<String>,
    pub mode: PromptMode,
}

/// Characters divided by four, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

fn comment_lines(out: &mut String, indent: &str, text: &str) {
    for line in text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty())
    {
        out.push_str(indent);
        out.push_str("# ");
        out.push_str(line.trim_start());
        out.push('\n');
    }
}

fn union_type(types: &[String]) -> String {
    match types {
        [single] => single.clone(),
        many => format!("Union[{}]", many.join(", ")),
    }
}

/// Renders base classes and one subclass per type the task needs.
pub fn render_class_defs(schema: &Schema, task: TaskKind) -> Result<SchemaCode, RenderError> {
    let schema = schema.subset_for_task(task)?;
    let mut classes: Vec<String> = Vec::new();
    let mut covered = Vec::new();

    if !schema.entity_types.is_empty() {
        classes.push(
            "class Entity:\n    def __init__(self, name: str):\n        self.name = name\n"
                .to_string(),
        );
        for e in &schema.entity_types {
            let mut c = format!("class {}(Entity):\n", e.name);
            comment_lines(&mut c, "    ", &e.description);
            c.push_str("    def __init__(self, name: str):\n        super().__init__(name=name)\n");
            classes.push(c);
            covered.push(e.name.clone());
        }
    }
    if !schema.relation_types.is_empty() {
        classes.push(
            "class Relation:\n    def __init__(self, head: Entity, tail: Entity):\n        self.head = head\n        self.tail = tail\n"
                .to_string(),
        );
        for r in &schema.relation_types {
            let mut c = format!("class {}(Relation):\n", r.name);
            comment_lines(&mut c, "    ", &r.description);
            c.push_str(&format!(
                "    def __init__(self, head: {}, tail: {}):\n        super().__init__(head=head, tail=tail)\n",
                union_type(&r.head_types),
                union_type(&r.tail_types)
            ));
            classes.push(c);
            covered.push(r.name.clone());
        }
    }
    if !schema.event_types.is_empty() {
        classes.push(
            "class Event:\n    def __init__(self, trigger: str):\n        # The word or phrase that most clearly expresses the event.\n        self.trigger = trigger\n"
                .to_string(),
        );
        for ev in &schema.event_types {
            let mut c = format!("class {}(Event):\n", ev.name);
            comment_lines(&mut c, "    ", &ev.description);
            let mut params = String::from("self, trigger: str");
            for role in &ev.roles {
                params.push_str(&format!(", {}: List[str] = []", role.name));
            }
            c.push_str(&format!(
                "    def __init__({params}):\n        super().__init__(trigger=trigger)\n"
            ));
            for role in &ev.roles {
                let mut note = role.description.trim().to_string();
                if !role.allowed_entity_types.is_empty() {
                    let types = format!("entity types: {}", role.allowed_entity_types.join(", "));
                    note = if note.is_empty() {
                        types
                    } else {
                        format!("{note} ({types})")
                    };
                }
                comment_lines(&mut c, "        ", &note);
                c.push_str(&format!("        self.{0} = {0}\n", role.name));
            }
            classes.push(c);
            covered.push(ev.name.clone());
        }
    }
    Ok(SchemaCode {
        text: classes.join("\n\n"),
        covered_types: covered,
    })
}

fn entity_call(schema: &Schema, e: &EntityMention) -> Result<String, RenderError> {
    match schema.resolve_alias(&e.entity_type)? {
        TypeRef::Entity(def) => Ok(format!("{}(name={})", def.name, quote_string(&e.text))),
        other => Err(SchemaError::UnresolvedType(vec![format!(
            "{} is not an entity type",
            other.name()
        )])
        .into()),
    }
}

fn event_call(schema: &Schema, ev: &EventMention) -> Result<String, RenderError> {
    let def = match schema.resolve_alias(&ev.event_type)? {
        TypeRef::Event(def) => def,
        other => {
            return Err(SchemaError::UnresolvedType(vec![format!(
                "{} is not an event type",
                other.name()
            )])
            .into())
        }
    };
    let mut groups: Vec<Vec<&str>> = vec![Vec::new(); def.roles.len()];
    for arg in &ev.args {
        let slot = def
            .roles
            .iter()
            .position(|r| r.name.eq_ignore_ascii_case(&arg.role))
            .ok_or_else(|| RenderError::UnresolvedRole {
                event: def.name.clone(),
                role: arg.role.clone(),
            })?;
        groups[slot].push(&arg.text);
    }
    let mut call = format!("{}(trigger={}", def.name, quote_string(&ev.trigger));
    for (role, texts) in def.roles.iter().zip(&groups) {
        if texts.is_empty() {
            continue;
        }
        let items: Vec<String> = texts.iter().map(|t| quote_string(t)).collect();
        call.push_str(&format!(", {}=[{}]", role.name, items.join(", ")));
    }
    call.push(')');
    Ok(call)
}

/// Renders one assignment per extraction, `v1`, `v2`, ... in emission order.
/// Families the task does not cover are left out.
pub fn render_instances(
    extractions: &ExtractionSet,
    schema: &Schema,
    task: TaskKind,
) -> Result<String, RenderError> {
    let mut lines = Vec::new();
    if task.allows(Family::Entity) {
        for e in &extractions.entities {
            lines.push(entity_call(schema, e)?);
        }
    }
    if task.allows(Family::Relation) {
        for r in &extractions.relations {
            let def = match schema.resolve_alias(&r.relation_type)? {
                TypeRef::Relation(def) => def,
                other => {
                    return Err(SchemaError::UnresolvedType(vec![format!(
                        "{} is not a relation type",
                        other.name()
                    )])
                    .into())
                }
            };
            lines.push(format!(
                "{}(head={}, tail={})",
                def.name,
                entity_call(schema, &r.head)?,
                entity_call(schema, &r.tail)?
            ));
        }
    }
    if task.allows(Family::Event) {
        for ev in &extractions.events {
            lines.push(event_call(schema, ev)?);
        }
    }
    Ok(lines
        .iter()
        .enumerate()
        .map(|(i, call)| format!("v{} = {call}", i + 1))
        .collect::<Vec<_>>()
        .join("\n"))
}

/// The task-instruction annotation block for one sentence.
pub fn render_instruction(
    sentence: &str,
    task: TaskKind,
    mode: PromptMode,
    given_event_type: Option<&str>,
) -> Result<String, RenderError> {
    if sentence.trim().is_empty() {
        return Err(RenderError::EmptySentence);
    }
    let goal = match (mode, task) {
        (PromptMode::TwoStageS1, t) => format!(
            "identify the {} types mentioned in the following sentence and complete the import statement.",
            t.target_family()
        ),
        (_, TaskKind::Ner) => {
            "extract the entities in the following sentence and instantiate the corresponding entity classes.".into()
        }
        (_, TaskKind::Re) => "extract the relations between entities in the following sentence and instantiate the corresponding relation classes.".into(),
        (_, TaskKind::Ed) => "extract the events in the following sentence and instantiate the corresponding event classes with their triggers.".into(),
        (_, TaskKind::Eae) => format!(
            "extract the arguments of the {0} event in the following sentence and instantiate the {0} class.",
            given_event_type.unwrap_or("given")
        ),
        (_, TaskKind::Ee) => "extract the events and their arguments in the following sentence and instantiate the corresponding event classes.".into(),
    };
    let mut out = String::from("\"\"\"\n");
    out.push_str(&format!("Task: {}\n", task.display_name()));
    out.push_str(&format!("Goal: {goal}\n"));
    if let (TaskKind::Eae, Some(t)) = (task, given_event_type) {
        out.push_str(&format!("event type: {t}\n"));
    }
    out.push_str(&format!("sentence: {}\n", quote_string(sentence)));
    out.push_str("\"\"\"");
    Ok(out)
}

/// Gold extractions an in-context example shows for a task: the task's own
/// output, without unrelated families.
pub fn project_gold(
    gold: &ExtractionSet,
    task: TaskKind,
    given_event_type: Option<&str>,
) -> ExtractionSet {
    let mut out = ExtractionSet::default();
    match task {
        TaskKind::Ner => out.entities = gold.entities.clone(),
        TaskKind::Re => {
            out.entities = gold.entities.clone();
            out.relations = gold.relations.clone();
        }
        TaskKind::Ed => {
            out.events = gold
                .events
                .iter()
                .map(|e| EventMention {
                    args: Vec::new(),
                    ..e.clone()
                })
                .collect()
        }
        TaskKind::Eae => {
            out.events = gold
                .events
                .iter()
                .filter(|e| given_event_type.is_some_and(|t| e.event_type == t))
                .cloned()
                .collect()
        }
        TaskKind::Ee => out.events = gold.events.clone(),
    }
    out
}

/// Restricts an extraction set to types declared in `subset`.
pub fn restrict_to_schema(set: &ExtractionSet, subset: &Schema) -> ExtractionSet {
    ExtractionSet {
        entities: set
            .entities
            .iter()
            .filter(|e| subset.entity(&e.entity_type).is_some())
            .cloned()
            .collect(),
        relations: set
            .relations
            .iter()
            .filter(|r| subset.relation(&r.relation_type).is_some())
            .cloned()
            .collect(),
        events: set
            .events
            .iter()
            .filter(|e| subset.event(&e.event_type).is_some())
            .cloned()
            .collect(),
    }
}

/// Target-family type names present in a gold set, in order of appearance.
pub fn target_types(gold: &ExtractionSet, task: TaskKind) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let names: Vec<&String> = match task.target_family() {
        Family::Entity => gold.entities.iter().map(|e| &e.entity_type).collect(),
        Family::Relation => gold.relations.iter().map(|r| &r.relation_type).collect(),
        Family::Event => gold.events.iter().map(|e| &e.event_type).collect(),
    };
    for n in names {
        if !out.contains(n) {
            out.push(n.clone());
        }
    }
    out
}

fn import_line(task: TaskKind, names: &[String]) -> String {
    format!(
        "from {} import {}",
        task.target_family().base_class(),
        names.join(", ")
    )
}

/// Assembles a prompt: schema code, in-context examples best-first, and the
/// target instruction. Examples are dropped from the worst-ranked end until
/// the estimate fits `spec.max_tokens`.
pub fn render_prompt(
    spec: &PromptSpec,
    schema: &Schema,
    examples: &[&Example],
    target: &str,
    stage1_types: Option<&[String]>,
) -> Result<RenderedPrompt, RenderError> {
    spec.validate()?;
    if (spec.mode == PromptMode::TwoStageS2) != stage1_types.is_some() {
        return Err(RenderError::InvalidSpec(
            "stage-one types are required exactly for stage two".into(),
        ));
    }
    let task = spec.task;
    let given = spec.given_event_type.as_deref();

    let scope = match (spec.mode, given) {
        (PromptMode::TwoStageS2, _) => schema.subset_for_types(stage1_types.unwrap_or_default())?,
        (_, Some(event_type)) => {
            if !matches!(schema.resolve_alias(event_type)?, TypeRef::Event(_)) {
                return Err(SchemaError::UnresolvedType(vec![event_type.to_string()]).into());
            }
            schema.subset_for_types(&[event_type])?
        }
        _ => schema.clone(),
    };
    let given = given
        .map(|g| schema.resolve_alias(g).map(|t| t.name().to_string()))
        .transpose()?;
    let given = given.as_deref();
    let class_defs = render_class_defs(&scope, task)?;
    let wanted: Option<HashSet<String>> = stage1_types.map(|types| {
        types
            .iter()
            .filter_map(|t| schema.resolve_alias(t).ok().map(|r| r.name().to_string()))
            .collect()
    });

    let mut blocks: Vec<(String, String)> = Vec::new();
    for ex in examples {
        if blocks.len() == spec.k {
            break;
        }
        let gold = project_gold(&ex.gold, task, given);
        let body = match spec.mode {
            PromptMode::OneStage if task == TaskKind::Eae => {
                if gold.events.is_empty() {
                    continue;
                }
                render_instances(&gold, &scope, task)?
            }
            PromptMode::OneStage => render_instances(&gold, schema, task)?,
            PromptMode::TwoStageS1 => {
                let names = target_types(&gold, task);
                if names.is_empty() {
                    continue;
                }
                import_line(task, &names)
            }
            PromptMode::TwoStageS2 => {
                let wanted = wanted.as_ref().expect("checked above");
                if !target_types(&gold, task).iter().any(|t| wanted.contains(t)) {
                    continue;
                }
                render_instances(&restrict_to_schema(&gold, &scope), &scope, task)?
            }
        };
        let instruction = render_instruction(&ex.text, task, spec.mode, given)?;
        let block = if body.is_empty() {
            format!("{instruction}\n")
        } else {
            format!("{instruction}\n{body}\n")
        };
        blocks.push((ex.id.clone(), block));
    }

    let header = format!("{}\n\n\n", class_defs.text.trim_end());
    let mut tail = render_instruction(target, task, spec.mode, given)?;
    tail.push('\n');
    if spec.mode == PromptMode::TwoStageS1 {
        tail.push_str(&format!(
            "from {} import ",
            task.target_family().base_class()
        ));
    }

    // Each block is followed by one blank separator line.
    let fixed = header.chars().count() + tail.chars().count();
    let budget_chars = spec.max_tokens.saturating_mul(4);
    if fixed.div_ceil(4) > spec.max_tokens {
        return Err(RenderError::Overlength {
            needed: fixed.div_ceil(4),
            budget: spec.max_tokens,
        });
    }
    let mut used = fixed;
    let mut n = 0;
    for (_, block) in &blocks {
        let extra = block.chars().count() + 1;
        if used + extra > budget_chars {
            break;
        }
        used += extra;
        n += 1;
    }

    let mut text = header;
    for (_, block) in &blocks[..n] {
        text.push_str(block);
        text.push('\n');
    }
    text.push_str(&tail);
    let token_estimate = estimate_tokens(&text);
    debug_assert!(token_estimate <= spec.max_tokens);
    Ok(RenderedPrompt {
        text,
        token_estimate,
        example_ids: blocks[..n].iter().map(|(id, _)| id.clone()).collect(),
        mode: spec.mode,
    })
}
