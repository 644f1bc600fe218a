//! Plain-text prompt style used as a comparison point for the code prompts.
//!
//! The prompt lists the option set in prose and asks for one
//! `Type: mention` line per extraction. Event arguments follow their event
//! as `- role: text` lines. Relation extraction has no text form here.

use crate::dataset::Example;
use crate::extraction::{Argument, EntityMention, EventMention, ExtractionSet};
use crate::parser::{ParseDiagnostics, SkippedLine};
use crate::render::{
    estimate_tokens, project_gold, PromptMode, PromptSpec, RenderError, RenderedPrompt,
};
use crate::schema::{Family, Schema, TaskKind, TypeRef};

pub fn supports(task: TaskKind) -> bool {
    task != TaskKind::Re
}

fn instruction(schema: &Schema, task: TaskKind, given: Option<&str>) -> String {
    let options = |family| schema.family_type_names(family).join(", ");
    match task {
        TaskKind::Ner => format!(
            "Please list all entity words in the text that fit the category. Output format is \"type: word\". Option: {}",
            options(Family::Entity)
        ),
        TaskKind::Ed => format!(
            "Please list all event trigger words in the text that fit the event type. Output format is \"event type: trigger\". Option: {}",
            options(Family::Event)
        ),
        TaskKind::Eae => {
            let roles = given
                .and_then(|g| schema.event(g))
                .map(|e| e.roles.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(", "))
                .unwrap_or_default();
            format!(
                "Given the {} event, list its trigger as \"event type: trigger\" and then each argument as \"- role: argument\". Option: {}",
                given.unwrap_or("given"),
                roles
            )
        }
        TaskKind::Ee | TaskKind::Re => format!(
            "Please list all events in the text as \"event type: trigger\", each followed by its arguments as \"- role: argument\". Option: {}",
            options(Family::Event)
        ),
    }
}

/// Answer lines for a gold set, or `None` when it is empty.
pub fn render_answer(set: &ExtractionSet, task: TaskKind) -> String {
    let mut lines = Vec::new();
    match task {
        TaskKind::Ner | TaskKind::Re => {
            for e in &set.entities {
                lines.push(format!("{}: {}", e.entity_type, e.text));
            }
        }
        TaskKind::Ed => {
            for e in &set.events {
                lines.push(format!("{}: {}", e.event_type, e.trigger));
            }
        }
        TaskKind::Eae | TaskKind::Ee => {
            for e in &set.events {
                lines.push(format!("{}: {}", e.event_type, e.trigger));
                for a in &e.args {
                    lines.push(format!("- {}: {}", a.role, a.text));
                }
            }
        }
    }
    if lines.is_empty() {
        "None".into()
    } else {
        lines.join("\n")
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn block(sentence: &str) -> String {
    format!("Text: {}\nAnswer:\n", one_line(sentence))
}

/// Builds a text prompt with the same budget rule as the code prompts.
pub fn render_text_prompt(
    spec: &PromptSpec,
    schema: &Schema,
    examples: &[&Example],
    target: &str,
) -> Result<RenderedPrompt, RenderError> {
    spec.validate()?;
    if spec.mode != PromptMode::OneStage || !supports(spec.task) {
        return Err(RenderError::InvalidSpec(format!(
            "text prompts support one-stage ner, ed, eae and ee, not {} {}",
            spec.mode.as_str(),
            spec.task
        )));
    }
    if target.trim().is_empty() {
        return Err(RenderError::EmptySentence);
    }
    let given = spec
        .given_event_type
        .as_deref()
        .map(|g| schema.resolve_alias(g).map(|t| t.name().to_string()))
        .transpose()?;
    let header = format!(
        "Task: {}\n{}\n\n",
        spec.task.display_name(),
        instruction(schema, spec.task, given.as_deref())
    );
    let tail = block(target);

    let mut blocks: Vec<(String, String)> = Vec::new();
    for ex in examples.iter().take(spec.k) {
        let gold = project_gold(&ex.gold, spec.task, given.as_deref());
        if spec.task == TaskKind::Eae && gold.events.is_empty() {
            continue;
        }
        blocks.push((
            ex.id.clone(),
            format!("{}{}\n\n", block(&ex.text), render_answer(&gold, spec.task)),
        ));
    }

    let fixed = header.chars().count() + tail.chars().count();
    if fixed.div_ceil(4) > spec.max_tokens {
        return Err(RenderError::Overlength {
            needed: fixed.div_ceil(4),
            budget: spec.max_tokens,
        });
    }
    let budget = spec.max_tokens.saturating_mul(4);
    let mut used = fixed;
    let mut n = 0;
    for (_, b) in &blocks {
        if used + b.chars().count() > budget {
            break;
        }
        used += b.chars().count();
        n += 1;
    }
    let mut text = header;
    for (_, b) in &blocks[..n] {
        text.push_str(b);
    }
    text.push_str(&tail);
    Ok(RenderedPrompt {
        token_estimate: estimate_tokens(&text),
        text,
        example_ids: blocks[..n].iter().map(|(id, _)| id.clone()).collect(),
        mode: PromptMode::OneStage,
    })
}

/// Reads `Type: mention` and `- role: text` lines. Unreadable lines are
/// reported and skipped.
pub fn read_answer(
    response: &str,
    schema: &Schema,
    task: TaskKind,
    given_event_type: Option<&str>,
) -> (ExtractionSet, ParseDiagnostics) {
    let mut out = ExtractionSet::default();
    let mut diag = ParseDiagnostics::default();
    let mut skip =
        |line: usize, reason: String| diag.skipped_lines.push(SkippedLine { line, reason });
    // Whether the last event line was accepted, so its arguments can attach.
    let mut open_event = false;
    for (i, raw) in response.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty()
            || line.eq_ignore_ascii_case("none")
            || line.eq_ignore_ascii_case("answer:")
        {
            continue;
        }
        if let Some(rest) = line.strip_prefix("- ") {
            if !matches!(task, TaskKind::Eae | TaskKind::Ee) {
                skip(line_no, "arguments are not part of this task".into());
                continue;
            }
            let Some((role, text)) = rest.split_once(':') else {
                skip(line_no, "expected \"- role: argument\"".into());
                continue;
            };
            let (role, text) = (role.trim(), text.trim());
            if !open_event {
                skip(line_no, "argument without an event".into());
                continue;
            }
            let event = out.events.last_mut().expect("open event");
            let def = schema.event(&event.event_type).expect("resolved event");
            match def.roles.iter().find(|r| r.name.eq_ignore_ascii_case(role)) {
                Some(r) if !text.is_empty() => event.args.push(Argument::new(r.name.clone(), text)),
                Some(_) => skip(line_no, "empty argument".into()),
                None => skip(
                    line_no,
                    format!("unknown role {role} for {}", event.event_type),
                ),
            }
            continue;
        }
        open_event = false;
        let Some((label, text)) = line.split_once(':') else {
            skip(line_no, "expected \"type: mention\"".into());
            continue;
        };
        let (label, text) = (label.trim(), text.trim());
        if text.is_empty() {
            skip(line_no, "empty mention".into());
            continue;
        }
        match (task, schema.resolve_alias(label)) {
            (TaskKind::Ner, Ok(TypeRef::Entity(e))) => {
                out.entities.push(EntityMention::new(e.name.clone(), text));
            }
            (TaskKind::Ed | TaskKind::Eae | TaskKind::Ee, Ok(TypeRef::Event(e))) => {
                if task == TaskKind::Eae
                    && given_event_type.is_some_and(|g| !g.eq_ignore_ascii_case(&e.name))
                {
                    skip(
                        line_no,
                        format!("event type {} differs from the given type", e.name),
                    );
                    continue;
                }
                out.events.push(EventMention::new(e.name.clone(), text));
                open_event = task != TaskKind::Ed;
            }
            (_, Ok(t)) => skip(
                line_no,
                format!(
                    "{} is not a {} type",
                    t.name(),
                    task.target_family().base_class()
                ),
            ),
            (_, Err(_)) => skip(line_no, format!("unknown type {label}")),
        }
    }
    (out, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::tests::toy;

    fn spec(task: TaskKind) -> PromptSpec {
        PromptSpec {
            task,
            mode: PromptMode::OneStage,
            k: 2,
            max_tokens: 4000,
            given_event_type: None,
        }
    }

    #[test]
    fn ner_prompt_and_answer_round_trip() {
        let schema = toy();
        let gold = ExtractionSet {
            entities: vec![
                EntityMention::new("Person", "John"),
                EntityMention::new("Organization", "Acme"),
            ],
            ..Default::default()
        };
        let ex = Example::new("a", "John works at Acme.", gold.clone());
        let p = render_text_prompt(&spec(TaskKind::Ner), &schema, &[&ex], "Mary left.").unwrap();
        assert!(p.text.contains("Option: Person, Organization"));
        assert!(p
            .text
            .contains("Text: John works at Acme.\nAnswer:\nPerson: John\nOrganization: Acme\n\n"));
        assert!(p.text.ends_with("Text: Mary left.\nAnswer:\n"));
        let (back, diag) = read_answer(
            &render_answer(&gold, TaskKind::Ner),
            &schema,
            TaskKind::Ner,
            None,
        );
        assert_eq!(back, gold);
        assert!(diag.is_empty());
    }

    #[test]
    fn event_lines_collect_arguments() {
        let schema = toy();
        let response = "Databreach: hacked\n- Purpose: money\n- victim: x\nPER: John";
        let (set, diag) = read_answer(response, &schema, TaskKind::Ee, None);
        assert_eq!(
            set.events,
            vec![EventMention::new("Databreach", "hacked").with_arg("purpose", "money")]
        );
        assert_eq!(diag.skipped_lines.len(), 2);
    }

    #[test]
    fn none_answer_is_empty() {
        let (set, diag) = read_answer("None", &toy(), TaskKind::Ner, None);
        assert!(set.is_empty() && diag.is_empty());
    }

    #[test]
    fn relation_task_is_rejected() {
        let err = render_text_prompt(&spec(TaskKind::Re), &toy(), &[], "x").unwrap_err();
        assert!(matches!(err, RenderError::InvalidSpec(_)));
    }
}
