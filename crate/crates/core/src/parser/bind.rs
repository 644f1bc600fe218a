//! Binding parsed instantiations to schema types.

use std::collections::HashMap;

use crate::extraction::{Argument, EntityMention, EventMention, ExtractionSet, RelationMention};
use crate::schema::{
    EntityTypeDef, EventTypeDef, Family, RelationTypeDef, Schema, TaskKind, TypeRef,
};

use super::{lexer, BindError, Call, DialectAst, ParseDiagnostics, Statement, Value};

#[derive(Debug, Clone)]
enum Bound {
    Entity(EntityMention),
    Relation,
    Event,
}

struct Binder<'a> {
    schema: &'a Schema,
    task: TaskKind,
    vars: HashMap<String, Bound>,
    out: ExtractionSet,
    errors: Vec<BindError>,
    index: usize,
}

/// Resolves every instantiation in `ast` against `schema`. Failures become
/// diagnostics; identical extractions are kept once.
pub fn bind(
    ast: &DialectAst,
    schema: &Schema,
    task: TaskKind,
) -> (ExtractionSet, ParseDiagnostics) {
    let mut b = Binder {
        schema,
        task,
        vars: HashMap::new(),
        out: ExtractionSet::default(),
        errors: Vec::new(),
        index: 0,
    };
    for (index, located) in ast.statements.iter().enumerate() {
        b.index = index;
        match &located.statement {
            Statement::Assign { target, call } => {
                if let Some(bound) = b.bind_top(call) {
                    b.vars.insert(target.clone(), bound);
                } else {
                    b.vars.remove(target);
                }
            }
            Statement::Call(call) => {
                b.bind_top(call);
            }
            Statement::Import { .. } => b.error("import statement is not an instantiation".into()),
            Statement::Class(c) => b.error(format!(
                "class definition {} is not an instantiation",
                c.name
            )),
            Statement::Annotation(_) => b.error("annotation is not an instantiation".into()),
        }
    }
    let diags = ParseDiagnostics {
        skipped_lines: Vec::new(),
        bind_errors: b.errors,
    };
    (b.out, diags)
}

impl<'a> Binder<'a> {
    fn error(&mut self, reason: String) {
        self.errors.push(BindError {
            statement: self.index,
            reason,
        });
    }

    fn bind_top(&mut self, call: &Call) -> Option<Bound> {
        let ty = match self.schema.resolve_alias(&call.class_name) {
            Ok(t) => t,
            Err(_) => {
                self.error(format!("unknown class {}", call.class_name));
                return None;
            }
        };
        match ty {
            TypeRef::Entity(def) => {
                let e = self.bind_entity(def, call)?;
                push_unique(&mut self.out.entities, e.clone());
                Some(Bound::Entity(e))
            }
            TypeRef::Relation(def) => {
                let r = self.bind_relation(def, call)?;
                self.emit_relation(r);
                Some(Bound::Relation)
            }
            TypeRef::Event(def) => {
                let e = self.bind_event(def, call)?;
                self.emit_event(e);
                Some(Bound::Event)
            }
        }
    }

    fn emit_relation(&mut self, r: RelationMention) {
        if !self.task.allows(Family::Relation) {
            self.error(format!(
                "relation {} is outside task {}",
                r.relation_type, self.task
            ));
            return;
        }
        if self.task == TaskKind::Re {
            push_unique(&mut self.out.entities, r.head.clone());
            push_unique(&mut self.out.entities, r.tail.clone());
        }
        push_unique(&mut self.out.relations, r);
    }

    fn emit_event(&mut self, e: EventMention) {
        if !self.task.allows(Family::Event) {
            self.error(format!(
                "event {} is outside task {}",
                e.event_type, self.task
            ));
            return;
        }
        push_unique(&mut self.out.events, e);
    }

    fn bind_entity(&mut self, def: &EntityTypeDef, call: &Call) -> Option<EntityMention> {
        let text = match call.keyword("name") {
            Some(Value::Str(s)) => Some(s.clone()),
            _ => call.args.iter().find_map(|a| match &a.value {
                Value::Str(s) => Some(s.clone()),
                _ => None,
            }),
        };
        match text {
            Some(text) => Some(EntityMention::new(def.name.clone(), text)),
            None => {
                self.error(format!("entity {} has no string argument", def.name));
                None
            }
        }
    }

    /// An entity-valued argument: a nested constructor or a variable bound
    /// to an entity.
    fn entity_arg(&mut self, value: &Value, slot: &str, owner: &str) -> Option<EntityMention> {
        match value {
            Value::Call(inner) => match self.schema.resolve_alias(&inner.class_name) {
                Ok(TypeRef::Entity(def)) => self.bind_entity(def, inner),
                Ok(other) => {
                    self.error(format!(
                        "{slot} of {owner} must be an entity, found {}",
                        other.name()
                    ));
                    None
                }
                Err(_) => {
                    self.error(format!("unknown class {}", inner.class_name));
                    None
                }
            },
            Value::Var(name) => match self.vars.get(name) {
                Some(Bound::Entity(e)) => Some(e.clone()),
                Some(_) => {
                    self.error(format!(
                        "{slot} of {owner} refers to non-entity variable {name}"
                    ));
                    None
                }
                None => {
                    self.error(format!(
                        "{slot} of {owner} refers to unbound variable {name}"
                    ));
                    None
                }
            },
            Value::Str(_) => {
                self.error(format!("{slot} of {owner} is an untyped string"));
                None
            }
            Value::List(_) => {
                self.error(format!("{slot} of {owner} is a list"));
                None
            }
        }
    }

    fn bind_relation(&mut self, def: &RelationTypeDef, call: &Call) -> Option<RelationMention> {
        let mut positional = call.positional();
        let head = call.keyword("head").or_else(|| positional.next());
        let tail = call.keyword("tail").or_else(|| positional.next());
        let (Some(head), Some(tail)) = (head, tail) else {
            self.error(format!("relation {} needs head and tail", def.name));
            return None;
        };
        let head = self.entity_arg(head, "head", &def.name);
        let tail = self.entity_arg(tail, "tail", &def.name);
        Some(RelationMention::new(def.name.clone(), head?, tail?))
    }

    fn bind_event(&mut self, def: &EventTypeDef, call: &Call) -> Option<EventMention> {
        let trigger = match call.keyword("trigger") {
            Some(Value::Str(s)) => s.clone(),
            _ => {
                self.error(format!("event {} has no string trigger", def.name));
                return None;
            }
        };
        let mut grouped: Vec<Vec<Argument>> = vec![Vec::new(); def.roles.len()];
        for arg in &call.args {
            let Some(keyword) = arg.keyword.as_deref() else {
                self.error(format!("positional argument of event {} ignored", def.name));
                continue;
            };
            if keyword.eq_ignore_ascii_case("trigger") {
                continue;
            }
            let Some(slot) = def
                .roles
                .iter()
                .position(|r| r.name.eq_ignore_ascii_case(keyword))
            else {
                self.error(format!("unknown role {keyword} for event {}", def.name));
                continue;
            };
            let role = &def.roles[slot].name;
            let items: Vec<&Value> = match &arg.value {
                Value::List(items) => items.iter().collect(),
                single => vec![single],
            };
            for item in items {
                let text = match item {
                    Value::Str(s) => Some(s.clone()),
                    other => self.entity_arg(other, role, &def.name).map(|e| e.text),
                };
                if let Some(text) = text {
                    grouped[slot].push(Argument::new(role.clone(), text));
                }
            }
        }
        let mut event = EventMention::new(def.name.clone(), trigger);
        event.args = grouped.into_iter().flatten().collect();
        Some(event)
    }
}

fn push_unique<T: PartialEq>(list: &mut Vec<T>, item: T) {
    if !list.contains(&item) {
        list.push(item);
    }
}

/// Result of reading a stage-one import completion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportCompletion {
    /// Resolved class names, deduplicated in order of appearance.
    pub types: Vec<String>,
    pub diagnostics: Vec<String>,
}

/// Reads the class names a model chose in a stage-one completion. Accepts a
/// full `from X import A, B` line or just the completed suffix `A, B`.
pub fn parse_import_completion(response: &str, schema: &Schema) -> ImportCompletion {
    let code = super::extract_code_region(response);
    let mut names: Option<Vec<String>> = None;
    let mut diagnostics = Vec::new();
    let first = code
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    if let Some(line) = first {
        names = import_names(line).or_else(|| suffix_names(line));
    }
    if names.is_none() {
        names = code.lines().map(str::trim).find_map(import_names);
    }
    let Some(names) = names else {
        diagnostics.push("no import completion found".to_string());
        return ImportCompletion {
            types: Vec::new(),
            diagnostics,
        };
    };
    let mut types: Vec<String> = Vec::new();
    for name in names {
        match schema.resolve_alias(&name) {
            Ok(t) => {
                let canonical = t.name().to_string();
                if !types.contains(&canonical) {
                    types.push(canonical);
                }
            }
            Err(_) => diagnostics.push(format!("unknown class {name}")),
        }
    }
    if types.is_empty() {
        diagnostics.push("no types identified".to_string());
    }
    ImportCompletion { types, diagnostics }
}

fn import_names(line: &str) -> Option<Vec<String>> {
    let toks = lexer::tokenize(line.split('#').next().unwrap_or("")).ok()?;
    match toks.as_slice() {
        [lexer::Tok::Ident(from), lexer::Tok::Ident(_), lexer::Tok::Ident(import), rest @ ..]
            if from == "from" && import == "import" =>
        {
            ident_list(rest)
        }
        _ => None,
    }
}

fn suffix_names(line: &str) -> Option<Vec<String>> {
    let toks = lexer::tokenize(line.split('#').next().unwrap_or("")).ok()?;
    ident_list(&toks)
}

fn ident_list(toks: &[lexer::Tok]) -> Option<Vec<String>> {
    let mut names = Vec::new();
    let mut expect_ident = true;
    for t in toks {
        match (t, expect_ident) {
            (lexer::Tok::Ident(n), true) => {
                names.push(n.clone());
                expect_ident = false;
            }
            (lexer::Tok::Comma, false) => expect_ident = true,
            _ => return None,
        }
    }
    (!names.is_empty()).then_some(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::schema::tests::toy;

    fn run(code: &str, task: TaskKind) -> (ExtractionSet, ParseDiagnostics) {
        let (ast, d) = parse_program(code);
        assert!(d.is_empty(), "{d:?}");
        bind(&ast, &toy(), task)
    }

    #[test]
    fn entity_binds() {
        let (set, d) = run("Person(name=\"John\")", TaskKind::Ner);
        assert!(d.is_empty());
        assert_eq!(set.entities, vec![EntityMention::new("Person", "John")]);
    }

    #[test]
    fn relation_through_variable_surfaces_entities() {
        let (set, d) = run(
            "e1 = Person(name=\"John\")\nr1 = Work_For(head=e1, tail=Organization(name=\"ACME\"))",
            TaskKind::Re,
        );
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(set.relations.len(), 1);
        assert_eq!(
            set.entities,
            vec![
                EntityMention::new("Person", "John"),
                EntityMention::new("Organization", "ACME")
            ]
        );
    }

    #[test]
    fn positional_relation_arguments() {
        let (set, d) = run("Work_For(Person(\"a\"), Organization(\"b\"))", TaskKind::Re);
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(set.relations[0].tail.text, "b");
    }

    #[test]
    fn unknown_class() {
        let (set, d) = run("Unicorn(name=\"x\")", TaskKind::Ner);
        assert!(set.is_empty());
        assert_eq!(d.bind_errors.len(), 1);
        assert_eq!(d.bind_errors[0].reason, "unknown class Unicorn");
    }

    #[test]
    fn alias_class_names_resolve() {
        let (set, _) = run("PER(name=\"x\")", TaskKind::Ner);
        assert_eq!(set.entities[0].entity_type, "Person");
    }

    #[test]
    fn unknown_role_is_dropped_but_event_kept() {
        let (set, d) = run(
            "Databreach(trigger=\"hacked\", purpose=[\"money\"], victim=[\"x\"])",
            TaskKind::Ee,
        );
        assert_eq!(
            set.events,
            vec![EventMention::new("Databreach", "hacked").with_arg("purpose", "money")]
        );
        assert_eq!(d.bind_errors.len(), 1);
    }

    #[test]
    fn duplicates_kept_once() {
        let (set, _) = run("Person(name=\"a\")\nv2 = Person(name=\"a\")", TaskKind::Ner);
        assert_eq!(set.entities.len(), 1);
    }

    #[test]
    fn task_filter_drops_other_families() {
        let (set, d) = run(
            "Person(name=\"a\")\nDatabreach(trigger=\"t\")",
            TaskKind::Ner,
        );
        assert_eq!(set.entities.len(), 1);
        assert!(set.events.is_empty());
        assert_eq!(d.bind_errors.len(), 1);
    }

    #[test]
    fn missing_trigger_and_bad_head() {
        let (set, d) = run(
            "Databreach(purpose=[\"x\"])\nWork_For(head=\"a\", tail=Organization(name=\"b\"))",
            TaskKind::Ee,
        );
        assert!(set.is_empty());
        assert_eq!(d.bind_errors.len(), 2);
    }

    #[test]
    fn import_suffix_only() {
        let r = parse_import_completion("Person, Organization", &toy());
        assert_eq!(r.types, ["Person", "Organization"]);
    }

    #[test]
    fn import_full_line() {
        let r = parse_import_completion("from Entity import Person", &toy());
        assert_eq!(r.types, ["Person"]);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn import_unknown_name() {
        let r = parse_import_completion("from Entity import Dragon", &toy());
        assert!(r.types.is_empty());
        assert!(r.diagnostics.iter().any(|d| d.contains("Dragon")));
    }

    #[test]
    fn import_dedup_and_alias() {
        let r = parse_import_completion(
            "PER, Person, ORG\n\"\"\"next\"\"\"\nfrom Entity import Databreach",
            &toy(),
        );
        assert_eq!(r.types, ["Person", "Organization"]);
    }
}
